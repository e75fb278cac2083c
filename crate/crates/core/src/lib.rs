//! Monte Carlo engine for quantifying the secret-key-rate degradation of
//! wireless-fading-generated keys under a colluding directional-antenna
//! eavesdropper.
//!
//! The pipeline: a multipath scattering environment is drawn per trial
//! ([`fading`]), Alice and Bob observe the same complex envelope through
//! independent receiver noise, Eve reconstructs the envelope by pointing one
//! circular aperture at each intercepted propagation path ([`adversary`]),
//! all three quantize their amplitude measurements ([`keygen`]), and the
//! secret-key-rate bound `min(I(X;Y), I(X;Y|Z))` is estimated from the
//! resulting symbol counts ([`infotheory`]). The [`experiment`] module drives
//! calibrated, deterministic, parallel sweeps over Eve's aperture diameter.

pub mod adversary;
pub mod config;
pub mod experiment;
pub mod fading;
pub mod infotheory;
pub mod keygen;
pub mod output;
pub mod special_math;
pub mod validate;

pub use experiment::{ExperimentConfig, SweepRow, TrialRecord};
pub use fading::{NoiseLevel, ScatteringModel};
pub use keygen::{Symbol, ThresholdScheme};
