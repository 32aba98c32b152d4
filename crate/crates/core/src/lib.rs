//! Causal predictors for anti-causal convolutions of signals whose spectrum degenerates
//! at a single point.
//!
//! A signal in the class `X(q, c)` has a Fourier transform bounded by `C exp(-c / |w|^q)`.
//! For such inputs the anti-causal output `y = kappa * x` of a rational kernel with
//! right-half-plane poles can be approximated, uniformly over the class ball, by the
//! causal output of `Khat = V K`. The crate samples these objects on a uniform grid and
//! provides the experiments that check convergence, causality, noise robustness and
//! the counterexample for signals without degeneracy.

pub mod cli;
pub mod constants;
pub mod error;
pub mod experiments;
pub mod kernels;
pub mod predictor;
pub mod report;
pub mod signal_gen;
pub mod spectral;

pub use error::{Error, Result};
