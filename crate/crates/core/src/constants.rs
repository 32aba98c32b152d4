//! Calibration constants shared by the library, its tests and the acceptance suite.
//!
//! None of these are properties of the continuous-time theory; they are the
//! tolerances at which the discretized quantities are judged.

/// Relative L2 error allowed for `inverse_transform(forward_transform(x))`.
pub const ROUND_TRIP_REL_TOL: f64 = 1e-9;

/// Relative tolerance of the discrete Parseval identity.
pub const PARSEVAL_REL_TOL: f64 = 1e-8;

/// Imaginary residue (relative to the largest magnitude) below which a series counts as real.
pub const REAL_IMAG_TOL: f64 = 1e-12;

/// Relative tolerance of the hermitian-symmetry check on spectra.
pub const HERMITIAN_REL_TOL: f64 = 1e-12;

/// Largest real part admitted for the exponent of a V-factor before it is clamped.
///
/// exp(300) keeps |V|^2 * n * dw well inside the f64 range, so squared grid
/// norms of saturated transfers stay finite.
pub const LOG_MAGNITUDE_CLAMP: f64 = 300.0;

/// Slack on the |V| / h <= 1 bound of the low-band weight check.
pub const LEMMA_WEIGHT_TOL: f64 = 1e-9;

/// Number of log-spaced probe frequencies used inside the low band D(gamma).
pub const LOW_BAND_PROBES: usize = 4096;

/// Decades below the threshold Omega(gamma) covered by the low-band probes.
pub const LOW_BAND_PROBE_DECADES: f64 = 6.0;

/// Minimum ratio used when a relative error has a vanishing denominator.
pub const REL_DENOM_FLOOR: f64 = 1e-300;

/// Relative tolerance on the partition I1 + I2 = total spectral error.
pub const PARTITION_REL_TOL: f64 = 1e-9;

/// Relative tolerance of 2*pi*||y - yhat||^2 against the rho = 2 spectral error.
pub const PARSEVAL_BRIDGE_REL_TOL: f64 = 1e-6;

/// Agreement required between FFT convolution and the O(n^2) quadrature oracle.
pub const ORACLE_REL_TOL: f64 = 1e-6;

/// Upper bound on the causality defect of a predicting kernel.
pub const CAUSALITY_DEFECT_MAX: f64 = 1e-3;

/// Upper bound on the normalized inner product of K and K-hat.
pub const ORTHOGONALITY_MAX: f64 = 1e-2;

/// Relative tolerance on the counterexample energy identity.
pub const IDENTITY_REL_TOL: f64 = 0.05;

/// Discretization slack on the noise robustness bound.
pub const ROBUSTNESS_SLACK: f64 = 0.05;

/// Jitter tolerated by the "nonincreasing in gamma" diagnostic.
pub const MONOTONE_JITTER: f64 = 0.05;

/// Required shrink factor of the worst-case error across the default sweep.
pub const CONVERGENCE_FACTOR: f64 = 0.1;

/// Required error ratio between the slow-degeneracy and predictable ensembles.
pub const NEGATIVE_CONTRAST_FACTOR: f64 = 10.0;

/// Identifier of the pseudorandom generator, recorded in every report.
pub const RNG_ALGORITHM: &str = "ChaCha20Rng (rand_chacha 0.3, seed_from_u64)";
