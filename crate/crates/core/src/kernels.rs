//! Rational anti-causal kernels `K(iw) = d(iw) / prod_j (iw - a_j)` with poles `a_j > 0`.
//!
//! The time-domain kernel is `kappa(t) = -sum_j r_j e^{a_j t}` for `t <= 0` and zero for
//! `t > 0`, where `r_j` are the partial-fraction residues of `K`. The sign follows from
//! the `e^{-iwt}` forward transform.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::spectral::{
    analysis_spectrum, hermitian_symmetrize, inverse_transform, Complex64, FrequencyGrid,
    Spectrum, TimeSeries,
};

#[derive(Serialize, Deserialize)]
struct KernelSpec {
    poles: Vec<f64>,
    numerator: Vec<f64>,
}

impl TryFrom<KernelSpec> for AnticausalKernel {
    type Error = Error;

    fn try_from(spec: KernelSpec) -> Result<Self> {
        AnticausalKernel::new(spec.poles, spec.numerator)
    }
}

impl From<AnticausalKernel> for KernelSpec {
    fn from(k: AnticausalKernel) -> Self {
        KernelSpec {
            poles: k.poles,
            numerator: k.numerator,
        }
    }
}

/// Distinct positive poles plus a real numerator of degree below the pole count.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "KernelSpec", into = "KernelSpec")]
pub struct AnticausalKernel {
    poles: Vec<f64>,
    numerator: Vec<f64>,
}

impl AnticausalKernel {
    /// `numerator` holds the coefficients of `d` in ascending degree order.
    pub fn new(poles: Vec<f64>, numerator: Vec<f64>) -> Result<Self> {
        if poles.is_empty() {
            return Err(Error::InvalidKernel("at least one pole is required".into()));
        }
        if let Some(a) = poles.iter().find(|a| !(a.is_finite() && **a > 0.0)) {
            return Err(Error::InvalidKernel(format!(
                "poles must be finite and strictly positive, got {a}"
            )));
        }
        for (i, a) in poles.iter().enumerate() {
            if poles[..i].contains(a) {
                return Err(Error::InvalidKernel(format!(
                    "repeated pole {a}; poles must be pairwise distinct"
                )));
            }
        }
        if numerator.is_empty() {
            return Err(Error::InvalidKernel("numerator must have at least one coefficient".into()));
        }
        if numerator.len() > poles.len() {
            return Err(Error::InvalidKernel(format!(
                "numerator degree {} must be below the pole count {}",
                numerator.len() - 1,
                poles.len()
            )));
        }
        if numerator.iter().any(|c| !c.is_finite()) {
            return Err(Error::InvalidKernel("numerator coefficients must be finite".into()));
        }
        Ok(Self { poles, numerator })
    }

    /// `K(z) = 1 / (z - a)`.
    pub fn single_pole(a: f64) -> Result<Self> {
        Self::new(vec![a], vec![1.0])
    }

    pub fn poles(&self) -> &[f64] {
        &self.poles
    }

    pub fn numerator(&self) -> &[f64] {
        &self.numerator
    }

    /// Number of poles `m`.
    pub fn order(&self) -> usize {
        self.poles.len()
    }

    /// Largest pole, written `a-bar` in the threshold `Omega(gamma)`.
    pub fn max_pole(&self) -> f64 {
        self.poles.iter().copied().fold(f64::MIN, f64::max)
    }

    /// Leading coefficient of `d` after dropping trailing zeros, with its degree.
    pub fn leading_term(&self) -> (usize, f64) {
        self.numerator
            .iter()
            .enumerate()
            .rev()
            .find(|(_, c)| **c != 0.0)
            .map(|(i, c)| (i, *c))
            .unwrap_or((0, 0.0))
    }

    fn numerator_at(&self, z: Complex64) -> Complex64 {
        self.numerator
            .iter()
            .rev()
            .fold(Complex64::new(0.0, 0.0), |acc, &c| acc * z + c)
    }

    /// `K(z)` at an arbitrary complex point off the poles.
    pub fn eval(&self, z: Complex64) -> Complex64 {
        let denom = self
            .poles
            .iter()
            .fold(Complex64::new(1.0, 0.0), |acc, &a| acc * (z - a));
        self.numerator_at(z) / denom
    }

    /// `K(iw)`.
    pub fn transfer_at(&self, omega: f64) -> Complex64 {
        self.eval(Complex64::new(0.0, omega))
    }

    /// Partial-fraction residues `r_j = d(a_j) / prod_{k != j} (a_j - a_k)`.
    pub fn residues(&self) -> Vec<f64> {
        self.poles
            .iter()
            .enumerate()
            .map(|(j, &aj)| {
                let d = self.numerator.iter().rev().fold(0.0, |acc, &c| acc * aj + c);
                let prod: f64 = self
                    .poles
                    .iter()
                    .enumerate()
                    .filter(|(k, _)| *k != j)
                    .map(|(_, &ak)| aj - ak)
                    .product();
                d / prod
            })
            .collect()
    }

    /// `kappa(t)` for a single time.
    pub fn kernel_at(&self, t: f64) -> f64 {
        if t > 0.0 {
            return 0.0;
        }
        -self
            .poles
            .iter()
            .zip(self.residues())
            .map(|(&a, r)| r * (a * t).exp())
            .sum::<f64>()
    }
}

/// `K(iw_k)` at every node. The Nyquist node is its own mirror, so it keeps only the
/// real part of `K(-i w_max)`; this makes the sampled transfer exactly hermitian.
pub fn transfer(kernel: &AnticausalKernel, grid: &FrequencyGrid) -> Spectrum {
    hermitian_symmetrize(&Spectrum::from_fn(*grid, |w| kernel.transfer_at(w)))
}

/// Samples of `kappa(t_j)`, exactly zero for `t_j > 0`.
pub fn time_kernel(kernel: &AnticausalKernel, grid: &FrequencyGrid) -> TimeSeries {
    TimeSeries::from_fn(*grid, |t| kernel.kernel_at(t))
}

/// `y(t) = \int_t^\infty kappa(t - s) x(s) ds`, evaluated as a spectral product.
///
/// The product is a circular convolution; `x` should be negligible on the outer
/// quarters of the window so that the wrapped tails stay below the reporting precision.
pub fn apply_anticausal(kernel: &AnticausalKernel, x: &TimeSeries) -> TimeSeries {
    let k = transfer(kernel, x.grid());
    filter(&k, x)
}

/// Inverse transform of `transfer * analysis_spectrum(x)`, real when `x` is real.
pub(crate) fn filter(transfer: &Spectrum, x: &TimeSeries) -> TimeSeries {
    let spectrum = analysis_spectrum(x);
    let product: Vec<Complex64> = transfer
        .values()
        .iter()
        .zip(spectrum.values())
        .map(|(k, v)| if *v == Complex64::new(0.0, 0.0) { *v } else { k * v })
        .collect();
    let out = inverse_transform(&Spectrum::new(*x.grid(), product).expect("same grid length"));
    if x.is_real() {
        out.to_real()
    } else {
        out
    }
}
