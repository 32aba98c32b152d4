//! Uniform-grid discretization of the continuous Fourier transform
//! `X(iw) = \int e^{-iwt} x(t) dt`.
//!
//! Time samples sit at `t_j = (j - n/2) * dt`, so the origin is in the middle of the
//! window and both past and future are on-grid. Frequency nodes are kept in the
//! natural FFT order (`0, dw, ..., -dw`); [`FrequencyGrid::to_centered`] and
//! [`FrequencyGrid::from_centered`] are the only place that reorders them.

use std::cell::RefCell;
use std::f64::consts::PI;

use rustfft::FftPlanner;
use serde::{Deserialize, Serialize};

use crate::constants::{HERMITIAN_REL_TOL, REAL_IMAG_TOL};
use crate::error::{Error, Result};

pub use rustfft::num_complex::Complex64;

thread_local! {
    static PLANNER: RefCell<FftPlanner<f64>> = RefCell::new(FftPlanner::new());
}

#[derive(Deserialize)]
struct GridSpec {
    n: usize,
    delta_t: f64,
}

impl TryFrom<GridSpec> for FrequencyGrid {
    type Error = Error;

    fn try_from(spec: GridSpec) -> Result<Self> {
        FrequencyGrid::new(spec.n, spec.delta_t)
    }
}

/// A uniform time grid paired with its uniform angular-frequency grid.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "GridSpec")]
pub struct FrequencyGrid {
    n: usize,
    delta_t: f64,
}

impl FrequencyGrid {
    pub fn new(n: usize, delta_t: f64) -> Result<Self> {
        if n < 8 || !n.is_power_of_two() {
            return Err(Error::InvalidGrid(format!(
                "sample count must be a power of two >= 8, got {n}"
            )));
        }
        if !(delta_t.is_finite() && delta_t > 0.0) {
            return Err(Error::InvalidGrid(format!(
                "time step must be positive and finite, got {delta_t}"
            )));
        }
        Ok(Self { n, delta_t })
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn delta_t(&self) -> f64 {
        self.delta_t
    }

    /// Window length `T = n * dt`.
    pub fn span(&self) -> f64 {
        self.n as f64 * self.delta_t
    }

    /// Frequency step `dw = 2 pi / T`.
    pub fn d_omega(&self) -> f64 {
        2.0 * PI / self.span()
    }

    /// Nyquist frequency `pi / dt`; the node `-omega_max` is on the grid, `+omega_max` is not.
    pub fn omega_max(&self) -> f64 {
        PI / self.delta_t
    }

    /// Angular frequency of natural-order node `k`.
    pub fn omega(&self, k: usize) -> f64 {
        let signed = if k < self.n / 2 {
            k as f64
        } else {
            k as f64 - self.n as f64
        };
        signed * self.d_omega()
    }

    /// Time of sample `j`.
    pub fn time(&self, j: usize) -> f64 {
        (j as f64 - (self.n / 2) as f64) * self.delta_t
    }

    pub fn omegas(&self) -> Vec<f64> {
        (0..self.n).map(|k| self.omega(k)).collect()
    }

    pub fn times(&self) -> Vec<f64> {
        (0..self.n).map(|j| self.time(j)).collect()
    }

    /// Natural index of the node at `-omega_k`. The Nyquist node is its own mirror.
    pub fn mirror(&self, k: usize) -> usize {
        (self.n - k) % self.n
    }

    /// Reorders natural-order node values to ascending frequency.
    pub fn to_centered<T: Clone>(&self, natural: &[T]) -> Vec<T> {
        let half = self.n / 2;
        natural[half..]
            .iter()
            .chain(natural[..half].iter())
            .cloned()
            .collect()
    }

    /// Inverse of [`Self::to_centered`].
    pub fn from_centered<T: Clone>(&self, centered: &[T]) -> Vec<T> {
        let half = self.n / 2;
        centered[half..]
            .iter()
            .chain(centered[..half].iter())
            .cloned()
            .collect()
    }
}

/// Constructs a grid; same as [`FrequencyGrid::new`].
pub fn make_grid(n: usize, delta_t: f64) -> Result<FrequencyGrid> {
    FrequencyGrid::new(n, delta_t)
}

/// Samples `x(t_j)` of a signal on a grid.
#[derive(Debug, Clone, PartialEq)]
pub struct TimeSeries {
    grid: FrequencyGrid,
    samples: Vec<Complex64>,
}

impl TimeSeries {
    pub fn new(grid: FrequencyGrid, samples: Vec<Complex64>) -> Result<Self> {
        if samples.len() != grid.n() {
            return Err(Error::LengthMismatch {
                expected: grid.n(),
                actual: samples.len(),
            });
        }
        Ok(Self { grid, samples })
    }

    pub fn zeros(grid: FrequencyGrid) -> Self {
        Self {
            grid,
            samples: vec![Complex64::new(0.0, 0.0); grid.n()],
        }
    }

    pub fn from_real(grid: FrequencyGrid, values: &[f64]) -> Result<Self> {
        Self::new(grid, values.iter().map(|&v| Complex64::new(v, 0.0)).collect())
    }

    /// Samples a real function of time on the grid.
    pub fn from_fn(grid: FrequencyGrid, f: impl Fn(f64) -> f64) -> Self {
        let samples = (0..grid.n())
            .map(|j| Complex64::new(f(grid.time(j)), 0.0))
            .collect();
        Self { grid, samples }
    }

    pub fn grid(&self) -> &FrequencyGrid {
        &self.grid
    }

    pub fn samples(&self) -> &[Complex64] {
        &self.samples
    }

    pub fn into_samples(self) -> Vec<Complex64> {
        self.samples
    }

    pub fn len(&self) -> usize {
        self.samples.len()
    }

    pub fn is_empty(&self) -> bool {
        self.samples.is_empty()
    }

    pub fn is_real(&self) -> bool {
        let max_abs = self.samples.iter().map(|z| z.norm()).fold(0.0, f64::max);
        let max_imag = self.samples.iter().map(|z| z.im.abs()).fold(0.0, f64::max);
        max_imag <= REAL_IMAG_TOL * max_abs
    }

    pub fn real_parts(&self) -> Vec<f64> {
        self.samples.iter().map(|z| z.re).collect()
    }

    /// Drops the imaginary parts.
    pub fn to_real(&self) -> Self {
        Self {
            grid: self.grid,
            samples: self.samples.iter().map(|z| Complex64::new(z.re, 0.0)).collect(),
        }
    }

    pub fn scaled(&self, factor: f64) -> Self {
        Self {
            grid: self.grid,
            samples: self.samples.iter().map(|z| z * factor).collect(),
        }
    }

    pub fn checked_add(&self, other: &TimeSeries) -> Result<Self> {
        self.zip_with(other, |a, b| a + b)
    }

    pub fn checked_sub(&self, other: &TimeSeries) -> Result<Self> {
        self.zip_with(other, |a, b| a - b)
    }

    fn zip_with(
        &self,
        other: &TimeSeries,
        op: impl Fn(Complex64, Complex64) -> Complex64,
    ) -> Result<Self> {
        if self.grid != other.grid {
            return Err(Error::GridMismatch);
        }
        let samples = self
            .samples
            .iter()
            .zip(&other.samples)
            .map(|(&a, &b)| op(a, b))
            .collect();
        Ok(Self {
            grid: self.grid,
            samples,
        })
    }
}

/// Values `X(i w_k)` at the natural-order frequency nodes of a grid.
#[derive(Debug, Clone, PartialEq)]
pub struct Spectrum {
    grid: FrequencyGrid,
    values: Vec<Complex64>,
}

impl Spectrum {
    pub fn new(grid: FrequencyGrid, values: Vec<Complex64>) -> Result<Self> {
        if values.len() != grid.n() {
            return Err(Error::LengthMismatch {
                expected: grid.n(),
                actual: values.len(),
            });
        }
        Ok(Self { grid, values })
    }

    pub fn zeros(grid: FrequencyGrid) -> Self {
        Self {
            grid,
            values: vec![Complex64::new(0.0, 0.0); grid.n()],
        }
    }

    /// Evaluates a transfer function at every node `w_k`.
    pub fn from_fn(grid: FrequencyGrid, mut f: impl FnMut(f64) -> Complex64) -> Self {
        let values = (0..grid.n()).map(|k| f(grid.omega(k))).collect();
        Self { grid, values }
    }

    pub fn grid(&self) -> &FrequencyGrid {
        &self.grid
    }

    pub fn values(&self) -> &[Complex64] {
        &self.values
    }

    pub fn values_mut(&mut self) -> &mut [Complex64] {
        &mut self.values
    }

    pub fn into_values(self) -> Vec<Complex64> {
        self.values
    }

    pub fn is_hermitian(&self) -> bool {
        let scale = self.values.iter().map(|z| z.norm()).fold(0.0, f64::max);
        let worst = (0..self.grid.n())
            .map(|k| (self.values[k] - self.values[self.grid.mirror(k)].conj()).norm())
            .fold(0.0, f64::max);
        worst <= HERMITIAN_REL_TOL * scale
    }

    /// Nodewise product; both spectra must share a grid.
    pub fn checked_mul(&self, other: &Spectrum) -> Result<Self> {
        if self.grid != other.grid {
            return Err(Error::GridMismatch);
        }
        let values = self
            .values
            .iter()
            .zip(&other.values)
            .map(|(a, b)| a * b)
            .collect();
        Ok(Self {
            grid: self.grid,
            values,
        })
    }

    pub fn checked_sub(&self, other: &Spectrum) -> Result<Self> {
        if self.grid != other.grid {
            return Err(Error::GridMismatch);
        }
        let values = self
            .values
            .iter()
            .zip(&other.values)
            .map(|(a, b)| a - b)
            .collect();
        Ok(Self {
            grid: self.grid,
            values,
        })
    }

    pub fn scaled(&self, factor: f64) -> Self {
        Self {
            grid: self.grid,
            values: self.values.iter().map(|z| z * factor).collect(),
        }
    }
}

fn fft_in_place(buffer: &mut [Complex64], inverse: bool) {
    let plan = PLANNER.with(|planner| {
        let mut planner = planner.borrow_mut();
        if inverse {
            planner.plan_fft_inverse(buffer.len())
        } else {
            planner.plan_fft_forward(buffer.len())
        }
    });
    plan.process(buffer);
}

/// `X(i w_k) = dt * sum_j e^{-i w_k t_j} x(t_j)`.
///
/// With `t_j = (j - n/2) dt` the centering phase `e^{i w_k n dt / 2}` is `(-1)^k`.
pub fn forward_transform(x: &TimeSeries) -> Spectrum {
    let grid = *x.grid();
    let dt = grid.delta_t();
    let mut buffer = x.samples().to_vec();
    fft_in_place(&mut buffer, false);
    for (k, v) in buffer.iter_mut().enumerate() {
        let sign = if k % 2 == 0 { dt } else { -dt };
        *v *= sign;
    }
    Spectrum {
        grid,
        values: buffer,
    }
}

/// `x(t_j) = (dw / 2 pi) * sum_k e^{i w_k t_j} X(i w_k)`.
pub fn inverse_transform(spectrum: &Spectrum) -> TimeSeries {
    let grid = *spectrum.grid();
    let scale = 1.0 / grid.span();
    let mut buffer: Vec<Complex64> = spectrum
        .values()
        .iter()
        .enumerate()
        .map(|(k, &v)| if k % 2 == 0 { v * scale } else { -v * scale })
        .collect();
    fft_in_place(&mut buffer, true);
    TimeSeries {
        grid,
        samples: buffer,
    }
}

/// Norms of the spaces the prediction error is measured in.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum Norm {
    /// `sqrt(dt * sum |x|^2)`, approximating the L2(R) norm.
    L2,
    /// Grid maximum, approximating the C(R) norm.
    Sup,
}

impl Norm {
    /// Exponent of the spectral error measure that controls this norm
    /// (2 for L2, 1 for the sup norm).
    pub fn spectral_exponent(self) -> u32 {
        match self {
            Norm::L2 => 2,
            Norm::Sup => 1,
        }
    }
}

/// `sqrt(sum v^2)` without intermediate overflow.
pub(crate) fn root_sum_squares(values: impl Iterator<Item = f64> + Clone) -> f64 {
    let scale = values.clone().map(f64::abs).fold(0.0, f64::max);
    if scale == 0.0 || !scale.is_finite() {
        return scale;
    }
    let sum: f64 = values.map(|v| (v / scale).powi(2)).sum();
    scale * sum.sqrt()
}

pub fn norm(x: &TimeSeries, p: Norm) -> f64 {
    match p {
        Norm::L2 => {
            root_sum_squares(x.samples().iter().map(|z| z.norm())) * x.grid().delta_t().sqrt()
        }
        Norm::Sup => x.samples().iter().map(|z| z.norm()).fold(0.0, f64::max),
    }
}

/// `dw * sum |X(i w_k)|`, approximating the L1(R) norm of a spectrum.
pub fn spectrum_l1(spectrum: &Spectrum) -> f64 {
    spectrum.grid().d_omega() * spectrum.values().iter().map(|z| z.norm()).sum::<f64>()
}

/// `sqrt(dw * sum |X(i w_k)|^2)`, the grid L2 norm of a spectrum (no 1/2pi factor).
pub fn spectrum_l2(spectrum: &Spectrum) -> f64 {
    root_sum_squares(spectrum.values().iter().map(|z| z.norm())) * spectrum.grid().d_omega().sqrt()
}

/// `(X(iw) + conj(X(-iw))) / 2` at every node.
pub fn hermitian_symmetrize(spectrum: &Spectrum) -> Spectrum {
    let grid = *spectrum.grid();
    let values = (0..grid.n())
        .map(|k| (spectrum.values[k] + spectrum.values[grid.mirror(k)].conj()) * 0.5)
        .collect();
    Spectrum { grid, values }
}

/// Worst-case rounding error of a transform coefficient of `x`: `n * eps * dt * sum |x_j|`.
///
/// Spectral values below this floor cannot be told apart from zero.
pub fn rounding_floor(x: &TimeSeries) -> f64 {
    let grid = x.grid();
    let l1: f64 = x.samples().iter().map(|z| z.norm()).sum();
    grid.n() as f64 * f64::EPSILON * grid.delta_t() * l1
}

/// Forward transform with every coefficient at or below [`rounding_floor`] flushed to zero.
///
/// Such coefficients are indistinguishable from rounding residue. Flushing them keeps
/// degenerate spectra (every member of a degeneracy class) exactly zero near `w = 0`,
/// where transfer functions may be enormous. Spectra of real series are also made exactly
/// hermitian, so filtered outputs stay real.
pub fn analysis_spectrum(x: &TimeSeries) -> Spectrum {
    let floor = rounding_floor(x);
    let mut spectrum = forward_transform(x);
    if x.is_real() {
        spectrum = hermitian_symmetrize(&spectrum);
    }
    for v in spectrum.values.iter_mut() {
        if v.norm() <= floor {
            *v = Complex64::new(0.0, 0.0);
        }
    }
    spectrum
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha20Rng;

    fn random_series(grid: FrequencyGrid, seed: u64) -> TimeSeries {
        let mut rng = ChaCha20Rng::seed_from_u64(seed);
        let samples = (0..grid.n())
            .map(|_| Complex64::new(rng.gen_range(-1.0..1.0), rng.gen_range(-1.0..1.0)))
            .collect();
        TimeSeries::new(grid, samples).unwrap()
    }

    /// Direct O(n^2) evaluation of the discretized transform.
    fn direct_forward(x: &TimeSeries) -> Vec<Complex64> {
        let g = x.grid();
        (0..g.n())
            .map(|k| {
                let w = g.omega(k);
                (0..g.n())
                    .map(|j| Complex64::from_polar(1.0, -w * g.time(j)) * x.samples()[j])
                    .sum::<Complex64>()
                    * g.delta_t()
            })
            .collect()
    }

    #[test]
    fn grid_arithmetic() {
        let g = make_grid(8, 1.0).unwrap();
        assert!((g.d_omega() - 2.0 * PI / 8.0).abs() < 1e-15);
        assert!((g.omega_max() - PI).abs() < 1e-15);
        let g = make_grid(1024, 0.01).unwrap();
        assert!((g.span() - 10.24).abs() < 1e-12);
        assert!((g.omega_max() - 100.0 * PI).abs() < 1e-9);
        assert!((g.d_omega() * g.n() as f64 * g.delta_t() - 2.0 * PI).abs() < 1e-12);
    }

    #[test]
    fn grid_rejects_bad_input() {
        assert!(make_grid(7, 1.0).is_err());
        assert!(make_grid(4, 1.0).is_err());
        assert!(make_grid(12, 1.0).is_err());
        assert!(make_grid(16, 0.0).is_err());
        assert!(make_grid(16, -1.0).is_err());
        assert!(make_grid(16, f64::NAN).is_err());
    }

    #[test]
    fn grid_nodes_and_ordering() {
        let g = make_grid(8, 1.0).unwrap();
        let omegas = g.omegas();
        assert_eq!(omegas.iter().filter(|&&w| w == 0.0).count(), 1);
        let centered = g.to_centered(&omegas);
        assert!((centered[0] + g.omega_max()).abs() < 1e-12);
        assert!(centered.windows(2).all(|w| w[1] > w[0]));
        assert_eq!(g.from_centered(&centered), omegas);
        assert_eq!(g.mirror(0), 0);
        assert_eq!(g.mirror(4), 4);
        assert_eq!(g.mirror(1), 7);
        assert_eq!(g.time(4), 0.0);
    }

    #[test]
    fn serde_validates_grid() {
        let ok: FrequencyGrid = serde_json::from_str(r#"{"n": 16, "delta_t": 0.5}"#).unwrap();
        assert_eq!(ok.n(), 16);
        assert!(serde_json::from_str::<FrequencyGrid>(r#"{"n": 15, "delta_t": 0.5}"#).is_err());
    }

    #[test]
    fn fft_matches_direct_sum() {
        let g = make_grid(64, 0.3).unwrap();
        let x = random_series(g, 3);
        let fast = forward_transform(&x);
        let direct = direct_forward(&x);
        for (a, b) in fast.values().iter().zip(&direct) {
            assert!((a - b).norm() < 1e-12);
        }
    }

    #[test]
    fn zero_signal_has_zero_spectrum() {
        let g = make_grid(32, 0.1).unwrap();
        let s = forward_transform(&TimeSeries::zeros(g));
        assert!(s.values().iter().all(|z| z.norm() == 0.0));
    }

    #[test]
    fn gaussian_pair() {
        let g = make_grid(4096, 0.01).unwrap();
        let x = TimeSeries::from_fn(g, |t| (-t * t / 2.0).exp());
        let s = forward_transform(&x);
        for k in 0..g.n() {
            let w = g.omega(k);
            if w.abs() <= 3.0 {
                let exact = (2.0 * PI).sqrt() * (-w * w / 2.0).exp();
                assert!((s.values()[k] - exact).norm() <= 1e-6 * exact);
            }
        }
        assert!(s.is_hermitian());
    }

    #[test]
    fn unit_spectrum_is_scaled_delta() {
        let g = make_grid(16, 0.25).unwrap();
        let ones = Spectrum::from_fn(g, |_| Complex64::new(1.0, 0.0));
        let x = inverse_transform(&ones);
        // direct summation: (dw / 2pi) * sum_k e^{i w_k t_j}
        for j in 0..g.n() {
            let direct: Complex64 = (0..g.n())
                .map(|k| Complex64::from_polar(1.0, g.omega(k) * g.time(j)))
                .sum::<Complex64>()
                * (g.d_omega() / (2.0 * PI));
            assert!((x.samples()[j] - direct).norm() < 1e-12);
        }
        assert!((x.samples()[g.n() / 2].re - 1.0 / g.delta_t()).abs() < 1e-12);
        for j in 0..g.n() {
            if j != g.n() / 2 {
                assert!(x.samples()[j].norm() < 1e-12);
            }
        }
    }

    #[test]
    fn round_trip_and_hermitian_output() {
        let g = make_grid(256, 0.05).unwrap();
        let x = random_series(g, 11);
        let back = inverse_transform(&forward_transform(&x));
        let err = norm(&back.checked_sub(&x).unwrap(), Norm::L2);
        assert!(err <= 1e-9 * norm(&x, Norm::L2));

        let real = x.to_real();
        let s = forward_transform(&real);
        assert!(s.is_hermitian());
        assert!(inverse_transform(&s).is_real());
    }

    #[test]
    fn norm_basics() {
        let g = make_grid(16, 0.25).unwrap();
        let z = TimeSeries::zeros(g);
        assert_eq!(norm(&z, Norm::L2), 0.0);
        assert_eq!(norm(&z, Norm::Sup), 0.0);
        let mut v = vec![0.0; 16];
        v[5] = 1.0;
        let x = TimeSeries::from_real(g, &v).unwrap();
        assert_eq!(norm(&x, Norm::Sup), 1.0);
        assert!((norm(&x, Norm::L2) - 0.25f64.sqrt()).abs() < 1e-15);
    }

    #[test]
    fn gaussian_norm_matches_quadrature() {
        // \int e^{-t^2} dt = sqrt(pi), evaluated by adaptive Simpson
        fn simpson(f: &dyn Fn(f64) -> f64, a: f64, b: f64, tol: f64, depth: u32) -> f64 {
            let c = 0.5 * (a + b);
            let whole = (b - a) / 6.0 * (f(a) + 4.0 * f(c) + f(b));
            let left = (c - a) / 6.0 * (f(a) + 4.0 * f(0.5 * (a + c)) + f(c));
            let right = (b - c) / 6.0 * (f(c) + 4.0 * f(0.5 * (c + b)) + f(b));
            if depth == 0 || (left + right - whole).abs() < 15.0 * tol {
                left + right + (left + right - whole) / 15.0
            } else {
                simpson(f, a, c, tol / 2.0, depth - 1) + simpson(f, c, b, tol / 2.0, depth - 1)
            }
        }
        let oracle = simpson(&|t: f64| (-t * t).exp(), -20.0, 20.0, 1e-14, 40).sqrt();
        let g = make_grid(4096, 0.01).unwrap();
        let x = TimeSeries::from_fn(g, |t| (-t * t / 2.0).exp());
        assert!((norm(&x, Norm::L2) - oracle).abs() < 1e-6 * oracle);

        let spec_oracle = simpson(
            &|w: f64| (2.0 * PI).sqrt() * (-w * w / 2.0).exp(),
            -40.0,
            40.0,
            1e-14,
            40,
        );
        let s = forward_transform(&TimeSeries::from_fn(g, |t| (-t * t / 2.0).exp()));
        assert!((spectrum_l1(&s) - spec_oracle).abs() < 1e-6 * spec_oracle);
    }

    #[test]
    fn spectrum_l1_counts_nodes() {
        let g = make_grid(32, 0.1).unwrap();
        assert_eq!(spectrum_l1(&Spectrum::zeros(g)), 0.0);
        let mut s = Spectrum::zeros(g);
        for k in [1, 2, 5] {
            s.values_mut()[k] = Complex64::new(1.0, 0.0);
        }
        assert!((spectrum_l1(&s) - 3.0 * g.d_omega()).abs() < 1e-14);
    }

    #[test]
    fn symmetrize_single_positive_frequency() {
        let g = make_grid(16, 1.0).unwrap();
        let mut s = Spectrum::zeros(g);
        let v = Complex64::new(2.0, -4.0);
        s.values_mut()[3] = v;
        let h = hermitian_symmetrize(&s);
        assert_eq!(h.values()[3], v * 0.5);
        assert_eq!(h.values()[g.mirror(3)], v.conj() * 0.5);
        assert!(h.is_hermitian());
        assert_eq!(hermitian_symmetrize(&h), h);
    }

    #[test]
    fn symmetrized_random_spectrum_inverts_to_real() {
        let g = make_grid(128, 0.1).unwrap();
        let mut rng = ChaCha20Rng::seed_from_u64(5);
        let s = Spectrum::from_fn(g, |_| {
            Complex64::new(rng.gen_range(-1.0..1.0), rng.gen_range(-1.0..1.0))
        });
        let h = hermitian_symmetrize(&s);
        assert!(inverse_transform(&h).is_real());
    }

    #[test]
    fn rejects_wrong_length() {
        let g = make_grid(8, 1.0).unwrap();
        assert!(TimeSeries::new(g, vec![Complex64::new(0.0, 0.0); 7]).is_err());
        assert!(Spectrum::new(g, vec![Complex64::new(0.0, 0.0); 9]).is_err());
        let other = make_grid(16, 1.0).unwrap();
        assert_eq!(
            TimeSeries::zeros(g).checked_sub(&TimeSeries::zeros(other)),
            Err(Error::GridMismatch)
        );
    }

    #[test]
    fn analysis_spectrum_flushes_rounding_residue() {
        let g = make_grid(1024, 0.01).unwrap();
        let x = TimeSeries::from_fn(g, |t| (3.0 * t).sin() * (-t * t).exp());
        assert_eq!(analysis_spectrum(&x).values()[0], Complex64::new(0.0, 0.0));
        let bump = TimeSeries::from_fn(g, |t| (-t * t).exp());
        let s = analysis_spectrum(&bump);
        assert!(s.values()[0].norm() > 1.0);
        assert!(s.is_hermitian());
        assert_eq!(s.values()[g.n() / 2], Complex64::new(0.0, 0.0));
    }
}
