//! Causal predicting transfer `Khat = V K` with
//! `V(z) = prod_j (1 - exp(-gamma (z - a_j) / (z + gamma^{-r})))`.
//!
//! Each factor vanishes at its pole `a_j`, so `Khat` is analytic in the right half-plane
//! and its kernel `kappa_hat` is supported on `t >= 0`. Near `w = 0` the exponent has a
//! huge positive real part (`a_j gamma^{r+1}` at the origin), so magnitudes are carried
//! as logarithms and the sampled transfer is clamped at `exp(LOG_MAGNITUDE_CLAMP)`.

use std::f64::consts::PI;

use serde::{Deserialize, Serialize};

use crate::constants::{LEMMA_WEIGHT_TOL, LOG_MAGNITUDE_CLAMP, LOW_BAND_PROBES, LOW_BAND_PROBE_DECADES};
use crate::error::{Error, Result};
use crate::kernels::{filter, transfer, AnticausalKernel};
use crate::spectral::{
    hermitian_symmetrize, inverse_transform, root_sum_squares, Complex64, FrequencyGrid,
    Spectrum, TimeSeries,
};

#[derive(Deserialize)]
struct ClassSpec {
    q: f64,
    c: f64,
}

impl TryFrom<ClassSpec> for DegeneracyClass {
    type Error = Error;

    fn try_from(spec: ClassSpec) -> Result<Self> {
        DegeneracyClass::new(spec.q, spec.c)
    }
}

/// The class `X(q, c)` of signals with `sup |X(iw)| exp(c / |w|^q) < inf`, restricted to
/// the predictable regime `q > 1`, `c > 0`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "ClassSpec")]
pub struct DegeneracyClass {
    q: f64,
    c: f64,
}

impl DegeneracyClass {
    pub fn new(q: f64, c: f64) -> Result<Self> {
        if !(q.is_finite() && q > 1.0) {
            return Err(Error::InvalidParameter(format!(
                "class exponent q must satisfy q > 1 (q = 1 is not covered), got {q}"
            )));
        }
        if !(c.is_finite() && c > 0.0) {
            return Err(Error::InvalidParameter(format!(
                "class constant c must be positive, got {c}"
            )));
        }
        Ok(Self { q, c })
    }

    pub fn q(&self) -> f64 {
        self.q
    }

    pub fn c(&self) -> f64 {
        self.c
    }

    /// `ln h(w) = c / |w|^q`; `+inf` at `w = 0`.
    pub fn log_weight(&self, omega: f64) -> f64 {
        if omega == 0.0 {
            f64::INFINITY
        } else {
            self.c / omega.abs().powf(self.q)
        }
    }

    /// Smallest admissible predictor exponent: `r` must exceed `2 / (q - 1)`.
    pub fn min_exponent(&self) -> f64 {
        2.0 / (self.q - 1.0)
    }
}

/// `-gamma (z - a) / (z + gamma^{-r})`.
pub fn v_factor_exponent(z: Complex64, a: f64, gamma: f64, r: f64) -> Complex64 {
    let eps = gamma.powf(-r);
    -((z - a) / (z + eps)) * gamma
}

/// `V_j(z) = 1 - exp(-gamma (z - a) / (z + gamma^{-r}))`, unclamped.
pub fn eval_v_factor(z: Complex64, a: f64, gamma: f64, r: f64) -> Complex64 {
    1.0 - v_factor_exponent(z, a, gamma, r).exp()
}

/// `Omega(gamma) = sqrt(a_max gamma^{-r})`.
pub fn omega_threshold(kernel: &AnticausalKernel, gamma: f64, r: f64) -> f64 {
    (kernel.max_pole() * gamma.powf(-r)).sqrt()
}

/// `(ln |1 - e^E|, arg(1 - e^E))` without forming `e^E` when it would overflow.
fn log_polar_factor(e: Complex64) -> (f64, f64) {
    if e.re > 0.0 {
        // 1 - e^E = -e^E (1 - e^{-E})
        let tail = 1.0 - (-e).exp();
        (e.re + tail.norm().ln(), e.im + PI + tail.arg())
    } else {
        let v = 1.0 - e.exp();
        (v.norm().ln(), v.arg())
    }
}

/// `ln |V(iw)|`, exact (no clamp).
pub fn log_abs_v(kernel: &AnticausalKernel, gamma: f64, r: f64, omega: f64) -> f64 {
    let z = Complex64::new(0.0, omega);
    kernel
        .poles()
        .iter()
        .map(|&a| log_polar_factor(v_factor_exponent(z, a, gamma, r)).0)
        .sum()
}

/// `V(iw) - 1` without cancellation, via `D_k = D_{k-1} (1 - w_k) - w_k`, `w_k = e^{E_k}`.
pub fn v_minus_one(kernel: &AnticausalKernel, gamma: f64, r: f64, omega: f64) -> Complex64 {
    let z = Complex64::new(0.0, omega);
    kernel.poles().iter().fold(Complex64::new(0.0, 0.0), |d, &a| {
        let w = v_factor_exponent(z, a, gamma, r).exp();
        d * (1.0 - w) - w
    })
}

/// `V(iw)` sampled with its log-magnitude clamped; the flag reports whether the clamp bit.
fn v_sample(kernel: &AnticausalKernel, gamma: f64, r: f64, omega: f64) -> (Complex64, f64, bool) {
    let z = Complex64::new(0.0, omega);
    let exponents: Vec<Complex64> = kernel
        .poles()
        .iter()
        .map(|&a| v_factor_exponent(z, a, gamma, r))
        .collect();
    let (log_mag, arg) = exponents
        .iter()
        .map(|&e| log_polar_factor(e))
        .fold((0.0, 0.0), |(l, t), (dl, dt)| (l + dl, t + dt));
    if log_mag > LOG_MAGNITUDE_CLAMP {
        return (Complex64::from_polar(LOG_MAGNITUDE_CLAMP.exp(), arg), log_mag, true);
    }
    if exponents.iter().all(|e| e.re < LOG_MAGNITUDE_CLAMP) {
        let v = exponents
            .iter()
            .fold(Complex64::new(1.0, 0.0), |acc, &e| acc * (1.0 - e.exp()));
        (v, log_mag, false)
    } else {
        (Complex64::from_polar(log_mag.exp(), arg), log_mag, false)
    }
}

#[derive(Serialize)]
struct PredictorSpec<'a> {
    kernel: &'a AnticausalKernel,
    gamma: f64,
    r: f64,
    grid: FrequencyGrid,
}

/// `Khat = V K` sampled on a grid, with its causal kernel and gain diagnostics.
#[derive(Debug, Clone)]
pub struct PredictorTransfer {
    kernel: AnticausalKernel,
    gamma: f64,
    r: f64,
    grid: FrequencyGrid,
    k_values: Spectrum,
    v_values: Spectrum,
    khat_values: Spectrum,
    khat_time: TimeSeries,
    kappa_sup: f64,
    kappa_sup_off_dc: f64,
    log_kappa_dc: f64,
    saturated: bool,
    omega_threshold: f64,
}

impl PredictorTransfer {
    /// Assembles a predictor from arbitrary samples of `V`; `build_predictor` is the
    /// construction that actually predicts.
    pub fn from_v_values(
        kernel: &AnticausalKernel,
        gamma: f64,
        r: f64,
        v_values: Spectrum,
    ) -> Result<Self> {
        let grid = *v_values.grid();
        let n = grid.n();
        let log_dc = v_values.values()[0].norm().ln();
        Self::assemble(kernel, gamma, r, v_values, vec![false; n], log_dc)
    }

    fn assemble(
        kernel: &AnticausalKernel,
        gamma: f64,
        r: f64,
        v_values: Spectrum,
        saturated: Vec<bool>,
        log_v_dc: f64,
    ) -> Result<Self> {
        let grid = *v_values.grid();
        let k_values = transfer(kernel, &grid);
        let v_values = hermitian_symmetrize(&v_values);
        let khat_values = v_values.checked_mul(&k_values)?;
        let khat_time = inverse_transform(&khat_values).to_real();
        let kappa_sup = khat_values.values().iter().map(|z| z.norm()).fold(0.0, f64::max);
        let kappa_sup_off_dc = khat_values.values()[1..]
            .iter()
            .map(|z| z.norm())
            .fold(0.0, f64::max);
        Ok(Self {
            kernel: kernel.clone(),
            gamma,
            r,
            grid,
            log_kappa_dc: log_v_dc + k_values.values()[0].norm().ln(),
            k_values,
            v_values,
            khat_values,
            khat_time,
            kappa_sup,
            kappa_sup_off_dc,
            saturated: saturated.into_iter().any(|s| s),
            omega_threshold: omega_threshold(kernel, gamma, r),
        })
    }

    pub fn kernel(&self) -> &AnticausalKernel {
        &self.kernel
    }

    pub fn gamma(&self) -> f64 {
        self.gamma
    }

    pub fn r(&self) -> f64 {
        self.r
    }

    pub fn grid(&self) -> &FrequencyGrid {
        &self.grid
    }

    /// `K(iw_k)`.
    pub fn k_values(&self) -> &Spectrum {
        &self.k_values
    }

    pub fn v_values(&self) -> &Spectrum {
        &self.v_values
    }

    pub fn khat_values(&self) -> &Spectrum {
        &self.khat_values
    }

    pub fn khat_time(&self) -> &TimeSeries {
        &self.khat_time
    }

    /// Grid maximum of `|Khat|`, the gain in the noise bound (clamped when saturated).
    pub fn kappa_sup(&self) -> f64 {
        self.kappa_sup
    }

    /// Grid maximum of `|Khat|` over the nonzero nodes.
    pub fn kappa_sup_off_dc(&self) -> f64 {
        self.kappa_sup_off_dc
    }

    /// `ln |Khat(0)|` without the clamp.
    pub fn log_kappa_dc(&self) -> f64 {
        self.log_kappa_dc
    }

    /// Whether any node of `V` hit the log-magnitude clamp.
    pub fn saturated(&self) -> bool {
        self.saturated
    }

    pub fn omega_threshold(&self) -> f64 {
        self.omega_threshold
    }

    /// `{"kernel", "gamma", "r", "grid"}` as a JSON value.
    pub fn descriptor(&self) -> serde_json::Value {
        serde_json::to_value(PredictorSpec {
            kernel: &self.kernel,
            gamma: self.gamma,
            r: self.r,
            grid: self.grid,
        })
        .expect("predictor descriptor serializes")
    }
}

/// Samples `Khat = V K` on the grid and inverts it to `kappa_hat`.
pub fn build_predictor(
    kernel: &AnticausalKernel,
    gamma: f64,
    r: f64,
    grid: &FrequencyGrid,
) -> Result<PredictorTransfer> {
    if !(gamma.is_finite() && gamma > 0.0) {
        return Err(Error::InvalidParameter(format!("gamma must be positive, got {gamma}")));
    }
    if !(r.is_finite() && r > 0.0) {
        return Err(Error::InvalidParameter(format!("r must be positive, got {r}")));
    }
    let n = grid.n();
    let mut values = Vec::with_capacity(n);
    let mut saturated = Vec::with_capacity(n);
    let mut log_dc = 0.0;
    for k in 0..n {
        let (v, log_mag, sat) = v_sample(kernel, gamma, r, grid.omega(k));
        if k == 0 {
            log_dc = log_mag;
        }
        values.push(v);
        saturated.push(sat);
    }
    let v_values = Spectrum::new(*grid, values)?;
    PredictorTransfer::assemble(kernel, gamma, r, v_values, saturated, log_dc)
}

/// Share of `sum |kappa(t_j)|^2` carried by the samples with `t_j < 0`; zero for a zero series.
pub fn causality_defect_of(series: &TimeSeries) -> f64 {
    let grid = series.grid();
    let total = root_sum_squares(series.samples().iter().map(|z| z.norm()));
    if total == 0.0 {
        return 0.0;
    }
    let past = root_sum_squares(
        series
            .samples()
            .iter()
            .enumerate()
            .filter(|(j, _)| grid.time(*j) < 0.0)
            .map(|(_, z)| z.norm()),
    );
    (past / total).powi(2)
}

pub fn causality_defect(pt: &PredictorTransfer) -> f64 {
    causality_defect_of(pt.khat_time())
}

/// `yhat = inverse(Khat * X)`, the causal prediction of the anti-causal output.
pub fn predict(pt: &PredictorTransfer, x: &TimeSeries) -> Result<TimeSeries> {
    if x.grid() != pt.grid() {
        return Err(Error::GridMismatch);
    }
    Ok(filter(pt.khat_values(), x))
}

/// `|dw sum conj(K) Khat| / (||K|| ||Khat||)` over the grid; zero when either norm vanishes.
pub fn orthogonality_residual(pt: &PredictorTransfer) -> f64 {
    let k = pt.k_values().values();
    let kh = pt.khat_values().values();
    let nk = root_sum_squares(k.iter().map(|z| z.norm()));
    let nkh = root_sum_squares(kh.iter().map(|z| z.norm()));
    if nk == 0.0 || nkh == 0.0 {
        return 0.0;
    }
    let inner: Complex64 = k
        .iter()
        .zip(kh)
        .map(|(a, b)| (a / nk).conj() * (b / nkh))
        .sum();
    inner.norm()
}

/// Half-plane positivity and `|V_j - 1| < 1` above the threshold.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct PositivityCheck {
    pub pass: bool,
    pub nodes_checked: usize,
    /// Smallest closed-form `Re((iw - a_j) / (iw + gamma^{-r}))` seen.
    pub min_real_part: f64,
    pub max_modulus: f64,
    /// Worst relative gap between `|V_j - 1|` and `exp(-gamma Re(...))`.
    pub modulus_identity_rel_err: f64,
}

/// Size of `V - 1` away from the origin.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ConvergenceCheck {
    pub omega0: f64,
    pub max_v_minus_one: f64,
    /// `ln` of the same maximum; stays finite when the maximum underflows.
    pub log_max_v_minus_one: f64,
}

/// `|V| / h <= 1 + tol` on the low band `0 < |w| <= Omega(gamma)`, in log form.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct LowBandCheck {
    pub pass: bool,
    pub grid_nodes: usize,
    pub probes: usize,
    /// Largest `ln |V| - c / |w|^q`.
    pub max_log_ratio: f64,
    pub bound: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct LemmaReport {
    pub gamma: f64,
    pub r: f64,
    pub omega_threshold: f64,
    pub positivity: PositivityCheck,
    pub convergence: ConvergenceCheck,
    pub low_band: LowBandCheck,
}

fn positivity_check(pt: &PredictorTransfer) -> PositivityCheck {
    let grid = pt.grid();
    let eps = pt.gamma.powf(-pt.r);
    let mut check = PositivityCheck {
        pass: true,
        nodes_checked: 0,
        min_real_part: f64::INFINITY,
        max_modulus: 0.0,
        modulus_identity_rel_err: 0.0,
    };
    for k in 0..grid.n() {
        let w = grid.omega(k);
        if w.abs() <= pt.omega_threshold {
            continue;
        }
        check.nodes_checked += 1;
        let z = Complex64::new(0.0, w);
        for &a in pt.kernel.poles() {
            let re = (w * w - a * eps) / (w * w + eps * eps);
            let modulus = v_factor_exponent(z, a, pt.gamma, pt.r).exp().norm();
            let predicted = (-pt.gamma * re).exp();
            let rel = if predicted > 0.0 {
                (modulus - predicted).abs() / predicted
            } else {
                modulus
            };
            check.min_real_part = check.min_real_part.min(re);
            check.max_modulus = check.max_modulus.max(modulus);
            check.modulus_identity_rel_err = check.modulus_identity_rel_err.max(rel);
            if !(re > 0.0 && modulus < 1.0) {
                check.pass = false;
            }
        }
    }
    check
}

fn convergence_check(pt: &PredictorTransfer, omega0: f64) -> ConvergenceCheck {
    let grid = pt.grid();
    let mut max = 0.0f64;
    let mut log_max = f64::NEG_INFINITY;
    for k in 0..grid.n() {
        let w = grid.omega(k);
        if w.abs() < omega0 {
            continue;
        }
        let d = v_minus_one(&pt.kernel, pt.gamma, pt.r, w).norm();
        max = max.max(d);
        let log_d = if d > 0.0 {
            d.ln()
        } else {
            // all e^{E_j} underflowed; to first order |V - 1| = |sum_j e^{E_j}|
            let z = Complex64::new(0.0, w);
            let res: Vec<f64> = pt
                .kernel
                .poles()
                .iter()
                .map(|&a| v_factor_exponent(z, a, pt.gamma, pt.r).re)
                .collect();
            let top = res.iter().copied().fold(f64::NEG_INFINITY, f64::max);
            top + res.iter().map(|x| (x - top).exp()).sum::<f64>().ln()
        };
        log_max = log_max.max(log_d);
    }
    ConvergenceCheck {
        omega0,
        max_v_minus_one: max,
        log_max_v_minus_one: log_max,
    }
}

/// Checks `|V(iw)| / h(w) <= 1 + LEMMA_WEIGHT_TOL` on every grid node with
/// `0 < |w| <= Omega(gamma)` and on log-spaced probes in `[Omega 10^-6, Omega]`.
pub fn low_band_check(
    kernel: &AnticausalKernel,
    gamma: f64,
    r: f64,
    cls: &DegeneracyClass,
    grid: &FrequencyGrid,
) -> LowBandCheck {
    let omega_t = omega_threshold(kernel, gamma, r);
    let bound = (1.0 + LEMMA_WEIGHT_TOL).ln();
    let mut max = f64::NEG_INFINITY;
    let mut grid_nodes = 0;
    let mut visit = |w: f64| {
        let v = log_abs_v(kernel, gamma, r, w) - cls.log_weight(w);
        max = if v.is_nan() { f64::INFINITY } else { max.max(v) };
    };
    for k in 1..=grid.n() / 2 {
        let w = k as f64 * grid.d_omega();
        if w > omega_t {
            break;
        }
        grid_nodes += 1;
        visit(w);
    }
    let lo = omega_t.ln() - LOW_BAND_PROBE_DECADES * std::f64::consts::LN_10;
    let hi = omega_t.ln();
    for i in 0..LOW_BAND_PROBES {
        let s = i as f64 / (LOW_BAND_PROBES - 1) as f64;
        visit((lo + s * (hi - lo)).exp());
    }
    LowBandCheck {
        pass: max <= bound,
        grid_nodes,
        probes: LOW_BAND_PROBES,
        max_log_ratio: max,
        bound: LEMMA_WEIGHT_TOL,
    }
}

/// Evaluates the three checks for one predictor.
pub fn lemma_check(pt: &PredictorTransfer, cls: &DegeneracyClass, omega0: f64) -> LemmaReport {
    LemmaReport {
        gamma: pt.gamma,
        r: pt.r,
        omega_threshold: pt.omega_threshold,
        positivity: positivity_check(pt),
        convergence: convergence_check(pt, omega0),
        low_band: low_band_check(&pt.kernel, pt.gamma, pt.r, cls, pt.grid()),
    }
}

/// Smallest `gamma` in `[lo, hi]` from which the low-band check passes for every larger
/// `gamma` in the bracket.
///
/// The check also passes for very small `gamma`, where `|V|` itself is small, so the
/// bracket is first scanned downward from `hi` on a log grid to find the last failure,
/// then the crossing is refined by bisection on `ln gamma`.
pub fn locate_gamma0(
    kernel: &AnticausalKernel,
    r: f64,
    cls: &DegeneracyClass,
    grid: &FrequencyGrid,
    bracket: (f64, f64),
) -> Result<f64> {
    const SCAN_POINTS: usize = 241;
    let (lo, hi) = bracket;
    if !(lo > 0.0 && hi > lo && hi.is_finite()) {
        return Err(Error::InvalidParameter(format!(
            "gamma bracket must satisfy 0 < lo < hi, got [{lo}, {hi}]"
        )));
    }
    let passes = |log_g: f64| low_band_check(kernel, log_g.exp(), r, cls, grid).pass;
    let (llo, lhi) = (lo.ln(), hi.ln());
    if !passes(lhi) {
        return Err(Error::Hypothesis(format!(
            "low-band weight bound fails at the top of the bracket gamma = {hi}"
        )));
    }
    let step = (lhi - llo) / (SCAN_POINTS - 1) as f64;
    let mut b = lhi;
    let mut a = None;
    for i in (0..SCAN_POINTS - 1).rev() {
        let x = llo + i as f64 * step;
        if passes(x) {
            b = x;
        } else {
            a = Some(x);
            break;
        }
    }
    let Some(mut a) = a else {
        return Ok(lo);
    };
    while b - a > 1e-10 {
        let mid = 0.5 * (a + b);
        if passes(mid) {
            b = mid;
        } else {
            a = mid;
        }
    }
    Ok(b.exp())
}
