//! Experiment drivers: prediction error, the low/high band error split, gamma sweeps,
//! uniformity over a class ball, noise robustness, the unit-modulus counterexample and
//! the slow-degeneracy contrast.

use std::f64::consts::PI;

use serde::Serialize;

use crate::constants::{
    IDENTITY_REL_TOL, MONOTONE_JITTER, REL_DENOM_FLOOR, ROBUSTNESS_SLACK,
};
use crate::error::{Error, Result};
use crate::kernels::{apply_anticausal, AnticausalKernel};
use crate::predictor::{
    build_predictor, causality_defect, lemma_check, orthogonality_residual, predict,
    DegeneracyClass, PredictorTransfer,
};
use crate::signal_gen::{
    add_noise, class_norm, counterexample_pair, sample_class_member, sample_enveloped,
    GeneratorConfig, SpectralEnvelope,
};
use crate::spectral::{
    analysis_spectrum, inverse_transform, norm, spectrum_l2, FrequencyGrid, Norm, Spectrum,
    TimeSeries,
};

/// Default experiment configuration.
pub mod defaults {
    pub const N: usize = 1 << 16;
    pub const DELTA_T: f64 = 0.01;
    pub const POLES: [f64; 1] = [1.0];
    pub const NUMERATOR: [f64; 1] = [1.0];
    pub const Q: f64 = 2.0;
    pub const C: f64 = 1.0;
    pub const R: f64 = 4.0;
    pub const GAMMAS: [f64; 5] = [10.0, 30.0, 100.0, 300.0, 1000.0];
    pub const ENSEMBLE_SIZE: usize = 10;
    pub const ENSEMBLE_SEED: u64 = 20_240_601;
    pub const LEMMA_GAMMAS: [f64; 3] = [10.0, 100.0, 1000.0];
    pub const LEMMA_OMEGA0: f64 = 0.5;
    pub const GAMMA0_BRACKET: (f64, f64) = (1e-3, 1e3);
    pub const ROBUSTNESS_GAMMA: f64 = 100.0;
    pub const NUS: [f64; 3] = [0.01, 0.05, 0.1];
    pub const TRADEOFF_GAMMAS: (f64, f64) = (30.0, 1000.0);
    pub const TRADEOFF_NU: f64 = 0.05;
    pub const NOISE_SEED: u64 = 7;
    pub const COUNTEREXAMPLE_A: f64 = 0.5;
    pub const COUNTEREXAMPLE_SEED: u64 = 11;
    pub const Q_BAD: f64 = 0.5;
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct ErrorPair {
    pub abs: f64,
    pub rel: f64,
}

/// `||y - yhat||_p` and its ratio to `||y||_p`, with `y` the anti-causal output.
pub fn prediction_error(
    kernel: &AnticausalKernel,
    pt: &PredictorTransfer,
    x: &TimeSeries,
    p: Norm,
) -> Result<ErrorPair> {
    let y = apply_anticausal(kernel, x);
    let yhat = predict(pt, x)?;
    Ok(error_against(&y, &yhat, p))
}

fn error_against(y: &TimeSeries, yhat: &TimeSeries, p: Norm) -> ErrorPair {
    let diff = y.checked_sub(yhat).expect("shared grid");
    let abs = norm(&diff, p);
    ErrorPair {
        abs,
        rel: abs / norm(y, p).max(REL_DENOM_FLOOR),
    }
}

/// Spectral error measure `dw sum |Yhat - Y|^rho` split at `|w| = Omega(gamma)`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct Decomposition {
    pub rho: u32,
    /// Nodes with `|w| <= Omega(gamma)`.
    pub i1: f64,
    /// Nodes with `|w| > Omega(gamma)`.
    pub i2: f64,
    pub total: f64,
}

/// `rho = 2` for the L2 error and `rho = 1` for the sup error.
pub fn error_decomposition(
    pt: &PredictorTransfer,
    kernel: &AnticausalKernel,
    x: &TimeSeries,
    p: Norm,
) -> Result<Decomposition> {
    if x.grid() != pt.grid() || kernel != pt.kernel() {
        return Err(Error::GridMismatch);
    }
    let spectrum = analysis_spectrum(x);
    Ok(decompose(pt, &spectrum, p.spectral_exponent()))
}

fn decompose(pt: &PredictorTransfer, spectrum: &Spectrum, rho: u32) -> Decomposition {
    let grid = pt.grid();
    let (mut low, mut high) = (Vec::new(), Vec::new());
    for k in 0..grid.n() {
        let x = spectrum.values()[k];
        let d = if x.norm() == 0.0 {
            0.0
        } else {
            ((pt.khat_values().values()[k] - pt.k_values().values()[k]) * x).norm()
        };
        if grid.omega(k).abs() <= pt.omega_threshold() {
            low.push(d);
        } else {
            high.push(d);
        }
    }
    let dw = grid.d_omega();
    let measure = |v: &[f64]| dw * v.iter().map(|d| d.powi(rho as i32)).sum::<f64>();
    let (i1, i2) = (measure(&low), measure(&high));
    Decomposition {
        rho,
        i1,
        i2,
        total: i1 + i2,
    }
}

/// Compact summary of the per-predictor lemma checks carried in sweep rows.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct LemmaSummary {
    pub positivity_pass: bool,
    pub max_v_minus_one: f64,
    pub log_max_v_minus_one: f64,
    pub low_band_pass: bool,
    pub low_band_max_log_ratio: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SweepRow {
    pub gamma: f64,
    pub err_l2_abs: f64,
    pub err_l2_rel: f64,
    pub err_sup_abs: f64,
    pub err_sup_rel: f64,
    pub kappa_sup: f64,
    pub kappa_sup_off_dc: f64,
    pub log_kappa_dc: f64,
    pub saturated: bool,
    pub omega_threshold: f64,
    pub causality_defect: f64,
    pub orthogonality_residual: f64,
    /// Index of the member with the largest relative L2 error; `i1`, `i2` belong to it.
    pub worst_member: usize,
    pub i1: f64,
    pub i2: f64,
    pub spectral_total: f64,
    pub i1_rho1: f64,
    pub i2_rho1: f64,
    pub lemma: Option<LemmaSummary>,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SweepMetadata {
    pub kernel: AnticausalKernel,
    pub class: Option<DegeneracyClass>,
    pub r: f64,
    pub grid: FrequencyGrid,
    pub seeds: Vec<u64>,
    pub ensemble_size: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SweepReport {
    pub rows: Vec<SweepRow>,
    pub metadata: SweepMetadata,
}

impl SweepReport {
    /// Whether a column is nonincreasing in gamma up to the jitter tolerance.
    pub fn nonincreasing(&self, column: impl Fn(&SweepRow) -> f64) -> bool {
        self.rows
            .windows(2)
            .all(|w| column(&w[1]) <= column(&w[0]) * (1.0 + MONOTONE_JITTER))
    }

    pub fn first(&self) -> &SweepRow {
        &self.rows[0]
    }

    pub fn last(&self) -> &SweepRow {
        self.rows.last().expect("nonempty sweep")
    }
}

fn validate_gammas(gammas: &[f64]) -> Result<Vec<f64>> {
    if gammas.is_empty() {
        return Err(Error::InvalidParameter("gamma list must not be empty".into()));
    }
    if let Some(g) = gammas.iter().find(|g| !(g.is_finite() && **g > 0.0)) {
        return Err(Error::InvalidParameter(format!("gamma values must be positive, got {g}")));
    }
    let mut sorted = gammas.to_vec();
    sorted.sort_by(f64::total_cmp);
    Ok(sorted)
}

fn validate_ensemble(ensemble: &[TimeSeries]) -> Result<FrequencyGrid> {
    let first = ensemble
        .first()
        .ok_or_else(|| Error::InvalidParameter("ensemble must not be empty".into()))?;
    let grid = *first.grid();
    if ensemble.iter().any(|x| *x.grid() != grid) {
        return Err(Error::GridMismatch);
    }
    Ok(grid)
}

/// Rejects `r <= 2 / (q - 1)`.
pub fn check_exponent(cls: &DegeneracyClass, r: f64) -> Result<()> {
    if !(r > cls.min_exponent()) {
        return Err(Error::Hypothesis(format!(
            "the predictor needs r > 2/(q-1); q = {} requires r > {}, got r = {r}",
            cls.q(),
            cls.min_exponent()
        )));
    }
    Ok(())
}

struct Prepared {
    spectrum: Spectrum,
    y: TimeSeries,
}

fn sweep_rows(
    kernel: &AnticausalKernel,
    cls: Option<&DegeneracyClass>,
    gammas: &[f64],
    r: f64,
    ensemble: &[TimeSeries],
    lemma_omega0: f64,
) -> Result<Vec<SweepRow>> {
    let grid = validate_ensemble(ensemble)?;
    let prepared: Vec<Prepared> = ensemble
        .iter()
        .map(|x| Prepared {
            spectrum: analysis_spectrum(x),
            y: apply_anticausal(kernel, x),
        })
        .collect();
    let mut rows = Vec::with_capacity(gammas.len());
    for &gamma in gammas {
        let pt = build_predictor(kernel, gamma, r, &grid)?;
        let mut worst = (0usize, f64::NEG_INFINITY);
        let (mut l2_abs, mut l2_rel, mut sup_abs, mut sup_rel) = (0.0f64, 0.0f64, 0.0f64, 0.0f64);
        for (i, (x, prep)) in ensemble.iter().zip(&prepared).enumerate() {
            let yhat = predict(&pt, x)?;
            let e2 = error_against(&prep.y, &yhat, Norm::L2);
            let einf = error_against(&prep.y, &yhat, Norm::Sup);
            if e2.rel > worst.1 {
                worst = (i, e2.rel);
            }
            l2_abs = l2_abs.max(e2.abs);
            l2_rel = l2_rel.max(e2.rel);
            sup_abs = sup_abs.max(einf.abs);
            sup_rel = sup_rel.max(einf.rel);
        }
        let spectrum = &prepared[worst.0].spectrum;
        let d2 = decompose(&pt, spectrum, 2);
        let d1 = decompose(&pt, spectrum, 1);
        let lemma = cls.map(|cls| {
            let rep = lemma_check(&pt, cls, lemma_omega0);
            LemmaSummary {
                positivity_pass: rep.positivity.pass,
                max_v_minus_one: rep.convergence.max_v_minus_one,
                log_max_v_minus_one: rep.convergence.log_max_v_minus_one,
                low_band_pass: rep.low_band.pass,
                low_band_max_log_ratio: rep.low_band.max_log_ratio,
            }
        });
        rows.push(SweepRow {
            gamma,
            err_l2_abs: l2_abs,
            err_l2_rel: l2_rel,
            err_sup_abs: sup_abs,
            err_sup_rel: sup_rel,
            kappa_sup: pt.kappa_sup(),
            kappa_sup_off_dc: pt.kappa_sup_off_dc(),
            log_kappa_dc: pt.log_kappa_dc(),
            saturated: pt.saturated(),
            omega_threshold: pt.omega_threshold(),
            causality_defect: causality_defect(&pt),
            orthogonality_residual: orthogonality_residual(&pt),
            worst_member: worst.0,
            i1: d2.i1,
            i2: d2.i2,
            spectral_total: d2.total,
            i1_rho1: d1.i1,
            i2_rho1: d1.i2,
            lemma,
        });
    }
    Ok(rows)
}

/// Worst-case errors over the ensemble for each gamma (sorted ascending).
///
/// `seeds` are carried into the metadata only; the ensemble is supplied by the caller.
pub fn gamma_sweep(
    kernel: &AnticausalKernel,
    cls: &DegeneracyClass,
    gammas: &[f64],
    r: f64,
    ensemble: &[TimeSeries],
    seeds: &[u64],
) -> Result<SweepReport> {
    check_exponent(cls, r)?;
    let gammas = validate_gammas(gammas)?;
    let rows = sweep_rows(kernel, Some(cls), &gammas, r, ensemble, defaults::LEMMA_OMEGA0)?;
    Ok(SweepReport {
        rows,
        metadata: SweepMetadata {
            kernel: kernel.clone(),
            class: Some(*cls),
            r,
            grid: *ensemble[0].grid(),
            seeds: seeds.to_vec(),
            ensemble_size: ensemble.len(),
        },
    })
}

/// Seeds `base, base + 1, ...` used for an ensemble of the given size.
pub fn ensemble_seeds(base: u64, size: usize) -> Vec<u64> {
    (0..size as u64).map(|i| base.wrapping_add(i)).collect()
}

/// Class members drawn with consecutive seeds starting at `cfg.seed()`.
pub fn class_ensemble(cls: &DegeneracyClass, cfg: &GeneratorConfig, size: usize) -> Vec<TimeSeries> {
    ensemble_seeds(cfg.seed(), size)
        .into_iter()
        .map(|s| sample_class_member(cls, &cfg.with_seed(s)))
        .collect()
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct UniformityReport {
    pub gamma: f64,
    pub worst_ratio: f64,
    pub worst_member: usize,
}

/// `max_x ||y - yhat||_p / ||x||_X(q,c)` over the ensemble.
pub fn uniformity_check(
    kernel: &AnticausalKernel,
    cls: &DegeneracyClass,
    gamma: f64,
    r: f64,
    ensemble: &[TimeSeries],
    p: Norm,
) -> Result<UniformityReport> {
    let grid = validate_ensemble(ensemble)?;
    let norms = ensemble
        .iter()
        .enumerate()
        .map(|(i, x)| {
            let cn = class_norm(x, cls);
            if cn.is_member() {
                Ok(cn)
            } else {
                Err(Error::NonMember(format!("ensemble member {i} has infinite class norm")))
            }
        })
        .collect::<Result<Vec<_>>>()?;
    let pt = build_predictor(kernel, gamma, r, &grid)?;
    let mut worst = (0usize, f64::NEG_INFINITY);
    for (i, (x, cn)) in ensemble.iter().zip(&norms).enumerate() {
        let err = prediction_error(kernel, &pt, x, p)?.abs;
        let log_ratio = if err == 0.0 { f64::NEG_INFINITY } else { err.ln() - cn.ln };
        if log_ratio > worst.1 || i == 0 {
            worst = (i, log_ratio);
        }
    }
    Ok(UniformityReport {
        gamma,
        worst_ratio: worst.1.exp(),
        worst_member: worst.0,
    })
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct RobustnessRow {
    pub nu: f64,
    pub err_sup_noisy: f64,
    /// `eps_clean + nu (kappa + 1)`.
    pub bound: f64,
    pub bound_with_slack: f64,
    pub holds: bool,
    /// Sup norm of the clean prediction error.
    pub j0: f64,
    /// Sup norm of the predicted noise, `F^{-1}(Khat N)`.
    pub j_eta: f64,
    /// The bound with the gain taken over nonzero nodes only.
    pub bound_off_dc: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct RobustnessReport {
    pub gamma: f64,
    pub r: f64,
    pub eps_clean: f64,
    pub kappa_sup: f64,
    pub kappa_sup_off_dc: f64,
    pub saturated: bool,
    pub noise_seed: u64,
    pub rows: Vec<RobustnessRow>,
}

/// Sup error of predictions from noisy inputs against the clean anti-causal output.
pub fn robustness_experiment(
    kernel: &AnticausalKernel,
    gamma: f64,
    r: f64,
    x0: &TimeSeries,
    nus: &[f64],
    cfg: &GeneratorConfig,
) -> Result<RobustnessReport> {
    if let Some(nu) = nus.iter().find(|nu| !(nu.is_finite() && **nu >= 0.0)) {
        return Err(Error::InvalidParameter(format!("noise levels must be nonnegative, got {nu}")));
    }
    let pt = build_predictor(kernel, gamma, r, x0.grid())?;
    let y0 = apply_anticausal(kernel, x0);
    let eps_clean = error_against(&y0, &predict(&pt, x0)?, Norm::Sup).abs;
    let kappa = pt.kappa_sup();
    let mut rows = Vec::with_capacity(nus.len());
    for &nu in nus {
        let (noisy, noise) = add_noise(x0, nu, cfg)?;
        let err = error_against(&y0, &predict(&pt, &noisy)?, Norm::Sup).abs;
        let predicted_noise = inverse_transform(&pt.khat_values().checked_mul(&noise)?).to_real();
        let bound = eps_clean + nu * (kappa + 1.0);
        let bound_with_slack = eps_clean + nu * (kappa + 1.0) * (1.0 + ROBUSTNESS_SLACK);
        rows.push(RobustnessRow {
            nu,
            err_sup_noisy: err,
            bound,
            bound_with_slack,
            holds: err <= bound_with_slack,
            j0: eps_clean,
            j_eta: norm(&predicted_noise, Norm::Sup),
            bound_off_dc: eps_clean + nu * (pt.kappa_sup_off_dc() + 1.0),
        });
    }
    Ok(RobustnessReport {
        gamma,
        r,
        eps_clean,
        kappa_sup: kappa,
        kappa_sup_off_dc: pt.kappa_sup_off_dc(),
        saturated: pt.saturated(),
        noise_seed: cfg.seed(),
        rows,
    })
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct CounterexampleRow {
    pub gamma: f64,
    pub e1: f64,
    pub e2: f64,
    /// `2 pi (e1^2 + e2^2)`.
    pub identity_lhs: f64,
    /// `||K||^2 + ||Khat||^2` as grid norms.
    pub identity_rhs: f64,
    /// `|lhs - rhs| / rhs`.
    pub residual: f64,
    pub identity_holds: bool,
    /// `max(e1, e2)^2 >= rhs / (4 pi) * (1 - tol)`.
    pub floor_holds: bool,
    pub orthogonality_residual: f64,
    pub saturated: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct CounterexampleReport {
    pub a: f64,
    pub seed: u64,
    pub kernel_norm_sq: f64,
    /// Estimate of the part of `||K||^2` beyond the grid's frequency range.
    pub kernel_tail_estimate: f64,
    pub rows: Vec<CounterexampleRow>,
    /// `min_gamma max(e1, e2) >= sqrt(||K||^2 / (4 pi)) (1 - tol)`.
    pub no_gamma_predicts_both: bool,
}

/// `int_{|w| > w_max} |K|^2 dw` from the leading-order decay `|d_lead| / |w|^s`.
pub fn kernel_tail_estimate(kernel: &AnticausalKernel, grid: &FrequencyGrid) -> f64 {
    let (deg, lead) = kernel.leading_term();
    let s = (kernel.order() - deg) as i32;
    2.0 * lead * lead / ((2 * s - 1) as f64 * grid.omega_max().powi(2 * s - 1))
}

/// Errors on the two halves of a unit-modulus spectrum and the energy identity.
pub fn counterexample_experiment(
    a: f64,
    kernel: &AnticausalKernel,
    gammas: &[f64],
    r: f64,
    cfg: &GeneratorConfig,
) -> Result<CounterexampleReport> {
    let gammas = validate_gammas(gammas)?;
    let pair = counterexample_pair(a, cfg)?;
    let grid = *cfg.grid();
    let y1 = apply_anticausal(kernel, &pair.x1);
    let y2 = apply_anticausal(kernel, &pair.x2);
    let mut rows = Vec::with_capacity(gammas.len());
    for &gamma in &gammas {
        let pt = build_predictor(kernel, gamma, r, &grid)?;
        rows.push(counterexample_row(&pt, &pair.x1, &pair.x2, &y1, &y2)?);
    }
    let k_norm_sq = spectrum_l2(&crate::kernels::transfer(kernel, &grid)).powi(2);
    let floor = (k_norm_sq / (4.0 * PI)).sqrt() * (1.0 - IDENTITY_REL_TOL);
    let min_max = rows.iter().map(|r| r.e1.max(r.e2)).fold(f64::INFINITY, f64::min);
    Ok(CounterexampleReport {
        a,
        seed: cfg.seed(),
        kernel_norm_sq: k_norm_sq,
        kernel_tail_estimate: kernel_tail_estimate(kernel, &grid),
        rows,
        no_gamma_predicts_both: min_max >= floor,
    })
}

/// One identity row for an arbitrary predictor.
pub fn counterexample_row(
    pt: &PredictorTransfer,
    x1: &TimeSeries,
    x2: &TimeSeries,
    y1: &TimeSeries,
    y2: &TimeSeries,
) -> Result<CounterexampleRow> {
    let e1 = error_against(y1, &predict(pt, x1)?, Norm::L2).abs;
    let e2 = error_against(y2, &predict(pt, x2)?, Norm::L2).abs;
    let lhs = 2.0 * PI * (e1 * e1 + e2 * e2);
    let rhs = spectrum_l2(pt.k_values()).powi(2) + spectrum_l2(pt.khat_values()).powi(2);
    let residual = (lhs - rhs).abs() / rhs.max(REL_DENOM_FLOOR);
    Ok(CounterexampleRow {
        gamma: pt.gamma(),
        e1,
        e2,
        identity_lhs: lhs,
        identity_rhs: rhs,
        residual,
        identity_holds: residual <= IDENTITY_REL_TOL,
        floor_holds: e1.max(e2).powi(2) >= rhs / (4.0 * PI) * (1.0 - IDENTITY_REL_TOL),
        orthogonality_residual: orthogonality_residual(pt),
        saturated: pt.saturated(),
    })
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct NegativeReport {
    /// Always `"ILLUSTRATIVE"`: a finite experiment cannot show that no predictor exists.
    pub label: &'static str,
    pub q_bad: f64,
    pub c: f64,
    pub q_reference: f64,
    pub seeds: Vec<u64>,
    pub slow: Vec<SweepRow>,
    pub reference: Vec<SweepRow>,
    pub final_error_slow: f64,
    pub final_error_reference: f64,
    /// `final_error_slow / final_error_reference`; `NaN` when both vanish.
    pub ratio: f64,
}

/// Sweeps an ensemble with the slow envelope `exp(-c / |w|^q_bad)`, `0 < q_bad < 1`,
/// next to the `q = 2` ensemble drawn from the same seeds.
pub fn nonpredictability_demo(
    q_bad: f64,
    c: f64,
    kernel: &AnticausalKernel,
    gammas: &[f64],
    r: f64,
    cfg: &GeneratorConfig,
    ensemble_size: usize,
) -> Result<NegativeReport> {
    if !(q_bad > 0.0 && q_bad < 1.0) {
        return Err(Error::InvalidParameter(format!(
            "q_bad must lie strictly between 0 and 1, got {q_bad}"
        )));
    }
    let reference_cls = DegeneracyClass::new(2.0, c)?;
    let slow_env = SpectralEnvelope::new(q_bad, c)?;
    let gammas = validate_gammas(gammas)?;
    let seeds = ensemble_seeds(cfg.seed(), ensemble_size);
    let slow: Vec<TimeSeries> = seeds
        .iter()
        .map(|&s| sample_enveloped(&slow_env, &cfg.with_seed(s)))
        .collect();
    let reference: Vec<TimeSeries> = seeds
        .iter()
        .map(|&s| sample_class_member(&reference_cls, &cfg.with_seed(s)))
        .collect();
    let slow_rows = sweep_rows(kernel, None, &gammas, r, &slow, defaults::LEMMA_OMEGA0)?;
    let reference_rows = sweep_rows(kernel, None, &gammas, r, &reference, defaults::LEMMA_OMEGA0)?;
    let final_error_slow = slow_rows.last().expect("nonempty").err_l2_rel;
    let final_error_reference = reference_rows.last().expect("nonempty").err_l2_rel;
    Ok(NegativeReport {
        label: "ILLUSTRATIVE",
        q_bad,
        c,
        q_reference: 2.0,
        seeds,
        slow: slow_rows,
        reference: reference_rows,
        final_error_slow,
        final_error_reference,
        ratio: final_error_slow / final_error_reference,
    })
}
