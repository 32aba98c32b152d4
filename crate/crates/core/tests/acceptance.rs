//! Acceptance suite: one PASS/FAIL line per criterion, each at its pinned tolerance and
//! runtime budget. Exits nonzero when any criterion fails.

use std::f64::consts::PI;
use std::fs;
use std::path::Path;
use std::process::Command;
use std::time::{Duration, Instant};

use degenpred::constants::{
    CAUSALITY_DEFECT_MAX, CONVERGENCE_FACTOR, IDENTITY_REL_TOL, NEGATIVE_CONTRAST_FACTOR,
    ORACLE_REL_TOL, ORTHOGONALITY_MAX, PARSEVAL_REL_TOL, ROBUSTNESS_SLACK, ROUND_TRIP_REL_TOL,
};
use degenpred::experiments::{
    class_ensemble, counterexample_experiment, defaults, ensemble_seeds, gamma_sweep,
    nonpredictability_demo, robustness_experiment, SweepReport,
};
use degenpred::kernels::{apply_anticausal, AnticausalKernel};
use degenpred::predictor::{
    build_predictor, lemma_check, locate_gamma0, low_band_check, predict, DegeneracyClass,
};
use degenpred::signal_gen::{sample_class_member, GeneratorConfig};
use degenpred::spectral::{
    forward_transform, inverse_transform, make_grid, Complex64, FrequencyGrid, TimeSeries,
};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha20Rng;

struct Outcome {
    pass: bool,
    detail: String,
}

fn judge(id: &str, name: &str, budget: Option<Duration>, run: impl FnOnce() -> Outcome) -> bool {
    let start = Instant::now();
    let out = run();
    let elapsed = start.elapsed();
    let in_time = budget.map_or(true, |b| elapsed <= b);
    let pass = out.pass && in_time;
    let budget_note = match budget {
        Some(b) if !in_time => format!(" runtime {:.1}s exceeds {:.0}s", elapsed.as_secs_f64(), b.as_secs_f64()),
        _ => format!(" ({:.1}s)", elapsed.as_secs_f64()),
    };
    println!(
        "{} criterion {id} {name}: {}{budget_note}",
        if pass { "PASS" } else { "FAIL" },
        out.detail
    );
    pass
}

fn default_grid() -> FrequencyGrid {
    make_grid(defaults::N, defaults::DELTA_T).unwrap()
}

fn unit_kernel() -> AnticausalKernel {
    AnticausalKernel::new(defaults::POLES.to_vec(), defaults::NUMERATOR.to_vec()).unwrap()
}

fn default_class() -> DegeneracyClass {
    DegeneracyClass::new(defaults::Q, defaults::C).unwrap()
}

fn sci(values: &[f64]) -> String {
    let parts: Vec<String> = values.iter().map(|v| format!("{v:.3e}")).collect();
    format!("[{}]", parts.join(", "))
}

fn l2(v: impl Iterator<Item = f64>) -> f64 {
    v.map(|x| x * x).sum::<f64>().sqrt()
}

fn rel_l2(reference: &[f64], approx: &[f64]) -> f64 {
    let num = l2(reference.iter().zip(approx).map(|(a, b)| a - b));
    num / l2(reference.iter().copied())
}

// ---------------------------------------------------------------- criterion 1

fn transform_fidelity() -> Outcome {
    let grid = make_grid(1 << 16, 0.01).unwrap();
    let (mut worst_rt, mut worst_parseval) = (0.0f64, 0.0f64);
    for seed in 0..100u64 {
        let mut rng = ChaCha20Rng::seed_from_u64(seed);
        let samples: Vec<Complex64> = (0..grid.n())
            .map(|_| Complex64::new(rng.gen_range(-1.0..1.0), rng.gen_range(-1.0..1.0)))
            .collect();
        let x = TimeSeries::new(grid, samples).unwrap();
        let spec = forward_transform(&x);
        let back = inverse_transform(&spec);
        let diff = l2(x.samples().iter().zip(back.samples()).map(|(a, b)| (a - b).norm()));
        let xn = l2(x.samples().iter().map(|z| z.norm()));
        worst_rt = worst_rt.max(diff / xn);
        let time_energy = grid.delta_t() * x.samples().iter().map(|z| z.norm_sqr()).sum::<f64>();
        let freq_energy =
            grid.d_omega() / (2.0 * PI) * spec.values().iter().map(|z| z.norm_sqr()).sum::<f64>();
        worst_parseval = worst_parseval.max((time_energy - freq_energy).abs() / time_energy);
    }
    Outcome {
        pass: worst_rt <= ROUND_TRIP_REL_TOL && worst_parseval <= PARSEVAL_REL_TOL,
        detail: format!(
            "worst round trip {worst_rt:.2e} (<= {ROUND_TRIP_REL_TOL:.0e}), worst Parseval {worst_parseval:.2e} (<= {PARSEVAL_REL_TOL:.0e}) over 100 seeds"
        ),
    }
}

// ---------------------------------------------------------------- criterion 2

/// Sum of up to three Gaussian bumps, negligible outside |t| <= 6.
#[derive(Clone)]
struct Bumps(Vec<(f64, f64, f64)>);

impl Bumps {
    fn random(seed: u64) -> Self {
        let mut rng = ChaCha20Rng::seed_from_u64(seed);
        let count = rng.gen_range(1..=3);
        Bumps(
            (0..count)
                .map(|_| (rng.gen_range(-1.0..1.0), rng.gen_range(-1.5..1.5), rng.gen_range(0.4..0.8)))
                .collect(),
        )
    }

    fn at(&self, t: f64) -> f64 {
        self.0
            .iter()
            .map(|(amp, mu, sigma)| amp * (-0.5 * ((t - mu) / sigma).powi(2)).exp())
            .sum()
    }
}

/// Composite Simpson rule with `2 * half_panels` subintervals.
fn simpson(f: impl Fn(f64) -> f64, a: f64, b: f64, half_panels: usize) -> f64 {
    if b <= a {
        return 0.0;
    }
    let m = 2 * half_panels;
    let h = (b - a) / m as f64;
    let mut s = f(a) + f(b);
    for i in 1..m {
        s += f(a + i as f64 * h) * if i % 2 == 1 { 4.0 } else { 2.0 };
    }
    s * h / 3.0
}

/// Closed-form kappa for the poles {1, 2} with unit numerator: e^t - e^{2t} on t <= 0.
fn kappa_two_poles(u: f64) -> f64 {
    if u > 0.0 {
        0.0
    } else {
        u.exp() - (2.0 * u).exp()
    }
}

/// Closed-form kappa for the single pole 1: -e^t on t <= 0.
fn kappa_one_pole(u: f64) -> f64 {
    if u > 0.0 {
        0.0
    } else {
        -u.exp()
    }
}

/// Series for the predicting kernel of `1 / (z - a)`, obtained by expanding
/// `exp(gamma b / (z + eps))` and splitting `1 / (z - a)` into powers of `1 / (z + eps)`:
/// `khat(t) = sum_j c_j t^{j-1} e^{-eps t} / (j-1)!` with
/// `c_j = e^{-gamma} sum_{k >= j} beta^k / k! b^{-(k-j+1)}`, `b = a + eps`, `beta = gamma b`.
struct KhatSeries {
    eps: f64,
    coeffs: Vec<f64>,
}

impl KhatSeries {
    fn new(a: f64, gamma: f64, r: f64) -> Self {
        const TERMS: usize = 400;
        let eps = gamma.powf(-r);
        let b = a + eps;
        let beta = gamma * b;
        let mut w = vec![0.0; TERMS + 1];
        w[0] = 1.0;
        for k in 1..=TERMS {
            w[k] = w[k - 1] * beta / k as f64;
        }
        let coeffs = (1..=TERMS)
            .map(|j| {
                (-gamma).exp() * (j..=TERMS).map(|k| w[k] * b.powi(-((k - j + 1) as i32))).sum::<f64>()
            })
            .collect();
        Self { eps, coeffs }
    }

    fn at(&self, t: f64) -> f64 {
        if t < 0.0 {
            return 0.0;
        }
        let mut power = 1.0;
        let mut sum = 0.0;
        for (j, c) in self.coeffs.iter().enumerate() {
            if j > 0 {
                power *= t / j as f64;
            }
            sum += c * power;
        }
        sum * (-self.eps * t).exp()
    }
}

fn oracle_equivalence() -> Outcome {
    const SUPPORT: f64 = 8.0;
    let grid = make_grid(1 << 10, 0.1).unwrap();
    let times = grid.times();
    let one = AnticausalKernel::single_pole(1.0).unwrap();
    let two = AnticausalKernel::new(vec![1.0, 2.0], vec![1.0]).unwrap();
    let (gamma, r) = (1.0, 4.0);
    let pt = build_predictor(&one, gamma, r, &grid).unwrap();
    let series = KhatSeries::new(1.0, gamma, r);
    let mut worst = [0.0f64; 3];
    for seed in 0..5u64 {
        let x = Bumps::random(1000 + seed);
        let xs = TimeSeries::from_fn(grid, |t| x.at(t));

        // y(t) = int_t^inf kappa(t - s) x(s) ds; kappa is smooth on s > t.
        for (slot, kernel, kappa) in [
            (0usize, &one, kappa_one_pole as fn(f64) -> f64),
            (1, &two, kappa_two_poles),
        ] {
            let fast = apply_anticausal(kernel, &xs).real_parts();
            let slow: Vec<f64> = times
                .iter()
                .map(|&t| {
                    let (a, b) = (t.max(-SUPPORT), SUPPORT);
                    simpson(|s| kappa(t - s) * x.at(s), a, b, 800)
                })
                .collect();
            worst[slot] = worst[slot].max(rel_l2(&slow, &fast));
        }

        // yhat(t) = int_0^inf khat(u) x(t - u) du; khat is smooth on u > 0.
        let fast = predict(&pt, &xs).unwrap().real_parts();
        let slow: Vec<f64> = times
            .iter()
            .map(|&t| {
                let (a, b) = ((t - SUPPORT).max(0.0), t + SUPPORT);
                simpson(|u| series.at(u) * x.at(t - u), a, b, 800)
            })
            .collect();
        worst[2] = worst[2].max(rel_l2(&slow, &fast));
    }
    Outcome {
        pass: worst.iter().all(|w| *w <= ORACLE_REL_TOL),
        detail: format!(
            "relative L2 vs quadrature: anticausal a={{1}} {:.2e}, a={{1,2}} {:.2e}, predict {:.2e} (<= {ORACLE_REL_TOL:.0e}) over 5 seeds",
            worst[0], worst[1], worst[2]
        ),
    }
}

// ---------------------------------------------------------------- criterion 3

fn lemma_suite() -> Outcome {
    let grid = default_grid();
    let kernel = unit_kernel();
    let cls = default_class();
    let r = defaults::R;
    let mut positivity = true;
    let mut conv = Vec::new();
    for &g in &defaults::LEMMA_GAMMAS {
        let pt = build_predictor(&kernel, g, r, &grid).unwrap();
        let rep = lemma_check(&pt, &cls, defaults::LEMMA_OMEGA0);
        positivity &= rep.positivity.pass && rep.positivity.nodes_checked > 0;
        conv.push(rep.convergence.log_max_v_minus_one);
    }
    let decreasing = conv.windows(2).all(|w| w[1] < w[0]);
    let gamma0 = locate_gamma0(&kernel, r, &cls, &grid, defaults::GAMMA0_BRACKET);
    let (gamma0_ok, low_band_ok, gamma0_text) = match gamma0 {
        Ok(g0) => {
            let tested: Vec<f64> = defaults::LEMMA_GAMMAS.iter().copied().filter(|g| *g >= g0).collect();
            let ok = !tested.is_empty()
                && tested.iter().all(|&g| low_band_check(&kernel, g, r, &cls, &grid).pass);
            (g0.is_finite(), ok, format!("{g0:.4e}"))
        }
        Err(e) => (false, false, e.to_string()),
    };
    Outcome {
        pass: positivity && decreasing && gamma0_ok && low_band_ok,
        detail: format!(
            "positivity {positivity}, ln max|V-1| over |w|>=0.5 = {} strictly decreasing {decreasing}, gamma0 = {gamma0_text}, low-band bound for gamma >= gamma0 {low_band_ok}",
            sci(&conv)
        ),
    }
}

// ---------------------------------------------------------------- criteria 4-6

fn default_sweep() -> SweepReport {
    let grid = default_grid();
    let cls = default_class();
    let cfg = GeneratorConfig::flat(defaults::ENSEMBLE_SEED, grid);
    let ensemble = class_ensemble(&cls, &cfg, defaults::ENSEMBLE_SIZE);
    let seeds = ensemble_seeds(defaults::ENSEMBLE_SEED, defaults::ENSEMBLE_SIZE);
    gamma_sweep(&unit_kernel(), &cls, &defaults::GAMMAS, defaults::R, &ensemble, &seeds).unwrap()
}

fn convergence(sweep: &SweepReport) -> Outcome {
    let (first, last) = (sweep.first(), sweep.last());
    let shrinks = |a: f64, b: f64| b.is_finite() && b <= CONVERGENCE_FACTOR * a;
    let l2 = shrinks(first.err_l2_rel, last.err_l2_rel);
    let sup = shrinks(first.err_sup_rel, last.err_sup_rel);
    let i1 = shrinks(first.i1, last.i1);
    let i2 = shrinks(first.i2, last.i2);
    Outcome {
        pass: l2 && sup && i1 && i2,
        detail: format!(
            "gamma {} -> {}: rel L2 {:.3e} -> {:.3e}, rel sup {:.3e} -> {:.3e}, i1 {:.3e} -> {:.3e}, i2 {:.3e} -> {:.3e} (need <= {CONVERGENCE_FACTOR} x)",
            first.gamma, last.gamma, first.err_l2_rel, last.err_l2_rel, first.err_sup_rel,
            last.err_sup_rel, first.i1, last.i1, first.i2, last.i2
        ),
    }
}

fn causality(sweep: &SweepReport) -> Outcome {
    let defects: Vec<f64> = sweep.rows.iter().map(|r| r.causality_defect).collect();
    Outcome {
        pass: defects.iter().all(|d| *d < CAUSALITY_DEFECT_MAX),
        detail: format!("causality defects {} (< {CAUSALITY_DEFECT_MAX:.0e})", sci(&defects)),
    }
}

fn orthogonality(sweep: &SweepReport) -> Outcome {
    let residuals: Vec<f64> = sweep.rows.iter().map(|r| r.orthogonality_residual).collect();
    Outcome {
        pass: residuals.iter().all(|d| *d < ORTHOGONALITY_MAX),
        detail: format!("orthogonality residuals {} (< {ORTHOGONALITY_MAX:.0e})", sci(&residuals)),
    }
}

// ---------------------------------------------------------------- criterion 7

fn counterexample() -> Outcome {
    let grid = default_grid();
    let cfg = GeneratorConfig::flat(defaults::COUNTEREXAMPLE_SEED, grid);
    let rep = counterexample_experiment(
        defaults::COUNTEREXAMPLE_A,
        &unit_kernel(),
        &defaults::GAMMAS,
        defaults::R,
        &cfg,
    )
    .unwrap();
    let mut pass = true;
    let mut worst_residual = 0.0f64;
    let mut worst_floor_ratio = f64::INFINITY;
    for row in &rep.rows {
        let residual = (row.identity_lhs - row.identity_rhs).abs() / row.identity_rhs;
        let floor_ratio = row.e1.max(row.e2).powi(2) / (row.identity_rhs / (4.0 * PI));
        pass &= residual <= IDENTITY_REL_TOL && floor_ratio >= 1.0 - IDENTITY_REL_TOL;
        worst_residual = worst_residual.max(residual);
        worst_floor_ratio = worst_floor_ratio.min(floor_ratio);
    }
    Outcome {
        pass,
        detail: format!(
            "worst identity residual {worst_residual:.3e} (<= {IDENTITY_REL_TOL}), min max(e1,e2)^2 / ((|K|^2+|Khat|^2)/4pi) = {worst_floor_ratio:.4} (>= {})",
            1.0 - IDENTITY_REL_TOL
        ),
    }
}

// ---------------------------------------------------------------- criterion 8

fn robustness() -> Outcome {
    let grid = default_grid();
    let kernel = unit_kernel();
    let x0 = sample_class_member(&default_class(), &GeneratorConfig::flat(defaults::ENSEMBLE_SEED, grid));
    let noise = GeneratorConfig::flat(defaults::NOISE_SEED, grid);
    let main = robustness_experiment(&kernel, defaults::ROBUSTNESS_GAMMA, defaults::R, &x0, &defaults::NUS, &noise)
        .unwrap();
    let mut bound_ok = true;
    let mut margins = Vec::new();
    for row in &main.rows {
        let bound = main.eps_clean + row.nu * (main.kappa_sup + 1.0) * (1.0 + ROBUSTNESS_SLACK);
        bound_ok &= row.err_sup_noisy <= bound;
        margins.push(row.err_sup_noisy / bound);
    }
    let (g_small, g_large) = defaults::TRADEOFF_GAMMAS;
    let nu = [defaults::TRADEOFF_NU];
    let small = robustness_experiment(&kernel, g_small, defaults::R, &x0, &nu, &noise).unwrap();
    let large = robustness_experiment(&kernel, g_large, defaults::R, &x0, &nu, &noise).unwrap();
    let (e_small, e_large) = (small.rows[0].err_sup_noisy, large.rows[0].err_sup_noisy);
    let tradeoff = e_large > e_small;
    Outcome {
        pass: bound_ok && tradeoff,
        detail: format!(
            "err/bound per nu {}, noisy sup error at nu={}: gamma {g_small} -> {e_small:.15e}, gamma {g_large} -> {e_large:.15e}",
            sci(&margins),
            nu[0]
        ),
    }
}

// ---------------------------------------------------------------- criterion 9

fn negative_illustration() -> Outcome {
    let grid = default_grid();
    let cfg = GeneratorConfig::flat(defaults::ENSEMBLE_SEED, grid);
    let rep = nonpredictability_demo(
        defaults::Q_BAD,
        defaults::C,
        &unit_kernel(),
        &defaults::GAMMAS,
        defaults::R,
        &cfg,
        defaults::ENSEMBLE_SIZE,
    )
    .unwrap();
    Outcome {
        pass: rep.final_error_slow >= NEGATIVE_CONTRAST_FACTOR * rep.final_error_reference,
        detail: format!(
            "{}: final rel L2 error q_bad={} {:.3e} vs q=2 {:.3e} (need >= {NEGATIVE_CONTRAST_FACTOR} x)",
            rep.label, rep.q_bad, rep.final_error_slow, rep.final_error_reference
        ),
    }
}

// ---------------------------------------------------------------- criterion 10

const SUBCOMMANDS: [&str; 7] = [
    "predict",
    "sweep",
    "lemma",
    "robustness",
    "counterexample",
    "demo-negative",
    "gen-signal",
];

fn run_all(config: &Path, out: &Path) -> Result<(), String> {
    for cmd in SUBCOMMANDS {
        let status = Command::new(env!("CARGO_BIN_EXE_degenpred"))
            .arg(cmd)
            .arg("--config")
            .arg(config)
            .arg("--out")
            .arg(out.join(cmd))
            .args(["--format", "csv,json"])
            .output()
            .map_err(|e| e.to_string())?;
        if !status.status.success() {
            return Err(format!("{cmd} exited with {:?}", status.status.code()));
        }
    }
    Ok(())
}

fn collect(dir: &Path, root: &Path, files: &mut Vec<(String, Vec<u8>)>) {
    let mut entries: Vec<_> = fs::read_dir(dir).unwrap().map(|e| e.unwrap().path()).collect();
    entries.sort();
    for p in entries {
        if p.is_dir() {
            collect(&p, root, files);
        } else {
            let rel = p.strip_prefix(root).unwrap().display().to_string();
            files.push((rel, fs::read(&p).unwrap()));
        }
    }
}

fn reproducibility() -> Outcome {
    let tmp = tempfile::tempdir().unwrap();
    let config = tmp.path().join("run.json");
    fs::write(&config, r#"{"grid": {"n": 16384, "delta_t": 0.01}, "ensemble": {"size": 4}}"#).unwrap();
    let (a, b) = (tmp.path().join("a"), tmp.path().join("b"));
    if let Err(e) = run_all(&config, &a).and_then(|_| run_all(&config, &b)) {
        return Outcome {
            pass: false,
            detail: e,
        };
    }
    let (mut fa, mut fb) = (Vec::new(), Vec::new());
    collect(&a, &a, &mut fa);
    collect(&b, &b, &mut fb);
    let names: Vec<&String> = fa.iter().map(|(n, _)| n).collect();
    let identical = !fa.is_empty() && fa == fb;
    Outcome {
        pass: identical,
        detail: format!("{} files from {} subcommands byte-identical: {identical}", names.len(), SUBCOMMANDS.len()),
    }
}

fn main() {
    let secs = Duration::from_secs;
    let mut results = Vec::new();
    results.push(judge("1", "transform fidelity", Some(secs(10)), transform_fidelity));
    results.push(judge("2", "oracle equivalence", Some(secs(30)), oracle_equivalence));
    results.push(judge("3", "lemma suite", Some(secs(10)), lemma_suite));
    let start = Instant::now();
    let sweep = default_sweep();
    let sweep_time = start.elapsed();
    results.push(judge("4", "convergence in gamma", Some(secs(120).saturating_sub(sweep_time)), || {
        convergence(&sweep)
    }));
    results.push(judge("5", "causality", None, || causality(&sweep)));
    results.push(judge("6", "orthogonality", None, || orthogonality(&sweep)));
    results.push(judge("7", "counterexample identity", None, counterexample));
    results.push(judge("8", "noise robustness", None, robustness));
    results.push(judge("9", "slow degeneracy (illustrative)", None, negative_illustration));
    results.push(judge("10", "reproducibility", None, reproducibility));
    println!("default sweep computed in {:.1}s", sweep_time.as_secs_f64());
    let failed = results.iter().filter(|p| !**p).count();
    println!("{} of {} criteria passed", results.len() - failed, results.len());
    if failed > 0 {
        std::process::exit(1);
    }
}
