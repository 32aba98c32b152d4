//! Command-line front end: JSON run configuration, dotted overrides and one subcommand per
//! experiment.
//!
//! Exit codes: 0 success, 1 I/O failure, 2 configuration error, 3 a quantity feeding a
//! pass/fail flag came out non-finite.

use std::ffi::OsString;
use std::fs;
use std::path::PathBuf;

use clap::{Parser, Subcommand, ValueEnum};
use serde::{Deserialize, Serialize};
use serde_json::{json, Value};

use crate::error::Error;
use crate::experiments::{
    check_exponent, class_ensemble, counterexample_experiment, defaults, ensemble_seeds,
    gamma_sweep, nonpredictability_demo, prediction_error, robustness_experiment, SweepRow,
};
use crate::kernels::{apply_anticausal, AnticausalKernel};
use crate::predictor::{
    build_predictor, causality_defect, lemma_check, locate_gamma0, low_band_check, predict,
    DegeneracyClass, LemmaReport,
};
use crate::report::{loglog_svg, to_json, write_file, Series, Table};
use crate::signal_gen::{
    class_norm, sample_bandlimited, sample_class_member, sample_enveloped, AmplitudeProfile,
    GeneratorConfig, SpectralEnvelope,
};
use crate::spectral::{forward_transform, FrequencyGrid, Norm, TimeSeries};

pub const EXIT_OK: i32 = 0;
pub const EXIT_IO: i32 = 1;
pub const EXIT_CONFIG: i32 = 2;
pub const EXIT_NUMERICAL: i32 = 3;

#[derive(Debug, Parser)]
#[command(name = "degenpred", version, about = "Causal predictors for signals with spectrum degeneracy")]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,

    /// JSON run configuration; missing keys take their defaults.
    #[arg(long, global = true)]
    pub config: Option<PathBuf>,

    /// Output directory (overrides output.directory).
    #[arg(long, global = true)]
    pub out: Option<PathBuf>,

    /// Dotted-path override, e.g. predictor.r=4 (repeatable).
    #[arg(long = "set", value_name = "KEY=VALUE", global = true)]
    pub overrides: Vec<String>,

    /// Output formats (overrides output.formats).
    #[arg(long, value_delimiter = ',', global = true)]
    pub format: Option<Vec<Format>>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Subcommand)]
pub enum Command {
    /// Predict one class member with a single gamma.
    Predict,
    /// Worst-case errors over an ensemble along the gamma sweep.
    Sweep,
    /// Positivity, convergence and low-band checks plus the gamma0 search.
    Lemma,
    /// Prediction error under L1-calibrated spectral noise.
    Robustness,
    /// Energy identity for the unit-modulus counterexample pair.
    Counterexample,
    /// Slow-degeneracy ensemble against the q = 2 ensemble.
    DemoNegative,
    /// Write a generated signal and its spectrum.
    GenSignal,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize, ValueEnum)]
#[serde(rename_all = "lowercase")]
pub enum Format {
    Csv,
    Json,
    Svg,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct GridConfig {
    pub n: usize,
    pub delta_t: f64,
}

impl Default for GridConfig {
    fn default() -> Self {
        Self {
            n: defaults::N,
            delta_t: defaults::DELTA_T,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct KernelConfig {
    pub poles: Vec<f64>,
    pub numerator: Vec<f64>,
}

impl Default for KernelConfig {
    fn default() -> Self {
        Self {
            poles: defaults::POLES.to_vec(),
            numerator: defaults::NUMERATOR.to_vec(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct ClassConfig {
    pub q: f64,
    pub c: f64,
}

impl Default for ClassConfig {
    fn default() -> Self {
        Self {
            q: defaults::Q,
            c: defaults::C,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct PredictorConfig {
    pub r: f64,
    pub gammas: Vec<f64>,
}

impl Default for PredictorConfig {
    fn default() -> Self {
        Self {
            r: defaults::R,
            gammas: defaults::GAMMAS.to_vec(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct PredictConfig {
    pub gamma: f64,
    pub seed: u64,
}

impl Default for PredictConfig {
    fn default() -> Self {
        Self {
            gamma: 100.0,
            seed: defaults::ENSEMBLE_SEED,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct EnsembleConfig {
    pub size: usize,
    pub seed: u64,
    pub profile: AmplitudeProfile,
    pub band: Option<(f64, f64)>,
}

impl Default for EnsembleConfig {
    fn default() -> Self {
        Self {
            size: defaults::ENSEMBLE_SIZE,
            seed: defaults::ENSEMBLE_SEED,
            profile: AmplitudeProfile::Flat,
            band: None,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct RobustnessConfig {
    pub gamma: f64,
    pub nus: Vec<f64>,
    /// Seed of the noise; the clean input is the first ensemble member.
    pub seed: u64,
    pub compare_gammas: (f64, f64),
    pub compare_nu: f64,
}

impl Default for RobustnessConfig {
    fn default() -> Self {
        Self {
            gamma: defaults::ROBUSTNESS_GAMMA,
            nus: defaults::NUS.to_vec(),
            seed: defaults::NOISE_SEED,
            compare_gammas: defaults::TRADEOFF_GAMMAS,
            compare_nu: defaults::TRADEOFF_NU,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct CounterexampleConfig {
    pub a: f64,
    pub seed: u64,
}

impl Default for CounterexampleConfig {
    fn default() -> Self {
        Self {
            a: defaults::COUNTEREXAMPLE_A,
            seed: defaults::COUNTEREXAMPLE_SEED,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct NegativeConfig {
    pub q_bad: f64,
    pub c: f64,
}

impl Default for NegativeConfig {
    fn default() -> Self {
        Self {
            q_bad: defaults::Q_BAD,
            c: defaults::C,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct LemmaConfig {
    pub gammas: Vec<f64>,
    pub omega0: f64,
    pub bracket: (f64, f64),
}

impl Default for LemmaConfig {
    fn default() -> Self {
        Self {
            gammas: defaults::LEMMA_GAMMAS.to_vec(),
            omega0: defaults::LEMMA_OMEGA0,
            bracket: defaults::GAMMA0_BRACKET,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum SignalKind {
    /// Member of the configured class.
    Class,
    /// Band-limited to `omega_bar`.
    Bandlimited,
    /// Slow envelope with exponent `negative.q_bad`.
    Slow,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct SignalConfig {
    pub kind: SignalKind,
    pub omega_bar: f64,
    pub seed: u64,
}

impl Default for SignalConfig {
    fn default() -> Self {
        Self {
            kind: SignalKind::Class,
            omega_bar: 5.0,
            seed: defaults::ENSEMBLE_SEED,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct OutputConfig {
    pub directory: PathBuf,
    pub formats: Vec<Format>,
}

impl Default for OutputConfig {
    fn default() -> Self {
        Self {
            directory: PathBuf::from("out"),
            formats: vec![Format::Csv, Format::Json],
        }
    }
}

/// The complete run configuration; every block is optional in the input file.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct RunConfig {
    pub grid: GridConfig,
    pub kernel: KernelConfig,
    pub class: ClassConfig,
    pub predictor: PredictorConfig,
    pub predict: PredictConfig,
    pub ensemble: EnsembleConfig,
    pub robustness: RobustnessConfig,
    pub counterexample: CounterexampleConfig,
    pub negative: NegativeConfig,
    pub lemma: LemmaConfig,
    pub signal: SignalConfig,
    pub output: OutputConfig,
}

/// Configuration with every module object constructed and checked.
#[derive(Debug, Clone)]
pub struct Validated {
    pub config: RunConfig,
    pub grid: FrequencyGrid,
    pub kernel: AnticausalKernel,
    pub class: DegeneracyClass,
    pub generator: GeneratorConfig,
}

#[derive(Debug)]
pub enum CliError {
    Config(String),
    Io(String),
    Numerical(String),
}

impl CliError {
    pub fn exit_code(&self) -> i32 {
        match self {
            CliError::Config(_) => EXIT_CONFIG,
            CliError::Io(_) => EXIT_IO,
            CliError::Numerical(_) => EXIT_NUMERICAL,
        }
    }

    pub fn message(&self) -> &str {
        match self {
            CliError::Config(m) | CliError::Io(m) | CliError::Numerical(m) => m,
        }
    }
}

impl From<Error> for CliError {
    fn from(e: Error) -> Self {
        CliError::Config(e.to_string())
    }
}

impl From<std::io::Error> for CliError {
    fn from(e: std::io::Error) -> Self {
        CliError::Io(e.to_string())
    }
}

impl From<serde_json::Error> for CliError {
    fn from(e: serde_json::Error) -> Self {
        CliError::Io(e.to_string())
    }
}

/// Parses `value` as JSON, falling back to a plain string.
fn parse_override_value(value: &str) -> Value {
    serde_json::from_str(value).unwrap_or_else(|_| Value::String(value.to_string()))
}

/// Applies `a.b.c=value` to a JSON document, creating intermediate objects.
pub fn apply_override(doc: &mut Value, assignment: &str) -> Result<(), CliError> {
    let (path, value) = assignment
        .split_once('=')
        .ok_or_else(|| CliError::Config(format!("override `{assignment}` must have the form key=value")))?;
    let keys: Vec<&str> = path.split('.').collect();
    if keys.iter().any(|k| k.is_empty()) {
        return Err(CliError::Config(format!("override key `{path}` has an empty component")));
    }
    let mut node = doc;
    for key in &keys[..keys.len() - 1] {
        let obj = node
            .as_object_mut()
            .ok_or_else(|| CliError::Config(format!("override `{path}` descends into a non-object")))?;
        node = obj.entry(key.to_string()).or_insert_with(|| json!({}));
    }
    let obj = node
        .as_object_mut()
        .ok_or_else(|| CliError::Config(format!("override `{path}` descends into a non-object")))?;
    obj.insert(keys[keys.len() - 1].to_string(), parse_override_value(value));
    Ok(())
}

/// Reads, overrides and deserializes the configuration.
pub fn load_config(cli: &Cli) -> Result<RunConfig, CliError> {
    let path = cli
        .config
        .as_ref()
        .ok_or_else(|| CliError::Config("--config PATH is required".into()))?;
    let text = fs::read_to_string(path)
        .map_err(|e| CliError::Config(format!("cannot read config {}: {e}", path.display())))?;
    let mut doc: Value = serde_json::from_str(&text)
        .map_err(|e| CliError::Config(format!("config {} is not valid JSON: {e}", path.display())))?;
    if !doc.is_object() {
        return Err(CliError::Config("config must be a JSON object".into()));
    }
    for assignment in &cli.overrides {
        apply_override(&mut doc, assignment)?;
    }
    let mut config: RunConfig =
        serde_json::from_value(doc).map_err(|e| CliError::Config(format!("invalid config: {e}")))?;
    if let Some(out) = &cli.out {
        config.output.directory = out.clone();
    }
    if let Some(formats) = &cli.format {
        config.output.formats = formats.clone();
    }
    Ok(config)
}

fn require(cond: bool, message: impl FnOnce() -> String) -> Result<(), CliError> {
    if cond {
        Ok(())
    } else {
        Err(CliError::Config(message()))
    }
}

fn positive_list(name: &str, values: &[f64]) -> Result<(), CliError> {
    require(!values.is_empty(), || format!("{name} must not be empty"))?;
    require(values.iter().all(|g| g.is_finite() && *g > 0.0), || {
        format!("{name} must contain positive values, got {values:?}")
    })
}

/// Checks every precondition of every experiment before anything runs.
pub fn validate(config: RunConfig) -> Result<Validated, CliError> {
    let grid = FrequencyGrid::new(config.grid.n, config.grid.delta_t)?;
    let kernel = AnticausalKernel::new(config.kernel.poles.clone(), config.kernel.numerator.clone())?;
    let class = DegeneracyClass::new(config.class.q, config.class.c)?;
    check_exponent(&class, config.predictor.r)?;
    positive_list("predictor.gammas", &config.predictor.gammas)?;
    positive_list("lemma.gammas", &config.lemma.gammas)?;
    require(config.predict.gamma.is_finite() && config.predict.gamma > 0.0, || {
        format!("predict.gamma must be positive, got {}", config.predict.gamma)
    })?;
    require(config.ensemble.size >= 1, || "ensemble.size must be at least 1".into())?;
    let generator = GeneratorConfig::new(
        config.ensemble.seed,
        config.ensemble.profile,
        config.ensemble.band,
        grid,
    )?;
    let rob = &config.robustness;
    require(rob.gamma.is_finite() && rob.gamma > 0.0, || {
        format!("robustness.gamma must be positive, got {}", rob.gamma)
    })?;
    require(rob.nus.iter().all(|nu| nu.is_finite() && *nu >= 0.0), || {
        format!("robustness.nus must be nonnegative, got {:?}", rob.nus)
    })?;
    require(rob.compare_nu.is_finite() && rob.compare_nu >= 0.0, || {
        format!("robustness.compare_nu must be nonnegative, got {}", rob.compare_nu)
    })?;
    positive_list("robustness.compare_gammas", &[rob.compare_gammas.0, rob.compare_gammas.1])?;
    let a = config.counterexample.a;
    require(a > 0.0 && a < grid.omega_max(), || {
        format!("counterexample.a must satisfy 0 < a < omega_max = {}, got {a}", grid.omega_max())
    })?;
    let neg = &config.negative;
    require(neg.q_bad > 0.0 && neg.q_bad < 1.0, || {
        format!("negative.q_bad must lie strictly between 0 and 1, got {}", neg.q_bad)
    })?;
    require(neg.c.is_finite() && neg.c > 0.0, || format!("negative.c must be positive, got {}", neg.c))?;
    let lem = &config.lemma;
    require(lem.omega0.is_finite() && lem.omega0 > 0.0, || {
        format!("lemma.omega0 must be positive, got {}", lem.omega0)
    })?;
    require(lem.bracket.0 > 0.0 && lem.bracket.1 > lem.bracket.0 && lem.bracket.1.is_finite(), || {
        format!("lemma.bracket must satisfy 0 < lo < hi, got {:?}", lem.bracket)
    })?;
    let sig = &config.signal;
    require(sig.omega_bar > 0.0 && sig.omega_bar < grid.omega_max(), || {
        format!(
            "signal.omega_bar must satisfy 0 < omega_bar < omega_max = {}, got {}",
            grid.omega_max(),
            sig.omega_bar
        )
    })?;
    require(!config.output.formats.is_empty(), || "output.formats must not be empty".into())?;
    Ok(Validated {
        config,
        grid,
        kernel,
        class,
        generator,
    })
}

/// Config as embedded in outputs; the output directory is left out so that identical
/// runs written to different places produce identical files.
fn provenance(config: &RunConfig) -> Value {
    let mut v = serde_json::to_value(config).expect("config serializes");
    if let Some(out) = v.get_mut("output").and_then(Value::as_object_mut) {
        out.remove("directory");
    }
    v
}

struct Writer<'a> {
    v: &'a Validated,
    provenance: Value,
    written: Vec<PathBuf>,
}

impl<'a> Writer<'a> {
    fn new(v: &'a Validated) -> Self {
        Self {
            v,
            provenance: provenance(&v.config),
            written: Vec::new(),
        }
    }

    fn wants(&self, f: Format) -> bool {
        self.v.config.output.formats.contains(&f)
    }

    fn dir(&self) -> &std::path::Path {
        &self.v.config.output.directory
    }

    fn csv(&mut self, name: &str, table: &Table) -> Result<(), CliError> {
        if self.wants(Format::Csv) {
            let path = write_file(self.dir(), name, &table.to_csv(&self.provenance))?;
            self.written.push(path);
        }
        Ok(())
    }

    fn json<T: Serialize>(&mut self, name: &str, report: &T) -> Result<(), CliError> {
        if self.wants(Format::Json) {
            let text = to_json(&self.provenance, report)?;
            let path = write_file(self.dir(), name, &text)?;
            self.written.push(path);
        }
        Ok(())
    }

    fn svg(&mut self, name: &str, title: &str, y_label: &str, series: &[Series]) -> Result<(), CliError> {
        if self.wants(Format::Svg) {
            let text = loglog_svg(title, "gamma", y_label, series, &self.provenance);
            let path = write_file(self.dir(), name, &text)?;
            self.written.push(path);
        }
        Ok(())
    }
}

fn series_table(name: &str, x: &TimeSeries) -> Table {
    let mut t = Table::new(&["t", name]);
    for (j, v) in x.samples().iter().enumerate() {
        t.push(vec![x.grid().time(j).into(), v.re.into()]);
    }
    t
}

fn spectrum_table(x: &TimeSeries) -> Table {
    let s = forward_transform(x);
    let grid = *x.grid();
    let mut t = Table::new(&["omega", "re", "im"]);
    let omegas = grid.to_centered(&grid.omegas());
    let values = grid.to_centered(s.values());
    for (w, v) in omegas.iter().zip(values) {
        t.push(vec![(*w).into(), v.re.into(), v.im.into()]);
    }
    t
}

fn ensure_finite(label: &str, values: &[(&str, f64)]) -> Result<(), CliError> {
    let bad: Vec<String> = values
        .iter()
        .filter(|(_, v)| !v.is_finite())
        .map(|(n, v)| format!("{n} = {v}"))
        .collect();
    if bad.is_empty() {
        Ok(())
    } else {
        Err(CliError::Numerical(format!("{label}: non-finite {}", bad.join(", "))))
    }
}

fn cmd_predict(v: &Validated, w: &mut Writer) -> Result<(), CliError> {
    let cfg = v.generator.with_seed(v.config.predict.seed);
    let x = sample_class_member(&v.class, &cfg);
    let pt = build_predictor(&v.kernel, v.config.predict.gamma, v.config.predictor.r, &v.grid)?;
    let y = apply_anticausal(&v.kernel, &x);
    let yhat = predict(&pt, &x)?;
    let e2 = prediction_error(&v.kernel, &pt, &x, Norm::L2)?;
    let einf = prediction_error(&v.kernel, &pt, &x, Norm::Sup)?;
    let defect = causality_defect(&pt);
    let summary = json!({
        "predictor": pt.descriptor(),
        "seed": cfg.seed(),
        "err_l2": e2.abs,
        "err_l2_rel": e2.rel,
        "err_sup": einf.abs,
        "err_sup_rel": einf.rel,
        "kappa_sup": pt.kappa_sup(),
        "kappa_sup_off_dc": pt.kappa_sup_off_dc(),
        "log_kappa_dc": pt.log_kappa_dc(),
        "saturated": pt.saturated(),
        "omega_threshold": pt.omega_threshold(),
        "causality_defect": defect,
    });
    w.csv("x.csv", &series_table("x", &x))?;
    w.csv("y.csv", &series_table("y", &y))?;
    w.csv("yhat.csv", &series_table("yhat", &yhat))?;
    w.csv("khat.csv", &series_table("khat", pt.khat_time()))?;
    w.json("predict_summary.json", &summary)?;
    ensure_finite(
        "predict",
        &[
            ("err_l2", e2.abs),
            ("err_sup", einf.abs),
            ("kappa_sup", pt.kappa_sup()),
            ("causality_defect", defect),
        ],
    )
}

fn sweep_table(rows: &[SweepRow]) -> Table {
    let mut t = Table::new(&[
        "gamma",
        "err_l2_abs",
        "err_l2_rel",
        "err_sup_abs",
        "err_sup_rel",
        "kappa_sup",
        "kappa_sup_off_dc",
        "log_kappa_dc",
        "saturated",
        "omega_threshold",
        "causality_defect",
        "orthogonality_residual",
        "i1",
        "i2",
        "i1_rho1",
        "i2_rho1",
    ]);
    for r in rows {
        t.push(vec![
            r.gamma.into(),
            r.err_l2_abs.into(),
            r.err_l2_rel.into(),
            r.err_sup_abs.into(),
            r.err_sup_rel.into(),
            r.kappa_sup.into(),
            r.kappa_sup_off_dc.into(),
            r.log_kappa_dc.into(),
            r.saturated.into(),
            r.omega_threshold.into(),
            r.causality_defect.into(),
            r.orthogonality_residual.into(),
            r.i1.into(),
            r.i2.into(),
            r.i1_rho1.into(),
            r.i2_rho1.into(),
        ]);
    }
    t
}

fn sweep_finite(label: &str, rows: &[SweepRow]) -> Result<(), CliError> {
    for r in rows {
        ensure_finite(
            label,
            &[
                ("err_l2_rel", r.err_l2_rel),
                ("err_sup_rel", r.err_sup_rel),
                ("i1", r.i1),
                ("i2", r.i2),
                ("causality_defect", r.causality_defect),
                ("orthogonality_residual", r.orthogonality_residual),
            ],
        )?;
    }
    Ok(())
}

fn cmd_sweep(v: &Validated, w: &mut Writer) -> Result<(), CliError> {
    let ens = class_ensemble(&v.class, &v.generator, v.config.ensemble.size);
    let seeds = ensemble_seeds(v.generator.seed(), v.config.ensemble.size);
    let report = gamma_sweep(&v.kernel, &v.class, &v.config.predictor.gammas, v.config.predictor.r, &ens, &seeds)?;
    w.csv("sweep.csv", &sweep_table(&report.rows))?;
    w.json("sweep.json", &report)?;
    let pick = |f: fn(&SweepRow) -> f64| report.rows.iter().map(|r| (r.gamma, f(r))).collect();
    w.svg(
        "sweep.svg",
        "worst-case relative prediction error",
        "relative error",
        &[
            Series { label: "L2".into(), points: pick(|r| r.err_l2_rel) },
            Series { label: "sup".into(), points: pick(|r| r.err_sup_rel) },
        ],
    )?;
    sweep_finite("sweep", &report.rows)
}

#[derive(Serialize)]
struct LemmaOutput {
    reports: Vec<LemmaReport>,
    positivity_all: bool,
    convergence_strictly_decreasing: bool,
    gamma0: f64,
    gamma0_at_lower_bracket: bool,
    low_band_all_at_or_above_gamma0: bool,
}

fn cmd_lemma(v: &Validated, w: &mut Writer) -> Result<(), CliError> {
    let lc = &v.config.lemma;
    let mut gammas = lc.gammas.clone();
    gammas.sort_by(f64::total_cmp);
    let mut reports = Vec::new();
    for &g in &gammas {
        let pt = build_predictor(&v.kernel, g, v.config.predictor.r, &v.grid)?;
        reports.push(lemma_check(&pt, &v.class, lc.omega0));
    }
    let gamma0 = locate_gamma0(&v.kernel, v.config.predictor.r, &v.class, &v.grid, lc.bracket)?;
    let out = LemmaOutput {
        positivity_all: reports.iter().all(|r| r.positivity.pass),
        convergence_strictly_decreasing: reports
            .windows(2)
            .all(|p| p[1].convergence.log_max_v_minus_one < p[0].convergence.log_max_v_minus_one),
        gamma0,
        gamma0_at_lower_bracket: gamma0 == lc.bracket.0,
        low_band_all_at_or_above_gamma0: gammas
            .iter()
            .filter(|g| **g >= gamma0)
            .all(|&g| low_band_check(&v.kernel, g, v.config.predictor.r, &v.class, &v.grid).pass),
        reports,
    };
    let mut t = Table::new(&[
        "gamma",
        "omega_threshold",
        "positivity_pass",
        "nodes_checked",
        "min_real_part",
        "max_modulus",
        "max_v_minus_one",
        "log_max_v_minus_one",
        "low_band_pass",
        "low_band_max_log_ratio",
    ]);
    for r in &out.reports {
        t.push(vec![
            r.gamma.into(),
            r.omega_threshold.into(),
            r.positivity.pass.into(),
            r.positivity.nodes_checked.into(),
            r.positivity.min_real_part.into(),
            r.positivity.max_modulus.into(),
            r.convergence.max_v_minus_one.into(),
            r.convergence.log_max_v_minus_one.into(),
            r.low_band.pass.into(),
            r.low_band.max_log_ratio.into(),
        ]);
    }
    w.csv("lemma.csv", &t)?;
    w.json("lemma.json", &out)?;
    for r in &out.reports {
        ensure_finite("lemma", &[("log_max_v_minus_one", r.convergence.log_max_v_minus_one)])?;
    }
    Ok(())
}

#[derive(Serialize)]
struct RobustnessOutput {
    main: crate::experiments::RobustnessReport,
    tradeoff: Value,
}

fn cmd_robustness(v: &Validated, w: &mut Writer) -> Result<(), CliError> {
    let rc = &v.config.robustness;
    let x0 = sample_class_member(&v.class, &v.generator);
    let noise_cfg = v.generator.with_seed(rc.seed);
    let r = v.config.predictor.r;
    let main = robustness_experiment(&v.kernel, rc.gamma, r, &x0, &rc.nus, &noise_cfg)?;
    let (g_small, g_large) = rc.compare_gammas;
    let small = robustness_experiment(&v.kernel, g_small, r, &x0, &[rc.compare_nu], &noise_cfg)?;
    let large = robustness_experiment(&v.kernel, g_large, r, &x0, &[rc.compare_nu], &noise_cfg)?;
    let (err_small, err_large) = (small.rows[0].err_sup_noisy, large.rows[0].err_sup_noisy);
    let tradeoff = json!({
        "nu": rc.compare_nu,
        "gamma_small": g_small,
        "gamma_large": g_large,
        "err_small": err_small,
        "err_large": err_large,
        "larger_gamma_worse": err_large > err_small,
        "kappa_small": small.kappa_sup,
        "kappa_large": large.kappa_sup,
    });
    let mut t = Table::new(&["nu", "err_sup_noisy", "bound", "bound_with_slack", "holds", "j0", "j_eta", "bound_off_dc"]);
    for row in &main.rows {
        t.push(vec![
            row.nu.into(),
            row.err_sup_noisy.into(),
            row.bound.into(),
            row.bound_with_slack.into(),
            row.holds.into(),
            row.j0.into(),
            row.j_eta.into(),
            row.bound_off_dc.into(),
        ]);
    }
    w.csv("robustness.csv", &t)?;
    let mut checks: Vec<(&str, f64)> = vec![("err_small", err_small), ("err_large", err_large)];
    for row in &main.rows {
        checks.push(("err_sup_noisy", row.err_sup_noisy));
        checks.push(("bound", row.bound));
    }
    w.json("robustness.json", &RobustnessOutput { main, tradeoff })?;
    ensure_finite("robustness", &checks)
}

fn cmd_counterexample(v: &Validated, w: &mut Writer) -> Result<(), CliError> {
    let cc = &v.config.counterexample;
    let cfg = v.generator.with_seed(cc.seed);
    let report = counterexample_experiment(cc.a, &v.kernel, &v.config.predictor.gammas, v.config.predictor.r, &cfg)?;
    let mut t = Table::new(&["gamma", "e1", "e2", "identity_lhs", "identity_rhs", "residual"]);
    let mut checks = Vec::new();
    for r in &report.rows {
        t.push(vec![
            r.gamma.into(),
            r.e1.into(),
            r.e2.into(),
            r.identity_lhs.into(),
            r.identity_rhs.into(),
            r.residual.into(),
        ]);
        checks.extend([("e1", r.e1), ("e2", r.e2), ("identity_lhs", r.identity_lhs), ("identity_rhs", r.identity_rhs)]);
    }
    w.csv("counterexample.csv", &t)?;
    w.json("counterexample.json", &report)?;
    let pick = |f: fn(&crate::experiments::CounterexampleRow) -> f64| {
        report.rows.iter().map(|r| (r.gamma, f(r))).collect()
    };
    w.svg(
        "counterexample.svg",
        "errors on the two halves of a unit-modulus spectrum",
        "L2 error",
        &[
            Series { label: "e1".into(), points: pick(|r| r.e1) },
            Series { label: "e2".into(), points: pick(|r| r.e2) },
        ],
    )?;
    ensure_finite("counterexample", &checks)
}

fn cmd_demo_negative(v: &Validated, w: &mut Writer) -> Result<(), CliError> {
    let nc = &v.config.negative;
    let report = nonpredictability_demo(
        nc.q_bad,
        nc.c,
        &v.kernel,
        &v.config.predictor.gammas,
        v.config.predictor.r,
        &v.generator,
        v.config.ensemble.size,
    )?;
    let mut t = Table::new(&["gamma", "err_l2_rel_slow", "err_l2_rel_reference", "err_sup_rel_slow", "err_sup_rel_reference"]);
    for (s, r) in report.slow.iter().zip(&report.reference) {
        t.push(vec![s.gamma.into(), s.err_l2_rel.into(), r.err_l2_rel.into(), s.err_sup_rel.into(), r.err_sup_rel.into()]);
    }
    w.csv("negative.csv", &t)?;
    w.json("negative.json", &report)?;
    let pick = |rows: &[SweepRow]| rows.iter().map(|r| (r.gamma, r.err_l2_rel)).collect();
    w.svg(
        "negative.svg",
        "ILLUSTRATIVE: slow against fast degeneracy",
        "relative L2 error",
        &[
            Series { label: format!("q = {}", nc.q_bad), points: pick(&report.slow) },
            Series { label: "q = 2".into(), points: pick(&report.reference) },
        ],
    )?;
    ensure_finite(
        "demo-negative",
        &[
            ("final_error_slow", report.final_error_slow),
            ("final_error_reference", report.final_error_reference),
        ],
    )
}

fn cmd_gen_signal(v: &Validated, w: &mut Writer) -> Result<(), CliError> {
    let sc = &v.config.signal;
    let cfg = v.generator.with_seed(sc.seed);
    let x = match sc.kind {
        SignalKind::Class => sample_class_member(&v.class, &cfg),
        SignalKind::Bandlimited => sample_bandlimited(sc.omega_bar, &cfg)?,
        SignalKind::Slow => {
            let env = SpectralEnvelope::new(v.config.negative.q_bad, v.config.negative.c)?;
            sample_enveloped(&env, &cfg)
        }
    };
    let cn = class_norm(&x, &v.class);
    w.csv("signal.csv", &series_table("x", &x))?;
    w.csv("spectrum.csv", &spectrum_table(&x))?;
    w.json(
        "signal.json",
        &json!({
            "kind": sc.kind,
            "seed": sc.seed,
            "class_norm_ln": if cn.ln.is_finite() { json!(cn.ln) } else { json!(cn.ln.to_string()) },
            "member": cn.is_member(),
        }),
    )?;
    Ok(())
}

/// Runs one subcommand on a validated configuration and returns the written files.
pub fn execute(command: Command, v: &Validated) -> Result<Vec<PathBuf>, CliError> {
    let mut w = Writer::new(v);
    let result = match command {
        Command::Predict => cmd_predict(v, &mut w),
        Command::Sweep => cmd_sweep(v, &mut w),
        Command::Lemma => cmd_lemma(v, &mut w),
        Command::Robustness => cmd_robustness(v, &mut w),
        Command::Counterexample => cmd_counterexample(v, &mut w),
        Command::DemoNegative => cmd_demo_negative(v, &mut w),
        Command::GenSignal => cmd_gen_signal(v, &mut w),
    };
    result.map(|_| w.written)
}

/// Entry point shared by the binary and the tests; returns the process exit code.
pub fn run<I, T>(args: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(cli) => cli,
        Err(e) => {
            let _ = e.print();
            return if e.use_stderr() { EXIT_CONFIG } else { EXIT_OK };
        }
    };
    let outcome = load_config(&cli)
        .and_then(validate)
        .and_then(|v| execute(cli.command, &v));
    match outcome {
        Ok(files) => {
            for f in files {
                println!("{}", f.display());
            }
            EXIT_OK
        }
        Err(e) => {
            eprintln!("error: {}", e.message());
            e.exit_code()
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn overrides_set_nested_values() {
        let mut doc = json!({"predictor": {"r": 4}});
        apply_override(&mut doc, "predictor.r=2.5").unwrap();
        apply_override(&mut doc, "grid.n=1024").unwrap();
        apply_override(&mut doc, "signal.kind=bandlimited").unwrap();
        apply_override(&mut doc, "predictor.gammas=[1,2]").unwrap();
        assert_eq!(doc["predictor"]["r"], 2.5);
        assert_eq!(doc["grid"]["n"], 1024);
        assert_eq!(doc["signal"]["kind"], "bandlimited");
        assert_eq!(doc["predictor"]["gammas"], json!([1, 2]));
        assert!(apply_override(&mut doc, "noequals").is_err());
        assert!(apply_override(&mut doc, "predictor.r.x=1").is_err());
        assert!(apply_override(&mut doc, "a..b=1").is_err());
    }

    #[test]
    fn defaults_validate() {
        let v = validate(RunConfig::default()).unwrap();
        assert_eq!(v.grid.n(), 1 << 16);
        assert_eq!(v.config.predictor.gammas, defaults::GAMMAS.to_vec());
    }

    #[test]
    fn unknown_keys_rejected() {
        assert!(serde_json::from_value::<RunConfig>(json!({"grid": {"m": 3}})).is_err());
        assert!(serde_json::from_value::<RunConfig>(json!({"extra": 1})).is_err());
        assert!(serde_json::from_value::<RunConfig>(json!({"grid": {"n": 1024}})).is_ok());
    }

    #[test]
    fn validation_failures_are_config_errors() {
        let mut c = RunConfig::default();
        c.predictor.r = 2.0;
        let err = validate(c).unwrap_err();
        assert_eq!(err.exit_code(), EXIT_CONFIG);
        assert!(err.message().contains("r > 2/(q-1)"));

        let mut c = RunConfig::default();
        c.predictor.gammas.clear();
        assert_eq!(validate(c).unwrap_err().exit_code(), EXIT_CONFIG);

        let mut c = RunConfig::default();
        c.grid.n = 1000;
        assert_eq!(validate(c).unwrap_err().exit_code(), EXIT_CONFIG);

        let mut c = RunConfig::default();
        c.negative.q_bad = 1.0;
        assert_eq!(validate(c).unwrap_err().exit_code(), EXIT_CONFIG);
    }

    #[test]
    fn provenance_omits_directory() {
        let mut a = RunConfig::default();
        a.output.directory = "x".into();
        let mut b = RunConfig::default();
        b.output.directory = "y".into();
        assert_eq!(provenance(&a), provenance(&b));
        assert!(provenance(&a)["output"].get("formats").is_some());
    }

    #[test]
    fn non_finite_values_are_numerical_failures() {
        let err = ensure_finite("x", &[("a", 1.0), ("b", f64::INFINITY)]).unwrap_err();
        assert_eq!(err.exit_code(), EXIT_NUMERICAL);
        assert!(ensure_finite("x", &[("a", 1.0)]).is_ok());
    }
}
