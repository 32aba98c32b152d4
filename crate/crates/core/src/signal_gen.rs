//! Seeded test inputs: degenerate-spectrum class members, band-limited signals, the
//! unit-modulus counterexample pair and L1-calibrated spectral noise.
//!
//! Class members are built in the frequency domain as
//! `X(iw) = A(w) exp(-c / |w|^q) S(w) / max|S|`, where `S(w) = sum_p b_p e^{-i w tau_p}`
//! is a short random train of shifts. The envelope is smooth and flat to all orders at
//! `w = 0`, so each shifted copy is well localized in time and the shifts `tau_p` keep the
//! signal inside the middle of the window without any time-domain taper.

use std::f64::consts::PI;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha20Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::predictor::DegeneracyClass;
use crate::spectral::{
    analysis_spectrum, hermitian_symmetrize, inverse_transform, rounding_floor, spectrum_l1,
    Complex64, FrequencyGrid, Spectrum, TimeSeries,
};

/// Number of shifted copies in a generated wave train.
const PACKETS: usize = 8;

/// Spectral amplitude profile `A(w)`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "lowercase", deny_unknown_fields)]
pub enum AmplitudeProfile {
    Flat,
    Gaussian { sigma: f64 },
}

impl AmplitudeProfile {
    pub fn at(&self, omega: f64) -> f64 {
        match *self {
            AmplitudeProfile::Flat => 1.0,
            AmplitudeProfile::Gaussian { sigma } => (-0.5 * (omega / sigma).powi(2)).exp(),
        }
    }

    /// `max A`, attained at `w = 0` for both profiles.
    pub fn peak(&self) -> f64 {
        1.0
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct GeneratorConfig {
    seed: u64,
    amplitude_profile: AmplitudeProfile,
    band: Option<(f64, f64)>,
    grid: FrequencyGrid,
}

impl GeneratorConfig {
    pub fn new(
        seed: u64,
        amplitude_profile: AmplitudeProfile,
        band: Option<(f64, f64)>,
        grid: FrequencyGrid,
    ) -> Result<Self> {
        if let AmplitudeProfile::Gaussian { sigma } = amplitude_profile {
            if !(sigma.is_finite() && sigma > 0.0) {
                return Err(Error::InvalidParameter(format!(
                    "gaussian profile width must be positive, got {sigma}"
                )));
            }
        }
        if let Some((lo, hi)) = band {
            if !(lo > 0.0 && hi > lo && hi < grid.omega_max()) {
                return Err(Error::InvalidParameter(format!(
                    "band [{lo}, {hi}] must satisfy 0 < lo < hi < omega_max = {}",
                    grid.omega_max()
                )));
            }
        }
        Ok(Self {
            seed,
            amplitude_profile,
            band,
            grid,
        })
    }

    /// Flat profile, no band restriction.
    pub fn flat(seed: u64, grid: FrequencyGrid) -> Self {
        Self {
            seed,
            amplitude_profile: AmplitudeProfile::Flat,
            band: None,
            grid,
        }
    }

    pub fn with_seed(&self, seed: u64) -> Self {
        Self { seed, ..self.clone() }
    }

    pub fn seed(&self) -> u64 {
        self.seed
    }

    pub fn amplitude_profile(&self) -> AmplitudeProfile {
        self.amplitude_profile
    }

    pub fn band(&self) -> Option<(f64, f64)> {
        self.band
    }

    pub fn grid(&self) -> &FrequencyGrid {
        &self.grid
    }

    fn rng(&self) -> ChaCha20Rng {
        ChaCha20Rng::seed_from_u64(self.seed)
    }

    fn in_band(&self, omega: f64) -> bool {
        self.band
            .map_or(true, |(lo, hi)| (lo..=hi).contains(&omega.abs()))
    }
}

/// Envelope `exp(-c / |w|^q)` for any `q > 0`, `c > 0`.
///
/// Unlike [`DegeneracyClass`] this admits `q <= 1`, which is needed to generate the slowly
/// degenerating inputs of the negative illustration.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct SpectralEnvelope {
    q: f64,
    c: f64,
}

impl SpectralEnvelope {
    pub fn new(q: f64, c: f64) -> Result<Self> {
        if !(q.is_finite() && q > 0.0 && c.is_finite() && c > 0.0) {
            return Err(Error::InvalidParameter(format!(
                "envelope needs q > 0 and c > 0, got q = {q}, c = {c}"
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

    /// `ln` of the envelope, `-inf` at `w = 0`.
    pub fn log_at(&self, omega: f64) -> f64 {
        if omega == 0.0 {
            f64::NEG_INFINITY
        } else {
            -self.c / omega.abs().powf(self.q)
        }
    }
}

impl From<DegeneracyClass> for SpectralEnvelope {
    fn from(cls: DegeneracyClass) -> Self {
        Self {
            q: cls.q(),
            c: cls.c(),
        }
    }
}

/// `h(w) = exp(c / |w|^q)`, `+inf` at `w = 0` and wherever it overflows.
pub fn weight_h(omega: f64, cls: &DegeneracyClass) -> f64 {
    cls.log_weight(omega).exp()
}

/// `sup_k |X(iw_k)| h(w_k)`, carried as its logarithm.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct ClassNorm {
    pub ln: f64,
}

impl ClassNorm {
    pub fn value(&self) -> f64 {
        self.ln.exp()
    }

    pub fn is_member(&self) -> bool {
        self.ln < f64::INFINITY
    }
}

/// Class norm of a sampled spectrum; values at or below `floor` count as zero.
pub fn class_norm_spectrum(spectrum: &Spectrum, cls: &DegeneracyClass, floor: f64) -> ClassNorm {
    let grid = spectrum.grid();
    let floor = floor.max(1e-300);
    let ln = spectrum
        .values()
        .iter()
        .enumerate()
        .filter(|(_, v)| v.norm() > floor)
        .map(|(k, v)| v.norm().ln() + cls.log_weight(grid.omega(k)))
        .fold(f64::NEG_INFINITY, f64::max);
    ClassNorm { ln }
}

/// `sup |X(iw)| h(w)` over the grid nodes of a sampled signal.
///
/// Spectral values below the transform's rounding floor are treated as zero; without this
/// the rounding residue at tiny `|w|` would be multiplied by an astronomically large weight.
pub fn class_norm(x: &TimeSeries, cls: &DegeneracyClass) -> ClassNorm {
    class_norm_spectrum(&analysis_spectrum(x), cls, rounding_floor(x))
}

/// `S(w_k) = sum_p b_p e^{-i w_k tau_p} / max_k |S|`, with shifts on grid times in the
/// middle quarter of the window.
fn wave_train(grid: &FrequencyGrid, rng: &mut ChaCha20Rng) -> Vec<Complex64> {
    let n = grid.n();
    let reach = (n / 8) as i64;
    let shifts: Vec<(f64, f64)> = (0..PACKETS)
        .map(|_| {
            let j = rng.gen_range(-reach..=reach);
            let b = rng.gen_range(-1.0..=1.0);
            (j as f64 * grid.delta_t(), b)
        })
        .collect();
    let s: Vec<Complex64> = (0..n)
        .map(|k| {
            let w = grid.omega(k);
            shifts
                .iter()
                .map(|&(tau, b)| Complex64::from_polar(b, -w * tau))
                .sum()
        })
        .collect();
    let peak = s.iter().map(|z| z.norm()).fold(0.0, f64::max);
    if peak == 0.0 {
        return vec![Complex64::new(1.0, 0.0); n];
    }
    s.into_iter().map(|z| z / peak).collect()
}

fn realize(grid: &FrequencyGrid, values: Vec<Complex64>) -> TimeSeries {
    let mut spectrum = Spectrum::new(*grid, values).expect("grid-sized spectrum");
    spectrum.values_mut()[0] = Complex64::new(0.0, 0.0);
    inverse_transform(&hermitian_symmetrize(&spectrum)).to_real()
}

/// Member of the envelope's class with `|X(iw)| <= A(w) exp(-c / |w|^q)` and `X(0) = 0`.
pub fn sample_enveloped(env: &SpectralEnvelope, cfg: &GeneratorConfig) -> TimeSeries {
    let grid = cfg.grid();
    let mut rng = cfg.rng();
    let train = wave_train(grid, &mut rng);
    let values = (0..grid.n())
        .map(|k| {
            let w = grid.omega(k);
            if w == 0.0 || !cfg.in_band(w) {
                return Complex64::new(0.0, 0.0);
            }
            train[k] * (cfg.amplitude_profile.at(w) * env.log_at(w).exp())
        })
        .collect();
    realize(grid, values)
}

/// Seeded member of `X(q, c)` whose class norm is at most `max A`.
pub fn sample_class_member(cls: &DegeneracyClass, cfg: &GeneratorConfig) -> TimeSeries {
    sample_enveloped(&SpectralEnvelope::from(*cls), cfg)
}

/// Real signal with spectrum supported on `0 < |w| <= omega_bar`, shaped by
/// `cos^2(pi |w| / (2 (omega_bar + dw)))` times the amplitude profile.
///
/// When `omega_bar < dw` no nonzero node lies in the band; the `+-dw` pair is then used,
/// giving a single sinusoid at the lowest resolvable frequency.
pub fn sample_bandlimited(omega_bar: f64, cfg: &GeneratorConfig) -> Result<TimeSeries> {
    let grid = cfg.grid();
    if !(omega_bar > 0.0 && omega_bar < grid.omega_max()) {
        return Err(Error::InvalidParameter(format!(
            "band limit must satisfy 0 < omega_bar < omega_max = {}, got {omega_bar}",
            grid.omega_max()
        )));
    }
    let dw = grid.d_omega();
    let mut rng = cfg.rng();
    let train = wave_train(grid, &mut rng);
    let values = (0..grid.n())
        .map(|k| {
            let w = grid.omega(k).abs();
            let weight = if omega_bar < dw {
                if k == 1 || k == grid.n() - 1 {
                    1.0
                } else {
                    0.0
                }
            } else if w > 0.0 && w <= omega_bar {
                (PI * w / (2.0 * (omega_bar + dw))).cos().powi(2) * cfg.amplitude_profile.at(w)
            } else {
                0.0
            };
            train[k] * weight
        })
        .collect();
    Ok(realize(grid, values))
}

/// The two halves of a unit-modulus spectrum split at `|w| = a`.
#[derive(Debug, Clone)]
pub struct CounterexamplePair {
    /// Inverse of `1{|w| < a} X`.
    pub x1: TimeSeries,
    /// Inverse of `1{|w| >= a} X`.
    pub x2: TimeSeries,
    /// The unit-modulus spectrum `X`.
    pub spectrum: Spectrum,
}

/// Random-phase hermitian spectrum with `|X(iw_k)| = 1` at every node, split into the
/// band `(-a, a)` and its complement.
pub fn counterexample_pair(a: f64, cfg: &GeneratorConfig) -> Result<CounterexamplePair> {
    let grid = cfg.grid();
    if !(a > 0.0 && a < grid.omega_max()) {
        return Err(Error::InvalidParameter(format!(
            "split frequency must satisfy 0 < a < omega_max = {}, got {a}",
            grid.omega_max()
        )));
    }
    let n = grid.n();
    let mut rng = cfg.rng();
    let mut values = vec![Complex64::new(0.0, 0.0); n];
    let sign = |rng: &mut ChaCha20Rng| if rng.gen::<bool>() { 1.0 } else { -1.0 };
    values[0] = Complex64::new(sign(&mut rng), 0.0);
    values[n / 2] = Complex64::new(sign(&mut rng), 0.0);
    for k in 1..n / 2 {
        let v = Complex64::from_polar(1.0, 2.0 * PI * rng.gen::<f64>());
        values[k] = v;
        values[n - k] = v.conj();
    }
    let spectrum = Spectrum::new(*grid, values)?;
    let split = |inside: bool| {
        let part = (0..n)
            .map(|k| {
                if (grid.omega(k).abs() < a) == inside {
                    spectrum.values()[k]
                } else {
                    Complex64::new(0.0, 0.0)
                }
            })
            .collect();
        inverse_transform(&Spectrum::new(*grid, part).expect("grid-sized spectrum")).to_real()
    };
    Ok(CounterexamplePair {
        x1: split(true),
        x2: split(false),
        spectrum,
    })
}

/// Adds noise whose spectrum has flat magnitude on every node except `w = 0` and the
/// Nyquist node, scaled so that `dw sum |N| = nu`.
///
/// The phases depend only on the seed, so changing `nu` rescales one fixed noise shape.
pub fn add_noise(
    x: &TimeSeries,
    nu: f64,
    cfg: &GeneratorConfig,
) -> Result<(TimeSeries, Spectrum)> {
    if !(nu.is_finite() && nu >= 0.0) {
        return Err(Error::InvalidParameter(format!(
            "noise intensity must be nonnegative, got {nu}"
        )));
    }
    let grid = x.grid();
    if grid != cfg.grid() {
        return Err(Error::GridMismatch);
    }
    let n = grid.n();
    let half = n / 2 - 1;
    let magnitude = nu / (2.0 * half as f64 * grid.d_omega());
    let mut rng = cfg.rng();
    let mut values = vec![Complex64::new(0.0, 0.0); n];
    for k in 1..=half {
        let v = Complex64::from_polar(magnitude, 2.0 * PI * rng.gen::<f64>());
        values[k] = v;
        values[n - k] = v.conj();
    }
    let noise = Spectrum::new(*grid, values)?;
    let eta = inverse_transform(&noise).to_real();
    Ok((x.checked_add(&eta)?, noise))
}

/// `spectrum_l1` of the returned noise, for reporting.
pub fn noise_intensity(noise: &Spectrum) -> f64 {
    spectrum_l1(noise)
}
