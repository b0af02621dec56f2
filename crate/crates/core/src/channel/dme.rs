//! Distance Measuring Equipment pulse-pair interference.

use std::f64::consts::PI;
use std::fmt::Write as _;
use std::path::Path;

use num_complex::Complex64;
use rand::Rng;
use rand_distr::{Distribution, Exp};

use crate::config::{parse_list, KvConfig};
use crate::error::{invalid, Result};
use crate::filter::SAMPLE_RATE_HZ;

#[derive(Debug, Clone, PartialEq)]
pub struct DmeConfig {
    /// Half-amplitude (full width at half maximum) pulse width in µs.
    pub pulse_half_width_us: f64,
    pub pair_spacing_us: f64,
    /// Pulse pairs per second for each interferer.
    pub pulse_pair_rate: f64,
    /// One interferer per entry, offset from the LDACS centre in Hz.
    pub carrier_offsets_hz: Vec<f64>,
    /// Total interference power relative to the signal, dB.
    pub power_ratio_db: f64,
}

impl Default for DmeConfig {
    fn default() -> Self {
        Self {
            pulse_half_width_us: 3.5,
            pair_spacing_us: 12.0,
            pulse_pair_rate: 2700.0,
            carrier_offsets_hz: vec![-0.5e6, 0.5e6],
            power_ratio_db: 0.0,
        }
    }
}

impl DmeConfig {
    pub fn with_power(power_ratio_db: f64) -> Self {
        Self { power_ratio_db, ..Self::default() }
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.pulse_half_width_us > 0.0) {
            return Err(invalid("DME pulse width must be positive"));
        }
        if !(self.pair_spacing_us > self.pulse_half_width_us) {
            return Err(invalid("DME pair spacing must exceed the pulse width"));
        }
        if !(self.pulse_pair_rate > 0.0) || !self.pulse_pair_rate.is_finite() {
            return Err(invalid("DME pulse pair rate must be positive"));
        }
        if !self.power_ratio_db.is_finite() {
            return Err(invalid("DME power ratio must be finite"));
        }
        if self.carrier_offsets_hz.iter().any(|f| f.abs() >= SAMPLE_RATE_HZ / 2.0) {
            return Err(invalid("DME carrier offset outside the simulated band"));
        }
        Ok(())
    }

    /// Gaussian exponent `alpha` in samples^-2 for `g[n] = exp(-alpha n^2 / 2)`.
    pub fn alpha(&self) -> f64 {
        let w = self.pulse_half_width_us * 1e-6 * SAMPLE_RATE_HZ;
        8.0 * std::f64::consts::LN_2 / (w * w)
    }

    pub fn pair_spacing_samples(&self) -> usize {
        (self.pair_spacing_us * 1e-6 * SAMPLE_RATE_HZ).round() as usize
    }

    pub fn power_linear(&self) -> f64 {
        10f64.powf(self.power_ratio_db / 10.0)
    }

    /// Keys: `pulse_half_width_us`, `pair_spacing_us`, `pulse_pair_rate`,
    /// `carrier_offsets_hz` (list), `power_ratio_db`.
    pub fn from_kv(cfg: &KvConfig, section: &str) -> Result<Self> {
        let d = Self::default();
        let c = Self {
            pulse_half_width_us: cfg.parsed_or(section, "pulse_half_width_us", d.pulse_half_width_us)?,
            pair_spacing_us: cfg.parsed_or(section, "pair_spacing_us", d.pair_spacing_us)?,
            pulse_pair_rate: cfg.parsed_or(section, "pulse_pair_rate", d.pulse_pair_rate)?,
            carrier_offsets_hz: match cfg.lookup(section, "carrier_offsets_hz") {
                Some(v) => parse_list(v)?,
                None => d.carrier_offsets_hz,
            },
            power_ratio_db: cfg.parsed_or(section, "power_ratio_db", d.power_ratio_db)?,
        };
        c.validate()?;
        Ok(c)
    }

    pub fn to_text(&self) -> String {
        let mut s = String::new();
        let _ = writeln!(s, "pulse_half_width_us = {}", self.pulse_half_width_us);
        let _ = writeln!(s, "pair_spacing_us = {}", self.pair_spacing_us);
        let _ = writeln!(s, "pulse_pair_rate = {}", self.pulse_pair_rate);
        let offs: Vec<String> = self.carrier_offsets_hz.iter().map(|f| f.to_string()).collect();
        let _ = writeln!(s, "carrier_offsets_hz = {}", offs.join(", "));
        let _ = writeln!(s, "power_ratio_db = {}", self.power_ratio_db);
        s
    }

    pub fn load(path: &Path) -> Result<Self> {
        Self::from_kv(&KvConfig::load(path)?, "")
    }
}

/// Pair start times (samples) from a Poisson process at `rate_per_sample`,
/// beginning `lead` samples before zero so the signal is stationary from
/// the first output sample.
pub fn pair_arrivals<R: Rng + ?Sized>(len: usize, rate_per_sample: f64, lead: f64, rng: &mut R) -> Vec<f64> {
    if !(rate_per_sample > 0.0) {
        return Vec::new();
    }
    let exp = Exp::new(rate_per_sample).expect("positive rate");
    let mut t = -lead;
    let mut out = Vec::new();
    loop {
        t += exp.sample(rng);
        if t >= len as f64 {
            break;
        }
        out.push(t.round());
    }
    out
}

/// Adds one pulse pair starting at `t0` with amplitude `a`, carrier
/// `f` (cycles/sample) and phase `phi`.
pub fn add_pulse_pair(out: &mut [Complex64], t0: f64, spacing: usize, alpha: f64, a: f64, f: f64, phi: f64) {
    let half = (12.0 / alpha).sqrt().ceil() as i64;
    for c in [t0 as i64, t0 as i64 + spacing as i64] {
        let lo = (c - half).max(0);
        let hi = (c + half).min(out.len() as i64 - 1);
        for n in lo..=hi {
            let d = (n - c) as f64;
            let g = a * (-alpha * d * d / 2.0).exp();
            out[n as usize] += Complex64::from_polar(g, 2.0 * PI * f * n as f64 + phi);
        }
    }
}

/// DME interference of `len` samples at total power
/// `signal_power * 10^(power_ratio_db/10)`, split evenly between the
/// configured interferers.
pub fn generate_dme<R: Rng + ?Sized>(
    len: usize,
    cfg: &DmeConfig,
    signal_power: f64,
    rng: &mut R,
) -> Result<Vec<Complex64>> {
    cfg.validate()?;
    let mut out = vec![Complex64::new(0.0, 0.0); len];
    if cfg.carrier_offsets_hz.is_empty() {
        return Ok(out);
    }
    let alpha = cfg.alpha();
    let lambda = cfg.pulse_pair_rate / SAMPLE_RATE_HZ;
    let spacing = cfg.pair_spacing_samples();
    let per = signal_power * cfg.power_linear() / cfg.carrier_offsets_hz.len() as f64;
    // Each pulse carries energy a^2 sqrt(pi/alpha); two pulses per pair.
    let a = (per / (2.0 * lambda * (PI / alpha).sqrt())).sqrt();
    let lead = spacing as f64 + (12.0 / alpha).sqrt();
    for &off in &cfg.carrier_offsets_hz {
        let f = off / SAMPLE_RATE_HZ;
        for t0 in pair_arrivals(len, lambda, lead, rng) {
            let phi = rng.random_range(0.0..2.0 * PI);
            add_pulse_pair(&mut out, t0, spacing, alpha, a, f, phi);
        }
    }
    Ok(out)
}

/// `generate_dme` when `cfg` is present; all-zero samples otherwise.
pub fn generate_dme_scenario<R: Rng + ?Sized>(
    len: usize,
    cfg: Option<&DmeConfig>,
    signal_power: f64,
    rng: &mut R,
) -> Result<Vec<Complex64>> {
    match cfg {
        Some(c) => generate_dme(len, c, signal_power, rng),
        None => Ok(vec![Complex64::new(0.0, 0.0); len]),
    }
}
