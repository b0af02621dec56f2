//! Propagation channels, DME interference and noise.
//!
//! The received signal is `r = c_L * x' + c_D * s + n` with block fading:
//! the tap vectors are redrawn for every OFDM symbol.

pub mod dme;

use std::fmt::Write as _;
use std::path::Path;

use num_complex::Complex64;
use rand::Rng;
use rand_distr::StandardNormal;

use crate::error::{invalid, Error, Result};
use crate::filter::SAMPLE_RATE_HZ;

pub use dme::{generate_dme, generate_dme_scenario, DmeConfig};

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Fading {
    /// Deterministic unit-phase tap.
    Static,
    Rayleigh,
    /// Line-of-sight plus scatter with power ratio `K` (dB).
    Rician { k_db: f64 },
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ChannelTap {
    /// Delay in samples at the filtered rate.
    pub delay: usize,
    /// Average linear power.
    pub power: f64,
    pub fading: Fading,
}

#[derive(Debug, Clone, PartialEq)]
pub struct ChannelProfile {
    pub name: String,
    pub taps: Vec<ChannelTap>,
    /// Redraw taps every symbol; otherwise one draw for the whole frame.
    pub block_fading: bool,
}

/// Rounds a delay in microseconds to samples at the filtered rate.
pub fn delay_samples(us: f64) -> usize {
    (us * 1e-6 * SAMPLE_RATE_HZ).round() as usize
}

impl ChannelProfile {
    pub fn new(name: impl Into<String>, taps: Vec<ChannelTap>) -> Result<Self> {
        let p = Self { name: name.into(), taps, block_fading: true };
        p.validate()?;
        Ok(p)
    }

    pub fn validate(&self) -> Result<()> {
        if self.taps.is_empty() {
            return Err(invalid("channel profile has no taps"));
        }
        let total: f64 = self.taps.iter().map(|t| t.power).sum();
        if (total - 1.0).abs() > 1e-9 {
            return Err(invalid(format!("tap powers of `{}` sum to {total}, not 1", self.name)));
        }
        if self.taps.iter().any(|t| !(t.power >= 0.0)) {
            return Err(invalid("tap powers must be non-negative"));
        }
        for w in self.taps.windows(2) {
            if w[1].delay <= w[0].delay {
                return Err(invalid(format!(
                    "tap delays of `{}` must be strictly increasing",
                    self.name
                )));
            }
        }
        Ok(())
    }

    pub fn awgn() -> Self {
        Self::new("AWGN", vec![ChannelTap { delay: 0, power: 1.0, fading: Fading::Static }])
            .expect("valid preset")
    }

    /// En-route: strong line of sight and a weak short echo.
    pub fn enr() -> Self {
        Self::new(
            "ENR",
            vec![
                ChannelTap { delay: 0, power: 0.95, fading: Fading::Rician { k_db: 15.0 } },
                ChannelTap { delay: delay_samples(0.3), power: 0.05, fading: Fading::Rayleigh },
            ],
        )
        .expect("valid preset")
    }

    /// Terminal manoeuvring area.
    pub fn tma() -> Self {
        Self::new(
            "TMA",
            vec![
                ChannelTap { delay: 0, power: 0.9, fading: Fading::Rician { k_db: 10.0 } },
                ChannelTap { delay: delay_samples(1.0), power: 0.1, fading: Fading::Rayleigh },
            ],
        )
        .expect("valid preset")
    }

    /// Airport surface.
    pub fn apt() -> Self {
        Self::new(
            "APT",
            vec![
                ChannelTap { delay: 0, power: 0.8, fading: Fading::Rician { k_db: 7.0 } },
                ChannelTap { delay: delay_samples(0.5), power: 0.13, fading: Fading::Rayleigh },
                ChannelTap { delay: delay_samples(1.5), power: 0.07, fading: Fading::Rayleigh },
            ],
        )
        .expect("valid preset")
    }

    pub fn preset(name: &str) -> Result<Self> {
        match name.to_ascii_uppercase().as_str() {
            "AWGN" | "AWGN-ONLY" => Ok(Self::awgn()),
            "ENR" => Ok(Self::enr()),
            "TMA" => Ok(Self::tma()),
            "APT" => Ok(Self::apt()),
            _ => Err(invalid(format!(
                "unknown channel `{name}` (expected AWGN, ENR, APT, TMA or a profile file)"
            ))),
        }
    }

    pub fn max_delay(&self) -> usize {
        self.taps.iter().map(|t| t.delay).max().unwrap_or(0)
    }

    /// Text form: `# name <n>`, optional `# block_fading <bool>`, then
    /// `<delay_us> <power> <static|rayleigh|rician> [k_db]` per tap.
    pub fn to_text(&self) -> String {
        let mut s = format!("# name {}\n# block_fading {}\n# delay_us power fading [k_db]\n", self.name, self.block_fading);
        for t in &self.taps {
            let us = t.delay as f64 / SAMPLE_RATE_HZ * 1e6;
            let _ = match t.fading {
                Fading::Static => writeln!(s, "{us} {} static", t.power),
                Fading::Rayleigh => writeln!(s, "{us} {} rayleigh", t.power),
                Fading::Rician { k_db } => writeln!(s, "{us} {} rician {k_db}", t.power),
            };
        }
        s
    }

    pub fn parse(text: &str) -> Result<Self> {
        let mut name = "custom".to_string();
        let mut block = true;
        let mut taps = Vec::new();
        for (i, raw) in text.lines().enumerate() {
            let line = raw.trim();
            if line.is_empty() {
                continue;
            }
            let perr = |m: String| Error::Parse { line: i + 1, message: m };
            if let Some(c) = line.strip_prefix('#') {
                let mut it = c.split_whitespace();
                match (it.next(), it.next()) {
                    (Some("name"), Some(v)) => name = v.to_string(),
                    (Some("block_fading"), Some(v)) => {
                        block = v.parse().map_err(|_| perr(format!("bad block_fading `{v}`")))?
                    }
                    _ => {}
                }
                continue;
            }
            let f: Vec<&str> = line.split_whitespace().collect();
            if f.len() < 3 {
                return Err(perr(format!("expected `<delay_us> <power> <fading> [k_db]`, got `{line}`")));
            }
            let num = |s: &str| s.parse::<f64>().map_err(|_| perr(format!("invalid number `{s}`")));
            let fading = match f[2] {
                "static" => Fading::Static,
                "rayleigh" => Fading::Rayleigh,
                "rician" => Fading::Rician {
                    k_db: num(f.get(3).ok_or_else(|| perr("rician tap needs K in dB".into()))?)?,
                },
                other => return Err(perr(format!("unknown fading `{other}`"))),
            };
            taps.push(ChannelTap { delay: delay_samples(num(f[0])?), power: num(f[1])?, fading });
        }
        let mut p = Self { name, taps, block_fading: block };
        p.validate()?;
        p.block_fading = block;
        Ok(p)
    }

    pub fn load(path: &Path) -> Result<Self> {
        Self::parse(&std::fs::read_to_string(path)?)
    }
}

fn complex_normal<R: Rng + ?Sized>(rng: &mut R, variance: f64) -> Complex64 {
    let s = (variance / 2.0).sqrt();
    let re: f64 = rng.sample(StandardNormal);
    let im: f64 = rng.sample(StandardNormal);
    Complex64::new(re * s, im * s)
}

/// One tap-vector realization, dense over delays `0..=max_delay`.
pub fn draw_channel<R: Rng + ?Sized>(profile: &ChannelProfile, rng: &mut R) -> Vec<Complex64> {
    let mut c = vec![Complex64::new(0.0, 0.0); profile.max_delay() + 1];
    for t in &profile.taps {
        c[t.delay] += match t.fading {
            Fading::Static => Complex64::new(t.power.sqrt(), 0.0),
            Fading::Rayleigh => complex_normal(rng, t.power),
            Fading::Rician { k_db } => {
                let k = 10f64.powf(k_db / 10.0);
                let los = (t.power * k / (k + 1.0)).sqrt();
                Complex64::new(los, 0.0) + complex_normal(rng, t.power / (k + 1.0))
            }
        };
    }
    c
}

/// Realizations for `symbols` OFDM symbols.
pub fn draw_channels<R: Rng + ?Sized>(
    profile: &ChannelProfile,
    symbols: usize,
    rng: &mut R,
) -> Vec<Vec<Complex64>> {
    if profile.block_fading {
        (0..symbols).map(|_| draw_channel(profile, rng)).collect()
    } else {
        vec![draw_channel(profile, rng); symbols]
    }
}

/// Linear convolution with one time-invariant tap vector.
pub fn apply_channel(c: &[Complex64], x: &[Complex64]) -> Vec<Complex64> {
    if c.is_empty() || x.is_empty() {
        return Vec::new();
    }
    let mut y = vec![Complex64::new(0.0, 0.0); x.len() + c.len() - 1];
    for (l, &cl) in c.iter().enumerate() {
        if cl == Complex64::new(0.0, 0.0) {
            continue;
        }
        for (n, &xn) in x.iter().enumerate() {
            y[n + l] += cl * xn;
        }
    }
    y
}

/// Block-fading convolution: samples `[offset + s L, offset + (s + 1) L)`
/// go through `taps[s]` (the first block also takes everything before
/// `offset`, the last everything after); outputs overlap-add.
pub fn apply_block_channel(
    taps: &[Vec<Complex64>],
    x: &[Complex64],
    block_len: usize,
    offset: usize,
) -> Result<Vec<Complex64>> {
    if taps.is_empty() || block_len == 0 {
        return Err(invalid("block channel needs taps and a positive block length"));
    }
    let lmax = taps.iter().map(Vec::len).max().unwrap_or(1);
    let mut y = vec![Complex64::new(0.0, 0.0); x.len() + lmax - 1];
    let nb = taps.len();
    for (b, c) in taps.iter().enumerate() {
        let lo = if b == 0 { 0 } else { (offset + b * block_len).min(x.len()) };
        let hi = if b + 1 == nb { x.len() } else { (offset + (b + 1) * block_len).min(x.len()) };
        if lo >= hi {
            continue;
        }
        let part = apply_channel(c, &x[lo..hi]);
        for (i, v) in part.into_iter().enumerate() {
            y[lo + i] += v;
        }
    }
    Ok(y)
}

pub fn mean_power(x: &[Complex64]) -> f64 {
    x.iter().map(|z| z.norm_sqr()).sum::<f64>() / x.len().max(1) as f64
}

/// Adds complex white Gaussian noise of total variance `variance`.
pub fn add_noise<R: Rng + ?Sized>(x: &mut [Complex64], variance: f64, rng: &mut R) {
    if variance <= 0.0 {
        return;
    }
    for z in x.iter_mut() {
        *z += complex_normal(rng, variance);
    }
}

/// Adds noise at `snr_db` relative to the measured signal power; `None`
/// means infinite SNR. Returns the noise variance used.
pub fn add_awgn<R: Rng + ?Sized>(x: &mut [Complex64], snr_db: Option<f64>, rng: &mut R) -> Result<f64> {
    let Some(snr) = snr_db else { return Ok(0.0) };
    let p = mean_power(x);
    if !(p > 0.0) {
        return Err(invalid("cannot set an SNR on a zero-power signal"));
    }
    let var = p / 10f64.powf(snr / 10.0);
    add_noise(x, var, rng);
    Ok(var)
}

/// The three received components and their sum.
#[derive(Debug, Clone)]
pub struct ReceivedSignal {
    pub total: Vec<Complex64>,
    pub signal: Vec<Complex64>,
    pub interference: Vec<Complex64>,
    pub noise: Vec<Complex64>,
}

/// `r = c_L * x' + c_D * s + n`, all terms truncated or zero-padded to
/// the length of the convolved signal term.
pub fn compose_received(
    signal: Vec<Complex64>,
    dme_channel: &[Complex64],
    interference: &[Complex64],
    noise: Vec<Complex64>,
) -> ReceivedSignal {
    let n = signal.len();
    let mut i = if interference.is_empty() {
        vec![Complex64::new(0.0, 0.0); n]
    } else {
        apply_channel(dme_channel, interference)
    };
    i.resize(n, Complex64::new(0.0, 0.0));
    let mut w = noise;
    w.resize(n, Complex64::new(0.0, 0.0));
    let total = (0..n).map(|k| signal[k] + i[k] + w[k]).collect();
    ReceivedSignal { total, signal, interference: i, noise: w }
}
