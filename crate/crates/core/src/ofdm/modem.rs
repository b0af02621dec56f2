//! Modulation, filtering, demodulation and pilot phase correction.

use std::sync::Arc;

use num_complex::Complex64;
use rustfft::{Fft, FftPlanner};

use super::{OfdmConfig, SymbolGrid, Waveform, PILOT_VALUE};
use crate::error::{invalid, Result};
use crate::filter::response::dtft;
use crate::filter::CascadeDesign;
use crate::multirate::fixed::{fixed_point_process, WordLengthScenario};
use crate::multirate::{expand_impulse_response, CascadeProcessor};

const ZERO: Complex64 = Complex64::new(0.0, 0.0);
/// Equalizer denominators below this magnitude flag the subcarrier.
pub const EQUALIZER_FLOOR: f64 = 1e-8;

fn plan(n: usize, inverse: bool) -> Arc<dyn Fft<f64>> {
    let mut p = FftPlanner::new();
    if inverse {
        p.plan_fft_inverse(n)
    } else {
        p.plan_fft_forward(n)
    }
}

fn bin(k: i64, n: usize) -> usize {
    k.rem_euclid(n as i64) as usize
}

/// Time samples of `grid`, unit average power, cyclic prefix prepended.
///
/// `x[n] = (1 / sqrt(A)) sum_k X_k exp(j 2 pi k n / (K L))` for the `A`
/// active subcarriers `k` and oversampling factor `L`.
pub fn ofdm_modulate(grid: &SymbolGrid, cfg: &OfdmConfig) -> Result<Vec<Complex64>> {
    cfg.validate()?;
    if grid.active != cfg.active_subcarriers {
        return Err(invalid(format!(
            "grid has {} subcarriers, config expects {}",
            grid.active, cfg.active_subcarriers
        )));
    }
    let n = cfg.dft_len();
    let cp = cfg.cp_samples();
    let ifft = plan(n, true);
    let scale = (cfg.active_subcarriers as f64).sqrt().recip();
    let idx = cfg.subcarrier_indices();
    let mut out = Vec::with_capacity(grid.symbols * cfg.symbol_len());
    let mut buf = vec![ZERO; n];
    for s in 0..grid.symbols {
        buf.fill(ZERO);
        for (j, &k) in idx.iter().enumerate() {
            buf[bin(k, n)] = grid.get(s, j) * scale;
        }
        ifft.process(&mut buf);
        out.extend_from_slice(&buf[n - cp..]);
        out.extend_from_slice(&buf);
    }
    Ok(out)
}

/// `h * x` over the whole stream including the filter tail; plain OFDM
/// passes through.
pub fn apply_tx_filter(
    x: &[Complex64],
    waveform: Waveform,
    cascade: Option<&CascadeDesign>,
) -> Result<Vec<Complex64>> {
    apply_tx_filter_with(x, waveform, cascade, WordLengthScenario::FloatingPoint)
}

/// [`apply_tx_filter`] under a word-length scenario.
pub fn apply_tx_filter_with(
    x: &[Complex64],
    waveform: Waveform,
    cascade: Option<&CascadeDesign>,
    quantization: WordLengthScenario,
) -> Result<Vec<Complex64>> {
    match (waveform, cascade) {
        (Waveform::Ofdm, _) => Ok(x.to_vec()),
        (_, None) => Err(invalid(format!("waveform {waveform} needs a transmit filter"))),
        (_, Some(c)) => filter_stream(c, x, quantization),
    }
}

/// Cascade output over `x` followed by the filter tail.
pub fn filter_stream(c: &CascadeDesign, x: &[Complex64], quantization: WordLengthScenario) -> Result<Vec<Complex64>> {
    let tail = c.expanded_len() - 1;
    let mut padded = Vec::with_capacity(x.len() + tail);
    padded.extend_from_slice(x);
    padded.resize(x.len() + tail, ZERO);
    Ok(match quantization {
        WordLengthScenario::FloatingPoint => CascadeProcessor::<Complex64>::new(c).process(&padded),
        q => {
            let (f, d) = q.formats()?;
            fixed_point_process(c, &padded, f.as_ref(), d.as_ref()).0
        }
    })
}

/// A transmitted frame.
#[derive(Debug, Clone)]
pub struct TxFrame {
    pub samples: Vec<Complex64>,
    /// Scale applied after filtering for unit average power.
    pub gain: f64,
    /// Group delay of the transmit filter in samples.
    pub filter_delay: usize,
    pub symbols: usize,
}

/// Scale giving unit expected power after the transmit filter:
/// `1 / sqrt(mean_k |H_k|^2)` over the active subcarriers, 1 without a
/// filter. Deterministic, so the effective SNR does not depend on data.
pub fn nominal_gain(cfg: &OfdmConfig, cascade: Option<&CascadeDesign>) -> f64 {
    match (cfg.waveform, cascade) {
        (Waveform::Ofdm, _) | (_, None) => 1.0,
        (_, Some(c)) => {
            let g = filter_gains(c, cfg);
            let p = g.iter().map(|h| h.norm_sqr()).sum::<f64>() / g.len() as f64;
            p.sqrt().recip()
        }
    }
}

/// Modulates, filters and scales to unit expected power.
pub fn transmit(
    grid: &SymbolGrid,
    cfg: &OfdmConfig,
    cascade: Option<&CascadeDesign>,
) -> Result<TxFrame> {
    transmit_with(grid, cfg, cascade, WordLengthScenario::FloatingPoint)
}

/// [`transmit`] with the filter evaluated under a word-length scenario.
pub fn transmit_with(
    grid: &SymbolGrid,
    cfg: &OfdmConfig,
    cascade: Option<&CascadeDesign>,
    quantization: WordLengthScenario,
) -> Result<TxFrame> {
    let x = ofdm_modulate(grid, cfg)?;
    let mut y = apply_tx_filter_with(&x, cfg.waveform, cascade, quantization)?;
    let filter_delay = match (cfg.waveform, cascade) {
        (Waveform::Ofdm, _) | (_, None) => 0,
        (_, Some(c)) => crate::filter::group_delay_samples(c),
    };
    let gain = nominal_gain(cfg, cascade);
    for z in y.iter_mut() {
        *z *= gain;
    }
    Ok(TxFrame { samples: y, gain, filter_delay, symbols: grid.symbols })
}

/// Applies a constant phase rotation `exp(j theta)`.
pub fn apply_phase_rotation(x: &mut [Complex64], theta: f64) {
    let r = Complex64::from_polar(1.0, theta);
    for z in x.iter_mut() {
        *z *= r;
    }
}

/// What the receiver knows about the propagation channel.
#[derive(Debug, Clone, PartialEq)]
pub enum ChannelKnowledge {
    /// No propagation channel, `C_k = 1`.
    Flat,
    /// Per-symbol tap vectors of the true channel.
    Genie(Vec<Vec<Complex64>>),
    /// Least-squares estimate at the pilots, linearly interpolated.
    PilotLs,
}

#[derive(Debug, Clone)]
pub struct RxParams<'a> {
    /// Transmit filter; reused as the receive filter when enabled.
    pub filter: Option<&'a CascadeDesign>,
    pub tx_gain: f64,
    pub channel: ChannelKnowledge,
    pub symbols: usize,
    /// Arithmetic of the receive filter.
    pub quantization: WordLengthScenario,
}

#[derive(Debug, Clone)]
pub struct DemodOutput {
    pub grid: SymbolGrid,
    /// `(symbol, position)` pairs whose equalizer denominator vanished.
    pub flagged: Vec<(usize, usize)>,
}

/// Zero-phase filter gain at each active subcarrier:
/// `H(f_k) exp(j 2 pi f_k D)` with `D` the linear-phase delay.
pub fn filter_gains(c: &CascadeDesign, cfg: &OfdmConfig) -> Vec<Complex64> {
    let h = expand_impulse_response(c);
    let d = (h.len() - 1) as f64 / 2.0;
    cfg.subcarrier_indices()
        .iter()
        .map(|&k| {
            let f = cfg.subcarrier_frequency(k);
            dtft(&h, 2.0 * f) * Complex64::from_polar(1.0, 2.0 * std::f64::consts::PI * f * d)
        })
        .collect()
}

/// Channel gain `C_k = sum_l c_l exp(-j 2 pi f_k l)` at each active subcarrier.
pub fn channel_gains(taps: &[Complex64], cfg: &OfdmConfig) -> Vec<Complex64> {
    cfg.subcarrier_indices()
        .iter()
        .map(|&k| {
            let f = cfg.subcarrier_frequency(k);
            taps.iter()
                .enumerate()
                .map(|(l, &c)| c * Complex64::from_polar(1.0, -2.0 * std::f64::consts::PI * f * l as f64))
                .sum()
        })
        .collect()
}

/// Receive chain: optional matched filter, delay compensation, prefix
/// removal, DFT and one-tap equalization.
pub fn ofdm_demodulate(r: &[Complex64], cfg: &OfdmConfig, rx: &RxParams<'_>) -> Result<DemodOutput> {
    cfg.validate()?;
    let filtered = cfg.waveform != Waveform::Ofdm;
    if filtered && rx.filter.is_none() {
        return Err(invalid(format!("waveform {} needs its filter at the receiver", cfg.waveform)));
    }
    let (signal, delay, h_gain) = match rx.filter.filter(|_| filtered) {
        Some(c) => {
            let g = filter_gains(c, cfg);
            let d = crate::filter::group_delay_samples(c);
            if cfg.rx_filter {
                let sq: Vec<Complex64> = g.iter().map(|h| h * h * rx.tx_gain).collect();
                (filter_stream(c, r, rx.quantization)?, 2 * d, sq)
            } else {
                let s: Vec<Complex64> = g.iter().map(|h| h * rx.tx_gain).collect();
                (r.to_vec(), d, s)
            }
        }
        None => (r.to_vec(), 0, vec![Complex64::new(rx.tx_gain, 0.0); cfg.active_subcarriers]),
    };
    let n = cfg.dft_len();
    let needed = rx.symbols.saturating_sub(1) * cfg.symbol_len() + cfg.cp_samples() + delay + n;
    if rx.symbols == 0 || signal.len() < needed {
        return Err(invalid(format!(
            "received {} samples, {} symbols need {needed}",
            signal.len(),
            rx.symbols
        )));
    }
    if let ChannelKnowledge::Genie(t) = &rx.channel {
        if t.len() < rx.symbols {
            return Err(invalid("genie channel has fewer realizations than symbols"));
        }
    }
    let fft = plan(n, false);
    let scale = (cfg.active_subcarriers as f64).sqrt().recip() * n as f64;
    let idx = cfg.subcarrier_indices();
    let pilots = cfg.pilot_positions();
    let mut grid = SymbolGrid::zeros(rx.symbols, cfg.active_subcarriers);
    let mut flagged = Vec::new();
    let mut buf = vec![ZERO; n];
    for s in 0..rx.symbols {
        let start = s * cfg.symbol_len() + cfg.cp_samples() + delay;
        buf.copy_from_slice(&signal[start..start + n]);
        fft.process(&mut buf);
        let y: Vec<Complex64> = idx.iter().map(|&k| buf[bin(k, n)] / scale).collect();
        let c: Vec<Complex64> = match &rx.channel {
            ChannelKnowledge::Flat => vec![Complex64::new(1.0, 0.0); y.len()],
            ChannelKnowledge::Genie(t) => channel_gains(&t[s], cfg),
            ChannelKnowledge::PilotLs => pilot_estimate(&y, &h_gain, &pilots),
        };
        for j in 0..y.len() {
            let den = h_gain[j] * c[j];
            if den.norm() < EQUALIZER_FLOOR {
                flagged.push((s, j));
            } else {
                grid.set(s, j, y[j] / den);
            }
        }
    }
    Ok(DemodOutput { grid, flagged })
}

/// LS channel estimate at pilot positions, linearly interpolated across
/// the active set and held flat beyond the outer pilots.
fn pilot_estimate(y: &[Complex64], h: &[Complex64], pilots: &[usize]) -> Vec<Complex64> {
    if pilots.is_empty() {
        return vec![Complex64::new(1.0, 0.0); y.len()];
    }
    let est: Vec<(usize, Complex64)> = pilots.iter().map(|&p| (p, y[p] / (h[p] * PILOT_VALUE))).collect();
    (0..y.len())
        .map(|j| {
            let i = est.partition_point(|e| e.0 <= j);
            match i {
                0 => est[0].1,
                i if i == est.len() => est[est.len() - 1].1,
                i => {
                    let (a, b) = (est[i - 1], est[i]);
                    let t = (j - a.0) as f64 / (b.0 - a.0) as f64;
                    a.1 * (1.0 - t) + b.1 * t
                }
            }
        })
        .collect()
}

/// Per-symbol common phase estimates of a correction pass.
#[derive(Debug, Clone, PartialEq)]
pub struct PhaseCorrection {
    pub phases: Vec<f64>,
    /// Set when the grid has no pilots and was passed through.
    pub no_pilots: bool,
}

/// Estimates each symbol's common rotation by least squares over the
/// pilots, `arg sum conj(P) R_p`, and derotates the whole symbol.
pub fn pilot_phase_correct(grid: &SymbolGrid, pilots: &[usize]) -> (SymbolGrid, PhaseCorrection) {
    if pilots.is_empty() {
        return (
            grid.clone(),
            PhaseCorrection { phases: vec![0.0; grid.symbols], no_pilots: true },
        );
    }
    let mut out = grid.clone();
    let mut phases = Vec::with_capacity(grid.symbols);
    for s in 0..grid.symbols {
        let acc: Complex64 = pilots.iter().map(|&p| PILOT_VALUE.conj() * grid.get(s, p)).sum();
        let phi = acc.arg();
        let rot = Complex64::from_polar(1.0, -phi);
        for z in out.row_mut(s) {
            *z *= rot;
        }
        phases.push(phi);
    }
    (out, PhaseCorrection { phases, no_pilots: false })
}
