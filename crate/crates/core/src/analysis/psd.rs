//! Welch power spectral density estimation.

use std::f64::consts::PI;
use std::fmt::Write as _;

use num_complex::Complex64;
use rustfft::FftPlanner;

use crate::error::{invalid, Result};
use crate::filter::{verify_mask_points, MaskReport, SpectralMask};

pub const DEFAULT_SEGMENT: usize = 1024;
/// Linear floor applied before conversion to dB.
pub const PSD_FLOOR: f64 = 1e-30;
/// Attenuation reported when nothing is measurable out of band.
pub const OOB_FLOOR_DB: f64 = 200.0;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Window {
    Rectangular,
    Hann,
}

impl Window {
    pub fn coefficients(self, n: usize) -> Vec<f64> {
        match self {
            Window::Rectangular => vec![1.0; n],
            // Periodic form, exact 50% overlap-add.
            Window::Hann => (0..n).map(|i| 0.5 - 0.5 * (2.0 * PI * i as f64 / n as f64).cos()).collect(),
        }
    }

    pub fn as_str(self) -> &'static str {
        match self {
            Window::Rectangular => "rectangular",
            Window::Hann => "hann",
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct PsdEstimate {
    /// Centred frequency grid in Hz, ascending from `-fs/2`.
    pub freq_hz: Vec<f64>,
    /// Same grid normalized so that Nyquist is 1.
    pub freq_norm: Vec<f64>,
    /// Density in dB relative to the peak bin.
    pub psd_db: Vec<f64>,
    /// Total power from the unnormalized estimate (mean over bins).
    pub total_power: f64,
    /// Linear density of the peak bin, the 0 dB reference.
    pub peak_density: f64,
    pub sample_rate_hz: f64,
    pub segment_length: usize,
    pub overlap: usize,
    pub window: Window,
    pub segments: usize,
}

impl PsdEstimate {
    /// PSD bins and levels restricted to `|f| >= from_hz`.
    pub fn beyond(&self, from_hz: f64) -> impl Iterator<Item = (f64, f64)> + '_ {
        self.freq_hz.iter().zip(&self.psd_db).filter(move |(f, _)| f.abs() >= from_hz).map(|(&f, &p)| (f, p))
    }

    /// `freq_hz,psd_db` rows.
    pub fn to_csv(&self) -> String {
        let mut s = String::from("freq_hz,psd_db\n");
        for (f, p) in self.freq_hz.iter().zip(&self.psd_db) {
            let _ = writeln!(s, "{f:.3},{p:.4}");
        }
        s
    }
}

/// Averaged modified periodograms of `x`.
///
/// Each segment is windowed, transformed and scaled by `1 / sum(w^2)`, so
/// the mean over bins equals the mean sample power.
pub fn welch_psd(
    x: &[Complex64],
    segment_length: usize,
    overlap: usize,
    window: Window,
    sample_rate_hz: f64,
) -> Result<PsdEstimate> {
    if segment_length < 2 {
        return Err(invalid("segment length must be at least 2"));
    }
    if overlap >= segment_length {
        return Err(invalid("overlap must be smaller than the segment length"));
    }
    if x.len() < segment_length {
        return Err(invalid(format!(
            "input of {} samples is shorter than one {segment_length}-point segment",
            x.len()
        )));
    }
    let w = window.coefficients(segment_length);
    let u: f64 = w.iter().map(|v| v * v).sum();
    let hop = segment_length - overlap;
    let fft = FftPlanner::new().plan_fft_forward(segment_length);
    let mut acc = vec![0.0; segment_length];
    let mut buf = vec![Complex64::new(0.0, 0.0); segment_length];
    let mut segments = 0;
    let mut start = 0;
    while start + segment_length <= x.len() {
        for (b, (&s, &wv)) in buf.iter_mut().zip(x[start..].iter().zip(&w)) {
            *b = s * wv;
        }
        fft.process(&mut buf);
        for (a, b) in acc.iter_mut().zip(&buf) {
            *a += b.norm_sqr();
        }
        segments += 1;
        start += hop;
    }
    let scale = 1.0 / (u * segments as f64);
    let n = segment_length;
    let half = n / 2;
    // fftshift: bin (i + n - half) % n goes to position i.
    let lin: Vec<f64> = (0..n).map(|i| acc[(i + n - half) % n] * scale).collect();
    let total_power = lin.iter().sum::<f64>() / n as f64;
    let peak = lin.iter().cloned().fold(0.0, f64::max);
    let psd_db = lin
        .iter()
        .map(|&p| if peak > 0.0 { 10.0 * (p.max(PSD_FLOOR * peak) / peak).log10() } else { 10.0 * PSD_FLOOR.log10() })
        .collect();
    let freq_hz: Vec<f64> = (0..n).map(|i| (i as f64 - half as f64) * sample_rate_hz / n as f64).collect();
    let freq_norm = freq_hz.iter().map(|f| f / (sample_rate_hz / 2.0)).collect();
    Ok(PsdEstimate {
        freq_hz,
        freq_norm,
        psd_db,
        total_power,
        peak_density: peak,
        sample_rate_hz,
        segment_length,
        overlap,
        window,
        segments,
    })
}

/// Peak in-band level minus the peak level outside `[-edge, edge]`,
/// as a positive attenuation in dB.
pub fn oob_attenuation(psd: &PsdEstimate, edge_hz: f64) -> Result<f64> {
    oob_attenuation_beyond(psd, edge_hz, edge_hz)
}

/// Peak level within `|f| <= inband_edge` minus the peak level over
/// `|f| > outer_edge`.
pub fn oob_attenuation_beyond(psd: &PsdEstimate, inband_edge_hz: f64, outer_edge_hz: f64) -> Result<f64> {
    let nyq = psd.sample_rate_hz / 2.0;
    if !(inband_edge_hz > 0.0 && inband_edge_hz < nyq && outer_edge_hz >= inband_edge_hz && outer_edge_hz < nyq) {
        return Err(invalid(format!(
            "band edges ({inband_edge_hz}, {outer_edge_hz}) Hz outside the (0, {nyq}) grid"
        )));
    }
    let mut inband = f64::NEG_INFINITY;
    let mut out = f64::NEG_INFINITY;
    for (&f, &p) in psd.freq_hz.iter().zip(&psd.psd_db) {
        if f.abs() <= inband_edge_hz {
            inband = inband.max(p);
        } else if f.abs() > outer_edge_hz {
            out = out.max(p);
        }
    }
    if !inband.is_finite() {
        return Err(invalid("no PSD bins inside the band"));
    }
    let floor = 10.0 * PSD_FLOOR.log10();
    if !out.is_finite() || out <= floor {
        return Ok(OOB_FLOOR_DB);
    }
    Ok((inband - out).min(OOB_FLOOR_DB))
}

/// Largest `|a - b|` in dB over the bins where `b` clears the noise floor
/// `floor` (an estimate of the error spectrum, rescaled to `a`'s
/// reference) by at least `clearance_db`. Returns the deviation and the
/// number of bins compared.
pub fn psd_deviation_above_floor(
    a: &PsdEstimate,
    b: &PsdEstimate,
    floor: &PsdEstimate,
    clearance_db: f64,
) -> Result<(f64, usize)> {
    if a.freq_hz != b.freq_hz || a.freq_hz != floor.freq_hz {
        return Err(invalid("PSD estimates are on different grids"));
    }
    let shift = if floor.peak_density > 0.0 && a.peak_density > 0.0 {
        10.0 * (floor.peak_density / a.peak_density).log10()
    } else {
        f64::NEG_INFINITY
    };
    let mut worst: f64 = 0.0;
    let mut n = 0;
    for i in 0..a.psd_db.len() {
        if b.psd_db[i] > floor.psd_db[i] + shift + clearance_db {
            worst = worst.max((a.psd_db[i] - b.psd_db[i]).abs());
            n += 1;
        }
    }
    Ok((worst, n))
}

/// Compares a PSD against a mask over `|f|`.
pub fn psd_mask_report(psd: &PsdEstimate, mask: &SpectralMask) -> MaskReport {
    verify_mask_points(&psd.freq_norm, &psd.psd_db, mask)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::rng::trial_rng;
    use rand::Rng;
    use rand_distr::StandardNormal;

    #[test]
    fn tone_peak() {
        let fs = 1024.0;
        let x: Vec<Complex64> = (0..8192).map(|n| Complex64::from_polar(1.0, 2.0 * PI * 100.0 * n as f64 / fs)).collect();
        let p = welch_psd(&x, 1024, 512, Window::Hann, fs).unwrap();
        let (i, &m) = p.psd_db.iter().enumerate().max_by(|a, b| a.1.total_cmp(b.1)).unwrap();
        assert_eq!(m, 0.0);
        assert_eq!(p.freq_hz[i], 100.0);
        assert!((p.total_power - 1.0).abs() < 1e-9);
    }

    #[test]
    fn white_noise_is_flat_and_power_preserving() {
        let mut r = trial_rng(11, 0);
        let x: Vec<Complex64> = (0..1024 * 400)
            .map(|_| Complex64::new(r.sample::<f64, _>(StandardNormal), r.sample::<f64, _>(StandardNormal)))
            .collect();
        let p = welch_psd(&x, 1024, 512, Window::Hann, 4e6).unwrap();
        assert!(p.segments >= 100);
        let time_power = x.iter().map(|z| z.norm_sqr()).sum::<f64>() / x.len() as f64;
        assert!((p.total_power / time_power - 1.0).abs() < 0.01);
        // Relative to the mean level (peak normalization shifts everything).
        let lin: Vec<f64> = p.psd_db.iter().map(|d| 10f64.powf(d / 10.0)).collect();
        let mean = 10.0 * (lin.iter().sum::<f64>() / lin.len() as f64).log10();
        assert!(p.psd_db.iter().all(|d| (d - mean).abs() < 1.5));
    }

    #[test]
    fn short_input_and_bad_edges() {
        let x = vec![Complex64::new(1.0, 0.0); 100];
        assert!(welch_psd(&x, 1024, 512, Window::Hann, 4e6).is_err());
        let p = welch_psd(&vec![Complex64::new(1.0, 0.0); 2048], 1024, 512, Window::Hann, 4e6).unwrap();
        assert!(oob_attenuation(&p, 3e6).is_err());
        assert!(oob_attenuation(&p, -1.0).is_err());
    }

    #[test]
    fn silent_out_of_band_hits_floor() {
        let x = vec![Complex64::new(1.0, 0.0); 4096];
        let p = welch_psd(&x, 1024, 512, Window::Rectangular, 4e6).unwrap();
        assert_eq!(oob_attenuation(&p, 1e5).unwrap(), OOB_FLOOR_DB);
    }
}
