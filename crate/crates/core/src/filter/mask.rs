//! Piecewise-linear spectral masks and response verification.
//!
//! Frequencies are absolute offsets from the carrier, normalized to the
//! Nyquist frequency of the 4 MHz filtered rate. Levels are maximum
//! relative magnitudes in dB.

use std::fmt::Write as _;
use std::path::Path;

use super::cascade::{Bandwidth, F_M_REFERENCE};
use crate::error::{invalid, Error, Result};

/// Small step used to form vertical mask edges.
pub const MASK_STEP: f64 = 1e-4;
/// Passband ripple bound of the constructed masks.
pub const PASSBAND_RIPPLE_DB: f64 = 0.5;

#[derive(Debug, Clone, PartialEq)]
pub struct SpectralMask {
    pub name: String,
    /// `(frequency, max level dB)`, strictly increasing in frequency.
    pub points: Vec<(f64, f64)>,
    /// Frequencies at or below this edge are not checked.
    passband_edge: f64,
    /// First frequency of the stopband proper.
    stopband_edge: f64,
}

impl SpectralMask {
    /// Builds a mask; edges default to the last point above 0 dB and the
    /// first point below 0 dB.
    pub fn new(name: impl Into<String>, points: Vec<(f64, f64)>) -> Result<Self> {
        let passband_edge = points
            .iter()
            .take_while(|p| p.1 > 0.0)
            .last()
            .map_or(0.0, |p| p.0);
        let stopband_edge = points.iter().find(|p| p.1 < 0.0).map_or(1.0, |p| p.0);
        Self::with_edges(name, points, passband_edge, stopband_edge)
    }

    pub fn with_edges(
        name: impl Into<String>,
        points: Vec<(f64, f64)>,
        passband_edge: f64,
        stopband_edge: f64,
    ) -> Result<Self> {
        if points.len() < 2 {
            return Err(invalid("mask needs at least two points"));
        }
        for w in points.windows(2) {
            if !(w[1].0 > w[0].0) {
                return Err(invalid(format!(
                    "mask frequencies must be strictly increasing ({} then {})",
                    w[0].0, w[1].0
                )));
            }
        }
        if points.iter().any(|p| !p.0.is_finite() || !p.1.is_finite()) {
            return Err(invalid("mask points must be finite"));
        }
        if let Some(p) = points.iter().find(|p| p.0 > passband_edge && p.1 > 0.0) {
            return Err(invalid(format!(
                "mask level {} dB at {} exceeds 0 dB outside the passband",
                p.1, p.0
            )));
        }
        if stopband_edge < passband_edge {
            return Err(invalid("mask stopband edge lies below its passband edge"));
        }
        Ok(Self {
            name: name.into(),
            points,
            passband_edge,
            stopband_edge,
        })
    }

    /// Constructed envelope for one bandwidth.
    ///
    /// Passband `[0, Fp_s]` at the ripple bound, transition `(Fp_s, Fs_s]`
    /// at 0 dB, adjacent region up to the Filter II stopband edge at the
    /// Filter I attenuation, then the Filter II level up to the Filter III
    /// stopband edge and the Filter III level beyond.
    pub fn ldacs(bw: Bandwidth) -> Self {
        let (fp, fs) = bw.signal_edges();
        let a1 = bw.filter1_attenuation_db();
        // Final-scale stopband edges of Filters II and III.
        let mid = 0.5 - F_M_REFERENCE / 4.0;
        let far = 1.0 - F_M_REFERENCE / 4.0;
        let (a2, a3) = (Bandwidth::FILTER2_ATTENUATION_DB, Bandwidth::FILTER3_ATTENUATION_DB);
        let points = vec![
            (0.0, PASSBAND_RIPPLE_DB),
            (fp, PASSBAND_RIPPLE_DB),
            (fp + MASK_STEP, 0.0),
            (fs, 0.0),
            (fs + MASK_STEP, -a1),
            (mid, -a1),
            (mid + MASK_STEP, -a2),
            (far, -a2),
            (far + MASK_STEP, -a3),
            (1.0, -a3),
        ];
        Self::with_edges(format!("ldacs_{}", bw.khz()), points, fp, fs)
            .expect("constructed mask is well formed")
    }

    pub fn passband_edge(&self) -> f64 {
        self.passband_edge
    }

    pub fn stopband_edge(&self) -> f64 {
        self.stopband_edge
    }

    /// Linearly interpolated level; constant beyond the end points.
    pub fn level_at(&self, f: f64) -> f64 {
        let pts = &self.points;
        if f <= pts[0].0 {
            return pts[0].1;
        }
        let last = pts[pts.len() - 1];
        if f >= last.0 {
            return last.1;
        }
        let i = pts.partition_point(|p| p.0 <= f);
        let (a, b) = (pts[i - 1], pts[i]);
        a.1 + (b.1 - a.1) * (f - a.0) / (b.0 - a.0)
    }

    pub fn parse(text: &str) -> Result<Self> {
        let mut name = String::from("mask");
        let mut pass = None;
        let mut stop = None;
        let mut points = Vec::new();
        for (i, raw) in text.lines().enumerate() {
            let line = raw.trim();
            if line.is_empty() {
                continue;
            }
            if let Some(c) = line.strip_prefix('#') {
                let mut it = c.split_whitespace();
                let directive = it.next();
                let value = it.next();
                match (directive, value) {
                    (Some("name"), Some(v)) => name = v.to_string(),
                    (Some("passband_edge"), Some(v)) => pass = Some(parse_f64(v, i + 1)?),
                    (Some("stopband_edge"), Some(v)) => stop = Some(parse_f64(v, i + 1)?),
                    _ => {}
                }
                continue;
            }
            let mut it = line.split_whitespace();
            let (Some(f), Some(l), None) = (it.next(), it.next(), it.next()) else {
                return Err(Error::Parse {
                    line: i + 1,
                    message: format!("expected `<freq> <level_db>`, got `{line}`"),
                });
            };
            points.push((parse_f64(f, i + 1)?, parse_f64(l, i + 1)?));
        }
        let base = Self::new(name, points)?;
        match (pass, stop) {
            (None, None) => Ok(base),
            (p, s) => Self::with_edges(
                base.name.clone(),
                base.points.clone(),
                p.unwrap_or(base.passband_edge),
                s.unwrap_or(base.stopband_edge),
            ),
        }
    }

    pub fn to_text(&self) -> String {
        let mut s = String::new();
        let _ = writeln!(s, "# name {}", self.name);
        let _ = writeln!(s, "# passband_edge {}", self.passband_edge);
        let _ = writeln!(s, "# stopband_edge {}", self.stopband_edge);
        let _ = writeln!(s, "# <normalized_freq> <max_level_db>");
        for (f, l) in &self.points {
            let _ = writeln!(s, "{f} {l}");
        }
        s
    }

    pub fn load(path: &Path) -> Result<Self> {
        Self::parse(&std::fs::read_to_string(path)?)
    }

    pub fn save(&self, path: &Path) -> Result<()> {
        std::fs::write(path, self.to_text())?;
        Ok(())
    }
}

fn parse_f64(s: &str, line: usize) -> Result<f64> {
    s.parse().map_err(|_| Error::Parse {
        line,
        message: format!("invalid number `{s}`"),
    })
}

#[derive(Debug, Clone, PartialEq)]
pub struct MaskReport {
    pub pass: bool,
    /// Minimum of `mask - response` over checked points (dB).
    pub worst_margin_db: f64,
    pub worst_frequency: f64,
    pub first_violation: Option<f64>,
    pub points_checked: usize,
}

/// Checks a response sampled uniformly over `[0, 1]`.
pub fn verify_mask(response_db: &[f64], mask: &SpectralMask) -> MaskReport {
    let n = response_db.len();
    let freqs: Vec<f64> = (0..n)
        .map(|i| if n > 1 { i as f64 / (n - 1) as f64 } else { 0.0 })
        .collect();
    verify_mask_points(&freqs, response_db, mask)
}

/// Response grid for mask checks, one point per [`MASK_STEP`].
pub const MASK_GRID: usize = 10_001;

/// Checks the magnitude response of an impulse response on [`MASK_GRID`].
pub fn verify_filter_mask(coeffs: &[f64], mask: &SpectralMask) -> Result<MaskReport> {
    Ok(verify_mask(&super::response::response_db(coeffs, MASK_GRID)?, mask))
}

/// Checks arbitrary `(|frequency|, level)` samples.
pub fn verify_mask_points(freqs: &[f64], levels_db: &[f64], mask: &SpectralMask) -> MaskReport {
    let mut report = MaskReport {
        pass: true,
        worst_margin_db: f64::INFINITY,
        worst_frequency: f64::NAN,
        first_violation: None,
        points_checked: 0,
    };
    let mut order: Vec<usize> = (0..freqs.len().min(levels_db.len())).collect();
    order.sort_by(|&a, &b| freqs[a].abs().total_cmp(&freqs[b].abs()));
    for i in order {
        let f = freqs[i].abs();
        if f <= mask.passband_edge {
            continue;
        }
        report.points_checked += 1;
        let margin = mask.level_at(f) - levels_db[i];
        if margin < report.worst_margin_db {
            report.worst_margin_db = margin;
            report.worst_frequency = f;
        }
        if margin < 0.0 && report.first_violation.is_none() {
            report.first_violation = Some(f);
            report.pass = false;
        }
    }
    report
}

#[cfg(test)]
mod tests {
    use super::*;

    fn simple() -> SpectralMask {
        SpectralMask::new("t", vec![(0.0, 0.5), (0.1, 0.5), (0.2, 0.0), (0.3, -40.0), (1.0, -40.0)])
            .unwrap()
    }

    #[test]
    fn edges_are_derived() {
        let m = simple();
        assert_eq!(m.passband_edge(), 0.1);
        assert_eq!(m.stopband_edge(), 0.3);
        assert_eq!(m.level_at(0.25), -20.0);
        assert_eq!(m.level_at(2.0), -40.0);
    }

    #[test]
    fn rejects_unordered_or_positive_stopband() {
        assert!(SpectralMask::new("x", vec![(0.0, 0.0), (0.0, -1.0)]).is_err());
        assert!(SpectralMask::with_edges("x", vec![(0.0, 0.0), (0.5, 1.0)], 0.1, 0.5).is_err());
    }

    #[test]
    fn all_pass_fails_in_stopband() {
        let m = simple();
        let r = verify_mask(&vec![0.0; 101], &m);
        assert!(!r.pass);
        assert!(r.first_violation.unwrap() > 0.2 && r.first_violation.unwrap() <= 0.21);
    }

    #[test]
    fn text_round_trip() {
        let m = SpectralMask::ldacs(Bandwidth::Khz498);
        let back = SpectralMask::parse(&m.to_text()).unwrap();
        assert_eq!(m, back);
    }

    #[test]
    fn parse_reports_line() {
        match SpectralMask::parse("# c\n0 0\nbad\n") {
            Err(Error::Parse { line, .. }) => assert_eq!(line, 3),
            other => panic!("{other:?}"),
        }
    }

    #[test]
    fn constructed_mask_shape() {
        for bw in Bandwidth::ALL {
            let m = SpectralMask::ldacs(bw);
            let (fp, fs) = bw.signal_edges();
            assert_eq!(m.passband_edge(), fp);
            assert_eq!(m.stopband_edge(), fs);
            assert_eq!(m.level_at(0.5), -Bandwidth::FILTER2_ATTENUATION_DB);
            assert_eq!(m.level_at(0.95), -Bandwidth::FILTER3_ATTENUATION_DB);
        }
    }
}
