//! DTFT evaluation helpers.

use std::f64::consts::PI;

use num_complex::Complex64;

use crate::error::{invalid, Result};

/// Magnitudes below this level are reported as the floor.
pub const DB_FLOOR: f64 = -200.0;

/// `H(e^{j pi f})` at a single normalized frequency.
pub fn dtft(coeffs: &[f64], f: f64) -> Complex64 {
    let w = PI * f;
    // Horner in z^{-1} with a complex rotation per tap.
    let rot = Complex64::from_polar(1.0, -w);
    let mut acc = Complex64::new(0.0, 0.0);
    for &c in coeffs.iter().rev() {
        acc = acc * rot + c;
    }
    acc
}

/// Zero-phase amplitude of a symmetric filter, real valued.
pub fn zero_phase_amplitude(coeffs: &[f64], f: f64) -> f64 {
    let centre = (coeffs.len() as f64 - 1.0) / 2.0;
    coeffs
        .iter()
        .enumerate()
        .map(|(k, &c)| c * (PI * f * (k as f64 - centre)).cos())
        .sum()
}

/// `|A(M w)|` of a symmetric odd-length prototype on a uniform `grid`
/// point grid over `[0, 1]`, by Clenshaw summation of its cosine series.
pub fn amplitude_on_grid(proto: &[f64], m: usize, grid: usize) -> Vec<f64> {
    let c = proto.len() / 2;
    (0..grid)
        .map(|i| {
            let f = m as f64 * i as f64 / (grid - 1).max(1) as f64;
            let x = (PI * f).cos();
            let (mut b1, mut b2) = (0.0, 0.0);
            for n in (1..=c).rev() {
                let b0 = 2.0 * proto[c + n] + 2.0 * x * b1 - b2;
                b2 = b1;
                b1 = b0;
            }
            (proto[c] + x * b1 - b2).abs()
        })
        .collect()
}

/// Uniform grid of `n` points over `[0, 1]` inclusive.
pub fn grid(n: usize) -> Vec<f64> {
    (0..n).map(|i| i as f64 / (n - 1) as f64).collect()
}

/// DTFT samples on a uniform `grid_size` point grid over `[0, 1]`.
pub fn frequency_response(coeffs: &[f64], grid_size: usize) -> Result<Vec<Complex64>> {
    if coeffs.is_empty() {
        return Err(invalid("empty coefficient sequence"));
    }
    if grid_size < 2 {
        return Err(invalid(format!("grid size must be at least 2, got {grid_size}")));
    }
    Ok(grid(grid_size).into_iter().map(|f| dtft(coeffs, f)).collect())
}

pub fn to_db(mag: f64) -> f64 {
    if mag > 0.0 {
        (20.0 * mag.log10()).max(DB_FLOOR)
    } else {
        DB_FLOOR
    }
}

pub fn magnitude_db(response: &[Complex64]) -> Vec<f64> {
    response.iter().map(|h| to_db(h.norm())).collect()
}

/// Magnitude response in dB of a real filter on `[0, 1]`.
pub fn response_db(coeffs: &[f64], grid_size: usize) -> Result<Vec<f64>> {
    Ok(magnitude_db(&frequency_response(coeffs, grid_size)?))
}

/// Minimum stopband attenuation (positive dB) over `[stopband_edge, 1]`.
pub fn min_stopband_attenuation_db(coeffs: &[f64], stopband_edge: f64, grid_size: usize) -> f64 {
    let worst = (0..=grid_size)
        .map(|i| stopband_edge + (1.0 - stopband_edge) * i as f64 / grid_size as f64)
        .map(|f| zero_phase_amplitude(coeffs, f).abs())
        .fold(0.0f64, f64::max);
    -to_db(worst)
}

/// Group delay in samples from the unwrapped phase slope at `freqs`
/// (central differences of width `step`).
pub fn measured_group_delay(coeffs: &[f64], freqs: &[f64], step: f64) -> Vec<f64> {
    freqs
        .iter()
        .map(|&f| {
            let a = dtft(coeffs, f - step);
            let b = dtft(coeffs, f + step);
            let dphi = (b * a.conj()).arg();
            -dphi / (2.0 * PI * step)
        })
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn impulse_is_flat() {
        let db = response_db(&[1.0], 64).unwrap();
        assert!(db.iter().all(|&v| v.abs() < 1e-12));
    }

    #[test]
    fn two_tap_average_has_nyquist_null() {
        let db = response_db(&[0.5, 0.5], 33).unwrap();
        assert_eq!(*db.last().unwrap(), DB_FLOOR);
        assert!(db[0].abs() < 1e-12);
    }

    #[test]
    fn rejects_bad_input() {
        assert!(frequency_response(&[], 16).is_err());
        assert!(frequency_response(&[1.0], 1).is_err());
    }

    #[test]
    fn dtft_matches_direct_sum() {
        let h = [0.3, -0.1, 0.7, 0.2];
        let f = 0.37;
        let direct: Complex64 = h
            .iter()
            .enumerate()
            .map(|(k, &c)| c * Complex64::from_polar(1.0, -PI * f * k as f64))
            .sum();
        assert!((dtft(&h, f) - direct).norm() < 1e-14);
    }

    #[test]
    fn clenshaw_matches_direct() {
        let h = [0.05, -0.1, 0.3, 0.5, 0.3, -0.1, 0.05];
        let a = amplitude_on_grid(&h, 3, 101);
        for (i, v) in a.iter().enumerate() {
            let f = 3.0 * i as f64 / 100.0;
            assert!((v - zero_phase_amplitude(&h, f).abs()).abs() < 1e-13);
        }
    }

    #[test]
    fn symmetric_filter_delay_is_half_length() {
        let h = [0.1, 0.2, 0.4, 0.2, 0.1];
        let gd = measured_group_delay(&h, &[0.1, 0.2, 0.3], 1e-4);
        for d in gd {
            assert!((d - 2.0).abs() < 1e-8);
        }
    }
}
