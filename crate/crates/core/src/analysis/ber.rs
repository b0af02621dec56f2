//! Bit error counting and the M-QAM error-rate oracle.

use num_complex::Complex64;

use crate::channel::{draw_channel, ChannelProfile};
use crate::error::{invalid, Result};
use crate::rng::trial_rng;

/// 97.5% standard normal quantile.
pub const Z95: f64 = 1.959_963_984_540_054;
/// Minimum Monte-Carlo draws for the fading expectation.
pub const MIN_FADING_DRAWS: usize = 100_000;

/// Gaussian tail probability.
pub fn q_function(x: f64) -> f64 {
    0.5 * libm::erfc(x / std::f64::consts::SQRT_2)
}

/// Wilson score interval `(low, high)` for `errors` out of `bits`.
pub fn wilson_interval(errors: u64, bits: u64) -> (f64, f64) {
    if bits == 0 {
        return (0.0, 1.0);
    }
    let n = bits as f64;
    let p = errors as f64 / n;
    let z2 = Z95 * Z95;
    let denom = 1.0 + z2 / n;
    let centre = (p + z2 / (2.0 * n)) / denom;
    let half = Z95 / denom * (p * (1.0 - p) / n + z2 / (4.0 * n * n)).sqrt();
    let lo = if errors == 0 { 0.0 } else { (centre - half).max(0.0) };
    let hi = if errors == bits { 1.0 } else { (centre + half).min(1.0) };
    (lo, hi)
}

/// Error and bit counters; merging is associative and commutative.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq)]
pub struct BerCounter {
    pub errors: u64,
    pub bits: u64,
}

impl BerCounter {
    pub fn count(tx: &[u8], rx: &[u8]) -> Result<Self> {
        if tx.len() != rx.len() {
            return Err(invalid(format!("bit streams differ in length: {} vs {}", tx.len(), rx.len())));
        }
        let errors = tx.iter().zip(rx).filter(|(a, b)| (*a & 1) != (*b & 1)).count() as u64;
        Ok(Self { errors, bits: tx.len() as u64 })
    }

    pub fn merge(self, o: Self) -> Self {
        Self { errors: self.errors + o.errors, bits: self.bits + o.bits }
    }

    pub fn point(self, snr_db: f64) -> Result<BerPoint> {
        BerPoint::new(snr_db, self.errors, self.bits)
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct BerPoint {
    pub snr_db: f64,
    pub bit_errors: u64,
    pub bits: u64,
    pub ber: f64,
    /// Half width of the Wilson 95% interval.
    pub confidence_half_width_95: f64,
}

impl BerPoint {
    pub fn new(snr_db: f64, bit_errors: u64, bits: u64) -> Result<Self> {
        if bits == 0 {
            return Err(invalid("a BER point needs at least one bit"));
        }
        if bit_errors > bits {
            return Err(invalid("more bit errors than bits"));
        }
        let (lo, hi) = wilson_interval(bit_errors, bits);
        Ok(Self {
            snr_db,
            bit_errors,
            bits,
            ber: bit_errors as f64 / bits as f64,
            confidence_half_width_95: (hi - lo) / 2.0,
        })
    }

    pub fn interval(&self) -> (f64, f64) {
        wilson_interval(self.bit_errors, self.bits)
    }

    /// Binomial standard deviation of the estimate around `p`.
    pub fn sigma_at(&self, p: f64) -> f64 {
        (p * (1.0 - p) / self.bits as f64).sqrt()
    }
}

/// Counts errors between two equal-length bit streams.
pub fn measure_ber(tx_bits: &[u8], rx_bits: &[u8], snr_db: f64) -> Result<BerPoint> {
    BerCounter::count(tx_bits, rx_bits)?.point(snr_db)
}

/// How the per-subcarrier channel power gain `lambda` is averaged.
#[derive(Debug, Clone, PartialEq)]
pub enum FadingModel {
    /// `lambda = 1`.
    None,
    /// Expectation over channel realizations of `profile`, evaluated at
    /// the subcarrier frequencies (cycles per sample).
    MonteCarlo { profile: ChannelProfile, frequencies: Vec<f64>, draws: usize, seed: u64 },
}

fn square_root_order(order: usize) -> Result<usize> {
    let r = (order as f64).sqrt().round() as usize;
    if order < 4 || r * r != order || !r.is_power_of_two() {
        return Err(invalid(format!("M = {order} is not a square QAM order")));
    }
    Ok(r)
}

/// Conditional BER of square M-QAM at effective bit SNR `gamma`.
fn mqam_conditional(order: usize, sqrt_m: usize, gamma: f64) -> f64 {
    let m = order as f64;
    let k = m.log2();
    let arg = (3.0 * k * gamma / (m - 1.0)).sqrt();
    let sum: f64 = (1..=sqrt_m / 2).map(|i| q_function((2 * i - 1) as f64 * arg)).sum();
    (4.0 / k) * (1.0 - 1.0 / sqrt_m as f64) * sum
}

/// Subcarrier-averaged BER of square M-QAM.
///
/// Per subcarrier the argument is `3 log2(M) H_k^2 lambda P / ((M-1)(P_N + I))`
/// with `snr_linear = P / P_N` (energy per bit over noise density) and
/// `interference_power = I / P`. `filter_gain_hk2` holds `H_k^2` per
/// subcarrier; an empty slice means one unit-gain subcarrier (or one per
/// fading frequency).
pub fn theoretical_ber_mqam(
    order: usize,
    snr_linear: f64,
    interference_power: f64,
    filter_gain_hk2: &[f64],
    fading: &FadingModel,
) -> Result<f64> {
    let sqrt_m = square_root_order(order)?;
    if !(snr_linear > 0.0) {
        return Err(invalid("SNR must be positive"));
    }
    if !(interference_power >= 0.0) {
        return Err(invalid("interference power must be non-negative"));
    }
    // P / (P_N + I) in units of the per-bit SNR.
    let base = if snr_linear.is_infinite() { 1.0 / interference_power } else { 1.0 / (1.0 / snr_linear + interference_power) };
    match fading {
        FadingModel::None => {
            let h: Vec<f64> = if filter_gain_hk2.is_empty() { vec![1.0] } else { filter_gain_hk2.to_vec() };
            Ok(h.iter().map(|&g| mqam_conditional(order, sqrt_m, g * base)).sum::<f64>() / h.len() as f64)
        }
        FadingModel::MonteCarlo { profile, frequencies, draws, seed } => {
            if *draws < MIN_FADING_DRAWS {
                return Err(invalid(format!("fading average needs at least {MIN_FADING_DRAWS} draws")));
            }
            if frequencies.is_empty() {
                return Err(invalid("fading average needs subcarrier frequencies"));
            }
            if !filter_gain_hk2.is_empty() && filter_gain_hk2.len() != frequencies.len() {
                return Err(invalid("filter gains and frequencies differ in length"));
            }
            let mut rng = trial_rng(*seed, 0);
            let rot: Vec<Vec<Complex64>> = frequencies
                .iter()
                .map(|&f| {
                    (0..=profile.max_delay())
                        .map(|l| Complex64::from_polar(1.0, -2.0 * std::f64::consts::PI * f * l as f64))
                        .collect()
                })
                .collect();
            let mut acc = 0.0;
            for _ in 0..*draws {
                let c = draw_channel(profile, &mut rng);
                for (k, r) in rot.iter().enumerate() {
                    let ck: Complex64 = c.iter().zip(r).map(|(a, b)| a * b).sum();
                    let g = filter_gain_hk2.get(k).copied().unwrap_or(1.0);
                    acc += mqam_conditional(order, sqrt_m, g * ck.norm_sqr() * base);
                }
            }
            Ok(acc / (*draws * frequencies.len()) as f64)
        }
    }
}
