//! Weighted least-squares linear-phase design with don't-care transition
//! bands, solved from the closed-form normal equations.

use nalgebra::{DMatrix, DVector};

use super::remez::Band;
use crate::error::{Error, Result};
use std::f64::consts::PI;

/// `int_{a}^{b} cos(k w) dw` for real `k`.
fn cos_integral(k: f64, a: f64, b: f64) -> f64 {
    if k == 0.0 {
        b - a
    } else {
        ((k * b).sin() - (k * a).sin()) / k
    }
}

fn solve(gram: DMatrix<f64>, rhs: DVector<f64>) -> Result<DVector<f64>> {
    if let Some(ch) = gram.clone().cholesky() {
        return Ok(ch.solve(&rhs));
    }
    gram.lu()
        .solve(&rhs)
        .ok_or_else(|| Error::DesignFailure("singular least-squares system".into()))
}

/// Type I filter of even `order`; each band has constant desired value.
pub fn design_type1(order: usize, bands: &[Band]) -> Result<Vec<f64>> {
    if order % 2 != 0 {
        return Err(Error::Validation(format!("type I order must be even, got {order}")));
    }
    let r = order / 2 + 1;
    let mut gram = DMatrix::<f64>::zeros(r, r);
    let mut rhs = DVector::<f64>::zeros(r);
    for b in bands {
        let (lo, hi) = (PI * b.lower, PI * b.upper);
        for m in 0..r {
            rhs[m] += b.weight * b.desired * cos_integral(m as f64, lo, hi);
            for n in 0..=m {
                let v = 0.5
                    * b.weight
                    * (cos_integral((m - n) as f64, lo, hi) + cos_integral((m + n) as f64, lo, hi));
                gram[(m, n)] += v;
                if n != m {
                    gram[(n, m)] += v;
                }
            }
        }
    }
    // A(w) = a_0 + sum a_n cos(n w)  =>  h[N/2] = a_0, h[N/2 +- n] = a_n / 2
    let a = solve(gram, rhs)?;
    let half = order / 2;
    let mut h = vec![0.0; order + 1];
    h[half] = a[0];
    for n in 1..r {
        h[half - n] = a[n] / 2.0;
        h[half + n] = a[n] / 2.0;
    }
    Ok(h)
}

/// Coefficients `beta_m` of `G(t) = sum_{m=1}^{j} beta_m cos((m - 1/2) t)`
/// minimising `int_0^{pi edge} (G - 1)^2`.
pub fn design_type2_unity(j: usize, edge: f64) -> Result<Vec<f64>> {
    if j == 0 {
        return Err(Error::Validation("type II length must be positive".into()));
    }
    let hi = PI * edge;
    let mut gram = DMatrix::<f64>::zeros(j, j);
    let mut rhs = DVector::<f64>::zeros(j);
    for m in 0..j {
        let km = m as f64 + 0.5;
        rhs[m] = cos_integral(km, 0.0, hi);
        for n in 0..=m {
            let kn = n as f64 + 0.5;
            let v = 0.5 * (cos_integral(km - kn, 0.0, hi) + cos_integral(km + kn, 0.0, hi));
            gram[(m, n)] = v;
            gram[(n, m)] = v;
        }
    }
    Ok(solve(gram, rhs)?.iter().copied().collect())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::filter::response::zero_phase_amplitude;

    #[test]
    fn wide_transition_lowpass_is_accurate() {
        let bands = [Band::new(0.0, 0.2, 1.0, 1.0), Band::new(0.6, 1.0, 0.0, 1.0)];
        let h = design_type1(20, &bands).unwrap();
        assert!((zero_phase_amplitude(&h, 0.0) - 1.0).abs() < 1e-3);
        assert!(zero_phase_amplitude(&h, 0.8).abs() < 1e-3);
        for k in 0..h.len() {
            assert_eq!(h[k], h[h.len() - 1 - k]);
        }
    }

    #[test]
    fn type2_fits_unity() {
        let beta = design_type2_unity(4, 0.3975).unwrap();
        let g: f64 = beta
            .iter()
            .enumerate()
            .map(|(m, b)| b * ((m as f64 + 0.5) * 0.1).cos())
            .sum();
        assert!((g - 1.0).abs() < 1e-3);
    }
}
