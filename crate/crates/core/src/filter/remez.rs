//! Weighted Chebyshev approximation by the Remez exchange algorithm.
//!
//! The engine works on the variable `x = cos(w)` and finds the polynomial
//! `P(x)` of degree `r - 1` minimising `max |W(x) (D(x) - P(x))|` over a dense
//! grid. Linear-phase FIR types are reduced to this form by the callers
//! (type I directly, type II through the `cos(w/2)` factor).

use std::f64::consts::PI;

use crate::error::{Error, Result};

/// Grid density: the grid holds `GRID_DENSITY * (order + 1)` points per
/// band on average, spread in proportion to band width.
pub const GRID_DENSITY: usize = 16;
/// Relative ripple change at which the exchange is considered converged.
pub const CONVERGENCE_TOL: f64 = 1e-6;
pub const MAX_ITERATIONS: usize = 250;

/// One approximation band, edges in normalized frequency (Nyquist = 1).
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Band {
    pub lower: f64,
    pub upper: f64,
    pub desired: f64,
    pub weight: f64,
}

impl Band {
    pub fn new(lower: f64, upper: f64, desired: f64, weight: f64) -> Self {
        Self {
            lower,
            upper,
            desired,
            weight,
        }
    }
}

#[derive(Debug, Clone, Copy)]
pub(crate) struct GridPoint {
    /// `cos(omega)` for radian frequency `omega` in [0, pi].
    pub x: f64,
    pub desired: f64,
    pub weight: f64,
    pub band: usize,
}

/// Converged polynomial in barycentric form.
#[derive(Debug, Clone)]
pub(crate) struct Solution {
    nodes: Vec<f64>,
    values: Vec<f64>,
    weights: Vec<f64>,
    /// Signed levelled error at the final reference set.
    pub delta: f64,
}

impl Solution {
    pub fn eval(&self, x: f64) -> f64 {
        let mut num = 0.0;
        let mut den = 0.0;
        for ((&xk, &ck), &bk) in self.nodes.iter().zip(&self.values).zip(&self.weights) {
            let d = x - xk;
            if d == 0.0 {
                return ck;
            }
            let t = bk / d;
            num += t * ck;
            den += t;
        }
        num / den
    }
}

/// Builds a dense grid over the given bands. `transform` maps
/// (omega, desired, weight) to the effective (desired, weight) seen by the
/// polynomial, which is how the type II factor is folded in.
pub(crate) fn build_grid(
    bands: &[Band],
    points_per_band: usize,
    transform: impl Fn(f64, f64, f64) -> (f64, f64),
) -> Vec<GridPoint> {
    let total_width: f64 = bands.iter().map(|b| b.upper - b.lower).sum();
    let total_points = (points_per_band * bands.len()) as f64;
    let mut grid = Vec::new();
    for (bi, b) in bands.iter().enumerate() {
        let share = (b.upper - b.lower) / total_width;
        let n = ((total_points * share).round() as usize).max(8);
        for i in 0..n {
            let f = b.lower + (b.upper - b.lower) * i as f64 / (n - 1) as f64;
            let omega = PI * f;
            let (desired, weight) = transform(omega, b.desired, b.weight);
            grid.push(GridPoint {
                x: omega.cos(),
                desired,
                weight,
                band: bi,
            });
        }
    }
    grid
}

/// Barycentric weights `1 / prod_{j != k}(x_k - x_j)`, computed through
/// log-magnitudes and normalized so the largest has unit magnitude.
fn barycentric_weights(nodes: &[f64]) -> Vec<f64> {
    let logs: Vec<(f64, f64)> = nodes
        .iter()
        .enumerate()
        .map(|(k, &xk)| {
            let mut log_mag = 0.0;
            let mut sign = 1.0;
            for (j, &xj) in nodes.iter().enumerate() {
                if j != k {
                    let d = xk - xj;
                    log_mag -= d.abs().ln();
                    if d < 0.0 {
                        sign = -sign;
                    }
                }
            }
            (log_mag, sign)
        })
        .collect();
    let max_log = logs.iter().map(|l| l.0).fold(f64::NEG_INFINITY, f64::max);
    logs.iter().map(|&(l, s)| s * (l - max_log).exp()).collect()
}

/// Runs the exchange for `r` basis functions (polynomial degree `r - 1`).
pub(crate) fn exchange(grid: &[GridPoint], r: usize) -> Result<Solution> {
    let m = grid.len();
    if r == 0 {
        return Err(Error::DesignFailure("no basis functions".into()));
    }
    if m < r + 1 {
        return Err(Error::DesignFailure(format!(
            "grid of {m} points too small for {r} basis functions"
        )));
    }

    // Initial reference: evenly spaced grid indices.
    let mut ext: Vec<usize> = (0..=r)
        .map(|k| ((k as f64) * (m - 1) as f64 / r as f64).round() as usize)
        .collect();
    ext.dedup();
    if ext.len() != r + 1 {
        return Err(Error::DesignFailure("degenerate initial reference".into()));
    }

    let mut prev_delta = 0.0f64;
    for iter in 1..=MAX_ITERATIONS {
        let xs: Vec<f64> = ext.iter().map(|&i| grid[i].x).collect();
        let a = barycentric_weights(&xs);
        let mut num = 0.0;
        let mut den = 0.0;
        for (k, &i) in ext.iter().enumerate() {
            let sgn = if k % 2 == 0 { 1.0 } else { -1.0 };
            num += a[k] * grid[i].desired;
            den += sgn * a[k] / grid[i].weight;
        }
        let delta = num / den;
        if !delta.is_finite() {
            return Err(Error::DesignFailure("levelled error is not finite".into()));
        }

        let nodes = xs[..r].to_vec();
        let values: Vec<f64> = ext[..r]
            .iter()
            .enumerate()
            .map(|(k, &i)| {
                let sgn = if k % 2 == 0 { 1.0 } else { -1.0 };
                grid[i].desired - sgn * delta / grid[i].weight
            })
            .collect();
        let weights = barycentric_weights(&nodes);
        let sol = Solution {
            nodes,
            values,
            weights,
            delta,
        };

        let err: Vec<f64> = grid
            .iter()
            .map(|g| g.weight * (g.desired - sol.eval(g.x)))
            .collect();
        let max_err = err.iter().fold(0.0f64, |acc, e| acc.max(e.abs()));

        let new_ext = match find_extrema(grid, &err, delta.abs(), r + 1) {
            Ok(e) => e,
            // Early references can leave too few points above the level.
            Err(_) => find_extrema(grid, &err, 0.0, r + 1)?,
        };
        let settled = new_ext == ext;
        let ripple_change = (delta.abs() - prev_delta.abs()).abs();
        let levelled = max_err - delta.abs() <= CONVERGENCE_TOL * max_err;
        let stalled = ripple_change <= CONVERGENCE_TOL * delta.abs()
            && max_err - delta.abs() <= 1e-3 * max_err;
        if settled || levelled || (iter > 1 && stalled) {
            return Ok(sol);
        }
        prev_delta = delta;
        ext = new_ext;
    }
    Err(Error::DesignFailure(format!(
        "exchange did not converge within {MAX_ITERATIONS} iterations"
    )))
}

fn find_extrema(grid: &[GridPoint], err: &[f64], level: f64, want: usize) -> Result<Vec<usize>> {
    let m = grid.len();
    let mut cand: Vec<usize> = Vec::with_capacity(2 * want);
    for i in 0..m {
        let e = err[i];
        let left = (i > 0 && grid[i - 1].band == grid[i].band).then(|| err[i - 1]);
        let right = (i + 1 < m && grid[i + 1].band == grid[i].band).then(|| err[i + 1]);
        let is_peak = if e >= 0.0 {
            left.is_none_or(|l| e >= l) && right.is_none_or(|r| e > r)
        } else {
            left.is_none_or(|l| e <= l) && right.is_none_or(|r| e < r)
        };
        if is_peak && e.abs() >= level * (1.0 - 1e-9) {
            cand.push(i);
        }
    }

    // Alternation: within a run of equal sign keep the largest magnitude.
    let mut alt: Vec<usize> = Vec::with_capacity(cand.len());
    for i in cand {
        match alt.last() {
            Some(&j) if (err[j] >= 0.0) == (err[i] >= 0.0) => {
                if err[i].abs() > err[j].abs() {
                    *alt.last_mut().unwrap() = i;
                }
            }
            _ => alt.push(i),
        }
    }

    while alt.len() > want {
        let first = err[alt[0]].abs();
        let last = err[*alt.last().unwrap()].abs();
        if first <= last {
            alt.remove(0);
        } else {
            alt.pop();
        }
    }
    if alt.len() < want {
        return Err(Error::DesignFailure(format!(
            "lost alternation: {} extrema for a reference of {want}",
            alt.len()
        )));
    }
    Ok(alt)
}

/// Equiripple type I (odd length, symmetric) FIR of even `order` over the
/// given bands. Returns the `order + 1` taps and the levelled error.
pub fn design_type1(order: usize, bands: &[Band]) -> Result<(Vec<f64>, f64)> {
    if order % 2 != 0 {
        return Err(Error::Validation(format!("type I order must be even, got {order}")));
    }
    let r = order / 2 + 1;
    let grid = build_grid(bands, GRID_DENSITY * (order + 1), |_, d, w| (d, w));
    let sol = exchange(&grid, r)?;

    let len = order + 1;
    let half = order / 2;
    let amp: Vec<f64> = (0..=half)
        .map(|m| sol.eval((2.0 * PI * m as f64 / len as f64).cos()))
        .collect();
    let mut h = vec![0.0; len];
    for k in 0..=half {
        let offset = k as f64 - half as f64;
        let mut acc = amp[0];
        for (m, &a) in amp.iter().enumerate().skip(1) {
            acc += 2.0 * a * (2.0 * PI * m as f64 * offset / len as f64).cos();
        }
        h[k] = acc / len as f64;
        h[order - k] = h[k];
    }
    Ok((h, sol.delta.abs()))
}

/// Equiripple type II (even length `2j`, symmetric) FIR approximating unity
/// over `[0, edge]` only. Returns the `2j` taps and the levelled error.
pub fn design_type2_unity(j: usize, edge: f64) -> Result<(Vec<f64>, f64)> {
    if j == 0 {
        return Err(Error::Validation("type II length must be positive".into()));
    }
    if !(edge > 0.0 && edge < 1.0) {
        return Err(Error::Validation(format!("band edge {edge} outside (0, 1)")));
    }
    let band = [Band::new(0.0, edge, 1.0, 1.0)];
    let grid = build_grid(&band, GRID_DENSITY * (2 * j), |w, d, wt| {
        let q = (w / 2.0).cos();
        (d / q, wt * q)
    });
    let sol = exchange(&grid, j)?;

    let len = 2 * j;
    let centre = (len as f64 - 1.0) / 2.0;
    // Zero-phase samples on the length-2j DFT grid; the sample at pi is zero.
    let amp: Vec<f64> = (0..j)
        .map(|k| {
            let w = 2.0 * PI * k as f64 / len as f64;
            (w / 2.0).cos() * sol.eval(w.cos())
        })
        .collect();
    let mut g = vec![0.0; len];
    for n in 0..j {
        let offset = n as f64 - centre;
        let mut acc = amp[0];
        for (k, &a) in amp.iter().enumerate().skip(1) {
            acc += 2.0 * a * (2.0 * PI * k as f64 * offset / len as f64).cos();
        }
        g[n] = acc / len as f64;
        g[len - 1 - n] = g[n];
    }
    Ok((g, sol.delta.abs()))
}

#[cfg(test)]
mod tests {
    use super::*;

    fn zero_phase(h: &[f64], f: f64) -> f64 {
        let c = (h.len() as f64 - 1.0) / 2.0;
        h.iter()
            .enumerate()
            .map(|(k, &v)| v * (PI * f * (k as f64 - c)).cos())
            .sum()
    }

    #[test]
    fn barycentric_weights_match_direct_products() {
        let nodes = [0.9, 0.3, -0.2, -0.7];
        let w = barycentric_weights(&nodes);
        let direct: Vec<f64> = (0..4)
            .map(|k| {
                1.0 / (0..4)
                    .filter(|&j| j != k)
                    .map(|j| nodes[k] - nodes[j])
                    .product::<f64>()
            })
            .collect();
        let scale = direct[0] / w[0];
        for (a, b) in w.iter().zip(&direct) {
            assert!((a * scale - b).abs() < 1e-12 * b.abs().max(1.0));
        }
    }

    #[test]
    fn lowpass_is_equiripple() {
        let bands = [Band::new(0.0, 0.2, 1.0, 1.0), Band::new(0.3, 1.0, 0.0, 1.0)];
        let (h, delta) = design_type1(30, &bands).unwrap();
        let mut worst: f64 = 0.0;
        for i in 0..=4000 {
            let f = i as f64 / 4000.0;
            let a = zero_phase(&h, f);
            if f <= 0.2 {
                worst = worst.max((a - 1.0).abs());
            } else if f >= 0.3 {
                worst = worst.max(a.abs());
            }
        }
        assert!((worst - delta).abs() < 1e-3 * delta, "{worst} vs {delta}");
    }

    #[test]
    fn type2_has_zero_at_nyquist() {
        let (g, _) = design_type2_unity(7, 0.795).unwrap();
        assert!(zero_phase(&g, 1.0).abs() < 1e-12);
        assert!((zero_phase(&g, 0.0) - 1.0).abs() < 0.05);
    }

    #[test]
    fn odd_order_type1_is_rejected() {
        let bands = [Band::new(0.0, 0.2, 1.0, 1.0), Band::new(0.3, 1.0, 0.0, 1.0)];
        assert!(matches!(design_type1(5, &bands), Err(Error::Validation(_))));
    }
}
