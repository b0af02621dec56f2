//! Prototype sub-filter design and coefficient interpolation.

use std::f64::consts::PI;

use super::mask::{verify_mask, SpectralMask};
use super::remez::Band;
use super::{least_squares, remez, response, DesignedFilter, FilterKind, FilterSpec};
use crate::error::{invalid, Error, Result};

/// Algorithm that produced a set of coefficients.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum DesignMethod {
    /// Unit-weight least squares with don't-care transition band.
    LeastSquares,
    /// Unit-weight Chebyshev (Parks-McClellan style exchange).
    Equiripple,
    /// Kaiser-windowed ideal lowpass, used when the exchange fails.
    KaiserWindow,
}

impl DesignMethod {
    pub fn as_str(self) -> &'static str {
        match self {
            DesignMethod::LeastSquares => "least_squares",
            DesignMethod::Equiripple => "equiripple",
            DesignMethod::KaiserWindow => "kaiser",
        }
    }

    pub fn parse(s: &str) -> Result<Self> {
        match s {
            "least_squares" | "ls" => Ok(DesignMethod::LeastSquares),
            "equiripple" | "pm" | "remez" => Ok(DesignMethod::Equiripple),
            "kaiser" => Ok(DesignMethod::KaiserWindow),
            other => Err(invalid(format!("unknown design method `{other}`"))),
        }
    }
}

fn two_bands(spec: &FilterSpec) -> [Band; 2] {
    [
        Band::new(0.0, spec.passband_edge, 1.0, 1.0),
        Band::new(spec.stopband_edge, 1.0, 0.0, 1.0),
    ]
}

/// Designs the prototype (interpolation factor forced to 1) of `spec`.
pub fn design_lowpass(spec: &FilterSpec, method: DesignMethod) -> Result<DesignedFilter> {
    let mut spec = spec.clone();
    spec.interpolation_factor = 1;
    spec.validate()?;
    if spec.kind == FilterKind::Halfband {
        return design_halfband_spec(spec, method);
    }
    let taps = match method {
        DesignMethod::LeastSquares => least_squares::design_type1(spec.order, &two_bands(&spec))?,
        DesignMethod::Equiripple => remez::design_type1(spec.order, &two_bands(&spec))?.0,
        DesignMethod::KaiserWindow => kaiser_lowpass(&spec),
    };
    let unique = taps[..=spec.order / 2].to_vec();
    DesignedFilter::from_unique(spec, unique, method)
}

/// Unit-weight equiripple design of a general lowpass prototype.
pub fn design_equiripple(spec: &FilterSpec) -> Result<DesignedFilter> {
    if spec.kind != FilterKind::GeneralLowpass {
        return Err(invalid("design_equiripple expects a general lowpass spec"));
    }
    design_lowpass(spec, DesignMethod::Equiripple)
}

/// Unit-weight least-squares design of a general lowpass prototype.
pub fn design_least_squares(spec: &FilterSpec) -> Result<DesignedFilter> {
    if spec.kind != FilterKind::GeneralLowpass {
        return Err(invalid("design_least_squares expects a general lowpass spec"));
    }
    design_lowpass(spec, DesignMethod::LeastSquares)
}

/// Equiripple design that falls back to a Kaiser window if the exchange
/// does not converge.
pub fn design_lowpass_robust(spec: &FilterSpec) -> Result<DesignedFilter> {
    match design_lowpass(spec, DesignMethod::Equiripple) {
        Err(Error::DesignFailure(_)) => design_lowpass(spec, DesignMethod::KaiserWindow),
        other => other,
    }
}

/// Halfband prototype with band edges `(passband_edge, 1 - passband_edge)`.
///
/// The nonzero off-centre taps come from a type II subfilter of length
/// `(order + 2) / 2` fitted to unity over `[0, 2 * passband_edge]`; the odd
/// taps are exactly zero and the centre tap is exactly 0.5.
pub fn design_halfband(order: usize, passband_edge: f64, method: DesignMethod) -> Result<DesignedFilter> {
    let spec = FilterSpec::halfband(order, passband_edge);
    spec.validate()?;
    design_halfband_spec(spec, method)
}

fn design_halfband_spec(spec: FilterSpec, method: DesignMethod) -> Result<DesignedFilter> {
    let j = (spec.order + 2) / 4;
    let edge = 2.0 * spec.passband_edge;
    // beta[m-1] multiplies cos((m - 1/2) t); h[2i] = beta[j - 1 - i] / 4.
    let beta: Vec<f64> = match method {
        DesignMethod::LeastSquares => least_squares::design_type2_unity(j, edge)?,
        DesignMethod::Equiripple => {
            let (g, _) = remez::design_type2_unity(j, edge)?;
            (1..=j).map(|m| 2.0 * g[j - 1 + m]).collect()
        }
        DesignMethod::KaiserWindow => {
            let taps = kaiser_lowpass(&spec);
            let half = spec.order / 2;
            (1..=j).map(|m| 4.0 * taps[half + 2 * m - 1]).collect()
        }
    };
    let unique = (0..j).map(|i| beta[j - 1 - i] / 4.0).collect();
    DesignedFilter::from_unique(spec, unique, method)
}

/// Kaiser-windowed sinc at the band-edge midpoint; beta follows from the
/// attenuation the order and transition width can support.
fn kaiser_lowpass(spec: &FilterSpec) -> Vec<f64> {
    let n = spec.order;
    let cutoff = 0.5 * (spec.passband_edge + spec.stopband_edge);
    let transition = PI * (spec.stopband_edge - spec.passband_edge);
    let atten = 2.285 * n as f64 * transition + 7.95;
    let beta = if atten > 50.0 {
        0.1102 * (atten - 8.7)
    } else if atten >= 21.0 {
        0.5842 * (atten - 21.0).powf(0.4) + 0.07886 * (atten - 21.0)
    } else {
        0.0
    };
    let i0_beta = bessel_i0(beta);
    let half = n as f64 / 2.0;
    (0..=n)
        .map(|k| {
            let t = k as f64 - half;
            let ideal = if t == 0.0 {
                cutoff
            } else {
                (PI * cutoff * t).sin() / (PI * t)
            };
            let r = if half > 0.0 { t / half } else { 0.0 };
            ideal * bessel_i0(beta * (1.0 - r * r).max(0.0).sqrt()) / i0_beta
        })
        .collect()
}

fn bessel_i0(x: f64) -> f64 {
    let mut sum = 1.0;
    let mut term = 1.0;
    let q = x * x / 4.0;
    for k in 1..200 {
        term *= q / (k * k) as f64;
        sum += term;
        if term < 1e-17 * sum {
            break;
        }
    }
    sum
}

/// Zero-stuffs a prototype by `m`: `H_out(w) = H_in(m w)`.
pub fn interpolate_coefficients(f: &DesignedFilter, m: usize) -> Result<DesignedFilter> {
    if m == 0 {
        return Err(invalid("interpolation factor must be at least 1"));
    }
    if f.spec.interpolation_factor != 1 {
        return Err(invalid(format!(
            "filter is already interpolated by {}",
            f.spec.interpolation_factor
        )));
    }
    let mut spec = f.spec.clone();
    spec.interpolation_factor = m;
    Ok(DesignedFilter {
        coefficients: super::zero_stuff(&f.coefficients, m),
        unique_coefficients: f.unique_coefficients.clone(),
        spec,
        method: f.method,
    })
}

/// Smallest even-order unit-weight equiripple lowpass whose response meets
/// `mask`, with band edges taken from the mask's passband and first
/// stopband frequency. Orders are searched upward from `min_order`.
pub fn single_stage_for_mask(
    mask: &SpectralMask,
    min_order: usize,
    max_order: usize,
) -> Result<DesignedFilter> {
    let fp = mask.passband_edge();
    let fs = mask.stopband_edge();
    let grid = 8192;
    let start = min_order.max(2) + min_order % 2;
    let mut order = start;
    // Coarse upward steps, then refine downward to the first passing order.
    let mut step = 16;
    let mut last_fail = start.saturating_sub(2);
    loop {
        if order > max_order {
            return Err(Error::DesignFailure(format!(
                "no order up to {max_order} meets mask `{}`",
                mask.name
            )));
        }
        let f = design_lowpass_robust(&FilterSpec::general(order, fp, fs))?;
        let db = response::response_db(&f.coefficients, grid)?;
        if verify_mask(&db, mask).pass {
            if step == 2 || order == start {
                return Ok(f);
            }
            // Passing at `order`; search (last_fail, order] in steps of 2.
            let mut best = f;
            let mut o = order - 2;
            while o > last_fail {
                let g = design_lowpass_robust(&FilterSpec::general(o, fp, fs))?;
                let db = response::response_db(&g.coefficients, grid)?;
                if !verify_mask(&db, mask).pass {
                    break;
                }
                best = g;
                o -= 2;
            }
            return Ok(best);
        }
        last_fail = order;
        order += step;
        if order > max_order && step > 2 {
            step = 2;
            order = last_fail + 2;
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::filter::response::zero_phase_amplitude;

    #[test]
    fn three_tap_equiripple_is_symmetric() {
        let f = design_equiripple(&FilterSpec::general(2, 0.1, 0.9)).unwrap();
        assert_eq!(f.coefficients.len(), 3);
        assert_eq!(f.coefficients[0], f.coefficients[2]);
    }

    #[test]
    fn halfband_structure_is_exact() {
        for method in [DesignMethod::LeastSquares, DesignMethod::Equiripple, DesignMethod::KaiserWindow] {
            let f = design_halfband(26, 0.3975, method).unwrap();
            let h = &f.coefficients;
            assert_eq!(h[13], 0.5);
            for k in (1..27).step_by(2) {
                if k != 13 {
                    assert_eq!(h[k], 0.0, "{method:?} tap {k}");
                }
            }
            assert_eq!(f.unique_coefficients.len(), 7);
            assert!((zero_phase_amplitude(h, 0.0) - 1.0).abs() < 0.05);
            // H(0) + H(pi) = 2 * 0.5 for any halfband.
            let sum = zero_phase_amplitude(h, 0.0) + zero_phase_amplitude(h, 1.0);
            assert!((sum - 1.0).abs() < 1e-12);
        }
    }

    #[test]
    fn halfband_rejects_bad_order() {
        assert!(design_halfband(24, 0.4, DesignMethod::LeastSquares).is_err());
    }

    #[test]
    fn interpolation_by_one_is_identity() {
        let f = design_least_squares(&FilterSpec::general(10, 0.3, 0.5)).unwrap();
        let g = interpolate_coefficients(&f, 1).unwrap();
        assert_eq!(f.coefficients, g.coefficients);
        assert!(interpolate_coefficients(&interpolate_coefficients(&f, 2).unwrap(), 2).is_err());
    }

    #[test]
    fn kaiser_fallback_is_lowpass() {
        let f = design_lowpass(&FilterSpec::general(40, 0.2, 0.35), DesignMethod::KaiserWindow).unwrap();
        assert!((zero_phase_amplitude(&f.coefficients, 0.0) - 1.0).abs() < 0.01);
        assert!(f.stopband_attenuation_db() > 40.0);
    }
}
