//! Sub-filter design, coefficient interpolation and the bandwidth
//! reconfigurable three-stage cascade.
//!
//! All frequencies are normalized so that the Nyquist frequency is 1.

pub mod cascade;
pub mod design;
pub mod io;
pub mod least_squares;
pub mod mask;
pub mod plan;
pub mod remez;
pub mod response;

pub use cascade::{
    build_cascade, coefficient_bank, group_delay_samples, group_delay_us, multiplier_count,
    Bandwidth, CascadeDesign, CoefficientBank, ComplexityReport, SAMPLE_RATE_HZ,
};
pub use design::{
    design_equiripple, design_halfband, design_least_squares, design_lowpass,
    design_lowpass_robust, interpolate_coefficients, single_stage_for_mask, DesignMethod,
};
pub use mask::{verify_filter_mask, verify_mask, verify_mask_points, MaskReport, SpectralMask, MASK_GRID};
pub use plan::{max_interpolation_factor, search_stage_plan, PlanEvaluation, StagePlan, StageTemplate};
pub use response::{frequency_response, magnitude_db, DB_FLOOR};

use crate::error::{invalid, Result};

/// Structural kind of a linear-phase lowpass sub-filter.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum FilterKind {
    GeneralLowpass,
    Halfband,
}

impl FilterKind {
    pub fn as_str(self) -> &'static str {
        match self {
            FilterKind::GeneralLowpass => "general",
            FilterKind::Halfband => "halfband",
        }
    }

    pub fn parse(s: &str) -> Result<Self> {
        match s {
            "general" | "general_lowpass" | "fir" => Ok(FilterKind::GeneralLowpass),
            "halfband" => Ok(FilterKind::Halfband),
            other => Err(invalid(format!("unknown filter kind `{other}`"))),
        }
    }

    /// Unique multipliers of a prototype of this kind at the given order.
    ///
    /// General symmetric filters need `N/2 + 1`; halfband filters only need
    /// their nonzero off-centre half, the 0.5 centre tap being a shift.
    pub fn unique_multipliers(self, order: usize) -> usize {
        match self {
            FilterKind::GeneralLowpass => order / 2 + 1,
            FilterKind::Halfband => (order + 2) / 4,
        }
    }
}

/// Design parameters of one prototype sub-filter.
#[derive(Debug, Clone, PartialEq)]
pub struct FilterSpec {
    pub order: usize,
    pub passband_edge: f64,
    pub stopband_edge: f64,
    /// Reference stopband attenuation (positive dB), informational.
    pub target_attenuation_db: Option<f64>,
    pub kind: FilterKind,
    pub interpolation_factor: usize,
}

impl FilterSpec {
    pub fn general(order: usize, passband_edge: f64, stopband_edge: f64) -> Self {
        Self {
            order,
            passband_edge,
            stopband_edge,
            target_attenuation_db: None,
            kind: FilterKind::GeneralLowpass,
            interpolation_factor: 1,
        }
    }

    pub fn halfband(order: usize, passband_edge: f64) -> Self {
        Self {
            order,
            passband_edge,
            stopband_edge: 1.0 - passband_edge,
            target_attenuation_db: None,
            kind: FilterKind::Halfband,
            interpolation_factor: 1,
        }
    }

    pub fn with_target(mut self, attenuation_db: f64) -> Self {
        self.target_attenuation_db = Some(attenuation_db);
        self
    }

    pub fn validate(&self) -> Result<()> {
        if self.order == 0 || self.order % 2 != 0 {
            return Err(invalid(format!("order must be even and positive, got {}", self.order)));
        }
        let (fp, fs) = (self.passband_edge, self.stopband_edge);
        if !(fp > 0.0 && fp < 1.0 && fs > 0.0 && fs < 1.0) {
            return Err(invalid(format!("band edges ({fp}, {fs}) must lie in (0, 1)")));
        }
        if fp >= fs {
            return Err(invalid(format!(
                "passband edge {fp} must be below stopband edge {fs}"
            )));
        }
        if self.interpolation_factor == 0 {
            return Err(invalid("interpolation factor must be at least 1"));
        }
        if let Some(a) = self.target_attenuation_db {
            if !(a > 0.0) {
                return Err(invalid(format!("target attenuation must be positive, got {a}")));
            }
        }
        if self.kind == FilterKind::Halfband {
            if (fp + fs - 1.0).abs() > 1e-9 {
                return Err(invalid(format!(
                    "halfband edges must satisfy fp + fs = 1, got {fp} + {fs}"
                )));
            }
            if self.order % 4 != 2 {
                return Err(invalid(format!(
                    "halfband order must be 2 mod 4, got {}",
                    self.order
                )));
            }
        }
        Ok(())
    }
}

/// A designed symmetric FIR sub-filter, possibly zero-stuffed.
#[derive(Debug, Clone, PartialEq)]
pub struct DesignedFilter {
    /// Full tap sequence, length `order * M + 1`.
    pub coefficients: Vec<f64>,
    /// Stored coefficients: `h[0..=N/2]` for general filters, the nonzero
    /// even taps below the centre for halfband filters.
    pub unique_coefficients: Vec<f64>,
    pub spec: FilterSpec,
    pub method: DesignMethod,
}

impl DesignedFilter {
    /// Rebuilds a prototype (M = 1) from its stored coefficients.
    pub fn from_unique(spec: FilterSpec, unique: Vec<f64>, method: DesignMethod) -> Result<Self> {
        let n = spec.order;
        let expected = spec.kind.unique_multipliers(n);
        if unique.len() != expected {
            return Err(invalid(format!(
                "{} filter of order {n} stores {expected} coefficients, got {}",
                spec.kind.as_str(),
                unique.len()
            )));
        }
        let mut proto = vec![0.0; n + 1];
        match spec.kind {
            FilterKind::GeneralLowpass => {
                for (k, &c) in unique.iter().enumerate() {
                    proto[k] = c;
                    proto[n - k] = c;
                }
            }
            FilterKind::Halfband => {
                for (i, &c) in unique.iter().enumerate() {
                    proto[2 * i] = c;
                    proto[n - 2 * i] = c;
                }
                proto[n / 2] = 0.5;
            }
        }
        let m = spec.interpolation_factor;
        let coefficients = zero_stuff(&proto, m);
        Ok(Self {
            coefficients,
            unique_coefficients: unique,
            spec,
            method,
        })
    }

    pub fn order(&self) -> usize {
        self.spec.order
    }

    pub fn interpolation_factor(&self) -> usize {
        self.spec.interpolation_factor
    }

    pub fn kind(&self) -> FilterKind {
        self.spec.kind
    }

    pub fn len(&self) -> usize {
        self.coefficients.len()
    }

    pub fn is_empty(&self) -> bool {
        self.coefficients.is_empty()
    }

    pub fn unique_multipliers(&self) -> usize {
        self.unique_coefficients.len()
    }

    /// Group delay in samples at the output rate, `N * M / 2`.
    pub fn group_delay(&self) -> usize {
        self.spec.order * self.spec.interpolation_factor / 2
    }

    /// Taps of the non-interpolated prototype.
    pub fn prototype(&self) -> Vec<f64> {
        self.coefficients
            .iter()
            .step_by(self.spec.interpolation_factor)
            .copied()
            .collect()
    }

    /// Measured minimum stopband attenuation (positive dB) of the prototype.
    pub fn stopband_attenuation_db(&self) -> f64 {
        response::min_stopband_attenuation_db(&self.prototype(), self.spec.stopband_edge, 8192)
    }
}

pub(crate) fn zero_stuff(proto: &[f64], m: usize) -> Vec<f64> {
    if m <= 1 {
        return proto.to_vec();
    }
    let mut out = vec![0.0; (proto.len() - 1) * m + 1];
    for (k, &c) in proto.iter().enumerate() {
        out[k * m] = c;
    }
    out
}
