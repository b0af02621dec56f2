//! The three-stage reconfigurable cascade, its complexity accounting and
//! the shared coefficient bank.

use std::collections::BTreeMap;
use std::sync::{Arc, OnceLock};

use super::design::{design_halfband, design_lowpass, DesignMethod};
use super::{DesignedFilter, FilterKind, FilterSpec};
use crate::error::{invalid, Error, Result};

/// Filtered sample rate.
pub const SAMPLE_RATE_HZ: f64 = 4.0e6;
/// Filter I stopband edge of the widest bandwidth.
pub const F_M_REFERENCE: f64 = 0.795;
/// Prototype orders of the three stages.
pub const STAGE_ORDERS: [usize; 3] = [26, 26, 14];
/// Interpolation factors of the three stages.
pub const STAGE_FACTORS: [usize; 3] = [4, 2, 1];

/// Supported transmission bandwidths.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum Bandwidth {
    Khz342,
    Khz498,
    Khz654,
    Khz732,
}

impl Bandwidth {
    pub const ALL: [Bandwidth; 4] = [
        Bandwidth::Khz342,
        Bandwidth::Khz498,
        Bandwidth::Khz654,
        Bandwidth::Khz732,
    ];
    /// Reference attenuations of the shared masking filters (dB).
    pub const FILTER2_ATTENUATION_DB: f64 = 43.1;
    pub const FILTER3_ATTENUATION_DB: f64 = 81.8;

    pub fn from_khz(khz: u32) -> Result<Self> {
        match khz {
            342 => Ok(Bandwidth::Khz342),
            498 => Ok(Bandwidth::Khz498),
            654 => Ok(Bandwidth::Khz654),
            732 => Ok(Bandwidth::Khz732),
            other => Err(invalid(format!(
                "unsupported bandwidth {other} kHz (expected 342, 498, 654 or 732)"
            ))),
        }
    }

    pub fn khz(self) -> u32 {
        match self {
            Bandwidth::Khz342 => 342,
            Bandwidth::Khz498 => 498,
            Bandwidth::Khz654 => 654,
            Bandwidth::Khz732 => 732,
        }
    }

    /// Filter I prototype band edges `(Fp1, Fs1)`.
    pub fn filter1_edges(self) -> (f64, f64) {
        match self {
            Bandwidth::Khz342 => (0.3418, 0.6724),
            Bandwidth::Khz498 => (0.498, 0.6724),
            Bandwidth::Khz654 => (0.6543, 0.795),
            Bandwidth::Khz732 => (0.7324, 0.795),
        }
    }

    /// Reference Filter I attenuation (dB) for this bandwidth.
    pub fn filter1_attenuation_db(self) -> f64 {
        match self {
            Bandwidth::Khz342 => 70.5,
            Bandwidth::Khz498 => 37.9,
            Bandwidth::Khz654 => 31.5,
            Bandwidth::Khz732 => 14.5,
        }
    }

    /// Signal band edges `(Fp_s, Fs_s)` at the filtered rate, `Fp1 / 4`.
    pub fn signal_edges(self) -> (f64, f64) {
        let (fp, fs) = self.filter1_edges();
        let m = STAGE_FACTORS[0] as f64;
        (fp / m, fs / m)
    }
}

impl std::fmt::Display for Bandwidth {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        write!(f, "{} kHz", self.khz())
    }
}

/// An ordered chain of zero-stuffed sub-filters.
#[derive(Debug, Clone, PartialEq)]
pub struct CascadeDesign {
    pub bandwidth: Option<Bandwidth>,
    pub stages: Vec<Arc<DesignedFilter>>,
    pub reference_frequency_fm: f64,
}

impl CascadeDesign {
    /// Arbitrary chain, e.g. a single-stage comparison filter.
    pub fn from_stages(stages: Vec<DesignedFilter>) -> Result<Self> {
        if stages.is_empty() {
            return Err(invalid("cascade needs at least one stage"));
        }
        Ok(Self {
            bandwidth: None,
            stages: stages.into_iter().map(Arc::new).collect(),
            reference_frequency_fm: F_M_REFERENCE,
        })
    }

    pub fn bandwidth_khz(&self) -> Option<u32> {
        self.bandwidth.map(Bandwidth::khz)
    }

    /// Length of the expanded single response.
    pub fn expanded_len(&self) -> usize {
        self.stages.iter().map(|s| s.len() - 1).sum::<usize>() + 1
    }
}

fn masking_specs() -> (FilterSpec, FilterSpec) {
    let mut f2 = FilterSpec::halfband(STAGE_ORDERS[1], F_M_REFERENCE / 2.0)
        .with_target(Bandwidth::FILTER2_ATTENUATION_DB);
    f2.interpolation_factor = STAGE_FACTORS[1];
    let mut f3 = FilterSpec::halfband(STAGE_ORDERS[2], F_M_REFERENCE / 4.0)
        .with_target(Bandwidth::FILTER3_ATTENUATION_DB);
    f3.interpolation_factor = STAGE_FACTORS[2];
    (f2, f3)
}

fn design_stage(spec: &FilterSpec, method: DesignMethod) -> Result<DesignedFilter> {
    let proto = match spec.kind {
        FilterKind::Halfband => design_halfband(spec.order, spec.passband_edge, method)?,
        FilterKind::GeneralLowpass => design_lowpass(spec, method)?,
    };
    let mut stage = super::design::interpolate_coefficients(&proto, spec.interpolation_factor)?;
    stage.spec.target_attenuation_db = spec.target_attenuation_db;
    Ok(stage)
}

/// Filter I spec for a bandwidth.
pub fn filter1_spec(bw: Bandwidth) -> FilterSpec {
    let (fp, fs) = bw.filter1_edges();
    let mut spec = FilterSpec::general(STAGE_ORDERS[0], fp, fs).with_target(bw.filter1_attenuation_db());
    spec.interpolation_factor = STAGE_FACTORS[0];
    spec
}

fn shared_masking(method: DesignMethod) -> Result<(Arc<DesignedFilter>, Arc<DesignedFilter>)> {
    let (s2, s3) = masking_specs();
    Ok((
        Arc::new(design_stage(&s2, method)?),
        Arc::new(design_stage(&s3, method)?),
    ))
}

/// Least-squares cascade for one bandwidth. Filters II and III are the
/// same shared objects for every bandwidth.
pub fn build_cascade(bandwidth_khz: u32) -> Result<CascadeDesign> {
    static SHARED: OnceLock<(Arc<DesignedFilter>, Arc<DesignedFilter>)> = OnceLock::new();
    let bw = Bandwidth::from_khz(bandwidth_khz)?;
    let shared = match SHARED.get() {
        Some(s) => s.clone(),
        None => {
            let s = shared_masking(DesignMethod::LeastSquares)?;
            SHARED.get_or_init(|| s).clone()
        }
    };
    assemble(bw, DesignMethod::LeastSquares, shared)
}

/// Cascade with every sub-filter designed by `method`.
pub fn build_cascade_with(bandwidth_khz: u32, method: DesignMethod) -> Result<CascadeDesign> {
    let bw = Bandwidth::from_khz(bandwidth_khz)?;
    assemble(bw, method, shared_masking(method)?)
}

fn assemble(
    bw: Bandwidth,
    method: DesignMethod,
    (f2, f3): (Arc<DesignedFilter>, Arc<DesignedFilter>),
) -> Result<CascadeDesign> {
    let f1 = design_stage(&filter1_spec(bw), method)?;
    Ok(CascadeDesign {
        bandwidth: Some(bw),
        stages: vec![Arc::new(f1), f2, f3],
        reference_frequency_fm: F_M_REFERENCE,
    })
}

/// `sum (N_i / 2) M_i`.
pub fn group_delay_samples(c: &CascadeDesign) -> usize {
    c.stages.iter().map(|s| s.group_delay()).sum()
}

pub fn group_delay_us(c: &CascadeDesign, sample_rate_hz: f64) -> f64 {
    group_delay_samples(c) as f64 / sample_rate_hz * 1e6
}

#[derive(Debug, Clone, PartialEq)]
pub struct ComplexityReport {
    pub per_stage: Vec<usize>,
    pub total_multipliers: usize,
    pub group_delay_samples: usize,
    pub group_delay_us: f64,
}

pub fn multiplier_count(c: &CascadeDesign) -> ComplexityReport {
    let per_stage: Vec<usize> = c.stages.iter().map(|s| s.kind().unique_multipliers(s.order())).collect();
    ComplexityReport {
        total_multipliers: per_stage.iter().sum(),
        per_stage,
        group_delay_samples: group_delay_samples(c),
        group_delay_us: group_delay_us(c, SAMPLE_RATE_HZ),
    }
}

/// Stored coefficients for all bandwidths with shared masking filters.
#[derive(Debug, Clone, PartialEq)]
pub struct CoefficientBank {
    pub filter1_sets: BTreeMap<u32, Vec<f64>>,
    pub filter2_unique: Vec<f64>,
    pub filter3_unique: Vec<f64>,
    filter1_specs: BTreeMap<u32, FilterSpec>,
    filter2_spec: FilterSpec,
    filter3_spec: FilterSpec,
    method: DesignMethod,
}

impl CoefficientBank {
    /// Number of stored values; halfband centre taps are not stored.
    pub fn stored_count(&self) -> usize {
        self.filter1_sets.values().map(Vec::len).sum::<usize>()
            + self.filter2_unique.len()
            + self.filter3_unique.len()
    }

    /// Storage needed with per-bandwidth masking filters, each stored as a
    /// general symmetric half `N/2 + 1`.
    pub fn naive_count(&self) -> usize {
        let per_bw: usize = [&self.filter2_spec, &self.filter3_spec]
            .iter()
            .map(|s| s.order / 2 + 1)
            .sum::<usize>()
            + STAGE_ORDERS[0] / 2
            + 1;
        per_bw * self.filter1_sets.len()
    }

    /// Rebuilds the cascade for a stored bandwidth.
    pub fn reconstruct(&self, bandwidth_khz: u32) -> Result<CascadeDesign> {
        let bw = Bandwidth::from_khz(bandwidth_khz)?;
        let set = self
            .filter1_sets
            .get(&bandwidth_khz)
            .ok_or_else(|| invalid(format!("bank holds no coefficients for {bw}")))?;
        let rebuild = |spec: &FilterSpec, unique: &[f64]| -> Result<Arc<DesignedFilter>> {
            Ok(Arc::new(DesignedFilter::from_unique(spec.clone(), unique.to_vec(), self.method)?))
        };
        Ok(CascadeDesign {
            bandwidth: Some(bw),
            stages: vec![
                rebuild(&self.filter1_specs[&bandwidth_khz], set)?,
                rebuild(&self.filter2_spec, &self.filter2_unique)?,
                rebuild(&self.filter3_spec, &self.filter3_unique)?,
            ],
            reference_frequency_fm: F_M_REFERENCE,
        })
    }
}

/// Collects the stored coefficients of several bandwidth cascades.
pub fn coefficient_bank(cascades: &[CascadeDesign]) -> Result<CoefficientBank> {
    let first = cascades
        .first()
        .ok_or_else(|| invalid("coefficient bank needs at least one cascade"))?;
    if first.stages.len() != 3 {
        return Err(invalid("coefficient bank expects three-stage cascades"));
    }
    let (f2, f3) = (&first.stages[1], &first.stages[2]);
    let mut filter1_sets = BTreeMap::new();
    let mut filter1_specs = BTreeMap::new();
    for c in cascades {
        let khz = c
            .bandwidth_khz()
            .ok_or_else(|| invalid("cascade has no bandwidth label"))?;
        if c.stages.len() != 3 {
            return Err(invalid("coefficient bank expects three-stage cascades"));
        }
        if *c.stages[1] != **f2 || *c.stages[2] != **f3 {
            return Err(Error::Consistency(format!(
                "masking filters of the {khz} kHz cascade differ from the {} kHz cascade",
                first.bandwidth_khz().unwrap_or(0)
            )));
        }
        if filter1_sets
            .insert(khz, c.stages[0].unique_coefficients.clone())
            .is_some()
        {
            return Err(Error::Consistency(format!("duplicate {khz} kHz cascade")));
        }
        filter1_specs.insert(khz, c.stages[0].spec.clone());
    }
    Ok(CoefficientBank {
        filter1_sets,
        filter2_unique: f2.unique_coefficients.clone(),
        filter3_unique: f3.unique_coefficients.clone(),
        filter1_specs,
        filter2_spec: f2.spec.clone(),
        filter3_spec: f3.spec.clone(),
        method: first.stages[0].method,
    })
}
