//! Multi-stage interpolated plan evaluation and ranking.
//!
//! A plan is a chain of stages `(M_j, N_j, kind_j)`. Stage 1 is the
//! interpolated prototype with edges `M_1 * (Fp_s, Fs_s)`. Every later
//! stage keeps the shared final-scale passband `P` (the widest signal's
//! stopband edge) and places its stopband edge just below the nearest
//! image left by the previous stages, so its prototype edges are
//! `M_j * (P, c_min - P)`.

use super::cascade::{Bandwidth, CascadeDesign};
use super::design::{design_halfband, design_lowpass, interpolate_coefficients, DesignMethod};
use super::mask::{verify_mask, MaskReport, SpectralMask};
use super::response::{amplitude_on_grid, to_db};
use super::{DesignedFilter, FilterKind, FilterSpec};
use crate::error::{invalid, Result};

const EDGE_TOL: f64 = 1e-9;
const PLAN_GRID: usize = 8192;

/// `floor(1 / f_stop)`: the largest factor keeping the prototype stopband
/// edge below 1.
pub fn max_interpolation_factor(f_stop: f64) -> Result<usize> {
    if !(f_stop > 0.0 && f_stop < 1.0) {
        return Err(invalid(format!("stopband edge {f_stop} must lie in (0, 1)")));
    }
    Ok((1.0 / f_stop).floor() as usize)
}

/// One stage of a candidate plan; `order: None` asks the search for the
/// smallest order meeting the mask.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct StageTemplate {
    pub interpolation_factor: usize,
    pub order: Option<usize>,
    pub kind: FilterKind,
}

impl StageTemplate {
    pub fn fixed(interpolation_factor: usize, order: usize, kind: FilterKind) -> Self {
        Self { interpolation_factor, order: Some(order), kind }
    }

    pub fn free(interpolation_factor: usize, kind: FilterKind) -> Self {
        Self { interpolation_factor, order: None, kind }
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct StagePlan {
    pub stage_count: usize,
    pub interpolation_factors: Vec<usize>,
    pub orders: Vec<usize>,
    pub kinds: Vec<FilterKind>,
    pub total_unique_multipliers: usize,
    pub total_group_delay_samples: usize,
}

impl StagePlan {
    pub fn new(stages: &[(usize, usize, FilterKind)]) -> Self {
        Self {
            stage_count: stages.len(),
            interpolation_factors: stages.iter().map(|s| s.0).collect(),
            orders: stages.iter().map(|s| s.1).collect(),
            kinds: stages.iter().map(|s| s.2).collect(),
            total_unique_multipliers: stages.iter().map(|s| s.2.unique_multipliers(s.1)).sum(),
            total_group_delay_samples: stages.iter().map(|s| s.0 * s.1 / 2).sum(),
        }
    }

    /// Overall order `sum N_j M_j`.
    pub fn overall_order(&self) -> usize {
        self.orders
            .iter()
            .zip(&self.interpolation_factors)
            .map(|(n, m)| n * m)
            .sum()
    }
}

/// Outcome of evaluating one candidate.
#[derive(Debug, Clone)]
pub struct PlanEvaluation {
    pub name: String,
    pub templates: Vec<StageTemplate>,
    pub plan: Option<StagePlan>,
    pub feasible: bool,
    pub reason: Option<String>,
    pub mask: Option<MaskReport>,
}

impl PlanEvaluation {
    pub fn meets_mask(&self) -> bool {
        self.mask.as_ref().is_some_and(|m| m.pass)
    }
}

/// The four documented options: `{4,1}`, `{3,1}`, `{2,1}` two-stage plans
/// and the `{4,2,1}` three-stage plan.
pub fn candidate_options() -> Vec<(String, Vec<StageTemplate>)> {
    use FilterKind::{GeneralLowpass as G, Halfband as H};
    vec![
        ("option1".into(), vec![StageTemplate::fixed(4, 26, G), StageTemplate::fixed(1, 50, G)]),
        ("option2".into(), vec![StageTemplate::fixed(3, 44, G), StageTemplate::fixed(1, 24, G)]),
        ("option3".into(), vec![StageTemplate::fixed(2, 104, G), StageTemplate::fixed(1, 14, H)]),
        (
            "option4".into(),
            vec![
                StageTemplate::fixed(4, 26, G),
                StageTemplate::fixed(2, 26, H),
                StageTemplate::fixed(1, 14, H),
            ],
        ),
    ]
}

/// Prototype edges of every stage, or the reason the chain is infeasible.
pub fn stage_edges(
    factors: &[usize],
    kinds: &[FilterKind],
    bw: Bandwidth,
) -> std::result::Result<Vec<(f64, f64)>, String> {
    if factors.is_empty() || factors.len() != kinds.len() {
        return Err("plan needs one kind per stage and at least one stage".into());
    }
    let (fp_s, fs_s) = bw.signal_edges();
    let shared_pass = Bandwidth::Khz732.signal_edges().1.max(fs_s);
    let m1 = factors[0];
    if m1 == 0 || factors.iter().any(|&m| m == 0) {
        return Err("interpolation factors must be at least 1".into());
    }
    let i_max = (1.0 / fs_s).floor() as usize;
    if m1 > i_max {
        return Err(format!("stage 1 factor {m1} exceeds I_max = {i_max}"));
    }
    let mut edges = vec![(m1 as f64 * fp_s, m1 as f64 * fs_s)];
    let mut images = image_centres(m1);
    for (j, (&m, &kind)) in factors.iter().zip(kinds).enumerate().skip(1) {
        let Some(&c_min) = images.first() else {
            return Err(format!("stage {} has no image left to suppress", j + 1));
        };
        let (p, s) = (m as f64 * shared_pass, m as f64 * (c_min - shared_pass));
        if s >= 1.0 || s <= p {
            return Err(format!(
                "stage {} prototype edges ({p:.5}, {s:.5}) are not a valid lowpass",
                j + 1
            ));
        }
        if kind == FilterKind::Halfband && (p + s - 1.0).abs() > EDGE_TOL {
            return Err(format!(
                "stage {} cannot be halfband: edges ({p:.5}, {s:.5}) are not symmetric about 0.5",
                j + 1
            ));
        }
        edges.push((p, s));
        images.retain(|&c| !in_stopband(c, m, s));
        for c in image_centres(m) {
            if !images.iter().any(|&x| (x - c).abs() < EDGE_TOL) {
                images.push(c);
            }
        }
        images.sort_by(f64::total_cmp);
    }
    if kinds[0] == FilterKind::Halfband {
        let (p, s) = edges[0];
        if (p + s - 1.0).abs() > EDGE_TOL {
            return Err("stage 1 cannot be halfband for this bandwidth".into());
        }
    }
    if let Some(&c) = images.first() {
        return Err(format!("image at normalized frequency {c:.4} is never suppressed"));
    }
    Ok(edges)
}

/// Image centres `2k / M` in `(0, 1]`.
fn image_centres(m: usize) -> Vec<f64> {
    (1..)
        .map(|k| 2.0 * k as f64 / m as f64)
        .take_while(|&c| c <= 1.0 + EDGE_TOL)
        .collect()
}

/// Whether final-scale `f` falls in the stopband of a stage with factor
/// `m` and prototype stopband edge `s`.
fn in_stopband(f: f64, m: usize, s: f64) -> bool {
    let x = (m as f64 * f).rem_euclid(2.0);
    let folded = if x > 1.0 { 2.0 - x } else { x };
    folded >= s - EDGE_TOL
}

fn design_stage(m: usize, order: usize, kind: FilterKind, edges: (f64, f64)) -> Result<DesignedFilter> {
    let proto = match kind {
        FilterKind::Halfband => design_halfband(order, edges.0, DesignMethod::LeastSquares)?,
        FilterKind::GeneralLowpass => {
            design_lowpass(&FilterSpec::general(order, edges.0, edges.1), DesignMethod::LeastSquares)?
        }
    };
    interpolate_coefficients(&proto, m)
}

/// Magnitude (dB) on the uniform `[0, 1]` grid of a chain of prototypes,
/// evaluated stage by stage as `prod |H_j(M_j f)|`.
fn chain_response_db(protos: &[(usize, Vec<f64>)], grid: usize) -> Vec<f64> {
    let amps: Vec<Vec<f64>> = protos.iter().map(|(m, h)| amplitude_on_grid(h, *m, grid)).collect();
    (0..grid).map(|k| to_db(amps.iter().map(|a| a[k]).product())).collect()
}

/// Designs an explicit plan and returns the cascade with its mask report.
pub fn design_plan(
    stages: &[(usize, usize, FilterKind)],
    bw: Bandwidth,
    mask: &SpectralMask,
) -> Result<(CascadeDesign, MaskReport)> {
    let factors: Vec<usize> = stages.iter().map(|s| s.0).collect();
    let kinds: Vec<FilterKind> = stages.iter().map(|s| s.2).collect();
    let edges = stage_edges(&factors, &kinds, bw).map_err(crate::error::Error::Validation)?;
    let filters = stages
        .iter()
        .zip(&edges)
        .map(|(&(m, n, k), &e)| design_stage(m, n, k, e))
        .collect::<Result<Vec<_>>>()?;
    let protos: Vec<(usize, Vec<f64>)> = filters
        .iter()
        .map(|f| (f.interpolation_factor(), f.prototype()))
        .collect();
    let report = verify_mask(&chain_response_db(&protos, PLAN_GRID), mask);
    let mut cascade = CascadeDesign::from_stages(filters)?;
    cascade.bandwidth = Some(bw);
    Ok((cascade, report))
}

fn smallest_order(kind: FilterKind) -> usize {
    match kind {
        FilterKind::GeneralLowpass => 2,
        FilterKind::Halfband => 2,
    }
}

fn next_order(kind: FilterKind, n: usize) -> usize {
    match kind {
        FilterKind::GeneralLowpass => n + 2,
        FilterKind::Halfband => n + 4,
    }
}

/// Resolves free orders by exhaustive search up to `max_order`, keeping
/// the assignment with the fewest multipliers (then lowest delay).
fn resolve_orders(
    templates: &[StageTemplate],
    edges: &[(f64, f64)],
    mask: &SpectralMask,
    max_order: usize,
) -> Result<Option<(Vec<usize>, MaskReport)>> {
    let free: Vec<usize> = (0..templates.len()).filter(|&i| templates[i].order.is_none()).collect();
    let mut orders: Vec<usize> = templates
        .iter()
        .map(|t| t.order.unwrap_or(smallest_order(t.kind)))
        .collect();
    let cap = templates.iter().filter_map(|t| t.order).fold(max_order, usize::max);
    // |H_i(M_i f)| on the grid, per stage and order.
    let mut cache: Vec<Vec<Option<Vec<f64>>>> = vec![vec![None; cap + 1]; templates.len()];
    let cost = |orders: &[usize]| -> (usize, usize) {
        let p = plan_of(templates, orders);
        (p.total_unique_multipliers, p.total_group_delay_samples)
    };
    let mut best: Option<(Vec<usize>, MaskReport, (usize, usize))> = None;
    loop {
        for (i, t) in templates.iter().enumerate() {
            let n = orders[i];
            if cache[i][n].is_none() {
                let h = design_stage(1, n, t.kind, edges[i])?.coefficients;
                cache[i][n] = Some(amplitude_on_grid(&h, t.interpolation_factor, PLAN_GRID));
            }
        }
        let c = cost(&orders);
        let worse = best.as_ref().is_some_and(|b| c >= b.2);
        let last_free = free.last().copied();
        let mut passed = false;
        if !worse {
            let db: Vec<f64> = (0..PLAN_GRID)
                .map(|k| {
                    to_db(
                        (0..templates.len())
                            .map(|i| cache[i][orders[i]].as_ref().map_or(1.0, |a| a[k]))
                            .product(),
                    )
                })
                .collect();
            let report = verify_mask(&db, mask);
            if report.pass {
                passed = true;
                best = Some((orders.clone(), report, c));
            }
        }
        // Advance: the last free stage climbs until it passes or is no
        // longer competitive, then the next free stage steps.
        let Some(last) = last_free else {
            return Ok(best.map(|b| (b.0, b.1)));
        };
        let n_next = next_order(templates[last].kind, orders[last]);
        if !passed && !worse && n_next <= max_order {
            orders[last] = n_next;
            continue;
        }
        let mut carried = true;
        for &i in free.iter().rev().skip(1) {
            orders[last] = smallest_order(templates[last].kind);
            let n = next_order(templates[i].kind, orders[i]);
            if n <= max_order {
                orders[i] = n;
                carried = false;
                break;
            }
            orders[i] = smallest_order(templates[i].kind);
        }
        if carried {
            return Ok(best.map(|b| (b.0, b.1)));
        }
    }
}

/// Evaluates and ranks candidate plans for one bandwidth and mask.
///
/// Feasible plans that meet the mask rank first, then feasible plans that
/// miss it, then infeasible ones; within each group by fewer multipliers,
/// lower group delay, fewer stages.
pub fn search_stage_plan(
    candidates: &[(String, Vec<StageTemplate>)],
    bw: Bandwidth,
    mask: &SpectralMask,
    max_order: usize,
) -> Result<Vec<PlanEvaluation>> {
    let mut out = Vec::with_capacity(candidates.len());
    for (name, templates) in candidates {
        let factors: Vec<usize> = templates.iter().map(|t| t.interpolation_factor).collect();
        let kinds: Vec<FilterKind> = templates.iter().map(|t| t.kind).collect();
        let mut eval = PlanEvaluation {
            name: name.clone(),
            templates: templates.clone(),
            plan: None,
            feasible: false,
            reason: None,
            mask: None,
        };
        match stage_edges(&factors, &kinds, bw) {
            Err(reason) => eval.reason = Some(reason),
            Ok(edges) => {
                if let Some(t) = templates.iter().find(|t| {
                    t.order.is_some_and(|n| {
                        let spec = match t.kind {
                            FilterKind::GeneralLowpass => FilterSpec::general(n, 0.25, 0.75),
                            FilterKind::Halfband => FilterSpec::halfband(n, 0.25),
                        };
                        spec.validate().is_err()
                    })
                }) {
                    eval.reason = Some(format!(
                        "order {:?} is not valid for a {} stage",
                        t.order,
                        t.kind.as_str()
                    ));
                } else {
                    match resolve_orders(templates, &edges, mask, max_order)? {
                        Some((orders, report)) => {
                            eval.feasible = true;
                            eval.plan = Some(plan_of(templates, &orders));
                            eval.mask = Some(report);
                        }
                        None if templates.iter().all(|t| t.order.is_some()) => {
                            let orders: Vec<usize> = templates.iter().filter_map(|t| t.order).collect();
                            let stages: Vec<_> = templates
                                .iter()
                                .zip(&orders)
                                .map(|(t, &n)| (t.interpolation_factor, n, t.kind))
                                .collect();
                            let (_, report) = design_plan(&stages, bw, mask)?;
                            eval.feasible = true;
                            eval.plan = Some(plan_of(templates, &orders));
                            eval.mask = Some(report);
                        }
                        None => {
                            eval.reason = Some(format!("no orders up to {max_order} meet the mask"));
                        }
                    }
                }
            }
        }
        out.push(eval);
    }
    out.sort_by_key(|e| {
        let group = match (e.feasible, e.meets_mask()) {
            (true, true) => 0,
            (true, false) => 1,
            _ => 2,
        };
        let (m, d, s) = e.plan.as_ref().map_or((usize::MAX, usize::MAX, usize::MAX), |p| {
            (p.total_unique_multipliers, p.total_group_delay_samples, p.stage_count)
        });
        (group, m, d, s)
    });
    Ok(out)
}

fn plan_of(templates: &[StageTemplate], orders: &[usize]) -> StagePlan {
    let stages: Vec<_> = templates
        .iter()
        .zip(orders)
        .map(|(t, &n)| (t.interpolation_factor, n, t.kind))
        .collect();
    StagePlan::new(&stages)
}
