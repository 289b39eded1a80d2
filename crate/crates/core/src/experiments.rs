//! Experiment drivers: the vanishing-capillarity sweep, the mollification
//! study for jump data, and grid-refinement studies.
//!
//! All drivers are deterministic: per-case work is farmed out with rayon
//! but each case is itself sequential, and results are collected in input
//! order, so duplicate inputs produce byte-identical outputs and permuting
//! the input list permutes the output lists accordingly.

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::CoreError;
use crate::field_state::{InitialProfile, MassGrid, ProfileKind};
use crate::laws::LawBundle;
use crate::solver::{run, Formulation, RunRecord, RunStatus, SolverConfig, Snapshot};
use crate::diagnostics::DiagOptions;

/// Uniformity indicators across a sweep: ratios of the largest to the
/// smallest per-case extreme. Values near 1 mean the quantity is controlled
/// uniformly in the capillarity.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct UniformitySummary {
    /// `max_i sup_t rho_max / min_i sup_t rho_max`.
    pub rho_max_spread: f64,
    /// `max_i sup_t (1/rho_min) / min_i sup_t (1/rho_min)`.
    pub inv_rho_min_spread: f64,
}

/// Results of a capillarity sweep at fixed initial data.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SweepReport {
    /// Capillarity values, in input order.
    pub c: Vec<f64>,
    /// Space-time `L²` distance of each case's density to the zero-capillarity
    /// reference; exactly `0` for the reference itself, `NaN` for failed
    /// cases.
    #[serde(rename = "distance_L2")]
    pub distance_l2: Vec<f64>,
    /// `sup_t rho_max` per case.
    pub rho_max: Vec<f64>,
    /// `inf_t rho_min` per case.
    pub rho_min: Vec<f64>,
    /// `sup_t max_j v1` per case.
    pub v1_sup: Vec<f64>,
    /// Initial one-sided bound `M0 = max v1(0)` per case.
    pub m0: Vec<f64>,
    /// Smallest slope `s` with `v1_sup(t) <= max(M0, 0) + s (1 + t)` along
    /// the whole trajectory, per case (0 when no excess ever occurs).
    pub v1_sup_slope: Vec<f64>,
    /// First moment `∫ x (rho - 1) dx` at each output time, per case.
    pub moment1: Vec<Vec<f64>>,
    /// Second moment `∫ x² (rho - 1) dx` at each output time, per case.
    pub moment2: Vec<Vec<f64>>,
    /// Terminal status of each case, `"completed"` or a failure note.
    pub status: Vec<String>,
    pub uniform: UniformitySummary,
}

fn status_string(status: &RunStatus) -> String {
    match status {
        RunStatus::Completed => "completed".to_string(),
        RunStatus::Vacuum { t, cell, tau } => {
            format!("vacuum at t = {t:.6e} (cell {cell}, tau = {tau:.3e})")
        }
        RunStatus::StabilityFailure { t, dt } => {
            format!("stability failure at t = {t:.6e} (dt = {dt:.3e})")
        }
    }
}

/// Piecewise-linear sample of a snapshot's density at `x`, interpolating
/// between cell centers and clamping to the outermost cells (which sit at
/// the far-field value).
fn sample_density(snapshot: &Snapshot, x: f64) -> f64 {
    let n = snapshot.tau.len();
    let center = |j: usize| 0.5 * (snapshot.x[j] + snapshot.x[j + 1]);
    if x <= center(0) {
        return 1.0 / snapshot.tau[0];
    }
    if x >= center(n - 1) {
        return 1.0 / snapshot.tau[n - 1];
    }
    // Binary search for the pair of centers bracketing x.
    let mut lo = 0;
    let mut hi = n - 1;
    while hi - lo > 1 {
        let mid = (lo + hi) / 2;
        if center(mid) <= x {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    let (x0, x1) = (center(lo), center(hi));
    let (r0, r1) = (1.0 / snapshot.tau[lo], 1.0 / snapshot.tau[hi]);
    r0 + (r1 - r0) * (x - x0) / (x1 - x0)
}

/// Squared `L²(dx)` distance between two snapshots' densities on a common
/// uniform axis.
fn density_distance_sq(a: &Snapshot, b: &Snapshot, x_lo: f64, x_hi: f64, n_samples: usize) -> f64 {
    let dx = (x_hi - x_lo) / (n_samples - 1) as f64;
    let mut acc = 0.0;
    for i in 0..n_samples {
        let x = x_lo + i as f64 * dx;
        let d = sample_density(a, x) - sample_density(b, x);
        let w = if i == 0 || i == n_samples - 1 { 0.5 } else { 1.0 };
        acc += w * d * d * dx;
    }
    acc
}

/// Moments `∫ x^k (rho - 1) dx` of a snapshot, `k = 1, 2`.
fn density_moments(snapshot: &Snapshot) -> (f64, f64) {
    let mut m1 = 0.0;
    let mut m2 = 0.0;
    for j in 0..snapshot.tau.len() {
        let dx = snapshot.x[j + 1] - snapshot.x[j];
        let xc = 0.5 * (snapshot.x[j] + snapshot.x[j + 1]);
        let excess = 1.0 / snapshot.tau[j] - 1.0;
        m1 += xc * excess * dx;
        m2 += xc * xc * excess * dx;
    }
    (m1, m2)
}

/// The formulation each sweep case runs in: the effective one wherever the
/// capillary flux exists, the plain viscous system at `c = 0`.
fn sweep_formulation(c: f64) -> Formulation {
    if c > 0.0 {
        Formulation::EffectiveV1
    } else {
        Formulation::Primitive
    }
}

/// Runs the same initial data across a list of capillarity values and
/// measures how the trajectories approach the zero-capillarity limit.
///
/// Every case uses `config` except for the formulation: the effective one
/// wherever the capillary flux exists, the plain viscous system at `c = 0`
/// (see `sweep_formulation`). The reference for the distances is the `c = 0`
/// case when present in the list, otherwise an extra internal reference run.
/// Failed cases keep their slot with `NaN` distances and a failure note in
/// `status`.
pub fn capillarity_sweep(
    grid: &MassGrid,
    profile: &InitialProfile,
    law: &LawBundle,
    c_values: &[f64],
    config: &SolverConfig,
    diag_opts: &DiagOptions,
) -> Result<SweepReport, CoreError> {
    capillarity_sweep_with_records(grid, profile, law, c_values, config, diag_opts)
        .map(|(report, _)| report)
}

/// Same as [`capillarity_sweep`], additionally returning the per-case run
/// records (in input order) for callers that archive full trajectories.
pub fn capillarity_sweep_with_records(
    grid: &MassGrid,
    profile: &InitialProfile,
    law: &LawBundle,
    c_values: &[f64],
    config: &SolverConfig,
    diag_opts: &DiagOptions,
) -> Result<(SweepReport, Vec<RunRecord>), CoreError> {
    if c_values.is_empty() {
        return Err(CoreError::InvalidParameter {
            field: "c_values",
            message: "sweep needs at least one capillarity value".to_string(),
        });
    }
    let records: Vec<RunRecord> = c_values
        .par_iter()
        .map(|&c| {
            let cfg = SolverConfig {
                formulation: sweep_formulation(c),
                ..config.clone()
            };
            run(grid, profile, law, c, &cfg, diag_opts)
        })
        .collect::<Result<_, _>>()?;

    // Reference trajectory for the limit distances.
    let reference_owned;
    let reference: &RunRecord = match records.iter().position(|r| r.c == 0.0) {
        Some(idx) => &records[idx],
        None => {
            let cfg = SolverConfig {
                formulation: sweep_formulation(0.0),
                ..config.clone()
            };
            reference_owned = run(grid, profile, law, 0.0, &cfg, diag_opts)?;
            &reference_owned
        }
    };

    // Common spatial axis: the intersection of every successful case's span.
    let mut x_lo = f64::NEG_INFINITY;
    let mut x_hi = f64::INFINITY;
    for rec in records.iter().chain(std::iter::once(reference)) {
        for snap in &rec.snapshots {
            x_lo = x_lo.max(snap.x[0]);
            x_hi = x_hi.min(*snap.x.last().expect("snapshots have nodes"));
        }
    }
    let n_samples = 2 * grid.n_cells + 1;

    let mut distance_l2 = Vec::with_capacity(records.len());
    let mut rho_max = Vec::with_capacity(records.len());
    let mut rho_min = Vec::with_capacity(records.len());
    let mut v1_sup = Vec::with_capacity(records.len());
    let mut m0 = Vec::with_capacity(records.len());
    let mut v1_sup_slope = Vec::with_capacity(records.len());
    let mut moment1 = Vec::with_capacity(records.len());
    let mut moment2 = Vec::with_capacity(records.len());
    let mut status = Vec::with_capacity(records.len());

    for rec in &records {
        status.push(status_string(&rec.status));
        m0.push(rec.init.m0);

        let mut sup_rho = f64::NEG_INFINITY;
        let mut inf_rho = f64::INFINITY;
        let mut sup_v1 = f64::NEG_INFINITY;
        let mut slope: f64 = 0.0;
        let m0_pos = rec.init.m0.max(0.0);
        for rep in &rec.reports {
            sup_rho = sup_rho.max(rep.rho_max);
            inf_rho = inf_rho.min(rep.rho_min);
            sup_v1 = sup_v1.max(rep.v1_sup);
            slope = slope.max((rep.v1_sup - m0_pos) / (1.0 + rep.t));
        }
        rho_max.push(sup_rho);
        rho_min.push(inf_rho);
        v1_sup.push(sup_v1);
        v1_sup_slope.push(slope.max(0.0));

        let mut m1_trace = Vec::with_capacity(rec.snapshots.len());
        let mut m2_trace = Vec::with_capacity(rec.snapshots.len());
        for snap in &rec.snapshots {
            let (m1, m2) = density_moments(snap);
            m1_trace.push(m1);
            m2_trace.push(m2);
        }
        moment1.push(m1_trace);
        moment2.push(m2_trace);

        // Space-time distance to the reference by the trapezoidal rule over
        // the common snapshot times. A failed run has fewer snapshots than
        // the reference and is marked NaN.
        if rec.c == 0.0 && rec.snapshots.len() == reference.snapshots.len() {
            // The reference case itself (bit-identical by determinism).
            distance_l2.push(0.0);
            continue;
        }
        if rec.snapshots.len() != reference.snapshots.len() || reference.snapshots.is_empty() {
            distance_l2.push(f64::NAN);
            continue;
        }
        let times: Vec<f64> = rec.snapshots.iter().map(|s| s.t).collect();
        let d_sq: Vec<f64> = rec
            .snapshots
            .iter()
            .zip(&reference.snapshots)
            .map(|(a, b)| density_distance_sq(a, b, x_lo, x_hi, n_samples))
            .collect();
        let total = if times.len() == 1 {
            d_sq[0]
        } else {
            let mut acc = 0.0;
            for k in 1..times.len() {
                acc += 0.5 * (d_sq[k - 1] + d_sq[k]) * (times[k] - times[k - 1]);
            }
            // Normalize by the time span so the scale is comparable to a
            // single-snapshot distance.
            acc / (times[times.len() - 1] - times[0]).max(f64::MIN_POSITIVE)
        };
        distance_l2.push(total.sqrt());
    }

    let finite = |v: &[f64]| -> Vec<f64> { v.iter().copied().filter(|x| x.is_finite()).collect() };
    let spread = |v: Vec<f64>| -> f64 {
        if v.is_empty() {
            return f64::NAN;
        }
        let max = v.iter().copied().fold(f64::NEG_INFINITY, f64::max);
        let min = v.iter().copied().fold(f64::INFINITY, f64::min);
        max / min
    };
    let uniform = UniformitySummary {
        rho_max_spread: spread(finite(&rho_max)),
        inv_rho_min_spread: spread(finite(&rho_min).iter().map(|r| 1.0 / r).collect()),
    };

    let report = SweepReport {
        c: c_values.to_vec(),
        distance_l2,
        rho_max,
        rho_min,
        v1_sup,
        m0,
        v1_sup_slope,
        moment1,
        moment2,
        status,
        uniform,
    };
    Ok((report, records))
}

/// Width of the `10%`–`90%` transition layer of a density interface.
///
/// Looks at cell-center densities inside `[center - halfwidth,
/// center + halfwidth]`, normalizes by the plateau values, and measures the
/// span from the *first* crossing of the `90%` level to the *last* crossing
/// of the `10%` level (scanning left to right), which is conservative when
/// the layer oscillates. Returns `None` when a level is never crossed.
pub fn interface_width(
    x_centers: &[f64],
    rho: &[f64],
    center: f64,
    halfwidth: f64,
    rho_left: f64,
    rho_right: f64,
) -> Option<f64> {
    let delta = rho_left - rho_right;
    if delta.abs() < 1e-14 {
        return None;
    }
    let hi_level = rho_right + 0.9 * delta;
    let lo_level = rho_right + 0.1 * delta;
    let idx: Vec<usize> = (0..rho.len())
        .filter(|&j| (x_centers[j] - center).abs() <= halfwidth)
        .collect();
    if idx.len() < 2 {
        return None;
    }
    let crossing = |level: f64, from_left: bool| -> Option<f64> {
        let pairs: Box<dyn Iterator<Item = (usize, usize)>> = if from_left {
            Box::new(idx.windows(2).map(|w| (w[0], w[1])))
        } else {
            Box::new(idx.windows(2).rev().map(|w| (w[0], w[1])))
        };
        for (a, b) in pairs {
            let (ya, yb) = (rho[a] - level, rho[b] - level);
            if ya == 0.0 {
                return Some(x_centers[a]);
            }
            if ya * yb < 0.0 {
                let frac = ya / (ya - yb);
                return Some(x_centers[a] + frac * (x_centers[b] - x_centers[a]));
            }
        }
        None
    };
    let x_hi_level = crossing(hi_level, true)?;
    let x_lo_level = crossing(lo_level, false)?;
    Some((x_lo_level - x_hi_level).abs())
}

/// Results of the mollification study on jump initial data.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MollificationReport {
    /// `phi(rho_right) - phi(rho_left)` across the interface (nonpositive
    /// for admissible jumps).
    pub phi_jump: f64,
    /// Mollifier indices studied.
    pub n: Vec<u32>,
    /// Initial one-sided bound `M0 = max v1(0)` per mollifier index; the
    /// three-step regularization keeps this uniform in `n`.
    pub m0: Vec<f64>,
    /// `max(M0)/min(M0) - 1`, or `0` when every `M0` is zero.
    pub m0_spread: f64,
    /// Initial `10%`–`90%` interface width per mollifier index.
    pub width_initial: Vec<f64>,
    /// Capillarity values the evolution was run at (with the finest
    /// mollifier).
    pub c: Vec<f64>,
    /// Final-time interface width per capillarity value.
    pub width_final: Vec<f64>,
    /// `width_final / width_initial` at the finest mollifier, per
    /// capillarity value.
    pub width_growth: Vec<f64>,
    /// Terminal status per capillarity value.
    pub status: Vec<String>,
}

/// Measures how the mollified jump's one-sided velocity bound and interface
/// width behave, and how the interface spreads under the dynamics.
///
/// The profile must be a [`ProfileKind::DensityJump`]. A jump with
/// `phi(rho_right) > phi(rho_left)` is rejected unless `allow_inadmissible`
/// is set, because no uniform-in-`n` bound is available on that side.
#[allow(clippy::too_many_arguments)]
pub fn mollification_study(
    grid: &MassGrid,
    profile: &InitialProfile,
    law: &LawBundle,
    n_values: &[u32],
    c_values: &[f64],
    config: &SolverConfig,
    diag_opts: &DiagOptions,
    allow_inadmissible: bool,
) -> Result<MollificationReport, CoreError> {
    let (center, halfwidth, rho_left, rho_right) = match profile.kind {
        ProfileKind::DensityJump {
            location,
            rho_left,
            rho_right,
            plateau_halfwidth,
            ..
        } => (location, plateau_halfwidth, rho_left, rho_right),
        _ => {
            return Err(CoreError::InvalidParameter {
                field: "profile",
                message: "mollification study needs a density-jump profile".to_string(),
            })
        }
    };
    if n_values.is_empty() {
        return Err(CoreError::InvalidParameter {
            field: "n_values",
            message: "need at least one mollifier index".to_string(),
        });
    }
    let phi_jump = profile
        .phi_jump(law)
        .expect("density jump always has a phi jump");
    if phi_jump > 0.0 && !allow_inadmissible {
        return Err(CoreError::InadmissibleJump { phi_jump });
    }

    // Part one: initialization only, per mollifier index.
    let mut m0 = Vec::with_capacity(n_values.len());
    let mut width_initial = Vec::with_capacity(n_values.len());
    let c_init = c_values.iter().copied().find(|&c| c > 0.0).unwrap_or(0.0);
    for &n in n_values {
        let mut p = profile.clone();
        p.mollify_n = Some(n);
        let (state, record) = crate::field_state::init_state(grid, &p, law, c_init)?;
        m0.push(record.m0);
        let view = crate::field_state::to_eulerian(&state, grid, record.x_origin);
        let centers: Vec<f64> = (0..grid.n_cells)
            .map(|j| 0.5 * (view.x[j] + view.x[j + 1]))
            .collect();
        let w = interface_width(&centers, &view.rho, center, halfwidth, rho_left, rho_right)
            .unwrap_or(f64::NAN);
        width_initial.push(w);
    }
    let m0_max = m0.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    let m0_min = m0.iter().copied().fold(f64::INFINITY, f64::min);
    let m0_spread = if m0_max == 0.0 && m0_min == 0.0 {
        0.0
    } else {
        m0_max / m0_min - 1.0
    };

    // Part two: evolution at the finest mollifier across the capillarity
    // list.
    let n_ref = *n_values.last().expect("n_values nonempty");
    let mut p_ref = profile.clone();
    p_ref.mollify_n = Some(n_ref);
    let w0_ref = *width_initial.last().expect("aligned with n_values");

    let records: Vec<RunRecord> = c_values
        .par_iter()
        .map(|&c| {
            let cfg = SolverConfig {
                formulation: sweep_formulation(c),
                ..config.clone()
            };
            run(grid, &p_ref, law, c, &cfg, diag_opts)
        })
        .collect::<Result<_, _>>()?;

    let mut width_final = Vec::with_capacity(records.len());
    let mut width_growth = Vec::with_capacity(records.len());
    let mut status = Vec::with_capacity(records.len());
    for rec in &records {
        status.push(status_string(&rec.status));
        let w = rec
            .snapshots
            .last()
            .and_then(|snap| {
                let centers: Vec<f64> = (0..grid.n_cells)
                    .map(|j| 0.5 * (snap.x[j] + snap.x[j + 1]))
                    .collect();
                let rho: Vec<f64> = snap.tau.iter().map(|&t| 1.0 / t).collect();
                interface_width(&centers, &rho, center, halfwidth, rho_left, rho_right)
            })
            .unwrap_or(f64::NAN);
        width_final.push(w);
        width_growth.push(w / w0_ref);
    }

    Ok(MollificationReport {
        phi_jump,
        n: n_values.to_vec(),
        m0,
        m0_spread,
        width_initial,
        c: c_values.to_vec(),
        width_final,
        width_growth,
        status,
    })
}

/// A measured convergence order, or the statement that two successive
/// levels were exactly equal (as happens for constant data).
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum OrderEstimate {
    Exact,
    Measured(f64),
}

impl Serialize for OrderEstimate {
    fn serialize<S: serde::Serializer>(&self, serializer: S) -> Result<S::Ok, S::Error> {
        match self {
            OrderEstimate::Exact => serializer.serialize_str("exact"),
            OrderEstimate::Measured(v) => serializer.serialize_f64(*v),
        }
    }
}

impl<'de> Deserialize<'de> for OrderEstimate {
    fn deserialize<D: serde::Deserializer<'de>>(deserializer: D) -> Result<Self, D::Error> {
        struct V;
        impl serde::de::Visitor<'_> for V {
            type Value = OrderEstimate;
            fn expecting(&self, f: &mut std::fmt::Formatter) -> std::fmt::Result {
                f.write_str("a number or the string \"exact\"")
            }
            fn visit_f64<E: serde::de::Error>(self, v: f64) -> Result<Self::Value, E> {
                Ok(OrderEstimate::Measured(v))
            }
            fn visit_i64<E: serde::de::Error>(self, v: i64) -> Result<Self::Value, E> {
                Ok(OrderEstimate::Measured(v as f64))
            }
            fn visit_u64<E: serde::de::Error>(self, v: u64) -> Result<Self::Value, E> {
                Ok(OrderEstimate::Measured(v as f64))
            }
            fn visit_str<E: serde::de::Error>(self, v: &str) -> Result<Self::Value, E> {
                if v == "exact" {
                    Ok(OrderEstimate::Exact)
                } else {
                    Err(E::custom(format!("unexpected order string {v:?}")))
                }
            }
        }
        deserializer.deserialize_any(V)
    }
}

/// Self-convergence data for one formulation.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FormulationResolution {
    pub formulation: Formulation,
    /// `L¹` error between successive levels (finer restricted to coarser).
    pub err_l1: Vec<f64>,
    /// `L²` error between successive levels.
    pub err_l2: Vec<f64>,
    /// `log2(err_k / err_{k+1})` per successive error pair.
    pub order_l1: Vec<OrderEstimate>,
    pub order_l2: Vec<OrderEstimate>,
}

/// Results of a grid-refinement study.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ResolutionReport {
    pub n_cells: Vec<usize>,
    pub results: Vec<FormulationResolution>,
}

/// Restricts a fine-grid cell field to the next coarser grid by averaging
/// sibling pairs; exact for the specific volume because coarse cells carry
/// exactly twice the mass.
fn restrict_pairwise(fine: &[f64]) -> Vec<f64> {
    fine.chunks_exact(2).map(|p| 0.5 * (p[0] + p[1])).collect()
}

fn order_between(coarse_err: f64, fine_err: f64) -> OrderEstimate {
    if coarse_err == 0.0 && fine_err == 0.0 {
        OrderEstimate::Exact
    } else {
        OrderEstimate::Measured((coarse_err / fine_err).log2())
    }
}

/// Runs the same problem on a chain of grids related by cell-count halving
/// and measures the self-convergence order of the final specific volume,
/// for both formulations.
///
/// `grids` must share the mass interval and double the cell count from one
/// entry to the next; at least three levels are required for a single order
/// estimate.
pub fn resolution_study(
    grids: &[MassGrid],
    profile: &InitialProfile,
    law: &LawBundle,
    c: f64,
    config: &SolverConfig,
    diag_opts: &DiagOptions,
) -> Result<ResolutionReport, CoreError> {
    if grids.len() < 3 {
        return Err(CoreError::TooFewGridLevels { got: grids.len() });
    }
    for pair in grids.windows(2) {
        let (a, b) = (&pair[0], &pair[1]);
        if a.m_min != b.m_min || a.m_max != b.m_max || b.n_cells != 2 * a.n_cells {
            return Err(CoreError::InvalidParameter {
                field: "grids",
                message: format!(
                    "levels must share the interval and double the cells; got {} then {} cells on [{}, {}] vs [{}, {}]",
                    a.n_cells, b.n_cells, a.m_min, a.m_max, b.m_min, b.m_max
                ),
            });
        }
    }

    let mut results = Vec::with_capacity(2);
    for formulation in [Formulation::Primitive, Formulation::EffectiveV1] {
        let cfg = SolverConfig {
            formulation,
            ..config.clone()
        };
        let finals: Vec<Vec<f64>> = grids
            .par_iter()
            .map(|grid| {
                run(grid, profile, law, c, &cfg, diag_opts).map(|rec| rec.final_state.tau)
            })
            .collect::<Result<_, _>>()?;

        let mut err_l1 = Vec::with_capacity(grids.len() - 1);
        let mut err_l2 = Vec::with_capacity(grids.len() - 1);
        for k in 0..grids.len() - 1 {
            let coarse = &finals[k];
            let restricted = restrict_pairwise(&finals[k + 1]);
            let dm = grids[k].dm;
            let mut l1 = 0.0;
            let mut l2 = 0.0;
            for (a, b) in coarse.iter().zip(&restricted) {
                let d = (a - b).abs();
                l1 += d * dm;
                l2 += d * d * dm;
            }
            err_l1.push(l1);
            err_l2.push(l2.sqrt());
        }
        let order_l1: Vec<OrderEstimate> = err_l1
            .windows(2)
            .map(|w| order_between(w[0], w[1]))
            .collect();
        let order_l2: Vec<OrderEstimate> = err_l2
            .windows(2)
            .map(|w| order_between(w[0], w[1]))
            .collect();
        results.push(FormulationResolution {
            formulation,
            err_l1,
            err_l2,
            order_l1,
            order_l2,
        });
    }

    Ok(ResolutionReport {
        n_cells: grids.iter().map(|g| g.n_cells).collect(),
        results,
    })
}
