//! Staggered mass-Lagrangian grid, state container, initial-data
//! construction, and Lagrangian/Eulerian transforms.
//!
//! The mass interval `[m_min, m_max]` is split into `n_cells` uniform cells.
//! Specific volume `tau = 1/rho` lives at cell centers; velocity `u` lives at
//! the `n_cells + 1` nodes. The far field is the constant state `rho = 1`,
//! `u = 0`, and the domain must be wide enough that boundary cells stay at
//! the far-field values for the whole run.
//!
//! Initial data are described in *Eulerian* coordinates ([`InitialProfile`]),
//! sampled on a fine auxiliary axis, optionally mollified, and transferred to
//! the mass grid by inverting the cumulative mass function — so cell masses
//! are exact by construction. Mollification of a density jump follows the
//! three-step recipe that keeps the upper bound of the effective velocity
//! `v1 = u + r1 ∂_m psi(rho)` uniform in the mollification index `n`:
//!
//! ```text
//!   rho_n = j_n * rho0
//!   v1_n  = j_n * (u0 + r1 ∂_x phi(rho0))     (the jump's delta is mollified, not evaluated)
//!   u0_n  = v1_n - r1 ∂_x phi(rho_n)
//! ```
//!
//! with `j_n(y) = n j(n y)`, `j` the standard compactly supported bump on
//! `(-2, 2)`, discretely normalized to unit mass.

use serde::{Deserialize, Serialize};

use crate::error::CoreError;
use crate::laws::{CapillarityRoots, LawBundle};

/// Uniform staggered grid on the mass interval `[m_min, m_max]`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct MassGrid {
    pub m_min: f64,
    pub m_max: f64,
    pub n_cells: usize,
    /// Cell width, `(m_max - m_min)/n_cells`.
    pub dm: f64,
}

impl MassGrid {
    /// Builds a uniform grid. Requires `m_max > m_min` and `n_cells >= 8`.
    pub fn new(m_min: f64, m_max: f64, n_cells: usize) -> Result<Self, CoreError> {
        if !(m_min.is_finite() && m_max.is_finite() && m_max > m_min) {
            return Err(CoreError::InvalidParameter {
                field: "m_max",
                message: format!("mass interval must satisfy m_max > m_min, got [{m_min}, {m_max}]"),
            });
        }
        if n_cells < 8 {
            return Err(CoreError::InvalidParameter {
                field: "n_cells",
                message: format!("need at least 8 cells, got {n_cells}"),
            });
        }
        let dm = (m_max - m_min) / n_cells as f64;
        Ok(Self {
            m_min,
            m_max,
            n_cells,
            dm,
        })
    }

    /// Number of velocity nodes, `n_cells + 1`.
    #[inline]
    pub fn n_nodes(&self) -> usize {
        self.n_cells + 1
    }

    /// Mass coordinate of node `j`.
    #[inline]
    pub fn node_m(&self, j: usize) -> f64 {
        self.m_min + j as f64 * self.dm
    }

    /// Mass coordinate of the center of cell `j`.
    #[inline]
    pub fn cell_m(&self, j: usize) -> f64 {
        self.m_min + (j as f64 + 0.5) * self.dm
    }

    /// Total mass carried by the grid.
    #[inline]
    pub fn total_mass(&self) -> f64 {
        self.m_max - self.m_min
    }
}

/// Solution state at one instant: specific volume per cell, velocity per
/// node.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct State {
    pub t: f64,
    /// Specific volume `tau = 1/rho` at cell centers (`n_cells` values, all
    /// positive).
    pub tau: Vec<f64>,
    /// Velocity at nodes (`n_cells + 1` values).
    pub u: Vec<f64>,
}

impl State {
    /// Spatially uniform state (useful for stationarity checks).
    pub fn uniform(grid: &MassGrid, rho: f64, u: f64) -> Self {
        Self {
            t: 0.0,
            tau: vec![1.0 / rho; grid.n_cells],
            u: vec![u; grid.n_nodes()],
        }
    }

    /// Density of cell `j`.
    #[inline]
    pub fn rho(&self, j: usize) -> f64 {
        1.0 / self.tau[j]
    }

    /// Smallest and largest density over all cells.
    pub fn rho_range(&self) -> (f64, f64) {
        let mut lo = f64::INFINITY;
        let mut hi = f64::NEG_INFINITY;
        for &t in &self.tau {
            let r = 1.0 / t;
            lo = lo.min(r);
            hi = hi.max(r);
        }
        (lo, hi)
    }
}

/// Centered mass-derivative of `psi(rho)` at nodes: interior node `j` sees
/// `(psi(rho[j]) - psi(rho[j-1]))/dm`; boundary nodes use a zero-gradient
/// ghost cell and therefore return 0.
///
/// This is the gradient entering both the effective velocities and the
/// capillary energy.
pub fn psi_gradient_nodes(state: &State, grid: &MassGrid, law: &LawBundle) -> Vec<f64> {
    let n = grid.n_cells;
    let mut d = vec![0.0; n + 1];
    let inv_dm = 1.0 / grid.dm;
    for (dj, pair) in d[1..n].iter_mut().zip(state.tau.windows(2)) {
        *dj = (law.psi(1.0 / pair[1]) - law.psi(1.0 / pair[0])) * inv_dm;
    }
    d
}

/// Effective velocity `v = u + r ∂_m psi(rho)` at nodes.
///
/// `r` is one of the capillarity roots (`r ∈ [0, 1]`); `r = 0` returns `u`
/// itself.
pub fn effective_velocity(state: &State, grid: &MassGrid, law: &LawBundle, r: f64) -> Vec<f64> {
    let mut v = psi_gradient_nodes(state, grid, law);
    for (vj, &uj) in v.iter_mut().zip(&state.u) {
        *vj = uj + r * *vj;
    }
    v
}

/// Eulerian picture of a state: node positions, cell densities, node
/// velocities.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EulerianView {
    /// Node positions, strictly increasing; `x[j+1] - x[j] = tau[j] dm`.
    pub x: Vec<f64>,
    /// Cell densities `1/tau`.
    pub rho: Vec<f64>,
    /// Node velocities (same values as the Lagrangian state).
    pub u: Vec<f64>,
}

/// Lays the state out in physical space, anchoring node 0 at `x_origin`.
///
/// Cell masses are preserved exactly: `rho[j] (x[j+1] - x[j]) = dm` for
/// every cell, so discrete Eulerian integrals of cell quantities coincide
/// with their Lagrangian counterparts.
pub fn to_eulerian(state: &State, grid: &MassGrid, x_origin: f64) -> EulerianView {
    let n = grid.n_cells;
    let mut x = Vec::with_capacity(n + 1);
    let mut rho = Vec::with_capacity(n);
    let mut pos = x_origin;
    x.push(pos);
    for j in 0..n {
        pos += state.tau[j] * grid.dm;
        x.push(pos);
        rho.push(1.0 / state.tau[j]);
    }
    EulerianView {
        x,
        rho,
        u: state.u.clone(),
    }
}

/// Gaussian velocity perturbation `amp * exp(-(x-center)^2 / (2 width^2))`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct VelocityBump {
    pub center: f64,
    pub width: f64,
    pub amplitude: f64,
}

/// Shape of the initial density (and optional velocity) in Eulerian
/// coordinates. All shapes decay to the far field `rho = 1` except
/// `Constant`, which describes a homogeneous medium.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub enum ProfileKind {
    /// Uniform density everywhere.
    Constant { rho: f64 },
    /// `rho(x) = 1 + amplitude * exp(-(x-center)^2 / (2 width^2))`.
    GaussianBump {
        center: f64,
        width: f64,
        amplitude: f64,
    },
    /// Far field 1 on both sides, a smooth ramp up to `rho_left`, a plateau,
    /// a single discontinuity `rho_left -> rho_right` at `location`, a
    /// plateau, and a smooth ramp back down to 1. The ramps are infinitely
    /// differentiable, so the only non-smooth feature is the jump itself.
    DensityJump {
        location: f64,
        rho_left: f64,
        rho_right: f64,
        /// Width of each connecting ramp.
        ramp_width: f64,
        /// Half-length of the constant plateaus flanking the jump.
        plateau_halfwidth: f64,
    },
    /// Piecewise-linear table of `(x, rho, u)` samples; the end samples must
    /// already sit at the far field (rho = 1, u = 0).
    CustomTable {
        x: Vec<f64>,
        rho: Vec<f64>,
        u: Vec<f64>,
    },
}

/// Initial data description: a density shape, an optional velocity bump,
/// and an optional mollification index.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct InitialProfile {
    pub kind: ProfileKind,
    /// Additional smooth velocity perturbation (zero if absent).
    pub u_bump: Option<VelocityBump>,
    /// When set, the initial data are mollified at scale `2/n` by the
    /// three-step construction described in the module docs.
    pub mollify_n: Option<u32>,
}

impl InitialProfile {
    /// Density shape with no velocity and no mollification.
    pub fn new(kind: ProfileKind) -> Self {
        Self {
            kind,
            u_bump: None,
            mollify_n: None,
        }
    }

    /// Checks positivity and shape parameters.
    pub fn validate(&self) -> Result<(), CoreError> {
        let positive = |field: &'static str, v: f64| {
            if v > 0.0 && v.is_finite() {
                Ok(())
            } else {
                Err(CoreError::InvalidParameter {
                    field,
                    message: format!("must be positive and finite, got {v}"),
                })
            }
        };
        match &self.kind {
            ProfileKind::Constant { rho } => positive("profile.rho", *rho)?,
            ProfileKind::GaussianBump {
                width, amplitude, ..
            } => {
                positive("profile.width", *width)?;
                if 1.0 + amplitude <= 0.0 || !amplitude.is_finite() {
                    return Err(CoreError::InvalidParameter {
                        field: "profile.amplitude",
                        message: format!("bump must keep rho = 1 + amplitude positive, got {amplitude}"),
                    });
                }
            }
            ProfileKind::DensityJump {
                rho_left,
                rho_right,
                ramp_width,
                plateau_halfwidth,
                ..
            } => {
                positive("profile.rho_left", *rho_left)?;
                positive("profile.rho_right", *rho_right)?;
                positive("profile.ramp_width", *ramp_width)?;
                positive("profile.plateau_halfwidth", *plateau_halfwidth)?;
            }
            ProfileKind::CustomTable { x, rho, u } => {
                if x.len() < 2 || x.len() != rho.len() || x.len() != u.len() {
                    return Err(CoreError::InvalidParameter {
                        field: "profile.table",
                        message: format!(
                            "x, rho, u must have equal length >= 2, got {}, {}, {}",
                            x.len(),
                            rho.len(),
                            u.len()
                        ),
                    });
                }
                if !x.windows(2).all(|w| w[1] > w[0]) {
                    return Err(CoreError::InvalidParameter {
                        field: "profile.table.x",
                        message: "must be strictly increasing".to_string(),
                    });
                }
                for &r in rho {
                    positive("profile.table.rho", r)?;
                }
                let edge_ok = (rho[0] - 1.0).abs() <= 1e-9
                    && (rho[rho.len() - 1] - 1.0).abs() <= 1e-9
                    && u[0].abs() <= 1e-9
                    && u[u.len() - 1].abs() <= 1e-9;
                if !edge_ok {
                    return Err(CoreError::InvalidParameter {
                        field: "profile.table",
                        message: "end samples must sit at the far field (rho = 1, u = 0)".to_string(),
                    });
                }
            }
        }
        if let Some(b) = &self.u_bump {
            positive("profile.u_bump.width", b.width)?;
            if !b.amplitude.is_finite() || !b.center.is_finite() {
                return Err(CoreError::InvalidParameter {
                    field: "profile.u_bump",
                    message: "center and amplitude must be finite".to_string(),
                });
            }
        }
        if let Some(n) = self.mollify_n {
            if n == 0 {
                return Err(CoreError::InvalidParameter {
                    field: "profile.mollify_n",
                    message: "must be >= 1".to_string(),
                });
            }
        }
        Ok(())
    }

    /// Eulerian center of the feature (jump location, bump center, table
    /// midpoint). The mass grid is aligned so its middle sits here.
    pub fn center_x(&self) -> f64 {
        match &self.kind {
            ProfileKind::Constant { .. } => 0.0,
            ProfileKind::GaussianBump { center, .. } => *center,
            ProfileKind::DensityJump { location, .. } => *location,
            ProfileKind::CustomTable { x, .. } => 0.5 * (x[0] + x[x.len() - 1]),
        }
    }

    /// Half-width of the region where the profile (density or velocity)
    /// deviates from the far field, measured from [`Self::center_x`].
    /// Zero for constants.
    pub fn support_halfwidth(&self) -> f64 {
        let density = match &self.kind {
            ProfileKind::Constant { .. } => 0.0,
            // exp(-8.5^2/2) ~ 2e-16: indistinguishable from the far field.
            ProfileKind::GaussianBump { width, .. } => 8.5 * width,
            ProfileKind::DensityJump {
                ramp_width,
                plateau_halfwidth,
                ..
            } => plateau_halfwidth + ramp_width,
            ProfileKind::CustomTable { x, .. } => 0.5 * (x[x.len() - 1] - x[0]),
        };
        let velocity = self.u_bump.map_or(0.0, |b| {
            (b.center - self.center_x()).abs() + 8.5 * b.width
        });
        density.max(velocity)
    }

    /// Size of the `phi(rho)` discontinuity across the jump (right minus
    /// left), if the profile has one. Admissible one-sided data require this
    /// jump to be non-positive.
    pub fn phi_jump(&self, law: &LawBundle) -> Option<f64> {
        match &self.kind {
            ProfileKind::DensityJump {
                rho_left,
                rho_right,
                ..
            } => Some(law.phi(*rho_right) - law.phi(*rho_left)),
            _ => None,
        }
    }

    /// Density at Eulerian position `x` (before any mollification).
    pub fn density_at(&self, x: f64) -> f64 {
        match &self.kind {
            ProfileKind::Constant { rho } => *rho,
            ProfileKind::GaussianBump {
                center,
                width,
                amplitude,
            } => {
                let z = (x - center) / width;
                1.0 + amplitude * (-0.5 * z * z).exp()
            }
            ProfileKind::DensityJump {
                location,
                rho_left,
                rho_right,
                ramp_width,
                plateau_halfwidth,
            } => {
                let l = *location;
                if x < l {
                    // Far field, then a smooth ramp onto the left plateau.
                    let ramp_end = l - plateau_halfwidth;
                    smooth_ramp(x, ramp_end - ramp_width, ramp_end, 1.0, *rho_left)
                } else {
                    let ramp_start = l + plateau_halfwidth;
                    smooth_ramp(x, ramp_start, ramp_start + ramp_width, *rho_right, 1.0)
                }
            }
            ProfileKind::CustomTable { x: xs, rho, .. } => interp_table(xs, rho, x, 1.0),
        }
    }

    /// Velocity at Eulerian position `x` (before any mollification).
    pub fn velocity_at(&self, x: f64) -> f64 {
        let base = match &self.kind {
            ProfileKind::CustomTable { x: xs, u, .. } => interp_table(xs, u, x, 0.0),
            _ => 0.0,
        };
        let bump = self.u_bump.map_or(0.0, |b| {
            let z = (x - b.center) / b.width;
            b.amplitude * (-0.5 * z * z).exp()
        });
        base + bump
    }
}

/// Infinitely differentiable monotone ramp: `lo` for `x <= x0`, `hi` for
/// `x >= x1`, the standard bump-quotient transition in between.
fn smooth_ramp(x: f64, x0: f64, x1: f64, lo: f64, hi: f64) -> f64 {
    if x <= x0 {
        return lo;
    }
    if x >= x1 {
        return hi;
    }
    let t = (x - x0) / (x1 - x0);
    let b = |s: f64| if s > 0.0 { (-1.0 / s).exp() } else { 0.0 };
    let w = b(t) / (b(t) + b(1.0 - t));
    lo + (hi - lo) * w
}

/// Linear interpolation in a strictly increasing table, `fill` outside.
fn interp_table(xs: &[f64], ys: &[f64], x: f64, fill: f64) -> f64 {
    if x < xs[0] || x > xs[xs.len() - 1] {
        return fill;
    }
    match xs.binary_search_by(|p| p.partial_cmp(&x).unwrap()) {
        Ok(i) => ys[i],
        Err(i) => {
            let t = (x - xs[i - 1]) / (xs[i] - xs[i - 1]);
            ys[i - 1] + t * (ys[i] - ys[i - 1])
        }
    }
}

/// Discrete mollification on a uniform axis of spacing `dx`: convolution
/// with the bump `j_n(y) = n j(n y)`, `j(y) = κ exp(-1/(1-(y/2)^2))` on
/// `(-2, 2)`, whose discrete weights are normalized to unit mass exactly.
///
/// Values are extended by replication beyond the ends, so constants are
/// preserved exactly. Errors if the axis cannot resolve the kernel
/// (`dx > 1/(8n)`).
pub fn mollify(values: &[f64], dx: f64, n: u32) -> Result<Vec<f64>, CoreError> {
    let weights = bump_weights(dx, n)?;
    Ok(convolve_clamped(values, &weights))
}

/// Normalized discrete kernel weights for `j_n` sampled at spacing `dx`.
/// The support of `j_n` is `(-2/n, 2/n)`.
fn bump_weights(dx: f64, n: u32) -> Result<Vec<f64>, CoreError> {
    if !(dx > 0.0 && dx.is_finite()) {
        return Err(CoreError::InvalidParameter {
            field: "dx",
            message: format!("axis spacing must be positive, got {dx}"),
        });
    }
    let half_width = 2.0 / n as f64;
    let required = 1.0 / (8.0 * n as f64);
    if dx > required {
        return Err(CoreError::MollifierResolution {
            half_width,
            required,
            dx,
        });
    }
    let k = (half_width / dx).ceil() as i64;
    let mut w = Vec::with_capacity((2 * k + 1) as usize);
    for i in -k..=k {
        let y = i as f64 * dx * n as f64 / 2.0; // rescaled to the unit support
        let arg = 1.0 - y * y;
        w.push(if arg > 0.0 { (-1.0 / arg).exp() } else { 0.0 });
    }
    let mass: f64 = w.iter().sum();
    for wi in &mut w {
        *wi /= mass;
    }
    Ok(w)
}

/// Convolution with clamp-to-edge extension; `weights` has odd length and
/// unit mass.
fn convolve_clamped(values: &[f64], weights: &[f64]) -> Vec<f64> {
    let k = (weights.len() / 2) as i64;
    let n = values.len() as i64;
    let mut out = Vec::with_capacity(values.len());
    for i in 0..n {
        let mut acc = 0.0;
        for (wi, off) in weights.iter().zip(-k..=k) {
            let idx = (i + off).clamp(0, n - 1);
            acc += wi * values[idx as usize];
        }
        out.push(acc);
    }
    out
}

/// Quantities recorded at initialization time.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct InitRecord {
    /// One-sided bound of the initial effective velocity,
    /// `max (u0 + r1 ∂_x phi(rho0))`, measured on the fine construction
    /// axis so it reflects the (possibly mollified) data rather than the
    /// mass grid's sampling of it.
    pub m0: f64,
    /// Total discrete energy at `t = 0` (kinetic + potential + capillary).
    pub ec0: f64,
    /// Eulerian position of node 0, chosen so the feature center sits at its
    /// configured coordinate.
    pub x_origin: f64,
    /// `phi` jump across the discontinuity, for jump profiles.
    pub phi_jump: Option<f64>,
}

/// Builds the `t = 0` state on `grid` from an Eulerian profile description.
///
/// The profile is sampled on a fine auxiliary axis (resolving both the grid
/// and the mollifier), mollified if requested, and transferred to the mass
/// grid by inverting the cumulative mass function, so every cell carries
/// mass `dm` exactly. The middle of the mass interval is anchored at the
/// profile's feature center.
///
/// Errors if the perturbation's mass support comes within 20% of the domain
/// ends — such a run could not keep its boundary cells at the far field.
pub fn init_state(
    grid: &MassGrid,
    profile: &InitialProfile,
    law: &LawBundle,
    c: f64,
) -> Result<(State, InitRecord), CoreError> {
    profile.validate()?;
    let roots = CapillarityRoots::new(c)?;
    let center = profile.center_x();

    let fine = FineFields::build(grid, profile, law, roots.r1)?;

    // Cumulative mass from the left end of the fine axis (trapezoid rule;
    // the piecewise-linear density below is integrated exactly).
    let np = fine.rho.len();
    let mut cum = Vec::with_capacity(np);
    cum.push(0.0);
    for i in 1..np {
        let add = 0.5 * (fine.rho[i - 1] + fine.rho[i]) * fine.dx;
        cum.push(cum[i - 1] + add);
    }

    // Mass coordinate of the feature center within the fine axis.
    let mass_at_center = cum[fine.center_index];
    let m_mid = 0.5 * (grid.m_min + grid.m_max);

    // Invert cum() at each node's target mass with a single left-to-right
    // sweep (targets are increasing).
    let n_nodes = grid.n_nodes();
    let mut x_nodes = Vec::with_capacity(n_nodes);
    let mut u_nodes = Vec::with_capacity(n_nodes);
    let mut seg = 0usize;
    for j in 0..n_nodes {
        let target = mass_at_center + (grid.node_m(j) - m_mid);
        if target < cum[0] || target > cum[np - 1] {
            return Err(CoreError::InvalidParameter {
                field: "grid",
                message: format!(
                    "mass interval [{}, {}] exceeds the mass carried by the profile's surroundings",
                    grid.m_min, grid.m_max
                ),
            });
        }
        while seg + 2 < np && cum[seg + 1] < target {
            seg += 1;
        }
        // Within a fine cell the density is linear and positive, so cum is
        // strictly increasing; linear inversion is accurate to O(dx^2).
        let span = cum[seg + 1] - cum[seg];
        let t = if span > 0.0 { (target - cum[seg]) / span } else { 0.0 };
        let x = fine.x0 + (seg as f64 + t) * fine.dx;
        x_nodes.push(x);
        u_nodes.push(fine.sample_u(x));
    }

    // Enforce the margin: the perturbation's mass support must stay inside
    // the central 80% of the mass interval, keeping a 20%-of-half-width gap
    // to each boundary.
    let support = fine.support_halfwidth;
    if support > 0.0 {
        let lo = mass_at_center - mass_near(&cum, fine.x0, fine.dx, center - support, center);
        let hi = mass_at_center + mass_near(&cum, fine.x0, fine.dx, center, center + support);
        let margin = 0.1 * grid.total_mass();
        let m_lo_mapped = m_mid + (lo - mass_at_center);
        let m_hi_mapped = m_mid + (hi - mass_at_center);
        if m_lo_mapped < grid.m_min + margin || m_hi_mapped > grid.m_max - margin {
            return Err(CoreError::InvalidParameter {
                field: "grid",
                message: format!(
                    "perturbation mass support [{m_lo_mapped:.3}, {m_hi_mapped:.3}] leaves less than a 20% margin inside [{}, {}]",
                    grid.m_min, grid.m_max
                ),
            });
        }
    }

    let mut tau = Vec::with_capacity(grid.n_cells);
    for j in 0..grid.n_cells {
        let dt = (x_nodes[j + 1] - x_nodes[j]) / grid.dm;
        if !(dt > 0.0 && dt.is_finite()) {
            return Err(CoreError::InvalidParameter {
                field: "profile",
                message: format!("initial data produce non-positive specific volume in cell {j}"),
            });
        }
        tau.push(dt);
    }

    let state = State {
        t: 0.0,
        tau,
        u: u_nodes,
    };

    let ec0 = crate::diagnostics::energy_breakdown(&state, grid, law, c).total;

    let record = InitRecord {
        m0: fine.m0,
        ec0,
        x_origin: x_nodes[0],
        phi_jump: profile.phi_jump(law),
    };
    Ok((state, record))
}

/// Mass accumulated between two Eulerian positions, read off the cumulative
/// table (positions clamped to the axis).
fn mass_near(cum: &[f64], x0: f64, dx: f64, from: f64, to: f64) -> f64 {
    let at = |x: f64| -> f64 {
        let s = ((x - x0) / dx).clamp(0.0, (cum.len() - 1) as f64);
        let i = (s.floor() as usize).min(cum.len() - 2);
        let t = s - i as f64;
        cum[i] + t * (cum[i + 1] - cum[i])
    };
    (at(to) - at(from)).abs()
}

/// Fine-axis Eulerian sampling of a profile, after any mollification.
struct FineFields {
    x0: f64,
    dx: f64,
    rho: Vec<f64>,
    u: Vec<f64>,
    center_index: usize,
    support_halfwidth: f64,
    /// `max (u0 + r1 ∂_x phi(rho0))` on the fine axis — the one-sided
    /// velocity bound of the (possibly mollified) data itself, independent
    /// of how coarsely the mass grid later samples it.
    m0: f64,
}

impl FineFields {
    /// `r1` is the larger capillarity root, used by the mollified effective
    /// velocity.
    fn build(
        grid: &MassGrid,
        profile: &InitialProfile,
        law: &LawBundle,
        r1: f64,
    ) -> Result<Self, CoreError> {
        let center = profile.center_x();

        // Resolution: fine enough for the mass grid, the mollifier, and any
        // sharp profile feature.
        let mut dx = grid.dm / 16.0;
        if let Some(n) = profile.mollify_n {
            dx = dx.min(1.0 / (16.0 * n as f64));
        }
        if let ProfileKind::DensityJump { ramp_width, .. } = &profile.kind {
            dx = dx.min(ramp_width / 32.0);
        }

        // Half-length: enough mass on each side of the center to cover the
        // grid, using a safe lower bound on the far-field/perturbation
        // density, plus room for the support and the kernel.
        let rho_floor = profile_density_floor(profile);
        let kernel = profile.mollify_n.map_or(0.0, |n| 2.0 / n as f64);
        let support = profile.support_halfwidth() + kernel;
        let half = 0.55 * grid.total_mass() / rho_floor + support + 1.0;
        let half_count = (half / dx).ceil() as usize;
        let npts = 2 * half_count + 1;
        if npts > 80_000_000 {
            return Err(CoreError::InvalidParameter {
                field: "grid",
                message: format!(
                    "initial-data axis would need {npts} samples; refine less or shrink the domain"
                ),
            });
        }
        let x0 = center - half_count as f64 * dx;
        let xs: Vec<f64> = (0..npts).map(|i| x0 + i as f64 * dx).collect();

        let mut rho: Vec<f64> = xs.iter().map(|&x| profile.density_at(x)).collect();
        let mut u: Vec<f64> = xs.iter().map(|&x| profile.velocity_at(x)).collect();

        if let Some(n) = profile.mollify_n {
            // Three-step construction. The jump of phi(rho0) is
            // differentiated *after* mollification, so its delta part is
            // represented smoothly, and u is recovered from the mollified
            // effective velocity:
            //   u0_n = j_n*u0 + r1 (d/dx (j_n*phi(rho0)) - d/dx phi(j_n*rho0)).
            // This keeps max(v1) bounded uniformly in n.
            let phi0: Vec<f64> = rho.iter().map(|&r| law.phi(r)).collect();
            let rho_n = mollify(&rho, dx, n)?;
            let phi_sm = mollify(&phi0, dx, n)?;
            let u_sm = mollify(&u, dx, n)?;
            let phi_of_rho_n: Vec<f64> = rho_n.iter().map(|&r| law.phi(r)).collect();
            let du = centered_gradient(&phi_sm, dx);
            let dn = centered_gradient(&phi_of_rho_n, dx);
            for i in 0..u_sm.len() {
                u[i] = u_sm[i] + r1 * (du[i] - dn[i]);
            }
            rho = rho_n;
        }

        let phi_final: Vec<f64> = rho.iter().map(|&r| law.phi(r)).collect();
        let dphi = centered_gradient(&phi_final, dx);
        let m0 = u
            .iter()
            .zip(&dphi)
            .map(|(&ui, &di)| ui + r1 * di)
            .fold(f64::NEG_INFINITY, f64::max);

        Ok(Self {
            x0,
            dx,
            rho,
            u,
            center_index: half_count,
            support_halfwidth: support,
            m0,
        })
    }

    /// Linear interpolation of the fine velocity field.
    fn sample_u(&self, x: f64) -> f64 {
        let s = (x - self.x0) / self.dx;
        let i = (s.floor() as usize).min(self.u.len() - 2);
        let t = s - i as f64;
        self.u[i] + t * (self.u[i + 1] - self.u[i])
    }
}

/// Strict lower bound for the density anywhere in the profile.
fn profile_density_floor(profile: &InitialProfile) -> f64 {
    match &profile.kind {
        ProfileKind::Constant { rho } => *rho,
        ProfileKind::GaussianBump { amplitude, .. } => (1.0 + amplitude.min(0.0)).max(1e-12),
        ProfileKind::DensityJump {
            rho_left,
            rho_right,
            ..
        } => rho_left.min(*rho_right).min(1.0),
        ProfileKind::CustomTable { rho, .. } => rho.iter().copied().fold(f64::INFINITY, f64::min),
    }
}

/// Centered finite differences on a uniform axis (one-sided at the ends).
fn centered_gradient(values: &[f64], dx: f64) -> Vec<f64> {
    let n = values.len();
    let mut g = vec![0.0; n];
    if n < 2 {
        return g;
    }
    g[0] = (values[1] - values[0]) / dx;
    g[n - 1] = (values[n - 1] - values[n - 2]) / dx;
    for i in 1..n - 1 {
        g[i] = (values[i + 1] - values[i - 1]) / (2.0 * dx);
    }
    g
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn law() -> LawBundle {
        LawBundle::new(0.4, 2.0, 1.0, 0.1).unwrap()
    }

    #[test]
    fn grid_dimensions_match_the_interval() {
        let g = MassGrid::new(-10.0, 10.0, 100).unwrap();
        assert_eq!(g.dm, 0.2);
        assert_eq!(g.n_nodes(), 101);
        assert_eq!(g.node_m(0), -10.0);
        assert_eq!(g.node_m(100), 10.0);
        assert_eq!(g.cell_m(0), -9.9);
        assert_eq!(g.total_mass(), 20.0);
    }

    #[test]
    fn grid_rejects_bad_intervals() {
        let err = MassGrid::new(1.0, 1.0, 100).unwrap_err();
        assert!(matches!(err, CoreError::InvalidParameter { field: "m_max", .. }));
        let err = MassGrid::new(0.0, f64::NAN, 100).unwrap_err();
        assert!(matches!(err, CoreError::InvalidParameter { field: "m_max", .. }));
        let err = MassGrid::new(-1.0, 1.0, 7).unwrap_err();
        assert!(matches!(err, CoreError::InvalidParameter { field: "n_cells", .. }));
    }

    #[test]
    fn uniform_state_has_flat_fields() {
        let g = MassGrid::new(-2.0, 2.0, 8).unwrap();
        let s = State::uniform(&g, 2.0, 0.3);
        assert_eq!(s.rho(3), 2.0);
        assert_eq!(s.rho_range(), (2.0, 2.0));
        assert!(s.tau.iter().all(|&t| t == 0.5));
        assert!(s.u.iter().all(|&u| u == 0.3));
    }

    #[test]
    fn mollifier_preserves_constants_and_linear_ramps() {
        let dx = 1e-3;
        let n = 4; // kernel support (-1/2, 1/2), 500 samples per side

        let constant = vec![3.7_f64; 2000];
        let out = mollify(&constant, dx, n).unwrap();
        for &v in &out {
            assert!((v - 3.7).abs() < 3.7 * 1e-13);
        }

        let linear: Vec<f64> = (0..2000).map(|i| 0.3 * i as f64 - 5.0).collect();
        let out = mollify(&linear, dx, n).unwrap();
        // Symmetric unit-mass weights reproduce affine data away from the
        // clamped ends.
        for i in 501..1499 {
            assert!(
                (out[i] - linear[i]).abs() < 1e-9,
                "affine data moved at {i}: {} vs {}",
                out[i],
                linear[i]
            );
        }
    }

    #[test]
    fn mollifier_rejects_a_coarse_axis() {
        let err = mollify(&[1.0; 50], 0.2, 1).unwrap_err();
        match err {
            CoreError::MollifierResolution {
                half_width,
                required,
                dx,
            } => {
                assert_eq!(half_width, 2.0);
                assert_eq!(required, 0.125);
                assert_eq!(dx, 0.2);
            }
            other => panic!("expected a resolution error, got {other:?}"),
        }
        let err = mollify(&[1.0; 50], 0.0, 1).unwrap_err();
        assert!(matches!(err, CoreError::InvalidParameter { field: "dx", .. }));
    }

    #[test]
    fn mollified_step_matches_the_continuum_kernel_mass() {
        // Independent oracle: the smoothed unit step at offset y equals the
        // kernel's cumulative mass J(s), s = y n / 2, computed here by
        // Simpson quadrature of exp(-1/(1 - s^2)) on (-1, 1).
        let n = 4_u32;
        let dx = 1.0 / 1024.0;
        let mid = 2048_usize;
        let values: Vec<f64> = (0..4096).map(|i| if i < mid { 0.0 } else { 1.0 }).collect();
        let out = mollify(&values, dx, n).unwrap();

        let bump = |s: f64| {
            let arg = 1.0 - s * s;
            if arg > 0.0 {
                (-1.0 / arg).exp()
            } else {
                0.0
            }
        };
        let simpson = |lo: f64, hi: f64| {
            let panels = 4096;
            let h = (hi - lo) / panels as f64;
            let mut acc = bump(lo) + bump(hi);
            for i in 1..panels {
                let w = if i % 2 == 1 { 4.0 } else { 2.0 };
                acc += w * bump(lo + i as f64 * h);
            }
            acc * h / 3.0
        };
        let total = simpson(-1.0, 1.0);

        for &offset in &[-384_i64, -128, 0, 128, 384] {
            let s = offset as f64 / 512.0;
            let expected = simpson(-1.0, s) / total;
            let got = out[(mid as i64 + offset) as usize];
            assert!(
                (got - expected).abs() < 2e-3,
                "offset {offset}: smoothed step {got} vs kernel mass {expected}"
            );
        }
    }

    #[test]
    fn mollified_step_error_shrinks_with_the_kernel_width() {
        // || j_n * H - H ||_{L^2}^2 scales like the kernel width 2/n.
        let dx = 1.0 / 2048.0;
        let mid = 4096_usize;
        let values: Vec<f64> = (0..8192).map(|i| if i < mid { 0.0 } else { 1.0 }).collect();
        let err_sq = |n: u32| -> f64 {
            let out = mollify(&values, dx, n).unwrap();
            out.iter()
                .zip(&values)
                .map(|(&a, &b)| (a - b) * (a - b) * dx)
                .sum()
        };
        let ratio = err_sq(8) / err_sq(16);
        assert!(
            (1.8..2.2).contains(&ratio),
            "squared error should halve when the kernel halves, ratio = {ratio}"
        );
    }

    #[test]
    fn eulerian_layout_preserves_cell_masses() {
        let g = MassGrid::new(-4.0, 4.0, 16).unwrap();
        let tau: Vec<f64> = (0..16).map(|j| 0.5 + 0.05 * j as f64).collect();
        let u: Vec<f64> = (0..17).map(|j| 0.1 * j as f64).collect();
        let s = State {
            t: 0.0,
            tau: tau.clone(),
            u: u.clone(),
        };
        let view = to_eulerian(&s, &g, -3.0);
        assert_eq!(view.x[0], -3.0);
        assert_eq!(view.u, u);
        #[allow(clippy::needless_range_loop)]
        for j in 0..16 {
            assert_eq!(view.rho[j], 1.0 / tau[j]);
            let cell_mass = view.rho[j] * (view.x[j + 1] - view.x[j]);
            assert!((cell_mass / g.dm - 1.0).abs() < 1e-12);
        }

        // rho = 1: node spacing is exactly dm; rho = 2: exactly dm/2.
        let flat = State::uniform(&g, 1.0, 0.0);
        let view = to_eulerian(&flat, &g, 0.0);
        for j in 0..16 {
            assert_eq!(view.x[j + 1] - view.x[j], g.dm);
        }
        let dense = State::uniform(&g, 2.0, 0.0);
        let view = to_eulerian(&dense, &g, 0.0);
        for j in 0..16 {
            assert_eq!(view.x[j + 1] - view.x[j], 0.5 * g.dm);
        }
    }

    #[test]
    fn psi_gradient_is_zero_at_boundaries_and_centered_inside() {
        let g = MassGrid::new(0.0, 10.0, 10).unwrap();
        let l = law();
        let tau: Vec<f64> = (0..10).map(|j| 1.0 / (1.0 + 0.1 * j as f64)).collect();
        let s = State {
            t: 0.0,
            tau: tau.clone(),
            u: vec![0.0; 11],
        };
        let d = psi_gradient_nodes(&s, &g, &l);
        assert_eq!(d[0], 0.0);
        assert_eq!(d[10], 0.0);
        for j in 1..10 {
            let expected = (l.psi(1.0 / tau[j]) - l.psi(1.0 / tau[j - 1])) / g.dm;
            assert_eq!(d[j], expected);
        }
    }

    #[test]
    fn effective_velocity_reduces_to_u() {
        let g = MassGrid::new(-2.0, 2.0, 8).unwrap();
        let l = law();
        let u: Vec<f64> = (0..9).map(|j| (j as f64 * 0.7).sin()).collect();

        // Flat density: the psi gradient vanishes identically.
        let flat = State {
            t: 0.0,
            tau: vec![1.0 / 1.3; 8],
            u: u.clone(),
        };
        assert_eq!(effective_velocity(&flat, &g, &l, 0.7), u);

        // Zero root: no shift regardless of the density.
        let varied = State {
            t: 0.0,
            tau: (0..8).map(|j| 0.8 + 0.1 * j as f64).collect(),
            u: u.clone(),
        };
        assert_eq!(effective_velocity(&varied, &g, &l, 0.0), u);
    }

    #[test]
    fn quarter_capillarity_merges_the_effective_velocities() {
        let roots = CapillarityRoots::new(0.25).unwrap();
        assert_eq!(roots.r0, 0.5);
        assert_eq!(roots.r1, 0.5);
        let g = MassGrid::new(-2.0, 2.0, 8).unwrap();
        let l = law();
        let s = State {
            t: 0.0,
            tau: (0..8).map(|j| 0.8 + 0.1 * j as f64).collect(),
            u: (0..9).map(|j| (j as f64 * 0.7).cos()).collect(),
        };
        let v0 = effective_velocity(&s, &g, &l, roots.r0);
        let v1 = effective_velocity(&s, &g, &l, roots.r1);
        assert_eq!(v0, v1);
    }

    #[test]
    fn mass_and_space_gradients_of_the_entropy_pair_converge_together() {
        // The mass derivative of psi(rho) and the space derivative of
        // phi(rho) are the same field; their discretizations must agree to
        // second order.
        let l = law();
        let profile = InitialProfile::new(ProfileKind::GaussianBump {
            center: 0.0,
            width: 0.8,
            amplitude: 0.8,
        });
        let sup_diff = |n_cells: usize| -> f64 {
            let g = MassGrid::new(-12.0, 12.0, n_cells).unwrap();
            let (s, _) = init_state(&g, &profile, &l, 0.0).unwrap();
            let grad_m = psi_gradient_nodes(&s, &g, &l);
            let view = to_eulerian(&s, &g, 0.0);
            let mut worst = 0.0_f64;
            #[allow(clippy::needless_range_loop)]
            for j in 1..n_cells {
                let xc_left = 0.5 * (view.x[j - 1] + view.x[j]);
                let xc_right = 0.5 * (view.x[j] + view.x[j + 1]);
                let grad_x =
                    (l.phi(view.rho[j]) - l.phi(view.rho[j - 1])) / (xc_right - xc_left);
                worst = worst.max((grad_x - grad_m[j]).abs());
            }
            worst
        };
        let e64 = sup_diff(64);
        let e128 = sup_diff(128);
        let e256 = sup_diff(256);
        assert!(e64 / e128 > 3.0, "expected second order, got {e64} -> {e128}");
        assert!(e128 / e256 > 3.0, "expected second order, got {e128} -> {e256}");
    }

    #[test]
    fn constant_data_initialize_exactly() {
        let l = law();
        let g = MassGrid::new(-10.0, 10.0, 128).unwrap();
        let profile = InitialProfile::new(ProfileKind::Constant { rho: 1.0 });
        let (s, rec) = init_state(&g, &profile, &l, 0.04).unwrap();
        assert!(s.tau.iter().all(|&t| (t - 1.0).abs() < 1e-12));
        assert!(s.u.iter().all(|&u| u == 0.0));
        assert_eq!(rec.m0, 0.0);
        assert!(rec.ec0.abs() < 1e-18);
        assert!((rec.x_origin + 10.0).abs() < 1e-9);
        assert!(rec.phi_jump.is_none());

        // A denser homogeneous medium: tau = 1/2 everywhere and the energy
        // is purely potential, e(2) * total mass.
        let profile = InitialProfile::new(ProfileKind::Constant { rho: 2.0 });
        let (s, rec) = init_state(&g, &profile, &l, 0.0).unwrap();
        assert!(s.tau.iter().all(|&t| (t - 0.5).abs() < 1e-12));
        assert!((rec.ec0 - l.e(2.0) * g.total_mass()).abs() < 1e-9);
    }

    #[test]
    fn velocity_bump_energy_is_kinetic_only() {
        let l = law();
        let g = MassGrid::new(-12.0, 12.0, 192).unwrap();
        let profile = InitialProfile {
            kind: ProfileKind::Constant { rho: 1.0 },
            u_bump: Some(VelocityBump {
                center: 0.0,
                width: 1.0,
                amplitude: 0.5,
            }),
            mollify_n: None,
        };
        let (s, rec) = init_state(&g, &profile, &l, 0.04).unwrap();
        // The bump's peak sits on a fine-axis sample and the density is
        // flat, so the one-sided bound is the amplitude itself.
        assert_eq!(rec.m0, 0.5);

        let parts = crate::diagnostics::energy_breakdown(&s, &g, &l, 0.04);
        assert!(parts.potential.abs() < 1e-12);
        assert!(parts.capillary.abs() < 1e-12);
        // integral of u^2/2 dm = amp^2/2 * width * sqrt(pi)
        let exact = 0.125 * std::f64::consts::PI.sqrt();
        assert!(
            (parts.kinetic - exact).abs() < 1e-3,
            "kinetic {} vs {}",
            parts.kinetic,
            exact
        );
        assert!((rec.ec0 - parts.kinetic).abs() < 1e-12);
    }

    #[test]
    fn admissible_jump_bound_is_uniform_in_mollification() {
        let l = law();
        let g = MassGrid::new(-16.0, 16.0, 256).unwrap();
        let kind = ProfileKind::DensityJump {
            location: 0.0,
            rho_left: 2.0,
            rho_right: 1.0,
            ramp_width: 2.0,
            plateau_halfwidth: 3.0,
        };
        let raw = InitialProfile::new(kind.clone());
        let (_, raw_rec) = init_state(&g, &raw, &l, 0.04).unwrap();
        assert!(raw_rec.phi_jump.unwrap() < 0.0);

        let mut bounds = Vec::new();
        for n in [10_u32, 20, 40] {
            let profile = InitialProfile {
                kind: kind.clone(),
                u_bump: None,
                mollify_n: Some(n),
            };
            let (_, rec) = init_state(&g, &profile, &l, 0.04).unwrap();
            assert!(rec.m0 > 0.0);
            // Smoothing averages the data, so it can only lower the bound.
            assert!(
                rec.m0 <= raw_rec.m0 * (1.0 + 1e-9) + 1e-12,
                "n = {n}: {} exceeds the unmollified bound {}",
                rec.m0,
                raw_rec.m0
            );
            bounds.push(rec.m0);
        }
        let max = bounds.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
        let min = bounds.iter().cloned().fold(f64::INFINITY, f64::min);
        let spread = max / min - 1.0;
        assert!(
            spread < 0.05,
            "one-sided bound must be uniform in the mollification index, spread = {spread}"
        );
    }

    #[test]
    fn jump_direction_sets_the_phi_jump_sign() {
        let l = law();
        let g = MassGrid::new(-16.0, 16.0, 256).unwrap();
        let rising = InitialProfile::new(ProfileKind::DensityJump {
            location: 0.0,
            rho_left: 1.0,
            rho_right: 2.0,
            ramp_width: 2.0,
            plateau_halfwidth: 3.0,
        });
        let (_, rec) = init_state(&g, &rising, &l, 0.0).unwrap();
        assert!(rec.phi_jump.unwrap() > 0.0);
    }

    #[test]
    fn narrow_domains_are_rejected() {
        let l = law();
        // Density support carries more mass than the margin allows.
        let g = MassGrid::new(-5.0, 5.0, 64).unwrap();
        let wide = InitialProfile::new(ProfileKind::GaussianBump {
            center: 0.0,
            width: 1.0,
            amplitude: 1.0,
        });
        let err = init_state(&g, &wide, &l, 0.0).unwrap_err();
        match err {
            CoreError::InvalidParameter { field, message } => {
                assert_eq!(field, "grid");
                assert!(message.contains("margin"), "unexpected message: {message}");
            }
            other => panic!("expected a margin rejection, got {other:?}"),
        }

        // A broad velocity bump alone also counts as support.
        let g = MassGrid::new(-8.0, 8.0, 64).unwrap();
        let breezy = InitialProfile {
            kind: ProfileKind::Constant { rho: 1.0 },
            u_bump: Some(VelocityBump {
                center: 0.0,
                width: 2.0,
                amplitude: 0.1,
            }),
            mollify_n: None,
        };
        assert!(init_state(&g, &breezy, &l, 0.0).is_err());
    }

    proptest! {
        #[test]
        fn mollification_is_linear_and_positivity_preserving(
            pairs in proptest::collection::vec((-5.0_f64..5.0, -5.0_f64..5.0), 80..160),
            a in -3.0_f64..3.0,
            b in -3.0_f64..3.0,
        ) {
            let dx = 1.0 / 64.0;
            let n = 4;
            let f: Vec<f64> = pairs.iter().map(|p| p.0).collect();
            let g: Vec<f64> = pairs.iter().map(|p| p.1).collect();
            let mf = mollify(&f, dx, n).unwrap();
            let mg = mollify(&g, dx, n).unwrap();
            let combo: Vec<f64> = f.iter().zip(&g).map(|(&x, &y)| a * x + b * y).collect();
            let mcombo = mollify(&combo, dx, n).unwrap();
            for i in 0..f.len() {
                prop_assert!((mcombo[i] - (a * mf[i] + b * mg[i])).abs() < 1e-9);
            }
            let pos: Vec<f64> = f.iter().map(|x| x.abs()).collect();
            let mpos = mollify(&pos, dx, n).unwrap();
            prop_assert!(mpos.iter().all(|&v| v >= -1e-15));
        }
    }
}
