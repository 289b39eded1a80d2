//! Every functional, bound, and window estimate the solver's trajectories are
//! expected to satisfy, as per-time-slice reports plus trajectory-level
//! accumulators.
//!
//! The center of the suite is the energy
//!
//! ```text
//!   Ec(t) = ∫ ( u²/2 + a e(rho) + (c/2)(∂_m psi(rho))² ) dm,
//! ```
//!
//! non-increasing along solutions, with the viscous dissipation
//! `∫∫ rho mu (∂_m u)²` accounting for the loss. The two entropy functionals
//! `bd_i = ∫ (v_i²/2 + a e(rho)) dm` (with `v_i = u + r_i ∂_m psi`) decay as
//! well, their dissipation split between a viscous part and a pressure part
//! `a gamma r_i ∫∫ mu rho^(gamma-2) (∂_m rho)²`.
//!
//! Structural checks on unit-mass windows `[ℓ, ℓ+1]`:
//! - `1/2 (2(gamma-1)Ec0 + gamma)^(-theta/(gamma-1)) <= ∫ rho^(-theta)
//!   <= (Ec0 + gamma/(gamma-1))^(1/theta)` for `theta ∈ (0, 1]`,
//! - `∫ rho^(gamma-1) <= (gamma-1)Ec0 + gamma`,
//! - `min over the window of sup_{s<=t} Xi(rho) <= sup_window Xi(rho0)
//!   + t((gamma-1)Ec0 + gamma) + Ec0`,
//! - every Eulerian interval `[y, y + 2 Ec0]` contains a point with
//!   `rho >= pi^{-1}(1/2)`.
//!
//! Hoff-type functionals quantify parabolic smoothing from rough data with
//! the weight `sigma(t) = min(1, t)`:
//!
//! ```text
//!   A(t) = ∫0^t ∫ sigma |∂_t v0|² dm ds + (1-r0)/2 sigma(t) ∫ rho mu (∂_m v0)² dm
//!   B(t) = 1/2 sigma(t)² ∫ |∂_t v0|² dm + (1-r0) ∫0^t ∫ sigma² rho mu (∂_m ∂_t v0)² dm
//! ```
//!
//! where `∂_t v0` is the exact semi-discrete right-hand side of the `v0`
//! equation (never a time difference). All time quadratures are
//! left-endpoint; all accumulators are non-decreasing.

use serde::{Deserialize, Serialize};

use crate::error::CoreError;
use crate::field_state::{effective_velocity, psi_gradient_nodes, to_eulerian, EulerianView, MassGrid, State};
use crate::laws::{CapillarityRoots, LawBundle};

/// Discrete energy and its components.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct EnergyBreakdown {
    /// Trapezoidal node integral of `u²/2`.
    pub kinetic: f64,
    /// Cell integral of `a e(rho)`.
    pub potential: f64,
    /// Trapezoidal node integral of `(c/2)(∂_m psi)²`.
    pub capillary: f64,
    pub total: f64,
}

/// Total energy of a state (kinetic + potential + capillary), the quantity
/// that must not increase along trajectories.
pub fn energy_breakdown(state: &State, grid: &MassGrid, law: &LawBundle, c: f64) -> EnergyBreakdown {
    let dm = grid.dm;
    let n_nodes = state.u.len();
    let mut kinetic = 0.0;
    for (j, &u) in state.u.iter().enumerate() {
        let w = if j == 0 || j == n_nodes - 1 { 0.5 } else { 1.0 };
        kinetic += w * 0.5 * u * u * dm;
    }
    let mut potential = 0.0;
    for &t in &state.tau {
        potential += law.a * law.e(1.0 / t) * dm;
    }
    let mut capillary = 0.0;
    if c > 0.0 {
        let dpsi = psi_gradient_nodes(state, grid, law);
        for (j, &d) in dpsi.iter().enumerate() {
            let w = if j == 0 || j == n_nodes - 1 { 0.5 } else { 1.0 };
            capillary += w * 0.5 * c * d * d * dm;
        }
    }
    EnergyBreakdown {
        kinetic,
        potential,
        capillary,
        total: kinetic + potential + capillary,
    }
}

/// The same energy evaluated purely from an Eulerian view, using the exact
/// discrete change of measure `rho dx = dm` per cell. Agrees with
/// [`energy_breakdown`] to round-off; kept as an independent cross-check.
pub fn energy_breakdown_eulerian(
    view: &EulerianView,
    law: &LawBundle,
    c: f64,
) -> EnergyBreakdown {
    let n_cells = view.rho.len();
    let n_nodes = view.u.len();
    // Cell masses from the view itself.
    let mass: Vec<f64> = (0..n_cells)
        .map(|j| view.rho[j] * (view.x[j + 1] - view.x[j]))
        .collect();
    // Dual mass of node j: half of each adjacent cell.
    let node_mass = |j: usize| -> f64 {
        let left = if j > 0 { 0.5 * mass[j - 1] } else { 0.0 };
        let right = if j < n_cells { 0.5 * mass[j] } else { 0.0 };
        left + right
    };
    let mut kinetic = 0.0;
    for (j, &u) in view.u.iter().enumerate() {
        kinetic += 0.5 * u * u * node_mass(j);
    }
    let mut potential = 0.0;
    for (j, &r) in view.rho.iter().enumerate() {
        potential += law.a * law.e(r) * mass[j];
    }
    // ∂_x phi(rho) pulled back through the mass variable equals
    // ∂_m psi(rho); the node's dm is its dual mass.
    let mut capillary = 0.0;
    if c > 0.0 {
        for j in 1..n_nodes - 1 {
            let dpsi = (law.psi(view.rho[j]) - law.psi(view.rho[j - 1]))
                / (0.5 * (mass[j] + mass[j - 1]));
            capillary += 0.5 * c * dpsi * dpsi * node_mass(j);
        }
    }
    EnergyBreakdown {
        kinetic,
        potential,
        capillary,
        total: kinetic + potential + capillary,
    }
}

/// Entropy values `bd_i = ∫ (v_i²/2 + a e(rho)) dm` for both effective
/// velocities.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct BdEntropies {
    pub bd0: f64,
    pub bd1: f64,
}

/// Evaluates both entropy functionals at one state.
pub fn bd_entropy_report(
    state: &State,
    grid: &MassGrid,
    law: &LawBundle,
    c: f64,
) -> BdEntropies {
    let roots = CapillarityRoots::new(c).expect("c validated upstream");
    let dm = grid.dm;
    let n_nodes = state.u.len();
    let dpsi = psi_gradient_nodes(state, grid, law);
    let mut kin0 = 0.0;
    let mut kin1 = 0.0;
    for (j, (&uj, &dp)) in state.u.iter().zip(&dpsi).enumerate() {
        let w = if j == 0 || j == n_nodes - 1 { 0.5 } else { 1.0 };
        let v0 = uj + roots.r0 * dp;
        let v1 = uj + roots.r1 * dp;
        kin0 += w * 0.5 * v0 * v0 * dm;
        kin1 += w * 0.5 * v1 * v1 * dm;
    }
    let mut potential = 0.0;
    for &t in &state.tau {
        potential += law.a * law.e(1.0 / t) * dm;
    }
    BdEntropies {
        bd0: kin0 + potential,
        bd1: kin1 + potential,
    }
}

/// Time-accumulated dissipation integrals (all non-decreasing).
#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
pub struct DissipationAcc {
    /// `∫∫ rho mu (∂_m u)² dm ds`.
    pub visc_u: f64,
    /// `(1-r0) ∫∫ rho mu (∂_m v0)² dm ds`.
    pub visc_v0: f64,
    /// `(1-r1) ∫∫ rho mu (∂_m v1)² dm ds`.
    pub visc_v1: f64,
    /// `a gamma r0 ∫∫ mu rho^(gamma-2) (∂_m rho)² dm ds`, the pressure part
    /// of the `v0` entropy budget.
    pub pressure_v: f64,
}

/// Advances the dissipation accumulators by one left-endpoint time slab of
/// width `dt`, evaluated at the pre-step state.
pub fn dissipation_update(
    acc: &mut DissipationAcc,
    state: &State,
    grid: &MassGrid,
    law: &LawBundle,
    roots: &CapillarityRoots,
    dt: f64,
) {
    if dt == 0.0 {
        return;
    }
    let dm = grid.dm;
    let n = grid.n_cells;
    let dpsi = psi_gradient_nodes(state, grid, law);

    // Cell-centered gradients of u, v0, v1.
    let mut visc_u = 0.0;
    let mut visc_v0 = 0.0;
    let mut visc_v1 = 0.0;
    for j in 0..n {
        let rho = 1.0 / state.tau[j];
        let rho_mu = law.rho_mu(rho);
        let du = (state.u[j + 1] - state.u[j]) / dm;
        let dv0 = du + roots.r0 * (dpsi[j + 1] - dpsi[j]) / dm;
        let dv1 = du + roots.r1 * (dpsi[j + 1] - dpsi[j]) / dm;
        visc_u += rho_mu * du * du * dm;
        visc_v0 += rho_mu * dv0 * dv0 * dm;
        visc_v1 += rho_mu * dv1 * dv1 * dm;
    }
    acc.visc_u += dt * visc_u;
    acc.visc_v0 += dt * (1.0 - roots.r0) * visc_v0;
    acc.visc_v1 += dt * (1.0 - roots.r1) * visc_v1;

    // Pressure part: node-centered density gradient against the averaged
    // coefficient mu rho^(gamma-2).
    let coeff = |j: usize| {
        let rho = 1.0 / state.tau[j];
        law.mu(rho) * rho.powf(law.gamma - 2.0)
    };
    let mut press = 0.0;
    for j in 1..n {
        let drho = (1.0 / state.tau[j] - 1.0 / state.tau[j - 1]) / dm;
        let k = 0.5 * (coeff(j - 1) + coeff(j));
        press += k * drho * drho * dm;
    }
    acc.pressure_v += dt * law.a * law.gamma * roots.r0 * press;
}

/// Exact semi-discrete tendency of the slow effective velocity:
/// `∂_t v0 = (1-r0) ∂_m(rho mu ∂_m v0) - ∂_m(a rho^gamma)` at nodes
/// (zero at the boundary nodes).
pub fn v0_tendency(
    state: &State,
    grid: &MassGrid,
    law: &LawBundle,
    roots: &CapillarityRoots,
) -> Vec<f64> {
    let n = grid.n_cells;
    let dm = grid.dm;
    let v0 = effective_velocity(state, grid, law, roots.r0);
    let mut flux = Vec::with_capacity(n);
    for j in 0..n {
        let rho = 1.0 / state.tau[j];
        let dv0 = (v0[j + 1] - v0[j]) / dm;
        flux.push((1.0 - roots.r0) * law.rho_mu(rho) * dv0 - law.pressure(rho));
    }
    let mut out = vec![0.0; n + 1];
    for j in 1..n {
        out[j] = (flux[j] - flux[j - 1]) / dm;
    }
    out
}

/// Time-accumulated Hoff integrals (all non-decreasing).
#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
pub struct HoffAcc {
    /// `∫0^t sigma ∫ |∂_t v0|² dm ds`.
    pub int_sigma_vdot_sq: f64,
    /// `∫0^t sigma² ∫ rho mu (∂_m ∂_t v0)² dm ds`.
    pub int_sigma2_dxvdot_sq: f64,
    /// `∫0^t sigma ‖∂_x v0‖²_{L∞} ds`.
    pub int_sigma_dxv0_sq: f64,
}

/// The instantaneous (non-accumulated) Hoff ingredients of one state.
struct HoffSlice {
    /// `∫ |∂_t v0|² dm` (trapezoidal over nodes).
    vdot_sq: f64,
    /// `∫ rho mu (∂_m ∂_t v0)² dm` (cells).
    dxvdot_sq: f64,
    /// `∫ rho mu (∂_m v0)² dm` (cells) — the Eulerian `∫ mu (∂_x v0)² dx`.
    mu_dxv0_sq: f64,
    /// `max_j |rho ∂_m v0|` — the Eulerian `‖∂_x v0‖_{L∞}` at cells.
    dxv0_sup: f64,
}

fn hoff_slice(state: &State, grid: &MassGrid, law: &LawBundle, roots: &CapillarityRoots) -> HoffSlice {
    let n = grid.n_cells;
    let dm = grid.dm;
    let vdot = v0_tendency(state, grid, law, roots);
    let v0 = effective_velocity(state, grid, law, roots.r0);
    let mut vdot_sq = 0.0;
    for (j, &vd) in vdot.iter().enumerate() {
        let w = if j == 0 || j == n { 0.5 } else { 1.0 };
        vdot_sq += w * vd * vd * dm;
    }
    let mut dxvdot_sq = 0.0;
    let mut mu_dxv0_sq = 0.0;
    let mut dxv0_sup = 0.0f64;
    for j in 0..n {
        let rho = 1.0 / state.tau[j];
        let rho_mu = law.rho_mu(rho);
        let dvd = (vdot[j + 1] - vdot[j]) / dm;
        let dv0 = (v0[j + 1] - v0[j]) / dm;
        dxvdot_sq += rho_mu * dvd * dvd * dm;
        mu_dxv0_sq += rho_mu * dv0 * dv0 * dm;
        dxv0_sup = dxv0_sup.max((rho * dv0).abs());
    }
    HoffSlice {
        vdot_sq,
        dxvdot_sq,
        mu_dxv0_sq,
        dxv0_sup,
    }
}

/// `sigma(t) = min(1, t)`, the parabolic-smoothing weight.
#[inline]
pub fn sigma(t: f64) -> f64 {
    t.min(1.0)
}

/// One unit-mass window check at one instant.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct WindowCheck {
    /// Window origin: the mass window is `[ell, ell+1]`.
    pub ell: f64,
    pub theta: f64,
    /// `∫_ell^{ell+1} rho^(-theta) dm`.
    pub integral_inv_rho_theta: f64,
    /// `1/2 (2(gamma-1)Ec0 + gamma)^(-theta/(gamma-1))`.
    pub lower_bound: f64,
    /// `(Ec0 + gamma/(gamma-1))^(1/theta)`.
    pub upper_bound: f64,
    /// `∫_ell^{ell+1} rho^(gamma-1) dm`, bounded by `(gamma-1)Ec0 + gamma`.
    pub integral_rho_gamma_minus_1: f64,
    /// Min over the window's cells of the running sup of `Xi(rho)`.
    pub xi_window_min_sup: f64,
    /// `sup_window Xi(rho0) + t((gamma-1)Ec0 + gamma) + Ec0`.
    pub xi_bound_rhs: f64,
    /// Whether the Eulerian interval `[y(ell), y(ell) + 2 Ec0]` contains a
    /// cell with `rho >= pi^{-1}(1/2)`.
    pub vacuum_point_found: bool,
    /// Eulerian position of the first such cell.
    pub vacuum_location: Option<f64>,
}

/// Instantaneous structure quantities of one state.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct StructureReport {
    pub window_checks: Vec<WindowCheck>,
    pub rho_min: f64,
    pub rho_max: f64,
    /// `max_j v1[j]` — the one-sided quantity whose upper bound propagates.
    pub v1_sup: f64,
    /// Total variation of `phi(rho)` over cells whose centers lie in the
    /// Eulerian window `[-L, L]`.
    pub tv_phi: f64,
}

/// Count of bound violations observed over a whole run (zero on healthy
/// trajectories).
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
pub struct ViolationCounts {
    /// `∫ rho^(-theta)` left its `[lower, upper]` interval.
    pub window_bounds: u64,
    /// `∫ rho^(gamma-1)` exceeded `(gamma-1)Ec0 + gamma`.
    pub rho_gamma: u64,
    /// A window's min running sup of `Xi` exceeded its affine-in-t bound.
    pub xi_window: u64,
    /// An Eulerian window `[y, y+2Ec0]` had no point with
    /// `rho >= pi^{-1}(1/2)`.
    pub vacuum_point: u64,
}

impl ViolationCounts {
    pub fn total(&self) -> u64 {
        self.window_bounds + self.rho_gamma + self.xi_window + self.vacuum_point
    }
}

/// Fractional overlap weights of the mass window `[ell, ell+1]` with each
/// grid cell: weight 1 for fully covered cells, the covered fraction for the
/// two end cells. Exact for integrands constant per cell.
fn window_weights(grid: &MassGrid, ell: f64) -> Result<Vec<(usize, f64)>, CoreError> {
    let lo = ell;
    let hi = ell + 1.0;
    if lo < grid.m_min - 1e-12 || hi > grid.m_max + 1e-12 {
        return Err(CoreError::WindowOutsideGrid {
            ell: lo,
            ell_plus_one: hi,
            m_min: grid.m_min,
            m_max: grid.m_max,
        });
    }
    let mut weights = Vec::new();
    let first = (((lo - grid.m_min) / grid.dm).floor() as isize).max(0) as usize;
    for j in first..grid.n_cells {
        let cell_lo = grid.m_min + j as f64 * grid.dm;
        let cell_hi = cell_lo + grid.dm;
        if cell_lo >= hi {
            break;
        }
        let overlap = (cell_hi.min(hi) - cell_lo.max(lo)).max(0.0);
        if overlap > 0.0 {
            weights.push((j, overlap / grid.dm));
        }
    }
    Ok(weights)
}

/// The closed-form window bounds for `∫ rho^(-theta)`.
fn window_bounds(law: &LawBundle, ec0: f64, theta: f64) -> (f64, f64) {
    let g = law.gamma;
    let lower = 0.5 * (2.0 * (g - 1.0) * ec0 + g).powf(-theta / (g - 1.0));
    let upper = (ec0 + g / (g - 1.0)).powf(1.0 / theta);
    (lower, upper)
}

/// Evaluates every window check and the scalar structure quantities at one
/// state.
///
/// `xi_running_sup` holds the per-cell running suprema of `Xi(rho)` over the
/// trajectory so far (including the current state); `xi0_window_sup` the
/// per-window suprema of `Xi(rho0)` at `t = 0`, aligned with
/// `window_origins`.
#[allow(clippy::too_many_arguments)]
pub fn structure_checks(
    state: &State,
    grid: &MassGrid,
    law: &LawBundle,
    c: f64,
    ec0: f64,
    theta_list: &[f64],
    window_origins: &[f64],
    l_window: f64,
    xi_running_sup: &[f64],
    xi0_window_sup: &[f64],
    x_origin: f64,
) -> Result<(StructureReport, ViolationCounts), CoreError> {
    let roots = CapillarityRoots::new(c)?;
    let (rho_min, rho_max) = state.rho_range();
    let v1 = effective_velocity(state, grid, law, roots.r1);
    let v1_sup = v1.iter().copied().fold(f64::NEG_INFINITY, f64::max);

    // Eulerian layout for the vacuum scan and the TV window.
    let view = to_eulerian(state, grid, x_origin);
    let rho_star = law.pi_inverse_half();

    let mut tv_phi = 0.0;
    for j in 0..grid.n_cells.saturating_sub(1) {
        let xc0 = 0.5 * (view.x[j] + view.x[j + 1]);
        let xc1 = 0.5 * (view.x[j + 1] + view.x[j + 2]);
        if xc0 >= -l_window && xc1 <= l_window {
            tv_phi += (law.phi(view.rho[j + 1]) - law.phi(view.rho[j])).abs();
        }
    }

    let mut checks = Vec::with_capacity(window_origins.len() * theta_list.len());
    let mut violations = ViolationCounts::default();
    let rho_gamma_bound = (law.gamma - 1.0) * ec0 + law.gamma;

    for (w_idx, &ell) in window_origins.iter().enumerate() {
        let weights = window_weights(grid, ell)?;

        let mut int_rho_gm1 = 0.0;
        let mut xi_min_sup = f64::INFINITY;
        for &(j, w) in &weights {
            let rho = 1.0 / state.tau[j];
            int_rho_gm1 += w * rho.powf(law.gamma - 1.0) * grid.dm;
            xi_min_sup = xi_min_sup.min(xi_running_sup[j]);
        }
        let xi_rhs = xi0_window_sup[w_idx] + state.t * rho_gamma_bound + ec0;

        // Vacuum scan over the Eulerian interval [y(ell), y(ell) + 2 Ec0],
        // clamped to the view.
        let y_lo = eulerian_position_of_mass(grid, &view, ell);
        let y_hi = y_lo + 2.0 * ec0;
        let mut vacuum_found = false;
        let mut vacuum_location = None;
        for j in 0..grid.n_cells {
            if view.x[j + 1] < y_lo {
                continue;
            }
            if view.x[j] > y_hi {
                break;
            }
            if view.rho[j] >= rho_star {
                vacuum_found = true;
                vacuum_location = Some(0.5 * (view.x[j] + view.x[j + 1]));
                break;
            }
        }

        let rho_gamma_ok = int_rho_gm1 <= rho_gamma_bound * (1.0 + 1e-12);
        let xi_ok = xi_min_sup <= xi_rhs * (1.0 + 1e-12) + 1e-12;
        if !rho_gamma_ok {
            violations.rho_gamma += 1;
        }
        if !xi_ok {
            violations.xi_window += 1;
        }
        if !vacuum_found {
            violations.vacuum_point += 1;
        }

        for &theta in theta_list {
            let mut int_inv = 0.0;
            for &(j, w) in &weights {
                int_inv += w * state.tau[j].powf(theta) * grid.dm;
            }
            let (lower, upper) = window_bounds(law, ec0, theta);
            if !(int_inv >= lower * (1.0 - 1e-12) && int_inv <= upper * (1.0 + 1e-12)) {
                violations.window_bounds += 1;
            }
            checks.push(WindowCheck {
                ell,
                theta,
                integral_inv_rho_theta: int_inv,
                lower_bound: lower,
                upper_bound: upper,
                integral_rho_gamma_minus_1: int_rho_gm1,
                xi_window_min_sup: xi_min_sup,
                xi_bound_rhs: xi_rhs,
                vacuum_point_found: vacuum_found,
                vacuum_location,
            });
        }
    }

    Ok((
        StructureReport {
            window_checks: checks,
            rho_min,
            rho_max,
            v1_sup,
            tv_phi,
        },
        violations,
    ))
}

/// Eulerian position of a mass coordinate, by linear interpolation inside
/// its cell.
fn eulerian_position_of_mass(grid: &MassGrid, view: &EulerianView, m: f64) -> f64 {
    let s = ((m - grid.m_min) / grid.dm).clamp(0.0, grid.n_cells as f64);
    let j = (s.floor() as usize).min(grid.n_cells - 1);
    let frac = s - j as f64;
    view.x[j] + frac * (view.x[j + 1] - view.x[j])
}

/// Per-report diagnostic slice; one row of the run's time series.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DiagnosticReport {
    pub t: f64,
    pub ec: f64,
    pub kinetic: f64,
    pub potential: f64,
    pub capillary: f64,
    pub visc_dissip_u: f64,
    pub visc_dissip_v0: f64,
    pub visc_dissip_v1: f64,
    pub pressure_dissip_v: f64,
    pub bd0: f64,
    pub bd1: f64,
    pub rho_min: f64,
    pub rho_max: f64,
    pub v1_sup: f64,
    pub tv_phi: f64,
    pub hoff_a: f64,
    pub hoff_b: f64,
    pub sup_sigma_dxv0: f64,
    pub int_sigma_dxv0_sq: f64,
    pub sigma: f64,
    /// Full window results; populated at output times, empty in between.
    pub window_checks: Vec<WindowCheck>,
}

/// Options steering the structure checks of a run.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DiagOptions {
    /// Exponents for the `∫ rho^(-theta)` window bounds.
    pub theta_list: Vec<f64>,
    /// Window origins; `None` selects every unit-spaced origin that keeps
    /// `[ell, ell+1]` at least one mass unit away from the boundary.
    pub window_origins: Option<Vec<f64>>,
    /// Eulerian half-width `L` for the TV window; `None` selects the initial
    /// perturbation support plus 2.
    pub l_window: Option<f64>,
}

impl Default for DiagOptions {
    fn default() -> Self {
        Self {
            theta_list: vec![0.5, 1.0],
            window_origins: None,
            l_window: None,
        }
    }
}

/// Default unit-spaced window origins with a one-unit distance from each
/// boundary; empty when the grid is too narrow.
pub fn default_window_origins(grid: &MassGrid) -> Vec<f64> {
    let mut origins = Vec::new();
    let mut ell = grid.m_min + 1.0;
    while ell + 1.0 <= grid.m_max - 1.0 + 1e-12 {
        origins.push(ell);
        ell += 1.0;
    }
    origins
}

/// Trajectory-level diagnostics engine: owns the accumulators, the
/// `Xi`-history, and the violation counters, and produces one
/// [`DiagnosticReport`] per accepted step.
///
/// Protocol: construct from the initial state (this emits the `t = 0`
/// report), then for each accepted step call [`DiagEngine::accumulate`] with
/// the pre-step state and the step size, advance the state, and call
/// [`DiagEngine::report`] with the post-step state.
#[derive(Debug, Clone)]
pub struct DiagEngine {
    law: LawBundle,
    roots: CapillarityRoots,
    c: f64,
    pub ec0: f64,
    theta_list: Vec<f64>,
    window_origins: Vec<f64>,
    l_window: f64,
    x_origin: f64,
    xi_running_sup: Vec<f64>,
    xi0_window_sup: Vec<f64>,
    dissip: DissipationAcc,
    hoff: HoffAcc,
    pub violations: ViolationCounts,
}

impl DiagEngine {
    /// Builds the engine and returns it together with the `t = 0` report.
    #[allow(clippy::too_many_arguments)]
    pub fn new(
        state0: &State,
        grid: &MassGrid,
        law: &LawBundle,
        c: f64,
        opts: &DiagOptions,
        x_origin: f64,
        support_halfwidth: f64,
    ) -> Result<(Self, DiagnosticReport), CoreError> {
        let roots = CapillarityRoots::new(c)?;
        let ec0 = energy_breakdown(state0, grid, law, c).total;
        let theta_list = opts.theta_list.clone();
        for &theta in &theta_list {
            if !(theta > 0.0 && theta <= 1.0) {
                return Err(CoreError::InvalidParameter {
                    field: "diagnostics.theta_list",
                    message: format!("theta must lie in (0, 1], got {theta}"),
                });
            }
        }
        let window_origins = match &opts.window_origins {
            Some(list) => list.clone(),
            None => default_window_origins(grid),
        };
        let l_window = opts.l_window.unwrap_or(support_halfwidth + 2.0);

        let xi_running_sup: Vec<f64> =
            state0.tau.iter().map(|&t| law.xi(1.0 / t)).collect();
        let mut xi0_window_sup = Vec::with_capacity(window_origins.len());
        for &ell in &window_origins {
            let weights = window_weights(grid, ell)?;
            let sup = weights
                .iter()
                .map(|&(j, _)| xi_running_sup[j])
                .fold(f64::NEG_INFINITY, f64::max);
            xi0_window_sup.push(sup);
        }

        let mut engine = Self {
            law: *law,
            roots,
            c,
            ec0,
            theta_list,
            window_origins,
            l_window,
            x_origin,
            xi_running_sup,
            xi0_window_sup,
            dissip: DissipationAcc::default(),
            hoff: HoffAcc::default(),
            violations: ViolationCounts::default(),
        };
        let report0 = engine.report(state0, grid, true)?;
        Ok((engine, report0))
    }

    /// Left-endpoint accumulation over a slab of width `dt`, evaluated at
    /// the pre-step state.
    pub fn accumulate(&mut self, state: &State, grid: &MassGrid, dt: f64) {
        dissipation_update(&mut self.dissip, state, grid, &self.law, &self.roots, dt);
        let s = sigma(state.t);
        let slice = hoff_slice(state, grid, &self.law, &self.roots);
        self.hoff.int_sigma_vdot_sq += dt * s * slice.vdot_sq;
        self.hoff.int_sigma2_dxvdot_sq += dt * s * s * slice.dxvdot_sq;
        self.hoff.int_sigma_dxv0_sq += dt * s * slice.dxv0_sup * slice.dxv0_sup;
    }

    /// Instantaneous report at the given (post-step) state. Updates the
    /// running `Xi` suprema and the violation counters; `with_windows`
    /// controls whether the full window list is attached (it is always
    /// *checked*).
    pub fn report(
        &mut self,
        state: &State,
        grid: &MassGrid,
        with_windows: bool,
    ) -> Result<DiagnosticReport, CoreError> {
        for (j, &tau) in state.tau.iter().enumerate() {
            let xi = self.law.xi(1.0 / tau);
            if xi > self.xi_running_sup[j] {
                self.xi_running_sup[j] = xi;
            }
        }
        let energy = energy_breakdown(state, grid, &self.law, self.c);
        let bd = bd_entropy_report(state, grid, &self.law, self.c);
        let (structure, viol) = structure_checks(
            state,
            grid,
            &self.law,
            self.c,
            self.ec0,
            &self.theta_list,
            &self.window_origins,
            self.l_window,
            &self.xi_running_sup,
            &self.xi0_window_sup,
            self.x_origin,
        )?;
        self.violations.window_bounds += viol.window_bounds;
        self.violations.rho_gamma += viol.rho_gamma;
        self.violations.xi_window += viol.xi_window;
        self.violations.vacuum_point += viol.vacuum_point;

        let s = sigma(state.t);
        let slice = hoff_slice(state, grid, &self.law, &self.roots);
        let hoff_a = self.hoff.int_sigma_vdot_sq
            + 0.5 * (1.0 - self.roots.r0) * s * slice.mu_dxv0_sq;
        let hoff_b =
            0.5 * s * s * slice.vdot_sq + (1.0 - self.roots.r0) * self.hoff.int_sigma2_dxvdot_sq;
        let sup_sigma_dxv0 = s.sqrt() * slice.dxv0_sup;

        Ok(DiagnosticReport {
            t: state.t,
            ec: energy.total,
            kinetic: energy.kinetic,
            potential: energy.potential,
            capillary: energy.capillary,
            visc_dissip_u: self.dissip.visc_u,
            visc_dissip_v0: self.dissip.visc_v0,
            visc_dissip_v1: self.dissip.visc_v1,
            pressure_dissip_v: self.dissip.pressure_v,
            bd0: bd.bd0,
            bd1: bd.bd1,
            rho_min: structure.rho_min,
            rho_max: structure.rho_max,
            v1_sup: structure.v1_sup,
            tv_phi: structure.tv_phi,
            hoff_a,
            hoff_b,
            sup_sigma_dxv0,
            int_sigma_dxv0_sq: self.hoff.int_sigma_dxv0_sq,
            sigma: s,
            window_checks: if with_windows {
                structure.window_checks
            } else {
                Vec::new()
            },
        })
    }
}
