//! Shared fixtures for the kernel benchmarks: a smooth-bump state on a
//! large mass grid, together with the matching grid and material laws.

use nsk1d_core::field_state::{init_state, InitialProfile, MassGrid, ProfileKind, State};
use nsk1d_core::laws::LawBundle;

/// Cell count used by every kernel benchmark.
pub const N_CELLS: usize = 4096;

/// Material laws shared by the benchmarks.
pub fn law() -> LawBundle {
    LawBundle::new(0.4, 2.0, 1.0, 0.1).expect("valid exponents")
}

/// Smooth-bump state (resting gas, 30% density bump) on `[-16, 16]` with
/// [`N_CELLS`] cells, prepared for a run with capillarity `c`.
pub fn bump_state(c: f64) -> (State, MassGrid) {
    let grid = MassGrid::new(-16.0, 16.0, N_CELLS).expect("valid grid");
    let profile = InitialProfile::new(ProfileKind::GaussianBump {
        center: 0.0,
        width: 1.0,
        amplitude: 0.3,
    });
    let (state, _) = init_state(&grid, &profile, &law(), c).expect("valid profile");
    (state, grid)
}
