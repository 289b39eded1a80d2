//! Error type shared by the solver core.

/// Errors produced by grid construction, law validation, single steps, and
/// the experiment drivers.
///
/// [`crate::solver::step`] raises [`CoreError::Vacuum`] and
/// [`CoreError::Unstable`] when a step cannot be completed, but
/// [`crate::solver::run`] catches both and always returns the trajectory it
/// computed, with the failure recorded in [`crate::solver::RunStatus`] so
/// callers keep the last valid state.
#[derive(Debug, thiserror::Error)]
pub enum CoreError {
    /// A constructor or driver was handed a parameter outside its domain.
    #[error("invalid `{field}`: {message}")]
    InvalidParameter {
        /// Name of the offending field, e.g. `"gamma"` or `"profile.rho_left"`.
        field: &'static str,
        /// Human-readable constraint, e.g. `"must lie in [0, 0.25], got 0.3"`.
        message: String,
    },

    /// A mollification width was requested that the auxiliary axis cannot
    /// resolve (the kernel support must cover several grid spacings).
    #[error("mollifier too narrow: kernel half-width {half_width} needs dx <= {required}, axis has dx = {dx}")]
    MollifierResolution {
        half_width: f64,
        required: f64,
        dx: f64,
    },

    /// A unit-mass window check was requested outside the computational grid.
    #[error("window [{ell}, {ell_plus_one}] not contained in the mass interval [{m_min}, {m_max}]")]
    WindowOutsideGrid {
        ell: f64,
        ell_plus_one: f64,
        m_min: f64,
        m_max: f64,
    },

    /// A mollification study was handed a density jump the underlying
    /// stability theory does not admit (the jump must not increase
    /// `phi(rho)`); pass `allow_inadmissible` to force the run anyway.
    #[error("inadmissible density jump: phi jumps by {phi_jump:+.6e} > 0 across the interface")]
    InadmissibleJump { phi_jump: f64 },

    /// A refinement study needs at least three grids related by halving.
    #[error("resolution study needs >= 3 grid levels, got {got}")]
    TooFewGridLevels { got: usize },

    /// A step drove some cell's specific volume nonpositive and the halving
    /// budget could not restore positivity.
    #[error("vacuum formed at t = {t:.6e}: cell {cell} reached tau = {tau:.3e}")]
    Vacuum { t: f64, cell: usize, tau: f64 },

    /// The energy guard kept rejecting the step even at the smallest
    /// allowed step size.
    #[error("time step collapsed at t = {t:.6e}: {halvings} halvings down to dt = {dt:.3e} still violate the energy guard")]
    Unstable { t: f64, dt: f64, halvings: u32 },
}
