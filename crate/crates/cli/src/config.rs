//! Flat, strictly-validated run configuration.
//!
//! A run is described by one JSON object with no nesting. Unknown keys are
//! rejected so a misspelled exponent cannot silently fall back to a default.
//! Parsing fills every default in explicitly; the canonical form written
//! back to disk therefore contains the complete parameter set, and its
//! content hash names the run directory.

use std::fmt::Write as _;
use std::path::Path;

use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use nsk1d_core::diagnostics::DiagOptions;
use nsk1d_core::field_state::{InitialProfile, ProfileKind, VelocityBump};
use nsk1d_core::solver::{Formulation, TimeScheme};
use nsk1d_core::{LawBundle, MassGrid, SolverConfig};

use crate::error::CliError;

/// Initial-data family selector.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Scenario {
    /// Homogeneous medium at density `rho`.
    Constant,
    /// `rho = 1 + amplitude * exp(-(x-center)^2/(2 width^2))`.
    Gaussian,
    /// Ramp–plateau–discontinuity–plateau–ramp density profile.
    Jump,
}

/// Complete description of one run: scenario, law exponents, capillarity,
/// grid, time stepping, and diagnostics options, all in one flat object.
///
/// Fields irrelevant to the chosen scenario keep their defaults and are
/// still recorded, so every stored config is self-contained.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RunConfig {
    pub scenario: Scenario,
    /// Viscosity exponent in `mu(rho) = rho^alpha`.
    pub alpha: f64,
    /// Pressure exponent in `P(rho) = a rho^gamma`.
    pub gamma: f64,
    /// Capillarity strength.
    pub c: f64,
    /// Pressure prefactor.
    #[serde(default = "d_one")]
    pub a: f64,
    /// Margin exponent of the sub-square-root growth condition.
    #[serde(default = "d_eta")]
    pub eta: f64,

    // Grid.
    #[serde(default = "d_m_min")]
    pub m_min: f64,
    #[serde(default = "d_m_max")]
    pub m_max: f64,
    #[serde(default = "d_n_cells")]
    pub n_cells: usize,

    // Scenario shape parameters.
    /// Density of the `constant` scenario.
    #[serde(default = "d_one")]
    pub rho: f64,
    /// Feature center: bump center or jump location.
    #[serde(default = "d_zero")]
    pub center: f64,
    /// Gaussian bump amplitude.
    #[serde(default = "d_amplitude")]
    pub amplitude: f64,
    /// Gaussian bump width.
    #[serde(default = "d_one")]
    pub width: f64,
    /// Density left of the jump.
    #[serde(default = "d_two")]
    pub rho_left: f64,
    /// Density right of the jump.
    #[serde(default = "d_one")]
    pub rho_right: f64,
    /// Width of each smooth connecting ramp of the jump profile.
    #[serde(default = "d_one")]
    pub ramp_width: f64,
    /// Half-length of the plateaus flanking the jump.
    #[serde(default = "d_plateau")]
    pub plateau_halfwidth: f64,
    /// Mollification index; the initial data are smoothed at scale `2/n`.
    #[serde(default)]
    pub mollify_n: Option<u32>,

    // Optional smooth velocity perturbation.
    #[serde(default = "d_zero")]
    pub u_amplitude: f64,
    #[serde(default = "d_one")]
    pub u_width: f64,
    #[serde(default = "d_zero")]
    pub u_center: f64,

    // Time stepping.
    #[serde(default = "d_formulation")]
    pub formulation: Formulation,
    #[serde(default = "d_scheme")]
    pub time_scheme: TimeScheme,
    #[serde(default = "d_cfl")]
    pub cfl: f64,
    #[serde(default = "d_one")]
    pub t_end: f64,
    /// Snapshot/full-check times; `None` selects 11 uniform times in
    /// `[0, t_end]` (resolved explicitly by canonicalization).
    #[serde(default)]
    pub output_times: Option<Vec<f64>>,
    #[serde(default = "d_guard_tol")]
    pub energy_guard_tol: f64,
    #[serde(default = "d_halvings")]
    pub max_dt_halvings: u32,

    // Diagnostics.
    #[serde(default = "d_theta_list")]
    pub theta_list: Vec<f64>,
    /// Unit-window origins; `None` selects every admissible unit-spaced one.
    #[serde(default)]
    pub window_origins: Option<Vec<f64>>,
    /// Eulerian half-width for the variation window; `None` derives it from
    /// the initial support.
    #[serde(default)]
    pub l_window: Option<f64>,

    /// Destination directory; a `--out` flag overrides it. Never part of
    /// the canonical form or the run id.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub out_dir: Option<String>,
}

fn d_zero() -> f64 {
    0.0
}
fn d_one() -> f64 {
    1.0
}
fn d_two() -> f64 {
    2.0
}
fn d_eta() -> f64 {
    0.1
}
fn d_m_min() -> f64 {
    -16.0
}
fn d_m_max() -> f64 {
    16.0
}
fn d_n_cells() -> usize {
    1024
}
fn d_amplitude() -> f64 {
    0.3
}
fn d_plateau() -> f64 {
    3.0
}
fn d_formulation() -> Formulation {
    Formulation::EffectiveV1
}
fn d_scheme() -> TimeScheme {
    TimeScheme::ExplicitRk2
}
fn d_cfl() -> f64 {
    0.25
}
fn d_guard_tol() -> f64 {
    1e-6
}
fn d_halvings() -> u32 {
    20
}
fn d_theta_list() -> Vec<f64> {
    vec![0.5, 1.0]
}

impl RunConfig {
    /// Range checks with messages that cite the admissible interval.
    pub fn validate(&self) -> Result<(), CliError> {
        let fail = |path: &str, message: String| -> Result<(), CliError> {
            Err(CliError::Config {
                path: path.to_string(),
                message,
            })
        };
        if !(self.c.is_finite() && (0.0..=0.25).contains(&self.c)) {
            return fail("/c", format!("out of range: c ∈ [0, 0.25], got {}", self.c));
        }
        if !(self.alpha.is_finite() && self.alpha > 0.0) {
            return fail("/alpha", format!("out of range: alpha ∈ (0, ∞), got {}", self.alpha));
        }
        if !(self.gamma.is_finite() && self.gamma > 1.0) {
            return fail("/gamma", format!("out of range: gamma ∈ (1, ∞), got {}", self.gamma));
        }
        if !(self.a.is_finite() && self.a > 0.0) {
            return fail("/a", format!("out of range: a ∈ (0, ∞), got {}", self.a));
        }
        if !(self.eta > 0.0 && self.eta < 1.0) {
            return fail("/eta", format!("out of range: eta ∈ (0, 1), got {}", self.eta));
        }
        if !(self.cfl.is_finite() && self.cfl > 0.0 && self.cfl <= 0.5) {
            return fail("/cfl", format!("out of range: cfl ∈ (0, 0.5], got {}", self.cfl));
        }
        if !(self.t_end.is_finite() && self.t_end > 0.0) {
            return fail("/t_end", format!("out of range: t_end ∈ (0, ∞), got {}", self.t_end));
        }
        if let Some(times) = &self.output_times {
            for &t in times {
                if !(t.is_finite() && t >= 0.0 && t <= self.t_end * (1.0 + 1e-12)) {
                    return fail(
                        "/output_times",
                        format!("out of range: each time ∈ [0, t_end], got {t}"),
                    );
                }
            }
        }
        for &theta in &self.theta_list {
            if !(theta > 0.0 && theta <= 1.0) {
                return fail(
                    "/theta_list",
                    format!("out of range: theta ∈ (0, 1], got {theta}"),
                );
            }
        }
        Ok(())
    }

    /// Resolves every implicit default so the stored copy is explicit.
    pub fn canonicalize(&self) -> Self {
        let mut canon = self.clone();
        if canon.output_times.is_none() {
            let times = (0..=10).map(|k| (k as f64 / 10.0) * self.t_end).collect();
            canon.output_times = Some(times);
        }
        canon
    }

    /// Canonical JSON text: every default resolved, destination stripped,
    /// trailing newline. This exact text is written to `config.json` and
    /// hashed for the run id.
    pub fn canonical_json(&self) -> String {
        let mut canon = self.canonicalize();
        canon.out_dir = None;
        let mut text = serde_json::to_string_pretty(&canon).expect("config serializes");
        text.push('\n');
        text
    }

    /// First 12 hex digits of the canonical form's SHA-256; names the run
    /// directory.
    pub fn run_id(&self) -> String {
        let digest = Sha256::digest(self.canonical_json().as_bytes());
        let mut id = String::with_capacity(12);
        for byte in &digest[..6] {
            let _ = write!(id, "{byte:02x}");
        }
        id
    }

    /// The initial-data description for the solver.
    pub fn profile(&self) -> InitialProfile {
        let kind = match self.scenario {
            Scenario::Constant => ProfileKind::Constant { rho: self.rho },
            Scenario::Gaussian => ProfileKind::GaussianBump {
                center: self.center,
                width: self.width,
                amplitude: self.amplitude,
            },
            Scenario::Jump => ProfileKind::DensityJump {
                location: self.center,
                rho_left: self.rho_left,
                rho_right: self.rho_right,
                ramp_width: self.ramp_width,
                plateau_halfwidth: self.plateau_halfwidth,
            },
        };
        let u_bump = (self.u_amplitude != 0.0).then_some(VelocityBump {
            center: self.u_center,
            width: self.u_width,
            amplitude: self.u_amplitude,
        });
        InitialProfile {
            kind,
            u_bump,
            mollify_n: self.mollify_n,
        }
    }

    /// Builds the solver-side objects. Deep parameter validation (grid
    /// size, exponent ranges the law enforces) happens here.
    pub fn to_core(
        &self,
    ) -> Result<(MassGrid, InitialProfile, LawBundle, SolverConfig, DiagOptions), CliError> {
        self.validate()?;
        let grid = MassGrid::new(self.m_min, self.m_max, self.n_cells)?;
        let law = LawBundle::new(self.alpha, self.gamma, self.a, self.eta)?;
        let canon = self.canonicalize();
        let solver = SolverConfig {
            formulation: self.formulation,
            time_scheme: self.time_scheme,
            cfl: self.cfl,
            t_end: self.t_end,
            output_times: canon.output_times.expect("canonical form has times"),
            energy_guard_tol: self.energy_guard_tol,
            max_dt_halvings: self.max_dt_halvings,
        };
        solver.validate()?;
        let diag = DiagOptions {
            theta_list: self.theta_list.clone(),
            window_origins: self.window_origins.clone(),
            l_window: self.l_window,
        };
        Ok((grid, self.profile(), law, solver, diag))
    }
}

/// Parses a config given either inline JSON (first non-space byte `{`) or a
/// path to a JSON file. The result is validated and canonicalized.
pub fn parse_config(path_or_inline: &str) -> Result<RunConfig, CliError> {
    let text = if path_or_inline.trim_start().starts_with('{') {
        path_or_inline.to_string()
    } else {
        let path = Path::new(path_or_inline);
        std::fs::read_to_string(path).map_err(|source| CliError::Io {
            path: path.to_path_buf(),
            source,
        })?
    };
    parse_config_str(&text)
}

/// Parses a config from JSON text, reporting schema errors with a JSON
/// pointer to the offending field.
pub fn parse_config_str(text: &str) -> Result<RunConfig, CliError> {
    let mut de = serde_json::Deserializer::from_str(text);
    let config: RunConfig =
        serde_path_to_error::deserialize(&mut de).map_err(|err| CliError::Config {
            path: json_pointer(&err.path().to_string()),
            message: err.inner().to_string(),
        })?;
    config.validate()?;
    Ok(config.canonicalize())
}

/// `a.b[2].c` → `/a/b/2/c`; the bare document is `/`.
fn json_pointer(path: &str) -> String {
    if path == "." {
        return "/".to_string();
    }
    let mut out = String::new();
    for segment in path.split('.') {
        // Flatten index suffixes like `times[3]`.
        let mut rest = segment;
        while let Some(open) = rest.find('[') {
            let (head, tail) = rest.split_at(open);
            if !head.is_empty() {
                out.push('/');
                out.push_str(head);
            }
            let close = tail.find(']').unwrap_or(tail.len() - 1);
            out.push('/');
            out.push_str(&tail[1..close]);
            rest = &tail[close + 1..];
        }
        if !rest.is_empty() {
            out.push('/');
            out.push_str(rest);
        }
    }
    if out.is_empty() {
        "/".to_string()
    } else {
        out
    }
}
