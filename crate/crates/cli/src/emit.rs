//! Deterministic output emission.
//!
//! A run directory contains:
//!
//! ```text
//!   config.json        canonical configuration (defaults resolved)
//!   series.csv         one diagnostics row per accepted step
//!   snapshots/t_*.csv  full fields at each output time
//!   final_state.csv    last valid state, whatever the terminal status
//!   summary.json       terminal status and headline numbers
//!   manifest.json      sha-256 of every file above, sorted by path
//! ```
//!
//! A sweep directory holds one such directory per case (named `c_<value>`),
//! plus `sweep.json` and a manifest covering everything. All numbers are
//! printed with 17 significant digits, so re-running a config reproduces
//! every byte.

use std::collections::BTreeMap;
use std::fmt::Write as _;
use std::path::{Path, PathBuf};

use serde::Serialize;
use sha2::{Digest, Sha256};

use nsk1d_core::diagnostics::{DiagnosticReport, ViolationCounts};
use nsk1d_core::experiments::SweepReport;
use nsk1d_core::field_state::{effective_velocity, to_eulerian};
use nsk1d_core::laws::HypothesisReport;
use nsk1d_core::solver::{Formulation, Snapshot};
use nsk1d_core::{CapillarityRoots, RunRecord, RunStatus};

use crate::config::RunConfig;
use crate::error::CliError;

/// Relative path → SHA-256 (lowercase hex) of every emitted file, except
/// `manifest.json` itself.
#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct Manifest {
    pub files: BTreeMap<String, String>,
}

impl Manifest {
    fn new() -> Self {
        Self {
            files: BTreeMap::new(),
        }
    }

    pub fn to_json(&self) -> String {
        let mut text = serde_json::to_string_pretty(self).expect("manifest serializes");
        text.push('\n');
        text
    }
}

fn sha256_hex(bytes: &[u8]) -> String {
    let digest = Sha256::digest(bytes);
    let mut hex = String::with_capacity(64);
    for byte in digest {
        let _ = write!(hex, "{byte:02x}");
    }
    hex
}

/// Writes `contents` under `dir/rel` (creating parents) and records its
/// hash.
fn put(dir: &Path, rel: &str, contents: &str, manifest: &mut Manifest) -> Result<(), CliError> {
    let path = dir.join(rel);
    if let Some(parent) = path.parent() {
        std::fs::create_dir_all(parent).map_err(|source| CliError::Io {
            path: parent.to_path_buf(),
            source,
        })?;
    }
    std::fs::write(&path, contents).map_err(|source| CliError::Io { path, source })?;
    manifest.files.insert(rel.to_string(), sha256_hex(contents.as_bytes()));
    Ok(())
}

/// One diagnostics row per accepted step (plus the initial one).
fn series_csv(reports: &[DiagnosticReport]) -> String {
    let mut out = String::from(
        "t,Ec,kinetic,potential,capillary,bd0,bd1,visc_u,visc_v0,visc_v1,rho_min,rho_max,v1_sup,tv_phi,hoffA,hoffB,sup_sigma_dxv0\n",
    );
    for r in reports {
        let _ = writeln!(
            out,
            "{:.16e},{:.16e},{:.16e},{:.16e},{:.16e},{:.16e},{:.16e},{:.16e},{:.16e},{:.16e},{:.16e},{:.16e},{:.16e},{:.16e},{:.16e},{:.16e},{:.16e}",
            r.t,
            r.ec,
            r.kinetic,
            r.potential,
            r.capillary,
            r.bd0,
            r.bd1,
            r.visc_dissip_u,
            r.visc_dissip_v0,
            r.visc_dissip_v1,
            r.rho_min,
            r.rho_max,
            r.v1_sup,
            r.tv_phi,
            r.hoff_a,
            r.hoff_b,
            r.sup_sigma_dxv0,
        );
    }
    out
}

/// Node-wise field table. Cell quantities are averaged onto nodes for
/// output only (end nodes take the single adjacent cell).
fn fields_csv(m_min: f64, dm: f64, tau: &[f64], x: &[f64], u: &[f64], v0: &[f64], v1: &[f64]) -> String {
    let n = tau.len();
    let mut out = String::from("m,tau,rho,u,x,v0,v1\n");
    for j in 0..=n {
        let tau_node = if j == 0 {
            tau[0]
        } else if j == n {
            tau[n - 1]
        } else {
            0.5 * (tau[j - 1] + tau[j])
        };
        let _ = writeln!(
            out,
            "{:.16e},{:.16e},{:.16e},{:.16e},{:.16e},{:.16e},{:.16e}",
            m_min + j as f64 * dm,
            tau_node,
            1.0 / tau_node,
            u[j],
            x[j],
            v0[j],
            v1[j],
        );
    }
    out
}

fn snapshot_csv(record: &RunRecord, snap: &Snapshot) -> String {
    fields_csv(
        record.grid.m_min,
        record.grid.dm,
        &snap.tau,
        &snap.x,
        &snap.u,
        &snap.v0,
        &snap.v1,
    )
}

fn final_state_csv(record: &RunRecord) -> String {
    let roots = CapillarityRoots::new(record.c).expect("record c was accepted by the run");
    let state = &record.final_state;
    let view = to_eulerian(state, &record.grid, record.init.x_origin);
    let v0 = effective_velocity(state, &record.grid, &record.law, roots.r0);
    let v1 = effective_velocity(state, &record.grid, &record.law, roots.r1);
    fields_csv(
        record.grid.m_min,
        record.grid.dm,
        &state.tau,
        &view.x,
        &state.u,
        &v0,
        &v1,
    )
}

/// The stable label for a snapshot file: the configured output time the
/// snapshot landed on (`state.t` can differ from it by round-off), trimmed
/// to the shortest decimal within 1e-9 so derived times don't drag float
/// noise into filenames.
fn snapshot_label(snap_t: f64, output_times: &[f64]) -> String {
    let t = output_times
        .iter()
        .copied()
        .find(|&t_out| (snap_t - t_out).abs() <= 1e-9 * t_out.max(1.0))
        .unwrap_or(snap_t);
    let short = format!("{t:.9}");
    let short = short.trim_end_matches('0').trim_end_matches('.');
    match short.parse::<f64>() {
        Ok(v) if (v - t).abs() <= 1e-9 * t.abs().max(1.0) => short.to_string(),
        _ => format!("{t}"),
    }
}

/// Headline numbers of a finished (or failed) run.
#[derive(Debug, Clone, Serialize)]
pub struct RunSummary {
    pub run_id: String,
    pub status: RunStatus,
    pub t_final: f64,
    pub n_steps: u64,
    pub n_rejections: u64,
    pub momentum_residual_max: f64,
    pub domain_too_small: bool,
    pub ec0: f64,
    pub m0: f64,
    pub x_origin: f64,
    pub phi_jump: Option<f64>,
    /// Smallest density seen at any report time.
    pub rho_min_overall: f64,
    /// Largest density seen at any report time.
    pub rho_max_overall: f64,
    /// Largest effective-velocity sup seen at any report time.
    pub v1_sup_max: f64,
    pub violations: ViolationCounts,
    pub applicability_warning: Option<String>,
    pub hypotheses: HypothesisReport,
}

impl RunSummary {
    pub fn from_record(record: &RunRecord, run_id: &str) -> Self {
        let mut rho_min_overall = f64::INFINITY;
        let mut rho_max_overall = f64::NEG_INFINITY;
        let mut v1_sup_max = f64::NEG_INFINITY;
        for r in &record.reports {
            rho_min_overall = rho_min_overall.min(r.rho_min);
            rho_max_overall = rho_max_overall.max(r.rho_max);
            v1_sup_max = v1_sup_max.max(r.v1_sup);
        }
        Self {
            run_id: run_id.to_string(),
            status: record.status,
            t_final: record.final_state.t,
            n_steps: record.n_steps,
            n_rejections: record.n_rejections,
            momentum_residual_max: record.momentum_residual_max,
            domain_too_small: record.domain_too_small,
            ec0: record.init.ec0,
            m0: record.init.m0,
            x_origin: record.init.x_origin,
            phi_jump: record.init.phi_jump,
            rho_min_overall,
            rho_max_overall,
            v1_sup_max,
            violations: record.violations,
            applicability_warning: record.applicability_warning.clone(),
            hypotheses: record.hypotheses.clone(),
        }
    }
}

fn pretty_json<T: Serialize>(value: &T) -> String {
    let mut text = serde_json::to_string_pretty(value).expect("value serializes");
    text.push('\n');
    text
}

/// Emits one run into `dir` and returns the manifest (also written there).
pub fn emit_run(record: &RunRecord, config: &RunConfig, dir: &Path) -> Result<Manifest, CliError> {
    let mut manifest = Manifest::new();
    put(dir, "config.json", &config.canonical_json(), &mut manifest)?;
    put(dir, "series.csv", &series_csv(&record.reports), &mut manifest)?;
    let times = &record.config.output_times;
    let mut used = std::collections::BTreeSet::new();
    for snap in &record.snapshots {
        let mut label = snapshot_label(snap.t, times);
        if !used.insert(label.clone()) {
            // Two output times trimmed to the same short decimal; fall back
            // to the exact form for the later one.
            label = format!("{}", snap.t);
            used.insert(label.clone());
        }
        let rel = format!("snapshots/t_{label}.csv");
        put(dir, &rel, &snapshot_csv(record, snap), &mut manifest)?;
    }
    put(dir, "final_state.csv", &final_state_csv(record), &mut manifest)?;
    let summary = RunSummary::from_record(record, &config.run_id());
    put(dir, "summary.json", &pretty_json(&summary), &mut manifest)?;
    let text = manifest.to_json();
    std::fs::write(dir.join("manifest.json"), &text).map_err(|source| CliError::Io {
        path: dir.join("manifest.json"),
        source,
    })?;
    Ok(manifest)
}

/// Case directory name inside a sweep, e.g. `c_0.04`.
pub fn case_dir_name(c: f64) -> String {
    format!("c_{c}")
}

/// The formulation a sweep case runs in (the effective form wherever the
/// capillary flux exists).
pub fn sweep_case_formulation(c: f64) -> Formulation {
    if c > 0.0 {
        Formulation::EffectiveV1
    } else {
        Formulation::Primitive
    }
}

/// Emits a sweep: one run directory per case plus `sweep.json`, and a
/// manifest covering every file (case manifests included).
pub fn emit_sweep(
    report: &SweepReport,
    records: &[RunRecord],
    base_config: &RunConfig,
    dir: &Path,
) -> Result<Manifest, CliError> {
    let mut manifest = Manifest::new();
    for record in records {
        let case_rel = case_dir_name(record.c);
        let mut case_config = base_config.clone();
        case_config.c = record.c;
        case_config.formulation = sweep_case_formulation(record.c);
        let case_dir = dir.join(&case_rel);
        let case_manifest = emit_run(record, &case_config, &case_dir)?;
        manifest.files.insert(
            format!("{case_rel}/manifest.json"),
            sha256_hex(case_manifest.to_json().as_bytes()),
        );
        for (rel, hash) in case_manifest.files {
            manifest.files.insert(format!("{case_rel}/{rel}"), hash);
        }
    }
    put(dir, "sweep.json", &pretty_json(report), &mut manifest)?;
    let text = manifest.to_json();
    std::fs::write(dir.join("manifest.json"), &text).map_err(|source| CliError::Io {
        path: dir.join("manifest.json"),
        source,
    })?;
    Ok(manifest)
}

/// Emits a standalone study report (`<name>.json`) with its config and a
/// manifest.
pub fn emit_study<T: Serialize>(
    name: &str,
    report: &T,
    config: &RunConfig,
    dir: &Path,
) -> Result<Manifest, CliError> {
    let mut manifest = Manifest::new();
    put(dir, "config.json", &config.canonical_json(), &mut manifest)?;
    put(dir, &format!("{name}.json"), &pretty_json(report), &mut manifest)?;
    let text = manifest.to_json();
    std::fs::write(dir.join("manifest.json"), &text).map_err(|source| CliError::Io {
        path: dir.join("manifest.json"),
        source,
    })?;
    Ok(manifest)
}

/// Convenience: `<out>/<run_id>` — the hash-named run directory.
pub fn run_dir(out: &Path, config: &RunConfig) -> PathBuf {
    out.join(config.run_id())
}
