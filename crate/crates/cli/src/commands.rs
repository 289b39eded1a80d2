//! Subcommand surface: argument parsing and dispatch.
//!
//! Exit codes: `0` success, `1` validation error, `2` numerical failure
//! (vacuum or collapsed time step — outputs are still written), `3` i/o
//! error. The `NSK1D_LOG` environment variable (`quiet`, `info`, `debug`)
//! controls stderr chatter and nothing else.

use std::fmt::Write as _;
use std::path::{Path, PathBuf};

use clap::{Parser, Subcommand};

use nsk1d_core::experiments::{
    capillarity_sweep_with_records, mollification_study, resolution_study,
};
use nsk1d_core::laws::HypothesisReport;
use nsk1d_core::solver::run;
use nsk1d_core::{LawBundle, MassGrid, RunStatus};

use crate::config::{parse_config, RunConfig};
use crate::emit::{emit_run, emit_study, emit_sweep, run_dir};
use crate::error::{exit_code, CliError};

/// One-dimensional compressible flow with degenerate viscosity and optional
/// capillarity, plus the diagnostics that certify its a priori estimates.
#[derive(Debug, Parser)]
#[command(name = "nsk1d", version, about)]
pub struct Cli {
    /// Cap the worker-thread count for sweeps and studies.
    #[arg(long, global = true)]
    pub threads: Option<usize>,
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Integrate one configuration and emit its outputs.
    Run {
        /// Path to a JSON config, or @inline JSON (a string starting with `{`).
        #[arg(long)]
        config: String,
        /// Output base directory; the run lands in `<out>/<run-id>/`.
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Run the same initial data across several capillarity strengths.
    Sweep {
        #[arg(long)]
        config: String,
        /// Comma-separated capillarity values, e.g. `0.16,0.04,0.01,0`.
        #[arg(long, value_delimiter = ',', required = true)]
        c_list: Vec<f64>,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Study how mollified jump data behave in the mollification index.
    MollifyStudy {
        #[arg(long)]
        config: String,
        /// Comma-separated mollifier indices, e.g. `10,20,40`.
        #[arg(long, value_delimiter = ',', required = true)]
        n_list: Vec<u32>,
        /// Capillarity values for the evolution part.
        #[arg(long, value_delimiter = ',', required = true)]
        c_list: Vec<f64>,
        #[arg(long)]
        out: Option<PathBuf>,
        /// Accept jumps whose phi increases across the interface.
        #[arg(long)]
        allow_inadmissible: bool,
    },
    /// Grid-refinement self-convergence study (both formulations).
    ResolutionStudy {
        #[arg(long)]
        config: String,
        /// Comma-separated cell counts, each double the previous, at least
        /// three, e.g. `128,256,512`.
        #[arg(long, value_delimiter = ',', required = true)]
        n_list: Vec<usize>,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Check the structural hypotheses of a viscosity/pressure pair.
    CheckLaws {
        #[arg(long)]
        alpha: f64,
        #[arg(long)]
        gamma: f64,
        #[arg(long, default_value_t = 1.0)]
        a: f64,
        #[arg(long, default_value_t = 0.1)]
        eta: f64,
    },
    /// Summarize an emitted run or sweep directory.
    Report {
        /// Directory written by `run` or `sweep`.
        #[arg(long = "in")]
        input: PathBuf,
    },
}

fn verbosity() -> u8 {
    match std::env::var("NSK1D_LOG").as_deref() {
        Ok("quiet") | Ok("0") => 0,
        Ok("debug") | Ok("2") => 2,
        _ => 1,
    }
}

fn info(msg: &str) {
    if verbosity() >= 1 {
        eprintln!("nsk1d: {msg}");
    }
}

fn status_note(status: &RunStatus) -> String {
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

/// Entry point used by both `main` and the tests. Returns the exit code
/// instead of exiting, so it can be driven in-process.
pub fn cli_main<I, T>(argv: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<std::ffi::OsString> + Clone,
{
    let cli = match Cli::try_parse_from(argv) {
        Ok(cli) => cli,
        Err(err) => {
            let code = if err.use_stderr() { 1 } else { 0 };
            let _ = err.print();
            return code;
        }
    };
    let result = match cli.threads {
        Some(n) if n > 0 => {
            match rayon::ThreadPoolBuilder::new().num_threads(n).build() {
                Ok(pool) => pool.install(|| dispatch(cli.command)),
                Err(err) => Err(CliError::Config {
                    path: "/threads".to_string(),
                    message: err.to_string(),
                }),
            }
        }
        _ => dispatch(cli.command),
    };
    match result {
        Ok(()) => 0,
        Err(err) => {
            eprintln!("nsk1d: error: {err}");
            exit_code(&err)
        }
    }
}

fn out_base(flag: Option<PathBuf>, config: &RunConfig) -> PathBuf {
    flag.or_else(|| config.out_dir.as_ref().map(PathBuf::from))
        .unwrap_or_else(|| PathBuf::from("."))
}

fn dispatch(command: Command) -> Result<(), CliError> {
    match command {
        Command::Run { config, out } => cmd_run(&config, out),
        Command::Sweep {
            config,
            c_list,
            out,
        } => cmd_sweep(&config, &c_list, out),
        Command::MollifyStudy {
            config,
            n_list,
            c_list,
            out,
            allow_inadmissible,
        } => cmd_mollify(&config, &n_list, &c_list, out, allow_inadmissible),
        Command::ResolutionStudy {
            config,
            n_list,
            out,
        } => cmd_resolution(&config, &n_list, out),
        Command::CheckLaws {
            alpha,
            gamma,
            a,
            eta,
        } => cmd_check_laws(alpha, gamma, a, eta),
        Command::Report { input } => cmd_report(&input),
    }
}

fn cmd_run(config_arg: &str, out: Option<PathBuf>) -> Result<(), CliError> {
    let config = parse_config(config_arg)?;
    let (grid, profile, law, solver, diag) = config.to_core()?;
    let id = config.run_id();
    info(&format!(
        "run {id}: {:?} scenario, n_cells = {}, c = {}, t_end = {}",
        config.scenario, config.n_cells, config.c, config.t_end
    ));
    let record = run(&grid, &profile, &law, config.c, &solver, &diag)?;
    if let Some(warning) = &record.applicability_warning {
        info(&format!("warning: {warning}"));
    }
    let dir = run_dir(&out_base(out, &config), &config);
    emit_run(&record, &config, &dir)?;
    info(&format!("wrote {}", dir.display()));
    match record.status {
        RunStatus::Completed => Ok(()),
        ref failed => Err(CliError::Numerical(format!(
            "{}; last valid state written to {}",
            status_note(failed),
            dir.join("final_state.csv").display()
        ))),
    }
}

fn cmd_sweep(config_arg: &str, c_list: &[f64], out: Option<PathBuf>) -> Result<(), CliError> {
    let config = parse_config(config_arg)?;
    let (grid, profile, law, solver, diag) = config.to_core()?;
    info(&format!(
        "sweep over c = {c_list:?}, n_cells = {}, t_end = {}",
        config.n_cells, config.t_end
    ));
    let (report, records) =
        capillarity_sweep_with_records(&grid, &profile, &law, c_list, &solver, &diag)?;
    let dir = out_base(out, &config);
    emit_sweep(&report, &records, &config, &dir)?;
    info(&format!("wrote {}", dir.display()));
    let failures: Vec<String> = report
        .status
        .iter()
        .zip(&report.c)
        .filter(|(s, _)| s.as_str() != "completed")
        .map(|(s, c)| format!("c = {c}: {s}"))
        .collect();
    if failures.is_empty() {
        Ok(())
    } else {
        Err(CliError::Numerical(failures.join("; ")))
    }
}

fn cmd_mollify(
    config_arg: &str,
    n_list: &[u32],
    c_list: &[f64],
    out: Option<PathBuf>,
    allow_inadmissible: bool,
) -> Result<(), CliError> {
    let config = parse_config(config_arg)?;
    let (grid, profile, law, solver, diag) = config.to_core()?;
    info(&format!("mollification study, n = {n_list:?}, c = {c_list:?}"));
    let report = mollification_study(
        &grid,
        &profile,
        &law,
        n_list,
        c_list,
        &solver,
        &diag,
        allow_inadmissible,
    )?;
    let dir = out_base(out, &config);
    emit_study("mollify", &report, &config, &dir)?;
    info(&format!("wrote {}", dir.display()));
    let failures: Vec<&String> = report
        .status
        .iter()
        .filter(|s| s.as_str() != "completed")
        .collect();
    if failures.is_empty() {
        Ok(())
    } else {
        Err(CliError::Numerical(
            failures
                .iter()
                .map(|s| s.as_str())
                .collect::<Vec<_>>()
                .join("; "),
        ))
    }
}

fn cmd_resolution(
    config_arg: &str,
    n_list: &[usize],
    out: Option<PathBuf>,
) -> Result<(), CliError> {
    let config = parse_config(config_arg)?;
    let (_, profile, law, solver, diag) = config.to_core()?;
    let grids = n_list
        .iter()
        .map(|&n| MassGrid::new(config.m_min, config.m_max, n))
        .collect::<Result<Vec<_>, _>>()?;
    info(&format!("resolution study, n_cells = {n_list:?}"));
    let report = resolution_study(&grids, &profile, &law, config.c, &solver, &diag)?;
    let dir = out_base(out, &config);
    emit_study("resolution", &report, &config, &dir)?;
    info(&format!("wrote {}", dir.display()));
    Ok(())
}

/// Renders the hypothesis report as a human-readable table.
pub fn render_hypotheses(alpha: f64, gamma: f64, a: f64, eta: f64, report: &HypothesisReport) -> String {
    let mut out = String::new();
    let _ = writeln!(
        out,
        "law: mu(rho) = rho^{alpha}, P(rho) = {a} rho^{gamma}, eta = {eta}"
    );
    let mark = |ok: bool| if ok { "ok" } else { "FAILED" };
    let rows: [(&str, bool, bool); 7] = [
        ("h1  viscosity grows at large density", report.h1, report.sampled.h1),
        ("h2  psi comparable to the viscosity", report.h2, report.sampled.h2),
        ("h3  viscosity below the pressure scale", report.h3, report.sampled.h3),
        ("h4  phi increasing, divergent at vacuum", report.h4, report.sampled.h4),
        ("h5  Xi divergent at large density", report.h5, report.sampled.h5),
        ("h6  Lambda within (1 + Phi)^2", report.h6, report.sampled.h6),
        ("h7  sqrt(tau) within (1 + Phi)^(1-eta)", report.h7, report.sampled.h7),
    ];
    for (label, closed, sampled) in rows {
        let _ = writeln!(out, "  {label:<42} {:<7} (sampled: {})", mark(closed), mark(sampled));
    }
    let _ = writeln!(
        out,
        "  closed-form and sampled decisions agree: {}",
        if report.agrees { "yes" } else { "NO" }
    );
    if !report.constants.is_empty() {
        let parts: Vec<String> = report
            .constants
            .iter()
            .map(|(k, v)| format!("{k} = {v:.6e}"))
            .collect();
        let _ = writeln!(out, "  certifying constants: {}", parts.join(", "));
    }
    let app = &report.applicability;
    let yes = |b: bool| if b { "yes" } else { "no" };
    let _ = writeln!(out, "  estimate suites:");
    let _ = writeln!(out, "    viscous (c = 0):        {}", yes(app.viscous_estimates));
    let _ = writeln!(out, "    capillary (c > 0):      {}", yes(app.capillary_estimates));
    let _ = writeln!(out, "    capillarity limit c->0: {}", yes(app.capillarity_limit));
    out
}

fn cmd_check_laws(alpha: f64, gamma: f64, a: f64, eta: f64) -> Result<(), CliError> {
    let law = LawBundle::new(alpha, gamma, a, eta)?;
    let report = law.check_hypotheses();
    print!("{}", render_hypotheses(alpha, gamma, a, eta, &report));
    Ok(())
}

fn read_to_string(path: &Path) -> Result<String, CliError> {
    std::fs::read_to_string(path).map_err(|source| CliError::Io {
        path: path.to_path_buf(),
        source,
    })
}

fn write_string(path: &Path, contents: &str) -> Result<(), CliError> {
    std::fs::write(path, contents).map_err(|source| CliError::Io {
        path: path.to_path_buf(),
        source,
    })
}

/// Prints a summary table for an emitted directory and writes a plot-ready
/// `report.csv` next to the originals.
fn cmd_report(input: &Path) -> Result<(), CliError> {
    if input.join("sweep.json").exists() {
        return report_sweep(input);
    }
    if input.join("summary.json").exists() {
        return report_run(input);
    }
    Err(CliError::Config {
        path: "/in".to_string(),
        message: format!(
            "{} contains neither sweep.json nor summary.json",
            input.display()
        ),
    })
}

fn report_sweep(dir: &Path) -> Result<(), CliError> {
    let text = read_to_string(&dir.join("sweep.json"))?;
    let sweep: nsk1d_core::experiments::SweepReport =
        serde_json::from_str(&text).map_err(|err| CliError::Config {
            path: "/sweep.json".to_string(),
            message: err.to_string(),
        })?;
    println!(
        "{:>10} {:>13} {:>10} {:>10} {:>10} {:>10} {:>13}  status",
        "c", "distance_L2", "rho_max", "rho_min", "v1_sup", "M0", "v1_sup_slope"
    );
    let mut csv = String::from("c,distance_L2,rho_max,rho_min,v1_sup,m0,v1_sup_slope,status\n");
    for i in 0..sweep.c.len() {
        println!(
            "{:>10} {:>13.6e} {:>10.5} {:>10.5} {:>10.5} {:>10.5} {:>13.6e}  {}",
            sweep.c[i],
            sweep.distance_l2[i],
            sweep.rho_max[i],
            sweep.rho_min[i],
            sweep.v1_sup[i],
            sweep.m0[i],
            sweep.v1_sup_slope[i],
            sweep.status[i],
        );
        let _ = writeln!(
            csv,
            "{:.16e},{:.16e},{:.16e},{:.16e},{:.16e},{:.16e},{:.16e},\"{}\"",
            sweep.c[i],
            sweep.distance_l2[i],
            sweep.rho_max[i],
            sweep.rho_min[i],
            sweep.v1_sup[i],
            sweep.m0[i],
            sweep.v1_sup_slope[i],
            sweep.status[i],
        );
    }
    println!(
        "spread of sup rho_max across cases: {:.6}",
        sweep.uniform.rho_max_spread
    );
    println!(
        "spread of sup 1/rho_min across cases: {:.6}",
        sweep.uniform.inv_rho_min_spread
    );
    write_string(&dir.join("report.csv"), &csv)?;
    println!("wrote {}", dir.join("report.csv").display());
    Ok(())
}

fn report_run(dir: &Path) -> Result<(), CliError> {
    let summary_text = read_to_string(&dir.join("summary.json"))?;
    let summary: serde_json::Value =
        serde_json::from_str(&summary_text).map_err(|err| CliError::Config {
            path: "/summary.json".to_string(),
            message: err.to_string(),
        })?;
    let get = |key: &str| summary.get(key).cloned().unwrap_or(serde_json::Value::Null);
    println!("run {}", get("run_id").as_str().unwrap_or("?"));
    println!("  status: {}", serde_json::to_string(&get("status")).unwrap_or_default());
    for key in [
        "t_final",
        "n_steps",
        "ec0",
        "m0",
        "rho_min_overall",
        "rho_max_overall",
        "v1_sup_max",
        "momentum_residual_max",
        "domain_too_small",
    ] {
        println!("  {key}: {}", get(key));
    }

    let series = read_to_string(&dir.join("series.csv"))?;
    let mut lines = series.lines();
    let header = lines.next().unwrap_or_default();
    let names: Vec<&str> = header.split(',').collect();
    let pick = ["t", "Ec", "rho_min", "rho_max", "v1_sup"];
    let idx: Vec<usize> = pick
        .iter()
        .filter_map(|p| names.iter().position(|n| n == p))
        .collect();
    let rows: Vec<Vec<f64>> = lines
        .map(|line| {
            line.split(',')
                .map(|v| v.parse::<f64>().unwrap_or(f64::NAN))
                .collect()
        })
        .collect();

    let mut csv = String::from("t,Ec,rho_min,rho_max,v1_sup\n");
    for row in &rows {
        let picked: Vec<String> = idx.iter().map(|&i| format!("{:.16e}", row[i])).collect();
        let _ = writeln!(csv, "{}", picked.join(","));
    }
    write_string(&dir.join("report.csv"), &csv)?;

    println!("{:>12} {:>14} {:>10} {:>10} {:>10}", "t", "Ec", "rho_min", "rho_max", "v1_sup");
    let show = 10.min(rows.len());
    for k in 0..show {
        let row = &rows[k * (rows.len() - 1).max(1) / show.max(1)];
        println!(
            "{:>12.6e} {:>14.8e} {:>10.5} {:>10.5} {:>10.5}",
            row[idx[0]], row[idx[1]], row[idx[2]], row[idx[3]], row[idx[4]]
        );
    }
    if let Some(last) = rows.last() {
        println!(
            "{:>12.6e} {:>14.8e} {:>10.5} {:>10.5} {:>10.5}",
            last[idx[0]], last[idx[1]], last[idx[2]], last[idx[3]], last[idx[4]]
        );
    }
    println!("wrote {}", dir.join("report.csv").display());
    Ok(())
}
