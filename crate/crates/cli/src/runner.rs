use std::collections::BTreeMap;
use std::fmt::Write as _;
use std::fs;
use std::path::{Path, PathBuf};
use std::time::Instant;

use cgl_steer::dynamics::{resolve, CGLParams, ControlSchedule, Trajectory, TRAJECTORY_CSV_HEADER};
use cgl_steer::saturation::{
    chain_condition, check_q_condition, decompose_with, is_generator, saturation_chain, write_levels_csv,
    write_text_report, DecomposeOptions, SubspaceBasis, MEMBERSHIP_TOLERANCE,
};
use cgl_steer::spectral::{io as field_io, SpectralField};
use cgl_steer::synthesis::{
    execute_and_refine, limit_probe, log_log_slope, null_control_schedule, same_argument_target, LimitRow,
    PhaseOutcome, RefinementRow, REFINEMENT_CSV_HEADER,
};
use serde::Serialize;

use crate::config::{Experiment, ExperimentConfig};
use crate::error::CliError;
use crate::manifest::{sha256_hex, CsvSchema, OutputEntry, RunManifest, RunStatus, CONFIG_FILE};

pub const SCHEDULE_CSV_PREFIX: &str = "segment,duration_s";
pub const NODE_CSV_HEADER: &str = "index,level,error_hs,budget";
pub const DECOMPOSITION_CSV_HEADER: &str = "target,level,parts,residual,status";
pub const SAME_ARGUMENT_CSV_HEADER: &str = "quantity,value";

#[derive(Debug)]
pub struct RunOutcome {
    pub dir: PathBuf,
    pub manifest: RunManifest,
}

impl RunOutcome {
    pub fn exit_code(&self) -> i32 {
        match self.manifest.status {
            RunStatus::Ok => 0,
            RunStatus::NumericalFailure => 3,
        }
    }
}

struct Output {
    file: String,
    bytes: Vec<u8>,
    schema: Option<CsvSchema>,
}

#[derive(Default)]
struct Report {
    outputs: Vec<Output>,
    summary: String,
    failure: Option<String>,
    wall: BTreeMap<String, f64>,
}

impl Report {
    fn csv(&mut self, file: &str, bytes: Vec<u8>) {
        let header = String::from_utf8_lossy(&bytes)
            .lines()
            .next()
            .unwrap_or_default()
            .to_string();
        self.outputs.push(Output {
            file: file.into(),
            bytes,
            schema: Some(CsvSchema { version: 1, header }),
        });
    }

    fn raw(&mut self, file: &str, bytes: Vec<u8>) {
        self.outputs.push(Output {
            file: file.into(),
            bytes,
            schema: None,
        });
    }

    fn field(&mut self, file: &str, field: &SpectralField) -> Result<(), CliError> {
        let mut buf = Vec::new();
        field_io::write_field(&mut buf, field)?;
        self.raw(file, buf);
        Ok(())
    }

    fn json<T: Serialize>(&mut self, file: &str, value: &T) {
        let text = serde_json::to_string_pretty(value).expect("serializable") + "\n";
        self.raw(file, text.into_bytes());
    }

    fn fail(&mut self, why: impl Into<String>) {
        self.failure.get_or_insert(why.into());
    }
}

fn now() -> String {
    chrono::Utc::now().to_rfc3339_opts(chrono::SecondsFormat::Millis, true)
}

/// Output directory: explicit override, then the config, then `runs/<kind>`.
pub fn output_dir(config: &ExperimentConfig, out: Option<&Path>) -> PathBuf {
    out.map(Path::to_path_buf)
        .or_else(|| config.output_dir.clone())
        .unwrap_or_else(|| PathBuf::from("runs").join(config.experiment.name()))
}

/// Validate, execute and persist one experiment. Configuration errors are
/// returned before anything is written; numerical failures produce a run
/// directory whose manifest records them.
pub fn run(config: &ExperimentConfig, out: Option<&Path>) -> Result<RunOutcome, CliError> {
    config.validate()?;
    let dir = output_dir(config, out);
    let mut config = config.clone();
    config.output_dir = Some(dir.clone());
    config.synthesis.seed = config.seed;

    fs::create_dir_all(&dir)?;
    fs::write(dir.join(CONFIG_FILE), config.to_json() + "\n")?;
    let started_at = now();
    let clock = Instant::now();
    let mut report = match dispatch(&config) {
        Ok(r) => r,
        Err(CliError::Numerical(msg)) => Report {
            summary: format!("{}: failed: {msg}", config.experiment.name()),
            failure: Some(msg),
            ..Report::default()
        },
        Err(e) => return Err(e),
    };
    report.wall.insert("total".into(), clock.elapsed().as_secs_f64());

    let mut outputs = Vec::with_capacity(report.outputs.len());
    for o in &report.outputs {
        fs::write(dir.join(&o.file), &o.bytes)?;
        outputs.push(OutputEntry {
            file: o.file.clone(),
            sha256: sha256_hex(&o.bytes),
            bytes: o.bytes.len() as u64,
            schema: o.schema.clone(),
        });
    }
    let manifest = RunManifest {
        artifact: env!("CARGO_PKG_NAME").into(),
        version: env!("CARGO_PKG_VERSION").into(),
        kind: config.experiment.name().into(),
        seed: config.seed,
        config,
        started_at,
        finished_at: now(),
        status: if report.failure.is_some() {
            RunStatus::NumericalFailure
        } else {
            RunStatus::Ok
        },
        message: report.failure,
        summary: report.summary,
        outputs,
        wall_times: report.wall,
    };
    manifest.write_atomic(&dir)?;
    Ok(RunOutcome { dir, manifest })
}

fn dispatch(cfg: &ExperimentConfig) -> Result<Report, CliError> {
    let grid = cfg.solver.grid;
    let psi0 = cfg.initial.build(&grid)?;
    let s = cfg.solver.s;
    match &cfg.experiment {
        Experiment::Simulate {
            horizon,
            segments,
            snapshot_times,
        } => {
            let schedule = ControlSchedule {
                segments: segments.clone(),
                r1: cfg.params.r1,
                r2: cfg.params.r2,
            };
            let traj = resolve(&psi0, &schedule, *horizon, &cfg.params, &cfg.solver, snapshot_times)?;
            let mut r = Report::default();
            trajectory_csv(&mut r, &traj)?;
            for (i, (_, f)) in traj.snapshots.iter().enumerate() {
                r.field(&format!("snapshot_{i:03}.cglf"), f)?;
            }
            r.field("final.cglf", &traj.final_state)?;
            r.summary = format!(
                "simulate: T = {horizon}, final ‖ψ‖_s = {:.6e}, max|ψ| = {:.6e}",
                traj.final_state.sobolev_norm(s),
                traj.final_state.max_modulus()
            );
            Ok(r)
        }
        Experiment::VerifyLimit { u, deltas } => {
            let phi = cfg.target.as_ref().expect("validated").build()?;
            let rows = limit_probe(&psi0, &phi, u, &cfg.params, &cfg.solver, deltas)?;
            let mut r = Report::default();
            let mut buf = Vec::new();
            LimitRow::write_csv(&rows, &mut buf)?;
            r.csv("limit.csv", buf);
            if let Some(bad) = rows.iter().find(|row| row.error.is_none()) {
                r.fail(format!("δ = {}: {}", bad.delta, bad.status));
            }
            let last = rows.last().expect("validated non-empty");
            r.summary = format!(
                "verify-limit: error = {} at δ = {}, first error = {}, log-log slope = {}",
                fmt_opt(last.error),
                last.delta,
                fmt_opt(rows[0].error),
                fmt_opt(log_log_slope(&rows))
            );
            Ok(r)
        }
        Experiment::NullControl {
            epsilon_relative,
            horizon,
            r1,
            r2,
        } => {
            let epsilon = epsilon_relative * psi0.sobolev_norm(s);
            let nc = null_control_schedule(
                &psi0,
                epsilon,
                *horizon,
                *r1,
                *r2,
                &cfg.params,
                &cfg.solver,
                &cfg.synthesis,
            )?;
            let params = cfg.params.with_coupling(*r1, *r2);
            let traj = resolve(&psi0, &nc.schedule, *horizon, &params, &cfg.solver, &[])?;
            let mut r = Report::default();
            r.csv("schedule.csv", schedule_csv(&nc.schedule, params.q.len()));
            trajectory_csv(&mut r, &traj)?;
            r.field("final.cglf", &traj.final_state)?;
            r.json("null_control.json", &nc);
            if !nc.converged {
                r.fail(format!(
                    "‖ψ(T)‖_s = {:.6e} not below ε = {epsilon:.6e}",
                    nc.achieved_norm
                ));
            }
            r.summary = format!(
                "null-control: ‖ψ(T)‖_s = {:.6e} (ε = {epsilon:.6e}), T = {horizon}, δ = {}",
                nc.achieved_norm,
                fmt_opt(nc.delta)
            );
            Ok(r)
        }
        Experiment::PhaseControl { levels } => {
            let theta = cfg.target.as_ref().expect("validated").build()?;
            let chain = saturation_chain(&SubspaceBasis::span(cfg.params.dim(), &cfg.params.q), *levels);
            let outcome = execute_and_refine(&theta, &psi0, &chain, &cfg.params, &cfg.solver, &cfg.synthesis)?;
            let mut r = Report::default();
            phase_outputs(&mut r, &outcome, &cfg.params)?;
            r.summary = format!(
                "phase-control: error = {:.6e}, T = {:.6e}, δ = {:.6e}, level = {}{}",
                outcome.error,
                outcome.plan.total_time,
                outcome.deltas().first().copied().unwrap_or(0.0),
                outcome.plan.level,
                if outcome.converged { "" } else { " (not converged)" }
            );
            Ok(r)
        }
        Experiment::SaturationReport {
            frequencies,
            sigma,
            levels,
            targets,
        } => {
            let generator = is_generator(frequencies);
            let chains = chain_condition(frequencies, *sigma);
            let chain = saturation_chain(&SubspaceBasis::from_frequencies(frequencies), *levels);
            let mut r = Report::default();
            let mut rows = format!("{DECOMPOSITION_CSV_HEADER}\n");
            let mut found = Vec::new();
            for (i, t) in targets.iter().enumerate() {
                let tol = MEMBERSHIP_TOLERANCE * (1.0 + t.l2_norm());
                match chain.level_of(t, tol) {
                    None => {
                        writeln!(rows, "{i},,,,outside-chain").unwrap();
                        r.fail(format!("target {i} lies outside the computed chain"));
                    }
                    Some(0) => writeln!(rows, "{i},0,0,0,in-base").unwrap(),
                    Some(level) => {
                        let below = &chain.levels[level - 1];
                        let mut opts = DecomposeOptions::new(below.len());
                        opts.restarts = cfg.synthesis.decompose_restarts;
                        opts.seed = cfg.seed;
                        match decompose_with(t, below, &opts) {
                            Ok(dec) => {
                                writeln!(rows, "{i},{level},{},{:.6e},ok", dec.parts.len(), dec.residual).unwrap();
                                found.push((format!("target {i}"), dec));
                            }
                            Err(cgl_steer::Error::DecompositionFailed { residual, .. }) => {
                                writeln!(rows, "{i},{level},,{residual:.6e},failed").unwrap();
                                r.fail(format!("target {i}: decomposition residual {residual:.3e}"));
                            }
                            Err(e) => return Err(e.into()),
                        }
                    }
                }
            }
            let mut levels_buf = Vec::new();
            write_levels_csv(&mut levels_buf, &chain)?;
            r.csv("levels.csv", levels_buf);
            if !targets.is_empty() {
                r.csv("decompositions.csv", rows.into_bytes());
            }
            let mut text = Vec::new();
            write_text_report(&mut text, frequencies, generator, &chains, &chain, &found)?;
            let saturating = generator && chains.holds;
            let mut tail = format!("saturating = {saturating}\n");
            if cfg.params.dim() == frequencies.dim() {
                writeln!(tail, "q condition = {}", check_q_condition(&cfg.params.q, frequencies)).unwrap();
            }
            text.extend_from_slice(tail.as_bytes());
            r.raw("report.txt", text);
            r.summary = format!(
                "saturation-report: saturating = {saturating}, dimensions = {:?}",
                chain.dimensions()
            );
            Ok(r)
        }
        Experiment::SameArgument {
            reach,
            mollifier,
            degree_cap,
            levels,
        } => {
            let psi1 = reach.build(&grid)?;
            let theta = same_argument_target(&psi0, &psi1, mollifier, *degree_cap)?;
            let chain = saturation_chain(&SubspaceBasis::span(cfg.params.dim(), &cfg.params.q), *levels);
            let outcome = execute_and_refine(&theta, &psi0, &chain, &cfg.params, &cfg.solver, &cfg.synthesis)?;
            let mut r = Report::default();
            phase_outputs(&mut r, &outcome, &cfg.params)?;
            let before = psi0.sub(&psi1)?.l2_norm();
            let after = outcome.final_state.sub(&psi1)?.l2_norm();
            let mut buf = format!("{SAME_ARGUMENT_CSV_HEADER}\n");
            for (name, v) in [
                ("l2_initial", before),
                ("l2_final", after),
                ("ratio", if before > 0.0 { after / before } else { 0.0 }),
                ("phase_error_hs", outcome.error),
                ("total_time_s", outcome.plan.total_time),
            ] {
                writeln!(buf, "{name},{v:.12e}").unwrap();
            }
            r.csv("same_argument.csv", buf.into_bytes());
            let mut tbuf = Vec::new();
            field_io::write_trig(&mut tbuf, &theta)?;
            r.raw("theta.txt", tbuf);
            r.summary = format!(
                "same-argument: ‖ψ(T) − ψ1‖_L2 = {after:.6e} from {before:.6e}, T = {:.6e}, δ = {:.6e}{}",
                outcome.plan.total_time,
                outcome.deltas().first().copied().unwrap_or(0.0),
                if outcome.converged { "" } else { " (not converged)" }
            );
            Ok(r)
        }
    }
}

fn fmt_opt(v: Option<f64>) -> String {
    v.map(|x| format!("{x:.6e}")).unwrap_or_else(|| "n/a".into())
}

fn trajectory_csv(r: &mut Report, traj: &Trajectory) -> Result<(), CliError> {
    let mut buf = Vec::new();
    traj.write_csv(&mut buf)?;
    debug_assert!(buf.starts_with(TRAJECTORY_CSV_HEADER.as_bytes()));
    r.csv("trajectory.csv", buf);
    Ok(())
}

fn schedule_csv(schedule: &ControlSchedule, q: usize) -> Vec<u8> {
    let mut out = String::from(SCHEDULE_CSV_PREFIX);
    for j in 0..q {
        write!(out, ",u_{j}").unwrap();
    }
    out.push('\n');
    for (i, seg) in schedule.segments.iter().enumerate() {
        write!(out, "{i},{:.12e}", seg.duration).unwrap();
        for u in &seg.u {
            write!(out, ",{u:.12e}").unwrap();
        }
        out.push('\n');
    }
    out.into_bytes()
}

fn phase_outputs(r: &mut Report, outcome: &PhaseOutcome, params: &CGLParams) -> Result<(), CliError> {
    let mut buf = Vec::new();
    RefinementRow::write_csv(&outcome.refinements, &mut buf)?;
    debug_assert!(buf.starts_with(REFINEMENT_CSV_HEADER.as_bytes()));
    r.csv("refinements.csv", buf);
    let mut nodes = format!("{NODE_CSV_HEADER}\n");
    for n in &outcome.node_errors {
        writeln!(nodes, "{},{},{:.12e},{:.12e}", n.index, n.level, n.error, n.budget).unwrap();
    }
    r.csv("node_errors.csv", nodes.into_bytes());
    r.csv("schedule.csv", schedule_csv(&outcome.plan.schedule, params.q.len()));
    r.json("plan.json", &outcome.plan);
    r.field("final.cglf", &outcome.final_state)?;
    for row in &outcome.refinements {
        r.wall.insert(format!("refinement_{}", row.refinement), row.wall_time);
    }
    if !outcome.converged {
        r.fail(format!(
            "relative error {:.6e} above budget after {} refinements",
            outcome.error,
            outcome.refinements.len()
        ));
    }
    Ok(())
}
