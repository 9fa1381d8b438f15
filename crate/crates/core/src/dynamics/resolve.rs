use std::io::Write;

use super::flows::Stepper;
use super::params::{CGLParams, ControlSchedule, SolverConfig, SubstepPolicy};
use crate::error::{Error, Result};
use crate::spectral::SpectralField;

pub const TRAJECTORY_CSV_HEADER: &str = "t_s,hs_norm,l2_norm,max_modulus";

/// Constant-control stretch of the time axis, integrated with `substeps`
/// equal steps.
#[derive(Clone, Debug)]
pub(crate) struct Piece {
    pub start: f64,
    pub duration: f64,
    pub u: Vec<f64>,
    pub substeps: usize,
}

impl Piece {
    pub fn dt(&self) -> f64 {
        self.duration / self.substeps as f64
    }
}

pub(crate) fn check_inputs(
    psi0: &SpectralField,
    schedule: &ControlSchedule,
    horizon: f64,
    params: &CGLParams,
    config: &SolverConfig,
) -> Result<()> {
    params.validate()?;
    config.validate()?;
    if *psi0.grid() != config.grid {
        return Err(Error::GridMismatch {
            left: psi0.grid().to_string(),
            right: config.grid.to_string(),
        });
    }
    if params.dim() != config.grid.d {
        return Err(Error::Input(format!(
            "control directions live in d = {}, grid has d = {}",
            params.dim(),
            config.grid.d
        )));
    }
    if !(horizon >= 0.0) || !horizon.is_finite() {
        return Err(Error::Input(format!("horizon must be finite and ≥ 0, got {horizon}")));
    }
    for seg in &schedule.segments {
        if seg.u.len() != params.q.len() {
            return Err(Error::Input(format!(
                "segment control has {} components, Q has {}",
                seg.u.len(),
                params.q.len()
            )));
        }
        if !(seg.duration > 0.0) {
            return Err(Error::Input("segment durations must be positive".into()));
        }
    }
    Ok(())
}

/// Time grid shared by [`resolve`] and the Picard oracle. Pieces are split at
/// every breakpoint inside `(0, T)`.
pub(crate) fn plan_pieces(
    schedule: &ControlSchedule,
    horizon: f64,
    params: &CGLParams,
    config: &SolverConfig,
    breakpoints: &[f64],
) -> Result<Vec<Piece>> {
    let coupling = (schedule.r1 * schedule.r1 + schedule.r2 * schedule.r2).sqrt();
    let zero = vec![0.0; params.q.len()];
    let mut raw: Vec<(f64, f64, &[f64])> = Vec::new();
    let mut t = 0.0;
    for seg in &schedule.segments {
        if t >= horizon {
            break;
        }
        let end = (t + seg.duration).min(horizon);
        raw.push((t, end, &seg.u));
        t = end;
    }
    if t < horizon {
        raw.push((t, horizon, &zero));
    }

    let mut cuts: Vec<f64> = breakpoints
        .iter()
        .copied()
        .filter(|&b| b > 0.0 && b < horizon)
        .collect();
    cuts.sort_by(f64::total_cmp);

    let mut pieces = Vec::new();
    for (start, end, u) in raw {
        let sup = params
            .control_potential(u)?
            .eval_grid(&config.grid)?
            .iter()
            .fold(0.0f64, |m, v| m.max(v.abs()));
        let dt_eff = match config.substep_policy {
            SubstepPolicy::Fixed => config.dt_max,
            SubstepPolicy::ControlScaled => config.dt_max / (1.0 + coupling * sup),
        };
        let mut a = start;
        for &c in cuts
            .iter()
            .filter(|&&c| c > start && c < end)
            .chain(std::iter::once(&end))
        {
            let duration = c - a;
            if duration <= 0.0 {
                continue;
            }
            let substeps = ((duration / dt_eff) * (1.0 - 1e-12)).ceil().max(1.0) as usize;
            pieces.push(Piece {
                start: a,
                duration,
                u: u.to_vec(),
                substeps: substeps.max(config.min_substeps),
            });
            a = c;
        }
    }
    Ok(pieces)
}

/// Integrate `ψ0` under `schedule` up to `T`, calling `observer` after every
/// substep. Zero control is applied after the last segment. Returns the final
/// state.
pub fn resolve_with(
    psi0: &SpectralField,
    schedule: &ControlSchedule,
    horizon: f64,
    params: &CGLParams,
    config: &SolverConfig,
    breakpoints: &[f64],
    mut observer: impl FnMut(f64, &SpectralField) -> Result<()>,
) -> Result<SpectralField> {
    check_inputs(psi0, schedule, horizon, params, config)?;
    let params = params.with_coupling(schedule.r1, schedule.r2);
    let threshold = config.threshold_for(psi0.sobolev_norm(config.s));
    let mut psi = psi0.clone();
    for piece in plan_pieces(schedule, horizon, &params, config, breakpoints)? {
        let stepper = Stepper::new(&params, config, &piece.u, piece.dt())?;
        for i in 0..piece.substeps {
            psi = stepper.apply(&psi)?;
            let t = if i + 1 == piece.substeps {
                piece.start + piece.duration
            } else {
                piece.start + (i + 1) as f64 * piece.dt()
            };
            let norm = psi.sobolev_norm(config.s);
            if !(norm <= threshold) {
                return Err(Error::BlowUp {
                    time: t,
                    norm,
                    threshold,
                });
            }
            observer(t, &psi)?;
        }
    }
    Ok(psi)
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct TrajectoryRow {
    pub t: f64,
    pub hs_norm: f64,
    pub l2_norm: f64,
    pub max_modulus: f64,
}

impl TrajectoryRow {
    fn of(t: f64, psi: &SpectralField, s: u32) -> Self {
        TrajectoryRow {
            t,
            hs_norm: psi.sobolev_norm(s),
            l2_norm: psi.l2_norm(),
            max_modulus: psi.max_modulus(),
        }
    }
}

#[derive(Clone, Debug)]
pub struct Trajectory {
    /// One row at `t = 0` and one after every substep.
    pub rows: Vec<TrajectoryRow>,
    /// States at the requested sample times, in increasing time order.
    pub snapshots: Vec<(f64, SpectralField)>,
    pub final_state: SpectralField,
    pub final_time: f64,
}

impl Trajectory {
    pub fn write_csv<W: Write>(&self, mut w: W) -> Result<()> {
        writeln!(w, "{TRAJECTORY_CSV_HEADER}")?;
        for r in &self.rows {
            writeln!(
                w,
                "{:.12e},{:.12e},{:.12e},{:.12e}",
                r.t, r.hs_norm, r.l2_norm, r.max_modulus
            )?;
        }
        Ok(())
    }
}

/// Resolving operator `R_T(ψ0, (u, r1, r2))`, with snapshots at
/// `sample_times` (each clipped to `[0, T]`).
pub fn resolve(
    psi0: &SpectralField,
    schedule: &ControlSchedule,
    horizon: f64,
    params: &CGLParams,
    config: &SolverConfig,
    sample_times: &[f64],
) -> Result<Trajectory> {
    let mut wanted: Vec<f64> = sample_times.iter().map(|t| t.clamp(0.0, horizon)).collect();
    wanted.sort_by(f64::total_cmp);
    wanted.dedup();
    let mut snapshots = Vec::new();
    let mut next = 0;
    while next < wanted.len() && wanted[next] == 0.0 {
        snapshots.push((0.0, psi0.clone()));
        next += 1;
    }
    let mut rows = vec![TrajectoryRow::of(0.0, psi0, config.s)];
    let final_state = resolve_with(psi0, schedule, horizon, params, config, &wanted, |t, psi| {
        rows.push(TrajectoryRow::of(t, psi, config.s));
        while next < wanted.len() && (wanted[next] - t).abs() <= 1e-12 * horizon.max(1.0) {
            snapshots.push((wanted[next], psi.clone()));
            next += 1;
        }
        Ok(())
    })?;
    Ok(Trajectory {
        rows,
        snapshots,
        final_state,
        final_time: horizon,
    })
}
