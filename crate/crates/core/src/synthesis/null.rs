use serde::{Deserialize, Serialize};

use super::config::SynthesisConfig;
use super::plan::control_for;
use crate::dynamics::{resolve_with, CGLParams, ControlSchedule, ControlSegment, SolverConfig};
use crate::error::{Error, Result};
use crate::spectral::{SpectralField, TrigPolynomial};

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct NullControl {
    pub schedule: ControlSchedule,
    /// Constant `c = ⟨u_c, Q⟩` applied during the kick.
    pub c: f64,
    /// Kick duration; `None` for free evolution or an empty schedule.
    #[serde(rename = "delta_s")]
    pub delta: Option<f64>,
    pub achieved_norm: f64,
    pub converged: bool,
}

/// Drive `‖ψ(T)‖_s` below `ε`: a kick `(δ, δ^{−1}u_c)` with
/// `e^{c·r1}‖ψ0‖_s = 0.4ε`, then free evolution to `T`. `δ` runs through
/// `delta0·delta_shrink^r` until the simulated norm is below `ε`.
#[allow(clippy::too_many_arguments)]
pub fn null_control_schedule(
    psi0: &SpectralField,
    epsilon: f64,
    horizon: f64,
    r1: f64,
    r2: f64,
    params: &CGLParams,
    config: &SolverConfig,
    synth: &SynthesisConfig,
) -> Result<NullControl> {
    if !(epsilon > 0.0) {
        return Err(Error::Input(format!("ε must be positive, got {epsilon}")));
    }
    if !(horizon > 0.0) {
        return Err(Error::Input(format!("T must be positive, got {horizon}")));
    }
    if r1 == 0.0 {
        return Err(Error::Unsupported(
            "null control needs r1 ≠ 0 to shrink the amplitude".into(),
        ));
    }
    synth.validate()?;
    let params = params.with_coupling(r1, r2);
    let norm0 = psi0.sobolev_norm(config.s);
    if norm0 == 0.0 {
        return Ok(NullControl {
            schedule: ControlSchedule::empty(r1, r2),
            c: 0.0,
            delta: None,
            achieved_norm: 0.0,
            converged: true,
        });
    }
    let q = params.q.len();
    let d = params.dim();
    let run = |schedule: &ControlSchedule| -> Result<f64> {
        Ok(resolve_with(psi0, schedule, horizon, &params, config, &[], |_, _| Ok(()))?.sobolev_norm(config.s))
    };

    if epsilon > 2.0 * norm0 {
        let mut schedule = ControlSchedule::empty(r1, r2);
        schedule.push(ControlSegment::new(horizon, vec![0.0; q])?);
        let achieved_norm = run(&schedule)?;
        return Ok(NullControl {
            schedule,
            c: 0.0,
            delta: None,
            achieved_norm,
            converged: achieved_norm < epsilon,
        });
    }

    let c = (0.8 * epsilon / (2.0 * norm0)).ln() / r1;
    let u_c = control_for(&params, &TrigPolynomial::constant(d, c))
        .map_err(|_| Error::Input("control directions must span the constants".into()))?;
    let mut best: Option<NullControl> = None;
    for refinement in 0..=synth.max_refinements {
        let delta = synth.delta_at(refinement);
        if delta >= horizon {
            continue;
        }
        let mut schedule = ControlSchedule::empty(r1, r2);
        schedule.push(ControlSegment::new(delta, u_c.iter().map(|x| x / delta).collect())?);
        schedule.push(ControlSegment::new(horizon - delta, vec![0.0; q])?);
        let achieved_norm = match run(&schedule) {
            Ok(n) => n,
            Err(Error::BlowUp { .. }) => continue,
            Err(e) => return Err(e),
        };
        let candidate = NullControl {
            schedule,
            c,
            delta: Some(delta),
            achieved_norm,
            converged: achieved_norm < epsilon,
        };
        if candidate.converged {
            return Ok(candidate);
        }
        if best.as_ref().is_none_or(|b| achieved_norm < b.achieved_norm) {
            best = Some(candidate);
        }
    }
    best.ok_or_else(|| Error::Input(format!("no kick duration below T = {horizon} in the refinement budget")))
}
