use super::params::{CGLParams, ControlSchedule, ControlSegment, SolverConfig, SubstepPolicy};
use super::resolve::resolve_with;
use crate::error::{Error, Result};
use crate::spectral::SpectralField;

/// Empirical Lipschitz ratio
/// `sup_t ‖R(ψ0+Δψ0, u+Δu) − R(ψ0, u)‖_s / (‖Δψ0‖_s + ‖Δu‖_{L²(0,T)})`
/// for controls held constant on `[0, T]`. Both runs share one substep grid.
/// Returns 0 when both perturbations vanish.
pub fn stability_probe(
    psi0: &SpectralField,
    dpsi0: &SpectralField,
    u: &[f64],
    du: &[f64],
    horizon: f64,
    params: &CGLParams,
    config: &SolverConfig,
) -> Result<f64> {
    if u.len() != du.len() {
        return Err(Error::Input("control and perturbation lengths differ".into()));
    }
    if !(horizon > 0.0) {
        return Err(Error::Input(format!("horizon must be positive, got {horizon}")));
    }
    let du_norm = du.iter().map(|x| x * x).sum::<f64>().sqrt() * horizon.sqrt();
    let denominator = dpsi0.sobolev_norm(config.s) + du_norm;
    if denominator == 0.0 {
        return Ok(0.0);
    }

    let perturbed_u: Vec<f64> = u.iter().zip(du).map(|(a, b)| a + b).collect();
    let schedule = |v: &[f64]| -> Result<ControlSchedule> {
        let mut s = ControlSchedule::empty(params.r1, params.r2);
        s.push(ControlSegment::new(horizon, v.to_vec())?);
        Ok(s)
    };
    let base = schedule(u)?;
    let pert = schedule(&perturbed_u)?;

    // one step size for both runs, taken from the stiffer control
    let grid = config.grid;
    let coupling = params.coupling().norm();
    let sup = |v: &[f64]| -> Result<f64> {
        Ok(params
            .control_potential(v)?
            .eval_grid(&grid)?
            .iter()
            .fold(0.0f64, |m, x| m.max(x.abs())))
    };
    let mut fixed = config.clone();
    if config.substep_policy == SubstepPolicy::ControlScaled {
        fixed.dt_max = config.dt_max / (1.0 + coupling * sup(u)?.max(sup(&perturbed_u)?));
    }
    fixed.substep_policy = SubstepPolicy::Fixed;
    if config.blowup_threshold.is_none() {
        fixed.blowup_threshold = Some(config.threshold_for(psi0.sobolev_norm(config.s)));
    }

    let mut reference = Vec::new();
    resolve_with(psi0, &base, horizon, params, &fixed, &[], |_, psi| {
        reference.push(psi.clone());
        Ok(())
    })?;
    let start = psi0.add(dpsi0)?;
    let mut sup_diff = dpsi0.sobolev_norm(config.s);
    let mut idx = 0;
    resolve_with(&start, &pert, horizon, params, &fixed, &[], |_, psi| {
        let d = psi.sobolev_distance(&reference[idx], config.s)?;
        sup_diff = sup_diff.max(d);
        idx += 1;
        Ok(())
    })?;
    Ok(sup_diff / denominator)
}
