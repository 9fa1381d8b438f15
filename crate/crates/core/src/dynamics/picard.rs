use num_complex::Complex64;

use super::params::{CGLParams, ControlSchedule, SolverConfig};
use super::resolve::{check_inputs, plan_pieces};
use crate::error::{Error, Result};
use crate::spectral::{GridSpec, SpectralField};

pub const PICARD_ITERATION_CAP: usize = 50;

struct Interval {
    dt: f64,
    full: Vec<Complex64>,
    half: Vec<Complex64>,
    potential: Option<Vec<f64>>,
}

fn factors(grid: &GridSpec, params: &CGLParams, t: f64) -> Vec<Complex64> {
    let a = Complex64::new(1.0, params.nu);
    grid.norms_sq()
        .into_iter()
        .map(|k2| ((params.v - a * k2 as f64) * t).exp())
        .collect()
}

fn multiply(f: &SpectralField, m: &[Complex64]) -> SpectralField {
    let mut out = f.clone();
    out.coeffs_mut().iter_mut().zip(m).for_each(|(c, x)| *c *= x);
    out.set_real(false);
    out
}

/// Reference solution from fixed-point iteration of the mild formulation
/// `ψ(t) = S(t)ψ0 + ∫_0^t S(t−τ) N(ψ(τ)) dτ`, where `S` is the exact linear
/// semigroup and the integral uses the midpoint rule on the substep grid of
/// [`resolve`](super::resolve). `iterations` caps the sweep count.
pub fn picard_reference(
    psi0: &SpectralField,
    schedule: &ControlSchedule,
    horizon: f64,
    params: &CGLParams,
    config: &SolverConfig,
    iterations: usize,
) -> Result<SpectralField> {
    check_inputs(psi0, schedule, horizon, params, config)?;
    let params = params.with_coupling(schedule.r1, schedule.r2);
    let grid = config.grid;
    let z = params.coupling();
    let mut intervals = Vec::new();
    for piece in plan_pieces(schedule, horizon, &params, config, &[])? {
        let dt = piece.dt();
        let phi = params.control_potential(&piece.u)?;
        let potential = if phi.is_zero() {
            None
        } else {
            Some(phi.eval_grid(&grid)?)
        };
        let full = factors(&grid, &params, dt);
        let half = factors(&grid, &params, 0.5 * dt);
        for _ in 0..piece.substeps {
            intervals.push(Interval {
                dt,
                full: full.clone(),
                half: half.clone(),
                potential: potential.clone(),
            });
        }
    }

    let forcing = |mid: &SpectralField, iv: &Interval| -> Result<SpectralField> {
        let mut samples = mid.synthesize();
        for (idx, s) in samples.iter_mut().enumerate() {
            let mut n = Complex64::new(0.0, 0.0);
            if config.nonlinearity {
                n -= Complex64::new(1.0, params.mu) * s.norm_sqr().powi(params.sigma as i32) * *s;
            }
            if let Some(p) = &iv.potential {
                n += z * p[idx] * *s;
            }
            *s = n;
        }
        let mut out = SpectralField::analyze(grid, &samples)?;
        if config.nonlinearity {
            out.dealias();
        }
        Ok(out)
    };

    // first iterate: free linear evolution
    let mut states = Vec::with_capacity(intervals.len() + 1);
    states.push(psi0.clone());
    for iv in &intervals {
        let next = multiply(states.last().expect("non-empty"), &iv.full);
        states.push(next);
    }

    let scale = 1.0 + states.iter().map(|f| f.sobolev_norm(config.s)).fold(0.0, f64::max);
    let tolerance = 1e-14 * scale;
    let mut previous = f64::INFINITY;
    for iteration in 1..=iterations.max(1) {
        let mut next = Vec::with_capacity(states.len());
        next.push(psi0.clone());
        for (m, iv) in intervals.iter().enumerate() {
            let mid = states[m].add(&states[m + 1])?.scale(Complex64::new(0.5, 0.0));
            let n = forcing(&mid, iv)?;
            let free = multiply(&next[m], &iv.full);
            let kick = multiply(&n, &iv.half).scale(Complex64::new(iv.dt, 0.0));
            next.push(free.add(&kick)?);
        }
        let increment = next
            .iter()
            .zip(&states)
            .map(|(a, b)| a.sobolev_distance(b, config.s))
            .try_fold(0.0f64, |m, d| d.map(|d| m.max(d)))?;
        states = next;
        if !increment.is_finite() || (iteration > 1 && increment >= previous && increment > tolerance) {
            return Err(Error::NonContraction { iteration, increment });
        }
        if increment <= tolerance {
            break;
        }
        previous = increment;
    }
    let mut out = states.pop().expect("non-empty");
    out.set_real(psi0.is_real() && params.nu == 0.0 && params.mu == 0.0 && params.r2 == 0.0);
    Ok(out)
}
