use num_complex::Complex64;

use super::params::{CGLParams, SolverConfig};
use crate::error::{Error, Result};
use crate::spectral::MAX_EXPONENT;
use crate::spectral::{GridSpec, SpectralField};

fn linear_factors(grid: &GridSpec, params: &CGLParams, t: f64) -> Vec<Complex64> {
    let a = Complex64::new(1.0, params.nu);
    grid.norms_sq()
        .into_iter()
        .map(|k2| ((params.v - a * k2 as f64) * t).exp())
        .collect()
}

/// Exact flow of `∂tψ = Vψ + (1+iν)Δψ`.
pub fn linear_propagator(psi: &SpectralField, t: f64, params: &CGLParams) -> SpectralField {
    let factors = linear_factors(psi.grid(), params, t);
    let mut out = psi.clone();
    out.coeffs_mut().iter_mut().zip(&factors).for_each(|(c, f)| *c *= f);
    out.set_real(psi.is_real() && params.nu == 0.0);
    out
}

/// Exact solution of `ψ' = −(1+iμ)|ψ|^{2σ}ψ` started from `ψ` after time `t`.
#[inline]
fn nonlinear_point(psi: Complex64, t: f64, sigma: u32, mu: f64) -> Complex64 {
    let rho2 = psi.norm_sqr();
    if rho2 == 0.0 {
        return psi;
    }
    let two_sigma = 2.0 * sigma as f64;
    let g = two_sigma * rho2.powi(sigma as i32) * t;
    let l = g.ln_1p();
    psi * (Complex64::new(-1.0, -mu) * (l / two_sigma)).exp()
}

/// Pointwise exact nonlinear flow, re-analyzed with dealiasing.
pub fn nonlinear_flow(psi: &SpectralField, t: f64, params: &CGLParams) -> SpectralField {
    if t == 0.0 {
        return psi.clone();
    }
    let mut samples = psi.synthesize();
    for s in samples.iter_mut() {
        *s = nonlinear_point(*s, t, params.sigma, params.mu);
    }
    let mut out = SpectralField::analyze(*psi.grid(), &samples).expect("sample count matches grid");
    out.dealias();
    out.set_real(psi.is_real() && params.mu == 0.0);
    out
}

/// Exact multiplier `e^{(r1+ir2)⟨u,Q⟩t}`.
pub fn control_flow(psi: &SpectralField, u: &[f64], t: f64, params: &CGLParams) -> Result<SpectralField> {
    let phi = params.control_potential(u)?;
    if phi.is_zero() {
        return Ok(psi.clone());
    }
    psi.exp_multiplier(&phi, params.coupling() * t)
}

/// Precomputed symmetric splitting step for a fixed control and step size:
/// `L(dt/2) ∘ C(dt/2) ∘ N(dt) ∘ C(dt/2) ∘ L(dt/2)`.
#[derive(Clone, Debug)]
pub struct Stepper {
    grid: GridSpec,
    dt: f64,
    half_linear: Vec<Complex64>,
    full_linear: Vec<Complex64>,
    half_control: Option<Vec<Complex64>>,
    nonlinear: bool,
    sigma: u32,
    mu: f64,
    keeps_real: bool,
}

impl Stepper {
    pub fn new(params: &CGLParams, config: &SolverConfig, u: &[f64], dt: f64) -> Result<Self> {
        let grid = config.grid;
        let phi = params.control_potential(u)?;
        let z = params.coupling();
        let half_control = if phi.is_zero() || z == Complex64::new(0.0, 0.0) {
            None
        } else {
            let values = phi.eval_grid(&grid)?;
            let zh = z * (0.5 * dt);
            let exponent = values.iter().map(|&p| zh.re * p).fold(f64::NEG_INFINITY, f64::max);
            if exponent > MAX_EXPONENT || !exponent.is_finite() {
                return Err(Error::Range {
                    exponent,
                    context: format!("control multiplier over a substep of {dt}"),
                });
            }
            Some(values.iter().map(|&p| (zh * p).exp()).collect())
        };
        Ok(Stepper {
            grid,
            dt,
            half_linear: linear_factors(&grid, params, 0.5 * dt),
            full_linear: linear_factors(&grid, params, dt),
            nonlinear: config.nonlinearity,
            sigma: params.sigma,
            mu: params.mu,
            keeps_real: params.nu == 0.0
                && (!config.nonlinearity || params.mu == 0.0)
                && (half_control.is_none() || params.r2 == 0.0),
            half_control,
        })
    }

    pub fn dt(&self) -> f64 {
        self.dt
    }

    pub fn apply(&self, psi: &SpectralField) -> Result<SpectralField> {
        if *psi.grid() != self.grid {
            return Err(Error::GridMismatch {
                left: psi.grid().to_string(),
                right: self.grid.to_string(),
            });
        }
        let mut out = psi.clone();
        if self.half_control.is_none() && !self.nonlinear {
            out.coeffs_mut()
                .iter_mut()
                .zip(&self.full_linear)
                .for_each(|(c, f)| *c *= f);
            out.set_real(psi.is_real() && self.keeps_real);
            return Ok(out);
        }
        out.coeffs_mut()
            .iter_mut()
            .zip(&self.half_linear)
            .for_each(|(c, f)| *c *= f);
        let mut samples = out.synthesize();
        if let Some(m) = &self.half_control {
            samples.iter_mut().zip(m).for_each(|(s, f)| *s *= f);
        }
        if self.nonlinear {
            for s in samples.iter_mut() {
                *s = nonlinear_point(*s, self.dt, self.sigma, self.mu);
            }
        }
        if let Some(m) = &self.half_control {
            samples.iter_mut().zip(m).for_each(|(s, f)| *s *= f);
        }
        let mut out = SpectralField::analyze(self.grid, &samples)?;
        if self.nonlinear {
            out.dealias();
        }
        out.coeffs_mut()
            .iter_mut()
            .zip(&self.half_linear)
            .for_each(|(c, f)| *c *= f);
        out.set_real(psi.is_real() && self.keeps_real);
        Ok(out)
    }
}

/// One splitting step, with blow-up detection against the configured
/// threshold (or the default relative to `‖ψ‖_s`).
pub fn step(
    psi: &SpectralField,
    u: &[f64],
    dt: f64,
    params: &CGLParams,
    config: &SolverConfig,
) -> Result<SpectralField> {
    if !(dt >= 0.0) {
        return Err(Error::Input(format!("step size must be non-negative, got {dt}")));
    }
    let out = Stepper::new(params, config, u, dt)?.apply(psi)?;
    let norm = out.sobolev_norm(config.s);
    let threshold = config.threshold_for(psi.sobolev_norm(config.s));
    if !(norm <= threshold) {
        return Err(Error::BlowUp {
            time: dt,
            norm,
            threshold,
        });
    }
    Ok(out)
}
