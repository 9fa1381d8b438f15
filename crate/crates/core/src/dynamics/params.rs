use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::spectral::{GridSpec, TrigPolynomial};

/// Physical parameters of
/// `∂tψ = Vψ + (1+iν)Δψ − (1+iμ)|ψ|^{2σ}ψ + (r1+ir2)⟨u,Q⟩ψ`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct CGLParams {
    /// linear driving `V ≥ 0`
    pub v: f64,
    /// linear dispersion `ν`
    pub nu: f64,
    /// nonlinear dispersion `μ`
    pub mu: f64,
    /// nonlinearity degree `σ ≥ 1`
    pub sigma: u32,
    pub r1: f64,
    pub r2: f64,
    /// control directions `Q_1 … Q_q`
    pub q: Vec<TrigPolynomial>,
}

impl CGLParams {
    pub fn validate(&self) -> Result<()> {
        if !(self.v >= 0.0) {
            return Err(Error::Input(format!("V must be ≥ 0, got {}", self.v)));
        }
        if self.sigma < 1 {
            return Err(Error::Input("σ must be ≥ 1".into()));
        }
        if self.q.is_empty() {
            return Err(Error::Input("at least one control direction is required".into()));
        }
        let d = self.q[0].dim();
        if self.q.iter().any(|p| p.dim() != d) {
            return Err(Error::Input("control directions differ in dimension".into()));
        }
        for x in [self.nu, self.mu, self.r1, self.r2] {
            if !x.is_finite() {
                return Err(Error::Input("non-finite parameter".into()));
            }
        }
        Ok(())
    }

    pub fn coupling(&self) -> Complex64 {
        Complex64::new(self.r1, self.r2)
    }

    pub fn with_coupling(&self, r1: f64, r2: f64) -> Self {
        CGLParams { r1, r2, ..self.clone() }
    }

    pub fn dim(&self) -> usize {
        self.q.first().map(TrigPolynomial::dim).unwrap_or(1)
    }

    /// `⟨u, Q⟩`.
    pub fn control_potential(&self, u: &[f64]) -> Result<TrigPolynomial> {
        if u.len() != self.q.len() {
            return Err(Error::Input(format!(
                "control has {} components, Q has {}",
                u.len(),
                self.q.len()
            )));
        }
        Ok(u.iter()
            .zip(&self.q)
            .fold(TrigPolynomial::zero(self.dim()), |acc, (&uj, qj)| {
                acc.add(&qj.scale(uj))
            }))
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize, Default)]
#[serde(rename_all = "kebab-case")]
pub enum SubstepPolicy {
    Fixed,
    /// `dt ≤ dt_max / (1 + |(r1,r2)|·‖⟨u,Q⟩‖_∞)`
    #[default]
    ControlScaled,
}

fn default_min_substeps() -> usize {
    4
}

fn default_true() -> bool {
    true
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SolverConfig {
    pub grid: GridSpec,
    /// Sobolev index used for norms and blow-up detection.
    pub s: u32,
    #[serde(rename = "dt_max_s")]
    pub dt_max: f64,
    /// `None` selects `1e6 · max(1, ‖ψ0‖_s)` per run.
    #[serde(default)]
    pub blowup_threshold: Option<f64>,
    #[serde(default)]
    pub substep_policy: SubstepPolicy,
    /// Lower bound on substeps per constant-control piece.
    #[serde(default = "default_min_substeps")]
    pub min_substeps: usize,
    /// Test hook: `false` removes `−(1+iμ)|ψ|^{2σ}ψ` from every solver.
    #[serde(default = "default_true")]
    pub nonlinearity: bool,
}

impl SolverConfig {
    pub fn new(grid: GridSpec, dt_max: f64) -> Self {
        SolverConfig {
            grid,
            s: smallest_sobolev_index(grid.d),
            dt_max,
            blowup_threshold: None,
            substep_policy: SubstepPolicy::ControlScaled,
            min_substeps: default_min_substeps(),
            nonlinearity: true,
        }
    }

    pub fn validate(&self) -> Result<()> {
        self.grid.validate()?;
        let sd = smallest_sobolev_index(self.grid.d);
        if self.s < sd {
            return Err(Error::Input(format!(
                "Sobolev index s = {} is below s_d = {sd} for d = {}",
                self.s, self.grid.d
            )));
        }
        if !(self.dt_max > 0.0) || !self.dt_max.is_finite() {
            return Err(Error::Input(format!("dt_max must be positive, got {}", self.dt_max)));
        }
        if let Some(t) = self.blowup_threshold {
            if !(t > 0.0) {
                return Err(Error::Input(format!("blow-up threshold must be positive, got {t}")));
            }
        }
        if self.min_substeps == 0 {
            return Err(Error::Input("min_substeps must be at least 1".into()));
        }
        Ok(())
    }

    pub fn threshold_for(&self, initial_norm: f64) -> f64 {
        self.blowup_threshold.unwrap_or_else(|| 1e6 * initial_norm.max(1.0))
    }
}

/// Smallest integer strictly greater than `d/2`.
pub fn smallest_sobolev_index(d: usize) -> u32 {
    (d / 2 + 1) as u32
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ControlSegment {
    #[serde(rename = "duration_s")]
    pub duration: f64,
    pub u: Vec<f64>,
}

impl ControlSegment {
    pub fn new(duration: f64, u: Vec<f64>) -> Result<Self> {
        if !(duration > 0.0) || !duration.is_finite() {
            return Err(Error::Input(format!(
                "segment duration must be positive, got {duration}"
            )));
        }
        if u.iter().any(|x| !x.is_finite()) {
            return Err(Error::Input("control amplitudes must be finite".into()));
        }
        Ok(ControlSegment { duration, u })
    }
}

/// Piecewise-constant control together with the coupling `(r1, r2)`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ControlSchedule {
    pub segments: Vec<ControlSegment>,
    pub r1: f64,
    pub r2: f64,
}

impl ControlSchedule {
    pub fn empty(r1: f64, r2: f64) -> Self {
        ControlSchedule {
            segments: Vec::new(),
            r1,
            r2,
        }
    }

    pub fn total_duration(&self) -> f64 {
        self.segments.iter().map(|s| s.duration).sum()
    }

    pub fn push(&mut self, segment: ControlSegment) {
        self.segments.push(segment);
    }

    pub fn extend(&mut self, other: ControlSchedule) {
        self.segments.extend(other.segments);
    }
}
