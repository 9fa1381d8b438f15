use std::fs::File;
use std::io::BufReader;
use std::path::{Path, PathBuf};

use cgl_steer::dynamics::{CGLParams, ControlSegment, SolverConfig};
use cgl_steer::saturation::FrequencySet;
use cgl_steer::spectral::{io as field_io, GridSpec, SpectralField, TrigPolynomial, Wavevector};
use cgl_steer::synthesis::{MollifierSpec, SynthesisConfig};
use cgl_steer::Complex64;
use serde::{Deserialize, Serialize};

use crate::error::CliError;

/// Source of a complex field on the solver grid.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum FieldSpec {
    /// Real field sampled from a trigonometric polynomial.
    Trig(TrigPolynomial),
    /// `e^{exponent} · base`, both real trigonometric polynomials.
    ExpTimes {
        exponent: TrigPolynomial,
        base: TrigPolynomial,
    },
    /// `(re + i·im) e^{i⟨k,x⟩}`.
    Mode { k: Vec<i32>, re: f64, im: f64 },
    /// Snapshot in the binary field format.
    File(PathBuf),
}

impl FieldSpec {
    pub fn build(&self, grid: &GridSpec) -> Result<SpectralField, CliError> {
        let check_dim = |p: &TrigPolynomial| {
            if p.dim() != grid.d {
                Err(CliError::Config(format!(
                    "polynomial in d = {} on a d = {} grid",
                    p.dim(),
                    grid.d
                )))
            } else {
                Ok(())
            }
        };
        match self {
            FieldSpec::Trig(p) => {
                check_dim(p)?;
                let values = p.eval_grid(grid).map_err(|e| CliError::Config(e.to_string()))?;
                SpectralField::analyze_real(*grid, &values).map_err(|e| CliError::Config(e.to_string()))
            }
            FieldSpec::ExpTimes { exponent, base } => {
                check_dim(exponent)?;
                check_dim(base)?;
                let e = exponent.eval_grid(grid).map_err(|e| CliError::Config(e.to_string()))?;
                let b = base.eval_grid(grid).map_err(|e| CliError::Config(e.to_string()))?;
                let v: Vec<f64> = e.iter().zip(&b).map(|(x, y)| x.exp() * y).collect();
                SpectralField::analyze_real(*grid, &v).map_err(|e| CliError::Config(e.to_string()))
            }
            FieldSpec::Mode { k, re, im } => {
                if k.len() != grid.d {
                    return Err(CliError::Config(format!(
                        "mode of dimension {} on a d = {} grid",
                        k.len(),
                        grid.d
                    )));
                }
                SpectralField::mode(*grid, &Wavevector::new(k.clone()), Complex64::new(*re, *im))
                    .map_err(|e| CliError::Config(e.to_string()))
            }
            FieldSpec::File(path) => {
                let f = File::open(path).map_err(|e| CliError::Config(format!("{}: {e}", path.display())))?;
                let field = field_io::read_field(BufReader::new(f))
                    .map_err(|e| CliError::Config(format!("{}: {e}", path.display())))?;
                if field.grid() != grid {
                    return Err(CliError::Config(format!(
                        "{} is on {}, solver grid is {grid}",
                        path.display(),
                        field.grid()
                    )));
                }
                Ok(field)
            }
        }
    }

    fn rebase(&mut self, base: &Path) {
        if let FieldSpec::File(p) = self {
            if p.is_relative() {
                *p = base.join(&*p);
            }
        }
    }
}

/// Real trigonometric polynomial, inline or from a text file.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum TargetSpec {
    Trig(TrigPolynomial),
    File(PathBuf),
}

impl TargetSpec {
    pub fn build(&self) -> Result<TrigPolynomial, CliError> {
        match self {
            TargetSpec::Trig(p) => Ok(p.clone()),
            TargetSpec::File(path) => {
                let f = File::open(path).map_err(|e| CliError::Config(format!("{}: {e}", path.display())))?;
                field_io::read_trig(BufReader::new(f)).map_err(|e| CliError::Config(format!("{}: {e}", path.display())))
            }
        }
    }

    fn rebase(&mut self, base: &Path) {
        if let TargetSpec::File(p) = self {
            if p.is_relative() {
                *p = base.join(&*p);
            }
        }
    }
}

fn default_levels() -> usize {
    2
}

/// Experiment kind with its own parameters.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "kebab-case")]
pub enum Experiment {
    /// Resolve `initial` under `segments`, then free evolution to the horizon.
    Simulate {
        #[serde(rename = "horizon_s")]
        horizon: f64,
        #[serde(default)]
        segments: Vec<ControlSegment>,
        #[serde(default, rename = "snapshot_times_s")]
        snapshot_times: Vec<f64>,
    },
    /// Conjugated short-time limit for `target = φ` and constant `u`.
    VerifyLimit {
        u: Vec<f64>,
        #[serde(rename = "deltas_s")]
        deltas: Vec<f64>,
    },
    /// Drive `‖ψ(T)‖_s` below `epsilon_relative·‖ψ0‖_s`.
    NullControl {
        epsilon_relative: f64,
        #[serde(rename = "horizon_s")]
        horizon: f64,
        r1: f64,
        r2: f64,
    },
    /// Steer toward `e^{(1−iν)θ}ψ0` with `θ = target`.
    PhaseControl {
        #[serde(default = "default_levels")]
        levels: usize,
    },
    /// Generator and chain checks for `frequencies`, the saturation chain of
    /// `H(frequencies)` and decompositions of `targets` over the level below
    /// their own.
    SaturationReport {
        frequencies: FrequencySet,
        sigma: u32,
        #[serde(default = "default_levels")]
        levels: usize,
        #[serde(default)]
        targets: Vec<TrigPolynomial>,
    },
    /// Same-argument steering from `initial` toward `reach`.
    SameArgument {
        reach: FieldSpec,
        mollifier: MollifierSpec,
        degree_cap: i32,
        #[serde(default = "default_levels")]
        levels: usize,
    },
}

impl Experiment {
    pub fn name(&self) -> &'static str {
        match self {
            Experiment::Simulate { .. } => "simulate",
            Experiment::VerifyLimit { .. } => "verify-limit",
            Experiment::NullControl { .. } => "null-control",
            Experiment::PhaseControl { .. } => "phase-control",
            Experiment::SaturationReport { .. } => "saturation-report",
            Experiment::SameArgument { .. } => "same-argument",
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ExperimentConfig {
    #[serde(flatten)]
    pub experiment: Experiment,
    pub params: CGLParams,
    pub solver: SolverConfig,
    #[serde(default)]
    pub synthesis: SynthesisConfig,
    pub initial: FieldSpec,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub target: Option<TargetSpec>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub output_dir: Option<PathBuf>,
    #[serde(default)]
    pub seed: u64,
}

impl ExperimentConfig {
    pub fn from_json(text: &str) -> Result<Self, CliError> {
        serde_json::from_str(text).map_err(|e| CliError::Config(e.to_string()))
    }

    /// Read a config; relative file references resolve against its directory.
    pub fn load(path: &Path) -> Result<Self, CliError> {
        let text = std::fs::read_to_string(path).map_err(|e| CliError::Config(format!("{}: {e}", path.display())))?;
        let mut cfg = Self::from_json(&text)?;
        let base = path.parent().unwrap_or(Path::new("."));
        cfg.initial.rebase(base);
        if let Some(t) = cfg.target.as_mut() {
            t.rebase(base);
        }
        if let Experiment::SameArgument { reach, .. } = &mut cfg.experiment {
            reach.rebase(base);
        }
        Ok(cfg)
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("config serializes")
    }

    /// Every check that can fail before a run directory exists.
    pub fn validate(&self) -> Result<(), CliError> {
        let cfg = |e: cgl_steer::Error| CliError::Config(e.to_string());
        self.params.validate().map_err(cfg)?;
        self.solver.validate().map_err(cfg)?;
        self.synthesis.validate().map_err(cfg)?;
        if self.params.dim() != self.solver.grid.d {
            return Err(CliError::Config(format!(
                "control directions are in d = {}, grid is d = {}",
                self.params.dim(),
                self.solver.grid.d
            )));
        }
        self.initial.build(&self.solver.grid)?;
        let target = self.target.as_ref().map(TargetSpec::build).transpose()?;
        let need_target = |what: &str| {
            target
                .clone()
                .ok_or_else(|| CliError::Config(format!("{what} needs a target polynomial")))
        };
        match &self.experiment {
            Experiment::Simulate {
                horizon,
                segments,
                snapshot_times,
            } => {
                if !(*horizon >= 0.0) {
                    return Err(CliError::Config("horizon_s must be ≥ 0".into()));
                }
                for s in segments {
                    ControlSegment::new(s.duration, s.u.clone()).map_err(cfg)?;
                    if s.u.len() != self.params.q.len() {
                        return Err(CliError::Config("segment control length differs from Q".into()));
                    }
                }
                if snapshot_times.iter().any(|t| !(*t >= 0.0 && t <= horizon)) {
                    return Err(CliError::Config("snapshot times must lie in [0, horizon]".into()));
                }
            }
            Experiment::VerifyLimit { u, deltas } => {
                need_target("verify-limit")?;
                if u.len() != self.params.q.len() {
                    return Err(CliError::Config("u length differs from Q".into()));
                }
                if deltas.is_empty() || deltas.iter().any(|d| !(*d > 0.0)) || deltas.windows(2).any(|w| w[1] >= w[0]) {
                    return Err(CliError::Config(
                        "deltas_s must be positive and strictly decreasing".into(),
                    ));
                }
            }
            Experiment::NullControl {
                epsilon_relative,
                horizon,
                r1,
                ..
            } => {
                if !(*epsilon_relative > 0.0) || !(*horizon > 0.0) {
                    return Err(CliError::Config(
                        "epsilon_relative and horizon_s must be positive".into(),
                    ));
                }
                if *r1 == 0.0 {
                    return Err(CliError::Config("null control needs r1 ≠ 0".into()));
                }
            }
            Experiment::PhaseControl { .. } => {
                need_target("phase-control")?;
            }
            Experiment::SaturationReport {
                frequencies,
                sigma,
                targets,
                ..
            } => {
                if *sigma < 1 {
                    return Err(CliError::Config("sigma must be ≥ 1".into()));
                }
                if targets.iter().any(|t| t.dim() != frequencies.dim()) {
                    return Err(CliError::Config(
                        "targets must live in the dimension of the frequency set".into(),
                    ));
                }
            }
            Experiment::SameArgument {
                reach,
                mollifier,
                degree_cap,
                ..
            } => {
                reach.build(&self.solver.grid)?;
                if !(mollifier.eta > 0.0) || *degree_cap < 0 {
                    return Err(CliError::Config(
                        "mollifier eta must be positive and degree_cap ≥ 0".into(),
                    ));
                }
            }
        }
        Ok(())
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::presets;

    #[test]
    fn presets_roundtrip_and_validate() {
        for name in presets::names() {
            let cfg = presets::preset(name).unwrap();
            cfg.validate().unwrap_or_else(|e| panic!("{name}: {e}"));
            let back = ExperimentConfig::from_json(&cfg.to_json()).unwrap();
            assert_eq!(back, cfg, "{name}");
        }
    }

    #[test]
    fn malformed_configs() {
        assert!(matches!(ExperimentConfig::from_json("{"), Err(CliError::Config(_))));
        let mut cfg = presets::preset("constant-decay").unwrap();
        cfg.solver.dt_max = -1.0;
        assert!(cfg.validate().is_err());
        let mut cfg = presets::preset("phase-level1").unwrap();
        cfg.target = None;
        assert!(cfg.validate().is_err());
        let mut cfg = presets::preset("constant-decay").unwrap();
        cfg.initial = FieldSpec::File(PathBuf::from("/nonexistent/field.cglf"));
        assert!(cfg.validate().is_err());
    }
}
