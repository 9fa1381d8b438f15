//! Built-in configurations for every acceptance experiment.

use std::path::PathBuf;

use cgl_steer::dynamics::{CGLParams, SolverConfig};
use cgl_steer::saturation::FrequencySet;
use cgl_steer::spectral::{GridSpec, TrigPolynomial, Wavevector};
use cgl_steer::synthesis::{phase_coupling, MollifierSpec, SynthesisConfig};

use crate::config::{Experiment, ExperimentConfig, FieldSpec, TargetSpec};
use crate::error::CliError;

const NAMES: &[&str] = &[
    "constant-decay",
    "limit-nu0-constant",
    "limit-nu0-phi",
    "limit-nu1-constant",
    "limit-nu1-phi",
    "null-r2-0",
    "null-r2-neg1",
    "null-r2-3",
    "phase-level0-nu0",
    "phase-level0-nu1",
    "phase-level1",
    "saturation-plane",
    "same-argument",
];

pub fn names() -> &'static [&'static str] {
    NAMES
}

fn k1(n: i32) -> Wavevector {
    Wavevector::new([n])
}

/// `Q = (1, sin x, cos x)` on the circle.
pub fn circle_controls() -> Vec<TrigPolynomial> {
    vec![
        TrigPolynomial::constant(1, 1.0),
        TrigPolynomial::sin_mode(&k1(1), 1.0),
        TrigPolynomial::cos_mode(&k1(1), 1.0),
    ]
}

/// `V = 0.5`, `μ = 0.5`, `σ = 1` with the phase-steering coupling for `ν`.
pub fn circle_params(nu: f64) -> CGLParams {
    let (r1, r2) = phase_coupling(nu);
    CGLParams {
        v: 0.5,
        nu,
        mu: 0.5,
        sigma: 1,
        r1,
        r2,
        q: circle_controls(),
    }
}

pub fn circle_solver() -> SolverConfig {
    let mut cfg = SolverConfig::new(GridSpec::new(1, 256).expect("valid grid"), 1e-3);
    cfg.s = 1;
    cfg
}

fn base(experiment: Experiment, params: CGLParams, initial: TrigPolynomial, name: &str) -> ExperimentConfig {
    ExperimentConfig {
        experiment,
        params,
        solver: circle_solver(),
        synthesis: SynthesisConfig::default(),
        initial: FieldSpec::Trig(initial),
        target: None,
        output_dir: Some(PathBuf::from("runs").join(name)),
        seed: 0,
    }
}

fn one_plus(k: &Wavevector, sin: f64, cos: f64) -> TrigPolynomial {
    TrigPolynomial::from_terms(1, [(Wavevector::zero(1), 1.0, 0.0), (k.clone(), cos, sin)])
}

fn limit(name: &str, nu: f64, phi: bool) -> ExperimentConfig {
    let (target, u) = if phi {
        (TrigPolynomial::cos_mode(&k1(1), -1.0).add_constant(1.0), vec![0.0; 3])
    } else {
        (TrigPolynomial::zero(1), vec![0.5, 0.0, 0.0])
    };
    let mut cfg = base(
        Experiment::VerifyLimit {
            u,
            deltas: vec![0.1, 0.05, 0.025, 0.0125, 0.00625],
        },
        circle_params(nu),
        one_plus(&k1(1), 0.2, 0.0),
        name,
    );
    cfg.target = Some(TargetSpec::Trig(target));
    cfg
}

fn null(name: &str, r2: f64) -> ExperimentConfig {
    base(
        Experiment::NullControl {
            epsilon_relative: 0.1,
            horizon: 0.5,
            r1: 1.0,
            r2,
        },
        circle_params(1.0),
        one_plus(&k1(1), 0.0, 0.3),
        name,
    )
}

fn phase(name: &str, nu: f64, theta: TrigPolynomial, budget: f64, cap: f64) -> ExperimentConfig {
    let mut cfg = base(
        Experiment::PhaseControl { levels: 2 },
        circle_params(nu),
        one_plus(&k1(1), 0.2, 0.0),
        name,
    );
    cfg.synthesis.error_budget = budget;
    cfg.synthesis.time_cap = cap;
    cfg.target = Some(TargetSpec::Trig(theta));
    cfg
}

fn saturation(name: &str) -> ExperimentConfig {
    let d = 2;
    let e1 = Wavevector::new([1, 0]);
    let e2 = Wavevector::new([0, 1]);
    let diag = Wavevector::new([1, 1]);
    let q = vec![
        TrigPolynomial::constant(d, 1.0),
        TrigPolynomial::sin_mode(&e1, 1.0),
        TrigPolynomial::cos_mode(&e1, 1.0),
        TrigPolynomial::sin_mode(&diag, 1.0),
        TrigPolynomial::cos_mode(&diag, 1.0),
    ];
    let params = CGLParams {
        q,
        ..circle_params(0.0)
    };
    let mut solver = circle_solver();
    solver.grid = GridSpec::new(d, 16).expect("valid grid");
    solver.s = 2;
    ExperimentConfig {
        experiment: Experiment::SaturationReport {
            frequencies: FrequencySet::standard(d),
            sigma: 1,
            levels: 2,
            targets: vec![
                TrigPolynomial::cos_mode(&Wavevector::new([2, 0]), 1.0),
                TrigPolynomial::sin_mode(&Wavevector::new([2, 1]), 0.5),
                TrigPolynomial::cos_mode(&e2, 1.0),
            ],
        },
        params,
        solver,
        synthesis: SynthesisConfig::default(),
        initial: FieldSpec::Trig(TrigPolynomial::constant(d, 1.0)),
        target: None,
        output_dir: Some(PathBuf::from("runs").join(name)),
        seed: 0,
    }
}

fn same_argument(name: &str) -> ExperimentConfig {
    let psi0 = one_plus(&k1(1), 0.0, 0.3);
    let mut cfg = base(
        Experiment::SameArgument {
            reach: FieldSpec::ExpTimes {
                exponent: TrigPolynomial::cos_mode(&k1(1), 0.3),
                base: psi0.clone(),
            },
            mollifier: MollifierSpec::new(0.05),
            degree_cap: 8,
            levels: 2,
        },
        circle_params(0.0),
        psi0,
        name,
    );
    cfg.synthesis.error_budget = 0.02;
    cfg.synthesis.time_cap = 0.5;
    cfg
}

pub fn preset(name: &str) -> Result<ExperimentConfig, CliError> {
    let cfg = match name {
        "constant-decay" => {
            let mut params = circle_params(0.0);
            params.v = 0.0;
            let mut cfg = base(
                Experiment::Simulate {
                    horizon: 1.0,
                    segments: Vec::new(),
                    snapshot_times: vec![0.5, 1.0],
                },
                params,
                TrigPolynomial::constant(1, 1.0),
                name,
            );
            cfg.solver.grid = GridSpec::new(1, 16).expect("valid grid");
            cfg
        }
        "limit-nu0-constant" => limit(name, 0.0, false),
        "limit-nu0-phi" => limit(name, 0.0, true),
        "limit-nu1-constant" => limit(name, 1.0, false),
        "limit-nu1-phi" => limit(name, 1.0, true),
        "null-r2-0" => null(name, 0.0),
        "null-r2-neg1" => null(name, -1.0),
        "null-r2-3" => null(name, 3.0),
        "phase-level0-nu0" | "phase-level0-nu1" => {
            let nu = if name.ends_with('0') { 0.0 } else { 1.0 };
            let theta = TrigPolynomial::sin_mode(&k1(1), 0.2).add_constant(0.4);
            phase(name, nu, theta, 0.05, 0.2)
        }
        "phase-level1" => phase(name, 0.0, TrigPolynomial::cos_mode(&k1(2), 0.3), 0.1, 0.5),
        "saturation-plane" => saturation(name),
        "same-argument" => same_argument(name),
        other => {
            return Err(CliError::Config(format!(
                "unknown preset {other:?}; known presets: {}",
                NAMES.join(", ")
            )))
        }
    };
    Ok(cfg)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn unknown_preset() {
        assert!(matches!(preset("no-such-preset"), Err(CliError::Config(_))));
    }

    #[test]
    fn every_name_resolves() {
        for n in names() {
            let cfg = preset(n).unwrap();
            assert_eq!(cfg.output_dir.unwrap(), PathBuf::from("runs").join(n));
        }
    }
}
