use serde::{Deserialize, Serialize};

use super::config::SynthesisConfig;
use super::conjugation::phase_coupling;
use crate::dynamics::{CGLParams, ControlSchedule, ControlSegment};
use crate::error::{Error, Result};
use crate::linalg::lstsq;
use crate::saturation::{decompose_with, DecomposeOptions, Dictionary, SaturationChain, MEMBERSHIP_TOLERANCE};
use crate::spectral::{GridSpec, TrigPolynomial};

/// Shift added above the grid minimum when making a part non-negative.
const SHIFT_MARGIN: f64 = 1e-6;

/// `u` with `⟨u, Q⟩ = η`, by least squares over the control directions.
pub fn control_for(params: &CGLParams, eta: &TrigPolynomial) -> Result<Vec<f64>> {
    let dict = Dictionary::covering(params.dim(), params.q.iter().chain(std::iter::once(eta)));
    let a = dict.matrix(&params.q)?;
    let b = dict.vector(eta)?;
    let x = lstsq(&a, &b);
    let miss = (&a * &x - &b).norm();
    if miss > MEMBERSHIP_TOLERANCE * (1.0 + b.norm()) {
        return Err(Error::Input(format!("target is not in span Q (residual {miss:.3e})")));
    }
    Ok(x.iter().copied().collect())
}

/// Node of a phase plan. Every node realizes multiplication by
/// `e^{(r1+ir2)·target}`, with `target` in raw units (`(1+ν²)θ` at the top).
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "node", rename_all = "kebab-case")]
pub enum PlanNode {
    /// Segment `(τ, u/τ)` with `⟨u, Q⟩ = target`.
    Constant {
        level: usize,
        #[serde(rename = "tau_s")]
        tau: f64,
        target: TrigPolynomial,
        u: Vec<f64>,
    },
    /// `enter` realizes `−δ^{−1/2}φ`, then free flow for `δ`, then `leave`
    /// realizes `+δ^{−1/2}φ`; together they approximate `B(φ)`.
    Conjugated {
        level: usize,
        #[serde(rename = "delta_s")]
        delta: f64,
        phi: TrigPolynomial,
        enter: Vec<PlanNode>,
        leave: Vec<PlanNode>,
    },
}

impl PlanNode {
    pub fn level(&self) -> usize {
        match self {
            PlanNode::Constant { level, .. } | PlanNode::Conjugated { level, .. } => *level,
        }
    }

    /// Exponent this node approximates.
    pub fn target(&self) -> TrigPolynomial {
        match self {
            PlanNode::Constant { target, .. } => target.clone(),
            PlanNode::Conjugated { phi, .. } => phi.b_operator(),
        }
    }

    pub fn flatten_into(&self, q: usize, out: &mut Vec<ControlSegment>) {
        match self {
            PlanNode::Constant { tau, u, .. } => out.push(ControlSegment {
                duration: *tau,
                u: u.iter().map(|x| x / tau).collect(),
            }),
            PlanNode::Conjugated {
                delta, enter, leave, ..
            } => {
                enter.iter().for_each(|n| n.flatten_into(q, out));
                out.push(ControlSegment {
                    duration: *delta,
                    u: vec![0.0; q],
                });
                leave.iter().for_each(|n| n.flatten_into(q, out));
            }
        }
    }

    pub fn duration(&self) -> f64 {
        match self {
            PlanNode::Constant { tau, .. } => *tau,
            PlanNode::Conjugated {
                delta, enter, leave, ..
            } => enter.iter().chain(leave).map(PlanNode::duration).sum::<f64>() + delta,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct PhasePlan {
    pub theta: TrigPolynomial,
    pub level: usize,
    pub nu: f64,
    pub refinement: usize,
    /// Small time at each recursion depth, top first.
    #[serde(rename = "deltas_s")]
    pub deltas: Vec<f64>,
    pub nodes: Vec<PlanNode>,
    pub schedule: ControlSchedule,
    #[serde(rename = "total_time_s")]
    pub total_time: f64,
}

struct Builder<'a> {
    chain: &'a SaturationChain,
    params: &'a CGLParams,
    grid: &'a GridSpec,
    synth: &'a SynthesisConfig,
    delta: f64,
    max_depth: usize,
}

impl Builder<'_> {
    fn delta_at(&self, depth: usize) -> f64 {
        self.synth.delta_at_depth(self.delta, depth)
    }

    fn plan(&mut self, eta: &TrigPolynomial, depth: usize) -> Result<Vec<PlanNode>> {
        if eta.max_coeff() == 0.0 {
            return Ok(Vec::new());
        }
        self.max_depth = self.max_depth.max(depth);
        let level = self
            .chain
            .level_of(eta, MEMBERSHIP_TOLERANCE * (1.0 + eta.l2_norm()))
            .ok_or_else(|| Error::DecompositionFailed {
                residual: self
                    .chain
                    .levels
                    .last()
                    .map(|h| h.project(eta).1)
                    .unwrap_or(f64::INFINITY),
                tolerance: MEMBERSHIP_TOLERANCE,
            })?;
        if level == 0 {
            return Ok(vec![PlanNode::Constant {
                level: 0,
                tau: self.delta_at(depth),
                target: eta.clone(),
                u: control_for(self.params, eta)?,
            }]);
        }

        let below = &self.chain.levels[level - 1];
        let mut opts = DecomposeOptions::new(below.len());
        opts.restarts = self.synth.decompose_restarts;
        opts.seed = self.synth.seed;
        let dec = decompose_with(eta, below, &opts)?;
        let delta = self.delta_at(depth);
        let mut nodes = Vec::with_capacity(dec.parts.len() + 1);
        for part in &dec.parts {
            let values = part.eval_grid(self.grid)?;
            let min = values.iter().copied().fold(f64::INFINITY, f64::min);
            let max = values.iter().copied().fold(f64::NEG_INFINITY, f64::max);
            let phi = part.add_constant(-min + SHIFT_MARGIN);
            let exponent = self.params.r1.abs() * (max - min + SHIFT_MARGIN) / delta.sqrt();
            if exponent > self.synth.exponent_cap {
                return Err(Error::Range {
                    exponent,
                    context: format!("conjugation at level {level} with δ = {delta:.3e}"),
                });
            }
            let scaled = phi.scale(1.0 / delta.sqrt());
            let enter = self.plan(&scaled.scale(-1.0), depth + 1)?;
            let leave = self.plan(&scaled, depth + 1)?;
            nodes.push(PlanNode::Conjugated {
                level,
                delta,
                phi,
                enter,
                leave,
            });
        }
        nodes.extend(self.plan(&dec.theta0, depth + 1)?);
        Ok(nodes)
    }
}

/// Recursive plan steering `ψ0` toward `e^{(1−iν)θ}ψ0` with
/// `(r1, r2) = (1, −ν)/(1+ν²)`, at refinement step `refinement`
/// (top-level `δ = delta0·delta_shrink^refinement`).
pub fn phase_plan(
    theta: &TrigPolynomial,
    chain: &SaturationChain,
    params: &CGLParams,
    grid: &GridSpec,
    synth: &SynthesisConfig,
    refinement: usize,
) -> Result<PhasePlan> {
    synth.validate()?;
    params.validate()?;
    let (r1, r2) = phase_coupling(params.nu);
    if (params.r1 - r1).abs() > 1e-12 || (params.r2 - r2).abs() > 1e-12 {
        return Err(Error::Input(format!(
            "phase steering needs (r1, r2) = ({r1}, {r2}) for ν = {}",
            params.nu
        )));
    }
    let eta = theta.scale(1.0 + params.nu * params.nu);
    let delta = synth.delta_at(refinement);
    let mut b = Builder {
        chain,
        params,
        grid,
        synth,
        delta,
        max_depth: 0,
    };
    let nodes = b.plan(&eta, 0)?;
    let level = if nodes.is_empty() {
        0
    } else {
        chain
            .level_of(&eta, MEMBERSHIP_TOLERANCE * (1.0 + eta.l2_norm()))
            .unwrap_or(0)
    };
    let mut segments = Vec::new();
    nodes.iter().for_each(|n| n.flatten_into(params.q.len(), &mut segments));
    let total_time = segments.iter().map(|s| s.duration).sum();
    Ok(PhasePlan {
        theta: theta.clone(),
        level,
        nu: params.nu,
        refinement,
        deltas: (0..=b.max_depth).map(|k| b.delta_at(k)).collect(),
        nodes,
        schedule: ControlSchedule {
            segments,
            r1: params.r1,
            r2: params.r2,
        },
        total_time,
    })
}
