use std::io::Write;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::conjugation::{conjugation_coeffs, ConjugationCoeffs};
use crate::dynamics::{resolve_with, CGLParams, ControlSchedule, ControlSegment, SolverConfig};
use crate::error::{Error, Result};
use crate::spectral::{SpectralField, TrigPolynomial};

pub const LIMIT_CSV_HEADER: &str = "delta_s,error_hs,status";

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct LimitRow {
    pub delta: f64,
    /// `None` when the run at this `δ` failed; see `status`.
    pub error: Option<f64>,
    pub status: String,
}

impl LimitRow {
    pub fn write_csv<W: Write>(rows: &[LimitRow], mut w: W) -> Result<()> {
        writeln!(w, "{LIMIT_CSV_HEADER}")?;
        for r in rows {
            match r.error {
                Some(e) => writeln!(w, "{:.12e},{:.12e},{}", r.delta, e, r.status)?,
                None => writeln!(w, "{:.12e},,{}", r.delta, r.status)?,
            }
        }
        Ok(())
    }
}

/// `H^s` distance between the conjugated short-time flow
/// `e^{(a+ib)δ^{−1/2}φ} ∘ R_δ(·, δ^{−1}u) ∘ e^{−(a+ib)δ^{−1/2}φ} ψ0`
/// and its limit `e^{(r1+ir2)(B(φ)+⟨u,Q⟩)} ψ0`, for each `δ`. Rows run in
/// parallel; a failure at one `δ` is recorded in that row only.
pub fn limit_probe(
    psi0: &SpectralField,
    phi: &TrigPolynomial,
    u: &[f64],
    params: &CGLParams,
    config: &SolverConfig,
    deltas: &[f64],
) -> Result<Vec<LimitRow>> {
    let coeffs = conjugation_coeffs(params.r1, params.r2, params.nu);
    limit_probe_with(psi0, phi, u, params, config, deltas, coeffs)
}

/// [`limit_probe`] with an explicit choice of square root.
pub fn limit_probe_with(
    psi0: &SpectralField,
    phi: &TrigPolynomial,
    u: &[f64],
    params: &CGLParams,
    config: &SolverConfig,
    deltas: &[f64],
    coeffs: ConjugationCoeffs,
) -> Result<Vec<LimitRow>> {
    params.validate()?;
    config.validate()?;
    if deltas.iter().any(|&d| !(d > 0.0)) {
        return Err(Error::Input("every δ must be positive".into()));
    }
    if deltas.windows(2).any(|w| w[1] >= w[0]) {
        return Err(Error::Input("deltas must be strictly decreasing".into()));
    }
    let values = phi.eval_grid(&config.grid)?;
    let min = values.iter().copied().fold(f64::INFINITY, f64::min);
    if min < -1e-12 {
        return Err(Error::Input(format!(
            "φ must be non-negative on the grid, minimum {min:.3e}"
        )));
    }
    let potential = params.control_potential(u)?;
    let limit_exponent = phi.b_operator().add(&potential);
    let target = psi0.exp_multiplier(&limit_exponent, params.coupling())?;
    let w = coeffs.as_complex();

    let run = |delta: f64| -> Result<f64> {
        let z = w / delta.sqrt();
        let entered = psi0.exp_multiplier_values(&values, -z)?;
        let mut schedule = ControlSchedule::empty(params.r1, params.r2);
        schedule.push(ControlSegment::new(delta, u.iter().map(|x| x / delta).collect())?);
        let mut cfg = config.clone();
        if cfg.blowup_threshold.is_none() {
            cfg.blowup_threshold = Some(cfg.threshold_for(psi0.sobolev_norm(cfg.s)));
        }
        let evolved = resolve_with(&entered, &schedule, delta, params, &cfg, &[], |_, _| Ok(()))?;
        let left = evolved.exp_multiplier_values(&values, z)?;
        left.sobolev_distance(&target, config.s)
    };

    Ok(deltas
        .par_iter()
        .map(|&delta| match run(delta) {
            Ok(e) => LimitRow {
                delta,
                error: Some(e),
                status: "ok".into(),
            },
            Err(Error::BlowUp { time, .. }) => LimitRow {
                delta,
                error: None,
                status: format!("threshold-exceeded@{time:.6e}"),
            },
            Err(Error::Range { .. }) => LimitRow {
                delta,
                error: None,
                status: "range".into(),
            },
            Err(e) => LimitRow {
                delta,
                error: None,
                status: format!("failed: {e}"),
            },
        })
        .collect())
}

/// Least-squares slope of `ln error` against `ln δ` over rows with an error.
pub fn log_log_slope(rows: &[LimitRow]) -> Option<f64> {
    let pts: Vec<(f64, f64)> = rows
        .iter()
        .filter_map(|r| r.error.filter(|e| *e > 0.0).map(|e| (r.delta.ln(), e.ln())))
        .collect();
    if pts.len() < 2 {
        return None;
    }
    let n = pts.len() as f64;
    let mx = pts.iter().map(|p| p.0).sum::<f64>() / n;
    let my = pts.iter().map(|p| p.1).sum::<f64>() / n;
    let sxy: f64 = pts.iter().map(|p| (p.0 - mx) * (p.1 - my)).sum();
    let sxx: f64 = pts.iter().map(|p| (p.0 - mx).powi(2)).sum();
    Some(sxy / sxx)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::spectral::{GridSpec, Wavevector};
    use crate::synthesis::phase_coupling;
    use num_complex::Complex64;

    fn setup(nu: f64) -> (CGLParams, SolverConfig, SpectralField) {
        let grid = GridSpec::new(1, 64).unwrap();
        let (r1, r2) = phase_coupling(nu);
        let e1 = Wavevector::new([1]);
        let p = CGLParams {
            v: 0.5,
            nu,
            mu: 0.5,
            sigma: 1,
            r1,
            r2,
            q: vec![
                TrigPolynomial::constant(1, 1.0),
                TrigPolynomial::sin_mode(&e1, 1.0),
                TrigPolynomial::cos_mode(&e1, 1.0),
            ],
        };
        let mut cfg = SolverConfig::new(grid, 1e-3);
        cfg.s = 1;
        let psi0 = SpectralField::from_fn(grid, |x| Complex64::new(1.0 + 0.2 * x[0].sin(), 0.0));
        (p, cfg, psi0)
    }

    #[test]
    fn free_flow_converges_to_identity() {
        let (p, cfg, psi0) = setup(0.0);
        let rows = limit_probe(
            &psi0,
            &TrigPolynomial::zero(1),
            &[0.0; 3],
            &p,
            &cfg,
            &[0.1, 0.05, 0.025],
        )
        .unwrap();
        let e: Vec<f64> = rows.iter().map(|r| r.error.unwrap()).collect();
        assert!(e[0] > e[1] && e[1] > e[2]);
        assert!(log_log_slope(&rows).unwrap() > 0.8);
    }

    #[test]
    fn constant_potential_and_branch_choice() {
        let (p, cfg, psi0) = setup(1.0);
        let u = [0.5, 0.0, 0.0];
        let deltas = [0.1, 0.05, 0.025];
        let rows = limit_probe(&psi0, &TrigPolynomial::zero(1), &u, &p, &cfg, &deltas).unwrap();
        assert!(rows.windows(2).all(|w| w[1].error.unwrap() < w[0].error.unwrap()));
        // with φ = 0 the conjugation is trivial and the branch cannot matter
        let flipped = conjugation_coeffs(p.r1, p.r2, p.nu).flipped();
        let other = limit_probe_with(&psi0, &TrigPolynomial::zero(1), &u, &p, &cfg, &deltas, flipped).unwrap();
        for (a, b) in rows.iter().zip(&other) {
            assert!((a.error.unwrap() - b.error.unwrap()).abs() < 1e-8);
        }
    }

    #[test]
    fn nontrivial_phi_decreases() {
        let (p, mut cfg, _) = setup(0.0);
        cfg.grid = GridSpec::new(1, 256).unwrap();
        let psi0 = SpectralField::from_fn(cfg.grid, |x| Complex64::new(1.0 + 0.2 * x[0].sin(), 0.0));
        let phi = TrigPolynomial::cos_mode(&Wavevector::new([1]), -1.0).add_constant(1.0);
        let rows = limit_probe(&psi0, &phi, &[0.0; 3], &p, &cfg, &[0.1, 0.025, 0.00625]).unwrap();
        let first = rows[0].error.unwrap();
        let last = rows[2].error.unwrap();
        assert!(last < first);
        assert!(log_log_slope(&rows).unwrap() > 0.0);
    }

    #[test]
    fn rejects_negative_phi_and_unsorted_deltas() {
        let (p, cfg, psi0) = setup(0.0);
        let neg = TrigPolynomial::cos_mode(&Wavevector::new([1]), 1.0);
        assert!(limit_probe(&psi0, &neg, &[0.0; 3], &p, &cfg, &[0.1]).is_err());
        assert!(limit_probe(&psi0, &TrigPolynomial::zero(1), &[0.0; 3], &p, &cfg, &[0.1, 0.2]).is_err());
    }

    #[test]
    fn csv_rows() {
        let rows = vec![
            LimitRow {
                delta: 0.1,
                error: Some(0.5),
                status: "ok".into(),
            },
            LimitRow {
                delta: 0.05,
                error: None,
                status: "range".into(),
            },
        ];
        let mut buf = Vec::new();
        LimitRow::write_csv(&rows, &mut buf).unwrap();
        let s = String::from_utf8(buf).unwrap();
        assert_eq!(s.lines().nth(2).unwrap(), "5.000000000000e-2,,range");
    }
}
