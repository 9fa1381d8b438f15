use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::spectral::{SpectralField, TrigPolynomial};

fn default_floor() -> f64 {
    1e-10
}

fn default_argument_tolerance() -> f64 {
    1e-6
}

/// Cutoff around the common zero set: 0 within distance `η`, 1 beyond `2η`,
/// smooth in between.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct MollifierSpec {
    pub eta: f64,
    /// Moduli at or below this value count as zeros; inside the support of
    /// the cutoff they are rejected.
    #[serde(default = "default_floor")]
    pub floor: f64,
    #[serde(default = "default_argument_tolerance")]
    pub argument_tolerance: f64,
}

impl MollifierSpec {
    pub fn new(eta: f64) -> Self {
        MollifierSpec {
            eta,
            floor: default_floor(),
            argument_tolerance: default_argument_tolerance(),
        }
    }

    /// Smooth step in the distance to the zero set.
    pub fn profile(&self, distance: f64) -> f64 {
        let t = (distance - self.eta) / self.eta;
        if t <= 0.0 {
            return 0.0;
        }
        if t >= 1.0 {
            return 1.0;
        }
        let f = |s: f64| if s > 0.0 { (-1.0 / s).exp() } else { 0.0 };
        f(t) / (f(t) + f(1.0 - t))
    }
}

fn torus_distance(a: &[f64], b: &[f64]) -> f64 {
    let tau = 2.0 * std::f64::consts::PI;
    a.iter()
        .zip(b)
        .map(|(x, y)| {
            let d = (x - y).rem_euclid(tau);
            d.min(tau - d).powi(2)
        })
        .sum::<f64>()
        .sqrt()
}

/// `φ_η = ρ_η·ln(|ψ1|/|ψ0|)` on the grid, projected to degree `≤ degree_cap`.
pub fn same_argument_target(
    psi0: &SpectralField,
    psi1: &SpectralField,
    spec: &MollifierSpec,
    degree_cap: i32,
) -> Result<TrigPolynomial> {
    if psi0.grid() != psi1.grid() {
        return Err(Error::GridMismatch {
            left: psi0.grid().to_string(),
            right: psi1.grid().to_string(),
        });
    }
    if !(spec.eta > 0.0) {
        return Err(Error::Input(format!("η must be positive, got {}", spec.eta)));
    }
    let grid = *psi0.grid();
    let s0 = psi0.synthesize();
    let s1 = psi1.synthesize();
    let points = grid.points();
    let zeros: Vec<usize> = (0..s0.len())
        .filter(|&i| s0[i].norm() <= spec.floor || s1[i].norm() <= spec.floor)
        .collect();

    let mut phi = vec![0.0; s0.len()];
    for i in 0..s0.len() {
        let rho = if zeros.is_empty() {
            1.0
        } else {
            let dist = zeros
                .iter()
                .map(|&z| torus_distance(&points[i], &points[z]))
                .fold(f64::INFINITY, f64::min);
            spec.profile(dist)
        };
        if rho == 0.0 {
            continue;
        }
        let (m0, m1) = (s0[i].norm(), s1[i].norm());
        if m0 <= spec.floor || m1 <= spec.floor {
            return Err(Error::BelowFloor {
                index: i,
                value: m0.min(m1),
            });
        }
        let mismatch = (s1[i] / s0[i]).arg().abs();
        if mismatch > spec.argument_tolerance {
            return Err(Error::ArgumentMismatch { index: i, mismatch });
        }
        phi[i] = rho * (m1 / m0).ln();
    }
    let field = SpectralField::analyze_real(grid, &phi)?;
    Ok(TrigPolynomial::project_field(&field, degree_cap))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::spectral::{GridSpec, Wavevector};
    use num_complex::Complex64;

    fn grid() -> GridSpec {
        GridSpec::new(1, 64).unwrap()
    }

    fn psi0() -> SpectralField {
        SpectralField::from_fn(grid(), |x| Complex64::new(1.0 + 0.3 * x[0].cos(), 0.2 * x[0].sin()))
    }

    #[test]
    fn identical_states() {
        let t = same_argument_target(&psi0(), &psi0(), &MollifierSpec::new(0.1), 8).unwrap();
        assert!(t.max_coeff() < 1e-14);
    }

    #[test]
    fn doubled_state() {
        let p1 = psi0().scale(Complex64::new(2.0, 0.0));
        let t = same_argument_target(&psi0(), &p1, &MollifierSpec::new(0.1), 8).unwrap();
        assert!((t.constant_term() - 2f64.ln()).abs() < 1e-12);
        assert!(t.sub(&TrigPolynomial::constant(1, 2f64.ln())).max_coeff() < 1e-12);
    }

    #[test]
    fn exponential_modulus_ratio() {
        let p1 = SpectralField::from_fn(grid(), |x| {
            Complex64::new(1.0 + 0.3 * x[0].cos(), 0.2 * x[0].sin()) * (0.3 * x[0].cos()).exp()
        });
        let t = same_argument_target(&psi0(), &p1, &MollifierSpec::new(0.1), 6).unwrap();
        let want = TrigPolynomial::cos_mode(&Wavevector::new([1]), 0.3);
        assert!(t.sub(&want).max_coeff() < 1e-8);
    }

    #[test]
    fn argument_mismatch_and_floor() {
        let rotated = psi0().scale(Complex64::new(0.0, 1.0));
        assert!(matches!(
            same_argument_target(&psi0(), &rotated, &MollifierSpec::new(0.1), 4),
            Err(Error::ArgumentMismatch { .. })
        ));
        // sin x vanishes at 0 and π; the cutoff masks both
        let s = SpectralField::from_fn(grid(), |x| Complex64::new(x[0].sin(), 0.0));
        let s2 = s.scale(Complex64::new(3.0, 0.0));
        let t = same_argument_target(&s, &s2, &MollifierSpec::new(0.2), 16).unwrap();
        assert!(t.eval(&[std::f64::consts::FRAC_PI_2]) > 0.9 * 3f64.ln());
        assert!(t.constant_term() < 3f64.ln());
        let mut tight = MollifierSpec::new(0.2);
        tight.floor = 0.5;
        let r = same_argument_target(&s, &s2, &tight, 16);
        assert!(r.is_ok());
    }

    #[test]
    fn profile_bounds() {
        let m = MollifierSpec::new(0.1);
        assert_eq!(m.profile(0.05), 0.0);
        assert_eq!(m.profile(0.25), 1.0);
        let mid = m.profile(0.15);
        assert!(mid > 0.0 && mid < 1.0);
    }
}
