use num_complex::Complex64;
use serde::{Deserialize, Serialize};

/// `a + ib` with `(1+iν)(a+ib)² = r1 + ir2`.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct ConjugationCoeffs {
    pub a: f64,
    pub b: f64,
}

impl ConjugationCoeffs {
    pub fn as_complex(&self) -> Complex64 {
        Complex64::new(self.a, self.b)
    }

    /// The other square root.
    pub fn flipped(&self) -> Self {
        ConjugationCoeffs { a: -self.a, b: -self.b }
    }
}

/// Principal square root of `(r1+ir2)/(1+iν)`.
pub fn conjugation_coeffs(r1: f64, r2: f64, nu: f64) -> ConjugationCoeffs {
    let w = (Complex64::new(r1, r2) / Complex64::new(1.0, nu)).sqrt();
    ConjugationCoeffs { a: w.re, b: w.im }
}

/// Coupling `(r1, r2) = (1, −ν)/(1+ν²)` used for phase steering; then
/// `a + ib = r1 + ir2`.
pub fn phase_coupling(nu: f64) -> (f64, f64) {
    let n = 1.0 + nu * nu;
    (1.0 / n, -nu / n)
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    #[test]
    fn examples() {
        let c = conjugation_coeffs(1.0, 0.0, 0.0);
        assert_eq!((c.a, c.b), (1.0, 0.0));
        for nu in [0.0, 1.0, -2.5] {
            let (r1, r2) = phase_coupling(nu);
            let c = conjugation_coeffs(r1, r2, nu);
            assert!((c.a - r1).abs() < 1e-15 && (c.b - r2).abs() < 1e-15);
        }
        let c = conjugation_coeffs(0.0, 0.0, 3.0);
        assert_eq!((c.a, c.b), (0.0, 0.0));
    }

    proptest! {
        #![proptest_config(ProptestConfig::with_cases(1000))]
        #[test]
        fn identity_holds_on_both_branches(r1 in -10.0f64..10.0, r2 in -10.0f64..10.0, nu in -10.0f64..10.0) {
            let c = conjugation_coeffs(r1, r2, nu);
            for w in [c.as_complex(), c.flipped().as_complex()] {
                let lhs = Complex64::new(1.0, nu) * w * w;
                prop_assert!((lhs - Complex64::new(r1, r2)).norm() <= 1e-12 * (1.0 + Complex64::new(r1, r2).norm()));
            }
        }
    }
}
