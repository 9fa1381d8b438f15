use num_complex::Complex64;

use super::fft;
use super::grid::{GridSpec, Wavevector};
use super::trig::TrigPolynomial;
use crate::error::{Error, Result};

/// Largest exponent accepted by [`SpectralField::exp_multiplier`] before the
/// multiplier is deemed out of floating-point range (`ln f64::MAX ≈ 709.8`).
pub const MAX_EXPONENT: f64 = 700.0;

/// Complex field on `T^d` stored as Fourier coefficients on a [`GridSpec`].
#[derive(Clone, Debug, PartialEq)]
pub struct SpectralField {
    grid: GridSpec,
    coeffs: Vec<Complex64>,
    real: bool,
}

impl SpectralField {
    pub fn zeros(grid: GridSpec) -> Self {
        SpectralField {
            grid,
            coeffs: vec![Complex64::new(0.0, 0.0); grid.size()],
            real: false,
        }
    }

    pub fn constant(grid: GridSpec, value: Complex64) -> Self {
        let mut f = Self::zeros(grid);
        f.coeffs[0] = value;
        f.real = value.im == 0.0;
        f
    }

    /// `amplitude · e^{i⟨k,x⟩}`.
    pub fn mode(grid: GridSpec, k: &Wavevector, amplitude: Complex64) -> Result<Self> {
        let mut f = Self::zeros(grid);
        let idx = grid
            .index_of(k)
            .ok_or_else(|| Error::Input(format!("mode {k} is outside the grid {grid}")))?;
        f.coeffs[idx] = amplitude;
        Ok(f)
    }

    pub fn from_coeffs(grid: GridSpec, coeffs: Vec<Complex64>, real: bool) -> Result<Self> {
        if coeffs.len() != grid.size() {
            return Err(Error::Input(format!(
                "expected {} coefficients for {grid}, got {}",
                grid.size(),
                coeffs.len()
            )));
        }
        Ok(SpectralField { grid, coeffs, real })
    }

    /// Forward transform with the normalized measure (zero mode = mean).
    pub fn analyze(grid: GridSpec, samples: &[Complex64]) -> Result<Self> {
        if samples.len() != grid.size() {
            return Err(Error::Input(format!(
                "expected {} samples for {grid}, got {}",
                grid.size(),
                samples.len()
            )));
        }
        let mut coeffs = samples.to_vec();
        fft::forward(&mut coeffs, grid.n_per_dim, grid.d);
        Ok(SpectralField {
            grid,
            coeffs,
            real: false,
        })
    }

    /// Analyze real samples; the result is flagged real and is exactly
    /// conjugate-symmetric.
    pub fn analyze_real(grid: GridSpec, samples: &[f64]) -> Result<Self> {
        let complex: Vec<Complex64> = samples.iter().map(|&v| Complex64::new(v, 0.0)).collect();
        let mut f = Self::analyze(grid, &complex)?;
        f.symmetrize();
        f.real = true;
        Ok(f)
    }

    /// Sample a closure on the grid.
    pub fn from_fn(grid: GridSpec, f: impl Fn(&[f64]) -> Complex64) -> Self {
        let samples: Vec<Complex64> = grid.points().iter().map(|x| f(x)).collect();
        Self::analyze(grid, &samples).expect("sample count matches grid")
    }

    pub fn synthesize(&self) -> Vec<Complex64> {
        let mut samples = self.coeffs.clone();
        fft::inverse(&mut samples, self.grid.n_per_dim, self.grid.d);
        if self.real {
            samples.iter_mut().for_each(|c| c.im = 0.0);
        }
        samples
    }

    pub fn grid(&self) -> &GridSpec {
        &self.grid
    }

    pub fn coeffs(&self) -> &[Complex64] {
        &self.coeffs
    }

    pub fn coeffs_mut(&mut self) -> &mut [Complex64] {
        &mut self.coeffs
    }

    pub fn into_coeffs(self) -> Vec<Complex64> {
        self.coeffs
    }

    pub fn is_real(&self) -> bool {
        self.real
    }

    pub fn set_real(&mut self, real: bool) {
        if real {
            self.symmetrize();
        }
        self.real = real;
    }

    pub fn coeff(&self, k: &Wavevector) -> Complex64 {
        self.grid.index_of(k).map(|i| self.coeffs[i]).unwrap_or_default()
    }

    /// Sets `coeff(k)`. Clears the real flag.
    pub fn set_coeff(&mut self, k: &Wavevector, value: Complex64) -> Result<()> {
        let idx = self
            .grid
            .index_of(k)
            .ok_or_else(|| Error::Input(format!("mode {k} is outside the grid {}", self.grid)))?;
        self.coeffs[idx] = value;
        self.real = false;
        Ok(())
    }

    fn check_grid(&self, other: &SpectralField) -> Result<()> {
        if self.grid != other.grid {
            return Err(Error::GridMismatch {
                left: self.grid.to_string(),
                right: other.grid.to_string(),
            });
        }
        Ok(())
    }

    /// `(Σ_k (1+|k|²)^s |f̂(k)|²)^{1/2}`
    pub fn sobolev_norm(&self, s: u32) -> f64 {
        sobolev_norm_of(&self.grid, &self.coeffs, s)
    }

    pub fn l2_norm(&self) -> f64 {
        self.sobolev_norm(0)
    }

    pub fn sobolev_distance(&self, other: &SpectralField, s: u32) -> Result<f64> {
        self.check_grid(other)?;
        let diff: Vec<Complex64> = self.coeffs.iter().zip(&other.coeffs).map(|(a, b)| a - b).collect();
        Ok(sobolev_norm_of(&self.grid, &diff, s))
    }

    pub fn max_modulus(&self) -> f64 {
        self.synthesize().iter().map(|c| c.norm()).fold(0.0, f64::max)
    }

    pub fn scale(&self, factor: Complex64) -> SpectralField {
        SpectralField {
            grid: self.grid,
            coeffs: self.coeffs.iter().map(|c| c * factor).collect(),
            real: self.real && factor.im == 0.0,
        }
    }

    pub fn add(&self, other: &SpectralField) -> Result<SpectralField> {
        self.check_grid(other)?;
        Ok(SpectralField {
            grid: self.grid,
            coeffs: self.coeffs.iter().zip(&other.coeffs).map(|(a, b)| a + b).collect(),
            real: self.real && other.real,
        })
    }

    pub fn sub(&self, other: &SpectralField) -> Result<SpectralField> {
        self.check_grid(other)?;
        Ok(SpectralField {
            grid: self.grid,
            coeffs: self.coeffs.iter().zip(&other.coeffs).map(|(a, b)| a - b).collect(),
            real: self.real && other.real,
        })
    }

    /// Zero every mode with some `|k_i| > cutoff`.
    pub fn truncate(&mut self, cutoff: i32) {
        let grid = self.grid;
        let n = grid.n_per_dim;
        for (idx, c) in self.coeffs.iter_mut().enumerate() {
            let mut rem = idx;
            for _ in 0..grid.d {
                if grid.axis_frequency(rem % n).abs() > cutoff {
                    *c = Complex64::new(0.0, 0.0);
                    break;
                }
                rem /= n;
            }
        }
    }

    /// Apply the dealiasing cutoff of the grid.
    pub fn dealias(&mut self) {
        self.truncate(self.grid.dealias_cutoff());
    }

    pub fn remove_nyquist(&mut self) {
        let grid = self.grid;
        for (idx, c) in self.coeffs.iter_mut().enumerate() {
            if grid.is_nyquist(idx) {
                *c = Complex64::new(0.0, 0.0);
            }
        }
    }

    /// Dealiased pointwise product `f·g`.
    pub fn pointwise_multiply(&self, other: &SpectralField) -> Result<SpectralField> {
        self.check_grid(other)?;
        let mut a = self.clone();
        let mut b = other.clone();
        a.dealias();
        b.dealias();
        let sa = a.synthesize();
        let sb = b.synthesize();
        let prod: Vec<Complex64> = sa.iter().zip(&sb).map(|(x, y)| x * y).collect();
        let mut out = SpectralField::analyze(self.grid, &prod)?;
        out.dealias();
        if self.real && other.real {
            out.set_real(true);
        }
        Ok(out)
    }

    /// `analyze(e^{z·φ(x)} · synthesize(ψ)(x))`, exact on the grid.
    pub fn exp_multiplier(&self, phi: &TrigPolynomial, z: Complex64) -> Result<SpectralField> {
        if phi.is_zero() {
            return Ok(self.clone());
        }
        let values = phi.eval_grid(&self.grid)?;
        self.exp_multiplier_values(&values, z)
    }

    /// Same as [`exp_multiplier`](Self::exp_multiplier) with `φ` given by its
    /// grid values.
    pub fn exp_multiplier_values(&self, phi: &[f64], z: Complex64) -> Result<SpectralField> {
        if phi.len() != self.grid.size() {
            return Err(Error::Input(format!(
                "expected {} potential samples, got {}",
                self.grid.size(),
                phi.len()
            )));
        }
        if z == Complex64::new(0.0, 0.0) {
            return Ok(self.clone());
        }
        let exponent = phi.iter().map(|&p| z.re * p).fold(f64::NEG_INFINITY, f64::max);
        if exponent > MAX_EXPONENT || !exponent.is_finite() {
            return Err(Error::Range {
                exponent,
                context: format!("max Re(z)·φ with z = {z}"),
            });
        }
        let mut samples = self.synthesize();
        for (s, &p) in samples.iter_mut().zip(phi) {
            *s *= (z * p).exp();
        }
        let mut out = SpectralField::analyze(self.grid, &samples)?;
        if self.real && z.im == 0.0 {
            out.set_real(true);
        }
        Ok(out)
    }

    /// Force exact conjugate symmetry `coeff(−k) = conj(coeff(k))`.
    fn symmetrize(&mut self) {
        let grid = self.grid;
        let orig = self.coeffs.clone();
        for (idx, c) in self.coeffs.iter_mut().enumerate() {
            let k = grid.wavevector(idx);
            let mirror = mirror_index(&grid, &k);
            *c = 0.5 * (orig[idx] + orig[mirror].conj());
        }
    }

    /// Largest `|coeff(−k) − conj(coeff(k))|`.
    pub fn conjugate_symmetry_defect(&self) -> f64 {
        let grid = self.grid;
        (0..grid.size())
            .map(|idx| {
                let k = grid.wavevector(idx);
                (self.coeffs[idx] - self.coeffs[mirror_index(&grid, &k)].conj()).norm()
            })
            .fold(0.0, f64::max)
    }
}

fn mirror_index(grid: &GridSpec, k: &Wavevector) -> usize {
    let n = grid.n_per_dim as i32;
    let mut idx = 0usize;
    for &c in k.components() {
        idx = idx * grid.n_per_dim + (-c).rem_euclid(n) as usize;
    }
    idx
}

pub(crate) fn sobolev_norm_of(grid: &GridSpec, coeffs: &[Complex64], s: u32) -> f64 {
    let mut total = 0.0;
    for (idx, c) in coeffs.iter().enumerate() {
        let m = c.norm_sqr();
        if m == 0.0 {
            continue;
        }
        let w = if s == 0 {
            1.0
        } else {
            (1.0 + grid.wavevector(idx).norm_sq() as f64).powi(s as i32)
        };
        total += w * m;
    }
    total.sqrt()
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;
    use std::f64::consts::FRAC_1_SQRT_2;

    fn c(re: f64, im: f64) -> Complex64 {
        Complex64::new(re, im)
    }

    fn random_samples(grid: &GridSpec, seed: u64) -> Vec<Complex64> {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        (0..grid.size())
            .map(|_| c(rng.random_range(-1.0..1.0), rng.random_range(-1.0..1.0)))
            .collect()
    }

    #[test]
    fn constant_samples_give_zero_mode() {
        let g = GridSpec::new(2, 8).unwrap();
        let f = SpectralField::analyze(g, &vec![c(1.0, 0.0); g.size()]).unwrap();
        assert!((f.coeffs()[0] - c(1.0, 0.0)).norm() < 1e-15);
        assert!(f.coeffs()[1..].iter().all(|v| v.norm() < 1e-15));
    }

    #[test]
    fn pure_mode_analysis() {
        let g = GridSpec::new(1, 16).unwrap();
        let f = SpectralField::from_fn(g, |x| Complex64::from_polar(1.0, x[0]));
        let one = Wavevector::new([1]);
        for idx in 0..g.size() {
            let expected = if g.wavevector(idx) == one { 1.0 } else { 0.0 };
            assert!((f.coeffs()[idx] - c(expected, 0.0)).norm() < 1e-14);
        }
    }

    #[test]
    fn size_mismatch_is_input_error() {
        let g = GridSpec::new(1, 8).unwrap();
        assert!(matches!(
            SpectralField::analyze(g, &[c(0.0, 0.0); 7]),
            Err(Error::Input(_))
        ));
    }

    #[test]
    fn roundtrip_random_samples() {
        for (d, n) in [(1, 64), (2, 16), (3, 8)] {
            let g = GridSpec::new(d, n).unwrap();
            let samples = random_samples(&g, 7 + d as u64);
            let back = SpectralField::analyze(g, &samples).unwrap().synthesize();
            let err = samples
                .iter()
                .zip(&back)
                .map(|(a, b)| (a - b).norm())
                .fold(0.0, f64::max);
            assert!(err < 1e-12, "d={d}: {err}");
        }
    }

    #[test]
    fn synthesize_constant_and_sine() {
        let g = GridSpec::new(1, 16).unwrap();
        let f = SpectralField::constant(g, c(0.5, -2.0));
        assert!(f.synthesize().iter().all(|v| (v - c(0.5, -2.0)).norm() < 1e-15));

        let mut s = SpectralField::zeros(g);
        let half_over_i = c(0.0, -0.5);
        s.set_coeff(&Wavevector::new([1]), half_over_i).unwrap();
        s.set_coeff(&Wavevector::new([-1]), -half_over_i).unwrap();
        for (x, v) in g.points().iter().zip(s.synthesize()) {
            assert!((v - c(x[0].sin(), 0.0)).norm() < 1e-14);
        }
    }

    #[test]
    fn sobolev_norm_examples() {
        let g = GridSpec::new(2, 8).unwrap();
        let one = SpectralField::constant(g, c(1.0, 0.0));
        for s in 0..5 {
            assert!((one.sobolev_norm(s) - 1.0).abs() < 1e-15);
        }
        let e1 = SpectralField::mode(g, &Wavevector::new([1, 0]), c(1.0, 0.0)).unwrap();
        assert!((e1.sobolev_norm(2) - 2.0).abs() < 1e-14);

        let g1 = GridSpec::new(1, 16).unwrap();
        let sine = SpectralField::from_fn(g1, |x| c(x[0].sin(), 0.0));
        assert!((sine.sobolev_norm(0) - FRAC_1_SQRT_2).abs() < 1e-14);
    }

    #[test]
    fn plancherel() {
        let g = GridSpec::new(2, 16).unwrap();
        let samples = random_samples(&g, 3);
        let f = SpectralField::analyze(g, &samples).unwrap();
        let mean_sq = samples.iter().map(|v| v.norm_sqr()).sum::<f64>() / g.size() as f64;
        assert!((f.sobolev_norm(0).powi(2) - mean_sq).abs() < 1e-12);
    }

    #[test]
    fn multiply_identities() {
        let g = GridSpec::new(1, 32).unwrap();
        let f = SpectralField::from_fn(g, |x| c(x[0].cos(), 0.3 * (2.0 * x[0]).sin()));
        let one = SpectralField::constant(g, c(1.0, 0.0));
        let prod = f.pointwise_multiply(&one).unwrap();
        assert!(prod.sobolev_distance(&f, 0).unwrap() < 1e-14);

        let e = SpectralField::mode(g, &Wavevector::new([1]), c(1.0, 0.0)).unwrap();
        let e2 = SpectralField::mode(g, &Wavevector::new([2]), c(1.0, 0.0)).unwrap();
        assert!(e.pointwise_multiply(&e).unwrap().sobolev_distance(&e2, 0).unwrap() < 1e-14);
    }

    #[test]
    fn multiply_matches_direct_convolution() {
        // O(n²) convolution oracle on band-limited inputs.
        for (d, n) in [(1usize, 32usize), (2, 16)] {
            let g = GridSpec::new(d, n).unwrap();
            let cut = g.dealias_cutoff();
            let mut rng = ChaCha8Rng::seed_from_u64(11 + d as u64);
            let mut rand_field = || {
                let mut f = SpectralField::zeros(g);
                for idx in 0..g.size() {
                    if g.wavevector(idx).max_abs() <= cut {
                        f.coeffs_mut()[idx] = c(rng.random_range(-1.0..1.0), rng.random_range(-1.0..1.0));
                    }
                }
                f
            };
            let a = rand_field();
            let b = rand_field();
            let got = a.pointwise_multiply(&b).unwrap();

            let mut expected = SpectralField::zeros(g);
            for i in 0..g.size() {
                for j in 0..g.size() {
                    let k = g.wavevector(i).add(&g.wavevector(j));
                    if k.max_abs() <= cut {
                        let idx = g.index_of(&k).unwrap();
                        expected.coeffs_mut()[idx] += a.coeffs()[i] * b.coeffs()[j];
                    }
                }
            }
            let err = got.sobolev_distance(&expected, 0).unwrap();
            assert!(err < 1e-12, "d={d}: {err}");
        }
    }

    #[test]
    fn multiply_grid_mismatch() {
        let a = SpectralField::zeros(GridSpec::new(1, 8).unwrap());
        let b = SpectralField::zeros(GridSpec::new(1, 16).unwrap());
        assert!(matches!(a.pointwise_multiply(&b), Err(Error::GridMismatch { .. })));
    }

    #[test]
    fn exp_multiplier_examples() {
        let g = GridSpec::new(1, 32).unwrap();
        let psi = SpectralField::from_fn(g, |x| c(1.0 + 0.2 * x[0].sin(), 0.1 * x[0].cos()));
        let phi = TrigPolynomial::from_terms(1, [(Wavevector::new([1]), 1.0, 0.5), (Wavevector::new([0]), 0.2, 0.0)]);
        assert_eq!(psi.exp_multiplier(&phi, c(0.0, 0.0)).unwrap(), psi);

        let one = TrigPolynomial::constant(1, 1.0);
        let two = SpectralField::constant(g, c(1.0, 0.0))
            .exp_multiplier(&one, c(2f64.ln(), 0.0))
            .unwrap();
        assert!((two.coeffs()[0] - c(2.0, 0.0)).norm() < 1e-14);

        let z = c(1.5, -0.7);
        let back = psi.exp_multiplier(&phi, -z).unwrap().exp_multiplier(&phi, z).unwrap();
        assert!(back.sobolev_distance(&psi, 2).unwrap() < 1e-10);
    }

    #[test]
    fn exp_multiplier_range_error() {
        let g = GridSpec::new(1, 8).unwrap();
        let psi = SpectralField::constant(g, c(1.0, 0.0));
        let phi = TrigPolynomial::constant(1, 1.0);
        assert!(matches!(
            psi.exp_multiplier(&phi, c(800.0, 0.0)),
            Err(Error::Range { .. })
        ));
    }

    #[test]
    fn real_flag_survives_products() {
        let g = GridSpec::new(2, 16).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(5);
        let va: Vec<f64> = (0..g.size()).map(|_| rng.random_range(-1.0..1.0)).collect();
        let vb: Vec<f64> = (0..g.size()).map(|_| rng.random_range(-1.0..1.0)).collect();
        let a = SpectralField::analyze_real(g, &va).unwrap();
        let b = SpectralField::analyze_real(g, &vb).unwrap();
        assert!(a.conjugate_symmetry_defect() < 1e-15);
        let p = a.pointwise_multiply(&b).unwrap();
        assert!(p.is_real());
        assert!(p.conjugate_symmetry_defect() < 1e-15);
        let phi = TrigPolynomial::from_terms(2, [(Wavevector::new([1, 1]), 0.3, -0.2)]);
        let e = a.exp_multiplier(&phi, c(0.4, 0.0)).unwrap();
        assert!(e.is_real());
        assert!(e.conjugate_symmetry_defect() < 1e-15);
    }
}
