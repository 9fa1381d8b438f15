use std::fmt;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Integer lattice frequency `k ∈ Z^d`.
#[derive(Clone, Debug, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub struct Wavevector(pub Vec<i32>);

impl Wavevector {
    pub fn new(components: impl Into<Vec<i32>>) -> Self {
        Wavevector(components.into())
    }

    pub fn zero(d: usize) -> Self {
        Wavevector(vec![0; d])
    }

    pub fn unit(d: usize, axis: usize) -> Self {
        let mut k = vec![0; d];
        k[axis] = 1;
        Wavevector(k)
    }

    pub fn dim(&self) -> usize {
        self.0.len()
    }

    pub fn components(&self) -> &[i32] {
        &self.0
    }

    pub fn is_zero(&self) -> bool {
        self.0.iter().all(|&c| c == 0)
    }

    /// `|k|² = k_1² + … + k_d²`, exact.
    pub fn norm_sq(&self) -> i64 {
        self.0.iter().map(|&c| (c as i64) * (c as i64)).sum()
    }

    pub fn dot(&self, other: &Wavevector) -> i64 {
        self.0.iter().zip(&other.0).map(|(&a, &b)| a as i64 * b as i64).sum()
    }

    pub fn neg(&self) -> Wavevector {
        Wavevector(self.0.iter().map(|c| -c).collect())
    }

    pub fn add(&self, other: &Wavevector) -> Wavevector {
        Wavevector(self.0.iter().zip(&other.0).map(|(a, b)| a + b).collect())
    }

    pub fn sub(&self, other: &Wavevector) -> Wavevector {
        Wavevector(self.0.iter().zip(&other.0).map(|(a, b)| a - b).collect())
    }

    /// True when the first nonzero component is positive, or for the zero vector.
    pub fn is_canonical(&self) -> bool {
        match self.0.iter().find(|&&c| c != 0) {
            Some(&c) => c > 0,
            None => true,
        }
    }

    /// Representative of `±k` with first nonzero component positive, and
    /// whether a sign flip was needed.
    pub fn canonical(&self) -> (Wavevector, bool) {
        if self.is_canonical() {
            (self.clone(), false)
        } else {
            (self.neg(), true)
        }
    }

    /// `max_i |k_i|`
    pub fn max_abs(&self) -> i32 {
        self.0.iter().map(|c| c.abs()).max().unwrap_or(0)
    }

    pub fn phase_at(&self, x: &[f64]) -> f64 {
        self.0.iter().zip(x).map(|(&k, &xi)| k as f64 * xi).sum()
    }
}

impl fmt::Display for Wavevector {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "(")?;
        for (i, c) in self.0.iter().enumerate() {
            if i > 0 {
                write!(f, ",")?;
            }
            write!(f, "{c}")?;
        }
        write!(f, ")")
    }
}

/// Fraction of the half-bandwidth kept by dealiased products.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct DealiasFraction {
    pub num: u32,
    pub den: u32,
}

impl DealiasFraction {
    pub const TWO_THIRDS: DealiasFraction = DealiasFraction { num: 2, den: 3 };
    pub const NONE: DealiasFraction = DealiasFraction { num: 1, den: 1 };

    pub fn value(&self) -> f64 {
        self.num as f64 / self.den as f64
    }
}

impl Default for DealiasFraction {
    fn default() -> Self {
        Self::TWO_THIRDS
    }
}

/// Uniform tensor grid on `T^d` with `n_per_dim` points per axis.
///
/// Coefficients are stored in FFT order, row-major over axes, with axis index
/// `i` carrying frequency `i` for `i < n/2` and `i − n` otherwise. The row at
/// `−n/2` (Nyquist) is carried so that sampling is lossless; dealiased
/// operations remove it. The retained lattice is `|k_i| ≤ n/2 − 1`.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct GridSpec {
    pub d: usize,
    pub n_per_dim: usize,
    #[serde(default)]
    pub dealias_fraction: DealiasFraction,
}

impl GridSpec {
    pub fn new(d: usize, n_per_dim: usize) -> Result<Self> {
        Self::with_dealias(d, n_per_dim, DealiasFraction::TWO_THIRDS)
    }

    pub fn with_dealias(d: usize, n_per_dim: usize, dealias_fraction: DealiasFraction) -> Result<Self> {
        let grid = GridSpec {
            d,
            n_per_dim,
            dealias_fraction,
        };
        grid.validate()?;
        Ok(grid)
    }

    /// 64 points for d = 1, 32 per axis otherwise.
    pub fn default_for(d: usize) -> Self {
        let n = if d == 1 { 64 } else { 32 };
        GridSpec {
            d,
            n_per_dim: n,
            dealias_fraction: DealiasFraction::TWO_THIRDS,
        }
    }

    pub fn validate(&self) -> Result<()> {
        if self.d == 0 {
            return Err(Error::Input("grid dimension must be at least 1".into()));
        }
        if self.n_per_dim < 4 || !self.n_per_dim.is_power_of_two() {
            return Err(Error::Input(format!(
                "n_per_dim must be a power of two ≥ 4, got {}",
                self.n_per_dim
            )));
        }
        let f = self.dealias_fraction;
        if f.den == 0 || f.num == 0 || f.num > f.den {
            return Err(Error::Input(format!(
                "dealias fraction {}/{} is not in (0, 1]",
                f.num, f.den
            )));
        }
        if self.len().is_none() {
            return Err(Error::Input("grid too large".into()));
        }
        Ok(())
    }

    fn len(&self) -> Option<usize> {
        self.n_per_dim.checked_pow(self.d as u32)
    }

    /// Total number of grid points (equal to the number of stored coefficients).
    pub fn size(&self) -> usize {
        self.n_per_dim.pow(self.d as u32)
    }

    /// Largest retained `|k_i|`.
    pub fn max_mode(&self) -> i32 {
        (self.n_per_dim / 2) as i32 - 1
    }

    /// Largest `|k_i|` kept by dealiased products.
    pub fn dealias_cutoff(&self) -> i32 {
        let f = self.dealias_fraction;
        let half = (self.n_per_dim / 2) as u64;
        let cut = (half * f.num as u64 / f.den as u64) as i32;
        cut.min(self.max_mode())
    }

    pub(crate) fn axis_frequency(&self, i: usize) -> i32 {
        let n = self.n_per_dim;
        if i < n / 2 {
            i as i32
        } else {
            i as i32 - n as i32
        }
    }

    pub(crate) fn axis_index(&self, k: i32) -> Option<usize> {
        let n = self.n_per_dim as i32;
        if k >= n / 2 || k < -n / 2 {
            return None;
        }
        Some(k.rem_euclid(n) as usize)
    }

    pub fn wavevector(&self, index: usize) -> Wavevector {
        let n = self.n_per_dim;
        let mut comps = vec![0; self.d];
        let mut rem = index;
        for axis in (0..self.d).rev() {
            comps[axis] = self.axis_frequency(rem % n);
            rem /= n;
        }
        Wavevector(comps)
    }

    /// Storage index of `k`, if `k` lies on the stored lattice.
    pub fn index_of(&self, k: &Wavevector) -> Option<usize> {
        if k.dim() != self.d {
            return None;
        }
        let mut idx = 0;
        for &c in k.components() {
            idx = idx * self.n_per_dim + self.axis_index(c)?;
        }
        Some(idx)
    }

    pub(crate) fn is_nyquist(&self, index: usize) -> bool {
        let n = self.n_per_dim;
        let mut rem = index;
        for _ in 0..self.d {
            if rem % n == n / 2 {
                return true;
            }
            rem /= n;
        }
        false
    }

    /// `|k|²` for each storage index.
    pub fn norms_sq(&self) -> Vec<i64> {
        (0..self.size()).map(|i| self.wavevector(i).norm_sq()).collect()
    }

    /// Coordinates of grid point `index`, each in `[0, 2π)`.
    pub fn point(&self, index: usize) -> Vec<f64> {
        let n = self.n_per_dim;
        let h = std::f64::consts::TAU / n as f64;
        let mut x = vec![0.0; self.d];
        let mut rem = index;
        for axis in (0..self.d).rev() {
            x[axis] = (rem % n) as f64 * h;
            rem /= n;
        }
        x
    }

    pub fn points(&self) -> Vec<Vec<f64>> {
        (0..self.size()).map(|i| self.point(i)).collect()
    }
}

impl fmt::Display for GridSpec {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(
            f,
            "d={} n={} dealias={}/{}",
            self.d, self.n_per_dim, self.dealias_fraction.num, self.dealias_fraction.den
        )
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn index_roundtrip() {
        let g = GridSpec::new(2, 8).unwrap();
        for i in 0..g.size() {
            let k = g.wavevector(i);
            assert_eq!(g.index_of(&k), Some(i));
        }
        assert_eq!(g.index_of(&Wavevector::new([4, 0])), None);
        assert!(g.is_nyquist(g.index_of(&Wavevector::new([-4, 1])).unwrap()));
    }

    #[test]
    fn canonical_representative() {
        assert_eq!(
            Wavevector::new([0, -2, 1]).canonical(),
            (Wavevector::new([0, 2, -1]), true)
        );
        assert!(Wavevector::new([1, -5]).is_canonical());
        assert!(Wavevector::zero(3).is_canonical());
    }

    #[test]
    fn rejects_bad_grids() {
        assert!(GridSpec::new(1, 2).is_err());
        assert!(GridSpec::new(1, 48).is_err());
        assert!(GridSpec::new(0, 8).is_err());
        assert!(GridSpec::with_dealias(1, 8, DealiasFraction { num: 4, den: 3 }).is_err());
    }

    #[test]
    fn two_thirds_cutoff() {
        assert_eq!(GridSpec::new(1, 64).unwrap().dealias_cutoff(), 21);
        assert_eq!(GridSpec::new(1, 256).unwrap().dealias_cutoff(), 85);
        let full = GridSpec::with_dealias(1, 16, DealiasFraction::NONE).unwrap();
        assert_eq!(full.dealias_cutoff(), 7);
    }
}
