use std::collections::BTreeMap;

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use super::field::SpectralField;
use super::grid::{GridSpec, Wavevector};
use crate::error::{Error, Result};

/// Real trigonometric polynomial
/// `Σ_k a_k cos⟨k,x⟩ + b_k sin⟨k,x⟩` over canonical wavevectors `k`
/// (first nonzero component positive) plus the zero mode.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(into = "TrigRepr", try_from = "TrigRepr")]
pub struct TrigPolynomial {
    d: usize,
    terms: BTreeMap<Wavevector, (f64, f64)>,
}

#[derive(Serialize, Deserialize)]
struct TrigRepr {
    d: usize,
    terms: Vec<TrigTerm>,
}

#[derive(Serialize, Deserialize)]
struct TrigTerm {
    k: Vec<i32>,
    cos: f64,
    sin: f64,
}

impl From<TrigPolynomial> for TrigRepr {
    fn from(p: TrigPolynomial) -> Self {
        TrigRepr {
            d: p.d,
            terms: p
                .terms
                .into_iter()
                .map(|(k, (cos, sin))| TrigTerm { k: k.0, cos, sin })
                .collect(),
        }
    }
}

impl TryFrom<TrigRepr> for TrigPolynomial {
    type Error = Error;

    fn try_from(r: TrigRepr) -> Result<Self> {
        if r.terms.iter().any(|t| t.k.len() != r.d) {
            return Err(Error::Format(format!("term dimension differs from d = {}", r.d)));
        }
        Ok(TrigPolynomial::from_terms(
            r.d,
            r.terms.into_iter().map(|t| (Wavevector(t.k), t.cos, t.sin)),
        ))
    }
}

/// Which half of a `(cos, sin)` pair.
#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum Part {
    Cos,
    Sin,
}

impl TrigPolynomial {
    pub fn zero(d: usize) -> Self {
        TrigPolynomial {
            d,
            terms: BTreeMap::new(),
        }
    }

    pub fn constant(d: usize, value: f64) -> Self {
        let mut p = Self::zero(d);
        p.add_term(&Wavevector::zero(d), value, 0.0);
        p
    }

    pub fn cos_mode(k: &Wavevector, amplitude: f64) -> Self {
        Self::from_terms(k.dim(), [(k.clone(), amplitude, 0.0)])
    }

    pub fn sin_mode(k: &Wavevector, amplitude: f64) -> Self {
        Self::from_terms(k.dim(), [(k.clone(), 0.0, amplitude)])
    }

    /// Accumulate `(k, cos, sin)` terms; non-canonical `k` are folded onto
    /// their canonical representative.
    pub fn from_terms(d: usize, terms: impl IntoIterator<Item = (Wavevector, f64, f64)>) -> Self {
        let mut p = Self::zero(d);
        for (k, c, s) in terms {
            assert_eq!(k.dim(), d, "wavevector dimension mismatch");
            p.add_term(&k, c, s);
        }
        p
    }

    fn add_term(&mut self, k: &Wavevector, c: f64, s: f64) {
        let (key, flipped) = k.canonical();
        let s = if key.is_zero() {
            0.0
        } else if flipped {
            -s
        } else {
            s
        };
        let entry = self.terms.entry(key.clone()).or_insert((0.0, 0.0));
        entry.0 += c;
        entry.1 += s;
        if entry.0 == 0.0 && entry.1 == 0.0 {
            self.terms.remove(&key);
        }
    }

    pub fn dim(&self) -> usize {
        self.d
    }

    pub fn is_zero(&self) -> bool {
        self.terms.is_empty()
    }

    pub fn num_terms(&self) -> usize {
        self.terms.len()
    }

    /// Canonical terms in lexicographic order.
    pub fn terms(&self) -> impl Iterator<Item = (&Wavevector, f64, f64)> {
        self.terms.iter().map(|(k, &(c, s))| (k, c, s))
    }

    /// `(cos, sin)` coefficients of `k`, expressed for `k` as given.
    pub fn get(&self, k: &Wavevector) -> (f64, f64) {
        let (key, flipped) = k.canonical();
        let (c, s) = self.terms.get(&key).copied().unwrap_or((0.0, 0.0));
        (c, if flipped { -s } else { s })
    }

    pub fn constant_term(&self) -> f64 {
        self.get(&Wavevector::zero(self.d)).0
    }

    /// Largest `max_i |k_i|` over the terms.
    pub fn degree(&self) -> i32 {
        self.terms.keys().map(Wavevector::max_abs).max().unwrap_or(0)
    }

    pub fn scale(&self, factor: f64) -> Self {
        let mut p = Self::zero(self.d);
        for (k, c, s) in self.terms() {
            p.add_term(k, c * factor, s * factor);
        }
        p
    }

    pub fn add(&self, other: &Self) -> Self {
        assert_eq!(self.d, other.d, "dimension mismatch");
        let mut p = self.clone();
        for (k, c, s) in other.terms() {
            p.add_term(k, c, s);
        }
        p
    }

    pub fn sub(&self, other: &Self) -> Self {
        self.add(&other.scale(-1.0))
    }

    pub fn add_constant(&self, value: f64) -> Self {
        let mut p = self.clone();
        p.add_term(&Wavevector::zero(self.d), value, 0.0);
        p
    }

    pub fn eval(&self, x: &[f64]) -> f64 {
        self.terms()
            .map(|(k, c, s)| {
                let ph = k.phase_at(x);
                c * ph.cos() + s * ph.sin()
            })
            .sum()
    }

    /// Values at every grid point.
    pub fn eval_grid(&self, grid: &GridSpec) -> Result<Vec<f64>> {
        if grid.d != self.d {
            return Err(Error::Input(format!(
                "polynomial dimension {} does not match grid {grid}",
                self.d
            )));
        }
        if self.degree() <= grid.max_mode() {
            let field = self.to_field(grid)?;
            Ok(field.synthesize().into_iter().map(|c| c.re).collect())
        } else {
            Ok(grid.points().iter().map(|x| self.eval(x)).collect())
        }
    }

    /// Exact spectral representation, flagged real.
    pub fn to_field(&self, grid: &GridSpec) -> Result<SpectralField> {
        let mut coeffs = vec![Complex64::new(0.0, 0.0); grid.size()];
        for (k, amp) in self.to_exponential() {
            if k.max_abs() > grid.max_mode() {
                return Err(Error::Input(format!("mode {k} is not resolved by {grid}")));
            }
            let idx = grid.index_of(&k).expect("retained mode is on the grid");
            coeffs[idx] += amp;
        }
        SpectralField::from_coeffs(*grid, coeffs, true)
    }

    /// Real part of a field, restricted to `max_i |k_i| ≤ degree_cap`.
    pub fn project_field(field: &SpectralField, degree_cap: i32) -> Self {
        let grid = field.grid();
        let mut p = Self::zero(grid.d);
        for idx in 0..grid.size() {
            let k = grid.wavevector(idx);
            if !k.is_canonical() || k.max_abs() > degree_cap.min(grid.max_mode()) {
                continue;
            }
            let ck = field.coeffs()[idx];
            if k.is_zero() {
                p.add_term(&k, ck.re, 0.0);
                continue;
            }
            let cm = field.coeff(&k.neg());
            // coefficient of e^{i⟨k,x⟩} in Re f
            let re_k = 0.5 * (ck + cm.conj());
            p.add_term(&k, 2.0 * re_k.re, -2.0 * re_k.im);
        }
        p
    }

    /// Coefficients on `e^{i⟨k,x⟩}` over the full lattice.
    pub fn to_exponential(&self) -> BTreeMap<Wavevector, Complex64> {
        let mut out = BTreeMap::new();
        for (k, c, s) in self.terms() {
            if k.is_zero() {
                *out.entry(k.clone()).or_insert_with(Complex64::default) += c;
            } else {
                *out.entry(k.clone()).or_insert_with(Complex64::default) += Complex64::new(0.5 * c, -0.5 * s);
                *out.entry(k.neg()).or_insert_with(Complex64::default) += Complex64::new(0.5 * c, 0.5 * s);
            }
        }
        out
    }

    /// Real part of an exponential expansion.
    pub fn from_exponential(d: usize, coeffs: &BTreeMap<Wavevector, Complex64>) -> Self {
        let mut p = Self::zero(d);
        for (k, amp) in coeffs {
            if k.is_zero() {
                p.add_term(k, amp.re, 0.0);
            } else if k.is_canonical() {
                let mirror = coeffs.get(&k.neg()).copied().unwrap_or_default();
                let re_k = 0.5 * (amp + mirror.conj());
                p.add_term(k, 2.0 * re_k.re, -2.0 * re_k.im);
            } else if !coeffs.contains_key(&k.neg()) {
                let re_k = 0.5 * amp.conj();
                p.add_term(&k.neg(), 2.0 * re_k.re, -2.0 * re_k.im);
            }
        }
        p
    }

    /// Exact product via product-to-sum identities.
    pub fn product(&self, other: &Self) -> Self {
        assert_eq!(self.d, other.d, "dimension mismatch");
        let a = self.to_exponential();
        let b = other.to_exponential();
        let mut out: BTreeMap<Wavevector, Complex64> = BTreeMap::new();
        for (ka, va) in &a {
            for (kb, vb) in &b {
                *out.entry(ka.add(kb)).or_default() += va * vb;
            }
        }
        Self::from_exponential(self.d, &out)
    }

    /// `(∂_1 φ, …, ∂_d φ)`, term-wise.
    pub fn gradient(&self) -> Vec<Self> {
        (0..self.d)
            .map(|j| {
                let mut p = Self::zero(self.d);
                for (k, c, s) in self.terms() {
                    let kj = k.components()[j] as f64;
                    if kj != 0.0 {
                        // ∂_j (c cos + s sin) = s k_j cos − c k_j sin
                        p.add_term(k, s * kj, -c * kj);
                    }
                }
                p
            })
            .collect()
    }

    /// `Σ_j ∂_jφ · ∂_jψ`.
    pub fn gradient_dot(&self, other: &Self) -> Self {
        let ga = self.gradient();
        let gb = other.gradient();
        ga.iter()
            .zip(&gb)
            .fold(Self::zero(self.d), |acc, (a, b)| acc.add(&a.product(b)))
    }

    /// `B(φ) = Σ_j (∂_jφ)²`.
    pub fn b_operator(&self) -> Self {
        self.gradient_dot(self)
    }

    /// `L²` norm with the normalized measure.
    pub fn l2_norm(&self) -> f64 {
        self.terms()
            .map(|(k, c, s)| if k.is_zero() { c * c } else { 0.5 * (c * c + s * s) })
            .sum::<f64>()
            .sqrt()
    }

    /// Largest absolute coefficient.
    pub fn max_coeff(&self) -> f64 {
        self.terms().map(|(_, c, s)| c.abs().max(s.abs())).fold(0.0, f64::max)
    }

    /// Coordinates in the orthonormal `L²` dictionary: the zero mode as is,
    /// `cos`/`sin` coefficients scaled by `1/√2`.
    pub(crate) fn orthonormal_entries(&self) -> Vec<((Wavevector, Part), f64)> {
        let w = std::f64::consts::FRAC_1_SQRT_2;
        let mut out = Vec::with_capacity(2 * self.terms.len());
        for (k, c, s) in self.terms() {
            if k.is_zero() {
                out.push(((k.clone(), Part::Cos), c));
            } else {
                if c != 0.0 {
                    out.push(((k.clone(), Part::Cos), c * w));
                }
                if s != 0.0 {
                    out.push(((k.clone(), Part::Sin), s * w));
                }
            }
        }
        out
    }

    pub(crate) fn from_orthonormal_entries<'a>(
        d: usize,
        entries: impl IntoIterator<Item = (&'a (Wavevector, Part), f64)>,
    ) -> Self {
        let scale = std::f64::consts::SQRT_2;
        let mut p = Self::zero(d);
        for ((k, part), v) in entries {
            let v = if k.is_zero() { v } else { v * scale };
            match part {
                Part::Cos => p.add_term(k, v, 0.0),
                Part::Sin => p.add_term(k, 0.0, v),
            }
        }
        p
    }
}
