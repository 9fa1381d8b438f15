use std::collections::BTreeMap;

use nalgebra::{DMatrix, DVector};
use serde::{Deserialize, Serialize};

use super::frequency::FrequencySet;
use crate::error::{Error, Result};
use crate::linalg::{lstsq, rank, rref, RANK_TOLERANCE};
use crate::spectral::{Part, TrigPolynomial, Wavevector};

/// Absolute `L²` residual below which a polynomial counts as a member of a span.
pub const MEMBERSHIP_TOLERANCE: f64 = 1e-10;

/// Ordered coordinate system over the `(k, cos|sin)` atoms of a family of
/// polynomials: zero mode first, then by degree.
#[derive(Clone, Debug)]
pub(crate) struct Dictionary {
    d: usize,
    keys: Vec<(Wavevector, Part)>,
    index: BTreeMap<(Wavevector, Part), usize>,
}

impl Dictionary {
    pub fn covering<'a>(d: usize, polys: impl IntoIterator<Item = &'a TrigPolynomial>) -> Self {
        let mut keys: Vec<(Wavevector, Part)> = Vec::new();
        let mut seen = std::collections::BTreeSet::new();
        for p in polys {
            for (key, _) in p.orthonormal_entries() {
                if seen.insert(key.clone()) {
                    keys.push(key);
                }
            }
        }
        keys.sort_by(|a, b| (a.0.max_abs(), a.0.norm_sq(), &a.0, a.1).cmp(&(b.0.max_abs(), b.0.norm_sq(), &b.0, b.1)));
        let index = keys.iter().cloned().enumerate().map(|(i, k)| (k, i)).collect();
        Dictionary { d, keys, index }
    }

    pub fn len(&self) -> usize {
        self.keys.len()
    }

    /// Coordinates in the orthonormal `L²` frame; missing atoms are an error.
    pub fn vector(&self, p: &TrigPolynomial) -> Result<DVector<f64>> {
        let mut v = DVector::zeros(self.keys.len());
        for (key, val) in p.orthonormal_entries() {
            let i = self
                .index
                .get(&key)
                .ok_or_else(|| Error::Input(format!("mode {} outside the dictionary", key.0)))?;
            v[*i] = val;
        }
        Ok(v)
    }

    pub fn poly(&self, v: &DVector<f64>) -> TrigPolynomial {
        TrigPolynomial::from_orthonormal_entries(self.d, self.keys.iter().zip(v.iter().copied()))
    }

    /// Columns are the coordinate vectors of `polys`.
    pub fn matrix(&self, polys: &[TrigPolynomial]) -> Result<DMatrix<f64>> {
        let mut m = DMatrix::zeros(self.keys.len(), polys.len());
        for (j, p) in polys.iter().enumerate() {
            m.set_column(j, &self.vector(p)?);
        }
        Ok(m)
    }

    /// Raw coefficient of an atom (`√2 ×` orthonormal value off the zero mode).
    fn raw_scale(&self, i: usize) -> f64 {
        if self.keys[i].0.is_zero() {
            1.0
        } else {
            std::f64::consts::SQRT_2
        }
    }
}

/// Linearly independent real trigonometric polynomials spanning a subspace.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SubspaceBasis {
    d: usize,
    basis: Vec<TrigPolynomial>,
}

impl SubspaceBasis {
    /// Wraps an independent family; a rank-deficient family is rejected.
    pub fn new(d: usize, basis: Vec<TrigPolynomial>) -> Result<Self> {
        if basis.iter().any(|p| p.dim() != d) {
            return Err(Error::Input("basis elements differ in dimension".into()));
        }
        let dict = Dictionary::covering(d, &basis);
        let r = rank(&dict.matrix(&basis)?, RANK_TOLERANCE);
        if r != basis.len() {
            return Err(Error::Input(format!(
                "basis of {} elements has numerical rank {r}",
                basis.len()
            )));
        }
        Ok(SubspaceBasis { d, basis })
    }

    /// Reduced basis of `span(polys)`: rank by singular values, elements in
    /// reduced echelon form over the monomials `1, cos⟨k,x⟩, sin⟨k,x⟩`.
    pub fn span(d: usize, polys: &[TrigPolynomial]) -> Self {
        let dict = Dictionary::covering(d, polys);
        if dict.len() == 0 || polys.is_empty() {
            return SubspaceBasis { d, basis: Vec::new() };
        }
        let m = dict.matrix(polys).expect("dictionary covers its inputs");
        let r = rank(&m, RANK_TOLERANCE);
        // echelon over raw coefficients so pivots read as unit monomials
        let mut raw = m.transpose();
        for j in 0..raw.ncols() {
            let s = dict.raw_scale(j);
            raw.column_mut(j).scale_mut(s);
        }
        let (e, pivots) = rref(&raw, RANK_TOLERANCE);
        let basis: Vec<TrigPolynomial> = if pivots.len() == r {
            (0..r)
                .map(|i| {
                    let v = DVector::from_iterator(dict.len(), (0..dict.len()).map(|j| e[(i, j)] / dict.raw_scale(j)));
                    clean(dict.poly(&v))
                })
                .collect()
        } else {
            let svd = m.svd(true, false);
            let u = svd.u.expect("requested");
            let mut order: Vec<usize> = (0..svd.singular_values.len()).collect();
            order.sort_by(|&a, &b| svd.singular_values[b].total_cmp(&svd.singular_values[a]));
            order
                .into_iter()
                .take(r)
                .map(|i| clean(dict.poly(&u.column(i).into_owned())))
                .collect()
        };
        SubspaceBasis { d, basis }
    }

    /// `H(I) = span{1, cos⟨k,x⟩, sin⟨k,x⟩ : k ∈ I}`.
    pub fn from_frequencies(set: &FrequencySet) -> Self {
        let d = set.dim();
        let mut polys = vec![TrigPolynomial::constant(d, 1.0)];
        for k in set.vectors() {
            polys.push(TrigPolynomial::cos_mode(k, 1.0));
            polys.push(TrigPolynomial::sin_mode(k, 1.0));
        }
        Self::span(d, &polys)
    }

    pub fn dim(&self) -> usize {
        self.d
    }

    pub fn len(&self) -> usize {
        self.basis.len()
    }

    pub fn is_empty(&self) -> bool {
        self.basis.is_empty()
    }

    pub fn basis(&self) -> &[TrigPolynomial] {
        &self.basis
    }

    pub fn max_degree(&self) -> i32 {
        self.basis.iter().map(TrigPolynomial::degree).max().unwrap_or(0)
    }

    /// Frequencies (canonical representatives) present in the basis.
    pub fn frequencies(&self) -> Vec<Wavevector> {
        let mut ks: Vec<Wavevector> = self
            .basis
            .iter()
            .flat_map(|p| p.terms().map(|(k, _, _)| k.clone()).collect::<Vec<_>>())
            .collect();
        ks.sort_by(|a, b| (a.max_abs(), a.norm_sq(), a).cmp(&(b.max_abs(), b.norm_sq(), b)));
        ks.dedup();
        ks
    }

    /// `L²`-orthogonal projection of `p` onto the span, with the norm of the
    /// remainder.
    pub fn project(&self, p: &TrigPolynomial) -> (TrigPolynomial, f64) {
        if self.basis.is_empty() {
            return (TrigPolynomial::zero(self.d), p.l2_norm());
        }
        let dict = Dictionary::covering(self.d, self.basis.iter().chain(std::iter::once(p)));
        let a = dict.matrix(&self.basis).expect("covered");
        let b = dict.vector(p).expect("covered");
        let x = lstsq(&a, &b);
        let fit = &a * &x;
        let proj = clean(dict.poly(&fit));
        (proj, (b - fit).norm())
    }

    pub fn contains(&self, p: &TrigPolynomial, tol: f64) -> bool {
        self.project(p).1 < tol
    }

    /// Every element of `self` lies in `other`.
    pub fn is_subspace_of(&self, other: &SubspaceBasis, tol: f64) -> bool {
        self.basis.iter().all(|p| other.contains(p, tol))
    }
}

/// Drop coefficients at round-off level.
fn clean(p: TrigPolynomial) -> TrigPolynomial {
    let scale = p.max_coeff();
    let cut = 1e-13 * scale.max(1e-300);
    TrigPolynomial::from_terms(
        p.dim(),
        p.terms()
            .map(|(k, c, s)| {
                (
                    k.clone(),
                    if c.abs() < cut { 0.0 } else { c },
                    if s.abs() < cut { 0.0 } else { s },
                )
            })
            .collect::<Vec<_>>(),
    )
}

/// `1` and every `cos⟨k,x⟩`, `sin⟨k,x⟩` (`k ∈ K`) lie in `span{Q_j}`.
pub fn check_q_condition(q: &[TrigPolynomial], k: &FrequencySet) -> bool {
    if q.iter().any(|p| p.dim() != k.dim()) {
        return false;
    }
    let span = SubspaceBasis::span(k.dim(), q);
    SubspaceBasis::from_frequencies(k)
        .basis()
        .iter()
        .all(|p| span.contains(p, MEMBERSHIP_TOLERANCE))
}

/// `F(H) = H + span{∇θ_i·∇θ_j}` over pairs of basis elements.
pub fn grow(h: &SubspaceBasis) -> SubspaceBasis {
    let b = h.basis();
    let mut polys = b.to_vec();
    for i in 0..b.len() {
        for j in i..b.len() {
            polys.push(b[i].gradient_dot(&b[j]));
        }
    }
    SubspaceBasis::span(h.d, &polys)
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SaturationChain {
    pub levels: Vec<SubspaceBasis>,
}

impl SaturationChain {
    pub fn level(&self, j: usize) -> Option<&SubspaceBasis> {
        self.levels.get(j)
    }

    pub fn dimensions(&self) -> Vec<usize> {
        self.levels.iter().map(SubspaceBasis::len).collect()
    }

    /// Smallest level containing `θ`.
    pub fn level_of(&self, theta: &TrigPolynomial, tol: f64) -> Option<usize> {
        self.levels.iter().position(|h| h.contains(theta, tol))
    }
}

/// `H_0 = H`, `H_j = F(H_{j−1})` for `j ≤ N`.
pub fn saturation_chain(h0: &SubspaceBasis, n: usize) -> SaturationChain {
    let mut levels = vec![h0.clone()];
    for _ in 0..n {
        let next = grow(levels.last().expect("non-empty"));
        levels.push(next);
    }
    SaturationChain { levels }
}
