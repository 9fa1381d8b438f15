use std::collections::BTreeSet;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::spectral::Wavevector;

/// Finite set of distinct nonzero integer frequencies in `Z^d`.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(try_from = "FrequencySetRepr", into = "FrequencySetRepr")]
pub struct FrequencySet {
    d: usize,
    vectors: Vec<Wavevector>,
}

#[derive(Serialize, Deserialize)]
struct FrequencySetRepr {
    d: usize,
    vectors: Vec<Vec<i32>>,
}

impl TryFrom<FrequencySetRepr> for FrequencySet {
    type Error = Error;
    fn try_from(r: FrequencySetRepr) -> Result<Self> {
        FrequencySet::new(r.d, r.vectors.into_iter().map(Wavevector).collect())
    }
}

impl From<FrequencySet> for FrequencySetRepr {
    fn from(f: FrequencySet) -> Self {
        FrequencySetRepr {
            d: f.d,
            vectors: f.vectors.into_iter().map(|k| k.0).collect(),
        }
    }
}

impl FrequencySet {
    pub fn new(d: usize, vectors: Vec<Wavevector>) -> Result<Self> {
        if d == 0 {
            return Err(Error::Input("dimension must be positive".into()));
        }
        let mut seen = BTreeSet::new();
        for k in &vectors {
            if k.dim() != d {
                return Err(Error::Input(format!("frequency {k} is not in Z^{d}")));
            }
            if k.is_zero() {
                return Err(Error::Input("frequency sets exclude the zero vector".into()));
            }
            if !seen.insert(k.clone()) {
                return Err(Error::Input(format!("duplicate frequency {k}")));
            }
        }
        Ok(FrequencySet { d, vectors })
    }

    /// `e_1, …, e_{d−1}` and `(1, …, 1)`.
    pub fn standard(d: usize) -> Self {
        let mut vectors: Vec<Wavevector> = (0..d.saturating_sub(1)).map(|i| Wavevector::unit(d, i)).collect();
        vectors.push(Wavevector::new(vec![1; d]));
        FrequencySet { d, vectors }
    }

    pub fn dim(&self) -> usize {
        self.d
    }

    pub fn vectors(&self) -> &[Wavevector] {
        &self.vectors
    }

    pub fn len(&self) -> usize {
        self.vectors.len()
    }

    pub fn is_empty(&self) -> bool {
        self.vectors.is_empty()
    }
}

fn ext_gcd(a: i128, b: i128) -> (i128, i128, i128) {
    let (mut r0, mut r1, mut s0, mut s1, mut t0, mut t1) = (a, b, 1i128, 0i128, 0i128, 1i128);
    while r1 != 0 {
        let q = r0.div_euclid(r1);
        (r0, r1) = (r1, r0 - q * r1);
        (s0, s1) = (s1, s0 - q * s1);
        (t0, t1) = (t1, t0 - q * t1);
    }
    (r0, s0, t0)
}

/// Whether the integer combinations of `I` exhaust `Z^d`. Exact
/// unimodular row reduction to echelon form; the lattice is `Z^d` iff the
/// echelon form has `d` pivots, all `±1`.
pub fn is_generator(set: &FrequencySet) -> bool {
    let d = set.d;
    let mut rows: Vec<Vec<i128>> = set
        .vectors
        .iter()
        .map(|k| k.components().iter().map(|&c| c as i128).collect())
        .collect();
    let mut top = 0;
    for col in 0..d {
        for r in top + 1..rows.len() {
            let (a, b) = (rows[top][col], rows[r][col]);
            if b == 0 {
                continue;
            }
            let (g, x, y) = ext_gcd(a, b);
            let (ag, bg) = (a / g, b / g);
            let (p, q) = (rows[top].clone(), rows[r].clone());
            for j in 0..d {
                rows[top][j] = x * p[j] + y * q[j];
                rows[r][j] = bg * p[j] - ag * q[j];
            }
        }
        if top >= rows.len() || rows[top][col] == 0 {
            return false;
        }
        if rows[top][col].abs() != 1 {
            return false;
        }
        top += 1;
    }
    true
}

/// Chain `n_1 … n_σ` joining `l` to `m`, if one exists.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct PairWitness {
    pub l: Wavevector,
    pub m: Wavevector,
    pub chain: Option<Vec<Wavevector>>,
}

impl PairWitness {
    /// Recheck every inner product along the chain.
    pub fn verify(&self) -> bool {
        match &self.chain {
            None => false,
            Some(c) => {
                let mut prev = &self.l;
                for n in c {
                    if prev.dot(n) == 0 {
                        return false;
                    }
                    prev = n;
                }
                !c.is_empty() && prev.dot(&self.m) != 0
            }
        }
    }
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct ChainReport {
    pub sigma: u32,
    pub holds: bool,
    pub pairs: Vec<PairWitness>,
}

/// For every ordered pair `(l, m)` search exhaustively for `n_1 … n_σ ∈ I`
/// with `l·n_1 ≠ 0`, `n_j·n_{j+1} ≠ 0` and `n_σ·m ≠ 0`.
pub fn chain_condition(set: &FrequencySet, sigma: u32) -> ChainReport {
    let v = &set.vectors;
    let n = v.len();
    let adj: Vec<Vec<bool>> = (0..n).map(|i| (0..n).map(|j| v[i].dot(&v[j]) != 0).collect()).collect();
    let mut pairs = Vec::with_capacity(n * n);
    for li in 0..n {
        // layer[s][j]: predecessor of n_{s+1} = v[j] on some valid prefix
        let mut layers: Vec<Vec<Option<usize>>> = Vec::with_capacity(sigma as usize);
        layers.push((0..n).map(|j| adj[li][j].then_some(li)).collect());
        for _ in 1..sigma {
            let prev = layers.last().expect("non-empty");
            let next = (0..n)
                .map(|j| (0..n).find(|&i| prev[i].is_some() && adj[i][j]))
                .collect();
            layers.push(next);
        }
        for mi in 0..n {
            let last = layers.last().expect("σ ≥ 1");
            let chain = (0..n).find(|&j| last[j].is_some() && adj[j][mi]).map(|end| {
                let mut idx = vec![end];
                for s in (1..layers.len()).rev() {
                    let cur = *idx.last().expect("non-empty");
                    idx.push(layers[s][cur].expect("reachable"));
                }
                idx.reverse();
                idx.into_iter().map(|i| v[i].clone()).collect()
            });
            pairs.push(PairWitness {
                l: v[li].clone(),
                m: v[mi].clone(),
                chain,
            });
        }
    }
    ChainReport {
        sigma,
        holds: sigma >= 1 && pairs.iter().all(|p| p.chain.is_some()),
        pairs,
    }
}

pub fn is_saturating(set: &FrequencySet, sigma: u32) -> bool {
    is_generator(set) && chain_condition(set, sigma).holds
}
