//! The Ising measure
//!
//! ```text
//! μ(σ) = Z⁻¹ exp( ½ Σ_{i,j} J_ij σ_i σ_j − Σ_i h_i σ_i ),   σ ∈ {−1,1}^n
//! ```
//!
//! with `J` symmetric and zero on the diagonal. Note the minus sign on the
//! field term: a positive `h_i` favours `σ_i = −1`.

use rand::Rng;
use rayon::prelude::*;

use crate::{Error, Result, ENUMERATION_CAP};

/// Coupling matrix and external field of an Ising model on `n` sites.
#[derive(Debug, Clone, PartialEq)]
pub struct IsingModel {
    n: usize,
    /// Row-major `n × n`.
    j: Vec<f64>,
    h: Vec<f64>,
}

/// Dobrushin diagnostics: `rho = 1 − max_i Σ_j |J_ij|` and `alpha = max_i |h_i|`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct DobrushinReport {
    pub rho: f64,
    pub max_row_sum: f64,
    pub alpha: f64,
    pub holds: bool,
}

impl IsingModel {
    /// Builds a model from a dense row-major coupling matrix.
    ///
    /// Asymmetric `J`, a nonzero diagonal and non-finite entries are
    /// rejected rather than repaired.
    pub fn new(n: usize, j: Vec<f64>, h: Vec<f64>) -> Result<Self> {
        if n == 0 {
            return Err(Error::InvalidModel("n must be positive".into()));
        }
        if j.len() != n * n {
            return Err(Error::DimensionMismatch {
                expected: n * n,
                got: j.len(),
            });
        }
        if h.len() != n {
            return Err(Error::DimensionMismatch {
                expected: n,
                got: h.len(),
            });
        }
        if let Some(pos) = j.iter().chain(h.iter()).position(|v| !v.is_finite()) {
            return Err(Error::InvalidModel(format!(
                "non-finite parameter at flat position {pos}"
            )));
        }
        for i in 0..n {
            if j[i * n + i] != 0.0 {
                return Err(Error::InvalidModel(format!(
                    "nonzero diagonal J[{i}][{i}] = {}",
                    j[i * n + i]
                )));
            }
            for k in (i + 1)..n {
                if j[i * n + k] != j[k * n + i] {
                    return Err(Error::InvalidModel(format!(
                        "asymmetric couplings J[{i}][{k}] = {} but J[{k}][{i}] = {}",
                        j[i * n + k],
                        j[k * n + i]
                    )));
                }
            }
        }
        Ok(Self { n, j, h })
    }

    /// Product measure with the given field.
    pub fn independent(h: Vec<f64>) -> Result<Self> {
        let n = h.len();
        Self::new(n, vec![0.0; n * n], h)
    }

    /// Open chain with `J_{i,i+1} = J_{i+1,i} = coupling`, zero field.
    pub fn chain(n: usize, coupling: f64) -> Result<Self> {
        let mut j = vec![0.0; n * n];
        for i in 0..n.saturating_sub(1) {
            j[i * n + i + 1] = coupling;
            j[(i + 1) * n + i] = coupling;
        }
        Self::new(n, j, vec![0.0; n])
    }

    /// Random dense couplings (uniform signs and magnitudes), rescaled so
    /// that the largest absolute row sum equals `row_mass`, with fields
    /// drawn uniformly from `[−field_bound, field_bound]`.
    pub fn random_dobrushin<R: Rng + ?Sized>(n: usize, row_mass: f64, field_bound: f64, rng: &mut R) -> Result<Self> {
        let mut j = vec![0.0; n * n];
        for i in 0..n {
            for k in (i + 1)..n {
                let v: f64 = rng.random_range(-1.0..1.0);
                j[i * n + k] = v;
                j[k * n + i] = v;
            }
        }
        let max_row = (0..n)
            .map(|i| j[i * n..(i + 1) * n].iter().map(|v| v.abs()).sum::<f64>())
            .fold(0.0, f64::max);
        if max_row > 0.0 {
            let scale = row_mass / max_row;
            j.iter_mut().for_each(|v| *v *= scale);
        }
        let h = (0..n)
            .map(|_| {
                if field_bound > 0.0 {
                    rng.random_range(-field_bound..=field_bound)
                } else {
                    0.0
                }
            })
            .collect();
        Self::new(n, j, h)
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn coupling(&self, i: usize, k: usize) -> f64 {
        self.j[i * self.n + k]
    }

    /// Row-major coupling matrix.
    pub fn couplings(&self) -> &[f64] {
        &self.j
    }

    pub fn field(&self) -> &[f64] {
        &self.h
    }

    /// Same model with sites relabelled: new site `a` is old site `perm[a]`.
    pub fn permuted(&self, perm: &[usize]) -> Result<Self> {
        let n = self.n;
        if perm.len() != n {
            return Err(Error::DimensionMismatch {
                expected: n,
                got: perm.len(),
            });
        }
        let mut j = vec![0.0; n * n];
        for a in 0..n {
            for b in 0..n {
                j[a * n + b] = self.j[perm[a] * n + perm[b]];
            }
        }
        let h = perm.iter().map(|&p| self.h[p]).collect();
        Self::new(n, j, h)
    }

    pub fn dobrushin(&self) -> DobrushinReport {
        let n = self.n;
        let max_row_sum = (0..n)
            .map(|i| self.j[i * n..(i + 1) * n].iter().map(|v| v.abs()).sum::<f64>())
            .fold(0.0, f64::max);
        let alpha = self.h.iter().map(|v| v.abs()).fold(0.0, f64::max);
        let rho = 1.0 - max_row_sum;
        DobrushinReport {
            rho,
            max_row_sum,
            alpha,
            holds: rho > 0.0,
        }
    }

    /// `m_i = Σ_j J_ij σ_j − h_i` for a bit-encoded configuration.
    pub(crate) fn local_field_bits(&self, i: usize, bits: u64) -> f64 {
        let row = &self.j[i * self.n..(i + 1) * self.n];
        let mut m = 0.0;
        for (k, &jik) in row.iter().enumerate() {
            if jik != 0.0 {
                m += jik * spin_of(bits, k);
            }
        }
        m - self.h[i]
    }

    /// `P(σ_i = +1 | σ_j, j ≠ i) = 1 / (1 + exp(−2 m_i))`.
    pub fn conditional_plus_prob(&self, i: usize, config: &SpinConfig) -> Result<f64> {
        if i >= self.n {
            return Err(Error::IndexOutOfRange { index: i, len: self.n });
        }
        if config.len() != self.n {
            return Err(Error::DimensionMismatch {
                expected: self.n,
                got: config.len(),
            });
        }
        let row = &self.j[i * self.n..(i + 1) * self.n];
        let m: f64 = row
            .iter()
            .zip(config.spins())
            .map(|(&jik, &s)| jik * f64::from(s))
            .sum::<f64>()
            - self.h[i];
        Ok(logistic(2.0 * m))
    }

    pub(crate) fn conditional_plus_prob_bits(&self, i: usize, bits: u64) -> f64 {
        logistic(2.0 * self.local_field_bits(i, bits))
    }

    /// Unnormalised log-weight. The pair sum is evaluated in a fixed order
    /// from products `σ_i σ_j`, so it is bitwise invariant under `σ → −σ`.
    pub(crate) fn log_weight_bits(&self, bits: u64) -> f64 {
        let n = self.n;
        let mut pair = 0.0;
        for i in 0..n {
            let si = spin_of(bits, i);
            for k in (i + 1)..n {
                let jik = self.j[i * n + k];
                if jik != 0.0 {
                    pair += jik * (si * spin_of(bits, k));
                }
            }
        }
        let field: f64 = (0..n).map(|i| self.h[i] * spin_of(bits, i)).sum();
        pair - field
    }

    /// Full probability table, using the default enumeration cap.
    pub fn exact_law(&self) -> Result<ExactLaw> {
        self.exact_law_capped(ENUMERATION_CAP)
    }

    pub fn exact_law_capped(&self, cap: usize) -> Result<ExactLaw> {
        let n = self.n;
        if n > cap || n >= 64 {
            return Err(Error::Capacity {
                what: "exact law",
                n,
                cap,
            });
        }
        let size = 1usize << n;
        let logw: Vec<f64> = (0..size as u64)
            .into_par_iter()
            .map(|b| self.log_weight_bits(b))
            .collect();
        let max = logw.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
        let mut probs: Vec<f64> = logw.iter().map(|&l| (l - max).exp()).collect();
        let z: f64 = probs.iter().sum();
        probs.iter_mut().for_each(|p| *p /= z);
        Ok(ExactLaw { n, probs })
    }
}

#[inline]
pub(crate) fn spin_of(bits: u64, i: usize) -> f64 {
    if bits >> i & 1 == 1 {
        -1.0
    } else {
        1.0
    }
}

#[inline]
pub(crate) fn logistic(x: f64) -> f64 {
    if x >= 0.0 {
        1.0 / (1.0 + (-x).exp())
    } else {
        let e = x.exp();
        e / (1.0 + e)
    }
}

/// A point of `{−1,1}^n`.
#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct SpinConfig(Vec<i8>);

impl SpinConfig {
    pub fn new(spins: Vec<i8>) -> Result<Self> {
        if let Some(pos) = spins.iter().position(|&s| s != 1 && s != -1) {
            return Err(Error::InvalidArgument(format!(
                "spin {pos} is {} (must be ±1)",
                spins[pos]
            )));
        }
        Ok(Self(spins))
    }

    pub fn all_plus(n: usize) -> Self {
        Self(vec![1; n])
    }

    pub fn from_bits(n: usize, bits: u64) -> Self {
        Self((0..n).map(|i| if bits >> i & 1 == 1 { -1 } else { 1 }).collect())
    }

    pub fn to_bits(&self) -> u64 {
        self.0
            .iter()
            .enumerate()
            .fold(0, |acc, (i, &s)| if s < 0 { acc | 1 << i } else { acc })
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }

    pub fn spins(&self) -> &[i8] {
        &self.0
    }

    pub fn flip(&mut self, i: usize) {
        self.0[i] = -self.0[i];
    }

    pub fn as_reals(&self) -> Vec<f64> {
        self.0.iter().map(|&s| f64::from(s)).collect()
    }
}

/// The law of an Ising model as an explicit table over `{−1,1}^n`.
#[derive(Debug, Clone, PartialEq)]
pub struct ExactLaw {
    n: usize,
    probs: Vec<f64>,
}

impl ExactLaw {
    /// Wraps a probability table, checking shape, sign and normalisation.
    pub fn from_probs(n: usize, probs: Vec<f64>) -> Result<Self> {
        if n >= 64 || probs.len() != 1usize << n {
            return Err(Error::DimensionMismatch {
                expected: 1usize.checked_shl(n as u32).unwrap_or(0),
                got: probs.len(),
            });
        }
        if let Some(i) = probs.iter().position(|&p| !(p >= 0.0)) {
            return Err(Error::NegativeEntry {
                index: i,
                value: probs[i],
            });
        }
        let total: f64 = probs.iter().sum();
        if (total - 1.0).abs() > 1e-12 {
            return Err(Error::InvalidArgument(format!("probabilities sum to {total}")));
        }
        Ok(Self { n, probs })
    }

    /// Uniform law on `{−1,1}^n`.
    pub fn uniform(n: usize) -> Self {
        let size = 1usize << n;
        Self {
            n,
            probs: vec![1.0 / size as f64; size],
        }
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn probs(&self) -> &[f64] {
        &self.probs
    }

    pub fn prob(&self, config: &SpinConfig) -> f64 {
        self.probs[config.to_bits() as usize]
    }

    /// `E ∏_{i∈S} X_i` for `S` given as a bitmask; `1` for the empty set.
    ///
    /// Each configuration is paired with its global flip, so odd moments of
    /// a flip-symmetric law come out exactly zero.
    pub fn moment(&self, mask: u64) -> f64 {
        let n = self.n;
        let full = (1u64 << n) - 1;
        let odd = mask.count_ones() % 2 == 1;
        let half = 1u64 << (n - 1);
        let mut acc = 0.0;
        for b in 0..half {
            let p = self.probs[b as usize];
            let q = self.probs[(b ^ full) as usize];
            let pair = if odd { p - q } else { p + q };
            if (b & mask).count_ones().is_multiple_of(2) {
                acc += pair;
            } else {
                acc -= pair;
            }
        }
        acc
    }

    /// Same as [`moment`](Self::moment) for an explicit list of sites.
    pub fn moment_of(&self, sites: &[usize]) -> Result<f64> {
        let mut mask = 0u64;
        for &s in sites {
            if s >= self.n {
                return Err(Error::IndexOutOfRange { index: s, len: self.n });
            }
            mask |= 1 << s;
        }
        Ok(self.moment(mask))
    }

    /// `E f(X)` for a function given as a table indexed like the law.
    pub fn expectation(&self, table: &[f64]) -> f64 {
        self.probs.iter().zip(table).map(|(p, v)| p * v).sum()
    }

    pub fn variance(&self, table: &[f64]) -> f64 {
        let mean = self.expectation(table);
        self.probs
            .iter()
            .zip(table)
            .map(|(p, v)| p * (v - mean) * (v - mean))
            .sum()
    }

    /// `P(σ_i = +1 | rest)` obtained by marginalising the table.
    pub fn conditional_plus_prob(&self, i: usize, bits: u64) -> f64 {
        let plus = self.probs[(bits & !(1 << i)) as usize];
        let minus = self.probs[(bits | 1 << i) as usize];
        plus / (plus + minus)
    }
}
