//! Fourier–Walsh calculus on the hypercube.
//!
//! Every `f: {−1,1}^n → R` has a unique multilinear ("tetrahedral")
//! representation `f(x) = Σ_S a_S ∏_{i∈S} x_i`. Derivatives are the classical
//! partial derivatives of that polynomial on `R^n`.
//!
//! **Symmetry factor.** [`TetrahedralPolynomial::derivative_tensor`] returns
//! true partial derivatives. For a homogeneous form
//! `f(x) = Σ_{i_1..i_d} a_{i_1..i_d} x_{i_1}⋯x_{i_d}` with a symmetric
//! tetrahedral coefficient tensor `A`, the top derivative is `d!·A`, and the
//! `k`-th derivative carries a factor `d!/(d−k)!` relative to contractions of
//! `A`. Callers comparing against bounds stated in terms of `A` must account
//! for that factor.

use std::collections::{BTreeMap, HashMap};

use crate::{Error, ExactLaw, Result, ENUMERATION_CAP};

/// Largest derivative order materialised by default (`n^k` memory).
pub const MAX_TENSOR_ORDER: usize = 4;

/// Unnormalised in-place Walsh–Hadamard butterfly.
///
/// After the call `values[S] = Σ_b v[b]·(−1)^{popcount(b & S)}`.
pub fn fwht(values: &mut [f64]) {
    let len = values.len();
    debug_assert!(len.is_power_of_two());
    let mut h = 1;
    while h < len {
        for block in values.chunks_mut(2 * h) {
            let (lo, hi) = block.split_at_mut(h);
            for (u, v) in lo.iter_mut().zip(hi.iter_mut()) {
                let (a, b) = (*u, *v);
                *u = a + b;
                *v = a - b;
            }
        }
        h *= 2;
    }
}

/// Sparse multilinear polynomial keyed by subset bitmask.
#[derive(Debug, Clone, PartialEq)]
pub struct TetrahedralPolynomial {
    n: usize,
    coeffs: BTreeMap<u64, f64>,
}

impl TetrahedralPolynomial {
    pub fn zero(n: usize) -> Self {
        Self {
            n,
            coeffs: BTreeMap::new(),
        }
    }

    /// Builds a polynomial from `(mask, coefficient)` pairs; repeated masks add up.
    pub fn from_terms<I>(n: usize, terms: I) -> Result<Self>
    where
        I: IntoIterator<Item = (u64, f64)>,
    {
        if n > 63 {
            return Err(Error::InvalidArgument(format!(
                "polynomials are limited to 63 variables, got {n}"
            )));
        }
        let mut p = Self::zero(n);
        for (mask, c) in terms {
            p.add_term(mask, c)?;
        }
        Ok(p)
    }

    pub fn add_term(&mut self, mask: u64, c: f64) -> Result<()> {
        if self.n < 64 && mask >> self.n != 0 {
            return Err(Error::IndexOutOfRange {
                index: 63 - mask.leading_zeros() as usize,
                len: self.n,
            });
        }
        let entry = self.coeffs.entry(mask).or_insert(0.0);
        *entry += c;
        if *entry == 0.0 {
            self.coeffs.remove(&mask);
        }
        Ok(())
    }

    /// Reduces `Σ_𝐢 a_𝐢 x_{i_1}⋯x_{i_d}` to its multilinear form on the
    /// cube (`x_i² = 1`), so repeated indices are allowed.
    pub fn from_tensor(tensor: &SymmetricTensor) -> Result<Self> {
        let (d, n) = (tensor.order(), tensor.dim());
        let mut terms: HashMap<u64, f64> = HashMap::new();
        for (flat, &a) in tensor.data().iter().enumerate() {
            if a == 0.0 {
                continue;
            }
            let mut mask = 0u64;
            let mut rest = flat;
            for _ in 0..d {
                mask ^= 1 << (rest % n);
                rest /= n;
            }
            *terms.entry(mask).or_insert(0.0) += a;
        }
        let mut sorted: Vec<_> = terms.into_iter().collect();
        sorted.sort_by_key(|&(m, _)| m);
        Self::from_terms(n, sorted)
    }

    /// Multilinear interpolation of a table over `{−1,1}^n` (fast transform).
    pub fn walsh_transform(values: &[f64]) -> Result<Self> {
        let len = values.len();
        if !len.is_power_of_two() {
            return Err(Error::NotPowerOfTwo(len));
        }
        let n = len.trailing_zeros() as usize;
        let mut buf = values.to_vec();
        fwht(&mut buf);
        let scale = 1.0 / len as f64;
        let terms = buf
            .into_iter()
            .enumerate()
            .filter(|&(_, c)| c != 0.0)
            .map(|(s, c)| (s as u64, c * scale));
        Self::from_terms(n, terms)
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn coeff(&self, mask: u64) -> f64 {
        self.coeffs.get(&mask).copied().unwrap_or(0.0)
    }

    pub fn terms(&self) -> impl Iterator<Item = (u64, f64)> + '_ {
        self.coeffs.iter().map(|(&m, &c)| (m, c))
    }

    pub fn num_terms(&self) -> usize {
        self.coeffs.len()
    }

    pub fn degree(&self) -> usize {
        self.coeffs.keys().map(|m| m.count_ones() as usize).max().unwrap_or(0)
    }

    pub fn is_constant(&self) -> bool {
        self.degree() == 0
    }

    pub fn scaled(&self, c: f64) -> Self {
        let mut p = Self::zero(self.n);
        for (&m, &a) in &self.coeffs {
            if a * c != 0.0 {
                p.coeffs.insert(m, a * c);
            }
        }
        p
    }

    /// Terms of exactly the given degree.
    pub fn homogeneous_part(&self, degree: usize) -> Self {
        Self {
            n: self.n,
            coeffs: self
                .coeffs
                .iter()
                .filter(|(m, _)| m.count_ones() as usize == degree)
                .map(|(&m, &c)| (m, c))
                .collect(),
        }
    }

    /// `Σ_S a_S ∏_{i∈S} x_i` at an arbitrary real point.
    pub fn evaluate(&self, x: &[f64]) -> Result<f64> {
        if x.len() != self.n {
            return Err(Error::DimensionMismatch {
                expected: self.n,
                got: x.len(),
            });
        }
        Ok(self.coeffs.iter().map(|(&m, &a)| a * monomial(m, x)).sum())
    }

    /// Value at a bit-encoded vertex of the cube.
    pub fn evaluate_bits(&self, bits: u64) -> f64 {
        self.coeffs
            .iter()
            .map(|(&m, &a)| {
                if (m & bits).count_ones().is_multiple_of(2) {
                    a
                } else {
                    -a
                }
            })
            .sum()
    }

    /// Values on the whole cube, indexed by bit-encoded configuration.
    pub fn to_table(&self) -> Result<Vec<f64>> {
        if self.n > ENUMERATION_CAP {
            return Err(Error::Capacity {
                what: "polynomial table",
                n: self.n,
                cap: ENUMERATION_CAP,
            });
        }
        let mut buf = vec![0.0; 1usize << self.n];
        for (&m, &a) in &self.coeffs {
            buf[m as usize] = a;
        }
        fwht(&mut buf);
        Ok(buf)
    }

    fn check_order(&self, k: usize, cap: usize) -> Result<()> {
        if k == 0 || k > self.n {
            return Err(Error::InvalidArgument(format!(
                "derivative order {k} outside 1..={}",
                self.n
            )));
        }
        if k > cap {
            return Err(Error::InvalidArgument(format!(
                "derivative order {k} exceeds the tensor order cap {cap}"
            )));
        }
        Ok(())
    }

    /// `∇^k f(x)` as a dense symmetric tensor.
    pub fn derivative_tensor(&self, k: usize, x: &[f64]) -> Result<SymmetricTensor> {
        self.derivative_tensor_capped(k, x, MAX_TENSOR_ORDER)
    }

    pub fn derivative_tensor_capped(&self, k: usize, x: &[f64], cap: usize) -> Result<SymmetricTensor> {
        self.check_order(k, cap)?;
        if x.len() != self.n {
            return Err(Error::DimensionMismatch {
                expected: self.n,
                got: x.len(),
            });
        }
        Ok(self.accumulate_derivative(k, |rest| monomial(rest, x)))
    }

    /// `E ∇^k f(X)` under an exact law.
    pub fn expected_derivative(&self, k: usize, law: &ExactLaw) -> Result<SymmetricTensor> {
        self.check_order(k, MAX_TENSOR_ORDER)?;
        if law.n() != self.n {
            return Err(Error::DimensionMismatch {
                expected: self.n,
                got: law.n(),
            });
        }
        let mut cache: HashMap<u64, f64> = HashMap::new();
        Ok(self.accumulate_derivative(k, |rest| *cache.entry(rest).or_insert_with(|| law.moment(rest))))
    }

    /// Shared kernel: for every term `a_S` and every `k`-subset `T ⊆ S`,
    /// adds `a_S · weight(S∖T)` at all orderings of `T`.
    fn accumulate_derivative<F>(&self, k: usize, mut weight: F) -> SymmetricTensor
    where
        F: FnMut(u64) -> f64,
    {
        let mut out = SymmetricTensor::zeros(k, self.n);
        let perms = permutations(k);
        let mut idx = vec![0usize; k];
        for (&mask, &a) in &self.coeffs {
            if (mask.count_ones() as usize) < k {
                continue;
            }
            let sites: Vec<usize> = bits_of(mask).collect();
            for_each_combination(sites.len(), k, |choice| {
                let mut sub = 0u64;
                for &c in choice {
                    sub |= 1 << sites[c];
                }
                let w = a * weight(mask & !sub);
                if w == 0.0 {
                    return;
                }
                for perm in &perms {
                    for (slot, &p) in idx.iter_mut().zip(perm) {
                        *slot = sites[choice[p]];
                    }
                    let flat = out.flat_index(&idx);
                    out.data[flat] += w;
                }
            });
        }
        out.tetrahedral = true;
        out
    }
}

#[inline]
fn monomial(mask: u64, x: &[f64]) -> f64 {
    bits_of(mask).map(|i| x[i]).product()
}

pub(crate) fn bits_of(mut mask: u64) -> impl Iterator<Item = usize> {
    std::iter::from_fn(move || {
        if mask == 0 {
            None
        } else {
            let i = mask.trailing_zeros() as usize;
            mask &= mask - 1;
            Some(i)
        }
    })
}

/// All permutations of `0..k` (lexicographic).
pub(crate) fn permutations(k: usize) -> Vec<Vec<usize>> {
    fn rec(prefix: &mut Vec<usize>, used: &mut [bool], out: &mut Vec<Vec<usize>>) {
        if prefix.len() == used.len() {
            out.push(prefix.clone());
            return;
        }
        for i in 0..used.len() {
            if !used[i] {
                used[i] = true;
                prefix.push(i);
                rec(prefix, used, out);
                prefix.pop();
                used[i] = false;
            }
        }
    }
    let mut out = Vec::new();
    rec(&mut Vec::with_capacity(k), &mut vec![false; k], &mut out);
    out
}

/// Calls `f` with each increasing `k`-combination of `0..len`.
pub(crate) fn for_each_combination<F: FnMut(&[usize])>(len: usize, k: usize, mut f: F) {
    if k > len {
        return;
    }
    let mut c: Vec<usize> = (0..k).collect();
    loop {
        f(&c);
        let mut i = k;
        loop {
            if i == 0 {
                return;
            }
            i -= 1;
            if c[i] != i + len - k {
                break;
            }
            if i == 0 {
                return;
            }
        }
        c[i] += 1;
        for j in (i + 1)..k {
            c[j] = c[j - 1] + 1;
        }
    }
}

/// Dense `d`-index array `a_{i_1..i_d}`, `i_l < n`, invariant under index
/// permutations. Flat layout: `i_1` is the most significant digit.
#[derive(Debug, Clone, PartialEq)]
pub struct SymmetricTensor {
    order: usize,
    n: usize,
    data: Vec<f64>,
    tetrahedral: bool,
}

impl SymmetricTensor {
    pub fn zeros(order: usize, n: usize) -> Self {
        Self {
            order,
            n,
            data: vec![0.0; n.pow(order as u32)],
            tetrahedral: false,
        }
    }

    /// Wraps dense data, checking symmetry to `tol` (absolute).
    pub fn from_dense(order: usize, n: usize, data: Vec<f64>, tol: f64) -> Result<Self> {
        if data.len() != n.pow(order as u32) {
            return Err(Error::DimensionMismatch {
                expected: n.pow(order as u32),
                got: data.len(),
            });
        }
        let t = Self {
            order,
            n,
            data,
            tetrahedral: false,
        };
        if !t.is_symmetric(tol) {
            return Err(Error::InvalidArgument(
                "tensor is not symmetric under index permutations".into(),
            ));
        }
        Ok(t)
    }

    /// Symmetrises arbitrary dense data by averaging over index permutations.
    pub fn symmetrize(order: usize, n: usize, data: &[f64]) -> Result<Self> {
        if data.len() != n.pow(order as u32) {
            return Err(Error::DimensionMismatch {
                expected: n.pow(order as u32),
                got: data.len(),
            });
        }
        let mut out = Self::zeros(order, n);
        let perms = permutations(order);
        let inv = 1.0 / perms.len() as f64;
        let mut idx = vec![0; order];
        let mut permuted = vec![0; order];
        for flat in 0..data.len() {
            out.unflatten(flat, &mut idx);
            let mut acc = 0.0;
            for p in &perms {
                for (slot, &q) in permuted.iter_mut().zip(p) {
                    *slot = idx[q];
                }
                acc += data[out.flat_index(&permuted)];
            }
            out.data[flat] = acc * inv;
        }
        Ok(out)
    }

    /// Symmetric matrix from row-major data.
    pub fn matrix(n: usize, data: Vec<f64>) -> Result<Self> {
        Self::from_dense(2, n, data, 0.0)
    }

    /// Builds a tensor from a function of sorted index tuples, replicated
    /// over all orderings.
    pub fn from_sorted_fn<F: FnMut(&[usize]) -> f64>(order: usize, n: usize, mut f: F) -> Self {
        let mut t = Self::zeros(order, n);
        let mut idx = vec![0; order];
        let mut sorted = vec![0; order];
        for flat in 0..t.data.len() {
            t.unflatten(flat, &mut idx);
            sorted.copy_from_slice(&idx);
            sorted.sort_unstable();
            t.data[flat] = f(&sorted);
        }
        t
    }

    pub fn order(&self) -> usize {
        self.order
    }

    pub fn dim(&self) -> usize {
        self.n
    }

    pub fn data(&self) -> &[f64] {
        &self.data
    }

    pub fn is_tetrahedral_flagged(&self) -> bool {
        self.tetrahedral
    }

    /// Marks the tensor as having vanishing generalized diagonals after
    /// checking that it does.
    pub fn assert_tetrahedral(mut self) -> Result<Self> {
        if !self.has_vanishing_diagonals(0.0) {
            return Err(Error::InvalidArgument(
                "tensor has a nonzero generalized-diagonal entry".into(),
            ));
        }
        self.tetrahedral = true;
        Ok(self)
    }

    pub fn flat_index(&self, idx: &[usize]) -> usize {
        idx.iter().fold(0, |acc, &i| acc * self.n + i)
    }

    pub fn unflatten(&self, mut flat: usize, idx: &mut [usize]) {
        for slot in idx.iter_mut().rev() {
            *slot = flat % self.n;
            flat /= self.n;
        }
    }

    pub fn get(&self, idx: &[usize]) -> f64 {
        self.data[self.flat_index(idx)]
    }

    /// Sets `value` at `idx` and every permutation of it.
    pub fn set_symmetric(&mut self, idx: &[usize], value: f64) {
        let mut permuted = vec![0; self.order];
        for p in permutations(self.order) {
            for (slot, &q) in permuted.iter_mut().zip(&p) {
                *slot = idx[q];
            }
            let flat = self.flat_index(&permuted);
            self.data[flat] = value;
        }
    }

    pub fn is_symmetric(&self, tol: f64) -> bool {
        let perms = permutations(self.order);
        let mut idx = vec![0; self.order];
        let mut permuted = vec![0; self.order];
        for flat in 0..self.data.len() {
            self.unflatten(flat, &mut idx);
            for p in &perms {
                for (slot, &q) in permuted.iter_mut().zip(p) {
                    *slot = idx[q];
                }
                if (self.data[self.flat_index(&permuted)] - self.data[flat]).abs() > tol {
                    return false;
                }
            }
        }
        true
    }

    pub fn has_vanishing_diagonals(&self, tol: f64) -> bool {
        let mut idx = vec![0; self.order];
        (0..self.data.len()).all(|flat| {
            self.unflatten(flat, &mut idx);
            let repeated = (0..self.order).any(|a| ((a + 1)..self.order).any(|b| idx[a] == idx[b]));
            !repeated || self.data[flat].abs() <= tol
        })
    }

    /// `√(Σ a_𝐢²)`.
    pub fn frobenius(&self) -> f64 {
        self.data.iter().map(|v| v * v).sum::<f64>().sqrt()
    }

    pub fn max_abs(&self) -> f64 {
        self.data.iter().fold(0.0, |m, v| m.max(v.abs()))
    }

    pub fn scaled(&self, c: f64) -> Self {
        Self {
            order: self.order,
            n: self.n,
            data: self.data.iter().map(|v| v * c).collect(),
            tetrahedral: self.tetrahedral,
        }
    }

    pub fn is_zero(&self) -> bool {
        self.data.iter().all(|&v| v == 0.0)
    }
}
