//! Partition norms of tensors and interpolation norms between `ℓ1` and `ℓ2`.
//!
//! For a partition `𝓘 = {I_1, …, I_k}` of `{1..d}`,
//!
//! ```text
//! ‖A‖_𝓘 = sup { Σ_𝐢 a_𝐢 ∏_l x^(l)_{𝐢_{I_l}} : ‖x^(l)‖_2 ≤ 1 }.
//! ```
//!
//! The one-block norm is the Frobenius norm and, for matrices, `{1}{2}` is
//! the spectral norm; both are computed in closed form. Every other case is
//! a non-convex maximisation, handled by alternating maximisation with
//! restarts. Results always carry the witness vectors, so a reported value
//! is a certified lower bound on the true norm.

use std::fmt;

use nalgebra::{DMatrix, DVector};
use rand::Rng;
use rand_distr::StandardNormal;
use rayon::prelude::*;

use crate::boolfn::SymmetricTensor;
use crate::rng::stream;
use crate::{Error, Result};

/// A set partition of `{0..d}` (displayed 1-based), blocks sorted by least element.
#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct Partition {
    d: usize,
    blocks: Vec<Vec<usize>>,
}

impl Partition {
    /// Validates and canonicalises 0-based blocks.
    pub fn new(d: usize, mut blocks: Vec<Vec<usize>>) -> Result<Self> {
        let mut seen = vec![false; d];
        for block in &mut blocks {
            if block.is_empty() {
                return Err(Error::InvalidPartition("empty block".into()));
            }
            block.sort_unstable();
            for &e in block.iter() {
                if e >= d {
                    return Err(Error::InvalidPartition(format!("element {} outside 1..={d}", e + 1)));
                }
                if seen[e] {
                    return Err(Error::InvalidPartition(format!("element {} appears twice", e + 1)));
                }
                seen[e] = true;
            }
        }
        if let Some(missing) = seen.iter().position(|s| !s) {
            return Err(Error::InvalidPartition(format!("element {} not covered", missing + 1)));
        }
        blocks.sort_by_key(|b| b[0]);
        Ok(Self { d, blocks })
    }

    /// Parses `"{1,2}{3}"` (1-based, whitespace ignored).
    pub fn parse(spec: &str) -> Result<Self> {
        let cleaned: String = spec.chars().filter(|c| !c.is_whitespace()).collect();
        let mut blocks = Vec::new();
        let mut rest = cleaned.as_str();
        while !rest.is_empty() {
            let inner = rest
                .strip_prefix('{')
                .and_then(|r| r.split_once('}'))
                .ok_or_else(|| Error::InvalidPartition(format!("cannot parse {spec:?}")))?;
            let block = inner
                .0
                .split(',')
                .map(|tok| match tok.parse::<usize>() {
                    Ok(v) if v >= 1 => Ok(v - 1),
                    _ => Err(Error::InvalidPartition(format!("bad element {tok:?}"))),
                })
                .collect::<Result<Vec<_>>>()?;
            blocks.push(block);
            rest = inner.1;
        }
        let d = blocks.iter().map(|b| b.len()).sum();
        Self::new(d, blocks)
    }

    pub fn single_block(d: usize) -> Self {
        Self {
            d,
            blocks: vec![(0..d).collect()],
        }
    }

    pub fn singletons(d: usize) -> Self {
        Self {
            d,
            blocks: (0..d).map(|i| vec![i]).collect(),
        }
    }

    /// All partitions of `{0..d}` (Bell number many), via restricted growth strings.
    pub fn all(d: usize) -> Vec<Self> {
        fn rec(pos: usize, d: usize, labels: &mut Vec<usize>, out: &mut Vec<Partition>) {
            if pos == d {
                let k = labels.iter().max().map_or(0, |m| m + 1);
                let mut blocks = vec![Vec::new(); k];
                for (e, &l) in labels.iter().enumerate() {
                    blocks[l].push(e);
                }
                out.push(Partition { d, blocks });
                return;
            }
            let next = labels.iter().max().map_or(0, |m| m + 1);
            for l in 0..=next {
                labels.push(l);
                rec(pos + 1, d, labels, out);
                labels.pop();
            }
        }
        let mut out = Vec::new();
        if d > 0 {
            rec(0, d, &mut Vec::with_capacity(d), &mut out);
        }
        out
    }

    pub fn d(&self) -> usize {
        self.d
    }

    pub fn blocks(&self) -> &[Vec<usize>] {
        &self.blocks
    }

    /// Number of blocks `|𝓘|`.
    pub fn len(&self) -> usize {
        self.blocks.len()
    }

    pub fn is_empty(&self) -> bool {
        self.blocks.is_empty()
    }

    /// True when every block of `self` lies inside a block of `coarser`.
    pub fn refines(&self, coarser: &Partition) -> bool {
        self.d == coarser.d
            && self
                .blocks
                .iter()
                .all(|b| coarser.blocks.iter().any(|c| b.iter().all(|e| c.contains(e))))
    }
}

impl fmt::Display for Partition {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        for block in &self.blocks {
            let parts: Vec<String> = block.iter().map(|e| (e + 1).to_string()).collect();
            write!(f, "{{{}}}", parts.join(","))?;
        }
        Ok(())
    }
}

/// A certified lower bound together with the vectors achieving it.
#[derive(Debug, Clone, PartialEq)]
pub struct NormResult {
    pub value: f64,
    /// One vector per block; block `I` is indexed by `𝐢_I` with the
    /// smallest element of `I` as the most significant digit.
    pub witness: Vec<Vec<f64>>,
    pub converged: bool,
    pub restarts_used: usize,
    /// `true` when `value` is the exact norm (closed-form cases).
    pub exact: bool,
}

/// Tuning for alternating maximisation.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct NormOptions {
    pub restarts: usize,
    pub tol: f64,
    /// Successive sub-tolerance sweeps required to stop.
    pub patience: usize,
    pub max_sweeps: usize,
    pub seed: u64,
}

impl Default for NormOptions {
    fn default() -> Self {
        Self {
            restarts: 64,
            tol: 1e-12,
            patience: 3,
            max_sweeps: 10_000,
            seed: 0x5eed,
        }
    }
}

/// Nonzero tensor entries with their per-block vector offsets.
struct FormLayout {
    dims: Vec<usize>,
    entries: Vec<(f64, Vec<usize>)>,
}

impl FormLayout {
    fn new(a: &SymmetricTensor, part: &Partition) -> Self {
        let n = a.dim();
        let dims = part.blocks().iter().map(|b| n.pow(b.len() as u32)).collect();
        let mut idx = vec![0; a.order()];
        let entries = a
            .data()
            .iter()
            .enumerate()
            .filter(|(_, &v)| v != 0.0)
            .map(|(flat, &v)| {
                a.unflatten(flat, &mut idx);
                let offs = part
                    .blocks()
                    .iter()
                    .map(|b| b.iter().fold(0, |acc, &e| acc * n + idx[e]))
                    .collect();
                (v, offs)
            })
            .collect();
        Self { dims, entries }
    }

    fn evaluate(&self, x: &[Vec<f64>]) -> f64 {
        self.entries
            .iter()
            .map(|(v, offs)| v * offs.iter().zip(x).map(|(&o, xl)| xl[o]).product::<f64>())
            .sum()
    }

    /// Contraction of the form against every block except `free`.
    fn contract(&self, x: &[Vec<f64>], free: usize, out: &mut [f64]) {
        out.iter_mut().for_each(|v| *v = 0.0);
        for (v, offs) in &self.entries {
            let mut w = *v;
            for (l, (&o, xl)) in offs.iter().zip(x).enumerate() {
                if l != free {
                    w *= xl[o];
                }
            }
            out[offs[free]] += w;
        }
    }
}

fn check_partition(a: &SymmetricTensor, part: &Partition) -> Result<()> {
    if part.d() != a.order() {
        return Err(Error::InvalidPartition(format!(
            "partition of {{1..{}}} used with a tensor of order {}",
            part.d(),
            a.order()
        )));
    }
    Ok(())
}

/// Evaluates the multilinear form `Σ_𝐢 a_𝐢 ∏_l x^(l)_{𝐢_{I_l}}`.
pub fn evaluate_form(a: &SymmetricTensor, part: &Partition, witness: &[Vec<f64>]) -> Result<f64> {
    check_partition(a, part)?;
    let layout = FormLayout::new(a, part);
    check_witness_shape(&layout, witness)?;
    Ok(layout.evaluate(witness))
}

fn check_witness_shape(layout: &FormLayout, witness: &[Vec<f64>]) -> Result<()> {
    if witness.len() != layout.dims.len() {
        return Err(Error::DimensionMismatch {
            expected: layout.dims.len(),
            got: witness.len(),
        });
    }
    for (w, &dim) in witness.iter().zip(&layout.dims) {
        if w.len() != dim {
            return Err(Error::DimensionMismatch {
                expected: dim,
                got: w.len(),
            });
        }
    }
    Ok(())
}

fn l2(v: &[f64]) -> f64 {
    v.iter().map(|x| x * x).sum::<f64>().sqrt()
}

/// `‖A‖_𝓘` with default options.
pub fn partition_norm(a: &SymmetricTensor, part: &Partition) -> Result<NormResult> {
    partition_norm_with(a, part, &NormOptions::default(), &[])
}

/// `‖A‖_𝓘`, seeding the search with extra starting witnesses (for example
/// embeddings of witnesses of finer partitions).
pub fn partition_norm_with(
    a: &SymmetricTensor,
    part: &Partition,
    opts: &NormOptions,
    starts: &[Vec<Vec<f64>>],
) -> Result<NormResult> {
    check_partition(a, part)?;
    let n = a.dim();
    if part.len() == 1 {
        let value = a.frobenius();
        let witness = if value > 0.0 {
            a.data().iter().map(|v| v / value).collect()
        } else {
            vec![0.0; a.data().len()]
        };
        return Ok(NormResult {
            value,
            witness: vec![witness],
            converged: true,
            restarts_used: 0,
            exact: true,
        });
    }
    if a.order() == 2 {
        return spectral_norm(a.data(), n);
    }

    let layout = FormLayout::new(a, part);
    for s in starts {
        check_witness_shape(&layout, s)?;
    }
    let total = starts.len() + opts.restarts;
    let runs: Vec<(f64, Vec<Vec<f64>>, bool)> = (0..total)
        .into_par_iter()
        .map(|r| {
            let init = if r < starts.len() {
                starts[r].clone()
            } else {
                let mut rng = stream(opts.seed, r as u64);
                layout.dims.iter().map(|&dim| random_unit(dim, &mut rng)).collect()
            };
            alternate(&layout, init, opts)
        })
        .collect();
    let mut best = 0;
    for (i, run) in runs.iter().enumerate() {
        if run.0 > runs[best].0 {
            best = i;
        }
    }
    let (_, witness, converged) = runs.into_iter().nth(best).expect("at least one run");
    let value = layout.evaluate(&witness);
    Ok(NormResult {
        value,
        witness,
        converged,
        restarts_used: total,
        exact: false,
    })
}

fn random_unit<R: Rng + ?Sized>(dim: usize, rng: &mut R) -> Vec<f64> {
    loop {
        let v: Vec<f64> = (0..dim).map(|_| rng.sample(StandardNormal)).collect();
        let norm = l2(&v);
        if norm > 0.0 {
            return v.into_iter().map(|x| x / norm).collect();
        }
    }
}

/// Block-coordinate ascent. Each block update replaces `x^(l)` by the
/// normalised contraction, which is the exact maximiser over that block.
fn alternate(layout: &FormLayout, mut x: Vec<Vec<f64>>, opts: &NormOptions) -> (f64, Vec<Vec<f64>>, bool) {
    // Normalise (only shrink) the starting vectors so they are feasible.
    for v in &mut x {
        let norm = l2(v);
        if norm > 1.0 {
            v.iter_mut().for_each(|e| *e /= norm);
        }
    }
    let mut value = layout.evaluate(&x);
    if value < 0.0 {
        x[0].iter_mut().for_each(|e| *e = -*e);
        value = -value;
    }
    let mut buf: Vec<Vec<f64>> = layout.dims.iter().map(|&d| vec![0.0; d]).collect();
    let mut quiet = 0;
    for _ in 0..opts.max_sweeps {
        let mut current = value;
        for l in 0..x.len() {
            layout.contract(&x, l, &mut buf[l]);
            let norm = l2(&buf[l]);
            if norm > 0.0 {
                for (dst, src) in x[l].iter_mut().zip(&buf[l]) {
                    *dst = src / norm;
                }
                current = norm;
            }
        }
        let gain = current - value;
        value = value.max(current);
        if gain <= opts.tol * value.max(1.0) {
            quiet += 1;
            if quiet >= opts.patience {
                return (value, x, true);
            }
        } else {
            quiet = 0;
        }
    }
    (value, x, false)
}

/// Exact `‖A‖_{{1}{2}}` via SVD.
fn spectral_norm(data: &[f64], n: usize) -> Result<NormResult> {
    let m = DMatrix::from_row_slice(n, n, data);
    let svd = m.svd(true, true);
    let (k, &sigma) = svd
        .singular_values
        .iter()
        .enumerate()
        .fold((0, &0.0), |best, (i, s)| if *s > *best.1 { (i, s) } else { best });
    let u = svd.u.as_ref().expect("requested u");
    let vt = svd.v_t.as_ref().expect("requested v_t");
    let x: Vec<f64> = u.column(k).iter().copied().collect();
    let y: Vec<f64> = vt.row(k).iter().copied().collect();
    Ok(NormResult {
        value: sigma,
        witness: vec![x, y],
        converged: true,
        restarts_used: 0,
        exact: true,
    })
}

/// Embeds a witness for a finer partition into a coarser one by taking
/// outer products of the fine block vectors inside each coarse block.
pub fn embed_witness(n: usize, fine: &Partition, witness: &[Vec<f64>], coarse: &Partition) -> Result<Vec<Vec<f64>>> {
    if !fine.refines(coarse) {
        return Err(Error::InvalidPartition(format!("{fine} does not refine {coarse}")));
    }
    let mut out = Vec::with_capacity(coarse.len());
    for block in coarse.blocks() {
        let size = n.pow(block.len() as u32);
        let members: Vec<usize> = fine
            .blocks()
            .iter()
            .enumerate()
            .filter(|(_, fb)| block.contains(&fb[0]))
            .map(|(i, _)| i)
            .collect();
        let mut v = vec![0.0; size];
        let mut digits = vec![0usize; block.len()];
        for (flat, slot) in v.iter_mut().enumerate() {
            let mut rest = flat;
            for d in digits.iter_mut().rev() {
                *d = rest % n;
                rest /= n;
            }
            let mut prod = 1.0;
            for &fi in &members {
                let off = fine.blocks()[fi].iter().fold(0, |acc, e| {
                    let pos = block.iter().position(|b| b == e).expect("member of block");
                    acc * n + digits[pos]
                });
                prod *= witness[fi][off];
            }
            *slot = prod;
        }
        out.push(v);
    }
    Ok(out)
}

/// All partition norms of `a`, from finest to coarsest, with every
/// coarser search seeded by the embedded witnesses of the finer ones.
/// The returned values are therefore monotone under refinement.
pub fn all_partition_norms(a: &SymmetricTensor, opts: &NormOptions) -> Result<Vec<(Partition, NormResult)>> {
    let mut parts = Partition::all(a.order());
    parts.sort_by_key(|p| std::cmp::Reverse(p.len()));
    let mut done: Vec<(Partition, NormResult)> = Vec::with_capacity(parts.len());
    for part in parts {
        let starts: Vec<Vec<Vec<f64>>> = done
            .iter()
            .filter(|(fine, _)| fine.refines(&part))
            .map(|(fine, res)| embed_witness(a.dim(), fine, &res.witness, &part))
            .collect::<Result<_>>()?;
        let res = partition_norm_with(a, &part, opts, &starts)?;
        done.push((part, res));
    }
    Ok(done)
}

/// `‖x‖_{{1},p} = sup { ⟨x, y⟩ : |y|_2 ≤ √p, |y|_∞ ≤ 1 }`.
pub fn latala_vector_norm(x: &[f64], p: f64) -> Result<f64> {
    latala_maximizer(x, p).map(|(v, _)| v)
}

/// Exact value and maximiser of the ball–box support function.
///
/// The maximiser is `y_i = sign(x_i)·min(1, λ|x_i|)`; scanning the sorted
/// breakpoints finds the number `k` of saturated coordinates and
/// `λ = √((p − k) / Σ_{i>k} (x_i↓)²)`.
pub fn latala_maximizer(x: &[f64], p: f64) -> Result<(f64, Vec<f64>)> {
    if !(p > 0.0) || !p.is_finite() {
        return Err(Error::InvalidArgument(format!(
            "p must be positive and finite, got {p}"
        )));
    }
    let abs: Vec<f64> = x.iter().map(|v| v.abs()).collect();
    let nnz = abs.iter().filter(|&&v| v > 0.0).count();
    if nnz as f64 <= p {
        let y = x.iter().map(|&v| if v == 0.0 { 0.0 } else { v.signum() }).collect();
        return Ok((abs.iter().sum(), y));
    }
    let mut order: Vec<usize> = (0..x.len()).collect();
    order.sort_by(|&a, &b| abs[b].total_cmp(&abs[a]));
    let sorted: Vec<f64> = order.iter().map(|&i| abs[i]).collect();
    let mut tail = vec![0.0; sorted.len() + 1];
    for i in (0..sorted.len()).rev() {
        tail[i] = tail[i + 1] + sorted[i] * sorted[i];
    }
    let kmax = (p.floor() as usize).min(nnz - 1);
    let candidate = |k: usize| -> (f64, f64) {
        let lam = ((p - k as f64) / tail[k]).sqrt();
        let head: f64 = sorted[..k].iter().sum();
        (lam, head + (p - k as f64).sqrt() * tail[k].sqrt())
    };
    let mut chosen = None;
    for k in 0..=kmax {
        if p - k as f64 <= 0.0 {
            break;
        }
        let (lam, _) = candidate(k);
        let below = lam * sorted[k] <= 1.0 + 1e-12;
        let above = k == 0 || lam * sorted[k - 1] >= 1.0 - 1e-12;
        if below && above {
            chosen = Some(k);
            break;
        }
    }
    let k = match chosen {
        Some(k) => k,
        // Rounding fallback: best clipped (hence feasible) candidate.
        None => (0..=kmax)
            .filter(|&k| p - k as f64 > 0.0)
            .max_by(|&a, &b| clipped_value(&sorted, candidate(a).0).total_cmp(&clipped_value(&sorted, candidate(b).0)))
            .unwrap_or(0),
    };
    let (lam, value) = candidate(k);
    let mut y = vec![0.0; x.len()];
    for (rank, &i) in order.iter().enumerate() {
        let mag = if rank < k { 1.0 } else { (lam * abs[i]).min(1.0) };
        y[i] = if x[i] == 0.0 { 0.0 } else { x[i].signum() * mag };
    }
    let value = if chosen.is_some() {
        value
    } else {
        clipped_value(&sorted, lam)
    };
    Ok((value, y))
}

fn clipped_value(sorted: &[f64], lam: f64) -> f64 {
    sorted.iter().map(|&a| a * (lam * a).min(1.0)).sum()
}

fn check_square(a: &DMatrix<f64>) -> Result<()> {
    if a.nrows() != a.ncols() {
        return Err(Error::InvalidArgument(format!(
            "matrix must be square, got {}×{}",
            a.nrows(),
            a.ncols()
        )));
    }
    Ok(())
}

/// `‖A‖_{{1,2},p} = ‖(|A_i|_2)_i‖_{{1},p}` with `A_i` the rows of `A`.
pub fn matrix_norm_12p(a: &DMatrix<f64>, p: f64) -> Result<f64> {
    check_square(a)?;
    let rows: Vec<f64> = a.row_iter().map(|r| r.norm()).collect();
    latala_vector_norm(&rows, p)
}

/// `‖A‖_{{1}{2},p} = sup { Σ a_ij x_i y_j : |x|_2,|y|_2 ≤ √p, |x|_∞,|y|_∞ ≤ 1 }`
/// with default options.
pub fn matrix_norm_1_2_p(a: &DMatrix<f64>, p: f64) -> Result<NormResult> {
    matrix_norm_1_2_p_with(a, p, &NormOptions::default(), &[])
}

/// Alternating exact water-filling steps with restarts; `starts` are extra
/// `(x, y)` pairs (projected onto the feasible set before use).
pub fn matrix_norm_1_2_p_with(
    a: &DMatrix<f64>,
    p: f64,
    opts: &NormOptions,
    starts: &[(Vec<f64>, Vec<f64>)],
) -> Result<NormResult> {
    check_square(a)?;
    if !(p > 0.0) || !p.is_finite() {
        return Err(Error::InvalidArgument(format!(
            "p must be positive and finite, got {p}"
        )));
    }
    let n = a.nrows();
    for (x, y) in starts {
        if x.len() != n || y.len() != n {
            return Err(Error::DimensionMismatch {
                expected: n,
                got: x.len().min(y.len()),
            });
        }
    }
    // Deterministic starts: the row-norm direction and the top singular vector.
    let mut inits: Vec<Vec<f64>> = starts.iter().map(|(_, y)| y.clone()).collect();
    let rows: Vec<f64> = a.row_iter().map(|r| r.norm()).collect();
    inits.push(rows);
    if n > 0 {
        let svd = a.clone().svd(false, true);
        if let Some(vt) = svd.v_t.as_ref() {
            let (k, _) = svd
                .singular_values
                .iter()
                .enumerate()
                .fold((0, 0.0), |b, (i, &s)| if s > b.1 { (i, s) } else { b });
            inits.push(vt.row(k).iter().copied().collect());
        }
    }
    let fixed = inits.len();
    let total = fixed + opts.restarts;
    let runs: Vec<(f64, Vec<f64>, Vec<f64>, bool)> = (0..total)
        .into_par_iter()
        .map(|r| -> Result<_> {
            let dir = if r < fixed {
                inits[r].clone()
            } else {
                let mut rng = stream(opts.seed, r as u64);
                (0..n).map(|_| rng.sample(StandardNormal)).collect()
            };
            let (_, y0) = latala_maximizer(&dir, p)?;
            let y0 = if r < starts.len() {
                project_ball_box(&starts[r].1, p)
            } else {
                y0
            };
            let x0 = if r < starts.len() {
                Some(project_ball_box(&starts[r].0, p))
            } else {
                None
            };
            alternate_box(a, p, x0, y0, opts)
        })
        .collect::<Result<_>>()?;
    let mut best = 0;
    for (i, run) in runs.iter().enumerate() {
        if run.0 > runs[best].0 {
            best = i;
        }
    }
    let (_, x, y, converged) = runs.into_iter().nth(best).expect("at least one run");
    let value = bilinear(a, &x, &y);
    Ok(NormResult {
        value,
        witness: vec![x, y],
        converged,
        restarts_used: total,
        exact: false,
    })
}

/// Shrinks a vector into `{|v|_∞ ≤ 1, |v|_2 ≤ √p}` (clip, then rescale).
fn project_ball_box(v: &[f64], p: f64) -> Vec<f64> {
    let clipped: Vec<f64> = v.iter().map(|e| e.clamp(-1.0, 1.0)).collect();
    let norm = l2(&clipped);
    if norm > p.sqrt() {
        let s = p.sqrt() / norm;
        clipped.into_iter().map(|e| e * s).collect()
    } else {
        clipped
    }
}

fn bilinear(a: &DMatrix<f64>, x: &[f64], y: &[f64]) -> f64 {
    DVector::from_column_slice(x).dot(&(a * DVector::from_column_slice(y)))
}

fn alternate_box(
    a: &DMatrix<f64>,
    p: f64,
    x0: Option<Vec<f64>>,
    mut y: Vec<f64>,
    opts: &NormOptions,
) -> Result<(f64, Vec<f64>, Vec<f64>, bool)> {
    let n = a.nrows();
    let mut x = match x0 {
        Some(x) => x,
        None => vec![0.0; n],
    };
    let mut value = bilinear(a, &x, &y);
    let mut quiet = 0;
    let mut ay = DVector::<f64>::zeros(n);
    let mut atx = DVector::<f64>::zeros(n);
    for _ in 0..opts.max_sweeps {
        a.mul_to(&DVector::from_column_slice(&y), &mut ay);
        let (_, nx) = latala_maximizer(ay.as_slice(), p)?;
        x = nx;
        a.tr_mul_to(&DVector::from_column_slice(&x), &mut atx);
        let (current, ny) = latala_maximizer(atx.as_slice(), p)?;
        y = ny;
        let gain = current - value;
        value = value.max(current);
        if gain <= opts.tol * value.max(1.0) {
            quiet += 1;
            if quiet >= opts.patience {
                return Ok((value, x, y, true));
            }
        } else {
            quiet = 0;
        }
    }
    Ok((value, x, y, false))
}
