//! Closed-form tail bounds `t ↦ bound(t)` and calibration of their constants.
//!
//! Two shapes occur:
//!
//! * exponential: `2 exp(−c · min_l (t / N_l)^{2/b_l})` over levels with norm
//!   `N_l` and block count `b_l` (the multilevel bound and its special cases);
//! * threshold: `P(|dev| ≥ C·N(p)) ≤ 4 exp(−p / K²)` for every `p`, turned into
//!   a function of `t` by inverting `p ↦ C·N(p)` on a grid of `p` values.
//!
//! Each bound has one scalar *strength* such that the bound is nonincreasing
//! in it (`c` for exponential bounds, `1/C` for threshold bounds); this is
//! the parameter [`calibrate_constant`] fits.

use std::collections::BTreeMap;
use std::fmt;

use nalgebra::DMatrix;

use crate::boolfn::{bits_of, TetrahedralPolynomial, MAX_TENSOR_ORDER};
use crate::mc::SurvivalCurve;
use crate::model::ExactLaw;
use crate::norms::{all_partition_norms, latala_vector_norm, matrix_norm_12p, matrix_norm_1_2_p, NormOptions};
use crate::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum BoundKind {
    Multilevel,
    Linfty,
    HansonWright,
    Bonami,
    Degree3,
    ConvexPlp,
    QuadUpper,
    QuadLower,
    QuadTwoSided,
}

impl fmt::Display for BoundKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let s = match self {
            Self::Multilevel => "multilevel",
            Self::Linfty => "linfty",
            Self::HansonWright => "hanson_wright",
            Self::Bonami => "bonami",
            Self::Degree3 => "degree3",
            Self::ConvexPlp => "convex_plp",
            Self::QuadUpper => "quad_upper",
            Self::QuadLower => "quad_lower",
            Self::QuadTwoSided => "quad_two_sided",
        };
        f.write_str(s)
    }
}

/// One term `(t / norm)^{2/blocks}` of an exponential bound.
#[derive(Debug, Clone, PartialEq)]
pub struct Level {
    /// Derivative order the norm belongs to (0 when not applicable).
    pub k: usize,
    pub label: String,
    pub norm: f64,
    pub blocks: usize,
}

impl Level {
    pub fn new(k: usize, label: impl Into<String>, norm: f64, blocks: usize) -> Self {
        Self {
            k,
            label: label.into(),
            norm,
            blocks,
        }
    }
}

/// `p ↦ N(p)` sampled on an increasing grid.
#[derive(Debug, Clone, PartialEq)]
pub struct Profile {
    pub p: Vec<f64>,
    pub norm: Vec<f64>,
    /// `N` is known to be constant beyond the last grid point.
    pub saturates: bool,
}

impl Profile {
    /// Evaluates `norm_at` on `grid`, enforcing monotonicity by a running
    /// maximum (every norm here is nondecreasing in `p`).
    pub fn from_fn<F: FnMut(f64) -> Result<f64>>(grid: &[f64], saturates: bool, mut norm_at: F) -> Result<Self> {
        if grid.is_empty() {
            return Err(Error::Empty("p grid"));
        }
        if grid.windows(2).any(|w| !(w[1] > w[0])) || !(grid[0] > 0.0) {
            return Err(Error::InvalidArgument("p grid must be positive and increasing".into()));
        }
        let mut norm = Vec::with_capacity(grid.len());
        let mut run: f64 = 0.0;
        for &p in grid {
            run = run.max(norm_at(p)?);
            norm.push(run);
        }
        Ok(Self {
            p: grid.to_vec(),
            norm,
            saturates,
        })
    }

    /// `sup { p : scale · N(p) ≤ t }`, with `N ∝ √p` below the grid.
    fn invert(&self, scale: f64, t: f64) -> f64 {
        let last = self.p.len() - 1;
        let th = |j: usize| scale * self.norm[j];
        if th(last) <= t {
            return if self.saturates { f64::INFINITY } else { self.p[last] };
        }
        match (0..=last).rev().find(|&j| th(j) <= t) {
            None => {
                let t0 = th(0);
                if t0 <= 0.0 {
                    self.p[0]
                } else {
                    self.p[0] * (t / t0).powi(2)
                }
            }
            Some(j) => {
                let (a, b) = (th(j), th(j + 1));
                self.p[j] + (t - a) / (b - a) * (self.p[j + 1] - self.p[j])
            }
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub enum BoundForm {
    Exponential {
        levels: Vec<Level>,
        c: f64,
    },
    /// Sum over profiles of `4 exp(−p*(t) / K²)` with thresholds `scale · N(p)`.
    Threshold {
        profiles: Vec<Profile>,
        scale: f64,
        k: f64,
    },
}

/// A tail bound with its constants and precomputed norms.
#[derive(Debug, Clone, PartialEq)]
pub struct TailBound {
    pub kind: BoundKind,
    pub form: BoundForm,
}

/// Value of a bound at one `t`, with the level that attains the minimum.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Evaluation {
    pub bound: f64,
    pub branch: Option<usize>,
}

impl TailBound {
    pub fn exponential(kind: BoundKind, levels: Vec<Level>, c: f64) -> Self {
        Self {
            kind,
            form: BoundForm::Exponential { levels, c },
        }
    }

    pub fn threshold(kind: BoundKind, profiles: Vec<Profile>, scale: f64, k: f64) -> Self {
        Self {
            kind,
            form: BoundForm::Threshold { profiles, scale, k },
        }
    }

    pub fn eval(&self, t: f64) -> f64 {
        self.evaluate(t).bound
    }

    pub fn evaluate(&self, t: f64) -> Evaluation {
        match &self.form {
            BoundForm::Exponential { levels, c } => {
                let mut best: Option<(usize, f64)> = None;
                for (i, l) in levels.iter().enumerate() {
                    if l.norm > 0.0 {
                        let e = (t.max(0.0) / l.norm).powf(2.0 / l.blocks as f64);
                        if best.is_none_or(|(_, b)| e < b) {
                            best = Some((i, e));
                        }
                    }
                }
                match best {
                    Some((i, e)) => Evaluation {
                        bound: 2.0 * (-c * e).exp(),
                        branch: Some(i),
                    },
                    None => Evaluation {
                        bound: if t > 0.0 { 0.0 } else { 2.0 },
                        branch: None,
                    },
                }
            }
            BoundForm::Threshold { profiles, scale, k } => {
                let bound = profiles
                    .iter()
                    .map(|pr| {
                        if pr.norm.iter().all(|&v| v == 0.0) {
                            return if t > 0.0 { 0.0 } else { 4.0 };
                        }
                        let p = if t > 0.0 { pr.invert(*scale, t) } else { 0.0 };
                        4.0 * (-p / (k * k)).exp()
                    })
                    .sum();
                Evaluation { bound, branch: None }
            }
        }
    }

    /// The calibrated parameter: `c` or `1/C`.
    pub fn strength(&self) -> f64 {
        match &self.form {
            BoundForm::Exponential { c, .. } => *c,
            BoundForm::Threshold { scale, .. } => 1.0 / scale,
        }
    }

    pub fn with_strength(&self, s: f64) -> Self {
        let mut out = self.clone();
        match &mut out.form {
            BoundForm::Exponential { c, .. } => *c = s,
            BoundForm::Threshold { scale, .. } => *scale = 1.0 / s,
        }
        out
    }

    /// `bound(t / factor)`: every norm (or threshold scale) multiplied by
    /// `factor`.
    pub fn rescaled(&self, factor: f64) -> Self {
        let mut out = self.clone();
        match &mut out.form {
            BoundForm::Exponential { levels, .. } => levels.iter_mut().for_each(|l| l.norm *= factor),
            BoundForm::Threshold { scale, .. } => *scale *= factor,
        }
        out
    }

    /// Named constants, for manifests.
    pub fn constants(&self) -> BTreeMap<String, f64> {
        let mut m = BTreeMap::new();
        match &self.form {
            BoundForm::Exponential { c, .. } => {
                m.insert("c".into(), *c);
            }
            BoundForm::Threshold { scale, k, .. } => {
                m.insert("C".into(), *scale);
                m.insert("K".into(), *k);
            }
        }
        m
    }

    /// Level labels, for reporting the active branch.
    pub fn level_label(&self, branch: Option<usize>) -> String {
        match (&self.form, branch) {
            (BoundForm::Exponential { levels, .. }, Some(i)) => levels[i].label.clone(),
            _ => String::new(),
        }
    }
}

/// Every level `‖E∇^k f(X)‖_𝓘`, `k ≤ deg f`, `𝓘 ∈ P_k`.
pub fn multilevel_levels(poly: &TetrahedralPolynomial, law: &ExactLaw, opts: &NormOptions) -> Result<Vec<Level>> {
    let d = poly.degree();
    if d > MAX_TENSOR_ORDER {
        return Err(Error::Capacity {
            what: "derivative tensor order",
            n: d,
            cap: MAX_TENSOR_ORDER,
        });
    }
    let mut levels = Vec::new();
    for k in 1..=d {
        let tensor = poly.expected_derivative(k, law)?;
        for (part, res) in all_partition_norms(&tensor, opts)? {
            levels.push(Level::new(k, part.to_string(), res.value, part.len()));
        }
    }
    Ok(levels)
}

pub fn multilevel_bound(poly: &TetrahedralPolynomial, law: &ExactLaw, c: f64) -> Result<TailBound> {
    let levels = multilevel_levels(poly, law, &NormOptions::default())?;
    Ok(TailBound::exponential(BoundKind::Multilevel, levels, c))
}

/// `2 exp(−c min(t²/hs², t/op))`.
pub fn hanson_wright_bound(hs: f64, op: f64, c: f64) -> TailBound {
    TailBound::exponential(
        BoundKind::HansonWright,
        vec![Level::new(2, "{1,2}", hs, 1), Level::new(2, "{1}{2}", op, 2)],
        c,
    )
}

/// Hilbert–Schmidt and operator norm of a square matrix.
pub fn hs_and_op(a: &DMatrix<f64>) -> Result<(f64, f64)> {
    if a.nrows() != a.ncols() {
        return Err(Error::InvalidArgument("matrix must be square".into()));
    }
    let hs = a.norm();
    let op = if a.nrows() == 0 {
        0.0
    } else {
        a.clone().singular_values().max()
    };
    Ok((hs, op))
}

/// `2 exp(−c t / hs)`.
pub fn bonami_bound(hs: f64, c: f64) -> TailBound {
    TailBound::exponential(BoundKind::Bonami, vec![Level::new(2, "{1,2}", hs, 2)], c)
}

/// `2 exp(−c t^{2/d} / (n max|a|^{2/d}))`.
pub fn linfty_bound(n: usize, d: usize, max_abs: f64, c: f64) -> TailBound {
    let norm = (n as f64).powf(d as f64 / 2.0) * max_abs;
    TailBound::exponential(BoundKind::Linfty, vec![Level::new(d, "linfty", norm, d)], c)
}

/// Norm inputs of the cubic bound.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Degree3Norms {
    pub a123: f64,
    /// `Σ_i (Σ_jk a_ijk E X_j X_k)²`.
    pub mean_gradient_sq: f64,
    pub a12_3: f64,
    pub a1_2_3: f64,
}

/// `2 exp(−c min(t²/(‖A‖²_{123} + Σ_i(…)²), t/‖A‖_{12}{3}, t^{2/3}/‖A‖^{2/3}_{1}{2}{3}))`.
pub fn degree3_bound(norms: &Degree3Norms, c: f64) -> TailBound {
    let first = (norms.a123 * norms.a123 + norms.mean_gradient_sq).sqrt();
    TailBound::exponential(
        BoundKind::Degree3,
        vec![
            Level::new(3, "{1,2,3}+mean", first, 1),
            Level::new(3, "{1,2}{3}", norms.a12_3, 2),
            Level::new(3, "{1}{2}{3}", norms.a1_2_3, 3),
        ],
        c,
    )
}

/// Threshold `C · sup_x ‖∇f(x)‖_{{1},p}` at one `p`.
pub fn convex_lipschitz_threshold<F: Fn(f64) -> f64>(grad_sup_norm: F, scale: f64, p: f64) -> Result<f64> {
    if !(p > 0.0) {
        return Err(Error::InvalidArgument(format!("p must be positive, got {p}")));
    }
    Ok(scale * grad_sup_norm(p))
}

/// Convex-Lipschitz tail for a linear statistic `⟨a, x⟩`, where the
/// gradient is constant and the sup-norm is `‖a‖_{{1},p}`.
pub fn linear_plp_bound(a: &[f64], grid: &[f64], scale: f64, k: f64) -> Result<TailBound> {
    let nnz = a.iter().filter(|v| **v != 0.0).count() as f64;
    let saturates = grid.last().is_some_and(|&p| p >= nnz);
    let profile = Profile::from_fn(grid, saturates, |p| latala_vector_norm(a, p))?;
    Ok(TailBound::threshold(BoundKind::ConvexPlp, vec![profile], scale, k))
}

/// The two thresholds for a nonnegative definite quadratic form at one `p`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct QuadThresholds {
    pub upper: f64,
    pub lower: f64,
    pub norm_12p: f64,
    pub norm_1_2p: f64,
    pub hs: f64,
}

/// Errors unless the smallest eigenvalue is at least `−1e−9` (relative to
/// the largest magnitude when that exceeds one).
pub fn check_nonnegative_definite(a: &DMatrix<f64>) -> Result<()> {
    if a.nrows() != a.ncols() {
        return Err(Error::InvalidArgument("matrix must be square".into()));
    }
    if a.nrows() == 0 {
        return Ok(());
    }
    let eig = a.clone().symmetric_eigen().eigenvalues;
    let min = eig.min();
    let scale = eig.amax().max(1.0);
    if min < -1e-9 * scale {
        return Err(Error::Indefinite(min));
    }
    Ok(())
}

pub fn quad_bounds(a: &DMatrix<f64>, p: f64, scale: f64) -> Result<QuadThresholds> {
    check_nonnegative_definite(a)?;
    quad_thresholds_unchecked(a, p, scale)
}

fn quad_thresholds_unchecked(a: &DMatrix<f64>, p: f64, scale: f64) -> Result<QuadThresholds> {
    let norm_12p = matrix_norm_12p(a, p)?;
    let norm_1_2p = matrix_norm_1_2_p(a, p)?.value;
    let hs = a.norm();
    let sum = norm_12p + norm_1_2p;
    Ok(QuadThresholds {
        upper: scale * sum,
        lower: scale * sum.min(p.sqrt() * hs),
        norm_12p,
        norm_1_2p,
        hs,
    })
}

/// Which tail of `⟨AX,X⟩ − E⟨AX,X⟩` a quadratic bound controls.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum QuadSide {
    Upper,
    Lower,
    TwoSided,
}

/// Threshold tail bound for a nonnegative definite quadratic form.
pub fn quad_tail_bound(a: &DMatrix<f64>, grid: &[f64], scale: f64, k: f64, side: QuadSide) -> Result<TailBound> {
    check_nonnegative_definite(a)?;
    // Row supports bound the number of distinct nonzero coordinates, beyond
    // which every norm in the profile is constant.
    let saturates = grid.last().is_some_and(|&p| p >= a.nrows() as f64);
    let rows: Vec<QuadThresholds> = grid
        .iter()
        .map(|&p| quad_thresholds_unchecked(a, p, 1.0))
        .collect::<Result<_>>()?;
    let mut it = rows.iter();
    let upper = Profile::from_fn(grid, saturates, |_| Ok(it.next().expect("grid row").upper))?;
    // The lower threshold keeps growing like √p until the other term wins.
    let lower_saturates = saturates && rows.last().is_some_and(|r| r.lower == r.norm_12p + r.norm_1_2p);
    let mut it = rows.iter();
    let lower = Profile::from_fn(grid, lower_saturates, |_| Ok(it.next().expect("grid row").lower))?;
    let (kind, profiles) = match side {
        QuadSide::Upper => (BoundKind::QuadUpper, vec![upper]),
        QuadSide::Lower => (BoundKind::QuadLower, vec![lower]),
        QuadSide::TwoSided => (BoundKind::QuadTwoSided, vec![upper, lower]),
    };
    Ok(TailBound::threshold(kind, profiles, scale, k))
}

/// Geometric `p` grid from `lo` up to and including `hi`.
pub fn p_grid(lo: f64, hi: f64, steps: usize) -> Vec<f64> {
    if steps <= 1 || hi <= lo {
        return vec![lo];
    }
    let r = (hi / lo).powf(1.0 / (steps - 1) as f64);
    (0..steps)
        .map(|i| if i + 1 == steps { hi } else { lo * r.powi(i as i32) })
        .collect()
}

/// Keeps the top-degree part of `poly` and replaces lower-degree terms so
/// that `E ∂_T g(X) = 0` for every `1 ≤ |T| < deg` and `E g(X) = 0`.
///
/// Expected derivatives are `Σ_{S ⊇ T} b_S E χ_{S∖T}`, which is triangular
/// in `T` under inclusion with unit diagonal, so the coefficients are found
/// by back-substitution from the largest `T` down.
pub fn recenter(poly: &TetrahedralPolynomial, law: &ExactLaw) -> Result<TetrahedralPolynomial> {
    let n = poly.n();
    if law.n() != n {
        return Err(Error::DimensionMismatch {
            expected: n,
            got: law.n(),
        });
    }
    let d = poly.degree();
    let mut out = poly.homogeneous_part(d);
    if d == 0 {
        return Ok(TetrahedralPolynomial::zero(n));
    }
    for size in (0..d).rev() {
        let mut updates = Vec::new();
        crate::boolfn::for_each_combination(n, size, |idx| {
            let t: u64 = idx.iter().fold(0, |m, &i| m | 1 << i);
            let r: f64 = out
                .terms()
                .filter(|&(s, _)| s != t && s & t == t)
                .map(|(s, b)| b * law.moment(s & !t))
                .sum();
            updates.push((t, -r));
        });
        for (t, v) in updates {
            out.add_term(t, v)?;
        }
    }
    debug_assert!(out.terms().all(|(s, _)| bits_of(s).count() <= d));
    Ok(out)
}

/// Largest strength `s` with `bound_s(t) ≥ survival(t) + 2·stderr(t)` at
/// every grid point, to relative precision `1e−4`; `cap` when no finite
/// strength is ever violated.
pub fn calibrate_constant(bound: &TailBound, curve: &SurvivalCurve, cap: f64) -> Result<f64> {
    if curve.t.is_empty() {
        return Err(Error::Empty("survival curve"));
    }
    let targets: Vec<(f64, f64)> = curve
        .t
        .iter()
        .zip(curve.survival.iter().zip(&curve.stderr))
        .map(|(&t, (&s, &e))| (t, s + 2.0 * e))
        .filter(|&(_, target)| target > 0.0)
        .collect();
    if targets.is_empty() {
        return Ok(cap);
    }
    let ok = |s: f64| {
        let b = bound.with_strength(s);
        targets.iter().all(|&(t, target)| b.eval(t) >= target)
    };
    let (mut lo, mut hi);
    if ok(1.0) {
        lo = 1.0;
        loop {
            let next = lo * 2.0;
            if next > cap {
                return Ok(if ok(cap) { cap } else { bisect(&ok, lo, cap) });
            }
            if !ok(next) {
                hi = next;
                break;
            }
            lo = next;
        }
    } else {
        hi = 1.0;
        loop {
            lo = hi / 2.0;
            if lo < 1e-12 {
                return Err(Error::CalibrationInfeasible(format!(
                    "{} bound stays below the empirical tail for every constant",
                    bound.kind
                )));
            }
            if ok(lo) {
                break;
            }
            hi = lo;
        }
    }
    Ok(bisect(&ok, lo, hi))
}

fn bisect<F: Fn(f64) -> bool>(ok: &F, mut lo: f64, mut hi: f64) -> f64 {
    while hi - lo > 1e-4 * lo {
        let mid = 0.5 * (lo + hi);
        if ok(mid) {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    lo
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::IsingModel;
    use crate::norms::Partition;
    use crate::rng::stream;
    use crate::SymmetricTensor;
    use proptest::prelude::*;
    use rand::Rng;

    fn curve(t: Vec<f64>, survival: Vec<f64>, samples: usize) -> SurvivalCurve {
        let stderr = survival
            .iter()
            .map(|&s: &f64| (s * (1.0 - s) / samples as f64).sqrt())
            .collect();
        SurvivalCurve {
            t,
            survival,
            stderr,
            samples,
        }
    }

    #[test]
    fn hanson_wright_direct_formula() {
        let b = hanson_wright_bound(1.0, 1.0, 1.0);
        assert!((b.eval(4.0) - 2.0 * (-4.0f64).exp()).abs() < 1e-15);
        assert!((b.eval(1e-12) - 2.0).abs() < 1e-10);
        assert_eq!(hanson_wright_bound(0.0, 0.0, 1.0).eval(1.0), 0.0);
    }

    #[test]
    fn op_by_hs_gives_bonami() {
        let hs = 2.0;
        let weak = hanson_wright_bound(hs, hs, 0.7);
        let bonami = bonami_bound(hs, 0.7);
        let strong = hanson_wright_bound(hs, 0.5, 0.7);
        for t in [0.5, 2.0, 5.0, 20.0] {
            assert!(weak.eval(t) >= bonami.eval(t) - 1e-15 || t < hs);
            assert!(strong.eval(t) <= weak.eval(t) + 1e-15);
        }
        // Past t = hs the linear branch is active and both coincide.
        assert!((weak.eval(8.0) - bonami.eval(8.0)).abs() < 1e-15);
    }

    #[test]
    fn constant_polynomial_has_zero_bound() {
        let law = ExactLaw::uniform(3);
        let poly = TetrahedralPolynomial::from_terms(3, [(0, 5.0)]).unwrap();
        let b = multilevel_bound(&poly, &law, 1.0).unwrap();
        assert_eq!(b.eval(0.1), 0.0);
    }

    #[test]
    fn quadratic_multilevel_is_hanson_wright() {
        let law = IsingModel::chain(5, 0.3).unwrap().exact_law().unwrap();
        let mut rng = stream(21, 0);
        let mut terms = Vec::new();
        for i in 0..5 {
            for j in (i + 1)..5 {
                terms.push(((1u64 << i) | (1 << j), rng.random_range(-1.0..1.0)));
            }
        }
        let poly = TetrahedralPolynomial::from_terms(5, terms).unwrap();
        let ml = multilevel_bound(&poly, &law, 0.8).unwrap();
        let hess = poly.expected_derivative(2, &law).unwrap();
        let hs = crate::norms::partition_norm(&hess, &Partition::single_block(2))
            .unwrap()
            .value;
        let op = crate::norms::partition_norm(&hess, &Partition::singletons(2))
            .unwrap()
            .value;
        let hw = hanson_wright_bound(hs, op, 0.8);
        for t in [0.1, 1.0, 3.0, 10.0] {
            assert_eq!(ml.eval(t), hw.eval(t));
        }
    }

    #[test]
    fn example_cubic_branch_switches() {
        let n = 12;
        let tensor = SymmetricTensor::from_sorted_fn(3, n, |idx| {
            if idx[1] + 1 == idx[2] && idx[0] < idx[1] {
                1.0
            } else {
                0.0
            }
        });
        let law = IsingModel::chain(n, 1.0 / 3.0).unwrap().exact_law().unwrap();
        let poly = TetrahedralPolynomial::from_tensor(&tensor).unwrap();
        let b = multilevel_bound(&poly, &law, 1.0).unwrap();
        let small = b.evaluate(1e-3).branch.unwrap();
        let large = b.evaluate(1e6).branch.unwrap();
        assert_eq!(b.level_label(Some(small)), "{1,2,3}");
        assert_eq!(b.level_label(Some(large)), "{1}{2}{3}");
    }

    #[test]
    fn threshold_inversion_matches_profile() {
        let a: Vec<f64> = (1..=50).map(|i| 1.0 / i as f64).collect();
        let grid = p_grid(0.5, 64.0, 40);
        let b = linear_plp_bound(&a, &grid, 1.0, 1.0).unwrap();
        for &p in &grid[..grid.len() - 1] {
            let t = latala_vector_norm(&a, p).unwrap();
            assert!((b.eval(t) - 4.0 * (-p).exp()).abs() < 1e-9);
        }
    }

    #[test]
    fn unit_vector_threshold_saturates() {
        let mut e1 = vec![0.0; 6];
        e1[0] = 1.0;
        let grid = p_grid(1.0, 8.0, 10);
        let b = linear_plp_bound(&e1, &grid, 1.0, 1.0).unwrap();
        assert_eq!(b.eval(1.0), 0.0);
        assert!(b.eval(0.99) > 0.0);
    }

    #[test]
    fn quad_rejects_indefinite() {
        let a = DMatrix::from_row_slice(2, 2, &[0.0, 1.0, 1.0, 0.0]);
        assert!(matches!(quad_bounds(&a, 2.0, 1.0), Err(Error::Indefinite(_))));
        let z = DMatrix::<f64>::zeros(3, 3);
        let q = quad_bounds(&z, 2.0, 1.0).unwrap();
        assert_eq!((q.upper, q.lower), (0.0, 0.0));
    }

    #[test]
    fn quad_rank_one_e1() {
        let mut a = DMatrix::<f64>::zeros(4, 4);
        a[(0, 0)] = 1.0;
        let q = quad_bounds(&a, 3.0, 2.0).unwrap();
        assert!((q.norm_12p - 1.0).abs() < 1e-12);
        assert!((q.norm_1_2p - 1.0).abs() < 1e-9);
        assert!((q.upper - 4.0).abs() < 1e-8);
        assert!((q.lower - 2.0 * (2.0f64).min(3f64.sqrt())).abs() < 1e-8);
    }

    #[test]
    fn recentering_kills_lower_expected_derivatives() {
        let law = IsingModel::chain(6, 1.0 / 3.0).unwrap().exact_law().unwrap();
        let mut rng = stream(22, 0);
        let mut poly = TetrahedralPolynomial::zero(6);
        crate::boolfn::for_each_combination(6, 3, |idx| {
            let mask = idx.iter().fold(0u64, |m, &i| m | 1 << i);
            poly.add_term(mask, rng.random_range(-1.0..1.0)).unwrap();
        });
        let g = recenter(&poly, &law).unwrap();
        assert_eq!(g.degree(), 3);
        for k in 1..3 {
            let e = g.expected_derivative(k, &law).unwrap();
            assert!(e.max_abs() < 1e-12, "k = {k}");
        }
        let table = g.to_table().unwrap();
        assert!(law.expectation(&table).abs() < 1e-12);
        let top = g.expected_derivative(3, &law).unwrap();
        let orig = poly.expected_derivative(3, &law).unwrap();
        assert_eq!(top, orig);
    }

    #[test]
    fn calibration_edge_cases() {
        let b = hanson_wright_bound(1.0, 1.0, 1.0);
        let zero = curve(vec![0.5, 1.0], vec![0.0, 0.0], 1000);
        assert_eq!(calibrate_constant(&b, &zero, 1e6).unwrap(), 1e6);
        let empty = curve(vec![], vec![], 10);
        assert!(calibrate_constant(&b, &empty, 1e6).is_err());
        let impossible = TailBound::exponential(BoundKind::Bonami, vec![Level::new(2, "x", 0.0, 2)], 1.0);
        let c = curve(vec![0.5], vec![0.5], 1000);
        assert!(matches!(
            calibrate_constant(&impossible, &c, 1e6),
            Err(Error::CalibrationInfeasible(_))
        ));
    }

    #[test]
    fn calibrated_constant_is_tight() {
        let b = bonami_bound(1.0, 1.0);
        let c = curve(vec![0.5, 1.0, 2.0], vec![0.6, 0.3, 0.05], 100_000);
        let s = calibrate_constant(&b, &c, 1e6).unwrap();
        let fitted = b.with_strength(s);
        let over = b.with_strength(s * 1.001);
        let target = |i: usize| c.survival[i] + 2.0 * c.stderr[i];
        assert!((0..3).all(|i| fitted.eval(c.t[i]) >= target(i)));
        assert!((0..3).any(|i| over.eval(c.t[i]) < target(i)));
        // A heavier observed tail can only lower the constant.
        let heavier = curve(vec![0.5, 1.0, 2.0], vec![0.6, 0.35, 0.05], 100_000);
        assert!(calibrate_constant(&b, &heavier, 1e6).unwrap() <= s);
    }

    #[test]
    fn scale_covariance_of_multilevel() {
        let law = IsingModel::chain(5, 0.25).unwrap().exact_law().unwrap();
        let poly = TetrahedralPolynomial::from_terms(5, [(0b00011, 1.0), (0b10100, -0.5), (0b01000, 0.3)]).unwrap();
        let base = multilevel_bound(&poly, &law, 1.0).unwrap();
        for lambda in [0.5, 2.0, 4.0] {
            let scaled = multilevel_bound(&poly.scaled(lambda), &law, 1.0).unwrap();
            for t in [0.1, 0.7, 2.5] {
                assert_eq!(scaled.eval(lambda * t), base.eval(t));
            }
        }
    }

    fn arb_levels() -> impl Strategy<Value = Vec<Level>> {
        prop::collection::vec((0.0f64..5.0, 1usize..4), 1..5)
            .prop_map(|v| v.into_iter().map(|(nm, b)| Level::new(b, "l", nm, b)).collect())
    }

    proptest! {
        #[test]
        fn exponential_bounds_are_monotone_and_capped(levels in arb_levels(), c in 0.01f64..10.0, t1 in 0.0f64..20.0, dt in 0.0f64..20.0) {
            let b = TailBound::exponential(BoundKind::Multilevel, levels, c);
            let (a, z) = (b.eval(t1), b.eval(t1 + dt));
            prop_assert!(z <= a + 1e-15);
            prop_assert!(a <= 2.0 && z >= 0.0);
        }

        #[test]
        fn threshold_bounds_are_monotone_and_capped(
            x in prop::collection::vec(-3.0f64..3.0, 1..12),
            scale in 0.1f64..5.0,
            t1 in 0.0f64..10.0,
            dt in 0.0f64..10.0,
        ) {
            let grid = p_grid(0.25, 16.0, 12);
            let b = linear_plp_bound(&x, &grid, scale, 1.0).unwrap();
            let (a, z) = (b.eval(t1), b.eval(t1 + dt));
            prop_assert!(z <= a + 1e-12);
            prop_assert!(a <= 4.0 && z >= 0.0);
        }

        #[test]
        fn hanson_wright_scale_covariance(hs in 0.01f64..5.0, op_frac in 0.01f64..1.0, lam in 0.1f64..10.0, t in 0.0f64..10.0) {
            let op = hs * op_frac;
            let a = hanson_wright_bound(hs, op, 1.0).eval(t);
            let b = hanson_wright_bound(lam * hs, lam * op, 1.0).eval(lam * t);
            prop_assert!((a - b).abs() <= 1e-12);
        }
    }
}
