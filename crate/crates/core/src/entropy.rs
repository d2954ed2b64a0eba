//! Approximate tensorization, entropies and discrete gradients.
//!
//! Everything here except [`beta_bound`] and [`influence_matrix`] works on
//! exact probability tables, so it is limited to small `n`.

use nalgebra::DMatrix;
use rand_distr::{Distribution, StandardNormal};
use rayon::prelude::*;

use crate::model::{spin_of, ExactLaw, IsingModel};
use crate::rng::stream;
use crate::{Error, Result, ENUMERATION_CAP};

/// Largest `n` accepted by [`verify_at`].
pub const AT_VERIFY_CAP: usize = 8;

/// `|J_ij|` together with its spectral norm.
#[derive(Debug, Clone, PartialEq)]
pub struct InfluenceMatrix {
    pub n: usize,
    /// Row-major `n × n`.
    pub entries: Vec<f64>,
    pub opnorm: f64,
}

/// Entrywise bound on how much flipping spin `j` moves the conditional law
/// of spin `i` in total variation.
pub fn influence_matrix(model: &IsingModel) -> InfluenceMatrix {
    let n = model.n();
    let entries: Vec<f64> = model.couplings().iter().map(|v| v.abs()).collect();
    let opnorm = symmetric_opnorm(&entries, n);
    InfluenceMatrix { n, entries, opnorm }
}

/// Spectral norm of a symmetric matrix by power iteration on `A²`
/// (squaring removes the `±λ` tie of bipartite couplings).
pub fn symmetric_opnorm(a: &[f64], n: usize) -> f64 {
    if n == 0 || a.iter().all(|&v| v == 0.0) {
        return 0.0;
    }
    let apply = |v: &[f64]| -> Vec<f64> { (0..n).map(|i| (0..n).map(|k| a[i * n + k] * v[k]).sum()).collect() };
    // Slightly tilted start so it is not orthogonal to the top eigenvector
    // by symmetry.
    let mut v: Vec<f64> = (0..n).map(|i| 1.0 + 1e-3 * i as f64).collect();
    let mut lambda = 0.0;
    for _ in 0..100_000 {
        let w = apply(&apply(&v));
        let norm = w.iter().map(|x| x * x).sum::<f64>().sqrt();
        if norm == 0.0 {
            return 0.0;
        }
        let vnorm = v.iter().map(|x| x * x).sum::<f64>().sqrt();
        let next = norm / vnorm;
        v = w.into_iter().map(|x| x / norm).collect();
        if (next - lambda).abs() <= 1e-15 * next {
            lambda = next;
            break;
        }
        lambda = next;
    }
    lambda.sqrt()
}

/// Summary of the approximate tensorization constant.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct AtReport {
    /// Smallest single-site conditional probability.
    pub beta: f64,
    pub influence_opnorm: f64,
    /// `2 / (β (1 − ‖influence‖)²)`, or `+∞` when the norm reaches 1.
    pub at_constant: f64,
    pub dobrushin_holds: bool,
    /// Whether `beta` was obtained by enumeration.
    pub beta_exact: bool,
}

/// `min_i min_σ min(P(σ_i = ±1 | rest))` by enumerating configurations.
pub fn beta_exact(model: &IsingModel) -> Result<f64> {
    let n = model.n();
    if n > ENUMERATION_CAP {
        return Err(Error::Capacity {
            what: "exact beta",
            n,
            cap: ENUMERATION_CAP,
        });
    }
    let total = 1u64 << n;
    let beta = (0..n)
        .into_par_iter()
        .map(|i| {
            let mut lo: f64 = 0.5;
            // Bit i itself does not influence the conditional.
            for b in (0..total).filter(|b| b >> i & 1 == 0) {
                let p = model.conditional_plus_prob_bits(i, b);
                lo = lo.min(p).min(1.0 - p);
            }
            lo
        })
        .reduce(|| 0.5, f64::min);
    Ok(beta)
}

/// Analytic lower bound on `β` from `|m_i| ≤ (1 − ρ) + α`.
pub fn beta_bound(model: &IsingModel) -> f64 {
    let d = model.dobrushin();
    1.0 / (1.0 + (2.0 * (d.max_row_sum + d.alpha)).exp())
}

/// AT constant diagnostics; `β` is exact up to the enumeration cap and
/// falls back to [`beta_bound`] beyond it.
pub fn at_report(model: &IsingModel) -> AtReport {
    let (beta, beta_exact) = match beta_exact(model) {
        Ok(b) => (b, true),
        Err(_) => (beta_bound(model), false),
    };
    let influence_opnorm = influence_matrix(model).opnorm;
    AtReport {
        beta,
        influence_opnorm,
        at_constant: at_constant(beta, influence_opnorm),
        dobrushin_holds: model.dobrushin().holds,
        beta_exact,
    }
}

pub fn at_constant(beta: f64, influence_opnorm: f64) -> f64 {
    if influence_opnorm < 1.0 {
        2.0 / (beta * (1.0 - influence_opnorm).powi(2))
    } else {
        f64::INFINITY
    }
}

fn check_table(f: &[f64], law: &ExactLaw) -> Result<()> {
    if f.len() != law.probs().len() {
        return Err(Error::DimensionMismatch {
            expected: law.probs().len(),
            got: f.len(),
        });
    }
    Ok(())
}

fn check_nonnegative(f: &[f64]) -> Result<()> {
    match f.iter().position(|&v| !(v >= 0.0)) {
        Some(index) => Err(Error::NegativeEntry { index, value: f[index] }),
        None => Ok(()),
    }
}

fn xlogx(x: f64) -> f64 {
    if x > 0.0 {
        x * x.ln()
    } else {
        0.0
    }
}

/// `Ent_μ(f) = E f log f − E f log E f`, with `0 log 0 = 0`.
pub fn entropy_functional(f: &[f64], law: &ExactLaw) -> Result<f64> {
    check_table(f, law)?;
    check_nonnegative(f)?;
    let mean = law.expectation(f);
    let e_flogf: f64 = law.probs().iter().zip(f).map(|(p, &v)| p * xlogx(v)).sum();
    Ok((e_flogf - xlogx(mean)).max(0.0))
}

/// `Σ_i E_μ Ent_{μ_i(·|x̄_i)}(f)`, the right-hand side of AT(1).
pub fn conditional_entropy_sum(f: &[f64], law: &ExactLaw) -> Result<f64> {
    check_table(f, law)?;
    check_nonnegative(f)?;
    let n = law.n();
    let probs = law.probs();
    let mut total = 0.0;
    for i in 0..n {
        let bit = 1usize << i;
        for b in (0..probs.len()).filter(|b| b & bit == 0) {
            let (pa, pb) = (probs[b], probs[b | bit]);
            let mass = pa + pb;
            if mass == 0.0 {
                continue;
            }
            let (qa, qb) = (pa / mass, pb / mass);
            let (fa, fb) = (f[b], f[b | bit]);
            let ent = qa * xlogx(fa) + qb * xlogx(fb) - xlogx(qa * fa + qb * fb);
            total += mass * ent.max(0.0);
        }
    }
    Ok(total)
}

/// One random test function in [`verify_at`].
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct AtTrial {
    pub trial: usize,
    pub ent: f64,
    /// `C · Σ_i E Ent_i(f)`.
    pub bound: f64,
    /// `Ent / Σ_i E Ent_i` (the constant-free ratio).
    pub ratio: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct AtVerification {
    pub constant: f64,
    pub trials: Vec<AtTrial>,
    pub max_ratio: f64,
    pub violations: usize,
}

/// Checks AT(C) with `C` from [`at_report`] on random positive functions.
pub fn verify_at(model: &IsingModel, trials: usize, seed: u64) -> Result<AtVerification> {
    if model.n() > AT_VERIFY_CAP {
        return Err(Error::Capacity {
            what: "approximate tensorization check",
            n: model.n(),
            cap: AT_VERIFY_CAP,
        });
    }
    let law = model.exact_law()?;
    verify_at_with_constant(&law, at_report(model).at_constant, trials, seed)
}

/// Checks `Ent(f) ≤ C · Σ_i E Ent_i(f)` for `f = exp(G)`, `G` a table of
/// standard Gaussians drawn per trial.
pub fn verify_at_with_constant(law: &ExactLaw, constant: f64, trials: usize, seed: u64) -> Result<AtVerification> {
    if law.n() > AT_VERIFY_CAP {
        return Err(Error::Capacity {
            what: "approximate tensorization check",
            n: law.n(),
            cap: AT_VERIFY_CAP,
        });
    }
    let size = law.probs().len();
    let rows: Vec<AtTrial> = (0..trials)
        .into_par_iter()
        .map(|trial| -> Result<AtTrial> {
            let mut rng = stream(seed, trial as u64);
            let f: Vec<f64> = (0..size)
                .map(|_| {
                    let g: f64 = StandardNormal.sample(&mut rng);
                    g.exp()
                })
                .collect();
            let ent = entropy_functional(&f, law)?;
            let sum = conditional_entropy_sum(&f, law)?;
            let ratio = if sum > 0.0 { ent / sum } else { 0.0 };
            Ok(AtTrial {
                trial,
                ent,
                bound: constant * sum,
                ratio,
            })
        })
        .collect::<Result<_>>()?;
    let max_ratio = rows.iter().map(|r| r.ratio).fold(0.0, f64::max);
    let violations = rows
        .iter()
        .filter(|r| r.ent > r.bound + 1e-12 * r.ent.max(1e-300))
        .count();
    Ok(AtVerification {
        constant,
        trials: rows,
        max_ratio,
        violations,
    })
}

/// Per-site discrete gradient `𝔡_i f(x)` for every configuration.
#[derive(Debug, Clone, PartialEq)]
pub struct DiscreteGradient {
    pub n: usize,
    /// Row-major `2^n × n`.
    pub values: Vec<f64>,
}

impl DiscreteGradient {
    pub fn get(&self, bits: u64, i: usize) -> f64 {
        self.values[bits as usize * self.n + i]
    }

    /// `|𝔡f(x)|²`.
    pub fn squared_norm(&self, bits: u64) -> f64 {
        let row = &self.values[bits as usize * self.n..(bits as usize + 1) * self.n];
        row.iter().map(|v| v * v).sum()
    }

    /// `|𝔡f|` as a table over configurations.
    pub fn norm_table(&self) -> Vec<f64> {
        (0..self.values.len() / self.n.max(1))
            .map(|b| self.squared_norm(b as u64).sqrt())
            .collect()
    }
}

/// `𝔡_i f(x) = √(½ Σ_y (f(x) − f(x̄_i, y))² μ_i(y | x̄_i))`; only the flipped
/// value of `y` contributes.
pub fn discrete_gradient(f: &[f64], model: &IsingModel) -> Result<DiscreteGradient> {
    let n = model.n();
    if n > ENUMERATION_CAP {
        return Err(Error::Capacity {
            what: "discrete gradient",
            n,
            cap: ENUMERATION_CAP,
        });
    }
    let size = 1usize << n;
    if f.len() != size {
        return Err(Error::DimensionMismatch {
            expected: size,
            got: f.len(),
        });
    }
    let values: Vec<f64> = (0..size)
        .into_par_iter()
        .flat_map_iter(|b| {
            (0..n).map(move |i| {
                let flipped = b ^ (1 << i);
                let plus = model.conditional_plus_prob_bits(i, b as u64);
                // Probability of the value the flip moves to.
                let q = if spin_of(flipped as u64, i) > 0.0 {
                    plus
                } else {
                    1.0 - plus
                };
                let diff = f[b] - f[flipped];
                (0.5 * diff * diff * q).sqrt()
            })
        })
        .collect();
    Ok(DiscreteGradient { n, values })
}

/// `E_μ |𝔡f|²`.
pub fn gradient_energy(f: &[f64], model: &IsingModel, law: &ExactLaw) -> Result<f64> {
    let grad = discrete_gradient(f, model)?;
    Ok(law
        .probs()
        .iter()
        .enumerate()
        .map(|(b, p)| p * grad.squared_norm(b as u64))
        .sum())
}

/// Sharp Poincaré constant `sup_f Var_μ f / E_μ |𝔡f|²`, from the smallest
/// nonzero eigenvalue of the energy form relative to `μ`.
pub fn poincare_constant(model: &IsingModel) -> Result<f64> {
    let n = model.n();
    if n > AT_VERIFY_CAP {
        return Err(Error::Capacity {
            what: "Poincare constant",
            n,
            cap: AT_VERIFY_CAP,
        });
    }
    let law = model.exact_law()?;
    let probs = law.probs();
    let size = probs.len();
    // E|𝔡f|² = Σ_x μ(x) Σ_i ½ q_i(x) (f(x) − f(x^i))² = fᵀ Q f.
    let mut q = DMatrix::<f64>::zeros(size, size);
    for b in 0..size {
        for i in 0..n {
            let c = b ^ (1 << i);
            let plus = model.conditional_plus_prob_bits(i, b as u64);
            let qi = if spin_of(c as u64, i) > 0.0 { plus } else { 1.0 - plus };
            let w = 0.5 * probs[b] * qi;
            q[(b, b)] += w;
            q[(c, c)] += w;
            q[(b, c)] -= w;
            q[(c, b)] -= w;
        }
    }
    let inv_sqrt: Vec<f64> = probs.iter().map(|p| 1.0 / p.sqrt()).collect();
    for r in 0..size {
        for c in 0..size {
            q[(r, c)] *= inv_sqrt[r] * inv_sqrt[c];
        }
    }
    let mut eig: Vec<f64> = q.symmetric_eigen().eigenvalues.iter().copied().collect();
    eig.sort_by(f64::total_cmp);
    // eig[0] ≈ 0 belongs to the constants.
    let gap = eig.get(1).copied().unwrap_or(f64::INFINITY);
    Ok(if gap > 0.0 { 1.0 / gap } else { f64::INFINITY })
}

/// Largest `Var f / E|𝔡f|²` over random Gaussian tables (a lower estimate
/// of [`poincare_constant`]).
pub fn sampled_poincare_ratio(model: &IsingModel, trials: usize, seed: u64) -> Result<f64> {
    let law = model.exact_law()?;
    let size = law.probs().len();
    let ratios: Vec<f64> = (0..trials)
        .into_par_iter()
        .map(|t| -> Result<f64> {
            let mut rng = stream(seed, t as u64);
            let f: Vec<f64> = (0..size).map(|_| StandardNormal.sample(&mut rng)).collect();
            let energy = gradient_energy(&f, model, &law)?;
            Ok(if energy > 0.0 { law.variance(&f) / energy } else { 0.0 })
        })
        .collect::<Result<_>>()?;
    Ok(ratios.into_iter().fold(0.0, f64::max))
}

/// Smallest `C` with `‖f − Ef‖_p ≤ √(2 C p) · ‖ |𝔡f| ‖_p`.
pub fn moment_comparison_constant(f: &[f64], model: &IsingModel, law: &ExactLaw, p: f64) -> Result<f64> {
    check_table(f, law)?;
    if !(p >= 1.0) {
        return Err(Error::InvalidArgument(format!("moment order must be ≥ 1, got {p}")));
    }
    let mean = law.expectation(f);
    let grad = discrete_gradient(f, model)?.norm_table();
    let lp = |vals: &mut dyn Iterator<Item = f64>| -> f64 {
        law.probs()
            .iter()
            .zip(vals)
            .map(|(w, v)| w * v.abs().powf(p))
            .sum::<f64>()
            .powf(1.0 / p)
    };
    let lhs = lp(&mut f.iter().map(|v| v - mean));
    let rhs = lp(&mut grad.into_iter());
    if rhs == 0.0 {
        return Ok(if lhs == 0.0 { 0.0 } else { f64::INFINITY });
    }
    Ok((lhs / rhs).powi(2) / (2.0 * p))
}
