//! Built-in reproductions of the worked examples and the envelope protocol.

use nalgebra::DMatrix;
use rand::Rng;

use crate::boolfn::for_each_combination;
use crate::bounds::{multilevel_levels, p_grid, quad_tail_bound, BoundKind, QuadSide, TailBound};
use crate::mc::{empirical_tail, fit_exponent, sample_statistic, EnvelopeRow, SampleOptions, SurvivalCurve};
use crate::norms::{all_partition_norms, latala_vector_norm, matrix_norm_12p, matrix_norm_1_2_p_with, NormOptions};
use crate::rng::{mix, stream};
use crate::{Error, IsingModel, Result, SymmetricTensor, TetrahedralPolynomial};

/// Coupling of the one-dimensional chain used throughout the examples.
pub const CHAIN_COUPLING: f64 = 1.0 / 3.0;

/// `a_ijk = 1` when, after sorting, `i < j` and `k = j + 1`; zero otherwise.
pub fn chain_cubic_tensor(n: usize) -> SymmetricTensor {
    SymmetricTensor::from_sorted_fn(3, n, |idx| {
        if idx[0] < idx[1] && idx[2] == idx[1] + 1 {
            1.0
        } else {
            0.0
        }
    })
}

/// Norms of the cubic chain example at one `n`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CubicRow {
    pub n: usize,
    pub a123: f64,
    pub a12_3: f64,
    pub a1_2_3: f64,
    /// `Σ_i (Σ_jk a_ijk E X_j X_k)²`.
    pub mean_gradient_sq: f64,
    /// `Var f(X)` for `f = Σ_ijk a_ijk x_i x_j x_k`.
    pub variance: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct CubicReport {
    pub rows: Vec<CubicRow>,
    /// Fitted log-log slopes in the order of the [`CubicRow`] fields.
    pub slopes: [f64; 5],
}

pub fn cubic_chain_row(n: usize, opts: &NormOptions) -> Result<CubicRow> {
    let tensor = chain_cubic_tensor(n);
    let law = IsingModel::chain(n, CHAIN_COUPLING)?.exact_law()?;
    let norms = all_partition_norms(&tensor, opts)?;
    let pick = |label: &str| {
        norms
            .iter()
            .find(|(p, _)| p.to_string() == label)
            .map(|(_, r)| r.value)
            .expect("partition present")
    };
    let mut mean_gradient_sq = 0.0;
    for i in 0..n {
        let mut s = 0.0;
        for j in 0..n {
            for k in 0..n {
                let a = tensor.get(&[i, j, k]);
                if a != 0.0 {
                    s += a * law.moment((1u64 << j) | (1 << k));
                }
            }
        }
        mean_gradient_sq += s * s;
    }
    let poly = TetrahedralPolynomial::from_tensor(&tensor)?;
    let variance = law.variance(&poly.to_table()?);
    Ok(CubicRow {
        n,
        a123: pick("{1,2,3}"),
        a12_3: pick("{1,2}{3}"),
        a1_2_3: pick("{1}{2}{3}"),
        mean_gradient_sq,
        variance,
    })
}

/// Norm table and slopes over `ns`.
pub fn cubic_chain_scaling(ns: &[usize], opts: &NormOptions) -> Result<CubicReport> {
    let rows = ns
        .iter()
        .map(|&n| cubic_chain_row(n, opts))
        .collect::<Result<Vec<_>>>()?;
    let x: Vec<f64> = rows.iter().map(|r| r.n as f64).collect();
    let col = |f: fn(&CubicRow) -> f64| -> Result<f64> {
        let y: Vec<f64> = rows.iter().map(f).collect();
        fit_exponent(&x, &y)
    };
    let slopes = [
        col(|r| r.a123)?,
        col(|r| r.a12_3)?,
        col(|r| r.a1_2_3)?,
        col(|r| r.mean_gradient_sq)?,
        col(|r| r.variance)?,
    ];
    Ok(CubicReport { rows, slopes })
}

/// Bond statistics of the chain.
#[derive(Debug, Clone, PartialEq)]
pub struct ChainBondReport {
    pub n: usize,
    /// `1 / (1 + e^{−2J})`.
    pub formula: f64,
    /// `P(σ_i σ_{i+1} = 1)` for each bond from the exact law.
    pub exact: Vec<f64>,
    /// Largest `|P(b_i = b_j = 1) − P(b_i = 1) P(b_j = 1)|` over bond pairs.
    pub max_pair_dependence: f64,
    /// Glauber estimate of the bond marginal, averaged over bonds.
    pub sampled: f64,
    pub sampled_stderr: f64,
    pub samples: usize,
}

pub fn chain_bonds(n: usize, samples: usize, seed: u64) -> Result<ChainBondReport> {
    if n < 2 {
        return Err(Error::InvalidArgument("chain needs at least two sites".into()));
    }
    let model = IsingModel::chain(n, CHAIN_COUPLING)?;
    let law = model.exact_law()?;
    let bonds = n - 1;
    let bond_plus = |b: usize, i: usize| (b >> i & 1) == (b >> (i + 1) & 1);
    let mut exact = vec![0.0; bonds];
    let mut pair = vec![0.0; bonds * bonds];
    for (b, &p) in law.probs().iter().enumerate() {
        for i in 0..bonds {
            if bond_plus(b, i) {
                exact[i] += p;
                for j in (i + 1)..bonds {
                    if bond_plus(b, j) {
                        pair[i * bonds + j] += p;
                    }
                }
            }
        }
    }
    let mut max_pair_dependence: f64 = 0.0;
    for i in 0..bonds {
        for j in (i + 1)..bonds {
            max_pair_dependence = max_pair_dependence.max((pair[i * bonds + j] - exact[i] * exact[j]).abs());
        }
    }
    // Fraction of positive bonds per sample, as an affine polynomial.
    let mut terms = vec![(0u64, 0.5)];
    terms.extend((0..bonds).map(|i| ((0b11u64) << i, 0.5 / bonds as f64)));
    let poly = TetrahedralPolynomial::from_terms(n, terms)?;
    let opts = SampleOptions {
        samples,
        seed,
        thinning: 3,
        ..SampleOptions::default()
    };
    let s = sample_statistic(&model, &poly, &opts)?;
    let sampled = s.mean();
    Ok(ChainBondReport {
        n,
        formula: 1.0 / (1.0 + (-2.0 * CHAIN_COUPLING).exp()),
        exact,
        max_pair_dependence,
        sampled,
        sampled_stderr: (s.variance() / samples as f64).sqrt(),
        samples,
    })
}

/// `a_ij = 1/(i + j)²` with 1-based indices.
pub fn inverse_square_matrix(n: usize) -> DMatrix<f64> {
    DMatrix::from_fn(n, n, |i, j| 1.0 / ((i + j + 2) as f64).powi(2))
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct GumbelMatrixRow {
    pub n: usize,
    pub p: f64,
    pub norm_12p: f64,
    pub norm_1_2p: f64,
}

impl GumbelMatrixRow {
    pub fn norm_1_2p_over_log(&self) -> f64 {
        self.norm_1_2p / self.p.ln()
    }
}

/// Interpolation norms of [`inverse_square_matrix`] on an `n × p` grid.
pub fn gumbel_matrix(ns: &[usize], ps: &[f64], opts: &NormOptions) -> Result<Vec<GumbelMatrixRow>> {
    let mut rows = Vec::with_capacity(ns.len() * ps.len());
    for &n in ns {
        let a = inverse_square_matrix(n);
        for &p in ps {
            rows.push(GumbelMatrixRow {
                n,
                p,
                norm_12p: matrix_norm_12p(&a, p)?,
                norm_1_2p: matrix_norm_1_2_p_with(&a, p, opts, &[])?.value,
            });
        }
    }
    Ok(rows)
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct GumbelVectorRow {
    pub p: f64,
    pub value: f64,
    /// `Σ_{i≤⌊p⌋} x_i↓ + √p (Σ_{i>⌊p⌋} (x_i↓)²)^{1/2}`.
    pub rearrangement: f64,
}

/// Rearrangement sandwich quantity for `‖x‖_{{1},p}`.
pub fn rearrangement_sum(x: &[f64], p: f64) -> (f64, f64) {
    let mut a: Vec<f64> = x.iter().map(|v| v.abs()).collect();
    a.sort_by(|u, v| v.total_cmp(u));
    let k = (p.floor() as usize).min(a.len());
    let head: f64 = a[..k].iter().sum();
    let tail = p.sqrt() * a[k..].iter().map(|v| v * v).sum::<f64>().sqrt();
    (head, tail)
}

/// `‖(1, 1/2, …, 1/n)‖_{{1},p}` over `ps`.
pub fn gumbel_vector(n: usize, ps: &[f64]) -> Result<Vec<GumbelVectorRow>> {
    let x: Vec<f64> = (1..=n).map(|i| 1.0 / i as f64).collect();
    ps.iter()
        .map(|&p| {
            let (head, tail) = rearrangement_sum(&x, p);
            Ok(GumbelVectorRow {
                p,
                value: latala_vector_norm(&x, p)?,
                rearrangement: head + tail,
            })
        })
        .collect()
}

/// Which bound an envelope case is checked against.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum EnvelopeBound {
    /// Multilevel bound from expected derivative norms.
    Multilevel,
    /// Two-sided quadratic-form bound for a nonnegative definite matrix.
    Quadratic,
}

/// A statistic of an Ising model with the bound it is validated against.
#[derive(Debug, Clone)]
pub struct EnvelopeCase {
    pub name: String,
    pub model: IsingModel,
    pub poly: TetrahedralPolynomial,
    pub bound: EnvelopeBound,
    /// Matrix for [`EnvelopeBound::Quadratic`].
    pub matrix: Option<DMatrix<f64>>,
}

/// Per-case outcome of calibrate-on-one-seed, validate-on-another.
#[derive(Debug, Clone, PartialEq)]
pub struct EnvelopeOutcome {
    pub name: String,
    pub kind: BoundKind,
    pub strength: f64,
    pub rows: Vec<EnvelopeRow>,
    pub violations: usize,
    /// Sample excess kurtosis of the statistic on the calibration seed.
    pub kurtosis: f64,
    pub bound: TailBound,
    pub validation_curve: SurvivalCurve,
}

/// Sampling and grid settings for the protocol.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ProtocolOptions {
    pub samples: usize,
    pub seed: u64,
    pub t_points: usize,
    /// Last grid point in units of the exact standard deviation.
    pub t_max_sd: f64,
    pub chains: usize,
}

impl Default for ProtocolOptions {
    fn default() -> Self {
        Self {
            samples: 100_000,
            seed: 2024,
            t_points: 24,
            t_max_sd: 6.0,
            chains: 8,
        }
    }
}

fn random_tetrahedral<R: Rng>(n: usize, degree: usize, rng: &mut R) -> Result<TetrahedralPolynomial> {
    let mut poly = TetrahedralPolynomial::zero(n);
    let mut err = Ok(());
    for_each_combination(n, degree, |idx| {
        let mask = idx.iter().fold(0u64, |m, &i| m | 1 << i);
        if let Err(e) = poly.add_term(mask, rng.random_range(-1.0..1.0)) {
            err = Err(e);
        }
    });
    err.map(|_| poly)
}

fn random_psd<R: Rng>(n: usize, rank: usize, rng: &mut R) -> DMatrix<f64> {
    let b = DMatrix::from_fn(n, rank, |_, _| rng.random_range(-1.0..1.0));
    &b * b.transpose() / rank as f64
}

/// Quadratic form `⟨Ax, x⟩` as a polynomial on the cube.
pub fn quadratic_form_poly(a: &DMatrix<f64>) -> Result<TetrahedralPolynomial> {
    let n = a.nrows();
    let data: Vec<f64> = (0..n * n).map(|k| a[(k / n, k % n)]).collect();
    TetrahedralPolynomial::from_tensor(&SymmetricTensor::symmetrize(2, n, &data)?)
}

/// The twelve cases: linear, quadratic and cubic statistics on a product,
/// a chain and a random Dobrushin model, plus nonnegative definite
/// quadratic forms on the three centred models.
pub fn standard_suite(n: usize, seed: u64) -> Result<Vec<EnvelopeCase>> {
    let mut rng = stream(seed, 0);
    let models = [
        ("product", IsingModel::independent(vec![0.0; n])?),
        ("chain", IsingModel::chain(n, CHAIN_COUPLING)?),
        ("dobrushin", IsingModel::random_dobrushin(n, 0.5, 0.2, &mut rng)?),
    ];
    let mut cases = Vec::new();
    for (name, model) in &models {
        for (deg, label) in [(1, "linear"), (2, "quadratic"), (3, "cubic")] {
            cases.push(EnvelopeCase {
                name: format!("{name}-{label}"),
                model: model.clone(),
                poly: random_tetrahedral(n, deg, &mut rng)?,
                bound: EnvelopeBound::Multilevel,
                matrix: None,
            });
        }
    }
    for (name, model) in &models {
        let centred = IsingModel::new(n, model.couplings().to_vec(), vec![0.0; n])?;
        let a = random_psd(n, 2, &mut rng);
        cases.push(EnvelopeCase {
            name: format!("{name}-psd"),
            model: centred,
            poly: quadratic_form_poly(&a)?,
            bound: EnvelopeBound::Quadratic,
            matrix: Some(a),
        });
    }
    Ok(cases)
}

/// Bound with unit constants for a case.
pub fn case_bound(case: &EnvelopeCase) -> Result<TailBound> {
    let law = case.model.exact_law()?;
    match case.bound {
        EnvelopeBound::Multilevel => {
            let levels = multilevel_levels(&case.poly, &law, &NormOptions::default())?;
            Ok(TailBound::exponential(BoundKind::Multilevel, levels, 1.0))
        }
        EnvelopeBound::Quadratic => {
            let a = case
                .matrix
                .as_ref()
                .ok_or_else(|| Error::InvalidArgument("quadratic case without a matrix".into()))?;
            let grid = p_grid(0.05, a.nrows() as f64, 30);
            quad_tail_bound(a, &grid, 1.0, 1.0, QuadSide::TwoSided)
        }
    }
}

/// Thinning that keeps successive recorded states nearly independent.
pub fn thinning_for(model: &IsingModel) -> usize {
    let rho = model.dobrushin().rho.max(1e-3);
    ((2.0 / rho).ceil() as usize).max(3)
}

/// Survival curve of a case under one seed, centred at the exact mean.
pub fn case_curve(
    case: &EnvelopeCase,
    grid: &[f64],
    opts: &ProtocolOptions,
    seed: u64,
) -> Result<(SurvivalCurve, f64)> {
    let law = case.model.exact_law()?;
    let table = case.poly.to_table()?;
    let mean = law.expectation(&table);
    let sopts = SampleOptions {
        samples: opts.samples,
        burn_in: None,
        thinning: thinning_for(&case.model),
        seed,
        chains: opts.chains,
    };
    let s = sample_statistic(&case.model, &case.poly, &sopts)?;
    let m2 = s.values.iter().map(|v| (v - mean).powi(2)).sum::<f64>() / s.values.len() as f64;
    let m4 = s.values.iter().map(|v| (v - mean).powi(4)).sum::<f64>() / s.values.len() as f64;
    let kurtosis = if m2 > 0.0 { m4 / (m2 * m2) - 3.0 } else { 0.0 };
    Ok((empirical_tail(&s.values, grid, Some(mean))?, kurtosis))
}

/// `t` grid for a case: equally spaced up to `t_max_sd` exact standard deviations.
pub fn case_grid(case: &EnvelopeCase, opts: &ProtocolOptions) -> Result<Vec<f64>> {
    let law = case.model.exact_law()?;
    let sd = law.variance(&case.poly.to_table()?).sqrt();
    if !(sd > 0.0) {
        return Err(Error::InvalidArgument(format!("{}: statistic is constant", case.name)));
    }
    let k = opts.t_points as f64;
    Ok((1..=opts.t_points).map(|i| sd * opts.t_max_sd * i as f64 / k).collect())
}

/// Calibration seed derived from the protocol seed.
pub fn calibration_seed(seed: u64) -> u64 {
    mix(seed, 0xA)
}

/// Validation seed derived from the protocol seed.
pub fn validation_seed(seed: u64) -> u64 {
    mix(seed, 0xB)
}

/// Calibrates the bound's strength on one seed and checks it on another.
pub fn run_envelope_case(case: &EnvelopeCase, opts: &ProtocolOptions) -> Result<EnvelopeOutcome> {
    let grid = case_grid(case, opts)?;
    run_envelope_case_with(case, &grid, opts, None)
}

/// As [`run_envelope_case`] on an explicit grid; a given `strength` skips
/// calibration.
pub fn run_envelope_case_with(
    case: &EnvelopeCase,
    grid: &[f64],
    opts: &ProtocolOptions,
    strength: Option<f64>,
) -> Result<EnvelopeOutcome> {
    let base = case_bound(case)?;
    let (train, kurtosis) = case_curve(case, grid, opts, calibration_seed(opts.seed))?;
    let strength = match strength {
        Some(s) => s,
        None => crate::bounds::calibrate_constant(&base, &train, crate::mc::CALIBRATION_CAP)?,
    };
    let bound = base.with_strength(strength);
    let (test, _) = case_curve(case, grid, opts, validation_seed(opts.seed))?;
    let report = crate::mc::validate_envelope(&test, &bound)?;
    Ok(EnvelopeOutcome {
        name: case.name.clone(),
        kind: bound.kind,
        strength,
        rows: report.rows,
        violations: report.violations,
        kurtosis,
        bound,
        validation_curve: test,
    })
}

/// Negative control: the calibrated bound with its scale halved, i.e.
/// evaluated at `2t`, against the same validation curve.
pub fn negative_control(outcome: &EnvelopeOutcome) -> Result<usize> {
    let halved = outcome.bound.rescaled(0.5);
    Ok(crate::mc::validate_envelope(&outcome.validation_curve, &halved)?.violations)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn cubic_tensor_structure() {
        let t = chain_cubic_tensor(6);
        assert!(t.is_symmetric(0.0));
        assert!(t.has_vanishing_diagonals(0.0));
        assert_eq!(t.get(&[0, 2, 3]), 1.0);
        assert_eq!(t.get(&[3, 0, 2]), 1.0);
        assert_eq!(t.get(&[0, 1, 3]), 0.0);
        // Σ_{i<j} 1 over j ≤ n − 2: C(n−1, 2) sorted triples, each 6 times.
        assert_eq!(t.data().iter().sum::<f64>(), 6.0 * 10.0);
    }

    #[test]
    fn chain_bonds_are_exact() {
        let r = chain_bonds(6, 2000, 1).unwrap();
        for &e in &r.exact {
            assert!((e - r.formula).abs() < 1e-12);
        }
        assert!(r.max_pair_dependence < 1e-12);
    }

    #[test]
    fn inverse_square_entries() {
        let a = inverse_square_matrix(3);
        assert_eq!(a[(0, 0)], 0.25);
        assert_eq!(a[(1, 2)], 1.0 / 25.0);
        assert_eq!(a[(2, 1)], a[(1, 2)]);
    }

    #[test]
    fn vector_sandwich() {
        for row in gumbel_vector(200, &[1.0, 2.5, 4.0, 16.0, 64.0]).unwrap() {
            assert!(row.value <= row.rearrangement + 1e-12);
            assert!(row.rearrangement <= 2.0 * row.value + 1e-12);
        }
    }

    #[test]
    fn quadratic_form_poly_matches_direct() {
        let mut rng = stream(3, 0);
        let a = random_psd(4, 2, &mut rng);
        let poly = quadratic_form_poly(&a).unwrap();
        for b in 0..16u64 {
            let x: Vec<f64> = (0..4).map(|i| if b >> i & 1 == 1 { -1.0 } else { 1.0 }).collect();
            let v = nalgebra::DVector::from_vec(x.clone());
            let direct = v.dot(&(&a * &v));
            assert!((poly.evaluate(&x).unwrap() - direct).abs() < 1e-12);
        }
    }

    #[test]
    fn suite_has_twelve_cases() {
        let suite = standard_suite(6, 1).unwrap();
        assert_eq!(suite.len(), 12);
        assert!(suite.iter().all(|c| c.model.dobrushin().holds));
        assert_eq!(suite.iter().filter(|c| c.bound == EnvelopeBound::Quadratic).count(), 3);
    }
}
