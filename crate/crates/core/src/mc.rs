//! Glauber sampling, empirical tails, exponent fits and envelope checks.

use rand::Rng;
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;

use crate::bounds::{calibrate_constant, TailBound};
use crate::model::{logistic, IsingModel, SpinConfig};
use crate::rng::stream;
use crate::{Error, Result, TetrahedralPolynomial};

/// Random-scan single-site heat-bath chain with incrementally maintained
/// local fields.
#[derive(Debug, Clone)]
pub struct GlauberChain<'a> {
    model: &'a IsingModel,
    spins: Vec<f64>,
    /// `m_i = Σ_j J_ij σ_j − h_i`.
    fields: Vec<f64>,
    neighbours: Vec<Vec<(usize, f64)>>,
    rng: ChaCha8Rng,
    sweeps: u64,
}

impl<'a> GlauberChain<'a> {
    /// Starts from a uniformly random configuration drawn from `rng`.
    pub fn new(model: &'a IsingModel, mut rng: ChaCha8Rng) -> Self {
        let spins: Vec<f64> = (0..model.n())
            .map(|_| if rng.random::<bool>() { 1.0 } else { -1.0 })
            .collect();
        Self::with_state(model, spins, rng)
    }

    pub fn from_config(model: &'a IsingModel, config: &SpinConfig, rng: ChaCha8Rng) -> Result<Self> {
        if config.len() != model.n() {
            return Err(Error::DimensionMismatch {
                expected: model.n(),
                got: config.len(),
            });
        }
        Ok(Self::with_state(model, config.as_reals(), rng))
    }

    fn with_state(model: &'a IsingModel, spins: Vec<f64>, rng: ChaCha8Rng) -> Self {
        let n = model.n();
        let neighbours: Vec<Vec<(usize, f64)>> = (0..n)
            .map(|i| {
                (0..n)
                    .filter_map(|k| {
                        let v = model.coupling(i, k);
                        (v != 0.0).then_some((k, v))
                    })
                    .collect()
            })
            .collect();
        let fields = (0..n)
            .map(|i| neighbours[i].iter().map(|&(k, v)| v * spins[k]).sum::<f64>() - model.field()[i])
            .collect();
        Self {
            model,
            spins,
            fields,
            neighbours,
            rng,
            sweeps: 0,
        }
    }

    /// One heat-bath update at site `i`.
    pub fn update_site(&mut self, i: usize) {
        let plus = logistic(2.0 * self.fields[i]);
        let new = if self.rng.random::<f64>() < plus { 1.0 } else { -1.0 };
        let delta = new - self.spins[i];
        if delta != 0.0 {
            self.spins[i] = new;
            for &(k, v) in &self.neighbours[i] {
                self.fields[k] += v * delta;
            }
        }
    }

    /// `n` updates at uniformly chosen sites.
    pub fn sweep(&mut self) {
        let n = self.spins.len();
        for _ in 0..n {
            let i = self.rng.random_range(0..n);
            self.update_site(i);
        }
        self.sweeps += 1;
    }

    pub fn run(&mut self, sweeps: usize) {
        for _ in 0..sweeps {
            self.sweep();
        }
    }

    pub fn spins(&self) -> &[f64] {
        &self.spins
    }

    pub fn state(&self) -> SpinConfig {
        SpinConfig::new(self.spins.iter().map(|&s| s as i8).collect()).expect("spins stay ±1")
    }

    /// Bit-encoded state (bit `i` set iff `σ_i = −1`); requires `n < 64`.
    pub fn state_bits(&self) -> u64 {
        self.spins
            .iter()
            .enumerate()
            .fold(0, |b, (i, &s)| if s < 0.0 { b | 1 << i } else { b })
    }

    pub fn sweeps(&self) -> u64 {
        self.sweeps
    }

    pub fn model(&self) -> &IsingModel {
        self.model
    }
}

/// `⌈10 · ln(2^n) / ρ⌉` sweeps.
pub fn default_burn_in(model: &IsingModel) -> Result<usize> {
    let rho = model.dobrushin().rho;
    if rho <= 0.0 {
        return Err(Error::NotDobrushin(rho));
    }
    Ok((10.0 * model.n() as f64 * std::f64::consts::LN_2 / rho).ceil() as usize)
}

/// Sampling schedule shared by all chains.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SampleOptions {
    pub samples: usize,
    /// `None` selects [`default_burn_in`].
    pub burn_in: Option<usize>,
    /// Sweeps between recorded states.
    pub thinning: usize,
    pub seed: u64,
    /// Number of independent chains; fixed so results do not depend on the
    /// thread count.
    pub chains: usize,
}

impl Default for SampleOptions {
    fn default() -> Self {
        Self {
            samples: 10_000,
            burn_in: None,
            thinning: 1,
            seed: 0,
            chains: 8,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Samples {
    /// Concatenated in chain order.
    pub values: Vec<f64>,
    pub chain_means: Vec<f64>,
    /// `max − min` of the chain means.
    pub mean_spread: f64,
    pub burn_in: usize,
}

impl Samples {
    pub fn mean(&self) -> f64 {
        self.values.iter().sum::<f64>() / self.values.len() as f64
    }

    pub fn variance(&self) -> f64 {
        let m = self.mean();
        self.values.iter().map(|v| (v - m) * (v - m)).sum::<f64>() / (self.values.len() as f64 - 1.0)
    }
}

fn resolve_burn_in(model: &IsingModel, opts: &SampleOptions) -> Result<usize> {
    match opts.burn_in {
        Some(b) => {
            let rho = model.dobrushin().rho;
            if rho <= 0.0 {
                log::warn!("sampling outside the Dobrushin regime (rho = {rho}) with a user burn-in of {b} sweeps");
            }
            Ok(b)
        }
        None => default_burn_in(model),
    }
}

fn chain_quota(samples: usize, chains: usize, c: usize) -> usize {
    samples / chains + usize::from(c < samples % chains)
}

/// Runs `opts.chains` independent chains and records `stat(state)` after
/// burn-in and every `thinning` sweeps.
pub fn sample_fn<F>(model: &IsingModel, opts: &SampleOptions, stat: F) -> Result<Samples>
where
    F: Fn(&[f64]) -> f64 + Sync,
{
    if opts.samples == 0 || opts.chains == 0 || opts.thinning == 0 {
        return Err(Error::InvalidArgument(
            "samples, chains and thinning must be positive".into(),
        ));
    }
    let burn_in = resolve_burn_in(model, opts)?;
    let per_chain: Vec<Vec<f64>> = (0..opts.chains)
        .into_par_iter()
        .map(|c| {
            let quota = chain_quota(opts.samples, opts.chains, c);
            let mut chain = GlauberChain::new(model, stream(opts.seed, c as u64));
            chain.run(burn_in);
            let mut out = Vec::with_capacity(quota);
            for _ in 0..quota {
                chain.run(opts.thinning);
                out.push(stat(chain.spins()));
            }
            out
        })
        .collect();
    let chain_means: Vec<f64> = per_chain
        .iter()
        .filter(|v| !v.is_empty())
        .map(|v| v.iter().sum::<f64>() / v.len() as f64)
        .collect();
    let mean_spread = chain_means.iter().cloned().fold(f64::NEG_INFINITY, f64::max)
        - chain_means.iter().cloned().fold(f64::INFINITY, f64::min);
    Ok(Samples {
        values: per_chain.concat(),
        chain_means,
        mean_spread,
        burn_in,
    })
}

/// Samples of `poly(X)` under Glauber dynamics.
pub fn sample_statistic(model: &IsingModel, poly: &TetrahedralPolynomial, opts: &SampleOptions) -> Result<Samples> {
    if poly.n() != model.n() {
        return Err(Error::DimensionMismatch {
            expected: model.n(),
            got: poly.n(),
        });
    }
    sample_fn(model, opts, |x| poly.evaluate(x).expect("dimension checked"))
}

/// Empirical law over `{−1,1}^n` (bit-encoded) from Glauber samples.
pub fn empirical_law(model: &IsingModel, opts: &SampleOptions) -> Result<Vec<f64>> {
    let n = model.n();
    if n > crate::ENUMERATION_CAP {
        return Err(Error::Capacity {
            what: "empirical law",
            n,
            cap: crate::ENUMERATION_CAP,
        });
    }
    let burn_in = resolve_burn_in(model, opts)?;
    let counts: Vec<Vec<u64>> = (0..opts.chains)
        .into_par_iter()
        .map(|c| {
            let mut hist = vec![0u64; 1 << n];
            let mut chain = GlauberChain::new(model, stream(opts.seed, c as u64));
            chain.run(burn_in);
            for _ in 0..chain_quota(opts.samples, opts.chains, c) {
                chain.run(opts.thinning);
                hist[chain.state_bits() as usize] += 1;
            }
            hist
        })
        .collect();
    let mut total = vec![0u64; 1 << n];
    for h in counts {
        for (t, v) in total.iter_mut().zip(h) {
            *t += v;
        }
    }
    Ok(total.into_iter().map(|c| c as f64 / opts.samples as f64).collect())
}

/// `½ Σ |p − q|`.
pub fn tv_distance(p: &[f64], q: &[f64]) -> f64 {
    0.5 * p.iter().zip(q).map(|(a, b)| (a - b).abs()).sum::<f64>()
}

/// Empirical `P(|f − center| ≥ t)` on a grid, with binomial standard errors.
#[derive(Debug, Clone, PartialEq)]
pub struct SurvivalCurve {
    pub t: Vec<f64>,
    pub survival: Vec<f64>,
    pub stderr: Vec<f64>,
    pub samples: usize,
}

/// Survival curve centred at `center`, or at the sample mean when `None`.
pub fn empirical_tail(samples: &[f64], grid: &[f64], center: Option<f64>) -> Result<SurvivalCurve> {
    if samples.is_empty() {
        return Err(Error::Empty("samples"));
    }
    if grid.is_empty() {
        return Err(Error::Empty("t grid"));
    }
    if grid.windows(2).any(|w| !(w[1] > w[0])) {
        return Err(Error::InvalidArgument("t grid must be strictly increasing".into()));
    }
    let n = samples.len();
    let center = center.unwrap_or_else(|| samples.iter().sum::<f64>() / n as f64);
    let mut dev: Vec<f64> = samples.iter().map(|v| (v - center).abs()).collect();
    dev.sort_by(f64::total_cmp);
    let (survival, stderr) = grid
        .iter()
        .map(|&t| {
            let below = dev.partition_point(|&d| d < t);
            let s = (n - below) as f64 / n as f64;
            (s, (s * (1.0 - s) / n as f64).sqrt())
        })
        .unzip();
    Ok(SurvivalCurve {
        t: grid.to_vec(),
        survival,
        stderr,
        samples: n,
    })
}

/// Least-squares slope of `ln value` against `ln n`.
pub fn fit_exponent(ns: &[f64], values: &[f64]) -> Result<f64> {
    if ns.len() != values.len() {
        return Err(Error::DimensionMismatch {
            expected: ns.len(),
            got: values.len(),
        });
    }
    if ns.len() < 4 {
        return Err(Error::InvalidArgument("need at least 4 grid points".into()));
    }
    if ns.iter().chain(values).any(|&v| !(v > 0.0)) {
        return Err(Error::InvalidArgument("exponent fit needs positive values".into()));
    }
    let xs: Vec<f64> = ns.iter().map(|v| v.ln()).collect();
    let ys: Vec<f64> = values.iter().map(|v| v.ln()).collect();
    let k = xs.len() as f64;
    let mx = xs.iter().sum::<f64>() / k;
    let my = ys.iter().sum::<f64>() / k;
    let sxy: f64 = xs.iter().zip(&ys).map(|(x, y)| (x - mx) * (y - my)).sum();
    let sxx: f64 = xs.iter().map(|x| (x - mx) * (x - mx)).sum();
    Ok(sxy / sxx)
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct EnvelopeRow {
    pub t: f64,
    pub survival: f64,
    pub stderr: f64,
    pub bound: f64,
    pub branch: Option<usize>,
    pub violated: bool,
}

#[derive(Debug, Clone, PartialEq)]
pub struct EnvelopeReport {
    pub rows: Vec<EnvelopeRow>,
    pub violations: usize,
    /// Largest strength the curve supports (see [`calibrate_constant`]);
    /// `None` when no strength fits.
    pub calibrated: Option<f64>,
}

/// Cap returned by calibration when the curve never binds.
pub const CALIBRATION_CAP: f64 = 1e6;

/// Flags grid points where `bound(t) + 2·stderr < survival(t)`.
pub fn validate_envelope(curve: &SurvivalCurve, bound: &TailBound) -> Result<EnvelopeReport> {
    let len = curve.t.len();
    if curve.survival.len() != len || curve.stderr.len() != len {
        return Err(Error::GridMismatch(format!(
            "t has {len} points, survival {}, stderr {}",
            curve.survival.len(),
            curve.stderr.len()
        )));
    }
    let rows: Vec<EnvelopeRow> = (0..len)
        .map(|i| {
            let ev = bound.evaluate(curve.t[i]);
            EnvelopeRow {
                t: curve.t[i],
                survival: curve.survival[i],
                stderr: curve.stderr[i],
                bound: ev.bound,
                branch: ev.branch,
                violated: ev.bound + 2.0 * curve.stderr[i] < curve.survival[i],
            }
        })
        .collect();
    let violations = rows.iter().filter(|r| r.violated).count();
    let calibrated = match calibrate_constant(bound, curve, CALIBRATION_CAP) {
        Ok(c) => Some(c),
        Err(Error::CalibrationInfeasible(_)) | Err(Error::Empty(_)) => None,
        Err(e) => return Err(e),
    };
    Ok(EnvelopeReport {
        rows,
        violations,
        calibrated,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::bounds::{bonami_bound, BoundKind, Level};
    use rand_distr::{Distribution, StandardNormal};

    #[test]
    fn free_model_sweep_gives_fair_spins() {
        let m = IsingModel::independent(vec![0.0; 4]).unwrap();
        let mut plus = 0usize;
        let trials = 20_000;
        for s in 0..trials {
            let mut chain = GlauberChain::new(&m, stream(1, s));
            chain.update_site(2);
            plus += usize::from(chain.spins()[2] > 0.0);
        }
        let frac = plus as f64 / trials as f64;
        assert!((frac - 0.5).abs() < 4.0 * (0.25 / trials as f64).sqrt());
    }

    #[test]
    fn fixed_seed_is_reproducible() {
        let m = IsingModel::chain(10, 0.3).unwrap();
        let mut a = GlauberChain::new(&m, stream(7, 3));
        let mut b = GlauberChain::new(&m, stream(7, 3));
        for _ in 0..50 {
            a.sweep();
            b.sweep();
            assert_eq!(a.spins(), b.spins());
        }
        assert_eq!(a.sweeps(), 50);
    }

    #[test]
    fn local_fields_stay_consistent() {
        let mut rng = stream(8, 0);
        let m = IsingModel::random_dobrushin(9, 0.7, 0.3, &mut rng).unwrap();
        let mut chain = GlauberChain::new(&m, stream(8, 1));
        chain.run(100);
        let bits = chain.state_bits();
        for i in 0..9 {
            assert!((chain.fields[i] - m.local_field_bits(i, bits)).abs() < 1e-12);
        }
    }

    #[test]
    fn constant_poly_gives_constant_samples() {
        let m = IsingModel::chain(5, 0.3).unwrap();
        let poly = TetrahedralPolynomial::from_terms(5, [(0, 2.5)]).unwrap();
        let opts = SampleOptions {
            samples: 100,
            ..Default::default()
        };
        let s = sample_statistic(&m, &poly, &opts).unwrap();
        assert_eq!(s.values.len(), 100);
        assert!(s.values.iter().all(|&v| v == 2.5));
    }

    #[test]
    fn sum_of_fair_signs_has_variance_n() {
        let n = 10;
        let m = IsingModel::independent(vec![0.0; n]).unwrap();
        let poly = TetrahedralPolynomial::from_terms(n, (0..n).map(|i| (1u64 << i, 1.0))).unwrap();
        let opts = SampleOptions {
            samples: 100_000,
            seed: 4,
            ..Default::default()
        };
        let s = sample_statistic(&m, &poly, &opts).unwrap();
        assert!((s.variance() / n as f64 - 1.0).abs() < 0.05);
    }

    #[test]
    fn refuses_without_dobrushin() {
        let m = IsingModel::chain(4, 0.6).unwrap();
        let poly = TetrahedralPolynomial::zero(4);
        let opts = SampleOptions::default();
        assert!(matches!(
            sample_statistic(&m, &poly, &opts),
            Err(Error::NotDobrushin(_))
        ));
        let explicit = SampleOptions {
            burn_in: Some(10),
            samples: 10,
            ..opts
        };
        assert!(sample_statistic(&m, &poly, &explicit).is_ok());
    }

    #[test]
    fn sampling_is_thread_count_independent() {
        let m = IsingModel::chain(6, 0.3).unwrap();
        let poly = TetrahedralPolynomial::from_terms(6, [(0b11, 1.0)]).unwrap();
        let opts = SampleOptions {
            samples: 1000,
            seed: 9,
            ..Default::default()
        };
        let a = sample_statistic(&m, &poly, &opts).unwrap();
        let pool = rayon::ThreadPoolBuilder::new().num_threads(1).build().unwrap();
        let b = pool.install(|| sample_statistic(&m, &poly, &opts).unwrap());
        assert_eq!(a, b);
    }

    #[test]
    fn tail_of_equal_samples() {
        let c = empirical_tail(&[1.0; 20], &[0.1, 1.0], None).unwrap();
        assert_eq!(c.survival, vec![0.0, 0.0]);
        assert!(empirical_tail(&[], &[1.0], None).is_err());
        assert!(empirical_tail(&[1.0], &[], None).is_err());
        assert!(empirical_tail(&[1.0], &[1.0, 0.5], None).is_err());
    }

    #[test]
    fn gaussian_tail_reference() {
        let mut rng = stream(12, 0);
        let xs: Vec<f64> = (0..200_000).map(|_| StandardNormal.sample(&mut rng)).collect();
        let c = empirical_tail(&xs, &[0.5, 1.0, 2.0], Some(0.0)).unwrap();
        assert!((c.survival[1] - 0.317_310_507_862_914_1).abs() < 4.0 * c.stderr[1]);
        assert!(c.survival.windows(2).all(|w| w[1] <= w[0]));
    }

    #[test]
    fn exponent_of_square() {
        let ns = [6.0, 8.0, 10.0, 12.0, 14.0];
        let vals: Vec<f64> = ns.iter().map(|n| n * n).collect();
        assert!((fit_exponent(&ns, &vals).unwrap() - 2.0).abs() < 1e-12);
        assert!(fit_exponent(&ns[..3], &vals[..3]).is_err());
        assert!(fit_exponent(&ns, &[1.0, 0.0, 1.0, 1.0, 1.0]).is_err());
    }

    #[test]
    fn trivial_envelope_never_violated() {
        let curve = SurvivalCurve {
            t: vec![0.1, 0.5, 1.0],
            survival: vec![1.0, 0.6, 0.2],
            stderr: vec![0.0, 0.01, 0.01],
            samples: 1000,
        };
        let two = TailBound::exponential(BoundKind::Bonami, vec![Level::new(2, "x", f64::INFINITY, 2)], 1.0);
        let r = validate_envelope(&curve, &two).unwrap();
        assert_eq!(r.violations, 0);
        let tight = bonami_bound(0.01, 10.0);
        assert!(validate_envelope(&curve, &tight).unwrap().violations > 0);
        let broken = SurvivalCurve {
            stderr: vec![0.0],
            ..curve
        };
        assert!(matches!(validate_envelope(&broken, &two), Err(Error::GridMismatch(_))));
    }
}
