use ising_conc::bounds::{calibrate_constant, multilevel_bound};
use ising_conc::mc::{empirical_tail, sample_statistic, SampleOptions, CALIBRATION_CAP};
use ising_conc::{IsingModel, TetrahedralPolynomial};

/// Calibrated `c` for the normalised sum of ten fair signs, 10^5 samples,
/// seed 2024, on a grid fine enough to hit every atom of the law.
const SUM_OF_SIGNS_C: f64 = 0.68182373046875;

#[test]
fn calibrated_constant_for_sum_of_signs() {
    let n = 10;
    let model = IsingModel::independent(vec![0.0; n]).unwrap();
    let poly = TetrahedralPolynomial::from_terms(n, (0..n).map(|i| (1u64 << i, 1.0 / (n as f64).sqrt()))).unwrap();
    let opts = SampleOptions {
        samples: 100_000,
        seed: 2024,
        ..SampleOptions::default()
    };
    let s = sample_statistic(&model, &poly, &opts).unwrap();
    let grid: Vec<f64> = (1..=400).map(|i| 0.01 * i as f64).collect();
    let curve = empirical_tail(&s.values, &grid, Some(0.0)).unwrap();
    let bound = multilevel_bound(&poly, &model.exact_law().unwrap(), 1.0).unwrap();
    let c = calibrate_constant(&bound, &curve, CALIBRATION_CAP).unwrap();
    assert!((0.3..=0.7).contains(&c));
    assert!((c - SUM_OF_SIGNS_C).abs() <= 1e-4 * SUM_OF_SIGNS_C);
}
