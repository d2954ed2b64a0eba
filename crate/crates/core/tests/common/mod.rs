//! Brute-force oracles written independently of the library's algorithms.

#![allow(dead_code, clippy::needless_range_loop)]

use ising_conc::{IsingModel, SymmetricTensor};
use nalgebra::{DMatrix, DVector};

/// Largest singular value by power iteration on `AᵀA`.
pub fn top_singular_value(a: &DMatrix<f64>) -> f64 {
    let ata = a.transpose() * a;
    let n = ata.nrows();
    let mut v = DVector::from_fn(n, |i, _| 1.0 + 0.01 * i as f64);
    v /= v.norm();
    let mut lambda = 0.0;
    for _ in 0..200_000 {
        let w = &ata * &v;
        let next = v.dot(&w);
        let norm = w.norm();
        if norm == 0.0 {
            return 0.0;
        }
        v = w / norm;
        if (next - lambda).abs() <= 1e-16 * next.abs() {
            lambda = next;
            break;
        }
        lambda = next;
    }
    lambda.sqrt()
}

/// `sup {⟨x, y⟩ : |y|_2 ≤ √p, |y|_∞ ≤ 1}` by zooming grid search. Every
/// coordinate but one is gridded; the remaining one takes what is left of
/// the ℓ2 budget, clipped to 1. Each choice of the remaining coordinate is
/// searched separately.
pub fn latala_grid(x: &[f64], p: f64) -> f64 {
    let n = x.len();
    let ax: Vec<f64> = x.iter().map(|v| v.abs()).collect();
    if n == 1 {
        return ax[0] * p.sqrt().min(1.0);
    }
    let mut best = 0.0f64;
    for free in 0..n {
        let others: Vec<usize> = (0..n).filter(|&i| i != free).collect();
        let mut lo = vec![0.0; n - 1];
        let mut hi = vec![1.0; n - 1];
        let mut centre = vec![0.0; n - 1];
        let points = 41usize;
        for _round in 0..7 {
            let steps: Vec<f64> = lo.iter().zip(&hi).map(|(l, h)| (h - l) / (points - 1) as f64).collect();
            let mut idx = vec![0usize; n - 1];
            let mut local_best = f64::NEG_INFINITY;
            loop {
                let y: Vec<f64> = (0..n - 1).map(|k| lo[k] + steps[k] * idx[k] as f64).collect();
                let used: f64 = y.iter().map(|v| v * v).sum();
                if used <= p {
                    let last = (p - used).sqrt().min(1.0);
                    let val: f64 = others.iter().zip(&y).map(|(&i, v)| ax[i] * v).sum::<f64>() + ax[free] * last;
                    if val > local_best {
                        local_best = val;
                        centre = y;
                    }
                }
                let mut k = 0;
                while k < n - 1 {
                    idx[k] += 1;
                    if idx[k] < points {
                        break;
                    }
                    idx[k] = 0;
                    k += 1;
                }
                if k == n - 1 {
                    break;
                }
            }
            best = best.max(local_best);
            for k in 0..n - 1 {
                let w = 2.0 * steps[k];
                lo[k] = (centre[k] - w).max(0.0);
                hi[k] = (centre[k] + w).min(1.0);
            }
        }
    }
    best
}

/// `‖A‖_{{1}{2},p}` for a 3×3 matrix: zooming grid over `x`, with the inner
/// supremum over `y` given by `inner` (the vector norm of `Ax`).
pub fn matrix_1_2_p_grid<F: Fn(&[f64], f64) -> f64>(a: &DMatrix<f64>, p: f64, inner: F) -> f64 {
    assert_eq!(a.nrows(), 3);
    let eval = |x: &[f64]| {
        let ax: Vec<f64> = (0..3).map(|i| (0..3).map(|j| a[(i, j)] * x[j]).sum()).collect();
        inner(&ax, p)
    };
    let mut best = 0.0f64;
    for free in 0..3 {
        let others: Vec<usize> = (0..3).filter(|&i| i != free).collect();
        for sign in [-1.0, 1.0] {
            let (mut lo, mut hi) = ([-1.0; 2], [1.0; 2]);
            let points = 61usize;
            for _round in 0..6 {
                let step = [
                    (hi[0] - lo[0]) / (points - 1) as f64,
                    (hi[1] - lo[1]) / (points - 1) as f64,
                ];
                let mut local = (f64::NEG_INFINITY, [0.0; 2]);
                for i in 0..points {
                    for j in 0..points {
                        let u = [lo[0] + step[0] * i as f64, lo[1] + step[1] * j as f64];
                        let used = u[0] * u[0] + u[1] * u[1];
                        if used > p {
                            continue;
                        }
                        let mut x = [0.0; 3];
                        x[others[0]] = u[0];
                        x[others[1]] = u[1];
                        x[free] = sign * (p - used).sqrt().min(1.0);
                        let v = eval(&x);
                        if v > local.0 {
                            local = (v, u);
                        }
                    }
                }
                best = best.max(local.0);
                for k in 0..2 {
                    let w = 2.0 * step[k];
                    lo[k] = (local.1[k] - w).max(-1.0);
                    hi[k] = (local.1[k] + w).min(1.0);
                }
            }
        }
    }
    best
}

fn sphere_point(theta: f64, phi: f64) -> [f64; 3] {
    [theta.sin() * phi.cos(), theta.sin() * phi.sin(), theta.cos()]
}

/// Injective norm of an order-3 tensor on `R³`: angular grid over two unit
/// vectors, the third given in closed form as the normalised contraction,
/// followed by local zooming around the best grid cell.
pub fn injective_norm_grid(a: &SymmetricTensor) -> f64 {
    assert_eq!((a.order(), a.dim()), (3, 3));
    let eval = |ang: &[f64; 4]| {
        let x = sphere_point(ang[0], ang[1]);
        let y = sphere_point(ang[2], ang[3]);
        let mut s = 0.0;
        for k in 0..3 {
            let mut c = 0.0;
            for i in 0..3 {
                for j in 0..3 {
                    c += a.get(&[i, j, k]) * x[i] * y[j];
                }
            }
            s += c * c;
        }
        s.sqrt()
    };
    let (nt, np) = (36usize, 72usize);
    let mut cells = Vec::with_capacity(nt * np);
    for i in 0..nt {
        for j in 0..np {
            cells.push((
                std::f64::consts::PI * (i as f64 + 0.5) / nt as f64,
                2.0 * std::f64::consts::PI * j as f64 / np as f64,
            ));
        }
    }
    let mut best = (f64::NEG_INFINITY, [0.0; 4]);
    for &(t1, p1) in &cells {
        for &(t2, p2) in &cells {
            let ang = [t1, p1, t2, p2];
            let v = eval(&ang);
            if v > best.0 {
                best = (v, ang);
            }
        }
    }
    let mut width = [
        std::f64::consts::PI / nt as f64,
        2.0 * std::f64::consts::PI / np as f64,
        std::f64::consts::PI / nt as f64,
        2.0 * std::f64::consts::PI / np as f64,
    ];
    for _round in 0..40 {
        let centre = best.1;
        let k = 5i32;
        for a0 in -k..=k {
            for a1 in -k..=k {
                for a2 in -k..=k {
                    for a3 in -k..=k {
                        let off = [a0, a1, a2, a3];
                        let mut ang = centre;
                        for d in 0..4 {
                            ang[d] += width[d] * off[d] as f64 / k as f64;
                        }
                        let v = eval(&ang);
                        if v > best.0 {
                            best = (v, ang);
                        }
                    }
                }
            }
        }
        if best.1 == centre {
            width.iter_mut().for_each(|w| *w *= 0.5);
        }
    }
    best.0
}

/// Exhaustive check of the single-site influence bound: for every site `i`,
/// every other site `j` and every configuration, the conditional laws of
/// `σ_i` before and after flipping `σ_j` differ in total variation by at
/// most `|J_ij|`. Conditionals are read off the normalised Boltzmann
/// weights. Returns the number of violations and the largest excess.
pub fn influence_violations(model: &IsingModel) -> (usize, f64) {
    let n = model.n();
    let weight = |bits: u64| {
        let s: Vec<f64> = (0..n).map(|i| if bits >> i & 1 == 1 { -1.0 } else { 1.0 }).collect();
        let mut e = 0.0;
        for i in 0..n {
            for k in 0..n {
                e += 0.5 * model.coupling(i, k) * s[i] * s[k];
            }
            e -= model.field()[i] * s[i];
        }
        e.exp()
    };
    let w: Vec<f64> = (0..1u64 << n).map(weight).collect();
    let plus = |i: usize, bits: u64| {
        let up = w[(bits & !(1 << i)) as usize];
        let down = w[(bits | 1 << i) as usize];
        up / (up + down)
    };
    let mut violations = 0;
    let mut excess = f64::NEG_INFINITY;
    for bits in 0..1u64 << n {
        for i in 0..n {
            for j in 0..n {
                if i == j {
                    continue;
                }
                let tv = (plus(i, bits) - plus(i, bits ^ (1 << j))).abs();
                let gap = tv - model.coupling(i, j).abs();
                excess = excess.max(gap);
                if gap > 1e-12 {
                    violations += 1;
                }
            }
        }
    }
    (violations, excess)
}
