#![allow(dead_code)]
//! Random problem generators and independent reference solvers.

use nalgebra::{DMatrix, DVector, SymmetricEigen};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;
use sgl_midas::design::DesignProblem;
use sgl_midas::timeseries::GroupStructure;

pub struct Instance {
    pub problem: DesignProblem,
    pub sizes: Vec<usize>,
}

/// Correlated Gaussian design with a sparse group signal:
/// `T ∈ [20, 100]`, `p ∈ [5, 60]`, 2 to 10 groups.
pub fn random_instance(seed: u64) -> Instance {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let n = rng.random_range(20..=100);
    let p = rng.random_range(5..=60);
    let g = rng.random_range(2..=10.min(p));
    // random composition of p into g positive parts
    let mut cuts: Vec<usize> = rand::seq::index::sample(&mut rng, p - 1, g - 1)
        .into_iter()
        .map(|c| c + 1)
        .collect();
    cuts.sort();
    let mut sizes = Vec::with_capacity(g);
    let mut prev = 0;
    for c in cuts.into_iter().chain(std::iter::once(p)) {
        sizes.push(c - prev);
        prev = c;
    }
    let rho: f64 = rng.random_range(0.0..0.6);
    let mut x = DMatrix::zeros(n, p);
    for i in 0..n {
        let mut prev: f64 = rng.sample(StandardNormal);
        for j in 0..p {
            let e: f64 = rng.sample(StandardNormal);
            prev = rho * prev + (1.0 - rho * rho).sqrt() * e;
            let scale = 0.5 + 2.0 * ((j * 7 + 3) % 5) as f64 / 5.0;
            x[(i, j)] = scale * prev;
        }
    }
    let mut beta = DVector::zeros(p);
    let mut start = 0;
    for (k, &s) in sizes.iter().enumerate() {
        if k % 2 == 0 {
            for j in start..start + s {
                if rng.random_bool(0.6) {
                    beta[j] = rng.random_range(-2.0..2.0);
                }
            }
        }
        start += s;
    }
    let noise = DVector::from_fn(n, |_, _| rng.sample::<f64, _>(StandardNormal));
    let y = &x * &beta + noise;
    let problem = DesignProblem::new(y, x, GroupStructure::from_sizes(&sizes).unwrap()).unwrap();
    Instance { problem, sizes }
}

/// The working problem: columns scaled to unit empirical norm.
pub fn working(problem: &DesignProblem) -> (DMatrix<f64>, DVector<f64>, Vec<f64>) {
    let n = problem.n_rows() as f64;
    let mut x = problem.x.clone();
    let mut scales = Vec::with_capacity(x.ncols());
    for mut c in x.column_iter_mut() {
        let s = (c.norm_squared() / n).sqrt();
        c /= s;
        scales.push(s);
    }
    (x, problem.y.clone(), scales)
}

/// `(1/T)‖y − Xb‖² + 2λ Σ_G (α|b_G|₁ + (1−α)|b_G|₂)` with unit weights.
pub fn sgl_objective(x: &DMatrix<f64>, y: &DVector<f64>, sizes: &[usize], b: &[f64], lambda: f64, alpha: f64) -> f64 {
    let r = y - x * DVector::from_column_slice(b);
    let mut pen = 0.0;
    let mut start = 0;
    for &s in sizes {
        let g = &b[start..start + s];
        pen += alpha * g.iter().map(|v| v.abs()).sum::<f64>()
            + (1.0 - alpha) * g.iter().map(|v| v * v).sum::<f64>().sqrt();
        start += s;
    }
    r.norm_squared() / x.nrows() as f64 + 2.0 * lambda * pen
}

fn group_prox(v: &mut [f64], t: f64, alpha: f64) {
    for x in v.iter_mut() {
        let a = x.abs() - alpha * t;
        *x = if a > 0.0 { x.signum() * a } else { 0.0 };
    }
    let norm = v.iter().map(|x| x * x).sum::<f64>().sqrt();
    let k = if norm > 0.0 { (1.0 - (1.0 - alpha) * t / norm).max(0.0) } else { 0.0 };
    v.iter_mut().for_each(|x| *x *= k);
}

/// Accelerated proximal gradient with adaptive restart, run to machine precision.
pub fn fista(x: &DMatrix<f64>, y: &DVector<f64>, sizes: &[usize], lambda: f64, alpha: f64) -> Vec<f64> {
    let n = x.nrows() as f64;
    let p = x.ncols();
    let gram = x.tr_mul(x) * (2.0 / n);
    let xty = x.tr_mul(y) * (2.0 / n);
    let l = SymmetricEigen::new(gram.clone()).eigenvalues.max();
    let step = 1.0 / l;
    let mut b = vec![0.0; p];
    let mut z = b.clone();
    let mut t = 1.0f64;
    let mut f_old = sgl_objective(x, y, sizes, &b, lambda, alpha);
    let mut stall = 0;
    for _ in 0..200_000 {
        let zv = DVector::from_column_slice(&z);
        let grad = &gram * &zv - &xty;
        let mut next: Vec<f64> = (0..p).map(|j| z[j] - step * grad[j]).collect();
        let mut start = 0;
        for &s in sizes {
            group_prox(&mut next[start..start + s], 2.0 * lambda * step, alpha);
            start += s;
        }
        let f = sgl_objective(x, y, sizes, &next, lambda, alpha);
        if f > f_old {
            // restart the momentum
            t = 1.0;
            z = b.clone();
            continue;
        }
        let t_next = (1.0 + (1.0 + 4.0 * t * t).sqrt()) / 2.0;
        let mom = (t - 1.0) / t_next;
        z = (0..p).map(|j| next[j] + mom * (next[j] - b[j])).collect();
        t = t_next;
        if f_old - f <= 1e-16 * (1.0 + f.abs()) {
            stall += 1;
            if stall > 50 {
                b = next;
                break;
            }
        } else {
            stall = 0;
        }
        b = next;
        f_old = f;
    }
    b
}

/// Shifted Legendre polynomials of degree 0 to 4 written out in full.
pub fn explicit_legendre(n: usize, u: f64) -> f64 {
    let x = 2.0 * u - 1.0;
    match n {
        0 => 1.0,
        1 => x,
        2 => (3.0 * x * x - 1.0) / 2.0,
        3 => (5.0 * x.powi(3) - 3.0 * x) / 2.0,
        4 => (35.0 * x.powi(4) - 30.0 * x * x + 3.0) / 8.0,
        _ => unreachable!(),
    }
}

/// Gauss-Legendre nodes and weights on [0, 1] by Newton iteration.
pub fn gauss_legendre(k: usize) -> Vec<(f64, f64)> {
    let mut out = Vec::with_capacity(k);
    for i in 0..k {
        let mut x = (std::f64::consts::PI * (i as f64 + 0.75) / (k as f64 + 0.5)).cos();
        let mut dp = 0.0;
        for _ in 0..100 {
            let (mut p0, mut p1) = (1.0, x);
            for n in 2..=k {
                let p2 = ((2 * n - 1) as f64 * x * p1 - (n - 1) as f64 * p0) / n as f64;
                p0 = p1;
                p1 = p2;
            }
            dp = k as f64 * (x * p1 - p0) / (x * x - 1.0);
            let dx = p1 / dp;
            x -= dx;
            if dx.abs() < 1e-16 {
                break;
            }
        }
        let w = 2.0 / ((1.0 - x * x) * dp * dp);
        out.push(((x + 1.0) / 2.0, w / 2.0));
    }
    out
}
