//! Shared test-side oracles, deliberately independent of the library code
//! paths they check: a scaling-and-squaring matrix exponential for the heat
//! semigroup, a fixed-step classical Runge-Kutta reference for the flows,
//! and a derivative-free minimizer over the gamma sphere for the optimal
//! curvature bound.

#![allow(dead_code)]

use curvflow_core::calculus::{gamma_bilinear, laplacian, VertexFunction};
use curvflow_core::curvature::Dimension;
use curvflow_core::graph::Graph;
use nalgebra::DMatrix;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

/// Matrix exponential by scaling and squaring with a Taylor tail evaluated
/// to machine precision at the scaled norm.
pub fn expm(a: &DMatrix<f64>) -> DMatrix<f64> {
    let n = a.nrows();
    let norm = a.abs().max();
    let squarings = if norm > 0.25 {
        (norm / 0.25).log2().ceil().max(0.0) as u32
    } else {
        0
    };
    let scaled = a / 2f64.powi(squarings as i32);
    let mut result = DMatrix::identity(n, n);
    let mut term = DMatrix::identity(n, n);
    for k in 1..60 {
        term = &term * &scaled / k as f64;
        result += &term;
        if term.abs().max() < 1e-18 {
            break;
        }
    }
    for _ in 0..squarings {
        result = &result * &result;
    }
    result
}

/// Dense generator matrix of the graph Laplacian, acting on coordinate
/// vectors by left multiplication.
pub fn laplacian_matrix(g: &Graph) -> DMatrix<f64> {
    let n = g.vertex_count();
    let mut m = DMatrix::zeros(n, n);
    for x in 0..n {
        for &(y, q) in g.out_edges(x) {
            m[(x, y)] += q;
            m[(x, x)] -= q;
        }
    }
    m
}

/// Heat semigroup reference: exp(t L) applied to f via the dense matrix
/// exponential. Only meant for small graphs.
pub fn heat_reference(g: &Graph, f: &[f64], t: f64) -> Vec<f64> {
    let p = expm(&(laplacian_matrix(g) * t));
    let v = nalgebra::DVector::from_column_slice(f);
    (&p * v).iter().copied().collect()
}

/// Classical fourth-order Runge-Kutta with a fixed step count, for either
/// the linear or the nonlinear field.
pub fn rk4_reference(g: &Graph, u0: &[f64], t: f64, steps: usize, nonlinear: bool) -> Vec<f64> {
    let field = |u: &[f64], out: &mut [f64]| {
        for x in 0..out.len() {
            out[x] = g
                .out_edges(x)
                .iter()
                .map(|&(y, q)| {
                    let d = u[y] - u[x];
                    if nonlinear {
                        q * d * (1.0 + 0.5 * d)
                    } else {
                        q * d
                    }
                })
                .sum();
        }
    };
    let h = t / steps as f64;
    let dim = u0.len();
    let mut y = u0.to_vec();
    let mut k1 = vec![0.0; dim];
    let mut k2 = vec![0.0; dim];
    let mut k3 = vec![0.0; dim];
    let mut k4 = vec![0.0; dim];
    let mut tmp = vec![0.0; dim];
    for _ in 0..steps {
        field(&y, &mut k1);
        for i in 0..dim {
            tmp[i] = y[i] + 0.5 * h * k1[i];
        }
        field(&tmp, &mut k2);
        for i in 0..dim {
            tmp[i] = y[i] + 0.5 * h * k2[i];
        }
        field(&tmp, &mut k3);
        for i in 0..dim {
            tmp[i] = y[i] + h * k3[i];
        }
        field(&tmp, &mut k4);
        for i in 0..dim {
            y[i] += h / 6.0 * (k1[i] + 2.0 * k2[i] + 2.0 * k3[i] + k4[i]);
        }
    }
    y
}

/// Rayleigh quotient of the curvature inequality at `x` in a coordinate
/// direction on the punctured two-ball, evaluated through the operator
/// recursion (no local-form matrices, no eigensolver).
fn curvature_ratio(g: &Graph, x: usize, coords: &[usize], inv_n: f64, v: &[f64]) -> f64 {
    let norm_sq: f64 = v.iter().map(|a| a * a).sum();
    if norm_sq == 0.0 {
        return f64::INFINITY;
    }
    let mut values = vec![0.0; g.vertex_count()];
    for (i, &c) in coords.iter().enumerate() {
        values[c] = v[i] / norm_sq.sqrt();
    }
    let f = VertexFunction::new(values).unwrap();
    let g2 = gamma_bilinear(g, 2, &f, &f).unwrap().value(x);
    let gam = gamma_bilinear(g, 1, &f, &f).unwrap().value(x);
    let lap = laplacian(g, &f).unwrap().value(x);
    if gam <= 1e-9 {
        return f64::INFINITY;
    }
    (g2 - inv_n * lap * lap) / gam
}

/// Nelder-Mead on R^m for a scale-invariant objective.
fn nelder_mead(mut f: impl FnMut(&[f64]) -> f64, start: &[f64], iterations: usize) -> f64 {
    let m = start.len();
    let mut simplex: Vec<(Vec<f64>, f64)> = Vec::with_capacity(m + 1);
    simplex.push((start.to_vec(), f(start)));
    for i in 0..m {
        let mut p = start.to_vec();
        p[i] += 0.25 * (1.0 + p[i].abs());
        let fp = f(&p);
        simplex.push((p, fp));
    }
    for _ in 0..iterations {
        simplex.sort_by(|a, b| a.1.partial_cmp(&b.1).unwrap());
        let centroid: Vec<f64> = (0..m)
            .map(|i| simplex[..m].iter().map(|(p, _)| p[i]).sum::<f64>() / m as f64)
            .collect();
        let worst = simplex[m].clone();
        let reflect: Vec<f64> = (0..m)
            .map(|i| centroid[i] + (centroid[i] - worst.0[i]))
            .collect();
        let fr = f(&reflect);
        if fr < simplex[0].1 {
            let expand: Vec<f64> = (0..m)
                .map(|i| centroid[i] + 2.0 * (centroid[i] - worst.0[i]))
                .collect();
            let fe = f(&expand);
            simplex[m] = if fe < fr { (expand, fe) } else { (reflect, fr) };
        } else if fr < simplex[m - 1].1 {
            simplex[m] = (reflect, fr);
        } else {
            let contract: Vec<f64> = (0..m)
                .map(|i| centroid[i] + 0.5 * (worst.0[i] - centroid[i]))
                .collect();
            let fc = f(&contract);
            if fc < worst.1 {
                simplex[m] = (contract, fc);
            } else {
                let best = simplex[0].0.clone();
                for entry in simplex.iter_mut().skip(1) {
                    let shrunk: Vec<f64> = (0..m)
                        .map(|i| best[i] + 0.5 * (entry.0[i] - best[i]))
                        .collect();
                    entry.1 = f(&shrunk);
                    entry.0 = shrunk;
                }
            }
        }
        let spread = simplex
            .iter()
            .map(|(_, v)| *v)
            .fold((f64::INFINITY, f64::NEG_INFINITY), |(lo, hi), v| {
                (lo.min(v), hi.max(v))
            });
        if spread.1 - spread.0 < 1e-12 * (1.0 + spread.0.abs()) {
            break;
        }
    }
    simplex
        .into_iter()
        .map(|(_, v)| v)
        .fold(f64::INFINITY, f64::min)
}

/// Brute-force optimal curvature bound: dense random sampling of the
/// inequality's Rayleigh quotient over the punctured two-ball directions,
/// refined from the best starts with Nelder-Mead. Assumes the optimum is
/// finite (as on the fixture set this oracle serves).
pub fn oracle_optimal_k(g: &Graph, x: usize, n: Dimension, seed: u64) -> f64 {
    let coords: Vec<usize> = g
        .ball(x, 2)
        .unwrap()
        .into_iter()
        .filter(|&v| v != x)
        .collect();
    let m = coords.len();
    assert!(m > 0, "oracle needs a nonempty neighborhood");
    let inv_n = n.inverse();
    let ratio = |v: &[f64]| curvature_ratio(g, x, &coords, inv_n, v);
    if m == 1 {
        return ratio(&[1.0]);
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut samples: Vec<(Vec<f64>, f64)> = (0..4000)
        .map(|_| {
            let v: Vec<f64> = (0..m).map(|_| rng.gen_range(-1.0..1.0)).collect();
            let r = ratio(&v);
            (v, r)
        })
        .filter(|(_, r)| r.is_finite())
        .collect();
    samples.sort_by(|a, b| a.1.partial_cmp(&b.1).unwrap());
    let mut best = samples.first().map(|(_, r)| *r).unwrap_or(f64::INFINITY);
    for (start, _) in samples.iter().take(6) {
        best = best.min(nelder_mead(ratio, start, 400));
    }
    best
}
