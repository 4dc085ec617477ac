//! Dense quadratic programming on the probability simplex:
//! minimize w' G w subject to w >= 0, sum w = 1.
//!
//! Projected gradient with step 1/(2 lambda_max) identifies the support;
//! an active-set polish then solves the equality-constrained KKT system
//! G w = lambda 1 on the positive support to machine accuracy.

use crate::error::{Error, Result};
use crate::scalar::Real;

#[derive(Debug, Clone)]
pub struct QpOptions {
    pub pg_iterations: usize,
    pub kkt_tol: f64,
    pub max_polish_rounds: usize,
}

impl Default for QpOptions {
    fn default() -> Self {
        QpOptions {
            pg_iterations: 400,
            kkt_tol: 1e-8,
            max_polish_rounds: 60,
        }
    }
}

#[derive(Debug, Clone)]
pub struct QpSolution<T> {
    pub weights: Vec<T>,
    /// KKT multiplier; equals 2 w' G w at the optimum.
    pub multiplier: T,
    pub kkt_residual: T,
    pub iterations: usize,
}

fn mat_vec<T: Real>(g: &[T], n: usize, v: &[T], out: &mut [T]) {
    for i in 0..n {
        let row = &g[i * n..(i + 1) * n];
        let mut acc = T::zero();
        for (a, b) in row.iter().zip(v) {
            acc = acc + *a * *b;
        }
        out[i] = acc;
    }
}

/// Euclidean projection onto the probability simplex (sort-based).
fn project_simplex<T: Real>(v: &mut [T]) {
    let n = v.len();
    let mut sorted = v.to_vec();
    sorted.sort_by(|a, b| b.partial_cmp(a).unwrap());
    let mut acc = T::zero();
    let mut tau = T::zero();
    let mut found = false;
    for (j, &s) in sorted.iter().enumerate() {
        acc = acc + s;
        let t = (acc - T::one()) / T::of_usize(j + 1);
        if s - t > T::zero() {
            tau = t;
            found = true;
        } else {
            break;
        }
    }
    if !found {
        // fall back: all mass on the largest coordinate
        let tmax = sorted[0];
        for x in v.iter_mut() {
            *x = if *x == tmax { T::one() } else { T::zero() };
        }
        return;
    }
    for x in v.iter_mut() {
        *x = (*x - tau).max(T::zero());
    }
    let n = n;
    let _ = n;
}

fn dominant_eigenvalue<T: Real>(g: &[T], n: usize) -> T {
    let mut v: Vec<T> = (0..n)
        .map(|i| T::one() + T::of(0.001) * T::of_usize(i % 17))
        .collect();
    let mut gv = vec![T::zero(); n];
    let mut lambda = T::one();
    for _ in 0..60 {
        mat_vec(g, n, &v, &mut gv);
        let norm = gv.iter().fold(T::zero(), |acc, &x| acc + x * x).sqrt();
        if norm == T::zero() {
            return T::one();
        }
        for (x, &y) in v.iter_mut().zip(&gv) {
            *x = y / norm;
        }
        lambda = norm;
    }
    lambda.abs().max(T::of(1e-12))
}

/// Residual of the simplex KKT conditions at (w, lambda):
/// |2(Gw)_i - lambda| on the support, max(0, lambda - 2(Gw)_i) off it.
fn kkt_residual<T: Real>(grad2: &[T], w: &[T], lambda: T, atol: T) -> T {
    let mut worst = T::zero();
    for (&g2, &wi) in grad2.iter().zip(w) {
        let r = if wi > atol {
            (g2 - lambda).abs()
        } else {
            (lambda - g2).max(T::zero())
        };
        if r > worst {
            worst = r;
        }
    }
    worst
}

/// In-place Gaussian elimination with partial pivoting; `a` is n x n row-major.
pub(crate) fn solve_dense<T: Real>(a: &mut [T], b: &mut [T], n: usize) -> Result<()> {
    for col in 0..n {
        let mut pivot = col;
        let mut best = a[col * n + col].abs();
        for row in (col + 1)..n {
            let mag = a[row * n + col].abs();
            if mag > best {
                best = mag;
                pivot = row;
            }
        }
        if best == T::zero() || !best.is_finite() {
            return Err(Error::SolverStalled {
                residual: f64::INFINITY,
                iterations: 0,
            });
        }
        if pivot != col {
            for k in 0..n {
                a.swap(col * n + k, pivot * n + k);
            }
            b.swap(col, pivot);
        }
        let diag = a[col * n + col];
        for row in (col + 1)..n {
            let factor = a[row * n + col] / diag;
            if factor == T::zero() {
                continue;
            }
            for k in col..n {
                a[row * n + k] = a[row * n + k] - factor * a[col * n + k];
            }
            b[row] = b[row] - factor * b[col];
        }
    }
    for col in (0..n).rev() {
        let mut acc = b[col];
        for k in (col + 1)..n {
            acc = acc - a[col * n + k] * b[k];
        }
        b[col] = acc / a[col * n + col];
    }
    Ok(())
}

/// Solve the equality-constrained KKT system on the given support:
/// 2 G_SS w = lambda 1, sum w = 1.
fn polish_on_support<T: Real>(
    g: &[T],
    n: usize,
    support: &[usize],
) -> Result<(Vec<T>, T)> {
    let k = support.len();
    let dim = k + 1;
    let mut a = vec![T::zero(); dim * dim];
    let mut b = vec![T::zero(); dim];
    for (r, &i) in support.iter().enumerate() {
        for (c, &j) in support.iter().enumerate() {
            a[r * dim + c] = T::of(2.0) * g[i * n + j];
        }
        a[r * dim + k] = -T::one();
    }
    for c in 0..k {
        a[k * dim + c] = T::one();
    }
    b[k] = T::one();
    solve_dense(&mut a, &mut b, dim)?;
    let lambda = b[k];
    let mut w = vec![T::zero(); n];
    for (r, &i) in support.iter().enumerate() {
        w[i] = b[r];
    }
    Ok((w, lambda))
}

pub fn minimize_on_simplex<T: Real>(
    g: &[T],
    n: usize,
    opts: &QpOptions,
) -> Result<QpSolution<T>> {
    assert_eq!(g.len(), n * n);
    let atol = T::of(1e-14);
    let mut w = vec![T::one() / T::of_usize(n); n];
    let lambda_max = dominant_eigenvalue(g, n);
    let step = T::one() / (T::of(2.0) * lambda_max);
    let mut grad2 = vec![T::zero(); n];
    let mut iterations = 0;

    for it in 0..opts.pg_iterations {
        mat_vec(g, n, &w, &mut grad2);
        for x in grad2.iter_mut() {
            *x = *x * T::of(2.0);
        }
        let energy2 = grad2.iter().zip(&w).fold(T::zero(), |acc, (&a, &b)| acc + a * b);
        let res = kkt_residual(&grad2, &w, energy2, atol);
        iterations = it;
        if res < T::of(1e-7) * (T::one() + energy2.abs()) {
            break;
        }
        for (x, &d) in w.iter_mut().zip(&grad2) {
            *x = *x - step * d;
        }
        project_simplex(&mut w);
    }

    // Active-set polish.
    let mut support: Vec<usize> = (0..n).filter(|&i| w[i] > atol).collect();
    if support.is_empty() {
        support = (0..n).collect();
    }
    let mut best: Option<(Vec<T>, T)> = None;
    for _round in 0..opts.max_polish_rounds {
        let (cand, lambda) = polish_on_support(g, n, &support)?;
        // Drop the most negative weight, if any.
        let mut worst_idx = None;
        let mut worst_val = -atol;
        for &i in &support {
            if cand[i] < worst_val {
                worst_val = cand[i];
                worst_idx = Some(i);
            }
        }
        if let Some(i) = worst_idx {
            support.retain(|&j| j != i);
            if support.is_empty() {
                return Err(Error::SolverStalled {
                    residual: f64::INFINITY,
                    iterations,
                });
            }
            continue;
        }
        // Feasible on the support; check the complement for violations.
        let mut wfull = cand.clone();
        for x in wfull.iter_mut() {
            if *x < T::zero() {
                *x = T::zero();
            }
        }
        mat_vec(g, n, &wfull, &mut grad2);
        for x in grad2.iter_mut() {
            *x = *x * T::of(2.0);
        }
        let mut violator = None;
        let mut violation = T::of(1e-10) * (T::one() + lambda.abs());
        for i in 0..n {
            if wfull[i] <= atol {
                let v = lambda - grad2[i];
                if v > violation {
                    violation = v;
                    violator = Some(i);
                }
            }
        }
        best = Some((wfull, lambda));
        match violator {
            Some(i) => {
                support.push(i);
                support.sort_unstable();
            }
            None => break,
        }
    }

    let (w, lambda) = best.ok_or(Error::SolverStalled {
        residual: f64::INFINITY,
        iterations,
    })?;
    mat_vec(g, n, &w, &mut grad2);
    for x in grad2.iter_mut() {
        *x = *x * T::of(2.0);
    }
    let residual = kkt_residual(&grad2, &w, lambda, atol);
    let rel = residual / (T::one() + lambda.abs());
    if !(rel.as_f64() < opts.kkt_tol) {
        return Err(Error::SolverStalled {
            residual: rel.as_f64(),
            iterations,
        });
    }
    Ok(QpSolution {
        weights: w,
        multiplier: lambda,
        kkt_residual: rel,
        iterations,
    })
}
