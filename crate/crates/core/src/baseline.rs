//! Reference implementations used to check the production path: a
//! piece-enumerating prox solver, finite differences, dense mirrors of the
//! sparse kernels, a full subgradient method and the explicit
//! `h + sigma B^T (I - U) B h` Hessian product.

use crate::alm::{Problem, Task};
use crate::data::{Dataset, XorShift64Star};
use crate::prox::{prox_eps_scalar, prox_hinge_scalar};
use crate::sparse::SparseMatrix;

/// Row-major dense matrix.
#[derive(Debug, Clone, PartialEq)]
pub struct DenseMatrix {
    rows: usize,
    cols: usize,
    pub data: Vec<f64>,
}

impl DenseMatrix {
    pub fn new(rows: usize, cols: usize, data: Vec<f64>) -> Self {
        assert_eq!(data.len(), rows * cols, "dense buffer has wrong length");
        Self { rows, cols, data }
    }

    pub fn zeros(rows: usize, cols: usize) -> Self {
        Self::new(rows, cols, vec![0.0; rows * cols])
    }

    pub fn from_sparse(a: &SparseMatrix) -> Self {
        Self::new(a.rows(), a.cols(), a.to_dense())
    }

    pub fn from_dataset(data: &Dataset) -> Self {
        let mut out = Self::zeros(data.len(), data.n_features);
        for (i, sample) in data.samples.iter().enumerate() {
            for &(j, v) in sample {
                out.data[i * data.n_features + j] = v;
            }
        }
        out
    }

    pub fn rows(&self) -> usize {
        self.rows
    }

    pub fn cols(&self) -> usize {
        self.cols
    }

    pub fn get(&self, i: usize, j: usize) -> f64 {
        self.data[i * self.cols + j]
    }

    pub fn matvec(&self, x: &[f64]) -> Vec<f64> {
        assert_eq!(x.len(), self.cols);
        (0..self.rows)
            .map(|i| (0..self.cols).map(|j| self.get(i, j) * x[j]).sum())
            .collect()
    }

    pub fn matvec_t(&self, y: &[f64]) -> Vec<f64> {
        assert_eq!(y.len(), self.rows);
        (0..self.cols)
            .map(|j| (0..self.rows).map(|i| self.get(i, j) * y[i]).sum())
            .collect()
    }

    pub fn select_rows(&self, rows: &[usize]) -> Self {
        let mut data = Vec::with_capacity(rows.len() * self.cols);
        for &r in rows {
            data.extend_from_slice(&self.data[r * self.cols..(r + 1) * self.cols]);
        }
        Self::new(rows.len(), self.cols, data)
    }

    /// `A^T A`.
    pub fn gram(&self) -> Self {
        let n = self.cols;
        let mut out = Self::zeros(n, n);
        for i in 0..self.rows {
            let row = &self.data[i * n..(i + 1) * n];
            for a in 0..n {
                for b in 0..n {
                    out.data[a * n + b] += row[a] * row[b];
                }
            }
        }
        out
    }

    /// Cholesky solve; `None` when the matrix is not numerically SPD.
    pub fn solve_spd(&self, rhs: &[f64]) -> Option<Vec<f64>> {
        let n = self.rows;
        if n != self.cols || rhs.len() != n {
            return None;
        }
        let mut l = vec![0.0; n * n];
        for i in 0..n {
            for j in 0..=i {
                let mut s = self.get(i, j);
                for k in 0..j {
                    s -= l[i * n + k] * l[j * n + k];
                }
                if i == j {
                    if s <= 0.0 {
                        return None;
                    }
                    l[i * n + i] = s.sqrt();
                } else {
                    l[i * n + j] = s / l[j * n + j];
                }
            }
        }
        let mut y = rhs.to_vec();
        for i in 0..n {
            for k in 0..i {
                y[i] -= l[i * n + k] * y[k];
            }
            y[i] /= l[i * n + i];
        }
        for i in (0..n).rev() {
            for k in i + 1..n {
                y[i] -= l[k * n + i] * y[k];
            }
            y[i] /= l[i * n + i];
        }
        Some(y)
    }
}

/// Minimizer of `(s - z)^2 / (2M) + C * pen(s)` found by minimizing the
/// quadratic on each piece between breakpoints and keeping the best piece.
/// `eps = None` is the hinge `max(s, 0)`, otherwise `max(|s| - eps, 0)`.
pub fn prox_oracle(z: f64, c: f64, m: f64, eps: Option<f64>) -> f64 {
    // Each piece: (lo, hi, slope) with penalty C * (slope * s + offset).
    let pieces: Vec<(f64, f64, f64, f64)> = match eps {
        None => vec![(f64::NEG_INFINITY, 0.0, 0.0, 0.0), (0.0, f64::INFINITY, 1.0, 0.0)],
        Some(e) => vec![
            (f64::NEG_INFINITY, -e, -1.0, -e),
            (-e, e, 0.0, 0.0),
            (e, f64::INFINITY, 1.0, -e),
        ],
    };
    let objective = |s: f64, slope: f64, offset: f64| (s - z) * (s - z) / (2.0 * m) + c * (slope * s + offset);
    let mut best: Option<(f64, f64, bool)> = None;
    for (lo, hi, slope, offset) in pieces {
        // Stationary point of the quadratic: s = z - C M slope.
        let free = z - c * m * slope;
        let s = free.clamp(lo, hi);
        let interior = s == free;
        let val = objective(s, slope, offset);
        best = match best {
            None => Some((val, s, interior)),
            Some((bv, bs, bi)) => {
                let tie = (val - bv).abs() <= 1e-14 * (1.0 + bv.abs());
                if (tie && interior && !bi) || (!tie && val < bv) {
                    Some((val, s, interior))
                } else {
                    Some((bv, bs, bi))
                }
            }
        };
    }
    best.expect("at least one piece").1
}

/// Central differences; default step `1e-6 (1 + |w_i|)`.
pub fn fd_gradient<F: Fn(&[f64]) -> f64>(f: F, w: &[f64], h: Option<f64>) -> Vec<f64> {
    let mut x = w.to_vec();
    (0..w.len())
        .map(|i| {
            let step = h.unwrap_or(1e-6 * (1.0 + w[i].abs()));
            x[i] = w[i] + step;
            let plus = f(&x);
            x[i] = w[i] - step;
            let minus = f(&x);
            x[i] = w[i];
            (plus - minus) / (2.0 * step)
        })
        .collect()
}

/// Full subgradient method from `w = 0` with step `step0 / sqrt(t)`.
/// Returns the best iterate seen and its objective.
pub fn subgradient_solve(p: &Problem, iters: usize, step0: f64) -> (Vec<f64>, f64) {
    let c = p.c();
    let eps = p.eps();
    let mut w = vec![0.0; p.n()];
    let mut best_w = w.clone();
    let mut best = p.primal_objective(&w).expect("consistent dimensions");
    for t in 1..=iters.max(1) {
        let s = p.affine(&w).expect("consistent dimensions");
        let g_s: Vec<f64> = s
            .iter()
            .map(|&si| match p.task() {
                Task::Svc if si > 0.0 => c,
                Task::Svr if si.abs() > eps => c * si.signum(),
                _ => 0.0,
            })
            .collect();
        let mut g = p.b().matvec_t(&g_s).expect("consistent dimensions");
        for (gi, wi) in g.iter_mut().zip(&w) {
            *gi += wi;
        }
        let step = step0 / (t as f64).sqrt();
        for (wi, gi) in w.iter_mut().zip(&g) {
            *wi -= step * gi;
        }
        let obj = p.primal_objective(&w).expect("consistent dimensions");
        if obj < best {
            best = obj;
            best_w.clone_from(&w);
        }
    }
    (best_w, best)
}

/// `h + sigma B^T (B h) - sigma B^T diag(u) (B h)`, formed over all rows.
pub fn hess_vec_way2(p: &Problem, u: &[f64], h: &[f64], sigma: f64) -> Vec<f64> {
    let bh = p.b().matvec(h).expect("consistent dimensions");
    let full = p.b().matvec_t(&bh).expect("consistent dimensions");
    let ubh: Vec<f64> = bh.iter().zip(u).map(|(a, b)| a * b).collect();
    let masked = p.b().matvec_t(&ubh).expect("consistent dimensions");
    h.iter()
        .zip(full.iter().zip(&masked))
        .map(|(hi, (f, mk))| hi + sigma * f - sigma * mk)
        .collect()
}

/// Grid comparison of the closed-form prox maps against [`prox_oracle`] and a
/// finite-difference check of the subproblem gradient. Returns a short summary
/// or a description of the first failure.
pub fn self_check() -> Result<String, String> {
    let mut rng = XorShift64Star::new(2024);
    let mut worst: f64 = 0.0;
    let points = 10_001;
    for _ in 0..20 {
        let c = 0.05 + 5.0 * rng.next_f64();
        let m = 0.05 + 5.0 * rng.next_f64();
        let eps = rng.next_f64();
        let half = 3.0 * c * m + 3.0 * eps;
        for k in 0..points {
            let z = -half + 2.0 * half * k as f64 / (points - 1) as f64;
            worst = worst
                .max((prox_hinge_scalar(z, c * m) - prox_oracle(z, c, m, None)).abs())
                .max((prox_eps_scalar(z, c * m, eps) - prox_oracle(z, c, m, Some(eps))).abs());
        }
    }
    if worst > 1e-12 {
        return Err(format!("prox grid mismatch {worst:e}"));
    }

    let (m, n) = (30, 5);
    let mut data = Dataset { n_features: n, ..Dataset::default() };
    for _ in 0..m {
        data.samples.push((0..n).map(|j| (j, rng.next_gaussian())).collect());
        data.labels.push(if rng.next_f64() < 0.5 { -1.0 } else { 1.0 });
    }
    let p = crate::alm::build_svc(&data, 0.7).map_err(|e| e.to_string())?;
    let w: Vec<f64> = (0..n).map(|_| rng.next_gaussian()).collect();
    let lambda: Vec<f64> = (0..m).map(|_| 0.7 * rng.next_f64()).collect();
    let g = p.phi_grad(&w, &lambda, 1.0).map_err(|e| e.to_string())?;
    let fd = fd_gradient(|x| p.phi_value(x, &lambda, 1.0).unwrap_or(f64::NAN), &w, None);
    let grad_err = g
        .iter()
        .zip(&fd)
        .map(|(a, b)| (a - b).abs() / (1.0 + a.abs()))
        .fold(0.0, f64::max);
    if grad_err > 1e-5 {
        return Err(format!("gradient check mismatch {grad_err:e}"));
    }
    Ok(format!("self-check ok: prox max diff {worst:e}, gradient max rel diff {grad_err:e}"))
}
