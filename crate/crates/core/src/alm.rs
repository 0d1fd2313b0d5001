//! Augmented Lagrangian method for the primal L1-loss SVC and the
//! epsilon-L1-loss SVR.
//!
//! Both models are written as
//!
//! ```text
//! min_{w,s}  1/2 |w|^2 + p(s)   s.t.  s = B w + d
//! ```
//!
//! with `B = -diag(y) X`, `d = 1` and the hinge penalty for classification,
//! and `B = X`, `d = -y` and the epsilon-insensitive penalty for regression.
//! Each outer iteration minimizes
//!
//! ```text
//! phi(w) = 1/2 |w|^2 - |lambda|^2 / (2 sigma) + sigma * env(z(w)),
//! z(w)   = B w + d + lambda / sigma,
//! ```
//!
//! where `env` is the Moreau envelope of `p / sigma`, by semismooth Newton-CG,
//! then sets `s = prox(z(w))` and `lambda <- lambda - sigma (s - B w - d)`.

use std::time::Instant;

use thiserror::Error;

use crate::data::Dataset;
use crate::newton::{newton_solve, NewtonError, NewtonParams, SubproblemOracle};
use crate::prox::Penalty;
use crate::sparse::{SparseError, SparseMatrix};

#[derive(Debug, Error)]
pub enum AlmError {
    #[error(transparent)]
    Sparse(#[from] SparseError),
    #[error("Newton subsolver failed in outer iteration {outer}: {source}")]
    Newton { outer: usize, source: NewtonError },
    #[error("invalid problem: {0}")]
    InvalidProblem(String),
    #[error("invalid solver configuration: {0}")]
    InvalidConfig(String),
    #[error("non-finite iterate in outer iteration {0}")]
    Diverged(usize),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Task {
    Svc,
    Svr,
}

impl Task {
    pub fn as_str(&self) -> &'static str {
        match self {
            Task::Svc => "svc",
            Task::Svr => "svr",
        }
    }
}

impl std::str::FromStr for Task {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "svc" => Ok(Task::Svc),
            "svr" => Ok(Task::Svr),
            other => Err(format!("unknown task {other:?} (expected svc or svr)")),
        }
    }
}

/// Assembled instance `min 1/2|w|^2 + p(Bw + d)`.
#[derive(Debug, Clone)]
pub struct Problem {
    b: SparseMatrix,
    d: Vec<f64>,
    task: Task,
    penalty: Penalty,
}

fn check_c(c: f64) -> Result<(), AlmError> {
    if c > 0.0 && c.is_finite() {
        Ok(())
    } else {
        Err(AlmError::InvalidProblem(format!("C must be positive, got {c}")))
    }
}

/// `B = -diag(y) X`, `d = 1`. Labels must already be in `{-1, +1}`.
pub fn build_svc(train: &Dataset, c: f64) -> Result<Problem, AlmError> {
    check_c(c)?;
    if let Some(bad) = train.labels.iter().find(|&&y| y != 1.0 && y != -1.0) {
        return Err(AlmError::InvalidProblem(format!(
            "classification labels must be -1 or +1 (got {bad}); normalize them first"
        )));
    }
    let x = SparseMatrix::from_dataset(train);
    let neg_y: Vec<f64> = train.labels.iter().map(|y| -y).collect();
    Ok(Problem {
        b: x.scale_rows(&neg_y)?,
        d: vec![1.0; train.len()],
        task: Task::Svc,
        penalty: Penalty::Hinge { c },
    })
}

/// `B = X`, `d = -y`.
pub fn build_svr(train: &Dataset, c: f64, eps: f64) -> Result<Problem, AlmError> {
    check_c(c)?;
    if !(eps >= 0.0 && eps.is_finite()) {
        return Err(AlmError::InvalidProblem(format!("epsilon must be non-negative, got {eps}")));
    }
    Ok(Problem {
        b: SparseMatrix::from_dataset(train),
        d: train.labels.iter().map(|y| -y).collect(),
        task: Task::Svr,
        penalty: Penalty::EpsInsensitive { c, eps },
    })
}

/// Value of the dual objective at the projection of a multiplier onto the
/// conjugate's domain.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct DualValue {
    pub value: f64,
    /// `|lambda - proj(lambda)|`, zero when the input was already feasible.
    pub projection_distance: f64,
}

/// Scaled KKT residuals of `(w, s, lambda)`.
#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct KktResidual {
    /// `|s - Bw - d| / (1 + |d|)`
    pub primal: f64,
    /// `|w + B^T lambda| / (1 + |w|)`
    pub stationarity: f64,
    /// `|s - prox_p^1(s + lambda)| / (1 + |s|)`
    pub inclusion: f64,
}

impl KktResidual {
    pub fn max(&self) -> f64 {
        self.primal.max(self.stationarity).max(self.inclusion)
    }
}

fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

fn norm(a: &[f64]) -> f64 {
    dot(a, a).sqrt()
}

fn check_len(expected: usize, got: usize) -> Result<(), AlmError> {
    if expected == got {
        Ok(())
    } else {
        Err(SparseError::Dimension { expected, got }.into())
    }
}

impl Problem {
    /// General constructor for callers that assemble `B` and `d` themselves.
    pub fn new(b: SparseMatrix, d: Vec<f64>, task: Task, c: f64, eps: f64) -> Result<Self, AlmError> {
        check_c(c)?;
        check_len(b.rows(), d.len())?;
        let penalty = match task {
            Task::Svc => Penalty::Hinge { c },
            Task::Svr => {
                if eps.is_nan() || eps < 0.0 {
                    return Err(AlmError::InvalidProblem(format!("epsilon must be non-negative, got {eps}")));
                }
                Penalty::EpsInsensitive { c, eps }
            }
        };
        Ok(Self { b, d, task, penalty })
    }

    pub fn b(&self) -> &SparseMatrix {
        &self.b
    }

    pub fn d(&self) -> &[f64] {
        &self.d
    }

    pub fn task(&self) -> Task {
        self.task
    }

    pub fn penalty(&self) -> Penalty {
        self.penalty
    }

    pub fn c(&self) -> f64 {
        self.penalty.c()
    }

    pub fn eps(&self) -> f64 {
        match self.penalty {
            Penalty::Hinge { .. } => 0.0,
            Penalty::EpsInsensitive { eps, .. } => eps,
        }
    }

    /// Number of samples.
    pub fn m(&self) -> usize {
        self.b.rows()
    }

    /// Number of features.
    pub fn n(&self) -> usize {
        self.b.cols()
    }

    /// Same problem with `extra` all-zero feature columns appended.
    pub fn with_extra_columns(&self, extra: usize) -> Problem {
        let mut out = self.clone();
        out.b = out.b.with_cols(self.n() + extra).expect("widening never fails");
        out
    }

    /// `B w + d`.
    pub fn affine(&self, w: &[f64]) -> Result<Vec<f64>, AlmError> {
        let mut bw = self.b.matvec(w)?;
        for (v, di) in bw.iter_mut().zip(&self.d) {
            *v += di;
        }
        Ok(bw)
    }

    /// `1/2 |w|^2 + p(Bw + d)`.
    pub fn primal_objective(&self, w: &[f64]) -> Result<f64, AlmError> {
        let s = self.affine(w)?;
        Ok(0.5 * dot(w, w) + self.penalty.value(&s))
    }

    /// `-1/2 |B^T l|^2 + <l, d> - p*(l)` at `l = proj(lambda)`, where the
    /// projection is onto `[0, C]^m` (hinge) or `[-C, C]^m` (tube).
    pub fn dual_objective(&self, lambda: &[f64]) -> Result<DualValue, AlmError> {
        check_len(self.m(), lambda.len())?;
        let proj = self.penalty.project_dual(lambda);
        let dist = norm(&lambda.iter().zip(&proj).map(|(a, b)| a - b).collect::<Vec<_>>());
        let btl = self.b.matvec_t(&proj)?;
        let value = -0.5 * dot(&btl, &btl) + dot(&proj, &self.d) - self.penalty.conjugate_in_box(&proj);
        Ok(DualValue { value, projection_distance: dist })
    }

    /// `z(w) = Bw + d + lambda / sigma`.
    pub fn z(&self, w: &[f64], lambda: &[f64], sigma: f64) -> Result<Vec<f64>, AlmError> {
        check_len(self.m(), lambda.len())?;
        let mut z = self.affine(w)?;
        for (zi, li) in z.iter_mut().zip(lambda) {
            *zi += li / sigma;
        }
        Ok(z)
    }

    /// Subproblem objective with `s` minimized out.
    pub fn phi_value(&self, w: &[f64], lambda: &[f64], sigma: f64) -> Result<f64, AlmError> {
        let z = self.z(w, lambda, sigma)?;
        Ok(0.5 * dot(w, w) - dot(lambda, lambda) / (2.0 * sigma) + sigma * self.penalty.envelope(&z, 1.0 / sigma))
    }

    /// `w + sigma B^T (z(w) - prox(z(w)))`, which equals
    /// `w + B^T lambda - sigma B^T (s*(w) - Bw - d)`.
    pub fn phi_grad(&self, w: &[f64], lambda: &[f64], sigma: f64) -> Result<Vec<f64>, AlmError> {
        let z = self.z(w, lambda, sigma)?;
        Ok(self.grad_from_z(w, &z, sigma))
    }

    fn grad_from_z(&self, w: &[f64], z: &[f64], sigma: f64) -> Vec<f64> {
        let s = self.penalty.prox(z, 1.0 / sigma);
        let r: Vec<f64> = z.iter().zip(&s).map(|(zi, si)| sigma * (zi - si)).collect();
        let mut g = self.b.matvec_t(&r).expect("dimensions checked by caller");
        for (gi, wi) in g.iter_mut().zip(w) {
            *gi += wi;
        }
        g
    }

    /// Rows of `B` entering the generalized Hessian at `z`.
    pub fn active_set(&self, z: &[f64], sigma: f64) -> Vec<usize> {
        self.penalty.active_set(z, sigma)
    }

    /// `V h = h + sigma B(I,:)^T (B(I,:) h)`.
    pub fn hess_vec(&self, active: &[usize], h: &[f64], sigma: f64) -> Result<Vec<f64>, AlmError> {
        let mut out = self.b.restricted_normal_apply(active, h)?;
        for (o, hi) in out.iter_mut().zip(h) {
            *o = hi + sigma * *o;
        }
        Ok(out)
    }

    pub fn kkt_residual(&self, w: &[f64], s: &[f64], lambda: &[f64]) -> Result<KktResidual, AlmError> {
        check_len(self.m(), s.len())?;
        let bwd = self.affine(w)?;
        let feas: Vec<f64> = s.iter().zip(&bwd).map(|(a, b)| a - b).collect();
        let mut stat = self.b.matvec_t(lambda)?;
        for (v, wi) in stat.iter_mut().zip(w) {
            *v += wi;
        }
        let shifted: Vec<f64> = s.iter().zip(lambda).map(|(a, b)| a + b).collect();
        let fixed = self.penalty.prox(&shifted, 1.0);
        let incl: Vec<f64> = s.iter().zip(&fixed).map(|(a, b)| a - b).collect();
        Ok(KktResidual {
            primal: norm(&feas) / (1.0 + norm(&self.d)),
            stationarity: norm(&stat) / (1.0 + norm(w)),
            inclusion: norm(&incl) / (1.0 + norm(s)),
        })
    }
}

/// `e(b) - e(a)` for the scalar envelope of `cm * max(s, 0)` (hinge) or
/// `cm * max(|s| - eps, 0)` (tube), using exact differences inside a piece.
fn envelope_change(penalty: &Penalty, cm: f64, a: f64, delta: f64) -> f64 {
    let b = a + delta;
    match *penalty {
        Penalty::Hinge { .. } => {
            let piece = |z: f64| if z <= 0.0 { 0 } else if z <= cm { 1 } else { 2 };
            let env = |z: f64| match piece(z) {
                0 => 0.0,
                1 => 0.5 * z * z,
                _ => cm * (z - 0.5 * cm),
            };
            match (piece(a), piece(b)) {
                (0, 0) => 0.0,
                (1, 1) => 0.5 * delta * (a + b),
                (2, 2) => cm * delta,
                _ => env(b) - env(a),
            }
        }
        Penalty::EpsInsensitive { eps, .. } => {
            let piece = |z: f64| {
                let t = z.abs();
                if t <= eps {
                    0
                } else if t <= eps + cm {
                    1
                } else {
                    2
                }
            };
            let env = |z: f64| {
                let t = z.abs();
                match piece(z) {
                    0 => 0.0,
                    1 => 0.5 * (t - eps) * (t - eps),
                    _ => cm * (t - eps - 0.5 * cm),
                }
            };
            let same_side = (a > 0.0) == (b > 0.0);
            match (piece(a), piece(b)) {
                (0, 0) => 0.0,
                (1, 1) if same_side => {
                    let dt = delta * a.signum();
                    0.5 * dt * (a.abs() + b.abs() - 2.0 * eps)
                }
                (2, 2) if same_side => cm * delta * a.signum(),
                _ => env(b) - env(a),
            }
        }
    }
}

/// The ALM subproblem for fixed `(lambda, sigma)`.
pub struct AlmSubproblem<'a> {
    pub problem: &'a Problem,
    pub lambda: &'a [f64],
    pub sigma: f64,
}

impl SubproblemOracle for AlmSubproblem<'_> {
    fn dim(&self) -> usize {
        self.problem.n()
    }

    fn value(&self, w: &[f64]) -> f64 {
        self.problem.phi_value(w, self.lambda, self.sigma).expect("dimensions fixed at construction")
    }

    fn grad(&self, w: &[f64]) -> Vec<f64> {
        self.problem.phi_grad(w, self.lambda, self.sigma).expect("dimensions fixed at construction")
    }

    fn active_set(&self, w: &[f64]) -> Vec<usize> {
        let z = self.problem.z(w, self.lambda, self.sigma).expect("dimensions fixed at construction");
        self.problem.active_set(&z, self.sigma)
    }

    fn hvp(&self, active: &[usize], h: &[f64]) -> Vec<f64> {
        self.problem.hess_vec(active, h, self.sigma).expect("dimensions fixed at construction")
    }

    fn linearize(&self, w: &[f64]) -> (Vec<f64>, Vec<usize>) {
        let z = self.problem.z(w, self.lambda, self.sigma).expect("dimensions fixed at construction");
        (self.problem.grad_from_z(w, &z, self.sigma), self.problem.active_set(&z, self.sigma))
    }

    fn value_change(&self, w: &[f64], d: &[f64], alpha: f64) -> f64 {
        let z = self.problem.z(w, self.lambda, self.sigma).expect("dimensions fixed at construction");
        let bd = self.problem.b.matvec(d).expect("dimensions fixed at construction");
        let quad: f64 = w.iter().zip(d).map(|(wi, di)| alpha * di * (wi + 0.5 * alpha * di)).sum();
        let cm = self.problem.c() / self.sigma;
        let env: f64 = z
            .iter()
            .zip(&bd)
            .map(|(&zi, &bdi)| envelope_change(&self.problem.penalty, cm, zi, alpha * bdi))
            .sum();
        quad + self.sigma * env
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct SolverConfig {
    pub sigma0: f64,
    pub sigma_max: f64,
    /// `sigma_{k+1} = min(sigma_max, sigma_k / theta)`.
    pub theta: f64,
    pub max_outer: usize,
    /// Inner tolerance at outer iteration `k` is `max(newton_tol_floor, 10^-(k+1))`.
    pub newton_tol_floor: f64,
    /// Early exit once the largest scaled KKT residual is at most this.
    pub kkt_tol: f64,
    pub newton: NewtonParams,
}

impl Default for SolverConfig {
    fn default() -> Self {
        Self {
            sigma0: 0.15,
            sigma_max: 2.0,
            theta: 0.8,
            max_outer: 10,
            newton_tol_floor: 1e-6,
            kkt_tol: 1e-6,
            newton: NewtonParams::default(),
        }
    }
}

impl SolverConfig {
    /// Defaults for the given task; regression starts from `sigma0 = 0.1`.
    pub fn for_task(task: Task) -> Self {
        match task {
            Task::Svc => Self::default(),
            Task::Svr => Self { sigma0: 0.1, ..Self::default() },
        }
    }

    pub fn validate(&self) -> Result<(), AlmError> {
        let fail = |m: String| Err(AlmError::InvalidConfig(m));
        let nw = &self.newton;
        if !(self.sigma0 > 0.0 && self.sigma0 <= self.sigma_max && self.sigma_max.is_finite()) {
            return fail(format!("need 0 < sigma0 <= sigma_max, got {} and {}", self.sigma0, self.sigma_max));
        }
        if !(self.theta > 0.0 && self.theta <= 1.0) {
            return fail(format!("theta must be in (0, 1], got {}", self.theta));
        }
        if !(nw.ls_rho > 0.0 && nw.ls_rho < 1.0) || !(nw.ls_c1 > 0.0 && nw.ls_c1 < 1.0) {
            return fail("line-search constants must lie in (0, 1)".into());
        }
        if !(nw.cg_eta0 > 0.0 && nw.cg_eta1 > 0.0) {
            return fail("CG forcing constants must be positive".into());
        }
        if self.max_outer == 0 || nw.cg_maxit == 0 || nw.max_iter == 0 || nw.max_backtracks == 0 {
            return fail("iteration caps must be at least 1".into());
        }
        if !(self.newton_tol_floor > 0.0 && self.kkt_tol > 0.0) {
            return fail("tolerances must be positive".into());
        }
        Ok(())
    }

    pub fn newton_tol(&self, outer: usize) -> f64 {
        self.newton_tol_floor.max(10f64.powi(-(outer as i32 + 1)))
    }
}

/// Iterate of the outer loop.
#[derive(Debug, Clone, PartialEq)]
pub struct AlmState {
    pub w: Vec<f64>,
    pub s: Vec<f64>,
    pub lambda: Vec<f64>,
    pub sigma: f64,
    pub k: usize,
}

/// Per-outer-iteration record.
#[derive(Debug, Clone, PartialEq)]
pub struct OuterRecord {
    pub sigma: f64,
    pub newton_tol: f64,
    pub newton_iterations: usize,
    pub cg_iterations: usize,
    pub kkt: KktResidual,
    pub primal: f64,
    pub dual: f64,
    /// `|I(z^j)|` for each Newton iteration of this outer loop.
    pub active_set_sizes: Vec<usize>,
    /// `|grad phi(w^j)|` for every Newton iterate of this outer loop.
    pub grad_norms: Vec<f64>,
}

#[derive(Debug, Clone, PartialEq, Default)]
pub struct SolveReport {
    /// Outer iterations performed.
    pub k: usize,
    pub it_sn: usize,
    pub it_cg: usize,
    pub time_seconds: f64,
    pub kkt: KktResidual,
    pub kkt_residual: f64,
    /// `primal - dual` at the final iterate.
    pub duality_gap: f64,
    /// `(primal - dual) / (1 + |primal| + |dual|)`.
    pub relative_gap: f64,
    pub objective: f64,
    pub dual_objective: f64,
    /// `|I(z)|` per Newton iteration, across all outer iterations.
    pub active_set_history: Vec<usize>,
    pub outer: Vec<OuterRecord>,
    pub converged: bool,
    pub warnings: Vec<String>,
    /// Final multiplier, the dual certificate.
    pub lambda: Vec<f64>,
}

/// Runs the outer loop from `w = 1`, `lambda = 0`.
pub fn alm_solve(problem: &Problem, cfg: &SolverConfig) -> Result<(Vec<f64>, SolveReport), AlmError> {
    let w0 = vec![1.0; problem.n()];
    alm_solve_from(problem, cfg, &w0, &vec![0.0; problem.m()])
}

/// Runs the outer loop from a given starting point.
pub fn alm_solve_from(
    problem: &Problem,
    cfg: &SolverConfig,
    w0: &[f64],
    lambda0: &[f64],
) -> Result<(Vec<f64>, SolveReport), AlmError> {
    cfg.validate()?;
    check_len(problem.n(), w0.len())?;
    check_len(problem.m(), lambda0.len())?;
    let started = Instant::now();

    let mut state = AlmState {
        w: w0.to_vec(),
        s: problem.affine(w0)?,
        lambda: lambda0.to_vec(),
        sigma: cfg.sigma0,
        k: 0,
    };
    let mut report = SolveReport::default();

    while state.k < cfg.max_outer {
        let outer = state.k;
        let sigma = state.sigma;
        let tol = cfg.newton_tol(outer);
        let oracle = AlmSubproblem { problem, lambda: &state.lambda, sigma };
        let (w, stats) =
            newton_solve(&oracle, &state.w, tol, &cfg.newton).map_err(|source| AlmError::Newton { outer, source })?;
        if stats.hit_iteration_cap {
            report.warnings.push(format!(
                "outer {outer}: Newton iteration cap {} reached with |grad| = {:e} > {tol:e}",
                cfg.newton.max_iter, stats.final_grad_norm
            ));
        }

        let bwd = problem.affine(&w)?;
        let z: Vec<f64> = bwd.iter().zip(&state.lambda).map(|(a, l)| a + l / sigma).collect();
        let s = problem.penalty.prox(&z, 1.0 / sigma);
        let lambda: Vec<f64> = state
            .lambda
            .iter()
            .zip(s.iter().zip(&bwd))
            .map(|(l, (si, bi))| l - sigma * (si - bi))
            .collect();
        if w.iter().chain(&lambda).any(|v| !v.is_finite()) {
            return Err(AlmError::Diverged(outer));
        }

        let kkt = problem.kkt_residual(&w, &s, &lambda)?;
        let primal = problem.primal_objective(&w)?;
        let dual = problem.dual_objective(&lambda)?.value;

        report.it_sn += stats.iterations;
        report.it_cg += stats.cg_iterations_total;
        report.active_set_history.extend_from_slice(&stats.active_set_sizes);
        report.outer.push(OuterRecord {
            sigma,
            newton_tol: tol,
            newton_iterations: stats.iterations,
            cg_iterations: stats.cg_iterations_total,
            kkt,
            primal,
            dual,
            active_set_sizes: stats.active_set_sizes,
            grad_norms: stats.grad_norms,
        });

        state = AlmState {
            w,
            s,
            lambda,
            sigma: cfg.sigma_max.min(sigma / cfg.theta),
            k: outer + 1,
        };
        report.kkt = kkt;
        report.objective = primal;
        report.dual_objective = dual;
        if kkt.max() <= cfg.kkt_tol {
            report.converged = true;
            break;
        }
    }

    report.k = state.k;
    report.kkt_residual = report.kkt.max();
    report.duality_gap = report.objective - report.dual_objective;
    report.relative_gap = report.duality_gap / (1.0 + report.objective.abs() + report.dual_objective.abs());
    report.time_seconds = started.elapsed().as_secs_f64();
    report.lambda = state.lambda;
    Ok((state.w, report))
}
