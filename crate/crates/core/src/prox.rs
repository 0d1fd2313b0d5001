//! Hinge and epsilon-insensitive penalties: values, proximal maps, Moreau
//! envelopes and the active index sets that select the generalized Jacobian.
//!
//! `p(s) = C * sum(max(s_i, 0))` and `p_eps(s) = C * sum(max(|s_i| - eps, 0))`.
//! The proximal maps are taken with scale `M`, i.e. they minimize
//! `1/(2M) * |z - s|^2 + p(s)`. In the augmented Lagrangian `M = 1/sigma`.
//!
//! Jacobian selection convention: at a breakpoint the diagonal entry of
//! `U in dProx` is chosen as 1, so breakpoints never enter the active set.

/// Penalty weight `c`, prox scale `m` and tube half-width `eps`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ProxParams {
    pub c: f64,
    pub m: f64,
    pub eps: f64,
}

impl ProxParams {
    pub fn new(c: f64, m: f64, eps: f64) -> Self {
        debug_assert!(c > 0.0 && m > 0.0 && eps >= 0.0);
        Self { c, m, eps }
    }
}

pub fn p_value(s: &[f64], c: f64) -> f64 {
    c * s.iter().map(|&si| si.max(0.0)).sum::<f64>()
}

pub fn p_eps_value(s: &[f64], c: f64, eps: f64) -> f64 {
    c * s.iter().map(|&si| (si.abs() - eps).max(0.0)).sum::<f64>()
}

#[inline]
pub fn prox_hinge_scalar(z: f64, cm: f64) -> f64 {
    (z - cm).max(0.0) + z.min(0.0)
}

#[inline]
pub fn prox_eps_scalar(z: f64, cm: f64, eps: f64) -> f64 {
    z.min((z - cm).max(eps)).max((z + cm).min(-eps))
}

/// `argmin_s 1/(2M)|z - s|^2 + C sum max(s_i, 0)`, elementwise:
/// `z - CM` above `CM`, `0` on `[0, CM]`, `z` below 0.
pub fn prox_hinge(z: &[f64], c: f64, m: f64) -> Vec<f64> {
    let cm = c * m;
    z.iter().map(|&zi| prox_hinge_scalar(zi, cm)).collect()
}

/// Five-branch map: `z - CM` for `z >= eps + CM`, `eps` on `(eps, eps + CM)`,
/// `z` on `[-eps, eps]`, `-eps` on `(-eps - CM, -eps)`, `z + CM` below.
pub fn prox_eps(z: &[f64], c: f64, m: f64, eps: f64) -> Vec<f64> {
    let cm = c * m;
    z.iter().map(|&zi| prox_eps_scalar(zi, cm, eps)).collect()
}

/// `min_s 1/2 |s - z|^2 + M p(s)`, evaluated at `s = prox_hinge(z, C, M)`.
pub fn moreau_env_hinge(z: &[f64], c: f64, m: f64) -> f64 {
    let cm = c * m;
    z.iter()
        .map(|&zi| {
            let s = prox_hinge_scalar(zi, cm);
            0.5 * (s - zi) * (s - zi) + cm * s.max(0.0)
        })
        .sum()
}

pub fn moreau_env_eps(z: &[f64], c: f64, m: f64, eps: f64) -> f64 {
    let cm = c * m;
    z.iter()
        .map(|&zi| {
            let s = prox_eps_scalar(zi, cm, eps);
            0.5 * (s - zi) * (s - zi) + cm * (s.abs() - eps).max(0.0)
        })
        .sum()
}

/// `{i : 0 < z_i < C/sigma}`.
pub fn active_set_svc(z: &[f64], c: f64, sigma: f64) -> Vec<usize> {
    let upper = c / sigma;
    z.iter()
        .enumerate()
        .filter(|&(_, &zi)| zi > 0.0 && zi < upper)
        .map(|(i, _)| i)
        .collect()
}

/// `{i : z_i in (eps, eps + C/sigma) or z_i in (-eps - C/sigma, -eps)}`.
pub fn active_set_svr(z: &[f64], c: f64, sigma: f64, eps: f64) -> Vec<usize> {
    let upper = eps + c / sigma;
    z.iter()
        .enumerate()
        .filter(|&(_, &zi)| {
            let a = zi.abs();
            a > eps && a < upper
        })
        .map(|(i, _)| i)
        .collect()
}

/// The two penalties behind one interface.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Penalty {
    Hinge { c: f64 },
    EpsInsensitive { c: f64, eps: f64 },
}

impl Penalty {
    pub fn c(&self) -> f64 {
        match *self {
            Penalty::Hinge { c } | Penalty::EpsInsensitive { c, .. } => c,
        }
    }

    pub fn value(&self, s: &[f64]) -> f64 {
        match *self {
            Penalty::Hinge { c } => p_value(s, c),
            Penalty::EpsInsensitive { c, eps } => p_eps_value(s, c, eps),
        }
    }

    pub fn prox(&self, z: &[f64], m: f64) -> Vec<f64> {
        match *self {
            Penalty::Hinge { c } => prox_hinge(z, c, m),
            Penalty::EpsInsensitive { c, eps } => prox_eps(z, c, m, eps),
        }
    }

    pub fn envelope(&self, z: &[f64], m: f64) -> f64 {
        match *self {
            Penalty::Hinge { c } => moreau_env_hinge(z, c, m),
            Penalty::EpsInsensitive { c, eps } => moreau_env_eps(z, c, m, eps),
        }
    }

    /// Active set for prox scale `1/sigma`.
    pub fn active_set(&self, z: &[f64], sigma: f64) -> Vec<usize> {
        match *self {
            Penalty::Hinge { c } => active_set_svc(z, c, sigma),
            Penalty::EpsInsensitive { c, eps } => active_set_svr(z, c, sigma, eps),
        }
    }

    /// Breakpoints of the prox map at scale `m`, used to keep finite-difference
    /// probes away from kinks.
    pub fn breakpoints(&self, m: f64) -> Vec<f64> {
        match *self {
            Penalty::Hinge { c } => vec![0.0, c * m],
            Penalty::EpsInsensitive { c, eps } => vec![-eps - c * m, -eps, eps, eps + c * m],
        }
    }

    /// Euclidean projection onto the domain of the conjugate:
    /// `[0, C]^m` for the hinge and `[-C, C]^m` for the tube.
    pub fn project_dual(&self, lambda: &[f64]) -> Vec<f64> {
        match *self {
            Penalty::Hinge { c } => lambda.iter().map(|&l| l.clamp(0.0, c)).collect(),
            Penalty::EpsInsensitive { c, .. } => lambda.iter().map(|&l| l.clamp(-c, c)).collect(),
        }
    }

    /// Conjugate `p*(lambda)` for `lambda` already inside the dual box.
    pub fn conjugate_in_box(&self, lambda: &[f64]) -> f64 {
        match *self {
            Penalty::Hinge { .. } => 0.0,
            Penalty::EpsInsensitive { eps, .. } => eps * lambda.iter().map(|l| l.abs()).sum::<f64>(),
        }
    }
}
