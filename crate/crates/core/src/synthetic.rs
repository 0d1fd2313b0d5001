//! Deterministic synthetic instances used by the tests, the benches and the
//! bundled sample data.

use crate::alm::Task;
use crate::data::{Dataset, XorShift64Star};

/// Feature distribution.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Features {
    /// Standard normal values at the stored positions.
    Gaussian,
    /// All stored values are 1.
    Binary,
    /// One active indicator per group; group sizes must sum to `n`.
    /// Category `r` of a group is drawn with probability proportional to
    /// `1 / (r + 1)`. `density` is ignored.
    OneHot(&'static [usize]),
}

/// Group sizes of a 123-column one-hot encoding with 14 groups.
pub const A9A_GROUPS: &[usize] = &[5, 7, 5, 16, 5, 7, 14, 6, 5, 2, 5, 5, 5, 36];

#[derive(Debug, Clone, PartialEq)]
pub struct SyntheticSpec {
    pub name: &'static str,
    pub task: Task,
    pub m: usize,
    pub n: usize,
    /// Probability that a feature is stored.
    pub density: f64,
    pub features: Features,
    /// Probability of flipping a classification label. For one-hot features
    /// the label is instead `+1` with probability `1 / (1 + exp(-2 score))`.
    pub label_noise: f64,
    /// Standard deviation of additive regression noise.
    pub target_noise: f64,
    /// Minimum `|w_true^T x|` kept for classification, 0 keeps everything.
    pub margin: f64,
    pub seed: u64,
}

/// A generated dataset with the regularization used to train on it.
#[derive(Debug, Clone)]
pub struct Instance {
    pub name: &'static str,
    pub task: Task,
    pub data: Dataset,
    pub c: f64,
    pub eps: f64,
}

pub fn generate(spec: &SyntheticSpec) -> Dataset {
    let mut rng = XorShift64Star::new(spec.seed);
    let w_true: Vec<f64> = (0..spec.n).map(|_| rng.next_gaussian()).collect();
    let offset = match spec.features {
        // Centre binary scores so both classes appear.
        Features::Binary => -spec.density * w_true.iter().sum::<f64>(),
        Features::Gaussian => 0.0,
        Features::OneHot(groups) => {
            assert_eq!(groups.iter().sum::<usize>(), spec.n, "group sizes must sum to n");
            let mut start = 0;
            let mut mean = 0.0;
            for &g in groups {
                let norm: f64 = (0..g).map(|r| 1.0 / (r + 1) as f64).sum();
                mean += (0..g).map(|r| w_true[start + r] / ((r + 1) as f64 * norm)).sum::<f64>();
                start += g;
            }
            -mean
        }
    };
    let mut data = Dataset { n_features: spec.n, ..Dataset::default() };
    while data.len() < spec.m {
        let mut sample = Vec::new();
        if let Features::OneHot(groups) = spec.features {
            let mut start = 0;
            for &g in groups {
                let norm: f64 = (0..g).map(|r| 1.0 / (r + 1) as f64).sum();
                let mut u = rng.next_f64() * norm;
                let mut r = 0;
                while r + 1 < g && u >= 1.0 / (r + 1) as f64 {
                    u -= 1.0 / (r + 1) as f64;
                    r += 1;
                }
                sample.push((start + r, 1.0));
                start += g;
            }
        } else {
            for j in 0..spec.n {
                if rng.next_f64() < spec.density {
                    let v = match spec.features {
                        Features::Binary => 1.0,
                        _ => rng.next_gaussian(),
                    };
                    sample.push((j, v));
                }
            }
        }
        let score: f64 = offset + sample.iter().map(|&(j, v)| w_true[j] * v).sum::<f64>();
        let label = match spec.task {
            Task::Svc => {
                if score.abs() < spec.margin {
                    continue;
                }
                let y = if let Features::OneHot(_) = spec.features {
                    if rng.next_f64() < 1.0 / (1.0 + (-2.0 * score).exp()) {
                        1.0
                    } else {
                        -1.0
                    }
                } else if score >= 0.0 {
                    1.0
                } else {
                    -1.0
                };
                if rng.next_f64() < spec.label_noise {
                    -y
                } else {
                    y
                }
            }
            Task::Svr => score + spec.target_noise * rng.next_gaussian(),
        };
        data.samples.push(sample);
        data.labels.push(label);
    }
    data
}

/// Default regularization: `550 / m` for classification, `5 / n` for regression.
pub fn default_c(task: Task, m: usize, n: usize) -> f64 {
    match task {
        Task::Svc => 550.0 / m as f64,
        Task::Svr => 5.0 / n as f64,
    }
}

fn instance(spec: SyntheticSpec) -> Instance {
    let data = generate(&spec);
    Instance { name: spec.name, task: spec.task, c: default_c(spec.task, spec.m, spec.n), eps: 0.1, data }
}

fn base(name: &'static str, task: Task, m: usize, n: usize, seed: u64) -> SyntheticSpec {
    SyntheticSpec {
        name,
        task,
        m,
        n,
        density: 1.0,
        features: Features::Gaussian,
        label_noise: 0.0,
        target_noise: 0.0,
        margin: 0.0,
        seed,
    }
}

/// Linearly separable 200 x 10 classification set with margin 0.5.
pub fn separable_spec() -> SyntheticSpec {
    SyntheticSpec { margin: 0.5, ..base("separable_200x10", Task::Svc, 200, 10, 7) }
}

pub fn separable() -> Dataset {
    generate(&separable_spec())
}

/// The five certification instances, from 50 x 2 to 5000 x 10 and 200 x 500.
pub fn bundled_specs() -> Vec<SyntheticSpec> {
    vec![
        SyntheticSpec { label_noise: 0.1, ..base("svc_50x2", Task::Svc, 50, 2, 101) },
        SyntheticSpec { density: 0.05, label_noise: 0.05, ..base("svc_200x500_sparse", Task::Svc, 200, 500, 102) },
        SyntheticSpec { density: 0.2, label_noise: 0.1, ..base("svc_2000x50_sparse", Task::Svc, 2000, 50, 103) },
        SyntheticSpec { target_noise: 0.3, ..base("svr_1000x20", Task::Svr, 1000, 20, 104) },
        SyntheticSpec { density: 0.5, target_noise: 0.3, ..base("svr_5000x10", Task::Svr, 5000, 10, 105) },
    ]
}

pub fn bundled() -> Vec<Instance> {
    bundled_specs().into_iter().map(instance).collect()
}

/// 5000 x 123 one-hot features in 14 groups (14 / 123 = 11.4% density)
/// with logistic label noise.
pub fn a9a_like_spec() -> SyntheticSpec {
    SyntheticSpec {
        density: 14.0 / 123.0,
        features: Features::OneHot(A9A_GROUPS),
        ..base("a9a_like_5000x123", Task::Svc, 5000, 123, 106)
    }
}

pub fn a9a_like() -> Instance {
    instance(a9a_like_spec())
}

/// Dense 40 x 500 classification set.
pub fn leukemia_like_spec() -> SyntheticSpec {
    base("leukemia_like_40x500", Task::Svc, 40, 500, 107)
}

pub fn leukemia_like() -> Instance {
    instance(leukemia_like_spec())
}

/// Small dense 50 x 8 set for derivative checks.
pub fn gradient_check(task: Task) -> Instance {
    let spec = match task {
        Task::Svc => SyntheticSpec { label_noise: 0.2, ..base("gradcheck_svc_50x8", task, 50, 8, 108) },
        Task::Svr => SyntheticSpec { target_noise: 0.5, ..base("gradcheck_svr_50x8", task, 50, 8, 109) },
    };
    instance(spec)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn shapes_and_determinism() {
        for spec in bundled_specs().into_iter().chain([a9a_like_spec(), leukemia_like_spec(), separable_spec()]) {
            let a = generate(&spec);
            assert_eq!((a.len(), a.n_features), (spec.m, spec.n), "{}", spec.name);
            assert_eq!(a, generate(&spec));
            if spec.task == Task::Svc {
                assert!(a.labels.contains(&1.0) && a.labels.contains(&-1.0));
            }
        }
    }

    #[test]
    fn a9a_like_density() {
        let inst = a9a_like();
        let density = inst.data.nnz() as f64 / (5000.0 * 123.0);
        assert!((density - 0.11).abs() < 0.005, "{density}");
        assert!(inst.data.samples.iter().all(|s| s.len() == 14));
        assert_eq!(inst.c, 550.0 / 5000.0);
    }

    #[test]
    fn separable_has_margin() {
        let data = separable();
        assert!(data.samples.iter().all(|s| s.len() == 10));
        assert_eq!(data.len(), 200);
    }
}
