//! Trained models, prediction and evaluation metrics.

use crate::alm::{alm_solve, build_svc, build_svr, AlmError, SolveReport, SolverConfig, Task};
use crate::data::{augment_bias, Dataset, LabelMap};

/// A trained linear model.
#[derive(Debug, Clone, PartialEq)]
pub struct Model {
    pub w: Vec<f64>,
    pub task: Task,
    /// When set, the last weight multiplies a constant feature appended to
    /// every sample.
    pub bias_augmented: bool,
    /// Original class labels for classification models.
    pub label_map: Option<LabelMap>,
    pub c_used: f64,
    pub eps_used: f64,
}

impl Model {
    /// Number of weights, including the bias weight if any.
    pub fn n(&self) -> usize {
        self.w.len()
    }

    /// Number of data features the model was trained on.
    pub fn n_features(&self) -> usize {
        self.w.len() - usize::from(self.bias_augmented && !self.w.is_empty())
    }

    /// `w^T x`. Feature indices beyond the training dimension contribute 0.
    pub fn score(&self, x: &[(usize, f64)]) -> f64 {
        let n = self.n_features();
        let mut total = if self.bias_augmented { self.w.get(n).copied().unwrap_or(0.0) } else { 0.0 };
        for &(j, v) in x {
            if j < n {
                total += self.w[j] * v;
            }
        }
        total
    }

    /// Score for regression; for classification the predicted label in the
    /// original label space, with ties going to the positive class.
    pub fn predict(&self, x: &[(usize, f64)]) -> f64 {
        let score = self.score(x);
        match self.task {
            Task::Svr => score,
            Task::Svc => {
                let sign = if score >= 0.0 { 1.0 } else { -1.0 };
                self.label_map.map_or(sign, |map| map.to_original(sign))
            }
        }
    }

    pub fn predict_all(&self, data: &Dataset) -> Vec<f64> {
        data.samples.iter().map(|x| self.predict(x)).collect()
    }
}

/// Trains a model on `data`. For classification the labels must already be
/// `{-1, +1}`; `label_map` is stored for prediction. With `bias` a constant
/// feature is appended and its weight is the last entry of `w`.
pub fn fit(
    task: Task,
    data: &Dataset,
    label_map: Option<LabelMap>,
    c: f64,
    eps: f64,
    bias: bool,
    cfg: &SolverConfig,
) -> Result<(Model, SolveReport), AlmError> {
    let eps = if task == Task::Svr { eps } else { 0.0 };
    let augmented;
    let train = if bias {
        augmented = augment_bias(data.clone());
        &augmented
    } else {
        data
    };
    let problem = match task {
        Task::Svc => build_svc(train, c),
        Task::Svr => build_svr(train, c, eps),
    }?;
    let (w, report) = alm_solve(&problem, cfg)?;
    Ok((Model { w, task, bias_augmented: bias, label_map, c_used: c, eps_used: eps }, report))
}

/// Percentage of correctly classified samples; 0 for an empty set.
pub fn accuracy(model: &Model, test: &Dataset) -> f64 {
    if test.is_empty() {
        return 0.0;
    }
    let correct = test
        .samples
        .iter()
        .zip(&test.labels)
        .filter(|(x, &y)| model.predict(x) == y)
        .count();
    correct as f64 / test.len() as f64 * 100.0
}

/// Mean squared error of the raw scores; 0 for an empty set.
pub fn mse(model: &Model, test: &Dataset) -> f64 {
    if test.is_empty() {
        return 0.0;
    }
    let total: f64 = test
        .samples
        .iter()
        .zip(&test.labels)
        .map(|(x, y)| (y - model.score(x)).powi(2))
        .sum();
    total / test.len() as f64
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::data::XorShift64Star;
    use proptest::prelude::*;

    fn svc(w: Vec<f64>, bias: bool) -> Model {
        Model { w, task: Task::Svc, bias_augmented: bias, label_map: None, c_used: 1.0, eps_used: 0.0 }
    }

    #[test]
    fn predict_examples() {
        let m = svc(vec![1.0, -1.0], false);
        assert_eq!(m.score(&[(1, 2.0)]), -2.0);
        let m = svc(vec![-1.0, 1.0], false);
        assert_eq!(m.score(&[(1, 2.0)]), 2.0);
        assert_eq!(m.predict(&[(1, 2.0)]), 1.0);
        assert_eq!(svc(vec![0.0, 0.0], false).predict(&[(0, 5.0)]), 1.0);
        assert_eq!(svc(vec![0.0, 3.0], true).score(&[]), 3.0);
        assert_eq!(svc(vec![1.0], false).score(&[(0, 2.0), (7, 100.0)]), 2.0);
        // Index 1 would land on the bias weight; it is out of range instead.
        assert_eq!(svc(vec![2.0, 3.0], true).score(&[(0, 1.0), (1, 10.0)]), 5.0);
    }

    #[test]
    fn label_map_inverse() {
        let map = LabelMap { negative: 2.0, positive: 4.0 };
        let m = Model { label_map: Some(map), ..svc(vec![1.0], false) };
        assert_eq!(m.predict(&[(0, 1.0)]), 4.0);
        assert_eq!(m.predict(&[(0, -1.0)]), 2.0);
    }

    #[test]
    fn accuracy_examples() {
        let m = svc(vec![1.0], false);
        let data = |labels: Vec<f64>| Dataset {
            samples: vec![vec![(0, 1.0)], vec![(0, -1.0)], vec![(0, 2.0)]],
            labels,
            n_features: 1,
        };
        assert_eq!(accuracy(&m, &data(vec![1.0, -1.0, 1.0])), 100.0);
        assert_eq!(accuracy(&m, &data(vec![-1.0, 1.0, -1.0])), 0.0);
        assert!((accuracy(&m, &data(vec![1.0, -1.0, -1.0])) - 200.0 / 3.0).abs() < 1e-12);
    }

    #[test]
    fn mse_examples() {
        let m = Model { task: Task::Svr, ..svc(vec![1.0], false) };
        let perfect = Dataset { samples: vec![vec![(0, 2.0)], vec![(0, -1.0)]], labels: vec![2.0, -1.0], n_features: 1 };
        assert_eq!(mse(&m, &perfect), 0.0);
        let zero = Model { w: vec![0.0], ..m.clone() };
        assert_eq!(mse(&zero, &perfect), 2.5);
        let one = Dataset { samples: vec![vec![(0, 1.0)]], labels: vec![2.0], n_features: 1 };
        assert_eq!(mse(&m, &one), 1.0);
    }

    #[test]
    fn fit_separates_toy_data() {
        let data = Dataset {
            samples: vec![vec![(0, 2.0)], vec![(0, 1.0)], vec![(0, -1.0)], vec![(0, -2.0)]],
            labels: vec![1.0, 1.0, -1.0, -1.0],
            n_features: 1,
        };
        let (model, report) = fit(Task::Svc, &data, None, 10.0, 0.0, true, &SolverConfig::default()).unwrap();
        assert_eq!(model.n(), 2);
        assert!(report.k >= 1);
        assert_eq!(accuracy(&model, &data), 100.0);
        assert!(fit(Task::Svc, &data, None, 0.0, 0.0, false, &SolverConfig::default()).is_err());
    }

    proptest! {
        #[test]
        fn metric_ranges(seed in any::<u64>(), m in 1usize..30) {
            let mut rng = XorShift64Star::new(seed);
            let w: Vec<f64> = (0..3).map(|_| rng.next_gaussian()).collect();
            let data = Dataset {
                samples: (0..m).map(|_| (0..3).map(|j| (j, rng.next_gaussian())).collect()).collect(),
                labels: (0..m).map(|_| if rng.next_f64() < 0.5 { -1.0 } else { 1.0 }).collect(),
                n_features: 3,
            };
            let acc = accuracy(&svc(w.clone(), false), &data);
            prop_assert!((0.0..=100.0).contains(&acc));
            let reg = Model { task: Task::Svr, ..svc(w, false) };
            prop_assert!(mse(&reg, &data) >= 0.0);
        }

        #[test]
        fn score_is_linear(seed in any::<u64>(), a in -3.0f64..3.0, b in -3.0f64..3.0) {
            let mut rng = XorShift64Star::new(seed);
            let model = svc((0..4).map(|_| rng.next_gaussian()).collect(), true);
            let x: Vec<(usize, f64)> = (0..3).map(|j| (j, rng.next_gaussian())).collect();
            let y: Vec<(usize, f64)> = (0..3).map(|j| (j, rng.next_gaussian())).collect();
            let combo: Vec<(usize, f64)> = (0..3).map(|j| (j, a * x[j].1 + b * y[j].1)).collect();
            let bias = model.w[3];
            let lhs = model.score(&combo) - bias;
            let rhs = a * (model.score(&x) - bias) + b * (model.score(&y) - bias);
            prop_assert!((lhs - rhs).abs() <= 1e-10 * (1.0 + lhs.abs()));
        }
    }
}
