//! LIBSVM-format datasets: parsing, writing, label normalization, seeded
//! train/test splitting and the bias-augmentation transform.
//!
//! Feature indices are 1-based on disk and 0-based in memory. The conversion
//! happens only in [`parse_libsvm`] and [`write_libsvm`].

use std::fmt::Write as _;
use std::io::Read;
use std::path::Path;

use thiserror::Error;

/// One sparse sample: `(feature index, value)` pairs, 0-based, strictly
/// increasing in the index.
pub type SparseSample = Vec<(usize, f64)>;

#[derive(Debug, Error)]
pub enum DataError {
    #[error("line {line}: {msg}")]
    Parse { line: usize, msg: String },
    #[error("not a binary classification dataset ({0} distinct labels)")]
    NotBinary(usize),
    #[error("n_features override {requested} is smaller than the largest index {seen}")]
    FeatureOverride { requested: usize, seen: usize },
    #[error("split needs at least 2 samples and a fraction in (0,1); got m={m}, fraction={fraction}")]
    BadSplit { m: usize, fraction: f64 },
    #[error(transparent)]
    Io(#[from] std::io::Error),
}

/// Labeled sparse samples.
#[derive(Debug, Clone, PartialEq, Default)]
pub struct Dataset {
    pub samples: Vec<SparseSample>,
    pub labels: Vec<f64>,
    pub n_features: usize,
}

impl Dataset {
    pub fn len(&self) -> usize {
        self.samples.len()
    }

    pub fn is_empty(&self) -> bool {
        self.samples.is_empty()
    }

    pub fn nnz(&self) -> usize {
        self.samples.iter().map(Vec::len).sum()
    }

    /// Widens the feature dimension, e.g. to align a test file with a
    /// training file whose dictionary is larger. Shrinking is an error.
    pub fn with_n_features(mut self, n: usize) -> Result<Self, DataError> {
        if n < self.n_features {
            return Err(DataError::FeatureOverride { requested: n, seen: self.n_features });
        }
        self.n_features = n;
        Ok(self)
    }

    /// Keeps the samples at `indices`, in that order.
    pub fn select(&self, indices: &[usize]) -> Dataset {
        Dataset {
            samples: indices.iter().map(|&i| self.samples[i].clone()).collect(),
            labels: indices.iter().map(|&i| self.labels[i]).collect(),
            n_features: self.n_features,
        }
    }
}

pub fn read_libsvm_file(path: impl AsRef<Path>) -> Result<Dataset, DataError> {
    let mut bytes = Vec::new();
    std::fs::File::open(path)?.read_to_end(&mut bytes)?;
    parse_libsvm(&bytes)
}

/// Parses `label idx:val idx:val ...` lines. `#` starts a comment, blank
/// lines are skipped, and both `\n` and `\r\n` endings are accepted.
pub fn parse_libsvm(text: &[u8]) -> Result<Dataset, DataError> {
    let text = std::str::from_utf8(text).map_err(|e| {
        let line = 1 + text[..e.valid_up_to()].iter().filter(|&&b| b == b'\n').count();
        DataError::Parse { line, msg: "invalid UTF-8".into() }
    })?;

    let mut data = Dataset::default();
    for (lineno, raw) in text.lines().enumerate() {
        let line = lineno + 1;
        let content = raw.split('#').next().unwrap_or("").trim();
        if content.is_empty() {
            continue;
        }
        let err = |msg: String| DataError::Parse { line, msg };

        let mut tokens = content.split_ascii_whitespace();
        let label_tok = tokens.next().expect("non-empty line has a token");
        let label: f64 = label_tok
            .parse()
            .map_err(|_| err(format!("non-numeric label {label_tok:?}")))?;
        if !label.is_finite() {
            return Err(err(format!("non-finite label {label_tok:?}")));
        }

        let mut sample = SparseSample::new();
        let mut prev: usize = 0;
        for tok in tokens {
            let (idx_s, val_s) = tok
                .split_once(':')
                .ok_or_else(|| err(format!("malformed token {tok:?}, expected idx:val")))?;
            let idx: usize = idx_s
                .parse()
                .map_err(|_| err(format!("malformed feature index {idx_s:?}")))?;
            if idx < 1 {
                return Err(err(format!("feature index {idx} < 1")));
            }
            if idx <= prev {
                return Err(err(format!("feature index {idx} not greater than previous {prev}")));
            }
            let val: f64 = val_s
                .parse()
                .map_err(|_| err(format!("malformed feature value {val_s:?}")))?;
            if !val.is_finite() {
                return Err(err(format!("non-finite feature value {val_s:?}")));
            }
            prev = idx;
            sample.push((idx - 1, val));
        }
        data.n_features = data.n_features.max(prev);
        data.samples.push(sample);
        data.labels.push(label);
    }
    Ok(data)
}

/// Writes the dataset in LIBSVM format using the shortest decimal that
/// round-trips every value, so `parse_libsvm(write_libsvm(d)) == d` up to
/// `n_features` (which is recomputed from the indices on parse).
pub fn write_libsvm(data: &Dataset) -> String {
    let mut out = String::new();
    for (sample, label) in data.samples.iter().zip(&data.labels) {
        write!(out, "{label}").unwrap();
        for &(j, v) in sample {
            write!(out, " {}:{v}", j + 1).unwrap();
        }
        out.push('\n');
    }
    out
}

/// Mapping from the two original class labels onto `{-1, +1}`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct LabelMap {
    /// Original label sent to -1.
    pub negative: f64,
    /// Original label sent to +1.
    pub positive: f64,
}

impl LabelMap {
    pub fn to_original(&self, sign: f64) -> f64 {
        if sign < 0.0 {
            self.negative
        } else {
            self.positive
        }
    }

    pub fn to_signed(&self, label: f64) -> Option<f64> {
        if label == self.negative {
            Some(-1.0)
        } else if label == self.positive {
            Some(1.0)
        } else {
            None
        }
    }
}

/// Maps two-valued labels onto `{-1, +1}`: `{0,1}` and `{-1,1}` map the
/// natural way, any other pair sends the smaller value to -1.
///
/// A dataset with a single distinct label is accepted; that label maps to
/// +1 unless it is 0 or -1.
pub fn normalize_labels(mut data: Dataset) -> Result<(Dataset, LabelMap), DataError> {
    let mut distinct: Vec<f64> = Vec::with_capacity(2);
    for &y in &data.labels {
        if !distinct.contains(&y) {
            distinct.push(y);
            if distinct.len() > 2 {
                let total = {
                    let mut all = data.labels.clone();
                    all.sort_by(f64::total_cmp);
                    all.dedup();
                    all.len()
                };
                return Err(DataError::NotBinary(total));
            }
        }
    }
    distinct.sort_by(f64::total_cmp);
    let map = match distinct.as_slice() {
        [] => LabelMap { negative: -1.0, positive: 1.0 },
        [only] if *only == 0.0 => LabelMap { negative: 0.0, positive: 1.0 },
        [only] if *only == -1.0 => LabelMap { negative: -1.0, positive: 1.0 },
        [only] => LabelMap { negative: -1.0, positive: *only },
        [lo, hi] => LabelMap { negative: *lo, positive: *hi },
        _ => unreachable!(),
    };
    for y in &mut data.labels {
        *y = map.to_signed(*y).expect("label belongs to the map");
    }
    Ok((data, map))
}

/// Appends the constant feature `(n_features, 1.0)` to every sample.
///
/// Applying it twice adds two constant columns; callers that need a single
/// bias must track whether the transform was applied.
pub fn augment_bias(mut data: Dataset) -> Dataset {
    let bias = data.n_features;
    for sample in &mut data.samples {
        sample.push((bias, 1.0));
    }
    data.n_features += 1;
    data
}

/// xorshift64* generator (Vigna, 2016): shifts 12/25/27 and multiplier
/// `0x2545F4914F6CDD1D`. The state is seeded through one SplitMix64 step so
/// that small or zero seeds still give a non-zero, well-mixed state.
#[derive(Debug, Clone)]
pub struct XorShift64Star {
    state: u64,
}

impl XorShift64Star {
    pub fn new(seed: u64) -> Self {
        let mut z = seed.wrapping_add(0x9E37_79B9_7F4A_7C15);
        z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
        z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
        z ^= z >> 31;
        Self { state: if z == 0 { 0x9E37_79B9_7F4A_7C15 } else { z } }
    }

    pub fn next_u64(&mut self) -> u64 {
        let mut x = self.state;
        x ^= x >> 12;
        x ^= x << 25;
        x ^= x >> 27;
        self.state = x;
        x.wrapping_mul(0x2545_F491_4F6C_DD1D)
    }

    /// Uniform in `[0, 1)` from the top 53 bits.
    pub fn next_f64(&mut self) -> f64 {
        (self.next_u64() >> 11) as f64 * (1.0 / (1u64 << 53) as f64)
    }

    /// Standard normal via Box-Muller (one draw per call, the sine branch is discarded).
    pub fn next_gaussian(&mut self) -> f64 {
        let u1 = 1.0 - self.next_f64();
        let u2 = self.next_f64();
        (-2.0 * u1.ln()).sqrt() * (std::f64::consts::TAU * u2).cos()
    }

    /// Uniform in `0..bound` by modulo reduction (bias below 2^-40 for any
    /// dataset size this crate handles).
    pub fn below(&mut self, bound: usize) -> usize {
        (self.next_u64() % bound as u64) as usize
    }
}

/// Fisher-Yates permutation of `0..m`: for `i = m-1` down to `1`, swap `i`
/// with `rng.below(i + 1)`.
pub fn shuffled_indices(m: usize, seed: u64) -> Vec<usize> {
    let mut rng = XorShift64Star::new(seed);
    let mut perm: Vec<usize> = (0..m).collect();
    for i in (1..m).rev() {
        let j = rng.below(i + 1);
        perm.swap(i, j);
    }
    perm
}

/// Number of training samples for a split: `ceil(fraction * m)` clamped to
/// `1..=m-1` so both halves are non-empty.
pub fn train_count(m: usize, fraction: f64) -> usize {
    let raw = (fraction * m as f64 - 1e-9).ceil().max(0.0) as usize;
    raw.clamp(1, m - 1)
}

/// Deterministic shuffled split. The first `train_count(m, fraction)`
/// shuffled samples form the training set and the rest form the test set.
pub fn split(data: &Dataset, train_fraction: f64, seed: u64) -> Result<(Dataset, Dataset), DataError> {
    let m = data.len();
    if m < 2 || !(train_fraction > 0.0 && train_fraction < 1.0) {
        return Err(DataError::BadSplit { m, fraction: train_fraction });
    }
    let perm = shuffled_indices(m, seed);
    let k = train_count(m, train_fraction);
    Ok((data.select(&perm[..k]), data.select(&perm[k..])))
}
