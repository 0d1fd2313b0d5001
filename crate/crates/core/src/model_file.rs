//! Text persistence for [`Model`].
//!
//! ```text
//! alm-svm v1 task=svc n=3 bias=1 c=0.11 eps=0 labels=0:1
//! 0.5
//! -1.25
//! 0.03
//! ```
//!
//! `labels=a:b` gives the original labels mapped to -1 and +1; regression
//! models write `labels=none`. Weights use the shortest decimal that parses
//! back to the same value.

use std::fmt::Write as _;
use std::path::Path;

use thiserror::Error;

use crate::alm::Task;
use crate::data::LabelMap;
use crate::metrics::Model;

const MAGIC: &str = "alm-svm v1";

#[derive(Debug, Error)]
pub enum ModelFileError {
    #[error("model file line {line}: {msg}")]
    Parse { line: usize, msg: String },
    #[error("model has non-finite weight at index {0}")]
    NonFinite(usize),
    #[error(transparent)]
    Io(#[from] std::io::Error),
}

fn parse_err(line: usize, msg: impl Into<String>) -> ModelFileError {
    ModelFileError::Parse { line, msg: msg.into() }
}

pub fn write_model(model: &Model) -> Result<String, ModelFileError> {
    if let Some(i) = model.w.iter().position(|v| !v.is_finite()) {
        return Err(ModelFileError::NonFinite(i));
    }
    let labels = match model.label_map {
        Some(map) => format!("{}:{}", map.negative, map.positive),
        None => "none".to_string(),
    };
    let mut out = format!(
        "{MAGIC} task={} n={} bias={} c={} eps={} labels={labels}\n",
        model.task.as_str(),
        model.w.len(),
        u8::from(model.bias_augmented),
        model.c_used,
        model.eps_used,
    );
    for v in &model.w {
        writeln!(out, "{v}").expect("writing to a String");
    }
    Ok(out)
}

pub fn read_model(text: &str) -> Result<Model, ModelFileError> {
    let mut lines = text.lines();
    let header = lines.next().ok_or_else(|| parse_err(1, "empty model file"))?;
    let rest = header
        .strip_prefix(MAGIC)
        .ok_or_else(|| parse_err(1, format!("expected header starting with {MAGIC:?}")))?;

    let mut fields = std::collections::HashMap::new();
    for token in rest.split_whitespace() {
        let (key, value) = token.split_once('=').ok_or_else(|| parse_err(1, format!("bad header field {token:?}")))?;
        if fields.insert(key, value).is_some() {
            return Err(parse_err(1, format!("duplicate header field {key:?}")));
        }
    }
    let get = |key: &str| fields.get(key).copied().ok_or_else(|| parse_err(1, format!("missing header field {key:?}")));
    let real = |key: &str| -> Result<f64, ModelFileError> {
        let raw = get(key)?;
        raw.parse::<f64>().map_err(|_| parse_err(1, format!("{key}={raw:?} is not a number")))
    };

    let task: Task = get("task")?.parse().map_err(|e: String| parse_err(1, e))?;
    let n: usize = get("n")?.parse().map_err(|_| parse_err(1, "n must be a non-negative integer"))?;
    let bias_augmented = match get("bias")? {
        "0" => false,
        "1" => true,
        other => return Err(parse_err(1, format!("bias must be 0 or 1, got {other:?}"))),
    };
    let c_used = real("c")?;
    let eps_used = real("eps")?;
    let label_map = match get("labels")? {
        "none" => None,
        pair => {
            let (a, b) = pair.split_once(':').ok_or_else(|| parse_err(1, "labels must be a:b or none"))?;
            let parse = |s: &str| s.parse::<f64>().map_err(|_| parse_err(1, format!("bad label {s:?}")));
            Some(LabelMap { negative: parse(a)?, positive: parse(b)? })
        }
    };
    if fields.len() != 6 {
        return Err(parse_err(1, "unexpected header fields"));
    }

    let mut w = Vec::with_capacity(n);
    for (i, line) in lines.enumerate() {
        let v: f64 = line
            .trim()
            .parse()
            .map_err(|_| parse_err(i + 2, format!("bad weight {line:?}")))?;
        if !v.is_finite() {
            return Err(parse_err(i + 2, "non-finite weight"));
        }
        w.push(v);
    }
    if w.len() != n {
        return Err(parse_err(n.min(w.len()) + 2, format!("expected {n} weights, found {}", w.len())));
    }
    Ok(Model { w, task, bias_augmented, label_map, c_used, eps_used })
}

pub fn save_model(model: &Model, path: impl AsRef<Path>) -> Result<(), ModelFileError> {
    std::fs::write(path, write_model(model)?)?;
    Ok(())
}

pub fn load_model(path: impl AsRef<Path>) -> Result<Model, ModelFileError> {
    read_model(&std::fs::read_to_string(path)?)
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn sample() -> Model {
        Model {
            w: vec![0.5, -1.25, 1e-7, 0.1 + 0.2],
            task: Task::Svc,
            bias_augmented: true,
            label_map: Some(LabelMap { negative: 0.0, positive: 1.0 }),
            c_used: 550.0 / 3.0,
            eps_used: 0.0,
        }
    }

    #[test]
    fn header_layout() {
        let text = write_model(&sample()).unwrap();
        let first = text.lines().next().unwrap();
        assert_eq!(first, format!("alm-svm v1 task=svc n=4 bias=1 c={} eps=0 labels=0:1", 550.0 / 3.0));
        assert_eq!(text.lines().count(), 5);
    }

    #[test]
    fn round_trip_is_byte_identical() {
        let text = write_model(&sample()).unwrap();
        let back = read_model(&text).unwrap();
        assert_eq!(back, sample());
        assert_eq!(write_model(&back).unwrap(), text);
    }

    #[test]
    fn regression_header() {
        let m = Model { task: Task::Svr, label_map: None, bias_augmented: false, ..sample() };
        let text = write_model(&m).unwrap();
        assert!(text.starts_with("alm-svm v1 task=svr n=4 bias=0"));
        assert!(text.lines().next().unwrap().ends_with("labels=none"));
        assert_eq!(read_model(&text).unwrap(), m);
    }

    #[test]
    fn rejects_malformed_files() {
        assert!(read_model("").is_err());
        assert!(read_model("svm v1 task=svc n=0 bias=0 c=1 eps=0 labels=none\n").is_err());
        assert!(read_model("alm-svm v1 task=svc n=2 bias=0 c=1 eps=0 labels=none\n1\n").is_err());
        assert!(read_model("alm-svm v1 task=svm n=0 bias=0 c=1 eps=0 labels=none\n").is_err());
        assert!(read_model("alm-svm v1 task=svc n=1 bias=2 c=1 eps=0 labels=none\n1\n").is_err());
        assert!(read_model("alm-svm v1 task=svc n=1 bias=0 c=1 eps=0 labels=none\nabc\n").is_err());
        assert!(read_model("alm-svm v1 task=svc n=0 bias=0 c=1 eps=0\n").is_err());
        let bad = Model { w: vec![f64::NAN], ..sample() };
        assert!(matches!(write_model(&bad), Err(ModelFileError::NonFinite(0))));
    }

    proptest! {
        #[test]
        fn arbitrary_weights_round_trip(w in proptest::collection::vec(-1e12f64..1e12, 0..20), c in 1e-9f64..1e9) {
            let m = Model { w, c_used: c, ..sample() };
            let text = write_model(&m).unwrap();
            let back = read_model(&text).unwrap();
            prop_assert_eq!(&back, &m);
            prop_assert_eq!(write_model(&back).unwrap(), text);
        }
    }
}
