//! Command-line front end: `train`, `predict`, `eval`, `bench` and `synth`.
//!
//! [`run`] parses arguments and writes to the given streams, returning the
//! process exit code: 0 on success, 1 on I/O or solver failure, 2 on usage
//! or validation errors.

use std::ffi::OsString;
use std::io::Write;
use std::path::{Path, PathBuf};

use anyhow::{anyhow, Context};
use clap::{Args, Parser, Subcommand};

use crate::alm::{AlmError, SolveReport, SolverConfig, Task};
use crate::data::{normalize_labels, read_libsvm_file, split, write_libsvm, Dataset};
use crate::metrics::{accuracy, fit, mse, Model};
use crate::model_file::{load_model, save_model};
use crate::newton::NewtonParams;

#[derive(Debug, Parser)]
#[command(name = "alm-svm", version, about = "Linear SVC/SVR training with a semismooth Newton augmented Lagrangian solver")]
struct Cli {
    /// Run the internal prox and gradient consistency checks first.
    #[arg(long, global = true, hide = true)]
    self_check: bool,

    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Train a model and write it to a file.
    Train(TrainArgs),
    /// Write one prediction per line.
    Predict(PredictArgs),
    /// Print accuracy (classification) or mean squared error (regression).
    Eval(EvalArgs),
    /// Split, train and evaluate; print one CSV row per dataset.
    Bench(BenchArgs),
    /// Write a built-in synthetic dataset in LIBSVM format.
    Synth(SynthArgs),
}

#[derive(Debug, Clone, Args)]
struct SolverArgs {
    /// Penalty parameter; overrides the scale options.
    #[arg(long)]
    c: Option<f64>,
    /// Classification uses C = c_scale / m_train.
    #[arg(long, default_value_t = 550.0)]
    c_scale: f64,
    /// Regression uses C = c_scale_svr / n_features.
    #[arg(long, default_value_t = 5.0)]
    c_scale_svr: f64,
    /// Width of the insensitive tube (regression).
    #[arg(long, default_value_t = 0.1)]
    epsilon: f64,
    /// Append a constant feature so the model has an intercept.
    #[arg(long)]
    bias: bool,
    /// Initial penalty parameter [default: 0.15 for svc, 0.1 for svr].
    #[arg(long)]
    sigma0: Option<f64>,
    #[arg(long, default_value_t = 2.0)]
    sigma_max: f64,
    /// Growth factor: sigma <- min(sigma_max, sigma / theta).
    #[arg(long, default_value_t = 0.8)]
    theta: f64,
    #[arg(long, default_value_t = 10)]
    max_outer: usize,
    /// Stop once the largest scaled KKT residual is at most this.
    #[arg(long, default_value_t = 1e-6)]
    tol: f64,
    /// Widen the feature dimension of the input file.
    #[arg(long)]
    n_features: Option<usize>,
}

#[derive(Debug, Args)]
struct TrainArgs {
    #[arg(long)]
    task: Task,
    #[arg(long)]
    data: PathBuf,
    #[arg(long)]
    model: PathBuf,
    /// Accepted for symmetry with `bench`; training itself is deterministic.
    #[arg(long, default_value_t = 42)]
    seed: u64,
    #[command(flatten)]
    solver: SolverArgs,
}

#[derive(Debug, Args)]
struct PredictArgs {
    #[arg(long)]
    model: PathBuf,
    #[arg(long)]
    data: PathBuf,
    /// Output file [default: stdout].
    #[arg(long)]
    output: Option<PathBuf>,
}

#[derive(Debug, Args)]
struct EvalArgs {
    #[arg(long)]
    model: PathBuf,
    #[arg(long)]
    data: PathBuf,
}

#[derive(Debug, Args)]
struct BenchArgs {
    #[arg(long)]
    task: Task,
    /// Dataset file; repeat to bench several.
    #[arg(long, required = true)]
    data: Vec<PathBuf>,
    /// Fraction of samples used for training.
    #[arg(long, default_value_t = 0.8)]
    split: f64,
    #[arg(long, default_value_t = 42)]
    seed: u64,
    /// Write |I(z)| per Newton iteration (single dataset only).
    #[arg(long)]
    emit_active_set: Option<PathBuf>,
    /// Write |grad phi| per Newton iteration (single dataset only).
    #[arg(long)]
    emit_residuals: Option<PathBuf>,
    /// Aligned table instead of CSV.
    #[arg(long)]
    pretty: bool,
    /// Datasets solved concurrently.
    #[arg(long, default_value_t = 1)]
    jobs: usize,
    #[command(flatten)]
    solver: SolverArgs,
}

#[derive(Debug, Args)]
struct SynthArgs {
    /// One of: separable_200x10, a9a_like_5000x123, leukemia_like_40x500,
    /// or a certification instance name.
    #[arg(long)]
    name: String,
    #[arg(long)]
    output: PathBuf,
}

enum CliError {
    Usage(String),
    Failure(anyhow::Error),
}

impl From<anyhow::Error> for CliError {
    fn from(e: anyhow::Error) -> Self {
        CliError::Failure(e)
    }
}

fn usage<T>(msg: impl Into<String>) -> Result<T, CliError> {
    Err(CliError::Usage(msg.into()))
}

/// Runs the command line `args` (including the program name).
pub fn run<I, T>(args: I, out: &mut dyn Write, err: &mut dyn Write) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(cli) => cli,
        Err(e) => {
            let code = e.exit_code();
            let rendered = e.render().to_string();
            if code == 0 {
                let _ = write!(out, "{rendered}");
            } else {
                let _ = write!(err, "{rendered}");
            }
            return code;
        }
    };
    if cli.self_check {
        match crate::baseline::self_check() {
            Ok(msg) => {
                let _ = writeln!(err, "{msg}");
            }
            Err(msg) => {
                let _ = writeln!(err, "error: self-check failed: {msg}");
                return 1;
            }
        }
    }
    let result = match cli.command {
        Command::Train(a) => cmd_train(a, out, err),
        Command::Predict(a) => cmd_predict(a, out),
        Command::Eval(a) => cmd_eval(a, out),
        Command::Bench(a) => cmd_bench(a, out, err),
        Command::Synth(a) => cmd_synth(a),
    };
    match result {
        Ok(()) => 0,
        Err(CliError::Usage(msg)) => {
            let _ = writeln!(err, "error: {msg}");
            2
        }
        Err(CliError::Failure(e)) => {
            let _ = writeln!(err, "error: {e:#}");
            1
        }
    }
}

impl SolverArgs {
    fn validate(&self) -> Result<(), CliError> {
        if let Some(c) = self.c {
            if !(c > 0.0 && c.is_finite()) {
                return usage("C must be positive");
            }
        }
        if !(self.c_scale > 0.0 && self.c_scale_svr > 0.0) {
            return usage("C must be positive (c-scale options must be positive)");
        }
        if !(self.epsilon >= 0.0 && self.epsilon.is_finite()) {
            return usage("epsilon must be non-negative");
        }
        self.config(Task::Svc).validate().map_err(|e| CliError::Usage(e.to_string()))?;
        self.config(Task::Svr).validate().map_err(|e| CliError::Usage(e.to_string()))
    }

    fn config(&self, task: Task) -> SolverConfig {
        let base = SolverConfig::for_task(task);
        SolverConfig {
            sigma0: self.sigma0.unwrap_or(base.sigma0),
            sigma_max: self.sigma_max,
            theta: self.theta,
            max_outer: self.max_outer,
            kkt_tol: self.tol,
            newton: NewtonParams::default(),
            ..base
        }
    }

    fn c_for(&self, task: Task, train: &Dataset, n_features: usize) -> f64 {
        self.c.unwrap_or(match task {
            Task::Svc => self.c_scale / train.len() as f64,
            Task::Svr => self.c_scale_svr / n_features.max(1) as f64,
        })
    }

    fn load(&self, path: &Path) -> Result<Dataset, CliError> {
        let data = read_libsvm_file(path).with_context(|| format!("reading {}", path.display()))?;
        match self.n_features {
            Some(n) => data.with_n_features(n).map_err(|e| CliError::Usage(e.to_string())),
            None => Ok(data),
        }
    }
}

/// Result of training on an in-memory dataset.
struct Trained {
    model: Model,
    report: SolveReport,
}

/// Labels of `data` must already be `{-1, +1}` for classification.
fn train_on(
    task: Task,
    data: Dataset,
    label_map: Option<crate::data::LabelMap>,
    solver: &SolverArgs,
) -> Result<Trained, CliError> {
    if data.is_empty() {
        return Err(CliError::Failure(anyhow!("training set is empty")));
    }
    let n_features = data.n_features;
    let c = solver.c_for(task, &data, n_features);
    let (model, report) = fit(task, &data, label_map, c, solver.epsilon, solver.bias, &solver.config(task)).map_err(|e| match e {
        AlmError::InvalidProblem(msg) | AlmError::InvalidConfig(msg) => CliError::Usage(msg),
        other => CliError::Failure(anyhow!(other)),
    })?;
    Ok(Trained { model, report })
}

fn prepare_labels(task: Task, data: Dataset) -> Result<(Dataset, Option<crate::data::LabelMap>), CliError> {
    match task {
        Task::Svc => {
            let (data, map) = normalize_labels(data).map_err(|e| anyhow!(e))?;
            Ok((data, Some(map)))
        }
        Task::Svr => Ok((data, None)),
    }
}

fn report_warnings(report: &SolveReport, tol: f64, err: &mut dyn Write) {
    for w in &report.warnings {
        let _ = writeln!(err, "warning: {w}");
    }
    if !report.converged {
        let _ = writeln!(
            err,
            "warning: KKT residual {:e} above tolerance {tol:e} after {} outer iterations",
            report.kkt_residual, report.k
        );
    }
}

fn cmd_train(a: TrainArgs, out: &mut dyn Write, err: &mut dyn Write) -> Result<(), CliError> {
    a.solver.validate()?;
    let data = a.solver.load(&a.data)?;
    let (data, map) = prepare_labels(a.task, data)?;
    let Trained { model, report } = train_on(a.task, data, map, &a.solver)?;
    save_model(&model, &a.model).with_context(|| format!("writing {}", a.model.display()))?;
    report_warnings(&report, a.solver.tol, err);
    writeln!(
        out,
        "k={} it_sn={} it_cg={} time_s={:.6} kkt={:e} gap={:e} obj={}",
        report.k, report.it_sn, report.it_cg, report.time_seconds, report.kkt_residual, report.relative_gap, report.objective
    )
    .context("writing report")?;
    Ok(())
}

fn load_for_model(model_path: &Path, data_path: &Path) -> Result<(Model, Dataset), CliError> {
    let model = load_model(model_path).with_context(|| format!("reading {}", model_path.display()))?;
    let data = read_libsvm_file(data_path).with_context(|| format!("reading {}", data_path.display()))?;
    Ok((model, data))
}

fn cmd_predict(a: PredictArgs, out: &mut dyn Write) -> Result<(), CliError> {
    let (model, data) = load_for_model(&a.model, &a.data)?;
    let mut text = String::new();
    for x in &data.samples {
        text.push_str(&model.predict(x).to_string());
        text.push('\n');
    }
    match a.output {
        Some(path) => std::fs::write(&path, text).with_context(|| format!("writing {}", path.display()))?,
        None => out.write_all(text.as_bytes()).context("writing predictions")?,
    }
    Ok(())
}

fn metric_line(model: &Model, data: &Dataset) -> String {
    match model.task {
        Task::Svc => format!("accuracy={:.3}", accuracy(model, data)),
        Task::Svr => format!("mse={:.6}", mse(model, data)),
    }
}

fn cmd_eval(a: EvalArgs, out: &mut dyn Write) -> Result<(), CliError> {
    let (model, data) = load_for_model(&a.model, &a.data)?;
    writeln!(out, "{}", metric_line(&model, &data)).context("writing metric")?;
    Ok(())
}

/// One bench result.
struct BenchRow {
    dataset: String,
    report: SolveReport,
    metric: f64,
    task: Task,
}

fn bench_one(path: &Path, a: &BenchArgs) -> Result<BenchRow, CliError> {
    let data = a.solver.load(path)?;
    let (data, map) = prepare_labels(a.task, data)?;
    let (train, test) = split(&data, a.split, a.seed).map_err(|e| CliError::Usage(e.to_string()))?;
    let Trained { model, report } = train_on(a.task, train, map, &a.solver)?;
    let test = match map {
        // Scores compare against the original labels.
        Some(map) => Dataset { labels: test.labels.iter().map(|&y| map.to_original(y)).collect(), ..test },
        None => test,
    };
    let metric = match a.task {
        Task::Svc => accuracy(&model, &test),
        Task::Svr => mse(&model, &test),
    };
    let dataset = path.file_stem().map_or_else(|| path.display().to_string(), |s| s.to_string_lossy().into_owned());
    Ok(BenchRow { dataset, report, metric, task: a.task })
}

fn write_history(path: &Path, header: &str, report: &SolveReport, pick: impl Fn(&crate::alm::OuterRecord) -> Vec<String>) -> Result<(), CliError> {
    let mut text = format!("{header}\n");
    for (k, rec) in report.outer.iter().enumerate() {
        for (j, v) in pick(rec).into_iter().enumerate() {
            text.push_str(&format!("{k},{j},{v}\n"));
        }
    }
    std::fs::write(path, text).with_context(|| format!("writing {}", path.display()))?;
    Ok(())
}

fn cmd_bench(a: BenchArgs, out: &mut dyn Write, err: &mut dyn Write) -> Result<(), CliError> {
    a.solver.validate()?;
    if !(a.split > 0.0 && a.split < 1.0) {
        return usage(format!("split must be in (0, 1), got {}", a.split));
    }
    if a.jobs == 0 {
        return usage("jobs must be at least 1");
    }
    if a.data.len() > 1 && (a.emit_active_set.is_some() || a.emit_residuals.is_some()) {
        return usage("--emit-active-set and --emit-residuals need a single --data");
    }

    let mut rows: Vec<Option<Result<BenchRow, CliError>>> = (0..a.data.len()).map(|_| None).collect();
    for (chunk_paths, chunk_rows) in a.data.chunks(a.jobs).zip(rows.chunks_mut(a.jobs)) {
        std::thread::scope(|scope| {
            let handles: Vec<_> = chunk_paths.iter().map(|p| scope.spawn(|| bench_one(p, &a))).collect();
            for (slot, h) in chunk_rows.iter_mut().zip(handles) {
                *slot = Some(h.join().unwrap_or_else(|_| Err(CliError::Failure(anyhow!("bench worker panicked")))));
            }
        });
    }
    let rows: Vec<BenchRow> = rows.into_iter().map(|r| r.expect("every slot filled")).collect::<Result<_, _>>()?;

    if let Some(path) = &a.emit_active_set {
        write_history(path, "outer,iter,active_set_size", &rows[0].report, |r| {
            r.active_set_sizes.iter().map(ToString::to_string).collect()
        })?;
    }
    if let Some(path) = &a.emit_residuals {
        write_history(path, "outer,iter,grad_norm", &rows[0].report, |r| {
            r.grad_norms.iter().map(|g| format!("{g:e}")).collect()
        })?;
    }

    let header = ["dataset", "k", "it_sn", "it_cg", "time_s", "metric"];
    let cells: Vec<[String; 6]> = rows
        .iter()
        .map(|r| {
            let metric = match r.task {
                Task::Svc => format!("{:.3}", r.metric),
                Task::Svr => format!("{:.6}", r.metric),
            };
            [
                r.dataset.clone(),
                r.report.k.to_string(),
                r.report.it_sn.to_string(),
                r.report.it_cg.to_string(),
                format!("{:.6}", r.report.time_seconds),
                metric,
            ]
        })
        .collect();
    let mut text = String::new();
    if a.pretty {
        let widths: Vec<usize> = (0..6)
            .map(|i| cells.iter().map(|c| c[i].len()).chain([header[i].len()]).max().unwrap_or(0))
            .collect();
        let line = |items: Vec<&str>| {
            items.iter().zip(&widths).map(|(s, w)| format!("{s:>w$}")).collect::<Vec<_>>().join("  ") + "\n"
        };
        text.push_str(&line(header.to_vec()));
        for c in &cells {
            text.push_str(&line(c.iter().map(String::as_str).collect()));
        }
    } else {
        text.push_str(&header.join(","));
        text.push('\n');
        for c in &cells {
            text.push_str(&c.join(","));
            text.push('\n');
        }
    }
    out.write_all(text.as_bytes()).context("writing bench rows")?;
    for r in &rows {
        if !r.report.converged {
            let _ = writeln!(
                err,
                "warning: {}: KKT residual {:e} above tolerance {:e} after {} outer iterations",
                r.dataset, r.report.kkt_residual, a.solver.tol, r.report.k
            );
        }
    }
    Ok(())
}

fn cmd_synth(a: SynthArgs) -> Result<(), CliError> {
    use crate::synthetic as syn;
    let data = match a.name.as_str() {
        "separable_200x10" => syn::separable(),
        "a9a_like_5000x123" => syn::a9a_like().data,
        "leukemia_like_40x500" => syn::leukemia_like().data,
        other => match syn::bundled().into_iter().find(|i| i.name == other) {
            Some(inst) => inst.data,
            None => return usage(format!("unknown synthetic dataset {other:?}")),
        },
    };
    std::fs::write(&a.output, write_libsvm(&data)).with_context(|| format!("writing {}", a.output.display()))?;
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;

    fn run_capture(args: &[&str]) -> (i32, String, String) {
        let mut out = Vec::new();
        let mut err = Vec::new();
        let code = run(std::iter::once("alm-svm").chain(args.iter().copied()), &mut out, &mut err);
        (code, String::from_utf8(out).unwrap(), String::from_utf8(err).unwrap())
    }

    #[test]
    fn missing_data_is_usage_error() {
        let (code, _, err) = run_capture(&["train", "--task", "svc", "--model", "m.txt"]);
        assert_eq!(code, 2);
        assert!(err.contains("--data"));
    }

    #[test]
    fn zero_c_is_rejected() {
        let (code, _, err) = run_capture(&["train", "--task", "svc", "--data", "x", "--model", "m", "--c", "0"]);
        assert_eq!(code, 2);
        assert!(err.contains("C must be positive"));
    }

    #[test]
    fn bad_task_and_split() {
        assert_eq!(run_capture(&["train", "--task", "svm", "--data", "x", "--model", "m"]).0, 2);
        let (code, _, err) = run_capture(&["bench", "--task", "svc", "--data", "x", "--split", "1.5"]);
        assert_eq!(code, 2);
        assert!(err.contains("split"));
    }

    #[test]
    fn missing_file_is_runtime_error() {
        let (code, _, err) = run_capture(&["eval", "--model", "/nonexistent/model", "--data", "/nonexistent/data"]);
        assert_eq!(code, 1);
        assert!(err.starts_with("error:"));
    }

    #[test]
    fn config_mapping() {
        let cli = Cli::try_parse_from(["alm-svm", "train", "--task", "svr", "--data", "d", "--model", "m"]).unwrap();
        let Command::Train(a) = cli.command else { panic!("expected train") };
        let cfg = a.solver.config(Task::Svr);
        assert_eq!((cfg.sigma0, cfg.sigma_max, cfg.theta, cfg.max_outer, cfg.kkt_tol), (0.1, 2.0, 0.8, 10, 1e-6));
        assert_eq!(a.solver.config(Task::Svc).sigma0, 0.15);
        let data = Dataset { samples: vec![vec![]; 4], labels: vec![1.0; 4], n_features: 20 };
        assert_eq!(a.solver.c_for(Task::Svc, &data, 20), 550.0 / 4.0);
        assert_eq!(a.solver.c_for(Task::Svr, &data, 20), 0.25);
    }

    #[test]
    fn self_check_flag_runs() {
        let (code, _, err) = run_capture(&["--self-check", "eval", "--model", "/nonexistent", "--data", "/nonexistent"]);
        assert_eq!(code, 1);
        assert!(err.contains("self-check ok"));
    }
}
