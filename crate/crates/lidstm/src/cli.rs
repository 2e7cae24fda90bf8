//! The `lidstm` command-line tool: dataset preparation, training,
//! cross-validation, evaluation, single-string prediction, and the gradient
//! self-check.
//!
//! Exit codes: 0 success · 2 usage error · 3 data/model error ·
//! 4 training divergence · 5 gradient-check failure.

use crate::corpus::{
    cap_per_language, read_conllu, read_lines, CorpusError, FoldedDataset, LanguageSet, Sample,
};
use crate::evaluation::{
    emit_report, evaluate_model, write_metrics_json, EvalError, EvalReport, ReportPaths,
    EVAL_LEN_DEFAULT,
};
use crate::fsutil::write_atomic;
use crate::model::{load_model, predict, save_model, ModelError, ModelParams};
use crate::training::{
    cross_validate, run_gradcheck, train_fold, ArchConfig, EpochStat, TrainConfig, TrainError,
    GRADCHECK_TOLERANCE,
};
use clap::{Args, Parser, Subcommand, ValueEnum};
use std::io::{BufRead, Write};
use std::path::{Path, PathBuf};
use std::process::ExitCode;

/// Character-level language identification for short strings.
#[derive(Debug, Parser)]
#[command(name = "lidstm", version, about)]
pub struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Ingest corpora, clean them, and write a fold-assigned dataset TSV.
    Prepare(PrepareArgs),
    /// Train a model on one fold's training split.
    Train(TrainArgs),
    /// Train and evaluate every fold; write per-fold and aggregate reports.
    Crossval(CrossvalArgs),
    /// Evaluate a saved model on one fold's held-out split.
    Evaluate(EvaluateArgs),
    /// Rank languages for a string (or for each stdin line).
    Predict(PredictArgs),
    /// Check analytic gradients against finite differences on a tiny model.
    Gradcheck(GradcheckArgs),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
enum InputFormat {
    /// CoNLL-U treebank files; one sample per `# text = ...` line.
    Conllu,
    /// Plain UTF-8 text, one sentence per line.
    Lines,
}

#[derive(Debug, Args)]
struct PrepareArgs {
    /// Input corpus as CODE=PATH (repeatable); CODE must be in --langs.
    #[arg(long = "input", value_name = "CODE=PATH", required = true)]
    inputs: Vec<String>,
    /// Input file format.
    #[arg(long, value_enum, default_value_t = InputFormat::Conllu)]
    format: InputFormat,
    /// Language codes in class order (comma-separated). Defaults to the
    /// 20-language reference set.
    #[arg(long, value_delimiter = ',', value_name = "CODES")]
    langs: Option<Vec<String>>,
    /// Number of cross-validation folds.
    #[arg(long, default_value_t = 5)]
    folds: usize,
    /// Per-language sample cap applied before fold assignment.
    #[arg(long, default_value_t = 20_000)]
    max_per_lang: usize,
    /// Seed for capping and fold assignment.
    #[arg(long, default_value_t = 42)]
    seed: u64,
    /// Output dataset TSV path.
    #[arg(long, value_name = "PATH")]
    output: PathBuf,
}

/// Optimization and architecture flags shared by `train` and `crossval`.
/// Defaults reproduce the reference setup.
#[derive(Debug, Args)]
struct TrainFlags {
    /// Training epochs.
    #[arg(long, default_value_t = 25)]
    epochs: usize,
    /// Minibatch size.
    #[arg(long, default_value_t = 64)]
    batch_size: usize,
    /// AdamW learning rate.
    #[arg(long, default_value_t = 1e-3)]
    lr: f64,
    /// AdamW first-moment decay.
    #[arg(long, default_value_t = 0.9)]
    beta1: f64,
    /// AdamW second-moment decay.
    #[arg(long, default_value_t = 0.999)]
    beta2: f64,
    /// AdamW denominator epsilon.
    #[arg(long, default_value_t = 1e-8)]
    eps: f64,
    /// Decoupled weight decay.
    #[arg(long, default_value_t = 0.01)]
    weight_decay: f64,
    /// Global L2 gradient-clipping threshold.
    #[arg(long, default_value_t = 5.0)]
    grad_clip: f64,
    /// Disable gradient clipping.
    #[arg(long, conflicts_with = "grad_clip")]
    no_grad_clip: bool,
    /// Character embedding dimension.
    #[arg(long, default_value_t = 150)]
    embed_dim: usize,
    /// LSTM hidden dimension (per direction).
    #[arg(long, default_value_t = 150)]
    hidden_dim: usize,
    /// Characters seen fewer than this many times in the training split
    /// collapse to UNK.
    #[arg(long, default_value_t = 10)]
    min_count: usize,
    /// Seed for initialization and epoch shuffling.
    #[arg(long, default_value_t = 42)]
    seed: u64,
    /// Worker threads (train: within-batch gradient accumulation; crossval:
    /// concurrent folds). Determinism is per (seed, jobs); LIDSTM_THREADS
    /// caps the actual thread pool.
    #[arg(long, default_value_t = 1)]
    jobs: usize,
}

impl TrainFlags {
    fn train_config(&self) -> TrainConfig {
        TrainConfig {
            epochs: self.epochs,
            batch_size: self.batch_size,
            lr: self.lr,
            beta1: self.beta1,
            beta2: self.beta2,
            eps: self.eps,
            weight_decay: self.weight_decay,
            grad_clip_norm: (!self.no_grad_clip).then_some(self.grad_clip),
            seed: self.seed,
            jobs: self.jobs,
        }
    }

    fn arch_config(&self) -> ArchConfig {
        ArchConfig {
            embed_dim: self.embed_dim,
            hidden_dim: self.hidden_dim,
            min_count: self.min_count,
        }
    }
}

#[derive(Debug, Args)]
struct TrainArgs {
    /// Dataset TSV written by `prepare`.
    #[arg(long, value_name = "PATH")]
    dataset: PathBuf,
    /// Fold whose training split to train on.
    #[arg(long, default_value_t = 0)]
    fold: usize,
    /// Output model file.
    #[arg(long, value_name = "PATH")]
    model_out: PathBuf,
    /// Output loss-trace CSV (default: model path with a .trace.csv
    /// extension).
    #[arg(long, value_name = "PATH")]
    trace_out: Option<PathBuf>,
    #[command(flatten)]
    flags: TrainFlags,
}

#[derive(Debug, Args)]
struct CrossvalArgs {
    /// Dataset TSV written by `prepare`.
    #[arg(long, value_name = "PATH")]
    dataset: PathBuf,
    /// Output directory for per-fold models, traces, and reports.
    #[arg(long, value_name = "DIR")]
    out_dir: PathBuf,
    /// Evaluation string length in characters.
    #[arg(long, default_value_t = EVAL_LEN_DEFAULT)]
    eval_len: usize,
    #[command(flatten)]
    flags: TrainFlags,
}

#[derive(Debug, Args)]
struct EvaluateArgs {
    /// Model file to evaluate.
    #[arg(long, value_name = "PATH")]
    model: PathBuf,
    /// Dataset TSV written by `prepare`.
    #[arg(long, value_name = "PATH")]
    dataset: PathBuf,
    /// Fold whose held-out split to evaluate on.
    #[arg(long, default_value_t = 0)]
    fold: usize,
    /// Evaluation string length in characters.
    #[arg(long, default_value_t = EVAL_LEN_DEFAULT)]
    eval_len: usize,
    /// Output directory for report files.
    #[arg(long, value_name = "DIR")]
    out_dir: PathBuf,
    /// File-name stem of the report files.
    #[arg(long, default_value = "eval")]
    stem: String,
}

#[derive(Debug, Args)]
struct PredictArgs {
    /// Model file.
    #[arg(long, value_name = "PATH")]
    model: PathBuf,
    /// Text to classify; without it, every stdin line is classified.
    #[arg(long)]
    text: Option<String>,
    /// Number of `code:prob` pairs to print per input.
    #[arg(long, default_value_t = 3)]
    top_k: usize,
}

#[derive(Debug, Args)]
struct GradcheckArgs {
    /// Seed for the tiny model and its random batch.
    #[arg(long, default_value_t = 42)]
    seed: u64,
    /// Fault-injection hook for testing: flips the sign of one analytic
    /// gradient coordinate, which must make the check fail.
    #[arg(long, hide = true)]
    inject_sign_flip: bool,
}

/// A failure with its process exit code.
#[derive(Debug)]
enum CliError {
    /// Exit 2: bad flags or flag values.
    Usage(String),
    /// Exit 3: unreadable/invalid data, model, or output location.
    Data(String),
    /// Exit 4: training produced a non-finite loss.
    Diverged(String),
    /// Exit 5: the gradient check failed.
    GradcheckFailed,
}

impl CliError {
    fn exit_code(&self) -> u8 {
        match self {
            CliError::Usage(_) => 2,
            CliError::Data(_) => 3,
            CliError::Diverged(_) => 4,
            CliError::GradcheckFailed => 5,
        }
    }

    fn message(&self) -> Option<&str> {
        match self {
            CliError::Usage(m) | CliError::Data(m) | CliError::Diverged(m) => Some(m),
            CliError::GradcheckFailed => None,
        }
    }
}

/// Formats an error with its full source chain on one line.
fn chain(err: &dyn std::error::Error) -> String {
    let mut out = err.to_string();
    let mut source = err.source();
    while let Some(cause) = source {
        out.push_str(&format!(": {cause}"));
        source = cause.source();
    }
    out
}

impl From<CorpusError> for CliError {
    fn from(e: CorpusError) -> Self {
        CliError::Data(chain(&e))
    }
}

impl From<ModelError> for CliError {
    fn from(e: ModelError) -> Self {
        CliError::Data(chain(&e))
    }
}

impl From<EvalError> for CliError {
    fn from(e: EvalError) -> Self {
        match e {
            EvalError::NoSuchFold { .. } => CliError::Usage(chain(&e)),
            _ => CliError::Data(chain(&e)),
        }
    }
}

impl From<TrainError> for CliError {
    fn from(e: TrainError) -> Self {
        match e {
            TrainError::BadConfig(_) | TrainError::NoSuchFold { .. } => CliError::Usage(chain(&e)),
            TrainError::NonFiniteLoss { .. } => CliError::Diverged(chain(&e)),
            TrainError::Eval(inner) => CliError::from(inner),
            _ => CliError::Data(chain(&e)),
        }
    }
}

/// Parses arguments, applies `LIDSTM_THREADS`, and dispatches. Returns the
/// process exit code.
pub fn run() -> ExitCode {
    let cli = Cli::parse();
    let result = apply_thread_cap().and_then(|()| match cli.command {
        Command::Prepare(args) => cmd_prepare(&args),
        Command::Train(args) => cmd_train(&args),
        Command::Crossval(args) => cmd_crossval(&args),
        Command::Evaluate(args) => cmd_evaluate(&args),
        Command::Predict(args) => cmd_predict(&args),
        Command::Gradcheck(args) => cmd_gradcheck(&args),
    });
    match result {
        Ok(()) => ExitCode::SUCCESS,
        Err(err) => {
            if let Some(message) = err.message() {
                eprintln!("error: {message}");
            }
            ExitCode::from(err.exit_code())
        }
    }
}

/// Honors the LIDSTM_THREADS cap on the global worker pool.
fn apply_thread_cap() -> Result<(), CliError> {
    let Ok(raw) = std::env::var("LIDSTM_THREADS") else {
        return Ok(());
    };
    let threads: usize = raw
        .parse()
        .ok()
        .filter(|&n| n >= 1)
        .ok_or_else(|| CliError::Usage(format!("LIDSTM_THREADS must be a positive integer, got {raw:?}")))?;
    // A second initialization (e.g. in tests) keeps the first pool; that is
    // fine because the cap is best-effort and per-process.
    let _ = rayon::ThreadPoolBuilder::new().num_threads(threads).build_global();
    Ok(())
}

fn cmd_prepare(args: &PrepareArgs) -> Result<(), CliError> {
    if args.folds < 2 {
        return Err(CliError::Usage(format!(
            "--folds must be at least 2, got {}",
            args.folds
        )));
    }
    let langs = match &args.langs {
        Some(codes) => LanguageSet::new(codes.iter().map(String::as_str)),
        None => Ok(LanguageSet::default_set()),
    }
    .map_err(|e| CliError::Usage(chain(&e)))?;

    let mut inputs: Vec<(usize, &str, PathBuf)> = Vec::with_capacity(args.inputs.len());
    for raw in &args.inputs {
        let (code, path) = raw.split_once('=').ok_or_else(|| {
            CliError::Usage(format!("--input must look like CODE=PATH, got {raw:?}"))
        })?;
        let lang = langs.index(code).ok_or_else(|| {
            CliError::Usage(format!("language code {code:?} is not in the language set"))
        })?;
        inputs.push((lang, code, PathBuf::from(path)));
    }

    println!("seed: {}", args.seed);
    let mut samples: Vec<Sample> = Vec::new();
    for (lang, code, path) in &inputs {
        let outcome = match args.format {
            InputFormat::Conllu => read_conllu(path, *lang)?,
            InputFormat::Lines => read_lines(path, *lang)?,
        };
        let s = outcome.stats;
        println!(
            "ingested {}: {} records, {} kept, {} empty, {} malformed, {} without text ({code})",
            path.display(),
            s.records,
            s.kept,
            s.dropped_empty,
            s.malformed,
            s.missing_text
        );
        samples.extend(outcome.samples);
    }

    let samples = cap_per_language(samples, langs.len(), args.max_per_lang, args.seed);
    let dataset = FoldedDataset::assign_folds(samples, langs, args.folds, args.seed)?;
    dataset.write_tsv(&args.output)?;

    for (code, count) in dataset
        .languages()
        .codes()
        .iter()
        .zip(dataset.counts_by_language())
    {
        println!("{code}: {count}");
    }
    println!("total: {}", dataset.len());
    println!("folds: {}", dataset.n_folds());
    println!("dataset: {}", args.output.display());
    Ok(())
}

fn write_trace_csv(path: &Path, trace: &[EpochStat]) -> Result<(), CliError> {
    write_atomic(path, |w| {
        writeln!(w, "epoch,mean_loss,train_seconds")?;
        for row in trace {
            writeln!(w, "{},{},{:.3}", row.epoch, row.mean_loss, row.seconds)?;
        }
        Ok(())
    })
    .map_err(|e| CliError::Data(format!("cannot write {}: {e}", path.display())))
}

fn print_trace(trace: &[EpochStat]) {
    for row in trace {
        println!(
            "epoch {}: loss {:.6} ({:.1}s)",
            row.epoch, row.mean_loss, row.seconds
        );
    }
}

fn cmd_train(args: &TrainArgs) -> Result<(), CliError> {
    let cfg = args.flags.train_config();
    let arch = args.flags.arch_config();
    let dataset = FoldedDataset::read_tsv(&args.dataset)?;
    if args.fold >= dataset.n_folds() {
        return Err(TrainError::NoSuchFold {
            fold: args.fold,
            n_folds: dataset.n_folds(),
        }
        .into());
    }
    println!("seed: {}", cfg.seed);
    println!(
        "training fold {} ({} samples, {} epochs)",
        args.fold,
        dataset.train_indices(args.fold).len(),
        cfg.epochs
    );

    let (params, trace) = train_fold::<f32>(&dataset, args.fold, &cfg, &arch)?;
    print_trace(&trace);
    if let Some(last) = trace.last() {
        println!("final_loss: {}", last.mean_loss);
    }

    save_model(&params, &args.model_out)?;
    let trace_path = args
        .trace_out
        .clone()
        .unwrap_or_else(|| args.model_out.with_extension("trace.csv"));
    write_trace_csv(&trace_path, &trace)?;
    println!("model: {}", args.model_out.display());
    println!("trace: {}", trace_path.display());
    Ok(())
}

fn print_report(prefix: &str, report: &EvalReport) {
    println!(
        "{prefix}n: {} acc@1: {:.4} acc@3: {:.4} acc@5: {:.4} weighted_f1: {:.4} macro_f1: {:.4}",
        report.n_samples,
        report.acc1,
        report.acc3,
        report.acc5,
        report.weighted_f1,
        report.macro_f1
    );
}

fn cmd_crossval(args: &CrossvalArgs) -> Result<(), CliError> {
    let cfg = args.flags.train_config();
    let arch = args.flags.arch_config();
    let dataset = FoldedDataset::read_tsv(&args.dataset)?;
    std::fs::create_dir_all(&args.out_dir)
        .map_err(|e| CliError::Data(format!("cannot create {}: {e}", args.out_dir.display())))?;
    println!("seed: {}", cfg.seed);
    println!(
        "cross-validation: {} folds, {} samples, eval_len {}",
        dataset.n_folds(),
        dataset.len(),
        args.eval_len
    );

    let outcome = cross_validate::<f32>(&dataset, &cfg, &arch, args.eval_len)?;
    for fold in &outcome.folds {
        let model_path = args.out_dir.join(format!("fold{}.model.bin", fold.fold));
        save_model(&fold.params, &model_path)?;
        write_trace_csv(
            &args.out_dir.join(format!("fold{}.trace.csv", fold.fold)),
            &fold.trace,
        )?;
        write_metrics_json(
            &fold.report,
            dataset.languages(),
            &args.out_dir.join(format!("fold{}.metrics.json", fold.fold)),
        )?;
        print_report(&format!("fold {}: ", fold.fold), &fold.report);
    }
    write_metrics_json(
        &outcome.aggregate,
        dataset.languages(),
        &args.out_dir.join("aggregate.metrics.json"),
    )?;
    print_report("aggregate: ", &outcome.aggregate);
    println!("out_dir: {}", args.out_dir.display());
    Ok(())
}

fn cmd_evaluate(args: &EvaluateArgs) -> Result<(), CliError> {
    let params = load_model(&args.model)?;
    let dataset = FoldedDataset::read_tsv(&args.dataset)?;
    let report = evaluate_model(&params, &dataset, args.fold, args.eval_len)?;

    std::fs::create_dir_all(&args.out_dir)
        .map_err(|e| CliError::Data(format!("cannot create {}: {e}", args.out_dir.display())))?;
    let paths = ReportPaths::with_stem(&args.out_dir, &args.stem);
    emit_report(&report, dataset.languages(), &paths)?;

    print_report("", &report);
    println!("metrics: {}", paths.metrics_json.display());
    println!("confusion: {}", paths.confusion_csv.display());
    println!("confusion_pct: {}", paths.confusion_pct_csv.display());
    println!("per_language: {}", paths.per_language_csv.display());
    Ok(())
}

/// Formats one prediction as ranked `code:prob` pairs.
fn format_prediction(params: &ModelParams<f32>, text: &str, top_k: usize) -> Result<String, CliError> {
    match predict(params, text) {
        Ok(pred) => {
            let k = top_k.max(1).min(params.langs.len());
            let pairs: Vec<String> = pred.ranked[..k]
                .iter()
                .map(|&class| {
                    let code = params.langs.code(class).expect("ranked class in set");
                    format!("{code}:{:.6}", pred.probs[class])
                })
                .collect();
            Ok(pairs.join(" "))
        }
        Err(ModelError::EmptyAfterCleaning) => Ok("??".to_string()),
        Err(e) => Err(e.into()),
    }
}

fn cmd_predict(args: &PredictArgs) -> Result<(), CliError> {
    let params = load_model(&args.model)?;
    let stdout = std::io::stdout();
    if let Some(text) = &args.text {
        println!("{}", format_prediction(&params, text, args.top_k)?);
        return Ok(());
    }
    let stdin = std::io::stdin();
    let mut out = stdout.lock();
    for line in stdin.lock().lines() {
        let line = line.map_err(|e| CliError::Data(format!("cannot read stdin: {e}")))?;
        let rendered = format_prediction(&params, &line, args.top_k)?;
        writeln!(out, "{rendered}").map_err(|e| CliError::Data(format!("cannot write stdout: {e}")))?;
    }
    Ok(())
}

fn cmd_gradcheck(args: &GradcheckArgs) -> Result<(), CliError> {
    println!("seed: {}", args.seed);
    let report = run_gradcheck(args.seed, args.inject_sign_flip);
    println!("checked: {} parameters", report.n_checked);
    println!(
        "worst: {}[{}] analytic {:e} numeric {:e}",
        report.worst_tensor, report.worst_index, report.analytic, report.numeric
    );
    println!("max_rel_err: {:e}", report.max_rel_err);
    if report.passed() {
        println!("gradcheck: PASS (tolerance {GRADCHECK_TOLERANCE:e})");
        Ok(())
    } else {
        println!("gradcheck: FAIL (tolerance {GRADCHECK_TOLERANCE:e})");
        Err(CliError::GradcheckFailed)
    }
}
