//! End-to-end tests of the command-line binary: every subcommand, the exit
//! code taxonomy, and the shapes of all emitted artifacts.

mod common;

use common::{synth_long_sentences, synth_sentences, write_conllu, write_lines, DA, FI, SV};
use lidstm::corpus::{FoldedDataset, DATASET_HEADER};
use lidstm::evaluation::load_metrics_json;
use lidstm::model::load_model;
use std::io::Write as _;
use std::path::{Path, PathBuf};
use std::process::{Command, Output, Stdio};
use std::sync::OnceLock;

fn bin() -> Command {
    Command::new(env!("CARGO_BIN_EXE_lidstm"))
}

fn run(args: &[&str]) -> Output {
    bin().args(args).output().expect("binary runs")
}

fn stdout_of(out: &Output) -> String {
    String::from_utf8_lossy(&out.stdout).into_owned()
}

fn stderr_of(out: &Output) -> String {
    String::from_utf8_lossy(&out.stderr).into_owned()
}

fn assert_exit(out: &Output, code: i32) {
    assert_eq!(
        out.status.code(),
        Some(code),
        "wrong exit code.\nstdout:\n{}\nstderr:\n{}",
        stdout_of(out),
        stderr_of(out)
    );
}

fn path_str(p: &Path) -> &str {
    p.to_str().expect("utf-8 path")
}

// ---------------------------------------------------------------------------
// Shared fixture: a prepared dataset and a trained model over da/fi with
// long (≥ 55 character) lines, built once through the real binary.
// ---------------------------------------------------------------------------

struct Fixture {
    _dir: tempfile::TempDir,
    dataset: PathBuf,
    model: PathBuf,
}

static FIXTURE: OnceLock<Fixture> = OnceLock::new();

fn fixture() -> &'static Fixture {
    FIXTURE.get_or_init(|| {
        let dir = tempfile::tempdir().expect("tempdir");
        let da_path = dir.path().join("da.txt");
        let fi_path = dir.path().join("fi.txt");
        write_lines(&da_path, &synth_long_sentences(&DA, 120, 55, 11));
        write_lines(&fi_path, &synth_long_sentences(&FI, 120, 55, 11));

        let dataset = dir.path().join("dafi.tsv");
        let out = run(&[
            "prepare",
            "--input", &format!("da={}", path_str(&da_path)),
            "--input", &format!("fi={}", path_str(&fi_path)),
            "--format", "lines",
            "--langs", "da,fi",
            "--seed", "11",
            "--output", path_str(&dataset),
        ]);
        assert_exit(&out, 0);

        let model = dir.path().join("dafi.model.bin");
        let out = run(&[
            "train",
            "--dataset", path_str(&dataset),
            "--fold", "0",
            "--model-out", path_str(&model),
            "--embed-dim", "16",
            "--hidden-dim", "16",
            "--epochs", "12",
            "--batch-size", "32",
            "--min-count", "1",
            "--seed", "7",
        ]);
        assert_exit(&out, 0);

        Fixture { _dir: dir, dataset, model }
    })
}

// ---------------------------------------------------------------------------
// prepare
// ---------------------------------------------------------------------------

#[test]
fn prepare_builds_a_stratified_dataset_and_is_idempotent() {
    let dir = tempfile::tempdir().unwrap();
    let da_path = dir.path().join("da.conllu");
    let sv_path = dir.path().join("sv.conllu");
    write_conllu(&da_path, &synth_sentences(&DA, 40, 3));
    write_conllu(&sv_path, &synth_sentences(&SV, 45, 3));
    let dataset = dir.path().join("dasv.tsv");

    let args = [
        "prepare",
        "--input", &format!("da={}", path_str(&da_path)),
        "--input", &format!("sv={}", path_str(&sv_path)),
        "--langs", "da,sv",
        "--folds", "5",
        "--seed", "9",
        "--output", path_str(&dataset),
    ];
    let out = run(&args);
    assert_exit(&out, 0);
    let text = stdout_of(&out);
    assert!(text.contains("seed: 9"), "stdout: {text}");
    assert!(text.contains("da: 40") && text.contains("sv: 45"), "stdout: {text}");

    let content = std::fs::read(&dataset).unwrap();
    assert!(String::from_utf8_lossy(&content).starts_with(DATASET_HEADER));

    let ds = FoldedDataset::read_tsv(&dataset).unwrap();
    assert_eq!(ds.languages().codes(), ["da", "sv"]);
    assert_eq!(ds.n_folds(), 5);
    assert_eq!(ds.counts_by_language(), vec![40, 45]);
    for lang in 0..2 {
        let mut per_fold = [0usize; 5];
        for (i, s) in ds.samples().iter().enumerate() {
            if s.lang == lang {
                per_fold[ds.fold_of(i)] += 1;
            }
        }
        let lo = per_fold.iter().min().unwrap();
        let hi = per_fold.iter().max().unwrap();
        assert!(hi - lo <= 1, "language {lang}: {per_fold:?}");
    }

    // Same inputs, same seed → byte-identical dataset file.
    let out = run(&args);
    assert_exit(&out, 0);
    assert_eq!(std::fs::read(&dataset).unwrap(), content);
}

#[test]
fn prepare_rejects_codes_outside_the_language_set() {
    let dir = tempfile::tempdir().unwrap();
    let p = dir.path().join("x.txt");
    write_lines(&p, &synth_sentences(&DA, 10, 1));
    let out = run(&[
        "prepare",
        "--input", &format!("xx={}", path_str(&p)),
        "--format", "lines",
        "--langs", "da,sv",
        "--output", path_str(&dir.path().join("never.tsv")),
    ]);
    assert_exit(&out, 2);
    assert!(stderr_of(&out).contains("xx"), "stderr: {}", stderr_of(&out));
}

#[test]
fn prepare_caps_samples_per_language() {
    let dir = tempfile::tempdir().unwrap();
    let p = dir.path().join("da.txt");
    write_lines(&p, &synth_sentences(&DA, 300, 5));
    let dataset = dir.path().join("capped.tsv");
    let out = run(&[
        "prepare",
        "--input", &format!("da={}", path_str(&p)),
        "--format", "lines",
        "--langs", "da",
        "--max-per-lang", "100",
        "--folds", "5",
        "--output", path_str(&dataset),
    ]);
    assert_exit(&out, 0);
    let ds = FoldedDataset::read_tsv(&dataset).unwrap();
    assert_eq!(ds.counts_by_language(), vec![100]);
}

#[test]
fn prepare_requires_parsable_input_specs() {
    let out = run(&[
        "prepare",
        "--input", "missing-equals-sign",
        "--format", "lines",
        "--output", "/tmp/never.tsv",
    ]);
    assert_exit(&out, 2);
}

// ---------------------------------------------------------------------------
// train
// ---------------------------------------------------------------------------

#[test]
fn train_writes_a_loadable_model_and_a_full_trace() {
    let fx = fixture();
    let params = load_model(&fx.model).unwrap();
    assert_eq!(params.langs.codes(), ["da", "fi"]);
    assert_eq!(params.hyper.embed_dim, 16);
    assert_eq!(params.hyper.hidden_dim, 16);

    let trace_path = fx.model.with_extension("trace.csv");
    let trace = std::fs::read_to_string(&trace_path).unwrap();
    let lines: Vec<&str> = trace.lines().collect();
    assert_eq!(lines[0], "epoch,mean_loss,train_seconds");
    assert_eq!(lines.len(), 1 + 12, "one row per epoch");
    // Losses parse as finite numbers and the first epoch's loss is largest.
    let losses: Vec<f64> = lines[1..]
        .iter()
        .map(|l| l.split(',').nth(1).unwrap().parse().unwrap())
        .collect();
    assert!(losses.iter().all(|l| l.is_finite()));
    assert!(losses.last().unwrap() < losses.first().unwrap());
}

#[test]
fn train_rejects_a_fold_index_out_of_range() {
    let fx = fixture();
    let dir = tempfile::tempdir().unwrap();
    let out = run(&[
        "train",
        "--dataset", path_str(&fx.dataset),
        "--fold", "9",
        "--model-out", path_str(&dir.path().join("never.bin")),
        "--epochs", "1",
    ]);
    assert_exit(&out, 2);
    assert!(stderr_of(&out).contains("fold 9"), "stderr: {}", stderr_of(&out));
}

#[test]
fn train_rejects_an_unreadable_dataset() {
    let out = run(&[
        "train",
        "--dataset", "/nonexistent/ds.tsv",
        "--model-out", "/tmp/never.bin",
        "--epochs", "1",
    ]);
    assert_exit(&out, 3);
}

// ---------------------------------------------------------------------------
// evaluate
// ---------------------------------------------------------------------------

#[test]
fn evaluate_writes_all_four_report_files() {
    let fx = fixture();
    let dir = tempfile::tempdir().unwrap();
    let out = run(&[
        "evaluate",
        "--model", path_str(&fx.model),
        "--dataset", path_str(&fx.dataset),
        "--fold", "0",
        "--out-dir", path_str(dir.path()),
    ]);
    assert_exit(&out, 0);
    for name in [
        "eval.metrics.json",
        "eval.confusion.csv",
        "eval.confusion_pct.csv",
        "eval.per_language.csv",
    ] {
        assert!(dir.path().join(name).exists(), "missing {name}");
    }
    let doc = load_metrics_json(&dir.path().join("eval.metrics.json")).unwrap();
    assert!(doc.acc.at1 <= doc.acc.at3 && doc.acc.at3 <= doc.acc.at5);
    assert_eq!(doc.per_language.len(), 2);
}

#[test]
fn evaluate_scores_training_data_at_least_as_well_as_held_out() {
    let fx = fixture();
    let dir = tempfile::tempdir().unwrap();
    let mut acc = Vec::new();
    // Fold 0 was held out of training; fold 1 was part of the training split.
    for fold in ["0", "1"] {
        let out_dir = dir.path().join(format!("fold{fold}"));
        let out = run(&[
            "evaluate",
            "--model", path_str(&fx.model),
            "--dataset", path_str(&fx.dataset),
            "--fold", fold,
            "--out-dir", path_str(&out_dir),
        ]);
        assert_exit(&out, 0);
        let doc = load_metrics_json(&out_dir.join("eval.metrics.json")).unwrap();
        acc.push(doc.acc.at1);
    }
    assert!(
        acc[1] >= acc[0],
        "training-split accuracy {} below held-out accuracy {}",
        acc[1],
        acc[0]
    );
}

#[test]
fn evaluate_improves_with_longer_evaluation_strings() {
    let fx = fixture();
    let dir = tempfile::tempdir().unwrap();
    let mut acc = Vec::new();
    let mut n = Vec::new();
    for eval_len in ["10", "50"] {
        let out_dir = dir.path().join(format!("len{eval_len}"));
        let out = run(&[
            "evaluate",
            "--model", path_str(&fx.model),
            "--dataset", path_str(&fx.dataset),
            "--fold", "0",
            "--eval-len", eval_len,
            "--out-dir", path_str(&out_dir),
        ]);
        assert_exit(&out, 0);
        let doc = load_metrics_json(&out_dir.join("eval.metrics.json")).unwrap();
        acc.push(doc.acc.at1);
        n.push(doc.n);
    }
    // Every fixture line cleans to ≥ 10 characters, so eval_len 10 sees the
    // whole fold. At 50, samples whose trim landed on a word boundary hold
    // 49 characters and are rightly skipped.
    assert_eq!(n[0], 48);
    assert!(n[1] > 0 && n[1] <= 48, "50-char evaluation saw {} samples", n[1]);
    assert!(
        acc[1] >= acc[0],
        "50-char accuracy {} below 10-char accuracy {}",
        acc[1],
        acc[0]
    );
}

#[test]
fn evaluate_rejects_a_dataset_with_different_languages() {
    let fx = fixture();
    let dir = tempfile::tempdir().unwrap();
    let sv_path = dir.path().join("sv.txt");
    write_lines(&sv_path, &synth_sentences(&SV, 30, 2));
    let other = dir.path().join("sv.tsv");
    let out = run(&[
        "prepare",
        "--input", &format!("sv={}", path_str(&sv_path)),
        "--format", "lines",
        "--langs", "sv",
        "--output", path_str(&other),
    ]);
    assert_exit(&out, 0);

    let out = run(&[
        "evaluate",
        "--model", path_str(&fx.model),
        "--dataset", path_str(&other),
        "--out-dir", path_str(&dir.path().join("reports")),
    ]);
    assert_exit(&out, 3);
    let err = stderr_of(&out);
    assert!(err.contains("languages"), "stderr: {err}");
}

// ---------------------------------------------------------------------------
// crossval
// ---------------------------------------------------------------------------

#[test]
fn crossval_emits_five_models_and_six_reports() {
    let fx = fixture();
    let dir = tempfile::tempdir().unwrap();
    let out = run(&[
        "crossval",
        "--dataset", path_str(&fx.dataset),
        "--out-dir", path_str(dir.path()),
        "--embed-dim", "12",
        "--hidden-dim", "12",
        "--epochs", "2",
        "--batch-size", "32",
        "--min-count", "1",
        "--seed", "5",
    ]);
    assert_exit(&out, 0);

    for fold in 0..5 {
        assert!(dir.path().join(format!("fold{fold}.model.bin")).exists());
        assert!(dir.path().join(format!("fold{fold}.trace.csv")).exists());
        assert!(dir.path().join(format!("fold{fold}.metrics.json")).exists());
    }
    let aggregate = load_metrics_json(&dir.path().join("aggregate.metrics.json")).unwrap();
    // Aggregate n is the whole dataset: every sample is held out exactly once.
    assert_eq!(aggregate.n, 240);

    // Aggregate acc@1 is the sample-weighted mean of the fold values.
    let mut weighted = 0.0;
    for fold in 0..5 {
        let doc = load_metrics_json(&dir.path().join(format!("fold{fold}.metrics.json"))).unwrap();
        weighted += doc.n as f64 * doc.acc.at1;
    }
    assert!((aggregate.acc.at1 - weighted / aggregate.n as f64).abs() < 1e-12);
}

// ---------------------------------------------------------------------------
// predict
// ---------------------------------------------------------------------------

#[test]
fn predict_prints_a_ranked_distribution() {
    let fx = fixture();
    let out = run(&[
        "predict",
        "--model", path_str(&fx.model),
        "--text", "hvor er huset og hvad skal vi",
    ]);
    assert_exit(&out, 0);
    let line = stdout_of(&out);
    let entries: Vec<(&str, f64)> = line
        .trim()
        .split(' ')
        .map(|e| {
            let (code, prob) = e.split_once(':').expect("code:prob");
            (code, prob.parse::<f64>().expect("parsable probability"))
        })
        .collect();
    // Two languages → top-k clamps from the default 3 to 2.
    assert_eq!(entries.len(), 2);
    assert_eq!(entries[0].0, "da");
    assert!(entries[0].1 >= entries[1].1, "ranked by probability");
    let sum: f64 = entries.iter().map(|(_, p)| p).sum();
    assert!(sum <= 1.0 + 1e-6 && sum > 0.99, "probabilities sum to {sum}");
}

#[test]
fn predict_reads_stdin_line_by_line_and_marks_unidentifiable_input() {
    let fx = fixture();
    let mut child = bin()
        .args(["predict", "--model", path_str(&fx.model), "--top-k", "1"])
        .stdin(Stdio::piped())
        .stdout(Stdio::piped())
        .stderr(Stdio::piped())
        .spawn()
        .expect("spawn");
    child
        .stdin
        .take()
        .unwrap()
        .write_all("hvor er huset\n12345 !!!\nkirjassa on järvi\n".as_bytes())
        .unwrap();
    let out = child.wait_with_output().unwrap();
    assert_exit(&out, 0);
    let lines: Vec<String> = stdout_of(&out).lines().map(str::to_string).collect();
    assert_eq!(lines.len(), 3);
    assert!(lines[0].starts_with("da:"), "line: {}", lines[0]);
    assert_eq!(lines[1], "??", "digits and punctuation clean to nothing");
    assert!(lines[2].starts_with("fi:"), "line: {}", lines[2]);
}

#[test]
fn predict_rejects_a_corrupt_model_file() {
    let dir = tempfile::tempdir().unwrap();
    let bad = dir.path().join("bad.bin");
    std::fs::write(&bad, b"not a model at all").unwrap();
    let out = run(&["predict", "--model", path_str(&bad), "--text", "hello"]);
    assert_exit(&out, 3);
    assert!(
        stderr_of(&out).contains("magic"),
        "stderr: {}",
        stderr_of(&out)
    );
}

// ---------------------------------------------------------------------------
// gradcheck
// ---------------------------------------------------------------------------

#[test]
fn gradcheck_passes_and_reports_the_error_bound() {
    let out = run(&["gradcheck", "--seed", "5"]);
    assert_exit(&out, 0);
    let text = stdout_of(&out);
    assert!(text.contains("gradcheck: PASS"), "stdout: {text}");
    let err: f64 = text
        .lines()
        .find_map(|l| l.strip_prefix("max_rel_err: "))
        .expect("max_rel_err line")
        .trim()
        .parse()
        .expect("parsable error");
    assert!(err < 1e-4, "max relative error {err}");
}

#[test]
fn gradcheck_detects_an_injected_gradient_fault() {
    let out = run(&["gradcheck", "--seed", "5", "--inject-sign-flip"]);
    assert_exit(&out, 5);
    assert!(stdout_of(&out).contains("gradcheck: FAIL"));
}

// ---------------------------------------------------------------------------
// Environment and usage errors
// ---------------------------------------------------------------------------

#[test]
fn thread_cap_environment_variable_is_validated() {
    let out = bin()
        .args(["gradcheck", "--seed", "3"])
        .env("LIDSTM_THREADS", "not-a-number")
        .output()
        .unwrap();
    assert_exit(&out, 2);
    assert!(stderr_of(&out).contains("LIDSTM_THREADS"));

    let out = bin()
        .args(["gradcheck", "--seed", "3"])
        .env("LIDSTM_THREADS", "1")
        .output()
        .unwrap();
    assert_exit(&out, 0);
}

#[test]
fn usage_errors_exit_with_code_two() {
    assert_exit(&run(&["no-such-subcommand"]), 2);
    assert_exit(&run(&["train", "--dataset", "x.tsv"]), 2); // missing --model-out
    assert_exit(&run(&["predict"]), 2); // missing --model
}
