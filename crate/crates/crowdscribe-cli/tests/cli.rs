//! Black-box tests of the `crowdscribe` binary: exit codes, output
//! formats, seeded reproducibility, and manifest-driven reruns.

use std::path::{Path, PathBuf};
use std::process::{Command, Output};

fn bin() -> Command {
    Command::new(env!("CARGO_BIN_EXE_crowdscribe"))
}

fn run(args: &[&str]) -> Output {
    bin().args(args).output().expect("binary runs")
}

fn stdout(out: &Output) -> String {
    String::from_utf8_lossy(&out.stdout).into_owned()
}

fn write(path: &Path, content: &str) {
    std::fs::write(path, content).unwrap();
}

fn fixture_dataset(dir: &Path) -> (PathBuf, PathBuf) {
    let ann = dir.join("annotations.tsv");
    let truths = dir.join("truths.tsv");
    write(
        &ann,
        "item_id\tworker_id\ttext\na\tw1\tthe cat sat\na\tw2\tthe cat sat\na\tw3\ta cat sat\n\
         b\tw1\thello world\nb\tw2\thello world\nb\tw3\thello word\n\
         c\tw1\tgood morning\nc\tw2\tgood evening\nc\tw3\tgood morning\n",
    );
    write(
        &truths,
        "item_id\ttext\na\tthe cat sat\nb\thello world\nc\tgood morning\n",
    );
    (ann, truths)
}

#[test]
fn rover_on_three_items_writes_three_rows() {
    let dir = tempfile::tempdir().unwrap();
    let (ann, _) = fixture_dataset(dir.path());
    let out = dir.path().join("rover.tsv");
    let result = run(&[
        "aggregate",
        "--input",
        ann.to_str().unwrap(),
        "--method",
        "rover",
        "--out",
        out.to_str().unwrap(),
    ]);
    assert!(result.status.success());
    let body = std::fs::read_to_string(&out).unwrap();
    assert_eq!(body.lines().count(), 4, "header plus three rows:\n{body}");
    assert!(body.contains("a\tthe cat sat"));
    // manifest lands alongside
    assert!(dir.path().join("rover.tsv.manifest.json").is_file());
}

#[test]
fn identical_invocations_are_byte_identical() {
    let dir = tempfile::tempdir().unwrap();
    let (ann, _) = fixture_dataset(dir.path());
    let out1 = dir.path().join("one.tsv");
    let out2 = dir.path().join("two.tsv");
    for (out, _) in [(&out1, 0), (&out2, 0)] {
        let result = run(&[
            "aggregate",
            "--input",
            ann.to_str().unwrap(),
            "--method",
            "random",
            "--seed",
            "9",
            "--out",
            out.to_str().unwrap(),
        ]);
        assert!(result.status.success());
    }
    assert_eq!(
        std::fs::read(&out1).unwrap(),
        std::fs::read(&out2).unwrap(),
        "seeded runs must match byte for byte"
    );
}

#[test]
fn oracle_without_truths_exits_3() {
    let dir = tempfile::tempdir().unwrap();
    let (ann, _) = fixture_dataset(dir.path());
    let result = run(&[
        "aggregate",
        "--input",
        ann.to_str().unwrap(),
        "--method",
        "oracle",
        "--out",
        dir.path().join("x.tsv").to_str().unwrap(),
    ]);
    assert_eq!(result.status.code(), Some(3));
}

#[test]
fn malformed_input_exits_2() {
    let dir = tempfile::tempdir().unwrap();
    let bad = dir.path().join("bad.tsv");
    write(&bad, "item_id\tworker_id\ttext\nonly two\tcolumns\n");
    let result = run(&[
        "aggregate",
        "--input",
        bad.to_str().unwrap(),
        "--method",
        "rover",
        "--out",
        dir.path().join("x.tsv").to_str().unwrap(),
    ]);
    assert_eq!(result.status.code(), Some(2));
}

#[test]
fn eval_reports_zero_for_perfect_outputs() {
    let dir = tempfile::tempdir().unwrap();
    let (_, truths) = fixture_dataset(dir.path());
    let result = run(&[
        "eval",
        "--outputs",
        truths.to_str().unwrap(),
        "--truths",
        truths.to_str().unwrap(),
    ]);
    assert!(result.status.success());
    assert_eq!(stdout(&result).trim(), "mean WER 0.00");
}

#[test]
fn eval_mismatched_ids_exits_3() {
    let dir = tempfile::tempdir().unwrap();
    let (_, truths) = fixture_dataset(dir.path());
    let other = dir.path().join("other.tsv");
    write(&other, "item_id\ttext\nghost\tsome text\n");
    let result = run(&[
        "eval",
        "--outputs",
        other.to_str().unwrap(),
        "--truths",
        truths.to_str().unwrap(),
    ]);
    assert_eq!(result.status.code(), Some(3));
}

#[test]
fn alpha_perfect_agreement_and_seed_stability() {
    let dir = tempfile::tempdir().unwrap();
    let ann = dir.path().join("ann.tsv");
    let mut body = String::from("item_id\tworker_id\ttext\n");
    for i in 0..12 {
        let text = format!("line {}", "x".repeat(i + 1));
        for w in 0..3 {
            body.push_str(&format!("i{i}\tw{w}\t{text}\n"));
        }
    }
    write(&ann, &body);
    let args = [
        "alpha",
        "--input",
        ann.to_str().unwrap(),
        "--samples",
        "50",
        "--sample-size",
        "8",
        "--seed",
        "4",
    ];
    let one = run(&args);
    assert!(one.status.success());
    assert!(stdout(&one).starts_with("alpha 1.00"), "{}", stdout(&one));
    let two = run(&args);
    assert_eq!(stdout(&one), stdout(&two));
}

#[test]
fn simulate_is_reproducible_and_writes_stats() {
    let dir = tempfile::tempdir().unwrap();
    let corpus = dir.path().join("corpus.txt");
    let mut lines = String::new();
    for i in 0..40 {
        lines.push_str(&format!(
            "sentence {} about the weather today\n",
            "w".repeat(i + 1)
        ));
    }
    write(&corpus, &lines);
    let project = dir.path().join("project.kv");
    write(&project, "overlap: 3\nexam_size: 4\n");
    let pool = dir.path().join("pool.kv");
    write(&pool, "n_workers: 12\n");
    let run_once = |out: &Path| {
        let result = run(&[
            "simulate",
            "--corpus",
            corpus.to_str().unwrap(),
            "--project-config",
            project.to_str().unwrap(),
            "--pool-config",
            pool.to_str().unwrap(),
            "--seed",
            "21",
            "--out",
            out.to_str().unwrap(),
        ]);
        assert!(
            result.status.success(),
            "{}",
            String::from_utf8_lossy(&result.stderr)
        );
        stdout(&result)
    };
    let out1 = dir.path().join("run1");
    let out2 = dir.path().join("run2");
    let text1 = run_once(&out1);
    run_once(&out2);
    assert!(text1.contains("exam_acceptance_rate:"));
    for file in ["annotations.tsv", "truths.tsv", "ledger.tsv", "stats.txt"] {
        let a = std::fs::read(out1.join(file)).unwrap();
        let b = std::fs::read(out2.join(file)).unwrap();
        assert_eq!(a, b, "{file} differs between identical seeded runs");
    }
    assert!(out1.join("stats.txt.manifest.json").is_file());
}

#[test]
fn stats_and_breakdown_commands() {
    let dir = tempfile::tempdir().unwrap();
    let (ann, truths) = fixture_dataset(dir.path());
    let result = run(&["stats", "--input", ann.to_str().unwrap()]);
    assert!(result.status.success());
    let text = stdout(&result);
    assert!(text.contains("n_items: 3"));
    assert!(text.contains("n_workers: 3"));
    assert!(text.contains("n_answers: 9"));

    let oracle_out = dir.path().join("oracle.tsv");
    assert!(run(&[
        "aggregate",
        "--input",
        ann.to_str().unwrap(),
        "--truths",
        truths.to_str().unwrap(),
        "--method",
        "oracle",
        "--out",
        oracle_out.to_str().unwrap(),
    ])
    .status
    .success());
    let result = run(&[
        "breakdown",
        "--input",
        ann.to_str().unwrap(),
        "--truths",
        truths.to_str().unwrap(),
        "--outputs",
        &format!("oracle={}", oracle_out.display()),
    ]);
    assert!(result.status.success());
    let table = stdout(&result);
    assert!(table.contains("all_correct"), "{table}");
    assert!(table.contains("has_correct"));
}

#[test]
fn empty_dataset_stats_are_zero() {
    let dir = tempfile::tempdir().unwrap();
    let ann = dir.path().join("empty.tsv");
    write(&ann, "item_id\tworker_id\ttext\n");
    let result = run(&["stats", "--input", ann.to_str().unwrap()]);
    assert!(result.status.success());
    assert!(stdout(&result).contains("n_items: 0"));
}

#[test]
fn rerun_from_manifest_reproduces_outputs() {
    let dir = tempfile::tempdir().unwrap();
    let (ann, _) = fixture_dataset(dir.path());
    let out = dir.path().join("r.tsv");
    assert!(run(&[
        "aggregate",
        "--input",
        ann.to_str().unwrap(),
        "--method",
        "random",
        "--seed",
        "3",
        "--out",
        out.to_str().unwrap(),
    ])
    .status
    .success());
    let first = std::fs::read(&out).unwrap();
    std::fs::remove_file(&out).unwrap();
    let manifest = dir.path().join("r.tsv.manifest.json");
    let result = run(&["rerun", manifest.to_str().unwrap()]);
    assert!(
        result.status.success(),
        "{}",
        String::from_utf8_lossy(&result.stderr)
    );
    assert_eq!(first, std::fs::read(&out).unwrap());
}

#[test]
fn convert_via_mapping_round_trips() {
    let dir = tempfile::tempdir().unwrap();
    let release = dir.path().join("release.csv");
    write(
        &release,
        "INPUT:audio,ASSIGNMENT:worker_id,OUTPUT:transcription\n\
         rec-1,31,\"it's a, test\"\nrec-1,32,its a test\nrec-2,31,another one\n",
    );
    let mapping = dir.path().join("mapping.kv");
    write(
        &mapping,
        "delimiter: comma\nitem_id: INPUT:audio\nworker_id: ASSIGNMENT:worker_id\ntext: OUTPUT:transcription\n",
    );
    let out = dir.path().join("canonical.tsv");
    let result = run(&[
        "convert",
        "--input",
        release.to_str().unwrap(),
        "--mapping",
        mapping.to_str().unwrap(),
        "--out",
        out.to_str().unwrap(),
    ]);
    assert!(
        result.status.success(),
        "{}",
        String::from_utf8_lossy(&result.stderr)
    );
    let result = run(&["stats", "--input", out.to_str().unwrap()]);
    assert!(stdout(&result).contains("n_items: 2"));
    assert!(stdout(&result).contains("n_answers: 3"));
}

#[test]
fn full_workflow_simulate_aggregate_eval_alpha() {
    let dir = tempfile::tempdir().unwrap();
    let corpus = dir.path().join("corpus.txt");
    let words = [
        "alpha", "bravo", "charlie", "delta", "echo", "foxtrot", "golf", "hotel",
    ];
    let mut lines = String::new();
    for i in 0..60 {
        let sentence: Vec<&str> = (0..12)
            .map(|k| words[(i * 5 + k * 3) % words.len()])
            .collect();
        lines.push_str(&sentence.join(" "));
        lines.push_str(&format!(" {}\n", "m".repeat(i % 9 + 1)));
    }
    write(&corpus, &lines);
    let project = dir.path().join("project.kv");
    write(&project, "overlap: 5\nexam_size: 5\n");
    let outdir = dir.path().join("sim");
    assert!(run(&[
        "simulate",
        "--corpus",
        corpus.to_str().unwrap(),
        "--project-config",
        project.to_str().unwrap(),
        "--seed",
        "13",
        "--out",
        outdir.to_str().unwrap(),
    ])
    .status
    .success());

    let ann = outdir.join("annotations.tsv");
    let truths = outdir.join("truths.tsv");
    let mut wers = Vec::new();
    for method in ["rover", "oracle", "random"] {
        let out = dir.path().join(format!("{method}.tsv"));
        assert!(run(&[
            "aggregate",
            "--input",
            ann.to_str().unwrap(),
            "--truths",
            truths.to_str().unwrap(),
            "--method",
            method,
            "--out",
            out.to_str().unwrap(),
        ])
        .status
        .success());
        let eval = run(&[
            "eval",
            "--outputs",
            out.to_str().unwrap(),
            "--truths",
            truths.to_str().unwrap(),
        ]);
        assert!(eval.status.success());
        let text = stdout(&eval);
        let value: f64 = text.trim().rsplit(' ').next().unwrap().parse().unwrap();
        wers.push((method, value));
    }
    let get = |m: &str| wers.iter().find(|(n, _)| *n == m).unwrap().1;
    assert!(get("oracle") <= get("random"), "{wers:?}");
    assert!(get("rover") <= get("random"), "{wers:?}");

    let alpha = run(&[
        "alpha",
        "--input",
        ann.to_str().unwrap(),
        "--samples",
        "100",
        "--sample-size",
        "20",
        "--seed",
        "2",
    ]);
    assert!(alpha.status.success());
    assert!(stdout(&alpha).starts_with("alpha 0.") || stdout(&alpha).starts_with("alpha 1."));

    let breakdown = run(&[
        "breakdown",
        "--input",
        ann.to_str().unwrap(),
        "--truths",
        truths.to_str().unwrap(),
        "--outputs",
        &format!("rover={}", dir.path().join("rover.tsv").display()),
        "--outputs",
        &format!("oracle={}", dir.path().join("oracle.tsv").display()),
        "--format",
        "json",
    ]);
    assert!(breakdown.status.success());
    let json: serde_json::Value = serde_json::from_str(&stdout(&breakdown)).unwrap();
    assert_eq!(json["n_items"], 55);
}

#[test]
fn filter_command_partitions_corpus() {
    let dir = tempfile::tempdir().unwrap();
    let corpus = dir.path().join("corpus.txt");
    write(
        &corpus,
        "a clean sentence\nhas 19 digits\nanother clean one\n",
    );
    let kept = dir.path().join("kept.txt");
    let rejected = dir.path().join("rejected.tsv");
    let result = run(&[
        "filter",
        "--input",
        corpus.to_str().unwrap(),
        "--out",
        kept.to_str().unwrap(),
        "--rejected",
        rejected.to_str().unwrap(),
    ]);
    assert!(result.status.success());
    let kept_body = std::fs::read_to_string(&kept).unwrap();
    assert_eq!(kept_body.lines().count(), 2);
    let rejected_body = std::fs::read_to_string(&rejected).unwrap();
    assert!(rejected_body.contains("digits"));
}
