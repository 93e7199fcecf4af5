mod common;

use std::fs;
use std::path::Path;

use common::{fixture, run, run_ok, run_pipeline};

const SUBCOMMANDS: [&str; 13] = [
    "clean",
    "split-sentences",
    "align-verses",
    "align",
    "learn-bpe",
    "extend-vocab",
    "split",
    "assemble",
    "export-llm",
    "ingest-llm",
    "score",
    "report",
    "stats",
];

fn help_text() -> String {
    let mut all = String::from_utf8(run_ok(&["--help"]).stdout).unwrap();
    for sub in SUBCOMMANDS {
        all.push_str(&format!("\n===== {sub} =====\n"));
        all.push_str(&String::from_utf8(run_ok(&[sub, "--help"]).stdout).unwrap());
    }
    all
}

#[test]
fn help_matches_golden_file() {
    let golden = Path::new(env!("CARGO_MANIFEST_DIR")).join("tests/golden/help.txt");
    let text = help_text();
    if std::env::var_os("UPDATE_GOLDEN").is_some() {
        fs::write(&golden, &text).unwrap();
    }
    let want = fs::read_to_string(&golden).expect("golden file; regenerate with UPDATE_GOLDEN=1");
    assert_eq!(text, want);
    for sub in SUBCOMMANDS {
        assert!(text.contains(&format!("\n  {sub} ")), "{sub} missing from top-level help");
    }
}

#[test]
fn pipeline_is_deterministic_across_runs_and_threads() {
    let a = tempfile::tempdir().unwrap();
    let b = tempfile::tempdir().unwrap();
    let c = tempfile::tempdir().unwrap();
    let first = run_pipeline(a.path(), 1);
    let second = run_pipeline(b.path(), 1);
    let threaded = run_pipeline(c.path(), 4);
    assert_eq!(first.len(), second.len());
    for ((name, x), ((_, y), (_, z))) in first.iter().zip(second.iter().zip(&threaded)) {
        assert!(x == y, "{name} differs between runs");
        assert!(x == z, "{name} differs across thread counts");
    }
}

#[test]
fn identical_files_score_100() {
    let r = fixture("ref.txt");
    let r = r.to_str().unwrap();
    let out = run_ok(&["score", "--hyp", r, "--ref", r, "--metric", "both"]);
    assert_eq!(String::from_utf8(out.stdout).unwrap(), "BLEU\t100.00\nChrF++\t100.00\n");
}

#[test]
fn stats_prints_counts_per_source() {
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("exemplar.tsv");
    let mut tsv = String::from("id\tsource\tlez_Cyrl\tazj_Latn\n");
    for (source, n) in [("bible", 13617), ("quran", 6350), ("qusar", 10095)] {
        for i in 0..n {
            tsv.push_str(&format!("{source}{i}\t{source}\tл{i}\ta{i}\n"));
        }
    }
    fs::write(&path, tsv).unwrap();
    let out = run_ok(&["stats", "--corpus", path.to_str().unwrap()]);
    let text = String::from_utf8(out.stdout).unwrap();
    assert!(text.contains("bible\t*\t13617\n"));
    assert!(text.contains("quran\t*\t6350\n"));
    assert!(text.contains("qusar\t*\t10095\n"));
    assert!(text.contains("total\t*\t30062\n"));
}

#[test]
fn errors_are_one_machine_readable_line() {
    let missing = run(&["stats", "--corpus", "/definitely/not/here.jsonl"]);
    assert_eq!(missing.status.code(), Some(2));
    let err = String::from_utf8(missing.stderr).unwrap();
    assert_eq!(err.lines().count(), 1);
    assert!(err.starts_with("error[usage]: input not found"));

    let unknown = run(&["frobnicate"]);
    assert_eq!(unknown.status.code(), Some(2));
    assert!(String::from_utf8(unknown.stderr).unwrap().starts_with("error[usage]:"));

    let dir = tempfile::tempdir().unwrap();
    let conf = dir.path().join("bad.conf");
    fs::write(&conf, "seed = 1\nwidth = 3\n").unwrap();
    let bad = run(&["--config", conf.to_str().unwrap(), "--version"]);
    assert_eq!(bad.status.code(), Some(1));
    assert_eq!(
        String::from_utf8(bad.stderr).unwrap(),
        "error[config]: config field `width`: unknown key\n"
    );

    let out = dir.path().join("x.tsv");
    let no_bt = run(&[
        "assemble",
        "--corpus",
        fixture("corpus.jsonl").to_str().unwrap(),
        "--split",
        fixture("corpus.jsonl").to_str().unwrap(),
        "--experiment",
        "4",
        "--out",
        out.to_str().unwrap(),
    ]);
    assert_eq!(no_bt.status.code(), Some(1));
    assert!(!out.exists());
}

#[test]
fn outputs_are_not_touched_when_an_input_is_missing() {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().join("split.tsv");
    let r = run(&["split", "--corpus", "/missing.jsonl", "--out", out.to_str().unwrap()]);
    assert!(!r.status.success());
    assert!(!out.exists());
}

#[test]
fn version_reports_config_hash() {
    let plain = String::from_utf8(run_ok(&["--version"]).stdout).unwrap();
    assert!(plain.starts_with(&format!("tricorpus {} config-sha256 ", env!("CARGO_PKG_VERSION"))));
    let conf = fixture("toy.conf");
    let with_conf = String::from_utf8(run_ok(&["--config", conf.to_str().unwrap(), "--version"]).stdout).unwrap();
    assert_ne!(plain, with_conf);
    let hash = with_conf.split_whitespace().last().unwrap();
    assert_eq!(hash.len(), 64);
}

#[test]
fn flags_override_config_values() {
    let conf = fixture("toy.conf");
    let conf = conf.to_str().unwrap();
    let text = String::from_utf8(run_ok(&["--config", conf, "--print-config"]).stdout).unwrap();
    assert!(text.contains("holdout = 10\n"));
    assert!(text.contains("seed = 42\n"));
    let text = String::from_utf8(run_ok(&["--config", conf, "--seed", "9", "--print-config"]).stdout).unwrap();
    assert!(text.contains("seed = 9\n"));

    let dir = tempfile::tempdir().unwrap();
    let split = dir.path().join("s.tsv");
    let corpus = fixture("corpus.jsonl");
    let out = run_ok(&[
        "--config",
        conf,
        "split",
        "--holdout",
        "5",
        "--corpus",
        corpus.to_str().unwrap(),
        "--out",
        split.to_str().unwrap(),
    ]);
    let quotas: usize = String::from_utf8(out.stdout)
        .unwrap()
        .lines()
        .map(|l| l.split('\t').nth(1).unwrap().parse::<usize>().unwrap())
        .sum();
    assert_eq!(quotas, 5);
}

#[test]
fn align_flags_low_confidence_with_threshold() {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().join("pairs.jsonl");
    let f = |n: &str| fixture(n).to_string_lossy().into_owned();
    run_ok(&[
        "align",
        "--src",
        &f("src.emb"),
        "--tgt",
        &f("tgt.emb"),
        "--src-text",
        &f("src.txt"),
        "--tgt-text",
        &f("tgt.txt"),
        "--threshold",
        "2.0",
        "--out",
        out.to_str().unwrap(),
    ]);
    let text = fs::read_to_string(&out).unwrap();
    let beads: Vec<serde_json::Value> = text.lines().map(|l| serde_json::from_str(l).unwrap()).collect();
    assert_eq!(beads.len(), 7);
    assert!(beads.iter().all(|b| b["low_confidence"] == true));
    let kinds: Vec<&str> = beads.iter().map(|b| b["bead"].as_str().unwrap()).collect();
    assert_eq!(kinds, ["1-1", "1-1", "2-1", "1-1", "1-2", "1-1", "1-1"]);
}
