#![allow(dead_code)]

use std::path::{Path, PathBuf};
use std::process::{Command, Output};

pub fn bin() -> &'static str {
    env!("CARGO_BIN_EXE_tricorpus")
}

pub fn fixture(name: &str) -> PathBuf {
    Path::new(env!("CARGO_MANIFEST_DIR")).join("tests/fixtures/toy").join(name)
}

pub fn run(args: &[&str]) -> Output {
    Command::new(bin())
        .args(args)
        .env("RUST_LOG", "warn")
        .output()
        .expect("binary runs")
}

pub fn run_ok(args: &[&str]) -> Output {
    let out = run(args);
    assert!(
        out.status.success(),
        "{args:?} failed: {}",
        String::from_utf8_lossy(&out.stderr)
    );
    out
}

/// Runs every stage on the toy fixture into `dir` and returns each primary
/// output (files and captured stdout) by name, in a fixed order.
pub fn run_pipeline(dir: &Path, threads: usize) -> Vec<(String, Vec<u8>)> {
    let f = |n: &str| fixture(n).to_string_lossy().into_owned();
    let o = |n: &str| dir.join(n).to_string_lossy().into_owned();
    let threads = threads.to_string();
    let conf = f("toy.conf");
    let global = ["--config", conf.as_str(), "--threads", threads.as_str()];
    let mut outputs: Vec<(String, Vec<u8>)> = Vec::new();
    let mut step = |name: &str, args: Vec<String>, files: &[&str]| {
        let mut all: Vec<&str> = global.to_vec();
        all.extend(args.iter().map(String::as_str));
        let out = run_ok(&all);
        outputs.push((format!("{name}.stdout"), out.stdout));
        for file in files {
            outputs.push((file.to_string(), std::fs::read(dir.join(file)).unwrap()));
        }
    };
    let s = |v: &[&str]| v.iter().map(|x| x.to_string()).collect::<Vec<_>>();

    step("clean", s(&["clean", "--input", &f("raw.txt"), "--out", &o("clean.txt")]), &["clean.txt"]);
    step(
        "split-sentences",
        s(&["split-sentences", "--input", &o("clean.txt"), "--lang", "rus_Cyrl", "--out", &o("sentences.txt")]),
        &["sentences.txt"],
    );
    step(
        "align-verses",
        s(&[
            "align-verses",
            "--doc",
            &format!("lez_Cyrl={}", f("verses_lez.tsv")),
            "--doc",
            &format!("rus_Cyrl={}", f("verses_rus.tsv")),
            "--source",
            "bible",
            "--out",
            &o("verses.jsonl"),
        ]),
        &["verses.jsonl"],
    );
    step(
        "align",
        s(&[
            "align",
            "--src",
            &f("src.emb"),
            "--tgt",
            &f("tgt.emb"),
            "--src-text",
            &f("src.txt"),
            "--tgt-text",
            &f("tgt.txt"),
            "--out",
            &o("pairs.jsonl"),
        ]),
        &["pairs.jsonl"],
    );
    step("learn-bpe", s(&["learn-bpe", "--input", &f("mono.txt"), "--out", &o("lez.json")]), &["lez.json"]);
    step(
        "learn-bpe-base",
        s(&["learn-bpe", "--merges", "30", "--input", &f("ref.txt"), "--out", &o("base.json")]),
        &["base.json"],
    );
    step(
        "extend-vocab",
        s(&[
            "extend-vocab",
            "--base",
            &o("base.json"),
            "--new",
            &o("lez.json"),
            "--lang-code",
            "lez_Cyrl",
            "--out",
            &o("extended.json"),
        ]),
        &["extended.json"],
    );
    step("split", s(&["split", "--corpus", &f("corpus.jsonl"), "--out", &o("split.tsv")]), &["split.tsv"]);
    for e in ["1", "2", "3", "4"] {
        let name = format!("train{e}.tsv");
        step(
            &format!("assemble{e}"),
            s(&[
                "assemble",
                "--corpus",
                &f("corpus.jsonl"),
                "--split",
                &o("split.tsv"),
                "--experiment",
                e,
                "--bt",
                &f("bt.jsonl"),
                "--out",
                &o(&name),
            ]),
            &[name.as_str()],
        );
    }
    step(
        "export-llm",
        s(&[
            "export-llm",
            "--corpus",
            &f("corpus.jsonl"),
            "--split",
            &o("split.tsv"),
            "--source",
            "qusar",
            "--n",
            "3",
            "--src-lang",
            "lez_Cyrl",
            "--tgt-lang",
            "rus_Cyrl",
            "--out",
            &o("batch.csv"),
        ]),
        &["batch.csv"],
    );
    step(
        "ingest-llm",
        s(&[
            "ingest-llm",
            "--responses",
            &f("responses_empty.csv"),
            "--batch",
            &o("batch.csv"),
            "--tgt-lang",
            "rus_Cyrl",
            "--out",
            &o("ingest.json"),
        ]),
        &["ingest.json"],
    );
    step(
        "score",
        s(&[
            "score",
            "--hyp",
            &f("hyp.txt"),
            "--ref",
            &f("ref.txt"),
            "--direction",
            "lez-az",
            "--json",
            &o("score.json"),
        ]),
        &["score.json"],
    );
    step(
        "report",
        s(&["report", "--pairs", &f("eval.jsonl"), "--json", &o("report.json")]),
        &["report.json"],
    );
    step(
        "stats",
        s(&["stats", "--corpus", &f("corpus.jsonl"), "--json", &o("stats.json")]),
        &["stats.json"],
    );
    outputs
}
