use std::fs::{self, File};
use std::io::{BufWriter, Write};
use std::path::Path;

use anyhow::{anyhow, bail, Context, Result};
use log::{info, warn};
use serde_json::json;
use tricorpus::align::{self, PairOptions};
use tricorpus::bpe::{self, BpeModel};
use tricorpus::corpus::{self, Corpus, Format};
use tricorpus::experiments::{self, ExperimentSpec, RefusalRules, SplitAssignment};
use tricorpus::lang::{Direction, LangTag, Source};
use tricorpus::metrics::{self, EvalPair, Metric};
use tricorpus::textprep::{self, Abbreviations};
use tricorpus::verses::{self, VerseDoc};

use crate::config::PipelineConfig;
use crate::Command;

/// Input and output paths of a command, for up-front validation.
pub fn paths(cmd: &Command) -> (Vec<&Path>, Vec<&Path>) {
    match cmd {
        Command::Clean(a) => (vec![&a.input], vec![&a.out]),
        Command::SplitSentences(a) => (vec![&a.input], vec![&a.out]),
        Command::AlignVerses(a) => (
            a.docs
                .iter()
                .filter_map(|d| d.split_once('=').map(|(_, p)| Path::new(p)))
                .collect(),
            vec![&a.out],
        ),
        Command::Align(a) => {
            let mut ins: Vec<&Path> = vec![&a.src, &a.tgt, &a.src_text, &a.tgt_text];
            ins.retain(|p| !p.as_os_str().is_empty());
            (ins, vec![&a.out])
        }
        Command::LearnBpe(a) => (vec![&a.input], vec![&a.out]),
        Command::ExtendVocab(a) => (vec![&a.base, &a.new], vec![&a.out]),
        Command::Split(a) => (vec![&a.corpus], vec![&a.out]),
        Command::Assemble(a) => {
            let mut ins: Vec<&Path> = vec![&a.corpus, &a.split];
            ins.extend(a.bt.as_deref());
            (ins, vec![&a.out])
        }
        Command::ExportLlm(a) => (vec![&a.corpus, &a.split], vec![&a.out]),
        Command::IngestLlm(a) => (vec![&a.responses, &a.batch], vec![&a.out]),
        Command::Score(a) => (vec![&a.hyp, &a.reference], a.json.as_deref().into_iter().collect()),
        Command::Report(a) => (vec![&a.pairs], a.json.as_deref().into_iter().collect()),
        Command::Stats(a) => (vec![&a.corpus], a.json.as_deref().into_iter().collect()),
    }
}

pub fn execute(cmd: &Command, cfg: &PipelineConfig) -> Result<()> {
    match cmd {
        Command::Clean(a) => clean(&a.input, &a.out),
        Command::SplitSentences(a) => split_sentences(a, cfg),
        Command::AlignVerses(a) => align_verses(a),
        Command::Align(a) => align_docs(a, cfg),
        Command::LearnBpe(a) => learn_bpe(a, cfg),
        Command::ExtendVocab(a) => extend_vocab(a),
        Command::Split(a) => split(a, cfg),
        Command::Assemble(a) => assemble(a, cfg),
        Command::ExportLlm(a) => export_llm(a),
        Command::IngestLlm(a) => ingest_llm(a),
        Command::Score(a) => score(a, cfg),
        Command::Report(a) => report(a, cfg),
        Command::Stats(a) => stats(a),
    }
}

fn read_text(path: &Path) -> Result<String> {
    fs::read_to_string(path).with_context(|| format!("reading {}", path.display()))
}

fn write_text(path: &Path, text: &str) -> Result<()> {
    fs::write(path, text).with_context(|| format!("writing {}", path.display()))
}

fn tag(s: &str) -> Result<LangTag> {
    Ok(LangTag::new(s)?)
}

fn source(s: &str) -> Result<Source> {
    Ok(s.parse::<Source>()?)
}

fn load_corpus(path: &Path) -> Result<Corpus> {
    corpus::load_corpus(path, Format::from_path(path)).with_context(|| format!("loading {}", path.display()))
}

fn load_split(path: &Path) -> Result<SplitAssignment> {
    Ok(SplitAssignment::from_tsv(&read_text(path)?)?)
}

fn metrics_of(name: &str) -> Vec<Metric> {
    match name {
        "bleu" => vec![Metric::Bleu],
        "chrfpp" => vec![Metric::Chrfpp],
        _ => vec![Metric::Bleu, Metric::Chrfpp],
    }
}

fn lines_of(text: &str) -> Vec<String> {
    text.lines().map(str::to_string).collect()
}

fn clean(input: &Path, out: &Path) -> Result<()> {
    let (text, report) = textprep::clean(&read_text(input)?);
    write_text(out, &text)?;
    info!(
        "clean: {} chars in, {} removed, {} encoding fixes, {} palochka",
        report.input_chars, report.removed_nonprintable, report.encoding_fixes, report.palochka_normalizations
    );
    Ok(())
}

fn abbreviations(cfg: &PipelineConfig) -> Result<Abbreviations> {
    match &cfg.abbrev_dir {
        Some(dir) => Abbreviations::load_dir(dir).with_context(|| format!("reading {}", dir.display())),
        None => Ok(Abbreviations::defaults()),
    }
}

fn split_sentences(a: &crate::SplitSentencesArgs, cfg: &PipelineConfig) -> Result<()> {
    let lang = tag(&a.lang)?;
    let abbrevs = abbreviations(cfg)?;
    let doc = read_text(&a.input)?;
    let (sentences, _, counts) = textprep::monolingual_pipeline(&[doc], &lang, &abbrevs, cfg.min_words);
    let mut out = sentences.join("\n");
    if !out.is_empty() {
        out.push('\n');
    }
    write_text(&a.out, &out)?;
    info!(
        "split-sentences: {} split, {} after min-words, {} after dedup",
        counts.split, counts.after_min_words, counts.after_dedup
    );
    Ok(())
}

fn align_verses(a: &crate::AlignVersesArgs) -> Result<()> {
    if a.docs.len() < 2 {
        bail!("align-verses needs at least two --doc entries");
    }
    let mut docs = Vec::new();
    for spec in &a.docs {
        let (lang, path) = spec
            .split_once('=')
            .ok_or_else(|| anyhow!("--doc expects LANG=PATH, got {spec:?}"))?;
        let path = Path::new(path);
        let doc = VerseDoc::parse(tag(lang)?, &read_text(path)?).with_context(|| format!("parsing {}", path.display()))?;
        docs.push(doc);
    }
    let refs: Vec<&VerseDoc> = docs.iter().collect();
    let result = verses::align_verse_docs(&refs, source(&a.source)?, &a.id_prefix)?;
    let name = a.out.file_stem().and_then(|s| s.to_str()).unwrap_or("verses");
    let mut c = Corpus::new(name);
    c.units = result.units;
    corpus::save_corpus(&c, &a.out, Format::from_path(&a.out))?;
    info!(
        "align-verses: {} units, {} unmatched, {} conflicts",
        c.units.len(),
        result.unmatched.len(),
        result.conflicts.len()
    );
    Ok(())
}

fn align_docs(a: &crate::AlignArgs, cfg: &PipelineConfig) -> Result<()> {
    let src = align::load_embeddings(&a.src, false).with_context(|| format!("loading {}", a.src.display()))?;
    let tgt = align::load_embeddings(&a.tgt, false).with_context(|| format!("loading {}", a.tgt.display()))?;
    for w in align::embedding_warnings(&src).iter().chain(&align::embedding_warnings(&tgt)) {
        warn!("{w}");
    }
    let src_text = lines_of(&read_text(&a.src_text)?);
    let tgt_text = lines_of(&read_text(&a.tgt_text)?);
    let path = align::align_documents(&src, &tgt, cfg.skip_penalty)?;
    let opts = PairOptions {
        margin_k: cfg.margin_k,
        low_confidence: cfg.low_confidence,
    };
    let pairs = align::aligned_pairs(&path, &src, &tgt, &src_text, &tgt_text, opts)?;
    let mut w = BufWriter::new(File::create(&a.out)?);
    for p in &pairs {
        writeln!(w, "{}", serde_json::to_string(p)?)?;
    }
    w.flush()?;
    let flagged = pairs.iter().filter(|p| p.low_confidence).count();
    info!(
        "align: {} beads, {} pairs, {} low-confidence",
        path.beads.len(),
        pairs.len(),
        flagged
    );
    Ok(())
}

fn learn_bpe(a: &crate::LearnBpeArgs, cfg: &PipelineConfig) -> Result<()> {
    let lines = lines_of(&read_text(&a.input)?);
    let model = bpe::learn_bpe(&lines, cfg.merges, &cfg.end_of_word)?;
    model.save(&a.out)?;
    info!("learn-bpe: {} merges, vocab {}", model.merges().len(), model.vocab_size());
    Ok(())
}

fn extend_vocab(a: &crate::ExtendVocabArgs) -> Result<()> {
    let base = BpeModel::load(&a.base).with_context(|| format!("loading {}", a.base.display()))?;
    let new = BpeModel::load(&a.new).with_context(|| format!("loading {}", a.new.display()))?;
    let ext = bpe::extend_vocab(&base, &new, &a.lang_code)?;
    ext.save(&a.out)?;
    info!(
        "extend-vocab: {} → {} tokens",
        ext.base_vocab_size(),
        ext.vocab_size()
    );
    Ok(())
}

fn split(a: &crate::SplitArgs, cfg: &PipelineConfig) -> Result<()> {
    let c = load_corpus(&a.corpus)?;
    let s = experiments::stratified_split(&c, cfg.holdout, cfg.seed)?;
    write_text(&a.out, &s.to_tsv())?;
    let mut stdout = std::io::stdout().lock();
    for (src, q) in &s.quotas {
        writeln!(stdout, "{src}\t{q}")?;
    }
    Ok(())
}

fn assemble(a: &crate::AssembleArgs, cfg: &PipelineConfig) -> Result<()> {
    let c = load_corpus(&a.corpus)?;
    let s = load_split(&a.split)?;
    let spec = ExperimentSpec::preset(a.experiment, &cfg.langs)?;
    let bt = match &a.bt {
        Some(p) => Some(load_corpus(p)?.units),
        None => None,
    };
    let records = experiments::assemble_experiment(&c, &s, &spec, bt.as_deref())?;
    let mut w = BufWriter::new(File::create(&a.out)?);
    experiments::write_training_tsv(&records, &mut w)?;
    w.flush()?;
    let mut stdout = std::io::stdout().lock();
    for label in spec.direction_labels() {
        let n = records.iter().filter(|r| r.direction.label() == label).count();
        writeln!(stdout, "{label}\t{n}")?;
    }
    Ok(())
}

fn export_llm(a: &crate::ExportLlmArgs) -> Result<()> {
    let c = load_corpus(&a.corpus)?;
    let s = load_split(&a.split)?;
    let mut buf = Vec::new();
    let prompt = experiments::export_llm_batch(
        &c,
        &s,
        &source(&a.source)?,
        a.n,
        &tag(&a.src_lang)?,
        &tag(&a.tgt_lang)?,
        &mut buf,
    )?;
    fs::write(&a.out, buf)?;
    println!("{prompt}");
    Ok(())
}

fn ingest_llm(a: &crate::IngestLlmArgs) -> Result<()> {
    let expected = experiments::batch_ids(&a.batch)?;
    let mut rules = RefusalRules::for_lang(&tag(&a.tgt_lang)?);
    rules.patterns.extend(a.refusal_patterns.iter().cloned());
    let result = experiments::ingest_llm_responses(File::open(&a.responses)?, &expected, &rules)?;
    let out = json!({
        "translations": result.translations,
        "refusals": result.refusals,
    });
    write_text(&a.out, &(serde_json::to_string_pretty(&out)? + "\n"))?;
    println!("translations\t{}", result.translations.len());
    println!("refusals\t{}", result.refusals.len());
    Ok(())
}

fn score(a: &crate::ScoreArgs, cfg: &PipelineConfig) -> Result<()> {
    let hyp = lines_of(&read_text(&a.hyp)?);
    let reference = lines_of(&read_text(&a.reference)?);
    if hyp.len() != reference.len() {
        bail!(
            "hypothesis has {} lines but reference has {}",
            hyp.len(),
            reference.len()
        );
    }
    let pairs: Vec<(&str, &str)> = hyp.iter().map(String::as_str).zip(reference.iter().map(String::as_str)).collect();
    let mut scores = serde_json::Map::new();
    if let Some(d) = &a.direction {
        let dir = Direction::parse_with(d, &cfg.lang_list()).ok_or_else(|| anyhow!("unknown direction {d:?}"))?;
        scores.insert("direction".into(), json!(dir.label()));
    }
    if let Some(s) = &a.source {
        scores.insert("source".into(), json!(source(s)?.as_str()));
    }
    scores.insert("n".into(), json!(pairs.len()));
    let mut stdout = std::io::stdout().lock();
    for m in metrics_of(&cfg.metric) {
        let (key, value) = match m {
            Metric::Bleu => ("bleu", metrics::bleu(&pairs)?),
            Metric::Chrfpp => ("chrfpp", metrics::chrfpp(&pairs)?),
        };
        writeln!(stdout, "{}\t{value:.2}", m.name())?;
        scores.insert(key.into(), json!(value));
    }
    if let Some(p) = &a.json {
        write_text(p, &(serde_json::to_string_pretty(&scores)? + "\n"))?;
    }
    Ok(())
}

fn read_eval_pairs(path: &Path, langs: &[LangTag]) -> Result<Vec<EvalPair>> {
    let mut out = Vec::new();
    for (i, line) in read_text(path)?.lines().enumerate() {
        if line.trim().is_empty() {
            continue;
        }
        let v: serde_json::Value =
            serde_json::from_str(line).with_context(|| format!("{}:{}", path.display(), i + 1))?;
        let field = |k: &str| {
            v.get(k)
                .and_then(|x| x.as_str())
                .ok_or_else(|| anyhow!("{}:{}: missing string field `{k}`", path.display(), i + 1))
        };
        let d = field("direction")?;
        out.push(EvalPair {
            hypothesis: field("hypothesis")?.to_string(),
            reference: field("reference")?.to_string(),
            direction: Direction::parse_with(d, langs).ok_or_else(|| anyhow!("unknown direction {d:?}"))?,
            source: source(field("source")?)?,
        });
    }
    Ok(out)
}

fn report(a: &crate::ReportArgs, cfg: &PipelineConfig) -> Result<()> {
    let pairs = read_eval_pairs(&a.pairs, &cfg.lang_list())?;
    let rep = metrics::build_report(&pairs)?;
    let mut stdout = std::io::stdout().lock();
    for (i, m) in metrics_of(&cfg.metric).into_iter().enumerate() {
        if i > 0 {
            writeln!(stdout)?;
        }
        write!(stdout, "{}", rep.render(m))?;
    }
    if let Some(p) = &a.json {
        write_text(p, &(serde_json::to_string_pretty(&rep.to_json())? + "\n"))?;
    }
    Ok(())
}

fn stats(a: &crate::StatsArgs) -> Result<()> {
    let c = load_corpus(&a.corpus)?;
    let s = corpus::corpus_stats(&c);
    print!("{s}");
    if let Some(p) = &a.json {
        let groups: Vec<_> = s
            .by_source_langs
            .iter()
            .map(|((src, langs), n)| json!({ "source": src, "langs": langs, "units": n }))
            .collect();
        let out = json!({
            "groups": groups,
            "by_source": s.by_source,
            "total_units": s.total_units,
            "mono": s.mono,
        });
        write_text(p, &(serde_json::to_string_pretty(&out)? + "\n"))?;
    }
    Ok(())
}
