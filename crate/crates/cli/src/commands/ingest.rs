//! `ingest`: raw JSONL corpus to labeled dataset plus fitted tables.

use emopred::corpus::load_corpus;
use emopred::pipeline::{ingest, write_labeled_jsonl, IngestOptions};
use emopred::textprep::source::read_alias_tsv;
use emopred::textprep::SegmentLexicon;

use super::{require, Artifacts, CliError, CmdResult};
use crate::config::RunConfig;

pub fn run(config: &RunConfig) -> CmdResult {
    require(&config.paths.corpus, "input corpus")?;
    let lexicon = match &config.paths.lexicon {
        Some(path) => {
            require(path, "segmentation lexicon")?;
            Some(SegmentLexicon::from_tsv(path)?)
        }
        None => None,
    };
    let extra_aliases = match &config.paths.source_aliases {
        Some(path) => {
            require(path, "source alias table")?;
            read_alias_tsv(path)?
        }
        None => Vec::new(),
    };

    let loaded = load_corpus(&config.paths.corpus)?;
    if loaded.skipped_lines > 0 {
        log::warn!("skipped {} malformed line(s)", loaded.skipped_lines);
    }
    let options = IngestOptions {
        class_count: config.pipeline.class_count,
        policy: config.pipeline.label_policy,
        source_top_k: config.pipeline.source_top_k,
        lexicon,
        extra_aliases,
    };
    let mut output = ingest(loaded.tweets, &options)?;
    output.summary.skipped_lines = loaded.skipped_lines;

    let artifacts = Artifacts::new(&config.paths.out_dir);
    std::fs::create_dir_all(artifacts.dir())?;

    let mut labeled = Vec::new();
    write_labeled_jsonl(&output.examples, &output.label_set, &output.sources, &mut labeled)?;
    super::write_file(&artifacts.labeled(), &labeled)?;

    let mut buf = Vec::new();
    output.label_set.write_to(&mut buf)?;
    super::write_file(&artifacts.label_set(), &buf)?;

    buf.clear();
    output.lexicon.write_tsv(&mut buf)?;
    super::write_file(&artifacts.lexicon(), &buf)?;

    buf.clear();
    output.sources.write_names(&mut buf)?;
    super::write_file(&artifacts.sources(), &buf)?;

    buf.clear();
    output.sources.write_aliases(&mut buf)?;
    super::write_file(&artifacts.source_aliases(), &buf)?;

    let summary_json = serde_json::to_string_pretty(&output.summary)
        .map_err(|e| CliError::input(e.to_string()))?;
    super::write_file(&artifacts.ingest_summary(), summary_json.as_bytes())?;

    println!(
        "ingested {} records: kept {} (dropped {} filtered, {} unlabeled, {} empty after prep; {} malformed lines)",
        output.summary.input_records,
        output.summary.kept,
        output.summary.dropped.total(),
        output.summary.no_label,
        output.summary.empty_text_after_prep,
        output.summary.skipped_lines,
    );
    Ok(())
}
