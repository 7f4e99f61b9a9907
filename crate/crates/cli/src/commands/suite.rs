//! `suite`: the seven-row feature/dataset comparison table.
//!
//! Two dataset variants are built from the labeled corpus: "semeval" (a
//! deterministic class-skewed subsample, mimicking an imbalanced source
//! dataset) and "complete" (the corpus as configured, including any balance
//! strategy). Baselines and a text-only BiLSTM run on the skewed variant;
//! the BiLSTM feature ablation runs on the complete variant.

use emopred::eval::experiment::{
    run_suite, semeval_style_subsample, ExperimentConfig, ModelKind, PreparedData,
};
use emopred::neural::FeatureFlags;

use super::{build_split, load_fitted, prepare_data, Artifacts, CliError, CmdResult};
use crate::config::RunConfig;

pub fn run(config: &RunConfig) -> CmdResult {
    let artifacts = Artifacts::new(&config.paths.out_dir);
    let fitted = load_fitted(&artifacts)?;
    let num_classes = fitted.label_set.len();
    if num_classes == 0 {
        return Err(CliError::input("dataset has no classes; run `ingest` on a labeled corpus"));
    }

    let skewed = semeval_style_subsample(&fitted.examples, config.seed);
    let skewed_split = {
        // The skew is the point of this variant; bypass the balance strategy.
        let ratios = (config.split.train, config.split.dev, config.split.test);
        let (split, warnings) = emopred::corpus::split(skewed, ratios, config.seed)?;
        for warning in warnings {
            log::warn!("{warning}");
        }
        split
    };
    let semeval = prepare_data(config, &skewed_split, num_classes, fitted.sources.len())?;

    let complete_split = build_split(config, fitted.examples)?;
    let complete = prepare_data(config, &complete_split, num_classes, fitted.sources.len())?;

    let rows = standard_rows(config);
    let runs: Vec<(&ExperimentConfig, &PreparedData)> = rows
        .iter()
        .map(|row| {
            let data = if row.dataset == "semeval" { &semeval } else { &complete };
            (row, data)
        })
        .collect();
    let report = run_suite(runs)?;

    super::write_file(&artifacts.suite_csv(), report.to_csv().as_bytes())?;
    super::write_file(&artifacts.suite_table(), report.to_table().as_bytes())?;
    print!("{}", report.to_table());
    Ok(())
}

/// The seven standard rows: two baselines and a text-only BiLSTM on the
/// skewed variant, then the BiLSTM feature ablation on the complete corpus.
pub fn standard_rows(config: &RunConfig) -> Vec<ExperimentConfig> {
    let base = |label: &str, model: ModelKind, dataset: &str, flags: FeatureFlags| {
        ExperimentConfig {
            label: label.to_string(),
            model,
            dataset: dataset.to_string(),
            flags,
            seed: config.seed,
            linear: config.linear.clone(),
            forest: config.forest.clone(),
            bilstm: config.bilstm.train_config(config.seed, flags),
        }
    };
    let text = FeatureFlags::default();
    vec![
        base("SemEval-style", ModelKind::Forest, "semeval", text),
        base("SemEval-style", ModelKind::Linear, "semeval", text),
        base("SemEval-style", ModelKind::Bilstm, "semeval", text),
        base("Complete Dataset", ModelKind::Bilstm, "complete", text),
        base("Text + Hashtags", ModelKind::Bilstm, "complete", FeatureFlags::new(true, false)),
        base("Text + Source", ModelKind::Bilstm, "complete", FeatureFlags::new(false, true)),
        base(
            "Text + Hashtags + Source",
            ModelKind::Bilstm,
            "complete",
            FeatureFlags::new(true, true),
        ),
    ]
}
