//! `stats`: label/source distribution reports and per-class top features.

use std::fmt::Write as _;

use emopred::corpus::class_distribution;
use emopred::features::analysis::{
    source_emoji_crosstab, top_features_per_class, FeatureField, RankConfig,
};
use emopred::features::Vocabulary;

use super::{load_fitted, Artifacts, CliError, CmdResult};
use crate::config::RunConfig;

pub fn run(config: &RunConfig) -> CmdResult {
    let artifacts = Artifacts::new(&config.paths.out_dir);
    let fitted = load_fitted(&artifacts)?;
    let num_classes = fitted.label_set.len();

    // Label distribution with minority flags.
    let dist = class_distribution(&fitted.examples, num_classes);
    let mut csv = String::from("class,emoji,count,percentage,minority\n");
    for class in 0..num_classes {
        writeln!(
            csv,
            "{},{},{},{:.4},{}",
            class,
            fitted.label_set.emoji(class),
            dist.counts[class],
            dist.percentages[class],
            dist.minority[class]
        )
        .expect("write to string");
    }
    super::write_file(&artifacts.label_distribution(), csv.as_bytes())?;

    // Source histogram and per-source top emojis.
    let crosstab = source_emoji_crosstab(
        &fitted.examples,
        &fitted.sources,
        num_classes,
        config.stats.top_emoji_m,
    )?;
    let mut csv = String::from("rank,source,count\n");
    for (rank, &source_id) in crosstab.source_ranking.iter().enumerate() {
        writeln!(
            csv,
            "{},{},{}",
            rank + 1,
            crosstab.source_names[source_id],
            crosstab.source_totals[source_id]
        )
        .expect("write to string");
    }
    super::write_file(&artifacts.source_distribution(), csv.as_bytes())?;

    let mut csv = String::from("source,label,count\n");
    for &source_id in &crosstab.source_ranking {
        for &(label, count) in &crosstab.top_by_source[source_id] {
            writeln!(csv, "{},{},{}", crosstab.source_names[source_id], label, count)
                .expect("write to string");
        }
    }
    super::write_file(&artifacts.source_top_emoji(), csv.as_bytes())?;

    // Per-class top features over the complete dataset, per field.
    let rank_config = RankConfig {
        method: config.stats.method,
        seed: config.seed,
        ..RankConfig::default()
    };
    for (field, path) in [
        (FeatureField::Text, artifacts.top_features_text()),
        (FeatureField::Hashtags, artifacts.top_features_hashtags()),
    ] {
        let tokens = fitted.examples.iter().flat_map(|ex| {
            match field {
                FeatureField::Text => ex.text_tokens.iter(),
                FeatureField::Hashtags => ex.hashtag_tokens.iter(),
            }
            .map(String::as_str)
        });
        let vocab = Vocabulary::fit(tokens, 1, config.encode.text_max_size)?;
        let top = top_features_per_class(
            &fitted.examples,
            field,
            &vocab,
            num_classes,
            config.stats.top_features_k,
            &rank_config,
        )?;
        for warning in &top.warnings {
            log::warn!("{warning}");
        }
        let mut csv = String::from("class,rank,token,score\n");
        for (class, ranked) in top.per_class.iter().enumerate() {
            for (rank, (token, score)) in ranked.iter().enumerate() {
                writeln!(csv, "{},{},{},{:.6}", class, rank + 1, token, score)
                    .expect("write to string");
            }
        }
        super::write_file(&path, csv.as_bytes())?;
    }

    if num_classes == 0 {
        return Err(CliError::input("dataset has no classes; nothing to report"));
    }
    println!(
        "stats written for {} examples, {} classes, {} sources",
        fitted.examples.len(),
        num_classes,
        fitted.sources.len()
    );
    Ok(())
}
