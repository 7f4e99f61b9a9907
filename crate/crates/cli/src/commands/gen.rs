//! `gen-synthetic`: deterministic planted-signal corpora.

use std::path::PathBuf;

use emopred::corpus::synthetic::{generate_synthetic_corpus, templates, SyntheticTemplate};
use emopred::corpus::write_jsonl;

use super::{require, Artifacts, CliError, CmdResult};
use crate::config::RunConfig;

pub struct GenArgs {
    pub preset: Option<String>,
    pub template: Option<PathBuf>,
    pub n: usize,
    pub seed: Option<u64>,
    pub out: Option<PathBuf>,
}

pub fn run(config: Option<&RunConfig>, args: &GenArgs) -> CmdResult {
    let template: SyntheticTemplate = match (&args.preset, &args.template) {
        (Some(_), Some(_)) => {
            return Err(CliError::input("use either --preset or --template, not both"))
        }
        (Some(preset), None) => match preset.as_str() {
            "ablation" => templates::ablation(),
            "capacity" => templates::capacity(),
            "feature-recovery" => templates::feature_recovery(),
            other => {
                return Err(CliError::input(format!(
                    "unknown preset {other:?}; available: ablation, capacity, feature-recovery"
                )))
            }
        },
        (None, Some(path)) => {
            require(path, "synthetic template")?;
            let json = std::fs::read_to_string(path)?;
            serde_json::from_str(&json)
                .map_err(|e| CliError::input(format!("bad template: {e}")))?
        }
        (None, None) => return Err(CliError::input("provide --preset or --template")),
    };

    let seed = args.seed.or(config.map(|c| c.seed)).unwrap_or(0);
    let out = match (&args.out, config) {
        (Some(path), _) => path.clone(),
        (None, Some(config)) => Artifacts::new(&config.paths.out_dir).synthetic(),
        (None, None) => return Err(CliError::input("provide --out or a config file")),
    };

    let tweets = generate_synthetic_corpus(&template, args.n, seed)?;
    let mut buf = Vec::new();
    write_jsonl(&tweets, &mut buf)?;
    super::write_file(&out, &buf)?;
    println!("wrote {} synthetic tweets to {}", tweets.len(), out.display());
    Ok(())
}
