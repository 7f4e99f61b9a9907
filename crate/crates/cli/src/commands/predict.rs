//! `predict`: run one or more raw texts through the identical preprocessing
//! path and print the predicted emoji with top-k probabilities.

use std::path::PathBuf;

use emopred::baselines::{ForestModel, LinearModel};
use emopred::eval::experiment::ModelKind;
use emopred::features::{encode_example, Vocabulary};
use emopred::neural::{load_checkpoint, predict as bilstm_predict, softmax};
use emopred::pipeline::{segment_tags, Preprocessor};
use emopred::textprep::{SegmentLexicon, SourceTable};

use super::{require, Artifacts, CliError, CmdResult};
use crate::config::RunConfig;

pub struct PredictArgs {
    pub text: Option<String>,
    pub file: Option<PathBuf>,
    pub source: Option<String>,
    pub hashtags: Option<String>,
    pub top_k: Option<usize>,
    pub show_tokens: bool,
}

enum Model {
    Bilstm(Box<emopred::neural::BiLstmParams<f32>>),
    Linear(LinearModel),
    Forest(ForestModel),
}

pub fn run(config: &RunConfig, args: &PredictArgs) -> CmdResult {
    let artifacts = Artifacts::new(&config.paths.out_dir);
    for (path, what) in [
        (artifacts.label_set(), "label set"),
        (artifacts.lexicon(), "segmentation lexicon"),
        (artifacts.sources(), "source table"),
        (artifacts.text_vocab(), "text vocabulary"),
        (artifacts.hashtag_vocab(), "hashtag vocabulary"),
    ] {
        require(&path, &format!("{what} (run `ingest` and `train` first)"))?;
    }

    let label_set = emopred::corpus::LabelSet::from_file(&artifacts.label_set())?;
    let sources = SourceTable::from_files(&artifacts.sources(), &artifacts.source_aliases())?;
    let lexicon = SegmentLexicon::from_tsv(&artifacts.lexicon())?;
    let text_vocab = Vocabulary::from_tsv(&artifacts.text_vocab())?;
    let hashtag_vocab = Vocabulary::from_tsv(&artifacts.hashtag_vocab())?;
    let preprocessor = Preprocessor::new(lexicon, sources);

    let model = match config.experiment.model {
        ModelKind::Bilstm => {
            require(&artifacts.checkpoint(), "checkpoint (run `train` first)")?;
            let (params, hashes) = load_checkpoint::<f32>(&artifacts.checkpoint())?;
            if hashes.text != text_vocab.stable_hash()
                || hashes.hashtags != hashtag_vocab.stable_hash()
                || hashes.sources != preprocessor.sources.stable_hash()
            {
                return Err(CliError::inconsistent(
                    "checkpoint vocabulary hashes do not match the fitted tables",
                ));
            }
            Model::Bilstm(Box::new(params))
        }
        ModelKind::Linear => {
            require(&artifacts.baseline_model(), "baseline model (run `train` first)")?;
            Model::Linear(LinearModel::load(&artifacts.baseline_model())?)
        }
        ModelKind::Forest => {
            require(&artifacts.baseline_model(), "baseline model (run `train` first)")?;
            Model::Forest(ForestModel::load(&artifacts.baseline_model())?)
        }
    };

    let texts: Vec<String> = match (&args.text, &args.file) {
        (Some(text), None) => vec![text.clone()],
        (None, Some(path)) => {
            require(path, "input file")?;
            std::fs::read_to_string(path)?
                .lines()
                .map(str::to_string)
                .filter(|l| !l.trim().is_empty())
                .collect()
        }
        _ => return Err(CliError::input("provide exactly one of --text or --file")),
    };
    if texts.is_empty() || texts.iter().all(|t| t.trim().is_empty()) {
        return Err(CliError::input("empty input text"));
    }

    let top_k = args.top_k.unwrap_or(config.predict.top_k).max(1);
    for text in &texts {
        if text.trim().is_empty() {
            return Err(CliError::input("empty input text"));
        }
        let mut prepped = preprocessor.preprocess(text, args.source.as_deref());
        if let Some(tags) = &args.hashtags {
            let raw: Vec<String> =
                tags.split(',').map(|t| t.trim().trim_start_matches('#').to_lowercase())
                    .filter(|t| !t.is_empty())
                    .collect();
            prepped.hashtag_tokens = segment_tags(&preprocessor.lexicon, &raw);
        }
        if args.show_tokens {
            eprintln!("tokens\t{}", prepped.text_tokens.join(" "));
            eprintln!("hashtags\t{}", prepped.hashtag_tokens.join(" "));
            eprintln!("source\t{}", preprocessor.sources.name(prepped.source_id));
        }

        let example = emopred::corpus::LabeledExample {
            tweet_id: "cli".into(),
            label: 0,
            text_tokens: prepped.text_tokens,
            hashtag_tokens: prepped.hashtag_tokens,
            source_id: prepped.source_id,
            timestamp: None,
        };
        let encoded = encode_example(&example, &text_vocab, &hashtag_vocab, config.encode.max_len)?;

        let probs: Vec<f64> = match &model {
            Model::Bilstm(params) => {
                let (_, probs) = bilstm_predict(params, &encoded)?;
                probs.into_iter().map(|p| p as f64).collect()
            }
            Model::Linear(linear) => {
                let x = emopred::features::bow_vector(
                    &example.text_tokens,
                    &text_vocab,
                    emopred::features::BowWeighting::Count,
                );
                softmax(&linear.decision(&x)?)
            }
            Model::Forest(forest) => {
                let x = emopred::features::bow_vector(
                    &example.text_tokens,
                    &text_vocab,
                    emopred::features::BowWeighting::Count,
                );
                let scores = forest.scores(&x)?;
                let total: f64 = scores.iter().sum();
                if total > 0.0 {
                    scores.into_iter().map(|s| s / total).collect()
                } else {
                    vec![1.0 / scores.len() as f64; scores.len()]
                }
            }
        };

        let mut ranked: Vec<(usize, f64)> = probs.iter().copied().enumerate().collect();
        ranked.sort_by(|a, b| b.1.partial_cmp(&a.1).unwrap().then(a.0.cmp(&b.0)));
        let best = ranked[0].0;
        println!("{}", label_set.emoji(best));
        for &(label, p) in ranked.iter().take(top_k) {
            println!("{}\t{:.6}", label_set.emoji(label), p);
        }
    }
    Ok(())
}
