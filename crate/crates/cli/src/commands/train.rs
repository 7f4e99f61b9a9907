//! `train`: fit the configured model and write checkpoint plus history.

use std::fmt::Write as _;

use emopred::baselines::{train_linear, LinearConfig};
use emopred::baselines::forest::train_forest_threaded;
use emopred::eval::experiment::ModelKind;
use emopred::neural::{save_checkpoint, train as train_bilstm};

use super::{build_split, load_fitted, prepare_data, vocab_hashes, Artifacts, CmdResult};
use crate::config::RunConfig;

pub fn run(config: &RunConfig, threads: usize) -> CmdResult {
    let artifacts = Artifacts::new(&config.paths.out_dir);
    let fitted = load_fitted(&artifacts)?;
    let num_classes = fitted.label_set.len();
    let split = build_split(config, fitted.examples)?;
    let data = prepare_data(config, &split, num_classes, fitted.sources.len())?;

    let mut buf = Vec::new();
    data.text_vocab.write_tsv(&mut buf)?;
    super::write_file(&artifacts.text_vocab(), &buf)?;
    buf.clear();
    data.hashtag_vocab.write_tsv(&mut buf)?;
    super::write_file(&artifacts.hashtag_vocab(), &buf)?;

    match config.experiment.model {
        ModelKind::Bilstm => {
            let train_config = config.bilstm.train_config(config.seed, config.experiment.flags());
            let (params, history) =
                train_bilstm::<f32>(&data.train, &data.dev, &data.vocab_dims(), &train_config)?;
            let hashes = vocab_hashes(&data, &fitted.sources);
            save_checkpoint(&params, &hashes, &artifacts.checkpoint())?;

            let mut csv = String::from("epoch,train_loss,dev_acc,dev_macro_f1\n");
            for row in &history {
                writeln!(
                    csv,
                    "{},{},{},{}",
                    row.epoch, row.train_loss, row.dev_accuracy, row.dev_macro_f1
                )
                .expect("write to string");
            }
            super::write_file(&artifacts.history(), csv.as_bytes())?;

            let last = history.last().expect("at least one epoch");
            println!(
                "trained BiLSTM for {} epoch(s); best checkpoint at {} (last dev acc {:.4}, macro-F1 {:.4})",
                history.len(),
                artifacts.checkpoint().display(),
                last.dev_accuracy,
                last.dev_macro_f1,
            );
        }
        ModelKind::Linear => {
            let linear_config = LinearConfig { seed: config.seed, ..config.linear.clone() };
            let model = train_linear(&data.bow_train, num_classes, &linear_config)?;
            model.save(&artifacts.baseline_model())?;
            println!("trained LinearSVC; model at {}", artifacts.baseline_model().display());
        }
        ModelKind::Forest => {
            let forest_config =
                emopred::baselines::ForestConfig { seed: config.seed, ..config.forest.clone() };
            let model =
                train_forest_threaded(&data.bow_train, num_classes, &forest_config, threads)?;
            model.save(&artifacts.baseline_model())?;
            println!("trained RandomForest; model at {}", artifacts.baseline_model().display());
        }
    }
    Ok(())
}
