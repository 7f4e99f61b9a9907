//! `evaluate`: test-split metrics for the trained model, guarded by
//! vocabulary-hash consistency checks.

use emopred::baselines::{ForestModel, LinearModel};
use emopred::error::Result as CoreResult;
use emopred::eval::evaluate;
use emopred::eval::experiment::ModelKind;
use emopred::neural::{load_checkpoint, predict};

use super::{build_split, load_fitted, prepare_data, require, vocab_hashes, Artifacts, CliError, CmdResult};
use crate::config::RunConfig;

pub fn run(config: &RunConfig) -> CmdResult {
    let artifacts = Artifacts::new(&config.paths.out_dir);
    let fitted = load_fitted(&artifacts)?;
    let num_classes = fitted.label_set.len();
    let split = build_split(config, fitted.examples)?;
    let data = prepare_data(config, &split, num_classes, fitted.sources.len())?;
    let golds: Vec<usize> = data.test.iter().map(|ex| ex.label).collect();

    let preds: Vec<usize> = match config.experiment.model {
        ModelKind::Bilstm => {
            require(&artifacts.checkpoint(), "checkpoint (run `train` first)")?;
            let (params, stored_hashes) = load_checkpoint::<f32>(&artifacts.checkpoint())?;
            let expected = vocab_hashes(&data, &fitted.sources);
            if stored_hashes != expected {
                return Err(CliError::inconsistent(
                    "checkpoint vocabulary hashes do not match this dataset/config",
                ));
            }
            data.test
                .iter()
                .map(|ex| predict(&params, ex).map(|(class, _)| class))
                .collect::<CoreResult<_>>()?
        }
        ModelKind::Linear => {
            require(&artifacts.baseline_model(), "baseline model (run `train` first)")?;
            let model = LinearModel::load(&artifacts.baseline_model())?;
            if model.dim != data.text_vocab.len() || model.num_classes() != num_classes {
                return Err(CliError::inconsistent(
                    "linear model dimensions do not match this dataset/config",
                ));
            }
            data.bow_test
                .iter()
                .map(|(x, _)| model.predict(x))
                .collect::<CoreResult<_>>()?
        }
        ModelKind::Forest => {
            require(&artifacts.baseline_model(), "baseline model (run `train` first)")?;
            let model = ForestModel::load(&artifacts.baseline_model())?;
            if model.dim != data.text_vocab.len() || model.num_classes != num_classes {
                return Err(CliError::inconsistent(
                    "forest model dimensions do not match this dataset/config",
                ));
            }
            data.bow_test
                .iter()
                .map(|(x, _)| model.predict(x))
                .collect::<CoreResult<_>>()?
        }
    };

    let report = evaluate(&preds, &golds, num_classes)?;
    let json =
        serde_json::to_string_pretty(&report).map_err(|e| CliError::input(e.to_string()))?;
    super::write_file(&artifacts.metrics(), json.as_bytes())?;
    println!(
        "test n={} accuracy={:.4} macro_precision={:.4} macro_recall={:.4} macro_f1={:.4}",
        report.n_examples,
        report.accuracy,
        report.macro_precision,
        report.macro_recall,
        report.macro_f1
    );
    Ok(())
}
