use derma_core::ordinal::{featurize_images, predict_features, train_on_features, TrainConfig};

use super::{gt_labels, open_dataset};
use crate::cli::TrainArgs;
use crate::error::CliResult;
use crate::manifest::{manifest_path, sibling, ManifestBuilder};
use crate::tables::{write_csv, write_json_file, PredictionRow};

pub fn run(args: &TrainArgs) -> CliResult<()> {
    let cfg = TrainConfig {
        train_fraction: args.train_fraction,
        val_fraction: args.val_fraction,
        test_fraction: args.test_fraction,
        max_epochs: args.epochs,
        batch_size: args.batch_size,
        learning_rate: args.learning_rate,
        seed: args.seed,
        hidden_width: args.hidden,
        normalize_inputs: !args.no_normalize,
        ..Default::default()
    };
    cfg.validate()?;
    let dataset = open_dataset(&args.dataset)?;
    let labels = gt_labels(&dataset, args.gt_labels.as_deref())?;

    let mut manifest = ManifestBuilder::new("train", args, Some(args.seed));
    manifest.dataset(&args.dataset)?;
    if let Some(p) = &args.gt_labels {
        manifest.input(p)?;
    }

    let ids: Vec<String> = dataset.rows.iter().map(|r| r.id.clone()).collect();
    let x = featurize_images(&dataset, &ids, &cfg.features)?;
    let outcome = train_on_features(&x, &labels, &cfg)?;

    let mut split_of = vec!["train"; ids.len()];
    for &i in &outcome.split.val {
        split_of[i] = "val";
    }
    for &i in &outcome.split.test {
        split_of[i] = "test";
    }
    let predictions = ids
        .iter()
        .zip(&x)
        .zip(&split_of)
        .map(|((id, xi), split)| -> CliResult<PredictionRow> {
            Ok(PredictionRow {
                id: id.clone(),
                split: split.to_string(),
                fp_pred: predict_features(&outcome.model, xi)?.index(),
            })
        })
        .collect::<CliResult<Vec<_>>>()?;

    write_json_file(&args.out, &outcome.model)?;
    let log_path = sibling(&args.out, "log.csv");
    write_csv(&log_path, &outcome.log)?;
    let pred_path = sibling(&args.out, "predictions.csv");
    write_csv(&pred_path, &predictions)?;
    for p in [&args.out, &log_path, &pred_path] {
        manifest.output(p)?;
    }
    manifest.write(&manifest_path(&args.out))?;

    let meta = outcome.model.train_meta.as_ref().expect("training fills train_meta");
    eprintln!(
        "trained on {} images; best epoch {} of {} (val loss {:.4})",
        meta.n_train, meta.best_epoch, meta.epochs_run, meta.best_val_loss
    );
    Ok(())
}
