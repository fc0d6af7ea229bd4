use derma_core::color::ItaThresholds;
use derma_core::synth::{derive_gt_fp_labels, image_mean_ita, GtThresholdsRecord, MelRange, GT_THRESHOLDS_FILE};
use rayon::prelude::*;

use super::open_dataset;
use crate::cli::LabelArgs;
use crate::error::CliResult;
use crate::manifest::{manifest_path, sibling, ManifestBuilder};
use crate::tables::{read_json_file, write_csv, write_json_file, LabelRow};

pub fn run(args: &LabelArgs) -> CliResult<()> {
    let dataset = open_dataset(&args.dataset)?;
    let mut manifest = ManifestBuilder::new("label", args, None);
    manifest.dataset(&args.dataset)?;

    let mean_itas: Vec<f64> = dataset
        .rows
        .par_iter()
        .map(|r| -> CliResult<f64> {
            let img = dataset.load_image(&r.id)?;
            let mask = dataset.load_lesion_mask(&r.id)?;
            Ok(image_mean_ita(&img, &mask)?)
        })
        .collect::<CliResult<_>>()?;
    let mels: Vec<f64> = dataset.rows.iter().map(|r| r.melanosome_fraction).collect();
    // The generation range fixes where thresholds of empty edge bins go.
    let record_path = args.dataset.join(GT_THRESHOLDS_FILE);
    let record: Option<GtThresholdsRecord> = if record_path.exists() {
        Some(read_json_file(&record_path)?)
    } else {
        None
    };
    let ita_thresholds = match &record {
        Some(r) => ItaThresholds::new(r.ita_thresholds)?,
        None => ItaThresholds::default(),
    };
    let range = if let Some(r) = &record {
        r.mel_range
    } else {
        let lo = mels.iter().copied().fold(f64::INFINITY, f64::min);
        let hi = mels.iter().copied().fold(f64::NEG_INFINITY, f64::max);
        let default_range = MelRange::default();
        if default_range.contains(lo) && default_range.contains(hi) {
            default_range
        } else {
            MelRange::new(lo, hi)?
        }
    };
    let gt = derive_gt_fp_labels(&mean_itas, &mels, &ita_thresholds, &range)?;

    let rows = dataset
        .rows
        .iter()
        .zip(&gt.labels)
        .zip(&gt.provisional)
        .zip(&mean_itas)
        .map(|(((r, l), p), &mean_ita)| LabelRow {
            id: r.id.clone(),
            gt_fp: l.index(),
            provisional_fp: p.index(),
            mean_ita,
        });
    write_csv(&args.out, rows)?;
    let thresholds = sibling(&args.out, "thresholds.json");
    write_json_file(&thresholds, &gt.thresholds)?;
    manifest.output(&args.out)?;
    manifest.output(&thresholds)?;
    manifest.write(&manifest_path(&args.out))?;

    let changed = dataset
        .rows
        .iter()
        .zip(&gt.labels)
        .filter(|(r, l)| r.gt_fp.is_some_and(|g| g != l.index()))
        .count();
    eprintln!(
        "labeled {} images; {changed} differ from the dataset metadata",
        gt.labels.len()
    );
    Ok(())
}
