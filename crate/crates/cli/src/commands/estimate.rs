use derma_core::color::{srgb_image_to_lab, ItaDegrees, WhitePoint};
use derma_core::estimators::{
    estimate_patch, estimate_quantization, estimate_segmentation, ItaEstimate, MaskSource, PatchConfig,
    QuantizationConfig, SegmentationConfig,
};
use derma_core::synth::{Dataset, MetadataRow};
use rayon::prelude::*;

use super::calibrate::CalibrationFile;
use super::{id_list, open_dataset};
use crate::cli::{EstimateArgs, MaskSourceArg, MethodArg};
use crate::error::{CliError, CliResult};
use crate::manifest::{manifest_path, ManifestBuilder};
use crate::tables::{read_json_file, write_csv, EstimateRow, STATUS_ERROR, STATUS_OK};

/// Runs stop with a numeric failure when more than this fraction of images fail.
const MAX_FAILURE_FRACTION: f64 = 0.10;

enum Estimator {
    Segmentation(SegmentationConfig),
    Patch(PatchConfig),
    Quantization(QuantizationConfig),
}

impl Estimator {
    fn from_args(args: &EstimateArgs) -> Self {
        match args.method {
            MethodArg::Segmentation => Estimator::Segmentation(SegmentationConfig {
                min_skin_pixels: args.min_skin_pixels,
            }),
            MethodArg::Patch => Estimator::Patch(PatchConfig {
                patch_size: args.patch_size,
                n_patches: args.n_patches,
            }),
            MethodArg::Quantization => Estimator::Quantization(QuantizationConfig {
                mask_source: match args.mask_source {
                    MaskSourceArg::Original => MaskSource::Original,
                    MaskSourceArg::Enhanced => MaskSource::Enhanced,
                },
                dilation_radius: args.dilation_radius,
                max_points: args.max_points,
                k_min: args.k_min,
                k_max: args.k_max,
                seed: args.seed,
                ..Default::default()
            }),
        }
    }

    fn run(&self, dataset: &Dataset, id: &str) -> derma_core::Result<ItaEstimate> {
        let img = dataset.load_image(id)?;
        match self {
            Estimator::Segmentation(cfg) => {
                let mask = dataset.load_lesion_mask(id)?;
                estimate_segmentation(&srgb_image_to_lab(&img, WhitePoint::D65), &mask, cfg)
            }
            Estimator::Patch(cfg) => estimate_patch(&img, cfg),
            Estimator::Quantization(cfg) => estimate_quantization(&img, cfg),
        }
    }
}

fn method_name(m: MethodArg) -> &'static str {
    match m {
        MethodArg::Segmentation => "segmentation",
        MethodArg::Patch => "patch",
        MethodArg::Quantization => "quantization",
    }
}

pub fn run(args: &EstimateArgs) -> CliResult<()> {
    let dataset = open_dataset(&args.dataset)?;
    if args.method == MethodArg::Segmentation {
        let missing: Vec<String> = dataset
            .rows
            .iter()
            .filter(|r| !dataset.lesion_mask_path(&r.id).is_file())
            .map(|r| r.id.clone())
            .collect();
        if !missing.is_empty() {
            return Err(CliError::Usage(format!(
                "segmentation needs lesion masks; missing for {}",
                id_list(&missing)
            )));
        }
    }
    let calibration: Option<CalibrationFile> = args.calibration.as_deref().map(read_json_file).transpose()?;
    if let Some(c) = &calibration {
        c.validate()?;
    }

    let mut manifest = ManifestBuilder::new("estimate", args, Some(args.seed));
    manifest.dataset(&args.dataset)?;
    if let Some(p) = &args.calibration {
        manifest.input(p)?;
    }

    let estimator = Estimator::from_args(args);
    let method = method_name(args.method);
    let mut rows: Vec<&MetadataRow> = dataset.rows.iter().collect();
    rows.sort_by(|a, b| a.id.cmp(&b.id));
    let out: Vec<EstimateRow> = rows
        .par_iter()
        .map(|r| match estimator.run(&dataset, &r.id) {
            Ok(e) => {
                let raw = e.ita.0;
                let ita = match &calibration {
                    Some(c) => c.apply(r.lighting_id, ItaDegrees(raw)).0,
                    None => raw,
                };
                EstimateRow {
                    id: r.id.clone(),
                    ita: Some(ita),
                    method: method.to_string(),
                    status: STATUS_OK.to_string(),
                    ita_raw: Some(raw),
                    error_code: None,
                    detail: serde_json::to_string(&e.diagnostics).expect("diagnostics serialize"),
                }
            }
            Err(err) => EstimateRow {
                id: r.id.clone(),
                ita: None,
                method: method.to_string(),
                status: STATUS_ERROR.to_string(),
                ita_raw: None,
                error_code: Some(err.code().to_string()),
                detail: err.to_string(),
            },
        })
        .collect();

    write_csv(&args.out, &out)?;
    manifest.output(&args.out)?;
    manifest.write(&manifest_path(&args.out))?;

    let failed = out.iter().filter(|r| r.status != STATUS_OK).count();
    eprintln!("{method}: {} images, {failed} failed", out.len());
    if failed as f64 > MAX_FAILURE_FRACTION * out.len() as f64 {
        return Err(CliError::Numeric(format!(
            "{failed} of {} images failed (more than {:.0}%)",
            out.len(),
            MAX_FAILURE_FRACTION * 100.0
        )));
    }
    Ok(())
}
