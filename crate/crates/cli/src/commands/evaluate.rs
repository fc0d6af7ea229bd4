use std::collections::{BTreeMap, BTreeSet};
use std::path::Path;

use derma_core::color::{ita_to_fitzpatrick, FitzpatrickType, ItaDegrees, ItaThresholds};
use derma_core::stats::{BootstrapConfig, EvalReport, MethodInput, ReportConfig};

use super::{gt_labels, id_list, open_dataset};
use crate::cli::{EvaluateArgs, SplitArg};
use crate::error::{CliError, CliResult};
use crate::manifest::{manifest_path, sibling, ManifestBuilder};
use crate::tables::{
    read_csv, write_csv, write_json_file, BlandAltmanRow, ConfusionRow, EstimateRow, PredictionRow, STATUS_OK,
};

fn split_name(s: SplitArg) -> &'static str {
    match s {
        SplitArg::Train => "train",
        SplitArg::Val => "val",
        SplitArg::Test => "test",
    }
}

fn check_ids<'a>(path: &Path, ids: impl Iterator<Item = &'a str>, known: &BTreeMap<&str, usize>) -> CliResult<()> {
    let unknown: Vec<String> = ids.filter(|id| !known.contains_key(id)).map(str::to_string).collect();
    if unknown.is_empty() {
        Ok(())
    } else {
        Err(CliError::Usage(format!(
            "{} has ids that are not in the dataset: {}",
            path.display(),
            id_list(&unknown)
        )))
    }
}

pub fn run(args: &EvaluateArgs) -> CliResult<()> {
    if args.estimates.is_empty() && args.predictions.is_none() {
        return Err(CliError::Usage(
            "nothing to evaluate: pass --estimates and/or --predictions".into(),
        ));
    }
    let dataset = open_dataset(&args.dataset)?;
    let gt_all = gt_labels(&dataset, args.gt_labels.as_deref())?;
    let index: BTreeMap<&str, usize> = dataset
        .rows
        .iter()
        .enumerate()
        .map(|(i, r)| (r.id.as_str(), i))
        .collect();

    let mut manifest = ManifestBuilder::new("evaluate", args, Some(args.seed));
    manifest.dataset(&args.dataset)?;
    if let Some(p) = &args.gt_labels {
        manifest.input(p)?;
    }

    let predictions: Option<Vec<PredictionRow>> = args.predictions.as_deref().map(read_csv).transpose()?;
    if let (Some(p), Some(rows)) = (&args.predictions, &predictions) {
        check_ids(p, rows.iter().map(|r| r.id.as_str()), &index)?;
        manifest.input(p)?;
    }

    // Rows evaluated, in dataset order.
    let selected: Vec<usize> = match (args.split, &predictions) {
        (Some(split), Some(rows)) => {
            let name = split_name(split);
            let in_split: BTreeSet<usize> = rows
                .iter()
                .filter(|r| r.split == name)
                .map(|r| index[r.id.as_str()])
                .collect();
            if in_split.is_empty() {
                return Err(CliError::Usage(format!("no images in the {name} split")));
            }
            in_split.into_iter().collect()
        }
        _ => (0..dataset.rows.len()).collect(),
    };
    let position: BTreeMap<usize, usize> = selected.iter().enumerate().map(|(k, &i)| (i, k)).collect();
    let n = selected.len();

    let thresholds = ItaThresholds::default();
    let mut methods: Vec<MethodInput> = Vec::new();
    for path in &args.estimates {
        let rows: Vec<EstimateRow> = read_csv(path)?;
        check_ids(path, rows.iter().map(|r| r.id.as_str()), &index)?;
        manifest.input(path)?;
        let name = rows
            .first()
            .map(|r| r.method.clone())
            .filter(|m| !m.is_empty())
            .unwrap_or_else(|| path.file_stem().unwrap_or_default().to_string_lossy().into_owned());
        if methods.iter().any(|m| m.name == name) {
            return Err(CliError::Usage(format!("method {name} is given more than once")));
        }
        let mut ita = vec![None; n];
        for r in rows.iter().filter(|r| r.status == STATUS_OK) {
            if let Some(&k) = position.get(&index[r.id.as_str()]) {
                ita[k] = r.ita;
            }
        }
        let fp_pred = ita
            .iter()
            .map(|v| v.map(|x| ita_to_fitzpatrick(ItaDegrees(x), &thresholds)))
            .collect();
        methods.push(MethodInput {
            name,
            ita: Some(ita),
            fp_pred,
        });
    }
    if let Some(rows) = &predictions {
        if methods.iter().any(|m| m.name == args.model_name) {
            return Err(CliError::Usage(format!(
                "method {} is given more than once",
                args.model_name
            )));
        }
        let mut fp_pred = vec![None; n];
        for r in rows {
            if let Some(&k) = position.get(&index[r.id.as_str()]) {
                fp_pred[k] = Some(FitzpatrickType::new(r.fp_pred)?);
            }
        }
        methods.push(MethodInput {
            name: args.model_name.clone(),
            ita: None,
            fp_pred,
        });
    }

    let reference = methods
        .iter()
        .any(|m| m.name == args.reference && m.ita.is_some())
        .then_some(args.reference.as_str());
    if reference.is_none() && !args.estimates.is_empty() {
        eprintln!(
            "reference method {} not among the estimates; Bland-Altman skipped",
            args.reference
        );
    }

    let ids: Vec<String> = selected.iter().map(|&i| dataset.rows[i].id.clone()).collect();
    let mel: Vec<f64> = selected.iter().map(|&i| dataset.rows[i].melanosome_fraction).collect();
    let lighting: Vec<u32> = selected.iter().map(|&i| dataset.rows[i].lighting_id).collect();
    let gt: Vec<FitzpatrickType> = selected.iter().map(|&i| gt_all[i]).collect();
    let cfg = ReportConfig {
        bootstrap: BootstrapConfig {
            n_resamples: args.bootstrap_resamples,
            alpha: args.alpha,
            seed: args.seed,
        },
    };
    let report = EvalReport::build(&ids, &mel, &lighting, &gt, &methods, reference, &cfg)?;

    write_json_file(&args.out, &report)?;
    let ba_path = sibling(&args.out, "bland_altman.csv");
    write_csv(
        &ba_path,
        report.bland_altman_points.iter().flat_map(|p| {
            p.ids
                .iter()
                .zip(&p.means)
                .zip(&p.diffs)
                .map(|((id, &mean), &diff)| BlandAltmanRow {
                    method: &p.method,
                    id,
                    mean,
                    diff,
                })
        }),
    )?;
    let confusion_path = sibling(&args.out, "confusion.csv");
    write_csv(
        &confusion_path,
        report.methods.iter().flat_map(|m| {
            m.fp.iter().flat_map(move |fp| {
                fp.confusion.iter().enumerate().flat_map(move |(g, row)| {
                    row.iter().enumerate().map(move |(p, &count)| ConfusionRow {
                        method: &m.method,
                        gt_fp: g + 1,
                        pred_fp: p + 1,
                        count,
                    })
                })
            })
        }),
    )?;
    for p in [&args.out, &ba_path, &confusion_path] {
        manifest.output(p)?;
    }
    manifest.write(&manifest_path(&args.out))?;

    for m in &report.methods {
        let rho = m.pearson_mel.map_or(String::from("-"), |c| format!("{:.3}", c.rho));
        let kappa =
            m.fp.as_ref()
                .map_or(String::from("-"), |f| format!("{:.3}", f.qw_kappa));
        eprintln!("{}: n={} rho_mel={rho} kappa={kappa}", m.method, m.n_used);
    }
    Ok(())
}
