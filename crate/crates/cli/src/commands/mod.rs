pub mod calibrate;
pub mod estimate;
pub mod evaluate;
pub mod generate;
pub mod label;
pub mod train;

use std::collections::BTreeMap;
use std::path::Path;

use derma_core::color::FitzpatrickType;
use derma_core::synth::Dataset;

use crate::error::{CliError, CliResult};
use crate::tables::{read_csv, LabelRow};

pub fn open_dataset(path: &Path) -> CliResult<Dataset> {
    if !path.is_dir() {
        return Err(CliError::Usage(format!(
            "dataset directory {} does not exist",
            path.display()
        )));
    }
    Ok(Dataset::open(path)?)
}

/// Lists at most ten ids, then how many more there are.
pub fn id_list(ids: &[String]) -> String {
    let shown: Vec<&str> = ids.iter().take(10).map(String::as_str).collect();
    if ids.len() > shown.len() {
        format!("{} and {} more", shown.join(", "), ids.len() - shown.len())
    } else {
        shown.join(", ")
    }
}

/// Ground-truth labels aligned with the dataset rows, from a labels CSV or
/// from the dataset metadata.
pub fn gt_labels(dataset: &Dataset, labels_csv: Option<&Path>) -> CliResult<Vec<FitzpatrickType>> {
    match labels_csv {
        None => dataset.gt_labels().ok_or_else(|| {
            CliError::Usage(format!(
                "{} has rows without gt_fp; run `derma label` and pass --gt-labels",
                dataset.root.display()
            ))
        }),
        Some(path) => {
            let rows: Vec<LabelRow> = read_csv(path)?;
            let by_id: BTreeMap<&str, u8> = rows.iter().map(|r| (r.id.as_str(), r.gt_fp)).collect();
            let missing: Vec<String> = dataset
                .rows
                .iter()
                .filter(|r| !by_id.contains_key(r.id.as_str()))
                .map(|r| r.id.clone())
                .collect();
            if !missing.is_empty() {
                return Err(CliError::Usage(format!(
                    "{} has no label for {}",
                    path.display(),
                    id_list(&missing)
                )));
            }
            dataset
                .rows
                .iter()
                .map(|r| Ok(FitzpatrickType::new(by_id[r.id.as_str()])?))
                .collect()
        }
    }
}
