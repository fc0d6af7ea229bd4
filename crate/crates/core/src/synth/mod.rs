//! Procedural synthetic dermatoscopic images with known melanin content,
//! lighting condition, lesion and hair masks, and the ground-truth
//! Fitzpatrick labeling built on top of them.
//!
//! The generator is a deliberately simple stand-in for a physical skin
//! renderer: skin color is an affine function of melanosome fraction in
//! CIELAB, so ITA decreases strictly with melanin and evaluation has a
//! controlled monotone ground truth.

mod dataset;
mod labels;
mod lighting;
mod sample;
mod skin;

pub use dataset::{
    content_hash, generate_dataset, plan_dataset, read_metadata, render_dataset, sample_id, write_json, write_metadata,
    Dataset, DatasetConfig, GtThresholdsRecord, MetadataRow, GT_THRESHOLDS_FILE, METADATA_FILE,
};
pub use labels::{derive_gt_fp_labels, image_mean_ita, pool_adjacent_violators, GtLabels, MelanosomeThresholds};
pub use lighting::{lighting_table, Lighting, N_LIGHTING};
pub use sample::{generate_sample, LesionParams, SynthParams, SyntheticSample};
pub use skin::{skin_color_model, MelRange};
