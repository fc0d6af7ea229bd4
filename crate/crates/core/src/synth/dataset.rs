use std::fs;
use std::path::{Path, PathBuf};

use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use super::labels::{derive_gt_fp_labels, image_mean_ita, MelanosomeThresholds};
use super::lighting::N_LIGHTING;
use super::sample::{generate_sample, LesionParams, SynthParams};
use super::skin::MelRange;
use crate::color::{FitzpatrickType, ItaThresholds};
use crate::error::{Error, Result};
use crate::imgproc::{Mask, RgbImage};
use crate::io::{read_mask_png, read_rgb_png, write_mask_png, write_rgb_png};

pub const METADATA_FILE: &str = "metadata.csv";
pub const GT_THRESHOLDS_FILE: &str = "gt_thresholds.json";

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct DatasetConfig {
    pub n: usize,
    pub seed: u64,
    pub size: usize,
    pub mel_range: MelRange,
    pub spatial_lighting: bool,
    pub max_hairs: u32,
    /// ITA bins used to derive the ground-truth labels.
    pub ita_thresholds: ItaThresholds,
}

impl Default for DatasetConfig {
    fn default() -> Self {
        Self {
            n: 180,
            seed: 0,
            size: 512,
            mel_range: MelRange::default(),
            spatial_lighting: true,
            max_hairs: 6,
            ita_thresholds: ItaThresholds::default(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MetadataRow {
    pub id: String,
    pub melanosome_fraction: f64,
    pub lighting_id: u32,
    pub seed: u64,
    pub lesion_dl: f64,
    pub n_hairs: u32,
    pub gt_fp: Option<u8>,
}

/// Thresholds and bin statistics behind the ground-truth labels.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GtThresholdsRecord {
    pub mel_range: MelRange,
    pub ita_thresholds: [f64; 5],
    pub mel_thresholds: MelanosomeThresholds,
    pub bin_counts: [usize; 6],
    pub bin_means: [Option<f64>; 6],
}

pub fn sample_id(index: usize) -> String {
    format!("{index:06}")
}

/// Per-sample parameters. Melanosome fractions are stratified (one draw per
/// equal-width stratum, strata shuffled over samples); lighting ids cycle
/// through all conditions; lesion and hair parameters come from a stream
/// keyed by (seed, index).
pub fn plan_dataset(cfg: &DatasetConfig) -> Result<Vec<SynthParams>> {
    if cfg.n < N_LIGHTING {
        return Err(Error::InvalidParams(format!(
            "dataset needs n >= {N_LIGHTING} (one sample per lighting condition), got {}",
            cfg.n
        )));
    }
    if cfg.size < 64 {
        return Err(Error::InvalidParams(format!(
            "image size must be at least 64 px, got {}",
            cfg.size
        )));
    }
    let mut strata: Vec<usize> = (0..cfg.n).collect();
    let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed);
    strata.shuffle(&mut rng);
    let s = cfg.size as f64;
    let range = cfg.mel_range;
    Ok((0..cfg.n)
        .map(|i| {
            let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed);
            rng.set_stream(i as u64 + 1);
            let u: f64 = rng.random();
            let mel = range.min + (range.max - range.min) * (strata[i] as f64 + u) / cfg.n as f64;
            let lesion = LesionParams {
                center: (
                    s / 2.0 + rng.random_range(-0.08..0.08) * s,
                    s / 2.0 + rng.random_range(-0.08..0.08) * s,
                ),
                axes: (rng.random_range(0.08..0.20) * s, rng.random_range(0.08..0.20) * s),
                rotation: rng.random_range(0.0..std::f64::consts::PI),
                delta_l: rng.random_range(15.0..=35.0),
                delta_a: rng.random_range(2.0..6.0),
            };
            SynthParams {
                melanosome_fraction: mel.min(range.max),
                mel_range: range,
                lighting_id: (i % N_LIGHTING) as u32,
                spatial_lighting: cfg.spatial_lighting,
                lesion,
                n_hairs: rng.random_range(0..=cfg.max_hairs),
                seed: rng.random(),
                size: cfg.size,
            }
        })
        .collect())
}

/// Renders planned samples into `out`, derives ground-truth labels and writes
/// the metadata and threshold files. Returns the metadata rows.
pub fn render_dataset(params: &[SynthParams], cfg: &DatasetConfig, out: &Path) -> Result<Vec<MetadataRow>> {
    for dir in ["images", "masks/lesion", "masks/hair"] {
        let d = out.join(dir);
        fs::create_dir_all(&d).map_err(|e| Error::io(&d, e))?;
    }
    let rendered: Vec<(MetadataRow, f64)> = params
        .par_iter()
        .enumerate()
        .map(|(i, p)| {
            let id = sample_id(i);
            let s = generate_sample(p)?;
            write_rgb_png(&out.join("images").join(format!("{id}.png")), &s.image)?;
            write_mask_png(&out.join("masks/lesion").join(format!("{id}.png")), &s.lesion_mask)?;
            write_mask_png(&out.join("masks/hair").join(format!("{id}.png")), &s.hair_mask)?;
            let mean_ita = image_mean_ita(&s.image, &s.lesion_mask)?;
            Ok((
                MetadataRow {
                    id,
                    melanosome_fraction: p.melanosome_fraction,
                    lighting_id: p.lighting_id,
                    seed: p.seed,
                    lesion_dl: p.lesion.delta_l,
                    n_hairs: p.n_hairs,
                    gt_fp: None,
                },
                mean_ita,
            ))
        })
        .collect::<Result<_>>()?;
    let (mut rows, itas): (Vec<MetadataRow>, Vec<f64>) = rendered.into_iter().unzip();
    let mels: Vec<f64> = rows.iter().map(|r| r.melanosome_fraction).collect();
    let gt = derive_gt_fp_labels(&itas, &mels, &cfg.ita_thresholds, &cfg.mel_range)?;
    for (row, label) in rows.iter_mut().zip(&gt.labels) {
        row.gt_fp = Some(label.index());
    }
    write_metadata(&out.join(METADATA_FILE), &rows)?;
    let record = GtThresholdsRecord {
        mel_range: cfg.mel_range,
        ita_thresholds: cfg.ita_thresholds.boundaries(),
        mel_thresholds: gt.thresholds,
        bin_counts: gt.bin_counts,
        bin_means: gt.bin_means,
    };
    write_json(&out.join(GT_THRESHOLDS_FILE), &record)?;
    Ok(rows)
}

pub fn generate_dataset(cfg: &DatasetConfig, out: &Path) -> Result<Vec<MetadataRow>> {
    render_dataset(&plan_dataset(cfg)?, cfg, out)
}

pub fn write_json<T: Serialize>(path: &Path, value: &T) -> Result<()> {
    let mut text = serde_json::to_string_pretty(value).map_err(|e| Error::Format {
        path: path.to_path_buf(),
        message: e.to_string(),
    })?;
    text.push('\n');
    fs::write(path, text).map_err(|e| Error::io(path, e))
}

pub fn write_metadata(path: &Path, rows: &[MetadataRow]) -> Result<()> {
    let fmt = |e: csv::Error| Error::Format {
        path: path.to_path_buf(),
        message: e.to_string(),
    };
    let mut w = csv::Writer::from_path(path).map_err(fmt)?;
    for r in rows {
        w.serialize(r).map_err(fmt)?;
    }
    w.flush().map_err(|e| Error::io(path, e))
}

pub fn read_metadata(path: &Path) -> Result<Vec<MetadataRow>> {
    let fmt = |e: csv::Error| match e.kind() {
        csv::ErrorKind::Io(_) => {
            let csv::ErrorKind::Io(io) = e.into_kind() else {
                unreachable!()
            };
            Error::io(path, io)
        }
        _ => Error::Format {
            path: path.to_path_buf(),
            message: e.to_string(),
        },
    };
    let mut r = csv::Reader::from_path(path).map_err(fmt)?;
    r.deserialize().map(|row| row.map_err(fmt)).collect()
}

/// A generated dataset on disk.
#[derive(Debug, Clone)]
pub struct Dataset {
    pub root: PathBuf,
    pub rows: Vec<MetadataRow>,
}

impl Dataset {
    pub fn open(root: &Path) -> Result<Dataset> {
        let rows = read_metadata(&root.join(METADATA_FILE))?;
        Ok(Dataset {
            root: root.to_path_buf(),
            rows,
        })
    }

    pub fn len(&self) -> usize {
        self.rows.len()
    }

    pub fn is_empty(&self) -> bool {
        self.rows.is_empty()
    }

    pub fn image_path(&self, id: &str) -> PathBuf {
        self.root.join("images").join(format!("{id}.png"))
    }

    pub fn lesion_mask_path(&self, id: &str) -> PathBuf {
        self.root.join("masks/lesion").join(format!("{id}.png"))
    }

    pub fn hair_mask_path(&self, id: &str) -> PathBuf {
        self.root.join("masks/hair").join(format!("{id}.png"))
    }

    pub fn load_image(&self, id: &str) -> Result<RgbImage> {
        read_rgb_png(&self.image_path(id))
    }

    pub fn load_lesion_mask(&self, id: &str) -> Result<Mask> {
        read_mask_png(&self.lesion_mask_path(id))
    }

    /// Ground-truth labels of all rows, if every row has one.
    pub fn gt_labels(&self) -> Option<Vec<FitzpatrickType>> {
        self.rows
            .iter()
            .map(|r| r.gt_fp.and_then(|v| FitzpatrickType::new(v).ok()))
            .collect()
    }
}

fn collect_files(root: &Path, dir: &Path, out: &mut Vec<(String, PathBuf)>) -> Result<()> {
    let entries = fs::read_dir(dir).map_err(|e| Error::io(dir, e))?;
    for entry in entries {
        let entry = entry.map_err(|e| Error::io(dir, e))?;
        let path = entry.path();
        let kind = entry.file_type().map_err(|e| Error::io(&path, e))?;
        if kind.is_dir() {
            collect_files(root, &path, out)?;
        } else if kind.is_file() {
            let rel = path
                .strip_prefix(root)
                .expect("walk stays under root")
                .components()
                .map(|c| c.as_os_str().to_string_lossy().into_owned())
                .collect::<Vec<_>>()
                .join("/");
            out.push((rel, path));
        }
    }
    Ok(())
}

/// SHA-256 over every file below `root` (sorted relative paths and
/// contents). Run manifests (`*manifest.json`) are skipped.
pub fn content_hash(root: &Path) -> Result<String> {
    let mut files = Vec::new();
    collect_files(root, root, &mut files)?;
    files.retain(|(rel, _)| !rel.ends_with("manifest.json"));
    files.sort();
    let mut hasher = Sha256::new();
    for (rel, path) in files {
        let bytes = fs::read(&path).map_err(|e| Error::io(&path, e))?;
        hasher.update(rel.as_bytes());
        hasher.update([0u8]);
        hasher.update((bytes.len() as u64).to_le_bytes());
        hasher.update(&bytes);
    }
    Ok(hex::encode(hasher.finalize()))
}

#[cfg(test)]
mod tests {
    use super::*;

    fn small(n: usize, seed: u64) -> DatasetConfig {
        DatasetConfig {
            n,
            seed,
            size: 64,
            ..Default::default()
        }
    }

    #[test]
    fn lighting_round_robin() {
        let plan = plan_dataset(&small(180, 7)).unwrap();
        let mut counts = [0; N_LIGHTING];
        for p in &plan {
            counts[p.lighting_id as usize] += 1;
        }
        assert!(counts.iter().all(|&c| c == 10));
    }

    #[test]
    fn stratified_melanosome() {
        let cfg = small(1000, 3);
        let plan = plan_dataset(&cfg).unwrap();
        let mut bins = [0usize; 10];
        for p in &plan {
            assert!(cfg.mel_range.contains(p.melanosome_fraction));
            let t = cfg.mel_range.normalize(p.melanosome_fraction);
            bins[((t * 10.0) as usize).min(9)] += 1;
        }
        let max = *bins.iter().max().unwrap() as f64;
        let min = *bins.iter().min().unwrap() as f64;
        assert!(max / min <= 1.5, "{bins:?}");
    }

    #[test]
    fn rejects_small_n() {
        assert!(matches!(plan_dataset(&small(5, 0)), Err(Error::InvalidParams(_))));
    }

    #[test]
    fn plan_is_deterministic_and_valid() {
        let a = plan_dataset(&small(40, 9)).unwrap();
        assert_eq!(a, plan_dataset(&small(40, 9)).unwrap());
        assert_ne!(a, plan_dataset(&small(40, 10)).unwrap());
        assert!(a.iter().all(|p| p.validate().is_ok()));
    }

    #[test]
    fn writes_and_reopens() {
        let dir = tempfile::tempdir().unwrap();
        let cfg = small(36, 1);
        let rows = generate_dataset(&cfg, dir.path()).unwrap();
        assert_eq!(rows.len(), 36);
        let ds = Dataset::open(dir.path()).unwrap();
        assert_eq!(ds.rows, rows);
        assert_eq!(ds.gt_labels().unwrap().len(), 36);
        let img = ds.load_image("000003").unwrap();
        assert_eq!(img.dims(), (64, 64));
        assert!(ds.load_lesion_mask("000003").unwrap().count() > 0);
        assert!(dir.path().join(GT_THRESHOLDS_FILE).exists());

        let h1 = content_hash(dir.path()).unwrap();
        fs::write(dir.path().join("run.manifest.json"), "{}").unwrap();
        assert_eq!(h1, content_hash(dir.path()).unwrap());
        let other = tempfile::tempdir().unwrap();
        generate_dataset(&cfg, other.path()).unwrap();
        assert_eq!(h1, content_hash(other.path()).unwrap());
    }
}
