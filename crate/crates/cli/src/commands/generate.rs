use std::fs;

use derma_core::synth::{generate_dataset, DatasetConfig, MelRange, GT_THRESHOLDS_FILE, METADATA_FILE};

use crate::cli::GenerateArgs;
use crate::error::{CliError, CliResult};
use crate::manifest::ManifestBuilder;

const MANIFEST: &str = "manifest.json";

/// Entries a generated dataset directory consists of.
const DATASET_ENTRIES: [&str; 5] = ["images", "masks", METADATA_FILE, GT_THRESHOLDS_FILE, MANIFEST];

pub fn run(args: &GenerateArgs) -> CliResult<()> {
    let mel_range = MelRange::new(args.m_min, args.m_max)?;
    let cfg = DatasetConfig {
        n: args.n,
        seed: args.seed,
        size: args.size,
        mel_range,
        spatial_lighting: !args.uniform_lighting,
        max_hairs: args.max_hairs,
        ..Default::default()
    };
    derma_core::synth::plan_dataset(&cfg)?;

    let out = &args.out;
    if out.exists() {
        let mut entries = fs::read_dir(out).map_err(|e| CliError::io(out, e))?;
        if entries.next().is_some() {
            if !args.force {
                return Err(CliError::Usage(format!(
                    "output directory {} is not empty (use --force to replace a dataset)",
                    out.display()
                )));
            }
            for name in DATASET_ENTRIES {
                let p = out.join(name);
                let removed = if p.is_dir() {
                    fs::remove_dir_all(&p)
                } else if p.exists() {
                    fs::remove_file(&p)
                } else {
                    Ok(())
                };
                removed.map_err(|e| CliError::io(&p, e))?;
            }
        }
    }
    fs::create_dir_all(out).map_err(|e| CliError::io(out, e))?;

    let mut manifest = ManifestBuilder::new("generate", args, Some(args.seed));
    let rows = generate_dataset(&cfg, out)?;
    manifest.dataset(out)?;
    let m = manifest.write(&out.join(MANIFEST))?;
    eprintln!(
        "generated {} images in {} (content hash {})",
        rows.len(),
        out.display(),
        m.dataset.map(|d| d.sha256).unwrap_or_default()
    );
    Ok(())
}
