//! Dataset directory format.
//!
//! A dataset directory contains:
//! * `manifest.json` — factor space, provenance, sample count, image
//!   dimensions, and the build seed
//! * `images.bin`   — contiguous raw H×W×C byte buffers in sample order
//! * `labels.csv`   — `index,label` plus one column per factor level
//! * `hist.json`    — per-factor level counts (convenience for diagnosis)

use std::fs;
use std::io::{Read, Write};
use std::path::Path;

use serde::{Deserialize, Serialize};

use super::{Dataset, LabeledImage, Provenance};
use crate::error::{DoeError, Result};
use crate::factor_space::{FactorSetting, FactorSpace};

#[derive(Debug, Serialize, Deserialize)]
struct Manifest {
    space: FactorSpace,
    provenance: Provenance,
    samples: usize,
    height: usize,
    width: usize,
    channels: usize,
    seed: Option<u64>,
}

pub fn save_dataset(dataset: &Dataset, dir: &Path) -> Result<()> {
    if dataset.is_empty() {
        return Err(DoeError::EmptyInput("dataset to save".into()));
    }
    let first = &dataset.samples()[0];
    let (h, w, c) = (first.height, first.width, first.channels);
    for s in dataset.samples() {
        if (s.height, s.width, s.channels) != (h, w, c) {
            return Err(DoeError::DimensionMismatch(
                "dataset mixes image dimensions".into(),
            ));
        }
    }
    fs::create_dir_all(dir)?;

    let manifest = Manifest {
        space: dataset.space().clone(),
        provenance: dataset.provenance(),
        samples: dataset.len(),
        height: h,
        width: w,
        channels: c,
        seed: dataset.seed(),
    };
    fs::write(
        dir.join("manifest.json"),
        serde_json::to_string_pretty(&manifest)?,
    )?;

    let mut images = fs::File::create(dir.join("images.bin"))?;
    for s in dataset.samples() {
        images.write_all(&s.pixels)?;
    }

    let mut writer = csv::Writer::from_path(dir.join("labels.csv"))?;
    let mut header = vec!["index".to_string(), "label".to_string()];
    header.extend(dataset.space().factors().iter().map(|f| f.name.clone()));
    writer.write_record(&header)?;
    for (i, s) in dataset.samples().iter().enumerate() {
        let mut record = vec![i.to_string(), s.label.to_string()];
        record.extend(s.setting.values.iter().map(|v| v.to_string()));
        writer.write_record(&record)?;
    }
    writer.flush()?;

    fs::write(
        dir.join("hist.json"),
        serde_json::to_string_pretty(&dataset.level_histogram())?,
    )?;
    Ok(())
}

pub fn load_dataset(dir: &Path) -> Result<Dataset> {
    let manifest: Manifest =
        serde_json::from_str(&fs::read_to_string(dir.join("manifest.json"))?)?;
    let image_len = manifest.height * manifest.width * manifest.channels;

    let mut raw = Vec::new();
    fs::File::open(dir.join("images.bin"))?.read_to_end(&mut raw)?;
    if raw.len() != manifest.samples * image_len {
        return Err(DoeError::DimensionMismatch(format!(
            "images.bin holds {} bytes, expected {}",
            raw.len(),
            manifest.samples * image_len
        )));
    }

    let mut reader = csv::Reader::from_path(dir.join("labels.csv"))?;
    let k = manifest.space.len();
    let mut samples = Vec::with_capacity(manifest.samples);
    for (i, record) in reader.records().enumerate() {
        let record = record?;
        if record.len() != 2 + k {
            return Err(DoeError::DimensionMismatch(format!(
                "labels.csv row {i} has {} fields, expected {}",
                record.len(),
                2 + k
            )));
        }
        let parse = |field: &str| -> Result<usize> {
            field
                .parse::<usize>()
                .map_err(|e| DoeError::InvalidConfig(format!("labels.csv row {i}: {e}")))
        };
        let label = parse(&record[1])?;
        let values = (0..k)
            .map(|j| parse(&record[2 + j]))
            .collect::<Result<Vec<_>>>()?;
        let at = i * image_len;
        samples.push(LabeledImage {
            pixels: raw[at..at + image_len].to_vec(),
            height: manifest.height,
            width: manifest.width,
            channels: manifest.channels,
            label,
            setting: FactorSetting::new(values),
        });
    }
    if samples.len() != manifest.samples {
        return Err(DoeError::DimensionMismatch(format!(
            "labels.csv holds {} rows, manifest says {}",
            samples.len(),
            manifest.samples
        )));
    }
    Dataset::new(
        manifest.space,
        samples,
        manifest.provenance,
        manifest.seed,
    )
}

/// Loads the per-factor level counts written next to a dataset.
pub fn load_histogram(path: &Path) -> Result<Vec<Vec<u64>>> {
    Ok(serde_json::from_str(&fs::read_to_string(path)?)?)
}
