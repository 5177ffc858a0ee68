use std::collections::BTreeMap;
use std::path::{Path, PathBuf};

use rand::Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use uuid::{Builder, Uuid};

use super::{sha256_hex, write_file, write_json, HarnessError};
use crate::augment::{random_augment, AugmentKind};
use crate::clients::ModelEndpointConfig;
use crate::generators::{
    gen_clusters, gen_histogram_sample, gen_multiseries, gen_series, ClusterConfig, GenError, HistogramConfig, MultiFamily,
    MultiSeriesConfig, SeriesConfig,
};
use crate::render::{encode_png, render, Layout, RenderConfig, DEFAULT_HEIGHT, DEFAULT_WIDTH, MIN_SIDE};
use crate::sample::{Family, MarkerKind, PlotColor, PlotStyle, SampleMetadata, SampleRecord, Split};
use crate::seed::Seed;

const GEN_ATTEMPTS: usize = 16;

fn default_counts() -> BTreeMap<Family, usize> {
    Family::ALL.iter().map(|&f| (f, 5)).collect()
}

fn default_splits() -> Vec<Split> {
    vec![Split::Regular, Split::Augmented]
}

/// Everything that shapes a generated dataset besides the seed.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct DatasetConfig {
    /// Samples per family in each split.
    pub counts: BTreeMap<Family, usize>,
    pub splits: Vec<Split>,
    /// Chance that a sample of the augmented split is actually degraded.
    pub augment_probability: f64,
    /// Degradations to pick from; empty means all of them.
    pub augment_kinds: Vec<AugmentKind>,
    pub width: u32,
    pub height: u32,
    pub series: SeriesConfig,
    pub clusters: ClusterConfig,
    pub histogram: HistogramConfig,
    pub multiseries: MultiSeriesConfig,
    /// Remote models that `run` may refer to by name.
    pub endpoints: Vec<ModelEndpointConfig>,
}

impl Default for DatasetConfig {
    fn default() -> Self {
        DatasetConfig {
            counts: default_counts(),
            splits: default_splits(),
            augment_probability: 1.0,
            augment_kinds: AugmentKind::ALL.to_vec(),
            width: DEFAULT_WIDTH,
            height: DEFAULT_HEIGHT,
            series: SeriesConfig::default(),
            clusters: ClusterConfig::default(),
            histogram: HistogramConfig::default(),
            multiseries: MultiSeriesConfig::default(),
            endpoints: Vec::new(),
        }
    }
}

impl DatasetConfig {
    /// The same number of samples for every family.
    pub fn uniform(per_family: usize) -> Self {
        DatasetConfig {
            counts: Family::ALL.iter().map(|&f| (f, per_family)).collect(),
            ..DatasetConfig::default()
        }
    }

    pub fn validate(&self) -> Result<(), HarnessError> {
        let bad = |m: String| Err(HarnessError::Config(m));
        if self.counts.is_empty() {
            return bad("no families requested".into());
        }
        if let Some((f, _)) = self.counts.iter().find(|(_, &n)| n == 0) {
            return bad(format!("count for {f} must be at least 1"));
        }
        if self.splits.is_empty() {
            return bad("no splits requested".into());
        }
        if !(0.0..=1.0).contains(&self.augment_probability) {
            return bad(format!("augment_probability {} outside [0, 1]", self.augment_probability));
        }
        if self.width < MIN_SIDE || self.height < MIN_SIDE {
            return bad(format!("image must be at least {MIN_SIDE}x{MIN_SIDE}"));
        }
        let mut names: Vec<&str> = self.endpoints.iter().map(|e| e.name.as_str()).collect();
        names.sort_unstable();
        if names.windows(2).any(|w| w[0] == w[1]) {
            return bad("endpoint names must be unique".into());
        }
        for e in &self.endpoints {
            e.validate().map_err(|err| HarnessError::Config(format!("endpoint {}: {err}", e.name)))?;
        }
        Ok(())
    }

    pub fn digest(&self) -> String {
        sha256_hex(&serde_json::to_vec(self).expect("config serialises"))
    }

    /// `(split, family, index)` for every sample, in manifest order.
    pub fn slots(&self) -> Vec<(Split, Family, usize)> {
        let mut splits = self.splits.clone();
        splits.sort();
        splits.dedup();
        let mut out = Vec::new();
        for split in splits {
            for family in Family::ALL {
                for i in 0..self.counts.get(&family).copied().unwrap_or(0) {
                    out.push((split, family, i));
                }
            }
        }
        out
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DatasetManifest {
    pub seed: u64,
    pub config: DatasetConfig,
    pub config_digest: String,
    /// Sample count per `split/family`.
    pub sizes: BTreeMap<String, usize>,
    pub samples: Vec<SampleRecord>,
}

/// A dataset on disk.
#[derive(Debug, Clone)]
pub struct Dataset {
    pub root: PathBuf,
    pub manifest: DatasetManifest,
    /// SHA-256 of the manifest file.
    pub digest: String,
}

impl Dataset {
    pub fn image_path(&self, record: &SampleRecord) -> PathBuf {
        self.root.join(&record.image_path)
    }

    pub fn read_image(&self, record: &SampleRecord) -> Result<Vec<u8>, HarnessError> {
        let p = self.image_path(record);
        std::fs::read(&p).map_err(HarnessError::io(&p))
    }

    pub fn record(&self, id: &Uuid) -> Option<&SampleRecord> {
        self.manifest.samples.iter().find(|r| r.id == *id)
    }
}

fn pick<T: Copy>(rng: &mut impl Rng, items: &[T]) -> T {
    items[rng.random_range(0..items.len())]
}

fn style_for(meta: &SampleMetadata, seed: Seed) -> PlotStyle {
    let mut rng = seed.rng();
    let grid = rng.random_bool(0.5);
    match meta {
        SampleMetadata::Series(_) => PlotStyle::plain(pick(&mut rng, &PlotColor::SERIES), grid),
        SampleMetadata::Clusters(_) => PlotStyle {
            color: None,
            grid,
            marker: Some(pick(&mut rng, &MarkerKind::ALL)),
            unique_markers: Some(rng.random_bool(0.5)),
            legend: Some(rng.random_bool(0.5)),
            fill: Some(rng.random_bool(0.5)),
            bin_count: None,
        },
        SampleMetadata::Histogram(h) => PlotStyle {
            bin_count: Some(h.n_bins()),
            ..PlotStyle::plain(pick(&mut rng, &PlotColor::ALL), grid)
        },
        SampleMetadata::Boxplot(_) | SampleMetadata::Violin(_) => PlotStyle::plain(pick(&mut rng, &PlotColor::ALL), grid),
    }
}

fn gen_metadata(config: &DatasetConfig, family: Family, seed: Seed) -> Result<SampleMetadata, GenError> {
    match family {
        Family::Series => gen_series(seed, &config.series).map(SampleMetadata::Series),
        Family::Clusters => gen_clusters(seed, &config.clusters).map(SampleMetadata::Clusters),
        Family::Histogram => gen_histogram_sample(seed, &config.histogram).map(SampleMetadata::Histogram),
        Family::Boxplot => gen_multiseries(seed, MultiFamily::Boxplot, &config.multiseries).map(SampleMetadata::Boxplot),
        Family::Violin => gen_multiseries(seed, MultiFamily::Violin, &config.multiseries).map(SampleMetadata::Violin),
    }
}

fn sample_id(seed: Seed) -> Uuid {
    let mut bytes = [0u8; 16];
    seed.child("id").rng().fill(&mut bytes);
    Builder::from_random_bytes(bytes).into_uuid()
}

/// One generated sample: its record, PNG bytes and layout.
pub fn generate_sample(
    config: &DatasetConfig,
    root: Seed,
    split: Split,
    family: Family,
    index: usize,
) -> Result<(SampleRecord, Vec<u8>, Layout), HarnessError> {
    let seed = root.child(&format!("{}/{}/{}", split.as_str(), family, index));
    let id = sample_id(seed);
    let fail = |detail: String| HarnessError::Sample {
        id: id.to_string(),
        detail,
    };
    let mut metadata = Err(GenError::InvalidParam("no attempt made".into()));
    for attempt in 0..GEN_ATTEMPTS {
        let label = if attempt == 0 { "data".to_string() } else { format!("data#{attempt}") };
        metadata = gen_metadata(config, family, seed.child(&label));
        match &metadata {
            Ok(_) | Err(GenError::InvalidParam(_)) => break,
            Err(_) => continue,
        }
    }
    let metadata = metadata.map_err(|e| fail(e.to_string()))?;
    let style = style_for(&metadata, seed.child("style"));
    let cfg = RenderConfig {
        width_px: config.width,
        height_px: config.height,
        scale: 1.0,
        style: style.clone(),
    };
    let rendered = render(&metadata, &cfg).map_err(|e| fail(e.to_string()))?;
    let mut image = rendered.image;
    let mut augmentation = None;
    if split == Split::Augmented && seed.child("augment.gate").rng().random_bool(config.augment_probability) {
        let (img, rec) = random_augment(&image, seed.child("augment"), &config.augment_kinds).map_err(|e| fail(e.to_string()))?;
        image = img;
        augmentation = Some(rec);
    }
    let png = encode_png(&image).map_err(|e| fail(e.to_string()))?;
    let record = SampleRecord {
        id,
        family,
        split,
        seed,
        style,
        image_path: format!("samples/{id}/plot.png"),
        augmentation,
        metadata,
    };
    Ok((record, png, rendered.layout))
}

/// Generates every sample in parallel and writes the dataset under `out`.
pub fn generate_dataset(config: &DatasetConfig, seed: u64, out: &Path) -> Result<DatasetManifest, HarnessError> {
    config.validate()?;
    let root = Seed(seed);
    let samples = config
        .slots()
        .into_par_iter()
        .map(|(split, family, i)| {
            let (record, png, layout) = generate_sample(config, root, split, family, i)?;
            let dir = out.join("samples").join(record.id.to_string());
            write_file(&dir.join("plot.png"), &png)?;
            write_json(&dir.join("metadata.json"), &record)?;
            write_json(&dir.join("layout.json"), &layout)?;
            Ok(record)
        })
        .collect::<Result<Vec<_>, HarnessError>>()?;
    let manifest = manifest_for(config, seed, samples);
    write_json(&out.join("manifest.json"), &manifest)?;
    Ok(manifest)
}

fn manifest_for(config: &DatasetConfig, seed: u64, samples: Vec<SampleRecord>) -> DatasetManifest {
    let mut sizes = BTreeMap::new();
    for r in &samples {
        *sizes.entry(format!("{}/{}", r.split.as_str(), r.family)).or_insert(0) += 1;
    }
    DatasetManifest {
        seed,
        config: config.clone(),
        config_digest: config.digest(),
        sizes,
        samples,
    }
}

/// Writes already generated samples as a dataset.
pub fn write_dataset(
    config: &DatasetConfig,
    seed: u64,
    samples: Vec<(SampleRecord, Vec<u8>, Layout)>,
    out: &Path,
) -> Result<DatasetManifest, HarnessError> {
    let mut records = Vec::with_capacity(samples.len());
    for (record, png, layout) in samples {
        let dir = out.join("samples").join(record.id.to_string());
        write_file(&dir.join("plot.png"), &png)?;
        write_json(&dir.join("metadata.json"), &record)?;
        write_json(&dir.join("layout.json"), &layout)?;
        records.push(record);
    }
    let manifest = manifest_for(config, seed, records);
    write_json(&out.join("manifest.json"), &manifest)?;
    Ok(manifest)
}

pub fn load_dataset(root: &Path) -> Result<Dataset, HarnessError> {
    let path = root.join("manifest.json");
    let bytes = std::fs::read(&path).map_err(HarnessError::io(&path))?;
    let manifest: DatasetManifest = serde_json::from_slice(&bytes).map_err(HarnessError::json(&path))?;
    for r in &manifest.samples {
        let img = root.join(&r.image_path);
        if !img.is_file() {
            return Err(HarnessError::Sample {
                id: r.id.to_string(),
                detail: format!("missing image {}", img.display()),
            });
        }
    }
    Ok(Dataset {
        root: root.to_path_buf(),
        manifest,
        digest: sha256_hex(&bytes),
    })
}

