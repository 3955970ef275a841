//! Samples on disk, dataset generation, splits and evaluation reports.
//!
//! Layout:
//!
//! ```text
//! <root>/manifest.json
//! <root>/samples/<id>/{inlet,over,under,outlet}.pbm
//! <root>/samples/<id>/meta.json
//! ```
//!
//! A sample directory holds the same files an external estimator sees, plus
//! the reference outlet.

mod eval;
mod generate;

use std::collections::BTreeMap;
use std::path::{Path, PathBuf};

use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::estimators::{EstimatorError, EstimatorInput, FlowParams};
use crate::raster::{augment, read_pbm_file, write_pbm_file, Raster, RasterConfig, RasterError};
use crate::rng::RngStream;
use crate::rollgen::{GenConfig, GenError};

pub use eval::{evaluate, histogram, write_histogram_csv, write_report_csv, Report, ReportRow, HISTOGRAM_BINS};
pub use generate::{generate_pair, generate_samples, write_dataset};

pub const MANIFEST_FORMAT: &str = "rollpass-ds/1";

/// Stream id reserved for split shuffling.
const SPLIT_STREAM: u64 = u64::MAX;

#[derive(Debug, Error)]
pub enum DatasetError {
    #[error(transparent)]
    Io(#[from] std::io::Error),
    #[error("{path}: {source}")]
    Json { path: PathBuf, source: serde_json::Error },
    #[error(transparent)]
    Csv(#[from] csv::Error),
    #[error(transparent)]
    Raster(#[from] RasterError),
    #[error(transparent)]
    Estimator(#[from] EstimatorError),
    #[error(transparent)]
    Generation(#[from] GenError),
    #[error("unsupported manifest format {0:?}")]
    Format(String),
    #[error("output directory {} is not empty", .0.display())]
    NotEmpty(PathBuf),
    #[error("split fractions must be nonnegative and sum to 1, got {0:?}")]
    BadFractions((f64, f64, f64)),
    #[error("samples of split {0} were already augmented")]
    AlreadyAugmented(Split),
    #[error("augmented datasets cannot be re-split")]
    SplitAfterAugment,
    #[error("no samples selected")]
    EmptySelection,
    #[error("scenario count must be at least 1")]
    NoScenarios,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Split {
    Train,
    Val,
    Eval,
}

impl Split {
    pub const ALL: [Split; 3] = [Split::Train, Split::Val, Split::Eval];

    pub fn name(self) -> &'static str {
        match self {
            Split::Train => "train",
            Split::Val => "val",
            Split::Eval => "eval",
        }
    }
}

impl std::fmt::Display for Split {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(self.name())
    }
}

impl std::str::FromStr for Split {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        Split::ALL
            .into_iter()
            .find(|x| x.name() == s)
            .ok_or_else(|| format!("unknown split {s:?}; expected train, val or eval"))
    }
}

/// Roll travel covered between a sample's inlet and its outlet.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum Closure {
    /// Circular inlet, rolls from first contact to the final position.
    #[serde(rename = "0.0->1.0")]
    Full,
    /// Intermediate shape at half travel as inlet, same final outlet.
    #[serde(rename = "0.5->1.0")]
    Half,
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum Augmentation {
    Orig,
    FlipV,
    FlipH,
    Rot { angle_deg: f64 },
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SampleMeta {
    pub scenario_seed: u64,
    /// Stream id of the scenario within its seed.
    pub scenario_index: u64,
    pub diameter_mm: f64,
    pub width_mm: f64,
    pub temperature_c: f64,
    pub alpha_loss: f64,
    pub closure: Closure,
    pub augmentation: Augmentation,
    /// Sample this one was derived from by augmentation.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub source_id: Option<String>,
}

#[derive(Clone, Debug, PartialEq)]
pub struct Sample {
    pub id: String,
    pub inlet: Raster,
    pub over: Raster,
    pub under: Raster,
    pub outlet: Raster,
    pub meta: SampleMeta,
}

#[derive(Serialize, Deserialize)]
struct MetaFile {
    id: String,
    #[serde(flatten)]
    meta: SampleMeta,
}

impl Sample {
    pub fn input(&self) -> Result<EstimatorInput, EstimatorError> {
        EstimatorInput::new(self.inlet.clone(), self.over.clone(), self.under.clone())
    }

    /// Writes the sample into `dir`, which must exist.
    pub fn save(&self, dir: &Path) -> Result<(), DatasetError> {
        write_pbm_file(&self.inlet, dir.join("inlet.pbm"))?;
        write_pbm_file(&self.over, dir.join("over.pbm"))?;
        write_pbm_file(&self.under, dir.join("under.pbm"))?;
        write_pbm_file(&self.outlet, dir.join("outlet.pbm"))?;
        let meta = MetaFile {
            id: self.id.clone(),
            meta: self.meta.clone(),
        };
        write_json(&dir.join("meta.json"), &meta)
    }

    pub fn load(dir: &Path, resolution: f64) -> Result<Self, DatasetError> {
        let meta: MetaFile = read_json(&dir.join("meta.json"))?;
        Ok(Self {
            id: meta.id,
            inlet: read_pbm_file(dir.join("inlet.pbm"), resolution)?,
            over: read_pbm_file(dir.join("over.pbm"), resolution)?,
            under: read_pbm_file(dir.join("under.pbm"), resolution)?,
            outlet: read_pbm_file(dir.join("outlet.pbm"), resolution)?,
            meta: meta.meta,
        })
    }
}

/// Everything needed to regenerate a dataset.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct DatasetConfig {
    pub seed: u64,
    /// Scenarios; the dataset holds twice as many samples.
    pub scenarios: usize,
    pub flow: FlowParams,
    pub raster: RasterConfig,
    pub generator: GenConfig,
}

impl DatasetConfig {
    pub fn new(seed: u64, scenarios: usize) -> Self {
        Self {
            seed,
            scenarios,
            flow: FlowParams::default(),
            raster: RasterConfig::default(),
            generator: GenConfig::default(),
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ManifestEntry {
    pub id: String,
    #[serde(default)]
    pub split: Option<Split>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub augmented_from: Option<String>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Manifest {
    pub format: String,
    pub config: DatasetConfig,
    /// Sample counts per split plus `total` and `unassigned`; refreshed on save.
    #[serde(default)]
    pub counts: BTreeMap<String, usize>,
    pub samples: Vec<ManifestEntry>,
}

impl Manifest {
    pub fn new(config: DatasetConfig, ids: impl IntoIterator<Item = String>) -> Self {
        let mut m = Self {
            format: MANIFEST_FORMAT.to_string(),
            config,
            counts: BTreeMap::new(),
            samples: ids
                .into_iter()
                .map(|id| ManifestEntry {
                    id,
                    split: None,
                    augmented_from: None,
                })
                .collect(),
        };
        m.refresh_counts();
        m
    }

    pub fn refresh_counts(&mut self) {
        let mut counts = BTreeMap::from([("total".to_string(), self.samples.len())]);
        for s in Split::ALL {
            counts.insert(s.name().to_string(), 0);
        }
        counts.insert("unassigned".to_string(), 0);
        for e in &self.samples {
            let key = e.split.map_or("unassigned", Split::name);
            *counts.get_mut(key).expect("all keys present") += 1;
        }
        self.counts = counts;
    }

    pub fn count(&self, split: Option<Split>) -> usize {
        self.samples.iter().filter(|e| e.split == split).count()
    }

    /// Ids in `split`, or every id when `split` is `None`.
    pub fn ids(&self, split: Option<Split>) -> impl Iterator<Item = &ManifestEntry> {
        self.samples.iter().filter(move |e| split.is_none() || e.split == split)
    }
}

/// A dataset rooted at a directory.
#[derive(Clone, Debug)]
pub struct Dataset {
    pub root: PathBuf,
    pub manifest: Manifest,
}

impl Dataset {
    pub fn open(root: impl Into<PathBuf>) -> Result<Self, DatasetError> {
        let root = root.into();
        let manifest: Manifest = read_json(&root.join("manifest.json"))?;
        if manifest.format != MANIFEST_FORMAT {
            return Err(DatasetError::Format(manifest.format));
        }
        Ok(Self { root, manifest })
    }

    pub fn sample_dir(&self, id: &str) -> PathBuf {
        self.root.join("samples").join(id)
    }

    pub fn load_sample(&self, id: &str) -> Result<Sample, DatasetError> {
        Sample::load(&self.sample_dir(id), self.manifest.config.raster.resolution)
    }

    /// Rewrites `manifest.json` atomically.
    pub fn save_manifest(&mut self) -> Result<(), DatasetError> {
        self.manifest.refresh_counts();
        let tmp = self.root.join(".manifest.json.tmp");
        write_json(&tmp, &self.manifest)?;
        std::fs::rename(tmp, self.root.join("manifest.json"))?;
        Ok(())
    }

    /// Writes one sample directory atomically (temp directory, then rename).
    pub fn write_sample(&self, sample: &Sample) -> Result<(), DatasetError> {
        let samples = self.root.join("samples");
        let tmp = samples.join(format!(".tmp-{}", sample.id));
        if tmp.exists() {
            std::fs::remove_dir_all(&tmp)?;
        }
        std::fs::create_dir_all(&tmp)?;
        sample.save(&tmp)?;
        std::fs::rename(&tmp, samples.join(&sample.id))?;
        Ok(())
    }
}

/// Assigns every sample to train/val/eval.
///
/// Sizes follow the fractions with largest-remainder rounding (ties go to the
/// earlier split); membership comes from a seeded shuffle of the sorted ids.
pub fn split_dataset(manifest: &Manifest, fractions: (f64, f64, f64), seed: u64) -> Result<Manifest, DatasetError> {
    let (a, b, c) = fractions;
    let fr = [a, b, c];
    if fr.iter().any(|f| f.is_nan() || *f < 0.0) || ((a + b + c) - 1.0).abs() > 1e-9 {
        return Err(DatasetError::BadFractions(fractions));
    }
    if manifest.samples.iter().any(|e| e.augmented_from.is_some()) {
        return Err(DatasetError::SplitAfterAugment);
    }
    let n = manifest.samples.len();
    let sizes = largest_remainder(n, fr);

    let mut ids: Vec<&str> = manifest.samples.iter().map(|e| e.id.as_str()).collect();
    ids.sort_unstable();
    RngStream::new(seed, SPLIT_STREAM).shuffle(&mut ids);
    let mut assignment = BTreeMap::new();
    let mut it = ids.into_iter();
    for (split, size) in Split::ALL.into_iter().zip(sizes) {
        for id in it.by_ref().take(size) {
            assignment.insert(id.to_string(), split);
        }
    }

    let mut out = manifest.clone();
    for e in &mut out.samples {
        e.split = assignment.get(&e.id).copied();
    }
    out.refresh_counts();
    Ok(out)
}

fn largest_remainder(n: usize, fractions: [f64; 3]) -> [usize; 3] {
    let quotas = fractions.map(|f| f * n as f64);
    let mut sizes = quotas.map(|q| q.floor() as usize);
    let mut left = n - sizes.iter().sum::<usize>().min(n);
    let mut order = [0, 1, 2];
    // Stable sort keeps the split order on equal remainders.
    order.sort_by(|&x, &y| (quotas[y] - quotas[y].floor()).total_cmp(&(quotas[x] - quotas[x].floor())));
    for &k in order.iter().cycle() {
        if left == 0 {
            break;
        }
        sizes[k] += 1;
        left -= 1;
    }
    sizes
}

/// Adds six augmented variants of every original sample in `split` (flips
/// and four small rotations), written next to the originals; other splits
/// are untouched. Returns the number of samples written.
pub fn augment_split(dataset: &mut Dataset, split: Split, seed: u64) -> Result<usize, DatasetError> {
    let entries: Vec<ManifestEntry> = dataset
        .manifest
        .samples
        .iter()
        .filter(|e| e.split == Some(split))
        .cloned()
        .collect();
    if entries.iter().any(|e| e.augmented_from.is_some()) {
        return Err(DatasetError::AlreadyAugmented(split));
    }
    let mut ids: Vec<&str> = entries.iter().map(|e| e.id.as_str()).collect();
    ids.sort_unstable();
    let ds = &*dataset;
    let added: Vec<Vec<String>> = ids
        .par_iter()
        .enumerate()
        .map(|(k, id)| {
            let sample = ds.load_sample(id)?;
            let mut rng = RngStream::new(seed, k as u64);
            let variants = augment(&sample, &mut rng);
            let mut new_ids = Vec::with_capacity(6);
            for v in variants.into_iter().skip(1) {
                ds.write_sample(&v)?;
                new_ids.push(v.id);
            }
            Ok(new_ids)
        })
        .collect::<Result<_, DatasetError>>()?;
    let mut written = 0;
    for (id, new_ids) in ids.iter().zip(added) {
        for nid in new_ids {
            dataset.manifest.samples.push(ManifestEntry {
                id: nid,
                split: Some(split),
                augmented_from: Some(id.to_string()),
            });
            written += 1;
        }
    }
    dataset.save_manifest()?;
    Ok(written)
}

pub(crate) fn write_json(path: &Path, value: &impl Serialize) -> Result<(), DatasetError> {
    let mut text = serde_json::to_string_pretty(value).map_err(|source| DatasetError::Json {
        path: path.to_path_buf(),
        source,
    })?;
    text.push('\n');
    std::fs::write(path, text)?;
    Ok(())
}

pub(crate) fn read_json<T: serde::de::DeserializeOwned>(path: &Path) -> Result<T, DatasetError> {
    let text = std::fs::read_to_string(path)?;
    serde_json::from_str(&text).map_err(|source| DatasetError::Json {
        path: path.to_path_buf(),
        source,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn synthetic(n: usize) -> Manifest {
        Manifest::new(DatasetConfig::new(0, n / 2), (0..n).map(|i| format!("s{i:06}")))
    }

    #[test]
    fn paper_split_sizes() {
        let m = synthetic(18_800);
        let out = split_dataset(&m, (14_000.0 / 18_800.0, 2_000.0 / 18_800.0, 2_800.0 / 18_800.0), 9).unwrap();
        assert_eq!(out.count(Some(Split::Train)), 14_000);
        assert_eq!(out.count(Some(Split::Val)), 2_000);
        assert_eq!(out.count(Some(Split::Eval)), 2_800);
        assert_eq!(out.counts["unassigned"], 0);
    }

    #[test]
    fn all_train_and_determinism() {
        let m = synthetic(50);
        let out = split_dataset(&m, (1.0, 0.0, 0.0), 1).unwrap();
        assert_eq!(out.count(Some(Split::Train)), 50);
        let a = split_dataset(&m, (0.6, 0.2, 0.2), 4).unwrap();
        assert_eq!(a, split_dataset(&m, (0.6, 0.2, 0.2), 4).unwrap());
        assert_ne!(a, split_dataset(&m, (0.6, 0.2, 0.2), 5).unwrap());
    }

    #[test]
    fn largest_remainder_rounding() {
        assert_eq!(largest_remainder(10, [1.0 / 3.0; 3]), [4, 3, 3]);
        assert_eq!(largest_remainder(7, [0.5, 0.25, 0.25]), [3, 2, 2]);
        assert_eq!(largest_remainder(0, [0.5, 0.25, 0.25]), [0, 0, 0]);
    }

    #[test]
    fn bad_fractions() {
        let m = synthetic(4);
        assert!(matches!(
            split_dataset(&m, (0.5, 0.5, 0.5), 0),
            Err(DatasetError::BadFractions(_))
        ));
        assert!(matches!(
            split_dataset(&m, (1.2, -0.2, 0.0), 0),
            Err(DatasetError::BadFractions(_))
        ));
    }

    #[test]
    fn serde_names() {
        assert_eq!(serde_json::to_string(&Closure::Half).unwrap(), "\"0.5->1.0\"");
        assert_eq!(
            serde_json::to_string(&Augmentation::Rot { angle_deg: 1.5 }).unwrap(),
            r#"{"kind":"rot","angle_deg":1.5}"#
        );
        assert_eq!(
            serde_json::to_string(&Augmentation::FlipV).unwrap(),
            r#"{"kind":"flip_v"}"#
        );
        assert_eq!("val".parse::<Split>(), Ok(Split::Val));
    }

    proptest::proptest! {
        #[test]
        fn splits_are_disjoint_and_exhaustive(n in 0usize..300, a in 0.0f64..1.0, b in 0.0f64..1.0, seed: u64) {
            let b = b * (1.0 - a);
            let m = synthetic(n);
            let out = split_dataset(&m, (a, b, 1.0 - a - b), seed).unwrap();
            proptest::prop_assert_eq!(out.count(None), 0);
            let total: usize = Split::ALL.iter().map(|&s| out.count(Some(s))).sum();
            proptest::prop_assert_eq!(total, n);
            for (s, f) in Split::ALL.iter().zip([a, b, 1.0 - a - b]) {
                proptest::prop_assert!((out.count(Some(*s)) as f64 - f * n as f64).abs() < 1.0 + 1e-9);
            }
        }
    }
}
