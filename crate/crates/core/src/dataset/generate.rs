use std::path::Path;

use rayon::prelude::*;

use super::{Augmentation, Closure, Dataset, DatasetConfig, DatasetError, Manifest, Sample, SampleMeta};
use crate::estimators::{EstimatorInput, Flow};
use crate::raster::rasterize_scenario;
use crate::rollgen::scenario_at;

/// The two samples of scenario `index`: `a` is the circular inlet rolled from
/// first contact to full closure; `b` takes the shape the surrogate predicts
/// with the rolls at half travel as its inlet and shares `a`'s outlet.
/// Both carry the full-closure roll masks.
pub fn generate_pair(cfg: &DatasetConfig, index: u64) -> Result<[Sample; 2], DatasetError> {
    let scenario = scenario_at(cfg.seed, index, &cfg.generator)?;
    let flow = Flow::new(cfg.flow);
    let full = rasterize_scenario(&scenario, 1.0, cfg.raster)?;
    let half = rasterize_scenario(&scenario, 0.5, cfg.raster)?;
    let input = EstimatorInput::new(full.inlet.clone(), full.over_mask.clone(), full.under_mask.clone())?;
    let outlet = flow.run(&input)?.shape;
    let intermediate = flow.run(&EstimatorInput::try_from(half)?)?.shape;

    let meta = |closure| SampleMeta {
        scenario_seed: cfg.seed,
        scenario_index: index,
        diameter_mm: scenario.diameter,
        width_mm: scenario.profile.width(),
        temperature_c: scenario.temperature,
        alpha_loss: cfg.flow.alpha_loss,
        closure,
        augmentation: Augmentation::Orig,
        source_id: None,
    };
    let a = Sample {
        id: format!("s{index:06}a"),
        inlet: full.inlet,
        over: full.over_mask.clone(),
        under: full.under_mask.clone(),
        outlet: outlet.clone(),
        meta: meta(Closure::Full),
    };
    let b = Sample {
        id: format!("s{index:06}b"),
        inlet: intermediate,
        over: full.over_mask,
        under: full.under_mask,
        outlet,
        meta: meta(Closure::Half),
    };
    Ok([a, b])
}

/// All samples of a dataset in id order, generated in parallel.
pub fn generate_samples(cfg: &DatasetConfig) -> Result<Vec<Sample>, DatasetError> {
    if cfg.scenarios == 0 {
        return Err(DatasetError::NoScenarios);
    }
    let pairs: Vec<[Sample; 2]> = (0..cfg.scenarios as u64)
        .into_par_iter()
        .map(|i| generate_pair(cfg, i))
        .collect::<Result<_, _>>()?;
    Ok(pairs.into_iter().flatten().collect())
}

/// Generates a dataset into `root`, which must be missing or empty.
pub fn write_dataset(root: &Path, cfg: &DatasetConfig) -> Result<Dataset, DatasetError> {
    if root.exists() && std::fs::read_dir(root)?.next().is_some() {
        return Err(DatasetError::NotEmpty(root.to_path_buf()));
    }
    if cfg.scenarios == 0 {
        return Err(DatasetError::NoScenarios);
    }
    std::fs::create_dir_all(root.join("samples"))?;
    let mut dataset = Dataset {
        root: root.to_path_buf(),
        manifest: Manifest::new(cfg.clone(), std::iter::empty()),
    };
    let ids: Vec<Vec<String>> = (0..cfg.scenarios as u64)
        .into_par_iter()
        .map(|i| {
            let pair = generate_pair(cfg, i)?;
            pair.iter().try_for_each(|s| dataset.write_sample(s))?;
            Ok(pair.map(|s| s.id).to_vec())
        })
        .collect::<Result<_, DatasetError>>()?;
    dataset.manifest = Manifest::new(cfg.clone(), ids.into_iter().flatten());
    dataset.save_manifest()?;
    Ok(dataset)
}
