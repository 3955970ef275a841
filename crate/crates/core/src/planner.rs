//! Blind tree search for rolling sequences.
//!
//! Every node of level `l` is expanded with `n` random stands plus an optional
//! fixed final stand, down to depth `d`. The node most similar to the target
//! over all levels wins and its ancestry is the plan.
//!
//! A stand's rotation describes how its rolls are oriented relative to the
//! workpiece: the shape is turned by the rotation, rolled, and turned back,
//! so all shapes stay in the inlet's frame. Full expansion grows as
//! `(n + 1)^d`; `beam` caps how many nodes per level get expanded.

use std::path::Path;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::estimators::{Estimator, EstimatorError, EstimatorInput};
use crate::geometry::{GeometryError, RollProfile};
use crate::raster::{jaccard, rasterize_rolls, rotate_quarter, QuarterTurn, Raster, RasterError};
use crate::rng::RngStream;
use crate::rollgen::{generate_profile, GenConfig};

#[derive(Debug, Error)]
pub enum PlanError {
    #[error("search depth must be at least 1")]
    ZeroDepth,
    #[error("{0} raster is empty")]
    EmptyShape(&'static str),
    #[error("no stand produced a usable shape")]
    NoViablePlan,
    #[error("no roll profile touching the workpiece after {0} attempts")]
    NoContact(usize),
    #[error(transparent)]
    Estimator(#[from] EstimatorError),
    #[error(transparent)]
    Raster(#[from] RasterError),
    #[error(transparent)]
    Geometry(#[from] GeometryError),
    #[error("plan file: {0}")]
    Json(#[from] serde_json::Error),
    #[error(transparent)]
    Io(#[from] std::io::Error),
}

/// One stand: a roll profile and the quarter turn of the workpiece relative
/// to it.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct StandConfig {
    pub profile: RollProfile,
    #[serde(default)]
    pub rotation: QuarterTurn,
}

impl StandConfig {
    /// Rolls `shape` through this stand.
    pub fn apply(&self, shape: &Raster, estimator: &dyn Estimator) -> Result<Raster, PlanError> {
        let input = self.input(shape)?;
        let out = estimator.estimate(&input)?;
        Ok(rotate_quarter(&out, self.rotation.inverse())?)
    }

    /// Estimator input in the stand's frame.
    pub fn input(&self, shape: &Raster) -> Result<EstimatorInput, PlanError> {
        let turned = rotate_quarter(shape, self.rotation)?;
        let (over, under) = rasterize_rolls(&self.profile, 0.0, shape.config());
        Ok(EstimatorInput::new(turned, over, under)?)
    }

    /// True when the shape touches neither roll.
    pub fn is_noop(&self, shape: &Raster) -> Result<bool, PlanError> {
        let input = self.input(shape)?;
        Ok(input.inlet.is_subset_of(&input.gap())?)
    }

    /// True when the shape touches a roll and keeps at least one pixel in
    /// the gap, i.e. the stand neither skips nor annihilates it.
    pub fn is_viable(&self, shape: &Raster) -> Result<bool, PlanError> {
        let input = self.input(shape)?;
        let gap = input.gap();
        Ok(!input.inlet.is_subset_of(&gap)? && !input.inlet.is_disjoint(&gap)?)
    }
}

#[derive(Clone, Debug)]
pub struct PlanNode {
    pub shape: Raster,
    /// Absent only at the root.
    pub config: Option<StandConfig>,
    pub parent: Option<usize>,
    pub level: usize,
    pub score: f64,
}

#[derive(Clone, Debug)]
pub struct SearchConfig {
    /// Random stands per expansion.
    pub n: usize,
    /// Depth of the tree.
    pub d: usize,
    /// Stand added to every expansion, with its own rotation.
    pub final_config: Option<StandConfig>,
    pub seed: u64,
    /// Nodes expanded per level, best first; `None` expands all.
    pub beam: Option<usize>,
    pub generator: GenConfig,
}

impl SearchConfig {
    pub fn new(n: usize, d: usize, seed: u64) -> Self {
        Self {
            n,
            d,
            final_config: None,
            seed,
            beam: None,
            generator: GenConfig::default(),
        }
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct Plan {
    pub score: f64,
    pub steps: Vec<StandConfig>,
    pub final_shape: Raster,
    pub estimator_id: String,
    pub seed: u64,
    pub n: usize,
    pub d: usize,
}

/// Serialized form of a [`Plan`]; the final shape is recovered by replay.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct PlanFile {
    pub score: f64,
    pub steps: Vec<StandConfig>,
    pub estimator_id: String,
    pub seed: u64,
    pub n: usize,
    pub d: usize,
}

impl Plan {
    pub fn to_file(&self) -> PlanFile {
        PlanFile {
            score: self.score,
            steps: self.steps.clone(),
            estimator_id: self.estimator_id.clone(),
            seed: self.seed,
            n: self.n,
            d: self.d,
        }
    }

    pub fn to_json(&self) -> String {
        let mut s = serde_json::to_string_pretty(&self.to_file()).expect("plan serializes");
        s.push('\n');
        s
    }

    pub fn save(&self, path: &Path) -> Result<(), PlanError> {
        std::fs::write(path, self.to_json())?;
        Ok(())
    }
}

impl PlanFile {
    pub fn load(path: &Path) -> Result<Self, PlanError> {
        Ok(serde_json::from_str(&std::fs::read_to_string(path)?)?)
    }
}

/// Children of `node`: `n` random stands (regenerated while they would not
/// touch the shape or would leave none of it in the gap) and then
/// `final_config`. Children whose estimator call
/// fails are dropped.
pub fn expand(
    node: &PlanNode,
    target: &Raster,
    estimator: &dyn Estimator,
    cfg: &SearchConfig,
    rng: &mut RngStream,
) -> Result<Vec<PlanNode>, PlanError> {
    let mut stands = Vec::with_capacity(cfg.n + 1);
    for _ in 0..cfg.n {
        stands.push(random_stand(&node.shape, cfg, rng)?);
    }
    stands.extend(cfg.final_config.clone());
    let mut children = Vec::with_capacity(stands.len());
    for stand in stands {
        let shape = match stand.apply(&node.shape, estimator) {
            Ok(s) => s,
            Err(e) => {
                log::warn!("dropping child at level {}: {e}", node.level + 1);
                continue;
            }
        };
        let score = if shape.is_empty() {
            0.0
        } else {
            jaccard(&shape, target)?
        };
        children.push(PlanNode {
            shape,
            config: Some(stand),
            parent: None,
            level: node.level + 1,
            score,
        });
    }
    Ok(children)
}

fn random_stand(shape: &Raster, cfg: &SearchConfig, rng: &mut RngStream) -> Result<StandConfig, PlanError> {
    let attempts = cfg.generator.max_attempts;
    for _ in 0..attempts {
        let profile = generate_profile(rng, &cfg.generator)?;
        let rotation = QuarterTurn::ALL[rng.index(4)];
        let stand = StandConfig { profile, rotation };
        if stand.is_viable(shape)? {
            return Ok(stand);
        }
    }
    Err(PlanError::NoContact(attempts))
}

/// The searched tree, nodes in creation order (level by level).
pub fn search(
    inlet: &Raster,
    target: &Raster,
    estimator: &dyn Estimator,
    cfg: &SearchConfig,
) -> Result<Vec<PlanNode>, PlanError> {
    if cfg.d == 0 {
        return Err(PlanError::ZeroDepth);
    }
    if inlet.is_empty() {
        return Err(PlanError::EmptyShape("inlet"));
    }
    if target.is_empty() {
        return Err(PlanError::EmptyShape("target"));
    }
    let mut arena = vec![PlanNode {
        shape: inlet.clone(),
        config: None,
        parent: None,
        level: 0,
        score: jaccard(inlet, target)?,
    }];
    let mut frontier = vec![0usize];
    for _ in 0..cfg.d {
        if let Some(beam) = cfg.beam {
            frontier.sort_by(|&a, &b| arena[b].score.total_cmp(&arena[a].score).then(a.cmp(&b)));
            frontier.truncate(beam);
            frontier.sort_unstable();
        }
        let expanded: Vec<Vec<PlanNode>> = frontier
            .par_iter()
            .map(|&idx| {
                let node = &arena[idx];
                if node.shape.is_empty() {
                    return Ok(Vec::new());
                }
                let mut rng = RngStream::new(cfg.seed, idx as u64);
                let mut kids = expand(node, target, estimator, cfg, &mut rng)?;
                kids.iter_mut().for_each(|k| k.parent = Some(idx));
                Ok(kids)
            })
            .collect::<Result<_, PlanError>>()?;
        frontier.clear();
        for child in expanded.into_iter().flatten() {
            frontier.push(arena.len());
            arena.push(child);
        }
    }
    Ok(arena)
}

/// Searches the tree and backtracks the best node below the root. Ties go
/// to the shallower, then the earlier created node.
pub fn plan(inlet: &Raster, target: &Raster, estimator: &dyn Estimator, cfg: &SearchConfig) -> Result<Plan, PlanError> {
    let arena = search(inlet, target, estimator, cfg)?;
    let mut best: Option<usize> = None;
    for (i, node) in arena.iter().enumerate().skip(1) {
        if best.is_none_or(|b| node.score > arena[b].score) {
            best = Some(i);
        }
    }
    let best = best.ok_or(PlanError::NoViablePlan)?;
    let mut steps = Vec::new();
    let mut cur = best;
    while let Some(config) = &arena[cur].config {
        steps.push(config.clone());
        cur = arena[cur].parent.expect("non-root nodes have parents");
    }
    steps.reverse();
    Ok(Plan {
        score: arena[best].score,
        steps,
        final_shape: arena[best].shape.clone(),
        estimator_id: estimator.id(),
        seed: cfg.seed,
        n: cfg.n,
        d: cfg.d,
    })
}

/// Rolls `inlet` through `steps` in order.
pub fn replay(steps: &[StandConfig], inlet: &Raster, estimator: &dyn Estimator) -> Result<Raster, PlanError> {
    steps
        .iter()
        .try_fold(inlet.clone(), |shape, stand| stand.apply(&shape, estimator))
}
