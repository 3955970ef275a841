//! Deformation estimators: given the inlet and both roll masks at full
//! closure, predict the outlet cross-section.

mod baseline;
mod external;
mod flow;

use std::path::PathBuf;
use std::str::FromStr;

use thiserror::Error;

use crate::raster::{Raster, RasterError, ScenarioRaster};

pub use baseline::{Baseline1, Baseline2, BASELINE2_KERNELS};
pub use external::{External, DEFAULT_TIMEOUT, PROTOCOL_VERSION};
pub use flow::{Flow, FlowParams, FlowResult};

#[derive(Debug, Error)]
pub enum EstimatorError {
    #[error("estimator input: {0}")]
    InvalidInput(String),
    #[error(transparent)]
    Raster(#[from] RasterError),
    #[error("external estimator failed ({reason}); working directory kept at {}", dir.display())]
    ExternalFailure {
        /// Exit code, if the process exited normally.
        code: Option<i32>,
        reason: String,
        dir: PathBuf,
    },
    #[error("external estimator timed out after {secs} s; working directory kept at {}", dir.display())]
    Timeout { secs: f64, dir: PathBuf },
    #[error("could not run external estimator: {0}")]
    Io(#[from] std::io::Error),
}

/// Inlet and roll masks of one stand.
#[derive(Clone, Debug, PartialEq)]
pub struct EstimatorInput {
    pub inlet: Raster,
    pub over_mask: Raster,
    pub under_mask: Raster,
}

impl EstimatorInput {
    pub fn new(inlet: Raster, over_mask: Raster, under_mask: Raster) -> Result<Self, EstimatorError> {
        let input = Self {
            inlet,
            over_mask,
            under_mask,
        };
        input.validate()?;
        Ok(input)
    }

    pub fn validate(&self) -> Result<(), EstimatorError> {
        self.inlet.intersect(&self.over_mask)?;
        self.inlet.intersect(&self.under_mask)?;
        if self.inlet.is_empty() {
            return Err(EstimatorError::InvalidInput("inlet is empty".into()));
        }
        Ok(())
    }

    /// Open region between the rolls, side columns included.
    pub fn gap(&self) -> Raster {
        self.over_mask
            .union(&self.under_mask)
            .expect("dimensions checked on construction")
            .complement()
    }
}

impl TryFrom<ScenarioRaster> for EstimatorInput {
    type Error = EstimatorError;

    fn try_from(s: ScenarioRaster) -> Result<Self, Self::Error> {
        Self::new(s.inlet, s.over_mask, s.under_mask)
    }
}

pub trait Estimator: Send + Sync {
    /// Stable identifier recorded in reports and plans.
    fn id(&self) -> String;

    fn estimate(&self, input: &EstimatorInput) -> Result<Raster, EstimatorError>;
}

/// Textual estimator selector: `baseline1`, `baseline2`, `flow` or `ext:<command>`.
#[derive(Clone, Debug, PartialEq)]
pub enum EstimatorSpec {
    Baseline1,
    Baseline2,
    Flow,
    External(String),
}

impl FromStr for EstimatorSpec {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "baseline1" => Ok(Self::Baseline1),
            "baseline2" => Ok(Self::Baseline2),
            "flow" => Ok(Self::Flow),
            _ => match s.strip_prefix("ext:") {
                Some(cmd) if !cmd.trim().is_empty() => Ok(Self::External(cmd.to_string())),
                _ => Err(format!(
                    "unknown estimator {s:?}; expected baseline1, baseline2, flow or ext:<command>"
                )),
            },
        }
    }
}

impl EstimatorSpec {
    /// Instantiates the estimator; `flow` uses `params`.
    pub fn build(&self, params: FlowParams) -> Box<dyn Estimator> {
        match self {
            Self::Baseline1 => Box::new(Baseline1),
            Self::Baseline2 => Box::new(Baseline2),
            Self::Flow => Box::new(Flow::new(params)),
            Self::External(cmd) => Box::new(External::new(cmd)),
        }
    }
}
