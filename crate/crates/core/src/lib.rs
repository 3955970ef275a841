//! Hot-rolling roll pass toolkit: procedural roll geometry, raster
//! cross-sections, deformation estimators, datasets and sequence planning.

pub mod cli;
pub mod dataset;
pub mod estimators;
pub mod geometry;
pub mod planner;
pub mod raster;
pub mod rng;
pub mod rollgen;

#[cfg(doctest)]
mod book {
    #[doc = include_str!("../../../book/src/introduction.md")]
    mod introduction {}
    #[doc = include_str!("../../../book/src/geometry.md")]
    mod geometry {}
    #[doc = include_str!("../../../book/src/scenarios.md")]
    mod scenarios {}
    #[doc = include_str!("../../../book/src/rasters.md")]
    mod rasters {}
    #[doc = include_str!("../../../book/src/estimators.md")]
    mod estimators {}
    #[doc = include_str!("../../../book/src/datasets.md")]
    mod datasets {}
    #[doc = include_str!("../../../book/src/planning.md")]
    mod planning {}
    #[doc = include_str!("../../../book/src/cli.md")]
    mod cli {}
}
