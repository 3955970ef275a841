//! Binary cross-section grids.
//!
//! A [`Raster`] is a fixed-size bit grid in the world frame: pixel `(i, j)`
//! (row `i` from the top, column `j` from the left) covers the square
//! `[(j - W/2) r, (j - W/2 + 1) r) x [(H/2 - i - 1) r, (H/2 - i) r)` and is
//! sampled at its center. With the default 200 x 200 grid at 0.5 mm/px the
//! frame spans `[-50, 50)` mm on both axes, centered on the inlet.

mod morph;
mod pbm;
mod scene;
mod transform;

use serde::{Deserialize, Serialize};
use thiserror::Error;

pub use morph::{dilate, disk_offsets};
pub use pbm::{read_pbm, read_pbm_file, write_pbm, write_pbm_file};
pub use scene::{rasterize_rolls, rasterize_scenario, ScenarioRaster};
pub use transform::{augment, flip_h, flip_v, rotate_quarter, rotate_small, QuarterTurn, MAX_SMALL_ROTATION_DEG};

#[derive(Debug, Error)]
pub enum RasterError {
    #[error("raster dimensions differ: {0}x{1} vs {2}x{3}")]
    DimensionMismatch(usize, usize, usize, usize),
    #[error("jaccard of two empty rasters is undefined")]
    BothEmpty,
    #[error("area error needs a nonempty reference raster")]
    EmptyReference,
    #[error("scene does not fit the {0} x {1} mm frame")]
    OutOfFrame(f64, f64),
    #[error("closure fraction must lie in [0, 1], got {0}")]
    ClosureOutOfRange(f64),
    #[error(transparent)]
    Geometry(#[from] crate::geometry::GeometryError),
    #[error("malformed PBM: {0}")]
    Pbm(String),
    #[error("small rotations are limited to 10 degrees, got {0}")]
    AngleTooLarge(f64),
    #[error("quarter turns need a square raster")]
    NotSquare,
    #[error(transparent)]
    Io(#[from] std::io::Error),
}

/// Grid size and metric resolution.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct RasterConfig {
    pub width: usize,
    pub height: usize,
    /// mm per pixel.
    pub resolution: f64,
}

impl Default for RasterConfig {
    fn default() -> Self {
        Self {
            width: 200,
            height: 200,
            resolution: 0.5,
        }
    }
}

impl RasterConfig {
    /// World x of the center of column `j`.
    pub fn x_of(&self, j: usize) -> f64 {
        (j as f64 + 0.5 - self.width as f64 / 2.0) * self.resolution
    }

    /// World y of the center of row `i`.
    pub fn y_of(&self, i: usize) -> f64 {
        (self.height as f64 / 2.0 - i as f64 - 0.5) * self.resolution
    }

    /// Frame extent in mm, `(width, height)`.
    pub fn extent_mm(&self) -> (f64, f64) {
        (
            self.width as f64 * self.resolution,
            self.height as f64 * self.resolution,
        )
    }
}

#[derive(Clone, PartialEq)]
pub struct Raster {
    config: RasterConfig,
    /// Row-major bits, `i * width + j`; bits past the end stay zero.
    words: Vec<u64>,
}

impl std::fmt::Debug for Raster {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        write!(
            f,
            "Raster({}x{}, {} px set)",
            self.config.width,
            self.config.height,
            self.area_px()
        )
    }
}

impl Raster {
    pub fn empty(config: RasterConfig) -> Self {
        let n = config.width * config.height;
        Self {
            config,
            words: vec![0; n.div_ceil(64)],
        }
    }

    pub fn full(config: RasterConfig) -> Self {
        let mut r = Self::empty(config);
        r.words.iter_mut().for_each(|w| *w = !0);
        r.clear_tail();
        r
    }

    /// Sets every pixel whose center `(x, y)` satisfies `inside`.
    pub fn from_world_fn(config: RasterConfig, mut inside: impl FnMut(f64, f64) -> bool) -> Self {
        let mut r = Self::empty(config);
        for i in 0..config.height {
            let y = config.y_of(i);
            for j in 0..config.width {
                if inside(config.x_of(j), y) {
                    r.set(i, j, true);
                }
            }
        }
        r
    }

    /// Builds a raster from `(row, col)` membership.
    pub fn from_pixel_fn(config: RasterConfig, mut inside: impl FnMut(usize, usize) -> bool) -> Self {
        let mut r = Self::empty(config);
        for i in 0..config.height {
            for j in 0..config.width {
                if inside(i, j) {
                    r.set(i, j, true);
                }
            }
        }
        r
    }

    pub fn config(&self) -> RasterConfig {
        self.config
    }

    pub fn width(&self) -> usize {
        self.config.width
    }

    pub fn height(&self) -> usize {
        self.config.height
    }

    pub fn get(&self, i: usize, j: usize) -> bool {
        debug_assert!(i < self.config.height && j < self.config.width);
        let k = i * self.config.width + j;
        self.words[k / 64] >> (k % 64) & 1 == 1
    }

    pub fn set(&mut self, i: usize, j: usize, on: bool) {
        debug_assert!(i < self.config.height && j < self.config.width);
        let k = i * self.config.width + j;
        let mask = 1u64 << (k % 64);
        if on {
            self.words[k / 64] |= mask;
        } else {
            self.words[k / 64] &= !mask;
        }
    }

    /// Number of set pixels.
    pub fn area_px(&self) -> usize {
        self.words.iter().map(|w| w.count_ones() as usize).sum()
    }

    pub fn is_empty(&self) -> bool {
        self.words.iter().all(|&w| w == 0)
    }

    /// `(row, col)` of every set pixel, row-major.
    pub fn pixels(&self) -> impl Iterator<Item = (usize, usize)> + '_ {
        let w = self.config.width;
        self.words.iter().enumerate().flat_map(move |(wi, &word)| {
            let mut bits = word;
            std::iter::from_fn(move || {
                if bits == 0 {
                    return None;
                }
                let b = bits.trailing_zeros() as usize;
                bits &= bits - 1;
                let k = wi * 64 + b;
                Some((k / w, k % w))
            })
        })
    }

    fn check_dims(&self, other: &Raster) -> Result<(), RasterError> {
        if self.config.width != other.config.width || self.config.height != other.config.height {
            return Err(RasterError::DimensionMismatch(
                self.config.width,
                self.config.height,
                other.config.width,
                other.config.height,
            ));
        }
        Ok(())
    }

    fn zip_with(&self, other: &Raster, op: impl Fn(u64, u64) -> u64) -> Result<Raster, RasterError> {
        self.check_dims(other)?;
        let mut out = Raster {
            config: self.config,
            words: self.words.iter().zip(&other.words).map(|(&a, &b)| op(a, b)).collect(),
        };
        out.clear_tail();
        Ok(out)
    }

    fn clear_tail(&mut self) {
        let n = self.config.width * self.config.height;
        if !n.is_multiple_of(64) {
            if let Some(last) = self.words.last_mut() {
                *last &= (1u64 << (n % 64)) - 1;
            }
        }
    }

    pub fn intersect(&self, other: &Raster) -> Result<Raster, RasterError> {
        self.zip_with(other, |a, b| a & b)
    }

    pub fn union(&self, other: &Raster) -> Result<Raster, RasterError> {
        self.zip_with(other, |a, b| a | b)
    }

    /// Pixels of `self` not in `other`.
    pub fn difference(&self, other: &Raster) -> Result<Raster, RasterError> {
        self.zip_with(other, |a, b| a & !b)
    }

    pub fn complement(&self) -> Raster {
        let mut out = Raster {
            config: self.config,
            words: self.words.iter().map(|w| !w).collect(),
        };
        out.clear_tail();
        out
    }

    pub fn is_subset_of(&self, other: &Raster) -> Result<bool, RasterError> {
        self.check_dims(other)?;
        Ok(self.words.iter().zip(&other.words).all(|(&a, &b)| a & !b == 0))
    }

    pub fn is_disjoint(&self, other: &Raster) -> Result<bool, RasterError> {
        self.check_dims(other)?;
        Ok(self.words.iter().zip(&other.words).all(|(&a, &b)| a & b == 0))
    }

    fn count_with(&self, other: &Raster, op: impl Fn(u64, u64) -> u64) -> Result<usize, RasterError> {
        self.check_dims(other)?;
        Ok(self
            .words
            .iter()
            .zip(&other.words)
            .map(|(&a, &b)| op(a, b).count_ones() as usize)
            .sum())
    }
}

/// Intersection over union.
pub fn jaccard(a: &Raster, b: &Raster) -> Result<f64, RasterError> {
    let union = a.count_with(b, |x, y| x | y)?;
    if union == 0 {
        return Err(RasterError::BothEmpty);
    }
    let inter = a.count_with(b, |x, y| x & y)?;
    Ok(inter as f64 / union as f64)
}

/// Symmetric difference relative to the reference area:
/// `(|sim ∪ real| - |sim ∩ real|) / |real|`.
pub fn area_error(sim: &Raster, real: &Raster) -> Result<f64, RasterError> {
    let reference = real.area_px();
    if reference == 0 {
        return Err(RasterError::EmptyReference);
    }
    let sym = sim.count_with(real, |x, y| x ^ y)?;
    Ok(sym as f64 / reference as f64)
}
