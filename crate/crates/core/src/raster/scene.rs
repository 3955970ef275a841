use super::{Raster, RasterConfig, RasterError};
use crate::geometry::{closing_distance, Disk, PlacedProfile, RollProfile};
use crate::rollgen::Scenario;

/// The input channels of one stand at some closure.
#[derive(Clone, Debug, PartialEq)]
pub struct ScenarioRaster {
    pub inlet: Raster,
    /// Solid region of the upper roll.
    pub over_mask: Raster,
    /// Solid region of the lower roll.
    pub under_mask: Raster,
    /// Retraction (mm, per roll) at which both rolls just touch the disk.
    pub closing_distance: f64,
}

/// Rasterizes a scenario with the rolls at closure `t` (0 = first contact,
/// 1 = final position).
///
/// Each roll sits `(1 - t) c` away from its placed position, where `c` is the
/// closing distance evaluated over the sweep and every pixel column, so at
/// `t = 0` no inlet pixel lies in roll material. Roll material exists only
/// over the roll span and is clipped at the frame.
pub fn rasterize_scenario(scenario: &Scenario, t: f64, cfg: RasterConfig) -> Result<ScenarioRaster, RasterError> {
    if !(0.0..=1.0).contains(&t) {
        return Err(RasterError::ClosureOutOfRange(t));
    }
    let disk = Disk::centered(scenario.diameter)?;
    let (fw, fh) = cfg.extent_mm();
    if 2.0 * disk.radius > fw.min(fh) {
        return Err(RasterError::OutOfFrame(fw, fh));
    }
    let placed = scenario.profile.placed();
    let c = closing_distance(&placed, &disk, (0..cfg.width).map(|j| cfg.x_of(j)));
    let (over_mask, under_mask) = roll_masks(&placed, (1.0 - t) * c, cfg);
    let r2 = disk.radius * disk.radius;
    let inlet = Raster::from_world_fn(cfg, |x, y| x * x + y * y <= r2);
    Ok(ScenarioRaster {
        inlet,
        over_mask,
        under_mask,
        closing_distance: c,
    })
}

/// Roll masks `(over, under)` of a profile in the standard placement, each
/// roll retracted by `offset` mm.
pub fn rasterize_rolls(profile: &RollProfile, offset: f64, cfg: RasterConfig) -> (Raster, Raster) {
    roll_masks(&profile.placed(), offset, cfg)
}

fn roll_masks(placed: &PlacedProfile<'_>, offset: f64, cfg: RasterConfig) -> (Raster, Raster) {
    let mut over = Raster::empty(cfg);
    let mut under = Raster::empty(cfg);
    let mut cursor = placed.cursor();
    for j in 0..cfg.width {
        let Some((u, o)) = cursor.bounds_at(cfg.x_of(j)) else {
            continue;
        };
        let (top, bottom) = (o + offset, u - offset);
        for i in 0..cfg.height {
            let y = cfg.y_of(i);
            if y >= top {
                over.set(i, j, true);
            } else if y <= bottom {
                under.set(i, j, true);
            }
        }
    }
    (over, under)
}
