use serde::{Deserialize, Serialize};

use super::{Raster, RasterError};
use crate::dataset::{Augmentation, Sample};
use crate::rng::RngStream;

/// Largest angle accepted by [`rotate_small`], degrees.
pub const MAX_SMALL_ROTATION_DEG: f64 = 10.0;
/// Half-width of the uniform angle distribution used by [`augment`], degrees.
pub const AUGMENT_ANGLE_DEG: f64 = 3.0;

/// Counter-clockwise quarter turns.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(try_from = "u16", into = "u16")]
pub enum QuarterTurn {
    #[default]
    R0,
    R90,
    R180,
    R270,
}

impl QuarterTurn {
    pub const ALL: [QuarterTurn; 4] = [Self::R0, Self::R90, Self::R180, Self::R270];

    pub fn degrees(self) -> u16 {
        match self {
            Self::R0 => 0,
            Self::R90 => 90,
            Self::R180 => 180,
            Self::R270 => 270,
        }
    }

    pub fn from_degrees(deg: i64) -> Option<Self> {
        match deg.rem_euclid(360) {
            0 => Some(Self::R0),
            90 => Some(Self::R90),
            180 => Some(Self::R180),
            270 => Some(Self::R270),
            _ => None,
        }
    }

    /// Composition, `self` then `other`.
    pub fn then(self, other: QuarterTurn) -> QuarterTurn {
        Self::from_degrees(self.degrees() as i64 + other.degrees() as i64).expect("multiple of 90")
    }

    pub fn inverse(self) -> QuarterTurn {
        Self::from_degrees(-(self.degrees() as i64)).expect("multiple of 90")
    }
}

impl TryFrom<u16> for QuarterTurn {
    type Error = String;

    fn try_from(deg: u16) -> Result<Self, Self::Error> {
        match deg {
            0 | 90 | 180 | 270 => Ok(Self::from_degrees(deg as i64).expect("checked")),
            _ => Err(format!("rotation must be one of 0, 90, 180, 270; got {deg}")),
        }
    }
}

impl From<QuarterTurn> for u16 {
    fn from(q: QuarterTurn) -> u16 {
        q.degrees()
    }
}

/// Mirror left-right.
pub fn flip_h(r: &Raster) -> Raster {
    let w = r.width();
    Raster::from_pixel_fn(r.config(), |i, j| r.get(i, w - 1 - j))
}

/// Mirror top-bottom.
pub fn flip_v(r: &Raster) -> Raster {
    let h = r.height();
    Raster::from_pixel_fn(r.config(), |i, j| r.get(h - 1 - i, j))
}

/// Exact counter-clockwise rotation by a multiple of 90 degrees.
pub fn rotate_quarter(r: &Raster, q: QuarterTurn) -> Result<Raster, RasterError> {
    let (h, w) = (r.height(), r.width());
    if h != w && matches!(q, QuarterTurn::R90 | QuarterTurn::R270) {
        return Err(RasterError::NotSquare);
    }
    Ok(match q {
        QuarterTurn::R0 => r.clone(),
        QuarterTurn::R90 => Raster::from_pixel_fn(r.config(), |i, j| r.get(j, w - 1 - i)),
        QuarterTurn::R180 => Raster::from_pixel_fn(r.config(), |i, j| r.get(h - 1 - i, w - 1 - j)),
        QuarterTurn::R270 => Raster::from_pixel_fn(r.config(), |i, j| r.get(h - 1 - j, i)),
    })
}

/// Counter-clockwise rotation about the grid center by a small angle, with
/// inverse-mapped nearest-neighbour sampling.
pub fn rotate_small(r: &Raster, angle_deg: f64) -> Result<Raster, RasterError> {
    if angle_deg.is_nan() || angle_deg.abs() > MAX_SMALL_ROTATION_DEG {
        return Err(RasterError::AngleTooLarge(angle_deg));
    }
    let (sin, cos) = angle_deg.to_radians().sin_cos();
    let (hw, hh) = (r.width() as f64 / 2.0, r.height() as f64 / 2.0);
    let (w, h) = (r.width() as f64, r.height() as f64);
    Ok(Raster::from_pixel_fn(r.config(), |i, j| {
        let u = j as f64 + 0.5 - hw;
        let v = hh - i as f64 - 0.5;
        let su = cos * u + sin * v + hw;
        let sv = hh - (cos * v - sin * u);
        if su < 0.0 || sv < 0.0 || su >= w || sv >= h {
            return false;
        }
        r.get(sv.floor() as usize, su.floor() as usize)
    }))
}

/// The original sample plus a vertical flip, a horizontal flip and four
/// rotations by angles uniform on [-3, 3] degrees. Every channel, the roll
/// masks included, gets the same transform.
pub fn augment(sample: &Sample, rng: &mut RngStream) -> Vec<Sample> {
    let derive = |suffix: &str, tag: Augmentation, f: &dyn Fn(&Raster) -> Raster| {
        let mut meta = sample.meta.clone();
        meta.augmentation = tag;
        meta.source_id = Some(sample.id.clone());
        Sample {
            id: format!("{}-{suffix}", sample.id),
            inlet: f(&sample.inlet),
            over: f(&sample.over),
            under: f(&sample.under),
            outlet: f(&sample.outlet),
            meta,
        }
    };
    let mut out = Vec::with_capacity(7);
    out.push(sample.clone());
    out.push(derive("fv", Augmentation::FlipV, &flip_v));
    out.push(derive("fh", Augmentation::FlipH, &flip_h));
    for k in 0..4 {
        let angle = rng.uniform(-AUGMENT_ANGLE_DEG, AUGMENT_ANGLE_DEG);
        out.push(derive(&format!("r{k}"), Augmentation::Rot { angle_deg: angle }, &|r| {
            rotate_small(r, angle).expect("angle within the small-rotation limit")
        }));
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::raster::tests::{random_raster, small};
    use crate::raster::RasterConfig;

    #[test]
    fn flips_are_involutions() {
        let mut rng = RngStream::new(1, 0);
        let x = random_raster(RasterConfig::default(), &mut rng, 0.2);
        assert_eq!(flip_h(&flip_h(&x)), x);
        assert_eq!(flip_v(&flip_v(&x)), x);
        assert_eq!(flip_h(&x).area_px(), x.area_px());
    }

    #[test]
    fn flip_mirrors_world_axis() {
        let cfg = RasterConfig::default();
        let right = Raster::from_world_fn(cfg, |x, _| x > 10.0);
        let left = Raster::from_world_fn(cfg, |x, _| x < -10.0);
        assert_eq!(flip_h(&right), left);
        let top = Raster::from_world_fn(cfg, |_, y| y > 3.0);
        let bottom = Raster::from_world_fn(cfg, |_, y| y < -3.0);
        assert_eq!(flip_v(&top), bottom);
    }

    #[test]
    fn quarter_turns_compose_to_identity() {
        let mut rng = RngStream::new(2, 0);
        let x = random_raster(RasterConfig::default(), &mut rng, 0.2);
        let mut y = x.clone();
        for _ in 0..4 {
            y = rotate_quarter(&y, QuarterTurn::R90).unwrap();
        }
        assert_eq!(y, x);
        let twice = rotate_quarter(&rotate_quarter(&x, QuarterTurn::R90).unwrap(), QuarterTurn::R90).unwrap();
        assert_eq!(twice, rotate_quarter(&x, QuarterTurn::R180).unwrap());
        let back = rotate_quarter(&rotate_quarter(&x, QuarterTurn::R270).unwrap(), QuarterTurn::R90).unwrap();
        assert_eq!(back, x);
    }

    #[test]
    fn quarter_turn_is_counter_clockwise() {
        let cfg = RasterConfig::default();
        let right = Raster::from_world_fn(cfg, |x, y| x > 10.0 && y.abs() < 2.0);
        let up = Raster::from_world_fn(cfg, |x, y| y > 10.0 && x.abs() < 2.0);
        assert_eq!(rotate_quarter(&right, QuarterTurn::R90).unwrap(), up);
    }

    #[test]
    fn non_square_quarter_turn_fails() {
        let r = Raster::empty(small(4, 6));
        assert!(matches!(
            rotate_quarter(&r, QuarterTurn::R90),
            Err(RasterError::NotSquare)
        ));
        assert!(rotate_quarter(&r, QuarterTurn::R180).is_ok());
    }

    #[test]
    fn zero_rotation_is_identity() {
        let mut rng = RngStream::new(3, 0);
        let x = random_raster(RasterConfig::default(), &mut rng, 0.4);
        assert_eq!(rotate_small(&x, 0.0).unwrap(), x);
        assert!(matches!(rotate_small(&x, 12.0), Err(RasterError::AngleTooLarge(_))));
    }

    #[test]
    fn small_rotation_is_counter_clockwise() {
        let cfg = RasterConfig::default();
        let bar = Raster::from_world_fn(cfg, |x, y| x > 20.0 && x < 40.0 && y.abs() < 1.0);
        let rot = rotate_small(&bar, 10.0).unwrap();
        let above: usize = rot.pixels().filter(|&(i, _)| cfg.y_of(i) > 1.0).count();
        assert!(above > rot.area_px() / 2);
    }

    #[test]
    fn quarter_turn_degrees() {
        assert_eq!(QuarterTurn::from_degrees(-90), Some(QuarterTurn::R270));
        assert_eq!(QuarterTurn::R90.then(QuarterTurn::R270), QuarterTurn::R0);
        assert_eq!(QuarterTurn::R90.inverse(), QuarterTurn::R270);
        assert_eq!(serde_json::to_string(&QuarterTurn::R180).unwrap(), "180");
        assert!(serde_json::from_str::<QuarterTurn>("45").is_err());
    }
}
