//! Continuous 2-D geometry of roll profiles and round workpieces.
//!
//! A [`RollProfile`] pairs the lower boundary of the upper roll (`over`) with
//! the upper boundary of the lower roll (`under`). Both curves live in the
//! profile's own coordinates, spanning `[x_first, x_first + width]`. The
//! [`PlacedProfile`] puts them into the world frame used everywhere else: the
//! workpiece center is the origin, the roll span is centered on `x = 0`, and
//! the narrowest part of the gap straddles `y = 0`.

mod spline;

use serde::{Deserialize, Serialize};
use thiserror::Error;

pub use spline::{Cursor, ProfileCurve, SplineKind};

/// Quadrature intervals for areas along the roll span.
pub const AREA_INTERVALS: usize = 2000;
/// Sample intervals for the minimum vertical gap (2001 points).
pub const GAP_SAMPLE_INTERVALS: usize = 2000;
/// Metric floor on the vertical roll gap, mm.
pub const MIN_GAP_MM: f64 = 4.0;
/// Admissible roll widths, mm.
pub const WIDTH_RANGE_MM: (f64, f64) = (80.0, 200.0);
/// Slack on the gap floor when validating a profile.
pub const GAP_TOLERANCE_MM: f64 = 1e-6;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum GeometryError {
    #[error("a profile curve needs at least 4 knots, got {0}")]
    TooFewKnots(usize),
    #[error("knot x values must be strictly increasing (violated at knot {index})")]
    NonMonotonicKnots { index: usize },
    #[error("knot {index} has a non-finite coordinate")]
    NonFinite { index: usize },
    #[error("x = {x} lies outside the curve span [{lo}, {hi}]")]
    OutOfSpan { x: f64, lo: f64, hi: f64 },
    #[error("over and under curves must share the same x span")]
    SpanMismatch,
    #[error("profile width {width} mm does not match the curve span {span} mm")]
    WidthMismatch { width: f64, span: f64 },
    #[error("roll width {0} mm outside [80, 200] mm")]
    WidthOutOfRange(f64),
    #[error("minimum vertical gap {0} mm is below the 4 mm floor")]
    GapTooSmall(f64),
    #[error("disk radius must be positive and finite, got {0}")]
    BadRadius(f64),
}

#[derive(Clone, Copy, Debug, Default, PartialEq, Serialize, Deserialize)]
pub struct Point2 {
    pub x: f64,
    pub y: f64,
}

impl Point2 {
    pub const fn new(x: f64, y: f64) -> Self {
        Self { x, y }
    }

    pub fn is_finite(&self) -> bool {
        self.x.is_finite() && self.y.is_finite()
    }
}

/// The tooling geometry of one stand.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "RawProfile", into = "RawProfile")]
pub struct RollProfile {
    over: ProfileCurve,
    under: ProfileCurve,
    width: f64,
}

#[derive(Serialize, Deserialize)]
struct RawProfile {
    over: ProfileCurve,
    under: ProfileCurve,
    width: f64,
}

impl TryFrom<RawProfile> for RollProfile {
    type Error = GeometryError;

    fn try_from(raw: RawProfile) -> Result<Self, Self::Error> {
        let profile = RollProfile::new_relaxed(raw.over, raw.under)?;
        if (profile.width - raw.width).abs() > 1e-9 * raw.width.abs().max(1.0) {
            return Err(GeometryError::WidthMismatch {
                width: raw.width,
                span: profile.width,
            });
        }
        profile.validate()?;
        Ok(profile)
    }
}

impl From<RollProfile> for RawProfile {
    fn from(p: RollProfile) -> Self {
        RawProfile {
            over: p.over,
            under: p.under,
            width: p.width,
        }
    }
}

impl RollProfile {
    /// Builds a profile and checks the metric invariants (width in
    /// [80, 200] mm, vertical gap of at least 4 mm).
    pub fn new(over: ProfileCurve, under: ProfileCurve) -> Result<Self, GeometryError> {
        let profile = Self::new_relaxed(over, under)?;
        profile.validate()?;
        Ok(profile)
    }

    /// Builds a profile checking only that both curves share a span.
    ///
    /// Useful for normalized or rescaled profiles that are not meant to be
    /// rolled, e.g. when studying the area measures themselves.
    pub fn new_relaxed(over: ProfileCurve, under: ProfileCurve) -> Result<Self, GeometryError> {
        let width = over.span();
        let tol = 1e-9 * width.abs().max(1.0);
        if (over.x_first() - under.x_first()).abs() > tol || (over.x_last() - under.x_last()).abs() > tol {
            return Err(GeometryError::SpanMismatch);
        }
        Ok(Self { over, under, width })
    }

    /// Flat rolls: `over(x) = top`, `under(x) = bottom` on `[0, width]`.
    pub fn flat(top: f64, bottom: f64, width: f64) -> Result<Self, GeometryError> {
        let line = |y: f64| ProfileCurve::fit((0..=4).map(|i| Point2::new(width * i as f64 / 4.0, y)).collect());
        Self::new_relaxed(line(top)?, line(bottom)?)
    }

    pub fn validate(&self) -> Result<(), GeometryError> {
        let (lo, hi) = WIDTH_RANGE_MM;
        if !(self.width >= lo && self.width <= hi) {
            return Err(GeometryError::WidthOutOfRange(self.width));
        }
        let gap = min_vertical_gap(self);
        if gap < MIN_GAP_MM - GAP_TOLERANCE_MM {
            return Err(GeometryError::GapTooSmall(gap));
        }
        Ok(())
    }

    pub fn over(&self) -> &ProfileCurve {
        &self.over
    }

    pub fn under(&self) -> &ProfileCurve {
        &self.under
    }

    pub fn width(&self) -> f64 {
        self.width
    }

    /// Vertical opening `over(x) - under(x)` at profile-local `x`.
    pub fn opening(&self, x: f64) -> f64 {
        self.over.eval_clamped(x) - self.under.eval_clamped(x)
    }

    /// Openings at ascending profile-local abscissae.
    fn openings<'a>(&'a self, xs: impl Iterator<Item = f64> + 'a) -> impl Iterator<Item = f64> + 'a {
        let (mut over, mut under) = (self.over.cursor(), self.under.cursor());
        xs.map(move |x| over.eval_clamped(x) - under.eval_clamped(x))
    }

    /// Places the profile in the world frame; see [`PlacedProfile`].
    pub fn placed(&self) -> PlacedProfile<'_> {
        let x_offset = -(self.over.x_first() + self.width / 2.0);
        let (mut min_over, mut max_under) = (f64::INFINITY, f64::NEG_INFINITY);
        let (mut over, mut under) = (self.over.cursor(), self.under.cursor());
        for x in self.over.sample_xs(GAP_SAMPLE_INTERVALS) {
            min_over = min_over.min(over.eval_clamped(x));
            max_under = max_under.max(under.eval_clamped(x));
        }
        PlacedProfile {
            profile: self,
            x_offset,
            y_offset: -(min_over + max_under) / 2.0,
        }
    }
}

/// A profile positioned in the world frame at full closure.
///
/// The roll span is `[-width/2, width/2]` and the curves are shifted so that
/// `(min over + max under) / 2 = 0`.
#[derive(Clone, Copy, Debug)]
pub struct PlacedProfile<'a> {
    profile: &'a RollProfile,
    x_offset: f64,
    y_offset: f64,
}

impl<'a> PlacedProfile<'a> {
    pub fn profile(&self) -> &'a RollProfile {
        self.profile
    }

    pub fn half_width(&self) -> f64 {
        self.profile.width / 2.0
    }

    pub fn y_offset(&self) -> f64 {
        self.y_offset
    }

    /// `(under, over)` at world `x`, or `None` outside the roll span.
    pub fn bounds_at(&self, x: f64) -> Option<(f64, f64)> {
        self.cursor().bounds_at(x)
    }

    /// Sequential variant of [`PlacedProfile::bounds_at`] for sweeps.
    pub fn cursor(&self) -> PlacedCursor<'a> {
        PlacedCursor {
            placed: *self,
            over: self.profile.over.cursor(),
            under: self.profile.under.cursor(),
        }
    }
}

#[derive(Clone, Debug)]
pub struct PlacedCursor<'a> {
    placed: PlacedProfile<'a>,
    over: Cursor<'a>,
    under: Cursor<'a>,
}

impl PlacedCursor<'_> {
    pub fn bounds_at(&mut self, x: f64) -> Option<(f64, f64)> {
        let p = &self.placed;
        let local = x - p.x_offset;
        if local < p.profile.over.x_first() || local > p.profile.over.x_last() {
            return None;
        }
        Some((
            self.under.eval_clamped(local) + p.y_offset,
            self.over.eval_clamped(local) + p.y_offset,
        ))
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct Disk {
    pub center: Point2,
    pub radius: f64,
}

impl Disk {
    pub fn new(center: Point2, radius: f64) -> Result<Self, GeometryError> {
        if !(radius > 0.0 && radius.is_finite()) {
            return Err(GeometryError::BadRadius(radius));
        }
        Ok(Self { center, radius })
    }

    /// A disk of diameter `diameter` at the world origin.
    pub fn centered(diameter: f64) -> Result<Self, GeometryError> {
        Self::new(Point2::default(), diameter / 2.0)
    }

    pub fn area(&self) -> f64 {
        std::f64::consts::PI * self.radius * self.radius
    }

    /// Half chord length at world `x`, zero outside the disk.
    pub fn half_chord(&self, x: f64) -> f64 {
        let dx = x - self.center.x;
        (self.radius * self.radius - dx * dx).max(0.0).sqrt()
    }
}

/// Area between the rolls: midpoint rule over 2000 intervals of
/// `max(over - under, 0)`.
pub fn gap_area(profile: &RollProfile) -> f64 {
    let lo = profile.over.x_first();
    let step = profile.width / AREA_INTERVALS as f64;
    profile
        .openings((0..AREA_INTERVALS).map(|i| lo + (i as f64 + 0.5) * step))
        .map(|g| g.max(0.0))
        .sum::<f64>()
        * step
}

/// Minimum of `over - under` over 2001 uniform samples of the span.
pub fn min_vertical_gap(profile: &RollProfile) -> f64 {
    profile
        .openings(profile.over.sample_xs(GAP_SAMPLE_INTERVALS))
        .fold(f64::INFINITY, f64::min)
}

/// Area of `disk` lying in roll material, i.e. outside the open gap
/// `under(x) < y < over(x)`. Columns outside the roll span are free.
///
/// The disk's horizontal extent is split into 2000 midpoint columns and the
/// chord in each column is intersected exactly with the solid intervals.
pub fn penetration_area(placed: &PlacedProfile<'_>, disk: &Disk) -> f64 {
    let r = disk.radius;
    let step = 2.0 * r / AREA_INTERVALS as f64;
    let x0 = disk.center.x - r;
    let mut cursor = placed.cursor();
    (0..AREA_INTERVALS)
        .map(|i| {
            let x = x0 + (i as f64 + 0.5) * step;
            let Some((under, over)) = cursor.bounds_at(x) else {
                return 0.0;
            };
            let h = disk.half_chord(x);
            let (bottom, top) = (disk.center.y - h, disk.center.y + h);
            if over <= under {
                return top - bottom;
            }
            (top - over.max(bottom)).max(0.0) + (under.min(top) - bottom).max(0.0)
        })
        .sum::<f64>()
        * step
}

/// Penetration of a centered disk of diameter `diameter` as a fraction of
/// the disk area.
pub fn penetration_ratio(profile: &RollProfile, diameter: f64) -> Result<f64, GeometryError> {
    let disk = Disk::centered(diameter)?;
    Ok(penetration_area(&profile.placed(), &disk) / disk.area())
}

/// Smallest symmetric roll retraction that clears `disk`: at `c` each roll
/// is moved `c` away from its placed position and neither overlaps the disk.
///
/// The maximum is taken over a 4000-interval sweep of the disk's extent plus
/// any `extra_xs` (e.g. pixel column centers), and clamped at zero.
pub fn closing_distance(placed: &PlacedProfile<'_>, disk: &Disk, extra_xs: impl IntoIterator<Item = f64>) -> f64 {
    let r = disk.radius;
    let lo = disk.center.x - r;
    let sweep = (0..=4000).map(move |i| lo + 2.0 * r * i as f64 / 4000.0);
    let mut c: f64 = 0.0;
    let mut cursor = placed.cursor();
    for x in sweep.chain(extra_xs) {
        let dx = x - disk.center.x;
        if dx.abs() > r {
            continue;
        }
        let Some((under, over)) = cursor.bounds_at(x) else {
            continue;
        };
        let h = disk.half_chord(x);
        c = c.max(disk.center.y + h - over).max(under - (disk.center.y - h));
    }
    c
}
