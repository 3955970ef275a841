use serde::{Deserialize, Serialize};

use super::{GeometryError, Point2};

/// Interpolation scheme of a [`ProfileCurve`].
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum SplineKind {
    /// Natural cubic spline (C2, zero curvature at both ends).
    #[default]
    NaturalCubic,
    /// Piecewise cubic Hermite with Fritsch-Carlson slopes (C1, no overshoot
    /// beyond neighbouring knot values).
    Pchip,
}

/// Cubic interpolating curve through strictly increasing knots.
///
/// Serializes as its kind and knot list; deserializing refits, which
/// reproduces the same coefficients bit for bit.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "RawCurve", into = "RawCurve")]
pub struct ProfileCurve {
    kind: SplineKind,
    knots: Vec<Point2>,
    /// Per interval `i`: `(b, c, d)` with
    /// `y(x) = y_i + b u + c u^2 + d u^3`, `u = x - x_i`.
    poly: Vec<[f64; 3]>,
}

#[derive(Serialize, Deserialize)]
struct RawCurve {
    #[serde(default)]
    kind: SplineKind,
    knots: Vec<Point2>,
}

/// Relative slack on the span ends, so sample points computed as
/// `lo + i * (hi - lo) / n` never trip the span check through rounding.
const SPAN_SLACK: f64 = 1e-9;

impl ProfileCurve {
    /// Fits the default interpolant ([`SplineKind::NaturalCubic`]) through `knots`.
    pub fn fit(knots: Vec<Point2>) -> Result<Self, GeometryError> {
        Self::fit_with(SplineKind::default(), knots)
    }

    pub fn fit_with(kind: SplineKind, knots: Vec<Point2>) -> Result<Self, GeometryError> {
        if knots.len() < 4 {
            return Err(GeometryError::TooFewKnots(knots.len()));
        }
        if let Some(index) = knots.iter().position(|p| !p.is_finite()) {
            return Err(GeometryError::NonFinite { index });
        }
        if let Some(i) = knots.windows(2).position(|w| w[1].x <= w[0].x) {
            return Err(GeometryError::NonMonotonicKnots { index: i + 1 });
        }
        let poly = match kind {
            SplineKind::Pchip => hermite_poly(&knots, &pchip_slopes(&knots)),
            SplineKind::NaturalCubic => natural_poly(&knots, &natural_second_derivatives(&knots)),
        };
        Ok(Self { kind, knots, poly })
    }

    pub fn kind(&self) -> SplineKind {
        self.kind
    }

    pub fn knots(&self) -> &[Point2] {
        &self.knots
    }

    pub fn x_first(&self) -> f64 {
        self.knots[0].x
    }

    pub fn x_last(&self) -> f64 {
        self.knots[self.knots.len() - 1].x
    }

    pub fn span(&self) -> f64 {
        self.x_last() - self.x_first()
    }

    /// Evaluates the curve; `x` must lie within the knot span.
    pub fn eval(&self, x: f64) -> Result<f64, GeometryError> {
        let (lo, hi) = (self.x_first(), self.x_last());
        let slack = SPAN_SLACK * (hi - lo).max(1.0);
        if !(x >= lo - slack && x <= hi + slack) {
            return Err(GeometryError::OutOfSpan { x, lo, hi });
        }
        Ok(self.eval_clamped(x))
    }

    /// Evaluates at `x` clamped into the span.
    pub(crate) fn eval_clamped(&self, x: f64) -> f64 {
        let x = x.clamp(self.x_first(), self.x_last());
        match self.knots.binary_search_by(|p| p.x.partial_cmp(&x).expect("finite")) {
            Ok(i) => self.knots[i].y,
            Err(i) => self.eval_in(i - 1, x),
        }
    }

    /// A cursor for evaluating mostly ascending abscissae without a search
    /// per point. Results are bit-identical to [`ProfileCurve::eval`].
    pub fn cursor(&self) -> Cursor<'_> {
        Cursor { curve: self, idx: 0 }
    }

    /// Evaluates on interval `i`, where `k[i].x < x < k[i+1].x`.
    fn eval_in(&self, i: usize, x: f64) -> f64 {
        let u = x - self.knots[i].x;
        let [b, c, d] = self.poly[i];
        self.knots[i].y + u * (b + u * (c + u * d))
    }

    /// `n + 1` uniformly spaced sample abscissae covering the span exactly.
    pub fn sample_xs(&self, n: usize) -> impl Iterator<Item = f64> + '_ {
        let (lo, hi) = (self.x_first(), self.x_last());
        (0..=n).map(move |i| {
            if i == n {
                hi
            } else {
                lo + (hi - lo) * i as f64 / n as f64
            }
        })
    }

    /// Applies `x -> sx * x + dx`, `y -> sy * y + dy` to every knot and refits.
    pub fn transformed(&self, sx: f64, dx: f64, sy: f64, dy: f64) -> Result<Self, GeometryError> {
        Self::fit_with(
            self.kind,
            self.knots
                .iter()
                .map(|p| Point2::new(sx * p.x + dx, sy * p.y + dy))
                .collect(),
        )
    }
}

/// Sequential evaluator over a [`ProfileCurve`]; see [`ProfileCurve::cursor`].
#[derive(Clone, Debug)]
pub struct Cursor<'a> {
    curve: &'a ProfileCurve,
    idx: usize,
}

impl Cursor<'_> {
    /// Evaluates at `x` clamped into the span.
    pub fn eval_clamped(&mut self, x: f64) -> f64 {
        let knots = &self.curve.knots;
        let x = x.clamp(self.curve.x_first(), self.curve.x_last());
        if x < knots[self.idx].x {
            self.idx = knots.partition_point(|p| p.x <= x) - 1;
        }
        while self.idx + 1 < knots.len() && knots[self.idx + 1].x <= x {
            self.idx += 1;
        }
        if knots[self.idx].x == x {
            knots[self.idx].y
        } else {
            self.curve.eval_in(self.idx, x)
        }
    }
}

impl TryFrom<RawCurve> for ProfileCurve {
    type Error = GeometryError;

    fn try_from(raw: RawCurve) -> Result<Self, Self::Error> {
        Self::fit_with(raw.kind, raw.knots)
    }
}

impl From<ProfileCurve> for RawCurve {
    fn from(curve: ProfileCurve) -> Self {
        RawCurve {
            kind: curve.kind,
            knots: curve.knots,
        }
    }
}

/// Power-basis coefficients of the cubic Hermite interpolant with knot slopes `slope`.
fn hermite_poly(knots: &[Point2], slope: &[f64]) -> Vec<[f64; 3]> {
    knots
        .windows(2)
        .zip(slope.windows(2))
        .map(|(k, s)| {
            let h = k[1].x - k[0].x;
            let delta = (k[1].y - k[0].y) / h;
            [
                s[0],
                (3.0 * delta - 2.0 * s[0] - s[1]) / h,
                (s[0] + s[1] - 2.0 * delta) / (h * h),
            ]
        })
        .collect()
}

/// Power-basis coefficients of the natural spline with knot curvatures `second`.
fn natural_poly(knots: &[Point2], second: &[f64]) -> Vec<[f64; 3]> {
    knots
        .windows(2)
        .zip(second.windows(2))
        .map(|(k, m)| {
            let h = k[1].x - k[0].x;
            [
                (k[1].y - k[0].y) / h - h * (2.0 * m[0] + m[1]) / 6.0,
                m[0] / 2.0,
                (m[1] - m[0]) / (6.0 * h),
            ]
        })
        .collect()
}

/// Fritsch-Carlson monotone slopes, with the usual one-sided three-point
/// formula at the ends.
fn pchip_slopes(knots: &[Point2]) -> Vec<f64> {
    let n = knots.len();
    let h: Vec<f64> = knots.windows(2).map(|w| w[1].x - w[0].x).collect();
    let delta: Vec<f64> = knots.windows(2).zip(&h).map(|(w, h)| (w[1].y - w[0].y) / h).collect();
    let mut d = vec![0.0; n];
    for k in 1..n - 1 {
        let (dl, dr) = (delta[k - 1], delta[k]);
        if dl == 0.0 || dr == 0.0 || dl.signum() != dr.signum() {
            continue;
        }
        let w1 = 2.0 * h[k] + h[k - 1];
        let w2 = h[k] + 2.0 * h[k - 1];
        d[k] = (w1 + w2) / (w1 / dl + w2 / dr);
    }
    d[0] = pchip_end_slope(h[0], h[1], delta[0], delta[1]);
    d[n - 1] = pchip_end_slope(h[n - 2], h[n - 3], delta[n - 2], delta[n - 3]);
    d
}

fn pchip_end_slope(h0: f64, h1: f64, d0: f64, d1: f64) -> f64 {
    let d = ((2.0 * h0 + h1) * d0 - h0 * d1) / (h0 + h1);
    if d.signum() != d0.signum() || d0 == 0.0 {
        0.0
    } else if d0.signum() != d1.signum() && d.abs() > 3.0 * d0.abs() {
        3.0 * d0
    } else {
        d
    }
}

/// Solves the tridiagonal system for a natural cubic spline (Thomas algorithm).
fn natural_second_derivatives(knots: &[Point2]) -> Vec<f64> {
    let n = knots.len();
    let mut second = vec![0.0; n];
    let inner = n - 2;
    let h: Vec<f64> = knots.windows(2).map(|w| w[1].x - w[0].x).collect();
    let slope: Vec<f64> = knots.windows(2).zip(&h).map(|(w, h)| (w[1].y - w[0].y) / h).collect();

    let mut diag = vec![0.0; inner];
    let mut rhs = vec![0.0; inner];
    for k in 0..inner {
        diag[k] = 2.0 * (h[k] + h[k + 1]);
        rhs[k] = 6.0 * (slope[k + 1] - slope[k]);
    }
    // Off-diagonal between unknown k and k+1 is h[k+1].
    for k in 1..inner {
        let w = h[k] / diag[k - 1];
        diag[k] -= w * h[k];
        rhs[k] -= w * rhs[k - 1];
    }
    for k in (0..inner).rev() {
        let upper = if k + 1 < inner { h[k + 1] * second[k + 2] } else { 0.0 };
        second[k + 1] = (rhs[k] - upper) / diag[k];
    }
    second
}
