//! Fixed-shape 2×2 linear algebra.
//!
//! Singular values come from the closed form
//! `α1,2 = (√((a+d)² + (c−b)²) ± √((a−d)² + (b+c)²)) / 2`, with the minor
//! value recovered as `|det| / α1` so that `α1·α2 = |det|` holds to rounding.
//! Directions in the plane are handled projectively: an angle in `[0, π)`
//! names a line through the origin.

use std::f64::consts::PI;
use std::ops::{Add, Mul, Sub};

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Tolerance used for angle containment tests (radians).
pub const ANGLE_TOL: f64 = 1e-12;

#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
pub struct Vec2 {
    pub x: f64,
    pub y: f64,
}

impl Vec2 {
    pub const ZERO: Vec2 = Vec2 { x: 0.0, y: 0.0 };

    pub const fn new(x: f64, y: f64) -> Self {
        Vec2 { x, y }
    }

    pub fn dot(self, other: Vec2) -> f64 {
        self.x * other.x + self.y * other.y
    }

    pub fn cross(self, other: Vec2) -> f64 {
        self.x * other.y - self.y * other.x
    }

    pub fn norm(self) -> f64 {
        self.x.hypot(self.y)
    }

    pub fn dist(self, other: Vec2) -> f64 {
        (self - other).norm()
    }

    /// Unit vector of the line with angle `theta`.
    pub fn from_angle(theta: f64) -> Self {
        Vec2::new(theta.cos(), theta.sin())
    }

    /// Projective angle of the line spanned by `self`, in `[0, π)`.
    pub fn line_angle(self) -> f64 {
        normalize_angle(self.y.atan2(self.x))
    }
}

impl Add for Vec2 {
    type Output = Vec2;
    fn add(self, o: Vec2) -> Vec2 {
        Vec2::new(self.x + o.x, self.y + o.y)
    }
}

impl Sub for Vec2 {
    type Output = Vec2;
    fn sub(self, o: Vec2) -> Vec2 {
        Vec2::new(self.x - o.x, self.y - o.y)
    }
}

impl Mul<Vec2> for f64 {
    type Output = Vec2;
    fn mul(self, v: Vec2) -> Vec2 {
        Vec2::new(self * v.x, self * v.y)
    }
}

/// Row-major 2×2 matrix `[[a, b], [c, d]]`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Mat2 {
    pub a: f64,
    pub b: f64,
    pub c: f64,
    pub d: f64,
}

impl Mat2 {
    pub const IDENTITY: Mat2 = Mat2 {
        a: 1.0,
        b: 0.0,
        c: 0.0,
        d: 1.0,
    };

    pub const fn new(a: f64, b: f64, c: f64, d: f64) -> Self {
        Mat2 { a, b, c, d }
    }

    pub const fn diag(x: f64, y: f64) -> Self {
        Mat2::new(x, 0.0, 0.0, y)
    }

    pub fn rotation(theta: f64) -> Self {
        let (s, c) = theta.sin_cos();
        Mat2::new(c, -s, s, c)
    }

    pub fn scaled(self, k: f64) -> Self {
        Mat2::new(k * self.a, k * self.b, k * self.c, k * self.d)
    }

    pub fn from_row_major(e: [f64; 4]) -> Self {
        Mat2::new(e[0], e[1], e[2], e[3])
    }

    pub fn to_row_major(self) -> [f64; 4] {
        [self.a, self.b, self.c, self.d]
    }

    pub fn det(self) -> f64 {
        self.a * self.d - self.b * self.c
    }

    pub fn transpose(self) -> Self {
        Mat2::new(self.a, self.c, self.b, self.d)
    }

    pub fn apply(self, v: Vec2) -> Vec2 {
        Vec2::new(self.a * v.x + self.b * v.y, self.c * v.x + self.d * v.y)
    }

    pub fn inverse(self) -> Result<Self> {
        let det = self.det();
        if det == 0.0 || !det.is_finite() {
            return Err(Error::NonInvertible);
        }
        Ok(Mat2::new(
            self.d / det,
            -self.b / det,
            -self.c / det,
            self.a / det,
        ))
    }

    /// `(α1, α2)` with `α1 ≥ α2 > 0`.
    pub fn singular_values(self) -> Result<(f64, f64)> {
        let det = self.det();
        if det == 0.0 || !det.is_finite() {
            return Err(Error::NonInvertible);
        }
        Ok(self.singular_values_unchecked())
    }

    /// Closed-form singular values without the invertibility check. The
    /// caller guarantees `det != 0`.
    #[inline]
    pub fn singular_values_unchecked(self) -> (f64, f64) {
        let s1 = (self.a + self.d).hypot(self.c - self.b);
        let s2 = (self.a - self.d).hypot(self.b + self.c);
        let major = 0.5 * (s1 + s2);
        (major, self.det().abs() / major)
    }

    pub fn op_norm(self) -> f64 {
        self.singular_values_unchecked().0
    }

    /// Angle in `[0, π)` of the major axis of the image of the unit disc,
    /// i.e. the leading left singular direction.
    pub fn leading_direction(self) -> f64 {
        let p = self.a * self.a + self.b * self.b;
        let t = self.c * self.c + self.d * self.d;
        let r = self.a * self.c + self.b * self.d;
        normalize_angle(0.5 * (2.0 * r).atan2(p - t))
    }

    /// Image of the line with angle `theta` under `self`.
    pub fn act_on_angle(self, theta: f64) -> f64 {
        self.apply(Vec2::from_angle(theta)).line_angle()
    }
}

impl Mul for Mat2 {
    type Output = Mat2;
    #[inline]
    fn mul(self, o: Mat2) -> Mat2 {
        Mat2::new(
            self.a * o.a + self.b * o.c,
            self.a * o.b + self.b * o.d,
            self.c * o.a + self.d * o.c,
            self.c * o.b + self.d * o.d,
        )
    }
}

impl Mul<Vec2> for Mat2 {
    type Output = Vec2;
    fn mul(self, v: Vec2) -> Vec2 {
        self.apply(v)
    }
}

/// Free-function form of [`Mat2::singular_values`].
pub fn singular_values(m: Mat2) -> Result<(f64, f64)> {
    m.singular_values()
}

/// Reduce an angle to `[0, π)`.
pub fn normalize_angle(theta: f64) -> f64 {
    let r = theta.rem_euclid(PI);
    // rem_euclid can round up to exactly PI for tiny negative inputs
    if r >= PI {
        0.0
    } else {
        r
    }
}

/// Counter-clockwise offset from `from` to `to` on the projective line, in `[0, π)`.
pub fn angle_offset(from: f64, to: f64) -> f64 {
    normalize_angle(to - from)
}

/// Closed arc `[lo, lo + width]` of the projective line, taken counter-clockwise
/// and reduced modulo π.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct AngleInterval {
    lo: f64,
    width: f64,
}

impl AngleInterval {
    pub fn new(lo: f64, width: f64) -> Result<Self> {
        if !(0.0..PI).contains(&width) || !lo.is_finite() {
            return Err(Error::InvalidArgument(format!(
                "angle interval width {width} must lie in [0, pi)"
            )));
        }
        Ok(AngleInterval {
            lo: normalize_angle(lo),
            width,
        })
    }

    /// Interval from `lo` counter-clockwise to `hi`.
    pub fn from_endpoints(lo: f64, hi: f64) -> Self {
        AngleInterval {
            lo: normalize_angle(lo),
            width: angle_offset(lo, hi),
        }
    }

    /// Interval of half-width `radius` around `center`.
    pub fn centered(center: f64, radius: f64) -> Result<Self> {
        AngleInterval::new(center - radius, 2.0 * radius)
    }

    pub fn lo(&self) -> f64 {
        self.lo
    }

    pub fn width(&self) -> f64 {
        self.width
    }

    /// Upper endpoint, not reduced: may exceed π.
    pub fn hi(&self) -> f64 {
        self.lo + self.width
    }

    pub fn mid(&self) -> f64 {
        normalize_angle(self.lo + 0.5 * self.width)
    }

    pub fn contains(&self, theta: f64, tol: f64) -> bool {
        let off = angle_offset(self.lo, theta);
        off <= self.width + tol || off >= PI - tol
    }

    /// Whether `other` is a sub-arc of `self`, allowing `tol` of slack at both ends.
    pub fn contains_interval(&self, other: &AngleInterval, tol: f64) -> bool {
        self.containment_margin(other) >= -tol
    }

    /// Signed distance by which `other` sits inside `self`: the smaller of the
    /// two endpoint gaps; negative when `other` sticks out.
    pub fn containment_margin(&self, other: &AngleInterval) -> f64 {
        let mut start = angle_offset(self.lo, other.lo);
        // a start just before self.lo shows up near π
        if start > 0.5 * (PI + self.width) {
            start -= PI;
        }
        let end = start + other.width;
        start.min(self.width - end)
    }

    /// Enlarge by `eps` on both sides, saturating just below the full line.
    pub fn fattened(&self, eps: f64) -> Self {
        let width = (self.width + 2.0 * eps).min(PI - 1e-9);
        AngleInterval {
            lo: normalize_angle(self.lo - eps),
            width,
        }
    }
}

/// Image of an arc under the projective action of `m`.
///
/// Endpoints are mapped and the image orientation follows `sign(det m)`.
pub fn projective_image(m: Mat2, interval: &AngleInterval) -> Result<AngleInterval> {
    let det = m.det();
    if det == 0.0 || !det.is_finite() {
        return Err(Error::NonInvertible);
    }
    let u_lo = m.apply(Vec2::from_angle(interval.lo));
    if interval.width == 0.0 {
        return Ok(AngleInterval {
            lo: u_lo.line_angle(),
            width: 0.0,
        });
    }
    let u_hi = m.apply(Vec2::from_angle(interval.hi()));
    let (start, from, to) = if det > 0.0 {
        (u_lo.line_angle(), u_lo, u_hi)
    } else {
        (u_hi.line_angle(), u_hi, u_lo)
    };
    // signed angle between the representatives; orientation is known, so
    // only rounding can push it below zero
    let mut width = from.cross(to).atan2(from.dot(to));
    if width < 0.0 {
        width = if width > -1e-9 { 0.0 } else { width + PI };
    }
    Ok(AngleInterval {
        lo: start,
        width: width.min(PI - f64::EPSILON),
    })
}
