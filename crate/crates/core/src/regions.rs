//! Planar domains used by the construction and by the Monte Carlo checks.

use std::f64::consts::{FRAC_PI_2, PI};
use std::fmt;
use std::sync::Arc;

use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Smallest parameter `n` accepted by [`Region::PolarLobes`] and the full
/// construction.
pub const N_MIN: u64 = 10_000;

/// Relative error target for the lobe area quadrature.
pub const MEASURE_REL_TOL: f64 = 1e-4;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Point {
    pub x: f64,
    pub y: f64,
}

impl Point {
    pub const ORIGIN: Point = Point { x: 0.0, y: 0.0 };

    #[inline]
    pub fn new(x: f64, y: f64) -> Self {
        Self { x, y }
    }

    pub fn from_polar(r: f64, theta: f64) -> Self {
        let (s, c) = theta.sin_cos();
        Self { x: r * c, y: r * s }
    }

    #[inline]
    pub fn distance(self, other: Point) -> f64 {
        self.distance_sq(other).sqrt()
    }

    #[inline]
    pub fn distance_sq(self, other: Point) -> f64 {
        let dx = self.x - other.x;
        let dy = self.y - other.y;
        dx * dx + dy * dy
    }

    pub fn norm(self) -> f64 {
        self.x.hypot(self.y)
    }

    pub fn is_finite(self) -> bool {
        self.x.is_finite() && self.y.is_finite()
    }
}

/// Constant density of a Poisson process, in points per unit area.
#[derive(Debug, Clone, Copy, PartialEq, PartialOrd, Serialize, Deserialize)]
pub struct Density(f64);

impl Density {
    pub fn new(value: f64) -> Result<Self> {
        if value.is_finite() && value >= 0.0 {
            Ok(Self(value))
        } else {
            Err(Error::InvalidParameter(format!(
                "density must be finite and >= 0, got {value}"
            )))
        }
    }

    pub fn value(self) -> f64 {
        self.0
    }
}

/// Closed axis-aligned rectangle.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct BoundingBox {
    pub min_x: f64,
    pub min_y: f64,
    pub max_x: f64,
    pub max_y: f64,
}

impl BoundingBox {
    pub fn new(min_x: f64, min_y: f64, max_x: f64, max_y: f64) -> Self {
        Self {
            min_x,
            min_y,
            max_x,
            max_y,
        }
    }

    pub fn centered(half_width: f64, half_height: f64) -> Self {
        Self::new(-half_width, -half_height, half_width, half_height)
    }

    pub fn width(&self) -> f64 {
        self.max_x - self.min_x
    }

    pub fn height(&self) -> f64 {
        self.max_y - self.min_y
    }

    pub fn area(&self) -> f64 {
        self.width().max(0.0) * self.height().max(0.0)
    }

    pub fn contains(&self, p: Point) -> bool {
        p.x >= self.min_x && p.x <= self.max_x && p.y >= self.min_y && p.y <= self.max_y
    }

    pub fn contains_box(&self, other: &BoundingBox) -> bool {
        other.min_x >= self.min_x && other.max_x <= self.max_x && other.min_y >= self.min_y && other.max_y <= self.max_y
    }

    pub fn sample<R: Rng + ?Sized>(&self, rng: &mut R) -> Point {
        let u: f64 = rng.random();
        let v: f64 = rng.random();
        Point::new(self.min_x + u * self.width(), self.min_y + v * self.height())
    }

    pub fn corners(&self) -> [Point; 4] {
        [
            Point::new(self.min_x, self.min_y),
            Point::new(self.max_x, self.min_y),
            Point::new(self.max_x, self.max_y),
            Point::new(self.min_x, self.max_y),
        ]
    }

    /// Euclidean distance from `p` to the nearest point of the box.
    pub fn min_distance(&self, p: Point) -> f64 {
        let dx = (self.min_x - p.x).max(0.0).max(p.x - self.max_x);
        let dy = (self.min_y - p.y).max(0.0).max(p.y - self.max_y);
        dx.hypot(dy)
    }

    /// Euclidean distance from `p` to the farthest point of the box.
    pub fn max_distance(&self, p: Point) -> f64 {
        let dx = (p.x - self.min_x).abs().max((self.max_x - p.x).abs());
        let dy = (p.y - self.min_y).abs().max((self.max_y - p.y).abs());
        dx.hypot(dy)
    }
}

pub type MembershipFn = dyn Fn(Point) -> bool + Send + Sync;

/// A region given by an arbitrary membership predicate.
#[derive(Clone)]
pub struct CustomRegion {
    predicate: Arc<MembershipFn>,
    bbox: BoundingBox,
}

impl fmt::Debug for CustomRegion {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("CustomRegion")
            .field("bbox", &self.bbox)
            .finish_non_exhaustive()
    }
}

/// Custom regions are equal only when they share the same predicate.
impl PartialEq for CustomRegion {
    fn eq(&self, other: &Self) -> bool {
        Arc::ptr_eq(&self.predicate, &other.predicate) && self.bbox == other.bbox
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", content = "parameters", rename_all = "snake_case")]
pub enum Region {
    /// `|x| <= half_width`, `|y| <= half_height`.
    Rectangle { half_width: f64, half_height: f64 },
    /// Two thin antipodal wedges hugging the circle of radius `n^{4/7}`:
    /// `0.9 n^{4/7} < r < n^{4/7} - 1` and angular distance to the nearest of
    /// the directions `0`, `pi` below `0.5 (n^{4/7} - r)^{-1/4}`.
    PolarLobes { n_param: u64 },
    /// Closed disk centered at the origin.
    Disk { radius: f64 },
    #[serde(skip)]
    Custom(CustomRegion),
}

/// `n^{4/7}`, the radius of the construction's circle.
pub fn circle_radius(n: u64) -> f64 {
    (n as f64).powf(4.0 / 7.0)
}

impl Region {
    pub fn rectangle(half_width: f64, half_height: f64) -> Result<Self> {
        let r = Region::Rectangle {
            half_width,
            half_height,
        };
        r.validate()?;
        Ok(r)
    }

    pub fn disk(radius: f64) -> Result<Self> {
        let r = Region::Disk { radius };
        r.validate()?;
        Ok(r)
    }

    pub fn polar_lobes(n_param: u64) -> Result<Self> {
        let r = Region::PolarLobes { n_param };
        r.validate()?;
        Ok(r)
    }

    pub fn custom<F>(bbox: BoundingBox, predicate: F) -> Result<Self>
    where
        F: Fn(Point) -> bool + Send + Sync + 'static,
    {
        let r = Region::Custom(CustomRegion {
            predicate: Arc::new(predicate),
            bbox,
        });
        r.validate()?;
        Ok(r)
    }

    /// The unit square `[-1/2, 1/2]^2`.
    pub fn unit_square() -> Self {
        Region::Rectangle {
            half_width: 0.5,
            half_height: 0.5,
        }
    }

    pub fn validate(&self) -> Result<()> {
        let ok = |v: f64| v.is_finite() && v >= 0.0;
        match *self {
            Region::Rectangle {
                half_width,
                half_height,
            } if ok(half_width) && ok(half_height) => Ok(()),
            Region::Rectangle { .. } => Err(Error::InvalidParameter(
                "rectangle half-sizes must be finite and >= 0".into(),
            )),
            Region::Disk { radius } if ok(radius) => Ok(()),
            Region::Disk { .. } => Err(Error::InvalidParameter("disk radius must be finite and >= 0".into())),
            Region::PolarLobes { n_param } if n_param >= N_MIN => Ok(()),
            Region::PolarLobes { n_param } => Err(Error::InvalidParameter(format!(
                "polar lobes need n >= {N_MIN}, got {n_param}"
            ))),
            Region::Custom(ref c) => {
                let b = c.bbox;
                if [b.min_x, b.min_y, b.max_x, b.max_y].iter().all(|v| v.is_finite())
                    && b.min_x <= b.max_x
                    && b.min_y <= b.max_y
                {
                    Ok(())
                } else {
                    Err(Error::InvalidParameter(
                        "custom region needs a finite bounding box".into(),
                    ))
                }
            }
        }
    }

    pub fn contains(&self, p: Point) -> bool {
        match *self {
            Region::Rectangle {
                half_width,
                half_height,
            } => p.x.abs() <= half_width && p.y.abs() <= half_height,
            Region::Disk { radius } => p.x * p.x + p.y * p.y <= radius * radius,
            Region::PolarLobes { n_param } => lobes_contain(circle_radius(n_param), p),
            Region::Custom(ref c) => (c.predicate)(p),
        }
    }

    pub fn bounding_box(&self) -> BoundingBox {
        match *self {
            Region::Rectangle {
                half_width,
                half_height,
            } => BoundingBox::centered(half_width, half_height),
            Region::Disk { radius } => BoundingBox::centered(radius, radius),
            Region::PolarLobes { n_param } => {
                let r = circle_radius(n_param);
                let outer = r - 1.0;
                BoundingBox::centered(outer, outer * lobe_max_half_angle(r).sin())
            }
            Region::Custom(ref c) => c.bbox,
        }
    }

    /// Disjoint boxes whose union contains the region. Rejection sampling
    /// and the annulus integrator draw proposals from these.
    pub fn proposal_boxes(&self) -> Vec<BoundingBox> {
        match *self {
            Region::PolarLobes { n_param } => {
                let r = circle_radius(n_param);
                let outer = r - 1.0;
                let half_angle = lobe_max_half_angle(r);
                let x_lo = 0.9 * r * half_angle.cos();
                let y_hi = outer * half_angle.sin();
                vec![
                    BoundingBox::new(x_lo, -y_hi, outer, y_hi),
                    BoundingBox::new(-outer, -y_hi, -x_lo, y_hi),
                ]
            }
            _ => vec![self.bounding_box()],
        }
    }

    /// Area of the region times the density.
    pub fn measure(&self, density: Density) -> Result<f64> {
        Ok(self.area()? * density.value())
    }

    pub fn area(&self) -> Result<f64> {
        match *self {
            Region::Rectangle {
                half_width,
                half_height,
            } => Ok(4.0 * half_width * half_height),
            Region::Disk { radius } => Ok(PI * radius * radius),
            Region::PolarLobes { n_param } => lobes_area(circle_radius(n_param)),
            Region::Custom(ref c) => custom_area(c),
        }
    }
}

/// Angular half-width of a lobe at radius `r`, capped at `pi/2` (beyond that
/// the two lobes would cover the whole circle).
fn lobe_half_angle(big_r: f64, r: f64) -> f64 {
    (0.5 * (big_r - r).powf(-0.25)).min(FRAC_PI_2)
}

fn lobe_max_half_angle(big_r: f64) -> f64 {
    // the half-width increases with r and peaks at the outer radius R - 1
    lobe_half_angle(big_r, big_r - 1.0)
}

fn lobes_contain(big_r: f64, p: Point) -> bool {
    let r = p.norm();
    if !(r > 0.9 * big_r && r < big_r - 1.0) {
        return false;
    }
    let theta = p.y.atan2(p.x).abs();
    let to_axis = theta.min(PI - theta);
    to_axis < lobe_half_angle(big_r, r)
}

fn lobes_area(big_r: f64) -> Result<f64> {
    let (lo, hi) = (0.9 * big_r, big_r - 1.0);
    if hi <= lo {
        return Ok(0.0);
    }
    // both lobes are two-sided wedges: total angle 4 * half-width
    let integrand = |r: f64| 4.0 * lobe_half_angle(big_r, r) * r;
    let (value, err) = adaptive_simpson(&integrand, lo, hi, 1e-12, 48);
    if err > MEASURE_REL_TOL * value.abs() {
        return Err(Error::QuadratureNonConvergence {
            estimate: value,
            error: err,
            tolerance: MEASURE_REL_TOL,
        });
    }
    Ok(value)
}

fn custom_area(c: &CustomRegion) -> Result<f64> {
    let b = c.bbox;
    let midpoint = |cells: usize| {
        let (dx, dy) = (b.width() / cells as f64, b.height() / cells as f64);
        let mut hits = 0u64;
        for i in 0..cells {
            for j in 0..cells {
                let p = Point::new(b.min_x + (i as f64 + 0.5) * dx, b.min_y + (j as f64 + 0.5) * dy);
                if (c.predicate)(p) {
                    hits += 1;
                }
            }
        }
        hits as f64 * dx * dy
    };
    let mut cells = 256;
    let mut prev = midpoint(cells);
    while cells < 4096 {
        cells *= 2;
        let next = midpoint(cells);
        let err = (next - prev).abs();
        if err <= 1e-3 * next.abs().max(f64::MIN_POSITIVE) {
            return Ok(next);
        }
        prev = next;
    }
    Err(Error::QuadratureNonConvergence {
        estimate: prev,
        error: f64::NAN,
        tolerance: 1e-3,
    })
}

/// Adaptive Simpson quadrature with Richardson correction. Returns the
/// estimate and an absolute error estimate.
pub(crate) fn adaptive_simpson<F: Fn(f64) -> f64>(f: &F, a: f64, b: f64, tol: f64, max_depth: u32) -> (f64, f64) {
    fn simpson<F: Fn(f64) -> f64>(f: &F, a: f64, fa: f64, b: f64, fb: f64) -> (f64, f64, f64) {
        let m = 0.5 * (a + b);
        let fm = f(m);
        (m, fm, (b - a) / 6.0 * (fa + 4.0 * fm + fb))
    }

    #[allow(clippy::too_many_arguments)]
    fn recurse<F: Fn(f64) -> f64>(
        f: &F,
        a: f64,
        fa: f64,
        b: f64,
        fb: f64,
        m: f64,
        fm: f64,
        whole: f64,
        tol: f64,
        depth: u32,
    ) -> (f64, f64) {
        let (lm, flm, left) = simpson(f, a, fa, m, fm);
        let (rm, frm, right) = simpson(f, m, fm, b, fb);
        let delta = left + right - whole;
        if depth == 0 || delta.abs() <= 15.0 * tol {
            return (left + right + delta / 15.0, (delta / 15.0).abs());
        }
        let (lv, le) = recurse(f, a, fa, m, fm, lm, flm, left, 0.5 * tol, depth - 1);
        let (rv, re) = recurse(f, m, fm, b, fb, rm, frm, right, 0.5 * tol, depth - 1);
        (lv + rv, le + re)
    }

    let (fa, fb) = (f(a), f(b));
    let (m, fm, whole) = simpson(f, a, fa, b, fb);
    let scale = whole.abs().max(f64::MIN_POSITIVE);
    recurse(f, a, fa, b, fb, m, fm, whole, tol * scale, max_depth)
}
