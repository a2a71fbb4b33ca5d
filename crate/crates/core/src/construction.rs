//! The three-part point set: a Poisson strip, two Poisson lobes near the
//! circle, and explicit points on the circle of radius `n^{4/7}`.

use std::f64::consts::PI;
use std::fmt;
use std::io::{BufRead, Write};
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::grid::{self, UniformGrid};
use crate::poisson::sample_poisson;
use crate::regions::{circle_radius, Density, Point, Region, N_MIN};
use crate::seed::Seed;

pub const DEFAULT_EPSILON: f64 = 1e-3;
pub const MAX_EPSILON: f64 = 0.01;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub enum Source {
    P1,
    P2,
    P3,
}

impl fmt::Display for Source {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Source::P1 => "P1",
            Source::P2 => "P2",
            Source::P3 => "P3",
        })
    }
}

impl FromStr for Source {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "P1" => Ok(Source::P1),
            "P2" => Ok(Source::P2),
            "P3" => Ok(Source::P3),
            other => Err(Error::InvalidParameter(format!("unknown point source {other:?}"))),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct LabeledPoint {
    pub point: Point,
    pub source: Source,
}

/// A Poisson part after close-pair deletion.
#[derive(Debug, Clone, PartialEq)]
pub struct PrunedPart {
    pub sampled: usize,
    pub points: Vec<LabeledPoint>,
}

impl PrunedPart {
    pub fn deleted(&self) -> usize {
        self.sampled - self.points.len()
    }

    /// Deleted share of the sampled points; 0 for an empty sample.
    pub fn deleted_fraction(&self) -> f64 {
        if self.sampled == 0 {
            0.0
        } else {
            self.deleted() as f64 / self.sampled as f64
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum DistanceClass {
    Moderate,
    Large,
    ExtraLarge,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Construction {
    pub n_param: u64,
    pub epsilon: f64,
    pub seed: Seed,
    pub points: Vec<LabeledPoint>,
    /// `D = 2 n^{4/7}`.
    pub diameter_nominal: f64,
    pub p1_sampled: usize,
    pub p2_sampled: usize,
}

impl Construction {
    pub fn len(&self) -> usize {
        self.points.len()
    }

    pub fn is_empty(&self) -> bool {
        self.points.is_empty()
    }

    pub fn count(&self, source: Source) -> usize {
        self.points.iter().filter(|p| p.source == source).count()
    }

    pub fn raw_points(&self) -> Vec<Point> {
        self.points.iter().map(|p| p.point).collect()
    }

    pub fn deleted_fraction(&self, source: Source) -> f64 {
        let sampled = match source {
            Source::P1 => self.p1_sampled,
            Source::P2 => self.p2_sampled,
            Source::P3 => return 0.0,
        };
        if sampled == 0 {
            0.0
        } else {
            1.0 - self.count(source) as f64 / sampled as f64
        }
    }
}

fn check_params(n: u64, epsilon: f64) -> Result<()> {
    if n < N_MIN {
        return Err(Error::InvalidParameter(format!("n must be >= {N_MIN}, got {n}")));
    }
    if !(0.0..=MAX_EPSILON).contains(&epsilon) {
        return Err(Error::InvalidParameter(format!(
            "epsilon must lie in [0, {MAX_EPSILON}], got {epsilon}"
        )));
    }
    Ok(())
}

/// The strip `|x| <= n^{3/7}`, `|y| <= 0.99 n^{4/7}`.
pub fn strip_region(n: u64) -> Region {
    Region::Rectangle {
        half_width: (n as f64).powf(3.0 / 7.0),
        half_height: 0.99 * circle_radius(n),
    }
}

fn build_part(region: &Region, epsilon: f64, seed: &Seed, source: Source) -> Result<PrunedPart> {
    let sample = sample_poisson(region, Density::new(epsilon)?, seed)?;
    let sampled = sample.len();
    let points = prune_close_pairs(&sample.points, 1.0)
        .into_iter()
        .map(|point| LabeledPoint { point, source })
        .collect();
    Ok(PrunedPart { sampled, points })
}

/// Poisson sample on the strip at density `epsilon`, close pairs deleted.
pub fn build_p1(n: u64, epsilon: f64, seed: &Seed) -> Result<PrunedPart> {
    check_params(n, epsilon)?;
    build_part(&strip_region(n), epsilon, &seed.derive("p1"), Source::P1)
}

/// Poisson sample on the two lobes at density `epsilon`, close pairs deleted.
pub fn build_p2(n: u64, epsilon: f64, seed: &Seed) -> Result<PrunedPart> {
    check_params(n, epsilon)?;
    build_part(&Region::polar_lobes(n)?, epsilon, &seed.derive("p2"), Source::P2)
}

/// Largest index `s` (and `t`) used on the circle.
pub fn circle_index_bound(n: u64) -> u64 {
    (circle_radius(n) / 2.0).floor() as u64
}

/// Polar angle of `p_s`.
pub fn p_angle(n: u64, s: u64) -> f64 {
    2.0 * s as f64 * (n as f64).powf(-4.0 / 7.0)
}

/// Polar angle of `q_t`.
pub fn q_angle(n: u64, t: u64) -> f64 {
    let nf = n as f64;
    PI + 2.0 * t as f64 * (nf.powf(-4.0 / 7.0) + 4.0 * nf.powf(-8.0 / 7.0))
}

/// Explicit points on the circle: `p_s` for `0 <= s <= floor(n^{4/7}/2)`
/// then `q_t` over the same range.
pub fn build_p3(n: u64) -> Result<Vec<LabeledPoint>> {
    check_params(n, 0.0)?;
    let radius = circle_radius(n);
    let last = circle_index_bound(n);
    let p = (0..=last).map(|s| p_angle(n, s));
    let q = (0..=last).map(|t| q_angle(n, t));
    Ok(p.chain(q)
        .map(|theta| LabeledPoint {
            point: Point::from_polar(radius, theta),
            source: Source::P3,
        })
        .collect())
}

/// Keep exactly the points that have no other input point strictly closer
/// than `threshold`. Both members of a close pair are dropped.
pub fn prune_close_pairs(points: &[Point], threshold: f64) -> Vec<Point> {
    grid::isolated_indices(points, threshold)
        .into_iter()
        .map(|i| points[i])
        .collect()
}

/// Union of the pruned Poisson parts and the circle points. Cross-part
/// separation is checked, not enforced.
pub fn assemble(n: u64, epsilon: f64, seed: &Seed) -> Result<Construction> {
    check_params(n, epsilon)?;
    let (parts, p3) = rayon::join(
        || rayon::join(|| build_p1(n, epsilon, seed), || build_p2(n, epsilon, seed)),
        || build_p3(n),
    );
    let (p1, p2) = (parts.0?, parts.1?);
    let p3 = p3?;
    let (p1_sampled, p2_sampled) = (p1.sampled, p2.sampled);
    let mut points = p1.points;
    points.extend(p2.points);
    points.extend(p3);
    check_cross_part_separation(&points)?;
    Ok(Construction {
        n_param: n,
        epsilon,
        seed: seed.clone(),
        points,
        diameter_nominal: 2.0 * circle_radius(n),
        p1_sampled,
        p2_sampled,
    })
}

fn check_cross_part_separation(points: &[LabeledPoint]) -> Result<()> {
    let raw: Vec<Point> = points.iter().map(|p| p.point).collect();
    let grid = UniformGrid::new(&raw, 1.0);
    let mut violation = None;
    grid.visit_pairs_in_range(0.0, 1.0, |i, j, d| {
        if points[i].source != points[j].source {
            violation = Some((points[i].source, points[j].source, d));
            false
        } else {
            true
        }
    });
    match violation {
        Some((a, b, distance)) => Err(Error::CrossPartSeparation { a, b, distance }),
        None => Ok(()),
    }
}

/// Moderate up to `1.96 n^{4/7}` (inclusive), large up to `D - 3`
/// (inclusive), extra large up to `D`.
pub fn classify_distance(t: f64, n: u64) -> Result<DistanceClass> {
    let radius = circle_radius(n);
    let diameter = 2.0 * radius;
    if !(1.0..=diameter).contains(&t) {
        return Err(Error::InvalidParameter(format!("distance {t} outside [1, {diameter}]")));
    }
    Ok(if t <= 1.96 * radius {
        DistanceClass::Moderate
    } else if t <= diameter - 3.0 {
        DistanceClass::Large
    } else {
        DistanceClass::ExtraLarge
    })
}

/// Writes the point-set export: one header line, then `x y source` with 17
/// significant digits per coordinate.
pub fn write_points<W: Write>(c: &Construction, out: &mut W) -> Result<()> {
    writeln!(out, "# n={} epsilon={:e} seed={}", c.n_param, c.epsilon, c.seed)?;
    for lp in &c.points {
        writeln!(out, "{:.16e} {:.16e} {}", lp.point.x, lp.point.y, lp.source)?;
    }
    Ok(())
}

/// Reads a point-set export. Lines starting with `#` are skipped; the
/// source column is optional and defaults to `P1`.
pub fn read_points<R: BufRead>(input: R) -> Result<Vec<LabeledPoint>> {
    let mut points = Vec::new();
    for (lineno, line) in input.lines().enumerate() {
        let line = line?;
        let line = line.trim();
        if line.is_empty() || line.starts_with('#') {
            continue;
        }
        let mut fields = line.split_whitespace();
        let mut coord = || -> Result<f64> {
            fields
                .next()
                .ok_or_else(|| Error::InvalidParameter(format!("line {}: missing coordinate", lineno + 1)))?
                .parse::<f64>()
                .map_err(|e| Error::InvalidParameter(format!("line {}: {e}", lineno + 1)))
        };
        let point = Point::new(coord()?, coord()?);
        if !point.is_finite() {
            return Err(Error::InvalidParameter(format!(
                "line {}: non-finite coordinate",
                lineno + 1
            )));
        }
        let source = match fields.next() {
            Some(s) => s.parse()?,
            None => Source::P1,
        };
        points.push(LabeledPoint { point, source });
    }
    Ok(points)
}
