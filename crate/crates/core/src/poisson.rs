//! Homogeneous Poisson point process over a [`Region`].

use rand::Rng;
use rand_distr::{Distribution, Poisson};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::regions::{BoundingBox, Density, Point, Region};
use crate::seed::Seed;

/// Below this acceptance rate the rejection sampler gives up.
pub const MIN_ACCEPTANCE: f64 = 1e-4;

/// Sampled points. Order is an artifact of generation; the process is a
/// multiset and repeated points are allowed.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct PointMultiset {
    pub points: Vec<Point>,
}

impl PointMultiset {
    pub fn len(&self) -> usize {
        self.points.len()
    }

    pub fn is_empty(&self) -> bool {
        self.points.is_empty()
    }

    pub fn count_in(&self, region: &Region) -> usize {
        self.points.iter().filter(|p| region.contains(**p)).count()
    }
}

/// Draw a Poisson count with the given mean.
pub(crate) fn poisson_count<R: Rng + ?Sized>(mean: f64, rng: &mut R) -> Result<u64> {
    if mean == 0.0 {
        return Ok(0);
    }
    let dist = Poisson::new(mean).map_err(|e| Error::InvalidParameter(format!("poisson mean {mean}: {e}")))?;
    Ok(dist.sample(rng) as u64)
}

/// Sample the process on `region` at constant `density`.
///
/// The count comes from the `count` substream of `seed`, point positions
/// from the `points` substream. Positions are drawn by rejection from the
/// region's proposal boxes.
pub fn sample_poisson(region: &Region, density: Density, seed: &Seed) -> Result<PointMultiset> {
    let mean = region.measure(density)?;
    if !mean.is_finite() {
        return Err(Error::InvalidParameter(format!("region measure {mean} is not finite")));
    }
    let count = poisson_count(mean, &mut seed.derive("count").rng())?;
    let mut rng = seed.derive("points").rng();
    let points = sample_uniform(region, count as usize, &mut rng)?;
    Ok(PointMultiset { points })
}

/// `count` i.i.d. uniform points in `region`.
pub fn sample_uniform<R: Rng + ?Sized>(region: &Region, count: usize, rng: &mut R) -> Result<Vec<Point>> {
    let mut points = Vec::with_capacity(count);
    if count == 0 {
        return Ok(points);
    }
    let proposal = Proposal::new(region.proposal_boxes());
    if proposal.total_area <= 0.0 {
        return Err(Error::LowAcceptance {
            rate: 0.0,
            min: MIN_ACCEPTANCE,
        });
    }
    let mut attempts: u64 = 0;
    while points.len() < count {
        attempts += 1;
        let p = proposal.sample(rng);
        if region.contains(p) {
            points.push(p);
        }
        if attempts >= 100_000 && (points.len() as f64) < MIN_ACCEPTANCE * attempts as f64 {
            return Err(Error::LowAcceptance {
                rate: points.len() as f64 / attempts as f64,
                min: MIN_ACCEPTANCE,
            });
        }
    }
    Ok(points)
}

/// Uniform proposals over a union of disjoint boxes.
pub(crate) struct Proposal {
    boxes: Vec<BoundingBox>,
    cumulative: Vec<f64>,
    total_area: f64,
}

impl Proposal {
    pub(crate) fn new(boxes: Vec<BoundingBox>) -> Self {
        let mut cumulative = Vec::with_capacity(boxes.len());
        let mut acc = 0.0;
        for b in &boxes {
            acc += b.area();
            cumulative.push(acc);
        }
        Self {
            boxes,
            cumulative,
            total_area: acc,
        }
    }

    pub(crate) fn sample<R: Rng + ?Sized>(&self, rng: &mut R) -> Point {
        if self.boxes.len() == 1 {
            return self.boxes[0].sample(rng);
        }
        let u: f64 = rng.random::<f64>() * self.total_area;
        let idx = self.cumulative.partition_point(|&c| c <= u).min(self.boxes.len() - 1);
        self.boxes[idx].sample(rng)
    }
}

/// `mean^i e^{-mean} / i!`, evaluated in log space.
pub fn poisson_pmf(mean: f64, i: u64) -> f64 {
    assert!(mean >= 0.0, "poisson mean must be >= 0");
    if mean == 0.0 {
        return if i == 0 { 1.0 } else { 0.0 };
    }
    let k = i as f64;
    (k * mean.ln() - mean - ln_factorial(i)).exp()
}

fn ln_factorial(i: u64) -> f64 {
    if i < 32 {
        (2..=i).map(|k| (k as f64).ln()).sum()
    } else {
        // Stirling series, truncation error below 1e-16 for i >= 32
        let x = i as f64;
        x * x.ln() - x + 0.5 * (2.0 * std::f64::consts::PI * x).ln() + 1.0 / (12.0 * x) - 1.0 / (360.0 * x.powi(3))
            + 1.0 / (1260.0 * x.powi(5))
            - 1.0 / (1680.0 * x.powi(7))
    }
}
