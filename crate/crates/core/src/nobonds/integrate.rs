//! Monte Carlo estimates of the expected bond and vee counts.
//!
//! For a point `x` of the region let `m(x)` be the area of the region that
//! forms a bond with `x`. Then `mu = (eps^2 / 2) * int m(x) dx` and
//! `nu = (eps^3 / 2) * int m(x)^2 dx`. Each sample draws `x` uniformly and
//! two independent unbiased estimates of `m(x)`; their mean feeds `mu` and
//! their product feeds `nu`.
//!
//! `m(x)` is estimated per proposal box: the bond annulus around `x` is
//! clipped to the radii the box can reach and to the angular sector it
//! subtends, and one point is drawn from that clipped sector.

use std::f64::consts::PI;

use rand::Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::BondSpec;
use crate::construction::{strip_region, DistanceClass};
use crate::error::{Error, Result};
use crate::poisson::sample_uniform;
use crate::regions::{circle_radius, BoundingBox, Point, Region};
use crate::seed::Seed;

pub const MIN_SAMPLES: u64 = 10_000;
pub const MAX_REL_STDERR: f64 = 0.05;
const CHUNK: u64 = 16_384;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct MuNuEstimate {
    pub mu: f64,
    pub nu: f64,
    pub mu_stderr: f64,
    pub nu_stderr: f64,
    pub samples: u64,
}

/// Clipped annular sector around a fixed centre.
struct Sector {
    r0: f64,
    r1: f64,
    theta0: f64,
    theta1: f64,
}

impl Sector {
    fn around(x: Point, b: &BoundingBox, bond: &BondSpec) -> Option<Self> {
        let r0 = bond.lo.max(b.min_distance(x));
        let r1 = bond.hi.min(b.max_distance(x));
        if r0 >= r1 {
            return None;
        }
        let (theta0, theta1) = if b.contains(x) {
            (0.0, 2.0 * PI)
        } else {
            let centre = centre_angle(x, b).unwrap_or(0.0);
            let mut lo = 0.0f64;
            let mut hi = 0.0f64;
            for c in b.corners() {
                let d = wrap((c.y - x.y).atan2(c.x - x.x) - centre);
                lo = lo.min(d);
                hi = hi.max(d);
            }
            (centre + lo, centre + hi)
        };
        Some(Self { r0, r1, theta0, theta1 })
    }

    fn area(&self) -> f64 {
        0.5 * (self.theta1 - self.theta0) * (self.r1 * self.r1 - self.r0 * self.r0)
    }

    fn sample<R: Rng + ?Sized>(&self, x: Point, rng: &mut R) -> Point {
        let u: f64 = rng.random();
        let r = (self.r0 * self.r0 + u * (self.r1 * self.r1 - self.r0 * self.r0)).sqrt();
        let theta = self.theta0 + rng.random::<f64>() * (self.theta1 - self.theta0);
        Point::new(x.x + r * theta.cos(), x.y + r * theta.sin())
    }
}

fn centre_angle(x: Point, b: &BoundingBox) -> Option<f64> {
    let cx = 0.5 * (b.min_x + b.max_x) - x.x;
    let cy = 0.5 * (b.min_y + b.max_y) - x.y;
    (cx != 0.0 || cy != 0.0).then(|| cy.atan2(cx))
}

fn wrap(a: f64) -> f64 {
    let t = (a + PI).rem_euclid(2.0 * PI) - PI;
    if t == -PI {
        PI
    } else {
        t
    }
}

fn bond_area_estimate<R: Rng + ?Sized>(
    x: Point,
    region: &Region,
    boxes: &[BoundingBox],
    bond: &BondSpec,
    rng: &mut R,
) -> f64 {
    let mut total = 0.0;
    for b in boxes {
        if let Some(s) = Sector::around(x, b, bond) {
            let y = s.sample(x, rng);
            if b.contains(y) && region.contains(y) && bond.contains(x.distance(y)) {
                total += s.area();
            }
        }
    }
    total
}

#[derive(Default, Clone, Copy)]
struct Moments {
    n: u64,
    mu_sum: f64,
    mu_sq: f64,
    nu_sum: f64,
    nu_sq: f64,
}

impl Moments {
    fn merge(self, o: Moments) -> Moments {
        Moments {
            n: self.n + o.n,
            mu_sum: self.mu_sum + o.mu_sum,
            mu_sq: self.mu_sq + o.mu_sq,
            nu_sum: self.nu_sum + o.nu_sum,
            nu_sq: self.nu_sq + o.nu_sq,
        }
    }

    fn mean_and_stderr(sum: f64, sq: f64, n: u64) -> (f64, f64) {
        let nf = n as f64;
        let mean = sum / nf;
        let var = ((sq / nf - mean * mean) * nf / (nf - 1.0)).max(0.0);
        (mean, (var / nf).sqrt())
    }
}

/// Fails when the relative stderr of `mu` exceeds 5%, or when the stderr of
/// `nu` exceeds 5% of `max(mu, nu)`.
pub fn estimate_mu_nu(
    region: &Region,
    epsilon: f64,
    bond: &BondSpec,
    samples: u64,
    seed: &Seed,
) -> Result<MuNuEstimate> {
    let est = estimate_unchecked(region, epsilon, bond, samples, seed)?;
    if est.mu > 0.0 && est.mu_stderr > MAX_REL_STDERR * est.mu {
        return Err(Error::StderrTooLarge {
            quantity: "mu",
            rel: est.mu_stderr / est.mu,
            max: MAX_REL_STDERR,
        });
    }
    let scale = est.mu.max(est.nu);
    if scale > 0.0 && est.nu_stderr > MAX_REL_STDERR * scale {
        return Err(Error::StderrTooLarge {
            quantity: "nu",
            rel: est.nu_stderr / scale,
            max: MAX_REL_STDERR,
        });
    }
    Ok(est)
}

/// [`estimate_mu_nu`] without the stderr gate.
pub fn estimate_unchecked(
    region: &Region,
    epsilon: f64,
    bond: &BondSpec,
    samples: u64,
    seed: &Seed,
) -> Result<MuNuEstimate> {
    region.validate()?;
    if samples < MIN_SAMPLES {
        return Err(Error::InvalidParameter(format!(
            "need at least {MIN_SAMPLES} samples, got {samples}"
        )));
    }
    if !(epsilon >= 0.0 && epsilon.is_finite()) {
        return Err(Error::InvalidParameter(format!(
            "density must be finite and >= 0, got {epsilon}"
        )));
    }
    let area = region.area()?;
    let boxes = region.proposal_boxes();
    let chunks = samples.div_ceil(CHUNK);
    let mu_scale = epsilon * epsilon * area / 4.0;
    let nu_scale = epsilon.powi(3) * area / 2.0;

    let parts = (0..chunks)
        .into_par_iter()
        .map(|c| -> Result<Moments> {
            let len = CHUNK.min(samples - c * CHUNK);
            let mut rng = seed.derive(c).rng();
            let xs = sample_uniform(region, len as usize, &mut rng)?;
            let mut m = Moments::default();
            for x in xs {
                let a = bond_area_estimate(x, region, &boxes, bond, &mut rng);
                let b = bond_area_estimate(x, region, &boxes, bond, &mut rng);
                let mu = mu_scale * (a + b);
                let nu = nu_scale * a * b;
                m.n += 1;
                m.mu_sum += mu;
                m.mu_sq += mu * mu;
                m.nu_sum += nu;
                m.nu_sq += nu * nu;
            }
            Ok(m)
        })
        .collect::<Result<Vec<_>>>()?;
    let total = parts.into_iter().fold(Moments::default(), Moments::merge);
    let (mu, mu_stderr) = Moments::mean_and_stderr(total.mu_sum, total.mu_sq, total.n);
    let (nu, nu_stderr) = Moments::mean_and_stderr(total.nu_sum, total.nu_sq, total.n);
    Ok(MuNuEstimate {
        mu,
        nu,
        mu_stderr,
        nu_stderr,
        samples,
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ScalingRow {
    pub j: u64,
    pub k: u32,
    pub mu: f64,
    pub mu_stderr: f64,
    pub nu: f64,
    /// Growth term the expected bond count should track, without constants.
    pub order: f64,
    pub ratio: f64,
    pub nu_over_mu: f64,
}

/// Expected bond counts for the canonical intervals `[j, j + 2^-k)`.
///
/// Moderate distances are measured on the rectangle strip with order
/// `eps^2 n min(j, n^{3/7}) 2^-k`; large distances on the polar lobes with
/// order `eps^2 n^{6/7} (D - j)^{5/4} 2^-k`.
pub fn mu_scaling_survey(
    n: u64,
    epsilon: f64,
    class: DistanceClass,
    grid: &[(u64, u32)],
    samples: u64,
    seed: &Seed,
) -> Result<Vec<ScalingRow>> {
    let nf = n as f64;
    let diameter = 2.0 * circle_radius(n);
    let region = match class {
        DistanceClass::Moderate => strip_region(n),
        DistanceClass::Large => Region::polar_lobes(n)?,
        DistanceClass::ExtraLarge => {
            return Err(Error::InvalidParameter(
                "the survey covers moderate and large distances".into(),
            ))
        }
    };
    grid.iter()
        .map(|&(j, k)| {
            let width = (-(k as f64)).exp2();
            let bond = BondSpec::new(j as f64, j as f64 + width)?;
            let est = estimate_mu_nu(&region, epsilon, &bond, samples, &seed.derive(format!("{j}-{k}")))?;
            let order = match class {
                DistanceClass::Moderate => epsilon * epsilon * nf * (j as f64).min(nf.powf(3.0 / 7.0)) * width,
                _ => epsilon * epsilon * nf.powf(6.0 / 7.0) * (diameter - j as f64).powf(1.25) * width,
            };
            Ok(ScalingRow {
                j,
                k,
                mu: est.mu,
                mu_stderr: est.mu_stderr,
                nu: est.nu,
                order,
                ratio: est.mu / order,
                nu_over_mu: if est.mu > 0.0 { est.nu / est.mu } else { 0.0 },
            })
        })
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn sector_area_of_full_annulus() {
        let b = BoundingBox::centered(10.0, 10.0);
        let s = Sector::around(Point::ORIGIN, &b, &BondSpec::new(1.0, 2.0).unwrap()).unwrap();
        assert!((s.area() - 3.0 * PI).abs() < 1e-12);
    }

    #[test]
    fn sector_covers_box_from_outside() {
        let b = BoundingBox::new(5.0, -1.0, 6.0, 1.0);
        let bond = BondSpec::new(0.0, 100.0).unwrap();
        let x = Point::new(-3.0, 0.5);
        let s = Sector::around(x, &b, &bond).unwrap();
        let mut rng = Seed::new(3).rng();
        for _ in 0..10_000 {
            let p = b.sample(&mut rng);
            let r = x.distance(p);
            let t = (p.y - x.y).atan2(p.x - x.x);
            assert!(r >= s.r0 && r <= s.r1);
            assert!(t >= s.theta0 - 1e-12 && t <= s.theta1 + 1e-12);
        }
    }

    #[test]
    fn sector_wraps_across_negative_x_axis() {
        // box straddles angle pi as seen from x
        let b = BoundingBox::new(-6.0, -1.0, -5.0, 1.0);
        let s = Sector::around(Point::ORIGIN, &b, &BondSpec::new(0.0, 100.0).unwrap()).unwrap();
        assert!(s.theta1 - s.theta0 < 1.0);
        assert!(s.theta0 < PI && s.theta1 > PI);
    }

    #[test]
    fn unreachable_box_is_skipped() {
        let b = BoundingBox::centered(0.2, 0.2);
        assert!(Sector::around(Point::ORIGIN, &b, &BondSpec::new(1.0, 2.0).unwrap()).is_none());
    }

    #[test]
    fn deterministic_and_sample_floor() {
        let sq = Region::unit_square();
        let bond = BondSpec::new(0.4, 0.5).unwrap();
        let a = estimate_mu_nu(&sq, 5.0, &bond, 20_000, &Seed::new(1)).unwrap();
        let b = estimate_mu_nu(&sq, 5.0, &bond, 20_000, &Seed::new(1)).unwrap();
        assert_eq!(a, b);
        assert!(estimate_mu_nu(&sq, 5.0, &bond, 9_999, &Seed::new(1)).is_err());
    }
}
