//! Bonds, vees and the probability that a Poisson sample has no bond.

mod integrate;
mod janson;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

pub use integrate::{
    estimate_mu_nu, estimate_unchecked, mu_scaling_survey, MuNuEstimate, ScalingRow, MAX_REL_STDERR, MIN_SAMPLES,
};
pub use janson::{
    janson_exact, janson_survey, random_instance, DiscreteJansonInstance, JansonResult, JansonSummary,
    COMPARISON_SLACK, MAX_GROUND_SET,
};

use crate::error::{Error, Result};
use crate::grid::UniformGrid;
use crate::poisson::sample_poisson;
use crate::regions::{Density, Point, Region};
use crate::seed::Seed;

/// Two-sided 99% standard normal quantile.
pub const Z_99: f64 = 2.5758293035489004;
pub const MIN_TRIALS: u64 = 100;

/// Samples with at most this many points are checked pair by pair.
const BRUTE_FORCE_MAX: usize = 64;

/// Points `x`, `y` form a bond iff `lo <= |x - y| < hi`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct BondSpec {
    pub lo: f64,
    pub hi: f64,
}

impl BondSpec {
    pub fn new(lo: f64, hi: f64) -> Result<Self> {
        if !(lo.is_finite() && hi.is_finite() && lo >= 0.0 && lo < hi) {
            return Err(Error::InvalidParameter(format!(
                "bond interval must satisfy 0 <= lo < hi, got [{lo}, {hi})"
            )));
        }
        Ok(Self { lo, hi })
    }

    pub fn contains(&self, d: f64) -> bool {
        self.lo <= d && d < self.hi
    }
}

pub fn has_bond(points: &[Point], bond: &BondSpec) -> bool {
    if points.len() <= BRUTE_FORCE_MAX {
        return points
            .iter()
            .enumerate()
            .any(|(i, &p)| points[i + 1..].iter().any(|&q| bond.contains(p.distance(q))));
    }
    let grid = UniformGrid::new(points, bond.hi);
    !grid.visit_pairs_in_range(bond.lo, bond.hi, |_, _, _| false)
}

/// Wilson score interval at 99%, returned as the half-width of the
/// smallest interval centred on `p_hat` that contains it.
pub fn wilson_halfwidth(successes: u64, trials: u64) -> f64 {
    let n = trials as f64;
    let p = successes as f64 / n;
    let z2 = Z_99 * Z_99;
    let denom = 1.0 + z2 / n;
    let centre = (p + z2 / (2.0 * n)) / denom;
    let half = Z_99 / denom * (p * (1.0 - p) / n + z2 / (4.0 * n * n)).sqrt();
    (centre + half - p).max(p - (centre - half))
}

/// Fraction of `trials` independent Poisson samples with no bond, and its
/// 99% confidence half-width.
pub fn empirical_no_bond_prob(
    region: &Region,
    epsilon: f64,
    bond: &BondSpec,
    trials: u64,
    seed: &Seed,
) -> Result<(f64, f64)> {
    if trials < MIN_TRIALS {
        return Err(Error::InvalidParameter(format!(
            "need at least {MIN_TRIALS} trials, got {trials}"
        )));
    }
    let density = Density::new(epsilon)?;
    let empty = (0..trials)
        .into_par_iter()
        .map(|t| -> Result<u64> {
            let sample = sample_poisson(region, density, &seed.derive(t))?;
            Ok(u64::from(!has_bond(&sample.points, bond)))
        })
        .try_reduce(|| 0, |a, b| Ok(a + b))?;
    Ok((empty as f64 / trials as f64, wilson_halfwidth(empty, trials)))
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct NoBondsVerdict {
    pub p_hat: f64,
    pub ci_halfwidth: f64,
    /// `e^{-mu}`.
    pub lower: f64,
    /// `e^{-mu + nu}`.
    pub upper: f64,
    /// Bracket after moving `mu` and `nu` by three standard errors.
    pub inflated_lower: f64,
    pub inflated_upper: f64,
    pub pass: bool,
    /// Same test with the upper end `e^{-mu + nu/2}`.
    pub half_nu_pass: bool,
}

/// Passes iff `[p_hat - ci, p_hat + ci]` meets the three-sigma inflated
/// bracket `[e^{-(mu + 3 s_mu)}, e^{-(mu - 3 s_mu) + (nu + 3 s_nu)}]`.
pub fn check_nobonds(est: &MuNuEstimate, p_hat: f64, ci: f64) -> NoBondsVerdict {
    let mu_hi = est.mu + 3.0 * est.mu_stderr;
    let mu_lo = (est.mu - 3.0 * est.mu_stderr).max(0.0);
    let nu_hi = est.nu + 3.0 * est.nu_stderr;
    let inflated_lower = (-mu_hi).exp();
    let inflated_upper = (-mu_lo + nu_hi).exp();
    let half_upper = (-mu_lo + 0.5 * nu_hi).exp();
    let meets = |lo: f64, hi: f64| p_hat - ci <= hi && p_hat + ci >= lo;
    NoBondsVerdict {
        p_hat,
        ci_halfwidth: ci,
        lower: (-est.mu).exp(),
        upper: (-est.mu + est.nu).exp(),
        inflated_lower,
        inflated_upper,
        pass: meets(inflated_lower, inflated_upper),
        half_nu_pass: meets(inflated_lower, half_upper),
    }
}
