//! Exhaustive check of Janson's inequality for edge systems on small graphs.

use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::seed::Seed;

pub const MAX_GROUND_SET: usize = 20;

/// Relative slack on both inequality comparisons.
pub const COMPARISON_SLACK: f64 = 1e-9;

/// A random subset of `0..probabilities.len()` (each element kept
/// independently) and a graph on the same ground set.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DiscreteJansonInstance {
    pub probabilities: Vec<f64>,
    pub edges: Vec<(usize, usize)>,
}

impl DiscreteJansonInstance {
    pub fn new(probabilities: Vec<f64>, edges: Vec<(usize, usize)>) -> Result<Self> {
        let inst = Self { probabilities, edges };
        inst.validate()?;
        Ok(inst)
    }

    pub fn ground_set_size(&self) -> usize {
        self.probabilities.len()
    }

    fn validate(&self) -> Result<()> {
        let n = self.ground_set_size();
        if n > MAX_GROUND_SET {
            return Err(Error::GroundSetTooLarge(n));
        }
        if let Some(p) = self.probabilities.iter().find(|p| !(0.0..1.0).contains(*p)) {
            return Err(Error::InvalidParameter(format!("probability {p} is outside [0, 1)")));
        }
        let mut seen = std::collections::HashSet::new();
        for &(a, b) in &self.edges {
            if a >= n || b >= n || a == b {
                return Err(Error::InvalidParameter(format!("bad edge ({a}, {b}) on {n} vertices")));
            }
            if !seen.insert((a.min(b), a.max(b))) {
                return Err(Error::InvalidParameter(format!("duplicate edge ({a}, {b})")));
            }
        }
        Ok(())
    }

    fn adjacency(&self) -> Vec<u32> {
        let mut adj = vec![0u32; self.ground_set_size()];
        for &(a, b) in &self.edges {
            adj[a] |= 1 << b;
            adj[b] |= 1 << a;
        }
        adj
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct JansonResult {
    /// `prod (1 - p_x p_y)` over edges.
    pub m: f64,
    /// Expected number of vees: `sum p_x p_y p_z` over paths `y - x - z`.
    pub nu: f64,
    /// Probability that the sampled subset spans no edge.
    pub p_exact: f64,
    /// Largest edge probability `p_x p_y`.
    pub eps_hat: f64,
    /// `M e^{nu / (2 - 2 eps_hat)}`.
    pub upper: f64,
    /// `M <= p_exact <= upper`, with relative slack.
    pub bounds_hold: bool,
    /// `M e^{nu / (1 - eps_hat)}`: the same bound with each intersecting
    /// pair of edges counted in both orders.
    pub corrected_upper: f64,
    pub corrected_bound_holds: bool,
}

/// Probability that a random subset avoids every edge, by summing the
/// weights of all independent sets.
fn no_edge_probability(p: &[f64], adj: &[u32]) -> f64 {
    fn go(mask: u32, p: &[f64], adj: &[u32]) -> f64 {
        if mask == 0 {
            return 1.0;
        }
        let v = mask.trailing_zeros() as usize;
        let rest = mask & !(1 << v);
        let out = (1.0 - p[v]) * go(rest, p, adj);
        // v present: its neighbours must be absent
        let blocked = rest & adj[v];
        let mut absent = 1.0;
        let mut b = blocked;
        while b != 0 {
            let u = b.trailing_zeros() as usize;
            absent *= 1.0 - p[u];
            b &= b - 1;
        }
        out + p[v] * absent * go(rest & !blocked, p, adj)
    }
    let n = p.len();
    let full = if n == 32 { u32::MAX } else { (1u32 << n) - 1 };
    go(full, p, adj)
}

pub fn janson_exact(instance: &DiscreteJansonInstance) -> Result<JansonResult> {
    instance.validate()?;
    let p = &instance.probabilities;
    let adj = instance.adjacency();

    let mut m = 1.0;
    let mut eps_hat: f64 = 0.0;
    for &(a, b) in &instance.edges {
        let q = p[a] * p[b];
        m *= 1.0 - q;
        eps_hat = eps_hat.max(q);
    }

    let mut nu = 0.0;
    for (x, &nbrs) in adj.iter().enumerate() {
        let leaves: Vec<usize> = (0..p.len()).filter(|&y| nbrs & (1 << y) != 0).collect();
        for (i, &y) in leaves.iter().enumerate() {
            for &z in &leaves[i + 1..] {
                nu += p[x] * p[y] * p[z];
            }
        }
    }

    let p_exact = no_edge_probability(p, &adj);
    let upper = m * (nu / (2.0 - 2.0 * eps_hat)).exp();
    let corrected_upper = m * (nu / (1.0 - eps_hat)).exp();
    let lower_ok = m <= p_exact * (1.0 + COMPARISON_SLACK);
    Ok(JansonResult {
        m,
        nu,
        p_exact,
        eps_hat,
        upper,
        bounds_hold: lower_ok && p_exact <= upper * (1.0 + COMPARISON_SLACK),
        corrected_upper,
        corrected_bound_holds: lower_ok && p_exact <= corrected_upper * (1.0 + COMPARISON_SLACK),
    })
}

/// Random instance: ground set size uniform in `2..=max_ground_set`,
/// probabilities uniform in `[0, max_p]`, each edge present with a
/// per-instance density drawn uniformly from `[0.1, 0.9]`.
pub fn random_instance(max_ground_set: usize, max_p: f64, seed: &Seed) -> Result<DiscreteJansonInstance> {
    if !(2..=MAX_GROUND_SET).contains(&max_ground_set) {
        return Err(Error::InvalidParameter(format!(
            "max ground set must be in 2..={MAX_GROUND_SET}, got {max_ground_set}"
        )));
    }
    if !(0.0..1.0).contains(&max_p) {
        return Err(Error::InvalidParameter(format!(
            "max probability must be in [0, 1), got {max_p}"
        )));
    }
    let mut rng = seed.rng();
    let n = rng.random_range(2..=max_ground_set);
    let probabilities = (0..n).map(|_| rng.random::<f64>() * max_p).collect();
    let density = rng.random_range(0.1..0.9);
    let mut edges = Vec::new();
    for a in 0..n {
        for b in a + 1..n {
            if rng.random::<f64>() < density {
                edges.push((a, b));
            }
        }
    }
    DiscreteJansonInstance::new(probabilities, edges)
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct JansonSummary {
    pub instances: usize,
    pub violations: usize,
    pub lower_violations: usize,
    pub corrected_violations: usize,
    /// Largest `p_exact / upper` seen.
    pub worst_ratio: f64,
}

/// Checks `instances` random instances drawn from substreams of `seed`.
pub fn janson_survey(instances: usize, max_ground_set: usize, max_p: f64, seed: &Seed) -> Result<JansonSummary> {
    let mut summary = JansonSummary {
        instances,
        violations: 0,
        lower_violations: 0,
        corrected_violations: 0,
        worst_ratio: 0.0,
    };
    for i in 0..instances {
        let inst = random_instance(max_ground_set, max_p, &seed.derive(i))?;
        let r = janson_exact(&inst)?;
        if !r.bounds_hold {
            summary.violations += 1;
        }
        if r.m > r.p_exact * (1.0 + COMPARISON_SLACK) {
            summary.lower_violations += 1;
        }
        if !r.corrected_bound_holds {
            summary.corrected_violations += 1;
        }
        summary.worst_ratio = summary.worst_ratio.max(r.p_exact / r.upper);
    }
    Ok(summary)
}
