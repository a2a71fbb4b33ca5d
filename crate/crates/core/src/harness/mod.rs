//! Experiment orchestration: single construction runs, the scaling sweep
//! and its exponent fit.

mod config;
mod fit;
mod record;

use std::time::Instant;

use serde::{Deserialize, Serialize};

pub use config::{
    parse_count, parse_grid, parse_region, Config, MemoryConfig, OutputConfig, ScalingConfig, DEFAULT_GRID,
    DEFAULT_SEEDS_PER_N, SCALING_MEMORY_BUDGET,
};
pub use fit::{fit_exponent, PowerFit};
pub use record::{read_records_csv, write_records_csv, RunRecord, RunRecordJson, MIN_DISTANCE_TOL};

use crate::canonical::Eq7Auditor;
use crate::construction::{assemble, Construction, Source};
use crate::error::{Error, Result};
use crate::seed::Seed;
use crate::spectrum::{sorted_distances, GapAccumulator, SpectrumConfig};

/// Slopes against `n` and against the realized point count further apart
/// than this are flagged.
pub const SLOPE_DISCREPANCY_FLAG: f64 = 0.1;

/// Everything measured on one construction, streamed from the sorted
/// spectrum without materializing it.
pub fn measure_construction(c: &Construction, spectrum: &SpectrumConfig) -> Result<RunRecord> {
    let start = Instant::now();
    let points = c.raw_points();
    let top_lo = c.diameter_nominal - 1.0;
    let mut gaps = GapAccumulator::default();
    let mut audit = Eq7Auditor::new();
    let mut top = 0u64;
    for d in sorted_distances(&points, spectrum)? {
        let d = d?;
        gaps.push(d);
        audit.push(d)?;
        if d >= top_lo && d <= c.diameter_nominal {
            top += 1;
        }
    }
    let stats = gaps.finish();
    let (d_min, d_max) = match (gaps.first(), gaps.last()) {
        (Some(a), Some(b)) => (a, b),
        _ => return Err(Error::InvalidParameter("construction has fewer than two points".into())),
    };
    Ok(RunRecord {
        n_param: c.n_param,
        epsilon: c.epsilon,
        seed: c.seed.value,
        realized_points: c.len() as u64,
        diameter_nominal: c.diameter_nominal,
        d_min,
        d_max,
        gap_sum_sq: stats.gap_sum_sq,
        max_gap: stats.max_gap,
        count_top_interval: top,
        eq7_holds: audit.finish().holds,
        deleted_fraction_p1: c.deleted_fraction(Source::P1),
        deleted_fraction_p2: c.deleted_fraction(Source::P2),
        elapsed_ms: start.elapsed().as_millis() as u64,
    })
}

/// Builds the construction for `(n, epsilon, seed)` and measures it. The
/// record's invariants are checked before it is returned.
pub fn run_construct(n: u64, epsilon: f64, seed: u64, spectrum: &SpectrumConfig) -> Result<RunRecord> {
    let start = Instant::now();
    let c = assemble(n, epsilon, &Seed::new(seed))?;
    let mut record = measure_construction(&c, spectrum)?;
    record.elapsed_ms = start.elapsed().as_millis() as u64;
    record.check_invariants()?;
    Ok(record)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ScalingFit {
    /// Fit of mean gap-sum against `n`.
    pub slope: f64,
    pub intercept: f64,
    pub r_squared: f64,
    /// Fit of mean gap-sum against the mean realized point count.
    pub slope_realized: f64,
    pub intercept_realized: f64,
    pub r_squared_realized: f64,
    pub slope_discrepancy_flagged: bool,
    /// Fit of the mean count of distances in `[D - 1, D]` against `D`.
    pub top_interval_slope: f64,
    pub n_grid: Vec<u64>,
    pub seeds_per_n: u64,
}

/// Fits the per-`n` means of a finished sweep.
pub fn fit_scaling(records: &[RunRecord], n_grid: &[u64], seeds_per_n: u64) -> Result<ScalingFit> {
    if n_grid.len() < 4 {
        return Err(Error::InvalidParameter(format!(
            "need >= 4 grid points, got {}",
            n_grid.len()
        )));
    }
    let mut by_n = Vec::new();
    let mut by_points = Vec::new();
    let mut top = Vec::new();
    for &n in n_grid {
        let rs: Vec<&RunRecord> = records.iter().filter(|r| r.n_param == n).collect();
        if rs.is_empty() {
            return Err(Error::InvalidParameter(format!("no records for n = {n}")));
        }
        let k = rs.len() as f64;
        let gap = rs.iter().map(|r| r.gap_sum_sq).sum::<f64>() / k;
        let points = rs.iter().map(|r| r.realized_points as f64).sum::<f64>() / k;
        let count = rs.iter().map(|r| r.count_top_interval as f64).sum::<f64>() / k;
        by_n.push((n as f64, gap));
        by_points.push((points, gap));
        top.push((rs[0].diameter_nominal, count));
    }
    let f = fit_exponent(&by_n)?;
    let g = fit_exponent(&by_points)?;
    let t = fit_exponent(&top)?;
    Ok(ScalingFit {
        slope: f.slope,
        intercept: f.intercept,
        r_squared: f.r_squared,
        slope_realized: g.slope,
        intercept_realized: g.intercept,
        r_squared_realized: g.r_squared,
        slope_discrepancy_flagged: (f.slope - g.slope).abs() > SLOPE_DISCREPANCY_FLAG,
        top_interval_slope: t.slope,
        n_grid: n_grid.to_vec(),
        seeds_per_n,
    })
}

/// Runs every `(n, seed)` with seeds `base_seed .. base_seed + seeds_per_n`
/// and fits the result. Runs go one at a time; each run parallelizes
/// internally, which keeps peak memory at one spectrum.
pub fn run_scaling(
    n_grid: &[u64],
    seeds_per_n: u64,
    epsilon: f64,
    base_seed: u64,
    spectrum: &SpectrumConfig,
    mut on_record: impl FnMut(&RunRecord),
) -> Result<(ScalingFit, Vec<RunRecord>)> {
    if n_grid.len() < 4 || n_grid.windows(2).any(|w| w[0] >= w[1]) {
        return Err(Error::InvalidParameter(format!(
            "grid must hold >= 4 ascending values, got {n_grid:?}"
        )));
    }
    if seeds_per_n < 3 {
        return Err(Error::InvalidParameter(format!(
            "need >= 3 seeds per n, got {seeds_per_n}"
        )));
    }
    let mut records = Vec::new();
    for &n in n_grid {
        for s in 0..seeds_per_n {
            let r = run_construct(n, epsilon, base_seed + s, spectrum)?;
            on_record(&r);
            records.push(r);
        }
    }
    Ok((fit_scaling(&records, n_grid, seeds_per_n)?, records))
}
