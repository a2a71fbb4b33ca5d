use std::io::{Read, Write};

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::spectrum::equal_spacing_lower_bound;

/// Tolerance on the minimum pairwise distance; covers the rounding of a
/// single distance evaluation.
pub const MIN_DISTANCE_TOL: f64 = 1e-12;

/// One construction run. Field order is the CSV column order.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunRecord {
    pub n_param: u64,
    pub epsilon: f64,
    pub seed: u64,
    pub realized_points: u64,
    pub diameter_nominal: f64,
    pub d_min: f64,
    pub d_max: f64,
    pub gap_sum_sq: f64,
    pub max_gap: f64,
    pub count_top_interval: u64,
    pub eq7_holds: bool,
    pub deleted_fraction_p1: f64,
    pub deleted_fraction_p2: f64,
    pub elapsed_ms: u64,
}

impl RunRecord {
    pub fn distance_count(&self) -> u64 {
        self.realized_points * self.realized_points.saturating_sub(1) / 2
    }

    /// `gap_sum_sq * n^{6/7}`.
    pub fn prefactor(&self) -> f64 {
        self.gap_sum_sq * (self.n_param as f64).powf(6.0 / 7.0)
    }

    /// `(d_max - d_min)^2 / (m - 1)`.
    pub fn lower_bound(&self) -> Result<f64> {
        equal_spacing_lower_bound(self.d_max, self.distance_count(), self.d_min)
    }

    pub fn check_invariants(&self) -> Result<()> {
        if self.d_min < 1.0 - MIN_DISTANCE_TOL {
            return Err(Error::Invariant(format!("minimum distance {} is below 1", self.d_min)));
        }
        let bound = self.lower_bound()?;
        if self.gap_sum_sq < bound {
            return Err(Error::Invariant(format!(
                "gap sum {} is below the equal-spacing bound {bound}",
                self.gap_sum_sq
            )));
        }
        if !self.eq7_holds {
            return Err(Error::Invariant("empty-interval audit failed".into()));
        }
        Ok(())
    }

    /// Same record with the timing zeroed, for determinism comparisons.
    pub fn without_timing(&self) -> RunRecord {
        RunRecord {
            elapsed_ms: 0,
            ..self.clone()
        }
    }
}

/// JSON form: the CSV fields plus provenance of the build and config.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunRecordJson {
    #[serde(flatten)]
    pub record: RunRecord,
    pub module_version: String,
    pub config_hash: String,
}

impl RunRecordJson {
    pub fn new(record: RunRecord, config_hash: String) -> Self {
        Self {
            record,
            module_version: env!("CARGO_PKG_VERSION").to_string(),
            config_hash,
        }
    }
}

pub fn write_records_csv<W: Write>(records: &[RunRecord], out: W) -> Result<()> {
    let mut w = csv::Writer::from_writer(out);
    for r in records {
        w.serialize(r)?;
    }
    w.flush()?;
    Ok(())
}

pub fn read_records_csv<R: Read>(input: R) -> Result<Vec<RunRecord>> {
    csv::Reader::from_reader(input)
        .deserialize()
        .map(|r| r.map_err(Error::from))
        .collect()
}
