//! Sorted all-pairs distance spectra and the squared-gap objective.

mod engine;

use std::io::{Read, Write};

pub use engine::{
    pair_count, sorted_distances, SortedDistances, SpectrumConfig, DEFAULT_MAX_PAIRS, DEFAULT_MEMORY_BUDGET,
};

use crate::error::{Error, Result};
use crate::regions::Point;

/// All pairwise distances of a point set, ascending.
#[derive(Debug, Clone, PartialEq)]
pub struct DistanceSpectrum {
    distances: Vec<f64>,
    point_count: usize,
}

impl DistanceSpectrum {
    /// Wraps an already sorted list. Fails if the list is not ascending or
    /// holds non-finite values.
    pub fn from_sorted(distances: Vec<f64>, point_count: usize) -> Result<Self> {
        if distances.iter().any(|d| !d.is_finite()) {
            return Err(Error::InvalidParameter("spectrum holds non-finite values".into()));
        }
        if distances.windows(2).any(|w| w[0] > w[1]) {
            return Err(Error::InvalidParameter("spectrum is not sorted".into()));
        }
        Ok(Self { distances, point_count })
    }

    /// Sorts arbitrary values into a spectrum (test and tooling helper).
    pub fn from_unsorted(mut distances: Vec<f64>) -> Result<Self> {
        distances.sort_by(f64::total_cmp);
        Self::from_sorted(distances, 0)
    }

    pub fn distances(&self) -> &[f64] {
        &self.distances
    }

    pub fn len(&self) -> usize {
        self.distances.len()
    }

    pub fn is_empty(&self) -> bool {
        self.distances.is_empty()
    }

    pub fn point_count(&self) -> usize {
        self.point_count
    }

    pub fn min(&self) -> Option<f64> {
        self.distances.first().copied()
    }

    pub fn max(&self) -> Option<f64> {
        self.distances.last().copied()
    }

    pub fn into_vec(self) -> Vec<f64> {
        self.distances
    }
}

/// Exact sorted spectrum with the default engine configuration.
pub fn all_pair_distances(points: &[Point]) -> Result<DistanceSpectrum> {
    all_pair_distances_with(points, &SpectrumConfig::default())
}

pub fn all_pair_distances_with(points: &[Point], config: &SpectrumConfig) -> Result<DistanceSpectrum> {
    if points.len() < 2 {
        return Err(Error::InvalidParameter("a spectrum needs at least two points".into()));
    }
    let stream = sorted_distances(points, config)?;
    let mut distances = Vec::with_capacity(stream.total() as usize);
    for d in stream {
        distances.push(d?);
    }
    Ok(DistanceSpectrum {
        distances,
        point_count: points.len(),
    })
}

/// Neumaier-compensated running sum.
#[derive(Debug, Clone, Copy, Default)]
pub struct CompensatedSum {
    sum: f64,
    compensation: f64,
}

impl CompensatedSum {
    pub fn add(&mut self, x: f64) {
        let t = self.sum + x;
        if self.sum.abs() >= x.abs() {
            self.compensation += (self.sum - t) + x;
        } else {
            self.compensation += (x - t) + self.sum;
        }
        self.sum = t;
    }

    pub fn value(&self) -> f64 {
        self.sum + self.compensation
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct GapStats {
    pub gap_sum_sq: f64,
    pub max_gap: f64,
    pub gap_count: u64,
}

/// Streaming accumulator for [`GapStats`] plus the spectrum extremes.
#[derive(Debug, Clone, Default)]
pub struct GapAccumulator {
    first: Option<f64>,
    prev: Option<f64>,
    sum: CompensatedSum,
    max_gap: f64,
    count: u64,
}

impl GapAccumulator {
    pub fn push(&mut self, d: f64) {
        if let Some(prev) = self.prev {
            let gap = d - prev;
            self.sum.add(gap * gap);
            self.max_gap = self.max_gap.max(gap);
            self.count += 1;
        } else {
            self.first = Some(d);
        }
        self.prev = Some(d);
    }

    pub fn first(&self) -> Option<f64> {
        self.first
    }

    pub fn last(&self) -> Option<f64> {
        self.prev
    }

    pub fn finish(&self) -> GapStats {
        GapStats {
            gap_sum_sq: self.sum.value(),
            max_gap: self.max_gap,
            gap_count: self.count,
        }
    }
}

/// `sum (d_{i+1} - d_i)^2` and the largest gap.
pub fn gap_stats(spectrum: &DistanceSpectrum) -> GapStats {
    let mut acc = GapAccumulator::default();
    for &d in &spectrum.distances {
        acc.push(d);
    }
    acc.finish()
}

/// Number of distances in the closed range `[lo, hi]`.
pub fn count_in_range(spectrum: &DistanceSpectrum, lo: f64, hi: f64) -> Result<usize> {
    if lo.is_nan() || hi.is_nan() || lo > hi {
        return Err(Error::InvalidParameter(format!("empty range [{lo}, {hi}]")));
    }
    let d = &spectrum.distances;
    let start = d.partition_point(|&x| x < lo);
    let end = d.partition_point(|&x| x <= hi);
    Ok(end - start)
}

/// `(diameter - d1)^2 / (m - 1)`: the squared-gap sum of `m` equally
/// spaced values from `d1` to `diameter`, which no spectrum can beat.
pub fn equal_spacing_lower_bound(diameter: f64, m: u64, d1: f64) -> Result<f64> {
    if m < 2 {
        return Err(Error::InvalidParameter(format!("need m >= 2, got {m}")));
    }
    if !(diameter >= d1 && d1 >= 0.0) {
        return Err(Error::InvalidParameter(format!(
            "need diameter >= d1 >= 0, got {diameter}, {d1}"
        )));
    }
    let span = diameter - d1;
    Ok(span * span / (m - 1) as f64)
}

/// Binary dump: little-endian `u64` count, then that many little-endian
/// `f64` values in ascending order.
pub fn write_dump<W: Write, I: IntoIterator<Item = Result<f64>>>(out: &mut W, count: u64, values: I) -> Result<()> {
    out.write_all(&count.to_le_bytes())?;
    let mut written = 0u64;
    for v in values {
        out.write_all(&v?.to_le_bytes())?;
        written += 1;
    }
    if written != count {
        return Err(Error::Invariant(format!(
            "dump header says {count} values, wrote {written}"
        )));
    }
    Ok(())
}

pub fn read_dump<R: Read>(input: &mut R) -> Result<DistanceSpectrum> {
    let mut header = [0u8; 8];
    input.read_exact(&mut header)?;
    let count = u64::from_le_bytes(header);
    let mut bytes = Vec::new();
    input.read_to_end(&mut bytes)?;
    if bytes.len() as u64 != count * 8 {
        return Err(Error::InvalidParameter(format!(
            "dump header says {count} values but body has {} bytes",
            bytes.len()
        )));
    }
    let distances = bytes
        .chunks_exact(8)
        .map(|c| f64::from_le_bytes(c.try_into().expect("chunk of 8")))
        .collect();
    DistanceSpectrum::from_sorted(distances, 0)
}
