//! Dyadic subdivision of unit intervals and the empty-interval accounting
//! that bounds the squared-gap sum.
//!
//! The canonical interval `(j, k, l)` is `[j + (l-1) 2^-k, j + l 2^-k)` with
//! `j >= 1`, `k >= 0` and `1 <= l <= 2^k`. Every computation here works on
//! the offset `x - j`, which is exact in binary floating point for
//! `x` in `[j, j + 1]` and `j >= 1`, so containment tests never round.

use std::io::Write;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::construction::{classify_distance, DistanceClass};
use crate::error::{Error, Result};
use crate::regions::circle_radius;
use crate::spectrum::{CompensatedSum, DistanceSpectrum};

/// Deepest level handled; `l` must fit in a `u64` and offsets in 53 bits.
pub const MAX_LEVEL: u32 = 62;

/// Relative slack on the audit inequality. It absorbs rounding in the two
/// compensated sums; every individual term satisfies the inequality exactly.
pub const AUDIT_REL_SLACK: f64 = 1e-12;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct CanonicalInterval {
    pub j: u64,
    pub k: u32,
    pub l: u64,
}

impl CanonicalInterval {
    pub fn new(j: u64, k: u32, l: u64) -> Result<Self> {
        if j < 1 || k > MAX_LEVEL || l < 1 || l > (1u64 << k) {
            return Err(Error::InvalidParameter(format!(
                "invalid canonical interval ({j}, {k}, {l})"
            )));
        }
        Ok(Self { j, k, l })
    }

    pub fn length(&self) -> f64 {
        level_length(self.k)
    }

    /// Bounds relative to `j`, exact.
    pub fn offsets(&self) -> (f64, f64) {
        let step = self.length();
        ((self.l - 1) as f64 * step, self.l as f64 * step)
    }

    /// Half-open bounds `[lo, hi)`. Exact when `j` needs at most
    /// `52 - k` bits.
    pub fn bounds(&self) -> (f64, f64) {
        let (a, b) = self.offsets();
        (self.j as f64 + a, self.j as f64 + b)
    }

    fn bounds_exact(&self) -> bool {
        let (a, b) = self.offsets();
        let (lo, hi) = self.bounds();
        lo - self.j as f64 == a && hi - self.j as f64 == b
    }
}

pub fn interval_bounds(ci: &CanonicalInterval) -> (f64, f64) {
    ci.bounds()
}

fn level_length(k: u32) -> f64 {
    (-(k as f64)).exp2()
}

fn level_scale(k: u32) -> f64 {
    (k as f64).exp2()
}

/// Smallest-`k`, then smallest-`l` canonical interval inside the offset
/// range. With `open_left` the interval must start strictly after `lo_off`.
fn fit_in_unit(j: u64, lo_off: f64, hi_off: f64, open_left: bool) -> Option<CanonicalInterval> {
    for k in 0..=MAX_LEVEL {
        let scale = level_scale(k);
        let scaled = lo_off * scale;
        let first = if open_left { scaled.floor() + 1.0 } else { scaled.ceil() };
        if (first + 1.0) / scale <= hi_off {
            return Some(CanonicalInterval {
                j,
                k,
                l: first as u64 + 1,
            });
        }
    }
    None
}

/// A canonical interval inside `[lo, hi)` of length at least `(hi - lo)/4`:
/// the one with the smallest `k`, ties broken by the smallest `l`.
pub fn largest_canonical_subinterval(lo: f64, hi: f64) -> Result<CanonicalInterval> {
    if !(lo.is_finite() && hi.is_finite() && lo >= 1.0 && lo < hi && hi - lo <= 1.0) {
        return Err(Error::InvalidParameter(format!(
            "need 1 <= lo < hi <= lo + 1, got [{lo}, {hi})"
        )));
    }
    let j = lo.floor();
    if hi > j + 1.0 {
        return Err(Error::CrossesIntegerBoundary { lo, hi });
    }
    fit_in_unit(j as u64, lo - j, hi - j, false)
        .ok_or_else(|| Error::InvalidParameter(format!("[{lo}, {hi}) is too short for level {MAX_LEVEL}")))
}

/// True iff no distance lies in `[lo, hi)`.
pub fn is_empty(spectrum: &DistanceSpectrum, lo: f64, hi: f64) -> bool {
    let d = spectrum.distances();
    let i = d.partition_point(|&x| x < lo);
    i == d.len() || d[i] >= hi
}

#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
pub struct Eq7Audit {
    /// Sum of squared gaps over the whole spectrum.
    pub gap_sum_sq: f64,
    /// Sum of squared witness lengths over the whole spectrum.
    pub witness_sum_sq: f64,
    /// Gaps inside a single unit interval `[j, j+1]`.
    pub inner_gap_sum_sq: f64,
    pub inner_witness_sum_sq: f64,
    /// Gaps straddling an integer.
    pub crossing_gap_sum_sq: f64,
    pub crossing_witness_sum_sq: f64,
    pub crossing_gaps: u64,
    /// Gaps longer than one.
    pub long_gaps: u64,
    pub max_gap: f64,
    pub witnesses_disjoint: bool,
    /// `inner <= 16 inner_witness` and `crossing <= 64 crossing_witness`.
    pub holds: bool,
    /// The plain `gap_sum_sq <= 16 witness_sum_sq` comparison.
    pub holds_factor_16_overall: bool,
}

fn within(lhs: f64, factor: f64, rhs: f64) -> bool {
    lhs <= factor * rhs * (1.0 + AUDIT_REL_SLACK)
}

/// Witness search over a sorted stream. Feed distances in ascending order
/// with [`Eq7Auditor::push`].
#[derive(Debug, Default)]
pub struct Eq7Auditor {
    prev: Option<f64>,
    gap: CompensatedSum,
    witness: CompensatedSum,
    inner_gap: CompensatedSum,
    inner_witness: CompensatedSum,
    crossing_gap: CompensatedSum,
    crossing_witness: CompensatedSum,
    crossing_gaps: u64,
    long_gaps: u64,
    max_gap: f64,
    last_witness_hi: f64,
    disjoint: bool,
}

impl Eq7Auditor {
    pub fn new() -> Self {
        Self {
            disjoint: true,
            ..Self::default()
        }
    }

    pub fn push(&mut self, d: f64) -> Result<Option<CanonicalInterval>> {
        let prev = self.prev.replace(d);
        let Some(a) = prev else {
            if d < 1.0 {
                return Err(Error::InvalidParameter(format!("audit needs distances >= 1, got {d}")));
            }
            return Ok(None);
        };
        if d <= a {
            return Ok(None);
        }
        let witness = gap_witness(a, d)?;
        let gap = d - a;
        let g2 = gap * gap;
        let w = witness.length();
        let w2 = w * w;
        self.gap.add(g2);
        self.witness.add(w2);
        self.max_gap = self.max_gap.max(gap);
        if gap > 1.0 {
            self.long_gaps += 1;
        }
        if d > a.floor() + 1.0 {
            self.crossing_gaps += 1;
            self.crossing_gap.add(g2);
            self.crossing_witness.add(w2);
        } else {
            self.inner_gap.add(g2);
            self.inner_witness.add(w2);
        }
        let (lo, hi) = witness.bounds();
        if lo < self.last_witness_hi {
            self.disjoint = false;
        }
        self.last_witness_hi = hi;
        Ok(Some(witness))
    }

    pub fn finish(&self) -> Eq7Audit {
        let inner_ok = within(self.inner_gap.value(), 16.0, self.inner_witness.value());
        let crossing_ok = within(self.crossing_gap.value(), 64.0, self.crossing_witness.value());
        Eq7Audit {
            gap_sum_sq: self.gap.value(),
            witness_sum_sq: self.witness.value(),
            inner_gap_sum_sq: self.inner_gap.value(),
            inner_witness_sum_sq: self.inner_witness.value(),
            crossing_gap_sum_sq: self.crossing_gap.value(),
            crossing_witness_sum_sq: self.crossing_witness.value(),
            crossing_gaps: self.crossing_gaps,
            long_gaps: self.long_gaps,
            max_gap: self.max_gap,
            witnesses_disjoint: self.disjoint,
            holds: inner_ok && crossing_ok && self.disjoint,
            holds_factor_16_overall: within(self.gap.value(), 16.0, self.witness.value()),
        }
    }
}

/// Canonical witness inside the open gap `(a, b)`, `1 <= a < b`.
///
/// A gap inside one unit interval yields a witness of length > gap/4. A gap
/// straddling integers is cut at them and the longest piece is used, which
/// for gaps up to one loses at most another factor of two.
fn gap_witness(a: f64, b: f64) -> Result<CanonicalInterval> {
    let ja = a.floor();
    let witness = if b <= ja + 1.0 {
        fit_in_unit(ja as u64, a - ja, b - ja, true)
    } else {
        let jb = b.floor();
        let left = ja + 1.0 - a;
        let right = b - jb;
        if jb - ja >= 2.0 {
            // a full unit interval sits inside the gap
            Some(CanonicalInterval {
                j: ja as u64 + 1,
                k: 0,
                l: 1,
            })
        } else if left >= right {
            fit_in_unit(ja as u64, a - ja, 1.0, true)
        } else {
            fit_in_unit(jb as u64, 0.0, b - jb, false)
        }
    };
    let witness = witness.ok_or_else(|| Error::Invariant(format!("no canonical witness inside ({a}, {b})")))?;
    check_inside(&witness, a, b)?;
    Ok(witness)
}

fn check_inside(w: &CanonicalInterval, a: f64, b: f64) -> Result<()> {
    let j = w.j as f64;
    let (lo_off, hi_off) = w.offsets();
    let starts_after = a < j || a - j < lo_off;
    let ends_before = b >= j + 1.0 || hi_off <= b - j;
    if starts_after && ends_before {
        Ok(())
    } else {
        let (lo, hi) = w.bounds();
        Err(Error::WitnessNotEmpty {
            lo,
            hi,
            gap_lo: a,
            gap_hi: b,
        })
    }
}

/// Empty canonical witnesses for every positive gap of the spectrum.
pub fn audit_eq7(spectrum: &DistanceSpectrum) -> Result<Eq7Audit> {
    let mut auditor = Eq7Auditor::new();
    for &d in spectrum.distances() {
        if let Some(w) = auditor.push(d)? {
            if w.bounds_exact() {
                let (lo, hi) = w.bounds();
                if !is_empty(spectrum, lo, hi) {
                    return Err(Error::WitnessNotEmpty {
                        lo,
                        hi,
                        gap_lo: lo,
                        gap_hi: hi,
                    });
                }
            }
        }
    }
    Ok(auditor.finish())
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SurveyRow {
    pub class: DistanceClass,
    pub k: u32,
    pub count_empty: u64,
    pub sum_sq: f64,
}

/// `ceil((4/7) log2 n) + 8`.
pub fn default_k_max(n: u64) -> u32 {
    ((4.0 / 7.0) * (n as f64).log2()).ceil() as u32 + 8
}

/// Counts empty canonical intervals `I_{jkl}` for `1 <= j < D`, `k <= k_max`,
/// bucketed by the distance class of `j` and by `k`, with `sum |I|^2`.
pub fn empty_canonical_survey(spectrum: &DistanceSpectrum, n: u64, k_max: u32) -> Result<Vec<SurveyRow>> {
    if k_max > 40 {
        return Err(Error::InvalidParameter(format!("k_max must be <= 40, got {k_max}")));
    }
    let diameter = 2.0 * circle_radius(n);
    let j_end = diameter.ceil() as u64;
    let levels = k_max as usize + 1;
    let d = spectrum.distances();

    let per_j: Vec<(DistanceClass, Vec<u64>)> = (1..j_end)
        .into_par_iter()
        .map(|j| -> Result<(DistanceClass, Vec<u64>)> {
            let jf = j as f64;
            let start = d.partition_point(|&x| x < jf);
            let end = d.partition_point(|&x| x < jf + 1.0);
            let mut counts = vec![0u64; levels];
            survey_node(&d[start..end], jf, 0, 0.0, k_max, &mut counts);
            Ok((classify_distance(jf, n)?, counts))
        })
        .collect::<Result<_>>()?;

    let classes = [DistanceClass::Moderate, DistanceClass::Large, DistanceClass::ExtraLarge];
    let mut rows = Vec::new();
    for class in classes {
        for k in 0..levels {
            let count: u64 = per_j.iter().filter(|(c, _)| *c == class).map(|(_, v)| v[k]).sum();
            let len = level_length(k as u32);
            rows.push(SurveyRow {
                class,
                k: k as u32,
                count_empty: count,
                sum_sq: count as f64 * len * len,
            });
        }
    }
    Ok(rows)
}

/// `slice` holds the distances inside the node `[j + off, j + off + 2^-k)`.
fn survey_node(slice: &[f64], j: f64, k: u32, off: f64, k_max: u32, counts: &mut [u64]) {
    if slice.is_empty() {
        // every descendant down to k_max is empty too
        for (depth, c) in counts.iter_mut().enumerate().skip(k as usize) {
            *c += 1u64 << (depth as u32 - k);
        }
        return;
    }
    if k == k_max {
        return;
    }
    let mid = off + level_length(k + 1);
    let split = slice.partition_point(|&x| x - j < mid);
    survey_node(&slice[..split], j, k + 1, off, k_max, counts);
    survey_node(&slice[split..], j, k + 1, mid, k_max, counts);
}

pub fn write_survey_csv<W: Write>(rows: &[SurveyRow], out: W) -> Result<()> {
    let mut w = csv::Writer::from_writer(out);
    w.write_record(["class", "k", "count_empty", "sum_sq"])?;
    for r in rows {
        let class = match r.class {
            DistanceClass::Moderate => "moderate",
            DistanceClass::Large => "large",
            DistanceClass::ExtraLarge => "extra_large",
        };
        w.write_record([
            class.to_string(),
            r.k.to_string(),
            r.count_empty.to_string(),
            r.sum_sq.to_string(),
        ])?;
    }
    w.flush()?;
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;

    /// Every canonical interval in `[j, j+1)` up to level `k_max`.
    fn enumerate(j: u64, k_max: u32) -> Vec<CanonicalInterval> {
        let mut v = Vec::new();
        for k in 0..=k_max {
            for l in 1..=(1u64 << k) {
                v.push(CanonicalInterval { j, k, l });
            }
        }
        v
    }

    fn spec(v: &[f64]) -> DistanceSpectrum {
        DistanceSpectrum::from_sorted(v.to_vec(), 0).unwrap()
    }

    #[test]
    fn bounds_by_formula() {
        assert_eq!(CanonicalInterval::new(1, 0, 1).unwrap().bounds(), (1.0, 2.0));
        assert_eq!(CanonicalInterval::new(3, 2, 3).unwrap().bounds(), (3.5, 3.75));
        assert_eq!(CanonicalInterval::new(1, 3, 4).unwrap().bounds(), (1.375, 1.5));
        assert!(CanonicalInterval::new(0, 0, 1).is_err());
        assert!(CanonicalInterval::new(1, 2, 5).is_err());
        assert!(CanonicalInterval::new(1, 2, 0).is_err());
    }

    #[test]
    fn subinterval_examples_match_enumeration() {
        for &(lo, hi, want) in &[
            (1.3, 1.7, (1u64, 3u32, 4u64)),
            (2.0, 2.5, (2, 1, 1)),
            (5.25, 5.5, (5, 2, 2)),
        ] {
            let got = largest_canonical_subinterval(lo, hi).unwrap();
            assert_eq!((got.j, got.k, got.l), want, "[{lo}, {hi})");
            // oracle: among contained intervals up to k = 6, smallest k then l
            let best = enumerate(lo.floor() as u64, 6)
                .into_iter()
                .filter(|c| {
                    let (a, b) = c.bounds();
                    a >= lo && b <= hi
                })
                .min_by_key(|c| (c.k, c.l))
                .unwrap();
            assert_eq!(got, best);
            assert!(got.length() >= (hi - lo) / 4.0);
        }
    }

    #[test]
    fn subinterval_errors() {
        assert!(matches!(
            largest_canonical_subinterval(1.8, 2.2),
            Err(Error::CrossesIntegerBoundary { .. })
        ));
        assert!(largest_canonical_subinterval(0.5, 0.7).is_err());
        assert!(largest_canonical_subinterval(1.5, 1.5).is_err());
        assert!(largest_canonical_subinterval(1.0, 2.5).is_err());
        // ending exactly on the next integer is allowed
        assert_eq!(largest_canonical_subinterval(2.5, 3.0).unwrap().bounds(), (2.5, 3.0));
    }

    #[test]
    fn emptiness() {
        let s = spec(&[1.0, 1.0, 2.0]);
        assert!(is_empty(&s, 1.2, 1.8));
        assert!(!is_empty(&s, 0.9, 1.1));
        assert!(is_empty(&s, 1.5, 2.0));
        assert!(!is_empty(&s, 1.5, 2.0000001));
    }

    #[test]
    fn audit_small_cases() {
        let flat = audit_eq7(&spec(&[3.0; 5])).unwrap();
        assert_eq!((flat.gap_sum_sq, flat.witness_sum_sq), (0.0, 0.0));
        assert!(flat.holds);

        let a = audit_eq7(&spec(&[1.0, 1.5])).unwrap();
        assert_eq!(a.gap_sum_sq, 0.25);
        // witness must avoid the left endpoint 1.0: [1.25, 1.5)
        assert_eq!(a.witness_sum_sq, 0.0625);
        assert!(16.0 * a.witness_sum_sq >= 0.25);
        assert!(a.holds && a.holds_factor_16_overall);
        assert_eq!(a.crossing_gaps, 0);
    }

    #[test]
    fn audit_crossing_gap_uses_wider_factor() {
        // (1.9, 2.3): pieces 0.1 and 0.3, witness inside [2, 2.3) of length 0.25
        let a = audit_eq7(&spec(&[1.9, 2.3])).unwrap();
        assert_eq!(a.crossing_gaps, 1);
        assert_eq!(a.crossing_witness_sum_sq, 0.0625);
        assert!(a.holds);

        // (1.95, 2.05): the pieces tie, witness of length 1/32 > 0.1/8
        let b = audit_eq7(&spec(&[1.95, 2.05])).unwrap();
        assert!(b.holds);
        assert!(b.crossing_witness_sum_sq * 64.0 >= b.crossing_gap_sum_sq);
    }

    #[test]
    fn audit_rejects_sub_unit_distances() {
        assert!(audit_eq7(&spec(&[0.5, 1.5])).is_err());
    }

    #[test]
    fn long_gap_is_reported() {
        let a = audit_eq7(&spec(&[1.5, 4.5])).unwrap();
        assert_eq!(a.long_gaps, 1);
        assert_eq!(a.witness_sum_sq, 1.0);
        assert!(a.holds);
    }

    #[test]
    fn survey_closed_form_for_empty_unit() {
        // distances only in [1, 2); every interval of [2, 3) is empty
        let n = 10_000u64; // D ~ 386, so j runs far beyond 3
        let s = spec(&[1.0, 1.5]);
        let k_max = 6;
        let rows = empty_canonical_survey(&s, n, k_max).unwrap();
        let total: f64 = rows.iter().map(|r| r.sum_sq).sum();
        let j_count = (2.0 * circle_radius(n)).ceil() as u64 - 1;
        let per_unit = 2.0 - (-(k_max as f64)).exp2();
        // [1, 2) holds two distances; its k=0 interval is non-empty
        let first_unit = {
            let mut counts = vec![0u64; k_max as usize + 1];
            survey_node(s.distances(), 1.0, 0, 0.0, k_max, &mut counts);
            counts
                .iter()
                .enumerate()
                .map(|(k, &c)| c as f64 * level_length(k as u32).powi(2))
                .sum::<f64>()
        };
        assert!((total - ((j_count - 1) as f64 * per_unit + first_unit)).abs() < 1e-9);
        let k0_empty: u64 = rows.iter().filter(|r| r.k == 0).map(|r| r.count_empty).sum();
        assert_eq!(k0_empty, j_count - 1);
    }

    #[test]
    fn survey_node_matches_enumeration() {
        let s = spec(&[3.1, 3.1, 3.33, 3.5, 3.9999]);
        let mut counts = vec![0u64; 6];
        survey_node(s.distances(), 3.0, 0, 0.0, 5, &mut counts);
        for k in 0..=5u32 {
            let brute = enumerate(3, 5)
                .into_iter()
                .filter(|c| c.k == k)
                .filter(|c| {
                    let (a, b) = c.bounds();
                    is_empty(&s, a, b)
                })
                .count() as u64;
            assert_eq!(counts[k as usize], brute, "level {k}");
        }
    }

    #[test]
    fn full_coverage_means_no_empty_level_zero() {
        let n = 10_000u64;
        let d = 2.0 * circle_radius(n);
        let v: Vec<f64> = (1..d.ceil() as u64).map(|j| j as f64 + 0.5).collect();
        let rows = empty_canonical_survey(&spec(&v), n, 3).unwrap();
        assert!(rows.iter().filter(|r| r.k == 0).all(|r| r.count_empty == 0));
    }
}
