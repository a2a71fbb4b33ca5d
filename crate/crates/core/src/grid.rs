//! Uniform-grid spatial hash for fixed-radius neighbor queries.

use std::collections::HashMap;
use std::ops::Range;

use crate::regions::Point;

pub struct UniformGrid<'a> {
    points: &'a [Point],
    cell: f64,
    order: Vec<u32>,
    cells: HashMap<(i64, i64), Range<usize>>,
}

impl<'a> UniformGrid<'a> {
    pub fn new(points: &'a [Point], cell: f64) -> Self {
        assert!(cell > 0.0 && cell.is_finite(), "grid cell size must be positive");
        let inv = 1.0 / cell;
        let mut keyed: Vec<((i64, i64), u32)> = points
            .iter()
            .enumerate()
            .map(|(i, p)| (((p.x * inv).floor() as i64, (p.y * inv).floor() as i64), i as u32))
            .collect();
        keyed.sort_unstable();
        let mut cells = HashMap::with_capacity(keyed.len());
        let mut start = 0;
        while start < keyed.len() {
            let key = keyed[start].0;
            let mut end = start + 1;
            while end < keyed.len() && keyed[end].0 == key {
                end += 1;
            }
            cells.insert(key, start..end);
            start = end;
        }
        Self {
            points,
            cell,
            order: keyed.into_iter().map(|(_, i)| i).collect(),
            cells,
        }
    }

    fn key(&self, p: Point) -> (i64, i64) {
        ((p.x / self.cell).floor() as i64, (p.y / self.cell).floor() as i64)
    }

    /// Calls `f(j, distance)` for every point `j` (including `i` itself when
    /// querying by index) with `distance < radius`.
    pub fn for_each_within<F: FnMut(usize, f64)>(&self, center: Point, radius: f64, mut f: F) {
        let span = (radius / self.cell).ceil() as i64;
        let (cx, cy) = self.key(center);
        for gx in cx - span..=cx + span {
            for gy in cy - span..=cy + span {
                if let Some(range) = self.cells.get(&(gx, gy)) {
                    for &j in &self.order[range.clone()] {
                        let d = center.distance(self.points[j as usize]);
                        if d < radius {
                            f(j as usize, d);
                        }
                    }
                }
            }
        }
    }

    /// Visits every unordered pair `{i, j}` with `i < j` whose distance
    /// lies in `[lo, hi)`. Stops early when `f` returns `false`; the return
    /// value says whether the scan ran to completion.
    pub fn visit_pairs_in_range<F: FnMut(usize, usize, f64) -> bool>(&self, lo: f64, hi: f64, mut f: F) -> bool {
        for (i, &p) in self.points.iter().enumerate() {
            let mut keep_going = true;
            self.for_each_within(p, hi, |j, d| {
                if keep_going && j > i && d >= lo {
                    keep_going = f(i, j, d);
                }
            });
            if !keep_going {
                return false;
            }
        }
        true
    }
}

/// Indices of points with no other point strictly closer than `threshold`.
pub fn isolated_indices(points: &[Point], threshold: f64) -> Vec<usize> {
    assert!(threshold > 0.0, "threshold must be positive");
    let grid = UniformGrid::new(points, threshold);
    (0..points.len())
        .filter(|&i| {
            let mut alone = true;
            grid.for_each_within(points[i], threshold, |j, _| {
                if j != i {
                    alone = false;
                }
            });
            alone
        })
        .collect()
}

/// Smallest pairwise distance if it is below `radius`, otherwise `None`.
pub fn min_distance_below(points: &[Point], radius: f64) -> Option<f64> {
    let grid = UniformGrid::new(points, radius);
    let mut best: Option<f64> = None;
    grid.visit_pairs_in_range(0.0, radius, |_, _, d| {
        best = Some(best.map_or(d, |b: f64| b.min(d)));
        true
    });
    best
}

/// Exhaustive O(N^2) minimum pairwise distance.
pub fn min_distance_brute(points: &[Point]) -> Option<f64> {
    let mut best: Option<f64> = None;
    for (i, &p) in points.iter().enumerate() {
        for &q in &points[i + 1..] {
            let d = p.distance(q);
            best = Some(best.map_or(d, |b: f64| b.min(d)));
        }
    }
    best
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn random_points(n: usize, side: f64, seed: u64) -> Vec<Point> {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        (0..n)
            .map(|_| Point::new(rng.random_range(-side..side), rng.random_range(-side..side)))
            .collect()
    }

    #[test]
    fn pairs_in_range_match_brute_force() {
        let pts = random_points(800, 10.0, 5);
        for &(lo, hi) in &[(0.0, 0.5), (0.3, 0.7), (1.0, 2.5)] {
            let grid = UniformGrid::new(&pts, hi);
            let mut got = Vec::new();
            grid.visit_pairs_in_range(lo, hi, |i, j, _| {
                got.push((i, j));
                true
            });
            got.sort_unstable();
            let mut want = Vec::new();
            for i in 0..pts.len() {
                for j in i + 1..pts.len() {
                    let d = pts[i].distance(pts[j]);
                    if d >= lo && d < hi {
                        want.push((i, j));
                    }
                }
            }
            assert_eq!(got, want);
        }
    }

    #[test]
    fn min_distance_agrees() {
        let pts = random_points(500, 20.0, 9);
        let brute = min_distance_brute(&pts).unwrap();
        assert_eq!(min_distance_below(&pts, 5.0), Some(brute));
        assert_eq!(min_distance_below(&pts, brute * 0.5), None);
    }

    #[test]
    fn negative_coordinates_bucket_correctly() {
        let pts = vec![Point::new(-0.1, -0.1), Point::new(0.1, 0.1), Point::new(-5.0, 3.0)];
        assert_eq!(isolated_indices(&pts, 1.0), vec![2]);
    }
}
