//! Block-sorted, k-way merged generation of all pairwise distances.
//!
//! Pairs are enumerated row by row (`i < j`) and cut into blocks of
//! consecutive rows. Each block is materialized, sorted, and either kept in
//! memory or spilled to a temporary file when the whole spectrum would not
//! fit in the memory budget. A heap merge over the sorted blocks then yields
//! the global ascending sequence.
//!
//! Distances are non-negative, so their IEEE bit patterns order the same way
//! as the values; blocks are sorted and merged on those `u64` keys. The
//! output is unique as a sequence of bit patterns, which makes it independent
//! of block boundaries, thread count and input order.

use std::cmp::Reverse;
use std::collections::BinaryHeap;
use std::fs::File;
use std::io::{BufReader, BufWriter, Read, Write};
use std::path::PathBuf;

use rayon::prelude::*;

use crate::error::{Error, Result};
use crate::regions::Point;

pub const DEFAULT_MEMORY_BUDGET: u64 = 1 << 30;
pub const DEFAULT_MAX_PAIRS: u64 = 2_000_000_000;

const BYTES_PER_DISTANCE: u64 = 8;
const MIN_BLOCK_PAIRS: u64 = 1 << 12;

#[derive(Debug, Clone)]
pub struct SpectrumConfig {
    /// Peak bytes held by distance blocks at any time.
    pub memory_budget: u64,
    /// Refuse point sets with more pairs than this.
    pub max_pairs: u64,
    /// Where spilled blocks go; the system temp dir when `None`.
    pub spill_dir: Option<PathBuf>,
    /// Blocks per worker thread when everything fits in memory.
    pub blocks_per_thread: usize,
}

impl Default for SpectrumConfig {
    fn default() -> Self {
        Self {
            memory_budget: DEFAULT_MEMORY_BUDGET,
            max_pairs: DEFAULT_MAX_PAIRS,
            spill_dir: None,
            blocks_per_thread: 1,
        }
    }
}

impl SpectrumConfig {
    pub fn with_memory_budget(mut self, bytes: u64) -> Self {
        self.memory_budget = bytes;
        self
    }
}

pub fn pair_count(points: usize) -> u64 {
    let n = points as u64;
    n * n.saturating_sub(1) / 2
}

/// Contiguous row ranges `[start, end)` whose pair counts stay within
/// `target` (a single row may exceed it).
fn row_blocks(n: usize, target: u64) -> Vec<(usize, usize)> {
    let mut blocks = Vec::new();
    let mut start = 0;
    let mut acc = 0u64;
    for i in 0..n {
        let row = (n - 1 - i) as u64;
        if acc > 0 && acc + row > target {
            blocks.push((start, i));
            start = i;
            acc = 0;
        }
        acc += row;
    }
    if acc > 0 {
        blocks.push((start, n));
    }
    blocks
}

fn block_keys(points: &[Point], rows: (usize, usize)) -> Vec<u64> {
    let n = points.len();
    let len: usize = (rows.0..rows.1).map(|i| n - 1 - i).sum();
    let mut keys = Vec::with_capacity(len);
    for i in rows.0..rows.1 {
        let p = points[i];
        keys.extend(points[i + 1..].iter().map(|&q| p.distance(q).to_bits()));
    }
    keys.sort_unstable();
    keys
}

enum Run {
    Memory { keys: Vec<u64>, pos: usize },
    Spilled { reader: BufReader<File>, remaining: u64 },
}

impl Run {
    fn pop(&mut self) -> Result<Option<u64>> {
        match self {
            Run::Memory { keys, pos } => {
                let v = keys.get(*pos).copied();
                *pos += 1;
                Ok(v)
            }
            Run::Spilled { reader, remaining } => {
                if *remaining == 0 {
                    return Ok(None);
                }
                let mut buf = [0u8; 8];
                reader.read_exact(&mut buf)?;
                *remaining -= 1;
                Ok(Some(u64::from_le_bytes(buf)))
            }
        }
    }
}

/// Ascending stream of all pairwise distances.
pub struct SortedDistances {
    runs: Vec<Run>,
    heap: BinaryHeap<Reverse<(u64, usize)>>,
    total: u64,
    emitted: u64,
    spilled_blocks: usize,
    _spill: Option<tempfile::TempDir>,
}

impl SortedDistances {
    /// Number of distances the stream will yield in total.
    pub fn total(&self) -> u64 {
        self.total
    }

    pub fn block_count(&self) -> usize {
        self.runs.len()
    }

    pub fn spilled_blocks(&self) -> usize {
        self.spilled_blocks
    }

    fn new(runs: Vec<Run>, total: u64, spill: Option<tempfile::TempDir>, spilled_blocks: usize) -> Result<Self> {
        let mut s = Self {
            runs,
            heap: BinaryHeap::new(),
            total,
            emitted: 0,
            spilled_blocks,
            _spill: spill,
        };
        if s.runs.len() > 1 {
            for idx in 0..s.runs.len() {
                if let Some(k) = s.runs[idx].pop()? {
                    s.heap.push(Reverse((k, idx)));
                }
            }
        }
        Ok(s)
    }

    fn next_key(&mut self) -> Result<Option<u64>> {
        if self.runs.len() == 1 {
            return self.runs[0].pop();
        }
        let Some(Reverse((key, idx))) = self.heap.pop() else {
            return Ok(None);
        };
        if let Some(k) = self.runs[idx].pop()? {
            self.heap.push(Reverse((k, idx)));
        }
        Ok(Some(key))
    }
}

impl Iterator for SortedDistances {
    type Item = Result<f64>;

    fn next(&mut self) -> Option<Self::Item> {
        match self.next_key() {
            Ok(Some(k)) => {
                self.emitted += 1;
                Some(Ok(f64::from_bits(k)))
            }
            Ok(None) => None,
            Err(e) => Some(Err(e)),
        }
    }

    fn size_hint(&self) -> (usize, Option<usize>) {
        let left = (self.total - self.emitted) as usize;
        (left, Some(left))
    }
}

/// Start the block-merge pipeline over `points`.
pub fn sorted_distances(points: &[Point], config: &SpectrumConfig) -> Result<SortedDistances> {
    if points.iter().any(|p| !p.is_finite()) {
        return Err(Error::InvalidParameter("point coordinates must be finite".into()));
    }
    let total = pair_count(points.len());
    if total > config.max_pairs {
        return Err(Error::PairCapExceeded {
            pairs: total,
            cap: config.max_pairs,
        });
    }
    let threads = rayon::current_num_threads().max(1) as u64;
    let budget_pairs = (config.memory_budget / BYTES_PER_DISTANCE).max(MIN_BLOCK_PAIRS);

    if total <= budget_pairs {
        let blocks = threads * config.blocks_per_thread.max(1) as u64;
        let target = total.div_ceil(blocks).max(MIN_BLOCK_PAIRS);
        let runs = row_blocks(points.len(), target)
            .into_par_iter()
            .map(|rows| Run::Memory {
                keys: block_keys(points, rows),
                pos: 0,
            })
            .collect();
        return SortedDistances::new(runs, total, None, 0);
    }

    // Spill: at most `threads` blocks are resident while sorting, and half
    // the budget is reserved for merge buffers.
    let target = (budget_pairs / 2 / threads).max(MIN_BLOCK_PAIRS);
    let blocks = row_blocks(points.len(), target);
    let dir = match &config.spill_dir {
        Some(d) => tempfile::tempdir_in(d)?,
        None => tempfile::tempdir()?,
    };
    let paths: Vec<(PathBuf, u64)> = blocks
        .par_iter()
        .enumerate()
        .map(|(idx, &rows)| -> Result<(PathBuf, u64)> {
            let keys = block_keys(points, rows);
            let path = dir.path().join(format!("block-{idx:06}.bin"));
            let mut w = BufWriter::new(File::create(&path)?);
            for k in &keys {
                w.write_all(&k.to_le_bytes())?;
            }
            w.flush()?;
            Ok((path, keys.len() as u64))
        })
        .collect::<Result<_>>()?;
    let buf_bytes = ((config.memory_budget / 2) / paths.len() as u64).clamp(4096, 1 << 20) as usize;
    let runs = paths
        .into_iter()
        .map(|(path, remaining)| -> Result<Run> {
            Ok(Run::Spilled {
                reader: BufReader::with_capacity(buf_bytes, File::open(path)?),
                remaining,
            })
        })
        .collect::<Result<Vec<_>>>()?;
    let spilled = runs.len();
    SortedDistances::new(runs, total, Some(dir), spilled)
}
