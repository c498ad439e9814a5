//! Reproducible Monte Carlo substrate.
//!
//! A [`RngStream`] is identified by a root seed and a path of 64-bit indices.
//! The path prefix is hashed into a ChaCha8 key and the last index selects the
//! ChaCha stream, so sibling streams are distinct by construction and any
//! stream can be recreated from `(root_seed, path)` alone.
//!
//! [`run_blocks`] gives sample `i` the stream `root.derive(i)`. Which block or
//! thread processes a sample never changes its random numbers, so merged hit
//! counts are identical for every block layout and thread count.

use rand_chacha::ChaCha8Rng;
use rand_core::{RngCore, SeedableRng};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::stats::Proportion;

/// Source of `u64` words and open-interval uniforms.
pub trait UniformSource {
    fn next_u64(&mut self) -> u64;

    /// Uniform on the open interval `(0, 1)` with 53-bit resolution.
    fn uniform(&mut self) -> f64 {
        ((self.next_u64() >> 11) as f64 + 0.5) * (1.0 / 9_007_199_254_740_992.0)
    }
}

const GOLDEN: u64 = 0x9e37_79b9_7f4a_7c15;

fn splitmix64(mut z: u64) -> u64 {
    z = z.wrapping_add(GOLDEN);
    z = (z ^ (z >> 30)).wrapping_mul(0xbf58_476d_1ce4_e5b9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94d0_49bb_1331_11eb);
    z ^ (z >> 31)
}

#[derive(Clone, Debug)]
pub struct RngStream {
    root_seed: u64,
    path: Vec<u64>,
    rng: ChaCha8Rng,
}

impl RngStream {
    pub fn new(root_seed: u64) -> Self {
        Self::at(root_seed, Vec::new())
    }

    fn at(root_seed: u64, path: Vec<u64>) -> Self {
        let (prefix, stream) = match path.split_last() {
            Some((last, prefix)) => (prefix, *last),
            None => (&path[..], 0),
        };
        let mut h = splitmix64(root_seed ^ splitmix64(path.len() as u64));
        for &idx in prefix {
            h = splitmix64(h ^ splitmix64(idx.wrapping_add(GOLDEN)));
        }
        let mut key = [0u8; 32];
        for chunk in key.chunks_exact_mut(8) {
            h = splitmix64(h);
            chunk.copy_from_slice(&h.to_le_bytes());
        }
        let mut rng = ChaCha8Rng::from_seed(key);
        rng.set_stream(stream);
        Self { root_seed, path, rng }
    }

    /// Child stream; injective in `index` for a fixed parent.
    pub fn derive(&self, index: u64) -> Self {
        let mut path = Vec::with_capacity(self.path.len() + 1);
        path.extend_from_slice(&self.path);
        path.push(index);
        Self::at(self.root_seed, path)
    }

    pub fn root_seed(&self) -> u64 {
        self.root_seed
    }

    pub fn path(&self) -> &[u64] {
        &self.path
    }
}

impl UniformSource for RngStream {
    fn next_u64(&mut self) -> u64 {
        self.rng.next_u64()
    }
}

/// Replays a fixed list of uniforms; for exercising samplers deterministically.
#[derive(Debug, Clone)]
pub struct FixedUniforms {
    values: Vec<f64>,
    pos: usize,
}

impl FixedUniforms {
    pub fn new(values: Vec<f64>) -> Self {
        assert!(!values.is_empty());
        Self { values, pos: 0 }
    }
}

impl UniformSource for FixedUniforms {
    fn next_u64(&mut self) -> u64 {
        (self.uniform() * 18_446_744_073_709_551_616.0) as u64
    }

    fn uniform(&mut self) -> f64 {
        let v = self.values[self.pos % self.values.len()];
        self.pos += 1;
        v
    }
}

/// Block layout and thread count for [`run_blocks`].
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct RunConfig {
    pub blocks: usize,
    /// `None` uses the global rayon pool.
    pub threads: Option<usize>,
}

impl Default for RunConfig {
    fn default() -> Self {
        Self { blocks: 64, threads: None }
    }
}

/// Per-block tallies of hit counters and floating-point sums.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BlockResult {
    pub block_index: usize,
    pub n_samples: u64,
    pub hits: Vec<u64>,
    pub sums: Vec<f64>,
}

impl BlockResult {
    pub fn empty(block_index: usize, n_hits: usize, n_sums: usize) -> Self {
        Self {
            block_index,
            n_samples: 0,
            hits: vec![0; n_hits],
            sums: vec![0.0; n_sums],
        }
    }

    /// Combines two tallies. Hit counts merge exactly; the merged block takes
    /// the smaller index.
    pub fn merge(mut self, other: &BlockResult) -> Self {
        self.block_index = self.block_index.min(other.block_index);
        self.n_samples += other.n_samples;
        for (a, b) in self.hits.iter_mut().zip(&other.hits) {
            *a += b;
        }
        for (a, b) in self.sums.iter_mut().zip(&other.sums) {
            *a += b;
        }
        self
    }
}

/// Counters a task writes into for one sample.
#[derive(Debug)]
pub struct Tally<'a> {
    pub hits: &'a mut [u64],
    pub sums: &'a mut [f64],
}

#[derive(Debug, Clone, PartialEq)]
pub struct MergedResult {
    pub total: BlockResult,
    pub blocks: usize,
}

impl MergedResult {
    pub fn proportion(&self, counter: usize) -> Proportion {
        Proportion::new(self.total.hits[counter], self.total.n_samples)
    }

    pub fn mean(&self, sum_index: usize) -> f64 {
        self.total.sums[sum_index] / self.total.n_samples as f64
    }
}

/// Runs `task` once per sample index in `0..n_total`, split into `blocks`
/// contiguous ranges (remainder to the last block), and merges the tallies in
/// block order.
pub fn run_blocks<F>(
    run: &RunConfig,
    n_total: u64,
    seed: u64,
    n_hits: usize,
    n_sums: usize,
    task: F,
) -> Result<MergedResult>
where
    F: Fn(&mut RngStream, &mut Tally<'_>) -> Result<()> + Sync,
{
    if n_total == 0 {
        return Err(Error::Domain("run_blocks needs at least one sample".into()));
    }
    if run.blocks == 0 {
        return Err(Error::Domain("run_blocks needs at least one block".into()));
    }
    let blocks = run.blocks;
    let per_block = n_total / blocks as u64;
    let root = RngStream::new(seed);

    let run_one = |b: usize| -> Result<BlockResult> {
        let start = per_block * b as u64;
        let end = if b + 1 == blocks { n_total } else { start + per_block };
        let mut result = BlockResult::empty(b, n_hits, n_sums);
        for i in start..end {
            let mut stream = root.derive(i);
            let mut tally = Tally {
                hits: &mut result.hits,
                sums: &mut result.sums,
            };
            task(&mut stream, &mut tally).map_err(|e| Error::Block {
                block: b,
                source: Box::new(e),
            })?;
        }
        result.n_samples = end - start;
        Ok(result)
    };

    let results: Vec<Result<BlockResult>> = match run.threads {
        Some(t) => {
            let pool = rayon::ThreadPoolBuilder::new()
                .num_threads(t.max(1))
                .build()
                .map_err(|e| Error::Domain(format!("thread pool: {e}")))?;
            pool.install(|| (0..blocks).into_par_iter().map(run_one).collect())
        }
        None => (0..blocks).into_par_iter().map(run_one).collect(),
    };

    let mut total = BlockResult::empty(0, n_hits, n_sums);
    for r in results {
        total = total.merge(&r?);
    }
    Ok(MergedResult { total, blocks })
}

/// Parses a seed given in decimal or `0x`-prefixed hexadecimal.
pub fn parse_seed(s: &str) -> Result<u64> {
    let t = s.trim();
    let parsed = match t.strip_prefix("0x").or_else(|| t.strip_prefix("0X")) {
        Some(hex) => u64::from_str_radix(hex, 16),
        None => t.parse::<u64>(),
    };
    parsed.map_err(|e| Error::Config(format!("invalid seed {s:?}: {e}")))
}
