//! Count-Min Sketch over real-valued counts.
//!
//! A `w x b` grid of counters. Every key maps to one cell per row; an update
//! adds the amount to each of those cells and a point query returns the
//! minimum of them, so estimates never fall below the exact total.
//!
//! Counts are `f64` so the same structure serves both hard per-tick resets and
//! multiplicative decay. Keys are hashed once per sketch family (xxh3 seeded
//! with the sketch seed) and the per-row cell is derived by mixing that hash
//! with the row index, so sketches built from equal [`SketchParams`] agree on
//! every cell and can share a single [`KeyHash`].

use std::f64::consts::E;

use serde::{Deserialize, Serialize};
use smallvec::SmallVec;
use xxhash_rust::xxh3::xxh3_64_with_seed;

use crate::error::{Error, Result};

/// Seed used when the caller does not supply one.
pub const DEFAULT_SEED: u64 = 0x6d69_6461_735f_636d;

/// Byte separating source and destination tokens in an edge key.
pub const EDGE_KEY_SEPARATOR: u8 = 0x00;

// Slack for floating-point noise when rounding sizing formulas up.
const CEIL_SLACK: f64 = 1e-9;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct SketchParams {
    rows: usize,
    buckets: usize,
    seed: u64,
}

impl SketchParams {
    pub fn new(rows: usize, buckets: usize, seed: u64) -> Result<Self> {
        if rows == 0 {
            return Err(Error::param("sketch rows must be at least 1"));
        }
        if buckets == 0 {
            return Err(Error::param("sketch buckets must be at least 1"));
        }
        Ok(SketchParams {
            rows,
            buckets,
            seed,
        })
    }

    /// Standard sizing: `w = ceil(ln(2/epsilon))` rows and `b = ceil(e/nu)`
    /// buckets, giving point-query error at most `nu * N` with probability at
    /// least `1 - epsilon/2`.
    pub fn for_error(nu: f64, epsilon: f64, seed: u64) -> Result<Self> {
        SketchParams::new(rows_for(epsilon)?, buckets_for(nu)?, seed)
    }

    pub fn rows(&self) -> usize {
        self.rows
    }

    pub fn buckets(&self) -> usize {
        self.buckets
    }

    pub fn seed(&self) -> u64 {
        self.seed
    }

    /// Total number of counters, `w * b`.
    pub fn cell_count(&self) -> usize {
        self.rows * self.buckets
    }

    /// Effective approximation error `e / b` delivered by this bucket count.
    pub fn nu(&self) -> f64 {
        E / self.buckets as f64
    }

    pub fn hash_key(&self, key: &Key<'_>) -> KeyHash {
        match key {
            Key::Node(bytes) => KeyHash(xxh3_64_with_seed(bytes, self.seed)),
            Key::Edge { .. } => {
                let mut buf = SmallVec::<[u8; 96]>::new();
                key.encode_into(&mut buf);
                KeyHash(xxh3_64_with_seed(&buf, self.seed))
            }
        }
    }

    /// Flat index of the cell `hash` occupies in `row`.
    #[inline]
    fn cell(&self, hash: KeyHash, row: usize) -> usize {
        let mixed = mix64(hash.0 ^ row_salt(row));
        let bucket = ((mixed as u128 * self.buckets as u128) >> 64) as usize;
        row * self.buckets + bucket
    }
}

/// Rows needed for failure probability `epsilon/2`.
pub fn rows_for(epsilon: f64) -> Result<usize> {
    if !(epsilon > 0.0 && epsilon < 1.0) {
        return Err(Error::param(format!("epsilon must lie in (0, 1), got {epsilon}")));
    }
    Ok(ceil_slack((2.0 / epsilon).ln()).max(1))
}

/// Buckets needed for approximation error `nu`.
pub fn buckets_for(nu: f64) -> Result<usize> {
    if !(nu > 0.0 && nu < 1.0) {
        return Err(Error::param(format!("nu must lie in (0, 1), got {nu}")));
    }
    Ok(ceil_slack(E / nu).max(1))
}

/// Sketch sizing for error `nu` and failure probability `epsilon`, with the
/// default seed.
pub fn params_for(nu: f64, epsilon: f64) -> Result<SketchParams> {
    SketchParams::for_error(nu, epsilon, DEFAULT_SEED)
}

fn ceil_slack(x: f64) -> usize {
    let c = x.ceil();
    if c - x > 1.0 - CEIL_SLACK * x.abs().max(1.0) {
        (c - 1.0) as usize
    } else {
        c as usize
    }
}

#[inline]
fn row_salt(row: usize) -> u64 {
    (row as u64 + 1).wrapping_mul(0x9e37_79b9_7f4a_7c15)
}

// splitmix64 finalizer
#[inline]
fn mix64(mut z: u64) -> u64 {
    z = (z ^ (z >> 30)).wrapping_mul(0xbf58_476d_1ce4_e5b9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94d0_49bb_1331_11eb);
    z ^ (z >> 31)
}

/// Identity of a counted item.
///
/// Edge keys encode as `source ++ 0x00 ++ destination`; node keys are the
/// token bytes unchanged. Edge and node keys live in separate sketches.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Key<'a> {
    Node(&'a [u8]),
    Edge {
        source: &'a [u8],
        destination: &'a [u8],
    },
}

impl<'a> Key<'a> {
    pub fn node(token: &'a str) -> Self {
        Key::Node(token.as_bytes())
    }

    pub fn edge(source: &'a str, destination: &'a str) -> Self {
        Key::Edge {
            source: source.as_bytes(),
            destination: destination.as_bytes(),
        }
    }

    pub fn to_bytes(&self) -> Vec<u8> {
        let mut out = Vec::new();
        self.encode_into(&mut out);
        out
    }

    fn encode_into<B: Extend<u8>>(&self, out: &mut B) {
        match *self {
            Key::Node(bytes) => out.extend(bytes.iter().copied()),
            Key::Edge {
                source,
                destination,
            } => {
                out.extend(source.iter().copied());
                out.extend(std::iter::once(EDGE_KEY_SEPARATOR));
                out.extend(destination.iter().copied());
            }
        }
    }
}

/// A key's hash under one [`SketchParams`]. Only meaningful for sketches
/// built from the params that produced it.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub struct KeyHash(u64);

#[derive(Clone, Debug, PartialEq)]
pub struct CountMinSketch {
    params: SketchParams,
    cells: Box<[f64]>,
    #[cfg(test)]
    pub(crate) writes: u64,
}

impl CountMinSketch {
    pub fn new(params: SketchParams) -> Self {
        CountMinSketch {
            params,
            cells: vec![0.0; params.cell_count()].into_boxed_slice(),
            #[cfg(test)]
            writes: 0,
        }
    }

    pub fn params(&self) -> &SketchParams {
        &self.params
    }

    /// Raw counters, row-major.
    pub fn cells(&self) -> &[f64] {
        &self.cells
    }

    /// Flat indices of the `w` cells a key occupies, one per row.
    pub fn cell_indices(&self, hash: KeyHash) -> impl Iterator<Item = usize> + '_ {
        (0..self.params.rows).map(move |row| self.params.cell(hash, row))
    }

    pub fn update(&mut self, key: &Key<'_>, amount: f64) -> Result<()> {
        let hash = self.params.hash_key(key);
        self.update_hashed(hash, amount)
    }

    pub fn update_hashed(&mut self, hash: KeyHash, amount: f64) -> Result<()> {
        if !(amount >= 0.0 && amount.is_finite()) {
            return Err(Error::param(format!(
                "update amount must be finite and nonnegative, got {amount}"
            )));
        }
        self.add(hash, amount);
        Ok(())
    }

    #[inline]
    pub(crate) fn add(&mut self, hash: KeyHash, amount: f64) {
        for row in 0..self.params.rows {
            let idx = self.params.cell(hash, row);
            self.cells[idx] += amount;
        }
        #[cfg(test)]
        {
            self.writes += self.params.rows as u64;
        }
    }

    /// Add `amount` to the key's cells and return the updated estimate,
    /// touching each cell once.
    #[inline]
    pub(crate) fn add_query(&mut self, hash: KeyHash, amount: f64) -> f64 {
        let mut min = f64::INFINITY;
        for row in 0..self.params.rows {
            let cell = &mut self.cells[self.params.cell(hash, row)];
            *cell += amount;
            min = min.min(*cell);
        }
        #[cfg(test)]
        {
            self.writes += self.params.rows as u64;
        }
        min
    }

    pub fn query(&self, key: &Key<'_>) -> f64 {
        self.query_hashed(self.params.hash_key(key))
    }

    #[inline]
    pub fn query_hashed(&self, hash: KeyHash) -> f64 {
        let mut min = f64::INFINITY;
        for row in 0..self.params.rows {
            min = min.min(self.cells[self.params.cell(hash, row)]);
        }
        min
    }

    /// Multiply every counter by `factor`.
    pub fn scale(&mut self, factor: f64) -> Result<()> {
        if !(0.0..=1.0).contains(&factor) {
            return Err(Error::param(format!(
                "scale factor must lie in [0, 1], got {factor}"
            )));
        }
        if factor == 0.0 {
            self.reset();
        } else if factor != 1.0 {
            self.cells.iter_mut().for_each(|c| *c *= factor);
        }
        Ok(())
    }

    pub fn reset(&mut self) {
        self.cells.fill(0.0);
    }
}
