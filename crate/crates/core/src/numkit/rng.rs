use rand::{Rng, RngCore, SeedableRng};
use rand_chacha::ChaCha20Rng;
use rand_distr::StandardNormal;
use sha2::{Digest, Sha256};

use crate::error::{Error, Result};

/// Reproducible random stream identified by `(seed, stream_id)`.
///
/// Backed by ChaCha20 with the stream id selecting an independent keystream,
/// so each replication can own a stream without coordination.
#[derive(Debug, Clone)]
pub struct RngStream {
    seed: u64,
    stream_id: u64,
    inner: ChaCha20Rng,
}

impl RngStream {
    pub fn new(seed: u64, stream_id: u64) -> Self {
        let mut inner = ChaCha20Rng::seed_from_u64(seed);
        inner.set_stream(stream_id);
        Self {
            seed,
            stream_id,
            inner,
        }
    }

    /// Stream for one `(label, p, replication)` cell under `master_seed`.
    ///
    /// The stream id is a SHA-256 digest of the cell coordinates, so adding or
    /// renaming other cells never shifts this one.
    pub fn for_cell(master_seed: u64, label: &str, p: usize, replication: usize) -> Self {
        Self::new(master_seed, derive_stream_id(label, p, replication))
    }

    pub fn seed(&self) -> u64 {
        self.seed
    }

    pub fn stream_id(&self) -> u64 {
        self.stream_id
    }

    pub fn next_u64(&mut self) -> u64 {
        self.inner.next_u64()
    }

    pub fn normal(&mut self) -> f64 {
        self.inner.sample(StandardNormal)
    }

    /// Uniform on `[lo, hi)`.
    pub fn uniform(&mut self, lo: f64, hi: f64) -> f64 {
        lo + (hi - lo) * self.inner.random::<f64>()
    }

    pub fn normals(&mut self, count: usize) -> Vec<f64> {
        (0..count).map(|_| self.normal()).collect()
    }

    pub fn uniforms(&mut self, lo: f64, hi: f64, count: usize) -> Vec<f64> {
        (0..count).map(|_| self.uniform(lo, hi)).collect()
    }

    /// `m` distinct indices from `0..n`, returned in ascending order.
    pub fn indices_without_replacement(&mut self, m: usize, n: usize) -> Result<Vec<usize>> {
        if m > n {
            return Err(Error::InvalidSampleSize { m, n });
        }
        let mut idx = rand::seq::index::sample(&mut self.inner, n, m).into_vec();
        idx.sort_unstable();
        Ok(idx)
    }
}

pub fn derive_stream_id(label: &str, p: usize, replication: usize) -> u64 {
    let mut h = Sha256::new();
    h.update(b"ddlab-cell\0");
    h.update((label.len() as u64).to_le_bytes());
    h.update(label.as_bytes());
    h.update((p as u64).to_le_bytes());
    h.update((replication as u64).to_le_bytes());
    let digest = h.finalize();
    let mut first = [0u8; 8];
    first.copy_from_slice(&digest[..8]);
    u64::from_le_bytes(first)
}
