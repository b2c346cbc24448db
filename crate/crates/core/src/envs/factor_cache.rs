//! Latent factor model for the replay environment and its on-disk sidecar.
//!
//! Layout (all integers and floats little-endian):
//!
//! ```text
//! magic "LIMEDFM1" | key [u8; 32] | rank u64 | n_users u64 | n_movies u64
//! | scale f64 | user_ids [u64] | movie_ids [u64]
//! | user_factors [f64; n_users·rank] | movie_factors [f64; n_movies·rank]
//! ```

use std::fs;
use std::io::Write;
use std::path::{Path, PathBuf};

use sha2::{Digest, Sha256};

use crate::{Error, Result};

const MAGIC: &[u8; 8] = b"LIMEDFM1";

#[derive(Debug, Clone, PartialEq)]
pub struct FactorModel {
    pub rank: usize,
    pub user_ids: Vec<u64>,
    pub movie_ids: Vec<u64>,
    /// Row-major `n_users × rank`.
    pub user_factors: Vec<f64>,
    /// Row-major `n_movies × rank`.
    pub movie_factors: Vec<f64>,
    /// Multiplier applied to every outer-product context.
    pub scale: f64,
}

impl FactorModel {
    pub fn user(&self, i: usize) -> &[f64] {
        &self.user_factors[i * self.rank..(i + 1) * self.rank]
    }

    pub fn movie(&self, j: usize) -> &[f64] {
        &self.movie_factors[j * self.rank..(j + 1) * self.rank]
    }

    pub fn to_bytes(&self, key: &[u8; 32]) -> Vec<u8> {
        let mut out = Vec::with_capacity(
            8 + 32 + 32 + 8 * (self.user_ids.len() + self.movie_ids.len())
                + 8 * (self.user_factors.len() + self.movie_factors.len()),
        );
        out.extend_from_slice(MAGIC);
        out.extend_from_slice(key);
        for n in [self.rank, self.user_ids.len(), self.movie_ids.len()] {
            out.extend_from_slice(&(n as u64).to_le_bytes());
        }
        out.extend_from_slice(&self.scale.to_bits().to_le_bytes());
        for id in self.user_ids.iter().chain(&self.movie_ids) {
            out.extend_from_slice(&id.to_le_bytes());
        }
        for v in self.user_factors.iter().chain(&self.movie_factors) {
            out.extend_from_slice(&v.to_bits().to_le_bytes());
        }
        out
    }

    /// Decodes a sidecar, returning the stored key alongside the model.
    pub fn from_bytes(bytes: &[u8]) -> Result<([u8; 32], Self)> {
        let bad = |what: &str| Error::Numeric(format!("corrupt factor cache: {what}"));
        let mut cur = Cursor { bytes, pos: 0 };
        if cur.take(8).ok_or_else(|| bad("truncated header"))? != MAGIC {
            return Err(bad("bad magic"));
        }
        let mut key = [0u8; 32];
        key.copy_from_slice(cur.take(32).ok_or_else(|| bad("truncated key"))?);
        let rank = cur.u64().ok_or_else(|| bad("truncated rank"))? as usize;
        let n_users = cur.u64().ok_or_else(|| bad("truncated user count"))? as usize;
        let n_movies = cur.u64().ok_or_else(|| bad("truncated movie count"))? as usize;
        let scale = f64::from_bits(cur.u64().ok_or_else(|| bad("truncated scale"))?);
        let expected = 8usize
            .checked_mul(n_users + n_movies + rank * (n_users + n_movies))
            .ok_or_else(|| bad("size overflow"))?;
        if cur.remaining() != expected {
            return Err(bad("payload length mismatch"));
        }
        let mut ids = |n: usize| (0..n).map(|_| cur.u64().unwrap()).collect::<Vec<_>>();
        let user_ids = ids(n_users);
        let movie_ids = ids(n_movies);
        let mut floats =
            |n: usize| (0..n).map(|_| f64::from_bits(cur.u64().unwrap())).collect::<Vec<_>>();
        let user_factors = floats(n_users * rank);
        let movie_factors = floats(n_movies * rank);
        Ok((
            key,
            Self {
                rank,
                user_ids,
                movie_ids,
                user_factors,
                movie_factors,
                scale,
            },
        ))
    }
}

struct Cursor<'a> {
    bytes: &'a [u8],
    pos: usize,
}

impl<'a> Cursor<'a> {
    fn take(&mut self, n: usize) -> Option<&'a [u8]> {
        let out = self.bytes.get(self.pos..self.pos + n)?;
        self.pos += n;
        Some(out)
    }

    fn u64(&mut self) -> Option<u64> {
        self.take(8).map(|b| u64::from_le_bytes(b.try_into().unwrap()))
    }

    fn remaining(&self) -> usize {
        self.bytes.len() - self.pos
    }
}

/// Parameters that determine a factorization, hashed into the cache key.
#[derive(Debug, Clone, Copy)]
pub(crate) struct CacheParams {
    pub rank: usize,
    pub k: usize,
    pub min_ratings: usize,
    pub seed: u64,
    pub iterations: usize,
    pub regularization: f64,
}

pub(crate) fn cache_key(file_bytes: &[u8], p: &CacheParams) -> [u8; 32] {
    let file_digest = Sha256::digest(file_bytes);
    let mut h = Sha256::new();
    h.update(file_digest);
    for n in [p.rank, p.k, p.min_ratings, p.iterations] {
        h.update((n as u64).to_le_bytes());
    }
    h.update(p.seed.to_le_bytes());
    h.update(p.regularization.to_bits().to_le_bytes());
    h.finalize().into()
}

pub(crate) fn sidecar_path(ratings: &Path, key: &[u8; 32]) -> PathBuf {
    let tag: String = key[..8].iter().map(|b| format!("{b:02x}")).collect();
    let mut name = ratings
        .file_name()
        .map(|n| n.to_os_string())
        .unwrap_or_default();
    name.push(format!(".{tag}.factors"));
    ratings.with_file_name(name)
}

/// Returns the cached model if the sidecar exists and carries `key`.
pub(crate) fn load(path: &Path, key: &[u8; 32]) -> Option<FactorModel> {
    let bytes = fs::read(path).ok()?;
    match FactorModel::from_bytes(&bytes) {
        Ok((stored, model)) if &stored == key => Some(model),
        _ => None,
    }
}

/// Writes through a temporary file and a rename, so concurrent loaders never
/// see a partial sidecar.
pub(crate) fn store(path: &Path, key: &[u8; 32], model: &FactorModel) -> Result<()> {
    let dir = match path.parent() {
        Some(d) if !d.as_os_str().is_empty() => d,
        _ => Path::new("."),
    };
    let mut tmp = tempfile::NamedTempFile::new_in(dir).map_err(|e| Error::io(dir, e))?;
    tmp.write_all(&model.to_bytes(key)).map_err(|e| Error::io(path, e))?;
    tmp.persist(path).map_err(|e| Error::io(path, e.error))?;
    Ok(())
}
