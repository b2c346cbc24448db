//! MovieLens-style offline replay.
//!
//! Ratings are read from `UserID::MovieID::Rating::Timestamp` lines (the 10M
//! `ratings.dat` layout) or from a CSV with a `userId,movieId,rating,timestamp`
//! header. The `K` most-rated movies form the arm set. A user clicks a movie
//! iff they rated it at least 3; a missing rating is no click.
//!
//! Contexts come from a rank-`r` alternating-least-squares factorization of
//! the binary click matrix: the context of movie `j` for user `i` is the
//! flattened outer product `u_i m_jᵀ`, scaled so every context has norm at
//! most `L`. The context dimension is `d = r²`.

use std::collections::{BTreeMap, HashMap};
use std::io::{BufRead, Write};
use std::path::Path;

use nalgebra::{DMatrix, DVector};
use rand::{Rng, RngCore, SeedableRng};
use rand_distr::{Distribution, Normal, StandardNormal};

use super::factor_cache::{self, CacheParams, FactorModel};
use super::{ArmSet, Round};
use crate::{Error, Result, SimRng};

pub const CLICK_THRESHOLD: f64 = 3.0;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Rating {
    pub user: u64,
    pub movie: u64,
    pub rating: f64,
    pub timestamp: u64,
}

#[derive(Debug, Clone)]
pub struct MovieLensConfig {
    /// Factor rank `r`; contexts have dimension `r²`.
    pub rank: usize,
    /// Number of movies offered each round.
    pub k: usize,
    /// Minimum number of ratings among the selected movies for a user to visit.
    pub min_ratings: usize,
    /// Seeds the factor initialization.
    pub seed: u64,
    pub als_iterations: usize,
    pub als_regularization: f64,
    /// Context norm bound `L`.
    pub bound_l: f64,
    /// Read and write the factor sidecar next to the ratings file.
    pub use_cache: bool,
}

impl Default for MovieLensConfig {
    fn default() -> Self {
        Self {
            rank: 5,
            k: 20,
            min_ratings: 1,
            seed: 0,
            als_iterations: 20,
            als_regularization: 0.1,
            bound_l: 20f64.sqrt(),
            use_cache: true,
        }
    }
}

impl MovieLensConfig {
    /// Configuration for context dimension `d`, which must be a perfect square.
    pub fn for_dim(d: usize, k: usize) -> Result<Self> {
        let r = (d as f64).sqrt().round() as usize;
        if r == 0 || r * r != d {
            return Err(Error::Config(format!(
                "replay context dimension must be a perfect square r², got {d}"
            )));
        }
        Ok(Self {
            rank: r,
            k,
            ..Self::default()
        })
    }

    fn validate(&self) -> Result<()> {
        if self.rank == 0 || self.k == 0 {
            return Err(Error::Config("rank and K must be positive".into()));
        }
        if !(self.bound_l.is_finite() && self.bound_l > 0.0) {
            return Err(Error::Config("context bound L must be positive".into()));
        }
        if !(self.als_regularization.is_finite() && self.als_regularization > 0.0) {
            return Err(Error::Config("ALS regularization must be positive".into()));
        }
        Ok(())
    }

    fn cache_params(&self) -> CacheParams {
        CacheParams {
            rank: self.rank,
            k: self.k,
            min_ratings: self.min_ratings,
            seed: self.seed,
            iterations: self.als_iterations,
            regularization: self.als_regularization,
        }
    }
}

enum Layout {
    DoubleColon,
    Csv,
}

/// Parses ratings from `reader`; `source` only labels error messages.
pub fn parse_ratings(reader: impl BufRead, source: &Path) -> Result<Vec<Rating>> {
    let mut out = Vec::new();
    let mut layout = None;
    for (idx, line) in reader.lines().enumerate() {
        let lineno = idx + 1;
        let line = line.map_err(|e| Error::io(source, e))?;
        let line = line.trim_end_matches('\r');
        if layout.is_none() {
            if line.to_ascii_lowercase().starts_with("userid,") {
                layout = Some(Layout::Csv);
                continue;
            }
            layout = Some(Layout::DoubleColon);
        }
        if line.trim().is_empty() {
            continue;
        }
        let fields: Vec<&str> = match layout {
            Some(Layout::Csv) => line.split(',').collect(),
            _ => line.split("::").collect(),
        };
        let malformed = |message: String| Error::Ingest {
            path: source.to_path_buf(),
            line: lineno,
            message,
        };
        if fields.len() != 4 {
            return Err(malformed(format!("expected 4 fields, found {}", fields.len())));
        }
        let int = |s: &str, what: &str| {
            s.trim()
                .parse::<u64>()
                .map_err(|_| malformed(format!("invalid {what} {s:?}")))
        };
        let user = int(fields[0], "user id")?;
        let movie = int(fields[1], "movie id")?;
        let rating: f64 = fields[2]
            .trim()
            .parse()
            .map_err(|_| malformed(format!("invalid rating {:?}", fields[2])))?;
        if !(0.0..=5.0).contains(&rating) {
            return Err(malformed(format!("rating {rating} outside [0, 5]")));
        }
        let timestamp = int(fields[3], "timestamp")?;
        out.push(Rating {
            user,
            movie,
            rating,
            timestamp,
        });
    }
    Ok(out)
}

/// Dense binary click table over eligible users and the `K` most-rated movies.
#[derive(Debug, Clone, PartialEq)]
pub struct ClickTable {
    pub user_ids: Vec<u64>,
    pub movie_ids: Vec<u64>,
    /// Row-major `n_users × K`.
    pub clicks: Vec<u8>,
}

impl ClickTable {
    pub fn build(ratings: &[Rating], k: usize, min_ratings: usize) -> Result<Self> {
        let mut counts: HashMap<u64, usize> = HashMap::new();
        for r in ratings {
            *counts.entry(r.movie).or_default() += 1;
        }
        if k > counts.len() {
            return Err(Error::Config(format!(
                "K = {k} exceeds the {} movies available",
                counts.len()
            )));
        }
        let mut by_count: Vec<(u64, usize)> = counts.into_iter().collect();
        by_count.sort_by(|a, b| b.1.cmp(&a.1).then(a.0.cmp(&b.0)));
        let movie_ids: Vec<u64> = by_count[..k].iter().map(|&(m, _)| m).collect();
        let col: HashMap<u64, usize> = movie_ids.iter().enumerate().map(|(j, &m)| (m, j)).collect();

        // Later lines overwrite earlier ones for repeated (user, movie) pairs.
        let mut per_user: BTreeMap<u64, BTreeMap<usize, f64>> = BTreeMap::new();
        for r in ratings {
            if let Some(&j) = col.get(&r.movie) {
                per_user.entry(r.user).or_default().insert(j, r.rating);
            }
        }
        let mut user_ids = Vec::new();
        let mut clicks = Vec::new();
        for (user, rated) in per_user {
            if rated.len() < min_ratings.max(1) {
                continue;
            }
            user_ids.push(user);
            let mut row = vec![0u8; k];
            for (j, rating) in rated {
                row[j] = u8::from(rating >= CLICK_THRESHOLD);
            }
            clicks.extend_from_slice(&row);
        }
        if user_ids.is_empty() {
            return Err(Error::Config(format!(
                "no user has at least {min_ratings} ratings among the top {k} movies"
            )));
        }
        Ok(Self {
            user_ids,
            movie_ids,
            clicks,
        })
    }

    pub fn num_users(&self) -> usize {
        self.user_ids.len()
    }

    pub fn k(&self) -> usize {
        self.movie_ids.len()
    }

    pub fn click(&self, user: usize, movie: usize) -> bool {
        self.clicks[user * self.k() + movie] == 1
    }
}

/// Dense ALS on the binary click matrix, then scales contexts to norm ≤ `L`.
pub fn fit_factors(table: &ClickTable, cfg: &MovieLensConfig) -> FactorModel {
    let n = table.num_users();
    let k = table.k();
    let r = cfg.rank;
    let c = DMatrix::from_fn(n, k, |i, j| f64::from(table.clicks[i * k + j]));
    let mut rng = SimRng::seed_from_u64(cfg.seed);
    let init = Normal::new(0.0, 0.1).unwrap();
    let mut movies = DMatrix::from_fn(k, r, |_, _| init.sample(&mut rng));
    let mut users = DMatrix::zeros(n, r);
    let reg = DMatrix::identity(r, r) * cfg.als_regularization;
    for _ in 0..cfg.als_iterations.max(1) {
        // U = C M (MᵀM + ρI)⁻¹, then M = Cᵀ U (UᵀU + ρI)⁻¹
        let gram = movies.transpose() * &movies + &reg;
        let chol = gram.cholesky().expect("regularized Gram is SPD");
        users = chol.solve(&(movies.transpose() * c.transpose())).transpose();
        let gram = users.transpose() * &users + &reg;
        let chol = gram.cholesky().expect("regularized Gram is SPD");
        movies = chol.solve(&(users.transpose() * &c)).transpose();
    }
    let max_u = users.row_iter().map(|row| row.norm()).fold(0.0, f64::max);
    let max_m = movies.row_iter().map(|row| row.norm()).fold(0.0, f64::max);
    let top = max_u * max_m;
    let scale = if top > 0.0 { cfg.bound_l / top } else { 1.0 };
    let row_major = |m: &DMatrix<f64>| {
        let mut v = Vec::with_capacity(m.len());
        for row in m.row_iter() {
            v.extend(row.iter().copied());
        }
        v
    };
    FactorModel {
        rank: r,
        user_ids: table.user_ids.clone(),
        movie_ids: table.movie_ids.clone(),
        user_factors: row_major(&users),
        movie_factors: row_major(&movies),
        scale,
    }
}

#[derive(Debug, Clone)]
pub struct MovieLensEnv {
    table: ClickTable,
    factors: FactorModel,
    bound_l: f64,
}

/// Loads a ratings file and builds the replay environment, reusing the factor
/// sidecar when `cfg.use_cache` is set and a matching one exists.
pub fn movielens_load(path: &Path, cfg: &MovieLensConfig) -> Result<MovieLensEnv> {
    cfg.validate()?;
    let bytes = std::fs::read(path).map_err(|e| Error::io(path, e))?;
    let ratings = parse_ratings(&bytes[..], path)?;
    let table = ClickTable::build(&ratings, cfg.k, cfg.min_ratings)?;
    let factors = if cfg.use_cache {
        let key = factor_cache::cache_key(&bytes, &cfg.cache_params());
        let sidecar = factor_cache::sidecar_path(path, &key);
        match factor_cache::load(&sidecar, &key) {
            Some(m) if m.user_ids == table.user_ids && m.movie_ids == table.movie_ids => m,
            _ => {
                let m = fit_factors(&table, cfg);
                // the cache is best-effort; a read-only data directory is fine
                let _ = factor_cache::store(&sidecar, &key, &m);
                m
            }
        }
    } else {
        fit_factors(&table, cfg)
    };
    Ok(MovieLensEnv {
        table,
        factors,
        bound_l: cfg.bound_l,
    })
}

impl MovieLensEnv {
    /// Builds the environment from in-memory ratings, bypassing the cache.
    pub fn from_ratings(ratings: &[Rating], cfg: &MovieLensConfig) -> Result<Self> {
        cfg.validate()?;
        let table = ClickTable::build(ratings, cfg.k, cfg.min_ratings)?;
        let factors = fit_factors(&table, cfg);
        Ok(Self {
            table,
            factors,
            bound_l: cfg.bound_l,
        })
    }

    pub fn dim(&self) -> usize {
        self.factors.rank * self.factors.rank
    }

    pub fn num_arms(&self) -> usize {
        self.table.k()
    }

    pub fn num_users(&self) -> usize {
        self.table.num_users()
    }

    pub fn bound_l(&self) -> f64 {
        self.bound_l
    }

    pub fn table(&self) -> &ClickTable {
        &self.table
    }

    pub fn factors(&self) -> &FactorModel {
        &self.factors
    }

    /// `scale · vec(u_i m_jᵀ)`, row-major.
    pub fn context(&self, user: usize, movie: usize) -> DVector<f64> {
        let u = self.factors.user(user);
        let m = self.factors.movie(movie);
        let r = self.factors.rank;
        let s = self.factors.scale;
        DVector::from_fn(r * r, |idx, _| s * u[idx / r] * m[idx % r])
    }

    pub fn click(&self, user: usize, movie: usize) -> bool {
        self.table.click(user, movie)
    }

    /// Average click over all (eligible user, offered movie) pairs: the
    /// long-run CTR of a uniformly random recommender.
    pub fn mean_click_rate(&self) -> f64 {
        let total: usize = self.table.clicks.iter().map(|&c| c as usize).sum();
        total as f64 / self.table.clicks.len() as f64
    }

    /// One visit: a uniformly drawn user (with replacement) and the `K` movie contexts.
    pub fn round(&self, t: usize, rng: &mut dyn RngCore) -> Round {
        let user = rng.random_range(0..self.num_users());
        let k = self.num_arms();
        let contexts = (0..k).map(|j| self.context(user, j)).collect();
        let expected = (0..k).map(|j| f64::from(u8::from(self.click(user, j)))).collect();
        Round {
            arms: ArmSet::new(t, contexts),
            expected,
            user: Some(user),
        }
    }
}

/// Generates a ratings table with latent user/movie structure and skewed
/// movie popularity, for exercising the replay pipeline without the real dataset.
pub fn synthetic_ratings(n_users: usize, n_movies: usize, seed: u64) -> Vec<Rating> {
    const LATENT: usize = 3;
    let mut rng = SimRng::seed_from_u64(seed);
    let gauss = |rng: &mut SimRng| -> f64 { StandardNormal.sample(rng) };
    let users: Vec<[f64; LATENT]> = (0..n_users)
        .map(|_| std::array::from_fn(|_| gauss(&mut rng)))
        .collect();
    let movies: Vec<([f64; LATENT], f64, f64)> = (0..n_movies)
        .map(|j| {
            let v = std::array::from_fn(|_| gauss(&mut rng));
            let bias = 0.4 * gauss(&mut rng);
            let popularity = 0.1 + 0.75 * (1.0 - j as f64 / n_movies as f64);
            (v, bias, popularity)
        })
        .collect();
    let mut out = Vec::new();
    let mut ts = 1_000_000_000u64;
    for (i, u) in users.iter().enumerate() {
        for (j, (m, bias, popularity)) in movies.iter().enumerate() {
            if rng.random::<f64>() >= *popularity {
                continue;
            }
            let affinity: f64 = u.iter().zip(m).map(|(a, b)| a * b).sum::<f64>() / (LATENT as f64).sqrt();
            let raw = 3.0 + 1.3 * affinity + bias + 0.5 * gauss(&mut rng);
            let rating = ((raw * 2.0).round() / 2.0).clamp(0.5, 5.0);
            ts += 1 + rng.random_range(0..600);
            out.push(Rating {
                user: i as u64 + 1,
                movie: j as u64 + 1,
                rating,
                timestamp: ts,
            });
        }
    }
    out
}

/// Writes ratings in the `UserID::MovieID::Rating::Timestamp` layout.
pub fn write_ratings_dat(mut w: impl Write, ratings: &[Rating]) -> std::io::Result<()> {
    for r in ratings {
        writeln!(w, "{}::{}::{}::{}", r.user, r.movie, r.rating, r.timestamp)?;
    }
    Ok(())
}
