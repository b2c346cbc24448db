//! Run options shared by the command line and TOML config files.
//!
//! Every flag of `linimed run` has a key of the same name in the file; values
//! given on the command line win.

use std::path::{Path, PathBuf};

use serde::Deserialize;

use linimed::policies::Mode;

use crate::experiment::{alpha_grid, EnvSpec, ExperimentSpec};
use crate::{Error, Result};

#[derive(Debug, Clone, Default, PartialEq, clap::Args, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RunOptions {
    /// synthetic | eoo | movielens
    #[arg(long)]
    pub env: Option<String>,
    /// Comma-separated policy names
    #[arg(long, value_delimiter = ',')]
    pub policy: Option<Vec<String>>,
    /// Horizon
    #[arg(long = "T")]
    #[serde(rename = "T")]
    pub t: Option<usize>,
    #[arg(long)]
    pub repeats: Option<usize>,
    #[arg(long)]
    pub seed: Option<u64>,
    /// Run every policy at this alpha
    #[arg(long, conflicts_with = "sweep")]
    pub alpha: Option<f64>,
    /// Tune alpha over the grid
    #[arg(long, num_args = 0..=1, default_missing_value = "true")]
    pub sweep: Option<bool>,
    /// Comma-separated alpha grid for --sweep (default 0.05, 0.10, ..., 1.00)
    #[arg(long, value_delimiter = ',', conflicts_with = "published_grid")]
    pub grid: Option<Vec<f64>>,
    /// With --sweep, give each policy its three-point grid from the published synthetic table
    #[arg(long = "published-grid", num_args = 0..=1, default_missing_value = "true")]
    #[serde(rename = "published-grid")]
    pub published_grid: Option<bool>,
    /// Number of arms (synthetic) or movies (movielens)
    #[arg(long = "K")]
    #[serde(rename = "K")]
    pub k: Option<usize>,
    /// Context dimension; a perfect square for movielens
    #[arg(long)]
    pub d: Option<usize>,
    /// End-of-optimism epsilon
    #[arg(long)]
    pub eps: Option<f64>,
    /// Ratings file for movielens
    #[arg(long)]
    pub ratings: Option<PathBuf>,
    /// Minimum ratings among the K movies for a user to visit
    #[arg(long = "min-ratings")]
    #[serde(rename = "min-ratings")]
    pub min_ratings: Option<usize>,
    /// Output directory
    #[arg(long)]
    pub out: Option<PathBuf>,
    /// Worker threads (default: all cores)
    #[arg(long)]
    pub threads: Option<usize>,
}

impl RunOptions {
    pub fn from_toml_file(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        Self::from_toml_str(&text).map_err(|e| Error::Config(format!("{}: {e}", path.display())))
    }

    pub fn from_toml_str(text: &str) -> std::result::Result<Self, toml::de::Error> {
        toml::from_str(text)
    }

    /// Fields set in `self` take precedence over `base`.
    pub fn overlay(self, base: RunOptions) -> RunOptions {
        RunOptions {
            env: self.env.or(base.env),
            policy: self.policy.or(base.policy),
            t: self.t.or(base.t),
            repeats: self.repeats.or(base.repeats),
            seed: self.seed.or(base.seed),
            alpha: self.alpha.or(base.alpha),
            sweep: self.sweep.or(base.sweep),
            grid: self.grid.or(base.grid),
            published_grid: self.published_grid.or(base.published_grid),
            k: self.k.or(base.k),
            d: self.d.or(base.d),
            eps: self.eps.or(base.eps),
            ratings: self.ratings.or(base.ratings),
            min_ratings: self.min_ratings.or(base.min_ratings),
            out: self.out.or(base.out),
            threads: self.threads.or(base.threads),
        }
    }

    pub fn env_spec(&self) -> Result<EnvSpec> {
        let name = self.env.as_deref().unwrap_or("synthetic");
        Ok(match name {
            "synthetic" => EnvSpec::synthetic(self.k.unwrap_or(10), self.d.unwrap_or(2)),
            "eoo" => EnvSpec::eoo(self.eps.unwrap_or(0.01)),
            "movielens" => {
                let ratings = self
                    .ratings
                    .clone()
                    .ok_or_else(|| Error::Config("--ratings is required for movielens".into()))?;
                EnvSpec::MovieLens {
                    ratings,
                    k: self.k.unwrap_or(20),
                    d: self.d.unwrap_or(25),
                    min_ratings: self.min_ratings.unwrap_or(1),
                    factor_seed: 0,
                }
            }
            other => return Err(Error::Config(format!("unknown environment {other:?}"))),
        })
    }

    pub fn to_spec(&self) -> Result<ExperimentSpec> {
        let env = self.env_spec()?;
        let modes: Vec<Mode> = match &self.policy {
            Some(names) => names.iter().map(|n| n.trim().parse()).collect::<linimed::Result<_>>()?,
            None => vec![Mode::LinImed1, Mode::LinImed2, Mode::LinImed3, Mode::LinUcb, Mode::LinTs],
        };
        let horizon = self.t.unwrap_or(1000);
        let repeats = self.repeats.unwrap_or_else(|| env.default_repeats());
        let mut spec = ExperimentSpec::preset(env, &modes, horizon, repeats, self.seed.unwrap_or(0));
        if let Some(a) = self.alpha {
            for p in spec.policies.iter_mut() {
                p.alpha_scale = a;
            }
        }
        let published = self.published_grid.unwrap_or(false);
        if self.sweep.unwrap_or(false) {
            if published {
                spec = spec.with_published_grids();
            } else {
                spec.alpha_grid = Some(self.grid.clone().unwrap_or_else(alpha_grid));
            }
        } else if self.grid.is_some() || published {
            return Err(Error::Config("--grid and --published-grid need --sweep".into()));
        }
        spec.validate()?;
        Ok(spec)
    }
}
