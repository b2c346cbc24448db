//! Experiment descriptions and the published parameter presets.

use std::path::PathBuf;
use std::sync::Arc;

use linimed::envs::{EooEnv, Environment, MovieLensConfig, SyntheticEnv};
use linimed::policies::{GammaSchedule, Mode, PolicyConfig};

use crate::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Metric {
    CumulativeRegret,
    /// Cumulative clicks divided by rounds.
    Ctr,
}

impl Metric {
    pub fn label(&self) -> &'static str {
        match self {
            Metric::CumulativeRegret => "cumulative regret",
            Metric::Ctr => "CTR",
        }
    }

    /// Whether a larger final value is better.
    pub fn higher_is_better(&self) -> bool {
        matches!(self, Metric::Ctr)
    }
}

#[derive(Debug, Clone, PartialEq)]
pub enum EnvSpec {
    Synthetic {
        k: usize,
        d: usize,
        noise_r: f64,
    },
    EndOfOptimism {
        eps: f64,
        noise_r: f64,
    },
    MovieLens {
        ratings: PathBuf,
        k: usize,
        d: usize,
        min_ratings: usize,
        /// Seeds the factorization, not the visits.
        factor_seed: u64,
    },
}

impl EnvSpec {
    pub fn synthetic(k: usize, d: usize) -> Self {
        EnvSpec::Synthetic { k, d, noise_r: 0.1 }
    }

    pub fn eoo(eps: f64) -> Self {
        EnvSpec::EndOfOptimism { eps, noise_r: 0.1 }
    }

    pub fn movielens(ratings: impl Into<PathBuf>, k: usize, d: usize) -> Self {
        EnvSpec::MovieLens {
            ratings: ratings.into(),
            k,
            d,
            min_ratings: 1,
            factor_seed: 0,
        }
    }

    pub fn name(&self) -> &'static str {
        match self {
            EnvSpec::Synthetic { .. } => "synthetic",
            EnvSpec::EndOfOptimism { .. } => "eoo",
            EnvSpec::MovieLens { .. } => "movielens",
        }
    }

    pub fn metric(&self) -> Metric {
        match self {
            EnvSpec::MovieLens { .. } => Metric::Ctr,
            _ => Metric::CumulativeRegret,
        }
    }

    pub fn default_repeats(&self) -> usize {
        match self {
            EnvSpec::Synthetic { .. } => 50,
            EnvSpec::EndOfOptimism { .. } => 10,
            EnvSpec::MovieLens { .. } => 100,
        }
    }

    pub fn build(&self) -> Result<Environment> {
        Ok(match self {
            EnvSpec::Synthetic { k, d, noise_r } => Environment::Synthetic(SyntheticEnv::new(*k, *d, *noise_r)?),
            EnvSpec::EndOfOptimism { eps, noise_r } => Environment::EndOfOptimism(EooEnv::new(*eps, *noise_r)?),
            EnvSpec::MovieLens {
                ratings,
                k,
                d,
                min_ratings,
                factor_seed,
            } => {
                let cfg = MovieLensConfig {
                    min_ratings: *min_ratings,
                    seed: *factor_seed,
                    ..MovieLensConfig::for_dim(*d, *k)?
                };
                Environment::MovieLens(Arc::new(linimed::envs::movielens_load(ratings, &cfg)?))
            }
        })
    }

    /// Policy parameters for this environment.
    ///
    /// Synthetic and End-of-Optimism runs use `λ = 2, L = √2, S = 1, R = 0.1,
    /// γ = 1/(1+n)²`; replay runs use `λ = 20, L = √20, S = 1, R = 0.1, γ = 1/n²`.
    pub fn preset(&self, mode: Mode, alpha: f64, horizon: usize) -> PolicyConfig {
        let (lambda, gamma_schedule) = match self {
            EnvSpec::MovieLens { .. } => (20.0, GammaSchedule::InverseTSquared),
            _ => (2.0, GammaSchedule::InverseOnePlusTSquared),
        };
        PolicyConfig {
            lambda,
            bound_s: 1.0,
            bound_l: f64::sqrt(lambda),
            noise_r: 0.1,
            gamma_schedule,
            alpha_scale: alpha,
            constant_c: 30.0,
            horizon: horizon.max(1),
            mode,
        }
    }

    /// Tuned `α` for `mode` (the replay values are the `K = 20` ones).
    pub fn default_alpha(&self, mode: Mode) -> f64 {
        match (self, mode) {
            (EnvSpec::MovieLens { .. }, Mode::LinUcb) => 0.75,
            (EnvSpec::MovieLens { .. }, Mode::LinTs) => 0.1,
            (EnvSpec::MovieLens { .. }, Mode::LinImed1 | Mode::LinImed2) => 0.2,
            (EnvSpec::MovieLens { .. }, Mode::LinImed3) => 0.25,
            (_, Mode::LinUcb) => 0.55,
            (_, Mode::LinTs) => 0.25,
            (_, Mode::LinImed1) => 0.2,
            (_, Mode::LinImed2) => 0.25,
            (_, Mode::LinImed3) => 0.2,
            (_, Mode::SupLinImed | Mode::Uniform) => 1.0,
        }
    }
}

/// `{0.05, 0.10, …, 1.00}`.
pub fn alpha_grid() -> Vec<f64> {
    (1..=20).map(|i| f64::from(i) / 20.0).collect()
}

/// Three-point grid around the tuned `α` of the `K = 10, d = 2` synthetic table.
pub fn synthetic_local_grid(mode: Mode) -> Vec<f64> {
    match mode {
        Mode::LinUcb => vec![0.5, 0.55, 0.6],
        Mode::LinTs | Mode::LinImed2 => vec![0.2, 0.25, 0.3],
        Mode::LinImed1 | Mode::LinImed3 => vec![0.15, 0.2, 0.25],
        Mode::SupLinImed | Mode::Uniform => vec![1.0],
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct ExperimentSpec {
    pub env: EnvSpec,
    /// One entry per policy; `alpha_scale` is overridden by `alpha_grid` when set.
    pub policies: Vec<PolicyConfig>,
    pub horizon: usize,
    pub repeats: usize,
    pub base_seed: u64,
    pub alpha_grid: Option<Vec<f64>>,
    /// Per-policy grids, aligned with `policies`; takes precedence over `alpha_grid`.
    pub policy_grids: Option<Vec<Vec<f64>>>,
    pub metric: Metric,
}

impl ExperimentSpec {
    /// Preset policies at their tuned `α`.
    pub fn preset(env: EnvSpec, modes: &[Mode], horizon: usize, repeats: usize, base_seed: u64) -> Self {
        let policies = modes
            .iter()
            .map(|&m| env.preset(m, env.default_alpha(m), horizon))
            .collect();
        let metric = env.metric();
        Self {
            env,
            policies,
            horizon,
            repeats,
            base_seed,
            alpha_grid: None,
            policy_grids: None,
            metric,
        }
    }

    pub fn validate(&self) -> Result<()> {
        if self.repeats == 0 {
            return Err(Error::Config("repeats must be at least 1".into()));
        }
        if self.policies.is_empty() {
            return Err(Error::Config("at least one policy is required".into()));
        }
        for (i, p) in self.policies.iter().enumerate() {
            if self.policies[..i].iter().any(|q| q.mode == p.mode) {
                return Err(Error::Config(format!("policy {} listed twice", p.mode)));
            }
            if p.horizon != self.horizon.max(1) {
                return Err(Error::Config(format!(
                    "policy {} has horizon {} but the experiment runs {}",
                    p.mode, p.horizon, self.horizon
                )));
            }
            p.validate()?;
        }
        if let Some(grid) = &self.alpha_grid {
            check_grid(grid)?;
        }
        if let Some(grids) = &self.policy_grids {
            if grids.len() != self.policies.len() {
                return Err(Error::Config(format!(
                    "{} policy grids for {} policies",
                    grids.len(),
                    self.policies.len()
                )));
            }
            for g in grids {
                check_grid(g)?;
            }
        }
        Ok(())
    }

    /// Uses each policy's three-point grid from the published synthetic table.
    pub fn with_published_grids(mut self) -> Self {
        self.policy_grids = Some(self.policies.iter().map(|p| synthetic_local_grid(p.mode)).collect());
        self
    }

    /// The `α` values the policy at `index` is run at.
    pub fn alphas_for(&self, index: usize) -> Vec<f64> {
        if let Some(grids) = &self.policy_grids {
            return grids[index].clone();
        }
        match &self.alpha_grid {
            Some(grid) => grid.clone(),
            None => vec![self.policies[index].alpha_scale],
        }
    }

    pub fn is_sweep(&self) -> bool {
        self.alpha_grid.is_some() || self.policy_grids.is_some()
    }
}

fn check_grid(grid: &[f64]) -> Result<()> {
    if grid.is_empty() {
        return Err(Error::Config("alpha grid must not be empty".into()));
    }
    for (i, &a) in grid.iter().enumerate() {
        if !(a.is_finite() && a > 0.0) {
            return Err(Error::Config(format!("alpha grid entries must be positive, got {a}")));
        }
        if grid[..i].contains(&a) {
            return Err(Error::Config(format!("alpha grid entry {a} repeated")));
        }
    }
    Ok(())
}
