//! Bandit environments.
//!
//! Every environment produces one [`Round`] per time step: the decision set
//! together with the expected reward of each arm. Linear environments draw
//! `Y = ⟨θ*, x⟩ + η` with Gaussian `η`; the MovieLens replay returns a
//! deterministic click.

use std::sync::Arc;

use nalgebra::DVector;
use rand::RngCore;
use rand_distr::{Distribution, StandardNormal};

use crate::policies::ArmStats;
use crate::{Error, Result};

mod eoo;
mod factor_cache;
mod fixed;
pub mod movielens;
mod synthetic;

pub use eoo::{eoo_arms, EooEnv};
pub use factor_cache::FactorModel;
pub use fixed::FixedEnv;
pub use movielens::{movielens_load, MovieLensConfig, MovieLensEnv, Rating};
pub use synthetic::{suboptimal_context, synthetic_arms, synthetic_theta, SyntheticEnv};

#[derive(Debug, Clone, PartialEq)]
pub struct Arm {
    pub id: usize,
    pub context: DVector<f64>,
}

/// The decision set offered at one round.
#[derive(Debug, Clone, PartialEq)]
pub struct ArmSet {
    /// 1-based round index.
    pub round: usize,
    pub arms: Vec<Arm>,
}

impl ArmSet {
    pub fn new(round: usize, contexts: Vec<DVector<f64>>) -> Self {
        let arms = contexts
            .into_iter()
            .enumerate()
            .map(|(id, context)| Arm { id, context })
            .collect();
        Self { round, arms }
    }

    pub fn len(&self) -> usize {
        self.arms.len()
    }

    pub fn is_empty(&self) -> bool {
        self.arms.is_empty()
    }

    /// Dimension of the contexts, or an error if the set is empty or ragged.
    pub fn dim(&self) -> Result<usize> {
        let first = self
            .arms
            .first()
            .ok_or_else(|| Error::Usage("empty arm set".into()))?;
        let d = first.context.len();
        for arm in &self.arms {
            if arm.context.len() != d {
                return Err(Error::DimensionMismatch {
                    expected: d,
                    got: arm.context.len(),
                });
            }
        }
        Ok(d)
    }

    pub fn position_of(&self, id: usize) -> Option<usize> {
        self.arms.iter().position(|a| a.id == id)
    }
}

/// Known-parameter linear reward model `Y = ⟨θ*, x⟩ + η`, `η ~ N(0, R²)`.
#[derive(Debug, Clone, PartialEq)]
pub struct LinearModel {
    pub theta_star: DVector<f64>,
    pub noise_r: f64,
}

impl LinearModel {
    pub fn new(theta_star: DVector<f64>, noise_r: f64) -> Result<Self> {
        if !(noise_r.is_finite() && noise_r >= 0.0) {
            return Err(Error::Config(format!("noise level must be >= 0, got {noise_r}")));
        }
        Ok(Self {
            theta_star,
            noise_r,
        })
    }

    pub fn expected(&self, x: &DVector<f64>) -> f64 {
        self.theta_star.dot(x)
    }

    pub fn draw_reward(&self, x: &DVector<f64>, rng: &mut dyn RngCore) -> f64 {
        let z: f64 = StandardNormal.sample(rng);
        self.expected(x) + self.noise_r * z
    }
}

/// One interaction step as offered by an environment.
#[derive(Debug, Clone)]
pub struct Round {
    pub arms: ArmSet,
    /// Expected reward of each arm, aligned with `arms.arms`.
    pub expected: Vec<f64>,
    /// Visiting user (replay environments only), as an index into the user table.
    pub user: Option<usize>,
}

impl Round {
    /// Position of the best arm (lowest id among ties).
    pub fn best_position(&self) -> usize {
        let mut best = 0;
        for (i, &e) in self.expected.iter().enumerate() {
            if e > self.expected[best] {
                best = i;
            }
        }
        best
    }

    pub fn best_expected(&self) -> f64 {
        self.expected[self.best_position()]
    }

    /// `⟨θ*, x_{a*}⟩ − ⟨θ*, x_a⟩`, clamped at zero.
    pub fn regret_of(&self, position: usize) -> f64 {
        (self.best_expected() - self.expected[position]).max(0.0)
    }
}

/// One completed interaction step.
#[derive(Debug, Clone, PartialEq)]
pub struct RoundRecord {
    pub round: usize,
    pub arm_id: usize,
    /// Realized reward `Y_t`.
    pub reward: f64,
    /// `⟨θ*, X_t⟩`, or the click itself for replay.
    pub expected: f64,
    /// `Δ_t = ⟨θ*, x_{t,a*}⟩ − ⟨θ*, X_t⟩`
    pub regret: f64,
    pub best_arm: usize,
    pub stats: Option<Vec<ArmStats>>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum EnvKind {
    Synthetic,
    EndOfOptimism,
    MovieLensReplay,
    Fixed,
}

#[derive(Debug, Clone)]
pub enum Environment {
    Synthetic(SyntheticEnv),
    EndOfOptimism(EooEnv),
    MovieLens(Arc<MovieLensEnv>),
    Fixed(FixedEnv),
}

impl Environment {
    pub fn kind(&self) -> EnvKind {
        match self {
            Environment::Synthetic(_) => EnvKind::Synthetic,
            Environment::EndOfOptimism(_) => EnvKind::EndOfOptimism,
            Environment::MovieLens(_) => EnvKind::MovieLensReplay,
            Environment::Fixed(_) => EnvKind::Fixed,
        }
    }

    pub fn dim(&self) -> usize {
        match self {
            Environment::Synthetic(e) => e.dim(),
            Environment::EndOfOptimism(_) => 2,
            Environment::MovieLens(e) => e.dim(),
            Environment::Fixed(e) => e.dim(),
        }
    }

    pub fn num_arms(&self) -> usize {
        match self {
            Environment::Synthetic(e) => e.num_arms(),
            Environment::EndOfOptimism(_) => 3,
            Environment::MovieLens(e) => e.num_arms(),
            Environment::Fixed(e) => e.num_arms(),
        }
    }

    /// Hidden parameter, when the environment has one.
    pub fn theta_star(&self) -> Option<&DVector<f64>> {
        match self {
            Environment::Synthetic(e) => Some(&e.model().theta_star),
            Environment::EndOfOptimism(e) => Some(&e.model().theta_star),
            Environment::MovieLens(_) => None,
            Environment::Fixed(e) => Some(&e.model().theta_star),
        }
    }

    pub fn round(&self, t: usize, rng: &mut dyn RngCore) -> Round {
        match self {
            Environment::Synthetic(e) => e.round(t, rng),
            Environment::EndOfOptimism(e) => e.round(t),
            Environment::MovieLens(e) => e.round(t, rng),
            Environment::Fixed(e) => e.round(t),
        }
    }

    /// Realized reward of the arm at `position` in `round`.
    pub fn draw_reward(&self, round: &Round, position: usize, rng: &mut dyn RngCore) -> f64 {
        match self {
            Environment::Synthetic(e) => e.model().draw_reward(&round.arms.arms[position].context, rng),
            Environment::EndOfOptimism(e) => {
                e.model().draw_reward(&round.arms.arms[position].context, rng)
            }
            Environment::MovieLens(_) => round.expected[position],
            Environment::Fixed(e) => e.model().draw_reward(&round.arms.arms[position].context, rng),
        }
    }
}
