//! Arm-selection policies.
//!
//! All ridge-based policies share the confidence radius
//! `β_{t−1}(γ) = (R √(d ln((1 + (t−1)L²/λ)/γ)) + √λ S)²` from [`beta`], and
//! every `√β` is multiplied by the tuning factor `alpha_scale`.
//!
//! Selection is expressed uniformly as "minimum index wins, lowest arm id
//! breaks ties": LinIMED uses its own index, the optimistic baselines report
//! the negated score.

use std::fmt;
use std::str::FromStr;

use nalgebra::DVector;
use rand::RngCore;

use crate::envs::ArmSet;
use crate::linalg::RidgeState;
use crate::{Error, Result};

mod index;
mod linimed;
mod lints;
mod linucb;
mod suplinimed;
mod uniform;

pub use index::{argmin_index, linimed_indices};
pub use linimed::LinImed;
pub use lints::LinTs;
pub use linucb::LinUcb;
pub use suplinimed::{SupCase, SupLinImed, SupLinStep};
pub use uniform::Uniform;

/// Schedule for the concentration parameter `γ`, evaluated at `n = t − 1`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum GammaSchedule {
    /// `γ = 1/n²`, with `n = 0` treated as `n = 1`.
    InverseTSquared,
    /// `γ = 1/(1+n)²`.
    InverseOnePlusTSquared,
    Constant(f64),
}

impl GammaSchedule {
    pub fn at(&self, n: usize) -> f64 {
        match *self {
            GammaSchedule::InverseTSquared => {
                let n = n.max(1) as f64;
                1.0 / (n * n)
            }
            GammaSchedule::InverseOnePlusTSquared => {
                let n = 1.0 + n as f64;
                1.0 / (n * n)
            }
            GammaSchedule::Constant(g) => g,
        }
    }
}

/// Which LinIMED anchor index to use.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum ImedVariant {
    One,
    Two,
    Three,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum Mode {
    LinImed1,
    LinImed2,
    LinImed3,
    LinUcb,
    LinTs,
    SupLinImed,
    /// Uniformly random arm; reference point for replay CTR.
    Uniform,
}

impl Mode {
    pub const ALL: [Mode; 7] = [
        Mode::LinImed1,
        Mode::LinImed2,
        Mode::LinImed3,
        Mode::LinUcb,
        Mode::LinTs,
        Mode::SupLinImed,
        Mode::Uniform,
    ];

    pub fn label(&self) -> &'static str {
        match self {
            Mode::LinImed1 => "LinIMED-1",
            Mode::LinImed2 => "LinIMED-2",
            Mode::LinImed3 => "LinIMED-3",
            Mode::LinUcb => "LinUCB",
            Mode::LinTs => "LinTS",
            Mode::SupLinImed => "SupLinIMED",
            Mode::Uniform => "Uniform",
        }
    }

    pub fn imed_variant(&self) -> Option<ImedVariant> {
        match self {
            Mode::LinImed1 => Some(ImedVariant::One),
            Mode::LinImed2 => Some(ImedVariant::Two),
            Mode::LinImed3 => Some(ImedVariant::Three),
            _ => None,
        }
    }
}

impl fmt::Display for Mode {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.label())
    }
}

impl FromStr for Mode {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        let key: String = s
            .chars()
            .filter(|c| c.is_ascii_alphanumeric())
            .collect::<String>()
            .to_ascii_lowercase();
        Ok(match key.as_str() {
            "linimed1" => Mode::LinImed1,
            "linimed2" => Mode::LinImed2,
            "linimed3" => Mode::LinImed3,
            "linucb" => Mode::LinUcb,
            "lints" => Mode::LinTs,
            "suplinimed" => Mode::SupLinImed,
            "uniform" | "random" => Mode::Uniform,
            _ => return Err(Error::Config(format!("unknown policy {s:?}"))),
        })
    }
}

/// Every tunable of the ridge-based policies.
#[derive(Debug, Clone, PartialEq)]
pub struct PolicyConfig {
    pub lambda: f64,
    /// Bound `S` on `‖θ*‖`.
    pub bound_s: f64,
    /// Bound `L` on `‖x‖`.
    pub bound_l: f64,
    /// Sub-Gaussian noise level `R`.
    pub noise_r: f64,
    pub gamma_schedule: GammaSchedule,
    /// Multiplier on every `√β` (and on the SupLinIMED width).
    pub alpha_scale: f64,
    /// LinIMED-3 constant `C ≥ 1`.
    pub constant_c: f64,
    pub horizon: usize,
    pub mode: Mode,
}

impl Default for PolicyConfig {
    fn default() -> Self {
        Self {
            lambda: 1.0,
            bound_s: 1.0,
            bound_l: 1.0,
            noise_r: 0.1,
            gamma_schedule: GammaSchedule::InverseTSquared,
            alpha_scale: 1.0,
            constant_c: 30.0,
            horizon: 1000,
            mode: Mode::LinImed1,
        }
    }
}

impl PolicyConfig {
    pub fn validate(&self) -> Result<()> {
        let positive = |v: f64, name: &str| {
            if v.is_finite() && v > 0.0 {
                Ok(())
            } else {
                Err(Error::Config(format!("{name} must be finite and positive, got {v}")))
            }
        };
        positive(self.lambda, "lambda")?;
        positive(self.bound_s, "S")?;
        positive(self.bound_l, "L")?;
        positive(self.noise_r, "R")?;
        if !(self.alpha_scale.is_finite() && self.alpha_scale >= 0.0) {
            return Err(Error::Config(format!(
                "alpha scale must be finite and non-negative, got {}",
                self.alpha_scale
            )));
        }
        if !(self.constant_c.is_finite() && self.constant_c >= 1.0) {
            return Err(Error::Config(format!("C must be >= 1, got {}", self.constant_c)));
        }
        if self.horizon == 0 {
            return Err(Error::Config("horizon T must be at least 1".into()));
        }
        if let GammaSchedule::Constant(g) = self.gamma_schedule {
            if !(g > 0.0 && g <= 1.0) {
                return Err(Error::Config(format!("constant gamma must lie in (0, 1], got {g}")));
            }
        }
        Ok(())
    }
}

/// Squared confidence radius `β_n(γ_n)` at `n = t − 1` completed rounds.
pub fn beta(n: usize, dim: usize, cfg: &PolicyConfig) -> Result<f64> {
    let gamma = cfg.gamma_schedule.at(n);
    if !(gamma.is_finite() && gamma > 0.0) {
        return Err(Error::Config(format!("gamma must be positive, got {gamma}")));
    }
    let l_sq = cfg.bound_l * cfg.bound_l;
    let arg = (1.0 + n as f64 * l_sq / cfg.lambda) / gamma;
    let log_term = (dim as f64 * arg.ln()).max(0.0);
    let root = cfg.noise_r * log_term.sqrt() + cfg.lambda.sqrt() * cfg.bound_s;
    Ok(root * root)
}

/// Per-arm quantities computed during selection.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ArmStats {
    pub arm_id: usize,
    /// `μ̂ = ⟨θ̂, x⟩`
    pub mean: f64,
    /// `mean + √width_sq`
    pub ucb: f64,
    /// `α² β ‖x‖²_{V⁻¹}`
    pub width_sq: f64,
    pub gap: f64,
    /// Selection index; the minimum is pulled.
    pub index: f64,
}

impl ArmStats {
    pub fn new(arm_id: usize, mean: f64, width_sq: f64) -> Self {
        Self {
            arm_id,
            mean,
            ucb: mean + width_sq.sqrt(),
            width_sq,
            gap: 0.0,
            index: 0.0,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Selection {
    pub arm_id: usize,
    /// Position of the chosen arm within the offered [`ArmSet`].
    pub position: usize,
    pub stats: Vec<ArmStats>,
}

pub trait Policy: Send {
    fn mode(&self) -> Mode;

    fn dim(&self) -> usize;

    fn select(&mut self, arms: &ArmSet, rng: &mut dyn RngCore) -> Result<Selection>;

    fn observe(&mut self, context: &DVector<f64>, reward: f64) -> Result<()>;

    /// The ridge state behind the point estimate, for single-estimator policies.
    fn ridge(&self) -> Option<&RidgeState> {
        None
    }
}

pub fn build_policy(cfg: &PolicyConfig, dim: usize) -> Result<Box<dyn Policy>> {
    cfg.validate()?;
    Ok(match cfg.mode {
        Mode::LinImed1 | Mode::LinImed2 | Mode::LinImed3 => Box::new(LinImed::new(cfg.clone(), dim)?),
        Mode::LinUcb => Box::new(LinUcb::new(cfg.clone(), dim)?),
        Mode::LinTs => Box::new(LinTs::new(cfg.clone(), dim)?),
        Mode::SupLinImed => Box::new(SupLinImed::new(cfg.clone(), dim)?),
        Mode::Uniform => Box::new(Uniform::new(dim)),
    })
}

fn check_arms(arms: &ArmSet, dim: usize) -> Result<()> {
    let d = arms.dim()?;
    if d != dim {
        return Err(Error::DimensionMismatch { expected: dim, got: d });
    }
    Ok(())
}

/// Mean and scaled width of every arm under `ridge`.
fn ridge_stats(ridge: &RidgeState, arms: &ArmSet, width_scale_sq: f64) -> Vec<ArmStats> {
    arms.arms
        .iter()
        .map(|a| {
            let mean = ridge.estimate().dot(&a.context);
            let width_sq = width_scale_sq * ridge.quad_inv(&a.context);
            ArmStats::new(a.id, mean, width_sq)
        })
        .collect()
}

/// `α² β_{t−1}` for the round carried by `arms`.
fn width_scale_sq(arms: &ArmSet, dim: usize, cfg: &PolicyConfig) -> Result<f64> {
    let n = arms.round.saturating_sub(1);
    Ok(cfg.alpha_scale * cfg.alpha_scale * beta(n, dim, cfg)?)
}
