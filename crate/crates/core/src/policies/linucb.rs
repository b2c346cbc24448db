use nalgebra::DVector;
use rand::RngCore;

use super::{check_arms, argmin_index, ridge_stats, width_scale_sq, Mode, Policy, PolicyConfig, Selection};
use crate::envs::ArmSet;
use crate::linalg::RidgeState;
use crate::Result;

/// Optimistic baseline: pulls `argmax μ̂ + α√β ‖x‖_{V⁻¹}`.
#[derive(Debug, Clone)]
pub struct LinUcb {
    cfg: PolicyConfig,
    ridge: RidgeState,
}

impl LinUcb {
    pub fn new(cfg: PolicyConfig, dim: usize) -> Result<Self> {
        cfg.validate()?;
        let ridge = RidgeState::new(dim, cfg.lambda)?;
        Ok(Self { cfg, ridge })
    }
}

impl Policy for LinUcb {
    fn mode(&self) -> Mode {
        Mode::LinUcb
    }

    fn dim(&self) -> usize {
        self.ridge.dim()
    }

    fn select(&mut self, arms: &ArmSet, _rng: &mut dyn RngCore) -> Result<Selection> {
        check_arms(arms, self.dim())?;
        let scale = width_scale_sq(arms, self.dim(), &self.cfg)?;
        let mut stats = ridge_stats(&self.ridge, arms, scale);
        let top = stats.iter().map(|s| s.ucb).fold(f64::NEG_INFINITY, f64::max);
        for s in stats.iter_mut() {
            s.gap = top - s.ucb;
            s.index = -s.ucb;
        }
        let position = argmin_index(&stats).expect("non-empty arm set");
        Ok(Selection {
            arm_id: stats[position].arm_id,
            position,
            stats,
        })
    }

    fn observe(&mut self, context: &DVector<f64>, reward: f64) -> Result<()> {
        self.ridge.update(context, reward)
    }

    fn ridge(&self) -> Option<&RidgeState> {
        Some(&self.ridge)
    }
}
