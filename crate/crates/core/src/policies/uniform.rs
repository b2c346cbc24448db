use nalgebra::DVector;
use rand::{Rng, RngCore};

use super::{check_arms, ArmStats, Mode, Policy, Selection};
use crate::envs::ArmSet;
use crate::{Error, Result};

/// Picks an arm uniformly at random, ignoring feedback.
#[derive(Debug, Clone)]
pub struct Uniform {
    dim: usize,
}

impl Uniform {
    pub fn new(dim: usize) -> Self {
        Self { dim }
    }
}

impl Policy for Uniform {
    fn mode(&self) -> Mode {
        Mode::Uniform
    }

    fn dim(&self) -> usize {
        self.dim
    }

    fn select(&mut self, arms: &ArmSet, rng: &mut dyn RngCore) -> Result<Selection> {
        check_arms(arms, self.dim)?;
        let position = rng.random_range(0..arms.len());
        let stats = arms
            .arms
            .iter()
            .map(|a| ArmStats::new(a.id, 0.0, 0.0))
            .collect();
        Ok(Selection {
            arm_id: arms.arms[position].id,
            position,
            stats,
        })
    }

    fn observe(&mut self, context: &DVector<f64>, _reward: f64) -> Result<()> {
        if context.len() != self.dim {
            return Err(Error::DimensionMismatch {
                expected: self.dim,
                got: context.len(),
            });
        }
        Ok(())
    }
}
