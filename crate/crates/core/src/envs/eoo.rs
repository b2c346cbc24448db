//! The "End of Optimism" instance: `θ* = [1, 0]` with arms
//! `[1, 0]`, `[0, 1]` and `[1 − ε, 2ε]`.

use nalgebra::DVector;

use super::{ArmSet, LinearModel, Round};
use crate::{Error, Result};

pub fn eoo_arms(epsilon: f64) -> ArmSet {
    ArmSet::new(
        1,
        vec![
            DVector::from_column_slice(&[1.0, 0.0]),
            DVector::from_column_slice(&[0.0, 1.0]),
            DVector::from_column_slice(&[1.0 - epsilon, 2.0 * epsilon]),
        ],
    )
}

#[derive(Debug, Clone)]
pub struct EooEnv {
    epsilon: f64,
    arms: ArmSet,
    expected: Vec<f64>,
    model: LinearModel,
}

impl EooEnv {
    pub fn new(epsilon: f64, noise_r: f64) -> Result<Self> {
        if !(epsilon.is_finite() && epsilon > 0.0 && epsilon < 0.5) {
            return Err(Error::Config(format!("epsilon must lie in (0, 0.5), got {epsilon}")));
        }
        let model = LinearModel::new(DVector::from_column_slice(&[1.0, 0.0]), noise_r)?;
        let arms = eoo_arms(epsilon);
        let expected = arms.arms.iter().map(|a| model.expected(&a.context)).collect();
        Ok(Self {
            epsilon,
            arms,
            expected,
            model,
        })
    }

    pub fn epsilon(&self) -> f64 {
        self.epsilon
    }

    pub fn model(&self) -> &LinearModel {
        &self.model
    }

    pub fn round(&self, t: usize) -> Round {
        let mut arms = self.arms.clone();
        arms.round = t;
        Round {
            arms,
            expected: self.expected.clone(),
            user: None,
        }
    }
}
