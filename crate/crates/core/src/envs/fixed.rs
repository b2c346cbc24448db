//! A time-invariant arm set under the linear reward model.

use nalgebra::DVector;

use super::{ArmSet, LinearModel, Round};
use crate::{Error, Result};

#[derive(Debug, Clone)]
pub struct FixedEnv {
    arms: ArmSet,
    expected: Vec<f64>,
    model: LinearModel,
}

impl FixedEnv {
    pub fn new(contexts: Vec<DVector<f64>>, theta_star: DVector<f64>, noise_r: f64) -> Result<Self> {
        if contexts.is_empty() {
            return Err(Error::Config("a fixed environment needs at least one arm".into()));
        }
        let arms = ArmSet::new(1, contexts);
        let d = arms.dim()?;
        if d != theta_star.len() {
            return Err(Error::DimensionMismatch {
                expected: theta_star.len(),
                got: d,
            });
        }
        let model = LinearModel::new(theta_star, noise_r)?;
        let expected = arms.arms.iter().map(|a| model.expected(&a.context)).collect();
        Ok(Self { arms, expected, model })
    }

    pub fn dim(&self) -> usize {
        self.model.theta_star.len()
    }

    pub fn num_arms(&self) -> usize {
        self.arms.len()
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

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn rejects_mismatched_dimensions() {
        let theta = DVector::from_column_slice(&[1.0, 0.0]);
        assert!(FixedEnv::new(vec![], theta.clone(), 0.1).is_err());
        assert!(FixedEnv::new(vec![DVector::from_column_slice(&[1.0])], theta, 0.1).is_err());
    }

    #[test]
    fn round_carries_time_index() {
        let theta = DVector::from_column_slice(&[0.5, 0.5]);
        let env = FixedEnv::new(vec![DVector::from_column_slice(&[1.0, 0.0])], theta, 0.0).unwrap();
        let r = env.round(7);
        assert_eq!(r.arms.round, 7);
        assert_eq!(r.expected, vec![0.5]);
    }
}
