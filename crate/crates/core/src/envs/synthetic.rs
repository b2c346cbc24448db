//! Varying-arm synthetic instance.
//!
//! `θ* = x* = [1/√(d−1), …, 1/√(d−1), 0]`. Arms `1..K−2` are noisy shrunken
//! copies `(1 − 1/(7+z))·[1/√(d−1), …, 1/√(d−1), 1]` with a fresh
//! `z ~ U[0, 0.1]` per arm and round; arm `K−1` is `[0, …, 0, 1]`.

use nalgebra::DVector;
use rand::{Rng, RngCore};

use super::{ArmSet, LinearModel, Round};
use crate::{Error, Result};

pub fn synthetic_theta(d: usize) -> DVector<f64> {
    let c = 1.0 / ((d - 1) as f64).sqrt();
    DVector::from_fn(d, |i, _| if i + 1 < d { c } else { 0.0 })
}

pub fn suboptimal_context(d: usize, z: f64) -> DVector<f64> {
    let shrink = 1.0 - 1.0 / (7.0 + z);
    let c = 1.0 / ((d - 1) as f64).sqrt();
    DVector::from_fn(d, |i, _| if i + 1 < d { shrink * c } else { shrink })
}

fn worst_context(d: usize) -> DVector<f64> {
    DVector::from_fn(d, |i, _| if i + 1 == d { 1.0 } else { 0.0 })
}

fn check(k: usize, d: usize) -> Result<()> {
    if d < 2 {
        return Err(Error::Config(format!("synthetic instance needs d >= 2, got {d}")));
    }
    if k < 3 {
        return Err(Error::Config(format!("synthetic instance needs K >= 3, got {k}")));
    }
    Ok(())
}

/// Arm set of round `t`; consumes `K − 2` uniform draws from `rng`.
pub fn synthetic_arms(t: usize, k: usize, d: usize, rng: &mut dyn RngCore) -> Result<ArmSet> {
    check(k, d)?;
    let mut contexts = Vec::with_capacity(k);
    contexts.push(synthetic_theta(d));
    for _ in 0..k - 2 {
        let z = rng.random_range(0.0..=0.1);
        contexts.push(suboptimal_context(d, z));
    }
    contexts.push(worst_context(d));
    Ok(ArmSet::new(t, contexts))
}

#[derive(Debug, Clone)]
pub struct SyntheticEnv {
    k: usize,
    d: usize,
    model: LinearModel,
}

impl SyntheticEnv {
    pub fn new(k: usize, d: usize, noise_r: f64) -> Result<Self> {
        check(k, d)?;
        Ok(Self {
            k,
            d,
            model: LinearModel::new(synthetic_theta(d), noise_r)?,
        })
    }

    pub fn dim(&self) -> usize {
        self.d
    }

    pub fn num_arms(&self) -> usize {
        self.k
    }

    pub fn model(&self) -> &LinearModel {
        &self.model
    }

    pub fn round(&self, t: usize, rng: &mut dyn RngCore) -> Round {
        let arms = synthetic_arms(t, self.k, self.d, rng).expect("validated at construction");
        let expected = arms.arms.iter().map(|a| self.model.expected(&a.context)).collect();
        Round {
            arms,
            expected,
            user: None,
        }
    }
}
