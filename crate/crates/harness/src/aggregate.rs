//! Pointwise mean and sample standard deviation across repeats.

use crate::run::Trajectory;
use crate::{Error, Result};

#[derive(Debug, Clone, PartialEq)]
pub struct AggregateCurve {
    pub label: String,
    pub mean: Vec<f64>,
    /// Sample standard deviation (`n − 1` denominator); zero for one repeat.
    pub std: Vec<f64>,
    pub n: usize,
}

impl AggregateCurve {
    pub fn final_mean(&self) -> Option<f64> {
        self.mean.last().copied()
    }

    pub fn final_std(&self) -> Option<f64> {
        self.std.last().copied()
    }
}

pub fn aggregate(trajectories: &[Trajectory]) -> Result<AggregateCurve> {
    let first = trajectories
        .first()
        .ok_or_else(|| Error::Usage("cannot aggregate zero trajectories".into()))?;
    let len = first.values.len();
    if let Some(t) = trajectories.iter().find(|t| t.values.len() != len) {
        return Err(Error::Usage(format!(
            "trajectory lengths differ: {} vs {}",
            len,
            t.values.len()
        )));
    }
    let n = trajectories.len();
    let mut mean = vec![0.0; len];
    for t in trajectories {
        for (m, v) in mean.iter_mut().zip(&t.values) {
            *m += v;
        }
    }
    for m in mean.iter_mut() {
        *m /= n as f64;
    }
    let mut std = vec![0.0; len];
    if n > 1 {
        for t in trajectories {
            for ((s, v), m) in std.iter_mut().zip(&t.values).zip(&mean) {
                *s += (v - m) * (v - m);
            }
        }
        for s in std.iter_mut() {
            *s = (*s / (n - 1) as f64).sqrt();
        }
    }
    Ok(AggregateCurve {
        label: first.label.clone(),
        mean,
        std,
        n,
    })
}
