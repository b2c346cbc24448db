use nalgebra::DVector;
use rand::RngCore;
use rand_distr::{Distribution, StandardNormal};

use super::{argmin_index, check_arms, ridge_stats, width_scale_sq, Mode, Policy, PolicyConfig, Selection};
use crate::envs::ArmSet;
use crate::linalg::RidgeState;
use crate::Result;

/// Linear Thompson sampling: `θ̃ = θ̂ + α√β · L z` with `L Lᵀ = V⁻¹`,
/// `z ~ N(0, I)`, then `argmax ⟨θ̃, x⟩`.
#[derive(Debug, Clone)]
pub struct LinTs {
    cfg: PolicyConfig,
    ridge: RidgeState,
}

impl LinTs {
    pub fn new(cfg: PolicyConfig, dim: usize) -> Result<Self> {
        cfg.validate()?;
        let ridge = RidgeState::new(dim, cfg.lambda)?;
        Ok(Self { cfg, ridge })
    }

    fn sample_theta(&self, scale: f64, rng: &mut dyn RngCore) -> Result<DVector<f64>> {
        let d = self.dim();
        let z = DVector::from_fn(d, |_, _| StandardNormal.sample(&mut *rng));
        let factor = self.ridge.inverse_sqrt_factor()?;
        Ok(self.ridge.estimate() + (factor * z) * scale)
    }
}

impl Policy for LinTs {
    fn mode(&self) -> Mode {
        Mode::LinTs
    }

    fn dim(&self) -> usize {
        self.ridge.dim()
    }

    fn select(&mut self, arms: &ArmSet, rng: &mut dyn RngCore) -> Result<Selection> {
        check_arms(arms, self.dim())?;
        let scale_sq = width_scale_sq(arms, self.dim(), &self.cfg)?;
        let theta = self.sample_theta(scale_sq.sqrt(), rng)?;
        let mut stats = ridge_stats(&self.ridge, arms, scale_sq);
        let scores: Vec<f64> = arms.arms.iter().map(|a| theta.dot(&a.context)).collect();
        let top = scores.iter().copied().fold(f64::NEG_INFINITY, f64::max);
        for (s, score) in stats.iter_mut().zip(&scores) {
            s.gap = top - score;
            s.index = -score;
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

#[cfg(test)]
mod tests {
    use super::*;
    use crate::SimRng;
    use rand::SeedableRng;

    fn dv(xs: &[f64]) -> DVector<f64> {
        DVector::from_column_slice(xs)
    }

    #[test]
    fn zero_alpha_is_greedy() {
        let cfg = PolicyConfig {
            mode: Mode::LinTs,
            alpha_scale: 0.0,
            ..PolicyConfig::default()
        };
        let mut p = LinTs::new(cfg, 2).unwrap();
        p.observe(&dv(&[1.0, 0.0]), 0.2).unwrap();
        p.observe(&dv(&[0.0, 1.0]), 0.9).unwrap();
        let arms = ArmSet::new(3, vec![dv(&[1.0, 0.0]), dv(&[0.0, 1.0]), dv(&[0.5, 0.5])]);
        let mut rng = SimRng::seed_from_u64(1);
        for _ in 0..50 {
            let sel = p.select(&arms, &mut rng).unwrap();
            let greedy = sel
                .stats
                .iter()
                .enumerate()
                .max_by(|a, b| a.1.mean.total_cmp(&b.1.mean))
                .unwrap()
                .0;
            assert_eq!(sel.position, greedy);
        }
    }

    #[test]
    fn sampling_covariance_matches_scaled_inverse() {
        let cfg = PolicyConfig {
            mode: Mode::LinTs,
            ..PolicyConfig::default()
        };
        let mut p = LinTs::new(cfg, 2).unwrap();
        p.observe(&dv(&[1.0, 1.0]), 0.5).unwrap();
        p.observe(&dv(&[1.0, -0.5]), 0.1).unwrap();
        let mut rng = SimRng::seed_from_u64(5);
        let n = 100_000;
        let scale = 0.7;
        let mut cov = nalgebra::DMatrix::<f64>::zeros(2, 2);
        for _ in 0..n {
            let dev = p.sample_theta(scale, &mut rng).unwrap() - p.ridge.estimate();
            cov += &dev * dev.transpose();
        }
        cov /= n as f64;
        let target = p.ridge.gram_inv() * (scale * scale);
        assert!((cov - target).abs().max() < 0.01);
    }

    #[test]
    fn seeded_selection_reproducible() {
        let cfg = PolicyConfig { mode: Mode::LinTs, ..PolicyConfig::default() };
        let arms = ArmSet::new(2, vec![dv(&[1.0, 0.0]), dv(&[0.0, 1.0]), dv(&[0.6, 0.6])]);
        let run = |seed| {
            let mut p = LinTs::new(cfg.clone(), 2).unwrap();
            let mut rng = SimRng::seed_from_u64(seed);
            (0..30).map(|_| p.select(&arms, &mut rng).unwrap().arm_id).collect::<Vec<_>>()
        };
        assert_eq!(run(9), run(9));
    }
}
