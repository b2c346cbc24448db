use nalgebra::DVector;
use rand::RngCore;

use super::{
    argmin_index, check_arms, linimed_indices, ridge_stats, width_scale_sq, ImedVariant, Mode,
    Policy, PolicyConfig, Selection,
};
use crate::envs::ArmSet;
use crate::linalg::RidgeState;
use crate::{Error, Result};

/// LinIMED-1/2/3 over a single ridge estimator.
#[derive(Debug, Clone)]
pub struct LinImed {
    cfg: PolicyConfig,
    variant: ImedVariant,
    ridge: RidgeState,
}

impl LinImed {
    pub fn new(cfg: PolicyConfig, dim: usize) -> Result<Self> {
        cfg.validate()?;
        let variant = cfg
            .mode
            .imed_variant()
            .ok_or_else(|| Error::Config(format!("{} is not a LinIMED mode", cfg.mode)))?;
        let ridge = RidgeState::new(dim, cfg.lambda)?;
        Ok(Self {
            cfg,
            variant,
            ridge,
        })
    }
}

impl Policy for LinImed {
    fn mode(&self) -> Mode {
        self.cfg.mode
    }

    fn dim(&self) -> usize {
        self.ridge.dim()
    }

    fn select(&mut self, arms: &ArmSet, _rng: &mut dyn RngCore) -> Result<Selection> {
        check_arms(arms, self.dim())?;
        let scale = width_scale_sq(arms, self.dim(), &self.cfg)?;
        let mut stats = ridge_stats(&self.ridge, arms, scale);
        linimed_indices(self.variant, &mut stats, &self.cfg)?;
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
    fn fresh_symmetric_arms_pick_first() {
        for mode in [Mode::LinImed1, Mode::LinImed2, Mode::LinImed3] {
            let cfg = PolicyConfig {
                mode,
                ..PolicyConfig::default()
            };
            let mut p = LinImed::new(cfg, 3).unwrap();
            let arms = ArmSet::new(1, vec![dv(&[1.0, 0.0, 0.0]), dv(&[0.0, 1.0, 0.0]), dv(&[0.0, 0.0, 1.0])]);
            let mut rng = SimRng::seed_from_u64(0);
            assert_eq!(p.select(&arms, &mut rng).unwrap().arm_id, 0);
        }
    }

    #[test]
    fn observe_updates_estimate() {
        let cfg = PolicyConfig {
            lambda: 1.0,
            ..PolicyConfig::default()
        };
        let mut p = LinImed::new(cfg, 2).unwrap();
        p.observe(&dv(&[1.0, 0.0]), 1.0).unwrap();
        assert!((p.ridge().unwrap().predict(&dv(&[1.0, 0.0])).unwrap() - 0.5).abs() < 1e-15);
        let before = p.ridge().unwrap().estimate().clone();
        p.observe(&dv(&[0.0, 0.0]), 3.0).unwrap();
        assert_eq!(p.ridge().unwrap().estimate(), &before);
        assert!(p.observe(&dv(&[1.0]), 1.0).is_err());
    }

    #[test]
    fn rejects_wrong_dimension_and_mode() {
        let mut p = LinImed::new(PolicyConfig::default(), 2).unwrap();
        let mut rng = SimRng::seed_from_u64(0);
        let arms = ArmSet::new(1, vec![dv(&[1.0, 0.0, 0.0])]);
        assert!(matches!(p.select(&arms, &mut rng), Err(Error::DimensionMismatch { .. })));
        let cfg = PolicyConfig {
            mode: Mode::LinUcb,
            ..PolicyConfig::default()
        };
        assert!(LinImed::new(cfg, 2).is_err());
    }

    #[test]
    fn stats_are_alpha_scaled() {
        let cfg = PolicyConfig {
            alpha_scale: 0.5,
            ..PolicyConfig::default()
        };
        let mut p = LinImed::new(cfg.clone(), 2).unwrap();
        let arms = ArmSet::new(4, vec![dv(&[1.0, 0.0]), dv(&[0.0, 2.0])]);
        let sel = p.select(&arms, &mut SimRng::seed_from_u64(0)).unwrap();
        let b = super::super::beta(3, 2, &cfg).unwrap();
        assert!((sel.stats[0].width_sq - 0.25 * b).abs() < 1e-12);
        assert!((sel.stats[1].width_sq - 0.25 * b * 4.0).abs() < 1e-12);
        for s in &sel.stats {
            assert!((s.ucb - (s.mean + s.width_sq.sqrt())).abs() < 1e-15);
        }
    }
}
