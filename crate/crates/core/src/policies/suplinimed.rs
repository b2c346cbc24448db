//! SupLinIMED: layered elimination with per-level BaseLinUCB estimators.
//!
//! Each of the `S' = ⌈ln T⌉` levels owns a ridge estimator with `λ = 1`,
//! fed only by the rounds recorded at that level. A round walks the levels:
//!
//! 1. all widths `≤ 1/√T`: pick by the IMED-style index (anchor capped at `ln 2T`),
//!    record nothing;
//! 2. all widths `≤ 2^{-s}`: keep arms with `Ŷ + w ≥ max(Ŷ + w) − 2^{1−s}`, descend;
//! 3. otherwise: pull the lowest-id arm with `w > 2^{-s}` and record the round at level `s`.
//!
//! Widths are `w = α √(xᵀ V_s⁻¹ x)` with `α = alpha_scale · √(½ ln(2TK/γ))`
//! and `γ = 1/(2t²)`.

use nalgebra::DVector;
use rand::RngCore;

use super::{argmin_index, check_arms, ArmStats, Mode, Policy, PolicyConfig, Selection};
use crate::envs::ArmSet;
use crate::linalg::RidgeState;
use crate::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum SupCase {
    /// Every surviving width is at most `1/√T`.
    Exploit,
    /// Every width is at most `2^{-s}`; the level was passed through.
    Eliminate,
    /// Some width exceeds `2^{-s}`; the round is recorded at this level.
    Explore,
}

impl SupCase {
    pub fn number(&self) -> u8 {
        match self {
            SupCase::Exploit => 1,
            SupCase::Eliminate => 2,
            SupCase::Explore => 3,
        }
    }
}

/// Trace of one SupLinIMED decision.
#[derive(Debug, Clone, PartialEq)]
pub struct SupLinStep {
    pub round: usize,
    /// Terminal case (never [`SupCase::Eliminate`]).
    pub case: SupCase,
    /// 1-based level at which the arm was chosen.
    pub level: usize,
    /// Levels visited, including the terminal one.
    pub iterations: usize,
    /// Arm ids surviving at the terminal level.
    pub active: Vec<usize>,
    /// Widths of `active` at the terminal level.
    pub widths: Vec<f64>,
    pub alpha: f64,
}

#[derive(Debug, Clone)]
pub struct SupLinImed {
    cfg: PolicyConfig,
    dim: usize,
    levels: Vec<RidgeState>,
    /// Rounds recorded at each level (`Ψ^s`).
    psi: Vec<Vec<usize>>,
    pending: Option<(usize, usize)>,
    last: Option<SupLinStep>,
}

/// `S' = ⌈ln T⌉`, at least one level.
pub fn level_count(horizon: usize) -> usize {
    ((horizon as f64).ln().ceil() as usize).max(1)
}

impl SupLinImed {
    pub fn new(cfg: PolicyConfig, dim: usize) -> Result<Self> {
        cfg.validate()?;
        let n = level_count(cfg.horizon);
        let levels = (0..n)
            .map(|_| RidgeState::new(dim, 1.0))
            .collect::<Result<Vec<_>>>()?;
        Ok(Self {
            cfg,
            dim,
            levels,
            psi: vec![Vec::new(); n],
            pending: None,
            last: None,
        })
    }

    pub fn num_levels(&self) -> usize {
        self.levels.len()
    }

    pub fn level(&self, s: usize) -> &RidgeState {
        &self.levels[s - 1]
    }

    /// Rounds recorded at level `s` (1-based).
    pub fn psi(&self, s: usize) -> &[usize] {
        &self.psi[s - 1]
    }

    pub fn psi_sizes(&self) -> Vec<usize> {
        self.psi.iter().map(Vec::len).collect()
    }

    pub fn last_step(&self) -> Option<&SupLinStep> {
        self.last.as_ref()
    }

    /// `α_t = alpha_scale · √(½ ln(2TK/γ_t))`, `γ_t = 1/(2t²)`.
    pub fn width_multiplier(&self, t: usize, k: usize) -> f64 {
        let t = t.max(1) as f64;
        let gamma = 1.0 / (2.0 * t * t);
        let arg = 2.0 * self.cfg.horizon as f64 * k as f64 / gamma;
        self.cfg.alpha_scale * (0.5 * arg.ln()).sqrt()
    }
}

impl Policy for SupLinImed {
    fn mode(&self) -> Mode {
        Mode::SupLinImed
    }

    fn dim(&self) -> usize {
        self.dim
    }

    fn select(&mut self, arms: &ArmSet, _rng: &mut dyn RngCore) -> Result<Selection> {
        check_arms(arms, self.dim)?;
        let t = arms.round.max(1);
        let alpha = self.width_multiplier(t, arms.len());
        let horizon = self.cfg.horizon as f64;
        let exploit_width = 1.0 / horizon.sqrt();
        let mut active: Vec<usize> = (0..arms.len()).collect();
        self.pending = None;

        for s in 1..=self.levels.len() {
            let ridge = &self.levels[s - 1];
            let mut stats: Vec<ArmStats> = active
                .iter()
                .map(|&p| {
                    let x = &arms.arms[p].context;
                    let mean = ridge.estimate().dot(x);
                    let width = alpha * ridge.quad_inv(x).sqrt();
                    ArmStats::new(arms.arms[p].id, mean, width * width)
                })
                .collect();
            let widths: Vec<f64> = stats.iter().map(|st| st.width_sq.sqrt()).collect();
            let level_width = 0.5f64.powi(s as i32);

            if widths.iter().all(|&w| w <= exploit_width) {
                sup_indices(&mut stats, horizon);
                let pick = argmin_index(&stats).expect("active set is never empty");
                let position = active[pick];
                self.last = Some(SupLinStep {
                    round: t,
                    case: SupCase::Exploit,
                    level: s,
                    iterations: s,
                    active: stats.iter().map(|st| st.arm_id).collect(),
                    widths,
                    alpha,
                });
                return Ok(Selection {
                    arm_id: arms.arms[position].id,
                    position,
                    stats,
                });
            }

            if widths.iter().all(|&w| w <= level_width) {
                let top = stats
                    .iter()
                    .map(|st| st.ucb)
                    .fold(f64::NEG_INFINITY, f64::max);
                let cutoff = top - 2.0 * level_width;
                active = active
                    .iter()
                    .zip(&stats)
                    .filter(|(_, st)| st.ucb >= cutoff)
                    .map(|(&p, _)| p)
                    .collect();
                continue;
            }

            let mut chosen: Option<usize> = None;
            for (i, &w) in widths.iter().enumerate() {
                if w > level_width
                    && chosen.is_none_or(|c| stats[i].arm_id < stats[c].arm_id)
                {
                    chosen = Some(i);
                }
            }
            let pick = chosen.expect("some width exceeds the level threshold");
            let position = active[pick];
            self.pending = Some((s, t));
            self.last = Some(SupLinStep {
                round: t,
                case: SupCase::Explore,
                level: s,
                iterations: s,
                active: stats.iter().map(|st| st.arm_id).collect(),
                widths,
                alpha,
            });
            return Ok(Selection {
                arm_id: arms.arms[position].id,
                position,
                stats,
            });
        }
        Err(Error::Numeric(format!(
            "SupLinIMED level loop exhausted {} levels at round {t}",
            self.levels.len()
        )))
    }

    fn observe(&mut self, context: &DVector<f64>, reward: f64) -> Result<()> {
        if context.len() != self.dim {
            return Err(Error::DimensionMismatch {
                expected: self.dim,
                got: context.len(),
            });
        }
        if let Some((s, t)) = self.pending.take() {
            self.levels[s - 1].update(context, reward)?;
            self.psi[s - 1].push(t);
        }
        Ok(())
    }
}

/// IMED-style index at the terminal level; anchor is `argmax Ŷ`, capped at `ln 2T`.
fn sup_indices(stats: &mut [ArmStats], horizon: f64) {
    let mut anchor = 0;
    for (i, st) in stats.iter().enumerate() {
        let best = &stats[anchor];
        if st.mean > best.mean || (st.mean == best.mean && st.arm_id < best.arm_id) {
            anchor = i;
        }
    }
    let top = stats[anchor].mean;
    let cap = (2.0 * horizon).ln();
    for (i, st) in stats.iter_mut().enumerate() {
        st.gap = if i == anchor { 0.0 } else { (top - st.mean).max(0.0) };
        if st.width_sq <= 0.0 {
            st.index = f64::INFINITY;
            continue;
        }
        let explore = -st.width_sq.ln();
        st.index = if i == anchor {
            cap.min(explore)
        } else {
            st.gap * st.gap / st.width_sq + explore
        };
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

    fn cfg(horizon: usize, alpha_scale: f64) -> PolicyConfig {
        PolicyConfig {
            mode: Mode::SupLinImed,
            horizon,
            alpha_scale,
            ..PolicyConfig::default()
        }
    }

    #[test]
    fn first_round_explores_at_level_one() {
        let p = SupLinImed::new(cfg(1000, 1.0), 2).unwrap();
        let alpha = p.width_multiplier(1, 10);
        // √(½ ln(2·1000·10·2))
        assert!((alpha - (0.5 * 40_000f64.ln()).sqrt()).abs() < 1e-12);
        assert!((alpha - 2.3018).abs() < 1e-4);
        assert!(alpha > 0.5);

        let mut p = p;
        let contexts = (0..10)
            .map(|i| {
                let a = i as f64 * 0.3;
                dv(&[a.cos(), a.sin()])
            })
            .collect();
        let arms = ArmSet::new(1, contexts);
        let sel = p.select(&arms, &mut SimRng::seed_from_u64(0)).unwrap();
        assert_eq!(sel.arm_id, 0);
        let step = p.last_step().unwrap();
        assert_eq!(step.case, SupCase::Explore);
        assert_eq!(step.level, 1);
        p.observe(&arms.arms[0].context, 0.5).unwrap();
        assert_eq!(p.psi_sizes()[0], 1);
        assert_eq!(p.psi(1), &[1]);
    }

    #[test]
    fn identical_narrow_arms_pick_anchor() {
        // α tiny so every width is below 1/√T from the start.
        let mut p = SupLinImed::new(cfg(100, 1e-6), 2).unwrap();
        let x = dv(&[0.6, 0.8]);
        let arms = ArmSet::new(1, vec![x.clone(), x.clone(), x]);
        let sel = p.select(&arms, &mut SimRng::seed_from_u64(0)).unwrap();
        assert_eq!(sel.arm_id, 0);
        assert_eq!(p.last_step().unwrap().case, SupCase::Exploit);
        assert!(sel.stats.iter().all(|s| s.gap == 0.0));
        let before = p.psi_sizes();
        p.observe(&arms.arms[0].context, 1.0).unwrap();
        assert_eq!(p.psi_sizes(), before);
    }

    #[test]
    fn elimination_filter_by_enumeration() {
        // Ŷ + w = (1.0, 0.9, 0.2) at s = 1: cutoff 1.0 − 2^0 = 0, so all survive.
        let ucb = [1.0, 0.9, 0.2];
        let cutoff = 1.0 - 2f64.powi(1 - 1);
        let survivors: Vec<usize> = (0..3).filter(|&i| ucb[i] >= cutoff).collect();
        assert_eq!(survivors, vec![0, 1, 2]);

        // Same filter through the policy: level 1 holds one observation per axis so
        // widths sit between 1/√T and 1/2.
        let horizon = 10_000;
        let mut p = SupLinImed::new(cfg(horizon, 0.35), 2).unwrap();
        for _ in 0..3 {
            p.levels[0].update(&dv(&[1.0, 0.0]), 1.0).unwrap();
            p.levels[0].update(&dv(&[0.0, 1.0]), 0.0).unwrap();
        }
        let arms = ArmSet::new(5, vec![dv(&[1.0, 0.0]), dv(&[0.9, 0.0]), dv(&[0.0, 0.2])]);
        // Level-1 quantities by hand: V = diag(4, 4), θ̂ = [0.75, 0].
        let alpha = p.width_multiplier(5, 3);
        let by_hand: Vec<(f64, f64)> = arms
            .arms
            .iter()
            .map(|a| (0.75 * a.context[0], alpha * (a.context.norm_squared() / 4.0).sqrt()))
            .collect();
        assert!(by_hand.iter().all(|&(_, w)| w <= 0.5 && w > 0.01));
        let top = by_hand.iter().map(|&(y, w)| y + w).fold(f64::NEG_INFINITY, f64::max);
        let expected: Vec<usize> = (0..3).filter(|&i| by_hand[i].0 + by_hand[i].1 >= top - 1.0).collect();
        p.select(&arms, &mut SimRng::seed_from_u64(0)).unwrap();
        let step = p.last_step().unwrap().clone();
        assert_eq!(step.level, 2);
        assert_eq!(step.case, SupCase::Explore);
        assert_eq!(step.active, expected);
    }

    #[test]
    fn zero_context_round_is_exploit_and_infinite() {
        let mut p = SupLinImed::new(cfg(50, 1.0), 2).unwrap();
        let arms = ArmSet::new(1, vec![dv(&[0.0, 0.0]), dv(&[0.0, 0.0])]);
        let sel = p.select(&arms, &mut SimRng::seed_from_u64(0)).unwrap();
        assert_eq!(p.last_step().unwrap().case, SupCase::Exploit);
        assert_eq!(sel.arm_id, 0);
        assert!(sel.stats.iter().all(|s| s.index == f64::INFINITY));
    }

    #[test]
    fn level_count_is_ceil_ln() {
        assert_eq!(level_count(1), 1);
        assert_eq!(level_count(1000), 7);
        assert_eq!(level_count(10_000), 10);
    }
}
