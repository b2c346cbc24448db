//! Independent oracles and statistical validators.
//!
//! Nothing here reuses the index code in [`crate::policies`]; the index
//! oracle is a separate transcription so the two can be diffed.

use nalgebra::DVector;
use rand::{Rng, SeedableRng};
use rand_distr::{Distribution, StandardNormal};

use crate::linalg::RidgeState;
use crate::policies::{beta, linimed_indices, ArmStats, GammaSchedule, ImedVariant, Mode, PolicyConfig};
use crate::{Error, Result, SimRng};

/// Grid of thresholds `m` used for the elliptical potential count.
pub const POTENTIAL_M_GRID: [f64; 5] = [0.01, 0.1, 0.5, 1.0, 2.0];

#[derive(Debug, Clone, Copy, Default, PartialEq)]
pub struct InverseDeviation {
    pub gram_inv: f64,
    pub estimate: f64,
    pub mahalanobis: f64,
}

impl InverseDeviation {
    pub fn max(&self) -> f64 {
        self.gram_inv.max(self.estimate).max(self.mahalanobis)
    }
}

/// Replays `trace` through [`RidgeState`] and through a dense LU inverse
/// recomputed from scratch every step; returns the largest disagreement.
pub fn check_inverse(trace: &[(DVector<f64>, f64)], lambda: f64) -> Result<InverseDeviation> {
    let mut dev = InverseDeviation::default();
    let Some((first, _)) = trace.first() else {
        return Ok(dev);
    };
    let d = first.len();
    let mut state = RidgeState::new(d, lambda)?;
    let mut gram = nalgebra::DMatrix::<f64>::identity(d, d) * lambda;
    let mut moment = DVector::<f64>::zeros(d);
    for (x, y) in trace {
        state.update(x, *y)?;
        gram += x * x.transpose();
        moment += x * *y;
        let inv = gram
            .clone()
            .try_inverse()
            .ok_or_else(|| Error::Numeric("reference Gram matrix is singular".into()))?;
        dev.gram_inv = dev.gram_inv.max((state.gram_inv() - &inv).abs().max());
        let est = &inv * &moment;
        dev.estimate = dev.estimate.max((state.estimate() - est).abs().max());
        let q = x.dot(&(&inv * x));
        dev.mahalanobis = dev.mahalanobis.max((state.mahalanobis_sq(x)? - q).abs());
    }
    Ok(dev)
}

#[derive(Debug, Clone)]
pub struct CoverageConfig {
    pub dim: usize,
    pub horizon: usize,
    pub gamma: f64,
    pub trials: usize,
    /// Noise actually injected into rewards.
    pub data_noise: f64,
    /// Noise level `R` assumed inside `β`.
    pub noise_r: f64,
    pub lambda: f64,
    pub bound_s: f64,
    pub bound_l: f64,
    /// Size of the fixed arm set cycled round-robin.
    pub arms: usize,
    pub seed: u64,
}

impl Default for CoverageConfig {
    fn default() -> Self {
        Self {
            dim: 2,
            horizon: 200,
            gamma: 0.05,
            trials: 1000,
            data_noise: 0.1,
            noise_r: 0.1,
            lambda: 1.0,
            bound_s: 1.0,
            bound_l: 1.0,
            arms: 5,
            seed: 0,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CoverageReport {
    pub trials: usize,
    /// Trials in which `θ*` left the ellipsoid at any round.
    pub violations: usize,
    pub gamma_nominal: f64,
    pub rate: f64,
    /// Binomial standard error at the nominal level.
    pub mc_stderr: f64,
    /// Fraction of individual (trial, round) pairs outside the ellipsoid.
    pub round_rate: f64,
}

impl CoverageReport {
    pub fn passes(&self) -> bool {
        self.rate <= self.gamma_nominal + 3.0 * self.mc_stderr
    }
}

fn unit_vector(d: usize, rng: &mut SimRng) -> DVector<f64> {
    loop {
        let v = DVector::<f64>::from_fn(d, |_, _| StandardNormal.sample(&mut *rng));
        let n = v.norm();
        if n > 1e-12 {
            return v / n;
        }
    }
}

/// Monte-Carlo check that `‖θ̂_{t−1} − θ*‖_{V_{t−1}} ≤ √β_{t−1}(γ)` holds
/// with probability at least `1 − γ`, under a round-robin arm schedule.
pub fn check_coverage(cfg: &CoverageConfig) -> Result<CoverageReport> {
    if !(cfg.gamma > 0.0 && cfg.gamma <= 1.0) {
        return Err(Error::Config(format!("gamma must lie in (0, 1], got {}", cfg.gamma)));
    }
    if cfg.trials == 0 || cfg.arms == 0 {
        return Err(Error::Config("trials and arms must be positive".into()));
    }
    let pcfg = PolicyConfig {
        lambda: cfg.lambda,
        bound_s: cfg.bound_s,
        bound_l: cfg.bound_l,
        noise_r: cfg.noise_r,
        gamma_schedule: GammaSchedule::Constant(cfg.gamma),
        horizon: cfg.horizon.max(1),
        ..PolicyConfig::default()
    };
    pcfg.validate()?;
    let mut violations = 0;
    let mut round_violations = 0usize;
    for trial in 0..cfg.trials {
        let mut rng = SimRng::seed_from_u64(cfg.seed);
        rng.set_stream(trial as u64);
        let theta = unit_vector(cfg.dim, &mut rng) * cfg.bound_s;
        let arms: Vec<DVector<f64>> = (0..cfg.arms)
            .map(|_| unit_vector(cfg.dim, &mut rng) * cfg.bound_l)
            .collect();
        let mut ridge = RidgeState::new(cfg.dim, cfg.lambda)?;
        let mut violated = false;
        for t in 1..=cfg.horizon {
            let diff = ridge.estimate() - &theta;
            let dist_sq = diff.dot(&(ridge.gram() * &diff));
            if dist_sq > beta(t - 1, cfg.dim, &pcfg)? {
                violated = true;
                round_violations += 1;
            }
            let x = &arms[(t - 1) % cfg.arms];
            let z: f64 = StandardNormal.sample(&mut rng);
            ridge.update(x, theta.dot(x) + cfg.data_noise * z)?;
        }
        violations += usize::from(violated);
    }
    let n = cfg.trials as f64;
    Ok(CoverageReport {
        trials: cfg.trials,
        violations,
        gamma_nominal: cfg.gamma,
        rate: violations as f64 / n,
        mc_stderr: (cfg.gamma * (1.0 - cfg.gamma) / n).sqrt(),
        round_rate: round_violations as f64 / (n * cfg.horizon.max(1) as f64),
    })
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PotentialReport {
    pub m: f64,
    pub observed_count: usize,
    /// `(6d/m) ln(1 + 2L²/(λm))`
    pub bound: f64,
}

impl PotentialReport {
    pub fn holds(&self) -> bool {
        (self.observed_count as f64) <= self.bound
    }
}

pub fn potential_bound(dim: usize, m: f64, lambda: f64, bound_l: f64) -> f64 {
    6.0 * dim as f64 / m * (1.0 + 2.0 * bound_l * bound_l / (lambda * m)).ln()
}

/// Counts rounds with `‖X_t‖²_{V_{t−1}⁻¹} ≥ m` along a trajectory of chosen
/// contexts, `V₀ = λI`.
pub fn check_potential(
    contexts: &[DVector<f64>],
    lambda: f64,
    bound_l: f64,
    m_grid: &[f64],
) -> Result<Vec<PotentialReport>> {
    if let Some(&m) = m_grid.iter().find(|&&m| !(m > 0.0 && m <= 2.0)) {
        return Err(Error::Usage(format!("m must lie in (0, 2], got {m}")));
    }
    let Some(first) = contexts.first() else {
        let d = 1;
        return Ok(m_grid
            .iter()
            .map(|&m| PotentialReport {
                m,
                observed_count: 0,
                bound: potential_bound(d, m, lambda, bound_l),
            })
            .collect());
    };
    let d = first.len();
    let mut ridge = RidgeState::new(d, lambda)?;
    let mut counts = vec![0usize; m_grid.len()];
    for (t, x) in contexts.iter().enumerate() {
        if x.norm() > bound_l * (1.0 + 1e-9) {
            return Err(Error::Usage(format!(
                "context at step {} has norm {} > L = {bound_l}",
                t + 1,
                x.norm()
            )));
        }
        let q = ridge.mahalanobis_sq(x)?;
        for (c, &m) in counts.iter_mut().zip(m_grid) {
            if q >= m {
                *c += 1;
            }
        }
        ridge.update(x, 0.0)?;
    }
    Ok(m_grid
        .iter()
        .zip(counts)
        .map(|(&m, observed_count)| PotentialReport {
            m,
            observed_count,
            bound: potential_bound(d, m, lambda, bound_l),
        })
        .collect())
}

/// Indices written straight from the algorithm listing, plus the pulled arm.
///
/// `widths` holds `β‖x‖²_{V⁻¹}` per arm; arm ids are positions.
pub fn reference_indices(
    variant: ImedVariant,
    means: &[f64],
    ucbs: &[f64],
    widths: &[f64],
    horizon: usize,
    c: f64,
) -> (Vec<f64>, usize) {
    let k = means.len();
    let score = |a: usize| match variant {
        ImedVariant::One | ImedVariant::Two => means[a],
        ImedVariant::Three => ucbs[a],
    };
    let mut best = 0;
    for a in 1..k {
        if score(a) > score(best) {
            best = a;
        }
    }
    let gaps: Vec<f64> = (0..k).map(|a| score(best) - score(a)).collect();
    let max_gap_sq = gaps.iter().map(|g| g * g).fold(0.0, f64::max);
    let mut idx = vec![0.0; k];
    for a in 0..k {
        let w = widths[a];
        idx[a] = if w == 0.0 {
            f64::INFINITY
        } else if a == best {
            match variant {
                ImedVariant::One => -w.ln(),
                ImedVariant::Two => f64::min((horizon as f64).ln(), -w.ln()),
                // C / 0 = +∞ leaves the second operand
                ImedVariant::Three => f64::min((c / max_gap_sq).ln(), -w.ln()),
            }
        } else {
            gaps[a] * gaps[a] / w - w.ln()
        };
    }
    let mut pick = 0;
    for a in 1..k {
        if idx[a] < idx[pick] {
            pick = a;
        }
    }
    (idx, pick)
}

#[derive(Debug, Clone, PartialEq)]
pub struct IndexCheck {
    pub max_abs_diff: f64,
    pub same_selection: bool,
}

impl IndexCheck {
    pub fn agrees(&self) -> bool {
        self.same_selection && self.max_abs_diff <= 1e-12
    }
}

/// Compares [`linimed_indices`] against [`reference_indices`].
pub fn check_index_oracle(
    variant: ImedVariant,
    means: &[f64],
    ucbs: &[f64],
    widths: &[f64],
    horizon: usize,
    c: f64,
) -> Result<IndexCheck> {
    if means.len() != ucbs.len() || means.len() != widths.len() || means.is_empty() {
        return Err(Error::Usage("means, ucbs and widths must be equal-length and non-empty".into()));
    }
    let mode = match variant {
        ImedVariant::One => Mode::LinImed1,
        ImedVariant::Two => Mode::LinImed2,
        ImedVariant::Three => Mode::LinImed3,
    };
    let cfg = PolicyConfig {
        horizon,
        constant_c: c,
        mode,
        ..PolicyConfig::default()
    };
    let mut stats: Vec<ArmStats> = (0..means.len())
        .map(|a| ArmStats {
            arm_id: a,
            mean: means[a],
            ucb: ucbs[a],
            width_sq: widths[a],
            gap: 0.0,
            index: 0.0,
        })
        .collect();
    linimed_indices(variant, &mut stats, &cfg)?;
    let lib_pick = crate::policies::argmin_index(&stats).expect("non-empty");
    let (reference, ref_pick) = reference_indices(variant, means, ucbs, widths, horizon, c);
    let mut max_abs_diff: f64 = 0.0;
    for (s, r) in stats.iter().zip(&reference) {
        let diff = if s.index == *r {
            0.0
        } else {
            (s.index - r).abs() / r.abs().max(1.0)
        };
        max_abs_diff = max_abs_diff.max(if diff.is_nan() { f64::INFINITY } else { diff });
    }
    Ok(IndexCheck {
        max_abs_diff,
        same_selection: lib_pick == ref_pick,
    })
}

/// Randomized differential test; returns the number of disagreeing tuples.
pub fn index_oracle_fuzz(variant: ImedVariant, tuples: usize, seed: u64) -> Result<usize> {
    let mut rng = SimRng::seed_from_u64(seed);
    let mut disagreements = 0;
    for _ in 0..tuples {
        let k = rng.random_range(1..=6);
        // coarse grid so exact ties in means and UCBs occur regularly
        let means: Vec<f64> = (0..k).map(|_| f64::from(rng.random_range(-8i32..=8)) / 8.0).collect();
        let widths: Vec<f64> = (0..k)
            .map(|_| {
                if rng.random_bool(0.05) {
                    0.0
                } else {
                    10f64.powf(rng.random_range(-6.0..1.0))
                }
            })
            .collect();
        let ucbs: Vec<f64> = means.iter().zip(&widths).map(|(m, w)| m + w.sqrt()).collect();
        let horizon = rng.random_range(2..=1_000_000);
        let c = rng.random_range(1.0..100.0);
        if !check_index_oracle(variant, &means, &ucbs, &widths, horizon, c)?.agrees() {
            disagreements += 1;
        }
    }
    Ok(disagreements)
}
