//! The interaction loop and per-run seeding.

use nalgebra::DVector;
use rand::SeedableRng;
use sha2::{Digest, Sha256};

use linimed::envs::{Environment, RoundRecord};
use linimed::policies::{build_policy, Policy, PolicyConfig};
use linimed::SimRng;

use crate::experiment::Metric;
use crate::{Error, Result};

/// Per-round metric values of one run.
#[derive(Debug, Clone, PartialEq)]
pub struct Trajectory {
    pub label: String,
    pub seed: u64,
    /// Cumulative regret or running CTR after each round.
    pub values: Vec<f64>,
    /// Chosen contexts, kept only when requested.
    pub chosen: Vec<DVector<f64>>,
}

impl Trajectory {
    pub fn final_value(&self) -> Option<f64> {
        self.values.last().copied()
    }
}

/// Seed of one run, a hash of `(base_seed, label, α index, repeat)`.
///
/// Independent of scheduling, so parallel and sequential runs agree.
pub fn derive_seed(base_seed: u64, label: &str, alpha_index: usize, repeat: usize) -> u64 {
    let mut h = Sha256::new();
    h.update(base_seed.to_le_bytes());
    h.update((label.len() as u64).to_le_bytes());
    h.update(label.as_bytes());
    h.update((alpha_index as u64).to_le_bytes());
    h.update((repeat as u64).to_le_bytes());
    let digest = h.finalize();
    let mut bytes = [0u8; 8];
    bytes.copy_from_slice(&digest[..8]);
    u64::from_le_bytes(bytes)
}

/// Runs `policy` for `horizon` rounds, calling `hook` after every observation.
///
/// The environment and the policy draw from separate streams of `seed`.
pub fn run_with<P, F>(
    env: &Environment,
    policy: &mut P,
    horizon: usize,
    seed: u64,
    metric: Metric,
    keep_contexts: bool,
    mut hook: F,
) -> Result<Trajectory>
where
    P: Policy + ?Sized,
    F: FnMut(&RoundRecord, &P) -> Result<()>,
{
    if policy.dim() != env.dim() {
        return Err(Error::Core(linimed::Error::DimensionMismatch {
            expected: env.dim(),
            got: policy.dim(),
        }));
    }
    let mut env_rng = SimRng::seed_from_u64(seed);
    env_rng.set_stream(0);
    let mut policy_rng = SimRng::seed_from_u64(seed);
    policy_rng.set_stream(1);

    let mut values = Vec::with_capacity(horizon);
    let mut chosen = Vec::new();
    let mut total = 0.0;
    for t in 1..=horizon {
        let round = env.round(t, &mut env_rng);
        let sel = policy
            .select(&round.arms, &mut policy_rng)
            .map_err(|source| Error::Round { round: t, source })?;
        let context = &round.arms.arms[sel.position].context;
        let reward = env.draw_reward(&round, sel.position, &mut env_rng);
        policy
            .observe(context, reward)
            .map_err(|source| Error::Round { round: t, source })?;
        let record = RoundRecord {
            round: t,
            arm_id: sel.arm_id,
            reward,
            expected: round.expected[sel.position],
            regret: round.regret_of(sel.position),
            best_arm: round.arms.arms[round.best_position()].id,
            stats: Some(sel.stats),
        };
        match metric {
            Metric::CumulativeRegret => {
                total += record.regret;
                values.push(total);
            }
            Metric::Ctr => {
                total += record.reward;
                values.push(total / t as f64);
            }
        }
        if keep_contexts {
            chosen.push(context.clone());
        }
        hook(&record, policy)?;
    }
    Ok(Trajectory {
        label: policy.mode().label().to_string(),
        seed,
        values,
        chosen,
    })
}

/// Builds the policy from `cfg` and runs it once.
pub fn run_one(
    env: &Environment,
    cfg: &PolicyConfig,
    horizon: usize,
    seed: u64,
    metric: Metric,
    keep_contexts: bool,
) -> Result<Trajectory> {
    let mut policy = build_policy(cfg, env.dim())?;
    run_with(env, policy.as_mut(), horizon, seed, metric, keep_contexts, |_, _| Ok(()))
}
