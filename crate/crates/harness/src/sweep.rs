//! Parallel execution of an experiment over policies, `α` values and repeats.

use rayon::prelude::*;

use linimed::envs::Environment;
use linimed::policies::PolicyConfig;

use crate::aggregate::{aggregate, AggregateCurve};
use crate::experiment::ExperimentSpec;
use crate::run::{derive_seed, run_one, Trajectory};
use crate::{Error, Result};

#[derive(Debug, Clone, PartialEq)]
pub struct SweepRow {
    pub policy: String,
    pub alpha_index: usize,
    pub alpha: f64,
    pub final_mean: f64,
    pub final_std: f64,
    pub n: usize,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Best {
    pub policy: String,
    pub alpha: f64,
    pub final_mean: f64,
}

/// One row per `(policy, α)`, plus the winning `α` of each policy.
#[derive(Debug, Clone, PartialEq)]
pub struct SweepTable {
    pub rows: Vec<SweepRow>,
    pub best: Vec<Best>,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SeedRecord {
    pub policy: usize,
    pub alpha_index: usize,
    pub repeat: usize,
    pub seed: u64,
}

#[derive(Debug, Clone)]
pub struct ExperimentResult {
    /// Curve of each policy at its best `α`, in policy order.
    pub curves: Vec<AggregateCurve>,
    /// Final values of each policy's repeats at its best `α`.
    pub finals: Vec<Vec<f64>>,
    pub table: SweepTable,
    pub seeds: Vec<SeedRecord>,
}

/// Runs `f` on a pool of `threads` workers, or on the global pool.
pub fn with_threads<T: Send>(threads: Option<usize>, f: impl FnOnce() -> T + Send) -> Result<T> {
    match threads {
        Some(n) => {
            let pool = rayon::ThreadPoolBuilder::new()
                .num_threads(n)
                .build()
                .map_err(|e| Error::Config(format!("thread pool: {e}")))?;
            Ok(pool.install(f))
        }
        None => Ok(f()),
    }
}

/// All repeats of one `(policy, α)` cell, in repeat order.
pub fn run_cell(
    env: &Environment,
    spec: &ExperimentSpec,
    cfg: &PolicyConfig,
    alpha_index: usize,
    keep_contexts: bool,
) -> Result<Vec<Trajectory>> {
    (0..spec.repeats)
        .into_par_iter()
        .map(|r| {
            let seed = derive_seed(spec.base_seed, cfg.mode.label(), alpha_index, r);
            run_one(env, cfg, spec.horizon, seed, spec.metric, keep_contexts)
        })
        .collect()
}

pub fn run_experiment(spec: &ExperimentSpec, threads: Option<usize>) -> Result<ExperimentResult> {
    spec.validate()?;
    let env = spec.env.build()?;
    run_experiment_in(&env, spec, threads)
}

/// [`run_experiment`] on an already built environment.
pub fn run_experiment_in(env: &Environment, spec: &ExperimentSpec, threads: Option<usize>) -> Result<ExperimentResult> {
    spec.validate()?;
    let mut cells = Vec::new();
    for (pi, p) in spec.policies.iter().enumerate() {
        for (ai, alpha) in spec.alphas_for(pi).into_iter().enumerate() {
            let cfg = PolicyConfig {
                alpha_scale: alpha,
                ..p.clone()
            };
            cells.push((pi, ai, cfg));
        }
    }
    let jobs: Vec<(usize, usize)> = (0..cells.len())
        .flat_map(|c| (0..spec.repeats).map(move |r| (c, r)))
        .collect();
    let runs: Vec<Trajectory> = with_threads(threads, || {
        jobs.par_iter()
            .map(|&(c, r)| {
                let (_, ai, cfg) = &cells[c];
                let seed = derive_seed(spec.base_seed, cfg.mode.label(), *ai, r);
                run_one(env, cfg, spec.horizon, seed, spec.metric, false)
            })
            .collect::<Result<Vec<_>>>()
    })??;

    let mut seeds = Vec::with_capacity(jobs.len());
    let mut rows = Vec::with_capacity(cells.len());
    let mut curves: Vec<Option<(AggregateCurve, Vec<f64>)>> = vec![None; spec.policies.len()];
    let mut best: Vec<Option<Best>> = vec![None; spec.policies.len()];
    for (c, (pi, ai, cfg)) in cells.iter().enumerate() {
        let chunk = &runs[c * spec.repeats..(c + 1) * spec.repeats];
        for (r, t) in chunk.iter().enumerate() {
            seeds.push(SeedRecord {
                policy: *pi,
                alpha_index: *ai,
                repeat: r,
                seed: t.seed,
            });
        }
        let curve = aggregate(chunk)?;
        let final_mean = curve.final_mean().unwrap_or(0.0);
        rows.push(SweepRow {
            policy: cfg.mode.label().to_string(),
            alpha_index: *ai,
            alpha: cfg.alpha_scale,
            final_mean,
            final_std: curve.final_std().unwrap_or(0.0),
            n: curve.n,
        });
        let better = match &best[*pi] {
            None => true,
            Some(b) if spec.metric.higher_is_better() => final_mean > b.final_mean,
            Some(b) => final_mean < b.final_mean,
        };
        if better {
            best[*pi] = Some(Best {
                policy: cfg.mode.label().to_string(),
                alpha: cfg.alpha_scale,
                final_mean,
            });
            let finals = chunk.iter().map(|t| t.final_value().unwrap_or(0.0)).collect();
            curves[*pi] = Some((curve, finals));
        }
    }
    let (curves, finals) = curves.into_iter().map(|c| c.expect("every policy has a cell")).unzip();
    Ok(ExperimentResult {
        curves,
        finals,
        table: SweepTable {
            rows,
            best: best.into_iter().map(|b| b.expect("every policy has a cell")).collect(),
        },
        seeds,
    })
}

/// Runs every policy over the `α` grid and reports the table and winners.
pub fn sweep_alpha(spec: &ExperimentSpec, threads: Option<usize>) -> Result<SweepTable> {
    if !spec.is_sweep() {
        return Err(Error::Usage("an alpha sweep needs a grid".into()));
    }
    Ok(run_experiment(spec, threads)?.table)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::experiment::EnvSpec;
    use linimed::policies::Mode;

    fn small() -> ExperimentSpec {
        ExperimentSpec::preset(EnvSpec::synthetic(5, 2), &[Mode::LinUcb, Mode::LinImed3], 40, 3, 7)
    }

    #[test]
    fn table_covers_policies_times_grid() {
        let mut spec = small();
        spec.alpha_grid = Some(vec![0.1, 0.3, 0.5]);
        let r = run_experiment(&spec, Some(2)).unwrap();
        assert_eq!(r.table.rows.len(), 6);
        assert_eq!(r.table.best.len(), 2);
        assert_eq!(r.seeds.len(), 18);
        for b in &r.table.best {
            let min = r
                .table
                .rows
                .iter()
                .filter(|row| row.policy == b.policy)
                .map(|row| row.final_mean)
                .fold(f64::INFINITY, f64::min);
            assert_eq!(b.final_mean, min);
        }
    }

    #[test]
    fn single_alpha_grid_wins() {
        let mut spec = small();
        spec.alpha_grid = Some(vec![0.4]);
        let t = sweep_alpha(&spec, None).unwrap();
        assert!(t.best.iter().all(|b| b.alpha == 0.4));
    }

    #[test]
    fn empty_grid_is_usage_error() {
        assert!(matches!(sweep_alpha(&small(), None), Err(Error::Usage(_))));
    }

    #[test]
    fn thread_count_does_not_change_results() {
        let spec = small();
        let a = run_experiment(&spec, Some(1)).unwrap();
        let b = run_experiment(&spec, Some(4)).unwrap();
        assert_eq!(a.curves, b.curves);
        assert_eq!(a.finals, b.finals);
    }
}
