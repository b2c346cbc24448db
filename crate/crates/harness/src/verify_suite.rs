//! The `verify` subcommand: runs library validators and flattens their reports.

use std::collections::BTreeMap;
use std::path::Path;

use nalgebra::DVector;
use rand::{Rng, SeedableRng};
use serde_json::{json, Value};

use linimed::policies::{ImedVariant, Mode};
use linimed::verify::{self, CoverageConfig, POTENTIAL_M_GRID};
use linimed::SimRng;

use crate::experiment::EnvSpec;
use crate::run::run_one;
use crate::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq, clap::ValueEnum)]
pub enum Suite {
    Inverse,
    Coverage,
    Potential,
    Index,
    All,
}

/// Flat `key → value` results; `passed` is the conjunction of every check.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct VerifyReport {
    pub entries: BTreeMap<String, Value>,
    pub passed: bool,
}

impl VerifyReport {
    fn check(&mut self, key: &str, ok: bool) {
        self.entries.insert(format!("{key}.pass"), json!(ok));
        self.passed &= ok;
    }

    fn put(&mut self, key: impl Into<String>, v: Value) {
        self.entries.insert(key.into(), v);
    }

    pub fn write_json(&self, path: &Path) -> Result<()> {
        let mut map = serde_json::Map::new();
        for (k, v) in &self.entries {
            map.insert(k.clone(), v.clone());
        }
        map.insert("passed".into(), json!(self.passed));
        let text = serde_json::to_string_pretty(&Value::Object(map))
            .map_err(|e| Error::Usage(format!("verify report: {e}")))?;
        std::fs::write(path, text + "\n").map_err(|e| Error::io(path, e))
    }
}

/// `trials` overrides the suite's sample size: updates, Monte-Carlo trials,
/// horizon, or tuples per variant.
pub fn run_suite(suite: Suite, trials: Option<usize>, seed: u64) -> Result<VerifyReport> {
    let mut report = VerifyReport {
        passed: true,
        ..VerifyReport::default()
    };
    let all = suite == Suite::All;
    if all || suite == Suite::Inverse {
        inverse(&mut report, trials.unwrap_or(500), seed)?;
    }
    if all || suite == Suite::Coverage {
        coverage(&mut report, trials.unwrap_or(1000), seed)?;
    }
    if all || suite == Suite::Potential {
        potential(&mut report, trials.unwrap_or(10_000), seed)?;
    }
    if all || suite == Suite::Index {
        index(&mut report, trials.unwrap_or(1000), seed)?;
    }
    Ok(report)
}

fn inverse(report: &mut VerifyReport, updates: usize, seed: u64) -> Result<()> {
    let mut rng = SimRng::seed_from_u64(seed);
    let trace: Vec<_> = (0..updates)
        .map(|_| {
            let x = DVector::from_fn(10, |_, _| rng.random_range(-1.0..1.0));
            (x, rng.random_range(-1.0..1.0))
        })
        .collect();
    let dev = verify::check_inverse(&trace, 1.0)?;
    report.put("inverse.updates", json!(updates));
    report.put("inverse.max_deviation", json!(dev.max()));
    report.check("inverse", dev.max() < 1e-8);

    // near-collinear contexts; V⁻¹ entries reach 1/λ, so compare relatively
    let lambda = 1e-3;
    let base = DVector::from_column_slice(&[1.0, 1.0, 0.5]);
    let trace: Vec<_> = (0..updates.max(1))
        .map(|_| {
            let jitter = DVector::from_fn(3, |_, _| rng.random_range(-1e-3..1e-3));
            (&base + jitter, rng.random_range(0.0..1.0))
        })
        .collect();
    let dev = verify::check_inverse(&trace, lambda)?;
    let relative = dev.gram_inv * lambda;
    report.put("inverse.collinear.relative_deviation", json!(relative));
    report.check("inverse.collinear", relative < 1e-5);
    Ok(())
}

fn coverage(report: &mut VerifyReport, trials: usize, seed: u64) -> Result<()> {
    let cfg = CoverageConfig {
        trials,
        seed,
        ..CoverageConfig::default()
    };
    let r = verify::check_coverage(&cfg)?;
    report.put("coverage.d", json!(cfg.dim));
    report.put("coverage.T", json!(cfg.horizon));
    report.put("coverage.gamma", json!(r.gamma_nominal));
    report.put("coverage.trials", json!(r.trials));
    report.put("coverage.violations", json!(r.violations));
    report.put("coverage.rate", json!(r.rate));
    report.put("coverage.mc_stderr", json!(r.mc_stderr));
    report.put("coverage.limit", json!(r.gamma_nominal + 3.0 * r.mc_stderr));
    report.put("coverage.round_rate", json!(r.round_rate));
    report.check("coverage", r.passes());
    Ok(())
}

fn potential(report: &mut VerifyReport, horizon: usize, seed: u64) -> Result<()> {
    let cases = [
        ("eoo", EnvSpec::eoo(0.01), Mode::LinImed3),
        ("synthetic", EnvSpec::synthetic(10, 2), Mode::LinUcb),
    ];
    for (name, env_spec, mode) in cases {
        let env = env_spec.build()?;
        let cfg = env_spec.preset(mode, env_spec.default_alpha(mode), horizon);
        let t = run_one(&env, &cfg, horizon, seed, env_spec.metric(), true)?;
        let reports = verify::check_potential(&t.chosen, cfg.lambda, cfg.bound_l, &POTENTIAL_M_GRID)?;
        let mut ok = true;
        for r in &reports {
            report.put(format!("potential.{name}.m={}.count", r.m), json!(r.observed_count));
            report.put(format!("potential.{name}.m={}.bound", r.m), json!(r.bound));
            ok &= r.holds();
        }
        report.put(format!("potential.{name}.T"), json!(horizon));
        report.check(&format!("potential.{name}"), ok);
    }
    Ok(())
}

fn index(report: &mut VerifyReport, tuples: usize, seed: u64) -> Result<()> {
    for (name, v) in [
        ("linimed1", ImedVariant::One),
        ("linimed2", ImedVariant::Two),
        ("linimed3", ImedVariant::Three),
    ] {
        let bad = verify::index_oracle_fuzz(v, tuples, seed)?;
        report.put(format!("index.{name}.tuples"), json!(tuples));
        report.put(format!("index.{name}.disagreements"), json!(bad));
        report.check(&format!("index.{name}"), bad == 0);
    }
    Ok(())
}
