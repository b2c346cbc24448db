//! Acceptance suite: one PASS/FAIL line per criterion, nonzero exit on any failure.
//!
//! Run with `cargo test -p linimed-harness --test acceptance`. The MovieLens
//! check reads `data/ratings_synth.dat` unless `LINIMED_RATINGS` points elsewhere.

use std::path::{Path, PathBuf};
use std::process::ExitCode;
use std::time::{Duration, Instant};

use linimed::envs::{Environment, SyntheticEnv};
use linimed::policies::{ImedVariant, Mode, PolicyConfig, SupCase, SupLinImed};
use linimed::verify::{
    check_coverage, check_inverse, check_potential, index_oracle_fuzz, CoverageConfig, POTENTIAL_M_GRID,
};
use linimed::SimRng;
use linimed_harness::stats::welch_less;
use linimed_harness::{
    run_cell, run_experiment_in, run_to_dir, run_with, EnvSpec, ExperimentResult, ExperimentSpec, Metric,
};
use nalgebra::DVector;
use rand::{Rng, SeedableRng};

type Outcome = Result<bool, String>;

const MODES: [Mode; 5] = [Mode::LinImed1, Mode::LinImed2, Mode::LinImed3, Mode::LinUcb, Mode::LinTs];

/// Best mean final regrets of the published `K = 10, d = 2` tuning table.
const PUBLISHED: [(Mode, f64); 5] = [
    (Mode::LinImed1, 5.482),
    (Mode::LinImed2, 4.998),
    (Mode::LinImed3, 2.075),
    (Mode::LinUcb, 6.695),
    (Mode::LinTs, 9.201),
];

fn synthetic_spec() -> ExperimentSpec {
    ExperimentSpec::preset(EnvSpec::synthetic(10, 2), &MODES, 1000, 50, 1).with_published_grids()
}

fn eoo_spec() -> ExperimentSpec {
    ExperimentSpec::preset(EnvSpec::eoo(0.01), &[Mode::LinImed3, Mode::LinUcb, Mode::LinTs], 100_000, 10, 1)
}

fn position(spec: &ExperimentSpec, mode: Mode) -> usize {
    spec.policies.iter().position(|p| p.mode == mode).expect("mode in spec")
}

fn mean(xs: &[f64]) -> f64 {
    xs.iter().sum::<f64>() / xs.len() as f64
}

fn secs(d: Duration) -> String {
    format!("{:.1}s", d.as_secs_f64())
}

fn err(e: impl std::fmt::Display) -> String {
    e.to_string()
}

/// `a < b` is contradicted only when `b < a` is significant at 0.05.
fn not_reversed(a: &[f64], b: &[f64]) -> bool {
    welch_less(b, a).is_none_or(|w| w.p_less >= 0.05)
}

fn synthetic_golden(result: &ExperimentResult, spec: &ExperimentSpec, elapsed: Duration) -> Outcome {
    let mut ok = true;
    for (mode, published) in PUBLISHED {
        let i = position(spec, mode);
        let best = &result.table.best[i];
        let within = (best.final_mean - published).abs() <= 0.5 * published;
        let hard = mode != Mode::LinTs;
        if hard {
            ok &= within;
        }
        println!(
            "      {:<10} alpha {:<5} mean {:>7.3} sd {:>6.3}  published {:>6.3}  {}{}",
            best.policy,
            best.alpha,
            best.final_mean,
            result.curves[i].final_std().unwrap_or(0.0),
            published,
            if within { "within 50%" } else { "outside 50%" },
            if hard { "" } else { " (informational)" },
        );
    }
    let finals = |m| &result.finals[position(spec, m)];
    let (l1, l2, l3, ucb) = (
        finals(Mode::LinImed1),
        finals(Mode::LinImed2),
        finals(Mode::LinImed3),
        finals(Mode::LinUcb),
    );
    let welch = welch_less(l3, ucb).ok_or("too few repeats for a t-test")?;
    println!(
        "      Welch LinIMED-3 < LinUCB: t {:.3} df {:.1} p {:.2e}",
        welch.t, welch.df, welch.p_less
    );
    ok &= welch.p_less < 0.05;

    let strict = mean(l3) < mean(l2).min(mean(l1)) && mean(l2).max(mean(l1)) < mean(ucb);
    let ordering = not_reversed(l3, l1) && not_reversed(l3, l2) && not_reversed(l1, ucb) && not_reversed(l2, ucb);
    println!(
        "      ordering LinIMED-3 < LinIMED-2 ~ LinIMED-1 < LinUCB: means strictly ordered {strict}, \
         no pair significantly reversed {ordering}"
    );
    ok &= ordering;
    println!("      runtime {} (budget 120s)", secs(elapsed));
    ok &= elapsed < Duration::from_secs(120);
    Ok(ok)
}

fn end_of_optimism(spec: &ExperimentSpec) -> Result<(bool, ExperimentResult), String> {
    let env = spec.env.build().map_err(err)?;
    let start = Instant::now();
    let result = run_experiment_in(&env, spec, None).map_err(err)?;
    let elapsed = start.elapsed();
    let m = |mode| result.curves[position(spec, mode)].final_mean().unwrap_or(f64::NAN);
    let (l3, ucb, ts) = (m(Mode::LinImed3), m(Mode::LinUcb), m(Mode::LinTs));
    let ratio = if l3 > 0.0 { ucb / l3 } else { f64::INFINITY };
    for b in &result.table.best {
        println!("      {:<10} alpha {:<5} mean regret {:.3}", b.policy, b.alpha, b.final_mean);
    }
    println!("      LinUCB / LinIMED-3 = {ratio:.3}; runtime {} (budget 600s)", secs(elapsed));
    let ok = l3 < ucb && l3 < ts && ratio > 1.5 && elapsed < Duration::from_secs(600);
    Ok((ok, result))
}

fn coverage() -> Outcome {
    let start = Instant::now();
    let r = check_coverage(&CoverageConfig::default()).map_err(err)?;
    let elapsed = start.elapsed();
    println!(
        "      {} / {} trials violated; rate {:.4} limit {:.4}; runtime {} (budget 60s)",
        r.violations,
        r.trials,
        r.rate,
        r.gamma_nominal + 3.0 * r.mc_stderr,
        secs(elapsed)
    );
    Ok(r.passes() && elapsed < Duration::from_secs(60))
}

/// Regenerates every trajectory of `spec` cell by cell and checks the potential counts.
fn potential_on(spec: &ExperimentSpec) -> Result<(usize, usize), String> {
    let env = spec.env.build().map_err(err)?;
    let (mut trajectories, mut violations) = (0, 0);
    for (pi, p) in spec.policies.iter().enumerate() {
        for (ai, alpha) in spec.alphas_for(pi).into_iter().enumerate() {
            let cfg = PolicyConfig {
                alpha_scale: alpha,
                ..p.clone()
            };
            for t in run_cell(&env, spec, &cfg, ai, true).map_err(err)? {
                let reports = check_potential(&t.chosen, p.lambda, p.bound_l, &POTENTIAL_M_GRID).map_err(err)?;
                violations += reports.iter().filter(|r| !r.holds()).count();
                trajectories += 1;
            }
        }
    }
    Ok((trajectories, violations))
}

fn potential() -> Outcome {
    let (ts, vs) = potential_on(&synthetic_spec())?;
    let (te, ve) = potential_on(&eoo_spec())?;
    println!(
        "      synthetic: {ts} trajectories, {vs} violations; end of optimism: {te} trajectories, {ve} violations"
    );
    Ok(vs + ve == 0 && ts > 0 && te > 0)
}

fn oracles() -> Outcome {
    let mut rng = SimRng::seed_from_u64(0);
    let trace: Vec<_> = (0..500)
        .map(|_| {
            let x = DVector::from_fn(10, |_, _| rng.random_range(-1.0..1.0));
            (x, rng.random_range(-1.0..1.0))
        })
        .collect();
    let dev = check_inverse(&trace, 1.0).map_err(err)?.max();
    println!("      inverse: max deviation {dev:.3e} over 500 updates (d = 10)");
    let mut ok = dev < 1e-8;
    for (name, v) in [
        ("LinIMED-1", ImedVariant::One),
        ("LinIMED-2", ImedVariant::Two),
        ("LinIMED-3", ImedVariant::Three),
    ] {
        let bad = index_oracle_fuzz(v, 1000, 0).map_err(err)?;
        println!("      index {name}: {bad} disagreements over 1000 tuples");
        ok &= bad == 0;
    }
    Ok(ok)
}

#[derive(Default)]
struct SupTally {
    rounds: usize,
    cases: [usize; 3],
    bad_case: usize,
    bad_growth: usize,
    bad_width: usize,
    bad_iterations: usize,
}

fn sup_run(alpha_scale: f64, horizon: usize, seed: u64) -> Result<SupTally, String> {
    let env = Environment::Synthetic(SyntheticEnv::new(10, 2, 0.1).map_err(err)?);
    let spec = EnvSpec::synthetic(10, 2);
    let cfg = spec.preset(Mode::SupLinImed, alpha_scale, horizon);
    let mut policy = SupLinImed::new(cfg, 2).map_err(err)?;
    let max_levels = level_cap(horizon);
    let exploit = 1.0 / (horizon as f64).sqrt();
    let mut sizes = policy.psi_sizes();
    let mut tally = SupTally::default();
    run_with(&env, &mut policy, horizon, seed, Metric::CumulativeRegret, false, |rec, p: &SupLinImed| {
        let step = p.last_step().expect("a step per round");
        let now = p.psi_sizes();
        let grown: Vec<usize> = (0..now.len()).filter(|&s| now[s] != sizes[s]).collect();
        let added: usize = now.iter().sum::<usize>() - sizes.iter().sum::<usize>();
        tally.rounds += 1;
        if step.round != rec.round {
            tally.bad_case += 1;
        }
        match step.case {
            SupCase::Exploit => {
                tally.cases[0] += 1;
                if !grown.is_empty() {
                    tally.bad_growth += 1;
                }
                if step.widths.iter().any(|&w| w > exploit) {
                    tally.bad_width += 1;
                }
            }
            SupCase::Eliminate => {
                tally.cases[1] += 1;
                tally.bad_case += 1;
            }
            SupCase::Explore => {
                tally.cases[2] += 1;
                if added != 1 || grown != [step.level - 1] {
                    tally.bad_growth += 1;
                }
            }
        }
        if step.iterations > max_levels || step.level > max_levels {
            tally.bad_iterations += 1;
        }
        sizes = now;
        Ok(())
    })
    .map_err(err)?;
    Ok(tally)
}

fn suplinimed() -> Outcome {
    let mut ok = true;
    for (label, alpha_scale) in [("default scale", 1.0), ("scale 0.01", 0.01)] {
        let t = sup_run(alpha_scale, 10_000, 3)?;
        println!(
            "      {label}: {} rounds; cases 1/2/3 = {}/{}/{}; violations: case {} growth {} width {} levels {}",
            t.rounds,
            t.cases[0],
            t.cases[1],
            t.cases[2],
            t.bad_case,
            t.bad_growth,
            t.bad_width,
            t.bad_iterations
        );
        ok &= t.rounds == 10_000
            && t.cases.iter().sum::<usize>() == t.rounds
            && t.bad_case + t.bad_growth + t.bad_width + t.bad_iterations == 0;
        if alpha_scale < 1.0 {
            ok &= t.cases[0] > 0;
        }
    }
    println!("      level cap S' = {}", level_cap(10_000));
    Ok(ok)
}

fn ratings_path() -> PathBuf {
    std::env::var_os("LINIMED_RATINGS")
        .map(PathBuf::from)
        .unwrap_or_else(|| Path::new(env!("CARGO_MANIFEST_DIR")).join("../../data/ratings_synth.dat"))
}

fn movielens() -> Outcome {
    let path = ratings_path();
    println!("      ratings {}", path.display());
    let modes = [
        Mode::LinImed1,
        Mode::LinImed2,
        Mode::LinImed3,
        Mode::LinUcb,
        Mode::LinTs,
        Mode::Uniform,
    ];
    let spec = ExperimentSpec::preset(EnvSpec::movielens(&path, 20, 25), &modes, 1000, 20, 1);
    let env = spec.env.build().map_err(err)?;
    let a = run_experiment_in(&env, &spec, None).map_err(err)?;
    let rebuilt = spec.env.build().map_err(err)?;
    let b = run_experiment_in(&rebuilt, &spec, Some(2)).map_err(err)?;
    let identical = a.curves == b.curves && a.finals == b.finals;
    let uniform = a.curves[position(&spec, Mode::Uniform)].final_mean().unwrap_or(f64::NAN);
    let mut ok = identical;
    for (i, m) in modes.iter().enumerate() {
        let ctr = a.curves[i].final_mean().unwrap_or(f64::NAN);
        let imed = matches!(m, Mode::LinImed1 | Mode::LinImed2 | Mode::LinImed3);
        if imed {
            ok &= ctr >= uniform + 0.05;
        }
        println!(
            "      {:<10} CTR {:.4}{}",
            m.label(),
            ctr,
            if imed { format!("  margin over uniform {:+.4}", ctr - uniform) } else { String::new() }
        );
    }
    println!("      rerun bit-identical: {identical}");
    Ok(ok)
}

fn determinism(reference: &Path) -> Outcome {
    let expected = std::fs::read(reference.join("curves.csv")).map_err(err)?;
    let mut ok = true;
    for threads in [1, 4] {
        let dir = tempfile::tempdir().map_err(err)?;
        run_to_dir(&synthetic_spec(), dir.path(), Some(threads)).map_err(err)?;
        let got = std::fs::read(dir.path().join("curves.csv")).map_err(err)?;
        println!("      {threads} thread(s): curves.csv identical {}", got == expected);
        ok &= got == expected;
    }
    Ok(ok)
}

fn report(passed: &mut Vec<bool>, name: &str, outcome: Outcome) {
    let ok = match outcome {
        Ok(ok) => ok,
        Err(e) => {
            println!("      error: {e}");
            false
        }
    };
    println!("{} {}: {name}", if ok { "PASS" } else { "FAIL" }, passed.len() + 1);
    passed.push(ok);
}

fn main() -> ExitCode {
    let mut passed = Vec::new();

    let golden_dir = tempfile::tempdir().expect("temp dir");
    let spec = synthetic_spec();
    let start = Instant::now();
    let golden = run_to_dir(&spec, golden_dir.path(), None);
    let elapsed = start.elapsed();
    report(
        &mut passed,
        "synthetic K=10 d=2 tuned regrets and ordering",
        golden.map_err(err).and_then(|r| synthetic_golden(&r, &spec, elapsed)),
    );
    report(
        &mut passed,
        "end of optimism separation",
        end_of_optimism(&eoo_spec()).map(|(ok, _)| ok),
    );
    report(&mut passed, "confidence ellipsoid coverage", coverage());
    report(&mut passed, "elliptical potential counts", potential());
    report(&mut passed, "inverse and index oracles", oracles());
    report(&mut passed, "SupLinIMED structural invariants", suplinimed());
    report(&mut passed, "MovieLens replay CTR over uniform", movielens());
    report(&mut passed, "curves.csv independent of threads", determinism(golden_dir.path()));

    let failed = passed.iter().filter(|&&p| !p).count();
    println!("{} passed, {failed} failed", passed.len() - failed);
    if failed == 0 {
        ExitCode::SUCCESS
    } else {
        ExitCode::FAILURE
    }
}

/// `S' = ⌈ln T⌉`.
fn level_cap(horizon: usize) -> usize {
    (horizon as f64).ln().ceil() as usize
}
