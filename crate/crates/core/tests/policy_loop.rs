use linimed::envs::{EooEnv, Environment, SyntheticEnv};
use linimed::policies::{build_policy, GammaSchedule, Mode, PolicyConfig};
use linimed::{Error, SimRng};
use nalgebra::DVector;
use proptest::prelude::*;
use rand::SeedableRng;

fn synthetic_cfg(mode: Mode, alpha: f64, horizon: usize) -> PolicyConfig {
    PolicyConfig {
        lambda: 2.0,
        bound_s: 1.0,
        bound_l: 2f64.sqrt(),
        noise_r: 0.1,
        gamma_schedule: GammaSchedule::InverseOnePlusTSquared,
        alpha_scale: alpha,
        horizon,
        mode,
        ..PolicyConfig::default()
    }
}

/// Runs the interaction loop by hand and returns the total regret and the
/// number of optimal pulls over the last `tail` rounds.
fn play(env: &Environment, cfg: &PolicyConfig, seed: u64, tail: usize) -> (f64, usize) {
    let mut policy = build_policy(cfg, env.dim()).unwrap();
    let mut rng = SimRng::seed_from_u64(seed);
    let mut regret = 0.0;
    let mut optimal = 0;
    for t in 1..=cfg.horizon {
        let round = env.round(t, &mut rng);
        let sel = policy.select(&round.arms, &mut rng).unwrap();
        assert_eq!(round.arms.arms[sel.position].id, sel.arm_id);
        let r = env.draw_reward(&round, sel.position, &mut rng);
        policy.observe(&round.arms.arms[sel.position].context, r).unwrap();
        let inst = round.regret_of(sel.position);
        assert!((0.0..=1.0).contains(&inst));
        regret += inst;
        if t > cfg.horizon - tail && inst == 0.0 {
            optimal += 1;
        }
    }
    (regret, optimal)
}

#[test]
fn tuned_policies_settle_on_the_best_synthetic_arm() {
    let env = Environment::Synthetic(SyntheticEnv::new(10, 2, 0.1).unwrap());
    for (mode, alpha) in [
        (Mode::LinImed1, 0.25),
        (Mode::LinImed2, 0.25),
        (Mode::LinImed3, 0.25),
        (Mode::LinUcb, 0.55),
        (Mode::LinTs, 0.2),
    ] {
        let (regret, optimal) = play(&env, &synthetic_cfg(mode, alpha, 1000), 5, 200);
        assert!(regret < 40.0, "{mode}: regret {regret}");
        assert!(optimal >= 190, "{mode}: {optimal} optimal pulls in the last 200");
    }
}

#[test]
fn uniform_accumulates_linear_regret() {
    let env = Environment::Synthetic(SyntheticEnv::new(10, 2, 0.1).unwrap());
    let (regret, _) = play(&env, &synthetic_cfg(Mode::Uniform, 1.0, 1000), 5, 1);
    // expected per-round regret is (8/7.05 + 1)/10 ≈ 0.21
    assert!((150.0..270.0).contains(&regret), "{regret}");
}

#[test]
fn linimed3_finds_the_informative_arm_on_eoo() {
    let env = Environment::EndOfOptimism(EooEnv::new(0.01, 0.1).unwrap());
    let (imed, _) = play(&env, &synthetic_cfg(Mode::LinImed3, 0.25, 20_000), 2, 1);
    let (ucb, _) = play(&env, &synthetic_cfg(Mode::LinUcb, 0.55, 20_000), 2, 1);
    assert!(imed < ucb, "LinIMED-3 {imed} vs LinUCB {ucb}");
}

#[test]
fn suplinimed_runs_on_synthetic() {
    let env = Environment::Synthetic(SyntheticEnv::new(10, 2, 0.1).unwrap());
    let (regret, _) = play(&env, &synthetic_cfg(Mode::SupLinImed, 1.0, 500), 3, 1);
    assert!(regret.is_finite() && regret >= 0.0);
}

#[test]
fn dimension_mismatch_surfaces_as_error() {
    let env = Environment::EndOfOptimism(EooEnv::new(0.05, 0.1).unwrap());
    let mut rng = SimRng::seed_from_u64(0);
    let round = env.round(1, &mut rng);
    for mode in Mode::ALL {
        let mut p = build_policy(&synthetic_cfg(mode, 0.5, 10), 3).unwrap();
        assert!(matches!(
            p.select(&round.arms, &mut rng),
            Err(Error::DimensionMismatch { expected: 3, got: 2 })
        ));
        assert!(p.observe(&DVector::zeros(2), 0.0).is_err());
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn every_policy_picks_an_offered_arm(
        seed in any::<u64>(),
        k in 3usize..8,
        d in 2usize..5,
        mode_ix in 0usize..Mode::ALL.len(),
    ) {
        let env = Environment::Synthetic(SyntheticEnv::new(k, d, 0.1).unwrap());
        let mode = Mode::ALL[mode_ix];
        let cfg = synthetic_cfg(mode, 0.5, 30);
        let mut policy = build_policy(&cfg, d).unwrap();
        let mut rng = SimRng::seed_from_u64(seed);
        for t in 1..=30 {
            let round = env.round(t, &mut rng);
            let sel = policy.select(&round.arms, &mut rng).unwrap();
            prop_assert!(sel.position < k);
            prop_assert_eq!(sel.stats.len(), k);
            let r = env.draw_reward(&round, sel.position, &mut rng);
            policy.observe(&round.arms.arms[sel.position].context, r).unwrap();
        }
    }
}
