use valuelearn::agent::AgentMode;
use valuelearn::agent::SarsaAgent;
use valuelearn::env::{generate_two_agent_env, LayeredVariant, TwoAgentVariant};
use valuelearn::experiments::detect::{env_seed, run_detect_replicate, simulate_joint_log};
use valuelearn::experiments::empathy::{self, run_arm_replicate};
use valuelearn::experiments::foster::run_foster_replicate;
use valuelearn::experiments::{
    run_detection_experiment, run_empathy_experiment, run_foster_experiment, Arm, DetectConfig,
    EmpathyConfig, FosterConfig,
};
use valuelearn::mdl::{
    dl_curve, dl_two_agent, empirical_conditional_entropy, CodingParams, Conditioning, EnvShape,
    SecondAgentModel,
};
use valuelearn::sim::SimRngs;

fn small_foster(variant: LayeredVariant) -> FosterConfig {
    FosterConfig {
        variant,
        stage1_steps: 20_000,
        stage2_steps: 20_000,
        eval_steps: 5_000,
        replicates: 6,
        seed: 3,
        ..FosterConfig::default()
    }
}

#[test]
fn foster_replicates_do_not_depend_on_execution_order() {
    let config = small_foster(LayeredVariant::Stochastic);
    let result = run_foster_experiment(&config).unwrap();
    let mut reversed: Vec<_> = (0..config.replicates as u64)
        .rev()
        .flat_map(|r| run_foster_replicate(&config, r))
        .collect();
    reversed.sort_by_key(|r| r.replicate);
    assert_eq!(result.replicates, reversed);
    assert_eq!(result, run_foster_experiment(&config).unwrap());
}

#[test]
fn every_foster_replicate_completes_loops() {
    for variant in LayeredVariant::ALL {
        let result = run_foster_experiment(&small_foster(variant)).unwrap();
        for r in &result.replicates {
            assert!(r.metrics.loops > 0);
            assert!((0.0..=100.0).contains(&r.metrics.bad_pct));
        }
    }
}

#[test]
fn etalon_social_reward_dominates_classic_in_aggregate() {
    let config = FosterConfig {
        replicates: 100,
        ..FosterConfig::default()
    };
    let result = run_foster_experiment(&config).unwrap();
    let etalon = result.summary(AgentMode::Etalon).unwrap().latent_social;
    let classic = result.summary(AgentMode::Classic).unwrap().latent_social;
    assert_eq!(etalon.count, 100);
    assert!(
        etalon.mean >= classic.mean,
        "{} < {}",
        etalon.mean,
        classic.mean
    );
}

fn small_detect() -> DetectConfig {
    DetectConfig {
        horizon: 400,
        eval_every: 40,
        replicates: 4,
        seed: 9,
        ..DetectConfig::default()
    }
}

#[test]
fn detection_replicates_do_not_depend_on_execution_order() {
    let config = small_detect();
    let result = run_detection_experiment(&config).unwrap();
    for v in TwoAgentVariant::ALL {
        let mine: Vec<_> = result.for_variant(v).cloned().collect();
        let mut alone: Vec<_> = (0..config.replicates as u64)
            .rev()
            .map(|r| run_detect_replicate(&config, v, r).unwrap())
            .collect();
        alone.reverse();
        assert_eq!(mine, alone);
    }
}

#[test]
fn model_cost_does_not_depend_on_history_length() {
    let config = small_detect();
    for v in TwoAgentVariant::ALL {
        let env = generate_two_agent_env(config.shape, v, env_seed(&config, v, 0)).unwrap();
        let p = &config.params;
        let mut second = SarsaAgent::new(env.actions2(), p);
        let mut rngs = SimRngs::for_replicate(config.seed, 0);
        let log = simulate_joint_log(&env, &mut second, p, config.horizon, &mut rngs);
        let coding = CodingParams {
            epsilon: p.epsilon,
            ..config.coding
        };
        let shape = EnvShape::support(&env);
        let model = SecondAgentModel::new(&env, p.alpha, p.gamma);
        let cycles = config.cycles();
        let curve = dl_curve(&log, &coding, &shape, &model, &cycles).unwrap();
        let mut one_costs = Vec::new();
        let mut two_costs = Vec::new();
        for (i, &k) in cycles.iter().enumerate() {
            let prefix = &log.steps()[..k];
            let h1 = empirical_conditional_entropy(prefix, Conditioning::StateAction).unwrap()
                * k as f64;
            let code = dl_two_agent(prefix, &coding, &shape, &model).unwrap();
            one_costs.push(curve.dl_one[i] - h1);
            two_costs.push(curve.dl_two[i] - code.entropy_bits - code.action_bits);
            assert!(curve.dl_one[i].is_finite() && curve.dl_one[i] >= 0.0);
            assert!(curve.dl_two[i].is_finite() && curve.dl_two[i] >= 0.0);
        }
        for c in one_costs.iter().chain(&two_costs) {
            assert!(c.is_finite());
        }
        assert!(
            one_costs.iter().all(|c| (c - one_costs[0]).abs() < 1e-6),
            "{one_costs:?}"
        );
        assert!(
            two_costs.iter().all(|c| (c - two_costs[0]).abs() < 1e-6),
            "{two_costs:?}"
        );
        assert!(two_costs[0] > one_costs[0]);
    }
}

fn small_empathy() -> EmpathyConfig {
    let mut config = EmpathyConfig {
        exploit_steps: 2_000,
        replicates: 3,
        seed: 21,
        ..EmpathyConfig::default()
    };
    config.schedule.block_len = 100;
    config.schedule.rounds = 2;
    config
}

#[test]
fn empathy_arms_share_each_environment() {
    let config = small_empathy();
    let result = run_empathy_experiment(&config).unwrap();
    for v in TwoAgentVariant::ALL {
        for r in 0..config.replicates as u64 {
            let sums: Vec<&str> = result
                .outcomes
                .iter()
                .filter(|o| o.variant == v && o.replicate == r)
                .map(|o| o.env_checksum.as_str())
                .collect();
            assert_eq!(sums.len(), Arm::ALL.len());
            assert!(sums.iter().all(|s| *s == sums[0]));
        }
    }
}

#[test]
fn empathy_replicates_do_not_depend_on_execution_order() {
    let config = small_empathy();
    let result = run_empathy_experiment(&config).unwrap();
    let v = TwoAgentVariant::Stochastic;
    for r in (0..config.replicates as u64).rev() {
        let env =
            generate_two_agent_env(config.shape, v, empathy::env_seed(&config, v, r)).unwrap();
        for arm in Arm::ALL {
            let (r1, r2) = run_arm_replicate(&config, &env, arm, r);
            let o = result
                .outcomes
                .iter()
                .find(|o| o.variant == v && o.replicate == r && o.arm == arm)
                .unwrap();
            assert_eq!(
                (o.mean_r1.to_bits(), o.mean_r2.to_bits()),
                (r1.to_bits(), r2.to_bits())
            );
        }
    }
    assert_eq!(result, run_empathy_experiment(&config).unwrap());
}
