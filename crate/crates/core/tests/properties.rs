use proptest::prelude::*;
use proptest::sample::Index;

use valuelearn::agent::{QTable, SarsaAgent, SarsaParams};
use valuelearn::empathy::{
    estimate_values, run_exploration, ExplorationSchedule, Normalization, VisitCounter,
};
use valuelearn::env::{
    generate_layered_env, generate_two_agent_env, randomize_somatic_rewards, LayeredVariant,
    TwoAgentShape, TwoAgentVariant,
};
use valuelearn::experiments::aggregate_replicates;
use valuelearn::mdl::{empirical_conditional_entropy, Conditioning, StepRecord};
use valuelearn::seed::rng_from_seed;
use valuelearn::sim::SimRngs;

fn cases(n: u32) -> ProptestConfig {
    ProptestConfig::with_cases(n)
}

fn table() -> impl Strategy<Value = QTable> {
    prop::collection::vec(1usize..=4, 1..=6).prop_flat_map(|actions| {
        let len: usize = actions.iter().sum();
        prop::collection::vec(-100.0f64..100.0, len).prop_map(move |vals| {
            let mut q = QTable::zeros(&actions);
            let mut it = vals.into_iter();
            for (s, &n) in actions.iter().enumerate() {
                for a in 0..n {
                    q.set(s, a, it.next().unwrap());
                }
            }
            q
        })
    })
}

fn pick(q: &QTable, s: Index, a: Index) -> (usize, usize) {
    let s = s.index(q.n_states());
    (s, a.index(q.n_actions(s)))
}

fn changed(before: &QTable, after: &QTable) -> Vec<(usize, usize)> {
    before
        .entries()
        .filter(|&(s, a, v)| after.get(s, a).to_bits() != v.to_bits())
        .map(|(s, a, _)| (s, a))
        .collect()
}

proptest! {
    #![proptest_config(cases(1000))]

    #[test]
    fn fostered_without_mixing_is_sarsa(
        q in table(),
        qp_scale in -50.0f64..50.0,
        idx in any::<[Index; 4]>(),
        r in -101.0f64..101.0,
        alpha in 0.0f64..=1.0,
        gamma in 0.0f64..1.0,
    ) {
        let (s, a) = pick(&q, idx[0], idx[1]);
        let (s2, a2) = pick(&q, idx[2], idx[3]);
        let mut qprime = q.clone();
        for (ps, pa, v) in q.entries() {
            qprime.set(ps, pa, v * qp_scale);
        }
        let mut plain = q.clone();
        plain.sarsa_update(s, a, r, s2, a2, alpha, gamma);
        let mut fostered = q.clone();
        fostered.fostered_update(&qprime, s, a, r, s2, a2, alpha, gamma, 0.0);
        for (ps, pa, v) in plain.entries() {
            prop_assert_eq!(v.to_bits(), fostered.get(ps, pa).to_bits());
        }
    }

    #[test]
    fn updates_touch_one_entry(
        q in table(),
        idx in any::<[Index; 4]>(),
        r in 0.5f64..101.0,
        alpha in 0.01f64..=1.0,
        gamma in 0.0f64..1.0,
        gamma_m in 0.0f64..10.0,
    ) {
        let (s, a) = pick(&q, idx[0], idx[1]);
        let (s2, a2) = pick(&q, idx[2], idx[3]);
        let mut plain = q.clone();
        plain.sarsa_update(s, a, r, s2, a2, alpha, gamma);
        let diff = changed(&q, &plain);
        prop_assert!(diff.iter().all(|&e| e == (s, a)));
        let mut fostered = q.clone();
        fostered.fostered_update(&q, s, a, r, s2, a2, alpha, gamma, gamma_m);
        let diff = changed(&q, &fostered);
        prop_assert!(diff.iter().all(|&e| e == (s, a)));
        prop_assert!(plain.is_finite() && fostered.is_finite());
    }

    #[test]
    fn selection_without_exploration_is_greedy(q in table(), s in any::<Index>(), seed in any::<u64>()) {
        let s = s.index(q.n_states());
        let mut rng = rng_from_seed(seed);
        for _ in 0..4 {
            prop_assert_eq!(q.select_action(s, 0.0, &mut rng).unwrap(), q.greedy_action(s));
        }
    }

    #[test]
    fn max_abs_normalization_keeps_argmax(
        rows in prop::collection::vec(prop::collection::vec((0u64..1000, 0u64..1000), 1..=4), 1..=6),
    ) {
        let visits: Vec<Vec<u64>> = rows.iter().map(|r| r.iter().map(|&(v, e)| v.min(e)).collect()).collect();
        let exposure: Vec<Vec<u64>> = rows.iter().map(|r| r.iter().map(|&(_, e)| e).collect()).collect();
        let counter = VisitCounter::from_counts(visits, exposure).unwrap();
        let raw = estimate_values(&counter, Normalization::None).qprime;
        let scaled = estimate_values(&counter, Normalization::MaxAbs).qprime;
        for s in 0..raw.n_states() {
            prop_assert_eq!(raw.greedy_action(s), scaled.greedy_action(s));
        }
        let max = scaled.values().iter().fold(0.0f64, |m, v| m.max(v.abs()));
        prop_assert!(max == 0.0 || (max - 1.0).abs() < 1e-12);
        prop_assert_eq!(estimate_values(&counter, Normalization::None).qprime, raw);
    }

    #[test]
    fn finer_conditioning_never_raises_entropy(
        steps in prop::collection::vec((0usize..4, 0usize..2, 0usize..3, 0usize..4), 1..200),
    ) {
        let log: Vec<StepRecord> = steps
            .iter()
            .map(|&(s, a1, a2, s_next)| StepRecord { s, a1, a2: Some(a2), s_next })
            .collect();
        let coarse = empirical_conditional_entropy(&log, Conditioning::StateAction).unwrap();
        let fine = empirical_conditional_entropy(&log, Conditioning::StateJointAction).unwrap();
        prop_assert!(fine >= 0.0);
        prop_assert!(fine <= coarse + 1e-9, "{} > {}", fine, coarse);
    }

    #[test]
    fn generated_layered_envs_are_well_formed(
        v in 0usize..3,
        m in 2usize..8,
        n in 2usize..8,
        seed in any::<u64>(),
    ) {
        let variant = LayeredVariant::ALL[v];
        let env = generate_layered_env(variant, m, n, seed).unwrap();
        prop_assert_eq!(env.n_states(), 1 + m * n);
        for s in 0..env.n_states() {
            for a in 0..env.n_actions(s) {
                prop_assert!((env.dist(s, a).unwrap().total_prob() - 1.0).abs() <= 1e-9);
            }
        }
        prop_assert_eq!(&generate_layered_env(variant, m, n, seed).unwrap(), &env);

        let redrawn = randomize_somatic_rewards(&env, seed ^ 1);
        for ((s, a, o), (s2, a2, o2)) in env.all_outcomes().zip(redrawn.all_outcomes()) {
            prop_assert_eq!((s, a, o.next), (s2, a2, o2.next));
            prop_assert_eq!(o.prob.to_bits(), o2.prob.to_bits());
            prop_assert_eq!(o.r2.to_bits(), o2.r2.to_bits());
        }

        // any walk passes through the root exactly every m + 1 steps
        let mut rng = rng_from_seed(seed);
        let mut s = env.root();
        for t in 1..=3 * (m + 1) {
            let q = QTable::zeros(&env.actions_per_state());
            let a = q.select_action(s, 1.0, &mut rng).unwrap();
            s = env.step(s, a, &mut rng).unwrap().next;
            prop_assert_eq!(s == env.root(), t % (m + 1) == 0);
        }
    }

    #[test]
    fn generated_two_agent_envs_are_well_formed(
        stochastic in any::<bool>(),
        n_states in 2usize..10,
        actions1 in 1usize..4,
        actions2 in 1usize..4,
        seed in any::<u64>(),
    ) {
        let variant = if stochastic { TwoAgentVariant::Stochastic } else { TwoAgentVariant::Deterministic };
        let shape = TwoAgentShape { n_states, actions1, actions2 };
        let env = generate_two_agent_env(shape, variant, seed).unwrap();
        prop_assert!(env.validate().is_ok());
        for (_, _, _, d) in env.joint_actions() {
            prop_assert!((d.total_prob() - 1.0).abs() <= 1e-9);
        }
    }

    #[test]
    fn aggregation_ignores_replicate_order(
        shuffled in prop::collection::vec(-1e3f64..1e3, 1..50)
            .prop_flat_map(|vals| {
                let pairs: Vec<(u64, f64)> = vals.into_iter().enumerate().map(|(i, v)| (i as u64, v)).collect();
                (Just(pairs.clone()), Just(pairs).prop_shuffle())
            }),
    ) {
        let (ordered, permuted) = shuffled;
        let a = aggregate_replicates(&ordered).unwrap();
        let b = aggregate_replicates(&permuted).unwrap();
        prop_assert_eq!(a.mean.to_bits(), b.mean.to_bits());
        prop_assert_eq!(a.std.to_bits(), b.std.to_bits());
        prop_assert_eq!(a.count, b.count);
    }
}

proptest! {
    #![proptest_config(cases(200))]

    #[test]
    fn visits_never_exceed_exposure(
        n_states in 2usize..6,
        actions1 in 1usize..4,
        block_len in 1usize..40,
        rounds in 1usize..4,
        seed in any::<u64>(),
    ) {
        let shape = TwoAgentShape { n_states, actions1, actions2: 2 };
        let env = generate_two_agent_env(shape, TwoAgentVariant::Stochastic, seed).unwrap();
        let schedule = ExplorationSchedule { block_len, rounds, ..ExplorationSchedule::default() };
        let run = || {
            let mut second = SarsaAgent::new(env.actions2(), &SarsaParams::default());
            let mut rngs = SimRngs::for_replicate(seed, 0);
            run_exploration(&env, &mut second, &schedule, 0, &mut rngs)
        };
        let counter = run();
        prop_assert!(counter.is_consistent());
        let mut total = 0;
        for s in 0..n_states {
            for a in 0..actions1 {
                prop_assert!(counter.visits(s, a) <= counter.exposure(s, a));
                total += counter.visits(s, a);
            }
        }
        prop_assert_eq!(total as usize, schedule.total_steps(actions1));
        let again = run();
        for s in 0..n_states {
            for a in 0..actions1 {
                prop_assert_eq!(counter.visits(s, a), again.visits(s, a));
            }
        }
    }
}
