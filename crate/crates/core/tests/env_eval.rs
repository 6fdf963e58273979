use orgym_core::agent::{Agent, AgentError, GreedyAgent, OracleAgent, RandomAgent};
use orgym_core::env::*;
use orgym_core::eval::*;
use orgym_core::fixtures::{production_instance, transport_instance};
use orgym_core::lp::ModelEdit;
use orgym_core::rng::stream;
use orgym_core::saboteur::*;
use orgym_core::solver::{IisReport, SolveStatus};
use orgym_oracles::reward::{reward as oracle_reward, RewardInputs, Status};
use proptest::prelude::*;

fn gt3() -> GroundTruth {
    GroundTruth {
        key_constraints: vec!["c3".into()],
        fix: vec![ModelEdit::Relax {
            target: "c3".into(),
            delta: -1.0,
        }],
        iis_gt: IisReport {
            constraints: vec!["c1".into(), "c2".into(), "c3".into()],
            bounds: vec![],
        },
        original_objective: 100.0,
    }
}

fn bare_state(step: u32, iis: &[&str]) -> EpisodeState {
    let env = DebugEnv::new(production_instance(), EnvConfig::default()).unwrap();
    let mut s = env.reset().unwrap();
    s.step = step;
    s.iis_log = iis.iter().map(|x| x.to_string()).collect();
    s
}

fn oracle_status(s: SolveStatus) -> Status {
    match s {
        SolveStatus::Optimal => Status::Optimal,
        SolveStatus::Infeasible => Status::Infeasible,
        _ => Status::Other,
    }
}

fn oracle_total(s: &EpisodeState, a: &Action, next: &EpisodeState, gt: &GroundTruth) -> f64 {
    let members = gt.iis_gt.members();
    let gt_refs: Vec<&str> = members.iter().map(String::as_str).collect();
    let diag: Option<Vec<&str>> = a
        .diagnosis
        .as_ref()
        .map(|d| d.iter().map(String::as_str).collect());
    let log: Vec<&str> = s.iis_log.iter().map(String::as_str).collect();
    oracle_reward(&RewardInputs {
        next_status: oracle_status(next.status),
        diagnosis: diag.as_deref(),
        iis_gt: &gt_refs,
        step: s.step,
        repair_target: a.kind.target(),
        reference_iis: &log,
    })
}

#[test]
fn reward_examples_match_oracle() {
    let gt = gt3();
    let relax = Action::new(ActionKind::Relax {
        target: "c3".into(),
        delta: -1.0,
    });

    let s = bare_state(2, &["c1", "c2", "c3"]);
    let a = relax.clone().with_diagnosis(["c1", "c2", "c3"]);
    let mut next = s.clone();
    next.status = SolveStatus::Optimal;
    let r = compute_reward(&s, &a, &next, &gt);
    assert!((r.total - 89.6).abs() < 1e-9);
    assert!((r.total - oracle_total(&s, &a, &next, &gt)).abs() < 1e-9);
    assert_eq!(
        (r.raw.outcome, r.raw.diagnosis, r.raw.efficiency),
        (100.0, 100.0, 48.0)
    );

    let s = bare_state(10, &["c1", "c2", "c3"]);
    let a = Action::new(ActionKind::Relax {
        target: "elsewhere".into(),
        delta: 1.0,
    });
    let next = s.clone();
    let r = compute_reward(&s, &a, &next, &gt);
    assert!((r.total - -37.0).abs() < 1e-9);
    assert_eq!(r.faithfulness_penalty, 20.0);
    assert!((r.total - oracle_total(&s, &a, &next, &gt)).abs() < 1e-9);

    let s = bare_state(0, &["c1", "c2", "c3"]);
    let a = Action::new(ActionKind::GetIis);
    let r = compute_reward(&s, &a, &s, &gt);
    assert!((r.total - -15.0).abs() < 1e-9);
    assert!((r.total - oracle_total(&s, &a, &s, &gt)).abs() < 1e-9);
}

#[test]
fn diagnostic_accuracy_counts_hits() {
    let gt = gt3();
    assert!((diagnostic_accuracy(&["c3"], &gt) - 1.0 / 3.0).abs() < 1e-12);
    assert_eq!(diagnostic_accuracy(&["c3", "c3", "zz"], &gt), 1.0 / 3.0);
    assert_eq!(diagnostic_accuracy(&["c1", "c2", "c3"], &gt), 1.0);
    assert_eq!(diagnostic_accuracy::<&str>(&[], &gt), 0.0);
}

#[test]
fn outcome_classes() {
    let gt = gt3();
    let mut last = bare_state(1, &[]);
    last.status = SolveStatus::Optimal;
    last.objective = Some(97.0);
    let (o, op) = classify_outcome(&last, &gt);
    assert_eq!(o, Outcome::FullSuccess);
    assert!((op.unwrap() - 0.97).abs() < 1e-12);
    last.objective = Some(85.0);
    assert_eq!(classify_outcome(&last, &gt).0, Outcome::PartialSuccess);
    last.objective = Some(50.0);
    assert_eq!(classify_outcome(&last, &gt).0, Outcome::Failure);
    last.status = SolveStatus::Infeasible;
    assert_eq!(classify_outcome(&last, &gt), (Outcome::Failure, None));
    assert_eq!(optimality_preservation(0.0, 0.0), 1.0);
    assert_eq!(optimality_preservation(0.0, 1.0), 0.0);
}

#[test]
fn reset_reports_reference_iis() {
    let env = DebugEnv::new(production_instance(), EnvConfig::default()).unwrap();
    let s = env.reset().unwrap();
    assert_eq!(s.step, 0);
    assert_eq!(s.status, SolveStatus::Infeasible);
    for m in ["c1_total", "c2_min_0", "c3_min_1"] {
        assert!(
            s.iis_log.iter().any(|x| x == m),
            "{m} missing from {:?}",
            s.iis_log
        );
    }
    assert_eq!(s, env.reset().unwrap());
    assert_eq!(s.digest(), env.reset().unwrap().digest());
}

#[test]
fn feasible_sabotage_is_rejected() {
    let mut inst = production_instance();
    inst.sabotaged = inst.original.clone();
    let env = DebugEnv::new(inst, EnvConfig::default()).unwrap();
    assert!(matches!(
        env.reset(),
        Err(EnvError::OracleDisagreement(SolveStatus::Optimal))
    ));
}

#[test]
fn config_is_checked() {
    let bad = EnvConfig {
        max_steps: 0,
        ..EnvConfig::default()
    };
    assert!(matches!(
        DebugEnv::new(production_instance(), bad),
        Err(EnvError::Config(_))
    ));
    assert_eq!(EnvConfig::default().max_steps, 50);
    assert_eq!(EnvConfig::default().action_cap(), 200);
}

#[test]
fn worked_repair_episode() {
    let env = DebugEnv::new(production_instance(), EnvConfig::default()).unwrap();
    let s0 = env.reset().unwrap();

    let t = env.step(&s0, &Action::new(ActionKind::GetIis)).unwrap();
    assert_eq!(t.state.step, 0);
    assert_eq!(t.state.code, s0.code);
    assert!(!t.state.iis_log.is_empty());

    let t = env
        .step(&t.state, &Action::new(ActionKind::CheckSlack))
        .unwrap();
    let slacks = t.state.slack_values.as_ref().unwrap();
    assert!(slacks.values().any(|r| r.violated));
    assert_eq!(t.state.step, 0);

    let t = env
        .step(
            &t.state,
            &Action::new(ActionKind::Relax {
                target: "c3_min_1".into(),
                delta: -10.0,
            }),
        )
        .unwrap();
    assert_eq!(t.state.status, SolveStatus::Optimal);
    assert_eq!(t.state.step, 1);
    assert!(t.state.iis_log.is_empty());
    assert!(t.state.slack_values.is_none());
    assert_eq!(t.reward.faithfulness_penalty, 0.0);

    let t = env
        .step(&t.state, &Action::new(ActionKind::Submit))
        .unwrap();
    assert!(t.done);
    assert_eq!(t.state.step, 1);
    let (o, op) = classify_outcome(&t.state, env.ground_truth());
    assert_eq!(o, Outcome::FullSuccess);
    assert!((op.unwrap() - 1.0).abs() < 1e-9);
    assert!(matches!(
        env.step(&t.state, &Action::new(ActionKind::GetIis)),
        Err(EnvError::Finished)
    ));
}

#[test]
fn invalid_target_leaves_state() {
    let env = DebugEnv::new(production_instance(), EnvConfig::default()).unwrap();
    let s = env.reset().unwrap();
    let t = env
        .step(
            &s,
            &Action::new(ActionKind::Relax {
                target: "nope".into(),
                delta: 1.0,
            }),
        )
        .unwrap();
    assert!(t.invalid.is_some());
    assert_eq!(t.state, s);
    assert_eq!(t.reward.faithfulness_penalty, 20.0);
    let t = env
        .step(
            &s,
            &Action::new(ActionKind::Relax {
                target: "c3_min_1".into(),
                delta: f64::NAN,
            }),
        )
        .unwrap();
    assert!(t.invalid.is_some());
}

#[test]
fn restart_costs_a_step_and_restores() {
    let env = DebugEnv::new(production_instance(), EnvConfig::default()).unwrap();
    let s = env.reset().unwrap();
    let t = env
        .step(
            &s,
            &Action::new(ActionKind::Drop {
                target: "c1_total".into(),
            }),
        )
        .unwrap();
    let t = env
        .step(&t.state, &Action::new(ActionKind::Restart))
        .unwrap();
    assert_eq!(t.state.step, 2);
    assert_eq!(t.state.code, s.code);
    assert_eq!(t.state.status, SolveStatus::Infeasible);
}

#[test]
fn step_limit_and_action_cap_end_episode() {
    let cfg = EnvConfig {
        max_steps: 3,
        ..EnvConfig::default()
    };
    let env = DebugEnv::new(production_instance(), cfg).unwrap();
    let mut s = env.reset().unwrap();
    let mut n = 0;
    while !s.done {
        s = env
            .step(
                &s,
                &Action::new(ActionKind::Relax {
                    target: "c1_total".into(),
                    delta: 0.0,
                }),
            )
            .unwrap()
            .state;
        n += 1;
    }
    assert_eq!((n, s.step), (3, 3));

    let mut s = env.reset().unwrap();
    let mut n = 0;
    while !s.done {
        s = env
            .step(&s, &Action::new(ActionKind::GetIis))
            .unwrap()
            .state;
        n += 1;
    }
    assert_eq!((n, s.step), (12, 0));
}

#[test]
fn simulator_frequencies() {
    let inst = production_instance();
    let gt = &inst.ground_truth;
    let env = DebugEnv::new(inst.clone(), EnvConfig::default()).unwrap();
    let s = env.reset().unwrap();
    assert_eq!(
        simulate_step(
            &Action::new(ActionKind::GetIis),
            &s,
            gt,
            &mut stream(1, "sim", 0)
        ),
        s
    );
    assert_eq!(
        simulate_step(
            &Action::new(ActionKind::CheckSlack),
            &s,
            gt,
            &mut stream(1, "sim", 0)
        ),
        s
    );

    let trials = 10_000;
    for (kind, p) in [
        (
            ActionKind::Relax {
                target: "c3_min_1".into(),
                delta: -10.0,
            },
            SIM_RELAX_P,
        ),
        (
            ActionKind::Drop {
                target: "c3_min_1".into(),
            },
            SIM_DROP_P,
        ),
    ] {
        let mut rng = stream(2, "sim", 0);
        let a = Action::new(kind);
        let hits = (0..trials)
            .filter(|_| simulate_step(&a, &s, gt, &mut rng).status == SolveStatus::Optimal)
            .count();
        let freq = hits as f64 / trials as f64;
        let sd = (p * (1.0 - p) / trials as f64).sqrt();
        assert!((freq - p).abs() < 3.0 * sd, "{freq} vs {p}");
    }

    let mut rng = stream(3, "sim", 0);
    let a = Action::new(ActionKind::Relax {
        target: "c1_total".into(),
        delta: 5.0,
    });
    let shrunk = (0..trials)
        .filter(|_| simulate_step(&a, &s, gt, &mut rng).iis_size() < s.iis_size())
        .count();
    let freq = shrunk as f64 / trials as f64;
    assert!((freq - SIM_SHRINK_P).abs() < 3.0 * (0.25f64 / trials as f64).sqrt());

    let a = Action::new(ActionKind::Relax {
        target: "not_in_iis".into(),
        delta: 5.0,
    });
    for i in 0..100 {
        let n = simulate_step(&a, &s, gt, &mut stream(4, "sim", i));
        assert_eq!(n.status, SolveStatus::Infeasible);
        assert_eq!(n.step, s.step + 1);
    }
}

#[test]
fn oracle_agent_on_worked_example() {
    let inst = production_instance();
    let cfg = EnvConfig::default();
    for attempt in 0..5 {
        let rec = run_episode(&mut OracleAgent::new(), &inst, attempt, &cfg);
        assert!(rec.success);
        assert_eq!(rec.outcome, Outcome::FullSuccess);
        assert_eq!(rec.first_success_step, Some(2));
        assert_eq!(rec.da, 1.0);
        assert_eq!(rec.repair_steps, 1);
        assert_eq!(rec.attempt_index, attempt);
    }
}

#[test]
fn baselines_produce_records() {
    let insts = vec![production_instance(), transport_instance()];
    let cfg = EvalConfig {
        attempts: 1,
        ..EvalConfig::default()
    };
    let recs = run_episodes(
        || Box::new(RandomAgent::new(9)) as Box<dyn Agent>,
        &insts,
        &cfg,
    );
    assert_eq!(recs.len(), 2);
    assert_eq!(
        recs,
        run_episodes(
            || Box::new(RandomAgent::new(9)) as Box<dyn Agent>,
            &insts,
            &cfg
        )
    );
    let recs = run_episodes(
        || Box::new(GreedyAgent::new()) as Box<dyn Agent>,
        &insts,
        &cfg,
    );
    assert!(recs.iter().all(|r| r.actions <= cfg.env.action_cap()));
}

struct Garbled;

impl Agent for Garbled {
    fn begin(&mut self, _: &BenchmarkInstance, _: u32) -> Result<(), AgentError> {
        Ok(())
    }
    fn act(&mut self, _: &EpisodeState) -> Result<Action, AgentError> {
        Err(AgentError::Protocol("expected JSON, got `hello`".into()))
    }
}

#[test]
fn protocol_error_fails_attempt() {
    let rec = run_episode(
        &mut Garbled,
        &production_instance(),
        0,
        &EnvConfig::default(),
    );
    assert!(!rec.success);
    assert_eq!(rec.outcome, Outcome::Failure);
    assert!(rec.protocol_error.is_some());
}

fn record(id: &str, outcome: Outcome, first: Option<u32>) -> EpisodeRecord {
    EpisodeRecord {
        schema_version: RECORD_SCHEMA_VERSION,
        instance_id: id.into(),
        error_type: ErrorType::A,
        difficulty: Tier::Easy,
        attempt_index: 0,
        success: outcome.is_success(),
        outcome,
        first_success_step: first,
        da: 0.0,
        op: None,
        repair_steps: first.unwrap_or(0),
        actions: 0,
        protocol_error: None,
        trajectory: vec![],
    }
}

#[test]
fn metrics_examples() {
    let recs = vec![
        record("a", Outcome::FullSuccess, Some(3)),
        record("b", Outcome::PartialSuccess, Some(2)),
        record("c", Outcome::Failure, None),
        record("d", Outcome::Failure, None),
    ];
    let m = compute_metrics(&recs, 5).unwrap();
    assert_eq!(m.overall.rr, 50.0);
    assert_eq!(m.rr_at(5), 25.0);
    assert_eq!(m.rr_at(2), 0.0);
    assert_eq!(m.overall.rr_at_k.len(), 10);

    let ones: Vec<_> = (0..4)
        .map(|i| record(&format!("x{i}"), Outcome::FullSuccess, Some(1)))
        .collect();
    assert_eq!(compute_metrics(&ones, 1).unwrap().rr_at(1), 100.0);
    assert_eq!(compute_metrics(&[], 5), Err(EvalError::EmptyInput));
    assert!(render_table(&m).contains("RR@5"));
}

fn traj_step(
    kind: ActionKind,
    diag: Option<&[&str]>,
    status: SolveStatus,
    before: usize,
    after: usize,
) -> TrajectoryStep {
    let s = bare_state(0, &[]);
    let mut action = Action::new(kind);
    if let Some(d) = diag {
        action = action.with_diagnosis(d.iter().copied());
    }
    let reward = compute_reward(&s, &action, &s, &gt3());
    TrajectoryStep {
        state_digest: String::new(),
        action,
        reward,
        status,
        iis_before: before,
        iis_after: after,
        invalid: None,
    }
}

#[test]
fn prm_labels() {
    let gt = gt3();
    let traj = vec![
        traj_step(ActionKind::GetIis, None, SolveStatus::Infeasible, 3, 3),
        traj_step(
            ActionKind::Relax {
                target: "zz".into(),
                delta: 1.0,
            },
            None,
            SolveStatus::Infeasible,
            3,
            3,
        ),
        traj_step(
            ActionKind::CheckSlack,
            Some(&["c2"]),
            SolveStatus::Infeasible,
            3,
            3,
        ),
        traj_step(
            ActionKind::Drop {
                target: "c1".into(),
            },
            None,
            SolveStatus::Infeasible,
            3,
            2,
        ),
        traj_step(
            ActionKind::Relax {
                target: "c3".into(),
                delta: 1.0,
            },
            None,
            SolveStatus::Optimal,
            2,
            0,
        ),
    ];
    let labels: Vec<(f64, LabelBranch)> = prm_label(&traj, &gt)
        .iter()
        .map(|l| (l.value, l.branch))
        .collect();
    assert_eq!(
        labels,
        vec![
            (0.2, LabelBranch::InfoGathering),
            (0.0, LabelBranch::NoProgress),
            (0.5, LabelBranch::CorrectDiagnosis),
            (1.0, LabelBranch::IisShrink),
            (1.0, LabelBranch::Solved),
        ]
    );
}

#[test]
fn sft_filter() {
    let mut keep = record("a", Outcome::FullSuccess, Some(2));
    keep.da = 0.68;
    let mut long = keep.clone();
    long.repair_steps = 7;
    let fail = record("c", Outcome::Failure, None);
    let kept = filter_sft_trajectories(&[keep.clone(), long, fail]);
    assert_eq!(kept, vec![keep]);
}

#[test]
fn stratified_sampling() {
    let pool = generate_pool(80, 5);
    let bench = generate_benchmark(
        &pool,
        &[(ErrorType::B, 6), (ErrorType::H, 6), (ErrorType::C, 6)],
        &SabotageConfig {
            rng_seed: 5,
            ..SabotageConfig::default()
        },
    )
    .unwrap();
    let have = |t: Tier| bench.iter().filter(|i| i.difficulty == t).count();
    let counts: Vec<(Tier, usize)> = [Tier::Easy, Tier::Hard, Tier::Expert]
        .into_iter()
        .map(|t| (t, have(t).min(3)))
        .collect();
    let a = stratified_sample(&bench, &counts, 1).unwrap();
    let b = stratified_sample(&bench, &counts, 1).unwrap();
    assert_eq!(
        a.iter().map(|i| &i.id).collect::<Vec<_>>(),
        b.iter().map(|i| &i.id).collect::<Vec<_>>()
    );
    for (t, n) in &counts {
        assert_eq!(a.iter().filter(|i| i.difficulty == *t).count(), *n);
    }
    let too_many = [(Tier::Easy, bench.len() + 1)];
    assert!(matches!(
        stratified_sample(&bench, &too_many, 1),
        Err(EvalError::InsufficientPool { .. })
    ));
}

#[test]
fn oracle_metrics_on_generated_benchmark() {
    let pool = generate_pool(200, 3);
    let counts: Vec<_> = ErrorType::ALL.iter().map(|t| (*t, 2)).collect();
    let bench = generate_benchmark(
        &pool,
        &counts,
        &SabotageConfig {
            rng_seed: 3,
            ..SabotageConfig::default()
        },
    )
    .unwrap();
    let cfg = EvalConfig::default();
    let recs = run_episodes(
        || Box::new(OracleAgent::new()) as Box<dyn Agent>,
        &bench,
        &cfg,
    );
    let m = compute_metrics(&recs, cfg.attempts).unwrap();
    assert_eq!(m.rr_at(5), 100.0);
    assert_eq!(m.overall.da_mean, 100.0);
    let fix_len: f64 =
        bench.iter().map(|i| i.full_fix().len() as f64).sum::<f64>() / bench.len() as f64;
    assert!((m.overall.avg_steps.unwrap() - fix_len).abs() < 1e-9);
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn rr_at_k_is_monotone(steps in prop::collection::vec(prop::option::of(1u32..15), 1..30), partial in prop::collection::vec(any::<bool>(), 30)) {
        let recs: Vec<_> = steps
            .iter()
            .enumerate()
            .map(|(i, s)| {
                let outcome = match (s, partial[i]) {
                    (None, _) => Outcome::Failure,
                    (Some(_), true) => Outcome::PartialSuccess,
                    (Some(_), false) => Outcome::FullSuccess,
                };
                record(&format!("i{}", i % 7), outcome, *s)
            })
            .collect();
        let m = compute_metrics(&recs, 5).unwrap();
        let vals: Vec<f64> = m.overall.rr_at_k.values().copied().collect();
        prop_assert!(vals.windows(2).all(|w| w[0] <= w[1]));
        prop_assert!(vals.last().copied().unwrap_or(0.0) <= m.overall.rr);
    }

    #[test]
    fn random_walk_rewards_decompose(seed in 0u64..500, which in 0usize..2) {
        let inst = if which == 0 { production_instance() } else { transport_instance() };
        let env = DebugEnv::new(inst.clone(), EnvConfig::default()).unwrap();
        let mut agent = RandomAgent::new(seed);
        agent.begin(&inst, 0).unwrap();
        let mut s = env.reset().unwrap();
        let mut prev_step = 0;
        while !s.done {
            let a = agent.act(&s).unwrap();
            let t = env.step(&s, &a).unwrap();
            let r = t.reward;
            prop_assert!((r.total - (r.outcome + r.diagnosis + r.efficiency - r.faithfulness_penalty)).abs() < 1e-9);
            if t.invalid.is_none() {
                prop_assert!((r.total - oracle_total(&s, &a, &t.state, env.ground_truth())).abs() < 1e-9);
                if a.kind.is_diagnostic() {
                    prop_assert_eq!(&t.state.code, &s.code);
                    prop_assert_eq!(t.state.step, s.step);
                }
                if let Some(target) = a.kind.target() {
                    let expected = if s.iis_log.iter().any(|m| m == target) { 0.0 } else { 20.0 };
                    prop_assert_eq!(r.faithfulness_penalty, expected);
                }
            }
            prop_assert!(t.state.step >= prev_step);
            prop_assert!(t.state.step <= 50);
            prev_step = t.state.step;
            s = t.state;
        }
    }
}
