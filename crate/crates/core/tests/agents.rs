use orgym_core::agent::{Agent, GreedyAgent, OracleAgent};
use orgym_core::env::*;
use orgym_core::eval::run_episode;
use orgym_core::fixtures::production_instance;
use orgym_core::saboteur::*;
use orgym_core::solver::SolveStatus;

#[test]
fn oracle_plan_on_worked_example() {
    let inst = production_instance();
    let plan = OracleAgent::plan_for(&inst);
    let kinds: Vec<&str> = plan.iter().map(|a| a.kind.name()).collect();
    assert_eq!(kinds, ["GET_IIS", "RELAX", "SUBMIT"]);
    let diag = plan[0].diagnosis.as_ref().unwrap();
    assert!(diag.iter().any(|d| d == "c3_min_1"));
    assert_eq!(
        plan[1].kind,
        ActionKind::Relax {
            target: "c3_min_1".into(),
            delta: -10.0
        }
    );
}

#[test]
fn oracle_plan_length_tracks_fix() {
    let pool = generate_pool(200, 13);
    let bench = generate_benchmark(
        &pool,
        &[(ErrorType::G, 3), (ErrorType::I, 3)],
        &SabotageConfig {
            rng_seed: 13,
            ..SabotageConfig::default()
        },
    )
    .unwrap();
    for inst in &bench {
        let plan = OracleAgent::plan_for(inst);
        assert_eq!(plan.len(), inst.full_fix().len() + 2);
        if inst.error_type == ErrorType::I {
            assert_eq!(plan.len(), 4);
        }
        if inst.error_type == ErrorType::G {
            assert!(inst.cascade.is_some());
        }
        let rec = run_episode(&mut OracleAgent::new(), inst, 0, &EnvConfig::default());
        assert!(rec.success, "{}", inst.id);
        assert_eq!(rec.trajectory.last().unwrap().status, SolveStatus::Optimal);
    }
}

#[test]
fn greedy_rules() {
    let inst = production_instance();
    let env = DebugEnv::new(inst.clone(), EnvConfig::default()).unwrap();
    let mut g = GreedyAgent::new();
    g.begin(&inst, 0).unwrap();

    let mut s = env.reset().unwrap();
    s.iis_log.clear();
    assert_eq!(g.act(&s).unwrap().kind, ActionKind::GetIis);
    s.status = SolveStatus::Optimal;
    assert_eq!(g.act(&s).unwrap().kind, ActionKind::Submit);

    let rec = run_episode(&mut GreedyAgent::new(), &inst, 0, &EnvConfig::default());
    assert!(rec
        .trajectory
        .iter()
        .any(|t| t.status == SolveStatus::Optimal));
    assert!(rec.repair_steps <= 50);
}
