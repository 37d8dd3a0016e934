use mislearn_core::equilibrium::Location;
use mislearn_core::learning::{simulate, GroupSpec, Learner, Prior, SimConfig};
use mislearn_core::multigroup::{
    assessment_floor, belief_map, color_blind_equilibria, color_sighted_equilibrium, multigroup_convergence,
    simulate_multigroup, GroupPopulation,
};
use mislearn_core::{build_lq, LqParams, ModelPrimitives, Scenario};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

fn model(lo: f64) -> ModelPrimitives {
    let p = LqParams::from_lambdas(1.0, 1.0, 1.0, 1.0).unwrap();
    build_lq(p, Scenario::new(0.0, 2.0, 0.0, lo, 3.0)).unwrap()
}

fn population(lo: f64, deltas: &[f64]) -> GroupPopulation {
    let a = 1.0 / deltas.len() as f64;
    let groups = deltas
        .iter()
        .map(|&delta| GroupSpec {
            alpha: a,
            delta,
            beta_star: 2.0,
        })
        .collect();
    GroupPopulation::new(&model(lo), groups).unwrap()
}

#[test]
fn single_group_matches_single_agent_bitwise() {
    let m = build_lq(LqParams::from_lambdas(1.0, 1.0, 1.0, 1.0).unwrap(), Scenario::new(0.0, 2.0, 0.5, 0.3, 3.0))
        .unwrap();
    let pop = GroupPopulation::new(
        &m,
        vec![GroupSpec {
            alpha: 1.0,
            delta: 0.5,
            beta_star: 2.0,
        }],
    )
    .unwrap();
    let cfg = SimConfig::new(5_000, 3);
    let joint = simulate_multigroup(&pop, &[Prior::Uniform], &cfg, None).unwrap();
    let single = simulate(&Learner::from_model(&m).unwrap(), Prior::Uniform, &cfg).unwrap();
    assert_eq!(joint.trajectory, single);
}

#[test]
fn concentrated_priors_converge_to_color_sighted_equilibrium() {
    let pop = population(0.5, &[0.05, -0.05]);
    let eq = color_sighted_equilibrium(&pop).unwrap();
    let tm = Learner::from_model(pop.model()).unwrap();
    let priors: Vec<Prior> = eq
        .beta_hat
        .iter()
        .map(|&b| Prior::TruncatedNormal {
            mean: tm.transformed().g1(b),
            sd: 0.05,
        })
        .collect();
    let r = multigroup_convergence(&pop, &priors, 100, 100_000, 13, 0.05).unwrap();
    assert!(r.within_radius >= 90, "{} of 100 within 0.05", r.within_radius);
}

#[test]
fn assessment_floor_holds_on_domain() {
    let pop = population(0.5, &[0.3, -0.2, 0.1]);
    let floor = assessment_floor(&pop).unwrap().unwrap();
    let dom = pop.domain();
    let mut rng = ChaCha8Rng::seed_from_u64(8);
    for _ in 0..1_000 {
        let betas: Vec<f64> = dom.iter().map(|d| rng.random_range(d.lower..=d.upper)).collect();
        let (h, _) = belief_map(&pop, &betas).unwrap();
        assert!(h > floor, "h = {h} at {betas:?}, floor {floor}");
    }
}

#[test]
fn color_blind_cascades_where_color_sighted_does_not() {
    let deltas = [1.5, -0.5];
    let pop = population(0.3, &deltas);
    assert!(pop.delta_bar() > 0.0);
    let blind = color_blind_equilibria(&pop).unwrap();
    assert!(blind.points.iter().any(|p| p.location != Location::Interior && !p.is_sce));
    let eq = color_sighted_equilibrium(&pop).unwrap();
    for (b, d) in eq.beta_hat.iter().zip(deltas) {
        assert!((b - 2.0).abs() <= 10.0 * d.abs(), "β̂ = {b} for Δ = {d}");
    }
}
