use prefnav_core::intent::{
    boltzmann, entropy, likelihood_vector, sample_human_observation, Belief, HumanParams,
    IntentError, Observation, PreferenceModel, DEFAULT_BACK_EDGE_WEIGHT,
};
use prefnav_core::pathcost::CostEvaluator;
use prefnav_core::worldgraph::{load_bundled, Action, GridPos, World};
use prefnav_testkit::posterior::{self, Visit};
use prefnav_testkit::worlds;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

/// Folds a visit sequence through the incremental belief.
fn replay(world: &World, goals: &[GridPos], visits: &[Visit], gamma: f64, beta: f64) -> Belief {
    let params = HumanParams { gamma_h: gamma };
    let mut eval = CostEvaluator::new();
    let first = world.polytope_of(visits[0].cell);
    let mut b = Belief::uniform(world, first, goals.to_vec(), PreferenceModel::Joint).unwrap();
    let mut prev = visits[0].cell;
    for v in visits {
        let a = world.polytope_of(prev);
        let c = world.polytope_of(v.cell);
        if a != c {
            let step = Action::between(prev, v.cell).unwrap();
            let via = world.edge_crossed(prev, step).unwrap().edge();
            b = b.reanchor(world, c, via, beta).unwrap();
        }
        if let Some(h) = v.heading {
            b = b
                .update(
                    world,
                    &mut eval,
                    v.cell,
                    &Observation::new(v.cell, h),
                    &params,
                )
                .unwrap();
        }
        prev = v.cell;
    }
    b
}

#[test]
fn posterior_matches_joint_enumeration() {
    let w = load_bundled("map1").unwrap();
    let goals = w.map.goal_candidates.clone();
    let mut rng = ChaCha8Rng::seed_from_u64(2024);
    for _ in 0..20 {
        let start = GridPos::new(rng.gen_range(0..3), rng.gen_range(0..3));
        let steps = rng.gen_range(0..12);
        let visits = posterior::random_prefix(&w, &mut rng, start, steps, goals[0], 1.5);
        let b = replay(&w, &goals, &visits, 1.5, DEFAULT_BACK_EDGE_WEIGHT);
        let (oracle, exits) =
            posterior::joint_posterior(&w, &goals, &visits, 1.5, DEFAULT_BACK_EDGE_WEIGHT);
        assert_eq!(
            b.exits().iter().map(|e| e.unwrap()).collect::<Vec<_>>(),
            exits
        );
        for (p, q) in b.probs().iter().zip(&oracle) {
            assert!((p - q).abs() < 1e-12, "{p} vs {q}");
        }
    }
}

#[test]
fn likelihoods_are_normalized_and_match_the_oracle() {
    let w = load_bundled("map1").unwrap();
    let mut eval = CostEvaluator::new();
    let params = HumanParams { gamma_h: 1.5 };
    for s in w.map.free_cells() {
        let v = w.polytope_of(s);
        for &e in w.graph.neighbors(v).unwrap() {
            for &g in &w.map.goal_candidates {
                let lik = likelihood_vector(&w, &mut eval, s, g, Some(e), &params).unwrap();
                let total: f64 = lik.iter().map(|x| x.1).sum();
                assert!((total - 1.0).abs() < 1e-9);
                for (a, p) in lik {
                    let q = posterior::likelihood(&w, s, g, Some(e), a, 1.5);
                    assert!((p - q).abs() < 1e-12, "{s} {a} {p} {q}");
                }
            }
        }
    }
}

#[test]
fn boltzmann_is_shift_invariant() {
    let mut rng = ChaCha8Rng::seed_from_u64(1);
    for _ in 0..200 {
        let n = rng.gen_range(1..9);
        let costs: Vec<f64> = (0..n).map(|_| rng.gen_range(0.0..30.0)).collect();
        let shift = rng.gen_range(-50.0..50.0);
        let shifted: Vec<f64> = costs.iter().map(|c| c + shift).collect();
        let gamma = rng.gen_range(0.0..3.0);
        for (p, q) in boltzmann(&costs, gamma)
            .iter()
            .zip(boltzmann(&shifted, gamma))
        {
            assert!((p - q).abs() < 1e-12);
        }
    }
}

#[test]
fn indifferent_human_leaves_the_prior_alone() {
    let w = load_bundled("office").unwrap();
    let s = w.map.start;
    let goals = w.map.goal_candidates.clone();
    let b = Belief::uniform(
        &w,
        w.polytope_of(s),
        goals.clone(),
        PreferenceModel::GoalOnly,
    )
    .unwrap();
    let mut eval = CostEvaluator::new();
    let params = HumanParams { gamma_h: 0.0 };
    let lik = likelihood_vector(&w, &mut eval, s, goals[0], None, &params).unwrap();
    assert!(lik
        .iter()
        .all(|x| (x.1 - 1.0 / lik.len() as f64).abs() < 1e-15));
    for a in w.map.valid_actions(s) {
        let after = b
            .update(&w, &mut eval, s, &Observation::new(s, a), &params)
            .unwrap();
        for (p, q) in after.probs().iter().zip(b.probs()) {
            assert!((p - q).abs() < 1e-12);
        }
    }
}

#[test]
fn cost_evaluations_per_update_are_bounded_by_the_local_hypotheses() {
    for name in ["map1", "office", "classroom"] {
        let w = load_bundled(name).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        let mut eval = CostEvaluator::new();
        let free: Vec<GridPos> = w.map.free_cells().collect();
        for _ in 0..30 {
            let s = free[rng.gen_range(0..free.len())];
            let v = w.polytope_of(s);
            let goals = w.map.goal_candidates.clone();
            let b = Belief::uniform(&w, v, goals.clone(), PreferenceModel::Joint).unwrap();
            let params = HumanParams::default();
            let truth = w.scenario.preference.clone();
            let obs =
                sample_human_observation(&mut rng, &w, &mut eval, s, goals[0], &truth, &params)
                    .unwrap();
            let before = eval.evaluations;
            b.update(&w, &mut eval, s, &obs, &params).unwrap();
            let expected = w.map.valid_actions(s).count() * w.graph.degree(v) * goals.len();
            assert_eq!(eval.evaluations - before, expected as u64, "{name}");
        }
    }
}

#[test]
fn reanchoring_keeps_the_goal_marginal() {
    let w = load_bundled("classroom").unwrap();
    let three = *w
        .graph
        .vertices()
        .iter()
        .find(|&&v| w.graph.degree(v) == 3)
        .unwrap();
    let neighbor = w.graph.neighbors(three).unwrap()[0].to;
    let entered = w
        .graph
        .neighbors(neighbor)
        .unwrap()
        .iter()
        .find(|e| e.to == three)
        .copied();
    let mut eval = CostEvaluator::new();
    let s = w
        .map
        .free_cells()
        .find(|&p| w.polytope_of(p) == neighbor)
        .unwrap();
    let goals = w.map.goal_candidates.clone();
    let b = Belief::uniform(&w, neighbor, goals.clone(), PreferenceModel::Joint).unwrap();
    let mut rng = ChaCha8Rng::seed_from_u64(8);
    let obs = sample_human_observation(
        &mut rng,
        &w,
        &mut eval,
        s,
        goals[1],
        &w.scenario.preference,
        &HumanParams::default(),
    )
    .unwrap();
    let b = b
        .update(&w, &mut eval, s, &obs, &HumanParams::default())
        .unwrap();

    let flat = b.reanchor(&w, three, entered, 1.0).unwrap();
    let down = b.reanchor(&w, three, entered, 0.2).unwrap();
    for r in [&flat, &down] {
        for (x, y) in r.goal_marginal().iter().zip(b.goal_marginal()) {
            assert!((x - y).abs() < 1e-15);
        }
    }
    for (gi, m) in b.goal_marginal().iter().enumerate() {
        for (ei, e) in flat.exits().iter().enumerate() {
            assert!((flat.prob(gi, ei) - m / 3.0).abs() < 1e-15);
            let expect = if e.unwrap().to == neighbor {
                0.2 / 2.2
            } else {
                1.0 / 2.2
            };
            assert!((down.prob(gi, ei) - m * expect).abs() < 1e-15);
        }
    }
}

#[test]
fn entropy_is_reported_in_nats() {
    let w = load_bundled("office").unwrap();
    let v = w.polytope_of(w.map.start);
    let b = Belief::uniform(&w, v, w.map.goal_candidates.clone(), PreferenceModel::Joint).unwrap();
    let n = w.map.goal_candidates.len() * w.graph.degree(v);
    assert!((b.entropy() - (n as f64).ln()).abs() < 1e-12);
    assert_eq!(b.summary().entropy, entropy(b.probs()));
}

#[test]
fn rational_human_points_along_the_cheapest_heading() {
    let w = load_bundled("map1").unwrap();
    let s = GridPos::new(1, 1);
    let g = w.map.goal_candidates[0];
    let mut eval = CostEvaluator::new();
    let sharp = HumanParams { gamma_h: 100.0 };
    let lik = likelihood_vector(
        &w,
        &mut eval,
        s,
        g,
        w.scenario.preference.exit(w.polytope_of(s)),
        &sharp,
    )
    .unwrap();
    let top = lik.iter().map(|x| x.1).fold(0.0, f64::max);
    let best: Vec<Action> = lik
        .iter()
        .filter(|x| x.1 > top - 1e-9)
        .map(|x| x.0)
        .collect();
    let mut rng = ChaCha8Rng::seed_from_u64(4);
    let hits = (0..1000)
        .filter(|_| {
            let h = sample_human_observation(
                &mut rng,
                &w,
                &mut eval,
                s,
                g,
                &w.scenario.preference,
                &sharp,
            )
            .unwrap()
            .heading;
            best.contains(&h)
        })
        .count();
    assert!(hits > 990);
}

#[test]
fn indifferent_human_samples_uniformly() {
    let w = load_bundled("map1").unwrap();
    let s = GridPos::new(1, 1);
    let mut eval = CostEvaluator::new();
    let flat = HumanParams { gamma_h: 0.0 };
    let mut rng = ChaCha8Rng::seed_from_u64(5);
    let mut counts = [0usize; 8];
    let n = 8000;
    for _ in 0..n {
        let o = sample_human_observation(
            &mut rng,
            &w,
            &mut eval,
            s,
            GridPos::new(8, 8),
            &w.scenario.preference,
            &flat,
        )
        .unwrap();
        counts[o.heading.index()] += 1;
    }
    let p = 1.0 / 8.0;
    let sigma = (n as f64 * p * (1.0 - p)).sqrt();
    for c in counts {
        assert!((c as f64 - n as f64 * p).abs() < 3.0 * sigma, "{counts:?}");
    }
}

#[test]
fn sampling_is_reproducible() {
    let w = load_bundled("map1").unwrap();
    let draw = |seed| {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let mut eval = CostEvaluator::new();
        (0..50)
            .map(|_| {
                sample_human_observation(
                    &mut rng,
                    &w,
                    &mut eval,
                    GridPos::new(1, 1),
                    GridPos::new(8, 8),
                    &w.scenario.preference,
                    &HumanParams::default(),
                )
                .unwrap()
                .heading
            })
            .collect::<Vec<_>>()
    };
    assert_eq!(draw(9), draw(9));
}

#[test]
fn evidence_for_the_only_goal_it_favours_raises_that_goal() {
    // in an open corridor, heading East from (2, 2) is cheapest only for the eastern goal
    let w = worlds::single_block(12, 5, (6, 4), &[(11, 2), (0, 2), (5, 0)]);
    let s = GridPos::new(2, 2);
    let goals = w.map.goal_candidates.clone();
    let mut b = Belief::uniform(&w, w.polytope_of(s), goals, PreferenceModel::Joint).unwrap();
    let mut eval = CostEvaluator::new();
    for _ in 0..3 {
        let next = b
            .update(
                &w,
                &mut eval,
                s,
                &Observation::new(s, Action::EAST),
                &HumanParams::default(),
            )
            .unwrap();
        assert!(next.goal_marginal()[0] > b.goal_marginal()[0]);
        b = next;
    }
}

#[test]
fn contradictory_exits_exhaust_the_posterior() {
    let w = load_bundled("map1").unwrap();
    // (2, 3) is in the south-west corner cell: North enters the west cell, East the south cell
    let s = GridPos::new(2, 3);
    let v = w.polytope_of(s);
    assert_eq!(w.graph.degree(v), 2);
    let params = HumanParams::default();
    let mut eval = CostEvaluator::new();
    let b = Belief::uniform(&w, v, w.map.goal_candidates.clone(), PreferenceModel::Joint).unwrap();
    let b = b
        .update(
            &w,
            &mut eval,
            s,
            &Observation::new(s, Action::NORTH),
            &params,
        )
        .unwrap();
    let err = b
        .update(
            &w,
            &mut eval,
            s,
            &Observation::new(s, Action::EAST),
            &params,
        )
        .unwrap_err();
    assert_eq!(err, IntentError::DegeneratePosterior);
}

#[test]
fn blocked_headings_are_rejected() {
    let w = load_bundled("map1").unwrap();
    let s = GridPos::new(2, 4);
    let err = prefnav_core::intent::heading_to_cell(&w, s, 0.0).unwrap_err();
    assert!(matches!(err, IntentError::InadmissibleHeading { .. }));
    assert_eq!(
        prefnav_core::intent::heading_to_cell(&w, s, std::f64::consts::PI)
            .unwrap()
            .intended_cell,
        GridPos::new(1, 4)
    );
}
