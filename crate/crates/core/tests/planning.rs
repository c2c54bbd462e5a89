use prefnav_core::intent::{Belief, PreferenceModel};
use prefnav_core::planning::{
    blended_policy, compliant_policy, reward, reward_terms, value_iteration, CompliantMemory,
    Planner, PlannerConfig, RewardParams,
};
use prefnav_core::worldgraph::{load_bundled, Action, GridPos, World};
use prefnav_testkit::worlds;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use std::time::Instant;

fn point_mass(world: &World, s: GridPos, goal: usize, model: PreferenceModel) -> Belief {
    let v = world.polytope_of(s);
    Belief::point_mass(
        world,
        v,
        world.map.goal_candidates.clone(),
        model,
        goal,
        world.scenario.preference.exit(v),
    )
    .unwrap()
}

#[test]
fn reward_examples() {
    let w = load_bundled("map1").unwrap();
    let p = RewardParams::default();
    let g = w.map.goal_candidates[0];
    let s = GridPos::new(1, 1);
    let exit = Some(w.scenario.preference.exit(w.polytope_of(s)));
    let r = reward_terms(&w, s, Action::NORTH_EAST, g, exit, &p).unwrap();
    assert_eq!((r.goal, r.preference), (0.0, 0.0));
    assert!((r.total() + 2f64.sqrt()).abs() < 1e-12);

    // find a cardinal crossing of the preferred exit and one of another edge
    let theta = &w.scenario.preference;
    let mut seen = (false, false);
    for s in w.map.free_cells() {
        for a in w.map.valid_actions(s).filter(|a| !a.is_diagonal()) {
            let c = w.edge_crossed(s, a).unwrap();
            let Some(e) = c.edge() else { continue };
            let exit = Some(theta.exit(e.from));
            let far = GridPos::new(-5, -5);
            let r = reward(&w, s, a, far, exit, &p).unwrap();
            if theta.allows(c) {
                assert_eq!(r, 14.5);
                seen.0 = true;
            } else {
                assert_eq!(r, -19.0);
                let t = s.offset(a);
                assert_eq!(reward(&w, s, a, t, exit, &p).unwrap(), 31.0);
                seen.1 = true;
            }
            assert_eq!(reward(&w, s, a, far, None, &p).unwrap(), -1.0);
        }
    }
    assert_eq!(seen, (true, true));
}

#[test]
fn one_step_backup_next_to_the_goal() {
    let w = worlds::single_block(10, 10, (8, 8), &[(5, 5)]);
    let p = RewardParams::default();
    let vt = value_iteration(&w, GridPos::new(5, 5), Some(&w.scenario.preference), &p, 1);
    assert_eq!(vt.value(&w, GridPos::new(4, 5)), 49.0);
    assert!((vt.value(&w, GridPos::new(4, 4)) - (50.0 - 2f64.sqrt())).abs() < 1e-12);
    assert_eq!(vt.value(&w, GridPos::new(0, 0)), -1.0);
}

#[test]
fn open_map_values_fall_with_distance_to_the_goal() {
    // discounting makes the number of steps dominate path length: four
    // cardinal steps are worth less than three diagonal ones, so the order
    // is by step count first and octile length second
    let w = worlds::single_block(10, 10, (9, 9), &[(4, 4)]);
    let g = GridPos::new(4, 4);
    let vt = value_iteration(&w, g, None, &RewardParams::default(), 30);
    let mut cells: Vec<((i32, f64), f64)> = w
        .map
        .free_cells()
        .filter(|&s| s != g)
        .map(|s| {
            let (dx, dy) = ((s.x - g.x).abs(), (s.y - g.y).abs());
            let oct = dx.max(dy) as f64 + (2f64.sqrt() - 1.0) * dx.min(dy) as f64;
            ((dx.max(dy), oct), vt.value(&w, s))
        })
        .collect();
    cells.sort_by(|a, b| a.partial_cmp(b).unwrap());
    for pair in cells.windows(2) {
        assert!(pair[1].1 <= pair[0].1 + 1e-12, "{pair:?}");
    }
    assert!(vt.value(&w, GridPos::new(8, 4)) < vt.value(&w, GridPos::new(7, 7)));
}

#[test]
fn oracle_policy_exits_through_preferred_edges_on_map1() {
    let w = load_bundled("map1").unwrap();
    let theta = &w.scenario.preference;
    let p = RewardParams::default();
    for &g in &w.map.goal_candidates {
        let vt = value_iteration(&w, g, Some(theta), &p, 30);
        for s in w.map.free_cells().filter(|&s| s != g) {
            for a in vt.optimal_actions(&w, s, 1e-9) {
                let c = w.edge_crossed(s, a).unwrap();
                assert!(theta.allows(c), "{s} {a} crosses {c:?}");
            }
        }
    }
}

#[test]
fn single_hypothesis_on_an_open_map_heads_east() {
    let w = worlds::single_block(10, 10, (9, 9), &[(8, 4)]);
    let s = GridPos::new(2, 4);
    for model in [PreferenceModel::Joint, PreferenceModel::GoalOnly] {
        let b = point_mass(&w, s, 0, model);
        let mut planner =
            Planner::new(&w, PlannerConfig::default(), RewardParams::default()).unwrap();
        let out = planner
            .plan(&b, s, 30, &mut ChaCha8Rng::seed_from_u64(1))
            .unwrap();
        assert_eq!(out.action, Action::EAST);
    }
}

#[test]
fn identical_seeds_give_identical_plans() {
    let w = load_bundled("map1").unwrap();
    let s = w.map.start;
    let b = Belief::uniform(
        &w,
        w.polytope_of(s),
        w.map.goal_candidates.clone(),
        PreferenceModel::Joint,
    )
    .unwrap();
    let run = |seed| {
        let mut planner =
            Planner::new(&w, PlannerConfig::default(), RewardParams::default()).unwrap();
        planner
            .plan(&b, s, 30, &mut ChaCha8Rng::seed_from_u64(seed))
            .unwrap()
    };
    assert_eq!(run(3), run(3));
}

#[test]
fn the_tree_branches_on_actions_only() {
    let w = load_bundled("map1").unwrap();
    let s = w.map.start;
    let b = Belief::uniform(
        &w,
        w.polytope_of(s),
        w.map.goal_candidates.clone(),
        PreferenceModel::Joint,
    )
    .unwrap();
    let mut planner = Planner::new(
        &w,
        PlannerConfig {
            iterations: 500,
            ..Default::default()
        },
        RewardParams::default(),
    )
    .unwrap();
    let out = planner
        .plan(&b, s, 30, &mut ChaCha8Rng::seed_from_u64(2))
        .unwrap();
    let tree = planner.tree();
    assert!(tree.len() <= 501);
    assert_eq!(out.tree_size, tree.len());
    assert_eq!(out.counts.iter().sum::<u32>(), 500);
    for node in tree {
        assert_eq!(node.visits, node.counts.iter().sum::<u32>());
        for (k, child) in node.children.iter().enumerate() {
            if let Some(c) = child {
                assert_eq!(
                    tree[*c as usize].location,
                    node.location.offset(Action::from_index(k))
                );
            }
        }
    }
}

/// Seeded decisions on Map 1 with a point-mass goal-only belief; returns
/// the fraction whose action is within `tol` of the oracle value.
fn near_optimal_rate(config: PlannerConfig, decisions: u64, tol: f64) -> f64 {
    let w = load_bundled("map1").unwrap();
    let p = RewardParams::default();
    let tables: Vec<_> = w
        .map
        .goal_candidates
        .iter()
        .map(|&g| value_iteration(&w, g, None, &p, 30))
        .collect();
    let free: Vec<GridPos> = w.map.free_cells().collect();
    let mut planner = Planner::new(&w, config, p).unwrap();
    let mut hits = 0;
    for seed in 0..decisions {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let gi = rng.gen_range(0..w.map.goal_candidates.len());
        let s = loop {
            let s = free[rng.gen_range(0..free.len())];
            if s != w.map.goal_candidates[gi] {
                break s;
            }
        };
        let b = point_mass(&w, s, gi, PreferenceModel::GoalOnly);
        let out = planner.plan(&b, s, 30, &mut rng).unwrap();
        if tables[gi].optimal_actions(&w, s, tol).contains(&out.action) {
            hits += 1;
        }
    }
    hits as f64 / decisions as f64
}

#[test]
fn goal_only_search_is_near_optimal() {
    let start = Instant::now();
    let rate = near_optimal_rate(PlannerConfig::default(), 100, 0.1);
    assert!(rate >= 0.95, "{rate}");
    assert!(start.elapsed().as_secs_f64() < 100.0);
}

#[test]
fn search_without_exploration_tries_every_action_once() {
    let w = load_bundled("map1").unwrap();
    let s = GridPos::new(1, 1);
    let b = point_mass(&w, s, 0, PreferenceModel::GoalOnly);
    let config = PlannerConfig {
        exploration: 0.0,
        iterations: 300,
        ..Default::default()
    };
    let mut planner = Planner::new(&w, config, RewardParams::default()).unwrap();
    let out = planner
        .plan(&b, s, 30, &mut ChaCha8Rng::seed_from_u64(0))
        .unwrap();
    assert!(out.counts.iter().all(|&c| c >= 1));
    let best = out
        .q
        .iter()
        .flatten()
        .fold(f64::NEG_INFINITY, |m, &q| m.max(q));
    assert_eq!(out.q[out.action.index()], Some(best));
}

#[test]
fn preference_aware_planning_avoids_the_shortcut() {
    // from the west cell of Map 1 the shortest way east passes below the
    // obstacle; a human who prefers the top exit should be respected
    let w = load_bundled("map1").unwrap();
    let s0 = GridPos::new(1, 4);
    let west = w.polytope_of(s0);
    let top = prefnav_core::EdgeRef::new(west, w.polytope_of(GridPos::new(1, 8)));
    let goals = vec![GridPos::new(8, 4)];
    let first_exit = |model: PreferenceModel| {
        let mut planner =
            Planner::new(&w, PlannerConfig::default(), RewardParams::default()).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(4);
        let b = Belief::point_mass(&w, west, goals.clone(), model, 0, Some(top)).unwrap();
        let mut s = s0;
        for _ in 0..20 {
            let a = planner.plan(&b, s, 30, &mut rng).unwrap().action;
            let c = w.edge_crossed(s, a).unwrap();
            if let Some(e) = c.edge() {
                return e;
            }
            s = s.offset(a);
        }
        panic!("never left the west cell");
    };
    assert_eq!(first_exit(PreferenceModel::Joint), top);
    assert_ne!(first_exit(PreferenceModel::GoalOnly), top);
}

#[test]
fn compliant_follows_then_stops() {
    let w = worlds::single_block(20, 5, (18, 2), &[(0, 4)]);
    let mut m = CompliantMemory::default();
    let s = GridPos::new(2, 2);
    assert_eq!(compliant_policy(&w, s, &m, 0), None);
    m.observe(Action::EAST, 0);
    for t in 0..=5 {
        assert_eq!(compliant_policy(&w, s, &m, t), Some(Action::EAST));
    }
    assert_eq!(compliant_policy(&w, s, &m, 6), None);
    m.observe(Action::EAST, 3);
    assert_eq!(
        compliant_policy(&w, GridPos::new(16, 2), &m, 3),
        Some(Action::EAST)
    );
    // (18, 2) holds the obstacle
    assert_eq!(compliant_policy(&w, GridPos::new(17, 2), &m, 4), None);
    assert_eq!(compliant_policy(&w, GridPos::new(19, 2), &m, 4), None);
}

#[test]
fn blending_is_a_step_function_of_entropy() {
    let w = load_bundled("map1").unwrap();
    let s = GridPos::new(1, 1);
    let (planned, user) = (Action::NORTH, Action::EAST);
    assert_eq!(
        blended_policy(&w, s, 0.5, planned, Some(user), 1.6),
        planned
    );
    assert_eq!(blended_policy(&w, s, 2.0, planned, Some(user), 1.6), user);
    assert_eq!(blended_policy(&w, s, 2.0, planned, None, 1.6), planned);
    assert_eq!(
        blended_policy(
            &w,
            GridPos::new(0, 0),
            2.0,
            planned,
            Some(Action::WEST),
            1.6
        ),
        planned
    );
}

#[test]
fn configs_are_validated() {
    let w = load_bundled("map1").unwrap();
    let bad = [
        PlannerConfig {
            iterations: 0,
            ..Default::default()
        },
        PlannerConfig {
            max_depth: 0,
            ..Default::default()
        },
        PlannerConfig {
            exploration: -1.0,
            ..Default::default()
        },
    ];
    for c in bad {
        assert!(Planner::new(&w, c, RewardParams::default()).is_err());
    }
    let p = RewardParams {
        discount: 1.0,
        ..Default::default()
    };
    assert!(Planner::new(&w, PlannerConfig::default(), p).is_err());
}
