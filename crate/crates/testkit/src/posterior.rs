//! Joint-enumeration posterior over (goal, one preferred exit per visit).
//!
//! A trajectory is split into segments of consecutive cells in the same
//! polytope. Each segment gets its own preference variable; the prior is
//! uniform over goals and over the first segment's exits, and later
//! segments weight the edge leading straight back by `back_weight`. Every
//! combination is enumerated explicitly and likelihoods are recomputed with
//! the Dijkstra oracle.

use std::collections::HashMap;

use prefnav_core::worldgraph::{Action, CellId, EdgeRef, GridPos, World};

use crate::paths;

/// One visited cell and the heading observed there, if any.
#[derive(Clone, Copy, Debug)]
pub struct Visit {
    pub cell: GridPos,
    pub heading: Option<Action>,
}

/// Boltzmann likelihood of `heading` from `s`, by direct normalisation.
pub fn likelihood(
    world: &World,
    s: GridPos,
    g: GridPos,
    exit: Option<EdgeRef>,
    heading: Action,
    gamma: f64,
) -> f64 {
    let options: Vec<(GridPos, f64)> = paths::neighbours(world, s)
        .into_iter()
        .map(|(o, _)| (o, paths::cost_c(world, s, o, g, exit)))
        .collect();
    if options.iter().all(|(_, c)| c.is_infinite()) {
        return 1.0 / options.len() as f64;
    }
    let z: f64 = options.iter().map(|(_, c)| (-gamma * c).exp()).sum();
    let target = GridPos::new(s.x + heading.dx as i32, s.y + heading.dy as i32);
    let c = options
        .iter()
        .find(|(o, _)| *o == target)
        .expect("admissible heading")
        .1;
    (-gamma * c).exp() / z
}

struct Segment {
    exits: Vec<EdgeRef>,
    prior: Vec<f64>,
    /// Observations made in this segment: (cell, heading).
    observations: Vec<(GridPos, Action)>,
}

/// Posterior over `(goal index, exit of the final polytope)`, as a
/// row-major `goals x exits` table together with the final exits.
pub fn joint_posterior(
    world: &World,
    goals: &[GridPos],
    visits: &[Visit],
    gamma: f64,
    back_weight: f64,
) -> (Vec<f64>, Vec<EdgeRef>) {
    let mut segments: Vec<Segment> = Vec::new();
    let mut last: Option<CellId> = None;
    for v in visits {
        let poly = world.map.polytope_of(v.cell);
        if last != Some(poly) {
            let exits: Vec<EdgeRef> = world.graph.neighbors(poly).unwrap().to_vec();
            let back = last.map(|from| EdgeRef::new(poly, from));
            let raw: Vec<f64> = exits
                .iter()
                .map(|e| if Some(*e) == back { back_weight } else { 1.0 })
                .collect();
            let z: f64 = raw.iter().sum();
            segments.push(Segment {
                exits,
                prior: raw.iter().map(|r| r / z).collect(),
                observations: Vec::new(),
            });
            last = Some(poly);
        }
        if let Some(h) = v.heading {
            segments.last_mut().unwrap().observations.push((v.cell, h));
        }
    }

    // likelihood of each segment's observations for every (goal, exit)
    let mut cache: HashMap<(GridPos, usize, EdgeRef, Action), f64> = HashMap::new();
    let seg_lik: Vec<Vec<Vec<f64>>> = segments
        .iter()
        .map(|seg| {
            (0..goals.len())
                .map(|gi| {
                    seg.exits
                        .iter()
                        .map(|&e| {
                            seg.observations
                                .iter()
                                .map(|&(s, h)| {
                                    *cache.entry((s, gi, e, h)).or_insert_with(|| {
                                        likelihood(world, s, goals[gi], Some(e), h, gamma)
                                    })
                                })
                                .product()
                        })
                        .collect()
                })
                .collect()
        })
        .collect();

    let final_exits = segments.last().unwrap().exits.clone();
    let mut table = vec![0.0; goals.len() * final_exits.len()];
    let sizes: Vec<usize> = segments.iter().map(|s| s.exits.len()).collect();
    for gi in 0..goals.len() {
        let mut idx = vec![0usize; segments.len()];
        loop {
            let mut w = 1.0 / goals.len() as f64;
            for (k, seg) in segments.iter().enumerate() {
                w *= seg.prior[idx[k]] * seg_lik[k][gi][idx[k]];
            }
            table[gi * final_exits.len() + idx[segments.len() - 1]] += w;
            // odometer increment over all segment choices
            let mut k = 0;
            while k < idx.len() {
                idx[k] += 1;
                if idx[k] < sizes[k] {
                    break;
                }
                idx[k] = 0;
                k += 1;
            }
            if k == idx.len() {
                break;
            }
        }
    }
    let z: f64 = table.iter().sum();
    (table.into_iter().map(|x| x / z).collect(), final_exits)
}

/// Random walk of `steps` moves from `start` with a heading at every visit,
/// drawn from the oracle likelihood for `goal` and the world's ground-truth
/// preference.
pub fn random_prefix<R: rand::Rng>(
    world: &World,
    rng: &mut R,
    start: GridPos,
    steps: usize,
    goal: GridPos,
    gamma: f64,
) -> Vec<Visit> {
    let mut out = Vec::with_capacity(steps + 1);
    let mut s = start;
    for i in 0..=steps {
        let exit = world.scenario.preference.exit(world.map.polytope_of(s));
        let options: Vec<Action> = Action::ALL
            .into_iter()
            .filter(|a| world.map.is_free(s.offset(*a)))
            .collect();
        let probs: Vec<f64> = options
            .iter()
            .map(|&a| likelihood(world, s, goal, exit, a, gamma))
            .collect();
        let mut u: f64 = rng.gen();
        let mut heading = *options.last().unwrap();
        for (a, p) in options.iter().zip(&probs) {
            if u < *p {
                heading = *a;
                break;
            }
            u -= p;
        }
        out.push(Visit {
            cell: s,
            heading: Some(heading),
        });
        if i < steps {
            s = s.offset(options[rng.gen_range(0..options.len())]);
        }
    }
    out
}
