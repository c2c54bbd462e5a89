//! Geometry oracles working on raw `[a, b, c]` rows (`a x + b y <= c`).

use std::collections::BTreeSet;

pub type Row = [f64; 3];

fn eval(r: &Row, p: [f64; 2]) -> f64 {
    r[0] * p[0] + r[1] * p[1] - r[2]
}

fn sign_of(rows: &[Row], p: [f64; 2], min_dist: f64) -> Option<Vec<i8>> {
    rows.iter()
        .map(|r| {
            let d = eval(r, p) / (r[0] * r[0] + r[1] * r[1]).sqrt();
            if d.abs() <= min_dist {
                None
            } else if d < 0.0 {
                Some(-1)
            } else {
                Some(1)
            }
        })
        .collect()
}

/// Unique sign vectors over a `res x res` grid of the bounds, plus points
/// sampled just around every arrangement vertex (pairwise line
/// intersections, line/boundary intersections, box corners) so that cells
/// thinner than the grid spacing are still hit.
pub fn sampled_sign_vectors(
    rows: &[Row],
    min: [f64; 2],
    max: [f64; 2],
    res: usize,
) -> BTreeSet<Vec<i8>> {
    let inside = |p: [f64; 2]| p[0] > min[0] && p[0] < max[0] && p[1] > min[1] && p[1] < max[1];
    let mut out = BTreeSet::new();
    for i in 0..res {
        for j in 0..res {
            let p = [
                min[0] + (max[0] - min[0]) * (i as f64 + 0.5) / res as f64,
                min[1] + (max[1] - min[1]) * (j as f64 + 0.5) / res as f64,
            ];
            if let Some(s) = sign_of(rows, p, 1e-12) {
                out.insert(s);
            }
        }
    }
    let bounds: [Row; 4] = [
        [-1.0, 0.0, -min[0]],
        [1.0, 0.0, max[0]],
        [0.0, -1.0, -min[1]],
        [0.0, 1.0, max[1]],
    ];
    let all: Vec<Row> = rows.iter().chain(bounds.iter()).copied().collect();
    let mut vertices = Vec::new();
    for i in 0..all.len() {
        for j in (i + 1)..all.len() {
            let (a, b) = (all[i], all[j]);
            let det = a[0] * b[1] - a[1] * b[0];
            if det.abs() < 1e-12 {
                continue;
            }
            let x = (a[2] * b[1] - a[1] * b[2]) / det;
            let y = (a[0] * b[2] - a[2] * b[0]) / det;
            if x >= min[0] - 1e-9 && x <= max[0] + 1e-9 && y >= min[1] - 1e-9 && y <= max[1] + 1e-9
            {
                vertices.push([x, y]);
            }
        }
    }
    for v in vertices {
        for k in 0..64 {
            let ang = (k as f64 + 0.37) * std::f64::consts::TAU / 64.0;
            for r in [1e-5, 1e-4, 1e-3] {
                let p = [v[0] + r * ang.cos(), v[1] + r * ang.sin()];
                if inside(p) {
                    if let Some(s) = sign_of(rows, p, 1e-12) {
                        out.insert(s);
                    }
                }
            }
        }
    }
    out
}

/// Convex clip of a polygon by `a x + b y <= c`.
pub fn clip(poly: &[[f64; 2]], r: &Row) -> Vec<[f64; 2]> {
    let mut out = Vec::new();
    let n = poly.len();
    for i in 0..n {
        let p = poly[i];
        let q = poly[(i + 1) % n];
        let (fp, fq) = (eval(r, p), eval(r, q));
        if fp <= 0.0 {
            out.push(p);
        }
        if fp * fq < 0.0 {
            let t = fp / (fp - fq);
            out.push([p[0] + t * (q[0] - p[0]), p[1] + t * (q[1] - p[1])]);
        }
    }
    out
}

pub fn area(poly: &[[f64; 2]]) -> f64 {
    let n = poly.len();
    if n < 3 {
        return 0.0;
    }
    (0..n)
        .map(|i| poly[i][0] * poly[(i + 1) % n][1] - poly[(i + 1) % n][0] * poly[i][1])
        .sum::<f64>()
        .abs()
        / 2.0
}

/// Signed constraint rows of a cell (`side` = -1 keeps `a x + b y <= c`).
pub fn oriented_rows(rows: &[Row], signs: &[i8]) -> Vec<Row> {
    rows.iter()
        .zip(signs)
        .map(|(r, &s)| if s < 0 { *r } else { [-r[0], -r[1], -r[2]] })
        .collect()
}

/// Removal test: constraint `k` of the cell is essential iff dropping it
/// enlarges the clipped region. Returns hyperplane indices (in `rows`
/// order) followed by boundary indices `rows.len() + {0: left, 1: right,
/// 2: bottom, 3: top}`.
pub fn removal_test_essentials(
    rows: &[Row],
    signs: &[i8],
    min: [f64; 2],
    max: [f64; 2],
) -> Vec<usize> {
    let mut cons = oriented_rows(rows, signs);
    cons.extend([
        [-1.0, 0.0, -min[0]],
        [1.0, 0.0, max[0]],
        [0.0, -1.0, -min[1]],
        [0.0, 1.0, max[1]],
    ]);
    // a generous outer box so that boundary constraints can be dropped as well
    let pad = 10.0 * (max[0] - min[0] + max[1] - min[1]);
    let outer = vec![
        [min[0] - pad, min[1] - pad],
        [max[0] + pad, min[1] - pad],
        [max[0] + pad, max[1] + pad],
        [min[0] - pad, max[1] + pad],
    ];
    let region = |skip: Option<usize>| {
        cons.iter()
            .enumerate()
            .filter(|(i, _)| Some(*i) != skip)
            .fold(outer.clone(), |poly, (_, r)| clip(&poly, r))
    };
    let base = area(&region(None));
    (0..cons.len())
        .filter(|&k| area(&region(Some(k))) > base + 1e-9)
        .collect()
}

/// Maximizes `c·x` by enumerating every pairwise constraint intersection and
/// keeping the feasible ones. Returns `None` when no vertex is feasible.
pub fn lp_by_vertex_enumeration(c: [f64; 2], rows: &[Row]) -> Option<f64> {
    let mut best: Option<f64> = None;
    for i in 0..rows.len() {
        for j in (i + 1)..rows.len() {
            let (a, b) = (rows[i], rows[j]);
            let det = a[0] * b[1] - a[1] * b[0];
            if det.abs() < 1e-12 {
                continue;
            }
            let p = [
                (a[2] * b[1] - a[1] * b[2]) / det,
                (a[0] * b[2] - a[2] * b[0]) / det,
            ];
            if rows.iter().all(|r| eval(r, p) <= 1e-9) {
                let v = c[0] * p[0] + c[1] * p[1];
                best = Some(best.map_or(v, |b: f64| b.max(v)));
            }
        }
    }
    best
}

/// The `[a, b, c]` rows of an arrangement's hyperplanes, in index order.
pub fn rows_of(arr: &prefnav_core::geometry::Arrangement) -> Vec<Row> {
    arr.hyperplanes()
        .iter()
        .map(|h| [h.normal()[0], h.normal()[1], h.offset()])
        .collect()
}

/// `count` convex polygons of 3 to 6 vertices inside the `size x size` box,
/// with pairwise disjoint bounding circles. Vertices are CCW.
pub fn random_obstacles<R: rand::Rng>(rng: &mut R, count: usize, size: f64) -> Vec<Vec<[f64; 2]>> {
    let mut circles: Vec<([f64; 2], f64)> = Vec::new();
    while circles.len() < count {
        let r = rng.gen_range(0.6..2.0);
        let c = [
            rng.gen_range(r + 0.3..size - r - 0.3),
            rng.gen_range(r + 0.3..size - r - 0.3),
        ];
        if circles
            .iter()
            .all(|(o, q)| ((o[0] - c[0]).powi(2) + (o[1] - c[1]).powi(2)).sqrt() > r + q + 0.2)
        {
            circles.push((c, r));
        }
    }
    circles
        .into_iter()
        .map(|(c, r)| {
            let k = rng.gen_range(3..=6);
            // angular gaps of at least a quarter of the average keep facets from being tiny
            let gaps: Vec<f64> = (0..k).map(|_| rng.gen_range(0.25..1.0)).collect();
            let total: f64 = gaps.iter().sum();
            let phase = rng.gen_range(0.0..std::f64::consts::TAU);
            let mut angle = phase;
            gaps.iter()
                .map(|g| {
                    let p = [c[0] + r * angle.cos(), c[1] + r * angle.sin()];
                    angle += g / total * std::f64::consts::TAU;
                    p
                })
                .collect()
        })
        .collect()
}

/// True when some obstacle's block of signs is all negative.
pub fn is_inside_obstacle(signs: &[i8], blocks: &[std::ops::Range<usize>]) -> bool {
    blocks
        .iter()
        .any(|b| signs[b.clone()].iter().all(|&s| s < 0))
}

/// Builds the arrangement of `polygons` in the `size x size` box and
/// compares it with the oracles: the free sign vectors against a dense
/// sample, and every cell's essential set against the removal test.
pub fn check_against_oracles(polygons: &[Vec<[f64; 2]>], size: f64) -> Result<usize, String> {
    use prefnav_core::geometry::{
        build_arrangement, BoundSide, ConstraintRef, ObstaclePolytope, Rect,
    };

    let obstacles: Vec<ObstaclePolytope> = polygons
        .iter()
        .enumerate()
        .map(|(i, p)| ObstaclePolytope::from_ccw_vertices(i, p))
        .collect::<Result<_, _>>()
        .map_err(|e| e.to_string())?;
    let bounds = Rect::new([0.0, 0.0], [size, size]).map_err(|e| e.to_string())?;
    let arr = build_arrangement(&obstacles, bounds).map_err(|e| e.to_string())?;
    let rows = rows_of(&arr);
    let blocks: Vec<_> = (0..arr.num_obstacles())
        .map(|i| arr.obstacle_block(i))
        .collect();
    let signs = |c: &prefnav_core::geometry::Cell| -> Vec<i8> {
        c.sign_vector.iter().map(|s| s.as_i8()).collect()
    };

    let expected: BTreeSet<Vec<i8>> = sampled_sign_vectors(&rows, [0.0, 0.0], [size, size], 200)
        .into_iter()
        .filter(|s| !is_inside_obstacle(s, &blocks))
        .collect();
    let got: BTreeSet<Vec<i8>> = arr.free_cells().map(signs).collect();
    if got != expected {
        return Err(format!(
            "free cells differ: {} enumerated, {} sampled, {} missing, {} extra",
            got.len(),
            expected.len(),
            expected.difference(&got).count(),
            got.difference(&expected).count()
        ));
    }
    for cell in arr.cells() {
        let oracle = removal_test_essentials(&rows, &signs(cell), [0.0, 0.0], [size, size]);
        let mut mine: Vec<usize> = cell
            .essential
            .iter()
            .map(|e| match e.constraint {
                ConstraintRef::Hyperplane(k) => k,
                ConstraintRef::Bound(b) => {
                    rows.len() + BoundSide::ALL.iter().position(|x| *x == b).unwrap()
                }
            })
            .collect();
        mine.sort_unstable();
        if mine != oracle {
            return Err(format!(
                "cell {}: essentials {mine:?}, removal test {oracle:?}",
                cell.id
            ));
        }
    }
    Ok(got.len())
}
