//! Small hand-built worlds.

use prefnav_core::worldgraph::{load_map, World};

/// `width x height` grid whose only obstacle is a small square inside cell
/// `block`, so the world is almost empty. Every free cell is one polytope
/// apart from the thin bands around the square's lines.
pub fn single_block(width: u32, height: u32, block: (i32, i32), goals: &[(i32, i32)]) -> World {
    let (x, y) = (block.0 as f64, block.1 as f64);
    let goals: Vec<String> = goals.iter().map(|(a, b)| format!("[{a}, {b}]")).collect();
    let doc = format!(
        r#"{{
            "width": {width}, "height": {height}, "cell_size": 1.0,
            "obstacles": [{{ "halfplanes": [
                {{"n": [1, 0], "c": {}}}, {{"n": [0, 1], "c": {}}},
                {{"n": [-1, 0], "c": {}}}, {{"n": [0, -1], "c": {}}} ] }}],
            "start": [0, 0], "goal_candidates": [{}], "true_goal_index": 0,
            "preference": {{"mode": "auto_ccw", "obstacle": 0}},
            "T_max": 30, "delta_T": 1, "gamma_h": 1.5
        }}"#,
        x + 0.8,
        y + 0.8,
        -(x + 0.2),
        -(y + 0.2),
        goals.join(", ")
    );
    load_map("single_block", doc.as_bytes()).expect("valid test world")
}
