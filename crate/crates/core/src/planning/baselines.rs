use crate::worldgraph::{Action, GridPos, World};

/// Steps the compliant robot keeps following a heading after it was given.
pub const COMPLIANT_HOLD: u32 = 5;

/// Entropy (nats) above which the blended robot defers to the human.
pub const DEFAULT_BLEND_THRESHOLD: f64 = 1.6;

/// Last heading given to the compliant robot and when.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq)]
pub struct CompliantMemory {
    pub last: Option<(Action, u32)>,
}

impl CompliantMemory {
    pub fn observe(&mut self, heading: Action, t: u32) {
        self.last = Some((heading, t));
    }
}

/// Follows the last heading while it is at most [`COMPLIANT_HOLD`] steps
/// old and still leads to a free cell; otherwise stops.
pub fn compliant_policy(
    world: &World,
    s: GridPos,
    memory: &CompliantMemory,
    t: u32,
) -> Option<Action> {
    let (heading, given) = memory.last?;
    let age = t.checked_sub(given)?;
    (age <= COMPLIANT_HOLD && world.apply_action(s, heading).is_ok()).then_some(heading)
}

/// Step-function arbitration: the human's heading wins while the joint
/// entropy exceeds `threshold`, provided it is a valid move.
pub fn blended_policy(
    world: &World,
    s: GridPos,
    entropy: f64,
    planned: Action,
    user: Option<Action>,
    threshold: f64,
) -> Action {
    match user {
        Some(u) if entropy > threshold && world.apply_action(s, u).is_ok() => u,
        _ => planned,
    }
}
