use crate::geometry::Vec2;
use crate::sequencer::SequenceState;
use crate::world::WorldState;

/// Number of regions described in the observation; further regions are
/// ignored.
pub const REGION_SLOTS: usize = 3;
pub const OBS_DIM: usize = 5 + 4 * REGION_SLOTS;

/// Policy observation, normalized by the arena size and episode horizon:
/// agent position, goal offset, elapsed fraction of the episode, and per
/// region its center offset, the normalized time to the earliest pending
/// deadline that region can serve, and whether it is the current target.
pub fn observe(world: &WorldState, seq: &SequenceState, horizon: f64) -> Vec<f64> {
    let arena = world.config().arena;
    let mid = (arena.min + arena.max) * 0.5;
    let half = 0.5 * (arena.max.x - arena.min.x).max(arena.max.y - arena.min.y);
    let rel = |p: Vec2| (p - world.x) / half;
    let mut obs = Vec::with_capacity(OBS_DIM);
    let pos = (world.x - mid) / half;
    let goal = rel(world.goal().center);
    obs.extend([pos.x, pos.y, goal.x, goal.y, (world.t / horizon).min(1.0)]);
    let target = seq.dwell.map(|d| d.region).or(seq.front().map(|v| v.region));
    for slot in 0..REGION_SLOTS {
        match world.regions.get(slot) {
            Some(r) => {
                let off = rel(r.center);
                let due = seq
                    .items
                    .iter()
                    .filter(|v| v.alternatives.contains(&slot))
                    .map(|v| v.deadline - world.t)
                    .fold(f64::INFINITY, f64::min);
                let due = if due.is_finite() {
                    (due / horizon).clamp(-1.0, 1.0)
                } else {
                    1.0
                };
                let flag = if target == Some(slot) { 1.0 } else { 0.0 };
                obs.extend([off.x, off.y, due, flag]);
            }
            None => obs.extend([0.0; 4]),
        }
    }
    obs
}
