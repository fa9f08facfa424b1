//! Seeded scenario generators used by tests, benches and the CLI.

use std::f64::consts::PI;

use rand::Rng;

use crate::model::{Obstacle, RobotState};
use crate::rng::{SeedStreams, Stream};

/// Start, goal and obstacles for a goal-reaching episode.
#[derive(Debug, Clone, PartialEq)]
pub struct Course {
    pub start: RobotState,
    pub goal: [f64; 2],
    pub obstacles: Vec<Obstacle>,
}

/// Layout knobs for [`obstacle_course`].
#[derive(Debug, Clone, PartialEq)]
pub struct CourseSpec {
    pub length: f64,
    pub half_width: f64,
    pub radius: f64,
    /// Minimum distance between obstacle centers.
    pub separation: f64,
    /// Minimum distance from an obstacle center to the start and the goal.
    pub clearance: f64,
}

impl Default for CourseSpec {
    fn default() -> Self {
        Self { length: 12.0, half_width: 2.0, radius: 0.3, separation: 2.5, clearance: 2.0 }
    }
}

/// Straight course from the origin to `(length, 0)` with `n_obstacles`
/// static obstacles scattered along it. Placement retries until the
/// separation constraints hold; the retry stream is part of the seed.
pub fn obstacle_course(spec: &CourseSpec, n_obstacles: usize, seed: u64) -> Course {
    let mut rng = SeedStreams::new(seed).rng(Stream::Scenario, 1);
    let goal = [spec.length, 0.0];
    let mut obstacles: Vec<Obstacle> = Vec::with_capacity(n_obstacles);
    let mut attempts = 0;
    while obstacles.len() < n_obstacles {
        attempts += 1;
        assert!(attempts < 100_000, "course layout is too crowded for {n_obstacles} obstacles");
        let cx = rng.random_range(spec.clearance..=spec.length - spec.clearance);
        let cy = rng.random_range(-spec.half_width..=spec.half_width);
        let far = |x: f64, y: f64, min: f64| (cx - x).hypot(cy - y) >= min;
        if far(0.0, 0.0, spec.clearance)
            && far(goal[0], goal[1], spec.clearance)
            && obstacles.iter().all(|o| far(o.cx, o.cy, spec.separation))
        {
            obstacles.push(Obstacle::fixed(cx, cy, spec.radius));
        }
    }
    Course { start: RobotState::new(0.0, 0.0, 0.0, 0.0), goal, obstacles }
}

/// A single obstacle with the robot already inside the unsafe band of the
/// index and moving roughly toward it. The goal lies beyond the obstacle.
pub fn unsafe_approach(seed: u64, d_min: f64, v_max: f64) -> Course {
    let mut rng = SeedStreams::new(seed).rng(Stream::Scenario, 2);
    let obstacle = Obstacle::fixed(0.0, 0.0, 0.3);
    let d = rng.random_range(1.15 * d_min..=1.6 * d_min);
    let bearing = rng.random_range(-PI..PI);
    let px = -d * bearing.cos();
    let py = -d * bearing.sin();
    // heading within ±60° of the obstacle direction
    let theta = bearing + rng.random_range(-PI / 3.0..=PI / 3.0);
    let v = rng.random_range(0.5 * v_max..=v_max);
    Course {
        start: RobotState::new(px, py, theta, v),
        goal: [3.0 * bearing.cos(), 3.0 * bearing.sin()],
        obstacles: vec![obstacle],
    }
}
