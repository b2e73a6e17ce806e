//! Deterministic 2D navigation simulator for semantic obstacle avoidance.
//!
//! A robot steers toward a goal with a circumnavigation vector law whose
//! clearance distance depends on the perceived class of each obstacle.
//! Classes with zero clearance (balls, fish, ...) are driven straight
//! through. Perception is a synthetic labeled stereo rig; the harness runs
//! batches of seeded trials with and without semantic labels and compares
//! travel time and success rate.

pub mod geometry;
pub mod harness;
pub mod perception;
pub mod plot;
pub mod sim;
pub mod steering;
pub mod trajectory;
pub mod world;

pub use geometry::Vec2;
pub use perception::{
    depth_from_disparity, fuse, sense, LabeledObstacleEstimate, PerceptionFrame, SensorConfig,
    SensorNoiseSpec, StereoRig,
};
pub use sim::{detect_termination, run_trial, step, Mode, Outcome, RobotState, TrialResult};
pub use steering::{steering_direction, SteeringDecision, SteeringParams};
pub use world::{
    effective_d0, load_scenario, load_scenario_file, nearest_effective_obstacle, serialize_scenario,
    ClearancePolicy, ObstacleInstance, ScenarioError, ScenarioSpec,
};
