//! Fixed-step trial simulation: sense, fuse, select, steer, move, terminate.

use std::collections::BTreeMap;
use std::fmt;
use std::str::FromStr;

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Normal};
use serde::Serialize;

use crate::geometry::{surface_distance, wrap_angle, Vec2};
use crate::perception::{self, CameraPose, EstimateMemory, ObstacleView};
use crate::steering::{
    attractive_potential, repulsive_potential, steering_direction, ActiveObstacle, SteeringError,
};
use crate::world::{nearest_effective_obstacle, ClearancePolicy, RobotParams, ScenarioError, ScenarioSpec};

/// Class every detection is relabeled to when semantics are withheld.
pub const OPAQUE_CLASS: &str = "obstacle";

const PERCEPTION_STREAM: u64 = 1;
const DISTURBANCE_STREAM: u64 = 2;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum Mode {
    /// Per-class clearances from the scenario policy.
    Soar,
    /// One opaque class with the scenario's uniform clearance.
    NonSoar,
}

impl Mode {
    pub const ALL: [Mode; 2] = [Mode::Soar, Mode::NonSoar];

    pub fn as_str(self) -> &'static str {
        match self {
            Mode::Soar => "soar",
            Mode::NonSoar => "non-soar",
        }
    }
}

impl fmt::Display for Mode {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for Mode {
    type Err = String;
    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "soar" => Ok(Mode::Soar),
            "non-soar" | "non_soar" | "nonsoar" => Ok(Mode::NonSoar),
            other => Err(format!("unknown mode {other:?} (expected soar or non-soar)")),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum Outcome {
    GoalReached,
    Timeout,
    WrongDirection,
    Stuck,
    Collision,
}

impl Outcome {
    pub fn as_str(self) -> &'static str {
        match self {
            Outcome::GoalReached => "goal_reached",
            Outcome::Timeout => "timeout",
            Outcome::WrongDirection => "wrong_direction",
            Outcome::Stuck => "stuck",
            Outcome::Collision => "collision",
        }
    }

    pub fn is_success(self) -> bool {
        self == Outcome::GoalReached
    }
}

impl fmt::Display for Outcome {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for Outcome {
    type Err = String;
    fn from_str(s: &str) -> Result<Self, Self::Err> {
        Ok(match s {
            "goal_reached" => Outcome::GoalReached,
            "timeout" => Outcome::Timeout,
            "wrong_direction" => Outcome::WrongDirection,
            "stuck" => Outcome::Stuck,
            "collision" => Outcome::Collision,
            other => return Err(format!("unknown outcome {other:?}")),
        })
    }
}

/// Thresholds for the failure terminations.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct TerminationParams {
    pub stuck_window_s: f64,
    pub stuck_epsilon_m: f64,
    /// Goal distance over initial goal distance that counts as heading the
    /// wrong way.
    pub wrong_dir_factor: f64,
}

impl Default for TerminationParams {
    fn default() -> Self {
        Self {
            stuck_window_s: 5.0,
            stuck_epsilon_m: 0.05,
            wrong_dir_factor: 1.5,
        }
    }
}

impl TerminationParams {
    pub(crate) fn validate(&self) -> Result<(), (&'static str, String)> {
        if !(self.stuck_window_s.is_finite() && self.stuck_window_s > 0.0) {
            return Err(("stuck_window_s", format!("stuck_window_s > 0 (got {})", self.stuck_window_s)));
        }
        if !(self.stuck_epsilon_m.is_finite() && self.stuck_epsilon_m >= 0.0) {
            return Err(("stuck_epsilon_m", format!("stuck_epsilon_m ≥ 0 (got {})", self.stuck_epsilon_m)));
        }
        if !(self.wrong_dir_factor.is_finite() && self.wrong_dir_factor > 1.0) {
            return Err((
                "wrong_dir_factor",
                format!("wrong_dir_factor > 1 (got {})", self.wrong_dir_factor),
            ));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct RobotState {
    pub position: Vec2,
    /// Radians in (-pi, pi].
    pub heading: f64,
    pub speed: f64,
    pub time: f64,
}

/// Advances the unicycle one step. The heading turns toward `v_hat` by at
/// most `max_turn_rate * dt`; speed ramps down linearly inside the slowdown
/// radius; the disturbance velocity is added on top.
pub fn step(
    state: &RobotState,
    v_hat: Vec2,
    params: &RobotParams,
    goal: Vec2,
    disturbance: Vec2,
    dt: f64,
) -> RobotState {
    let max_turn = params.max_turn_rate * dt;
    let error = wrap_angle(v_hat.angle() - state.heading);
    let heading = wrap_angle(state.heading + error.clamp(-max_turn, max_turn));
    let goal_dist = state.position.distance(goal);
    let speed = params.cruise_speed * (goal_dist / params.slowdown_radius).min(1.0);
    let position = state.position + Vec2::from_angle(heading) * (speed * dt) + disturbance * dt;
    RobotState {
        position,
        heading,
        speed,
        time: state.time + dt,
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct TrajectoryPoint {
    pub time: f64,
    pub position: Vec2,
    pub heading: f64,
    pub speed: f64,
}

/// Per-tick controller summary.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct TickLog {
    pub active_obstacle_id: Option<u32>,
    pub c1: f64,
    pub c2: f64,
    pub v_hat: Vec2,
    pub tie_break_applied: bool,
    /// Diagnostic potentials at the pre-move position.
    pub attractive_potential: f64,
    pub repulsive_potential: Option<f64>,
    /// Smallest true surface distance to an avoidable obstacle after the move.
    pub min_clearance: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct TrialResult {
    pub scenario: String,
    pub mode: Mode,
    pub seed: u64,
    pub outcome: Outcome,
    pub travel_time: f64,
    pub path_length: f64,
    pub min_clearance_by_class: BTreeMap<String, f64>,
    pub dropped_detections: usize,
    /// Smallest true surface distance to an avoidable obstacle at the start.
    pub start_clearance: f64,
    /// Starts with the initial pose; one further point per tick.
    #[serde(skip)]
    pub trajectory: Vec<TrajectoryPoint>,
    /// `tick_log[k]` drove the move from `trajectory[k]` to `trajectory[k + 1]`.
    #[serde(skip)]
    pub tick_log: Vec<TickLog>,
}

#[derive(Debug, thiserror::Error)]
pub enum TrialError {
    #[error(transparent)]
    Scenario(#[from] ScenarioError),
    #[error("steering failed at t = {time:.3}s: {source}")]
    Steering {
        time: f64,
        #[source]
        source: SteeringError,
    },
}

fn avoidable_clearance(pos: Vec2, obstacles: &[ObstacleView], policy: &ClearancePolicy) -> f64 {
    obstacles
        .iter()
        .filter(|o| policy.d0(o.class_label) > 0.0)
        .map(|o| surface_distance(pos, o.center, o.radius))
        .fold(f64::INFINITY, f64::min)
}

/// Checks the termination conditions against the latest point of `history`.
/// Order: collision, goal, stuck, wrong direction, timeout.
pub fn detect_termination(
    history: &[TrajectoryPoint],
    spec: &ScenarioSpec,
    obstacles: &[ObstacleView],
) -> Option<Outcome> {
    let now = history.last()?;
    if avoidable_clearance(now.position, obstacles, &spec.policy) <= spec.robot.collision_radius {
        return Some(Outcome::Collision);
    }
    let goal_dist = now.position.distance(spec.goal);
    if goal_dist <= spec.goal_radius {
        return Some(Outcome::GoalReached);
    }
    let term = &spec.termination;
    if now.time >= term.stuck_window_s {
        let cutoff = now.time - term.stuck_window_s;
        let idx = history.partition_point(|p| p.time <= cutoff + 1e-9);
        if idx > 0 && history[idx - 1].position.distance(now.position) < term.stuck_epsilon_m {
            return Some(Outcome::Stuck);
        }
    }
    let initial = history[0].position.distance(spec.goal);
    if goal_dist > term.wrong_dir_factor * initial {
        return Some(Outcome::WrongDirection);
    }
    if now.time >= spec.time_limit {
        return Some(Outcome::Timeout);
    }
    None
}

/// Runs one trial. Deterministic in `(spec, mode, seed)`.
pub fn run_trial(spec: &ScenarioSpec, mode: Mode, seed: u64) -> Result<TrialResult, TrialError> {
    spec.validate()?;

    let mut perception_rng = ChaCha8Rng::seed_from_u64(seed);
    perception_rng.set_stream(PERCEPTION_STREAM);
    let mut gust_rng = ChaCha8Rng::seed_from_u64(seed);
    gust_rng.set_stream(DISTURBANCE_STREAM);
    let gust = (spec.disturbance.gust_std > 0.0)
        .then(|| Normal::new(0.0, spec.disturbance.gust_std).expect("validated std"));

    let uniform = ClearancePolicy::uniform(spec.uniform_d0);
    let policy = match mode {
        Mode::Soar => &spec.policy,
        Mode::NonSoar => &uniform,
    };
    let mut memory = spec.sensor.memory_ttl_s.map(EstimateMemory::new);

    let mut state = RobotState {
        position: spec.start.position,
        heading: wrap_angle(spec.start.heading),
        speed: 0.0,
        time: 0.0,
    };
    let mut trajectory = vec![TrajectoryPoint {
        time: 0.0,
        position: state.position,
        heading: state.heading,
        speed: 0.0,
    }];
    let mut tick_log = Vec::new();
    let mut path_length = 0.0;
    let mut dropped = 0;
    let mut min_by_class: BTreeMap<String, f64> = BTreeMap::new();

    let views_at = |t: f64| -> Vec<ObstacleView> {
        spec.obstacles.iter().map(|o| ObstacleView::at(o, t)).collect()
    };
    let mut record_clearance = |pos: Vec2, views: &[ObstacleView]| {
        for v in views {
            let d = surface_distance(pos, v.center, v.radius);
            let slot = min_by_class
                .entry(v.class_label.to_owned())
                .or_insert(f64::INFINITY);
            *slot = slot.min(d);
        }
    };

    let initial_views = views_at(0.0);
    record_clearance(state.position, &initial_views);
    let mut outcome = detect_termination(&trajectory, spec, &initial_views);

    let mut tick: u64 = 0;
    while outcome.is_none() {
        tick += 1;
        let next_time = (tick as f64 * spec.robot.dt).min(spec.time_limit);
        let dt = next_time - state.time;

        // obstacles advance first
        let views = views_at(next_time);

        let pose = CameraPose {
            position: state.position,
            heading: state.heading,
        };
        let frame = perception::sense(
            &views,
            pose,
            &spec.sensor.rig,
            &spec.sensor.noise,
            &mut perception_rng,
        );
        let fused = perception::fuse(&frame, &spec.sensor.rig);
        dropped += fused.dropped;
        let mut estimates = match memory.as_mut() {
            Some(m) => m.update(state.time, state.position, fused.estimates),
            None => fused.estimates,
        };
        if mode == Mode::NonSoar {
            for e in &mut estimates {
                e.class_label = OPAQUE_CLASS.to_owned();
            }
        }

        let selected = nearest_effective_obstacle(state.position, &estimates, policy);
        let active = selected.map(|(e, d0)| ActiveObstacle {
            id: e.source_instance,
            position: e.position,
            surface_distance: surface_distance(state.position, e.position, e.radius),
            d0,
        });
        let decision = steering_direction(state.position, spec.goal, active, &spec.steering)
            .map_err(|source| TrialError::Steering {
                time: state.time,
                source,
            })?;

        let mut disturbance = spec.disturbance.constant_drift;
        if let Some(g) = &gust {
            disturbance += Vec2::new(g.sample(&mut gust_rng), g.sample(&mut gust_rng));
        }

        let prev = state.position;
        state = step(&state, decision.v_hat, &spec.robot, spec.goal, disturbance, dt);
        state.time = next_time;
        path_length += prev.distance(state.position);
        record_clearance(state.position, &views);

        tick_log.push(TickLog {
            active_obstacle_id: decision.active_obstacle_id,
            c1: decision.c1,
            c2: decision.c2,
            v_hat: decision.v_hat,
            tie_break_applied: decision.tie_break_applied,
            attractive_potential: attractive_potential(prev, spec.goal, spec.steering.c),
            repulsive_potential: active
                .and_then(|a| repulsive_potential(a.surface_distance, a.d0, spec.steering.eta).ok()),
            min_clearance: avoidable_clearance(state.position, &views, &spec.policy),
        });
        trajectory.push(TrajectoryPoint {
            time: state.time,
            position: state.position,
            heading: state.heading,
            speed: state.speed,
        });
        outcome = detect_termination(&trajectory, spec, &views);
    }

    Ok(TrialResult {
        scenario: spec.name.clone(),
        mode,
        seed,
        outcome: outcome.expect("loop exits on an outcome"),
        travel_time: state.time,
        path_length,
        min_clearance_by_class: min_by_class,
        dropped_detections: dropped,
        start_clearance: avoidable_clearance(spec.start.position, &initial_views, &spec.policy),
        trajectory,
        tick_log,
    })
}
