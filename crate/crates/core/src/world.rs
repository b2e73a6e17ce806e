//! Worlds, obstacles, clearance policies and the scenario file format.
//!
//! A scenario is a TOML document. Every block except `format_version`,
//! `name`, `start`, `goal` and `obstacles` may be omitted and falls back to
//! the defaults below. Unknown keys are rejected.

use std::collections::BTreeMap;
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use crate::geometry::{surface_distance, Vec2};
use crate::perception::{LabeledObstacleEstimate, SensorConfig, SensorNoiseSpec, StereoRig};
use crate::sim::TerminationParams;
use crate::steering::SteeringParams;

pub const FORMAT_VERSION: u32 = 1;

pub const DEFAULT_D0: f64 = 1.0;
pub const DEFAULT_GOAL_RADIUS: f64 = 0.3;
pub const DEFAULT_DT: f64 = 0.05;
/// Largest integration step accepted by validation.
pub const MAX_DT: f64 = 0.1;
pub const DEFAULT_TIME_LIMIT_S: f64 = 120.0;
pub const DEFAULT_SEED: u64 = 42;

#[derive(Debug, thiserror::Error)]
pub enum ScenarioError {
    #[error("parse error: {0}")]
    Parse(String),
    #[error("{field}: {rule}")]
    Validation { field: String, rule: String },
    #[error("{}: {source}", path.display())]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
    #[error("serialize error: {0}")]
    Serialize(String),
}

impl ScenarioError {
    fn invalid(field: impl Into<String>, rule: impl Into<String>) -> Self {
        ScenarioError::Validation {
            field: field.into(),
            rule: rule.into(),
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub enum Motion {
    Static,
    /// Moves from the spawn center to the first waypoint, then cycles through
    /// the waypoints forever at constant speed.
    WaypointLoop { waypoints: Vec<Vec2>, speed: f64 },
}

#[derive(Debug, Clone, PartialEq)]
pub struct ObstacleInstance {
    pub id: u32,
    pub class_label: String,
    pub center: Vec2,
    pub radius: f64,
    pub motion: Motion,
}

impl ObstacleInstance {
    pub fn new_static(id: u32, class_label: &str, center: Vec2, radius: f64) -> Self {
        Self {
            id,
            class_label: class_label.to_owned(),
            center,
            radius,
            motion: Motion::Static,
        }
    }

    /// Center position after `t` seconds of motion.
    pub fn position_at(&self, t: f64) -> Vec2 {
        let (waypoints, speed) = match &self.motion {
            Motion::Static => return self.center,
            Motion::WaypointLoop { waypoints, speed } => (waypoints, *speed),
        };
        if speed <= 0.0 || waypoints.is_empty() || t <= 0.0 {
            return self.center;
        }
        let mut s = speed * t;
        let lead_in = self.center.distance(waypoints[0]);
        if s <= lead_in {
            return lerp_towards(self.center, waypoints[0], s);
        }
        s -= lead_in;
        let n = waypoints.len();
        let loop_len: f64 = (0..n)
            .map(|i| waypoints[i].distance(waypoints[(i + 1) % n]))
            .sum();
        if loop_len <= 0.0 {
            return waypoints[0];
        }
        s %= loop_len;
        for i in 0..n {
            let (a, b) = (waypoints[i], waypoints[(i + 1) % n]);
            let seg = a.distance(b);
            if s <= seg {
                return lerp_towards(a, b, s);
            }
            s -= seg;
        }
        waypoints[0]
    }
}

fn lerp_towards(a: Vec2, b: Vec2, s: f64) -> Vec2 {
    match (b - a).normalized() {
        Some(dir) => a + dir * s,
        None => a,
    }
}

/// Clearance distance per semantic class. A class mapped to 0 is ignorable.
#[derive(Debug, Clone, PartialEq)]
pub struct ClearancePolicy {
    pub entries: BTreeMap<String, f64>,
    pub default_d0: f64,
}

impl Default for ClearancePolicy {
    fn default() -> Self {
        Self::uniform(DEFAULT_D0)
    }
}

impl ClearancePolicy {
    /// Same clearance for every class.
    pub fn uniform(d0: f64) -> Self {
        Self {
            entries: BTreeMap::new(),
            default_d0: d0,
        }
    }

    pub fn with(mut self, class_label: &str, d0: f64) -> Self {
        self.entries.insert(class_label.to_owned(), d0);
        self
    }

    pub fn d0(&self, class_label: &str) -> f64 {
        effective_d0(self, class_label)
    }
}

pub fn effective_d0(policy: &ClearancePolicy, class_label: &str) -> f64 {
    policy
        .entries
        .get(class_label)
        .copied()
        .unwrap_or(policy.default_d0)
}

/// Picks the estimate the robot must react to: the one intruding deepest
/// into its class clearance ring. Classes with zero clearance never qualify.
/// Ties break on smaller surface distance, then smaller instance id.
pub fn nearest_effective_obstacle<'a>(
    robot_pos: Vec2,
    estimates: &'a [LabeledObstacleEstimate],
    policy: &ClearancePolicy,
) -> Option<(&'a LabeledObstacleEstimate, f64)> {
    let mut best: Option<(&LabeledObstacleEstimate, f64, f64, f64)> = None;
    for e in estimates {
        let d0 = policy.d0(&e.class_label);
        if d0 <= 0.0 {
            continue;
        }
        let dist = surface_distance(robot_pos, e.position, e.radius);
        if dist > d0 {
            continue;
        }
        let intrusion = d0 - dist;
        let better = match best {
            None => true,
            Some((b, _, b_intrusion, b_dist)) => {
                if intrusion != b_intrusion {
                    intrusion > b_intrusion
                } else if dist != b_dist {
                    dist < b_dist
                } else {
                    e.source_instance < b.source_instance
                }
            }
        };
        if better {
            best = Some((e, d0, intrusion, dist));
        }
    }
    best.map(|(e, d0, _, _)| (e, d0))
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct RobotParams {
    pub cruise_speed: f64,
    pub max_turn_rate: f64,
    pub slowdown_radius: f64,
    pub collision_radius: f64,
    pub dt: f64,
}

impl Default for RobotParams {
    fn default() -> Self {
        Self {
            cruise_speed: 0.5,
            max_turn_rate: 2.0,
            slowdown_radius: 1.0,
            collision_radius: 0.2,
            dt: DEFAULT_DT,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct DisturbanceSpec {
    pub constant_drift: Vec2,
    pub gust_std: f64,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct StartPose {
    pub position: Vec2,
    pub heading: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct ScenarioSpec {
    pub name: String,
    pub obstacles: Vec<ObstacleInstance>,
    pub start: StartPose,
    pub goal: Vec2,
    pub goal_radius: f64,
    pub robot: RobotParams,
    pub disturbance: DisturbanceSpec,
    pub policy: ClearancePolicy,
    /// Clearance applied to every detection when semantics are withheld.
    pub uniform_d0: f64,
    pub time_limit: f64,
    pub seed: u64,
    pub steering: SteeringParams,
    pub termination: TerminationParams,
    pub sensor: SensorConfig,
}

impl ScenarioSpec {
    /// An empty world with defaults everywhere; mostly for tests and tooling.
    pub fn new(name: &str, start: Vec2, heading: f64, goal: Vec2) -> Self {
        Self {
            name: name.to_owned(),
            obstacles: Vec::new(),
            start: StartPose {
                position: start,
                heading,
            },
            goal,
            goal_radius: DEFAULT_GOAL_RADIUS,
            robot: RobotParams::default(),
            disturbance: DisturbanceSpec::default(),
            policy: ClearancePolicy::default(),
            uniform_d0: DEFAULT_D0,
            time_limit: DEFAULT_TIME_LIMIT_S,
            seed: DEFAULT_SEED,
            steering: SteeringParams::default(),
            termination: TerminationParams::default(),
            sensor: SensorConfig::default(),
        }
    }

    pub fn obstacle(&self, id: u32) -> Option<&ObstacleInstance> {
        self.obstacles.iter().find(|o| o.id == id)
    }

    pub fn validate(&self) -> Result<(), ScenarioError> {
        validate(self)
    }

    pub fn to_toml(&self) -> Result<String, ScenarioError> {
        serialize_scenario(self)
    }
}

pub fn load_scenario(text: &str) -> Result<ScenarioSpec, ScenarioError> {
    let doc: ScenarioDocument =
        toml::from_str(text).map_err(|e| ScenarioError::Parse(e.to_string()))?;
    let spec = doc.into_spec()?;
    validate(&spec)?;
    Ok(spec)
}

pub fn load_scenario_file(path: &Path) -> Result<ScenarioSpec, ScenarioError> {
    let text = std::fs::read_to_string(path).map_err(|source| ScenarioError::Io {
        path: path.to_owned(),
        source,
    })?;
    load_scenario(&text)
}

pub fn serialize_scenario(spec: &ScenarioSpec) -> Result<String, ScenarioError> {
    let doc = ScenarioDocument::from_spec(spec);
    toml::to_string_pretty(&doc).map_err(|e| ScenarioError::Serialize(e.to_string()))
}

fn check(ok: bool, field: impl Into<String>, rule: impl Into<String>) -> Result<(), ScenarioError> {
    if ok {
        Ok(())
    } else {
        Err(ScenarioError::invalid(field, rule))
    }
}

fn check_finite(v: f64, field: &str) -> Result<(), ScenarioError> {
    check(v.is_finite(), field, format!("must be finite (got {v})"))
}

fn validate(spec: &ScenarioSpec) -> Result<(), ScenarioError> {
    check(!spec.name.is_empty(), "name", "name must not be empty")?;

    let r = &spec.robot;
    for (v, f) in [
        (r.cruise_speed, "robot.cruise_speed"),
        (r.max_turn_rate, "robot.max_turn_rate"),
        (r.slowdown_radius, "robot.slowdown_radius"),
        (r.collision_radius, "robot.collision_radius"),
        (r.dt, "robot.dt"),
        (spec.goal.x, "goal.x"),
        (spec.goal.y, "goal.y"),
        (spec.goal_radius, "goal.radius"),
        (spec.start.position.x, "start.x"),
        (spec.start.position.y, "start.y"),
        (spec.start.heading, "start.heading"),
        (spec.disturbance.constant_drift.x, "disturbance.drift_x"),
        (spec.disturbance.constant_drift.y, "disturbance.drift_y"),
        (spec.disturbance.gust_std, "disturbance.gust_std"),
        (spec.time_limit, "time_limit_s"),
        (spec.uniform_d0, "uniform_d0"),
        (spec.policy.default_d0, "policy.default_d0"),
    ] {
        check_finite(v, f)?;
    }
    check(r.cruise_speed > 0.0, "robot.cruise_speed", format!("cruise_speed > 0 (got {})", r.cruise_speed))?;
    check(r.max_turn_rate > 0.0, "robot.max_turn_rate", format!("max_turn_rate > 0 (got {})", r.max_turn_rate))?;
    check(r.collision_radius >= 0.0, "robot.collision_radius", format!("collision_radius ≥ 0 (got {})", r.collision_radius))?;
    check(
        r.dt > 0.0 && r.dt <= MAX_DT,
        "robot.dt",
        format!("0 < dt ≤ {MAX_DT} (got {})", r.dt),
    )?;
    check(spec.goal_radius > 0.0, "goal.radius", format!("goal_radius > 0 (got {})", spec.goal_radius))?;
    check(
        r.slowdown_radius >= spec.goal_radius,
        "robot.slowdown_radius",
        format!("slowdown_radius ≥ goal_radius (got {} < {})", r.slowdown_radius, spec.goal_radius),
    )?;
    check(spec.time_limit > 0.0, "time_limit_s", format!("time_limit > 0 (got {})", spec.time_limit))?;
    check(
        spec.disturbance.gust_std >= 0.0,
        "disturbance.gust_std",
        format!("gust_std ≥ 0 (got {})", spec.disturbance.gust_std),
    )?;
    check(spec.uniform_d0 >= 0.0, "uniform_d0", format!("uniform_d0 ≥ 0 (got {})", spec.uniform_d0))?;
    check(
        spec.policy.default_d0 >= 0.0,
        "policy.default_d0",
        format!("d0 ≥ 0 (got {})", spec.policy.default_d0),
    )?;
    for (label, &d0) in &spec.policy.entries {
        let field = format!("policy.classes.{label}");
        check_finite(d0, &field)?;
        check(d0 >= 0.0, field, format!("d0 ≥ 0 (got {d0})"))?;
    }
    check(
        spec.seed <= i64::MAX as u64,
        "seed",
        format!("seed ≤ {} (got {})", i64::MAX, spec.seed),
    )?;

    spec.steering
        .validate()
        .map_err(|(field, rule)| ScenarioError::invalid(format!("steering.{field}"), rule))?;
    spec.termination
        .validate()
        .map_err(|(field, rule)| ScenarioError::invalid(format!("termination.{field}"), rule))?;
    spec.sensor
        .validate()
        .map_err(|(field, rule)| ScenarioError::invalid(format!("sensor.{field}"), rule))?;

    let mut seen = std::collections::BTreeSet::new();
    for (i, o) in spec.obstacles.iter().enumerate() {
        let at = |f: &str| format!("obstacles[{i}] (id {}).{f}", o.id);
        check(seen.insert(o.id), at("id"), format!("id unique within a world (duplicate {})", o.id))?;
        check(!o.class_label.is_empty(), at("class"), "class must not be empty")?;
        check_finite(o.center.x, &at("x"))?;
        check_finite(o.center.y, &at("y"))?;
        check_finite(o.radius, &at("radius"))?;
        check(o.radius >= 0.0, at("radius"), format!("radius ≥ 0 (got {})", o.radius))?;
        if let Motion::WaypointLoop { waypoints, speed } = &o.motion {
            check_finite(*speed, &at("motion.speed"))?;
            check(*speed >= 0.0, at("motion.speed"), format!("waypoint speed ≥ 0 (got {speed})"))?;
            check(!waypoints.is_empty(), at("motion.waypoints"), "waypoint list non-empty")?;
            for (k, w) in waypoints.iter().enumerate() {
                check(w.is_finite(), at(&format!("motion.waypoints[{k}]")), "waypoint must be finite")?;
            }
        }

        let d0 = spec.policy.d0(&o.class_label);
        if d0 > 0.0 {
            let reach = o.radius + d0;
            check(
                spec.goal.distance(o.center) > reach,
                "goal",
                format!(
                    "goal lies outside obstacle {} ({}) clearance region of radius {reach}",
                    o.id, o.class_label
                ),
            )?;
            check(
                surface_distance(spec.start.position, o.center, o.radius) > r.collision_radius,
                "start",
                format!("start position collision-free (touches obstacle {} ({}))", o.id, o.class_label),
            )?;
        }
    }
    Ok(())
}

// ---------------------------------------------------------------------------
// On-disk document

#[derive(Debug, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct ScenarioDocument {
    format_version: Option<u32>,
    name: Option<String>,
    #[serde(default)]
    time_limit_s: Option<f64>,
    #[serde(default)]
    seed: Option<u64>,
    #[serde(default)]
    uniform_d0: Option<f64>,
    #[serde(default)]
    robot: RobotDoc,
    start: Option<StartDoc>,
    goal: Option<GoalDoc>,
    #[serde(default)]
    disturbance: DisturbanceDoc,
    #[serde(default)]
    policy: PolicyDoc,
    #[serde(default)]
    steering: SteeringDoc,
    #[serde(default)]
    termination: TerminationDoc,
    #[serde(default)]
    sensor: SensorDoc,
    #[serde(default)]
    obstacles: Vec<ObstacleDoc>,
}

#[derive(Debug, Default, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct RobotDoc {
    cruise_speed: Option<f64>,
    max_turn_rate: Option<f64>,
    slowdown_radius: Option<f64>,
    collision_radius: Option<f64>,
    dt: Option<f64>,
}

#[derive(Debug, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct StartDoc {
    x: f64,
    y: f64,
    #[serde(default)]
    heading: f64,
}

#[derive(Debug, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct GoalDoc {
    x: f64,
    y: f64,
    radius: Option<f64>,
}

#[derive(Debug, Default, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct DisturbanceDoc {
    #[serde(default)]
    drift_x: f64,
    #[serde(default)]
    drift_y: f64,
    #[serde(default)]
    gust_std: f64,
}

#[derive(Debug, Default, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct PolicyDoc {
    default_d0: Option<f64>,
    #[serde(default)]
    classes: BTreeMap<String, f64>,
}

#[derive(Debug, Default, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct SteeringDoc {
    b: Option<f64>,
    c: Option<f64>,
    eta: Option<f64>,
}

#[derive(Debug, Default, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct TerminationDoc {
    stuck_window_s: Option<f64>,
    stuck_epsilon_m: Option<f64>,
    wrong_dir_factor: Option<f64>,
}

#[derive(Debug, Default, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct SensorDoc {
    focal_px: Option<f64>,
    baseline_m: Option<f64>,
    cx: Option<f64>,
    cy: Option<f64>,
    width: Option<u32>,
    height: Option<u32>,
    fov_deg: Option<f64>,
    max_range_m: Option<f64>,
    disparity_std: Option<f64>,
    misclassify_prob: Option<f64>,
    #[serde(default)]
    confusion: BTreeMap<String, String>,
    #[serde(skip_serializing_if = "Option::is_none")]
    memory_ttl_s: Option<f64>,
}

#[derive(Debug, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct ObstacleDoc {
    id: u32,
    class: String,
    x: f64,
    y: f64,
    radius: f64,
    #[serde(default)]
    motion: MotionDoc,
}

#[derive(Debug, Default, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
enum MotionDoc {
    #[default]
    Static,
    WaypointLoop { speed: f64, waypoints: Vec<[f64; 2]> },
}

impl ScenarioDocument {
    fn into_spec(self) -> Result<ScenarioSpec, ScenarioError> {
        let version = self
            .format_version
            .ok_or_else(|| ScenarioError::invalid("format_version", "format_version required"))?;
        if version != FORMAT_VERSION {
            return Err(ScenarioError::invalid(
                "format_version",
                format!("unsupported format_version {version} (expected {FORMAT_VERSION})"),
            ));
        }
        let name = self
            .name
            .ok_or_else(|| ScenarioError::invalid("name", "name required"))?;
        let start = self
            .start
            .ok_or_else(|| ScenarioError::invalid("start", "start{x,y} required"))?;
        let goal = self
            .goal
            .ok_or_else(|| ScenarioError::invalid("goal", "goal{x,y} required"))?;

        let rd = RobotParams::default();
        let robot = RobotParams {
            cruise_speed: self.robot.cruise_speed.unwrap_or(rd.cruise_speed),
            max_turn_rate: self.robot.max_turn_rate.unwrap_or(rd.max_turn_rate),
            slowdown_radius: self.robot.slowdown_radius.unwrap_or(rd.slowdown_radius),
            collision_radius: self.robot.collision_radius.unwrap_or(rd.collision_radius),
            dt: self.robot.dt.unwrap_or(rd.dt),
        };
        let sd = SteeringParams::default();
        let steering = SteeringParams {
            b: self.steering.b.unwrap_or(sd.b),
            c: self.steering.c.unwrap_or(sd.c),
            eta: self.steering.eta.unwrap_or(sd.eta),
        };
        let td = TerminationParams::default();
        let termination = TerminationParams {
            stuck_window_s: self.termination.stuck_window_s.unwrap_or(td.stuck_window_s),
            stuck_epsilon_m: self.termination.stuck_epsilon_m.unwrap_or(td.stuck_epsilon_m),
            wrong_dir_factor: self.termination.wrong_dir_factor.unwrap_or(td.wrong_dir_factor),
        };
        let s = self.sensor;
        let rig_d = StereoRig::default();
        let noise_d = SensorNoiseSpec::default();
        let sensor = SensorConfig {
            rig: StereoRig {
                focal_px: s.focal_px.unwrap_or(rig_d.focal_px),
                baseline_m: s.baseline_m.unwrap_or(rig_d.baseline_m),
                cx: s.cx.unwrap_or(rig_d.cx),
                cy: s.cy.unwrap_or(rig_d.cy),
                width: s.width.unwrap_or(rig_d.width),
                height: s.height.unwrap_or(rig_d.height),
            },
            noise: SensorNoiseSpec {
                disparity_std: s.disparity_std.unwrap_or(noise_d.disparity_std),
                misclassify_prob: s.misclassify_prob.unwrap_or(noise_d.misclassify_prob),
                confusion: s.confusion,
                fov_deg: s.fov_deg.unwrap_or(noise_d.fov_deg),
                max_range_m: s.max_range_m.unwrap_or(noise_d.max_range_m),
            },
            memory_ttl_s: s.memory_ttl_s,
        };
        let default_d0 = self.policy.default_d0.unwrap_or(DEFAULT_D0);

        let obstacles = self
            .obstacles
            .into_iter()
            .map(|o| ObstacleInstance {
                id: o.id,
                class_label: o.class,
                center: Vec2::new(o.x, o.y),
                radius: o.radius,
                motion: match o.motion {
                    MotionDoc::Static => Motion::Static,
                    MotionDoc::WaypointLoop { speed, waypoints } => Motion::WaypointLoop {
                        speed,
                        waypoints: waypoints.into_iter().map(|[x, y]| Vec2::new(x, y)).collect(),
                    },
                },
            })
            .collect();

        Ok(ScenarioSpec {
            name,
            obstacles,
            start: StartPose {
                position: Vec2::new(start.x, start.y),
                heading: start.heading,
            },
            goal: Vec2::new(goal.x, goal.y),
            goal_radius: goal.radius.unwrap_or(DEFAULT_GOAL_RADIUS),
            robot,
            disturbance: DisturbanceSpec {
                constant_drift: Vec2::new(self.disturbance.drift_x, self.disturbance.drift_y),
                gust_std: self.disturbance.gust_std,
            },
            policy: ClearancePolicy {
                entries: self.policy.classes,
                default_d0,
            },
            uniform_d0: self.uniform_d0.unwrap_or(DEFAULT_D0),
            time_limit: self.time_limit_s.unwrap_or(DEFAULT_TIME_LIMIT_S),
            seed: self.seed.unwrap_or(DEFAULT_SEED),
            steering,
            termination,
            sensor,
        })
    }

    fn from_spec(spec: &ScenarioSpec) -> Self {
        let rig = &spec.sensor.rig;
        let noise = &spec.sensor.noise;
        ScenarioDocument {
            format_version: Some(FORMAT_VERSION),
            name: Some(spec.name.clone()),
            time_limit_s: Some(spec.time_limit),
            seed: Some(spec.seed),
            uniform_d0: Some(spec.uniform_d0),
            robot: RobotDoc {
                cruise_speed: Some(spec.robot.cruise_speed),
                max_turn_rate: Some(spec.robot.max_turn_rate),
                slowdown_radius: Some(spec.robot.slowdown_radius),
                collision_radius: Some(spec.robot.collision_radius),
                dt: Some(spec.robot.dt),
            },
            start: Some(StartDoc {
                x: spec.start.position.x,
                y: spec.start.position.y,
                heading: spec.start.heading,
            }),
            goal: Some(GoalDoc {
                x: spec.goal.x,
                y: spec.goal.y,
                radius: Some(spec.goal_radius),
            }),
            disturbance: DisturbanceDoc {
                drift_x: spec.disturbance.constant_drift.x,
                drift_y: spec.disturbance.constant_drift.y,
                gust_std: spec.disturbance.gust_std,
            },
            policy: PolicyDoc {
                default_d0: Some(spec.policy.default_d0),
                classes: spec.policy.entries.clone(),
            },
            steering: SteeringDoc {
                b: Some(spec.steering.b),
                c: Some(spec.steering.c),
                eta: Some(spec.steering.eta),
            },
            termination: TerminationDoc {
                stuck_window_s: Some(spec.termination.stuck_window_s),
                stuck_epsilon_m: Some(spec.termination.stuck_epsilon_m),
                wrong_dir_factor: Some(spec.termination.wrong_dir_factor),
            },
            sensor: SensorDoc {
                focal_px: Some(rig.focal_px),
                baseline_m: Some(rig.baseline_m),
                cx: Some(rig.cx),
                cy: Some(rig.cy),
                width: Some(rig.width),
                height: Some(rig.height),
                fov_deg: Some(noise.fov_deg),
                max_range_m: Some(noise.max_range_m),
                disparity_std: Some(noise.disparity_std),
                misclassify_prob: Some(noise.misclassify_prob),
                confusion: noise.confusion.clone(),
                memory_ttl_s: spec.sensor.memory_ttl_s,
            },
            obstacles: spec
                .obstacles
                .iter()
                .map(|o| ObstacleDoc {
                    id: o.id,
                    class: o.class_label.clone(),
                    x: o.center.x,
                    y: o.center.y,
                    radius: o.radius,
                    motion: match &o.motion {
                        Motion::Static => MotionDoc::Static,
                        Motion::WaypointLoop { waypoints, speed } => MotionDoc::WaypointLoop {
                            speed: *speed,
                            waypoints: waypoints.iter().map(|w| [w.x, w.y]).collect(),
                        },
                    },
                })
                .collect(),
        }
    }
}
