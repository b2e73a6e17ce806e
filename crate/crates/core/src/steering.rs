//! Semantic circumnavigation steering law.
//!
//! The commanded direction is the unit goal vector `a_hat` while no obstacle
//! is inside its clearance ring. Inside the ring the obstacle direction
//! `r_hat` is blended in as `a_hat + c1 * c2 * r_hat`, where
//! `c1 = -(a_hat . r_hat)` cancels the goal component along `r_hat` (so motion
//! on the ring is tangent to it) and `c2` grows linearly from 1 on the ring to
//! `b` at the obstacle surface to push an overshooting robot back out.
//!
//! The classic potentials are exposed for diagnostics only; they do not drive
//! motion.

use serde::Serialize;

use crate::geometry::Vec2;

/// Below this magnitude the blended direction is treated as zero.
pub const DEGENERATE_EPS: f64 = 1e-9;

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum SteeringError {
    #[error("repulsive potential undefined for obstacle distance {0} ≤ 0")]
    NonPositiveDistance(f64),
    #[error("c2 requires 0 ≤ dist ≤ d0 and d0 > 0 (dist {dist}, d0 {d0})")]
    GainOutOfRange { dist: f64, d0: f64 },
    #[error("robot position coincides with the goal; goal direction undefined")]
    AtGoal,
    #[error("robot position coincides with obstacle {0}; obstacle direction undefined")]
    AtObstacle(u32),
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct SteeringParams {
    /// Gain at the obstacle surface; must exceed 1.
    pub b: f64,
    /// Attractive potential scale.
    pub c: f64,
    /// Repulsive potential scale.
    pub eta: f64,
}

impl Default for SteeringParams {
    fn default() -> Self {
        Self {
            b: 3.0,
            c: 1.0,
            eta: 1.0,
        }
    }
}

impl SteeringParams {
    pub fn validate(&self) -> Result<(), (&'static str, String)> {
        if !(self.b.is_finite() && self.b > 1.0) {
            return Err(("b", format!("b > 1 (got {})", self.b)));
        }
        if !(self.c.is_finite() && self.c > 0.0) {
            return Err(("c", format!("c > 0 (got {})", self.c)));
        }
        if !(self.eta.is_finite() && self.eta > 0.0) {
            return Err(("eta", format!("eta > 0 (got {})", self.eta)));
        }
        Ok(())
    }
}

/// The obstacle the controller reacts to this tick.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ActiveObstacle {
    pub id: u32,
    pub position: Vec2,
    pub surface_distance: f64,
    pub d0: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct SteeringDecision {
    pub a_hat: Vec2,
    pub r_hat: Option<Vec2>,
    pub c1: f64,
    pub c2: f64,
    pub v_hat: Vec2,
    pub active_obstacle_id: Option<u32>,
    pub tie_break_applied: bool,
}

/// `c * |x - goal|^2`.
pub fn attractive_potential(x: Vec2, goal: Vec2, c: f64) -> f64 {
    let d = x - goal;
    c * d.dot(d)
}

/// `eta * (1/p - 1/d0)^2` inside the clearance distance, zero outside.
pub fn repulsive_potential(p: f64, d0: f64, eta: f64) -> Result<f64, SteeringError> {
    if p.is_nan() || p <= 0.0 {
        return Err(SteeringError::NonPositiveDistance(p));
    }
    if p > d0 {
        return Ok(0.0);
    }
    let k = 1.0 / p - 1.0 / d0;
    Ok(eta * k * k)
}

pub fn c1(a_hat: Vec2, r_hat: Vec2) -> f64 {
    -a_hat.dot(r_hat)
}

/// Linear intrusion gain: 1 at `dist = d0`, `b` at `dist = 0`.
pub fn c2(dist: f64, d0: f64, b: f64) -> Result<f64, SteeringError> {
    if !(d0 > 0.0 && (0.0..=d0).contains(&dist)) {
        return Err(SteeringError::GainOutOfRange { dist, d0 });
    }
    // Same line as (1 - b)/d0 * dist + b, arranged so both end points are exact.
    Ok(1.0 + (b - 1.0) * (1.0 - dist / d0))
}

pub fn steering_direction(
    robot_pos: Vec2,
    goal: Vec2,
    active: Option<ActiveObstacle>,
    params: &SteeringParams,
) -> Result<SteeringDecision, SteeringError> {
    let a_hat = (goal - robot_pos).normalized().ok_or(SteeringError::AtGoal)?;
    let active = active.filter(|a| a.d0 > 0.0 && a.surface_distance <= a.d0);
    let Some(obstacle) = active else {
        return Ok(SteeringDecision {
            a_hat,
            r_hat: None,
            c1: 0.0,
            c2: 0.0,
            v_hat: a_hat,
            active_obstacle_id: None,
            tie_break_applied: false,
        });
    };

    let r_hat = (obstacle.position - robot_pos)
        .normalized()
        .ok_or(SteeringError::AtObstacle(obstacle.id))?;
    let k1 = c1(a_hat, r_hat);
    let k2 = c2(obstacle.surface_distance.max(0.0), obstacle.d0, params.b)?;
    let sum = a_hat + r_hat * (k1 * k2);
    let (v_hat, tie_break_applied) = if sum.norm() < DEGENERATE_EPS {
        (r_hat.perp_left(), true)
    } else {
        (sum.normalized().unwrap_or(r_hat.perp_left()), false)
    };
    Ok(SteeringDecision {
        a_hat,
        r_hat: Some(r_hat),
        c1: k1,
        c2: k2,
        v_hat,
        active_obstacle_id: Some(obstacle.id),
        tie_break_applied,
    })
}
