//! Labeled stereo perception for an ideal rectified rig.
//!
//! Disparities are synthesized analytically from ground-truth geometry plus
//! Gaussian pixel noise; depth is recovered by reprojecting through the rig's
//! 4x4 disparity-to-depth matrix. Instance labels come from an oracle
//! segmenter that can flip a class through a confusion map.

use std::collections::BTreeMap;

use nalgebra::{Matrix4, Vector4};
use rand::Rng;
use rand_distr::{Distribution, Normal};
use serde::Serialize;

use crate::geometry::{wrap_angle, Vec2};
use crate::world::ObstacleInstance;

/// Upper bound on disparity samples drawn per instance mask.
pub const MAX_SAMPLES_PER_MASK: usize = 9;

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum PerceptionError {
    #[error("disparity must be positive (got {0})")]
    NonPositiveDisparity(f64),
}

/// Rectified stereo pair with zero distortion and identity relative rotation.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct StereoRig {
    pub focal_px: f64,
    pub baseline_m: f64,
    pub cx: f64,
    pub cy: f64,
    pub width: u32,
    pub height: u32,
}

impl Default for StereoRig {
    fn default() -> Self {
        Self {
            focal_px: 320.0,
            baseline_m: 0.05,
            cx: 320.0,
            cy: 240.0,
            width: 640,
            height: 480,
        }
    }
}

impl StereoRig {
    /// Intrinsic matrix shared by both cameras.
    pub fn camera_matrix(&self) -> nalgebra::Matrix3<f64> {
        nalgebra::Matrix3::new(
            self.focal_px, 0.0, self.cx, //
            0.0, self.focal_px, self.cy, //
            0.0, 0.0, 1.0,
        )
    }

    /// Projection matrix of the right camera after rectification; the left
    /// one is the same with a zero last column.
    pub fn right_projection(&self) -> nalgebra::Matrix3x4<f64> {
        nalgebra::Matrix3x4::new(
            self.focal_px, 0.0, self.cx, -self.focal_px * self.baseline_m, //
            0.0, self.focal_px, self.cy, 0.0, //
            0.0, 0.0, 1.0, 0.0,
        )
    }

    /// Disparity-to-depth matrix: `Q * (u, v, d, 1)^T = (X, Y, Z, W)`.
    pub fn q(&self) -> Matrix4<f64> {
        // Tx = -baseline; principal points coincide, so the last entry is 0.
        let tx = -self.baseline_m;
        Matrix4::new(
            1.0, 0.0, 0.0, -self.cx, //
            0.0, 1.0, 0.0, -self.cy, //
            0.0, 0.0, 0.0, self.focal_px, //
            0.0, 0.0, -1.0 / tx, 0.0,
        )
    }

    /// Camera-frame point (x right, y down, z forward) for a pixel and disparity.
    pub fn reproject(&self, u: f64, v: f64, disparity: f64) -> Result<[f64; 3], PerceptionError> {
        if disparity.is_nan() || disparity <= 0.0 {
            return Err(PerceptionError::NonPositiveDisparity(disparity));
        }
        let h = self.q() * Vector4::new(u, v, disparity, 1.0);
        Ok([h[0] / h[3], h[1] / h[3], h[2] / h[3]])
    }

    fn validate(&self) -> Result<(), (&'static str, String)> {
        let pos = |v: f64| v.is_finite() && v > 0.0;
        if !pos(self.focal_px) {
            return Err(("focal_px", format!("focal_px > 0 (got {})", self.focal_px)));
        }
        if !pos(self.baseline_m) {
            return Err(("baseline_m", format!("baseline_m > 0 (got {})", self.baseline_m)));
        }
        if !self.cx.is_finite() || !self.cy.is_finite() {
            return Err(("cx", "principal point must be finite".into()));
        }
        if self.width == 0 || self.height == 0 {
            return Err(("width", "image size must be positive".into()));
        }
        Ok(())
    }
}

pub fn depth_from_disparity(disparity: f64, rig: &StereoRig) -> Result<f64, PerceptionError> {
    Ok(rig.reproject(rig.cx, rig.cy, disparity)?[2])
}

#[derive(Debug, Clone, PartialEq)]
pub struct SensorNoiseSpec {
    pub disparity_std: f64,
    pub misclassify_prob: f64,
    /// True class -> class reported when a misclassification fires.
    pub confusion: BTreeMap<String, String>,
    pub fov_deg: f64,
    pub max_range_m: f64,
}

impl Default for SensorNoiseSpec {
    fn default() -> Self {
        Self {
            disparity_std: 0.0,
            misclassify_prob: 0.0,
            confusion: BTreeMap::new(),
            fov_deg: 120.0,
            max_range_m: 10.0,
        }
    }
}

impl SensorNoiseSpec {
    pub fn fov_rad(&self) -> f64 {
        self.fov_deg.to_radians()
    }

    fn validate(&self) -> Result<(), (&'static str, String)> {
        if !(self.disparity_std.is_finite() && self.disparity_std >= 0.0) {
            return Err(("disparity_std", format!("disparity_std ≥ 0 (got {})", self.disparity_std)));
        }
        if !(0.0..=1.0).contains(&self.misclassify_prob) {
            return Err((
                "misclassify_prob",
                format!("misclassify_prob in [0, 1] (got {})", self.misclassify_prob),
            ));
        }
        if !(self.fov_deg > 0.0 && self.fov_deg <= 360.0) {
            return Err(("fov_deg", format!("fov in (0, 360] degrees (got {})", self.fov_deg)));
        }
        if !(self.max_range_m.is_finite() && self.max_range_m > 0.0) {
            return Err(("max_range_m", format!("max_range_m > 0 (got {})", self.max_range_m)));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq, Default)]
pub struct SensorConfig {
    pub rig: StereoRig,
    pub noise: SensorNoiseSpec,
    /// Keep unseen estimates for this long; `None` means memoryless.
    pub memory_ttl_s: Option<f64>,
}

impl SensorConfig {
    pub(crate) fn validate(&self) -> Result<(), (&'static str, String)> {
        self.rig.validate()?;
        self.noise.validate()?;
        if let Some(ttl) = self.memory_ttl_s {
            if !(ttl.is_finite() && ttl >= 0.0) {
                return Err(("memory_ttl_s", format!("memory_ttl_s ≥ 0 (got {ttl})")));
            }
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct CameraPose {
    pub position: Vec2,
    pub heading: f64,
}

impl CameraPose {
    fn forward(&self) -> Vec2 {
        Vec2::from_angle(self.heading)
    }

    fn right(&self) -> Vec2 {
        let f = self.forward();
        Vec2::new(f.y, -f.x)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Detection {
    pub instance_id: u32,
    pub reported_class: String,
    pub true_class: String,
    pub pixel_count: u32,
    /// Horizontal pixel coordinate of the mask centroid.
    pub centroid_u: f64,
    /// Horizontal extent of the mask in pixels.
    pub mask_width_px: f64,
    pub disparity_samples: Vec<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct PerceptionFrame {
    pub detections: Vec<Detection>,
    pub camera_pose: CameraPose,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct LabeledObstacleEstimate {
    pub class_label: String,
    pub position: Vec2,
    /// Radius recovered from the mask extent.
    pub radius: f64,
    pub surface_distance: f64,
    pub source_instance: u32,
}

/// An obstacle as it stands at the sensing instant.
#[derive(Debug, Clone, Copy)]
pub struct ObstacleView<'a> {
    pub id: u32,
    pub class_label: &'a str,
    pub center: Vec2,
    pub radius: f64,
}

impl<'a> ObstacleView<'a> {
    pub fn at(obstacle: &'a ObstacleInstance, t: f64) -> Self {
        Self {
            id: obstacle.id,
            class_label: &obstacle.class_label,
            center: obstacle.position_at(t),
            radius: obstacle.radius,
        }
    }
}

/// Angular half-width of a disc seen from `range` away.
fn half_width(radius: f64, range: f64) -> f64 {
    (radius / range).min(1.0).asin()
}

/// A target is hidden only when a nearer disc covers its whole angular extent;
/// a small occluder in front of a wide target leaves the edges visible.
fn occluded(target: &ObstacleView, others: &[ObstacleView], cam: Vec2) -> bool {
    let target_rel = target.center - cam;
    let target_range = target_rel.norm();
    let target_half = half_width(target.radius, target_range);
    others.iter().any(|o| {
        if o.id == target.id {
            return false;
        }
        let rel = o.center - cam;
        let range = rel.norm();
        // a disc enclosing the camera does not block the view
        if range >= target_range || range <= o.radius {
            return false;
        }
        let offset = wrap_angle(target_rel.angle() - rel.angle()).abs();
        offset + target_half <= half_width(o.radius, range)
    })
}

/// Renders one perception frame from ground truth.
pub fn sense<R: Rng + ?Sized>(
    obstacles: &[ObstacleView],
    pose: CameraPose,
    rig: &StereoRig,
    noise: &SensorNoiseSpec,
    rng: &mut R,
) -> PerceptionFrame {
    let half_fov = noise.fov_rad() / 2.0;
    let fwd = pose.forward();
    let right = pose.right();
    let gaussian = (noise.disparity_std > 0.0)
        .then(|| Normal::new(0.0, noise.disparity_std).expect("finite std"));
    let mut detections = Vec::new();

    for o in obstacles {
        let rel = o.center - pose.position;
        let range = rel.norm();
        if range > noise.max_range_m {
            continue;
        }
        let z = rel.dot(fwd);
        let x = rel.dot(right);
        if z <= 0.0 || x.atan2(z).abs() > half_fov {
            continue;
        }
        if occluded(o, obstacles, pose.position) {
            continue;
        }

        let true_disparity = rig.focal_px * rig.baseline_m / z;
        let centroid_u = rig.cx + rig.focal_px * x / z;
        let mask_width_px = 2.0 * rig.focal_px * o.radius / z;
        let area = std::f64::consts::PI * (mask_width_px / 2.0).powi(2);
        let pixel_count = area.round().clamp(1.0, u32::MAX as f64) as u32;

        // no draw at all when misclassification is off, so the stream seen by
        // other obstacles does not depend on how many are in view
        let flip = noise.misclassify_prob > 0.0 && rng.random_bool(noise.misclassify_prob);
        let reported_class = if flip {
            noise
                .confusion
                .get(o.class_label)
                .cloned()
                .unwrap_or_else(|| o.class_label.to_owned())
        } else {
            o.class_label.to_owned()
        };

        let n = (pixel_count as usize).min(MAX_SAMPLES_PER_MASK);
        let disparity_samples = (0..n)
            .map(|_| match &gaussian {
                Some(g) => true_disparity + g.sample(rng),
                None => true_disparity,
            })
            .filter(|d| *d > 0.0)
            .collect();

        detections.push(Detection {
            instance_id: o.id,
            reported_class,
            true_class: o.class_label.to_owned(),
            pixel_count,
            centroid_u,
            mask_width_px,
            disparity_samples,
        });
    }
    PerceptionFrame {
        detections,
        camera_pose: pose,
    }
}

fn median(samples: &[f64]) -> Option<f64> {
    if samples.is_empty() {
        return None;
    }
    let mut s = samples.to_vec();
    s.sort_by(f64::total_cmp);
    let mid = s.len() / 2;
    Some(if s.len() % 2 == 1 {
        s[mid]
    } else {
        0.5 * (s[mid - 1] + s[mid])
    })
}

#[derive(Debug, Clone, Default, PartialEq)]
pub struct FusionOutput {
    pub estimates: Vec<LabeledObstacleEstimate>,
    /// Detections without a usable disparity sample.
    pub dropped: usize,
}

/// Turns labeled detections into world-frame obstacle estimates.
pub fn fuse(frame: &PerceptionFrame, rig: &StereoRig) -> FusionOutput {
    let pose = frame.camera_pose;
    let mut out = FusionOutput::default();
    for det in &frame.detections {
        let point = median(&det.disparity_samples)
            .filter(|d| *d > 0.0)
            .and_then(|d| rig.reproject(det.centroid_u, rig.cy, d).ok());
        let Some([x, _, z]) = point else {
            out.dropped += 1;
            continue;
        };
        let position = pose.position + pose.forward() * z + pose.right() * x;
        let radius = det.mask_width_px * z / (2.0 * rig.focal_px);
        let range = (x * x + z * z).sqrt();
        out.estimates.push(LabeledObstacleEstimate {
            class_label: det.reported_class.clone(),
            position,
            radius,
            surface_distance: (range - radius).max(0.0),
            source_instance: det.instance_id,
        });
    }
    out
}

/// Last-seen store that keeps estimates alive for a fixed time after they
/// drop out of view.
#[derive(Debug, Clone, Default)]
pub struct EstimateMemory {
    ttl: f64,
    entries: BTreeMap<u32, (f64, LabeledObstacleEstimate)>,
}

impl EstimateMemory {
    pub fn new(ttl: f64) -> Self {
        Self {
            ttl,
            entries: BTreeMap::new(),
        }
    }

    /// Records `fresh` at time `now` and returns fresh plus remembered
    /// estimates, with surface distances recomputed from `robot_pos`.
    pub fn update(
        &mut self,
        now: f64,
        robot_pos: Vec2,
        fresh: Vec<LabeledObstacleEstimate>,
    ) -> Vec<LabeledObstacleEstimate> {
        for e in fresh {
            self.entries.insert(e.source_instance, (now, e));
        }
        let ttl = self.ttl;
        self.entries.retain(|_, (seen, _)| now - *seen <= ttl);
        self.entries
            .values()
            .map(|(_, e)| {
                let mut e = e.clone();
                e.surface_distance = (robot_pos.distance(e.position) - e.radius).max(0.0);
                e
            })
            .collect()
    }
}
