//! SVG rendering of a scenario world with trajectories overlaid.

use std::fmt::Write as _;

use crate::geometry::Vec2;
use crate::sim::Mode;
use crate::trajectory::TrajectoryFile;
use crate::world::ScenarioSpec;

const PX_PER_M: f64 = 40.0;
const MARGIN_M: f64 = 1.0;

#[derive(Debug, thiserror::Error)]
pub enum PlotError {
    #[error("trajectory for scenario {found:?} does not match scenario {expected:?}")]
    ScenarioMismatch { expected: String, found: String },
    #[error("trajectory (seed {0}) has no samples")]
    EmptyTrajectory(u64),
}

fn mode_color(mode: Mode) -> &'static str {
    match mode {
        Mode::Soar => "#1f77b4",
        Mode::NonSoar => "#d62728",
    }
}

fn escape(s: &str) -> String {
    s.replace('&', "&amp;").replace('<', "&lt;").replace('>', "&gt;")
}

struct Frame {
    min: Vec2,
    max: Vec2,
}

impl Frame {
    fn include(&mut self, p: Vec2, pad: f64) {
        self.min.x = self.min.x.min(p.x - pad);
        self.min.y = self.min.y.min(p.y - pad);
        self.max.x = self.max.x.max(p.x + pad);
        self.max.y = self.max.y.max(p.y + pad);
    }

    fn px(&self, p: Vec2) -> (f64, f64) {
        ((p.x - self.min.x) * PX_PER_M, (self.max.y - p.y) * PX_PER_M)
    }

    fn size(&self) -> (f64, f64) {
        (
            (self.max.x - self.min.x) * PX_PER_M,
            (self.max.y - self.min.y) * PX_PER_M,
        )
    }
}

/// Obstacles as labeled discs with dashed clearance rings, start square, goal
/// cross, one polyline per trajectory colored by mode.
pub fn render_svg(spec: &ScenarioSpec, trajectories: &[TrajectoryFile]) -> Result<String, PlotError> {
    for t in trajectories {
        if t.scenario != spec.name {
            return Err(PlotError::ScenarioMismatch {
                expected: spec.name.clone(),
                found: t.scenario.clone(),
            });
        }
        if t.rows.is_empty() {
            return Err(PlotError::EmptyTrajectory(t.seed));
        }
    }

    let mut frame = Frame {
        min: spec.start.position,
        max: spec.start.position,
    };
    frame.include(spec.start.position, MARGIN_M);
    frame.include(spec.goal, spec.goal_radius + MARGIN_M);
    for o in &spec.obstacles {
        frame.include(o.center, o.radius + spec.policy.d0(&o.class_label) + MARGIN_M);
    }
    for t in trajectories {
        for r in &t.rows {
            frame.include(r.position, MARGIN_M);
        }
    }
    let (w, h) = frame.size();

    let mut s = String::new();
    let _ = writeln!(
        s,
        r#"<svg xmlns="http://www.w3.org/2000/svg" width="{w:.0}" height="{h:.0}" viewBox="0 0 {w:.1} {h:.1}">"#
    );
    let _ = writeln!(s, r#"<title>{}</title>"#, escape(&spec.name));
    let _ = writeln!(s, r##"<rect width="100%" height="100%" fill="#ffffff"/>"##);

    for o in &spec.obstacles {
        let (x, y) = frame.px(o.center);
        let d0 = spec.policy.d0(&o.class_label);
        let fill = if d0 > 0.0 { "#7f7f7f" } else { "#bcbd22" };
        if d0 > 0.0 {
            let _ = writeln!(
                s,
                r##"<circle cx="{x:.1}" cy="{y:.1}" r="{:.1}" fill="none" stroke="#7f7f7f" stroke-dasharray="4 3"/>"##,
                (o.radius + d0) * PX_PER_M
            );
        }
        let _ = writeln!(
            s,
            r#"<circle cx="{x:.1}" cy="{y:.1}" r="{:.1}" fill="{fill}" fill-opacity="0.6"/>"#,
            o.radius * PX_PER_M
        );
        let _ = writeln!(
            s,
            r#"<text x="{x:.1}" y="{y:.1}" font-size="9" text-anchor="middle">{}</text>"#,
            escape(&o.class_label)
        );
    }

    let (sx, sy) = frame.px(spec.start.position);
    let _ = writeln!(
        s,
        r##"<rect x="{:.1}" y="{:.1}" width="10" height="10" fill="#2ca02c"/>"##,
        sx - 5.0,
        sy - 5.0
    );
    let (gx, gy) = frame.px(spec.goal);
    let _ = writeln!(
        s,
        r##"<path d="M {:.1} {:.1} L {:.1} {:.1} M {:.1} {:.1} L {:.1} {:.1}" stroke="#000000" stroke-width="2"/>"##,
        gx - 6.0,
        gy - 6.0,
        gx + 6.0,
        gy + 6.0,
        gx - 6.0,
        gy + 6.0,
        gx + 6.0,
        gy - 6.0
    );

    for t in trajectories {
        let points: Vec<String> = t
            .rows
            .iter()
            .map(|r| {
                let (x, y) = frame.px(r.position);
                format!("{x:.1},{y:.1}")
            })
            .collect();
        let _ = writeln!(
            s,
            r#"<polyline class="trajectory" data-mode="{}" data-seed="{}" points="{}" fill="none" stroke="{}" stroke-width="1.5"/>"#,
            t.mode,
            t.seed,
            points.join(" "),
            mode_color(t.mode)
        );
    }

    if trajectories.len() > 1 {
        let mut modes: Vec<Mode> = trajectories.iter().map(|t| t.mode).collect();
        modes.sort();
        modes.dedup();
        let _ = writeln!(s, r#"<g class="legend">"#);
        for (i, m) in modes.iter().enumerate() {
            let y = 14.0 + 14.0 * i as f64;
            let _ = writeln!(
                s,
                r#"<line x1="8" y1="{y:.1}" x2="28" y2="{y:.1}" stroke="{}" stroke-width="2"/><text x="32" y="{:.1}" font-size="11">{}</text>"#,
                mode_color(*m),
                y + 4.0,
                m
            );
        }
        let _ = writeln!(s, "</g>");
    }
    s.push_str("</svg>\n");
    Ok(s)
}
