//! Per-tick trajectory export as comma-separated text.
//!
//! Files start with `# key=value` metadata lines (scenario, mode, seed,
//! outcome) followed by a CSV table with the columns in [`COLUMNS`].

use std::io::{self, Write};
use std::path::Path;

use crate::geometry::Vec2;
use crate::sim::{Mode, Outcome, TrialResult};

pub const COLUMNS: [&str; 9] = [
    "time_s",
    "x",
    "y",
    "heading",
    "speed",
    "active_obstacle_id",
    "c1",
    "c2",
    "min_clearance",
];

#[derive(Debug, thiserror::Error)]
pub enum TrajectoryError {
    #[error("{path}: {source}")]
    Io {
        path: String,
        #[source]
        source: io::Error,
    },
    #[error("missing metadata line `# {0}=...`")]
    MissingMeta(&'static str),
    #[error("bad metadata `{key}`: {message}")]
    BadMeta { key: &'static str, message: String },
    #[error("trajectory table: {0}")]
    Csv(#[from] csv::Error),
    #[error("trajectory has no samples")]
    Empty,
}

#[derive(Debug, Clone, PartialEq)]
pub struct TrajectoryRow {
    pub time: f64,
    pub position: Vec2,
    pub heading: f64,
    pub speed: f64,
    pub active_obstacle_id: Option<u32>,
    pub c1: f64,
    pub c2: f64,
    pub min_clearance: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct TrajectoryFile {
    pub scenario: String,
    pub mode: Mode,
    pub seed: u64,
    pub outcome: Outcome,
    pub rows: Vec<TrajectoryRow>,
}

impl TrajectoryFile {
    pub fn from_result(result: &TrialResult) -> Self {
        let rows = result
            .trajectory
            .iter()
            .enumerate()
            .map(|(k, p)| {
                let log = k.checked_sub(1).and_then(|i| result.tick_log.get(i));
                TrajectoryRow {
                    time: p.time,
                    position: p.position,
                    heading: p.heading,
                    speed: p.speed,
                    active_obstacle_id: log.and_then(|l| l.active_obstacle_id),
                    c1: log.map_or(0.0, |l| l.c1),
                    c2: log.map_or(0.0, |l| l.c2),
                    min_clearance: log.map_or(result.start_clearance, |l| l.min_clearance),
                }
            })
            .collect();
        Self {
            scenario: result.scenario.clone(),
            mode: result.mode,
            seed: result.seed,
            outcome: result.outcome,
            rows,
        }
    }

    pub fn write<W: Write>(&self, mut w: W) -> io::Result<()> {
        writeln!(w, "# scenario={}", self.scenario)?;
        writeln!(w, "# mode={}", self.mode)?;
        writeln!(w, "# seed={}", self.seed)?;
        writeln!(w, "# outcome={}", self.outcome)?;
        writeln!(w, "{}", COLUMNS.join(","))?;
        for r in &self.rows {
            let id = r.active_obstacle_id.map(|i| i.to_string()).unwrap_or_default();
            writeln!(
                w,
                "{:.3},{:.6},{:.6},{:.6},{:.6},{},{:.6},{:.6},{:.6}",
                r.time, r.position.x, r.position.y, r.heading, r.speed, id, r.c1, r.c2, r.min_clearance
            )?;
        }
        Ok(())
    }

    pub fn to_text(&self) -> String {
        let mut buf = Vec::new();
        self.write(&mut buf).expect("writing to a Vec cannot fail");
        String::from_utf8(buf).expect("ascii output")
    }

    pub fn parse(text: &str) -> Result<Self, TrajectoryError> {
        let mut scenario = None;
        let mut mode = None;
        let mut seed = None;
        let mut outcome = None;
        for line in text.lines().take_while(|l| l.starts_with('#')) {
            let Some((key, value)) = line.trim_start_matches('#').trim().split_once('=') else {
                continue;
            };
            match key.trim() {
                "scenario" => scenario = Some(value.to_owned()),
                "mode" => {
                    mode = Some(value.parse::<Mode>().map_err(|message| TrajectoryError::BadMeta {
                        key: "mode",
                        message,
                    })?)
                }
                "seed" => {
                    seed = Some(value.parse::<u64>().map_err(|e| TrajectoryError::BadMeta {
                        key: "seed",
                        message: e.to_string(),
                    })?)
                }
                "outcome" => {
                    outcome = Some(value.parse::<Outcome>().map_err(|message| TrajectoryError::BadMeta {
                        key: "outcome",
                        message,
                    })?)
                }
                _ => {}
            }
        }

        let mut reader = csv::ReaderBuilder::new()
            .comment(Some(b'#'))
            .from_reader(text.as_bytes());
        let mut rows = Vec::new();
        for record in reader.records() {
            let rec = record?;
            let num = |i: usize| -> Result<f64, TrajectoryError> {
                let field = rec.get(i).unwrap_or("");
                // "inf" is written for worlds without avoidable obstacles
                field.parse::<f64>().map_err(|e| TrajectoryError::BadMeta {
                    key: "row",
                    message: format!("column {} value {field:?}: {e}", COLUMNS[i]),
                })
            };
            let id_field = rec.get(5).unwrap_or("");
            let active_obstacle_id = if id_field.is_empty() {
                None
            } else {
                Some(id_field.parse::<u32>().map_err(|e| TrajectoryError::BadMeta {
                    key: "row",
                    message: format!("column active_obstacle_id value {id_field:?}: {e}"),
                })?)
            };
            rows.push(TrajectoryRow {
                time: num(0)?,
                position: Vec2::new(num(1)?, num(2)?),
                heading: num(3)?,
                speed: num(4)?,
                active_obstacle_id,
                c1: num(6)?,
                c2: num(7)?,
                min_clearance: num(8)?,
            });
        }
        if rows.is_empty() {
            return Err(TrajectoryError::Empty);
        }
        Ok(Self {
            scenario: scenario.ok_or(TrajectoryError::MissingMeta("scenario"))?,
            mode: mode.ok_or(TrajectoryError::MissingMeta("mode"))?,
            seed: seed.ok_or(TrajectoryError::MissingMeta("seed"))?,
            outcome: outcome.ok_or(TrajectoryError::MissingMeta("outcome"))?,
            rows,
        })
    }

    pub fn read(path: &Path) -> Result<Self, TrajectoryError> {
        let text = std::fs::read_to_string(path).map_err(|source| TrajectoryError::Io {
            path: path.display().to_string(),
            source,
        })?;
        Self::parse(&text)
    }
}
