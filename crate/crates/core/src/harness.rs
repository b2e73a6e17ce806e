//! Batch execution and SOAR vs. non-SOAR comparison reports.

use std::fmt::Write as _;
use std::fs;
use std::path::{Path, PathBuf};
use std::str::FromStr;

use rayon::prelude::*;
use serde::Serialize;

use crate::plot::{self, PlotError};
use crate::sim::{run_trial, Mode, Outcome, TrialError, TrialResult};
use crate::trajectory::{TrajectoryError, TrajectoryFile};
use crate::world::{load_scenario_file, ScenarioError, ScenarioSpec};

/// Environment variable that overrides `--jobs`.
pub const JOBS_ENV: &str = "SOAR_SIM_JOBS";
pub const DEFAULT_TRIALS: usize = 10;

#[derive(Debug, thiserror::Error)]
pub enum HarnessError {
    #[error(transparent)]
    Scenario(#[from] ScenarioError),
    #[error(transparent)]
    Trial(#[from] TrialError),
    #[error(transparent)]
    Trajectory(#[from] TrajectoryError),
    #[error(transparent)]
    Plot(#[from] PlotError),
    #[error("{}: {source}", path.display())]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
    #[error("{0}")]
    Usage(String),
}

impl HarnessError {
    /// 1 for scenario validation problems, 2 for everything else.
    pub fn exit_code(&self) -> i32 {
        match self {
            HarnessError::Scenario(ScenarioError::Io { .. }) => 2,
            HarnessError::Scenario(_) | HarnessError::Trial(TrialError::Scenario(_)) => 1,
            _ => 2,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum OutputFormat {
    #[default]
    Table,
    Delimited,
    Structured,
}

impl FromStr for OutputFormat {
    type Err = String;
    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "table" => Ok(Self::Table),
            "delimited" => Ok(Self::Delimited),
            "structured" => Ok(Self::Structured),
            other => Err(format!("unknown format {other:?} (expected table, delimited or structured)")),
        }
    }
}

/// Rounds to millisecond resolution; report arithmetic is done on these.
fn ms(t: f64) -> f64 {
    (t * 1000.0).round() / 1000.0
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct TrialRow {
    pub seed: u64,
    pub travel_time: f64,
    pub path_length: f64,
    pub outcome: Outcome,
}

impl From<&TrialResult> for TrialRow {
    fn from(r: &TrialResult) -> Self {
        Self {
            seed: r.seed,
            travel_time: ms(r.travel_time),
            path_length: ms(r.path_length),
            outcome: r.outcome,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ModeSummary {
    pub mode: Mode,
    pub rows: Vec<TrialRow>,
    pub success_count: usize,
    pub total: usize,
    /// Mean over goal-reached trials only.
    pub mean_travel_time: Option<f64>,
}

impl ModeSummary {
    pub fn from_results(mode: Mode, results: &[TrialResult]) -> Self {
        let rows: Vec<TrialRow> = results.iter().map(TrialRow::from).collect();
        let ok: Vec<f64> = rows
            .iter()
            .filter(|r| r.outcome.is_success())
            .map(|r| r.travel_time)
            .collect();
        let mean_travel_time = (!ok.is_empty()).then(|| ok.iter().sum::<f64>() / ok.len() as f64);
        Self {
            mode,
            success_count: ok.len(),
            total: rows.len(),
            rows,
            mean_travel_time,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ComparisonReport {
    pub scenario: String,
    pub base_seed: u64,
    pub soar: ModeSummary,
    pub non_soar: ModeSummary,
    /// `(non_soar - soar) / soar` over mean travel times, in percent.
    pub relative_time_delta_pct: Option<f64>,
}

impl ComparisonReport {
    pub fn new(scenario: &str, base_seed: u64, soar: ModeSummary, non_soar: ModeSummary) -> Self {
        let relative_time_delta_pct = match (soar.mean_travel_time, non_soar.mean_travel_time) {
            (Some(s), Some(n)) if s > 0.0 => Some((n - s) / s * 100.0),
            _ => None,
        };
        Self {
            scenario: scenario.to_owned(),
            base_seed,
            soar,
            non_soar,
            relative_time_delta_pct,
        }
    }
}

/// `SOAR_SIM_JOBS` if set, else the flag, else the machine's parallelism.
pub fn resolve_jobs(flag: Option<usize>) -> usize {
    std::env::var(JOBS_ENV)
        .ok()
        .and_then(|v| v.trim().parse::<usize>().ok())
        .or(flag)
        .unwrap_or_else(|| std::thread::available_parallelism().map_or(1, |n| n.get()))
        .max(1)
}

/// Runs seeds `base_seed .. base_seed + trials` on up to `jobs` threads.
/// Results come back ordered by seed.
pub fn run_batch(
    spec: &ScenarioSpec,
    mode: Mode,
    trials: usize,
    base_seed: u64,
    jobs: usize,
) -> Result<Vec<TrialResult>, HarnessError> {
    if trials == 0 {
        return Err(HarnessError::Usage("--trials must be at least 1".into()));
    }
    spec.validate()?;
    let seeds: Vec<u64> = (0..trials as u64).map(|k| base_seed.wrapping_add(k)).collect();
    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(jobs.max(1))
        .build()
        .map_err(|e| HarnessError::Usage(format!("thread pool: {e}")))?;
    let results: Result<Vec<_>, TrialError> =
        pool.install(|| seeds.par_iter().map(|&s| run_trial(spec, mode, s)).collect());
    Ok(results?)
}

fn io_err(path: &Path) -> impl FnOnce(std::io::Error) -> HarnessError + '_ {
    move |source| HarnessError::Io {
        path: path.to_owned(),
        source,
    }
}

fn write_file(path: &Path, contents: &str) -> Result<(), HarnessError> {
    fs::write(path, contents).map_err(io_err(path))
}

pub fn trajectory_file_name(scenario: &str, mode: Mode, seed: u64) -> String {
    format!("{scenario}_{mode}_seed{seed}.csv")
}

fn write_trajectories(out: &Path, results: &[TrialResult]) -> Result<(), HarnessError> {
    fs::create_dir_all(out).map_err(io_err(out))?;
    for r in results {
        let path = out.join(trajectory_file_name(&r.scenario, r.mode, r.seed));
        write_file(&path, &TrajectoryFile::from_result(r).to_text())?;
    }
    Ok(())
}

// ---------------------------------------------------------------------------
// Rendering

fn fmt_opt(v: Option<f64>) -> String {
    v.map_or_else(|| "-".to_owned(), |x| format!("{x:.3}"))
}

pub fn render_trial(result: &TrialResult, format: OutputFormat) -> String {
    match format {
        OutputFormat::Structured => {
            serde_json::to_string_pretty(result).expect("trial result serializes") + "\n"
        }
        OutputFormat::Delimited => {
            let mut s = String::from("scenario,mode,seed,outcome,travel_time_s,path_length_m\n");
            let _ = writeln!(
                s,
                "{},{},{},{},{:.3},{:.3}",
                result.scenario, result.mode, result.seed, result.outcome, result.travel_time, result.path_length
            );
            s
        }
        OutputFormat::Table => {
            let mut s = String::new();
            let _ = writeln!(s, "scenario      {}", result.scenario);
            let _ = writeln!(s, "mode          {}", result.mode);
            let _ = writeln!(s, "seed          {}", result.seed);
            let _ = writeln!(s, "outcome       {}", result.outcome);
            let _ = writeln!(s, "travel_time   {:.3} s", result.travel_time);
            let _ = writeln!(s, "path_length   {:.3} m", result.path_length);
            for (class, d) in &result.min_clearance_by_class {
                let _ = writeln!(s, "min_clearance {class}: {d:.3} m");
            }
            s
        }
    }
}

pub fn render_batch(scenario: &str, summary: &ModeSummary, format: OutputFormat) -> String {
    match format {
        OutputFormat::Structured => {
            #[derive(Serialize)]
            struct Doc<'a> {
                scenario: &'a str,
                #[serde(flatten)]
                summary: &'a ModeSummary,
            }
            serde_json::to_string_pretty(&Doc { scenario, summary }).expect("summary serializes") + "\n"
        }
        OutputFormat::Delimited => {
            let mut s = String::from("trial,seed,travel_time_s,path_length_m,outcome\n");
            for (i, r) in summary.rows.iter().enumerate() {
                let _ = writeln!(s, "{},{},{:.3},{:.3},{}", i + 1, r.seed, r.travel_time, r.path_length, r.outcome);
            }
            let _ = writeln!(s, "avg,,{},,", fmt_opt(summary.mean_travel_time));
            let _ = writeln!(s, "success,,{}/{},,", summary.success_count, summary.total);
            s
        }
        OutputFormat::Table => {
            let mut s = String::new();
            let _ = writeln!(s, "scenario: {}  mode: {}", scenario, summary.mode);
            let _ = writeln!(s, "{:>5} {:>8} {:>14} {:>14}  {}", "trial", "seed", "travel_time(s)", "path(m)", "outcome");
            for (i, r) in summary.rows.iter().enumerate() {
                let _ = writeln!(
                    s,
                    "{:>5} {:>8} {:>14.3} {:>14.3}  {}",
                    i + 1,
                    r.seed,
                    r.travel_time,
                    r.path_length,
                    r.outcome
                );
            }
            let _ = writeln!(s, "{:>5} {:>8} {:>14}", "Avg", "", fmt_opt(summary.mean_travel_time));
            let _ = writeln!(s, "success: {}/{}", summary.success_count, summary.total);
            s
        }
    }
}

pub fn render_comparison(report: &ComparisonReport, format: OutputFormat) -> String {
    let pairs = report.soar.rows.iter().zip(&report.non_soar.rows).enumerate();
    let delta = report
        .relative_time_delta_pct
        .map_or_else(|| "-".to_owned(), |d| format!("{d:+.3}"));
    match format {
        OutputFormat::Structured => {
            serde_json::to_string_pretty(report).expect("report serializes") + "\n"
        }
        OutputFormat::Delimited => {
            let mut s = String::from("trial,seed,soar_time_s,soar_outcome,non_soar_time_s,non_soar_outcome\n");
            for (i, (a, b)) in pairs {
                let _ = writeln!(s, "{},{},{:.3},{},{:.3},{}", i + 1, a.seed, a.travel_time, a.outcome, b.travel_time, b.outcome);
            }
            let _ = writeln!(
                s,
                "avg,,{},,{},",
                fmt_opt(report.soar.mean_travel_time),
                fmt_opt(report.non_soar.mean_travel_time)
            );
            let _ = writeln!(
                s,
                "success,,{}/{},,{}/{},",
                report.soar.success_count, report.soar.total, report.non_soar.success_count, report.non_soar.total
            );
            let _ = writeln!(s, "relative_time_delta_pct,,{delta},,,");
            s
        }
        OutputFormat::Table => {
            let mut s = String::new();
            let _ = writeln!(s, "scenario: {}  base seed: {}", report.scenario, report.base_seed);
            let _ = writeln!(
                s,
                "{:>5} {:>8} | {:>12}  {:<15} | {:>12}  {:<15}",
                "trial", "seed", "SOAR time(s)", "goal", "non-SOAR(s)", "goal"
            );
            for (i, (a, b)) in pairs {
                let _ = writeln!(
                    s,
                    "{:>5} {:>8} | {:>12.3}  {:<15} | {:>12.3}  {:<15}",
                    i + 1,
                    a.seed,
                    a.travel_time,
                    a.outcome.as_str(),
                    b.travel_time,
                    b.outcome.as_str()
                );
            }
            let _ = writeln!(
                s,
                "{:>5} {:>8} | {:>12}  {:<15} | {:>12}  {:<15}",
                "Avg",
                "",
                fmt_opt(report.soar.mean_travel_time),
                "",
                fmt_opt(report.non_soar.mean_travel_time),
                ""
            );
            let _ = writeln!(
                s,
                "success: SOAR {}/{}  non-SOAR {}/{}",
                report.soar.success_count, report.soar.total, report.non_soar.success_count, report.non_soar.total
            );
            let _ = writeln!(s, "relative time delta (non-SOAR vs SOAR): {delta} %");
            s
        }
    }
}

// ---------------------------------------------------------------------------
// Commands

pub fn cmd_validate(path: &Path) -> Result<ScenarioSpec, HarnessError> {
    Ok(load_scenario_file(path)?)
}

pub fn cmd_run(
    path: &Path,
    mode: Mode,
    seed: u64,
    out: Option<&Path>,
) -> Result<TrialResult, HarnessError> {
    let spec = load_scenario_file(path)?;
    let result = run_trial(&spec, mode, seed)?;
    if let Some(out) = out {
        write_trajectories(out, std::slice::from_ref(&result))?;
    }
    Ok(result)
}

/// Runs one mode over a seed range. With `out`, writes one trajectory file
/// per trial plus `<scenario>_<mode>_summary.txt` and `.csv`.
pub fn cmd_batch(
    path: &Path,
    mode: Mode,
    trials: usize,
    base_seed: u64,
    jobs: usize,
    out: Option<&Path>,
) -> Result<ModeSummary, HarnessError> {
    let spec = load_scenario_file(path)?;
    let results = run_batch(&spec, mode, trials, base_seed, jobs)?;
    let summary = ModeSummary::from_results(mode, &results);
    if let Some(out) = out {
        write_trajectories(out, &results)?;
        let stem = format!("{}_{}_summary", spec.name, mode);
        write_file(&out.join(format!("{stem}.txt")), &render_batch(&spec.name, &summary, OutputFormat::Table))?;
        write_file(&out.join(format!("{stem}.csv")), &render_batch(&spec.name, &summary, OutputFormat::Delimited))?;
    }
    Ok(summary)
}

/// Runs both modes on identical seeds. With `out`, writes trajectories and
/// `<scenario>_compare.txt`, `.csv` and `.json`.
pub fn cmd_compare(
    path: &Path,
    trials: usize,
    base_seed: u64,
    jobs: usize,
    out: Option<&Path>,
) -> Result<ComparisonReport, HarnessError> {
    let spec = load_scenario_file(path)?;
    compare_spec(&spec, trials, base_seed, jobs, out)
}

pub fn compare_spec(
    spec: &ScenarioSpec,
    trials: usize,
    base_seed: u64,
    jobs: usize,
    out: Option<&Path>,
) -> Result<ComparisonReport, HarnessError> {
    let soar = run_batch(spec, Mode::Soar, trials, base_seed, jobs)?;
    let non_soar = run_batch(spec, Mode::NonSoar, trials, base_seed, jobs)?;
    let report = ComparisonReport::new(
        &spec.name,
        base_seed,
        ModeSummary::from_results(Mode::Soar, &soar),
        ModeSummary::from_results(Mode::NonSoar, &non_soar),
    );
    if let Some(out) = out {
        write_trajectories(out, &soar)?;
        write_trajectories(out, &non_soar)?;
        let stem = format!("{}_compare", spec.name);
        write_file(&out.join(format!("{stem}.txt")), &render_comparison(&report, OutputFormat::Table))?;
        write_file(&out.join(format!("{stem}.csv")), &render_comparison(&report, OutputFormat::Delimited))?;
        write_file(&out.join(format!("{stem}.json")), &render_comparison(&report, OutputFormat::Structured))?;
    }
    Ok(report)
}

/// Renders trajectories over the scenario world into an SVG file. Nothing is
/// written when any input fails to load or pair with the scenario.
pub fn cmd_plot(scenario: &Path, trajectories: &[PathBuf], out: &Path) -> Result<(), HarnessError> {
    if trajectories.is_empty() {
        return Err(HarnessError::Usage("at least one --trajectory file is required".into()));
    }
    let spec = load_scenario_file(scenario)?;
    let files = trajectories
        .iter()
        .map(|p| TrajectoryFile::read(p))
        .collect::<Result<Vec<_>, _>>()?;
    let svg = plot::render_svg(&spec, &files)?;
    write_file(out, &svg)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn row(seed: u64, t: f64, outcome: Outcome) -> TrialRow {
        TrialRow {
            seed,
            travel_time: t,
            path_length: t,
            outcome,
        }
    }

    fn summary(mode: Mode, rows: Vec<TrialRow>) -> ModeSummary {
        let ok: Vec<f64> = rows.iter().filter(|r| r.outcome.is_success()).map(|r| r.travel_time).collect();
        ModeSummary {
            mode,
            success_count: ok.len(),
            total: rows.len(),
            mean_travel_time: (!ok.is_empty()).then(|| ok.iter().sum::<f64>() / ok.len() as f64),
            rows,
        }
    }

    #[test]
    fn delta_requires_successes_on_both_sides() {
        let a = summary(Mode::Soar, vec![row(1, 88.0, Outcome::GoalReached)]);
        let b = summary(Mode::NonSoar, vec![row(1, 120.0, Outcome::Timeout)]);
        let r = ComparisonReport::new("x", 1, a.clone(), b);
        assert_eq!(r.relative_time_delta_pct, None);
        let b = summary(Mode::NonSoar, vec![row(1, 110.0, Outcome::GoalReached)]);
        let r = ComparisonReport::new("x", 1, a, b);
        assert!((r.relative_time_delta_pct.unwrap() - 25.0).abs() < 1e-12);
    }

    #[test]
    fn ten_trial_reference_means() {
        // ten ground-robot trials per mode
        let soar = [89.0, 93.0, 83.0, 90.0, 87.0, 85.0, 90.0, 88.0, 87.0, 89.0];
        let non = [99.0, 98.0, 120.0, 99.0, 100.0, 98.0, 101.0, 97.0, 98.0, 101.0];
        let mk = |m, v: &[f64]| {
            summary(m, v.iter().enumerate().map(|(i, t)| row(i as u64, *t, Outcome::GoalReached)).collect())
        };
        let r = ComparisonReport::new("t", 0, mk(Mode::Soar, &soar), mk(Mode::NonSoar, &non));
        assert!((r.soar.mean_travel_time.unwrap() - 88.1).abs() < 1e-9);
        assert!((r.non_soar.mean_travel_time.unwrap() - 101.1).abs() < 1e-9);
        // 14.76 %, usually rounded to 14 %
        let d = r.relative_time_delta_pct.unwrap();
        assert!(d > 14.0 && d < 15.0, "{d}");
        let table = render_comparison(&r, OutputFormat::Table);
        assert!(table.contains("88.100") && table.contains("101.100"));
    }

    #[test]
    fn means_skip_failures() {
        let s = summary(
            Mode::NonSoar,
            vec![row(1, 10.0, Outcome::GoalReached), row(2, 120.0, Outcome::Stuck)],
        );
        assert_eq!(s.mean_travel_time, Some(10.0));
        assert_eq!((s.success_count, s.total), (1, 2));
        let csv = render_batch("x", &s, OutputFormat::Delimited);
        assert!(csv.contains("avg,,10.000,,"));
        assert!(csv.contains("success,,1/2,,"));
    }

    #[test]
    fn format_parsing() {
        assert_eq!("table".parse(), Ok(OutputFormat::Table));
        assert_eq!("delimited".parse(), Ok(OutputFormat::Delimited));
        assert_eq!("structured".parse(), Ok(OutputFormat::Structured));
        assert!("xml".parse::<OutputFormat>().is_err());
    }
}
