//! End-to-end acceptance checks. Runs as a plain binary (no libtest harness)
//! so the PASS/FAIL table is always printed; exits non-zero on any failure.

use std::fs;
use std::path::{Path, PathBuf};
use std::time::{Duration, Instant};

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use soar_sim::harness::{self, OutputFormat};
use soar_sim::perception::{CameraPose, ObstacleView};
use soar_sim::steering::{c1, c2, repulsive_potential, ActiveObstacle};
use soar_sim::{
    depth_from_disparity, fuse, load_scenario_file, run_trial, sense, steering_direction, Mode, Outcome,
    ScenarioSpec, SensorNoiseSpec, StereoRig, SteeringParams, Vec2,
};

type Check = Result<String, String>;

fn scenario_path(name: &str) -> PathBuf {
    Path::new(env!("CARGO_MANIFEST_DIR")).join("scenarios").join(format!("{name}.toml"))
}

fn scenario(name: &str) -> ScenarioSpec {
    load_scenario_file(&scenario_path(name)).unwrap_or_else(|e| panic!("{name}: {e}"))
}

fn ensure(cond: bool, msg: impl FnOnce() -> String) -> Result<(), String> {
    if cond {
        Ok(())
    } else {
        Err(msg())
    }
}

fn random_unit(rng: &mut ChaCha8Rng) -> Vec2 {
    Vec2::from_angle(rng.random_range(-std::f64::consts::PI..std::f64::consts::PI))
}

fn perpendicularity() -> Check {
    let mut rng = ChaCha8Rng::seed_from_u64(1);
    let n = 20_000;
    let mut worst: f64 = 0.0;
    for _ in 0..n {
        let a = random_unit(&mut rng);
        let r = random_unit(&mut rng);
        let residual = (a + r * c1(a, r)).dot(r).abs();
        worst = worst.max(residual);
    }
    // the controller output at the clearance boundary is tangent too
    for _ in 0..1000 {
        let pos = Vec2::new(rng.random_range(-5.0..5.0), rng.random_range(-5.0..5.0));
        let goal = pos + random_unit(&mut rng) * rng.random_range(1.0..10.0);
        let r = random_unit(&mut rng);
        let d0 = rng.random_range(0.1..3.0);
        let active = ActiveObstacle {
            id: 1,
            position: pos + r * (d0 + 0.5),
            surface_distance: d0,
            d0,
        };
        let d = steering_direction(pos, goal, Some(active), &SteeringParams::default()).map_err(|e| e.to_string())?;
        if !d.tie_break_applied {
            worst = worst.max(d.v_hat.dot(d.r_hat.expect("active")).abs());
        }
    }
    ensure(worst <= 1e-9, || format!("max |(a + c1 r) . r| = {worst:e}"))?;
    Ok(format!("{n} pairs, max residual {worst:.1e}"))
}

fn c2_contract() -> Check {
    let mut rng = ChaCha8Rng::seed_from_u64(2);
    let n = 10_000;
    for _ in 0..n {
        let d0 = rng.random_range(1e-3..20.0);
        let b = 1.0 + rng.random_range(0.0..9.0f64).max(1e-6);
        let end_far = c2(d0, d0, b).map_err(|e| e.to_string())?;
        let end_near = c2(0.0, d0, b).map_err(|e| e.to_string())?;
        ensure(end_far == 1.0 && end_near == b, || {
            format!("d0={d0} b={b}: c2(d0)={end_far} c2(0)={end_near}")
        })?;
        let mut a = rng.random_range(0.0..=d0);
        let mut z = rng.random_range(0.0..=d0);
        if a > z {
            std::mem::swap(&mut a, &mut z);
        }
        let (ca, cz) = (c2(a, d0, b).unwrap(), c2(z, d0, b).unwrap());
        ensure((1.0..=b).contains(&ca) && (1.0..=b).contains(&cz), || {
            format!("out of [1, b]: c2({a})={ca} c2({z})={cz} b={b}")
        })?;
        if a < z {
            ensure(ca > cz, || format!("not decreasing: c2({a})={ca} c2({z})={cz}"))?;
        }
    }
    Ok(format!("{n} random (d0, b, dist) triples"))
}

fn repulsion_locality() -> Check {
    let mut rng = ChaCha8Rng::seed_from_u64(3);
    for _ in 0..10_000 {
        let d0 = rng.random_range(0.01..10.0);
        let eta = rng.random_range(0.01..10.0);
        let p = d0 + rng.random_range(1e-9..50.0);
        let v = repulsive_potential(p, d0, eta).map_err(|e| e.to_string())?;
        ensure(v == 0.0, || format!("f_r({p}; {d0}, {eta}) = {v}"))?;
        let at = repulsive_potential(d0, d0, eta).map_err(|e| e.to_string())?;
        ensure(at == 0.0, || format!("f_r(d0={d0}) = {at}"))?;
    }
    let spot = repulsive_potential(1.0, 2.0, 1.0).map_err(|e| e.to_string())?;
    ensure(spot == 0.25, || format!("f_r(1; 2, 1) = {spot}"))?;
    // a policy-ignored obstacle never steers, whatever its distance
    let d = steering_direction(
        Vec2::ZERO,
        Vec2::new(5.0, 0.0),
        Some(ActiveObstacle {
            id: 7,
            position: Vec2::new(1.0, 0.0),
            surface_distance: 0.5,
            d0: 0.0,
        }),
        &SteeringParams::default(),
    )
    .map_err(|e| e.to_string())?;
    ensure(d.active_obstacle_id.is_none(), || "d0 = 0 obstacle steered".into())?;
    Ok("zero beyond d0 and at d0; f_r(1; 2, 1) = 0.25".into())
}

fn depth_round_trip() -> Check {
    let mut rng = ChaCha8Rng::seed_from_u64(4);
    let mut worst: f64 = 0.0;
    let n = 1000;
    for _ in 0..n {
        let rig = StereoRig {
            focal_px: rng.random_range(50.0..2000.0),
            baseline_m: rng.random_range(0.01..1.0),
            ..StereoRig::default()
        };
        let z = rng.random_range(0.1..50.0);
        let d = rig.focal_px * rig.baseline_m / z;
        let back = depth_from_disparity(d, &rig).map_err(|e| e.to_string())?;
        worst = worst.max((back - z).abs() / z);

        // full sensing path: a disc straight ahead, noise off
        let obstacle = soar_sim::ObstacleInstance::new_static(1, "rock", Vec2::new(z, 0.0), 0.01 * z);
        let views = [ObstacleView::at(&obstacle, 0.0)];
        let pose = CameraPose {
            position: Vec2::ZERO,
            heading: 0.0,
        };
        let noise = SensorNoiseSpec {
            max_range_m: 100.0,
            ..SensorNoiseSpec::default()
        };
        let frame = sense(&views, pose, &rig, &noise, &mut rng);
        let est = fuse(&frame, &rig).estimates;
        ensure(est.len() == 1, || format!("z={z}: {} estimates", est.len()))?;
        worst = worst.max((est[0].position.x - z).abs() / z);
    }
    ensure(worst <= 1e-9, || format!("max relative error {worst:e}"))?;
    let spot_rig = StereoRig {
        focal_px: 100.0,
        baseline_m: 0.1,
        ..StereoRig::default()
    };
    let spot = depth_from_disparity(10.0, &spot_rig).map_err(|e| e.to_string())?;
    ensure((spot - 1.0).abs() <= 1e-12, || format!("f=100, B=0.1, d=10 -> {spot}"))?;
    Ok(format!("{n} triples, max relative error {worst:.1e}; spot value {spot}"))
}

fn noise_free(mut spec: ScenarioSpec) -> ScenarioSpec {
    spec.disturbance.gust_std = 0.0;
    spec.sensor.noise.disparity_std = 0.0;
    spec.sensor.noise.misclassify_prob = 0.0;
    spec
}

fn ignorable_transparency() -> Check {
    let cases = [("parking_lot", "sports_ball"), ("arch", "fish")];
    let mut ticks = 0;
    for (name, class) in cases {
        let spec = noise_free(scenario(name));
        ensure(spec.policy.d0(class) == 0.0, || format!("{name}: {class} is not ignorable"))?;
        let mut without = spec.clone();
        without.obstacles.retain(|o| o.class_label != class);
        ensure(without.obstacles.len() < spec.obstacles.len(), || format!("{name}: no {class}"))?;
        for seed in [spec.seed, 7] {
            let a = run_trial(&spec, Mode::Soar, seed).map_err(|e| e.to_string())?;
            let b = run_trial(&without, Mode::Soar, seed).map_err(|e| e.to_string())?;
            ensure(a.trajectory == b.trajectory, || {
                let k = a.trajectory.iter().zip(&b.trajectory).position(|(x, y)| x != y);
                format!("{name} seed {seed}: trajectories diverge at tick {k:?}")
            })?;
            ensure(a.tick_log == b.tick_log && a.outcome == b.outcome, || {
                format!("{name} seed {seed}: steering logs differ")
            })?;
            ticks += a.trajectory.len();
        }
    }
    Ok(format!("parking_lot and arch, {ticks} identical ticks"))
}

fn circumnavigation() -> Check {
    let spec = scenario("circumnavigate");
    ensure(
        spec.disturbance.gust_std == 0.0 && spec.disturbance.constant_drift == Vec2::ZERO,
        || "scenario has a disturbance".into(),
    )?;
    let blocker = &spec.obstacles[0];
    let d0 = spec.policy.d0(&blocker.class_label);
    let r = run_trial(&spec, Mode::Soar, spec.seed).map_err(|e| e.to_string())?;
    let min = r.min_clearance_by_class.get(&blocker.class_label).copied().unwrap_or(f64::INFINITY);
    ensure(r.outcome == Outcome::GoalReached, || format!("outcome {}", r.outcome))?;
    ensure(r.tick_log.iter().any(|t| t.active_obstacle_id == Some(blocker.id)), || {
        "obstacle never engaged".into()
    })?;
    ensure(min >= 0.95 * d0, || format!("min clearance {min:.4} < 0.95 * {d0}"))?;
    Ok(format!("goal_reached, min clearance {min:.3} m = {:.3} d0", min / d0))
}

fn compare_fixture(name: &str, out: Option<&Path>) -> Result<harness::ComparisonReport, String> {
    let spec = scenario(name);
    harness::compare_spec(&spec, 10, spec.seed, 2, out).map_err(|e| e.to_string())
}

fn parking_lot() -> Check {
    let report = compare_fixture("parking_lot", None)?;
    let (s, n) = (&report.soar, &report.non_soar);
    ensure(s.success_count == 10 && s.total == 10, || format!("SOAR {}/{}", s.success_count, s.total))?;
    ensure(n.success_count == 10 && n.total == 10, || {
        format!("non-SOAR {}/{}", n.success_count, n.total)
    })?;
    let delta = report.relative_time_delta_pct.ok_or("no time delta")?;
    ensure(delta >= 10.0, || format!("delta {delta:.2}% < 10%"))?;
    Ok(format!(
        "SOAR 10/10 ({:.1} s), non-SOAR 10/10 ({:.1} s), delta {delta:+.2}%",
        s.mean_travel_time.unwrap_or(f64::NAN),
        n.mean_travel_time.unwrap_or(f64::NAN)
    ))
}

fn arch() -> Check {
    let report = compare_fixture("arch", None)?;
    let (s, n) = (&report.soar, &report.non_soar);
    ensure(s.success_count == 10 && s.total == 10, || format!("SOAR {}/{}", s.success_count, s.total))?;
    ensure(n.success_count == 0 && n.total == 10, || format!("non-SOAR {}/{}", n.success_count, n.total))?;
    let mut labels: Vec<&str> = Vec::new();
    for row in &n.rows {
        ensure(
            matches!(row.outcome, Outcome::Timeout | Outcome::Stuck | Outcome::WrongDirection),
            || format!("non-SOAR seed {} ended {}", row.seed, row.outcome),
        )?;
        labels.push(row.outcome.as_str());
    }
    labels.sort_unstable();
    labels.dedup();
    Ok(format!("SOAR 10/10, non-SOAR 0/10 ({})", labels.join("/")))
}

fn collisions(spec: &ScenarioSpec, seeds: std::ops::Range<u64>) -> Result<usize, String> {
    let mut n = 0;
    for seed in seeds {
        let r = run_trial(spec, Mode::Soar, seed).map_err(|e| e.to_string())?;
        n += usize::from(r.outcome == Outcome::Collision);
    }
    Ok(n)
}

fn misclassification() -> Check {
    let mut spec = scenario("head_on");
    let avoidable = spec.obstacles[0].class_label.clone();
    let mapped = spec.sensor.noise.confusion.get(&avoidable).cloned().ok_or("no confusion entry")?;
    ensure(spec.policy.d0(&avoidable) > 0.0 && spec.policy.d0(&mapped) == 0.0, || {
        format!("{avoidable} -> {mapped} is not avoidable -> ignorable")
    })?;
    spec.sensor.noise.misclassify_prob = 0.5;
    let noisy = collisions(&spec, 0..20)?;
    spec.sensor.noise.misclassify_prob = 0.0;
    let clean = collisions(&spec, 0..20)?;
    ensure(noisy >= 1, || "no collisions at p = 0.5".into())?;
    ensure(clean == 0, || format!("{clean} collisions at p = 0"))?;
    Ok(format!("p=0.5: {noisy}/20 collisions; p=0: 0/20"))
}

fn suite_artifacts(dir: &Path, jobs: usize) -> Result<(), String> {
    for name in ["parking_lot", "arch", "circumnavigate"] {
        let spec = scenario(name);
        harness::compare_spec(&spec, 10, spec.seed, jobs, Some(dir)).map_err(|e| e.to_string())?;
    }
    let path = scenario_path("head_on");
    harness::cmd_batch(&path, Mode::Soar, 20, 0, jobs, Some(dir)).map_err(|e| e.to_string())?;
    Ok(())
}

fn listing(dir: &Path) -> Vec<(String, Vec<u8>)> {
    let mut files: Vec<_> = fs::read_dir(dir)
        .expect("artifact dir")
        .map(|e| {
            let e = e.expect("dir entry");
            (e.file_name().to_string_lossy().into_owned(), fs::read(e.path()).expect("artifact"))
        })
        .collect();
    files.sort();
    files
}

fn determinism() -> Check {
    let a = tempfile::tempdir().map_err(|e| e.to_string())?;
    let b = tempfile::tempdir().map_err(|e| e.to_string())?;
    suite_artifacts(a.path(), 1)?;
    suite_artifacts(b.path(), 4)?;
    let (la, lb) = (listing(a.path()), listing(b.path()));
    let names = |l: &[(String, Vec<u8>)]| l.iter().map(|(n, _)| n.clone()).collect::<Vec<_>>();
    ensure(names(&la) == names(&lb), || "different artifact sets".into())?;
    for ((name, x), (_, y)) in la.iter().zip(&lb) {
        ensure(x == y, || format!("{name} differs between runs"))?;
    }
    let summaries = la.iter().filter(|(n, _)| !n.contains("_seed")).count();
    ensure(summaries >= 11, || format!("only {summaries} summary files"))?;
    // the rendered comparison is stable text as well
    let report = compare_fixture("parking_lot", None)?;
    let again = compare_fixture("parking_lot", None)?;
    for f in [OutputFormat::Table, OutputFormat::Delimited, OutputFormat::Structured] {
        ensure(
            harness::render_comparison(&report, f) == harness::render_comparison(&again, f),
            || "rendered report differs".into(),
        )?;
    }
    Ok(format!("{} artifacts ({summaries} summaries) byte-identical across 1 and 4 workers", la.len()))
}

struct Criterion {
    label: &'static str,
    limit: Duration,
    run: fn() -> Check,
}

fn main() {
    let criteria = [
        Criterion { label: "perpendicularity identity", limit: Duration::from_secs(1), run: perpendicularity },
        Criterion { label: "c2 contract", limit: Duration::from_secs(1), run: c2_contract },
        Criterion { label: "repulsion locality", limit: Duration::from_secs(1), run: repulsion_locality },
        Criterion { label: "depth round-trip", limit: Duration::from_secs(1), run: depth_round_trip },
        Criterion { label: "ignorable transparency", limit: Duration::from_secs(5), run: ignorable_transparency },
        Criterion { label: "circumnavigation clearance", limit: Duration::from_secs(5), run: circumnavigation },
        Criterion { label: "parking_lot comparison", limit: Duration::from_secs(120), run: parking_lot },
        Criterion { label: "arch comparison", limit: Duration::from_secs(120), run: arch },
        Criterion { label: "misclassification collisions", limit: Duration::from_secs(60), run: misclassification },
        Criterion { label: "determinism", limit: Duration::from_secs(300), run: determinism },
    ];

    let suite = Instant::now();
    let mut failed = 0;
    for (i, c) in criteria.iter().enumerate() {
        let start = Instant::now();
        let outcome = (c.run)();
        let took = start.elapsed();
        let outcome = match outcome {
            Ok(detail) if took > c.limit => Err(format!("{detail}; took {took:.2?} > {:?}", c.limit)),
            other => other,
        };
        match outcome {
            Ok(detail) => println!("PASS {:>2} {:<30} {detail} [{took:.2?}]", i + 1, c.label),
            Err(why) => {
                failed += 1;
                println!("FAIL {:>2} {:<30} {why} [{took:.2?}]", i + 1, c.label);
            }
        }
    }
    println!(
        "acceptance: {} passed, {failed} failed in {:.2?}",
        criteria.len() - failed,
        suite.elapsed()
    );
    if failed > 0 {
        std::process::exit(1);
    }
}
