//! Acceptance suite. Prints one PASS/FAIL line per criterion and exits
//! nonzero if any criterion fails.
//!
//! Set `UPDATE_GOLDEN=1` to rewrite the golden reports instead of comparing.

use std::fs;
use std::path::PathBuf;
use std::process::{Command, ExitCode};
use std::time::{Duration, Instant};

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;

use locreq::commands::{cmd_tabulate, EXIT_INFEASIBLE};
use locreq::config::{parse_config, ProjectConfig};
use locreq::requirements::{
    derive_requirements, linear_grid, solve_accuracy_budget, tabulate_tradeoff, BudgetCell,
};
use locreq::simulate::{
    calibrate_sigma, random_motion_trajectory, run_simulation, two_sided_z, worst_case_experiment,
    worst_case_with_noise, NoiseModel, SimConfig,
};
use locreq::spatial::{lever_arm_chord, requirement_margin, Axis, AxisSpace, DofMask, MarginVector, PerAxis, RigidTransform};
use locreq::uncertainty::{
    confidence_from_sigma, static_uncertainty, ConfidenceLevel, ErrorPercentiles, UpdateModel, VelocityBound,
};

// Pinned tolerances.
const TABLE_TOL_M: f64 = 0.005;
const AC1_MAX_RUNTIME: Duration = Duration::from_secs(1);
const AC4_MAX_RUNTIME: Duration = Duration::from_secs(10);
const AC4_TARGET_FALSE_RATE: f64 = 0.0062;
const AC4_MIN_CLASSIFIED: u64 = 100_000;
const AC4_TRIALS: u64 = 1_000;
const AC4_CYCLES: u64 = 200;
const AC4_SEED: u64 = 42;
const AC5_TRAJECTORIES: u64 = 1_000;
const AC6_SAMPLES: usize = 1_000_000;
const AC6_CONFIDENCE: f64 = 0.9938;
const AC6_SE_MULTIPLE: f64 = 4.0;
const Z95: f64 = 1.959964;
const Z95_TOL: f64 = 1e-6;
const SIX_SIGMA_4: f64 = 0.9938;
const SIX_SIGMA_TOL: f64 = 1e-4;
const AC8_INSTANCES: usize = 10_000;

// Reference table rows for t_g = 0.1 .. 0.6 s.
const TABLE_X: [f64; 6] = [0.29, 0.28, 0.27, 0.26, 0.25, 0.24];
const TABLE_Y: [f64; 6] = [0.43, 0.36, 0.29, 0.22, 0.15, 0.08];
const COMPUTED_Z: [f64; 6] = [0.14, 0.13, 0.12, 0.11, 0.10, 0.09];
const PRINTED_Z: &str = "(0.15, 0.14, 0.13, 0.13, 0.12, 0.12)";

type Check = Result<String, String>;
type Criterion = (&'static str, &'static str, fn() -> Check);

fn root() -> PathBuf {
    PathBuf::from(env!("CARGO_MANIFEST_DIR")).join("../..")
}

fn fixture() -> ProjectConfig {
    let bytes = fs::read(root().join("fixtures/pallet_booking.json")).expect("fixture readable");
    parse_config(&bytes).expect("fixture parses")
}

fn ensure(cond: bool, msg: impl Into<String>) -> Result<(), String> {
    if cond {
        Ok(())
    } else {
        Err(msg.into())
    }
}

fn row(table: &locreq::requirements::TradeoffTable, axis: Axis) -> Vec<f64> {
    table
        .columns
        .iter()
        .map(|c| match c.cells.get(axis) {
            Some(BudgetCell::Budget(b)) => b,
            _ => f64::NAN,
        })
        .collect()
}

fn rows_match(got: &[f64], want: &[f64]) -> bool {
    got.len() == want.len() && got.iter().zip(want).all(|(g, w)| (g - w).abs() <= TABLE_TOL_M)
}

fn fixture_table() -> Result<locreq::requirements::TradeoffTable, String> {
    let cfg = fixture();
    let r = cfg.function.requirement_margin().map_err(|e| e.to_string())?;
    let v = cfg.function.velocity().map_err(|e| e.to_string())?;
    let grid = linear_grid(0.1, 0.6, 0.1).map_err(|e| e.to_string())?;
    tabulate_tradeoff(&r, &v, &grid, 0.0).map_err(|e| e.to_string())
}

fn ac1() -> Check {
    let start = Instant::now();
    let table = fixture_table()?;
    let elapsed = start.elapsed();
    let (x, y) = (row(&table, Axis::X), row(&table, Axis::Y));
    ensure(rows_match(&x, &TABLE_X), format!("x row {x:?}"))?;
    ensure(rows_match(&y, &TABLE_Y), format!("y row {y:?}"))?;
    ensure(elapsed < AC1_MAX_RUNTIME, format!("runtime {elapsed:?}"))?;
    Ok(format!("x and y rows within {TABLE_TOL_M} m, {elapsed:?}"))
}

fn ac2() -> Check {
    let z = row(&fixture_table()?, Axis::Z);
    ensure(rows_match(&z, &COMPUTED_Z), format!("z row {z:?}"))?;
    let outcome = cmd_tabulate(&fixture()).map_err(|e| e.to_string())?;
    let warned = outcome
        .report
        .warnings
        .iter()
        .any(|w| w.contains(PRINTED_Z) && w.contains("v_z = 0.05 m/s"));
    ensure(warned, "z-row discrepancy warning missing")?;
    let shown: Vec<String> = z.iter().map(|v| format!("{v:.2}")).collect();
    Ok(format!("z row ({}) and discrepancy warning present", shown.join(", ")))
}

fn ac3() -> Check {
    let cfg = fixture();
    let update = UpdateModel::periodic(2.0).map_err(|e| e.to_string())?;
    let d = derive_requirements(&cfg.function, &update, 0.0, None).map_err(|e| e.to_string())?;
    let p = d.accuracy_budget_at_interest_frame;
    let (x, y) = (p.get(Axis::X).unwrap_or(f64::NAN), p.get(Axis::Y).unwrap_or(f64::NAN));
    ensure((x - 0.25).abs() <= TABLE_TOL_M, format!("x budget {x}"))?;
    ensure((y - 0.15).abs() <= TABLE_TOL_M, format!("y budget {y}"))?;
    Ok(format!("budgets x = {x:.6} m, y = {y:.6} m at 2 Hz"))
}

fn ac4_bound(n: u64) -> f64 {
    let c = 1.0 - AC4_TARGET_FALSE_RATE;
    AC4_TARGET_FALSE_RATE + 3.0 * (AC4_TARGET_FALSE_RATE * c / n as f64).sqrt()
}

fn ac4() -> Check {
    let cfg = fixture();
    let spec = &cfg.function;
    let update = UpdateModel::periodic(2.0).map_err(|e| e.to_string())?;
    let budgets = derive_requirements(spec, &update, 0.0, None)
        .map_err(|e| e.to_string())?
        .accuracy_budget_at_interest_frame;
    let start = Instant::now();
    let rep = worst_case_experiment(spec, budgets.values(), &update, 0.0, AC4_CYCLES, AC4_TRIALS, AC4_SEED)
        .map_err(|e| e.to_string())?;
    let elapsed = start.elapsed();
    let n = rep.updates_classified;
    ensure(n >= AC4_MIN_CLASSIFIED, format!("only {n} classified updates"))?;
    let bound = ac4_bound(n);
    for (axis, rate) in rep.false_outside_per_axis.iter() {
        ensure(rate <= bound, format!("{axis} rate {rate} > {bound}"))?;
    }
    ensure(elapsed < AC4_MAX_RUNTIME, format!("runtime {elapsed:?}"))?;

    let calibrated = NoiseModel::calibrated(budgets.values(), spec.confidence.probability()).map_err(|e| e.to_string())?;
    let doubled = calibrated
        .with_sigma(Axis::Y, 2.0 * calibrated.sigma(Axis::Y))
        .map_err(|e| e.to_string())?;
    let neg = worst_case_with_noise(spec, doubled, &update, 0.0, AC4_CYCLES, AC4_TRIALS, AC4_SEED)
        .map_err(|e| e.to_string())?;
    let neg_y = neg.false_outside_per_axis.get(Axis::Y).unwrap_or(0.0);
    let neg_bound = ac4_bound(neg.updates_classified);
    ensure(neg_y > neg_bound, format!("negative control passed: y rate {neg_y} <= {neg_bound}"))?;

    let rates: Vec<String> = rep
        .false_outside_per_axis
        .iter()
        .map(|(a, r)| format!("{a}={r:.5}"))
        .collect();
    Ok(format!(
        "N = {n}, rates {} <= {bound:.5}, doubled-y control {neg_y:.4} fails, {elapsed:?}",
        rates.join(" ")
    ))
}

fn ac5() -> Check {
    let cfg = fixture();
    let spec = &cfg.function;
    let update = UpdateModel::periodic(10.0).map_err(|e| e.to_string())?;
    let zero = NoiseModel::new(PerAxis::filled(&spec.dof, 0.0)).map_err(|e| e.to_string())?;
    let mut classified = 0u64;
    let mut false_events = 0u64;
    for i in 0..AC5_TRAJECTORIES {
        let mut rng = ChaCha8Rng::seed_from_u64(i);
        let trajectory = random_motion_trajectory(spec, 20, 0.3, &mut rng).map_err(|e| e.to_string())?;
        let rep = run_simulation(&SimConfig {
            function: spec.clone(),
            noise: zero,
            update,
            latency_s: 0.0,
            trajectory,
            trials: 1,
            seed: i,
        })
        .map_err(|e| e.to_string())?;
        classified += rep.updates_classified;
        false_events += rep.false_outside_count.iter().map(|(_, c)| c).sum::<u64>();
    }
    ensure(classified > 0, "no classified updates")?;
    ensure(false_events == 0, format!("{false_events} false events"))?;
    Ok(format!("{AC5_TRAJECTORIES} trajectories, {classified} classified updates, 0 false events"))
}

fn ac6() -> Check {
    let sigma = calibrate_sigma(0.25, AC6_CONFIDENCE).map_err(|e| e.to_string())?;
    let mut rng = ChaCha8Rng::seed_from_u64(6);
    let inside = (0..AC6_SAMPLES)
        .filter(|_| {
            let e: f64 = rng.sample(StandardNormal);
            (sigma * e).abs() <= 0.25
        })
        .count();
    let freq = inside as f64 / AC6_SAMPLES as f64;
    let se = (AC6_CONFIDENCE * (1.0 - AC6_CONFIDENCE) / AC6_SAMPLES as f64).sqrt();
    ensure((freq - AC6_CONFIDENCE).abs() <= AC6_SE_MULTIPLE * se, format!("frequency {freq}"))?;
    let z = two_sided_z(0.95).map_err(|e| e.to_string())?;
    ensure((z - Z95).abs() <= Z95_TOL, format!("z(0.95) = {z}"))?;
    Ok(format!("coverage {freq:.5} (|d| <= {:.5}), z(0.95) = {z:.7}", AC6_SE_MULTIPLE * se))
}

fn ac7() -> Check {
    let c4 = confidence_from_sigma(4.0).map_err(|e| e.to_string())?;
    ensure((c4 - SIX_SIGMA_4).abs() <= SIX_SIGMA_TOL, format!("C(4) = {c4}"))?;
    let values: Vec<f64> = [2.0, 3.0, 4.0, 5.0, 6.0]
        .iter()
        .map(|s| confidence_from_sigma(*s))
        .collect::<Result<_, _>>()
        .map_err(|e| e.to_string())?;
    ensure(values.windows(2).all(|w| w[0] < w[1]), format!("not increasing: {values:?}"))?;
    Ok(format!("C(4 sigma) = {c4:.5}, strictly increasing over 2..6"))
}

fn ac8() -> Check {
    let mut rng = ChaCha8Rng::seed_from_u64(8);
    let xyz = DofMask::xyz();

    // (a) budget antitone in t_gap, t_delay and velocity
    for i in 0..AC8_INSTANCES {
        let r = MarginVector::new(PerAxis::from_pairs(
            Axis::ALL[..3].iter().map(|a| (*a, rng.random_range(1.0..5.0))),
        ))
        .map_err(|e| e.to_string())?;
        let vals: PerAxis<f64> = PerAxis::from_pairs(Axis::ALL[..3].iter().map(|a| (*a, rng.random_range(0.0..1.0))));
        let v = VelocityBound::new(vals).map_err(|e| e.to_string())?;
        let faster = v.scaled(1.0 + rng.random_range(0.0..0.5)).map_err(|e| e.to_string())?;
        // v < 1 m/s and t_g + t_d < 0.8 s keep every base instance feasible
        let (tg, td) = (rng.random_range(0.0..0.4), rng.random_range(0.0..0.4));
        let (dg, dd) = (rng.random_range(0.0..0.1), rng.random_range(0.0..0.1));
        let base = solve_accuracy_budget(&r, &v, tg, td).map_err(|e| e.to_string())?;
        let variants = [
            solve_accuracy_budget(&r, &v, tg + dg, td),
            solve_accuracy_budget(&r, &v, tg, td + dd),
            solve_accuracy_budget(&r, &faster, tg, td),
        ];
        // infeasible counts as the smallest possible budget
        for b in variants.into_iter().flatten() {
            for (axis, p) in b.iter() {
                ensure(p <= base.get(axis).unwrap() + 1e-12, format!("(a) instance {i} axis {axis}"))?;
            }
        }
    }

    // (b) margin antitone in safety and motion-space size
    for i in 0..AC8_INSTANCES {
        let i_hi = rng.random_range(2.0..5.0);
        let m_lo = rng.random_range(0.5..1.0);
        let m_hi = rng.random_range(1.0..1.5);
        let grow = rng.random_range(0.0..0.4);
        // gaps stay >= 0.1 m, safety stays <= 0.1 m
        let s = rng.random_range(0.0..0.05);
        let ds = rng.random_range(0.0..0.05);
        let interest = space(&[(0.0, i_hi); 3])?;
        let motion = space(&[(m_lo, m_hi); 3])?;
        let bigger = space(&[(m_lo - grow, m_hi + grow); 3])?;
        let safety = PerAxis::filled(&xyz, s);
        let more_safety = PerAxis::filled(&xyz, s + ds);
        let base = requirement_margin(&interest, &motion, &safety, &xyz).map_err(|e| e.to_string())?;
        for other in [
            requirement_margin(&interest, &motion, &more_safety, &xyz),
            requirement_margin(&interest, &bigger, &safety, &xyz),
        ] {
            let other = other.map_err(|e| e.to_string())?;
            for (axis, r) in other.iter() {
                ensure(r <= base.get(axis).unwrap(), format!("(b) instance {i} axis {axis}"))?;
            }
        }
    }

    // (c) chord bounded by arc length and monotone in angle
    for i in 0..AC8_INSTANCES {
        let radius = rng.random_range(0.0..10.0);
        let a = rng.random_range(0.0..std::f64::consts::PI);
        let b = rng.random_range(a..=std::f64::consts::PI);
        let ca = lever_arm_chord(radius, a).map_err(|e| e.to_string())?;
        let cb = lever_arm_chord(radius, b).map_err(|e| e.to_string())?;
        ensure(ca <= radius * a + 1e-12 && ca <= cb, format!("(c) instance {i}"))?;
    }

    // (d) identity transform leaves static uncertainty unchanged
    for i in 0..AC8_INSTANCES {
        let values = PerAxis::from_pairs(Axis::ALL.iter().map(|a| (*a, rng.random_range(0.0..2.0))));
        let p = ErrorPercentiles::new(values, ConfidenceLevel::Sigma(4.0)).map_err(|e| e.to_string())?;
        let u = static_uncertainty(&p, &RigidTransform::IDENTITY).map_err(|e| e.to_string())?;
        ensure(u.values() == &values, format!("(d) instance {i}"))?;
    }

    // (e) byte-identical simulate reports
    let first = run_cli(&["simulate", "--config", FIXTURE, "--trials", "100", "--seed", "42"])?;
    let second = run_cli(&["simulate", "--config", FIXTURE, "--trials", "100", "--seed", "42"])?;
    ensure(first.1 == second.1, "(e) simulate reports differ")?;

    Ok(format!("(a)-(d) on {AC8_INSTANCES} instances each, (e) identical reports"))
}

fn space(bounds: &[(f64, f64); 3]) -> Result<AxisSpace, String> {
    let mut s = AxisSpace::default();
    for (axis, (lo, hi)) in Axis::ALL[..3].iter().zip(bounds) {
        s = s.with_axis(*axis, *lo, *hi).map_err(|e| e.to_string())?;
    }
    Ok(s)
}

const FIXTURE: &str = "fixtures/pallet_booking.json";
const UNDERPERFORMING: &str = "fixtures/pallet_booking_underperforming.json";

fn run_cli(args: &[&str]) -> Result<(i32, Vec<u8>), String> {
    let out = Command::new(env!("CARGO_BIN_EXE_locreq"))
        .args(args)
        .current_dir(root())
        .output()
        .map_err(|e| format!("cannot spawn locreq: {e}"))?;
    let code = out.status.code().ok_or("locreq killed by signal")?;
    Ok((code, out.stdout))
}

const GOLDEN: &[(&str, &[&str])] = &[
    ("derive.json", &["derive", "--config", FIXTURE]),
    ("derive.md", &["derive", "--config", FIXTURE, "--format", "markdown"]),
    ("check.json", &["check", "--config", FIXTURE]),
    ("check.csv", &["check", "--config", FIXTURE, "--format", "csv"]),
    ("tabulate.json", &["tabulate", "--config", FIXTURE]),
    ("tabulate.csv", &["tabulate", "--config", FIXTURE, "--format", "csv"]),
    ("tabulate.md", &["tabulate", "--config", FIXTURE, "--format", "markdown"]),
    ("simulate.json", &["simulate", "--config", FIXTURE, "--trials", "100", "--seed", "42"]),
];

fn ac9() -> Check {
    let dir = root().join("fixtures/golden");
    let update = std::env::var_os("UPDATE_GOLDEN").is_some();
    for (name, args) in GOLDEN {
        let (code, stdout) = run_cli(args)?;
        ensure(code == 0, format!("{name}: exit code {code}"))?;
        let path = dir.join(name);
        if update {
            fs::write(&path, &stdout).map_err(|e| format!("{name}: {e}"))?;
        } else {
            let want = fs::read(&path).map_err(|e| format!("{name}: {e}"))?;
            ensure(want == stdout, format!("{name}: output differs from golden"))?;
        }
    }
    let (code, _) = run_cli(&["check", "--config", UNDERPERFORMING])?;
    ensure(code == EXIT_INFEASIBLE, format!("under-performing check exited {code}"))?;
    let verb = if update { "rewritten" } else { "match" };
    Ok(format!("{} golden reports {verb}, under-performing check exits {code}", GOLDEN.len()))
}

fn main() -> ExitCode {
    let criteria: [Criterion; 9] = [
        ("AC1", "reference table x/y rows", ac1),
        ("AC2", "z-row discrepancy warning", ac2),
        ("AC3", "2 Hz accuracy budgets", ac3),
        ("AC4", "worst-case conservativeness", ac4),
        ("AC5", "perfect-system zero", ac5),
        ("AC6", "noise calibration", ac6),
        ("AC7", "sigma to confidence mapping", ac7),
        ("AC8", "property suites", ac8),
        ("AC9", "golden reports and exit codes", ac9),
    ];
    let mut failed = 0;
    for (id, title, check) in criteria {
        match check() {
            Ok(detail) => println!("PASS {id} {title}: {detail}"),
            Err(detail) => {
                failed += 1;
                println!("FAIL {id} {title}: {detail}");
            }
        }
    }
    println!("{} of {} criteria passed", criteria.len() - failed, criteria.len());
    if failed == 0 {
        ExitCode::SUCCESS
    } else {
        ExitCode::FAILURE
    }
}
