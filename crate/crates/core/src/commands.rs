//! The four user-facing commands: derive, check, tabulate and simulate.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use thiserror::Error;

use crate::config::{ConfigError, NoiseSource, ProjectConfig, SimulationSettings, TrajectoryMode};
use crate::report::{Cell, Layout, Report, Section};
use crate::requirements::{
    assess_ils, derive_requirements, linear_grid, tabulate_tradeoff, BudgetCell, EngineError, LocalizationFunctionSpec,
    LocalizationType,
};
use crate::simulate::{
    random_motion_trajectory, run_simulation, worst_case_experiment, NoiseModel, SimConfig, SimError, SimReport,
};
use crate::spatial::{Axis, MarginVector, PerAxis};
use crate::uncertainty::{ConfidenceLevel, StaticBasis, UpdateModel};

pub const EXIT_OK: i32 = 0;
pub const EXIT_USAGE: i32 = 1;
pub const EXIT_INFEASIBLE: i32 = 2;
pub const EXIT_SIMULATION_FAILED: i32 = 3;

/// Stream reserved for drawing the random trajectory, distinct from every trial stream.
const TRAJECTORY_STREAM: u64 = u64::MAX;

#[derive(Debug, Error)]
pub enum CommandError {
    #[error(transparent)]
    Config(#[from] ConfigError),
    #[error(transparent)]
    Engine(#[from] EngineError),
    #[error(transparent)]
    Simulation(#[from] SimError),
    #[error("configuration has no \"{0}\" section, required by this command")]
    MissingSection(&'static str),
    #[error("{0}")]
    Usage(String),
}

impl CommandError {
    pub fn exit_code(&self) -> i32 {
        EXIT_USAGE
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Outcome {
    pub report: Report,
    pub exit_code: i32,
}

/// Applies `--seed` / `--trials` style overrides to the simulation settings.
pub fn apply_overrides(cfg: &mut ProjectConfig, seed: Option<u64>, trials: Option<u64>) -> Result<(), CommandError> {
    if seed.is_none() && trials.is_none() {
        return Ok(());
    }
    let sim = cfg.simulation.as_mut().ok_or(CommandError::MissingSection("simulation"))?;
    if let Some(seed) = seed {
        sim.seed = seed;
    }
    if let Some(trials) = trials {
        if trials == 0 {
            return Err(CommandError::Usage("--trials must be at least 1".into()));
        }
        sim.trials = trials;
    }
    Ok(())
}

fn approx(a: Option<f64>, b: f64) -> bool {
    a.is_some_and(|a| (a - b).abs() < 1e-9)
}

/// Notes attached to reports for inputs that need a reader's attention.
pub fn advisory_notes(spec: &LocalizationFunctionSpec) -> Vec<String> {
    let mut notes = Vec::new();
    if spec.localization_type == LocalizationType::Relative {
        notes.push(
            "relative localization: percentiles must describe the error relative to the reference entity's frame".into(),
        );
    }
    let r = spec.requirement_margin().ok();
    let r = |axis| r.as_ref().and_then(|m| m.get(axis));
    let v = |axis| spec.max_velocity.get(axis);
    let reference_case = spec.dof.contains(Axis::Z)
        && approx(r(Axis::X), 0.3)
        && approx(r(Axis::Y), 0.5)
        && approx(r(Axis::Z), 0.15)
        && approx(v(Axis::X), 0.1)
        && approx(v(Axis::Y), 0.7)
        && approx(v(Axis::Z), 0.1);
    if reference_case {
        notes.push(
            "z budgets follow the configured v_z = 0.1 m/s, giving (0.14, 0.13, 0.12, 0.11, 0.10, 0.09) m for \
             t_g = 0.1..0.6 s; the published reference table prints (0.15, 0.14, 0.13, 0.13, 0.12, 0.12) m, \
             which is consistent with v_z = 0.05 m/s instead (and its 0.12 m at t_g = 0.5 s likewise)"
                .into(),
        );
    }
    notes
}

fn confidence_label(c: &ConfidenceLevel) -> String {
    match c {
        ConfidenceLevel::Sigma(s) => format!("{s} sigma"),
        ConfidenceLevel::Percentile(p) => format!("percentile {p}"),
    }
}

fn update_label(u: &UpdateModel) -> String {
    match u {
        UpdateModel::Periodic { rate_hz } => format!("periodic {rate_hz} Hz"),
        UpdateModel::OnRequest => "on request".into(),
        UpdateModel::OnEvent => "on event".into(),
    }
}

fn basis_label(b: StaticBasis) -> &'static str {
    match b {
        StaticBasis::GroundTruth => "accuracy (ground truth)",
        StaticBasis::SameSystemMap => "repeatability (same-system map)",
    }
}

fn margin_cell(m: &MarginVector, axis: Axis) -> Cell {
    m.get(axis).map(Cell::Num).unwrap_or(Cell::Missing)
}

/// Steps B to D for the configured update model.
pub fn cmd_derive(cfg: &ProjectConfig) -> Result<Outcome, CommandError> {
    let settings = cfg.derive.as_ref().ok_or(CommandError::MissingSection("derive"))?;
    let spec = &cfg.function;
    let req = derive_requirements(spec, &settings.update, settings.latency_s, settings.yaw_percentile)?;

    let mut report = Report::new("derive", cfg.to_json());
    report.sections.push(Section::fields(
        "parameters",
        "Parameters",
        vec![
            ("function", spec.name.as_str().into()),
            ("entity", spec.entity.as_str().into()),
            ("update", update_label(&settings.update).into()),
            ("time_gap_s", req.time_gap_s.into()),
            ("latency_s", req.latency_s.into()),
            ("realtime_required", spec.realtime_required.into()),
            ("confidence", confidence_label(&req.confidence).into()),
            ("confidence_probability", req.confidence.probability().into()),
            ("static_basis", basis_label(req.basis).into()),
        ],
    ));
    let device = req.accuracy_budget_at_device_frame.as_ref();
    let rows = spec
        .dof
        .axes()
        .map(|axis| {
            vec![
                axis.name().into(),
                axis.unit().into(),
                margin_cell(&req.requirement_margin, axis),
                margin_cell(&req.time_gap_margin, axis),
                margin_cell(&req.time_delay_margin, axis),
                margin_cell(&req.accuracy_budget_at_interest_frame, axis),
                device.map(|d| margin_cell(d, axis)).unwrap_or(Cell::Missing),
            ]
        })
        .collect();
    report.sections.push(Section::table(
        "requirements",
        "Data requirements per axis",
        &["axis", "unit", "R", "TG", "TD", "P_interest", "P_device"],
        rows,
        Layout::Rows,
    ));
    report.warnings = advisory_notes(spec);
    Ok(Outcome { report, exit_code: EXIT_OK })
}

/// Suitability of every configured ILS. Exit code 2 when any is unsuitable.
pub fn cmd_check(cfg: &ProjectConfig) -> Result<Outcome, CommandError> {
    if cfg.ils.is_empty() {
        return Err(CommandError::MissingSection("ils"));
    }
    let spec = &cfg.function;
    let mut report = Report::new("check", cfg.to_json());
    let mut summary = Vec::new();
    let mut details = Vec::new();
    let mut all_feasible = true;
    for ils in &cfg.ils {
        let a = assess_ils(spec, ils)?;
        let v = &a.verdict;
        all_feasible &= v.feasible;
        let min_slack = v.per_axis_slack.get(v.binding_axis).unwrap_or(0.0);
        summary.push(vec![
            ils.name.as_str().into(),
            v.feasible.into(),
            v.binding_axis.name().into(),
            min_slack.into(),
        ]);
        let rows = spec
            .dof
            .axes()
            .map(|axis| {
                vec![
                    axis.name().into(),
                    axis.unit().into(),
                    margin_cell(&a.requirement_margin, axis),
                    margin_cell(&a.static_uncertainty, axis),
                    margin_cell(&a.time_gap_margin, axis),
                    margin_cell(&a.time_delay_margin, axis),
                    margin_cell(&a.uncertainty_space, axis),
                    v.per_axis_slack.get(axis).map(Cell::Num).unwrap_or(Cell::Missing),
                ]
            })
            .collect();
        details.push(Section::table(
            &format!("ils:{}", ils.name),
            &format!("{} ({}, latency {} s)", ils.name, update_label(&ils.update), ils.latency_s),
            &["axis", "unit", "R", "U_s", "TG", "TD", "U", "slack"],
            rows,
            Layout::Rows,
        ));
    }
    report.sections.push(Section::table(
        "verdicts",
        "Verdicts",
        &["ils", "feasible", "binding_axis", "min_slack"],
        summary,
        Layout::Rows,
    ));
    report.sections.extend(details);
    report.warnings = advisory_notes(spec);
    let exit_code = if all_feasible { EXIT_OK } else { EXIT_INFEASIBLE };
    Ok(Outcome { report, exit_code })
}

/// Accuracy budget for each time gap of the configured grid.
pub fn cmd_tabulate(cfg: &ProjectConfig) -> Result<Outcome, CommandError> {
    let grid = cfg.tabulate.ok_or(CommandError::MissingSection("tabulate"))?;
    let spec = &cfg.function;
    let r = spec.requirement_margin()?;
    let v = spec.velocity()?;
    let latency = cfg.derive.as_ref().map_or(0.0, |d| d.latency_s);
    let t_delay = if spec.realtime_required { latency } else { 0.0 };
    let grid = linear_grid(grid.start_s, grid.stop_s, grid.step_s)?;
    let table = tabulate_tradeoff(&r, &v, &grid, t_delay)?;

    let mut headers = vec!["t_g_s".to_string()];
    headers.extend(spec.dof.axes().map(|a| match a {
        Axis::Yaw => "Pyaw_rad".to_string(),
        _ => format!("P{}_m", a.name()),
    }));
    let rows: Vec<Vec<Cell>> = table
        .columns
        .iter()
        .map(|col| {
            let mut row = vec![Cell::Num(col.t_gap_s)];
            row.extend(spec.dof.axes().map(|a| match col.cells.get(a) {
                Some(BudgetCell::Budget(b)) => Cell::Num(b),
                Some(BudgetCell::Infeasible) => Cell::text("infeasible"),
                None => Cell::Missing,
            }));
            row
        })
        .collect();

    let mut report = Report::new("tabulate", cfg.to_json());
    report.sections.push(Section::fields(
        "parameters",
        "Parameters",
        vec![
            ("function", spec.name.as_str().into()),
            ("t_delay_s", t_delay.into()),
            ("confidence", confidence_label(&spec.confidence).into()),
            ("confidence_probability", spec.confidence.probability().into()),
        ],
    ));
    let header_refs: Vec<&str> = headers.iter().map(String::as_str).collect();
    report.sections.push(Section::table(
        "tradeoff",
        "Static accuracy percentile per time gap",
        &header_refs,
        rows,
        Layout::Transposed,
    ));
    report.warnings = advisory_notes(spec);
    Ok(Outcome { report, exit_code: EXIT_OK })
}

struct SimSetup {
    percentiles: PerAxis<f64>,
    update: UpdateModel,
    latency_s: f64,
    source_label: String,
}

fn sim_setup(cfg: &ProjectConfig, sim: &SimulationSettings) -> Result<SimSetup, CommandError> {
    let spec = &cfg.function;
    match &sim.source {
        NoiseSource::Derived { update, latency_s } => {
            let req = derive_requirements(spec, update, *latency_s, None)?;
            let budget = req.accuracy_budget_at_device_frame.unwrap_or(req.accuracy_budget_at_interest_frame);
            Ok(SimSetup {
                percentiles: *budget.values(),
                update: *update,
                latency_s: *latency_s,
                source_label: "derived budgets".into(),
            })
        }
        NoiseSource::Ils(i) => {
            let ils = &cfg.ils[*i];
            let p = ils.percentiles_for(spec.reference_basis).map_err(EngineError::from)?;
            Ok(SimSetup {
                percentiles: *p.values(),
                update: ils.update,
                latency_s: ils.latency_s,
                source_label: format!("ils {}", ils.name),
            })
        }
    }
}

/// Runs the configured simulation. Exit code 3 when a per-axis false rate
/// exceeds its confidence bound.
pub fn cmd_simulate(cfg: &ProjectConfig) -> Result<Outcome, CommandError> {
    let sim = cfg.simulation.as_ref().ok_or(CommandError::MissingSection("simulation"))?;
    let spec = &cfg.function;
    let setup = sim_setup(cfg, sim)?;
    let confidence = spec.confidence.probability();
    let noise = NoiseModel::calibrated(&setup.percentiles, confidence)?;

    let result: SimReport = match sim.trajectory {
        TrajectoryMode::WorstCase => worst_case_experiment(
            spec,
            &setup.percentiles,
            &setup.update,
            setup.latency_s,
            sim.cycles,
            sim.trials,
            sim.seed,
        )?,
        TrajectoryMode::Random => {
            let mut rng = ChaCha8Rng::seed_from_u64(sim.seed);
            rng.set_stream(TRAJECTORY_STREAM);
            let trajectory = random_motion_trajectory(spec, sim.waypoints as usize, 1.0, &mut rng)?;
            run_simulation(&SimConfig {
                function: spec.clone(),
                noise,
                update: setup.update,
                latency_s: if spec.realtime_required { setup.latency_s } else { 0.0 },
                trajectory,
                trials: sim.trials,
                seed: sim.seed,
            })?
        }
    };

    let mut report = Report::new("simulate", cfg.to_json());
    report.sections.push(Section::fields(
        "simulation",
        "Simulation",
        vec![
            ("trajectory", match sim.trajectory {
                TrajectoryMode::WorstCase => "worst_case",
                TrajectoryMode::Random => "random",
            }
            .into()),
            ("noise_source", setup.source_label.into()),
            ("update", update_label(&setup.update).into()),
            ("latency_s", setup.latency_s.into()),
            ("trials", result.trials.into()),
            ("seed", result.seed.into()),
            ("updates_total", result.updates_total.into()),
            ("updates_classified", result.updates_classified.into()),
            ("confidence_target", result.confidence_target.into()),
            ("target_false_rate", spec.confidence.false_rate().into()),
            ("false_outside_joint", result.false_outside_joint.into()),
            ("joint_union_bound", result.joint_union_bound.into()),
            ("pass", result.pass.into()),
        ],
    ));
    let rows = spec
        .dof
        .axes()
        .map(|axis| {
            let rate = result.false_outside_per_axis.get(axis).unwrap_or(0.0);
            let threshold = result.threshold(axis).unwrap_or(f64::NAN);
            vec![
                axis.name().into(),
                setup.percentiles.get(axis).map(Cell::Num).unwrap_or(Cell::Missing),
                noise.sigma(axis).into(),
                result.false_outside_count.get(axis).unwrap_or(0).into(),
                rate.into(),
                result.standard_error_per_axis.get(axis).unwrap_or(0.0).into(),
                threshold.into(),
                (rate <= threshold).into(),
            ]
        })
        .collect();
    report.sections.push(Section::table(
        "per_axis",
        "False-outside statistics per axis",
        &["axis", "percentile", "noise_sigma", "false_count", "false_rate", "standard_error", "threshold", "pass"],
        rows,
        Layout::Rows,
    ));
    report.warnings = advisory_notes(spec);
    let exit_code = if result.pass { EXIT_OK } else { EXIT_SIMULATION_FAILED };
    Ok(Outcome { report, exit_code })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::config::parse_config;
    use crate::report::{render_report, Format, SectionContent};

    const PALLET: &str = include_str!("../../../fixtures/pallet_booking.json");
    const WEAK: &str = include_str!("../../../fixtures/pallet_booking_underperforming.json");

    fn pallet() -> ProjectConfig {
        parse_config(PALLET.as_bytes()).unwrap()
    }

    fn table_rows(report: &Report, name: &str) -> Vec<Vec<Cell>> {
        match &report.section(name).unwrap().content {
            SectionContent::Table { rows, .. } => rows.clone(),
            SectionContent::Fields(_) => panic!("not a table"),
        }
    }

    #[test]
    fn derive_reports_budgets() {
        let out = cmd_derive(&pallet()).unwrap();
        assert_eq!(out.exit_code, EXIT_OK);
        let rows = table_rows(&out.report, "requirements");
        let Cell::Num(px) = rows[0][5] else { panic!() };
        let Cell::Num(py) = rows[1][5] else { panic!() };
        assert!((px - 0.25).abs() < 1e-12 && (py - 0.15).abs() < 1e-12);
        assert_eq!(out.report.warnings.len(), 1);
    }

    #[test]
    fn check_exit_codes() {
        assert_eq!(cmd_check(&pallet()).unwrap().exit_code, EXIT_OK);
        let weak = parse_config(WEAK.as_bytes()).unwrap();
        let out = cmd_check(&weak).unwrap();
        assert_eq!(out.exit_code, EXIT_INFEASIBLE);
        let rows = table_rows(&out.report, "verdicts");
        assert_eq!(rows[0][1], Cell::Bool(false));
        assert_eq!(rows[0][2], Cell::text("y"));
    }

    #[test]
    fn tabulate_csv_header() {
        let out = cmd_tabulate(&pallet()).unwrap();
        let csv = String::from_utf8(render_report(&out.report, Format::Csv)).unwrap();
        assert!(csv.contains("t_g_s,Px_m,Py_m,Pz_m\n0.1,0.29,0.43,0.14\n"));
        assert!(csv.contains("0.6,0.24,0.08,0.09\n"));
    }

    #[test]
    fn missing_sections() {
        let mut cfg = pallet();
        cfg.derive = None;
        cfg.tabulate = None;
        cfg.simulation = None;
        cfg.ils.clear();
        assert!(matches!(cmd_derive(&cfg), Err(CommandError::MissingSection("derive"))));
        assert!(matches!(cmd_check(&cfg), Err(CommandError::MissingSection("ils"))));
        assert!(matches!(cmd_tabulate(&cfg), Err(CommandError::MissingSection("tabulate"))));
        assert!(matches!(cmd_simulate(&cfg), Err(CommandError::MissingSection("simulation"))));
        assert!(apply_overrides(&mut cfg, Some(1), None).is_err());
    }

    #[test]
    fn overrides_reach_the_echo() {
        let mut cfg = pallet();
        apply_overrides(&mut cfg, Some(7), Some(3)).unwrap();
        let out = cmd_simulate(&cfg).unwrap();
        assert_eq!(out.report.input["simulation"]["seed"], 7);
        assert_eq!(out.report.input["simulation"]["trials"], 3);
    }

    #[test]
    fn simulate_random_mode() {
        let mut cfg = pallet();
        let sim = cfg.simulation.as_mut().unwrap();
        sim.trajectory = TrajectoryMode::Random;
        sim.trials = 20;
        let out = cmd_simulate(&cfg).unwrap();
        assert_eq!(out.exit_code, EXIT_OK);
    }

    #[test]
    fn no_reference_note_for_other_inputs() {
        let mut cfg = pallet();
        cfg.function.max_velocity = cfg.function.max_velocity.scaled(0.5).unwrap();
        assert!(advisory_notes(&cfg.function).is_empty());
    }
}
