//! Subcommand implementations: glue between the configuration, the library,
//! and the report writers.

use serde::Serialize;

use misreport::bounds::DEFAULT_TAU;
use misreport::{
    bounds_two_instruments, brute_force_prob_bounds, build_hypercubes, check_testable_implications,
    compute_bounds, construct_sharpness_witness, default_cube_target, estimate_identified_set,
    fit_has, generate, population, population_moment_validity, prepare_moment_data,
    run_monte_carlo, two_instrument_diagnostics, verify_witness, AssumptionSet, Binning,
    BoundFlag, BoundSide, CondProbTable, Design, DgpConfig, ErrorLaw, HasEstimate, IdentifiedSet,
    InstrumentMode, MCReport, Method, MonteCarloConfig, OracleConfig, Population, ProbBounds,
    Restriction, Sample, TestableReport,
};

use crate::config::{DataConfig, Resolved};
use crate::io::{self, fmt_f64, fmt_short};
use crate::{Failure, Scenario};

fn opt_f64(v: Option<f64>) -> String {
    v.map(fmt_f64).unwrap_or_default()
}

fn serde_name<T: Serialize>(value: &T) -> String {
    match serde_json::to_value(value) {
        Ok(serde_json::Value::String(s)) => s,
        Ok(other) => other.to_string(),
        Err(_) => String::new(),
    }
}

fn flag_list(flags: &[BoundFlag]) -> String {
    flags.iter().map(serde_name).collect::<Vec<_>>().join("|")
}

/// Estimates the conditional-probability table a bounds run needs.
fn estimated_table(cfg: &Resolved, sample: &Sample) -> Result<CondProbTable, Failure> {
    let binning = Binning::from_sample(sample, cfg.file.binning.cells_per_dim)?;
    Ok(CondProbTable::estimate(sample, &binning, cfg.file.binning.min_cell_count)?)
}

#[derive(Serialize)]
struct BoundsReport<'a> {
    seed: u64,
    n: usize,
    /// Table slices excluded for sparsity.
    n_excluded: usize,
    method: Method,
    assumptions: AssumptionSet,
    rows: &'a [misreport::BoundRow],
    undefined_contexts: usize,
    testable: &'a TestableReport,
}

pub fn bounds(cfg: &Resolved) -> Result<(), Failure> {
    let data_cfg = cfg.data()?;
    let sample = io::load_sample(data_cfg, &cfg.data_path()?)?;
    let table = estimated_table(cfg, &sample)?;
    let assumptions = cfg.file.assumptions.to_assumptions()?;

    let bounds = match (assumptions.instruments, cfg.file.assumptions.tau) {
        (InstrumentMode::ZAndW, Some(tau)) => {
            let diag = two_instrument_diagnostics(&table, tau)?;
            bounds_two_instruments(&table, &diag)?
        }
        _ => compute_bounds(&table, &assumptions)?,
    };
    let tol = cfg.file.assumptions.tau.unwrap_or(DEFAULT_TAU);
    let testable = check_testable_implications(&bounds, &table, &assumptions, tol)?;

    let header = [
        "cell", "z", "w", "lower", "upper", "binding_lower", "binding_upper", "flags", "method",
        "restriction",
    ];
    let method = serde_name(&bounds.method);
    let restriction = assumptions.restriction.label();
    let rows: Vec<Vec<String>> = bounds
        .rows
        .iter()
        .map(|r| {
            vec![
                r.cell.to_string(),
                opt_f64(r.z),
                opt_f64(r.w),
                fmt_f64(r.lower),
                fmt_f64(r.upper),
                opt_f64(r.binding_lower),
                opt_f64(r.binding_upper),
                flag_list(&r.flags),
                method.clone(),
                restriction.clone(),
            ]
        })
        .collect();

    let pretty: Vec<Vec<String>> = bounds
        .rows
        .iter()
        .map(|r| {
            vec![
                r.cell.to_string(),
                r.z.map(|v| v.to_string()).unwrap_or_default(),
                r.w.map(|v| v.to_string()).unwrap_or_default(),
                format!("[{}, {}]", fmt_short(r.lower), fmt_short(r.upper)),
                flag_list(&r.flags),
            ]
        })
        .collect();
    print!("{}", io::text_table(&["cell", "z", "w", "interval", "flags"], &pretty));
    println!(
        "method {method}, restriction {restriction}, {} undefined contexts, {} excluded slices",
        bounds.undefined_contexts,
        table.n_excluded()
    );
    for check in &testable.checks_run {
        let violations: Vec<&misreport::bounds::Violation> =
            testable.violations.iter().filter(|v| &v.check == check).collect();
        if violations.is_empty() {
            println!("testable implication {check}: ok");
        } else {
            println!("testable implication {check}: {} violations", violations.len());
            for v in violations {
                println!("  cell {} z {:?}: {}", v.cell, v.z, v.detail);
            }
        }
    }

    if cfg.wants("csv") {
        io::write_csv(&cfg.out_dir.join("bounds.csv"), &header, &rows)?;
    }
    if cfg.wants("json") {
        let report = BoundsReport {
            seed: cfg.seed,
            n: sample.n(),
            n_excluded: table.n_excluded(),
            method: bounds.method,
            assumptions,
            rows: &bounds.rows,
            undefined_contexts: bounds.undefined_contexts,
            testable: &testable,
        };
        io::write_json(&cfg.out_dir.join("bounds.json"), &report)?;
    }
    Ok(())
}

#[derive(Serialize)]
struct CoordinateEstimate {
    coordinate: usize,
    label: String,
    role: &'static str,
    lower: Option<f64>,
    upper: Option<f64>,
    point: Option<f64>,
}

#[derive(Serialize)]
struct EstimateReport<'a> {
    seed: u64,
    n: usize,
    n_excluded: usize,
    grid_points: usize,
    min_q: f64,
    cutoff: f64,
    kappa: f64,
    n_accepted: usize,
    coordinates: &'a [CoordinateEstimate],
    mle: Option<&'a HasEstimate>,
    note: &'a str,
}

const MLE_NOTE: &str = "the MLE is reported on its natural scale; only signs and \
                        coefficient ratios are comparable with the normalized set estimates";

fn coordinate_label(k: usize, data: &DataConfig, include_z: bool) -> String {
    if k == 0 {
        "intercept".to_string()
    } else if k <= data.x.len() {
        data.x[k - 1].clone()
    } else if include_z {
        data.z.clone().unwrap_or_else(|| "z".to_string())
    } else {
        format!("coordinate {k}")
    }
}

pub fn estimate(cfg: &Resolved) -> Result<(), Failure> {
    let data_cfg = cfg.data()?;
    let sample = io::load_sample(data_cfg, &cfg.data_path()?)?;
    let assumptions = cfg.file.assumptions.to_assumptions()?;
    let mode = assumptions.instruments;
    if mode == InstrumentMode::ZAndW {
        return Err(Failure::config(
            "estimation conditions on one instrument at a time; set instruments = \"z\" or \"w\"",
        ));
    }
    let include_z = sample.z().is_some();
    let dim = 1 + data_cfg.x.len() + usize::from(include_z);
    let model = cfg.file.model.to_spec(dim)?;
    let binning = Binning::from_sample(&sample, cfg.file.binning.cells_per_dim)?;
    let data =
        prepare_moment_data(&sample, &binning, mode, include_z, cfg.file.binning.min_cell_count)?;
    let cube_target =
        cfg.file.binning.cube_target.unwrap_or_else(|| default_cube_target(sample.n()));
    let cubes = build_hypercubes(&sample, cube_target, mode)?;
    let set: IdentifiedSet =
        estimate_identified_set(&data, &model, &cubes, &cfg.grid()?, cfg.cutoff())?;
    let mle = if cfg.file.estimate.with_mle {
        Some(fit_has(&sample, &cfg.file.model.link.to_link(), cfg.seed)?)
    } else {
        None
    };

    let mut coordinates = Vec::new();
    for (pos, k) in model.free.iter().copied().enumerate() {
        coordinates.push(CoordinateEstimate {
            coordinate: k,
            label: coordinate_label(k, data_cfg, include_z),
            role: "free",
            lower: Some(set.endpoints[pos].0),
            upper: Some(set.endpoints[pos].1),
            point: None,
        });
    }
    coordinates.push(CoordinateEstimate {
        coordinate: model.normalization.coordinate,
        label: coordinate_label(model.normalization.coordinate, data_cfg, include_z),
        role: "normalized",
        lower: None,
        upper: None,
        point: Some(model.normalization.value),
    });
    coordinates.sort_by_key(|c| c.coordinate);

    let header = ["coordinate", "label", "estimator", "lower", "upper", "point"];
    let mut rows = Vec::new();
    let mut pretty = Vec::new();
    for c in &coordinates {
        let estimator = if c.role == "free" { "set" } else { "normalized" };
        rows.push(vec![
            c.coordinate.to_string(),
            c.label.clone(),
            estimator.to_string(),
            opt_f64(c.lower),
            opt_f64(c.upper),
            opt_f64(c.point),
        ]);
        let shown = match c.role {
            "free" => format!("[{}, {}]", fmt_short(c.lower.unwrap()), fmt_short(c.upper.unwrap())),
            _ => format!("{} (normalized)", fmt_short(c.point.unwrap())),
        };
        let mle_shown = mle
            .as_ref()
            .map(|m| fmt_short(m.beta[c.coordinate]))
            .unwrap_or_default();
        pretty.push(vec![c.coordinate.to_string(), c.label.clone(), shown, mle_shown]);
    }
    if let Some(m) = &mle {
        for (label, value) in [("alpha0", m.alpha0), ("alpha1", m.alpha1)] {
            rows.push(vec![
                String::new(),
                label.to_string(),
                "mle".to_string(),
                String::new(),
                String::new(),
                fmt_f64(value),
            ]);
            pretty.push(vec![String::new(), label.to_string(), String::new(), fmt_short(value)]);
        }
        for c in &coordinates {
            rows.push(vec![
                c.coordinate.to_string(),
                c.label.clone(),
                "mle".to_string(),
                String::new(),
                String::new(),
                fmt_f64(m.beta[c.coordinate]),
            ]);
        }
        // The mle regresses on every observed column, so its index can run
        // past the structural coordinates; the overhang is the w column.
        for (k, value) in m.beta.iter().copied().enumerate().skip(dim) {
            let label = data_cfg.w.clone().unwrap_or_else(|| "w".to_string());
            rows.push(vec![
                k.to_string(),
                label.clone(),
                "mle".to_string(),
                String::new(),
                String::new(),
                fmt_f64(value),
            ]);
            pretty.push(vec![k.to_string(), label, String::new(), fmt_short(value)]);
        }
    }

    print!("{}", io::text_table(&["coordinate", "label", "set estimate", "mle"], &pretty));
    println!(
        "min Q {:.6}, cutoff {:.6}, {} of {} grid points accepted, {} observations excluded",
        set.min_q,
        set.cutoff,
        set.n_accepted,
        set.evaluations.len(),
        data.n_excluded()
    );
    if mle.is_some() {
        println!("note: {MLE_NOTE}");
    }

    if cfg.wants("csv") {
        io::write_csv(&cfg.out_dir.join("estimate.csv"), &header, &rows)?;
    }
    if cfg.wants("json") {
        let report = EstimateReport {
            seed: cfg.seed,
            n: sample.n(),
            n_excluded: data.n_excluded(),
            grid_points: set.evaluations.len(),
            min_q: set.min_q,
            cutoff: set.cutoff,
            kappa: set.kappa,
            n_accepted: set.n_accepted,
            coordinates: &coordinates,
            mle: mle.as_ref(),
            note: MLE_NOTE,
        };
        io::write_json(&cfg.out_dir.join("estimate.json"), &report)?;
    }
    Ok(())
}

#[derive(Serialize)]
struct SimulateReport<'a> {
    design: Design,
    error: ErrorLaw,
    n: usize,
    replications: usize,
    base_seed: u64,
    report: &'a MCReport,
    errors: &'a [String],
}

pub fn simulate(cfg: &Resolved) -> Result<(), Failure> {
    let sim_cfg = cfg
        .file
        .simulate
        .ok_or_else(|| Failure::config("config has no [simulate] section"))?;
    let design = sim_cfg.design.to_design();
    let error = sim_cfg.error.to_error();
    let mc = MonteCarloConfig {
        design,
        error,
        n: sim_cfg.n,
        replications: sim_cfg.replications,
        base_seed: cfg.seed,
        cells_per_dim: cfg.file.binning.cells_per_dim,
        min_cell_count: cfg.file.binning.min_cell_count,
        cube_target: cfg.file.binning.cube_target.unwrap_or_else(|| default_cube_target(sim_cfg.n)),
        grid: cfg.grid()?,
        cutoff: cfg.cutoff(),
    };
    let out = run_monte_carlo(&mc)?;
    for err in &out.errors {
        eprintln!("warning: {err}");
    }

    let header = ["estimator", "coordinate", "rmse", "mad", "n_used"];
    let mut rows = Vec::new();
    let mut pretty = Vec::new();
    for row in &out.report.rows {
        rows.push(vec![
            row.estimator.clone(),
            row.coordinate.to_string(),
            fmt_f64(row.metrics.rmse),
            fmt_f64(row.metrics.mad),
            row.metrics.n_used.to_string(),
        ]);
        pretty.push(vec![
            row.estimator.clone(),
            row.coordinate.to_string(),
            fmt_short(row.metrics.rmse),
            fmt_short(row.metrics.mad),
            row.metrics.n_used.to_string(),
        ]);
    }
    print!("{}", io::text_table(&header, &pretty));
    println!(
        "{} replications, {} failed, design {}, error {}, n {}",
        out.report.replications,
        out.report.failures,
        serde_name(&design),
        serde_name(&error),
        sim_cfg.n
    );

    if cfg.wants("csv") {
        io::write_csv(&cfg.out_dir.join("mc.csv"), &header, &rows)?;
    }
    if cfg.wants("json") {
        let report = SimulateReport {
            design,
            error,
            n: sim_cfg.n,
            replications: sim_cfg.replications,
            base_seed: cfg.seed,
            report: &out.report,
            errors: &out.errors,
        };
        io::write_json(&cfg.out_dir.join("mc.json"), &report)?;
    }
    Ok(())
}

#[derive(Serialize)]
struct CheckResult {
    name: String,
    passed: bool,
    detail: String,
}

#[derive(Serialize)]
struct VerifyReport {
    scenario: String,
    passed: bool,
    checks: Vec<CheckResult>,
}

fn run_check<F>(checks: &mut Vec<CheckResult>, name: &str, body: F)
where
    F: FnOnce() -> Result<(), String>,
{
    let (passed, detail) = match body() {
        Ok(()) => (true, String::new()),
        Err(detail) => (false, detail),
    };
    checks.push(CheckResult { name: name.to_string(), passed, detail });
}

fn err_str(e: impl std::fmt::Display) -> String {
    e.to_string()
}

/// Closed-form bounds must agree with the brute-force oracle on a table
/// whose assumptions make them sharp.
fn oracle_agrees(table: &CondProbTable, assumptions: &AssumptionSet) -> Result<(), String> {
    let bounds = compute_bounds(table, assumptions).map_err(err_str)?;
    let oracle =
        brute_force_prob_bounds(table, assumptions, &OracleConfig::default()).map_err(err_str)?;
    let slack = 2.0 * oracle.delta;
    for row in &bounds.rows {
        let orow = oracle
            .row(row.cell, row.z)
            .ok_or_else(|| format!("oracle has no row for cell {} z {:?}", row.cell, row.z))?;
        let Some((lo, hi)) = orow.range else {
            return Err(format!("oracle finds cell {} z {:?} infeasible", row.cell, row.z));
        };
        if (lo - row.lower).abs() > slack || (hi - row.upper).abs() > slack {
            return Err(format!(
                "cell {} z {:?}: closed form [{:.4}, {:.4}] vs oracle [{:.4}, {:.4}]",
                row.cell, row.z, row.lower, row.upper, lo, hi
            ));
        }
    }
    Ok(())
}

fn witness_attains(table: &CondProbTable, assumptions: &AssumptionSet) -> Result<(), String> {
    for side in [BoundSide::Lower, BoundSide::Upper] {
        let witness =
            construct_sharpness_witness(table, 0, assumptions, side).map_err(err_str)?;
        let report = verify_witness(table, assumptions, &witness, 1e-9).map_err(err_str)?;
        if !report.ok() {
            return Err(format!("{side:?}: {}", report.failures.join("; ")));
        }
        if report.max_mixture_error > 1e-12 {
            return Err(format!(
                "{side:?}: witness misses the table by {:.3e}",
                report.max_mixture_error
            ));
        }
    }
    Ok(())
}

fn truth_inside(pop: &Population, bounds: &ProbBounds) -> Result<(), String> {
    let z_levels = pop.table.z_levels();
    let nz = z_levels.len().max(1);
    for row in &bounds.rows {
        let zi = match row.z {
            Some(level) => z_levels
                .iter()
                .position(|l| *l == level)
                .ok_or_else(|| format!("unknown z level {level}"))?,
            None => 0,
        };
        let truth = pop.true_prob[row.cell * nz + zi];
        if !(row.lower <= truth + 1e-10 && truth <= row.upper + 1e-10) {
            return Err(format!(
                "cell {} z {:?}: true probability {:.6} outside [{:.6}, {:.6}]",
                row.cell, row.z, truth, row.lower, row.upper
            ));
        }
    }
    Ok(())
}

fn worked_z_table() -> Result<CondProbTable, String> {
    CondProbTable::from_probs(1, vec![0.0, 1.0], vec![], &[0.3, 0.6]).map_err(err_str)
}

fn worked_w_table() -> Result<CondProbTable, String> {
    CondProbTable::from_probs(1, vec![], vec![1.0, 2.0], &[0.8, 0.4]).map_err(err_str)
}

fn worked_zw_table() -> Result<CondProbTable, String> {
    CondProbTable::from_probs(1, vec![0.0, 1.0], vec![1.0, 2.0], &[0.52, 0.56, 0.31, 0.305])
        .map_err(err_str)
}

fn default_battery(cfg: &Resolved, checks: &mut Vec<CheckResult>) {
    run_check(checks, "bounds-match-oracle-instrument-z", || {
        oracle_agrees(&worked_z_table()?, &AssumptionSet::unrestricted(InstrumentMode::ZOnly))
    });
    run_check(checks, "bounds-match-oracle-instrument-z-one-sided", || {
        oracle_agrees(
            &worked_z_table()?,
            &AssumptionSet::with_restriction(
                InstrumentMode::ZOnly,
                Restriction::NoFalsePositives,
            ),
        )
    });
    run_check(checks, "bounds-match-oracle-instrument-w", || {
        oracle_agrees(&worked_w_table()?, &AssumptionSet::unrestricted(InstrumentMode::WOnly))
    });
    run_check(checks, "bounds-match-oracle-two-instrument", || {
        oracle_agrees(&worked_zw_table()?, &AssumptionSet::unrestricted(InstrumentMode::ZAndW))
    });

    run_check(checks, "witness-reproduces-table", || {
        witness_attains(&worked_z_table()?, &AssumptionSet::unrestricted(InstrumentMode::ZOnly))?;
        witness_attains(&worked_w_table()?, &AssumptionSet::unrestricted(InstrumentMode::WOnly))?;
        let increasing =
            CondProbTable::from_probs(1, vec![], vec![1.0, 2.0, 3.0], &[0.4, 0.55, 0.8])
                .map_err(err_str)?;
        witness_attains(
            &increasing,
            &AssumptionSet::with_restriction(
                InstrumentMode::WOnly,
                Restriction::NoFalsePositives,
            ),
        )?;
        witness_attains(&worked_zw_table()?, &AssumptionSet::unrestricted(InstrumentMode::ZAndW))
    });

    run_check(checks, "population-containment", || {
        let pop = population(Design::InstrumentZ, ErrorLaw::Normal, 2).map_err(err_str)?;
        for assumptions in [
            AssumptionSet::unrestricted(InstrumentMode::ZOnly),
            AssumptionSet::with_restriction(
                InstrumentMode::ZOnly,
                Restriction::Capped { fp_cap: 0.4, fn_cap: 0.2 },
            ),
            AssumptionSet::with_restriction(
                InstrumentMode::ZOnly,
                Restriction::FalseNegativesSmaller,
            ),
        ] {
            let bounds = compute_bounds(&pop.table, &assumptions).map_err(err_str)?;
            truth_inside(&pop, &bounds)?;
        }
        let pop = population(Design::InstrumentW, ErrorLaw::Normal, 2).map_err(err_str)?;
        for assumptions in [
            AssumptionSet::unrestricted(InstrumentMode::WOnly),
            AssumptionSet::with_restriction(
                InstrumentMode::WOnly,
                Restriction::Capped { fp_cap: 1.0 / 1.3, fn_cap: 0.2 },
            ),
        ] {
            let bounds = compute_bounds(&pop.table, &assumptions).map_err(err_str)?;
            truth_inside(&pop, &bounds)?;
        }
        Ok(())
    });

    run_check(checks, "two-instrument-tighter-than-intersection", || {
        let pop = population(Design::TwoInstrument, ErrorLaw::Normal, 2).map_err(err_str)?;
        let both = compute_bounds(&pop.table, &AssumptionSet::unrestricted(InstrumentMode::ZAndW))
            .map_err(err_str)?;
        let z_only =
            compute_bounds(&pop.table, &AssumptionSet::unrestricted(InstrumentMode::ZOnly))
                .map_err(err_str)?;
        let w_only =
            compute_bounds(&pop.table, &AssumptionSet::unrestricted(InstrumentMode::WOnly))
                .map_err(err_str)?;
        truth_inside(&pop, &both)?;
        for row in &both.rows {
            let zr = z_only
                .row(row.cell, row.z)
                .ok_or_else(|| "missing single-instrument row".to_string())?;
            let wr = w_only
                .row(row.cell, row.z)
                .ok_or_else(|| "missing single-instrument row".to_string())?;
            if row.lower < zr.lower.max(wr.lower) - 1e-10
                || row.upper > zr.upper.min(wr.upper) + 1e-10
            {
                return Err(format!(
                    "cell {} z {:?}: joint interval wider than the intersection",
                    row.cell, row.z
                ));
            }
        }
        Ok(())
    });

    run_check(checks, "population-moment-validity", || {
        for design in [Design::InstrumentZ, Design::InstrumentW] {
            for error in [ErrorLaw::Normal, ErrorLaw::Cauchy] {
                let report = population_moment_validity(design, error, 2).map_err(err_str)?;
                if report.min_value < -1e-8 {
                    return Err(format!(
                        "worst population moment {:.3e} under {} design, {} errors",
                        report.min_value,
                        serde_name(&design),
                        serde_name(&error)
                    ));
                }
            }
        }
        Ok(())
    });

    run_check(checks, "testable-implications", || {
        let increasing =
            CondProbTable::from_probs(1, vec![], vec![1.0, 2.0, 3.0], &[0.4, 0.55, 0.8])
                .map_err(err_str)?;
        let assumptions = AssumptionSet::with_restriction(
            InstrumentMode::WOnly,
            Restriction::NoFalsePositives,
        );
        let bounds = compute_bounds(&increasing, &assumptions).map_err(err_str)?;
        let report =
            check_testable_implications(&bounds, &increasing, &assumptions, 0.0).map_err(err_str)?;
        if !report.passed() {
            return Err(format!("{} unexpected violations", report.violations.len()));
        }

        let sample = generate(&DgpConfig {
            design: Design::InstrumentW,
            error: ErrorLaw::Normal,
            n: 2000,
            seed: cfg.seed,
        })
        .map_err(err_str)?;
        let binning = Binning::from_sample(&sample, 3).map_err(err_str)?;
        let table = CondProbTable::estimate(&sample, &binning, 5).map_err(err_str)?;
        let assumptions = AssumptionSet::unrestricted(InstrumentMode::WOnly);
        let bounds = compute_bounds(&table, &assumptions).map_err(err_str)?;
        let report = check_testable_implications(&bounds, &table, &assumptions, DEFAULT_TAU)
            .map_err(err_str)?;
        if !report.passed() {
            return Err(format!(
                "{} violations on an assumption-satisfying sample",
                report.violations.len()
            ));
        }
        Ok(())
    });

    if cfg.file.data.is_some() {
        run_check(checks, "data-testable-implications", || {
            let data_cfg = cfg.data().map_err(|f| f.message.clone())?;
            let path = cfg.data_path().map_err(|f| f.message.clone())?;
            let sample = io::load_sample(data_cfg, &path).map_err(|f| f.message.clone())?;
            let table = estimated_table(cfg, &sample).map_err(|f| f.message.clone())?;
            let assumptions =
                cfg.file.assumptions.to_assumptions().map_err(|f| f.message.clone())?;
            let bounds = compute_bounds(&table, &assumptions).map_err(err_str)?;
            let tol = cfg.file.assumptions.tau.unwrap_or(DEFAULT_TAU);
            let report = check_testable_implications(&bounds, &table, &assumptions, tol)
                .map_err(err_str)?;
            if !report.passed() {
                let named: Vec<&str> =
                    report.violations.iter().map(|v| v.check.as_str()).collect();
                return Err(format!("failed checks: {}", named.join(", ")));
            }
            Ok(())
        });
    }
}

/// Runs the testable implications on a sample whose misreporting grows
/// with W; detection is the expected outcome, so the named check fails.
fn violation_scenario(cfg: &Resolved, checks: &mut Vec<CheckResult>) -> Result<(), Failure> {
    let sample = generate(&DgpConfig {
        design: Design::MonotonicityViolation,
        error: ErrorLaw::Normal,
        n: 4000,
        seed: cfg.seed,
    })?;
    let binning = Binning::from_sample(&sample, 3)?;
    let table = CondProbTable::estimate(&sample, &binning, cfg.file.binning.min_cell_count)?;
    let assumptions = AssumptionSet::with_restriction(
        InstrumentMode::WOnly,
        Restriction::NoFalsePositives,
    );
    let bounds = compute_bounds(&table, &assumptions)?;
    let tol = cfg.file.assumptions.tau.unwrap_or(DEFAULT_TAU);
    let report = check_testable_implications(&bounds, &table, &assumptions, tol)?;
    for check in &report.checks_run {
        let violations: Vec<&misreport::bounds::Violation> =
            report.violations.iter().filter(|v| &v.check == check).collect();
        if let Some(first) = violations.first() {
            checks.push(CheckResult {
                name: check.clone(),
                passed: false,
                detail: format!(
                    "{} violations; cell {} z {:?}: {}",
                    violations.len(),
                    first.cell,
                    first.z,
                    first.detail
                ),
            });
        } else {
            checks.push(CheckResult { name: check.clone(), passed: true, detail: String::new() });
        }
    }
    Ok(())
}

pub fn verify(cfg: &Resolved, scenario: Scenario) -> Result<(), Failure> {
    let mut checks = Vec::new();
    match scenario {
        Scenario::Default => default_battery(cfg, &mut checks),
        Scenario::MonotonicityViolation => violation_scenario(cfg, &mut checks)?,
    }

    for check in &checks {
        if check.passed {
            println!("ok {}", check.name);
        } else {
            println!("FAIL {}: {}", check.name, check.detail);
        }
    }
    let failed: Vec<String> =
        checks.iter().filter(|c| !c.passed).map(|c| c.name.clone()).collect();

    let scenario_name = match scenario {
        Scenario::Default => "default",
        Scenario::MonotonicityViolation => "monotonicity-violation",
    };
    if cfg.wants("csv") {
        let rows: Vec<Vec<String>> = checks
            .iter()
            .map(|c| vec![c.name.clone(), c.passed.to_string(), c.detail.clone()])
            .collect();
        io::write_csv(&cfg.out_dir.join("verify.csv"), &["check", "passed", "detail"], &rows)?;
    }
    if cfg.wants("json") {
        let report = VerifyReport {
            scenario: scenario_name.to_string(),
            passed: failed.is_empty(),
            checks,
        };
        io::write_json(&cfg.out_dir.join("verify.json"), &report)?;
    }

    if !failed.is_empty() {
        return Err(Failure::verification(format!(
            "failed checks: {}",
            failed.join(", ")
        )));
    }
    println!("all checks passed");
    Ok(())
}
