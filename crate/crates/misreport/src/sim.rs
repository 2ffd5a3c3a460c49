//! Benchmark designs: data generation, population quantities computed by
//! quadrature, and the Monte Carlo driver comparing the set estimator with
//! the parametric misreporting MLE.

use rand::Rng;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Cauchy, Distribution, StandardNormal};
use rayon::prelude::*;
use serde::Serialize;

use crate::binning::Binning;
use crate::bounds::InstrumentMode;
use crate::data::{Latent, Sample};
use crate::error::{Error, Result};
use crate::has::fit_has;
use crate::link::Link;
use crate::moments::{
    build_hypercubes, moment_parametric, moment_semiparametric, prepare_moment_data, ModelKind,
    ModelSpec, Normalization,
};
use crate::quad;
use crate::setest::{estimate_identified_set, mc_metrics, BetaGrid, CutoffRule, MCReport, MCRow};
use crate::table::CondProbTable;

/// Outcome-instrument levels of the Z design.
pub const Z_LEVELS: [f64; 5] = [-1.0, -0.5, 0.0, 0.5, 1.0];
/// Reporting-instrument levels of the W design.
pub const W_LEVELS: [f64; 5] = [1.0, 2.0, 3.0, 4.0, 5.0];
/// Instrument levels of the combined design.
pub const COMBINED_Z_LEVELS: [f64; 2] = [0.0, 1.0];
pub const COMBINED_W_LEVELS: [f64; 2] = [1.0, 2.0];

/// Quadrature points per covariate cell for population quantities.
pub const QUAD_POINTS: usize = 10_000;

/// A benchmark data-generating design.
///
/// The covariate is always uniform on `[-1, 1]` and instruments are drawn
/// uniformly over their levels, independently of everything else.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum Design {
    /// Index `1 + 1.5 x - 1.5 z` with Z uniform on five levels; both
    /// misreporting rates vary with the covariate only.
    InstrumentZ,
    /// Index `1 + 1.5 x` with W uniform on five levels; the false-positive
    /// rate decays in W, the false-negative rate varies with the covariate.
    InstrumentW,
    /// Both instruments: Z enters the index, W scales the false-positive
    /// rate, and the false-negative rate is constant.
    TwoInstrument,
    /// One-sided misreporting (no false positives) whose false-negative
    /// rate grows with W, breaking the maintained monotone direction.
    /// Exists to exercise the testable implications.
    MonotonicityViolation,
}

impl Design {
    /// True index coefficients, intercept first.
    pub fn true_beta(&self) -> Vec<f64> {
        match self {
            Design::InstrumentZ | Design::TwoInstrument => vec![1.0, 1.5, -1.5],
            Design::InstrumentW | Design::MonotonicityViolation => vec![1.0, 1.5],
        }
    }

    /// Outcome-instrument levels; empty when the design has no Z.
    pub fn z_levels(&self) -> &'static [f64] {
        match self {
            Design::InstrumentZ => &Z_LEVELS,
            Design::TwoInstrument => &COMBINED_Z_LEVELS,
            Design::InstrumentW | Design::MonotonicityViolation => &[],
        }
    }

    /// Reporting-instrument levels; empty when the design has no W.
    pub fn w_levels(&self) -> &'static [f64] {
        match self {
            Design::InstrumentZ => &[],
            Design::InstrumentW | Design::MonotonicityViolation => &W_LEVELS,
            Design::TwoInstrument => &COMBINED_W_LEVELS,
        }
    }

    /// Linear index at covariate `x` and instrument level `z`; designs
    /// without an outcome instrument ignore `z`.
    pub fn index(&self, x: f64, z: f64) -> f64 {
        match self {
            Design::InstrumentZ | Design::TwoInstrument => 1.0 + 1.5 * x - 1.5 * z,
            Design::InstrumentW | Design::MonotonicityViolation => 1.0 + 1.5 * x,
        }
    }

    /// Misreporting rates `(false positive, false negative)` at `(x, w)`;
    /// designs without a reporting instrument ignore `w`.
    pub fn rates(&self, x: f64, w: f64) -> (f64, f64) {
        match self {
            Design::InstrumentZ => (0.3 + 0.1 * x, 0.1 - 0.1 * x),
            Design::InstrumentW => (1.0 / (1.0 + 0.3 * w * w), 0.1 - 0.1 * x),
            Design::TwoInstrument => (1.0 / (1.0 + 0.3 * w * w), 0.1),
            Design::MonotonicityViolation => (0.0, 0.1 + 0.15 * (w - 1.0)),
        }
    }
}

/// Error distribution of the latent-outcome equation.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum ErrorLaw {
    /// Standard normal.
    Normal,
    /// Cauchy with location 0 and scale 1/2.
    Cauchy,
}

impl ErrorLaw {
    /// CDF of the error distribution; using it as the link makes the
    /// parametric model correctly specified.
    pub fn link(&self) -> Link {
        match self {
            ErrorLaw::Normal => Link::StandardNormal,
            ErrorLaw::Cauchy => Link::half_cauchy(),
        }
    }

    fn draw<R: Rng>(&self, rng: &mut R) -> f64 {
        match self {
            ErrorLaw::Normal => StandardNormal.sample(rng),
            ErrorLaw::Cauchy => Cauchy::new(0.0, 0.5).unwrap().sample(rng),
        }
    }
}

/// One draw of a benchmark sample.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub struct DgpConfig {
    pub design: Design,
    pub error: ErrorLaw,
    pub n: usize,
    pub seed: u64,
}

/// Generates a sample from the design, keeping the latent outcome and both
/// misreporting indicators alongside the reported response.
pub fn generate(config: &DgpConfig) -> Result<Sample> {
    if config.n == 0 {
        return Err(Error::validation("sample size must be positive"));
    }
    let design = config.design;
    let z_levels = design.z_levels();
    let w_levels = design.w_levels();
    let mut rng = ChaCha8Rng::seed_from_u64(config.seed);
    let n = config.n;

    let mut y = Vec::with_capacity(n);
    let mut x = Vec::with_capacity(n);
    let mut z_col = Vec::with_capacity(n);
    let mut w_col = Vec::with_capacity(n);
    let mut y_star = Vec::with_capacity(n);
    let mut no_false_negative = Vec::with_capacity(n);
    let mut no_false_positive = Vec::with_capacity(n);

    for _ in 0..n {
        let xt: f64 = rng.random_range(-1.0..=1.0);
        let z = if z_levels.is_empty() {
            0.0
        } else {
            z_levels[rng.random_range(0..z_levels.len())]
        };
        let w = if w_levels.is_empty() {
            0.0
        } else {
            w_levels[rng.random_range(0..w_levels.len())]
        };
        let eps = config.error.draw(&mut rng);
        let latent = u8::from(design.index(xt, z) >= eps);
        let (fp_rate, fn_rate) = design.rates(xt, w);
        let keep = u8::from(rng.random::<f64>() >= fn_rate);
        let hold = u8::from(rng.random::<f64>() >= fp_rate);
        let reported = keep * latent + (1 - hold) * (1 - latent);

        y.push(reported);
        x.push(xt);
        z_col.push(z);
        w_col.push(w);
        y_star.push(latent);
        no_false_negative.push(keep);
        no_false_positive.push(hold);
    }

    let z = (!z_levels.is_empty()).then_some(z_col);
    let w = (!w_levels.is_empty()).then_some(w_col);
    let declared = (!w_levels.is_empty()).then(|| w_levels.to_vec());
    Sample::new(y, x, 1, z, w, declared)?.with_latent(Latent {
        y_star,
        no_false_negative,
        no_false_positive,
    })
}

/// Reported-outcome probability at a single covariate point.
pub fn reported_prob(design: Design, error: ErrorLaw, x: f64, z: f64, w: f64) -> f64 {
    let (fp, fn_rate) = design.rates(x, w);
    let latent = error.link().cdf(design.index(x, z));
    fp + (1.0 - fp - fn_rate) * latent
}

/// Population table and the true latent probabilities it is meant to bound.
#[derive(Debug, Clone)]
pub struct Population {
    pub design: Design,
    pub error: ErrorLaw,
    /// Equal-width cell edges over the covariate support `[-1, 1]`.
    pub cell_edges: Vec<f64>,
    /// Reported probabilities per `(cell, z, w)` slice.
    pub table: CondProbTable,
    /// True latent probability per `(cell, z)` context, aligned with
    /// `table.xz_context`.
    pub true_prob: Vec<f64>,
}

/// Computes exact population quantities for a design by per-cell quadrature.
pub fn population(design: Design, error: ErrorLaw, n_x_cells: usize) -> Result<Population> {
    if n_x_cells == 0 {
        return Err(Error::validation("population table needs at least one cell"));
    }
    let link = error.link();
    let edges: Vec<f64> = (0..=n_x_cells)
        .map(|k| -1.0 + 2.0 * k as f64 / n_x_cells as f64)
        .collect();
    let z_levels = design.z_levels().to_vec();
    let w_levels = design.w_levels().to_vec();
    let nz = z_levels.len().max(1);
    let nw = w_levels.len().max(1);

    let mut probs = Vec::with_capacity(n_x_cells * nz * nw);
    let mut true_prob = Vec::with_capacity(n_x_cells * nz);
    for cell in 0..n_x_cells {
        let (a, b) = (edges[cell], edges[cell + 1]);
        let width = b - a;
        for zi in 0..nz {
            let z = z_levels.get(zi).copied().unwrap_or(0.0);
            let latent =
                quad::integrate(|x| link.cdf(design.index(x, z)), a, b, QUAD_POINTS, &[]) / width;
            true_prob.push(latent);
            for wi in 0..nw {
                let w = w_levels.get(wi).copied().unwrap_or(0.0);
                let avg = quad::integrate(
                    |x| reported_prob(design, error, x, z, w),
                    a,
                    b,
                    QUAD_POINTS,
                    &[],
                ) / width;
                probs.push(avg.clamp(0.0, 1.0));
            }
        }
    }
    let table = CondProbTable::from_probs(n_x_cells, z_levels, w_levels, &probs)?;
    Ok(Population { design, error, cell_edges: edges, table, true_prob })
}

/// Population mean of one moment component on one conditioning cell.
#[derive(Debug, Clone, Serialize)]
pub struct MomentCellMean {
    /// "parametric" or "semiparametric".
    pub family: &'static str,
    /// Component within the pair: 0 pairs the upper envelope, 1 the lower.
    pub component: usize,
    /// Covariate cell index.
    pub cell: usize,
    /// Instrument level conditioned on (Z level or W level by design).
    pub level: f64,
    pub value: f64,
}

/// Population means of every moment component on every conditioning cell.
#[derive(Debug, Clone, Serialize)]
pub struct MomentValidity {
    pub rows: Vec<MomentCellMean>,
    pub min_value: f64,
}

/// Evaluates the population mean of both moment families at the true
/// coefficients, cell by cell. Under the maintained assumptions every mean
/// is nonnegative; the envelopes entering the integrands are the exact
/// pointwise ones, not binned plug-ins.
pub fn population_moment_validity(
    design: Design,
    error: ErrorLaw,
    n_x_cells: usize,
) -> Result<MomentValidity> {
    if n_x_cells == 0 {
        return Err(Error::validation("moment check needs at least one cell"));
    }
    let levels: &[f64] = match design {
        Design::InstrumentZ => design.z_levels(),
        Design::InstrumentW => design.w_levels(),
        _ => {
            return Err(Error::validation(
                "population moment checks are defined for the single-instrument designs",
            ))
        }
    };
    let link = error.link();
    let edges: Vec<f64> = (0..=n_x_cells)
        .map(|k| -1.0 + 2.0 * k as f64 / n_x_cells as f64)
        .collect();

    let mut rows = Vec::new();
    for cell in 0..n_x_cells {
        let (a, b) = (edges[cell], edges[cell + 1]);
        let width = b - a;
        for (li, level) in levels.iter().enumerate() {
            let z = if design == Design::InstrumentZ { *level } else { 0.0 };
            let kink = index_root(design, z);
            let envelopes = |x: f64| -> (f64, f64) {
                match design {
                    Design::InstrumentZ => {
                        let mut lo = f64::INFINITY;
                        let mut hi = f64::NEG_INFINITY;
                        for zl in design.z_levels() {
                            let p = reported_prob(design, error, x, *zl, 0.0);
                            lo = lo.min(p);
                            hi = hi.max(p);
                        }
                        (lo, hi)
                    }
                    _ => {
                        let mut lo = f64::INFINITY;
                        let mut hi = f64::NEG_INFINITY;
                        for wl in &design.w_levels()[..=li] {
                            let p = reported_prob(design, error, x, 0.0, *wl);
                            lo = lo.min(p);
                            hi = hi.max(p);
                        }
                        (lo, hi)
                    }
                }
            };
            let w = if design == Design::InstrumentW { *level } else { 0.0 };
            for (family, component) in
                [("parametric", 0), ("parametric", 1), ("semiparametric", 0), ("semiparametric", 1)]
            {
                let value = quad::integrate(
                    |x| {
                        let p = reported_prob(design, error, x, z, w);
                        let (lo, hi) = envelopes(x);
                        let idx = design.index(x, z);
                        let pair = if family == "parametric" {
                            moment_parametric(p, idx, &link, hi, lo)
                        } else {
                            moment_semiparametric(p, idx, hi, lo)
                        };
                        if component == 0 {
                            pair.0
                        } else {
                            pair.1
                        }
                    },
                    a,
                    b,
                    QUAD_POINTS,
                    &[kink],
                ) / width;
                rows.push(MomentCellMean { family, component, cell, level: *level, value });
            }
        }
    }
    let min_value = rows.iter().map(|r| r.value).fold(f64::INFINITY, f64::min);
    Ok(MomentValidity { rows, min_value })
}

/// Covariate value where the true index crosses zero at instrument level
/// `z`; a quadrature breakpoint for the sign-split moment components.
fn index_root(design: Design, z: f64) -> f64 {
    let beta = design.true_beta();
    let shift = if beta.len() > 2 { beta[2] * z } else { 0.0 };
    -(beta[0] + shift) / beta[1]
}

/// Default hypercube target used for a given sample size.
pub fn default_cube_target(n: usize) -> usize {
    if n <= 1000 {
        30
    } else if n <= 2000 {
        40
    } else {
        50
    }
}

/// Configuration of a Monte Carlo benchmark run.
#[derive(Debug, Clone)]
pub struct MonteCarloConfig {
    pub design: Design,
    pub error: ErrorLaw,
    /// Observations per replication.
    pub n: usize,
    pub replications: usize,
    /// Replication `r` uses seed `base_seed + r`.
    pub base_seed: u64,
    /// Covariate cells for the plug-in envelope probabilities.
    pub cells_per_dim: usize,
    /// Minimum observations per table slice before a probability counts.
    pub min_cell_count: usize,
    /// Target number of hypercubes for the criterion.
    pub cube_target: usize,
    /// Search grid over the free index coordinates.
    pub grid: BetaGrid,
    pub cutoff: CutoffRule,
}

/// Aggregated benchmark results plus the error message of every failed
/// replication.
#[derive(Debug, Clone)]
pub struct MonteCarloOutput {
    pub report: MCReport,
    pub errors: Vec<String>,
}

struct Replicate {
    endpoints: Vec<(f64, f64)>,
    has_beta: Vec<f64>,
}

fn run_replication(config: &MonteCarloConfig, rep: usize) -> Result<Replicate> {
    let seed = config.base_seed.wrapping_add(rep as u64);
    let sample = generate(&DgpConfig {
        design: config.design,
        error: config.error,
        n: config.n,
        seed,
    })?;
    let include_z = !config.design.z_levels().is_empty();
    let mode = if include_z { InstrumentMode::ZOnly } else { InstrumentMode::WOnly };
    let dim = if include_z { 3 } else { 2 };

    let binning = Binning::from_sample(&sample, config.cells_per_dim)?;
    let data = prepare_moment_data(&sample, &binning, mode, include_z, config.min_cell_count)?;
    let model = ModelSpec::new(
        ModelKind::Semiparametric,
        dim,
        Normalization { coordinate: 0, value: 1.0 },
    )?;
    let cubes = build_hypercubes(&sample, config.cube_target, mode)?;
    let set = estimate_identified_set(&data, &model, &cubes, &config.grid, config.cutoff)?;
    // The baseline keeps its standard-normal error assumption no matter
    // how the data were generated; under the Cauchy designs that
    // misspecification is part of what the benchmark measures.
    let has = fit_has(&sample, &Link::StandardNormal, seed)?;
    Ok(Replicate { endpoints: set.endpoints, has_beta: has.beta })
}

/// Runs the benchmark: per replication, draws a sample, estimates the
/// identified set for the semiparametric index and fits the parametric
/// misreporting MLE, then aggregates accuracy per free coordinate.
///
/// Set endpoints are reported as the "set-lower" and "set-upper" estimator
/// rows; the MLE coefficient is the "mle" row. Failed replications are
/// excluded from the metrics and their messages returned alongside.
pub fn run_monte_carlo(config: &MonteCarloConfig) -> Result<MonteCarloOutput> {
    if config.replications == 0 {
        return Err(Error::validation("need at least one replication"));
    }
    if matches!(config.design, Design::TwoInstrument | Design::MonotonicityViolation) {
        return Err(Error::validation(
            "the benchmark driver covers the single-instrument designs",
        ));
    }

    let results: Vec<Result<Replicate>> = (0..config.replications)
        .into_par_iter()
        .map(|rep| run_replication(config, rep))
        .collect();

    let mut errors = Vec::new();
    let mut done = Vec::new();
    for (rep, result) in results.into_iter().enumerate() {
        match result {
            Ok(r) => done.push(r),
            Err(e) => errors.push(format!("replication {rep}: {e}")),
        }
    }
    if done.is_empty() {
        return Err(Error::computation(format!(
            "every replication failed; first error: {}",
            errors[0]
        )));
    }

    let truth = config.design.true_beta();
    let free: Vec<usize> = (1..truth.len()).collect();
    let mut rows = Vec::new();
    for (pos, coordinate) in free.iter().copied().enumerate() {
        let lower: Vec<f64> = done.iter().map(|r| r.endpoints[pos].0).collect();
        let upper: Vec<f64> = done.iter().map(|r| r.endpoints[pos].1).collect();
        let mle: Vec<f64> = done.iter().map(|r| r.has_beta[coordinate]).collect();
        for (estimator, values) in
            [("set-lower", &lower), ("set-upper", &upper), ("mle", &mle)]
        {
            rows.push(MCRow {
                estimator: estimator.to_string(),
                coordinate,
                metrics: mc_metrics(values, truth[coordinate])?,
            });
        }
    }
    Ok(MonteCarloOutput {
        report: MCReport {
            replications: config.replications,
            failures: errors.len(),
            rows,
        },
        errors,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::bounds::{
        check_testable_implications, compute_bounds, AssumptionSet, InstrumentMode, Restriction,
        CHECK_REPORTED_MONOTONE_IN_W,
    };
    use crate::setest::CoordinateRange;

    #[test]
    fn rates_match_design_formulas() {
        let (fp, fnr) = Design::InstrumentZ.rates(1.0, 0.0);
        assert!((fp - 0.4).abs() < 1e-15 && fnr.abs() < 1e-15);
        let (fp, fnr) = Design::InstrumentZ.rates(-1.0, 0.0);
        assert!((fp - 0.2).abs() < 1e-15 && (fnr - 0.2).abs() < 1e-15);

        let (fp, _) = Design::InstrumentW.rates(0.0, 1.0);
        assert!((fp - 1.0 / 1.3).abs() < 1e-15);
        let (fp, _) = Design::InstrumentW.rates(0.0, 5.0);
        assert!((fp - 1.0 / 8.5).abs() < 1e-15);

        for design in [Design::InstrumentZ, Design::InstrumentW, Design::TwoInstrument] {
            for x in [-1.0, 0.0, 1.0] {
                for w in [1.0, 2.0, 5.0] {
                    let (fp, fnr) = design.rates(x, w);
                    assert!(fp >= 0.0 && fnr >= 0.0 && fp + fnr < 1.0);
                }
            }
        }
    }

    #[test]
    fn generated_sample_keeps_consistent_latent_data() {
        for design in [
            Design::InstrumentZ,
            Design::InstrumentW,
            Design::TwoInstrument,
            Design::MonotonicityViolation,
        ] {
            let sample = generate(&DgpConfig {
                design,
                error: ErrorLaw::Normal,
                n: 500,
                seed: 7,
            })
            .unwrap();
            let latent = sample.latent().unwrap();
            for i in 0..sample.n() {
                let expect = latent.no_false_negative[i] * latent.y_star[i]
                    + (1 - latent.no_false_positive[i]) * (1 - latent.y_star[i]);
                assert_eq!(sample.y()[i], expect);
            }
            assert_eq!(design.z_levels().is_empty(), sample.z().is_none());
            assert_eq!(design.w_levels().is_empty(), sample.w().is_none());
        }
    }

    #[test]
    fn generation_is_deterministic_in_the_seed() {
        let config = DgpConfig {
            design: Design::InstrumentZ,
            error: ErrorLaw::Cauchy,
            n: 200,
            seed: 42,
        };
        let a = generate(&config).unwrap();
        let b = generate(&config).unwrap();
        assert_eq!(a.y(), b.y());
        assert_eq!(a.x_row(5), b.x_row(5));
        assert_eq!(a.z(), b.z());

        let c = generate(&DgpConfig { seed: 43, ..config }).unwrap();
        assert_ne!(a.y(), c.y());
    }

    #[test]
    fn empirical_frequencies_match_population_table() {
        let sample = generate(&DgpConfig {
            design: Design::InstrumentZ,
            error: ErrorLaw::Normal,
            n: 1_000_000,
            seed: 11,
        })
        .unwrap();
        let pop = population(Design::InstrumentZ, ErrorLaw::Normal, 1).unwrap();
        let z = sample.z().unwrap();
        for (zi, level) in Z_LEVELS.iter().enumerate() {
            let mut count = 0usize;
            let mut hits = 0.0;
            for i in 0..sample.n() {
                if z[i] == *level {
                    count += 1;
                    hits += f64::from(sample.y()[i]);
                }
            }
            let hat = hits / count as f64;
            let truth = pop.table.prob(0, Some(zi), None).unwrap();
            assert!(
                (hat - truth).abs() < 0.005,
                "level {level}: empirical {hat} vs population {truth}"
            );
        }
    }

    #[test]
    fn population_bounds_cover_the_truth_in_both_designs() {
        let pop = population(Design::InstrumentZ, ErrorLaw::Normal, 3).unwrap();
        let bounds = compute_bounds(
            &pop.table,
            &AssumptionSet::unrestricted(InstrumentMode::ZOnly),
        )
        .unwrap();
        assert_eq!(bounds.rows.len(), 15);
        for row in &bounds.rows {
            let ctx = row.cell * 5
                + Z_LEVELS.iter().position(|l| Some(*l) == row.z).unwrap();
            let truth = pop.true_prob[ctx];
            assert!(
                row.lower <= truth + 1e-10 && truth <= row.upper + 1e-10,
                "cell {} z {:?}: {truth} outside [{}, {}]",
                row.cell,
                row.z,
                row.lower,
                row.upper
            );
        }

        let pop = population(Design::InstrumentW, ErrorLaw::Cauchy, 3).unwrap();
        let bounds = compute_bounds(
            &pop.table,
            &AssumptionSet::unrestricted(InstrumentMode::WOnly),
        )
        .unwrap();
        assert_eq!(bounds.rows.len(), 3);
        for row in &bounds.rows {
            let truth = pop.true_prob[row.cell];
            assert!(
                row.lower <= truth + 1e-10 && truth <= row.upper + 1e-10,
                "cell {}: {truth} outside [{}, {}]",
                row.cell,
                row.lower,
                row.upper
            );
        }
    }

    #[test]
    fn population_moments_are_nonnegative_at_the_truth() {
        let check =
            population_moment_validity(Design::InstrumentZ, ErrorLaw::Normal, 2).unwrap();
        assert_eq!(check.rows.len(), 2 * 5 * 4);
        assert!(
            check.min_value >= -1e-8,
            "worst population moment {}",
            check.min_value
        );
    }

    #[test]
    fn monotonicity_violation_design_trips_the_named_check() {
        let pop = population(Design::MonotonicityViolation, ErrorLaw::Normal, 2).unwrap();
        for cell in 0..2 {
            let first = pop.table.prob(cell, None, Some(0)).unwrap();
            let last = pop.table.prob(cell, None, Some(4)).unwrap();
            assert!(last < first, "reported probability should fall in w");
        }
        let assumptions = AssumptionSet::with_restriction(
            InstrumentMode::WOnly,
            Restriction::NoFalsePositives,
        );
        let bounds = compute_bounds(&pop.table, &assumptions).unwrap();
        let report =
            check_testable_implications(&bounds, &pop.table, &assumptions, 0.0).unwrap();
        assert!(!report.passed());
        assert!(report
            .violations
            .iter()
            .any(|v| v.check == CHECK_REPORTED_MONOTONE_IN_W));
    }

    #[test]
    fn combined_design_bounds_cover_and_tighten() {
        let pop = population(Design::TwoInstrument, ErrorLaw::Normal, 2).unwrap();
        let both = compute_bounds(
            &pop.table,
            &AssumptionSet::unrestricted(InstrumentMode::ZAndW),
        )
        .unwrap();
        let z_only = compute_bounds(
            &pop.table,
            &AssumptionSet::unrestricted(InstrumentMode::ZOnly),
        )
        .unwrap();
        let w_only = compute_bounds(
            &pop.table,
            &AssumptionSet::unrestricted(InstrumentMode::WOnly),
        )
        .unwrap();
        assert_eq!(both.rows.len(), 4);
        for row in &both.rows {
            let zi = COMBINED_Z_LEVELS.iter().position(|l| Some(*l) == row.z).unwrap();
            let truth = pop.true_prob[row.cell * 2 + zi];
            assert!(
                row.lower <= truth + 1e-10 && truth <= row.upper + 1e-10,
                "cell {} z {:?}: {truth} outside [{}, {}]",
                row.cell,
                row.z,
                row.lower,
                row.upper
            );
            let zr = z_only.row(row.cell, row.z).unwrap();
            let wr = w_only.row(row.cell, row.z).unwrap();
            assert!(row.lower >= zr.lower.max(wr.lower) - 1e-10);
            assert!(row.upper <= zr.upper.min(wr.upper) + 1e-10);
        }
    }

    #[test]
    fn benchmark_smoke_run_reports_all_estimators() {
        let grid = BetaGrid::new(
            vec![
                CoordinateRange { lower: 0.0, upper: 3.0, step: 0.5 },
                CoordinateRange { lower: -3.0, upper: 0.0, step: 0.5 },
            ],
            100_000,
        )
        .unwrap();
        let out = run_monte_carlo(&MonteCarloConfig {
            design: Design::InstrumentZ,
            error: ErrorLaw::Normal,
            n: 400,
            replications: 2,
            base_seed: 9,
            cells_per_dim: 4,
            min_cell_count: 5,
            cube_target: 30,
            grid,
            cutoff: CutoffRule::default(),
        })
        .unwrap();
        assert!(out.errors.is_empty(), "{:?}", out.errors);
        assert_eq!(out.report.failures, 0);
        assert_eq!(out.report.rows.len(), 6);
        for row in &out.report.rows {
            assert!(row.metrics.rmse.is_finite());
            assert!(row.metrics.mad.is_finite());
            assert_eq!(row.metrics.n_used, 2);
            assert!(matches!(row.coordinate, 1 | 2));
        }
    }

    #[test]
    fn cube_target_grows_with_sample_size() {
        assert_eq!(default_cube_target(500), 30);
        assert_eq!(default_cube_target(1000), 30);
        assert_eq!(default_cube_target(2000), 40);
        assert_eq!(default_cube_target(8000), 50);
    }
}
