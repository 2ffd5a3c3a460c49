//! Grid-based estimation of the identified set for the index coefficients
//! and Monte Carlo performance metrics.
//!
//! The criterion function is piecewise constant in the coefficients for
//! the semiparametric moments, so the estimator is a plain grid search:
//! evaluate the criterion on every point of a grid over the free
//! coordinates, accept the points within a shrinking slack of the minimum,
//! and report per-coordinate endpoints of the accepted set. The minimizer
//! is always accepted, so the estimated set is never empty.

use rayon::prelude::*;
use serde::Serialize;

use crate::error::{Error, Result};
use crate::moments::{criterion, InstrumentalFunctions, ModelSpec, MomentData};

/// Inclusive value range with a fixed step for one free coordinate.
#[derive(Debug, Clone, Copy, Serialize)]
pub struct CoordinateRange {
    pub lower: f64,
    pub upper: f64,
    pub step: f64,
}

impl CoordinateRange {
    /// Grid values `lower, lower + step, ...` up to `upper` (a last point
    /// within a tiny tolerance of `upper` is kept).
    pub fn values(&self) -> Vec<f64> {
        let count = ((self.upper - self.lower) / self.step + 1e-9).floor() as usize + 1;
        (0..count).map(|k| self.lower + k as f64 * self.step).collect()
    }
}

/// Search grid over the free coordinates of a [`ModelSpec`]; the
/// normalized coordinate is held fixed by construction.
#[derive(Debug, Clone)]
pub struct BetaGrid {
    ranges: Vec<CoordinateRange>,
    budget: usize,
}

impl BetaGrid {
    /// Builds a grid from one range per free coordinate.
    ///
    /// ```
    /// use misreport::{BetaGrid, CoordinateRange};
    ///
    /// let r = CoordinateRange { lower: 0.0, upper: 1.0, step: 0.25 };
    /// assert_eq!(BetaGrid::new(vec![r; 2], 100)?.size(), 25);
    /// assert!(BetaGrid::new(vec![r; 2], 10).is_err());
    /// # Ok::<(), misreport::Error>(())
    /// ```
    ///
    /// # Errors
    ///
    /// Rejects empty range lists, inverted ranges, nonpositive steps, and
    /// grids larger than `budget` points.
    pub fn new(ranges: Vec<CoordinateRange>, budget: usize) -> Result<Self> {
        if ranges.is_empty() {
            return Err(Error::validation("grid needs at least one coordinate range"));
        }
        for r in &ranges {
            if !(r.lower.is_finite() && r.upper.is_finite() && r.step.is_finite()) {
                return Err(Error::validation("grid ranges must be finite"));
            }
            if r.lower > r.upper {
                return Err(Error::validation(format!(
                    "grid range has lower {} above upper {}",
                    r.lower, r.upper
                )));
            }
            if r.step <= 0.0 {
                return Err(Error::validation("grid step must be positive"));
            }
        }
        let grid = BetaGrid { ranges, budget };
        let size = grid.size();
        if size > budget {
            return Err(Error::validation(format!(
                "grid has {size} points, over the budget of {budget}"
            )));
        }
        Ok(grid)
    }

    /// Ranges per free coordinate.
    pub fn ranges(&self) -> &[CoordinateRange] {
        &self.ranges
    }

    /// Total number of grid points.
    pub fn size(&self) -> usize {
        self.ranges.iter().map(|r| r.values().len()).product()
    }

    /// Configured maximum number of grid points.
    pub fn budget(&self) -> usize {
        self.budget
    }

    fn axes(&self) -> Vec<Vec<f64>> {
        self.ranges.iter().map(CoordinateRange::values).collect()
    }
}

/// One evaluated grid point: free-coordinate values, criterion value, and
/// whether it fell below the cutoff.
#[derive(Debug, Clone, Serialize)]
pub struct GridEval {
    pub free: Vec<f64>,
    pub q: f64,
    pub accepted: bool,
}

/// Estimated identified set: every evaluated grid point, the cutoff used,
/// and per-coordinate endpoints of the accepted region.
#[derive(Debug, Clone, Serialize)]
pub struct IdentifiedSet {
    /// Smallest criterion value on the grid.
    pub min_q: f64,
    /// Acceptance cutoff `min_q + kappa * log(n) / n`.
    pub cutoff: f64,
    /// Slack multiplier used.
    pub kappa: f64,
    /// Sample size the cutoff was computed from.
    pub n: usize,
    /// Number of accepted points (at least one).
    pub n_accepted: usize,
    /// `(lower, upper)` of each free coordinate over the accepted points.
    pub endpoints: Vec<(f64, f64)>,
    /// Every grid point with its criterion value.
    pub evaluations: Vec<GridEval>,
}

impl IdentifiedSet {
    /// Accepted points only.
    pub fn accepted(&self) -> impl Iterator<Item = &GridEval> {
        self.evaluations.iter().filter(|e| e.accepted)
    }
}

/// Cutoff rule for acceptance: `Q(beta) <= min Q + kappa * log(n) / n`.
#[derive(Debug, Clone, Copy, Serialize)]
pub struct CutoffRule {
    pub kappa: f64,
}

impl Default for CutoffRule {
    fn default() -> Self {
        CutoffRule { kappa: 1.0 }
    }
}

fn decode_point(axes: &[Vec<f64>], mut idx: usize) -> Vec<f64> {
    let mut free = vec![0.0; axes.len()];
    for (k, axis) in axes.iter().enumerate().rev() {
        free[k] = axis[idx % axis.len()];
        idx /= axis.len();
    }
    free
}

/// Evaluates the criterion on every grid point and returns the accepted
/// level set with its per-coordinate endpoints.
///
/// Grid points are evaluated in parallel; results are reduced by grid
/// index, so the outcome is deterministic for a given sample, grid, and
/// cutoff rule.
///
/// # Errors
///
/// Propagates criterion errors (dimension mismatches, foreign cubes) and
/// rejects a negative `kappa`.
pub fn estimate_identified_set(
    data: &MomentData,
    model: &ModelSpec,
    cubes: &InstrumentalFunctions,
    grid: &BetaGrid,
    rule: CutoffRule,
) -> Result<IdentifiedSet> {
    if rule.kappa < 0.0 {
        return Err(Error::validation("kappa must be nonnegative"));
    }
    if grid.ranges.len() != model.free.len() {
        return Err(Error::validation(format!(
            "grid has {} coordinate ranges, model has {} free coordinates",
            grid.ranges.len(),
            model.free.len()
        )));
    }
    let axes = grid.axes();
    let size = grid.size();
    // Fail fast on a bad configuration before fanning out.
    criterion(&model.full_beta(&decode_point(&axes, 0))?, model, data, cubes)?;

    let qs: Vec<f64> = (0..size)
        .into_par_iter()
        .map(|idx| {
            let free = decode_point(&axes, idx);
            let beta = model.full_beta(&free).expect("free coordinates match model");
            criterion(&beta, model, data, cubes).expect("criterion checked on first point")
        })
        .collect();

    let min_q = qs.iter().copied().fold(f64::INFINITY, f64::min);
    let n = data.n();
    let cutoff = min_q + rule.kappa * (n as f64).ln() / n as f64;
    let mut evaluations = Vec::with_capacity(size);
    let mut n_accepted = 0;
    let mut endpoints = vec![(f64::INFINITY, f64::NEG_INFINITY); axes.len()];
    for (idx, q) in qs.iter().enumerate() {
        let free = decode_point(&axes, idx);
        let accepted = *q <= cutoff;
        if accepted {
            n_accepted += 1;
            for (k, v) in free.iter().enumerate() {
                endpoints[k].0 = endpoints[k].0.min(*v);
                endpoints[k].1 = endpoints[k].1.max(*v);
            }
        }
        evaluations.push(GridEval {
            free,
            q: *q,
            accepted,
        });
    }
    debug_assert!(n_accepted > 0, "the minimizer is accepted by construction");

    Ok(IdentifiedSet {
        min_q,
        cutoff,
        kappa: rule.kappa,
        n,
        n_accepted,
        endpoints,
        evaluations,
    })
}

/// Root mean squared error and median absolute deviation of a batch of
/// scalar estimates against a single true value.
#[derive(Debug, Clone, Copy, Serialize)]
pub struct MetricPair {
    pub rmse: f64,
    pub mad: f64,
    /// Number of estimates the metrics were computed from.
    pub n_used: usize,
}

/// Computes rMSE and MAD over successful replications.
///
/// ```
/// use misreport::mc_metrics;
///
/// let m = mc_metrics(&[1.0, 2.0, 4.0], 2.0)?;
/// assert!((m.rmse - (5.0f64 / 3.0).sqrt()).abs() < 1e-15);
/// assert!((m.mad - 1.0).abs() < 1e-15);
/// # Ok::<(), misreport::Error>(())
/// ```
///
/// # Errors
///
/// Fails when `estimates` is empty (every replication failed) or contains
/// a non-finite value.
pub fn mc_metrics(estimates: &[f64], truth: f64) -> Result<MetricPair> {
    if estimates.is_empty() {
        return Err(Error::computation(
            "no successful replications to compute metrics from",
        ));
    }
    if estimates.iter().any(|v| !v.is_finite()) {
        return Err(Error::computation("non-finite estimate in metric input"));
    }
    let n = estimates.len();
    let mse = estimates.iter().map(|v| (v - truth).powi(2)).sum::<f64>() / n as f64;
    let mut devs: Vec<f64> = estimates.iter().map(|v| (v - truth).abs()).collect();
    devs.sort_by(|a, b| a.partial_cmp(b).unwrap());
    let mad = if n % 2 == 1 {
        devs[n / 2]
    } else {
        0.5 * (devs[n / 2 - 1] + devs[n / 2])
    };
    Ok(MetricPair {
        rmse: mse.sqrt(),
        mad,
        n_used: n,
    })
}

/// One row of a Monte Carlo report: metrics for one estimator and one
/// coordinate.
#[derive(Debug, Clone, Serialize)]
pub struct MCRow {
    pub estimator: String,
    pub coordinate: usize,
    pub metrics: MetricPair,
}

/// Monte Carlo comparison report across estimators and coordinates.
///
/// Metrics are computed over successful replications only; failures are
/// disclosed, never silently dropped.
#[derive(Debug, Clone, Serialize)]
pub struct MCReport {
    pub replications: usize,
    pub failures: usize,
    pub rows: Vec<MCRow>,
}
