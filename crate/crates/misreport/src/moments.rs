//! Conditional moment inequalities for the binary choice model and the
//! criterion function used for set estimation.
//!
//! The probability bounds translate into conditional moment inequalities
//! `E[g(Y, X, beta) | conditioning cell] >= 0`, with one two-component
//! moment function per model kind (parametric or semiparametric) and per
//! instrument. Conditional inequalities become finitely many unconditional
//! ones by multiplying with indicator functions of hypercubes in the
//! conditioning space; the criterion sums squared standardized violations
//! of the resulting unconditional moments.
//!
//! Envelope nuisance terms are plug-in frequency estimates computed once
//! per sample in [`prepare_moment_data`] and frozen across coefficient
//! evaluations.

use crate::binning::Binning;
use crate::bounds::InstrumentMode;
use crate::data::Sample;
use crate::error::{Error, Result};
use crate::link::Link;
use crate::table::{envelopes_w, envelopes_z, CondProbTable};

/// Floor applied to per-cube standard deviations before standardizing, so
/// near-deterministic cubes cannot blow up the criterion.
pub const SIGMA_FLOOR: f64 = 1e-6;

/// Binary choice model variant.
#[derive(Debug, Clone, PartialEq)]
pub enum ModelKind {
    /// Error distribution known up to the index: `P(Y*=1 | x) = F(x'beta)`.
    Parametric(Link),
    /// Only a conditional median restriction on the error; identification
    /// works through the sign of the index, and the coefficient scale must
    /// be pinned by a normalization.
    Semiparametric,
}

/// Scale normalization pinning one coefficient to a fixed value.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Normalization {
    /// Coordinate of the coefficient vector held fixed.
    pub coordinate: usize,
    /// Value it is held at.
    pub value: f64,
}

/// Model specification: variant, coefficient dimension, and normalization.
///
/// The coefficient vector has `dim` coordinates; `free` lists the
/// coordinates a grid search varies, in increasing order, and is the
/// complement of the normalized coordinate.
#[derive(Debug, Clone)]
pub struct ModelSpec {
    pub kind: ModelKind,
    pub dim: usize,
    pub normalization: Normalization,
    pub free: Vec<usize>,
}

impl ModelSpec {
    /// Builds a specification with `free` set to every coordinate except
    /// the normalized one.
    ///
    /// # Errors
    ///
    /// Rejects a normalization coordinate outside the coefficient
    /// dimension, a zero normalization value for the semiparametric model
    /// (scale would be lost), and an invalid link.
    pub fn new(kind: ModelKind, dim: usize, normalization: Normalization) -> Result<Self> {
        let free = (0..dim).filter(|k| *k != normalization.coordinate).collect();
        let spec = ModelSpec {
            kind,
            dim,
            normalization,
            free,
        };
        spec.validate()?;
        Ok(spec)
    }

    /// Checks internal consistency.
    pub fn validate(&self) -> Result<()> {
        if self.dim == 0 {
            return Err(Error::validation("coefficient dimension must be positive"));
        }
        if self.normalization.coordinate >= self.dim {
            return Err(Error::validation(format!(
                "normalization coordinate {} outside coefficient dimension {}",
                self.normalization.coordinate, self.dim
            )));
        }
        if !self.normalization.value.is_finite() {
            return Err(Error::validation("normalization value must be finite"));
        }
        if matches!(self.kind, ModelKind::Semiparametric) && self.normalization.value == 0.0 {
            return Err(Error::validation(
                "semiparametric scale normalization requires a nonzero fixed value",
            ));
        }
        if let ModelKind::Parametric(link) = &self.kind {
            link.validate()?;
        }
        for k in &self.free {
            if *k >= self.dim || *k == self.normalization.coordinate {
                return Err(Error::validation(format!(
                    "free coordinate {k} clashes with dimension {} or normalization",
                    self.dim
                )));
            }
        }
        Ok(())
    }

    /// Assembles a full coefficient vector from values of the free
    /// coordinates, inserting the normalized value.
    pub fn full_beta(&self, free_values: &[f64]) -> Result<Vec<f64>> {
        if free_values.len() != self.free.len() {
            return Err(Error::validation(format!(
                "expected {} free coordinates, got {}",
                self.free.len(),
                free_values.len()
            )));
        }
        let mut beta = vec![0.0; self.dim];
        beta[self.normalization.coordinate] = self.normalization.value;
        for (k, v) in self.free.iter().zip(free_values) {
            beta[*k] = *v;
        }
        Ok(beta)
    }
}

/// Row-major regressor matrix `[1, covariates.., z?]`, shared by the
/// moment functions and the likelihood baseline.
#[derive(Debug, Clone)]
pub struct DesignMatrix {
    dim: usize,
    rows: Vec<f64>,
}

impl DesignMatrix {
    /// Assembles intercept, covariates, and optionally the outcome
    /// instrument into regressor rows.
    ///
    /// # Errors
    ///
    /// Fails when `include_z` is requested without a z column.
    pub fn build(sample: &Sample, include_z: bool) -> Result<Self> {
        if include_z && sample.z().is_none() {
            return Err(Error::validation(
                "include_z requested but the sample has no z column",
            ));
        }
        let n = sample.n();
        let dim = 1 + sample.dim() + usize::from(include_z);
        let mut rows = Vec::with_capacity(n * dim);
        for i in 0..n {
            rows.push(1.0);
            rows.extend_from_slice(sample.x_row(i));
            if include_z {
                rows.push(sample.z().unwrap()[i]);
            }
        }
        Ok(DesignMatrix { dim, rows })
    }

    /// Assembles intercept, covariates, and every instrument column the
    /// sample carries (z first, then w). This is the regressor list of the
    /// likelihood baseline, which has no exclusion restriction and treats
    /// instruments as ordinary covariates.
    pub fn build_all(sample: &Sample) -> Self {
        let n = sample.n();
        let dim = 1
            + sample.dim()
            + usize::from(sample.z().is_some())
            + usize::from(sample.w().is_some());
        let mut rows = Vec::with_capacity(n * dim);
        for i in 0..n {
            rows.push(1.0);
            rows.extend_from_slice(sample.x_row(i));
            if let Some(z) = sample.z() {
                rows.push(z[i]);
            }
            if let Some(w) = sample.w() {
                rows.push(w[i]);
            }
        }
        DesignMatrix { dim, rows }
    }

    /// Regressors per observation.
    pub fn dim(&self) -> usize {
        self.dim
    }

    /// Number of observations.
    pub fn n(&self) -> usize {
        self.rows.len() / self.dim
    }

    /// Regressor row of observation `i`.
    pub fn row(&self, i: usize) -> &[f64] {
        &self.rows[i * self.dim..(i + 1) * self.dim]
    }

    /// Index value `x_i' beta`.
    pub fn index(&self, i: usize, beta: &[f64]) -> f64 {
        self.row(i).iter().zip(beta).map(|(a, b)| a * b).sum()
    }
}

/// Parametric moment function: two components whose conditional
/// expectations are nonnegative exactly when `F(x'beta)` lies inside the
/// probability bounds at the observation's conditioning cell.
///
/// `upper` and `lower` are the envelope values at the observation: the
/// outcome-instrument envelopes of the covariate cell in Z-mode, the
/// running reporting-instrument envelopes at `(x, w)` in W-mode.
pub fn moment_parametric(y: f64, index: f64, link: &Link, upper: f64, lower: f64) -> (f64, f64) {
    let f = link.cdf(index);
    (y - f * upper, f + lower * (1.0 - f) - y)
}

/// Semiparametric moment function: the bound conditions `U >= 0.5` (where
/// the index is nonnegative) and `L <= 0.5` (where it is nonpositive),
/// multiplied through by their positive denominators and weighted by the
/// index.
///
/// ```
/// use misreport::moment_semiparametric;
///
/// let (g1, g2) = moment_semiparametric(1.0, 0.8, 0.9, 0.3);
/// assert!((g1 - 0.8 * (1.0 - 0.45)).abs() < 1e-15);
/// assert_eq!(g2, 0.0);
/// ```
pub fn moment_semiparametric(y: f64, index: f64, upper: f64, lower: f64) -> (f64, f64) {
    let g1 = if index >= 0.0 {
        index * (y - 0.5 * upper)
    } else {
        0.0
    };
    let g2 = if index <= 0.0 {
        index * (y - 0.5 * lower - 0.5)
    } else {
        0.0
    };
    (g1, g2)
}

/// Per-observation moment inputs with plug-in envelopes frozen at
/// construction: regressor rows, responses, and the envelope pair at each
/// observation's conditioning cell.
#[derive(Debug, Clone)]
pub struct MomentData {
    mode: InstrumentMode,
    design: DesignMatrix,
    y: Vec<f64>,
    upper: Vec<f64>,
    lower: Vec<f64>,
    included: Vec<bool>,
    n_excluded: usize,
}

impl MomentData {
    /// Number of observations, excluded ones included.
    pub fn n(&self) -> usize {
        self.y.len()
    }

    /// Regressor dimension (intercept, covariates, optional instrument).
    pub fn dim(&self) -> usize {
        self.design.dim()
    }

    /// Instrument mode the envelopes were computed under.
    pub fn mode(&self) -> InstrumentMode {
        self.mode
    }

    /// Observations dropped because their envelope was undefined.
    pub fn n_excluded(&self) -> usize {
        self.n_excluded
    }
}

/// Builds moment inputs for a sample: assembles regressor rows
/// `[1, covariates.., z?]`, estimates the conditional probability table on
/// `binning`, and attaches the envelope pair for each observation.
///
/// Z-mode uses the outcome-instrument envelopes of the observation's
/// covariate cell; W-mode uses the running reporting-instrument envelopes
/// at the observation's `(cell, z, w)`. Observations whose envelope is
/// undefined (cells below the count threshold) are excluded and counted.
///
/// # Errors
///
/// Fails when the instrument required by `mode` is missing, when `mode`
/// combines both instruments (the moment functions are defined per single
/// instrument), or when `include_z` is requested without a z column.
pub fn prepare_moment_data(
    sample: &Sample,
    binning: &Binning,
    mode: InstrumentMode,
    include_z: bool,
    min_cell_count: usize,
) -> Result<MomentData> {
    if mode == InstrumentMode::ZAndW {
        return Err(Error::validation(
            "moment functions are defined for one instrument at a time",
        ));
    }
    let design = DesignMatrix::build(sample, include_z)?;
    let table = CondProbTable::estimate(sample, binning, min_cell_count)?;
    let n = sample.n();
    let mut upper = vec![0.0; n];
    let mut lower = vec![0.0; n];
    let mut included = vec![false; n];
    let mut n_excluded = 0;

    let cells: Vec<usize> = (0..n).map(|i| binning.cell_of(sample.x_row(i))).collect();
    match mode {
        InstrumentMode::ZOnly => {
            let env = envelopes_z(&table)?;
            for i in 0..n {
                match (env.lower[cells[i]], env.upper[cells[i]]) {
                    (Some(lo), Some(hi)) => {
                        lower[i] = lo;
                        upper[i] = hi;
                        included[i] = true;
                    }
                    _ => n_excluded += 1,
                }
            }
        }
        InstrumentMode::WOnly => {
            let env = envelopes_w(&table)?;
            let w_col = sample
                .w()
                .ok_or_else(|| Error::validation("W-mode moments need a w column"))?;
            let nz = table.z_levels().len().max(1);
            for i in 0..n {
                let zi = match sample.z() {
                    Some(col) => table
                        .z_levels()
                        .iter()
                        .position(|v| *v == col[i])
                        .expect("z value outside table levels"),
                    None => 0,
                };
                let wi = env
                    .w_levels
                    .iter()
                    .position(|v| *v == w_col[i])
                    .expect("w value outside declared levels");
                let ctx = cells[i] * nz + zi;
                match (env.lower_at(ctx, wi), env.upper_at(ctx, wi)) {
                    (Some(lo), Some(hi)) => {
                        lower[i] = lo;
                        upper[i] = hi;
                        included[i] = true;
                    }
                    _ => n_excluded += 1,
                }
            }
        }
        InstrumentMode::ZAndW => unreachable!(),
    }

    let y = sample.y().iter().map(|v| f64::from(*v)).collect();
    Ok(MomentData {
        mode,
        design,
        y,
        upper,
        lower,
        included,
        n_excluded,
    })
}

/// Family of hypercube indicator functions over the conditioning space:
/// equal-mass quantile intervals on the continuous covariates crossed with
/// the discrete instrument levels.
#[derive(Debug, Clone)]
pub struct InstrumentalFunctions {
    mode: InstrumentMode,
    target: usize,
    binning: Binning,
    assignment: Vec<usize>,
    counts: Vec<usize>,
}

impl InstrumentalFunctions {
    /// Realized number of cubes (never above the configured target).
    pub fn n_cubes(&self) -> usize {
        self.counts.len()
    }

    /// Configured cube count the factorization aimed at.
    pub fn target(&self) -> usize {
        self.target
    }

    /// Instrument mode the cubes were built for.
    pub fn mode(&self) -> InstrumentMode {
        self.mode
    }

    /// Cube index of each observation.
    pub fn assignment(&self) -> &[usize] {
        &self.assignment
    }

    /// Observation count per cube over the build sample.
    pub fn counts(&self) -> &[usize] {
        &self.counts
    }

    /// Intervals per continuous dimension after quantile collapsing.
    pub fn intervals_per_dim(&self) -> Vec<usize> {
        self.binning.cells_per_dim()
    }
}

/// Builds the hypercube family for a sample, targeting `count` cubes from
/// below: with `L` discrete instrument categories and `d` continuous
/// dimensions, each dimension gets the largest `m` with `m^d * L <= count`.
///
/// Discrete axes follow the mode: the z levels in Z-mode, the w levels
/// (crossed with z when present) in W-mode, both in two-instrument mode.
/// Every observation lands in exactly one cube.
///
/// # Errors
///
/// Fails when `count` is below the number of discrete categories or a
/// required instrument column is missing.
pub fn build_hypercubes(
    sample: &Sample,
    count: usize,
    mode: InstrumentMode,
) -> Result<InstrumentalFunctions> {
    let mut level_axes: Vec<Vec<f64>> = Vec::new();
    let need_z = matches!(mode, InstrumentMode::ZOnly | InstrumentMode::ZAndW);
    let need_w = matches!(mode, InstrumentMode::WOnly | InstrumentMode::ZAndW);
    match sample.z() {
        Some(col) => {
            let mut levels = col.to_vec();
            levels.sort_by(|a, b| a.partial_cmp(b).unwrap());
            levels.dedup();
            level_axes.push(levels);
        }
        None if need_z => {
            return Err(Error::validation(
                "hypercubes in Z-mode need a z column",
            ));
        }
        None => {}
    }
    if need_w {
        let levels = sample
            .w_levels()
            .ok_or_else(|| Error::validation("hypercubes in W-mode need a w column"))?;
        level_axes.push(levels.to_vec());
    }

    let n_categories: usize = level_axes.iter().map(Vec::len).product();
    if count < n_categories {
        return Err(Error::validation(format!(
            "cube count {count} is below the {n_categories} discrete instrument categories"
        )));
    }
    let d = sample.dim();
    let per_dim = if d == 0 {
        1
    } else {
        let budget = count / n_categories;
        let mut m = (budget as f64).powf(1.0 / d as f64).round() as usize;
        m = m.max(1);
        while m.pow(d as u32) > budget {
            m -= 1;
        }
        while (m + 1).pow(d as u32) <= budget {
            m += 1;
        }
        m
    };
    let binning = Binning::from_sample(sample, per_dim)?;

    let n = sample.n();
    let mut strides = vec![binning.n_cells()];
    for axis in &level_axes {
        strides.push(axis.len());
    }
    let n_cubes: usize = strides.iter().product();
    let mut assignment = Vec::with_capacity(n);
    let mut counts = vec![0usize; n_cubes];
    for i in 0..n {
        let mut cube = binning.cell_of(sample.x_row(i));
        let mut axis_idx = 0;
        if let Some(col) = sample.z() {
            let zi = level_axes[axis_idx]
                .iter()
                .position(|v| *v == col[i])
                .expect("z value outside collected levels");
            cube = cube * level_axes[axis_idx].len() + zi;
            axis_idx += 1;
        }
        if need_w {
            let col = sample.w().expect("w column checked above");
            let wi = level_axes[axis_idx]
                .iter()
                .position(|v| *v == col[i])
                .expect("w value outside declared levels");
            cube = cube * level_axes[axis_idx].len() + wi;
        }
        counts[cube] += 1;
        assignment.push(cube);
    }

    Ok(InstrumentalFunctions {
        mode,
        target: count,
        binning,
        assignment,
        counts,
    })
}

/// First two sample moments of `g * indicator(cube)` for one cube: the
/// full-sample mean and standard deviation of each component, plus the
/// number of included observations in the cube.
#[derive(Debug, Clone, Copy)]
pub struct CubeMoments {
    pub cube: usize,
    pub count: usize,
    pub mean: [f64; 2],
    pub sd: [f64; 2],
}

/// Criterion value with bookkeeping.
#[derive(Debug, Clone, Copy)]
pub struct CriterionStats {
    /// Sum of squared standardized one-sided violations.
    pub q: f64,
    /// Cubes with no included observations, skipped in the sum.
    pub skipped_cubes: usize,
}

/// Computes the per-cube moments of the moment function at `beta`: for
/// each cube `j` and component `k`, the mean and standard deviation of
/// `g_k * indicator(cube j)` over all included observations.
pub fn criterion_trace(
    beta: &[f64],
    model: &ModelSpec,
    data: &MomentData,
    cubes: &InstrumentalFunctions,
) -> Result<Vec<CubeMoments>> {
    model.validate()?;
    if beta.len() != model.dim {
        return Err(Error::validation(format!(
            "coefficient vector has {} coordinates, model expects {}",
            beta.len(),
            model.dim
        )));
    }
    if model.dim != data.dim() {
        return Err(Error::validation(format!(
            "model dimension {} does not match regressor dimension {}",
            model.dim,
            data.dim()
        )));
    }
    if data.n() != cubes.assignment.len() {
        return Err(Error::data(
            "moment data and hypercubes were built from different samples",
        ));
    }
    if data.mode() != cubes.mode() {
        return Err(Error::validation(
            "moment data and hypercubes disagree on the instrument mode",
        ));
    }

    let n_cubes = cubes.n_cubes();
    let mut sums = vec![[0.0f64; 2]; n_cubes];
    let mut sq_sums = vec![[0.0f64; 2]; n_cubes];
    let mut members = vec![0usize; n_cubes];
    let mut n_included = 0usize;
    for i in 0..data.n() {
        if !data.included[i] {
            continue;
        }
        n_included += 1;
        let index = data.design.index(i, beta);
        let g = match &model.kind {
            ModelKind::Parametric(link) => {
                moment_parametric(data.y[i], index, link, data.upper[i], data.lower[i])
            }
            ModelKind::Semiparametric => {
                moment_semiparametric(data.y[i], index, data.upper[i], data.lower[i])
            }
        };
        let j = cubes.assignment[i];
        members[j] += 1;
        sums[j][0] += g.0;
        sums[j][1] += g.1;
        sq_sums[j][0] += g.0 * g.0;
        sq_sums[j][1] += g.1 * g.1;
    }
    if n_included == 0 {
        return Err(Error::data("no observation has a defined envelope"));
    }

    let n = n_included as f64;
    let mut trace = Vec::with_capacity(n_cubes);
    for j in 0..n_cubes {
        let mut mean = [0.0; 2];
        let mut sd = [0.0; 2];
        for k in 0..2 {
            mean[k] = sums[j][k] / n;
            let var = if n_included > 1 {
                (sq_sums[j][k] - n * mean[k] * mean[k]).max(0.0) / (n - 1.0)
            } else {
                0.0
            };
            sd[k] = var.sqrt();
        }
        trace.push(CubeMoments {
            cube: j,
            count: members[j],
            mean,
            sd,
        });
    }
    Ok(trace)
}

/// Folds per-cube moments into the criterion: empty cubes are skipped and
/// counted, every other term contributes the squared positive part of the
/// standardized violation `-mean / max(sd, floor)`.
pub fn q_from_trace(trace: &[CubeMoments]) -> CriterionStats {
    let mut q = 0.0;
    let mut skipped = 0;
    for cube in trace {
        if cube.count == 0 {
            skipped += 1;
            continue;
        }
        for k in 0..2 {
            let t = (-cube.mean[k] / cube.sd[k].max(SIGMA_FLOOR)).max(0.0);
            q += t * t;
        }
    }
    CriterionStats {
        q,
        skipped_cubes: skipped,
    }
}

/// Criterion function for set estimation: sum over cubes and moment
/// components of the squared standardized violations at `beta`.
pub fn criterion(
    beta: &[f64],
    model: &ModelSpec,
    data: &MomentData,
    cubes: &InstrumentalFunctions,
) -> Result<f64> {
    Ok(q_from_trace(&criterion_trace(beta, model, data, cubes)?).q)
}
