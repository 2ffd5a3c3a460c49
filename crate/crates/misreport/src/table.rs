//! Conditional probability tables and instrument envelopes.
//!
//! A [`CondProbTable`] holds `Pr(Y = 1)` by covariate cell and instrument
//! level, either estimated from a sample by cell frequencies or supplied
//! exactly (population tables, hand-built examples). Envelopes collapse the
//! instrument dimension:
//!
//! * [`EnvelopeZ`]: per covariate cell, the infimum and supremum of the
//!   reported probability over outcome-instrument levels;
//! * [`EnvelopeW`]: per (cell, reporting-instrument level), the running
//!   infimum and supremum over levels up to and including the current one
//!   in the declared order.

use crate::binning::Binning;
use crate::data::Sample;
use crate::error::{Error, Result};

/// Largest number of distinct outcome-instrument levels accepted before the
/// column is assumed to be continuous by mistake.
const MAX_Z_LEVELS: usize = 64;

/// `Pr(Y = 1)` by (covariate cell, z level, w level).
#[derive(Debug, Clone)]
pub struct CondProbTable {
    n_x_cells: usize,
    z_levels: Vec<f64>,
    w_levels: Vec<f64>,
    weight: Vec<f64>,
    success: Vec<f64>,
    min_cell_count: f64,
    population: bool,
}

impl CondProbTable {
    /// Estimates the table from a sample by cell frequencies.
    ///
    /// Slices whose observation count falls below `min_cell_count` are
    /// reported as undefined by [`prob`](Self::prob) and skipped by the
    /// envelope constructors.
    pub fn estimate(sample: &Sample, binning: &Binning, min_cell_count: usize) -> Result<Self> {
        let z_levels = match sample.z() {
            Some(col) => {
                let mut levels = col.to_vec();
                levels.sort_by(|a, b| a.partial_cmp(b).unwrap());
                levels.dedup();
                if levels.len() > MAX_Z_LEVELS {
                    return Err(Error::data(format!(
                        "outcome instrument has {} distinct values; expected a discrete column",
                        levels.len()
                    )));
                }
                levels
            }
            None => Vec::new(),
        };
        let w_levels = sample.w_levels().map(<[f64]>::to_vec).unwrap_or_default();
        let nz = z_levels.len().max(1);
        let nw = w_levels.len().max(1);
        let n_x_cells = binning.n_cells();
        let size = n_x_cells * nz * nw;
        let mut weight = vec![0.0; size];
        let mut success = vec![0.0; size];
        for i in 0..sample.n() {
            let cell = binning.cell_of(sample.x_row(i));
            let zi = match sample.z() {
                Some(col) => z_levels.partition_point(|l| *l < col[i]),
                None => 0,
            };
            let wi = match (sample.w(), sample.w_levels()) {
                // Membership was validated when the sample was built.
                (Some(col), Some(levels)) => {
                    levels.iter().position(|l| *l == col[i]).unwrap()
                }
                _ => 0,
            };
            let idx = (cell * nz + zi) * nw + wi;
            weight[idx] += 1.0;
            success[idx] += f64::from(sample.y()[i]);
        }
        Ok(CondProbTable {
            n_x_cells,
            z_levels,
            w_levels,
            weight,
            success,
            min_cell_count: min_cell_count as f64,
            population: false,
        })
    }

    /// Builds an exact table from per-slice masses and success masses, laid
    /// out as `(cell * nz + zi) * nw + wi` with `nz = max(1, z_levels.len())`
    /// and `nw = max(1, w_levels.len())`.
    pub fn from_masses(
        n_x_cells: usize,
        z_levels: Vec<f64>,
        w_levels: Vec<f64>,
        weight: Vec<f64>,
        success: Vec<f64>,
    ) -> Result<Self> {
        let size = n_x_cells * z_levels.len().max(1) * w_levels.len().max(1);
        if n_x_cells == 0 {
            return Err(Error::validation("table needs at least one cell"));
        }
        if weight.len() != size || success.len() != size {
            return Err(Error::validation(format!(
                "expected {size} mass entries, got {} weights and {} successes",
                weight.len(),
                success.len()
            )));
        }
        for (i, (w, s)) in weight.iter().zip(&success).enumerate() {
            if !(*w >= 0.0) || !(*s >= 0.0) || s > w {
                return Err(Error::validation(format!(
                    "invalid masses at slice {i}: weight {w}, success {s}"
                )));
            }
        }
        Ok(CondProbTable {
            n_x_cells,
            z_levels,
            w_levels,
            weight,
            success,
            min_cell_count: 0.0,
            population: true,
        })
    }

    /// Builds an exact table with equal slice masses from probabilities
    /// alone. Convenient for worked examples and brute-force checks.
    pub fn from_probs(
        n_x_cells: usize,
        z_levels: Vec<f64>,
        w_levels: Vec<f64>,
        probs: &[f64],
    ) -> Result<Self> {
        if let Some(p) = probs.iter().find(|p| !(0.0..=1.0).contains(*p)) {
            return Err(Error::validation(format!("probability {p} outside [0, 1]")));
        }
        let weight = vec![1.0; probs.len()];
        Self::from_masses(n_x_cells, z_levels, w_levels, weight, probs.to_vec())
    }

    /// Number of covariate cells.
    pub fn n_x_cells(&self) -> usize {
        self.n_x_cells
    }

    /// Outcome-instrument levels in increasing order; empty when absent.
    pub fn z_levels(&self) -> &[f64] {
        &self.z_levels
    }

    /// Reporting-instrument levels in declared order; empty when absent.
    pub fn w_levels(&self) -> &[f64] {
        &self.w_levels
    }

    /// True when built by [`from_masses`](Self::from_masses) or
    /// [`from_probs`](Self::from_probs) rather than estimated.
    pub fn is_population(&self) -> bool {
        self.population
    }

    fn nz(&self) -> usize {
        self.z_levels.len().max(1)
    }

    fn nw(&self) -> usize {
        self.w_levels.len().max(1)
    }

    /// Number of (cell, z level) slices used as conditioning contexts by
    /// the reporting-instrument envelopes.
    pub fn n_xz_cells(&self) -> usize {
        self.n_x_cells * self.nz()
    }

    /// Splits a flattened (cell, z) index back into the cell and z level.
    pub fn xz_context(&self, xz: usize) -> (usize, Option<f64>) {
        if self.z_levels.is_empty() {
            (xz, None)
        } else {
            (xz / self.nz(), Some(self.z_levels[xz % self.nz()]))
        }
    }

    fn aggregate(&self, cell: usize, zi: Option<usize>, wi: Option<usize>) -> (f64, f64) {
        let (nz, nw) = (self.nz(), self.nw());
        let z_range = zi.map_or(0..nz, |i| i..i + 1);
        let mut weight = 0.0;
        let mut success = 0.0;
        for z in z_range {
            let w_range = wi.map_or(0..nw, |i| i..i + 1);
            for w in w_range {
                let idx = (cell * nz + z) * nw + w;
                weight += self.weight[idx];
                success += self.success[idx];
            }
        }
        (weight, success)
    }

    /// Observation count (or population mass) of a slice; `None` axes are
    /// marginalized.
    pub fn count(&self, cell: usize, zi: Option<usize>, wi: Option<usize>) -> f64 {
        self.aggregate(cell, zi, wi).0
    }

    /// Estimated `Pr(Y = 1)` on a slice, or `None` when the slice is empty
    /// or has fewer observations than the inclusion threshold. `None` axes
    /// are marginalized with their observed weights.
    pub fn prob(&self, cell: usize, zi: Option<usize>, wi: Option<usize>) -> Option<f64> {
        let (weight, success) = self.aggregate(cell, zi, wi);
        if weight <= 0.0 || weight < self.min_cell_count {
            None
        } else {
            Some(success / weight)
        }
    }

    /// Probability at a flattened (cell, z) context and a w level.
    pub fn prob_xz(&self, xz: usize, wi: Option<usize>) -> Option<f64> {
        if self.z_levels.is_empty() {
            self.prob(xz, None, wi)
        } else {
            self.prob(xz / self.nz(), Some(xz % self.nz()), wi)
        }
    }

    /// Number of finest slices excluded by the count threshold.
    pub fn n_excluded(&self) -> usize {
        self.weight
            .iter()
            .filter(|w| **w <= 0.0 || **w < self.min_cell_count)
            .count()
    }
}

/// Per-cell infimum and supremum of the reported probability over
/// outcome-instrument levels.
#[derive(Debug, Clone)]
pub struct EnvelopeZ {
    /// Infimum per covariate cell; `None` when no level has data.
    pub lower: Vec<Option<f64>>,
    /// Supremum per covariate cell.
    pub upper: Vec<Option<f64>>,
    /// Instrument level attaining the infimum.
    pub arg_lower: Vec<Option<f64>>,
    /// Instrument level attaining the supremum.
    pub arg_upper: Vec<Option<f64>>,
}

/// Computes the outcome-instrument envelopes of a table.
///
/// The reporting instrument, when present, is marginalized: the envelope
/// brackets `Pr(Y = 1 | cell, z)`.
pub fn envelopes_z(table: &CondProbTable) -> Result<EnvelopeZ> {
    if table.z_levels().is_empty() {
        return Err(Error::validation(
            "table has no outcome-instrument levels; envelopes over z are undefined",
        ));
    }
    let n = table.n_x_cells();
    let mut env = EnvelopeZ {
        lower: vec![None; n],
        upper: vec![None; n],
        arg_lower: vec![None; n],
        arg_upper: vec![None; n],
    };
    for cell in 0..n {
        for (zi, level) in table.z_levels().iter().enumerate() {
            let Some(p) = table.prob(cell, Some(zi), None) else {
                continue;
            };
            if env.lower[cell].is_none_or(|cur| p < cur) {
                env.lower[cell] = Some(p);
                env.arg_lower[cell] = Some(*level);
            }
            if env.upper[cell].is_none_or(|cur| p > cur) {
                env.upper[cell] = Some(p);
                env.arg_upper[cell] = Some(*level);
            }
        }
    }
    Ok(env)
}

/// Running envelopes of the reported probability along the declared
/// reporting-instrument order, per (cell, z) context.
#[derive(Debug, Clone)]
pub struct EnvelopeW {
    /// Reporting-instrument levels in declared order.
    pub w_levels: Vec<f64>,
    /// Number of (cell, z) contexts; the layout of the arrays below is
    /// `context * w_levels.len() + wi`.
    pub n_contexts: usize,
    /// `Pr(Y = 1 | context, w)` per slice, `None` when excluded.
    pub prob: Vec<Option<f64>>,
    /// Running infimum over included levels up to each w.
    pub lower: Vec<Option<f64>>,
    /// Running supremum over included levels up to each w.
    pub upper: Vec<Option<f64>>,
}

impl EnvelopeW {
    fn at(&self, context: usize, wi: usize) -> usize {
        context * self.w_levels.len() + wi
    }

    /// Reported probability at a context and w index.
    pub fn prob_at(&self, context: usize, wi: usize) -> Option<f64> {
        self.prob[self.at(context, wi)]
    }

    /// Running infimum at a context and w index.
    pub fn lower_at(&self, context: usize, wi: usize) -> Option<f64> {
        self.lower[self.at(context, wi)]
    }

    /// Running supremum at a context and w index.
    pub fn upper_at(&self, context: usize, wi: usize) -> Option<f64> {
        self.upper[self.at(context, wi)]
    }
}

/// Computes the running reporting-instrument envelopes of a table.
///
/// Contexts are (cell, z level) pairs when an outcome instrument is
/// present, otherwise plain cells. Excluded slices contribute nothing to
/// the running extrema; the envelope is `None` until the first included
/// level.
pub fn envelopes_w(table: &CondProbTable) -> Result<EnvelopeW> {
    if table.w_levels().is_empty() {
        return Err(Error::validation(
            "table has no reporting-instrument levels; envelopes over w are undefined",
        ));
    }
    let n_contexts = table.n_xz_cells();
    let nw = table.w_levels().len();
    let mut env = EnvelopeW {
        w_levels: table.w_levels().to_vec(),
        n_contexts,
        prob: vec![None; n_contexts * nw],
        lower: vec![None; n_contexts * nw],
        upper: vec![None; n_contexts * nw],
    };
    for context in 0..n_contexts {
        let mut run_lo: Option<f64> = None;
        let mut run_hi: Option<f64> = None;
        for wi in 0..nw {
            let p = table.prob_xz(context, Some(wi));
            if let Some(p) = p {
                run_lo = Some(run_lo.map_or(p, |cur: f64| cur.min(p)));
                run_hi = Some(run_hi.map_or(p, |cur: f64| cur.max(p)));
            }
            let idx = context * nw + wi;
            env.prob[idx] = p;
            env.lower[idx] = run_lo;
            env.upper[idx] = run_hi;
        }
    }
    Ok(env)
}
