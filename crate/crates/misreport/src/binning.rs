//! Equal-mass binning of covariates into discrete cells.

use crate::data::Sample;
use crate::error::{Error, Result};

/// Partition of the covariate space into a grid of quantile cells.
///
/// Each covariate dimension is split at empirical quantiles so cells carry
/// roughly equal mass; the cell index is the mixed-radix combination of the
/// per-dimension interval indices.
#[derive(Debug, Clone)]
pub struct Binning {
    cuts: Vec<Vec<f64>>,
    collapsed: Vec<bool>,
    n_cells: usize,
}

impl Binning {
    /// Builds a binning with `cells_per_dim` quantile intervals per
    /// covariate dimension.
    ///
    /// Dimensions whose cut points collapse (constant or near-constant
    /// columns) end up with fewer cells and are flagged in
    /// [`collapsed_dims`](Self::collapsed_dims).
    pub fn from_sample(sample: &Sample, cells_per_dim: usize) -> Result<Self> {
        if cells_per_dim == 0 {
            return Err(Error::validation("cells_per_dim must be at least 1"));
        }
        let n = sample.n();
        let dim = sample.dim();
        let mut cuts = Vec::with_capacity(dim);
        let mut collapsed = Vec::with_capacity(dim);
        for d in 0..dim {
            let mut col: Vec<f64> = (0..n).map(|i| sample.x_row(i)[d]).collect();
            col.sort_by(|a, b| a.partial_cmp(b).unwrap());
            let mut dim_cuts: Vec<f64> = Vec::new();
            for j in 1..cells_per_dim {
                let pos = j * n / cells_per_dim;
                if pos == 0 || pos >= n {
                    continue;
                }
                if col[pos - 1] == col[pos] {
                    continue;
                }
                let cut = 0.5 * (col[pos - 1] + col[pos]);
                if dim_cuts.last().is_none_or(|last| cut > *last) {
                    dim_cuts.push(cut);
                }
            }
            collapsed.push(cells_per_dim > 1 && dim_cuts.len() + 1 < cells_per_dim);
            cuts.push(dim_cuts);
        }
        let n_cells = cuts.iter().map(|c| c.len() + 1).product::<usize>().max(1);
        Ok(Binning {
            cuts,
            collapsed,
            n_cells,
        })
    }

    /// Total number of cells in the grid.
    pub fn n_cells(&self) -> usize {
        self.n_cells
    }

    /// Number of intervals per dimension after collapsing.
    pub fn cells_per_dim(&self) -> Vec<usize> {
        self.cuts.iter().map(|c| c.len() + 1).collect()
    }

    /// Dimensions where the requested cell count could not be met.
    pub fn collapsed_dims(&self) -> &[bool] {
        &self.collapsed
    }

    /// Interior cut points for dimension `d`.
    pub fn cuts(&self, d: usize) -> &[f64] {
        &self.cuts[d]
    }

    /// Cell index of a covariate row.
    pub fn cell_of(&self, x_row: &[f64]) -> usize {
        debug_assert_eq!(x_row.len(), self.cuts.len());
        let mut cell = 0;
        for (d, cuts) in self.cuts.iter().enumerate() {
            let idx = cuts.partition_point(|c| x_row[d] > *c);
            cell = cell * (cuts.len() + 1) + idx;
        }
        cell
    }
}
