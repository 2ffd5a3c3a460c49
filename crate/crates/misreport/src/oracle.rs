//! Brute-force verification of the closed-form bounds.
//!
//! The closed forms in [`bounds`](crate::bounds) are short but easy to get
//! subtly wrong, so this module checks them from two independent
//! directions:
//!
//! * [`brute_force_prob_bounds`] enumerates misreporting structures on a
//!   grid of step `delta`, keeps those whose implied reported probabilities
//!   match the table within half a grid step, and reports the range of true
//!   probabilities the survivors allow. It shares no code with the closed
//!   forms beyond the probability table itself.
//! * [`construct_sharpness_witness`] builds the explicit structure that
//!   attains a bound, and [`verify_witness`] checks it reproduces the
//!   reported table exactly and satisfies every maintained assumption.
//!
//! A structure is a true probability per outcome-instrument level together
//! with a pair of misreporting rates per reporting-instrument level. The
//! enumeration respects the same assumptions as the closed forms: rates
//! constant across Z, true probability constant across W, rates weakly
//! decreasing along the declared W order, rate sum at most one, and the
//! active auxiliary restriction.

use serde::Serialize;

use crate::bounds::{compute_bounds, two_instrument_diagnostics, AssumptionSet, BoundFlag,
    InstrumentMode, Restriction, DEFAULT_TAU, EPS_DENOM};
use crate::error::{Error, Result};
use crate::table::CondProbTable;

/// Slack applied when snapping real intervals to grid indices, so values
/// that are exact grid points up to rounding stay included.
const IDX_EPS: f64 = 1e-9;

/// Enumeration settings for [`brute_force_prob_bounds`].
#[derive(Debug, Clone, Copy, Serialize)]
pub struct OracleConfig {
    /// Number of grid intervals; the grid step is `1 / grid_steps`.
    pub grid_steps: usize,
    /// Largest allowed gap between a candidate's implied reported
    /// probability and the table. Defaults to half a grid step.
    pub tolerance: Option<f64>,
    /// Upper bound on the estimated number of inner-loop operations; the
    /// enumeration refuses to start beyond it rather than run unbounded.
    pub max_ops: u64,
}

impl Default for OracleConfig {
    fn default() -> Self {
        OracleConfig { grid_steps: 100, tolerance: None, max_ops: 2_000_000_000 }
    }
}

impl OracleConfig {
    pub fn delta(&self) -> f64 {
        1.0 / self.grid_steps as f64
    }

    pub fn effective_tolerance(&self) -> f64 {
        self.tolerance.unwrap_or(0.5 * self.delta())
    }

    fn validate(&self) -> Result<()> {
        if self.grid_steps == 0 {
            return Err(Error::validation("grid must have at least one step"));
        }
        if let Some(tol) = self.tolerance {
            if !tol.is_finite() || tol < 0.0 {
                return Err(Error::validation(format!(
                    "tolerance must be a nonnegative number, got {tol}"
                )));
            }
        }
        Ok(())
    }
}

/// Feasible range of the true probability for one conditioning context.
#[derive(Debug, Clone, Serialize)]
pub struct OracleRow {
    pub cell: usize,
    pub z: Option<f64>,
    /// Smallest and largest feasible grid value, or `None` when no
    /// enumerated structure matches the table: the assumptions are jointly
    /// infeasible at this context.
    pub range: Option<(f64, f64)>,
}

/// Result of the brute-force enumeration.
#[derive(Debug, Clone, Serialize)]
pub struct OracleBounds {
    pub delta: f64,
    pub tolerance: f64,
    pub rows: Vec<OracleRow>,
}

impl OracleBounds {
    pub fn row(&self, cell: usize, z: Option<f64>) -> Option<&OracleRow> {
        self.rows.iter().find(|r| r.cell == cell && r.z == z)
    }
}

/// Enumerates misreporting structures on a grid and reports, per context,
/// the range of true probabilities consistent with the table.
pub fn brute_force_prob_bounds(
    table: &CondProbTable,
    assumptions: &AssumptionSet,
    config: &OracleConfig,
) -> Result<OracleBounds> {
    assumptions.validate()?;
    config.validate()?;
    check_budget(table, assumptions, config)?;
    let rows = match assumptions.instruments {
        InstrumentMode::ZOnly => oracle_z(table, assumptions.restriction, config)?,
        InstrumentMode::WOnly => oracle_w(table, assumptions.restriction, config)?,
        InstrumentMode::ZAndW => oracle_zw(table, config)?,
    };
    Ok(OracleBounds {
        delta: config.delta(),
        tolerance: config.effective_tolerance(),
        rows,
    })
}

fn check_budget(
    table: &CondProbTable,
    assumptions: &AssumptionSet,
    config: &OracleConfig,
) -> Result<()> {
    let g = config.grid_steps as u128 + 1;
    let nz = table.z_levels().len().max(1) as u128;
    let nw = table.w_levels().len().max(1) as u128;
    let cells = table.n_x_cells() as u128;
    let est: u128 = match assumptions.instruments {
        InstrumentMode::ZOnly => cells * g * g / 2 * nz,
        InstrumentMode::WOnly => cells * nz * g * nw * g,
        InstrumentMode::ZAndW => cells
            .saturating_mul(g.saturating_pow(nz as u32))
            .saturating_mul(nw * g),
    };
    if est > config.max_ops as u128 {
        return Err(Error::computation(format!(
            "enumeration needs about {est} operations, above the budget of {}; \
             reduce the grid or the number of instrument levels",
            config.max_ops
        )));
    }
    Ok(())
}

/// Snaps a real interval to grid indices in `[0, max_idx]`; `None` when no
/// grid point falls inside.
fn grid_range(lo: f64, hi: f64, delta: f64, max_idx: i64) -> Option<(i64, i64)> {
    let lo_i = ((lo / delta) - IDX_EPS).ceil() as i64;
    let hi_i = ((hi / delta) + IDX_EPS).floor() as i64;
    let lo_i = lo_i.max(0);
    let hi_i = hi_i.min(max_idx);
    (lo_i <= hi_i).then_some((lo_i, hi_i))
}

fn pair_allowed(i0: i64, i1: i64, g: i64, restriction: Restriction, delta: f64) -> bool {
    if i0 + i1 > g {
        return false;
    }
    match restriction {
        Restriction::None => true,
        Restriction::NoFalsePositives => i0 == 0,
        Restriction::NoFalseNegatives => i1 == 0,
        Restriction::Capped { fp_cap, fn_cap } => {
            i0 as f64 * delta <= fp_cap + IDX_EPS && i1 as f64 * delta <= fn_cap + IDX_EPS
        }
        Restriction::FalsePositivesSmaller => i0 <= i1,
        Restriction::FalseNegativesSmaller => i1 <= i0,
    }
}

/// Clips a column's feasible false-negative index interval to an auxiliary
/// restriction, given the false-positive index `i0` of the column.
fn clip_column(
    range: Option<(i64, i64)>,
    i0: i64,
    restriction: Restriction,
    delta: f64,
) -> Option<(i64, i64)> {
    let (mut lo, mut hi) = range?;
    match restriction {
        Restriction::None => {}
        Restriction::NoFalsePositives => {
            if i0 != 0 {
                return None;
            }
        }
        Restriction::NoFalseNegatives => hi = hi.min(0),
        Restriction::Capped { fp_cap, fn_cap } => {
            if i0 as f64 * delta > fp_cap + IDX_EPS {
                return None;
            }
            hi = hi.min(((fn_cap + IDX_EPS) / delta).floor() as i64);
        }
        Restriction::FalsePositivesSmaller => lo = lo.max(i0),
        Restriction::FalseNegativesSmaller => hi = hi.min(i0),
    }
    (lo <= hi).then_some((lo, hi))
}

fn oracle_z(
    table: &CondProbTable,
    restriction: Restriction,
    config: &OracleConfig,
) -> Result<Vec<OracleRow>> {
    if table.z_levels().is_empty() {
        return Err(Error::validation("enumeration over Z requires Z levels"));
    }
    let g = config.grid_steps as i64;
    let delta = config.delta();
    let tol = config.effective_tolerance();
    let mut rows = Vec::new();
    for cell in 0..table.n_x_cells() {
        let included: Vec<(usize, f64)> = (0..table.z_levels().len())
            .filter_map(|zi| table.prob(cell, Some(zi), None).map(|p| (zi, p)))
            .collect();
        if included.is_empty() {
            continue;
        }
        let mut best: Vec<Option<(i64, i64)>> = vec![None; included.len()];
        let mut scratch: Vec<(i64, i64)> = Vec::with_capacity(included.len());
        for i0 in 0..=g {
            for i1 in 0..=(g - i0) {
                if !pair_allowed(i0, i1, g, restriction, delta) {
                    continue;
                }
                let a0 = i0 as f64 * delta;
                let s = 1.0 - (i0 + i1) as f64 * delta;
                scratch.clear();
                let mut feasible = true;
                for &(_, p) in &included {
                    let range = if s < EPS_DENOM {
                        // Degenerate rate sum: the implied reported
                        // probability is a0 no matter the true one.
                        ((a0 - p).abs() <= tol + IDX_EPS * delta).then_some((0, g))
                    } else {
                        grid_range((p - a0 - tol) / s, (p - a0 + tol) / s, delta, g)
                    };
                    match range {
                        Some(r) => scratch.push(r),
                        None => {
                            feasible = false;
                            break;
                        }
                    }
                }
                if !feasible {
                    continue;
                }
                for (slot, r) in best.iter_mut().zip(&scratch) {
                    *slot = match *slot {
                        None => Some(*r),
                        Some((lo, hi)) => Some((lo.min(r.0), hi.max(r.1))),
                    };
                }
            }
        }
        for (&(zi, _), range) in included.iter().zip(&best) {
            rows.push(OracleRow {
                cell,
                z: Some(table.z_levels()[zi]),
                range: range.map(|(lo, hi)| (lo as f64 * delta, hi as f64 * delta)),
            });
        }
    }
    Ok(rows)
}

/// Feasible false-negative index intervals per false-positive column, for
/// one reporting-instrument level. Computed from a candidate true
/// probability and the reported probability at that level.
fn level_columns(
    cols: &mut [Option<(i64, i64)>],
    p_star: f64,
    reported: Option<f64>,
    g: i64,
    delta: f64,
    tol: f64,
    restriction: Restriction,
) {
    for (i0_us, slot) in cols.iter_mut().enumerate() {
        let i0 = i0_us as i64;
        let degree_cap = g - i0;
        let range = match reported {
            // No data at this level: any rate pair within the degree cap.
            None => Some((0, degree_cap)),
            Some(p) => {
                let a0 = i0 as f64 * delta;
                if p_star < EPS_DENOM {
                    // True probability zero: the report is a0 exactly.
                    ((a0 - p).abs() <= tol + IDX_EPS * delta).then_some((0, degree_cap))
                } else {
                    let lo = 1.0 - (p + tol - (1.0 - p_star) * a0) / p_star;
                    let hi = 1.0 - (p - tol - (1.0 - p_star) * a0) / p_star;
                    grid_range(lo, hi, delta, degree_cap)
                }
            }
        };
        *slot = clip_column(range, i0, restriction, delta);
    }
}

/// Advances the reachable set of rate pairs across one reporting-instrument
/// level: a pair is reachable when the level allows it and some reachable
/// pair at the previous level dominates it componentwise.
fn advance_chain(
    reach: &mut Vec<Option<(i64, i64)>>,
    cols: &[Option<(i64, i64)>],
    caps: &mut Vec<i64>,
    first: bool,
) -> bool {
    let n = cols.len();
    if first {
        reach.clear();
        reach.extend_from_slice(cols);
    } else {
        caps.clear();
        caps.resize(n, i64::MIN);
        let mut running = i64::MIN;
        for i0 in (0..n).rev() {
            if let Some((_, hi)) = reach[i0] {
                running = running.max(hi);
            }
            caps[i0] = running;
        }
        for i0 in 0..n {
            reach[i0] = match cols[i0] {
                Some((lo, hi)) if caps[i0] >= lo => Some((lo, hi.min(caps[i0]))),
                _ => None,
            };
        }
    }
    reach.iter().any(Option::is_some)
}

fn oracle_w(
    table: &CondProbTable,
    restriction: Restriction,
    config: &OracleConfig,
) -> Result<Vec<OracleRow>> {
    if table.w_levels().is_empty() {
        return Err(Error::validation("enumeration over W requires W levels"));
    }
    let g = config.grid_steps as i64;
    let delta = config.delta();
    let tol = config.effective_tolerance();
    let nw = table.w_levels().len();
    let n_cols = config.grid_steps + 1;
    let mut cols = vec![None; n_cols];
    let mut reach: Vec<Option<(i64, i64)>> = Vec::with_capacity(n_cols);
    let mut caps: Vec<i64> = Vec::new();
    let mut rows = Vec::new();
    for ctx in 0..table.n_xz_cells() {
        let reported: Vec<f64> = (0..nw)
            .filter_map(|wi| table.prob_xz(ctx, Some(wi)))
            .collect();
        if reported.is_empty() {
            continue;
        }
        let mut range: Option<(i64, i64)> = None;
        for pi in 0..=g {
            let p_star = pi as f64 * delta;
            let mut feasible = true;
            for (k, &p) in reported.iter().enumerate() {
                level_columns(&mut cols, p_star, Some(p), g, delta, tol, restriction);
                if !advance_chain(&mut reach, &cols, &mut caps, k == 0) {
                    feasible = false;
                    break;
                }
            }
            if feasible {
                range = match range {
                    None => Some((pi, pi)),
                    Some((lo, _)) => Some((lo, pi)),
                };
            }
        }
        let (cell, z) = table.xz_context(ctx);
        rows.push(OracleRow {
            cell,
            z,
            range: range.map(|(lo, hi)| (lo as f64 * delta, hi as f64 * delta)),
        });
    }
    Ok(rows)
}

fn oracle_zw(table: &CondProbTable, config: &OracleConfig) -> Result<Vec<OracleRow>> {
    if table.z_levels().is_empty() || table.w_levels().is_empty() {
        return Err(Error::validation(
            "joint enumeration requires both instruments",
        ));
    }
    let g = config.grid_steps as i64;
    let delta = config.delta();
    let tol = config.effective_tolerance();
    let nw = table.w_levels().len();
    let n_cols = config.grid_steps + 1;
    let mut rows = Vec::new();
    let mut cols = vec![None; n_cols];
    let mut zcols = vec![None; n_cols];
    let mut reach: Vec<Option<(i64, i64)>> = Vec::with_capacity(n_cols);
    let mut caps: Vec<i64> = Vec::new();
    for cell in 0..table.n_x_cells() {
        // Reported probabilities per included z, along the w order.
        let mut included: Vec<(usize, Vec<Option<f64>>)> = Vec::new();
        for zi in 0..table.z_levels().len() {
            let by_w: Vec<Option<f64>> =
                (0..nw).map(|wi| table.prob(cell, Some(zi), Some(wi))).collect();
            if by_w.iter().any(Option::is_some) {
                included.push((zi, by_w));
            }
        }
        if included.is_empty() {
            continue;
        }
        let mut best: Vec<Option<(i64, i64)>> = vec![None; included.len()];
        let mut tuple = vec![0i64; included.len()];
        loop {
            let mut feasible = true;
            for wi in 0..nw {
                let mut first_z = true;
                for (k, (_, by_w)) in included.iter().enumerate() {
                    let p_star = tuple[k] as f64 * delta;
                    if first_z {
                        level_columns(&mut cols, p_star, by_w[wi], g, delta, tol,
                            Restriction::None);
                        first_z = false;
                    } else {
                        level_columns(&mut zcols, p_star, by_w[wi], g, delta, tol,
                            Restriction::None);
                        for (c, zc) in cols.iter_mut().zip(&zcols) {
                            *c = match (*c, *zc) {
                                (Some((l1, h1)), Some((l2, h2))) if l1.max(l2) <= h1.min(h2) => {
                                    Some((l1.max(l2), h1.min(h2)))
                                }
                                _ => None,
                            };
                        }
                    }
                }
                if !advance_chain(&mut reach, &cols, &mut caps, wi == 0) {
                    feasible = false;
                    break;
                }
            }
            if feasible {
                for (slot, &pi) in best.iter_mut().zip(&tuple) {
                    *slot = match *slot {
                        None => Some((pi, pi)),
                        Some((lo, hi)) => Some((lo.min(pi), hi.max(pi))),
                    };
                }
            }
            // Odometer over true-probability tuples.
            let mut k = 0;
            loop {
                if k == tuple.len() {
                    break;
                }
                tuple[k] += 1;
                if tuple[k] <= g {
                    break;
                }
                tuple[k] = 0;
                k += 1;
            }
            if k == tuple.len() {
                break;
            }
        }
        for ((zi, _), range) in included.iter().zip(&best) {
            rows.push(OracleRow {
                cell,
                z: Some(table.z_levels()[*zi]),
                range: range.map(|(lo, hi)| (lo as f64 * delta, hi as f64 * delta)),
            });
        }
    }
    Ok(rows)
}

/// Which end of the identified interval a witness attains.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum BoundSide {
    Lower,
    Upper,
}

/// An explicit misreporting structure attaining one end of the bounds.
#[derive(Debug, Clone, Serialize)]
pub struct Witness {
    pub cell: usize,
    pub side: BoundSide,
    /// True probability per conditioning context: one entry per included Z
    /// level, or a single entry when the table has no Z.
    pub p_star: Vec<(Option<f64>, f64)>,
    /// False-positive rate per W level, a single entry when the table has
    /// no W.
    pub fp_rates: Vec<f64>,
    /// False-negative rate per W level.
    pub fn_rates: Vec<f64>,
}

/// Outcome of checking a witness against the table and assumptions.
#[derive(Debug, Clone, Serialize)]
pub struct WitnessReport {
    /// Largest gap between the witness's implied reported probability and
    /// the table, across every included slice.
    pub max_mixture_error: f64,
    /// Largest gap between the witness's true probability and the
    /// closed-form bound it should attain.
    pub max_bound_gap: f64,
    pub failures: Vec<String>,
}

impl WitnessReport {
    pub fn ok(&self) -> bool {
        self.failures.is_empty()
    }
}

/// Builds the structure attaining `side` of the closed-form bounds for one
/// covariate cell.
///
/// Constructions exist for the unrestricted single-instrument bounds, the
/// one-sided restrictions, and the unrestricted two-instrument bounds with
/// a binary W; those are exactly the cases where the closed forms are
/// sharp. Capped and rate-ordering restrictions have valid but not
/// necessarily attainable bounds, so no witness is offered.
pub fn construct_sharpness_witness(
    table: &CondProbTable,
    cell: usize,
    assumptions: &AssumptionSet,
    side: BoundSide,
) -> Result<Witness> {
    assumptions.validate()?;
    if cell >= table.n_x_cells() {
        return Err(Error::validation(format!(
            "cell {cell} out of range for a table with {} cells",
            table.n_x_cells()
        )));
    }
    match (assumptions.instruments, assumptions.restriction) {
        (InstrumentMode::ZOnly, Restriction::None) => witness_z(table, cell, side, None),
        (InstrumentMode::ZOnly, r @ (Restriction::NoFalsePositives
            | Restriction::NoFalseNegatives)) => witness_z(table, cell, side, Some(r)),
        (InstrumentMode::WOnly, Restriction::None) => witness_w_binary(table, cell, side),
        (InstrumentMode::WOnly, Restriction::NoFalsePositives) => {
            witness_w_one_sided(table, cell, side, true)
        }
        (InstrumentMode::WOnly, Restriction::NoFalseNegatives) => {
            witness_w_one_sided(table, cell, side, false)
        }
        (InstrumentMode::ZAndW, Restriction::None) => witness_zw(table, cell, side),
        _ => Err(Error::validation(format!(
            "no sharpness construction is available under the '{}' restriction; \
             its bounds are valid but not known to be attained",
            assumptions.restriction.label()
        ))),
    }
}

fn included_z(table: &CondProbTable, cell: usize) -> Vec<(Option<f64>, f64)> {
    (0..table.z_levels().len())
        .filter_map(|zi| {
            table
                .prob(cell, Some(zi), None)
                .map(|p| (Some(table.z_levels()[zi]), p))
        })
        .collect()
}

fn witness_z(
    table: &CondProbTable,
    cell: usize,
    side: BoundSide,
    one_sided: Option<Restriction>,
) -> Result<Witness> {
    if table.z_levels().is_empty() {
        return Err(Error::validation("witness over Z requires Z levels"));
    }
    if !table.w_levels().is_empty() {
        return Err(Error::validation(
            "witness over Z requires a table without W levels",
        ));
    }
    let included = included_z(table, cell);
    if included.is_empty() {
        return Err(Error::data(format!("cell {cell} has no usable Z levels")));
    }
    let lo = included.iter().map(|(_, p)| *p).fold(f64::INFINITY, f64::min);
    let hi = included.iter().map(|(_, p)| *p).fold(f64::NEG_INFINITY, f64::max);
    let truth_telling = matches!(
        (one_sided, side),
        (Some(Restriction::NoFalsePositives), BoundSide::Lower)
            | (Some(Restriction::NoFalseNegatives), BoundSide::Upper)
    );
    let (fp, fn_, p_star) = if truth_telling {
        (0.0, 0.0, included.iter().map(|&(z, p)| (z, p)).collect())
    } else {
        match side {
            BoundSide::Upper => {
                let fn_ = 1.0 - hi;
                let p_star = included
                    .iter()
                    .map(|&(z, p)| (z, if hi < EPS_DENOM { 1.0 } else { p / hi }))
                    .collect();
                (0.0, fn_, p_star)
            }
            BoundSide::Lower => {
                let denom = 1.0 - lo;
                let p_star = included
                    .iter()
                    .map(|&(z, p)| (z, if denom < EPS_DENOM { 0.0 } else { (p - lo) / denom }))
                    .collect();
                (lo, 0.0, p_star)
            }
        }
    };
    Ok(Witness {
        cell,
        side,
        p_star,
        fp_rates: vec![fp],
        fn_rates: vec![fn_],
    })
}

fn reported_by_w(table: &CondProbTable, cell: usize) -> Result<Vec<f64>> {
    if !table.z_levels().is_empty() {
        return Err(Error::validation(
            "witness over W requires a table without Z levels",
        ));
    }
    let nw = table.w_levels().len();
    let mut out = Vec::with_capacity(nw);
    for wi in 0..nw {
        match table.prob(cell, None, Some(wi)) {
            Some(p) => out.push(p),
            None => {
                return Err(Error::data(format!(
                    "cell {cell} has no data at W level {}; the witness needs every level",
                    table.w_levels()[wi]
                )))
            }
        }
    }
    Ok(out)
}

fn witness_w_binary(table: &CondProbTable, cell: usize, side: BoundSide) -> Result<Witness> {
    if table.w_levels().len() != 2 {
        return Err(Error::validation(
            "the unrestricted reporting-instrument bounds are attained only with a \
             binary W; use two levels or a one-sided restriction",
        ));
    }
    let p = reported_by_w(table, cell)?;
    let (p_low, p_top) = (p[0], p[1]);
    let env_lo = p_low.min(p_top);
    let env_hi = p_low.max(p_top);
    let witness = match side {
        BoundSide::Upper => {
            let p_star = if env_hi < EPS_DENOM { 1.0 } else { p_top / env_hi };
            Witness {
                cell,
                side,
                p_star: vec![(None, p_star)],
                fp_rates: vec![p_low, 0.0],
                fn_rates: vec![1.0 - p_low, 1.0 - env_hi],
            }
        }
        BoundSide::Lower => {
            let denom = 1.0 - env_lo;
            let p_star = if denom < EPS_DENOM { 1.0 } else { (p_top - env_lo) / denom };
            Witness {
                cell,
                side,
                p_star: vec![(None, p_star)],
                fp_rates: vec![p_low, env_lo],
                fn_rates: vec![1.0 - p_low, 0.0],
            }
        }
    };
    Ok(witness)
}

fn witness_w_one_sided(
    table: &CondProbTable,
    cell: usize,
    side: BoundSide,
    no_false_positives: bool,
) -> Result<Witness> {
    let p = reported_by_w(table, cell)?;
    let nw = p.len();
    let witness = match (no_false_positives, side) {
        (true, BoundSide::Upper) => Witness {
            cell,
            side,
            p_star: vec![(None, 1.0)],
            fp_rates: vec![0.0; nw],
            fn_rates: p.iter().map(|&v| 1.0 - v).collect(),
        },
        (true, BoundSide::Lower) => {
            let sup = p.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
            let fn_rates = if sup < EPS_DENOM {
                vec![0.0; nw]
            } else {
                p.iter().map(|&v| 1.0 - v / sup).collect()
            };
            Witness {
                cell,
                side,
                p_star: vec![(None, sup)],
                fp_rates: vec![0.0; nw],
                fn_rates,
            }
        }
        (false, BoundSide::Lower) => Witness {
            cell,
            side,
            p_star: vec![(None, 0.0)],
            fp_rates: p.clone(),
            fn_rates: vec![0.0; nw],
        },
        (false, BoundSide::Upper) => {
            let inf = p.iter().cloned().fold(f64::INFINITY, f64::min);
            let denom = 1.0 - inf;
            let (p_star, fp_rates) = if denom < EPS_DENOM {
                (1.0, vec![0.0; nw])
            } else {
                (inf, p.iter().map(|&v| (v - inf) / denom).collect())
            };
            Witness {
                cell,
                side,
                p_star: vec![(None, p_star)],
                fp_rates,
                fn_rates: vec![0.0; nw],
            }
        }
    };
    Ok(witness)
}

fn witness_zw(table: &CondProbTable, cell: usize, side: BoundSide) -> Result<Witness> {
    if table.w_levels().len() != 2 {
        return Err(Error::validation(
            "the two-instrument bounds are attained only with a binary W",
        ));
    }
    let tau = if table.is_population() { 0.0 } else { DEFAULT_TAU };
    let diag = two_instrument_diagnostics(table, tau)?;
    let cd = &diag.cells[cell];
    if !cd.defined {
        return Err(Error::data(format!(
            "cell {cell} has no data at the top W level"
        )));
    }
    let term = cd
        .ratio_terms
        .iter()
        .find(|t| t.used)
        .ok_or_else(|| {
            Error::data(format!(
                "cell {cell} has no usable two-instrument ratio; the witness needs \
                 Z variation at the lower W level"
            ))
        })?;
    if cd.flags.contains(&BoundFlag::DegenerateDenominator)
        || 1.0 - cd.fp_cap < EPS_DENOM
        || 1.0 - cd.fn_cap < EPS_DENOM
    {
        return Err(Error::data(format!(
            "cell {cell} has a degenerate misreporting cap; no witness exists"
        )));
    }
    let wm = table.w_levels().len() - 1;
    let p_top: Vec<(Option<f64>, f64)> = (0..table.z_levels().len())
        .filter_map(|zi| {
            table
                .prob(cell, Some(zi), Some(wm))
                .map(|p| (Some(table.z_levels()[zi]), p))
        })
        .collect();
    let (q1, q0) = (term.q1, term.q0);
    let witness = match side {
        BoundSide::Upper => {
            let fn_top = cd.fn_cap;
            let p_star = p_top
                .iter()
                .map(|&(z, p)| (z, p / (1.0 - fn_top)))
                .collect();
            Witness {
                cell,
                side,
                p_star,
                fp_rates: vec![q0 / q1, 0.0],
                fn_rates: vec![1.0 - (1.0 - fn_top + q0) / q1, fn_top],
            }
        }
        BoundSide::Lower => {
            let fp_top = cd.fp_cap;
            let p_star = p_top
                .iter()
                .map(|&(z, p)| (z, (p - fp_top) / (1.0 - fp_top)))
                .collect();
            Witness {
                cell,
                side,
                p_star,
                fp_rates: vec![(fp_top + q0) / q1, fp_top],
                fn_rates: vec![1.0 - (1.0 + q0) / q1, 0.0],
            }
        }
    };
    Ok(witness)
}

/// Checks a witness against the table: rates and probabilities are valid,
/// the maintained assumptions hold, the implied reported probabilities
/// reproduce the table within `tol`, and the witness's true probabilities
/// attain the closed-form bound on its side.
pub fn verify_witness(
    table: &CondProbTable,
    assumptions: &AssumptionSet,
    witness: &Witness,
    tol: f64,
) -> Result<WitnessReport> {
    if !tol.is_finite() || tol < 0.0 {
        return Err(Error::validation(format!(
            "tolerance must be a nonnegative number, got {tol}"
        )));
    }
    let mut failures = Vec::new();
    let nw = table.w_levels().len().max(1);
    if witness.fp_rates.len() != nw || witness.fn_rates.len() != nw {
        return Err(Error::validation(format!(
            "witness has {} rate pairs for a table with {} W levels",
            witness.fp_rates.len(),
            nw
        )));
    }
    for (label, value) in witness
        .p_star
        .iter()
        .map(|(z, v)| (format!("true probability at z={z:?}"), *v))
        .chain(witness.fp_rates.iter().enumerate().map(|(w, v)| {
            (format!("false-positive rate at level {w}"), *v)
        }))
        .chain(witness.fn_rates.iter().enumerate().map(|(w, v)| {
            (format!("false-negative rate at level {w}"), *v)
        }))
    {
        if !value.is_finite() || !(-1e-12..=1.0 + 1e-12).contains(&value) {
            failures.push(format!("{label} is outside [0, 1]: {value}"));
        }
    }
    for w in 0..nw {
        if witness.fp_rates[w] + witness.fn_rates[w] > 1.0 + 1e-12 {
            failures.push(format!(
                "rate sum exceeds one at level {w}: {} + {}",
                witness.fp_rates[w], witness.fn_rates[w]
            ));
        }
    }
    for w in 1..nw {
        if witness.fp_rates[w] > witness.fp_rates[w - 1] + 1e-12
            || witness.fn_rates[w] > witness.fn_rates[w - 1] + 1e-12
        {
            failures.push(format!(
                "rates increase along the W order between levels {} and {w}",
                w - 1
            ));
        }
    }
    match assumptions.restriction {
        Restriction::NoFalsePositives => {
            if witness.fp_rates.iter().any(|&v| v.abs() > 1e-12) {
                failures.push("false-positive rate is not zero".to_string());
            }
        }
        Restriction::NoFalseNegatives => {
            if witness.fn_rates.iter().any(|&v| v.abs() > 1e-12) {
                failures.push("false-negative rate is not zero".to_string());
            }
        }
        Restriction::Capped { fp_cap, fn_cap } => {
            if witness.fp_rates.iter().any(|&v| v > fp_cap + 1e-12)
                || witness.fn_rates.iter().any(|&v| v > fn_cap + 1e-12)
            {
                failures.push("a rate exceeds its cap".to_string());
            }
        }
        Restriction::FalsePositivesSmaller => {
            for w in 0..nw {
                if witness.fp_rates[w] > witness.fn_rates[w] + 1e-12 {
                    failures.push(format!("false-positive rate exceeds false-negative at {w}"));
                }
            }
        }
        Restriction::FalseNegativesSmaller => {
            for w in 0..nw {
                if witness.fn_rates[w] > witness.fp_rates[w] + 1e-12 {
                    failures.push(format!("false-negative rate exceeds false-positive at {w}"));
                }
            }
        }
        Restriction::None => {}
    }
    // The implied reported probability must reproduce the table on every
    // included slice the witness's contexts cover.
    let mut max_err: f64 = 0.0;
    let has_w = !table.w_levels().is_empty();
    for &(z, p_star) in &witness.p_star {
        let zi = z.map(|level| {
            table
                .z_levels()
                .iter()
                .position(|l| *l == level)
                .expect("witness z level missing from table")
        });
        for wi in 0..nw {
            let observed = table.prob(witness.cell, zi, has_w.then_some(wi));
            let Some(observed) = observed else { continue };
            let implied = (1.0 - witness.fn_rates[wi]) * p_star
                + witness.fp_rates[wi] * (1.0 - p_star);
            max_err = max_err.max((implied - observed).abs());
        }
    }
    if max_err > tol {
        failures.push(format!(
            "implied reported probabilities miss the table by {max_err:.3e} (tolerance {tol:.1e})"
        ));
    }
    // The witness must attain the closed-form bound on its side.
    let bounds = compute_bounds(table, assumptions)?;
    let mut max_gap: f64 = 0.0;
    for &(z, p_star) in &witness.p_star {
        let Some(row) = bounds.row(witness.cell, z) else {
            failures.push(format!("no closed-form bound row at z={z:?}"));
            continue;
        };
        let target = match witness.side {
            BoundSide::Lower => row.lower,
            BoundSide::Upper => row.upper,
        };
        max_gap = max_gap.max((p_star - target).abs());
    }
    if max_gap > tol.max(1e-12) {
        failures.push(format!(
            "true probability misses the bound it should attain by {max_gap:.3e}"
        ));
    }
    Ok(WitnessReport { max_mixture_error: max_err, max_bound_gap: max_gap, failures })
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_abs_diff_eq;

    fn z_table(probs: &[f64]) -> CondProbTable {
        let z_levels: Vec<f64> = (0..probs.len()).map(|i| i as f64).collect();
        CondProbTable::from_probs(1, z_levels, Vec::new(), probs).unwrap()
    }

    fn w_table(probs: &[f64]) -> CondProbTable {
        let w_levels: Vec<f64> = (1..=probs.len()).map(|i| i as f64).collect();
        CondProbTable::from_probs(1, Vec::new(), w_levels, probs).unwrap()
    }

    fn unrestricted(mode: InstrumentMode) -> AssumptionSet {
        AssumptionSet::unrestricted(mode)
    }

    #[test]
    fn oracle_z_matches_worked_example() {
        let table = z_table(&[0.3, 0.6]);
        let oracle = brute_force_prob_bounds(
            &table,
            &unrestricted(InstrumentMode::ZOnly),
            &OracleConfig::default(),
        )
        .unwrap();
        let (lo, hi) = oracle.row(0, Some(1.0)).unwrap().range.unwrap();
        assert_abs_diff_eq!(lo, 0.43, epsilon = 1e-12);
        assert_abs_diff_eq!(hi, 1.0, epsilon = 1e-12);
    }

    #[test]
    fn oracle_z_brackets_closed_form_within_two_steps() {
        let table = z_table(&[0.17, 0.45, 0.73]);
        let assumptions = unrestricted(InstrumentMode::ZOnly);
        let config = OracleConfig::default();
        let oracle = brute_force_prob_bounds(&table, &assumptions, &config).unwrap();
        let closed = compute_bounds(&table, &assumptions).unwrap();
        let gate = 2.0 * config.delta();
        for row in &closed.rows {
            let (lo, hi) = oracle.row(row.cell, row.z).unwrap().range.unwrap();
            assert!((lo - row.lower).abs() <= gate, "lower {lo} vs {}", row.lower);
            assert!((hi - row.upper).abs() <= gate, "upper {hi} vs {}", row.upper);
        }
    }

    #[test]
    fn oracle_w_brackets_closed_form_within_two_steps() {
        for probs in [vec![0.4, 0.5], vec![0.575, 0.5675], vec![0.3, 0.45, 0.6]] {
            let table = w_table(&probs);
            let assumptions = unrestricted(InstrumentMode::WOnly);
            let config = OracleConfig::default();
            let oracle = brute_force_prob_bounds(&table, &assumptions, &config).unwrap();
            let closed = compute_bounds(&table, &assumptions).unwrap();
            let gate = 2.0 * config.delta();
            let row = &closed.rows[0];
            let (lo, hi) = oracle.row(row.cell, row.z).unwrap().range.unwrap();
            assert!((lo - row.lower).abs() <= gate, "lower {lo} vs {}", row.lower);
            assert!((hi - row.upper).abs() <= gate, "upper {hi} vs {}", row.upper);
        }
    }

    #[test]
    fn oracle_zw_brackets_closed_form_within_two_steps() {
        let table =
            CondProbTable::from_probs(1, vec![0.0, 1.0], vec![1.0, 2.0], &[0.52, 0.56, 0.31, 0.305])
                .unwrap();
        let assumptions = unrestricted(InstrumentMode::ZAndW);
        let config = OracleConfig::default();
        let oracle = brute_force_prob_bounds(&table, &assumptions, &config).unwrap();
        let closed = compute_bounds(&table, &assumptions).unwrap();
        let gate = 2.0 * config.delta();
        for row in &closed.rows {
            let (lo, hi) = oracle.row(row.cell, row.z).unwrap().range.unwrap();
            assert!((lo - row.lower).abs() <= gate, "lower {lo} vs {}", row.lower);
            assert!((hi - row.upper).abs() <= gate, "upper {hi} vs {}", row.upper);
        }
    }

    #[test]
    fn oracle_reports_empty_feasible_set() {
        // Reported probability strictly decreasing in W cannot happen
        // without false positives.
        let table = w_table(&[0.8, 0.4]);
        let assumptions = AssumptionSet::with_restriction(
            InstrumentMode::WOnly,
            Restriction::NoFalsePositives,
        );
        let oracle =
            brute_force_prob_bounds(&table, &assumptions, &OracleConfig::default()).unwrap();
        assert!(oracle.rows[0].range.is_none());
    }

    #[test]
    fn oracle_respects_rate_caps() {
        let table = z_table(&[0.5, 0.6]);
        let capped = AssumptionSet::with_restriction(
            InstrumentMode::ZOnly,
            Restriction::Capped { fp_cap: 0.1, fn_cap: 0.2 },
        );
        let config = OracleConfig::default();
        let oracle = brute_force_prob_bounds(&table, &capped, &config).unwrap();
        let closed = compute_bounds(&table, &capped).unwrap();
        let gate = 2.0 * config.delta();
        let row = closed.row(0, Some(1.0)).unwrap();
        let (lo, hi) = oracle.row(0, Some(1.0)).unwrap().range.unwrap();
        assert!((lo - row.lower).abs() <= gate);
        assert!((hi - row.upper).abs() <= gate);
    }

    #[test]
    fn oracle_refuses_oversized_enumeration() {
        let table = z_table(&[0.3, 0.6]);
        let config = OracleConfig { max_ops: 10, ..OracleConfig::default() };
        let err = brute_force_prob_bounds(&table, &unrestricted(InstrumentMode::ZOnly), &config);
        assert!(err.is_err());
    }

    #[test]
    fn witness_z_upper_matches_worked_example() {
        let table = z_table(&[0.3, 0.6]);
        let assumptions = unrestricted(InstrumentMode::ZOnly);
        let w =
            construct_sharpness_witness(&table, 0, &assumptions, BoundSide::Upper).unwrap();
        assert_abs_diff_eq!(w.fn_rates[0], 0.4, epsilon = 1e-15);
        assert_abs_diff_eq!(w.fp_rates[0], 0.0, epsilon = 1e-15);
        assert_abs_diff_eq!(w.p_star[1].1, 1.0, epsilon = 1e-15);
        assert_abs_diff_eq!(w.p_star[0].1, 0.5, epsilon = 1e-15);
        let report = verify_witness(&table, &assumptions, &w, 1e-12).unwrap();
        assert!(report.ok(), "{:?}", report.failures);
        assert!(report.max_mixture_error <= 1e-12);
    }

    #[test]
    fn witness_z_lower_matches_worked_example() {
        let table = z_table(&[0.3, 0.6]);
        let assumptions = unrestricted(InstrumentMode::ZOnly);
        let w =
            construct_sharpness_witness(&table, 0, &assumptions, BoundSide::Lower).unwrap();
        assert_abs_diff_eq!(w.fp_rates[0], 0.3, epsilon = 1e-15);
        assert_abs_diff_eq!(w.p_star[0].1, 0.0, epsilon = 1e-15);
        let report = verify_witness(&table, &assumptions, &w, 1e-12).unwrap();
        assert!(report.ok(), "{:?}", report.failures);
    }

    #[test]
    fn witness_one_sided_lower_is_truth_telling() {
        let table = z_table(&[0.3, 0.6]);
        let assumptions = AssumptionSet::with_restriction(
            InstrumentMode::ZOnly,
            Restriction::NoFalsePositives,
        );
        let w =
            construct_sharpness_witness(&table, 0, &assumptions, BoundSide::Lower).unwrap();
        assert_eq!(w.fp_rates, vec![0.0]);
        assert_eq!(w.fn_rates, vec![0.0]);
        assert_abs_diff_eq!(w.p_star[1].1, 0.6, epsilon = 1e-15);
        let report = verify_witness(&table, &assumptions, &w, 1e-12).unwrap();
        assert!(report.ok(), "{:?}", report.failures);
    }

    #[test]
    fn witness_w_binary_attains_both_ends() {
        let table = w_table(&[0.4, 0.5]);
        let assumptions = unrestricted(InstrumentMode::WOnly);
        for side in [BoundSide::Lower, BoundSide::Upper] {
            let w = construct_sharpness_witness(&table, 0, &assumptions, side).unwrap();
            let report = verify_witness(&table, &assumptions, &w, 1e-12).unwrap();
            assert!(report.ok(), "{side:?}: {:?}", report.failures);
            assert!(report.max_mixture_error <= 1e-12);
        }
        let lower =
            construct_sharpness_witness(&table, 0, &assumptions, BoundSide::Lower).unwrap();
        assert_abs_diff_eq!(lower.p_star[0].1, 0.1 / 0.6, epsilon = 1e-15);
    }

    #[test]
    fn witness_w_requires_binary_levels_when_unrestricted() {
        let table = w_table(&[0.4, 0.5, 0.6]);
        let err = construct_sharpness_witness(
            &table,
            0,
            &unrestricted(InstrumentMode::WOnly),
            BoundSide::Upper,
        );
        assert!(err.is_err());
    }

    #[test]
    fn witness_w_one_sided_covers_many_levels() {
        let increasing = w_table(&[0.4, 0.5, 0.6]);
        let no_fp = AssumptionSet::with_restriction(
            InstrumentMode::WOnly,
            Restriction::NoFalsePositives,
        );
        for side in [BoundSide::Lower, BoundSide::Upper] {
            let w = construct_sharpness_witness(&increasing, 0, &no_fp, side).unwrap();
            let report = verify_witness(&increasing, &no_fp, &w, 1e-12).unwrap();
            assert!(report.ok(), "{side:?}: {:?}", report.failures);
        }
        let decreasing = w_table(&[0.6, 0.5, 0.4]);
        let no_fn = AssumptionSet::with_restriction(
            InstrumentMode::WOnly,
            Restriction::NoFalseNegatives,
        );
        for side in [BoundSide::Lower, BoundSide::Upper] {
            let w = construct_sharpness_witness(&decreasing, 0, &no_fn, side).unwrap();
            let report = verify_witness(&decreasing, &no_fn, &w, 1e-12).unwrap();
            assert!(report.ok(), "{side:?}: {:?}", report.failures);
        }
    }

    #[test]
    fn witness_zw_attains_both_ends_of_worked_example() {
        let table =
            CondProbTable::from_probs(1, vec![0.0, 1.0], vec![1.0, 2.0], &[0.52, 0.56, 0.31, 0.305])
                .unwrap();
        let assumptions = unrestricted(InstrumentMode::ZAndW);
        for side in [BoundSide::Lower, BoundSide::Upper] {
            let w = construct_sharpness_witness(&table, 0, &assumptions, side).unwrap();
            let report = verify_witness(&table, &assumptions, &w, 1e-9).unwrap();
            assert!(report.ok(), "{side:?}: {:?}", report.failures);
            assert!(report.max_mixture_error <= 1e-9);
        }
        let upper =
            construct_sharpness_witness(&table, 0, &assumptions, BoundSide::Upper).unwrap();
        assert_abs_diff_eq!(upper.fn_rates[1], 0.44, epsilon = 1e-9);
        assert_abs_diff_eq!(upper.fp_rates[1], 0.0, epsilon = 1e-15);
        assert_abs_diff_eq!(upper.fn_rates[0], 0.48, epsilon = 1e-9);
        assert_abs_diff_eq!(upper.fp_rates[0], 0.07142857142857145 / (0.255 / 0.21), epsilon = 1e-9);
    }

    #[test]
    fn witness_rejects_restrictions_without_constructions() {
        let table = z_table(&[0.3, 0.6]);
        let capped = AssumptionSet::with_restriction(
            InstrumentMode::ZOnly,
            Restriction::Capped { fp_cap: 0.1, fn_cap: 0.2 },
        );
        assert!(
            construct_sharpness_witness(&table, 0, &capped, BoundSide::Upper).is_err()
        );
    }
}
