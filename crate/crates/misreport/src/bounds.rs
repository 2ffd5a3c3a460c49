//! Bounds on the true choice probability under misreported outcomes.
//!
//! All bounds operate on a [`CondProbTable`] of reported probabilities and
//! return per-context intervals for the true probability
//! `p*(x) = Pr(Y* = 1 | x)`. Three families are available:
//!
//! * instrument-Z bounds: an instrument shifts the true probability but not
//!   the misreporting rates, so the envelope of reported probabilities over
//!   the instrument caps both rates;
//! * instrument-W bounds: an instrument shifts the misreporting rates
//!   monotonically but not the true probability, so running envelopes over
//!   the instrument's declared order cap the rates at each level;
//! * two-instrument bounds: joint variation in both instruments bounds the
//!   misreporting rates at the largest W level directly, via ratios of
//!   reported-probability differences across Z.
//!
//! Auxiliary restrictions (one-sided misreporting, known caps on the rates,
//! or an ordering between the two rates) tighten the single-instrument
//! bounds; they are expressed as an [`AssumptionSet`] and applied one at a
//! time.
//!
//! Every bound is clipped to `[0, 1]` before the interval is inspected, and
//! an empty interval after clipping is reported as a testable-implication
//! failure rather than an error: with estimated inputs it is evidence
//! against the maintained assumptions, not a caller mistake.

use serde::Serialize;

use crate::error::{Error, Result};
use crate::table::{envelopes_w, envelopes_z, CondProbTable, EnvelopeW, EnvelopeZ};

/// Guard for denominators of the form `1 - rate`. Smaller denominators are
/// treated as exactly degenerate and the bound is sent to its limit value.
pub const EPS_DENOM: f64 = 1e-12;

/// Default relevance threshold for two-instrument ratios on estimated
/// tables. Reported-probability differences across Z below this value are
/// considered noise and the corresponding ratio term is skipped.
pub const DEFAULT_TAU: f64 = 0.02;

/// Which instruments the bounds may use.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum InstrumentMode {
    /// Only the outcome-shifting instrument Z.
    ZOnly,
    /// Only the misreporting-shifting instrument W.
    WOnly,
    /// Both instruments jointly.
    ZAndW,
}

/// Optional auxiliary restriction on the misreporting rates.
///
/// At most one restriction is active at a time; combinations are not
/// supported because their identifying content has not been worked out.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
#[serde(rename_all = "snake_case", tag = "kind")]
pub enum Restriction {
    /// No auxiliary restriction.
    None,
    /// No false positives: `Pr(Y = 1 | Y* = 0) = 0`.
    NoFalsePositives,
    /// No false negatives: `Pr(Y = 0 | Y* = 1) = 0`.
    NoFalseNegatives,
    /// Known caps `fp_cap` on the false-positive rate and `fn_cap` on the
    /// false-negative rate, with `fp_cap + fn_cap < 1`.
    Capped { fp_cap: f64, fn_cap: f64 },
    /// The false-positive rate is no larger than the false-negative rate.
    FalsePositivesSmaller,
    /// The false-negative rate is no larger than the false-positive rate.
    FalseNegativesSmaller,
}

impl Restriction {
    /// Short label used in report output.
    pub fn label(&self) -> String {
        match self {
            Restriction::None => "none".to_string(),
            Restriction::NoFalsePositives => "no false positives".to_string(),
            Restriction::NoFalseNegatives => "no false negatives".to_string(),
            Restriction::Capped { fp_cap, fn_cap } => {
                format!("capped rates (fp <= {fp_cap}, fn <= {fn_cap})")
            }
            Restriction::FalsePositivesSmaller => "false positives smaller".to_string(),
            Restriction::FalseNegativesSmaller => "false negatives smaller".to_string(),
        }
    }
}

/// A bundle of identifying assumptions: which instruments are available and
/// which auxiliary restriction, if any, is maintained.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct AssumptionSet {
    pub instruments: InstrumentMode,
    pub restriction: Restriction,
}

impl AssumptionSet {
    /// Instruments only, no auxiliary restriction.
    pub fn unrestricted(instruments: InstrumentMode) -> Self {
        AssumptionSet { instruments, restriction: Restriction::None }
    }

    pub fn with_restriction(instruments: InstrumentMode, restriction: Restriction) -> Self {
        AssumptionSet { instruments, restriction }
    }

    /// Checks internal consistency: cap parameters must describe valid
    /// rates, and the two-instrument bounds do not accept auxiliary
    /// restrictions.
    pub fn validate(&self) -> Result<()> {
        if let Restriction::Capped { fp_cap, fn_cap } = self.restriction {
            for (name, cap) in [("fp_cap", fp_cap), ("fn_cap", fn_cap)] {
                if !cap.is_finite() || !(0.0..=1.0).contains(&cap) {
                    return Err(Error::validation(format!(
                        "{name} must lie in [0, 1], got {cap}"
                    )));
                }
            }
            if fp_cap + fn_cap >= 1.0 {
                return Err(Error::validation(format!(
                    "cap sum must be below 1, got {fp_cap} + {fn_cap}"
                )));
            }
        }
        if self.instruments == InstrumentMode::ZAndW
            && self.restriction != Restriction::None
        {
            return Err(Error::validation(
                "two-instrument bounds do not support auxiliary restrictions; \
                 apply the restriction with a single instrument instead",
            ));
        }
        Ok(())
    }
}

/// Which construction produced a set of bounds.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum Method {
    InstrumentZ,
    InstrumentW,
    TwoInstrument,
}

/// Diagnostic flags attached to individual bound rows.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum BoundFlag {
    /// The instrument-Z boundary condition failed: the reported probability
    /// is exactly 0 at every instrument level, or exactly 1 at every level,
    /// so the rates cannot be separated and the bound is the trivial [0, 1].
    BoundaryViolated,
    /// Lower bound exceeded the upper bound after clipping; the maintained
    /// assumptions are rejected by the data in this cell.
    TestableImplicationViolated,
    /// A two-instrument ratio had an estimated `q1 <= 1`, contradicting the
    /// monotonicity and relevance assumption; the ratio was dropped.
    MonotonicityRelevanceViolated,
    /// No pair of Z levels moved the reported probability by more than the
    /// relevance threshold at any lower W level, so the two-instrument
    /// bounds fall back to Z variation at the top level only.
    InstrumentZIrrelevant,
    /// A misreporting-rate cap reached 1, making the bound denominator
    /// degenerate; the affected bound is the trivial [0, 1].
    DegenerateDenominator,
}

/// One interval for one conditioning context.
#[derive(Debug, Clone, Serialize)]
pub struct BoundRow {
    /// Covariate cell index.
    pub cell: usize,
    /// Z level of the context, when the method conditions on Z.
    pub z: Option<f64>,
    /// W level of the context, when the method conditions on W.
    pub w: Option<f64>,
    pub lower: f64,
    pub upper: f64,
    /// Instrument level whose envelope term produced the lower bound.
    pub binding_lower: Option<f64>,
    /// Instrument level whose envelope term produced the upper bound.
    pub binding_upper: Option<f64>,
    pub flags: Vec<BoundFlag>,
}

impl BoundRow {
    pub fn has_flag(&self, flag: BoundFlag) -> bool {
        self.flags.contains(&flag)
    }

    /// Interval width after clipping; zero for point identification.
    pub fn width(&self) -> f64 {
        (self.upper - self.lower).max(0.0)
    }
}

/// Bounds for every conditioning context with enough data, plus the count
/// of contexts that had to be skipped.
#[derive(Debug, Clone, Serialize)]
pub struct ProbBounds {
    pub method: Method,
    pub assumptions: AssumptionSet,
    pub rows: Vec<BoundRow>,
    /// Contexts with no included observations, for which no interval is
    /// reported.
    pub undefined_contexts: usize,
}

impl ProbBounds {
    /// Looks up the row for a cell and optional instrument levels.
    pub fn row(&self, cell: usize, z: Option<f64>) -> Option<&BoundRow> {
        self.rows.iter().find(|r| r.cell == cell && r.z == z)
    }
}

/// Maps a running pair of envelope values to the effective false-positive
/// cap `a` and success-probability floor `b` under a restriction, so every
/// bound takes the shared form `[(p - a) / (1 - a), p / b]`.
fn effective_caps(lower_env: f64, upper_env: f64, restriction: Restriction) -> (f64, f64) {
    match restriction {
        Restriction::None => (lower_env, upper_env),
        Restriction::NoFalsePositives => (0.0, upper_env),
        Restriction::NoFalseNegatives => (lower_env, 1.0),
        Restriction::Capped { fp_cap, fn_cap } => {
            (lower_env.min(fp_cap), upper_env.max(1.0 - fn_cap))
        }
        Restriction::FalsePositivesSmaller => (lower_env.min(1.0 - upper_env), upper_env),
        Restriction::FalseNegativesSmaller => (lower_env, upper_env.max(1.0 - lower_env)),
    }
}

/// Lower-bound term `(p - a) / (1 - a)`, sent to its limit 1 when the
/// denominator degenerates.
fn lower_term(p: f64, a: f64) -> f64 {
    let denom = 1.0 - a;
    if denom < EPS_DENOM {
        1.0
    } else {
        (p - a) / denom
    }
}

/// Upper-bound term `p / b`, sent to its limit 1 when the denominator
/// degenerates.
fn upper_term(p: f64, b: f64) -> f64 {
    if b < EPS_DENOM {
        1.0
    } else {
        p / b
    }
}

fn clip_unit(v: f64) -> f64 {
    v.clamp(0.0, 1.0)
}

fn finish_row(mut row: BoundRow) -> BoundRow {
    row.lower = clip_unit(row.lower);
    row.upper = clip_unit(row.upper);
    if row.lower > row.upper {
        row.flags.push(BoundFlag::TestableImplicationViolated);
    }
    row
}

/// Bounds from the outcome-shifting instrument Z, one interval per
/// `(cell, z)` context.
///
/// With envelope values `lo = inf_z p(x, z)` and `hi = sup_z p(x, z)` over
/// included levels, the interval is
/// `[(p(x) - lo) / (1 - lo), p(x) / hi]`. When `hi = 0` or `lo = 1` the
/// boundary condition fails and the trivial interval is returned with a
/// flag.
pub fn bounds_instrument_z(table: &CondProbTable, env: &EnvelopeZ) -> Result<ProbBounds> {
    restricted_bounds_z(table, env, Restriction::None)
}

/// Bounds from the misreporting-shifting instrument W, one interval per
/// `(cell, z)` context covering every W level.
///
/// Each level contributes a lower term `(p_W(w) - lo_w) / (1 - lo_w)` and an
/// upper term `p_W(w) / hi_w`, where `lo_w` and `hi_w` are the running
/// envelopes of reported probabilities over levels up to `w`. The interval
/// is the intersection: supremum of lower terms, infimum of upper terms.
pub fn bounds_instrument_w(table: &CondProbTable, env: &EnvelopeW) -> Result<ProbBounds> {
    restricted_bounds_w(table, env, Restriction::None)
}

/// Single-instrument bounds tightened by an auxiliary restriction.
///
/// Dispatches on `assumptions.instruments`; the two-instrument mode is
/// rejected here because its construction does not compose with auxiliary
/// restrictions.
pub fn apply_restriction(
    table: &CondProbTable,
    assumptions: &AssumptionSet,
) -> Result<ProbBounds> {
    assumptions.validate()?;
    match assumptions.instruments {
        InstrumentMode::ZOnly => {
            let env = envelopes_z(table)?;
            restricted_bounds_z(table, &env, assumptions.restriction)
        }
        InstrumentMode::WOnly => {
            let env = envelopes_w(table)?;
            restricted_bounds_w(table, &env, assumptions.restriction)
        }
        InstrumentMode::ZAndW => Err(Error::validation(
            "two-instrument bounds do not support auxiliary restrictions",
        )),
    }
}

/// One-stop dispatch: computes the envelopes the assumption set needs and
/// returns the corresponding bounds. Two-instrument mode uses the default
/// relevance threshold (zero for population tables).
pub fn compute_bounds(table: &CondProbTable, assumptions: &AssumptionSet) -> Result<ProbBounds> {
    assumptions.validate()?;
    match assumptions.instruments {
        InstrumentMode::ZOnly | InstrumentMode::WOnly => apply_restriction(table, assumptions),
        InstrumentMode::ZAndW => {
            let tau = if table.is_population() { 0.0 } else { DEFAULT_TAU };
            let diag = two_instrument_diagnostics(table, tau)?;
            bounds_two_instruments(table, &diag)
        }
    }
}

fn restricted_bounds_z(
    table: &CondProbTable,
    env: &EnvelopeZ,
    restriction: Restriction,
) -> Result<ProbBounds> {
    let levels = table.z_levels();
    if levels.is_empty() {
        return Err(Error::validation(
            "instrument-Z bounds require a table with Z levels",
        ));
    }
    let mut rows = Vec::new();
    let mut undefined = 0usize;
    for cell in 0..table.n_x_cells() {
        let (Some(lo), Some(hi)) = (env.lower[cell], env.upper[cell]) else {
            undefined += 1;
            continue;
        };
        let boundary = hi <= 0.0 || lo >= 1.0;
        for (zi, level) in levels.iter().enumerate() {
            let Some(p) = table.prob(cell, Some(zi), None) else {
                continue;
            };
            if boundary {
                rows.push(BoundRow {
                    cell,
                    z: Some(*level),
                    w: None,
                    lower: 0.0,
                    upper: 1.0,
                    binding_lower: env.arg_lower[cell],
                    binding_upper: env.arg_upper[cell],
                    flags: vec![BoundFlag::BoundaryViolated],
                });
                continue;
            }
            let (a, b) = effective_caps(lo, hi, restriction);
            rows.push(finish_row(BoundRow {
                cell,
                z: Some(*level),
                w: None,
                lower: lower_term(p, a),
                upper: upper_term(p, b),
                binding_lower: env.arg_lower[cell],
                binding_upper: env.arg_upper[cell],
                flags: Vec::new(),
            }));
        }
    }
    Ok(ProbBounds {
        method: Method::InstrumentZ,
        assumptions: AssumptionSet {
            instruments: InstrumentMode::ZOnly,
            restriction,
        },
        rows,
        undefined_contexts: undefined,
    })
}

fn restricted_bounds_w(
    table: &CondProbTable,
    env: &EnvelopeW,
    restriction: Restriction,
) -> Result<ProbBounds> {
    if table.w_levels().is_empty() {
        return Err(Error::validation(
            "instrument-W bounds require a table with W levels",
        ));
    }
    let mut rows = Vec::new();
    let mut undefined = 0usize;
    for ctx in 0..env.n_contexts {
        let mut best_lower: Option<(f64, f64)> = None;
        let mut best_upper: Option<(f64, f64)> = None;
        let mut boundary = false;
        for (wi, level) in env.w_levels.iter().enumerate() {
            let Some(p) = env.prob_at(ctx, wi) else {
                continue;
            };
            if p <= 0.0 || p >= 1.0 {
                boundary = true;
            }
            let lo = env.lower_at(ctx, wi).expect("envelope defined with prob");
            let hi = env.upper_at(ctx, wi).expect("envelope defined with prob");
            let (a, b) = effective_caps(lo, hi, restriction);
            let lt = lower_term(p, a);
            let ut = upper_term(p, b);
            if best_lower.map_or(true, |(v, _)| lt > v) {
                best_lower = Some((lt, *level));
            }
            if best_upper.map_or(true, |(v, _)| ut < v) {
                best_upper = Some((ut, *level));
            }
        }
        let (cell, z) = table.xz_context(ctx);
        let (Some((lt, lw)), Some((ut, uw))) = (best_lower, best_upper) else {
            undefined += 1;
            continue;
        };
        let mut flags = Vec::new();
        if boundary {
            flags.push(BoundFlag::BoundaryViolated);
        }
        rows.push(finish_row(BoundRow {
            cell,
            z,
            w: None,
            lower: lt,
            upper: ut,
            binding_lower: Some(lw),
            binding_upper: Some(uw),
            flags,
        }));
    }
    Ok(ProbBounds {
        method: Method::InstrumentW,
        assumptions: AssumptionSet {
            instruments: InstrumentMode::WOnly,
            restriction,
        },
        rows,
        undefined_contexts: undefined,
    })
}

/// One ratio computed at a lower W level for the two-instrument bounds.
#[derive(Debug, Clone, Serialize)]
pub struct RatioTerm {
    /// Conditioning lower level `w < w_max`.
    pub w: f64,
    /// Pair of Z levels with the largest reported-probability spread at `w`.
    pub z_pair: (f64, f64),
    /// Ratio of reported-probability differences across the pair at the top
    /// level versus at `w`; above 1 when the assumptions hold.
    pub q1: f64,
    /// Intercept term, averaged over Z levels included at both `w` and the
    /// top level.
    pub q0: f64,
    /// Max minus min of the per-level intercepts. The intercept is
    /// overidentified, so a large spread signals misspecification.
    pub q0_spread: f64,
    /// False when `q1 <= 1` and the term was dropped from the cap sets.
    pub used: bool,
}

/// Two-instrument diagnostics for one covariate cell.
#[derive(Debug, Clone, Serialize)]
pub struct CellDiagnostics {
    pub cell: usize,
    /// Largest W level, at which the misreporting caps apply.
    pub w_max: f64,
    pub ratio_terms: Vec<RatioTerm>,
    /// Upper bound on the false-positive rate at `w_max`.
    pub fp_cap: f64,
    /// Upper bound on the false-negative rate at `w_max`.
    pub fn_cap: f64,
    pub flags: Vec<BoundFlag>,
    /// False when no reported probability at the top level is available, in
    /// which case both caps are the trivial 1.
    pub defined: bool,
}

/// Intermediate quantities of the two-instrument construction, exposed so
/// callers can inspect relevance, the overidentified intercepts, and the
/// misreporting caps before turning them into intervals.
#[derive(Debug, Clone, Serialize)]
pub struct TwoInstrumentDiagnostics {
    /// Relevance threshold the ratios were screened at.
    pub tau: f64,
    pub cells: Vec<CellDiagnostics>,
}

/// Computes the two-instrument misreporting caps cell by cell.
///
/// For each W level below the top one, the Z pair with the largest reported
/// probability spread at that level (exceeding `tau`) yields the ratio
/// `q1 = (p(z1, w_max) - p(z2, w_max)) / (p(z1, w) - p(z2, w))` and an
/// intercept `q0 = q1 p(z, w) - p(z, w_max)`, averaged over Z. The caps at
/// the top level are then
/// `fn_cap = 1 - sup{q0 / (q1 - 1), p(z, w_max)}` and
/// `fp_cap = inf{q0 / (q1 - 1), p(z, w_max)}`.
pub fn two_instrument_diagnostics(
    table: &CondProbTable,
    tau: f64,
) -> Result<TwoInstrumentDiagnostics> {
    if table.z_levels().len() < 2 {
        return Err(Error::validation(
            "two-instrument bounds require at least two Z levels",
        ));
    }
    if table.w_levels().len() < 2 {
        return Err(Error::validation(
            "two-instrument bounds require at least two W levels",
        ));
    }
    if !tau.is_finite() || tau < 0.0 {
        return Err(Error::validation(format!(
            "relevance threshold must be a nonnegative number, got {tau}"
        )));
    }
    let z_levels = table.z_levels().to_vec();
    let w_levels = table.w_levels().to_vec();
    let nw = w_levels.len();
    let wm = nw - 1;
    let mut cells = Vec::new();
    for cell in 0..table.n_x_cells() {
        let p_top: Vec<Option<f64>> = (0..z_levels.len())
            .map(|zi| table.prob(cell, Some(zi), Some(wm)))
            .collect();
        let mut ratio_terms = Vec::new();
        let mut flags = Vec::new();
        let mut any_ratio_used = false;
        for wj in 0..wm {
            let p_here: Vec<Option<f64>> = (0..z_levels.len())
                .map(|zi| table.prob(cell, Some(zi), Some(wj)))
                .collect();
            let usable: Vec<usize> = (0..z_levels.len())
                .filter(|&zi| p_here[zi].is_some() && p_top[zi].is_some())
                .collect();
            if usable.len() < 2 {
                continue;
            }
            let mut best: Option<(usize, usize, f64)> = None;
            for (i, &za) in usable.iter().enumerate() {
                for &zb in &usable[i + 1..] {
                    let d = p_here[za].unwrap() - p_here[zb].unwrap();
                    if best.map_or(true, |(_, _, bd)| d.abs() > bd.abs()) {
                        best = Some((za, zb, d));
                    }
                }
            }
            let (mut za, mut zb, mut d) = best.expect("at least one pair");
            if d.abs() <= tau {
                continue;
            }
            if d < 0.0 {
                std::mem::swap(&mut za, &mut zb);
                d = -d;
            }
            let q1 = (p_top[za].unwrap() - p_top[zb].unwrap()) / d;
            let intercepts: Vec<f64> = usable
                .iter()
                .map(|&zi| q1 * p_here[zi].unwrap() - p_top[zi].unwrap())
                .collect();
            let q0 = intercepts.iter().sum::<f64>() / intercepts.len() as f64;
            let spread = intercepts.iter().cloned().fold(f64::NEG_INFINITY, f64::max)
                - intercepts.iter().cloned().fold(f64::INFINITY, f64::min);
            let used = q1 > 1.0;
            if !used && !flags.contains(&BoundFlag::MonotonicityRelevanceViolated) {
                flags.push(BoundFlag::MonotonicityRelevanceViolated);
            }
            any_ratio_used |= used;
            ratio_terms.push(RatioTerm {
                w: w_levels[wj],
                z_pair: (z_levels[za], z_levels[zb]),
                q1,
                q0,
                q0_spread: spread,
                used,
            });
        }
        if !any_ratio_used {
            flags.push(BoundFlag::InstrumentZIrrelevant);
        }
        let mut candidates: Vec<f64> = ratio_terms
            .iter()
            .filter(|t| t.used)
            .map(|t| t.q0 / (t.q1 - 1.0))
            .collect();
        candidates.extend(p_top.iter().flatten());
        let defined = !candidates.is_empty();
        let (fp_cap, fn_cap) = if defined {
            let sup = candidates.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
            let inf = candidates.iter().cloned().fold(f64::INFINITY, f64::min);
            (clip_unit(inf), clip_unit(1.0 - sup))
        } else {
            (1.0, 1.0)
        };
        cells.push(CellDiagnostics {
            cell,
            w_max: w_levels[wm],
            ratio_terms,
            fp_cap,
            fn_cap,
            flags,
            defined,
        });
    }
    Ok(TwoInstrumentDiagnostics { tau, cells })
}

/// Turns two-instrument misreporting caps into intervals for the true
/// probability, one row per `(cell, z)` context at the top W level:
/// `[(p - fp_cap) / (1 - fp_cap), p / (1 - fn_cap)]`.
pub fn bounds_two_instruments(
    table: &CondProbTable,
    diag: &TwoInstrumentDiagnostics,
) -> Result<ProbBounds> {
    let z_levels = table.z_levels().to_vec();
    let w_levels = table.w_levels().to_vec();
    if z_levels.len() < 2 || w_levels.len() < 2 {
        return Err(Error::validation(
            "two-instrument bounds require at least two levels of each instrument",
        ));
    }
    if diag.cells.len() != table.n_x_cells() {
        return Err(Error::validation(
            "diagnostics were computed for a different table shape",
        ));
    }
    let wm = w_levels.len() - 1;
    let mut rows = Vec::new();
    let mut undefined = 0usize;
    for cd in &diag.cells {
        if !cd.defined {
            undefined += 1;
            continue;
        }
        for (zi, level) in z_levels.iter().enumerate() {
            let Some(p) = table.prob(cd.cell, Some(zi), Some(wm)) else {
                continue;
            };
            let mut flags = cd.flags.clone();
            let degenerate = 1.0 - cd.fp_cap < EPS_DENOM || 1.0 - cd.fn_cap < EPS_DENOM;
            let (lower, upper) = if degenerate {
                flags.push(BoundFlag::DegenerateDenominator);
                (0.0, 1.0)
            } else {
                (
                    (p - cd.fp_cap) / (1.0 - cd.fp_cap),
                    p / (1.0 - cd.fn_cap),
                )
            };
            rows.push(finish_row(BoundRow {
                cell: cd.cell,
                z: Some(*level),
                w: Some(cd.w_max),
                lower,
                upper,
                binding_lower: None,
                binding_upper: None,
                flags,
            }));
        }
    }
    Ok(ProbBounds {
        method: Method::TwoInstrument,
        assumptions: AssumptionSet::unrestricted(InstrumentMode::ZAndW),
        rows,
        undefined_contexts: undefined,
    })
}

/// One failed testable implication.
#[derive(Debug, Clone, Serialize)]
pub struct Violation {
    pub cell: usize,
    pub z: Option<f64>,
    /// Name of the check that failed.
    pub check: String,
    pub detail: String,
}

/// Outcome of running the testable implications of an assumption set
/// against computed bounds and the underlying table.
#[derive(Debug, Clone, Serialize)]
pub struct TestableReport {
    pub checks_run: Vec<String>,
    pub violations: Vec<Violation>,
}

impl TestableReport {
    pub fn passed(&self) -> bool {
        self.violations.is_empty()
    }
}

/// Names of the implemented checks.
pub const CHECK_INTERVAL_NONEMPTY: &str = "interval-nonempty";
pub const CHECK_REPORTED_MONOTONE_IN_W: &str = "reported-prob-monotone-in-w";

/// Runs every testable implication the assumption set admits.
///
/// All assumption sets imply nonempty intervals. One-sided misreporting
/// with instrument W additionally restricts the direction of the reported
/// probability in W: no false positives forces it to be non-decreasing, no
/// false negatives non-increasing; `tol` absorbs sampling noise in those
/// comparisons.
pub fn check_testable_implications(
    bounds: &ProbBounds,
    table: &CondProbTable,
    assumptions: &AssumptionSet,
    tol: f64,
) -> Result<TestableReport> {
    if !tol.is_finite() || tol < 0.0 {
        return Err(Error::validation(format!(
            "tolerance must be a nonnegative number, got {tol}"
        )));
    }
    let mut checks_run = vec![CHECK_INTERVAL_NONEMPTY.to_string()];
    let mut violations = Vec::new();
    for row in &bounds.rows {
        if row.has_flag(BoundFlag::TestableImplicationViolated) {
            violations.push(Violation {
                cell: row.cell,
                z: row.z,
                check: CHECK_INTERVAL_NONEMPTY.to_string(),
                detail: format!(
                    "lower bound {:.6} exceeds upper bound {:.6}",
                    row.lower, row.upper
                ),
            });
        }
    }
    let one_sided_w = assumptions.instruments == InstrumentMode::WOnly
        && matches!(
            assumptions.restriction,
            Restriction::NoFalsePositives | Restriction::NoFalseNegatives
        );
    if one_sided_w {
        checks_run.push(CHECK_REPORTED_MONOTONE_IN_W.to_string());
        let env = envelopes_w(table)?;
        let increasing = assumptions.restriction == Restriction::NoFalsePositives;
        for ctx in 0..env.n_contexts {
            let probs: Vec<(f64, f64)> = env
                .w_levels
                .iter()
                .enumerate()
                .filter_map(|(wi, level)| env.prob_at(ctx, wi).map(|p| (*level, p)))
                .collect();
            for pair in probs.windows(2) {
                let ((w_prev, p_prev), (w_next, p_next)) = (pair[0], pair[1]);
                let broken = if increasing {
                    p_next < p_prev - tol
                } else {
                    p_next > p_prev + tol
                };
                if broken {
                    let (cell, z) = table.xz_context(ctx);
                    let direction = if increasing { "non-decreasing" } else { "non-increasing" };
                    violations.push(Violation {
                        cell,
                        z,
                        check: CHECK_REPORTED_MONOTONE_IN_W.to_string(),
                        detail: format!(
                            "reported probability must be {direction} in W, but moves \
                             from {p_prev:.6} at w={w_prev} to {p_next:.6} at w={w_next}"
                        ),
                    });
                }
            }
        }
    }
    Ok(TestableReport { checks_run, violations })
}
