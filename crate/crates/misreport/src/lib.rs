//! Partial identification for binary choice models with misreported
//! outcomes.
//!
//! The reported response `Y` may differ from the true outcome `Y*`:
//! a true positive is lost with probability `alpha_1` (false-negative
//! rate) and a true negative is flipped with probability `alpha_0`
//! (false-positive rate), so the reported probability satisfies
//!
//! ```text
//! Pr(Y = 1 | x) = (1 - alpha_1) Pr(Y* = 1 | x) + alpha_0 (1 - Pr(Y* = 1 | x)).
//! ```
//!
//! With unknown misreporting rates the true choice probability is only
//! partially identified. This crate computes sharp bounds on
//! `Pr(Y* = 1 | x)` from discrete instruments, propagates them into moment
//! inequalities for index coefficients, estimates the resulting identified
//! set, and verifies every closed form against brute-force enumeration.
//!
//! # Example
//!
//! Bounds from an outcome instrument on a one-cell table whose reported
//! rates are 0.375 at `z = 0` and 0.725 at `z = 1`:
//!
//! ```
//! use misreport::{compute_bounds, AssumptionSet, CondProbTable, InstrumentMode};
//!
//! let table = CondProbTable::from_probs(1, vec![0.0, 1.0], vec![], &[0.375, 0.725])?;
//! let bounds = compute_bounds(&table, &AssumptionSet::unrestricted(InstrumentMode::ZOnly))?;
//!
//! let row = bounds.row(0, Some(1.0)).unwrap();
//! assert!((row.lower - 0.56).abs() < 1e-12);
//! assert!((row.upper - 1.0).abs() < 1e-12);
//! # Ok::<(), misreport::Error>(())
//! ```
//!
//! The guide in `book/` builds the full pipeline up from this identity;
//! its chapters are included below as doctests so the examples there stay
//! compiled and correct.
//!
//! # Modules
//!
//! * [`data`], [`binning`], [`table`]: samples, covariate cells, and
//!   conditional probability tables with instrument envelopes.
//! * [`bounds`]: interval bounds on the true choice probability from an
//!   outcome instrument, a reporting instrument, their combination, and
//!   extra restrictions on the misreporting rates.
//! * [`oracle`]: brute-force feasibility enumeration and closed-form
//!   witness constructions used to certify the bounds.
//! * [`moments`]: moment inequalities for index coefficients and the
//!   criterion function over hypercube instrumental functions.
//! * [`setest`]: grid-based set estimation and Monte Carlo metrics.
//! * [`has`]: maximum likelihood under constant misreporting rates, the
//!   parametric baseline.
//! * [`sim`]: simulation designs, population tables by quadrature, and the
//!   Monte Carlo driver.

pub mod binning;
pub mod bounds;
pub mod data;
pub mod error;
pub mod has;
pub mod link;
pub mod moments;
pub mod oracle;
mod optim;
mod quad;
pub mod setest;
pub mod sim;
pub mod table;

pub use binning::Binning;
pub use bounds::{
    apply_restriction, bounds_instrument_w, bounds_instrument_z, bounds_two_instruments,
    check_testable_implications, compute_bounds, two_instrument_diagnostics, AssumptionSet,
    BoundFlag, BoundRow, InstrumentMode, Method, ProbBounds, Restriction, TestableReport,
    TwoInstrumentDiagnostics,
};
pub use data::{Latent, Sample};
pub use error::{Error, Result};
pub use has::{fit_has, has_loglik, HasEstimate};
pub use link::Link;
pub use moments::{
    build_hypercubes, criterion, criterion_trace, moment_parametric, moment_semiparametric,
    prepare_moment_data, q_from_trace, CriterionStats, CubeMoments, DesignMatrix,
    InstrumentalFunctions, ModelKind, ModelSpec, MomentData, Normalization,
};
pub use oracle::{
    brute_force_prob_bounds, construct_sharpness_witness, verify_witness, BoundSide,
    OracleBounds, OracleConfig, Witness, WitnessReport,
};
pub use setest::{
    estimate_identified_set, mc_metrics, BetaGrid, CoordinateRange, CutoffRule, GridEval,
    IdentifiedSet, MCReport, MCRow, MetricPair,
};
pub use sim::{
    default_cube_target, generate, population, population_moment_validity, reported_prob,
    run_monte_carlo, Design, DgpConfig, ErrorLaw, MomentValidity, MonteCarloConfig,
    MonteCarloOutput, Population,
};
pub use table::{envelopes_w, envelopes_z, CondProbTable, EnvelopeW, EnvelopeZ};

// Every Rust fence in the README and the guide runs as a doctest, one
// module per chapter so a failure names its origin.
#[cfg(doctest)]
mod book {
    #[doc = include_str!("../../../README.md")]
    mod readme {}
    #[doc = include_str!("../../../book/src/introduction.md")]
    mod introduction {}
    #[doc = include_str!("../../../book/src/model.md")]
    mod model {}
    #[doc = include_str!("../../../book/src/outcome-instrument.md")]
    mod outcome_instrument {}
    #[doc = include_str!("../../../book/src/reporting-instrument.md")]
    mod reporting_instrument {}
    #[doc = include_str!("../../../book/src/restrictions.md")]
    mod restrictions {}
    #[doc = include_str!("../../../book/src/two-instruments.md")]
    mod two_instruments {}
    #[doc = include_str!("../../../book/src/verification.md")]
    mod verification {}
    #[doc = include_str!("../../../book/src/moments.md")]
    mod moments {}
    #[doc = include_str!("../../../book/src/estimation.md")]
    mod estimation {}
    #[doc = include_str!("../../../book/src/benchmarks.md")]
    mod benchmarks {}
}
