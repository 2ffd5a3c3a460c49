//! Maximum likelihood under constant misreporting rates, the parametric
//! baseline used for comparisons.
//!
//! The model assumes the misreporting rates do not vary with covariates or
//! instruments and that the error distribution is known, so the reported
//! probability is the two-parameter mixture
//!
//! ```text
//! pi(x) = alpha_0 + (1 - alpha_0 - alpha_1) F(x' beta),
//! ```
//!
//! maximized by a derivative-free simplex search with multiple starts.
//! The index uses every observed column, instruments included: the
//! baseline has no exclusion restriction, so a practitioner applying it
//! would put all regressors in the index. Both of its assumptions are
//! deliberately rigid: when the data come from a process with
//! heterogeneous rates or a different error law, this estimator is
//! misspecified, which is exactly the comparison the bounds approach is
//! designed to survive.

use rayon::prelude::*;
use serde::Serialize;

use crate::data::Sample;
use crate::error::{Error, Result};
use crate::link::Link;
use crate::moments::DesignMatrix;
use crate::optim::{minimize_simplex, SimplexOptions};
use rand::prelude::*;
use rand_chacha::ChaCha8Rng;

/// Slack keeping the fitted rates strictly inside the degree constraint
/// `alpha_0 + alpha_1 <= 1 - DEGREE_SLACK`.
pub const DEGREE_SLACK: f64 = 1e-6;

/// Floor applied to mixture probabilities before taking logs.
const PROB_FLOOR: f64 = 1e-12;

/// Number of optimizer starts (one plain, the rest jittered).
const N_STARTS: usize = 5;

/// Fitted constant-misreporting maximum likelihood estimate.
#[derive(Debug, Clone, Serialize)]
pub struct HasEstimate {
    pub alpha0: f64,
    pub alpha1: f64,
    pub beta: Vec<f64>,
    pub loglik: f64,
    /// True when at least one simplex start met its tolerances.
    pub converged: bool,
}

/// Log-likelihood of the constant-misreporting mixture.
///
/// The coefficient vector runs over `[1, covariates.., z?, w?]`: the
/// baseline puts every observed column in the index.
///
/// # Errors
///
/// Rejects rates outside `[0, 1]`, rates violating the degree constraint,
/// and a coefficient vector whose length does not match the design.
pub fn has_loglik(
    alpha0: f64,
    alpha1: f64,
    beta: &[f64],
    sample: &Sample,
    link: &Link,
) -> Result<f64> {
    if !(0.0..=1.0).contains(&alpha0) || !(0.0..=1.0).contains(&alpha1) {
        return Err(Error::validation(format!(
            "misreporting rates must lie in [0, 1], got ({alpha0}, {alpha1})"
        )));
    }
    if alpha0 + alpha1 > 1.0 - DEGREE_SLACK {
        return Err(Error::validation(format!(
            "degree constraint violated: {alpha0} + {alpha1} > 1 - {DEGREE_SLACK}"
        )));
    }
    let design = DesignMatrix::build_all(sample);
    if beta.len() != design.dim() {
        return Err(Error::validation(format!(
            "coefficient vector has {} coordinates, design has {}",
            beta.len(),
            design.dim()
        )));
    }
    Ok(loglik_inner(
        alpha0,
        alpha1,
        beta,
        &design,
        sample.y(),
        link,
    ))
}

fn loglik_inner(
    alpha0: f64,
    alpha1: f64,
    beta: &[f64],
    design: &DesignMatrix,
    y: &[u8],
    link: &Link,
) -> f64 {
    let mut ll = 0.0;
    for (i, yi) in y.iter().enumerate() {
        let pi = alpha0 + (1.0 - alpha0 - alpha1) * link.cdf(design.index(i, beta));
        ll += if *yi == 1 {
            pi.max(PROB_FLOOR).ln()
        } else {
            (1.0 - pi).max(PROB_FLOOR).ln()
        };
    }
    ll
}

/// Maps two unconstrained parameters onto the rate region
/// `{alpha >= 0, alpha_0 + alpha_1 <= 1 - DEGREE_SLACK}`.
fn rates_from_raw(a: f64, b: f64) -> (f64, f64) {
    let ea = a.exp();
    let eb = b.exp();
    let scale = (1.0 - DEGREE_SLACK) / (ea + eb + 1.0);
    (ea * scale, eb * scale)
}

/// Inverse of [`rates_from_raw`] for interior rate pairs, used to seed
/// starts.
fn raw_from_rates(alpha0: f64, alpha1: f64) -> (f64, f64) {
    let rest = 1.0 - DEGREE_SLACK - alpha0 - alpha1;
    ((alpha0 / rest).ln(), (alpha1 / rest).ln())
}

/// Fits the constant-misreporting model by simplex search with
/// `N_STARTS` starts: a plain start at the no-misreporting maximum
/// likelihood coefficients, and seeded jitters of it. Starts run in
/// parallel; the best final likelihood wins, earlier starts win ties.
/// The index covers `[1, covariates.., z?, w?]`.
///
/// # Errors
///
/// Rejects an invalid link; fails when every start produced a non-finite
/// likelihood.
pub fn fit_has(sample: &Sample, link: &Link, seed: u64) -> Result<HasEstimate> {
    link.validate()?;
    let design = DesignMatrix::build_all(sample);
    let y = sample.y();
    let dim = design.dim();

    // Stage one: no-misreporting fit for a starting coefficient vector.
    let plain = minimize_simplex(
        |beta| -loglik_inner(0.0, 0.0, beta, &design, y, link),
        &vec![0.0; dim],
        &SimplexOptions::default(),
    );

    let (a0, b0) = raw_from_rates(0.05, 0.05);
    let mut starts: Vec<Vec<f64>> = Vec::with_capacity(N_STARTS);
    let mut base = vec![a0, b0];
    base.extend_from_slice(&plain.x);
    starts.push(base.clone());
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    for _ in 1..N_STARTS {
        let jittered: Vec<f64> = base
            .iter()
            .map(|v| v + rng.random_range(-0.5..0.5))
            .collect();
        starts.push(jittered);
    }

    let opts = SimplexOptions {
        max_iter: 4000,
        ..SimplexOptions::default()
    };
    let runs: Vec<_> = starts
        .par_iter()
        .map(|start| {
            minimize_simplex(
                |theta| {
                    let (alpha0, alpha1) = rates_from_raw(theta[0], theta[1]);
                    -loglik_inner(alpha0, alpha1, &theta[2..], &design, y, link)
                },
                start,
                &opts,
            )
        })
        .collect();

    let mut best: Option<&crate::optim::SimplexResult> = None;
    for run in &runs {
        if !run.f.is_finite() {
            continue;
        }
        if best.is_none_or(|b| run.f < b.f) {
            best = Some(run);
        }
    }
    let best = best.ok_or_else(|| {
        Error::computation("every likelihood start diverged to a non-finite value")
    })?;
    let (alpha0, alpha1) = rates_from_raw(best.x[0], best.x[1]);
    Ok(HasEstimate {
        alpha0,
        alpha1,
        beta: best.x[2..].to_vec(),
        loglik: -best.f,
        converged: runs.iter().any(|r| r.converged),
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    /// Constant-rate mixture over a wide covariate range, so the index
    /// pushes `F` close to 0 and 1 and both rates are well identified.
    fn normal_mixture_sample(
        n: usize,
        alpha0: f64,
        alpha1: f64,
        beta: &[f64; 2],
        seed: u64,
    ) -> Sample {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let mut x = Vec::with_capacity(n);
        let mut y = Vec::with_capacity(n);
        for _ in 0..n {
            let xi: f64 = rng.random_range(-3.0..3.0);
            let eps: f64 = rng.sample(rand_distr::StandardNormal);
            let y_star = beta[0] + beta[1] * xi >= eps;
            let reported = if y_star {
                rng.random::<f64>() >= alpha1
            } else {
                rng.random::<f64>() < alpha0
            };
            x.push(xi);
            y.push(u8::from(reported));
        }
        Sample::new(y, x, 1, None, None, None).unwrap()
    }

    #[test]
    fn reduces_to_plain_likelihood_without_misreporting() {
        let s = normal_mixture_sample(200, 0.0, 0.0, &[0.2, 1.0], 5);
        let beta = [0.2, 1.0];
        let ll = has_loglik(0.0, 0.0, &beta, &s, &Link::StandardNormal).unwrap();
        let mut expect = 0.0;
        for i in 0..s.n() {
            let p = Link::StandardNormal.cdf(0.2 + s.x_row(i)[0]);
            expect += if s.y()[i] == 1 { p.ln() } else { (1.0 - p).ln() };
        }
        assert!((ll - expect).abs() < 1e-10, "{ll} vs {expect}");
    }

    #[test]
    fn single_observation_at_half_gives_log_half() {
        let s = Sample::new(vec![1], vec![0.0], 1, None, None, None).unwrap();
        // alpha_0 = alpha_1 = 0.25 and F(0) = 0.5 give pi = 0.25 + 0.5 * 0.5.
        let ll = has_loglik(0.25, 0.25, &[0.0, 0.0], &s, &Link::StandardNormal).unwrap();
        assert!((ll - 0.5f64.ln()).abs() < 1e-15, "{ll}");
    }

    #[test]
    fn rejects_degree_constraint_violation() {
        let s = Sample::new(vec![1], vec![0.0], 1, None, None, None).unwrap();
        let err = has_loglik(0.6, 0.5, &[0.0, 0.0], &s, &Link::StandardNormal).unwrap_err();
        assert!(err.to_string().contains("degree"), "{err}");
        assert!(has_loglik(-0.1, 0.0, &[0.0, 0.0], &s, &Link::StandardNormal).is_err());
    }

    /// The mixture is invariant under `(a0, a1, beta) ->
    /// (1 - a1, 1 - a0, -beta)` for symmetric links; the swapped rates
    /// violate the degree constraint, which is how the fitter puts the
    /// two equivalent labelings apart.
    #[test]
    fn label_swap_leaves_symmetric_likelihood_unchanged() {
        let s = normal_mixture_sample(300, 0.2, 0.1, &[0.5, 1.0], 11);
        let design = DesignMatrix::build(&s, false).unwrap();
        let beta = [0.4, 0.9];
        let swapped: Vec<f64> = beta.iter().map(|b| -b).collect();
        for link in [Link::StandardNormal, Link::Logistic, Link::half_cauchy()] {
            let a = loglik_inner(0.2, 0.1, &beta, &design, s.y(), &link);
            let b = loglik_inner(0.9, 0.8, &swapped, &design, s.y(), &link);
            assert!((a - b).abs() < 1e-10, "{a} vs {b}");
        }
        assert!(has_loglik(0.9, 0.8, &swapped, &s, &Link::StandardNormal).is_err());
    }

    #[test]
    fn truth_beats_perturbed_coefficients_in_large_samples() {
        let s = normal_mixture_sample(10_000, 0.1, 0.05, &[0.5, 1.0], 17);
        let link = Link::StandardNormal;
        let at_truth = has_loglik(0.1, 0.05, &[0.5, 1.0], &s, &link).unwrap();
        for perturbed in [[1.0, 1.0], [0.5, 1.6], [0.0, 0.4]] {
            let ll = has_loglik(0.1, 0.05, &perturbed, &s, &link).unwrap();
            assert!(at_truth > ll, "{at_truth} vs {ll} at {perturbed:?}");
        }
    }

    #[test]
    fn rate_reparameterization_round_trips() {
        for (a0, a1) in [(0.1, 0.05), (0.3, 0.3), (0.0001, 0.9)] {
            let (a, b) = raw_from_rates(a0, a1);
            let (r0, r1) = rates_from_raw(a, b);
            assert!((r0 - a0).abs() < 1e-12 && (r1 - a1).abs() < 1e-12);
        }
        // Any raw pair lands strictly inside the constraint.
        for (a, b) in [(50.0, 50.0), (-30.0, 80.0), (0.0, 0.0)] {
            let (r0, r1) = rates_from_raw(a, b);
            assert!(r0 >= 0.0 && r1 >= 0.0 && r0 + r1 <= 1.0 - DEGREE_SLACK);
        }
    }

    #[test]
    fn recovers_constant_rates_when_correctly_specified() {
        let s = normal_mixture_sample(10_000, 0.1, 0.05, &[0.5, 1.5], 23);
        let est = fit_has(&s, &Link::StandardNormal, 42).unwrap();
        assert!(est.converged);
        assert!((est.alpha0 - 0.1).abs() < 0.05, "alpha0 {}", est.alpha0);
        assert!((est.alpha1 - 0.05).abs() < 0.05, "alpha1 {}", est.alpha1);
        assert!((est.beta[0] - 0.5).abs() < 0.1, "beta {:?}", est.beta);
        assert!((est.beta[1] - 1.5).abs() < 0.1, "beta {:?}", est.beta);
        assert!(est.loglik.is_finite());
        assert!(est.alpha0 + est.alpha1 <= 1.0 - DEGREE_SLACK);
    }

    #[test]
    fn fit_is_deterministic_given_seed() {
        let s = normal_mixture_sample(500, 0.2, 0.1, &[0.5, 1.0], 29);
        let a = fit_has(&s, &Link::StandardNormal, 7).unwrap();
        let b = fit_has(&s, &Link::StandardNormal, 7).unwrap();
        assert_eq!(a.beta, b.beta);
        assert_eq!(a.alpha0, b.alpha0);
        assert_eq!(a.loglik, b.loglik);
    }
}
