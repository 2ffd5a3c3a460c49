//! Sample container for binary response data with discrete instruments.
//!
//! Two kinds of instruments are distinguished throughout the crate:
//!
//! * `z` shifts the true outcome but is excluded from the misreporting
//!   process ("outcome instrument");
//! * `w` shifts the misreporting process but is excluded from the true
//!   outcome ("reporting instrument"), with misreporting rates weakly
//!   decreasing along the declared order of its levels.
//!
//! Both are optional; estimators check that the instruments they need are
//! present.

use crate::error::{Error, Result};

/// Latent truth carried by simulated samples.
///
/// `y = no_false_negative * y_star + (1 - no_false_positive) * (1 - y_star)`:
/// a true positive is reported correctly when `no_false_negative = 1`, a
/// true negative when `no_false_positive = 1`.
#[derive(Debug, Clone)]
pub struct Latent {
    /// True outcome before misreporting.
    pub y_star: Vec<u8>,
    /// 1 if a true positive would be reported as 1.
    pub no_false_negative: Vec<u8>,
    /// 1 if a true negative would be reported as 0.
    pub no_false_positive: Vec<u8>,
}

/// Observed sample: binary response, covariates, optional instruments.
#[derive(Debug, Clone)]
pub struct Sample {
    y: Vec<u8>,
    x: Vec<f64>,
    dim: usize,
    z: Option<Vec<f64>>,
    w: Option<Vec<f64>>,
    w_levels: Option<Vec<f64>>,
    latent: Option<Latent>,
}

impl Sample {
    /// Builds a sample from columns.
    ///
    /// `x` is row-major with `dim` covariates per observation (instruments
    /// excluded). `w_levels` declares the order of the reporting-instrument
    /// levels from most to least misreporting; when `None` and `w` is
    /// present, ascending numeric order is assumed.
    ///
    /// # Errors
    ///
    /// Rejects empty samples, non-binary responses, non-finite covariates
    /// or instrument values, length mismatches, duplicate declared levels,
    /// and `w` values outside the declared levels.
    pub fn new(
        y: Vec<u8>,
        x: Vec<f64>,
        dim: usize,
        z: Option<Vec<f64>>,
        w: Option<Vec<f64>>,
        w_levels: Option<Vec<f64>>,
    ) -> Result<Self> {
        let n = y.len();
        if n == 0 {
            return Err(Error::data("empty sample"));
        }
        if let Some(bad) = y.iter().position(|v| *v > 1) {
            return Err(Error::data(format!(
                "response must be 0 or 1, found {} at row {bad}",
                y[bad]
            )));
        }
        if x.len() != n * dim {
            return Err(Error::data(format!(
                "covariate matrix has {} entries, expected {} ({} rows x {} columns)",
                x.len(),
                n * dim,
                n,
                dim
            )));
        }
        if let Some(bad) = x.iter().position(|v| !v.is_finite()) {
            return Err(Error::data(format!(
                "non-finite covariate at row {}, column {}",
                bad / dim.max(1),
                bad % dim.max(1)
            )));
        }
        for (name, col) in [("z", &z), ("w", &w)] {
            if let Some(col) = col {
                if col.len() != n {
                    return Err(Error::data(format!(
                        "instrument {name} has {} entries, expected {n}",
                        col.len()
                    )));
                }
                if col.iter().any(|v| !v.is_finite()) {
                    return Err(Error::data(format!("non-finite value in instrument {name}")));
                }
            }
        }

        let w_levels = match (&w, w_levels) {
            (None, Some(_)) => {
                return Err(Error::validation(
                    "w_levels declared but no w column supplied",
                ));
            }
            (None, None) => None,
            (Some(col), declared) => {
                let levels = match declared {
                    Some(levels) => {
                        for (i, a) in levels.iter().enumerate() {
                            if levels[i + 1..].contains(a) {
                                return Err(Error::validation(format!(
                                    "duplicate declared w level {a}"
                                )));
                            }
                        }
                        levels
                    }
                    None => {
                        let mut levels = col.clone();
                        levels.sort_by(|a, b| a.partial_cmp(b).unwrap());
                        levels.dedup();
                        levels
                    }
                };
                if let Some(bad) = col.iter().find(|v| !levels.contains(v)) {
                    return Err(Error::data(format!(
                        "w value {bad} not among declared levels {levels:?}"
                    )));
                }
                Some(levels)
            }
        };

        Ok(Sample {
            y,
            x,
            dim,
            z,
            w,
            w_levels,
            latent: None,
        })
    }

    /// Attaches latent truth (for simulated data) after checking the
    /// reporting identity row by row.
    pub fn with_latent(mut self, latent: Latent) -> Result<Self> {
        let n = self.n();
        if latent.y_star.len() != n
            || latent.no_false_negative.len() != n
            || latent.no_false_positive.len() != n
        {
            return Err(Error::data("latent columns must match sample length"));
        }
        for i in 0..n {
            let expect = if latent.y_star[i] == 1 {
                latent.no_false_negative[i]
            } else {
                1 - latent.no_false_positive[i]
            };
            if self.y[i] != expect {
                return Err(Error::data(format!(
                    "latent truth inconsistent with reported response at row {i}"
                )));
            }
        }
        self.latent = Some(latent);
        Ok(self)
    }

    /// Number of observations.
    pub fn n(&self) -> usize {
        self.y.len()
    }

    /// Number of covariates per observation (instruments excluded).
    pub fn dim(&self) -> usize {
        self.dim
    }

    /// Reported binary responses.
    pub fn y(&self) -> &[u8] {
        &self.y
    }

    /// Covariate row for observation `i`.
    pub fn x_row(&self, i: usize) -> &[f64] {
        &self.x[i * self.dim..(i + 1) * self.dim]
    }

    /// Outcome-instrument column, if present.
    pub fn z(&self) -> Option<&[f64]> {
        self.z.as_deref()
    }

    /// Reporting-instrument column, if present.
    pub fn w(&self) -> Option<&[f64]> {
        self.w.as_deref()
    }

    /// Declared reporting-instrument levels in increasing order, if present.
    pub fn w_levels(&self) -> Option<&[f64]> {
        self.w_levels.as_deref()
    }

    /// Latent truth, if this sample was simulated.
    pub fn latent(&self) -> Option<&Latent> {
        self.latent.as_ref()
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn base_sample() -> Sample {
        Sample::new(
            vec![0, 1, 1, 0],
            vec![0.1, -0.4, 0.9, 0.3],
            1,
            Some(vec![0.0, 1.0, 0.0, 1.0]),
            None,
            None,
        )
        .unwrap()
    }

    #[test]
    fn accepts_well_formed_columns() {
        let s = base_sample();
        assert_eq!(s.n(), 4);
        assert_eq!(s.dim(), 1);
        assert_eq!(s.x_row(2), &[0.9]);
        assert!(s.w().is_none());
    }

    #[test]
    fn rejects_non_binary_response() {
        let err = Sample::new(vec![0, 2], vec![0.0, 0.0], 1, None, None, None).unwrap_err();
        assert!(err.to_string().contains("0 or 1"), "{err}");
    }

    #[test]
    fn rejects_empty_sample() {
        assert!(Sample::new(vec![], vec![], 1, None, None, None).is_err());
    }

    #[test]
    fn rejects_nan_covariate() {
        let err =
            Sample::new(vec![0, 1], vec![0.0, f64::NAN], 1, None, None, None).unwrap_err();
        assert!(err.to_string().contains("non-finite"), "{err}");
    }

    #[test]
    fn rejects_length_mismatch() {
        assert!(Sample::new(vec![0, 1], vec![0.0], 1, None, None, None).is_err());
        assert!(Sample::new(vec![0, 1], vec![0.0, 0.0], 1, Some(vec![1.0]), None, None).is_err());
    }

    #[test]
    fn rejects_duplicate_declared_levels() {
        let err = Sample::new(
            vec![0, 1],
            vec![0.0, 0.0],
            1,
            None,
            Some(vec![1.0, 2.0]),
            Some(vec![1.0, 1.0, 2.0]),
        )
        .unwrap_err();
        assert!(err.to_string().contains("duplicate"), "{err}");
    }

    #[test]
    fn rejects_w_value_outside_declared_levels() {
        let err = Sample::new(
            vec![0, 1],
            vec![0.0, 0.0],
            1,
            None,
            Some(vec![1.0, 3.0]),
            Some(vec![1.0, 2.0]),
        )
        .unwrap_err();
        assert!(err.to_string().contains("not among declared"), "{err}");
    }

    #[test]
    fn infers_ascending_levels_when_not_declared() {
        let s = Sample::new(
            vec![0, 1, 0],
            vec![0.0, 0.0, 0.0],
            1,
            None,
            Some(vec![3.0, 1.0, 3.0]),
            None,
        )
        .unwrap();
        assert_eq!(s.w_levels().unwrap(), &[1.0, 3.0]);
    }

    #[test]
    fn latent_identity_is_checked() {
        let s = base_sample();
        // Row 0 reports 0; with y_star = 1 that requires no_false_negative = 0.
        let ok = s.clone().with_latent(Latent {
            y_star: vec![1, 1, 1, 0],
            no_false_negative: vec![0, 1, 1, 1],
            no_false_positive: vec![1, 1, 1, 1],
        });
        assert!(ok.is_ok());

        let bad = s.with_latent(Latent {
            y_star: vec![1, 1, 1, 0],
            no_false_negative: vec![1, 1, 1, 1],
            no_false_positive: vec![1, 1, 1, 1],
        });
        assert!(bad.is_err());
    }
}
