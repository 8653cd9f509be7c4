//! Softmax-linear (multinomial logistic) regression.
//!
//! A conditional-only family: it models `p(c | x, theta)` directly and has
//! no covariate distribution, so joint and margin evaluations are rejected
//! by construction. The last class is the reference with its score pinned
//! to zero; the free parameters are `(C - 1) * (D + 1)` weights and biases
//! under a uniform box prior.

use rand::{Rng, RngCore};

use crate::constrain::ConstraintLayout;
use crate::error::{Error, Result};
use crate::family::{LogDensity, ModelFamily, ParameterPoint};
use crate::logspace::log_sum_exp;

/// Half-width of the uniform prior box on every weight and bias.
pub const LOGREG_PRIOR_BOUND: f64 = 30.0;

/// Multinomial logistic regression with a pinned reference class.
pub struct LogRegFamily {
    dim: usize,
    num_classes: usize,
    bound: f64,
    id: String,
    layout: ConstraintLayout,
}

impl LogRegFamily {
    pub fn new(dim: usize, num_classes: usize) -> Result<Self> {
        Self::with_bound(dim, num_classes, LOGREG_PRIOR_BOUND)
    }

    pub fn with_bound(dim: usize, num_classes: usize, bound: f64) -> Result<Self> {
        if dim == 0 {
            return Err(Error::Config("feature dimension must be positive".into()));
        }
        if num_classes < 2 {
            return Err(Error::Config("logistic regression needs at least two classes".into()));
        }
        if bound <= 0.0 {
            return Err(Error::Config("prior box half-width must be positive".into()));
        }
        let id = format!("logreg[d={dim},c={num_classes}]");
        let layout = ConstraintLayout::new().identity("weights", (num_classes - 1) * (dim + 1));
        Ok(LogRegFamily {
            dim,
            num_classes,
            bound,
            id,
            layout,
        })
    }

    /// Class scores `(w_c . x + b_c)` for the non-reference classes plus the
    /// pinned zero for the reference class.
    fn scores(&self, x: &[f64], theta: &ParameterPoint) -> Vec<f64> {
        let stride = self.dim + 1;
        let mut scores = Vec::with_capacity(self.num_classes);
        for c in 0..self.num_classes - 1 {
            let row = &theta.values()[c * stride..(c + 1) * stride];
            let mut s = row[self.dim]; // bias
            for (w, v) in row[..self.dim].iter().zip(x) {
                s += w * v;
            }
            scores.push(s);
        }
        scores.push(0.0);
        scores
    }

    /// Builds a parameter point from per-class weight rows `[w.., b]` for the
    /// non-reference classes.
    pub fn point_from_rows(&self, rows: &[Vec<f64>]) -> Result<ParameterPoint> {
        if rows.len() != self.num_classes - 1 {
            return Err(Error::DimensionMismatch {
                expected: self.num_classes - 1,
                got: rows.len(),
            });
        }
        let mut values = Vec::with_capacity(self.unconstrained_dim());
        for row in rows {
            if row.len() != self.dim + 1 {
                return Err(Error::DimensionMismatch {
                    expected: self.dim + 1,
                    got: row.len(),
                });
            }
            values.extend_from_slice(row);
        }
        self.point(values)
    }
}

impl ModelFamily for LogRegFamily {
    fn family_id(&self) -> &str {
        &self.id
    }

    fn num_classes(&self) -> usize {
        self.num_classes
    }

    fn feature_dim(&self) -> usize {
        self.dim
    }

    fn layout(&self) -> &ConstraintLayout {
        &self.layout
    }

    /// Uniform over the box `[-bound, bound]` per coordinate.
    fn log_prior(&self, theta: &ParameterPoint) -> Result<LogDensity> {
        self.check_theta(theta)?;
        let inside = theta.values().iter().all(|v| v.abs() <= self.bound);
        let value = if inside {
            -(theta.dim() as f64) * (2.0 * self.bound).ln()
        } else {
            f64::NEG_INFINITY
        };
        Ok(LogDensity::normalized(value))
    }

    fn sample_prior(&self, rng: &mut dyn RngCore) -> ParameterPoint {
        let values: Vec<f64> = (0..self.unconstrained_dim())
            .map(|_| rng.random_range(-self.bound..self.bound))
            .collect();
        self.point(values).expect("uniform draws are finite")
    }

    /// Conditional-only family: there is no covariate model to evaluate.
    fn log_joint(
        &self,
        _class: usize,
        _x: &[f64],
        _theta: &ParameterPoint,
        _rng: &mut dyn RngCore,
    ) -> Result<LogDensity> {
        Err(Error::Unsupported {
            family: self.id.clone(),
            operation: "joint evaluation (conditional-only family; use the regression target)",
        })
    }

    /// Conditional-only family: margins are rejected, not silently derived.
    fn log_margin(
        &self,
        _x: &[f64],
        _theta: &ParameterPoint,
        _rng: &mut dyn RngCore,
    ) -> Result<LogDensity> {
        Err(Error::Unsupported {
            family: self.id.clone(),
            operation: "margin evaluation (conditional-only family)",
        })
    }

    fn log_conditional(
        &self,
        class: usize,
        x: &[f64],
        theta: &ParameterPoint,
        _rng: &mut dyn RngCore,
    ) -> Result<LogDensity> {
        self.check_class(class)?;
        self.check_theta(theta)?;
        self.check_features(x)?;
        let scores = self.scores(x, theta);
        let value = scores[class] - log_sum_exp(&scores);
        Ok(LogDensity::normalized(value.min(0.0)))
    }

    /// Direct softmax over scores; the default would try (and reject) joints.
    fn log_conditional_vector(
        &self,
        x: &[f64],
        theta: &ParameterPoint,
        _rng: &mut dyn RngCore,
    ) -> Result<Vec<f64>> {
        self.check_theta(theta)?;
        self.check_features(x)?;
        let scores = self.scores(x, theta);
        let norm = log_sum_exp(&scores);
        Ok(scores.iter().map(|s| (s - norm).min(0.0)).collect())
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::seeding::rng_from;

    #[test]
    fn zero_weights_give_uniform_conditionals() {
        let fam = LogRegFamily::new(3, 4).unwrap();
        let theta = fam.point(vec![0.0; 12]).unwrap();
        let mut rng = rng_from(0, &[]);
        for c in 0..4 {
            let got = fam
                .log_conditional(c, &[1.0, -2.0, 0.5], &theta, &mut rng)
                .unwrap()
                .value();
            assert!((got - 0.25f64.ln()).abs() < 1e-12);
        }
    }

    #[test]
    fn binary_score_difference_of_ln3_gives_three_quarters() {
        // One non-reference class with score ln 3 at x: sigmoid(ln 3) = 0.75.
        let fam = LogRegFamily::new(1, 2).unwrap();
        let theta = fam.point_from_rows(&[vec![0.0, 3.0f64.ln()]]).unwrap();
        let mut rng = rng_from(0, &[]);
        let p0 = fam
            .log_conditional(0, &[5.0], &theta, &mut rng)
            .unwrap()
            .value()
            .exp();
        let p1 = fam
            .log_conditional(1, &[5.0], &theta, &mut rng)
            .unwrap()
            .value()
            .exp();
        assert!((p0 - 0.75).abs() < 1e-12);
        assert!((p1 - 0.25).abs() < 1e-12);
    }

    #[test]
    fn weights_enter_through_inner_products() {
        let fam = LogRegFamily::new(2, 2).unwrap();
        let theta = fam.point_from_rows(&[vec![1.0, -0.5, 0.25]]).unwrap();
        let mut rng = rng_from(0, &[]);
        let x = [2.0, 4.0];
        let score = 1.0 * 2.0 + (-0.5) * 4.0 + 0.25;
        let expected = score - log_sum_exp(&[score, 0.0]);
        let got = fam.log_conditional(0, &x, &theta, &mut rng).unwrap().value();
        assert!((got - expected).abs() < 1e-12);
    }

    #[test]
    fn joint_and_margin_are_rejected() {
        let fam = LogRegFamily::new(2, 2).unwrap();
        let theta = fam.point(vec![0.0; 3]).unwrap();
        let mut rng = rng_from(0, &[]);
        assert!(matches!(
            fam.log_joint(0, &[0.0, 0.0], &theta, &mut rng),
            Err(Error::Unsupported { .. })
        ));
        assert!(matches!(
            fam.log_margin(&[0.0, 0.0], &theta, &mut rng),
            Err(Error::Unsupported { .. })
        ));
    }

    #[test]
    fn prior_is_a_box() {
        let fam = LogRegFamily::new(1, 2).unwrap();
        let inside = fam.point(vec![29.9, -29.9]).unwrap();
        let outside = fam.point(vec![30.1, 0.0]).unwrap();
        let v = fam.log_prior(&inside).unwrap().value();
        assert!((v - (-2.0 * 60.0f64.ln())).abs() < 1e-12);
        assert_eq!(
            fam.log_prior(&outside).unwrap().value(),
            f64::NEG_INFINITY
        );
    }

    #[test]
    fn prior_draws_stay_in_the_box() {
        let fam = LogRegFamily::new(3, 3).unwrap();
        let mut rng = rng_from(41, &[2]);
        for _ in 0..50 {
            let theta = fam.sample_prior(&mut rng);
            assert!(theta.values().iter().all(|v| v.abs() < 30.0));
            assert!(fam.log_prior(&theta).unwrap().value().is_finite());
        }
    }

    #[test]
    fn conditionals_normalize_over_classes() {
        let fam = LogRegFamily::new(2, 3).unwrap();
        let mut rng = rng_from(42, &[3]);
        let theta = fam.sample_prior(&mut rng);
        let x = [0.7, -1.1];
        let logs: Vec<f64> = (0..3)
            .map(|c| fam.log_conditional(c, &x, &theta, &mut rng).unwrap().value())
            .collect();
        assert!(log_sum_exp(&logs).abs() < 1e-12);
    }

    #[test]
    fn conditional_vector_agrees_with_scalar_conditionals() {
        let fam = LogRegFamily::new(2, 3).unwrap();
        let mut rng = rng_from(42, &[4]);
        let theta = fam.sample_prior(&mut rng);
        let x = [0.7, -1.1];
        let vector = fam.log_conditional_vector(&x, &theta, &mut rng).unwrap();
        for (c, v) in vector.iter().enumerate() {
            let scalar = fam.log_conditional(c, &x, &theta, &mut rng).unwrap().value();
            assert!((v - scalar).abs() < 1e-14);
        }
    }
}
