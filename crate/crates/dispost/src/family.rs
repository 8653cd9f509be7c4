//! The model-family abstraction: log densities, parameter points, and the
//! trait every generative or conditional family implements.

use rand::RngCore;

use crate::constrain::ConstraintLayout;
use crate::data::{Dataset, FeatureValue};
use crate::error::{Error, Result};
use crate::logspace::log_sum_exp;

/// Whether a log-density value is known to integrate (or sum) to one.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum DensityKind {
    /// The value is the log of a properly normalized density or mass.
    Normalized,
    /// The value is a log density known only up to an additive constant.
    Unnormalized,
}

/// A log-density value tagged with its normalization status.
///
/// Never `NaN`; `-inf` encodes a zero-probability event. Values above zero
/// are legal for normalized continuous densities evaluated at a point.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct LogDensity {
    value: f64,
    kind: DensityKind,
}

impl LogDensity {
    /// Wraps the log of a normalized density value.
    ///
    /// # Panics
    ///
    /// Panics on `NaN` or `+inf`: both indicate a numerical bug upstream.
    pub fn normalized(value: f64) -> Self {
        assert!(!value.is_nan(), "log density is NaN");
        assert!(value != f64::INFINITY, "log density is +inf");
        LogDensity {
            value,
            kind: DensityKind::Normalized,
        }
    }

    /// Wraps an unnormalized log-density value.
    pub fn unnormalized(value: f64) -> Self {
        assert!(!value.is_nan(), "log density is NaN");
        assert!(value != f64::INFINITY, "log density is +inf");
        LogDensity {
            value,
            kind: DensityKind::Unnormalized,
        }
    }

    pub fn value(&self) -> f64 {
        self.value
    }

    pub fn kind(&self) -> DensityKind {
        self.kind
    }

    /// True when the value encodes a zero-probability event.
    pub fn is_zero_probability(&self) -> bool {
        self.value == f64::NEG_INFINITY
    }
}

/// A point in a family's unconstrained parameter space, tagged with the
/// identifier of the family it belongs to.
#[derive(Debug, Clone, PartialEq)]
pub struct ParameterPoint {
    family_id: String,
    values: Vec<f64>,
}

impl ParameterPoint {
    /// Builds a point, rejecting non-finite coordinates.
    pub fn new(family_id: impl Into<String>, values: Vec<f64>) -> Result<Self> {
        for (index, v) in values.iter().enumerate() {
            if !v.is_finite() {
                return Err(Error::NonFiniteParameter { index });
            }
        }
        Ok(ParameterPoint {
            family_id: family_id.into(),
            values,
        })
    }

    pub fn family_id(&self) -> &str {
        &self.family_id
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn dim(&self) -> usize {
        self.values.len()
    }
}

/// A parametric family of class-conditional models over labeled data.
///
/// Implementations provide `p(c, x | theta)` (or only `p(c | x, theta)` for
/// conditional-only families) together with a prior over the unconstrained
/// parameter space. All parameter vectors live in the unconstrained space
/// described by [`ModelFamily::layout`]; priors stated on constrained blocks
/// include the change-of-variables Jacobian.
///
/// Every evaluation takes an explicit RNG so families whose densities are
/// estimated by Monte Carlo integration can draw from the caller's stream;
/// deterministic families ignore it. Evaluations have no hidden state:
/// given the same RNG state, results do not depend on call order.
pub trait ModelFamily: Send + Sync {
    /// Stable identifier binding parameter points to this family,
    /// e.g. `cgm[d=10,k=2]`.
    fn family_id(&self) -> &str;

    fn num_classes(&self) -> usize;

    fn feature_dim(&self) -> usize;

    /// Block structure of the parameter space.
    fn layout(&self) -> &ConstraintLayout;

    fn unconstrained_dim(&self) -> usize {
        self.layout().unconstrained_dim()
    }

    /// Log prior over the unconstrained space (Jacobian included when the
    /// prior is stated on constrained blocks).
    fn log_prior(&self, theta: &ParameterPoint) -> Result<LogDensity>;

    /// One draw from the prior, as an unconstrained parameter point.
    fn sample_prior(&self, rng: &mut dyn RngCore) -> ParameterPoint;

    /// `ln p(c, x | theta)` with any latent variables marginalized out.
    ///
    /// `x` must be fully observed and of length `feature_dim()`.
    /// Conditional-only families return an error directing callers to
    /// `log_conditional`.
    fn log_joint(
        &self,
        class: usize,
        x: &[f64],
        theta: &ParameterPoint,
        rng: &mut dyn RngCore,
    ) -> Result<LogDensity>;

    /// `ln p(x | theta) = ln Σ_c p(c, x | theta)`.
    ///
    /// Returns `-inf` when every class joint is zero at `x`.
    fn log_margin(
        &self,
        x: &[f64],
        theta: &ParameterPoint,
        rng: &mut dyn RngCore,
    ) -> Result<LogDensity> {
        let mut joints = Vec::with_capacity(self.num_classes());
        for c in 0..self.num_classes() {
            joints.push(self.log_joint(c, x, theta, rng)?.value());
        }
        Ok(LogDensity::normalized(log_sum_exp(&joints)))
    }

    /// `ln p(c | x, theta)`, derived as `log_joint - log_margin` unless the
    /// family overrides it with a direct conditional form.
    ///
    /// Errors with [`Error::ZeroMargin`] when the covariate margin is zero,
    /// in which case the conditional is undefined.
    fn log_conditional(
        &self,
        class: usize,
        x: &[f64],
        theta: &ParameterPoint,
        rng: &mut dyn RngCore,
    ) -> Result<LogDensity> {
        let mut joints = Vec::with_capacity(self.num_classes());
        for c in 0..self.num_classes() {
            joints.push(self.log_joint(c, x, theta, rng)?.value());
        }
        let margin = log_sum_exp(&joints);
        if margin == f64::NEG_INFINITY {
            return Err(Error::ZeroMargin { observation: None });
        }
        // The margin includes the class term, so the ratio is a probability;
        // clamp away positive round-off from Monte Carlo-estimated joints.
        Ok(LogDensity::normalized((joints[class] - margin).min(0.0)))
    }

    /// `ln p(c | x, theta)` for every class at once.
    ///
    /// One margin evaluation is shared across all classes, so this is the
    /// cheap path for predictive distributions; calling `log_conditional`
    /// per class recomputes the margin each time. Errors with
    /// [`Error::ZeroMargin`] when every class joint is zero at `x`.
    fn log_conditional_vector(
        &self,
        x: &[f64],
        theta: &ParameterPoint,
        rng: &mut dyn RngCore,
    ) -> Result<Vec<f64>> {
        let mut joints = Vec::with_capacity(self.num_classes());
        for c in 0..self.num_classes() {
            joints.push(self.log_joint(c, x, theta, rng)?.value());
        }
        let margin = log_sum_exp(&joints);
        if margin == f64::NEG_INFINITY {
            return Err(Error::ZeroMargin { observation: None });
        }
        Ok(joints.iter().map(|j| (j - margin).min(0.0)).collect())
    }

    /// `ln q(c, x_obs | theta)`: the joint with missing feature components
    /// marginalized out.
    ///
    /// The default delegates to `log_joint` when nothing is missing and
    /// reports the family as unsupported otherwise; families with tractable
    /// marginals override it.
    fn log_joint_marginal_missing(
        &self,
        class: usize,
        x: &[FeatureValue],
        theta: &ParameterPoint,
        rng: &mut dyn RngCore,
    ) -> Result<LogDensity> {
        if x.iter().any(|f| f.is_missing()) {
            return Err(Error::Unsupported {
                family: self.family_id().to_string(),
                operation: "marginalizing missing feature components",
            });
        }
        let dense: Vec<f64> = x.iter().map(|f| f.observed().unwrap()).collect();
        self.log_joint(class, &dense, theta, rng)
    }

    /// Draws `n` labeled observations from `p(c, x | theta)`.
    ///
    /// Optional: only families used as data generators implement it.
    fn simulate(
        &self,
        _theta: &ParameterPoint,
        _n: usize,
        _rng: &mut dyn RngCore,
    ) -> Result<Dataset> {
        Err(Error::Unsupported {
            family: self.family_id().to_string(),
            operation: "simulation",
        })
    }

    /// Samples values for the missing components of `x` from
    /// `p(x_miss | c, x_obs, theta)`, returning the completed feature vector.
    ///
    /// Optional: implemented by generator families used for imputation.
    fn simulate_missing_components(
        &self,
        _class: usize,
        _x: &[FeatureValue],
        _theta: &ParameterPoint,
        _rng: &mut dyn RngCore,
    ) -> Result<Vec<f64>> {
        Err(Error::Unsupported {
            family: self.family_id().to_string(),
            operation: "conditional simulation of missing components",
        })
    }

    /// Validates that a parameter point belongs to this family and has the
    /// right dimension.
    fn check_theta(&self, theta: &ParameterPoint) -> Result<()> {
        if theta.family_id() != self.family_id() {
            return Err(Error::FamilyMismatch {
                point: theta.family_id().to_string(),
                family: self.family_id().to_string(),
            });
        }
        if theta.dim() != self.unconstrained_dim() {
            return Err(Error::DimensionMismatch {
                expected: self.unconstrained_dim(),
                got: theta.dim(),
            });
        }
        Ok(())
    }

    /// Builds a parameter point bound to this family from unconstrained
    /// coordinates.
    fn point(&self, values: Vec<f64>) -> Result<ParameterPoint> {
        if values.len() != self.unconstrained_dim() {
            return Err(Error::DimensionMismatch {
                expected: self.unconstrained_dim(),
                got: values.len(),
            });
        }
        ParameterPoint::new(self.family_id(), values)
    }

    /// Validates a class label against this family.
    fn check_class(&self, class: usize) -> Result<()> {
        if class >= self.num_classes() {
            return Err(Error::ClassOutOfRange {
                label: class,
                num_classes: self.num_classes(),
            });
        }
        Ok(())
    }

    /// Validates a dense feature vector's dimension.
    fn check_features(&self, x: &[f64]) -> Result<()> {
        if x.len() != self.feature_dim() {
            return Err(Error::DimensionMismatch {
                expected: self.feature_dim(),
                got: x.len(),
            });
        }
        Ok(())
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::seeding::rng_from;

    /// A fixed two-class stub whose joints are hard-coded, used to pin the
    /// derived margin and conditional arithmetic.
    struct StubFamily {
        layout: ConstraintLayout,
        log_joints: [f64; 2],
    }

    impl StubFamily {
        fn new(log_joints: [f64; 2]) -> Self {
            StubFamily {
                layout: ConstraintLayout::new().identity("unused", 1),
                log_joints,
            }
        }
    }

    impl ModelFamily for StubFamily {
        fn family_id(&self) -> &str {
            "stub"
        }
        fn num_classes(&self) -> usize {
            2
        }
        fn feature_dim(&self) -> usize {
            1
        }
        fn layout(&self) -> &ConstraintLayout {
            &self.layout
        }
        fn log_prior(&self, _theta: &ParameterPoint) -> Result<LogDensity> {
            Ok(LogDensity::normalized(0.0))
        }
        fn sample_prior(&self, _rng: &mut dyn RngCore) -> ParameterPoint {
            self.point(vec![0.0]).unwrap()
        }
        fn log_joint(
            &self,
            class: usize,
            _x: &[f64],
            _theta: &ParameterPoint,
            _rng: &mut dyn RngCore,
        ) -> Result<LogDensity> {
            Ok(LogDensity::normalized(self.log_joints[class]))
        }
    }

    #[test]
    fn margin_is_log_sum_of_joints() {
        // joints 0.3 and 0.2 -> margin 0.5
        let fam = StubFamily::new([0.3f64.ln(), 0.2f64.ln()]);
        let theta = fam.point(vec![0.0]).unwrap();
        let mut rng = rng_from(0, &[]);
        let m = fam.log_margin(&[0.0], &theta, &mut rng).unwrap();
        assert!((m.value() - 0.5f64.ln()).abs() < 1e-12);
    }

    #[test]
    fn equal_joints_give_half_conditional() {
        let fam = StubFamily::new([-1.0, -1.0]);
        let theta = fam.point(vec![0.0]).unwrap();
        let mut rng = rng_from(0, &[]);
        let c = fam.log_conditional(0, &[0.0], &theta, &mut rng).unwrap();
        assert!((c.value() - 0.5f64.ln()).abs() < 1e-12);
        assert!(c.value() <= 0.0);
    }

    #[test]
    fn zero_margin_is_an_error() {
        let fam = StubFamily::new([f64::NEG_INFINITY, f64::NEG_INFINITY]);
        let theta = fam.point(vec![0.0]).unwrap();
        let mut rng = rng_from(0, &[]);
        let m = fam.log_margin(&[0.0], &theta, &mut rng).unwrap();
        assert!(m.is_zero_probability());
        assert!(matches!(
            fam.log_conditional(0, &[0.0], &theta, &mut rng),
            Err(Error::ZeroMargin { .. })
        ));
    }

    #[test]
    fn parameter_points_reject_non_finite_values() {
        assert!(matches!(
            ParameterPoint::new("f", vec![0.0, f64::NAN]),
            Err(Error::NonFiniteParameter { index: 1 })
        ));
        assert!(ParameterPoint::new("f", vec![0.0, 1.0]).is_ok());
    }

    #[test]
    fn theta_binding_is_enforced() {
        let fam = StubFamily::new([0.0, 0.0]);
        let other = ParameterPoint::new("other", vec![0.0]).unwrap();
        assert!(matches!(
            fam.check_theta(&other),
            Err(Error::FamilyMismatch { .. })
        ));
        let wrong_dim = ParameterPoint::new("stub", vec![0.0, 1.0]).unwrap();
        assert!(matches!(
            fam.check_theta(&wrong_dim),
            Err(Error::DimensionMismatch { .. })
        ));
    }

    #[test]
    #[should_panic(expected = "NaN")]
    fn log_density_rejects_nan() {
        LogDensity::normalized(f64::NAN);
    }

    #[test]
    fn conditional_vector_matches_per_class_conditionals() {
        let fam = StubFamily::new([0.3f64.ln(), 0.2f64.ln()]);
        let theta = fam.point(vec![0.0]).unwrap();
        let mut rng = rng_from(0, &[]);
        let vector = fam
            .log_conditional_vector(&[0.0], &theta, &mut rng)
            .unwrap();
        assert_eq!(vector.len(), 2);
        for (c, v) in vector.iter().enumerate() {
            let scalar = fam
                .log_conditional(c, &[0.0], &theta, &mut rng)
                .unwrap()
                .value();
            assert!((v - scalar).abs() < 1e-14);
        }
        let total: f64 = vector.iter().map(|v| v.exp()).sum();
        assert!((total - 1.0).abs() < 1e-12);
    }

    #[test]
    fn missing_marginal_defaults_to_joint_when_fully_observed() {
        let fam = StubFamily::new([-0.5, -2.0]);
        let theta = fam.point(vec![0.0]).unwrap();
        let mut rng = rng_from(0, &[]);
        let x = [FeatureValue::Observed(0.0)];
        let v = fam
            .log_joint_marginal_missing(0, &x, &theta, &mut rng)
            .unwrap();
        assert_eq!(v.value(), -0.5);
        let unsupported = fam.log_joint_marginal_missing(0, &[FeatureValue::Missing], &theta, &mut rng);
        assert!(matches!(unsupported, Err(Error::Unsupported { .. })));
    }
}
