//! Family adapters used for grid oracles and reduction checks.
//!
//! [`SliceFamily`] restricts a base family to a low-dimensional coordinate
//! slice so its posterior can be normalized exactly on a grid.
//! [`FixedCovariateFamily`] turns `p(c | x0, theta)` at one fixed covariate
//! into a class-only joint model so the discriminative target can be compared
//! against a standard posterior.

use rand::RngCore;

use crate::constrain::ConstraintLayout;
use crate::data::{Dataset, FeatureValue};
use crate::error::{Error, Result};
use crate::family::{LogDensity, ModelFamily, ParameterPoint};

/// A base family restricted to varying a chosen subset of unconstrained
/// coordinates, all others frozen at template values.
///
/// The slice's parameter space is the free coordinates in template order;
/// every evaluation splices them into the template and delegates. The slice
/// prior is the base prior restricted to the slice (unnormalized on the
/// slice, which is all samplers and grid normalizers need).
pub struct SliceFamily<F: ModelFamily> {
    base: F,
    template: Vec<f64>,
    free: Vec<usize>,
    id: String,
    layout: ConstraintLayout,
}

impl<F: ModelFamily> SliceFamily<F> {
    pub fn new(base: F, template: Vec<f64>, free: Vec<usize>) -> Result<Self> {
        if template.len() != base.unconstrained_dim() {
            return Err(Error::DimensionMismatch {
                expected: base.unconstrained_dim(),
                got: template.len(),
            });
        }
        if free.is_empty() {
            return Err(Error::Config("slice needs at least one free coordinate".into()));
        }
        let mut seen = vec![false; template.len()];
        for &i in &free {
            if i >= template.len() {
                return Err(Error::Config(format!("free coordinate {i} out of range")));
            }
            if seen[i] {
                return Err(Error::Config(format!("free coordinate {i} repeated")));
            }
            seen[i] = true;
        }
        let id = format!("{}|slice{}", base.family_id(), free.len());
        let layout = ConstraintLayout::new().identity("slice", free.len());
        Ok(SliceFamily {
            base,
            template,
            free,
            id,
            layout,
        })
    }

    pub fn base(&self) -> &F {
        &self.base
    }

    /// The full-space point obtained by splicing slice coordinates into the
    /// template.
    pub fn embed(&self, theta: &ParameterPoint) -> Result<ParameterPoint> {
        self.check_theta(theta)?;
        let mut values = self.template.clone();
        for (slot, &coord) in self.free.iter().zip(theta.values()) {
            values[*slot] = coord;
        }
        self.base.point(values)
    }
}

impl<F: ModelFamily> ModelFamily for SliceFamily<F> {
    fn family_id(&self) -> &str {
        &self.id
    }

    fn num_classes(&self) -> usize {
        self.base.num_classes()
    }

    fn feature_dim(&self) -> usize {
        self.base.feature_dim()
    }

    fn layout(&self) -> &ConstraintLayout {
        &self.layout
    }

    fn log_prior(&self, theta: &ParameterPoint) -> Result<LogDensity> {
        let full = self.embed(theta)?;
        // Restriction of the base prior: unnormalized on the slice.
        Ok(LogDensity::unnormalized(self.base.log_prior(&full)?.value()))
    }

    /// Coordinate projection of a base prior draw. This is an initialization
    /// heuristic, not the exact conditional prior on the slice; chain
    /// correctness does not depend on the initialization law.
    fn sample_prior(&self, rng: &mut dyn RngCore) -> ParameterPoint {
        let full = self.base.sample_prior(rng);
        let values = self.free.iter().map(|&i| full.values()[i]).collect();
        self.point(values).expect("projected prior draw is finite")
    }

    fn log_joint(
        &self,
        class: usize,
        x: &[f64],
        theta: &ParameterPoint,
        rng: &mut dyn RngCore,
    ) -> Result<LogDensity> {
        let full = self.embed(theta)?;
        self.base.log_joint(class, x, &full, rng)
    }

    fn log_margin(
        &self,
        x: &[f64],
        theta: &ParameterPoint,
        rng: &mut dyn RngCore,
    ) -> Result<LogDensity> {
        let full = self.embed(theta)?;
        self.base.log_margin(x, &full, rng)
    }

    fn log_conditional(
        &self,
        class: usize,
        x: &[f64],
        theta: &ParameterPoint,
        rng: &mut dyn RngCore,
    ) -> Result<LogDensity> {
        let full = self.embed(theta)?;
        self.base.log_conditional(class, x, &full, rng)
    }

    fn log_joint_marginal_missing(
        &self,
        class: usize,
        x: &[FeatureValue],
        theta: &ParameterPoint,
        rng: &mut dyn RngCore,
    ) -> Result<LogDensity> {
        let full = self.embed(theta)?;
        self.base.log_joint_marginal_missing(class, x, &full, rng)
    }

    fn simulate(&self, theta: &ParameterPoint, n: usize, rng: &mut dyn RngCore) -> Result<Dataset> {
        let full = self.embed(theta)?;
        self.base.simulate(&full, n, rng)
    }
}

/// A class-only joint model induced by fixing the covariate of a base family:
/// `p(c | theta) := base.log_conditional(c, x0, theta)`.
///
/// Shares the base family's parameter space and identifier, so parameter
/// points move freely between the two views. Observations carry one ignored
/// dummy feature column.
pub struct FixedCovariateFamily<F: ModelFamily> {
    base: F,
    covariate: Vec<f64>,
}

impl<F: ModelFamily> FixedCovariateFamily<F> {
    pub fn new(base: F, covariate: Vec<f64>) -> Result<Self> {
        if covariate.len() != base.feature_dim() {
            return Err(Error::DimensionMismatch {
                expected: base.feature_dim(),
                got: covariate.len(),
            });
        }
        Ok(FixedCovariateFamily { base, covariate })
    }

    /// A dataset of the given class labels with the dummy feature column.
    pub fn class_only_dataset(&self, labels: &[usize]) -> Result<Dataset> {
        let mut ds = Dataset::new(self.base.num_classes(), 1)?;
        for &label in labels {
            ds.push(crate::data::Observation::observed(label, &[0.0]))?;
        }
        Ok(ds)
    }
}

impl<F: ModelFamily> ModelFamily for FixedCovariateFamily<F> {
    fn family_id(&self) -> &str {
        self.base.family_id()
    }

    fn num_classes(&self) -> usize {
        self.base.num_classes()
    }

    fn feature_dim(&self) -> usize {
        1
    }

    fn layout(&self) -> &ConstraintLayout {
        self.base.layout()
    }

    fn log_prior(&self, theta: &ParameterPoint) -> Result<LogDensity> {
        self.base.log_prior(theta)
    }

    fn sample_prior(&self, rng: &mut dyn RngCore) -> ParameterPoint {
        self.base.sample_prior(rng)
    }

    fn log_joint(
        &self,
        class: usize,
        _x: &[f64],
        theta: &ParameterPoint,
        rng: &mut dyn RngCore,
    ) -> Result<LogDensity> {
        self.base.log_conditional(class, &self.covariate, theta, rng)
    }
}
