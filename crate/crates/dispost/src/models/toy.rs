//! The fixed two-class Gaussian generator behind the synthetic grid
//! experiments.
//!
//! Ten feature dimensions, equal class weights. Two informative dimensions
//! separate the classes (class 0 centered at 5, class 1 at 9, both with
//! standard deviation 2); the remaining eight are noise shared by both
//! classes (mean 9, standard deviation 2). The model has no free parameters:
//! it is the data-generating truth that fitted families are measured against.

use rand::{Rng, RngCore};
use rand_distr::{Distribution, StandardNormal};

use crate::constrain::ConstraintLayout;
use crate::data::{Dataset, FeatureValue, Observation};
use crate::dist::normal_log_pdf;
use crate::error::{Error, Result};
use crate::family::{LogDensity, ModelFamily, ParameterPoint};
use crate::logspace::StableSum;

pub const TOY_DIM: usize = 10;
pub const TOY_INFORMATIVE_DIMS: usize = 2;
pub const TOY_CLASS0_INFORMATIVE_MEAN: f64 = 5.0;
pub const TOY_CLASS1_INFORMATIVE_MEAN: f64 = 9.0;
pub const TOY_NOISE_MEAN: f64 = 9.0;
pub const TOY_SD: f64 = 2.0;

/// The fixed toy generator (no free parameters).
pub struct TrueToyModel {
    layout: ConstraintLayout,
}

impl Default for TrueToyModel {
    fn default() -> Self {
        Self::new()
    }
}

impl TrueToyModel {
    pub fn new() -> Self {
        TrueToyModel {
            layout: ConstraintLayout::new(),
        }
    }

    /// The empty parameter point of this fixed model.
    pub fn theta(&self) -> ParameterPoint {
        self.point(Vec::new()).expect("empty point is valid")
    }

    /// The class-conditional mean of a feature dimension.
    pub fn mean(class: usize, dim: usize) -> f64 {
        if dim < TOY_INFORMATIVE_DIMS {
            if class == 0 {
                TOY_CLASS0_INFORMATIVE_MEAN
            } else {
                TOY_CLASS1_INFORMATIVE_MEAN
            }
        } else {
            TOY_NOISE_MEAN
        }
    }
}

impl ModelFamily for TrueToyModel {
    fn family_id(&self) -> &str {
        "true-toy"
    }

    fn num_classes(&self) -> usize {
        2
    }

    fn feature_dim(&self) -> usize {
        TOY_DIM
    }

    fn layout(&self) -> &ConstraintLayout {
        &self.layout
    }

    fn log_prior(&self, theta: &ParameterPoint) -> Result<LogDensity> {
        self.check_theta(theta)?;
        Ok(LogDensity::normalized(0.0))
    }

    fn sample_prior(&self, _rng: &mut dyn RngCore) -> ParameterPoint {
        self.theta()
    }

    fn log_joint(
        &self,
        class: usize,
        x: &[f64],
        theta: &ParameterPoint,
        _rng: &mut dyn RngCore,
    ) -> Result<LogDensity> {
        self.check_class(class)?;
        self.check_theta(theta)?;
        self.check_features(x)?;
        let mut sum = StableSum::new();
        sum.add(0.5f64.ln());
        for (dim, &v) in x.iter().enumerate() {
            sum.add(normal_log_pdf(v, Self::mean(class, dim), TOY_SD));
        }
        Ok(LogDensity::normalized(sum.value()))
    }

    fn log_joint_marginal_missing(
        &self,
        class: usize,
        x: &[FeatureValue],
        theta: &ParameterPoint,
        _rng: &mut dyn RngCore,
    ) -> Result<LogDensity> {
        self.check_class(class)?;
        self.check_theta(theta)?;
        if x.len() != self.feature_dim() {
            return Err(Error::DimensionMismatch {
                expected: self.feature_dim(),
                got: x.len(),
            });
        }
        // Diagonal covariance: dropping missing dimensions marginalizes them.
        let mut sum = StableSum::new();
        sum.add(0.5f64.ln());
        for (dim, f) in x.iter().enumerate() {
            if let Some(v) = f.observed() {
                sum.add(normal_log_pdf(v, Self::mean(class, dim), TOY_SD));
            }
        }
        Ok(LogDensity::normalized(sum.value()))
    }

    fn simulate(&self, theta: &ParameterPoint, n: usize, rng: &mut dyn RngCore) -> Result<Dataset> {
        self.check_theta(theta)?;
        let mut ds = Dataset::new(2, TOY_DIM)?;
        for _ in 0..n {
            let class = usize::from(rng.random::<f64>() < 0.5);
            let mut x = Vec::with_capacity(TOY_DIM);
            for dim in 0..TOY_DIM {
                let z: f64 = StandardNormal.sample(rng);
                x.push(Self::mean(class, dim) + TOY_SD * z);
            }
            ds.push(Observation::observed(class, &x))?;
        }
        Ok(ds)
    }
}
