//! A fully enumerable discrete family over `(class, value)` cells.
//!
//! The joint table lives on the `(C*V)`-simplex, parameterized by the pinned
//! softmax. Because every probability can be enumerated, the family anchors
//! exact KL computations, grid-normalized posterior oracles, and sampler
//! accuracy checks.

use rand::RngCore;

use crate::constrain::ConstraintLayout;
use crate::data::{Dataset, Observation};
use crate::dist::{dirichlet_log_pdf, sample_categorical, sample_dirichlet};
use crate::error::{Error, Result};
use crate::family::{LogDensity, ModelFamily, ParameterPoint};

/// Discrete joint family: `C` classes, covariate values `0..V`, joint table
/// on the `(C*V)`-simplex with a symmetric Dirichlet prior.
pub struct DiscreteFamily {
    num_classes: usize,
    num_values: usize,
    prior_alpha: f64,
    id: String,
    layout: ConstraintLayout,
}

impl DiscreteFamily {
    pub fn new(num_classes: usize, num_values: usize, prior_alpha: f64) -> Result<Self> {
        if num_classes == 0 || num_values == 0 {
            return Err(Error::Config(
                "discrete family needs at least one class and one value".into(),
            ));
        }
        if num_classes * num_values < 2 {
            return Err(Error::Config(
                "discrete family needs at least two cells".into(),
            ));
        }
        if prior_alpha <= 0.0 {
            return Err(Error::Config("Dirichlet concentration must be positive".into()));
        }
        let id = format!("discrete[c={num_classes},v={num_values}]");
        let layout = ConstraintLayout::new().simplex("table", num_classes * num_values);
        Ok(DiscreteFamily {
            num_classes,
            num_values,
            prior_alpha,
            id,
            layout,
        })
    }

    pub fn num_values(&self) -> usize {
        self.num_values
    }

    /// The joint table `p(c, v)` in row-major class-by-value order.
    pub fn table(&self, theta: &ParameterPoint) -> Result<Vec<f64>> {
        self.check_theta(theta)?;
        Ok(self.layout.to_constrained(theta.values()).named("table").to_vec())
    }

    /// All covariate values as single-component feature vectors, in order.
    pub fn support(&self) -> Vec<Vec<f64>> {
        (0..self.num_values).map(|v| vec![v as f64]).collect()
    }

    /// Builds the unconstrained point for a given joint table (entries
    /// positive; normalization is up to the caller).
    pub fn point_from_table(&self, table: &[f64]) -> Result<ParameterPoint> {
        let u = self.layout.from_constrained(&[table.to_vec()])?;
        self.point(u)
    }

    fn value_index(&self, x: &[f64]) -> Result<usize> {
        self.check_features(x)?;
        let raw = x[0];
        if raw.fract() != 0.0 || raw < 0.0 || raw >= self.num_values as f64 {
            return Err(Error::Config(format!(
                "covariate value {raw} outside discrete support 0..{}",
                self.num_values
            )));
        }
        Ok(raw as usize)
    }
}

impl ModelFamily for DiscreteFamily {
    fn family_id(&self) -> &str {
        &self.id
    }

    fn num_classes(&self) -> usize {
        self.num_classes
    }

    fn feature_dim(&self) -> usize {
        1
    }

    fn layout(&self) -> &ConstraintLayout {
        &self.layout
    }

    fn log_prior(&self, theta: &ParameterPoint) -> Result<LogDensity> {
        self.check_theta(theta)?;
        let table = self.layout.to_constrained(theta.values());
        let p = table.named("table");
        let alphas = vec![self.prior_alpha; p.len()];
        let value = dirichlet_log_pdf(&alphas, p) + self.layout.log_jacobian(theta.values());
        Ok(LogDensity::normalized(value))
    }

    fn sample_prior(&self, rng: &mut dyn RngCore) -> ParameterPoint {
        let alphas = vec![self.prior_alpha; self.num_classes * self.num_values];
        let p = sample_dirichlet(rng, &alphas);
        self.point_from_table(&p)
            .expect("Dirichlet draws are strictly positive almost surely")
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
        let v = self.value_index(x)?;
        let table = self.layout.to_constrained(theta.values());
        let p = table.named("table");
        Ok(LogDensity::normalized(p[class * self.num_values + v].ln()))
    }

    fn simulate(&self, theta: &ParameterPoint, n: usize, rng: &mut dyn RngCore) -> Result<Dataset> {
        let table = self.table(theta)?;
        let mut ds = Dataset::new(self.num_classes, 1)?;
        for _ in 0..n {
            let cell = sample_categorical(rng, &table);
            let class = cell / self.num_values;
            let value = cell % self.num_values;
            ds.push(Observation::observed(class, &[value as f64]))?;
        }
        Ok(ds)
    }
}
