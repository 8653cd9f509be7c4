//! Missing-at-random masking, marginalized conditionals, and multiple
//! imputation.
//!
//! Feature components can be independently masked with per-component
//! probabilities. Families with tractable feature marginals evaluate class
//! conditionals on the observed components exactly
//! ([`log_conditional_missing`]); the discriminative posterior is then
//! unchanged whether or not the masking probabilities are modeled, because
//! the masking pattern's likelihood enters the target only as an additive
//! constant in the parameters ([`verify_lambda_ignorability`] demonstrates
//! this numerically). Conditional-only regression families get completed
//! datasets from a generative model instead ([`impute_for_regression`]).

use rand::{Rng, RngCore};

use crate::data::{Dataset, FeatureValue, Observation};
use crate::error::{Error, Result};
use crate::family::{LogDensity, ModelFamily, ParameterPoint};
use crate::logspace::{log_sum_exp, StableSum};
use crate::sampler::{PosteriorKind, PosteriorTarget, SampleSet};

/// Per-component masking probabilities.
#[derive(Debug, Clone, PartialEq)]
pub struct MissingnessSpec {
    lambdas: Vec<f64>,
}

impl MissingnessSpec {
    /// One probability per feature component, each in `[0, 1)`.
    pub fn per_component(lambdas: Vec<f64>) -> Result<Self> {
        if lambdas.is_empty() {
            return Err(Error::Config("missingness spec needs at least one component".into()));
        }
        for &l in &lambdas {
            if !(0.0..1.0).contains(&l) {
                return Err(Error::Config(format!(
                    "masking probability {l} is outside [0, 1)"
                )));
            }
        }
        Ok(MissingnessSpec { lambdas })
    }

    /// The same probability for every one of `dim` components.
    pub fn uniform(lambda: f64, dim: usize) -> Result<Self> {
        Self::per_component(vec![lambda; dim])
    }

    pub fn lambdas(&self) -> &[f64] {
        &self.lambdas
    }

    pub fn dim(&self) -> usize {
        self.lambdas.len()
    }

    fn check_dataset(&self, dataset: &Dataset) -> Result<()> {
        if dataset.feature_dim() != self.dim() {
            return Err(Error::DimensionMismatch {
                expected: self.dim(),
                got: dataset.feature_dim(),
            });
        }
        Ok(())
    }
}

/// Independently replaces each feature component with the missing marker
/// with its component's probability. Labels are never masked.
///
/// The input must be fully observed; double masking is a usage error.
pub fn mask_at_random(
    dataset: &Dataset,
    spec: &MissingnessSpec,
    rng: &mut dyn RngCore,
) -> Result<Dataset> {
    spec.check_dataset(dataset)?;
    if !dataset.is_fully_observed() {
        return Err(Error::Config(
            "masking expects a fully observed dataset".into(),
        ));
    }
    let mut masked = Dataset::new(dataset.num_classes(), dataset.feature_dim())?;
    for obs in dataset.iter() {
        let features = obs
            .features
            .iter()
            .zip(spec.lambdas())
            .map(|(&f, &lambda)| {
                let u: f64 = rng.random();
                if u < lambda {
                    FeatureValue::Missing
                } else {
                    f
                }
            })
            .collect();
        masked.push(Observation {
            class: obs.class,
            features,
        })?;
    }
    Ok(masked)
}

/// `ln p(c | x_obs, θ)`: the class conditional given only the observed
/// components, with missing ones marginalized out of both the numerator and
/// the class sum.
///
/// Equals the plain conditional exactly when nothing is missing.
pub fn log_conditional_missing(
    family: &dyn ModelFamily,
    class: usize,
    x: &[FeatureValue],
    theta: &ParameterPoint,
    rng: &mut dyn RngCore,
) -> Result<LogDensity> {
    if x.iter().all(|f| !f.is_missing()) {
        let dense: Vec<f64> = x.iter().map(|f| f.observed().unwrap()).collect();
        return family.log_conditional(class, &dense, theta, rng);
    }
    let mut joints = Vec::with_capacity(family.num_classes());
    for c in 0..family.num_classes() {
        joints.push(
            family
                .log_joint_marginal_missing(c, x, theta, rng)?
                .value(),
        );
    }
    let total = log_sum_exp(&joints);
    if total == f64::NEG_INFINITY {
        return Err(Error::ZeroMargin { observation: None });
    }
    Ok(LogDensity::normalized((joints[class] - total).min(0.0)))
}

/// `ln p(c | x_obs, θ)` for every class at once, missing components
/// marginalized out; the vector counterpart of [`log_conditional_missing`].
pub fn log_conditional_missing_vector(
    family: &dyn ModelFamily,
    x: &[FeatureValue],
    theta: &ParameterPoint,
    rng: &mut dyn RngCore,
) -> Result<Vec<f64>> {
    if x.iter().all(|f| !f.is_missing()) {
        let dense: Vec<f64> = x.iter().map(|f| f.observed().unwrap()).collect();
        return family.log_conditional_vector(&dense, theta, rng);
    }
    let mut joints = Vec::with_capacity(family.num_classes());
    for c in 0..family.num_classes() {
        joints.push(
            family
                .log_joint_marginal_missing(c, x, theta, rng)?
                .value(),
        );
    }
    let total = log_sum_exp(&joints);
    if total == f64::NEG_INFINITY {
        return Err(Error::ZeroMargin { observation: None });
    }
    Ok(joints.iter().map(|j| (j - total).min(0.0)).collect())
}

/// Log likelihood of the observed/missing pattern alone:
/// `Σᵢ Σₖ [ln λₖ if component k is missing else ln(1 − λₖ)]`.
///
/// This term involves only the masking probabilities, never the model
/// parameters.
pub fn missingness_pattern_log_likelihood(
    dataset: &Dataset,
    spec: &MissingnessSpec,
) -> Result<f64> {
    spec.check_dataset(dataset)?;
    let mut sum = StableSum::new();
    for obs in dataset.iter() {
        for (f, &lambda) in obs.features.iter().zip(spec.lambdas()) {
            if f.is_missing() {
                sum.add(lambda.ln());
            } else {
                sum.add((1.0 - lambda).ln());
            }
        }
    }
    Ok(sum.value())
}

/// The discriminative target extended with the masking mechanism: the plain
/// discriminative log target plus the pattern likelihood under `spec`.
///
/// Because the pattern term is constant in `theta`, sampling this target is
/// equivalent to sampling the λ-free discriminative target — the numerical
/// statement of ignorability.
pub fn augmented_discriminative_log_density(
    family: &dyn ModelFamily,
    dataset: &Dataset,
    spec: &MissingnessSpec,
    theta: &ParameterPoint,
    rng: &mut dyn RngCore,
) -> Result<f64> {
    let target = PosteriorTarget::new(family, dataset, PosteriorKind::Discriminative)?;
    let base = target.target_log_density(theta, rng)?;
    let pattern = missingness_pattern_log_likelihood(dataset, spec)?;
    Ok(base + pattern)
}

/// Evidence that two masking-probability choices shift the augmented target
/// by a parameter-independent constant.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct IgnorabilityReport {
    /// Mean over the grid of `target(θ; λ_a) − target(θ; λ_b)`.
    pub offset: f64,
    /// Largest absolute deviation of that difference from its mean — zero
    /// (to rounding) exactly when the masking probabilities are ignorable.
    pub max_deviation: f64,
    pub grid_len: usize,
}

/// Evaluates the augmented discriminative target under both specs across a
/// parameter grid and reports how far their difference strays from a
/// constant.
pub fn verify_lambda_ignorability(
    family: &dyn ModelFamily,
    dataset: &Dataset,
    grid: &[ParameterPoint],
    spec_a: &MissingnessSpec,
    spec_b: &MissingnessSpec,
    rng: &mut dyn RngCore,
) -> Result<IgnorabilityReport> {
    if grid.is_empty() {
        return Err(Error::Config("ignorability check needs a non-empty grid".into()));
    }
    let mut differences = Vec::with_capacity(grid.len());
    for theta in grid {
        let a = augmented_discriminative_log_density(family, dataset, spec_a, theta, rng)?;
        let b = augmented_discriminative_log_density(family, dataset, spec_b, theta, rng)?;
        differences.push(a - b);
    }
    let offset = differences.iter().sum::<f64>() / differences.len() as f64;
    let max_deviation = differences
        .iter()
        .map(|d| (d - offset).abs())
        .fold(0.0, f64::max);
    Ok(IgnorabilityReport {
        offset,
        max_deviation,
        grid_len: grid.len(),
    })
}

/// Where imputation draws its generative parameters from.
#[derive(Debug, Clone, Copy)]
pub enum ThetaSource<'a> {
    /// A single fixed parameter point.
    Point(&'a ParameterPoint),
    /// Posterior draws; each imputation picks one draw at random.
    Draws(&'a SampleSet),
}

/// Completed datasets for conditional-only fits, one per downstream chain.
#[derive(Debug, Clone)]
pub struct ImputationSet {
    datasets: Vec<Dataset>,
    generator_id: String,
    theta_source: String,
}

impl ImputationSet {
    pub fn len(&self) -> usize {
        self.datasets.len()
    }

    pub fn is_empty(&self) -> bool {
        self.datasets.is_empty()
    }

    pub fn datasets(&self) -> &[Dataset] {
        &self.datasets
    }

    pub fn dataset(&self, index: usize) -> &Dataset {
        &self.datasets[index]
    }

    /// Family that generated the filled-in values.
    pub fn generator_id(&self) -> &str {
        &self.generator_id
    }

    /// Human-readable description of where the generator's parameters came
    /// from.
    pub fn theta_source(&self) -> &str {
        &self.theta_source
    }
}

/// Draws `n_imputations` completed datasets: each picks a parameter from
/// `theta_source`, then fills every missing component from the generator's
/// conditional distribution given the class label and the observed
/// components. Observed entries are copied through untouched.
pub fn impute_for_regression(
    dataset: &Dataset,
    generator: &dyn ModelFamily,
    theta_source: ThetaSource<'_>,
    n_imputations: usize,
    rng: &mut dyn RngCore,
) -> Result<ImputationSet> {
    if n_imputations == 0 {
        return Err(Error::Config("n_imputations must be at least 1".into()));
    }
    if dataset.num_classes() != generator.num_classes()
        || dataset.feature_dim() != generator.feature_dim()
    {
        return Err(Error::Config(format!(
            "imputation generator '{}' does not match the dataset shape",
            generator.family_id()
        )));
    }
    if let ThetaSource::Draws(set) = theta_source {
        if set.is_empty() {
            return Err(Error::Config("imputation needs a non-empty draw set".into()));
        }
    }
    let source_description = match theta_source {
        ThetaSource::Point(_) => "fixed point".to_string(),
        ThetaSource::Draws(set) => format!("{} posterior draws", set.len()),
    };
    let mut datasets = Vec::with_capacity(n_imputations);
    for _ in 0..n_imputations {
        let theta = match theta_source {
            ThetaSource::Point(p) => p.clone(),
            ThetaSource::Draws(set) => {
                let index = rng.random_range(0..set.len());
                set.pooled()
                    .nth(index)
                    .expect("index drawn below set length")
                    .clone()
            }
        };
        let mut completed = Dataset::new(dataset.num_classes(), dataset.feature_dim())?;
        for obs in dataset.iter() {
            if obs.is_fully_observed() {
                completed.push(obs.clone())?;
            } else {
                let filled =
                    generator.simulate_missing_components(obs.class, &obs.features, &theta, rng)?;
                completed.push(Observation::observed(obs.class, &filled))?;
            }
        }
        datasets.push(completed);
    }
    Ok(ImputationSet {
        datasets,
        generator_id: generator.family_id().to_string(),
        theta_source: source_description,
    })
}
