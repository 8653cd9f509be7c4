//! Posterior sampling for classification model families.
//!
//! This crate fits generative classification models three ways from the same
//! family definition:
//!
//! * **joint sampling** targets `prior(theta) * prod p(c, x | theta)`;
//! * **discriminative sampling** targets
//!   `prior(theta) * prod p(c | x, theta)`, reusing the generative family but
//!   scoring only its induced class conditionals;
//! * **regression sampling** covers families that only define conditionals
//!   in the first place.
//!
//! All three run through one random-walk Metropolis sampler over an
//! unconstrained reparameterization of the family's parameter space
//! ([`constrain`]), with per-chain seeded RNG streams, burn-in step-width
//! adaptation, and split-chain convergence diagnostics ([`sampler`]).
//!
//! Supporting modules: [`models`] ships a zoo of ready families (diagonal
//! Gaussian classifiers, softmax-linear regression, word-count document
//! models, a small fully enumerable discrete family); [`missing`] handles
//! partially observed feature vectors by exact marginalization or by
//! multiple imputation; [`eval`] computes KL divergences against a known
//! truth, predictive distributions, perplexity, and resampling error bars;
//! [`harness`] reproduces the toy-model grid study and the document
//! classification study end to end.

pub mod constrain;
pub mod data;
pub mod dist;
pub mod error;
pub mod eval;
pub mod family;
pub mod harness;
pub mod logspace;
pub mod missing;
pub mod models;
pub mod sampler;
pub mod seeding;
pub mod slice;

pub use constrain::{ConstrainedPoint, ConstraintLayout, Transform};
pub use data::{Dataset, FeatureValue, Observation};
pub use error::{Error, Result};
pub use eval::{ConfidenceInterval, KlEvaluation, KlReport, Predictive, PredictiveReport};
pub use family::{DensityKind, LogDensity, ModelFamily, ParameterPoint};
pub use harness::{
    DocExperimentConfig, DocResults, GridExperimentConfig, GridResults, KvConfig,
};
pub use sampler::{ChainConfig, PosteriorKind, PosteriorTarget, SampleSet};
pub use slice::{FixedCovariateFamily, SliceFamily};
