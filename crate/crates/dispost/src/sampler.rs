//! Random-walk Metropolis sampling of joint, discriminative, and regression
//! posteriors.
//!
//! A [`PosteriorTarget`] pairs a model family with a dataset and one of three
//! target kinds:
//!
//! * [`PosteriorKind::Joint`] — `ln p(θ) + Σ ln p(cᵢ, xᵢ | θ)`;
//! * [`PosteriorKind::Discriminative`] — `ln p(θ) + Σ ln p(cᵢ | xᵢ, θ)`,
//!   scoring only the class conditionals the generative family induces;
//! * [`PosteriorKind::Regression`] — the same conditional product for
//!   families that never define a joint density over features.
//!
//! Joint and discriminative targets marginalize missing feature components
//! exactly when the family supports it; the regression target refuses
//! missing data and expects imputation upstream.
//!
//! [`run_chains`] drives several independent chains in parallel, each with
//! its own seeded RNG stream and prior-draw initialization, multiplicatively
//! adapting the proposal width during burn-in only (so kept draws come from
//! a fixed kernel), and pools them into a [`SampleSet`] with acceptance
//! statistics and a split-chain convergence diagnostic per coordinate.

use std::fmt;
use std::io::Write as IoWrite;
use std::path::{Path, PathBuf};
use std::str::FromStr;

use rand::{Rng, RngCore};
use rand_distr::{Distribution, StandardNormal};
use rayon::prelude::*;

use crate::data::Dataset;
use crate::error::{Error, Result};
use crate::family::{ModelFamily, ParameterPoint};
use crate::logspace::StableSum;
use crate::missing::log_conditional_missing;
use crate::seeding::{rng_from, tags};

/// Maximum prior draws tried per chain before initialization fails.
pub const INIT_RETRIES: usize = 100;
/// Hill-climb sweeps used to pull a regression chain's starting point into
/// the posterior mode's basin (see [`SampleTarget::initial_point`]).
const INIT_CLIMB_SWEEPS: usize = 80;
/// Per-coordinate Gaussian jitter applied to climbed regression starts so
/// chains stay overdispersed for the split-chain diagnostic.
const INIT_JITTER: f64 = 0.1;
/// Burn-in steps between proposal-width adjustments.
pub const ADAPT_WINDOW: usize = 100;
/// Split-chain diagnostic threshold above which a coordinate is flagged.
pub const RHAT_FLAG_THRESHOLD: f64 = 1.1;

/// Which unnormalized posterior a [`PosteriorTarget`] evaluates.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum PosteriorKind {
    /// Prior times the product of joint densities `p(c, x | θ)`.
    Joint,
    /// Prior times the product of induced conditionals `p(c | x, θ)`.
    Discriminative,
    /// Prior times conditionals for families with no feature margin;
    /// requires fully observed features.
    Regression,
}

impl fmt::Display for PosteriorKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let name = match self {
            PosteriorKind::Joint => "joint",
            PosteriorKind::Discriminative => "discriminative",
            PosteriorKind::Regression => "regression",
        };
        f.write_str(name)
    }
}

impl FromStr for PosteriorKind {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.to_ascii_lowercase().as_str() {
            "joint" | "j" => Ok(PosteriorKind::Joint),
            "discriminative" | "disc" | "d" => Ok(PosteriorKind::Discriminative),
            "regression" | "reg" | "r" => Ok(PosteriorKind::Regression),
            other => Err(Error::Config(format!(
                "unknown posterior kind '{other}' (expected joint, disc, or reg)"
            ))),
        }
    }
}

/// Anything the Metropolis machinery can sample from: an unnormalized log
/// density over a fixed-dimensional real vector plus a way to propose
/// starting points.
///
/// `log_density` may return `-inf` for zero-probability regions but never
/// `NaN`; it takes an RNG because some densities (Monte Carlo-integrated
/// document models) are themselves estimated.
pub trait SampleTarget: Sync {
    /// Dimension of the sampled vector.
    fn dim(&self) -> usize;

    /// Identifier recorded on draws and in sample metadata.
    fn id(&self) -> &str;

    /// Unnormalized log density at `values`.
    fn log_density(&self, values: &[f64], rng: &mut dyn RngCore) -> Result<f64>;

    /// A candidate starting point. Posterior targets return a prior draw,
    /// except regression targets, which climb the draw toward the posterior
    /// mode and jitter the result — their box priors are so much wider than
    /// the likelihood's support that raw draws are unreachable starts.
    fn initial_point(&self, rng: &mut dyn RngCore) -> Vec<f64>;
}

/// A model family, a dataset, and a posterior kind, evaluated as an
/// unnormalized log density over the family's unconstrained parameters.
///
/// An observation the model says is impossible (zero feature margin, so the
/// conditional is 0/0) makes the whole target zero at that parameter rather
/// than erroring: the sampler simply never moves there.
pub struct PosteriorTarget<'a> {
    family: &'a dyn ModelFamily,
    dataset: &'a Dataset,
    kind: PosteriorKind,
}

impl<'a> PosteriorTarget<'a> {
    pub fn new(
        family: &'a dyn ModelFamily,
        dataset: &'a Dataset,
        kind: PosteriorKind,
    ) -> Result<Self> {
        if dataset.num_classes() != family.num_classes() {
            return Err(Error::Config(format!(
                "dataset has {} classes but family '{}' has {}",
                dataset.num_classes(),
                family.family_id(),
                family.num_classes()
            )));
        }
        if dataset.feature_dim() != family.feature_dim() {
            return Err(Error::Config(format!(
                "dataset features have dimension {} but family '{}' expects {}",
                dataset.feature_dim(),
                family.family_id(),
                family.feature_dim()
            )));
        }
        Ok(PosteriorTarget {
            family,
            dataset,
            kind,
        })
    }

    pub fn family(&self) -> &dyn ModelFamily {
        self.family
    }

    pub fn dataset(&self) -> &Dataset {
        self.dataset
    }

    pub fn kind(&self) -> PosteriorKind {
        self.kind
    }

    /// A raw prior draw in unconstrained coordinates, with none of the
    /// mode-seeking that [`SampleTarget::initial_point`] layers on top for
    /// regression targets.
    fn raw_prior_point(&self, rng: &mut dyn RngCore) -> Vec<f64> {
        self.family.sample_prior(rng).values().to_vec()
    }

    /// The full unnormalized log target: log prior plus the data term.
    pub fn target_log_density(
        &self,
        theta: &ParameterPoint,
        rng: &mut dyn RngCore,
    ) -> Result<f64> {
        let prior = self.family.log_prior(theta)?.value();
        if prior == f64::NEG_INFINITY {
            return Ok(f64::NEG_INFINITY);
        }
        let data = self.data_log_likelihood(theta, rng)?;
        if data == f64::NEG_INFINITY {
            return Ok(f64::NEG_INFINITY);
        }
        Ok(prior + data)
    }

    /// The data term alone (no prior): `Σ ln p(cᵢ, xᵢ | θ)` under the joint
    /// kind, `Σ ln p(cᵢ | xᵢ, θ)` otherwise. This is the objective the
    /// conditional maximum-likelihood estimator climbs.
    pub fn data_log_likelihood(
        &self,
        theta: &ParameterPoint,
        rng: &mut dyn RngCore,
    ) -> Result<f64> {
        let mut sum = StableSum::new();
        for (index, obs) in self.dataset.iter().enumerate() {
            let term = match self.observation_term(index, obs.class, obs, theta, rng) {
                Ok(v) => v,
                // Zero feature margin: the model assigns this observation
                // probability zero, so the product of conditionals is zero.
                Err(Error::ZeroMargin { .. }) => return Ok(f64::NEG_INFINITY),
                Err(e) => return Err(e),
            };
            if term == f64::NEG_INFINITY {
                return Ok(f64::NEG_INFINITY);
            }
            sum.add(term);
        }
        Ok(sum.value())
    }

    fn observation_term(
        &self,
        index: usize,
        class: usize,
        obs: &crate::data::Observation,
        theta: &ParameterPoint,
        rng: &mut dyn RngCore,
    ) -> Result<f64> {
        let fully_observed = obs.is_fully_observed();
        match self.kind {
            PosteriorKind::Joint => {
                if fully_observed {
                    let x = obs.dense_features()?;
                    Ok(self.family.log_joint(class, &x, theta, rng)?.value())
                } else {
                    Ok(self
                        .family
                        .log_joint_marginal_missing(class, &obs.features, theta, rng)?
                        .value())
                }
            }
            PosteriorKind::Discriminative => {
                let value = if fully_observed {
                    let x = obs.dense_features()?;
                    self.family.log_conditional(class, &x, theta, rng)
                } else {
                    log_conditional_missing(self.family, class, &obs.features, theta, rng)
                };
                match value {
                    Ok(d) => Ok(d.value()),
                    Err(Error::ZeroMargin { .. }) => Err(Error::ZeroMargin {
                        observation: Some(index),
                    }),
                    Err(e) => Err(e),
                }
            }
            PosteriorKind::Regression => {
                if !fully_observed {
                    return Err(Error::UnexpectedMissing {
                        context: format!(
                            "observation {index} under the regression target; \
                             impute missing features before fitting"
                        ),
                    });
                }
                let x = obs.dense_features()?;
                match self.family.log_conditional(class, &x, theta, rng) {
                    Ok(d) => Ok(d.value()),
                    Err(Error::ZeroMargin { .. }) => Err(Error::ZeroMargin {
                        observation: Some(index),
                    }),
                    Err(e) => Err(e),
                }
            }
        }
    }
}

impl SampleTarget for PosteriorTarget<'_> {
    fn dim(&self) -> usize {
        self.family.unconstrained_dim()
    }

    fn id(&self) -> &str {
        self.family.family_id()
    }

    fn log_density(&self, values: &[f64], rng: &mut dyn RngCore) -> Result<f64> {
        let theta = self.family.point(values.to_vec())?;
        self.target_log_density(&theta, rng)
    }

    fn initial_point(&self, rng: &mut dyn RngCore) -> Vec<f64> {
        let draw = self.raw_prior_point(rng);
        if self.kind != PosteriorKind::Regression {
            return draw;
        }
        // Regression families spread a vague prior over a box that dwarfs
        // the region where their conditional likelihood concentrates; a
        // random-walk chain started at a raw draw cannot cross that gap in
        // any practical burn-in, so climb the draw toward the posterior
        // mode and jitter the result to keep chains overdispersed. The
        // climb maximizes the full posterior (not the bare likelihood), so
        // the prior's support fences it in even on separable datasets.
        let mut objective =
            |values: &[f64], rng: &mut dyn RngCore| -> Result<f64> { self.log_density(values, rng) };
        let start = match objective(&draw, rng) {
            Ok(score) if score > f64::NEG_INFINITY => score,
            _ => return draw,
        };
        match climb_values(&mut objective, draw.clone(), start, INIT_CLIMB_SWEEPS, rng) {
            Ok((mut values, _)) => {
                for v in &mut values {
                    let z: f64 = StandardNormal.sample(rng);
                    *v += INIT_JITTER * z;
                }
                values
            }
            Err(_) => draw,
        }
    }
}

/// Chain position together with its cached log density, so each Metropolis
/// step evaluates the target once.
#[derive(Debug, Clone, PartialEq)]
pub struct ChainState {
    values: Vec<f64>,
    log_density: f64,
}

impl ChainState {
    /// Evaluates the target at `values` and caches the result.
    pub fn at<T: SampleTarget + ?Sized>(
        target: &T,
        values: Vec<f64>,
        rng: &mut dyn RngCore,
    ) -> Result<Self> {
        let log_density = target.log_density(&values, rng)?;
        Ok(ChainState { values, log_density })
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn log_density(&self) -> f64 {
        self.log_density
    }
}

/// One Gaussian random-walk Metropolis step.
///
/// Proposes `θ' = θ + width · N(0, I)`, accepts with probability
/// `min(1, exp(L(θ') − L(θ)))` (the proposal is symmetric, so no correction
/// term), and returns the new state plus whether the proposal was taken.
/// A rejected step returns the input state unchanged.
///
/// Errors when the current state already has zero density: chains must be
/// initialized at points the target does not exclude.
pub fn mh_step<T: SampleTarget + ?Sized>(
    target: &T,
    state: &ChainState,
    width: f64,
    rng: &mut dyn RngCore,
) -> Result<(ChainState, bool)> {
    if state.log_density == f64::NEG_INFINITY {
        return Err(Error::Config(
            "Metropolis step from a zero-density state; initialize chains at \
             points with finite target density"
            .into(),
        ));
    }
    debug_assert!(width > 0.0, "proposal width must be positive");
    let mut proposal = Vec::with_capacity(state.values.len());
    for &v in &state.values {
        let z: f64 = StandardNormal.sample(rng);
        proposal.push(v + width * z);
    }
    let proposed_lp = target.log_density(&proposal, rng)?;
    debug_assert!(!proposed_lp.is_nan(), "target returned NaN");
    // Always consume one uniform draw so the RNG stream advances identically
    // on accept and reject.
    let u: f64 = rng.random();
    let accept = u.ln() < proposed_lp - state.log_density;
    if accept {
        Ok((
            ChainState {
                values: proposal,
                log_density: proposed_lp,
            },
            true,
        ))
    } else {
        Ok((state.clone(), false))
    }
}

/// Chain-run settings.
///
/// `kernel_width` is the initial shared per-coordinate proposal standard
/// deviation; with `adapt` on it is multiplied by 1.1 whenever a completed
/// 100-step burn-in window accepts more than 40% of proposals and by 0.9
/// below 20%, then frozen for the sampling phase.
#[derive(Debug, Clone, PartialEq)]
pub struct ChainConfig {
    pub n_chains: usize,
    pub burn_in: usize,
    /// Keep one state every `thinning` post-burn-in steps.
    pub thinning: usize,
    /// Kept draws per chain.
    pub n_keep: usize,
    pub kernel_width: f64,
    pub adapt: bool,
    pub seed: u64,
}

impl ChainConfig {
    /// Defaults used for joint and discriminative fits: 3 chains, 500
    /// burn-in steps, every 5th of 4500 post-burn-in states kept (900 draws
    /// per chain).
    pub fn standard(seed: u64) -> Self {
        ChainConfig {
            n_chains: 3,
            burn_in: 500,
            thinning: 5,
            n_keep: 900,
            kernel_width: 1.0,
            adapt: true,
            seed,
        }
    }

    /// Regression-fit defaults: as [`ChainConfig::standard`] but with the
    /// longer 5500-step burn-in the conditional-only fits need.
    pub fn regression(seed: u64) -> Self {
        ChainConfig {
            burn_in: 5500,
            ..Self::standard(seed)
        }
    }

    /// Document-model defaults: 100 burn-in steps, every 10th sample kept,
    /// 100 kept draws per chain.
    pub fn document(seed: u64) -> Self {
        ChainConfig {
            burn_in: 100,
            thinning: 10,
            n_keep: 100,
            ..Self::standard(seed)
        }
    }

    /// Sets the initial proposal width to the `2.4 / sqrt(dim)` random-walk
    /// heuristic so burn-in adaptation starts near a workable scale.
    pub fn scaled_for_dim(mut self, dim: usize) -> Self {
        self.kernel_width = 2.4 / (dim.max(1) as f64).sqrt();
        self
    }

    pub fn with_chains(mut self, n_chains: usize) -> Self {
        self.n_chains = n_chains;
        self
    }

    pub fn with_keep(mut self, n_keep: usize) -> Self {
        self.n_keep = n_keep;
        self
    }

    /// Rejects empty chain counts, zero thinning or keep counts, and
    /// non-positive proposal widths.
    pub fn validate(&self) -> Result<()> {
        if self.n_chains == 0 {
            return Err(Error::Config("n_chains must be at least 1".into()));
        }
        if self.thinning == 0 {
            return Err(Error::Config("thinning must be at least 1".into()));
        }
        if self.n_keep == 0 {
            return Err(Error::Config("n_keep must be at least 1".into()));
        }
        if !(self.kernel_width > 0.0) || !self.kernel_width.is_finite() {
            return Err(Error::Config("kernel_width must be positive and finite".into()));
        }
        Ok(())
    }
}

struct ChainOutput {
    draws: Vec<Vec<f64>>,
    acceptance_rate: f64,
    final_width: f64,
}

fn run_chain<T: SampleTarget + ?Sized>(
    target: &T,
    config: &ChainConfig,
    chain_index: usize,
) -> Result<ChainOutput> {
    let mut rng = rng_from(config.seed, &[tags::CHAIN, chain_index as u64]);
    let mut state = None;
    for _ in 0..INIT_RETRIES {
        let candidate = target.initial_point(&mut rng);
        let lp = target.log_density(&candidate, &mut rng)?;
        if lp > f64::NEG_INFINITY {
            state = Some(ChainState {
                values: candidate,
                log_density: lp,
            });
            break;
        }
    }
    let mut state = state.ok_or(Error::InitializationFailed {
        attempts: INIT_RETRIES,
    })?;

    let mut width = config.kernel_width;
    let mut window_accepts = 0usize;
    for step in 0..config.burn_in {
        let (next, accepted) = mh_step(target, &state, width, &mut rng)?;
        state = next;
        if accepted {
            window_accepts += 1;
        }
        if config.adapt && (step + 1) % ADAPT_WINDOW == 0 {
            let rate = window_accepts as f64 / ADAPT_WINDOW as f64;
            if rate > 0.4 {
                width *= 1.1;
            } else if rate < 0.2 {
                width *= 0.9;
            }
            window_accepts = 0;
        }
    }

    let mut draws = Vec::with_capacity(config.n_keep);
    let mut accepts = 0usize;
    for _ in 0..config.n_keep {
        for _ in 0..config.thinning {
            let (next, accepted) = mh_step(target, &state, width, &mut rng)?;
            state = next;
            if accepted {
                accepts += 1;
            }
        }
        draws.push(state.values.clone());
    }
    let total_steps = config.n_keep * config.thinning;
    Ok(ChainOutput {
        draws,
        acceptance_rate: accepts as f64 / total_steps as f64,
        final_width: width,
    })
}

/// Runs `config.n_chains` independent chains on one target and pools them.
///
/// Chains execute in parallel; each derives its RNG stream from
/// `(config.seed, chain index)`, so results are bit-identical across runs
/// and thread schedules. Chain failures carry the chain index.
pub fn run_chains<T: SampleTarget + ?Sized>(target: &T, config: &ChainConfig) -> Result<SampleSet> {
    config.validate()?;
    let outputs: Vec<Result<ChainOutput>> = (0..config.n_chains)
        .into_par_iter()
        .map(|i| run_chain(target, config, i))
        .collect();
    assemble(target.id(), target.dim(), outputs, config)
}

/// Runs one chain per target, pooling the results into a single
/// [`SampleSet`] — the multiple-imputation pattern where every chain fits
/// its own completed dataset.
///
/// All targets must share dimension and identifier; `targets.len()`
/// overrides `config.n_chains`.
pub fn run_chains_on<T: SampleTarget>(targets: &[T], config: &ChainConfig) -> Result<SampleSet> {
    let mut config = config.clone();
    config.n_chains = targets.len();
    config.validate()?;
    let first = targets.first().expect("validate rejects zero chains");
    for t in targets {
        if t.dim() != first.dim() || t.id() != first.id() {
            return Err(Error::Config(
                "per-chain targets must share dimension and identifier".into(),
            ));
        }
    }
    let outputs: Vec<Result<ChainOutput>> = targets
        .par_iter()
        .enumerate()
        .map(|(i, target)| run_chain(target, &config, i))
        .collect();
    assemble(first.id(), first.dim(), outputs, &config)
}

fn assemble(
    id: &str,
    dim: usize,
    outputs: Vec<Result<ChainOutput>>,
    config: &ChainConfig,
) -> Result<SampleSet> {
    let mut chains = Vec::with_capacity(outputs.len());
    let mut acceptance_rates = Vec::with_capacity(outputs.len());
    let mut final_widths = Vec::with_capacity(outputs.len());
    for (index, output) in outputs.into_iter().enumerate() {
        let output = output.map_err(|e| Error::Chain {
            index,
            source: Box::new(e),
        })?;
        let mut points = Vec::with_capacity(output.draws.len());
        for values in output.draws {
            points.push(ParameterPoint::new(id.to_string(), values)?);
        }
        chains.push(points);
        acceptance_rates.push(output.acceptance_rate);
        final_widths.push(output.final_width);
    }
    let rhat = split_rhat(&chains, dim);
    Ok(SampleSet {
        target_id: id.to_string(),
        dim,
        chains,
        acceptance_rates,
        final_widths,
        rhat,
        config: config.clone(),
    })
}

/// Split-chain convergence diagnostic per coordinate.
///
/// Each chain's kept draws are halved, giving `2 · n_chains` sequences;
/// the statistic compares between-sequence to within-sequence variance and
/// approaches 1 at convergence. Coordinates need at least 4 draws per chain
/// (otherwise `NaN`); a constant coordinate reports exactly 1.
fn split_rhat(chains: &[Vec<ParameterPoint>], dim: usize) -> Vec<f64> {
    let n = chains.first().map_or(0, |c| c.len());
    let half = n / 2;
    if half < 2 {
        return vec![f64::NAN; dim];
    }
    let mut rhat = Vec::with_capacity(dim);
    for j in 0..dim {
        let mut means = Vec::with_capacity(chains.len() * 2);
        let mut variances = Vec::with_capacity(chains.len() * 2);
        for chain in chains {
            let first: Vec<f64> = chain[..half].iter().map(|p| p.values()[j]).collect();
            let last: Vec<f64> = chain[n - half..].iter().map(|p| p.values()[j]).collect();
            for seq in [first, last] {
                let mean = seq.iter().sum::<f64>() / half as f64;
                let var = seq.iter().map(|v| (v - mean) * (v - mean)).sum::<f64>()
                    / (half - 1) as f64;
                means.push(mean);
                variances.push(var);
            }
        }
        let m = means.len() as f64;
        let w: f64 = variances.iter().sum::<f64>() / m;
        let grand = means.iter().sum::<f64>() / m;
        let b_over_n: f64 =
            means.iter().map(|v| (v - grand) * (v - grand)).sum::<f64>() / (m - 1.0);
        let value = if w == 0.0 {
            if b_over_n == 0.0 {
                1.0
            } else {
                f64::INFINITY
            }
        } else {
            let var_plus = (half as f64 - 1.0) / half as f64 * w + b_over_n;
            (var_plus / w).sqrt()
        };
        rhat.push(value);
    }
    rhat
}

/// Pooled draws from one or more chains, with acceptance statistics,
/// adapted proposal widths, convergence diagnostics, and the configuration
/// that produced them.
#[derive(Debug, Clone, PartialEq)]
pub struct SampleSet {
    target_id: String,
    dim: usize,
    chains: Vec<Vec<ParameterPoint>>,
    acceptance_rates: Vec<f64>,
    final_widths: Vec<f64>,
    rhat: Vec<f64>,
    config: ChainConfig,
}

impl SampleSet {
    /// Assembles a sample set from draws obtained elsewhere (loaded from
    /// disk, enumerated on a grid, or hand-built in tests).
    ///
    /// Chains must be non-empty, of equal length, and dimensionally
    /// consistent, with every point bound to `target_id`. Acceptance rates
    /// and proposal widths are not recoverable from bare draws and read as
    /// `NaN`; split-chain diagnostics are recomputed from the draws.
    pub fn from_chains(
        target_id: impl Into<String>,
        chains: Vec<Vec<ParameterPoint>>,
        config: ChainConfig,
    ) -> Result<Self> {
        let target_id = target_id.into();
        let first = chains
            .first()
            .ok_or_else(|| Error::Config("a sample set needs at least one chain".into()))?;
        let len = first.len();
        if len == 0 {
            return Err(Error::Config("chains must hold at least one draw".into()));
        }
        let dim = first
            .first()
            .map(ParameterPoint::dim)
            .expect("non-empty chain");
        for chain in &chains {
            if chain.len() != len {
                return Err(Error::Config(
                    "all chains in a sample set must have the same length".into(),
                ));
            }
            for point in chain {
                if point.family_id() != target_id {
                    return Err(Error::FamilyMismatch {
                        point: point.family_id().to_string(),
                        family: target_id.clone(),
                    });
                }
                if point.dim() != dim {
                    return Err(Error::DimensionMismatch {
                        expected: dim,
                        got: point.dim(),
                    });
                }
            }
        }
        let rhat = split_rhat(&chains, dim);
        let n_chains = chains.len();
        Ok(SampleSet {
            target_id,
            dim,
            chains,
            acceptance_rates: vec![f64::NAN; n_chains],
            final_widths: vec![f64::NAN; n_chains],
            rhat,
            config,
        })
    }

    pub fn target_id(&self) -> &str {
        &self.target_id
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn num_chains(&self) -> usize {
        self.chains.len()
    }

    /// Kept draws of one chain, in order.
    pub fn chain(&self, index: usize) -> &[ParameterPoint] {
        &self.chains[index]
    }

    /// Total pooled draw count.
    pub fn len(&self) -> usize {
        self.chains.iter().map(Vec::len).sum()
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    /// All draws pooled across chains, chain by chain.
    pub fn pooled(&self) -> impl Iterator<Item = &ParameterPoint> {
        self.chains.iter().flatten()
    }

    /// Pooled draws collected into a vector of borrows.
    pub fn pooled_points(&self) -> Vec<&ParameterPoint> {
        self.pooled().collect()
    }

    /// Post-burn-in acceptance rate per chain.
    pub fn acceptance_rates(&self) -> &[f64] {
        &self.acceptance_rates
    }

    /// Frozen proposal width per chain after burn-in adaptation.
    pub fn final_widths(&self) -> &[f64] {
        &self.final_widths
    }

    /// Split-chain diagnostic per coordinate (≈1 at convergence).
    pub fn rhat(&self) -> &[f64] {
        &self.rhat
    }

    /// Coordinates whose diagnostic exceeds [`RHAT_FLAG_THRESHOLD`].
    pub fn flagged_coordinates(&self) -> Vec<usize> {
        self.rhat
            .iter()
            .enumerate()
            .filter(|(_, &r)| r > RHAT_FLAG_THRESHOLD)
            .map(|(j, _)| j)
            .collect()
    }

    pub fn config(&self) -> &ChainConfig {
        &self.config
    }

    /// Writes the draws as CSV with header `chain,iter,coord_0..`.
    pub fn write_csv<W: IoWrite>(&self, writer: W) -> Result<()> {
        let mut w = csv::Writer::from_writer(writer);
        let mut header = vec!["chain".to_string(), "iter".to_string()];
        header.extend((0..self.dim).map(|j| format!("coord_{j}")));
        w.write_record(&header)?;
        for (c, chain) in self.chains.iter().enumerate() {
            for (i, point) in chain.iter().enumerate() {
                let mut record = vec![c.to_string(), i.to_string()];
                record.extend(point.values().iter().map(|v| v.to_string()));
                w.write_record(&record)?;
            }
        }
        w.flush()?;
        Ok(())
    }

    /// Writes run provenance (target, seed, chain settings, acceptance
    /// statistics, diagnostics) as `key = value` lines.
    pub fn write_sidecar<W: IoWrite>(&self, mut w: W) -> Result<()> {
        writeln!(w, "target = {}", self.target_id)?;
        writeln!(w, "dim = {}", self.dim)?;
        writeln!(w, "seed = {}", self.config.seed)?;
        writeln!(w, "n_chains = {}", self.chains.len())?;
        writeln!(w, "burn_in = {}", self.config.burn_in)?;
        writeln!(w, "thinning = {}", self.config.thinning)?;
        writeln!(w, "n_keep = {}", self.config.n_keep)?;
        writeln!(w, "kernel_width = {}", self.config.kernel_width)?;
        writeln!(w, "adapt = {}", self.config.adapt)?;
        for (i, rate) in self.acceptance_rates.iter().enumerate() {
            writeln!(w, "acceptance_rate_{i} = {rate}")?;
        }
        for (i, width) in self.final_widths.iter().enumerate() {
            writeln!(w, "final_width_{i} = {width}")?;
        }
        let rhat = self
            .rhat
            .iter()
            .map(|r| r.to_string())
            .collect::<Vec<_>>()
            .join(",");
        writeln!(w, "rhat = {rhat}")?;
        let flagged = self
            .flagged_coordinates()
            .iter()
            .map(|j| j.to_string())
            .collect::<Vec<_>>()
            .join(",");
        writeln!(w, "flagged = {flagged}")?;
        Ok(())
    }

    /// Writes `{stem}.csv` and `{stem}.meta` into `dir`, returning both
    /// paths.
    pub fn save(&self, dir: &Path, stem: &str) -> Result<(PathBuf, PathBuf)> {
        let csv_path = dir.join(format!("{stem}.csv"));
        let meta_path = dir.join(format!("{stem}.meta"));
        self.write_csv(std::fs::File::create(&csv_path)?)?;
        self.write_sidecar(std::fs::File::create(&meta_path)?)?;
        Ok((csv_path, meta_path))
    }
}

/// Evaluates a target's unnormalized log density over a grid of parameter
/// vectors (the brute-force oracle the sampler is checked against).
pub fn grid_log_density<T: SampleTarget + ?Sized>(
    target: &T,
    grid: &[Vec<f64>],
    rng: &mut dyn RngCore,
) -> Result<Vec<f64>> {
    grid.iter()
        .map(|values| target.log_density(values, rng))
        .collect()
}

/// Maximizes the summed log conditional likelihood (no prior term) by
/// coordinate-wise adaptive-step hill climbing from `restarts` independent
/// prior-draw starts, returning the best point and its objective.
///
/// The target must be a conditional kind (discriminative or regression):
/// the estimator's objective is the product of class conditionals. Restarts
/// run in parallel with seeded streams and ties resolve to the lowest
/// restart index, so results are reproducible. Parameters where the model
/// gives the data probability zero score `-inf` and are climbed away from.
pub fn conditional_ml_estimate(
    target: &PosteriorTarget<'_>,
    restarts: usize,
    seed: u64,
) -> Result<(ParameterPoint, f64)> {
    if target.kind() == PosteriorKind::Joint {
        return Err(Error::Config(
            "conditional maximum likelihood needs a discriminative or regression target".into(),
        ));
    }
    if target.dataset().is_empty() {
        return Err(Error::Config(
            "conditional maximum likelihood needs a non-empty dataset".into(),
        ));
    }
    if restarts == 0 {
        return Err(Error::Config("restarts must be at least 1".into()));
    }
    let results: Vec<Result<(Vec<f64>, f64)>> = (0..restarts)
        .into_par_iter()
        .map(|r| climb_once(target, seed, r))
        .collect();
    let mut best: Option<(Vec<f64>, f64)> = None;
    for result in results {
        let (values, objective) = result?;
        let better = match &best {
            None => true,
            Some((_, current)) => objective > *current,
        };
        if better {
            best = Some((values, objective));
        }
    }
    let (values, objective) = best.expect("at least one restart");
    let point = target.family().point(values)?;
    Ok((point, objective))
}

const CLIMB_MAX_SWEEPS: usize = 200;
const CLIMB_INITIAL_STEP: f64 = 0.5;
const CLIMB_STEP_FLOOR: f64 = 1e-7;

fn climb_once(
    target: &PosteriorTarget<'_>,
    seed: u64,
    restart: usize,
) -> Result<(Vec<f64>, f64)> {
    let mut rng = rng_from(seed, &[tags::OPTIMIZER, restart as u64]);
    let mut objective = |values: &[f64], rng: &mut dyn RngCore| -> Result<f64> {
        let theta = target.family().point(values.to_vec())?;
        target.data_log_likelihood(&theta, rng)
    };

    let mut values = None;
    for _ in 0..INIT_RETRIES {
        let candidate = target.raw_prior_point(&mut rng);
        let score = objective(&candidate, &mut rng)?;
        if score > f64::NEG_INFINITY {
            values = Some((candidate, score));
            break;
        }
    }
    let (values, best) = values.ok_or(Error::InitializationFailed {
        attempts: INIT_RETRIES,
    })?;
    climb_values(&mut objective, values, best, CLIMB_MAX_SWEEPS, &mut rng)
}

/// Coordinate-wise adaptive-step hill climbing from `values` (whose score is
/// `best`): each coordinate tries a step both ways, keeps an improvement and
/// doubles its step, otherwise halves it; stops after `max_sweeps` sweeps or
/// once every step is below a small floor.
fn climb_values(
    objective: &mut dyn FnMut(&[f64], &mut dyn RngCore) -> Result<f64>,
    mut values: Vec<f64>,
    mut best: f64,
    max_sweeps: usize,
    rng: &mut dyn RngCore,
) -> Result<(Vec<f64>, f64)> {
    let dim = values.len();
    let mut steps = vec![CLIMB_INITIAL_STEP; dim];
    for _ in 0..max_sweeps {
        for j in 0..dim {
            let original = values[j];
            values[j] = original + steps[j];
            let up = objective(&values, rng)?;
            values[j] = original - steps[j];
            let down = objective(&values, rng)?;
            if up > best && up >= down {
                values[j] = original + steps[j];
                best = up;
                steps[j] *= 2.0;
            } else if down > best {
                // values[j] already holds original - steps[j]
                best = down;
                steps[j] *= 2.0;
            } else {
                values[j] = original;
                steps[j] *= 0.5;
            }
        }
        if steps.iter().all(|&s| s < CLIMB_STEP_FLOOR) {
            break;
        }
    }
    Ok((values, best))
}
