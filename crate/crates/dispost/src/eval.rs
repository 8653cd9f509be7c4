//! Divergence reports against a known generator, posterior-predictive
//! distributions, perplexity, and resampling error bars.
//!
//! The divergence between a fitted model and the generator that produced the
//! data splits into three views of the same gap: the joint divergence over
//! labeled pairs, the conditional divergence of the label given the
//! covariates, and the divergence between the covariate margins. The first
//! is always the sum of the other two, and [`kl_report`] computes all three
//! from one pass so the identity holds to float round-off by construction.
//!
//! Predictive distributions average the class conditional over posterior
//! draws. Reported probabilities are clipped to `[exp(-22), 1]` and
//! renormalized so log losses stay finite; the pre-clip averages are kept
//! alongside because averaging draws is exactly linear only before clipping.

use std::io::Write as IoWrite;

use rand::{Rng, RngCore};

use crate::data::{Dataset, FeatureValue};
use crate::error::{Error, Result};
use crate::family::{ModelFamily, ParameterPoint};
use crate::logspace::{log_sum_exp, stable_sum, StableSum};
use crate::missing::log_conditional_missing_vector;
use crate::sampler::SampleSet;
use crate::seeding::{rng_from, tags};

/// Log of the smallest probability ever reported: `ln` of the clip floor.
pub const PROBABILITY_FLOOR_LOG: f64 = -22.0;

/// Number of resamples drawn by [`bootstrap_ci`].
pub const BOOTSTRAP_RESAMPLES: usize = 10_000;

/// Number of blocks used for the jackknife error attached to Monte Carlo
/// divergence estimates (fewer when there are fewer sample points).
pub const KL_JACKKNIFE_BLOCKS: usize = 16;

/// Smallest probability ever reported; everything below is clipped up.
pub fn probability_floor() -> f64 {
    PROBABILITY_FLOOR_LOG.exp()
}

/// How the expectation over covariates is evaluated in divergence reports.
#[derive(Debug, Clone, PartialEq)]
pub enum KlEvaluation {
    /// Exact expectation over an enumerable covariate support. The weights
    /// come from the true margin, so the support must cover all covariate
    /// values the generator can produce.
    Exact { support: Vec<Vec<f64>> },
    /// Monte Carlo expectation over covariates simulated from the true
    /// margin (labeled pairs are drawn and the labels dropped). The seed
    /// fixes the covariate draws, so two calls with the same seed share the
    /// same sample and their estimates are directly comparable.
    MonteCarlo { samples: usize, seed: u64 },
}

/// Jackknife standard errors attached to Monte Carlo divergence estimates.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct KlStandardErrors {
    pub k_joint: f64,
    pub k_cond: f64,
    pub margin_kl: f64,
}

/// The three divergences between a generator and a fitted model, computed
/// jointly from one pass over the covariate set.
///
/// `+inf` in any field means the model assigns probability zero to an event
/// the generator produces with positive probability.
#[derive(Debug, Clone, PartialEq)]
pub struct KlReport {
    /// Divergence between the joint distributions over `(class, x)`.
    pub k_joint: f64,
    /// Expected divergence between the class conditionals given `x`.
    pub k_cond: f64,
    /// Divergence between the covariate margins.
    pub margin_kl: f64,
    /// Present for Monte Carlo evaluation; `None` for exact enumeration.
    pub standard_errors: Option<KlStandardErrors>,
}

impl KlReport {
    /// `k_joint - k_cond - margin_kl`: zero up to float round-off whenever
    /// all three parts are finite.
    pub fn identity_residual(&self) -> f64 {
        self.k_joint - self.k_cond - self.margin_kl
    }

    /// Writes the report as `key = value` lines.
    pub fn write_kv<W: IoWrite>(&self, mut w: W) -> Result<()> {
        writeln!(w, "k_joint = {}", self.k_joint)?;
        writeln!(w, "k_cond = {}", self.k_cond)?;
        writeln!(w, "margin_kl = {}", self.margin_kl)?;
        writeln!(w, "identity_residual = {}", self.identity_residual())?;
        if let Some(se) = &self.standard_errors {
            writeln!(w, "k_joint_se = {}", se.k_joint)?;
            writeln!(w, "k_cond_se = {}", se.k_cond)?;
            writeln!(w, "margin_kl_se = {}", se.margin_kl)?;
        }
        Ok(())
    }
}

/// One covariate point with everything the generator side contributes: its
/// weight in the expectation and the true log joints and margin.
struct TruePoint {
    x: Vec<f64>,
    weight: f64,
    log_joints: Vec<f64>,
    log_margin: f64,
}

/// The three per-point divergence contributions under a given model.
struct PointTerms {
    joint: f64,
    cond: f64,
    margin: f64,
}

fn check_comparable(true_model: &dyn ModelFamily, model: &dyn ModelFamily) -> Result<()> {
    if true_model.num_classes() != model.num_classes() {
        return Err(Error::Config(format!(
            "class counts differ: generator has {}, model has {}",
            true_model.num_classes(),
            model.num_classes()
        )));
    }
    if true_model.feature_dim() != model.feature_dim() {
        return Err(Error::Config(format!(
            "feature dimensions differ: generator has {}, model has {}",
            true_model.feature_dim(),
            model.feature_dim()
        )));
    }
    Ok(())
}

/// Evaluates the generator side at every covariate point of the evaluation
/// scheme. Points the generator gives zero probability are dropped: they
/// carry no weight in any of the expectations.
fn true_side(
    true_model: &dyn ModelFamily,
    theta_true: &ParameterPoint,
    eval: &KlEvaluation,
    rng: &mut dyn RngCore,
) -> Result<Vec<TruePoint>> {
    let xs: Vec<Vec<f64>> = match eval {
        KlEvaluation::Exact { support } => {
            if support.is_empty() {
                return Err(Error::Config(
                    "exact divergence evaluation needs a non-empty support".into(),
                ));
            }
            support.clone()
        }
        KlEvaluation::MonteCarlo { samples, seed } => {
            if *samples == 0 {
                return Err(Error::Config(
                    "Monte Carlo divergence evaluation needs at least one sample".into(),
                ));
            }
            // Simulate labeled pairs from the generator and drop the labels:
            // the covariates are then draws from the true margin.
            let mut draw_rng = rng_from(*seed, &[tags::EVAL]);
            let simulated = true_model.simulate(theta_true, *samples, &mut draw_rng)?;
            simulated
                .iter()
                .map(|obs| obs.dense_features())
                .collect::<Result<Vec<_>>>()?
        }
    };
    let mc_weight = 1.0 / xs.len() as f64;
    let mut points = Vec::with_capacity(xs.len());
    for x in xs {
        let mut log_joints = Vec::with_capacity(true_model.num_classes());
        for c in 0..true_model.num_classes() {
            log_joints.push(true_model.log_joint(c, &x, theta_true, rng)?.value());
        }
        let log_margin = log_sum_exp(&log_joints);
        if log_margin == f64::NEG_INFINITY {
            continue;
        }
        let weight = match eval {
            KlEvaluation::Exact { .. } => log_margin.exp(),
            KlEvaluation::MonteCarlo { .. } => mc_weight,
        };
        points.push(TruePoint {
            x,
            weight,
            log_joints,
            log_margin,
        });
    }
    if points.is_empty() {
        return Err(Error::Config(
            "the generator assigns zero probability to every covariate point".into(),
        ));
    }
    Ok(points)
}

/// Per-point divergence contributions of one model parameter against a
/// pre-evaluated generator point. Each value is an expectation over the true
/// class conditional at `x`, so the joint term is always the conditional
/// term plus the margin term, infinities included.
fn point_terms(
    point: &TruePoint,
    model: &dyn ModelFamily,
    theta: &ParameterPoint,
    rng: &mut dyn RngCore,
) -> Result<PointTerms> {
    let classes = point.log_joints.len();
    let mut model_joints = Vec::with_capacity(classes);
    for c in 0..classes {
        model_joints.push(model.log_joint(c, &point.x, theta, rng)?.value());
    }
    let model_margin = log_sum_exp(&model_joints);
    if model_margin == f64::NEG_INFINITY {
        // The model rules out a covariate point the generator produces: the
        // margin gap is infinite and the model conditional is undefined.
        return Ok(PointTerms {
            joint: f64::INFINITY,
            cond: f64::INFINITY,
            margin: f64::INFINITY,
        });
    }
    let margin = point.log_margin - model_margin;
    let mut joint = StableSum::new();
    let mut cond = StableSum::new();
    for c in 0..classes {
        let lt = point.log_joints[c];
        if lt == f64::NEG_INFINITY {
            // Zero true probability: 0 * ln(0 / q) contributes nothing even
            // when the model also assigns zero.
            continue;
        }
        let p = (lt - point.log_margin).exp();
        joint.add(p * (lt - model_joints[c]));
        cond.add(p * ((lt - point.log_margin) - (model_joints[c] - model_margin)));
    }
    Ok(PointTerms {
        joint: joint.value(),
        cond: cond.value(),
        margin,
    })
}

/// Computes the joint, conditional, and margin divergences between a
/// generator at `theta_true` and a model at `theta` in one pass.
///
/// Monte Carlo evaluations carry jackknife standard errors; exact ones do
/// not. `rng` feeds model families whose densities are themselves Monte
/// Carlo estimates — deterministic families ignore it.
pub fn kl_report(
    true_model: &dyn ModelFamily,
    theta_true: &ParameterPoint,
    model: &dyn ModelFamily,
    theta: &ParameterPoint,
    eval: &KlEvaluation,
    rng: &mut dyn RngCore,
) -> Result<KlReport> {
    check_comparable(true_model, model)?;
    let points = true_side(true_model, theta_true, eval, rng)?;
    let mut joint = StableSum::new();
    let mut cond = StableSum::new();
    let mut margin = StableSum::new();
    let mut per_point: Vec<PointTerms> = Vec::new();
    let keep_terms = matches!(eval, KlEvaluation::MonteCarlo { .. });
    for point in &points {
        let terms = point_terms(point, model, theta, rng)?;
        joint.add(point.weight * terms.joint);
        cond.add(point.weight * terms.cond);
        margin.add(point.weight * terms.margin);
        if keep_terms {
            per_point.push(terms);
        }
    }
    let standard_errors = if keep_terms {
        Some(KlStandardErrors {
            k_joint: mc_standard_error(&per_point, |t| t.joint),
            k_cond: mc_standard_error(&per_point, |t| t.cond),
            margin_kl: mc_standard_error(&per_point, |t| t.margin),
        })
    } else {
        None
    };
    Ok(KlReport {
        k_joint: joint.value(),
        k_cond: cond.value(),
        margin_kl: margin.value(),
        standard_errors,
    })
}

/// Jackknife standard error of the mean of one per-point term, using up to
/// [`KL_JACKKNIFE_BLOCKS`] contiguous blocks. `NaN` with fewer than two
/// points (no resampling is possible).
fn mc_standard_error(terms: &[PointTerms], select: fn(&PointTerms) -> f64) -> f64 {
    let n = terms.len();
    if n < 2 {
        return f64::NAN;
    }
    let blocks = KL_JACKKNIFE_BLOCKS.min(n);
    let mut block_means = Vec::with_capacity(blocks);
    for b in 0..blocks {
        let start = b * n / blocks;
        let end = (b + 1) * n / blocks;
        let mean = stable_sum(terms[start..end].iter().map(select)) / (end - start) as f64;
        block_means.push(mean);
    }
    match jackknife_se(&block_means) {
        Ok(se) => se,
        Err(_) => f64::NAN,
    }
}

/// Expected divergence between the class conditionals given the covariates.
pub fn k_cond(
    true_model: &dyn ModelFamily,
    theta_true: &ParameterPoint,
    model: &dyn ModelFamily,
    theta: &ParameterPoint,
    eval: &KlEvaluation,
    rng: &mut dyn RngCore,
) -> Result<f64> {
    Ok(kl_report(true_model, theta_true, model, theta, eval, rng)?.k_cond)
}

/// Divergence between the joint distributions over `(class, x)`.
pub fn k_joint(
    true_model: &dyn ModelFamily,
    theta_true: &ParameterPoint,
    model: &dyn ModelFamily,
    theta: &ParameterPoint,
    eval: &KlEvaluation,
    rng: &mut dyn RngCore,
) -> Result<f64> {
    Ok(kl_report(true_model, theta_true, model, theta, eval, rng)?.k_joint)
}

/// Divergence between the covariate margins.
pub fn margin_kl(
    true_model: &dyn ModelFamily,
    theta_true: &ParameterPoint,
    model: &dyn ModelFamily,
    theta: &ParameterPoint,
    eval: &KlEvaluation,
    rng: &mut dyn RngCore,
) -> Result<f64> {
    Ok(kl_report(true_model, theta_true, model, theta, eval, rng)?.margin_kl)
}

/// Posterior-expected conditional divergence: the average of the conditional
/// divergence over all pooled draws in `samples`.
///
/// The generator side (covariate set included) is evaluated once and shared
/// across draws, so a Monte Carlo evaluation uses the same covariate sample
/// for every draw.
pub fn expected_k_cond(
    true_model: &dyn ModelFamily,
    theta_true: &ParameterPoint,
    model: &dyn ModelFamily,
    samples: &SampleSet,
    eval: &KlEvaluation,
    rng: &mut dyn RngCore,
) -> Result<f64> {
    check_comparable(true_model, model)?;
    if samples.is_empty() {
        return Err(Error::Config(
            "posterior-expected divergence needs at least one draw".into(),
        ));
    }
    let points = true_side(true_model, theta_true, eval, rng)?;
    let mut over_draws = StableSum::new();
    for theta in samples.pooled() {
        let mut value = StableSum::new();
        for point in &points {
            let terms = point_terms(point, model, theta, rng)?;
            value.add(point.weight * terms.cond);
        }
        over_draws.add(value.value());
    }
    Ok(over_draws.value() / samples.len() as f64)
}

/// A posterior-predictive class distribution at one covariate point.
#[derive(Debug, Clone, PartialEq)]
pub struct Predictive {
    raw: Vec<f64>,
    probabilities: Vec<f64>,
}

impl Predictive {
    fn from_raw(raw: Vec<f64>) -> Self {
        let probabilities = clip_and_renormalize(&raw);
        Predictive { raw, probabilities }
    }

    /// Pre-clip class probabilities: the plain average of the per-draw
    /// conditionals, exactly linear in the pooled draws.
    pub fn raw(&self) -> &[f64] {
        &self.raw
    }

    /// Reported class probabilities: clipped to `[exp(-22), 1]` and
    /// renormalized.
    pub fn probabilities(&self) -> &[f64] {
        &self.probabilities
    }

    pub fn num_classes(&self) -> usize {
        self.raw.len()
    }
}

/// Clips probabilities to `[exp(-22), 1]` and renormalizes the result to
/// sum to one.
pub fn clip_and_renormalize(raw: &[f64]) -> Vec<f64> {
    let floor = probability_floor();
    let clipped: Vec<f64> = raw.iter().map(|&p| p.clamp(floor, 1.0)).collect();
    let total = stable_sum(clipped.iter().copied());
    clipped.iter().map(|p| p / total).collect()
}

fn check_samples(model: &dyn ModelFamily, samples: &SampleSet) -> Result<()> {
    if samples.is_empty() {
        return Err(Error::Config(
            "a predictive distribution needs at least one posterior draw".into(),
        ));
    }
    if samples.target_id() != model.family_id() {
        return Err(Error::FamilyMismatch {
            point: samples.target_id().to_string(),
            family: model.family_id().to_string(),
        });
    }
    Ok(())
}

/// Posterior-predictive class distribution at a fully observed covariate
/// point: the average of `p(c | x, theta)` over all pooled draws.
pub fn predictive(
    model: &dyn ModelFamily,
    samples: &SampleSet,
    x: &[f64],
    rng: &mut dyn RngCore,
) -> Result<Predictive> {
    check_samples(model, samples)?;
    let mut acc: Vec<StableSum> = vec![StableSum::new(); model.num_classes()];
    for theta in samples.pooled() {
        let logs = model.log_conditional_vector(x, theta, rng)?;
        for (a, l) in acc.iter_mut().zip(&logs) {
            a.add(l.exp());
        }
    }
    let n = samples.len() as f64;
    Ok(Predictive::from_raw(
        acc.iter().map(|a| a.value() / n).collect(),
    ))
}

/// Posterior-predictive class distribution at a covariate point with
/// possibly missing components, which are marginalized out of each per-draw
/// conditional.
pub fn predictive_missing(
    model: &dyn ModelFamily,
    samples: &SampleSet,
    features: &[FeatureValue],
    rng: &mut dyn RngCore,
) -> Result<Predictive> {
    check_samples(model, samples)?;
    let mut acc: Vec<StableSum> = vec![StableSum::new(); model.num_classes()];
    for theta in samples.pooled() {
        let logs = log_conditional_missing_vector(model, features, theta, rng)?;
        for (a, l) in acc.iter_mut().zip(&logs) {
            a.add(l.exp());
        }
    }
    let n = samples.len() as f64;
    Ok(Predictive::from_raw(
        acc.iter().map(|a| a.value() / n).collect(),
    ))
}

/// One evaluated test point: the reported class probabilities and the log
/// loss of the true class.
#[derive(Debug, Clone, PartialEq)]
pub struct PredictivePoint {
    pub true_class: usize,
    pub probabilities: Vec<f64>,
    pub logloss: f64,
}

/// Posterior-predictive evaluation of a labeled test set.
#[derive(Debug, Clone, PartialEq)]
pub struct PredictiveReport {
    points: Vec<PredictivePoint>,
    mean_logloss: f64,
    perplexity: f64,
    perplexity_ci: Option<ConfidenceInterval>,
}

impl PredictiveReport {
    pub fn points(&self) -> &[PredictivePoint] {
        &self.points
    }

    pub fn len(&self) -> usize {
        self.points.len()
    }

    pub fn is_empty(&self) -> bool {
        self.points.is_empty()
    }

    /// Average log loss of the true class, base e.
    pub fn mean_logloss(&self) -> f64 {
        self.mean_logloss
    }

    /// `exp` of the mean log loss: 1 for perfect predictions, the class
    /// count for uniform ones.
    pub fn perplexity(&self) -> f64 {
        self.perplexity
    }

    /// Attaches a percentile-bootstrap confidence interval for the
    /// perplexity by resampling per-point log losses; `exp` is monotone, so
    /// the log-loss interval maps straight through.
    pub fn with_bootstrap_ci(mut self, level: f64, seed: u64) -> Result<Self> {
        let losses: Vec<f64> = self.points.iter().map(|p| p.logloss).collect();
        let ci = bootstrap_ci(&losses, level, seed)?;
        self.perplexity_ci = Some(ConfidenceInterval {
            lower: ci.lower.exp(),
            upper: ci.upper.exp(),
            level,
        });
        Ok(self)
    }

    pub fn perplexity_ci(&self) -> Option<ConfidenceInterval> {
        self.perplexity_ci
    }

    /// Writes `point_id,true_class,p_0..p_{C-1},logloss` rows.
    pub fn write_csv<W: IoWrite>(&self, mut w: W) -> Result<()> {
        let classes = self.points.first().map_or(0, |p| p.probabilities.len());
        write!(w, "point_id,true_class")?;
        for c in 0..classes {
            write!(w, ",p_{c}")?;
        }
        writeln!(w, ",logloss")?;
        for (id, point) in self.points.iter().enumerate() {
            write!(w, "{id},{}", point.true_class)?;
            for p in &point.probabilities {
                write!(w, ",{p}")?;
            }
            writeln!(w, ",{}", point.logloss)?;
        }
        Ok(())
    }
}

/// Log loss of probability `p` for the realized class, with the clip floor
/// applied so the loss stays finite.
fn clipped_logloss(p: f64) -> f64 {
    -p.clamp(probability_floor(), 1.0).ln()
}

/// Evaluates the posterior predictive of `model` on every observation of a
/// labeled test set. Missing feature components are marginalized out.
pub fn predictive_report(
    model: &dyn ModelFamily,
    samples: &SampleSet,
    test: &Dataset,
    rng: &mut dyn RngCore,
) -> Result<PredictiveReport> {
    if test.num_classes() != model.num_classes() {
        return Err(Error::Config(format!(
            "test set has {} classes, model has {}",
            test.num_classes(),
            model.num_classes()
        )));
    }
    if test.feature_dim() != model.feature_dim() {
        return Err(Error::DimensionMismatch {
            expected: model.feature_dim(),
            got: test.feature_dim(),
        });
    }
    if test.is_empty() {
        return Err(Error::Config("the test set is empty".into()));
    }
    let mut points = Vec::with_capacity(test.len());
    let mut losses = StableSum::new();
    for obs in test.iter() {
        let pred = predictive_missing(model, samples, &obs.features, rng)?;
        let logloss = clipped_logloss(pred.probabilities()[obs.class]);
        losses.add(logloss);
        points.push(PredictivePoint {
            true_class: obs.class,
            probabilities: pred.probabilities,
            logloss,
        });
    }
    let mean_logloss = losses.value() / points.len() as f64;
    Ok(PredictiveReport {
        points,
        mean_logloss,
        perplexity: mean_logloss.exp(),
        perplexity_ci: None,
    })
}

/// Perplexity of a set of predicted class distributions against the realized
/// classes: `exp` of the mean log loss, base e, with probabilities clipped
/// to `[exp(-22), 1]` before the log.
pub fn perplexity(true_classes: &[usize], probabilities: &[Vec<f64>]) -> Result<f64> {
    if true_classes.is_empty() {
        return Err(Error::Config("perplexity of an empty prediction set".into()));
    }
    if true_classes.len() != probabilities.len() {
        return Err(Error::DimensionMismatch {
            expected: true_classes.len(),
            got: probabilities.len(),
        });
    }
    let mut losses = StableSum::new();
    for (&class, row) in true_classes.iter().zip(probabilities) {
        if class >= row.len() {
            return Err(Error::ClassOutOfRange {
                label: class,
                num_classes: row.len(),
            });
        }
        losses.add(clipped_logloss(row[class]));
    }
    Ok((losses.value() / true_classes.len() as f64).exp())
}

/// Delete-one jackknife standard error of the mean of the block values:
/// `sqrt(((B - 1) / B) * sum((m_i - mean)^2))` where `m_i` is the mean of
/// the blocks with block `i` left out.
pub fn jackknife_se(blocks: &[f64]) -> Result<f64> {
    if blocks.len() < 2 {
        return Err(Error::Config(
            "the jackknife needs at least two blocks".into(),
        ));
    }
    let b = blocks.len() as f64;
    let total = stable_sum(blocks.iter().copied());
    let mean = total / b;
    let mut deviations = StableSum::new();
    for v in blocks {
        let leave_out = (total - v) / (b - 1.0);
        deviations.add((leave_out - mean) * (leave_out - mean));
    }
    Ok(((b - 1.0) / b * deviations.value()).sqrt())
}

/// A two-sided percentile confidence interval.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ConfidenceInterval {
    pub lower: f64,
    pub upper: f64,
    /// Nominal coverage, e.g. 0.95.
    pub level: f64,
}

impl ConfidenceInterval {
    pub fn contains(&self, value: f64) -> bool {
        self.lower <= value && value <= self.upper
    }
}

/// Percentile-bootstrap confidence interval for the mean, from
/// [`BOOTSTRAP_RESAMPLES`] resamples drawn on a stream derived from `seed`.
pub fn bootstrap_ci(values: &[f64], level: f64, seed: u64) -> Result<ConfidenceInterval> {
    if values.is_empty() {
        return Err(Error::Config("bootstrap of an empty sample".into()));
    }
    if !(level > 0.0 && level < 1.0) {
        return Err(Error::Config(format!(
            "confidence level must be in (0, 1), got {level}"
        )));
    }
    let n = values.len();
    let mut rng = rng_from(seed, &[tags::BOOTSTRAP]);
    let mut means = Vec::with_capacity(BOOTSTRAP_RESAMPLES);
    for _ in 0..BOOTSTRAP_RESAMPLES {
        let mut acc = StableSum::new();
        for _ in 0..n {
            acc.add(values[rng.random_range(0..n)]);
        }
        means.push(acc.value() / n as f64);
    }
    means.sort_by(f64::total_cmp);
    Ok(ConfidenceInterval {
        lower: percentile(&means, (1.0 - level) / 2.0),
        upper: percentile(&means, (1.0 + level) / 2.0),
        level,
    })
}

/// Linear-interpolated quantile of a sorted slice.
fn percentile(sorted: &[f64], q: f64) -> f64 {
    let position = q * (sorted.len() - 1) as f64;
    let below = position.floor() as usize;
    let above = position.ceil() as usize;
    let fraction = position - below as f64;
    sorted[below] + fraction * (sorted[above] - sorted[below])
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::constrain::ConstraintLayout;
    use crate::family::LogDensity;
    use crate::models::{CgmFamily, DiscreteFamily};
    use crate::sampler::ChainConfig;
    use rand_distr::Distribution;

    fn exact_eval(family: &DiscreteFamily) -> KlEvaluation {
        KlEvaluation::Exact {
            support: family.support(),
        }
    }

    /// Brute-force joint KL between two discrete tables in linear space.
    fn table_kl(a: &[f64], b: &[f64]) -> f64 {
        a.iter()
            .zip(b)
            .map(|(&p, &q)| if p == 0.0 { 0.0 } else { p * (p / q).ln() })
            .sum()
    }

    /// Brute-force margin KL for class-by-value tables in linear space.
    fn margin_table_kl(a: &[f64], b: &[f64], classes: usize, values: usize) -> f64 {
        let margin = |t: &[f64], v: usize| (0..classes).map(|c| t[c * values + v]).sum::<f64>();
        (0..values)
            .map(|v| {
                let p = margin(a, v);
                let q = margin(b, v);
                if p == 0.0 {
                    0.0
                } else {
                    p * (p / q).ln()
                }
            })
            .sum()
    }

    #[test]
    fn joint_divergence_splits_into_conditional_plus_margin() {
        let family = DiscreteFamily::new(3, 4, 1.0).unwrap();
        let eval = exact_eval(&family);
        let mut rng = rng_from(60, &[]);
        for _ in 0..20 {
            let truth = family.sample_prior(&mut rng);
            let fitted = family.sample_prior(&mut rng);
            let report = kl_report(&family, &truth, &family, &fitted, &eval, &mut rng).unwrap();
            assert!(
                report.identity_residual().abs() < 1e-10,
                "residual {}",
                report.identity_residual()
            );
            assert!(report.k_cond >= -1e-12);
            assert!(report.margin_kl >= -1e-12);
            assert!(report.k_joint >= report.k_cond - 1e-12);
            assert!(report.standard_errors.is_none());
        }
    }

    #[test]
    fn divergence_vanishes_at_the_generator_itself() {
        let family = DiscreteFamily::new(2, 3, 1.0).unwrap();
        let mut rng = rng_from(61, &[]);
        let truth = family.sample_prior(&mut rng);
        let report =
            kl_report(&family, &truth, &family, &truth, &exact_eval(&family), &mut rng).unwrap();
        assert!(report.k_joint.abs() < 1e-15);
        assert!(report.k_cond.abs() < 1e-15);
        assert!(report.margin_kl.abs() < 1e-15);
    }

    #[test]
    fn matched_conditionals_leave_only_the_margin_gap() {
        // Equal rows make every class conditional uniform, so the entire
        // joint divergence is the margin divergence.
        let family = DiscreteFamily::new(2, 2, 1.0).unwrap();
        let truth = family.point_from_table(&[0.3, 0.2, 0.3, 0.2]).unwrap();
        let fitted = family.point_from_table(&[0.1, 0.4, 0.1, 0.4]).unwrap();
        let mut rng = rng_from(62, &[]);
        let report =
            kl_report(&family, &truth, &family, &fitted, &exact_eval(&family), &mut rng).unwrap();
        let expected_margin = 0.6 * (0.6f64 / 0.2).ln() + 0.4 * (0.4f64 / 0.8).ln();
        assert!(report.k_cond.abs() < 1e-14, "k_cond {}", report.k_cond);
        assert!((report.margin_kl - expected_margin).abs() < 1e-12);
        assert!((report.k_joint - expected_margin).abs() < 1e-12);
    }

    #[test]
    fn report_matches_linear_space_enumeration() {
        let family = DiscreteFamily::new(2, 2, 1.0).unwrap();
        let a = [0.1, 0.25, 0.3, 0.35];
        let b = [0.2, 0.2, 0.25, 0.35];
        let truth = family.point_from_table(&a).unwrap();
        let fitted = family.point_from_table(&b).unwrap();
        let mut rng = rng_from(63, &[]);
        let report =
            kl_report(&family, &truth, &family, &fitted, &exact_eval(&family), &mut rng).unwrap();
        let joint = table_kl(&a, &b);
        let margin = margin_table_kl(&a, &b, 2, 2);
        assert!((report.k_joint - joint).abs() < 1e-12);
        assert!((report.margin_kl - margin).abs() < 1e-12);
        assert!((report.k_cond - (joint - margin)).abs() < 1e-12);
    }

    /// A hard-coded table family over `x in {0, 1}` that can hold exact
    /// zeros, which the softmax-parametrized discrete family cannot.
    struct FixedTable {
        log_table: Vec<[f64; 2]>,
        layout: ConstraintLayout,
    }

    impl FixedTable {
        fn new(table: &[[f64; 2]]) -> Self {
            FixedTable {
                log_table: table
                    .iter()
                    .map(|row| [row[0].ln(), row[1].ln()])
                    .collect(),
                layout: ConstraintLayout::new().identity("unused", 1),
            }
        }
    }

    impl ModelFamily for FixedTable {
        fn family_id(&self) -> &str {
            "fixed-table"
        }
        fn num_classes(&self) -> usize {
            self.log_table.len()
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
            x: &[f64],
            _theta: &ParameterPoint,
            _rng: &mut dyn RngCore,
        ) -> Result<LogDensity> {
            let v = x[0] as usize;
            Ok(LogDensity::normalized(self.log_table[class][v]))
        }
    }

    #[test]
    fn impossible_events_under_the_model_report_infinity() {
        // The model gives class 1 at x = 1 zero probability; the generator
        // does not. Joint and conditional gaps blow up, the margin gap
        // stays finite because the model still reaches x = 1 via class 0.
        let truth = FixedTable::new(&[[0.3, 0.2], [0.25, 0.25]]);
        let model = FixedTable::new(&[[0.3, 0.45], [0.25, 0.0]]);
        let support = KlEvaluation::Exact {
            support: vec![vec![0.0], vec![1.0]],
        };
        let tt = truth.point(vec![0.0]).unwrap();
        let tm = model.point(vec![0.0]).unwrap();
        let mut rng = rng_from(64, &[]);
        let report = kl_report(&truth, &tt, &model, &tm, &support, &mut rng).unwrap();
        assert_eq!(report.k_joint, f64::INFINITY);
        assert_eq!(report.k_cond, f64::INFINITY);
        assert!(report.margin_kl.is_finite());
    }

    #[test]
    fn monte_carlo_agrees_with_exact_enumeration() {
        let family = DiscreteFamily::new(2, 3, 1.0).unwrap();
        let mut rng = rng_from(65, &[]);
        let truth = family.sample_prior(&mut rng);
        let fitted = family.sample_prior(&mut rng);
        let exact =
            kl_report(&family, &truth, &family, &fitted, &exact_eval(&family), &mut rng).unwrap();
        let mc_eval = KlEvaluation::MonteCarlo {
            samples: 4000,
            seed: 7,
        };
        let mc = kl_report(&family, &truth, &family, &fitted, &mc_eval, &mut rng).unwrap();
        let se = mc.standard_errors.expect("Monte Carlo carries errors");
        assert!(se.k_joint.is_finite() && se.k_joint > 0.0);
        assert!(
            (mc.k_joint - exact.k_joint).abs() < 4.0 * se.k_joint + 0.01,
            "mc {} vs exact {} (se {})",
            mc.k_joint,
            exact.k_joint,
            se.k_joint
        );
        assert!((mc.k_cond - exact.k_cond).abs() < 4.0 * se.k_cond + 0.01);
        // The split identity survives Monte Carlo estimation bit-for-bit in
        // spirit: all three parts share the same covariate draws.
        assert!(mc.identity_residual().abs() < 1e-10);
        let again = kl_report(&family, &truth, &family, &fitted, &mc_eval, &mut rng).unwrap();
        assert_eq!(mc, again);
    }

    #[test]
    fn expected_conditional_divergence_averages_the_draws() {
        let family = DiscreteFamily::new(2, 2, 1.0).unwrap();
        let mut rng = rng_from(66, &[]);
        let truth = family.sample_prior(&mut rng);
        let a = family.sample_prior(&mut rng);
        let b = family.sample_prior(&mut rng);
        let eval = exact_eval(&family);
        let ka = k_cond(&family, &truth, &family, &a, &eval, &mut rng).unwrap();
        let kb = k_cond(&family, &truth, &family, &b, &eval, &mut rng).unwrap();
        let mut chain = Vec::new();
        chain.extend(std::iter::repeat_n(a, 3));
        chain.extend(std::iter::repeat_n(b, 7));
        let set = SampleSet::from_chains(
            family.family_id(),
            vec![chain],
            ChainConfig::standard(0).with_chains(1),
        )
        .unwrap();
        let averaged = expected_k_cond(&family, &truth, &family, &set, &eval, &mut rng).unwrap();
        assert!((averaged - (0.3 * ka + 0.7 * kb)).abs() < 1e-12);
    }

    #[test]
    fn mismatched_families_are_rejected() {
        let two = DiscreteFamily::new(2, 2, 1.0).unwrap();
        let three = DiscreteFamily::new(3, 2, 1.0).unwrap();
        let mut rng = rng_from(67, &[]);
        let ta = two.sample_prior(&mut rng);
        let tb = three.sample_prior(&mut rng);
        assert!(matches!(
            kl_report(&two, &ta, &three, &tb, &exact_eval(&two), &mut rng),
            Err(Error::Config(_))
        ));
        let empty = KlEvaluation::Exact { support: vec![] };
        assert!(matches!(
            kl_report(&two, &ta, &two, &ta, &empty, &mut rng),
            Err(Error::Config(_))
        ));
        let zero = KlEvaluation::MonteCarlo { samples: 0, seed: 0 };
        assert!(matches!(
            kl_report(&two, &ta, &two, &ta, &zero, &mut rng),
            Err(Error::Config(_))
        ));
    }

    fn prior_sample_set(family: &CgmFamily, n: usize, seed: u64) -> SampleSet {
        let mut rng = rng_from(seed, &[]);
        let chain: Vec<ParameterPoint> = (0..n).map(|_| family.sample_prior(&mut rng)).collect();
        SampleSet::from_chains(
            family.family_id(),
            vec![chain],
            ChainConfig::standard(seed).with_chains(1),
        )
        .unwrap()
    }

    #[test]
    fn single_draw_predictive_is_that_conditional() {
        let family = CgmFamily::new(2, 0.0).unwrap();
        let set = prior_sample_set(&family, 1, 70);
        let mut rng = rng_from(71, &[]);
        let x = [0.4, -1.0];
        let pred = predictive(&family, &set, &x, &mut rng).unwrap();
        let logs = family
            .log_conditional_vector(&x, set.chain(0).first().unwrap(), &mut rng)
            .unwrap();
        for (raw, log) in pred.raw().iter().zip(&logs) {
            assert!((raw - log.exp()).abs() < 1e-15);
        }
        let total: f64 = pred.probabilities().iter().sum();
        assert!((total - 1.0).abs() < 1e-12);
    }

    #[test]
    fn predictive_is_linear_in_the_pooled_draws() {
        let family = CgmFamily::new(3, 0.0).unwrap();
        let a = prior_sample_set(&family, 3, 72);
        let b = prior_sample_set(&family, 5, 73);
        let mut combined = vec![a.chain(0).to_vec()];
        combined.push(b.chain(0).to_vec());
        // from_chains wants equal lengths; pool via a single concatenated chain.
        let pooled: Vec<ParameterPoint> = combined.into_iter().flatten().collect();
        let both = SampleSet::from_chains(
            family.family_id(),
            vec![pooled],
            ChainConfig::standard(0).with_chains(1),
        )
        .unwrap();
        let mut rng = rng_from(74, &[]);
        let x = [0.1, 0.1, -0.3];
        let pa = predictive(&family, &a, &x, &mut rng).unwrap();
        let pb = predictive(&family, &b, &x, &mut rng).unwrap();
        let pc = predictive(&family, &both, &x, &mut rng).unwrap();
        for c in 0..2 {
            let blended = (3.0 * pa.raw()[c] + 5.0 * pb.raw()[c]) / 8.0;
            assert!(
                (pc.raw()[c] - blended).abs() < 1e-12,
                "class {c}: {} vs {}",
                pc.raw()[c],
                blended
            );
        }
    }

    #[test]
    fn predictive_marginalizes_missing_components() {
        let family = CgmFamily::new(2, 0.0).unwrap();
        let set = prior_sample_set(&family, 4, 75);
        let mut rng = rng_from(76, &[]);
        let features = vec![FeatureValue::Observed(0.2), FeatureValue::Missing];
        let pred = predictive_missing(&family, &set, &features, &mut rng).unwrap();
        let total: f64 = pred.probabilities().iter().sum();
        assert!((total - 1.0).abs() < 1e-12);
        assert!(pred.raw().iter().all(|p| (0.0..=1.0).contains(p)));
    }

    #[test]
    fn covariate_blind_uniform_model_predicts_equal_probabilities() {
        use crate::models::LogRegFamily;
        // Zero weights make every class conditional uniform whatever x is.
        let family = LogRegFamily::new(3, 4).unwrap();
        let zeros = vec![family.point(vec![0.0; 12]).unwrap(); 5];
        let set = SampleSet::from_chains(
            family.family_id(),
            vec![zeros],
            ChainConfig::standard(0).with_chains(1),
        )
        .unwrap();
        let mut rng = rng_from(81, &[]);
        let pred = predictive(&family, &set, &[2.0, -1.0, 0.5], &mut rng).unwrap();
        for &p in pred.probabilities() {
            assert!((p - 0.25).abs() < 1e-12);
        }
    }

    #[test]
    fn bootstrap_interval_attaches_to_reports() {
        let family = CgmFamily::new(2, 0.0).unwrap();
        let set = prior_sample_set(&family, 6, 82);
        let truth = family
            .point_from_means(&[vec![-1.0, 0.0], vec![1.0, 0.5]])
            .unwrap();
        let mut rng = rng_from(83, &[]);
        let test = family.simulate(&truth, 30, &mut rng).unwrap();
        let report = predictive_report(&family, &set, &test, &mut rng)
            .unwrap()
            .with_bootstrap_ci(0.95, 9)
            .unwrap();
        let ci = report.perplexity_ci().expect("interval attached");
        assert!(ci.lower <= report.perplexity());
        assert!(report.perplexity() <= ci.upper);
        assert!(ci.lower >= 1.0 - 1e-12);
    }

    #[test]
    fn clipping_floors_vanishing_probabilities() {
        let floor = probability_floor();
        let clipped = clip_and_renormalize(&[1.0, 0.0, 0.0, 0.0]);
        let total: f64 = clipped.iter().sum();
        assert!((total - 1.0).abs() < 1e-15);
        for &p in &clipped[1..] {
            assert!(p > 0.0);
            assert!((p - floor).abs() / floor < 1e-6);
        }
        assert!(clipped[0] < 1.0);
    }

    #[test]
    fn perplexity_of_uniform_predictions_is_the_class_count() {
        let rows = vec![vec![0.25; 4]; 137];
        let classes: Vec<usize> = (0..137).map(|i| i % 4).collect();
        let perp = perplexity(&classes, &rows).unwrap();
        assert!((perp - 4.0).abs() < 1e-12, "perplexity {perp}");
    }

    #[test]
    fn perplexity_of_perfect_predictions_is_one() {
        let classes = vec![2usize, 0, 1];
        let rows: Vec<Vec<f64>> = classes
            .iter()
            .map(|&c| {
                let mut row = vec![0.0; 3];
                row[c] = 1.0;
                row
            })
            .collect();
        assert_eq!(perplexity(&classes, &rows).unwrap(), 1.0);
    }

    #[test]
    fn zero_probability_on_the_true_class_is_clipped_not_infinite() {
        let perp = perplexity(&[1], &[vec![1.0, 0.0]]).unwrap();
        assert!((perp - (-PROBABILITY_FLOOR_LOG).exp()).abs() < 1e-6);
        assert!(perp.is_finite());
    }

    #[test]
    fn report_agrees_with_standalone_perplexity() {
        let family = CgmFamily::new(2, 0.0).unwrap();
        let set = prior_sample_set(&family, 6, 77);
        let mut test = Dataset::new(2, 2).unwrap();
        let mut rng = rng_from(78, &[]);
        let truth = family
            .point_from_means(&[vec![-1.0, 0.0], vec![1.0, 0.5]])
            .unwrap();
        for obs in family.simulate(&truth, 40, &mut rng).unwrap().iter() {
            test.push(obs.clone()).unwrap();
        }
        let report = predictive_report(&family, &set, &test, &mut rng).unwrap();
        assert_eq!(report.len(), 40);
        let classes: Vec<usize> = test.iter().map(|o| o.class).collect();
        let rows: Vec<Vec<f64>> = report
            .points()
            .iter()
            .map(|p| p.probabilities.clone())
            .collect();
        let standalone = perplexity(&classes, &rows).unwrap();
        assert!((report.perplexity() - standalone).abs() < 1e-12);
        assert!((report.mean_logloss().exp() - report.perplexity()).abs() < 1e-15);

        let mut csv = Vec::new();
        report.write_csv(&mut csv).unwrap();
        let text = String::from_utf8(csv).unwrap();
        let mut lines = text.lines();
        assert_eq!(lines.next().unwrap(), "point_id,true_class,p_0,p_1,logloss");
        assert_eq!(text.lines().count(), 41);
        let first = lines.next().unwrap();
        assert!(first.starts_with("0,"));
    }

    #[test]
    fn kv_output_lists_all_divergences() {
        let report = KlReport {
            k_joint: 0.5,
            k_cond: 0.2,
            margin_kl: 0.3,
            standard_errors: None,
        };
        let mut out = Vec::new();
        report.write_kv(&mut out).unwrap();
        let text = String::from_utf8(out).unwrap();
        assert!(text.contains("k_joint = 0.5"));
        assert!(text.contains("k_cond = 0.2"));
        assert!(text.contains("margin_kl = 0.3"));
        assert!(text.contains("identity_residual = 0"));
        assert!(!text.contains("k_joint_se"));
    }

    #[test]
    fn jackknife_matches_the_two_block_example() {
        assert_eq!(jackknife_se(&[0.0, 2.0]).unwrap(), 1.0);
        assert_eq!(jackknife_se(&[5.0, 5.0, 5.0, 5.0]).unwrap(), 0.0);
        assert!(matches!(jackknife_se(&[1.0]), Err(Error::Config(_))));
    }

    #[test]
    fn jackknife_tracks_the_spread_of_gaussian_blocks() {
        // 16 independent N(0,1) block values: the SE of their mean is 0.25.
        let mut rng = rng_from(79, &[]);
        let mut estimates = Vec::new();
        for _ in 0..400 {
            let blocks: Vec<f64> = (0..16)
                .map(|_| rand_distr::StandardNormal.sample(&mut rng))
                .collect();
            estimates.push(jackknife_se(&blocks).unwrap());
        }
        let mean = stable_sum(estimates.iter().copied()) / estimates.len() as f64;
        assert!((0.15..0.35).contains(&mean), "mean SE estimate {mean}");
    }

    #[test]
    fn bootstrap_interval_is_deterministic_and_sane() {
        let values = [1.0, 2.0, 3.0, 4.0, 5.0, 6.0];
        let ci = bootstrap_ci(&values, 0.95, 42).unwrap();
        let again = bootstrap_ci(&values, 0.95, 42).unwrap();
        assert_eq!(ci, again);
        assert!(ci.lower <= 3.5 && 3.5 <= ci.upper);
        assert!(ci.lower >= 1.0 && ci.upper <= 6.0);
        assert!(ci.lower < ci.upper);

        let constant = bootstrap_ci(&[2.5, 2.5, 2.5], 0.9, 1).unwrap();
        assert_eq!(constant.lower, 2.5);
        assert_eq!(constant.upper, 2.5);

        assert!(matches!(bootstrap_ci(&[], 0.95, 0), Err(Error::Config(_))));
        assert!(matches!(
            bootstrap_ci(&values, 1.0, 0),
            Err(Error::Config(_))
        ));
    }

    #[test]
    fn bootstrap_coverage_is_near_nominal() {
        // Percentile intervals on n = 10 Gaussians undercover slightly; the
        // band below is what that procedure actually delivers.
        let mut hits = 0;
        for rep in 0..300 {
            let mut rng = rng_from(80, &[rep]);
            let values: Vec<f64> = (0..10)
                .map(|_| rand_distr::StandardNormal.sample(&mut rng))
                .collect();
            let ci = bootstrap_ci(&values, 0.95, rep).unwrap();
            if ci.contains(0.0) {
                hits += 1;
            }
        }
        let coverage = hits as f64 / 300.0;
        assert!(
            (0.75..=0.99).contains(&coverage),
            "coverage {coverage} outside the expected band"
        );
    }
}
