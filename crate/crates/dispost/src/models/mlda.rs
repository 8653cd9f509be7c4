//! Mixture of latent Dirichlet allocation document models.
//!
//! Each class `c` selects a Dirichlet concentration row `alpha(c)` over `T`
//! shared topics; a document draws topic proportions `pi_s ~ Dir(alpha(c))`
//! and each word token mixes the topic rows of `beta`. The document
//! likelihood integrates `pi_s` out; that integral has no closed form for
//! `T > 1`, so it is estimated by Monte Carlo with a jackknife stopping
//! rule. The multinomial coefficient is omitted exactly as in the
//! mixture-of-unigrams model.

use std::sync::atomic::{AtomicU64, Ordering};

use rand::RngCore;

use crate::constrain::ConstraintLayout;
use crate::data::{Dataset, Observation};
use crate::dist::{dirichlet_log_pdf, sample_categorical, sample_dirichlet};
use crate::error::{Error, Result};
use crate::family::{LogDensity, ModelFamily, ParameterPoint};
use crate::logspace::{log_sum_exp, StableSum};

/// Default Dirichlet concentration on each topic-word row of `beta`.
pub const MLDA_BETA_ALPHA: f64 = 2.0;
/// Default Dirichlet concentration on each class row of `alpha`.
pub const MLDA_ALPHA_ALPHA: f64 = 1.0;
/// Default Dirichlet concentration on the class weights `pi_c`.
pub const MLDA_PI_ALPHA: f64 = 50.0;
/// Monte Carlo batch size for document-likelihood integration.
pub const MLDA_MC_BATCH: usize = 256;
/// Hard cap on Monte Carlo draws per document-likelihood evaluation.
pub const MLDA_MC_CAP: usize = 65_536;
/// Number of equal jackknife blocks used by the stopping rule.
pub const MLDA_JACKKNIFE_BLOCKS: usize = 16;
/// Stop when the jackknife relative standard error of the integral drops
/// below this fraction of the estimate.
pub const MLDA_MC_RELATIVE_TOLERANCE: f64 = 0.05;

/// Convergence record for one Monte Carlo document-likelihood estimate.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct McDiagnostics {
    /// Jackknife standard error of the integral estimate divided by the
    /// estimate; for small values this matches the standard error of the
    /// log estimate.
    pub relative_se: f64,
    /// Monte Carlo draws consumed.
    pub draws: usize,
    /// False when the draw cap was reached before the tolerance.
    pub converged: bool,
}

impl McDiagnostics {
    fn exact() -> Self {
        McDiagnostics {
            relative_se: 0.0,
            draws: 0,
            converged: true,
        }
    }
}

/// Mixture-of-LDA document model.
pub struct MldaFamily {
    vocab: usize,
    topics: usize,
    classes: usize,
    beta_alpha: f64,
    alpha_alpha: f64,
    pi_alpha: f64,
    doc_length: usize,
    id: String,
    layout: ConstraintLayout,
    /// Count of evaluations that hit the draw cap without converging; a
    /// diagnostic surfaced by the harness, never silently dropped.
    cap_hits: AtomicU64,
}

impl MldaFamily {
    pub fn new(vocab: usize, topics: usize, classes: usize) -> Result<Self> {
        Self::with_hyperparameters(
            vocab,
            topics,
            classes,
            MLDA_BETA_ALPHA,
            MLDA_ALPHA_ALPHA,
            MLDA_PI_ALPHA,
        )
    }

    pub fn with_hyperparameters(
        vocab: usize,
        topics: usize,
        classes: usize,
        beta_alpha: f64,
        alpha_alpha: f64,
        pi_alpha: f64,
    ) -> Result<Self> {
        if vocab < 2 {
            return Err(Error::Config("vocabulary needs at least two words".into()));
        }
        if topics == 0 {
            return Err(Error::Config("topic count must be positive".into()));
        }
        if classes < 2 {
            return Err(Error::Config("mixture needs at least two classes".into()));
        }
        if beta_alpha <= 0.0 || alpha_alpha <= 0.0 || pi_alpha <= 0.0 {
            return Err(Error::Config("Dirichlet concentrations must be positive".into()));
        }
        let id = format!("mlda[w={vocab},t={topics},c={classes}]");
        let mut layout = ConstraintLayout::new();
        for c in 0..classes {
            layout = layout.simplex(&format!("alpha_{c}"), topics);
        }
        for t in 0..topics {
            layout = layout.simplex(&format!("beta_{t}"), vocab);
        }
        layout = layout.simplex("pi", classes);
        Ok(MldaFamily {
            vocab,
            topics,
            classes,
            beta_alpha,
            alpha_alpha,
            pi_alpha,
            doc_length: 50,
            id,
            layout,
            cap_hits: AtomicU64::new(0),
        })
    }

    /// Sets the document length used by [`ModelFamily::simulate`].
    pub fn with_doc_length(mut self, doc_length: usize) -> Self {
        self.doc_length = doc_length;
        self
    }

    pub fn topics(&self) -> usize {
        self.topics
    }

    /// Evaluations that reached the draw cap without meeting the tolerance
    /// since construction.
    pub fn cap_hit_count(&self) -> u64 {
        self.cap_hits.load(Ordering::Relaxed)
    }

    /// Builds the parameter point from explicit concentration rows, topic
    /// rows, and class weights. Simplex entries must be positive.
    pub fn point_from_probs(
        &self,
        alpha: &[Vec<f64>],
        beta: &[Vec<f64>],
        pi: &[f64],
    ) -> Result<ParameterPoint> {
        if alpha.len() != self.classes {
            return Err(Error::DimensionMismatch {
                expected: self.classes,
                got: alpha.len(),
            });
        }
        if beta.len() != self.topics {
            return Err(Error::DimensionMismatch {
                expected: self.topics,
                got: beta.len(),
            });
        }
        let mut blocks: Vec<Vec<f64>> = alpha.to_vec();
        blocks.extend(beta.iter().cloned());
        blocks.push(pi.to_vec());
        let u = self.layout.from_constrained(&blocks)?;
        self.point(u)
    }

    fn validate_counts(&self, x: &[f64]) -> Result<()> {
        self.check_features(x)?;
        for &v in x {
            if v < 0.0 || v.fract() != 0.0 || !v.is_finite() {
                return Err(Error::Config(format!(
                    "word counts must be nonnegative integers, got {v}"
                )));
            }
        }
        Ok(())
    }

    /// `ln p(c, x | theta)` together with Monte Carlo convergence
    /// diagnostics.
    ///
    /// Draws arrive in batches of [`MLDA_MC_BATCH`]; after each batch the
    /// integral's jackknife relative standard error over
    /// [`MLDA_JACKKNIFE_BLOCKS`] equal blocks is compared against
    /// [`MLDA_MC_RELATIVE_TOLERANCE`]. Hitting [`MLDA_MC_CAP`] first yields a
    /// flagged (non-converged) result rather than an error.
    pub fn log_joint_mc(
        &self,
        class: usize,
        x: &[f64],
        theta: &ParameterPoint,
        rng: &mut dyn RngCore,
    ) -> Result<(LogDensity, McDiagnostics)> {
        self.check_class(class)?;
        self.check_theta(theta)?;
        self.validate_counts(x)?;
        let constrained = self.layout.to_constrained(theta.values());
        let pi = constrained.named("pi");
        let log_pi_c = pi[class].ln();

        let words: Vec<(usize, f64)> = x
            .iter()
            .enumerate()
            .filter(|(_, &count)| count > 0.0)
            .map(|(w, &count)| (w, count))
            .collect();
        // An empty document's likelihood is exactly the class weight.
        if words.is_empty() {
            return Ok((LogDensity::normalized(log_pi_c), McDiagnostics::exact()));
        }

        let log_beta: Vec<Vec<f64>> = (0..self.topics)
            .map(|t| {
                constrained
                    .named(&format!("beta_{t}"))
                    .iter()
                    .map(|&p| p.ln())
                    .collect()
            })
            .collect();

        // With a single topic the integral collapses: pi_s is always (1.0).
        if self.topics == 1 {
            let mut sum = StableSum::new();
            sum.add(log_pi_c);
            for &(w, count) in &words {
                sum.add(count * log_beta[0][w]);
            }
            return Ok((LogDensity::normalized(sum.value()), McDiagnostics::exact()));
        }

        let alpha = constrained.named(&format!("alpha_{class}")).to_vec();
        let mut draw_logs: Vec<f64> = Vec::with_capacity(MLDA_MC_BATCH);
        let mut term = vec![0.0f64; self.topics];
        loop {
            for _ in 0..MLDA_MC_BATCH {
                let pi_s = sample_dirichlet(rng, &alpha);
                let log_pi_s: Vec<f64> = pi_s.iter().map(|&p| p.ln()).collect();
                let mut doc_log = 0.0;
                for &(w, count) in &words {
                    for t in 0..self.topics {
                        term[t] = log_pi_s[t] + log_beta[t][w];
                    }
                    doc_log += count * log_sum_exp(&term);
                }
                draw_logs.push(doc_log);
            }
            let (log_mean, relative_se) = jackknife_log_mean(&draw_logs, MLDA_JACKKNIFE_BLOCKS);
            if relative_se < MLDA_MC_RELATIVE_TOLERANCE {
                let diag = McDiagnostics {
                    relative_se,
                    draws: draw_logs.len(),
                    converged: true,
                };
                return Ok((LogDensity::normalized(log_pi_c + log_mean), diag));
            }
            if draw_logs.len() >= MLDA_MC_CAP {
                self.cap_hits.fetch_add(1, Ordering::Relaxed);
                let diag = McDiagnostics {
                    relative_se,
                    draws: draw_logs.len(),
                    converged: false,
                };
                return Ok((LogDensity::normalized(log_pi_c + log_mean), diag));
            }
        }
    }
}

/// Log of the sample mean of `exp(values)` plus the jackknife relative
/// standard error of that mean over `blocks` equal contiguous blocks.
fn jackknife_log_mean(values: &[f64], blocks: usize) -> (f64, f64) {
    debug_assert!(values.len() % blocks == 0);
    let max = values.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
    if max == f64::NEG_INFINITY {
        return (f64::NEG_INFINITY, 0.0);
    }
    let block_len = values.len() / blocks;
    let mut block_sums = vec![0.0f64; blocks];
    for (i, &v) in values.iter().enumerate() {
        block_sums[i / block_len] += (v - max).exp();
    }
    let total: f64 = block_sums.iter().sum();
    let log_mean = max + (total / values.len() as f64).ln();
    // Leave-one-block-out means relative to the full mean.
    let b = blocks as f64;
    let mut ratios = Vec::with_capacity(blocks);
    for &s in &block_sums {
        let loo = (total - s) / (values.len() - block_len) as f64;
        ratios.push(loo / (total / values.len() as f64));
    }
    let mean_ratio: f64 = ratios.iter().sum::<f64>() / b;
    let ss: f64 = ratios.iter().map(|r| (r - mean_ratio) * (r - mean_ratio)).sum();
    let relative_se = ((b - 1.0) / b * ss).sqrt();
    (log_mean, relative_se)
}

impl ModelFamily for MldaFamily {
    fn family_id(&self) -> &str {
        &self.id
    }

    fn num_classes(&self) -> usize {
        self.classes
    }

    fn feature_dim(&self) -> usize {
        self.vocab
    }

    fn layout(&self) -> &ConstraintLayout {
        &self.layout
    }

    fn log_prior(&self, theta: &ParameterPoint) -> Result<LogDensity> {
        self.check_theta(theta)?;
        let constrained = self.layout.to_constrained(theta.values());
        let mut value = StableSum::new();
        let alpha_alphas = vec![self.alpha_alpha; self.topics];
        for c in 0..self.classes {
            value.add(dirichlet_log_pdf(
                &alpha_alphas,
                constrained.named(&format!("alpha_{c}")),
            ));
        }
        let beta_alphas = vec![self.beta_alpha; self.vocab];
        for t in 0..self.topics {
            value.add(dirichlet_log_pdf(
                &beta_alphas,
                constrained.named(&format!("beta_{t}")),
            ));
        }
        let pi_alphas = vec![self.pi_alpha; self.classes];
        value.add(dirichlet_log_pdf(&pi_alphas, constrained.named("pi")));
        value.add(self.layout.log_jacobian(theta.values()));
        Ok(LogDensity::normalized(value.value()))
    }

    fn sample_prior(&self, rng: &mut dyn RngCore) -> ParameterPoint {
        let mut blocks: Vec<Vec<f64>> = Vec::with_capacity(self.classes + self.topics + 1);
        for _ in 0..self.classes {
            blocks.push(sample_dirichlet(rng, &vec![self.alpha_alpha; self.topics]));
        }
        for _ in 0..self.topics {
            blocks.push(sample_dirichlet(rng, &vec![self.beta_alpha; self.vocab]));
        }
        blocks.push(sample_dirichlet(rng, &vec![self.pi_alpha; self.classes]));
        let u = self
            .layout
            .from_constrained(&blocks)
            .expect("Dirichlet draws are strictly positive almost surely");
        self.point(u).expect("finite coordinates")
    }

    fn log_joint(
        &self,
        class: usize,
        x: &[f64],
        theta: &ParameterPoint,
        rng: &mut dyn RngCore,
    ) -> Result<LogDensity> {
        let (value, _diag) = self.log_joint_mc(class, x, theta, rng)?;
        Ok(value)
    }

    fn simulate(&self, theta: &ParameterPoint, n: usize, rng: &mut dyn RngCore) -> Result<Dataset> {
        self.check_theta(theta)?;
        let constrained = self.layout.to_constrained(theta.values());
        let pi = constrained.named("pi").to_vec();
        let alpha: Vec<Vec<f64>> = (0..self.classes)
            .map(|c| constrained.named(&format!("alpha_{c}")).to_vec())
            .collect();
        let beta: Vec<Vec<f64>> = (0..self.topics)
            .map(|t| constrained.named(&format!("beta_{t}")).to_vec())
            .collect();
        let mut ds = Dataset::new(self.classes, self.vocab)?;
        for _ in 0..n {
            let class = sample_categorical(rng, &pi);
            let pi_s = sample_dirichlet(rng, &alpha[class]);
            let mut counts = vec![0.0f64; self.vocab];
            for _ in 0..self.doc_length {
                let topic = sample_categorical(rng, &pi_s);
                let word = sample_categorical(rng, &beta[topic]);
                counts[word] += 1.0;
            }
            ds.push(Observation::observed(class, &counts))?;
        }
        Ok(ds)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::seeding::rng_from;

    fn tiny() -> MldaFamily {
        // T = 2 topics, W = 2 words, C = 2 classes.
        MldaFamily::new(2, 2, 2).unwrap()
    }

    #[test]
    fn empty_document_is_exact() {
        let fam = tiny();
        let theta = fam
            .point_from_probs(
                &[vec![0.5, 0.5], vec![0.5, 0.5]],
                &[vec![0.5, 0.5], vec![0.5, 0.5]],
                &[0.2, 0.8],
            )
            .unwrap();
        let mut rng = rng_from(0, &[]);
        let (v, diag) = fam.log_joint_mc(0, &[0.0, 0.0], &theta, &mut rng).unwrap();
        assert!((v.value() - 0.2f64.ln()).abs() < 1e-12);
        assert_eq!(diag.relative_se, 0.0);
        assert!(diag.converged);
        assert_eq!(diag.draws, 0);
    }

    #[test]
    fn single_topic_is_exact_with_zero_error() {
        let fam = MldaFamily::new(3, 1, 2).unwrap();
        let theta = fam
            .point_from_probs(
                &[vec![1.0], vec![1.0]],
                &[vec![0.2, 0.3, 0.5]],
                &[0.5, 0.5],
            )
            .unwrap();
        let mut rng = rng_from(0, &[]);
        let (v, diag) = fam.log_joint_mc(1, &[1.0, 2.0, 0.0], &theta, &mut rng).unwrap();
        let expected = 0.5f64.ln() + 0.2f64.ln() + 2.0 * 0.3f64.ln();
        assert!((v.value() - expected).abs() < 1e-12);
        assert_eq!(diag.relative_se, 0.0);
        assert!(diag.converged);
    }

    #[test]
    fn single_word_estimate_matches_dirichlet_mean() {
        // For a one-word document the integral is linear in pi_s, so it has
        // the closed form Σ_t E[pi_s(t)] beta(t, w) with
        // E[pi_s(t)] = alpha_t / Σ alpha.
        let fam = tiny();
        let alpha = [vec![0.3, 0.7], vec![0.5, 0.5]];
        let beta = [vec![0.9, 0.1], vec![0.25, 0.75]];
        let theta = fam.point_from_probs(&alpha, &beta, &[0.5, 0.5]).unwrap();
        let mut rng = rng_from(61, &[1]);
        let (v, diag) = fam.log_joint_mc(0, &[1.0, 0.0], &theta, &mut rng).unwrap();
        assert!(diag.converged);
        assert!(diag.draws >= MLDA_MC_BATCH);
        let closed_form: f64 = 0.3 * 0.9 + 0.7 * 0.25;
        let log_expected = 0.5f64.ln() + closed_form.ln();
        // Within three jackknife standard errors of the closed form.
        let tolerance = 3.0 * diag.relative_se.max(1e-4);
        assert!(
            (v.value() - log_expected).abs() < tolerance,
            "estimate {} vs {log_expected} (3 SE = {tolerance})",
            v.value()
        );
    }

    #[test]
    fn stopping_rule_terminates_below_cap_for_easy_integrands() {
        let fam = tiny();
        let theta = fam
            .point_from_probs(
                &[vec![2.0, 3.0], vec![1.0, 1.0]],
                &[vec![0.6, 0.4], vec![0.3, 0.7]],
                &[0.5, 0.5],
            )
            .unwrap();
        let mut rng = rng_from(62, &[2]);
        let (_, diag) = fam.log_joint_mc(0, &[1.0, 0.0], &theta, &mut rng).unwrap();
        assert!(diag.converged);
        assert!(diag.draws < MLDA_MC_CAP);
        assert_eq!(fam.cap_hit_count(), 0);
    }

    #[test]
    fn conditionals_normalize_within_monte_carlo_error() {
        let fam = tiny();
        let mut rng = rng_from(63, &[3]);
        let theta = fam.sample_prior(&mut rng);
        let x = [2.0, 1.0];
        let logs: Vec<f64> = (0..2)
            .map(|c| fam.log_conditional(c, &x, &theta, &mut rng).unwrap().value())
            .collect();
        let total = log_sum_exp(&logs);
        assert!(total.abs() < 0.2, "normalization {total}");
        assert!(logs.iter().all(|&l| l <= 0.0));
    }

    #[test]
    fn simulation_respects_document_length_and_classes() {
        let fam = MldaFamily::new(4, 2, 3).unwrap().with_doc_length(20);
        let mut rng = rng_from(64, &[4]);
        let theta = fam.sample_prior(&mut rng);
        let ds = fam.simulate(&theta, 30, &mut rng).unwrap();
        assert_eq!(ds.len(), 30);
        for obs in ds.iter() {
            let x = obs.dense_features().unwrap();
            assert_eq!(x.iter().sum::<f64>() as usize, 20);
            assert!(obs.class < 3);
        }
    }

    #[test]
    fn jackknife_log_mean_on_constant_values_has_zero_error() {
        let values = vec![-3.0; 64];
        let (log_mean, se) = jackknife_log_mean(&values, 16);
        assert!((log_mean + 3.0).abs() < 1e-12);
        assert!(se < 1e-12);
    }

    #[test]
    fn jackknife_log_mean_matches_direct_mean() {
        let values: Vec<f64> = (0..32).map(|i| -1.0 - 0.01 * i as f64).collect();
        let (log_mean, _) = jackknife_log_mean(&values, 16);
        let direct: f64 = values.iter().map(|&v| v.exp()).sum::<f64>() / 32.0;
        assert!((log_mean - direct.ln()).abs() < 1e-12);
    }
}
