//! Mixture of unigrams: one topic per class over bag-of-words counts.
//!
//! A document with count vector `x` under class `c` has
//! `ln p(c, x | theta) = ln pi(c) + Σ_w x_w ln beta(c, w)`; the multinomial
//! coefficient is omitted, which shifts every per-document joint by the same
//! class-independent constant and therefore changes neither conditionals nor
//! posterior shapes. Rows of `beta` and the class weights `pi` carry
//! Dirichlet priors.

use rand::RngCore;

use crate::constrain::ConstraintLayout;
use crate::data::{Dataset, Observation};
use crate::dist::{dirichlet_log_pdf, sample_categorical, sample_dirichlet, sample_multinomial};
use crate::error::{Error, Result};
use crate::family::{LogDensity, ModelFamily, ParameterPoint};
use crate::logspace::StableSum;

/// Default Dirichlet concentration on each word row of `beta`.
pub const MUM_BETA_ALPHA: f64 = 25.0;
/// Default Dirichlet concentration on the class weights `pi`.
pub const MUM_PI_ALPHA: f64 = 1.0;

/// Mixture-of-unigrams document model.
pub struct MumFamily {
    vocab: usize,
    classes: usize,
    beta_alpha: f64,
    pi_alpha: f64,
    doc_length: usize,
    id: String,
    layout: ConstraintLayout,
}

impl MumFamily {
    pub fn new(vocab: usize, classes: usize) -> Result<Self> {
        Self::with_hyperparameters(vocab, classes, MUM_BETA_ALPHA, MUM_PI_ALPHA)
    }

    pub fn with_hyperparameters(
        vocab: usize,
        classes: usize,
        beta_alpha: f64,
        pi_alpha: f64,
    ) -> Result<Self> {
        if vocab < 2 {
            return Err(Error::Config("vocabulary needs at least two words".into()));
        }
        if classes < 2 {
            return Err(Error::Config("mixture needs at least two classes".into()));
        }
        if beta_alpha <= 0.0 || pi_alpha <= 0.0 {
            return Err(Error::Config("Dirichlet concentrations must be positive".into()));
        }
        let id = format!("mum[w={vocab},m={classes}]");
        let mut layout = ConstraintLayout::new();
        for c in 0..classes {
            layout = layout.simplex(&format!("beta_{c}"), vocab);
        }
        layout = layout.simplex("pi", classes);
        Ok(MumFamily {
            vocab,
            classes,
            beta_alpha,
            pi_alpha,
            doc_length: 50,
            id,
            layout,
        })
    }

    /// Sets the document length used by [`ModelFamily::simulate`].
    pub fn with_doc_length(mut self, doc_length: usize) -> Self {
        self.doc_length = doc_length;
        self
    }

    pub fn vocab(&self) -> usize {
        self.vocab
    }

    /// Builds the parameter point for explicit word rows and class weights.
    /// Entries must be positive; only ratios matter.
    pub fn point_from_probs(&self, beta: &[Vec<f64>], pi: &[f64]) -> Result<ParameterPoint> {
        if beta.len() != self.classes {
            return Err(Error::DimensionMismatch {
                expected: self.classes,
                got: beta.len(),
            });
        }
        let mut blocks: Vec<Vec<f64>> = beta.to_vec();
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

    /// Draws a corpus of `n_docs` documents with `words_per_doc` words each.
    pub fn simulate_corpus(
        &self,
        theta: &ParameterPoint,
        n_docs: usize,
        words_per_doc: usize,
        rng: &mut dyn RngCore,
    ) -> Result<Dataset> {
        self.check_theta(theta)?;
        let constrained = self.layout.to_constrained(theta.values());
        let pi = constrained.named("pi").to_vec();
        let mut ds = Dataset::new(self.classes, self.vocab)?;
        for _ in 0..n_docs {
            let class = sample_categorical(rng, &pi);
            let beta = constrained.named(&format!("beta_{class}"));
            let counts = sample_multinomial(rng, words_per_doc, beta);
            let features: Vec<f64> = counts.iter().map(|&c| c as f64).collect();
            ds.push(Observation::observed(class, &features))?;
        }
        Ok(ds)
    }
}

impl ModelFamily for MumFamily {
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
        let beta_alphas = vec![self.beta_alpha; self.vocab];
        for c in 0..self.classes {
            value.add(dirichlet_log_pdf(
                &beta_alphas,
                constrained.named(&format!("beta_{c}")),
            ));
        }
        let pi_alphas = vec![self.pi_alpha; self.classes];
        value.add(dirichlet_log_pdf(&pi_alphas, constrained.named("pi")));
        value.add(self.layout.log_jacobian(theta.values()));
        Ok(LogDensity::normalized(value.value()))
    }

    fn sample_prior(&self, rng: &mut dyn RngCore) -> ParameterPoint {
        let beta_alphas = vec![self.beta_alpha; self.vocab];
        let mut blocks: Vec<Vec<f64>> = (0..self.classes)
            .map(|_| sample_dirichlet(rng, &beta_alphas))
            .collect();
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
        _rng: &mut dyn RngCore,
    ) -> Result<LogDensity> {
        self.check_class(class)?;
        self.check_theta(theta)?;
        self.validate_counts(x)?;
        let constrained = self.layout.to_constrained(theta.values());
        let pi = constrained.named("pi");
        let beta = constrained.named(&format!("beta_{class}"));
        let mut sum = StableSum::new();
        sum.add(pi[class].ln());
        for (&count, &prob) in x.iter().zip(beta) {
            if count > 0.0 {
                sum.add(count * prob.ln());
            }
        }
        Ok(LogDensity::normalized(sum.value()))
    }

    fn simulate(&self, theta: &ParameterPoint, n: usize, rng: &mut dyn RngCore) -> Result<Dataset> {
        self.simulate_corpus(theta, n, self.doc_length, rng)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::seeding::rng_from;

    fn two_by_two() -> MumFamily {
        MumFamily::new(2, 2).unwrap()
    }

    #[test]
    fn empty_document_reduces_to_class_weight() {
        let fam = two_by_two();
        let theta = fam
            .point_from_probs(&[vec![0.5, 0.5], vec![0.5, 0.5]], &[0.25, 0.75])
            .unwrap();
        let mut rng = rng_from(0, &[]);
        let got = fam.log_joint(0, &[0.0, 0.0], &theta, &mut rng).unwrap().value();
        assert!((got - 0.25f64.ln()).abs() < 1e-12);
    }

    #[test]
    fn counts_weight_log_probabilities() {
        // pi(0) = 0.25, beta uniform over two words, counts (2, 2):
        // ln 0.25 + 4 ln 0.5.
        let fam = two_by_two();
        let theta = fam
            .point_from_probs(&[vec![0.5, 0.5], vec![0.5, 0.5]], &[0.25, 0.75])
            .unwrap();
        let mut rng = rng_from(0, &[]);
        let got = fam.log_joint(0, &[2.0, 2.0], &theta, &mut rng).unwrap().value();
        let expected = 0.25f64.ln() + 4.0 * 0.5f64.ln();
        assert!((got - expected).abs() < 1e-12);
    }

    #[test]
    fn uniform_word_rows_make_conditionals_class_weights() {
        let fam = two_by_two();
        let theta = fam
            .point_from_probs(&[vec![0.5, 0.5], vec![0.5, 0.5]], &[0.3, 0.7])
            .unwrap();
        let mut rng = rng_from(0, &[]);
        let got = fam
            .log_conditional(1, &[3.0, 1.0], &theta, &mut rng)
            .unwrap()
            .value();
        assert!((got - 0.7f64.ln()).abs() < 1e-12);
    }

    #[test]
    fn negative_or_fractional_counts_are_usage_errors() {
        let fam = two_by_two();
        let theta = fam
            .point_from_probs(&[vec![0.5, 0.5], vec![0.5, 0.5]], &[0.5, 0.5])
            .unwrap();
        let mut rng = rng_from(0, &[]);
        assert!(fam.log_joint(0, &[-1.0, 0.0], &theta, &mut rng).is_err());
        assert!(fam.log_joint(0, &[0.5, 0.0], &theta, &mut rng).is_err());
    }

    #[test]
    fn conditionals_depend_only_on_normalized_rows() {
        // Build the same family parameters from an unnormalized positive
        // table and a globally scaled copy: conditionals agree.
        let fam = MumFamily::new(3, 2).unwrap();
        let raw = [vec![4.0, 1.0, 5.0], vec![2.0, 2.0, 6.0]];
        let scaled: Vec<Vec<f64>> = raw.iter().map(|r| r.iter().map(|v| v * 3.5).collect()).collect();
        let theta_a = fam.point_from_probs(&raw, &[1.0, 1.0]).unwrap();
        let theta_b = fam.point_from_probs(&scaled, &[2.0, 2.0]).unwrap();
        let mut rng = rng_from(0, &[]);
        let x = [2.0, 0.0, 3.0];
        for c in 0..2 {
            let a = fam.log_conditional(c, &x, &theta_a, &mut rng).unwrap().value();
            let b = fam.log_conditional(c, &x, &theta_b, &mut rng).unwrap().value();
            assert!((a - b).abs() < 1e-10);
        }
    }

    #[test]
    fn corpus_simulation_tracks_word_rows() {
        let fam = two_by_two();
        let theta = fam
            .point_from_probs(&[vec![0.9, 0.1], vec![0.1, 0.9]], &[0.5, 0.5])
            .unwrap();
        let mut rng = rng_from(51, &[1]);
        let docs = 400;
        let words = 50;
        let ds = fam.simulate_corpus(&theta, docs, words, &mut rng).unwrap();
        assert_eq!(ds.len(), docs);
        let mut word0_class0 = 0.0;
        let mut total_class0 = 0.0;
        for obs in ds.iter() {
            let x = obs.dense_features().unwrap();
            assert_eq!(x.iter().sum::<f64>() as usize, words);
            if obs.class == 0 {
                word0_class0 += x[0];
                total_class0 += words as f64;
            }
        }
        let freq = word0_class0 / total_class0;
        let sd = (0.9f64 * 0.1 / total_class0).sqrt();
        assert!((freq - 0.9).abs() < 4.0 * sd, "{freq}");
    }

    #[test]
    fn zero_length_documents_simulate_as_zero_vectors() {
        let fam = two_by_two();
        let theta = fam
            .point_from_probs(&[vec![0.5, 0.5], vec![0.5, 0.5]], &[0.5, 0.5])
            .unwrap();
        let mut rng = rng_from(52, &[2]);
        let ds = fam.simulate_corpus(&theta, 5, 0, &mut rng).unwrap();
        for obs in ds.iter() {
            assert_eq!(obs.dense_features().unwrap(), vec![0.0, 0.0]);
        }
    }

    #[test]
    fn prior_draws_have_finite_density() {
        let fam = MumFamily::new(4, 3).unwrap();
        let mut rng = rng_from(53, &[3]);
        for _ in 0..20 {
            let theta = fam.sample_prior(&mut rng);
            assert!(fam.log_prior(&theta).unwrap().value().is_finite());
        }
    }
}
