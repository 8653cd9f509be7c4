//! Constrained two-component Gaussian mixture.
//!
//! Each class-by-dimension cell is a Gaussian whose standard deviation is
//! tied to its mean through `sigma = slope * mu + 2`, so the family is
//! deliberately misspecified whenever `slope != 0`. Class weights are fixed
//! at one half; the free parameters are the `2 * dim` means with independent
//! Gaussian priors.

use rand::{Rng, RngCore};
use rand_distr::{Distribution, StandardNormal};

use crate::constrain::ConstraintLayout;
use crate::data::{Dataset, FeatureValue, Observation};
use crate::dist::normal_log_pdf;
use crate::error::{Error, Result};
use crate::family::{LogDensity, ModelFamily, ParameterPoint};
use crate::logspace::StableSum;

/// Default prior mean and standard deviation for every mean parameter.
pub const CGM_PRIOR_MEAN: f64 = 7.0;
pub const CGM_PRIOR_SD: f64 = 7.0;
/// Standard deviations at or below this floor are rejected as invalid.
pub const CGM_SIGMA_FLOOR: f64 = 1e-6;

/// Two-component diagonal Gaussian mixture with mean-tied deviations.
pub struct CgmFamily {
    dim: usize,
    slope: f64,
    prior_mean: f64,
    prior_sd: f64,
    id: String,
    layout: ConstraintLayout,
}

impl CgmFamily {
    /// A family over `dim`-dimensional features with deviation slope `slope`.
    pub fn new(dim: usize, slope: f64) -> Result<Self> {
        Self::with_prior(dim, slope, CGM_PRIOR_MEAN, CGM_PRIOR_SD)
    }

    pub fn with_prior(dim: usize, slope: f64, prior_mean: f64, prior_sd: f64) -> Result<Self> {
        if dim == 0 {
            return Err(Error::Config("feature dimension must be positive".into()));
        }
        if !slope.is_finite() {
            return Err(Error::Config("deviation slope must be finite".into()));
        }
        if prior_sd <= 0.0 {
            return Err(Error::Config("prior standard deviation must be positive".into()));
        }
        let id = format!("cgm[d={dim},k={slope}]");
        let layout = ConstraintLayout::new().identity("means", 2 * dim);
        Ok(CgmFamily {
            dim,
            slope,
            prior_mean,
            prior_sd,
            id,
            layout,
        })
    }

    pub fn slope(&self) -> f64 {
        self.slope
    }

    /// The deviation tied to a mean: `slope * mu + 2`.
    pub fn sigma(&self, mu: f64) -> f64 {
        self.slope * mu + 2.0
    }

    fn mu(&self, theta: &ParameterPoint, class: usize, dim: usize) -> f64 {
        theta.values()[class * self.dim + dim]
    }

    /// True when every implied deviation is above the floor. Parameters
    /// violating this describe no distribution, so priors and joints treat
    /// them as zero-probability.
    pub fn sigmas_valid(&self, theta: &ParameterPoint) -> bool {
        theta.values().iter().all(|&mu| self.sigma(mu) > CGM_SIGMA_FLOOR)
    }

    /// Builds the parameter point for explicit per-class mean vectors.
    pub fn point_from_means(&self, means: &[Vec<f64>; 2]) -> Result<ParameterPoint> {
        if means[0].len() != self.dim || means[1].len() != self.dim {
            return Err(Error::DimensionMismatch {
                expected: self.dim,
                got: means[0].len().max(means[1].len()),
            });
        }
        let mut values = means[0].clone();
        values.extend_from_slice(&means[1]);
        self.point(values)
    }

    /// Shared kernel: `ln(1/2) + Σ_d ln N(x_d; mu_{c,d}, sigma_{c,d}^2)` over
    /// the observed dimensions, `-inf` for invalid deviations.
    fn log_joint_observed(
        &self,
        class: usize,
        x: &[(usize, f64)],
        theta: &ParameterPoint,
    ) -> f64 {
        if !self.sigmas_valid(theta) {
            return f64::NEG_INFINITY;
        }
        let mut sum = StableSum::new();
        sum.add(0.5f64.ln());
        for &(dim, v) in x {
            let mu = self.mu(theta, class, dim);
            sum.add(normal_log_pdf(v, mu, self.sigma(mu)));
        }
        sum.value()
    }
}

impl ModelFamily for CgmFamily {
    fn family_id(&self) -> &str {
        &self.id
    }

    fn num_classes(&self) -> usize {
        2
    }

    fn feature_dim(&self) -> usize {
        self.dim
    }

    fn layout(&self) -> &ConstraintLayout {
        &self.layout
    }

    /// Independent `N(prior_mean, prior_sd^2)` on every mean, restricted to
    /// the support where all implied deviations are valid.
    fn log_prior(&self, theta: &ParameterPoint) -> Result<LogDensity> {
        self.check_theta(theta)?;
        if !self.sigmas_valid(theta) {
            return Ok(LogDensity::unnormalized(f64::NEG_INFINITY));
        }
        let mut sum = StableSum::new();
        for &mu in theta.values() {
            sum.add(normal_log_pdf(mu, self.prior_mean, self.prior_sd));
        }
        Ok(LogDensity::unnormalized(sum.value()))
    }

    fn sample_prior(&self, rng: &mut dyn RngCore) -> ParameterPoint {
        let values: Vec<f64> = (0..2 * self.dim)
            .map(|_| {
                let z: f64 = StandardNormal.sample(rng);
                self.prior_mean + self.prior_sd * z
            })
            .collect();
        self.point(values).expect("Gaussian draws are finite")
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
        let indexed: Vec<(usize, f64)> = x.iter().copied().enumerate().collect();
        Ok(LogDensity::normalized(self.log_joint_observed(class, &indexed, theta)))
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
        if x.len() != self.dim {
            return Err(Error::DimensionMismatch {
                expected: self.dim,
                got: x.len(),
            });
        }
        // Diagonal covariance: the marginal over observed components is the
        // product of their per-dimension factors.
        let observed: Vec<(usize, f64)> = x
            .iter()
            .enumerate()
            .filter_map(|(d, f)| f.observed().map(|v| (d, v)))
            .collect();
        Ok(LogDensity::normalized(self.log_joint_observed(class, &observed, theta)))
    }

    fn simulate(&self, theta: &ParameterPoint, n: usize, rng: &mut dyn RngCore) -> Result<Dataset> {
        self.check_theta(theta)?;
        if !self.sigmas_valid(theta) {
            return Err(Error::Config(
                "cannot simulate: parameters imply non-positive deviations".into(),
            ));
        }
        let mut ds = Dataset::new(2, self.dim)?;
        for _ in 0..n {
            let class = usize::from(rng.random::<f64>() < 0.5);
            let mut x = Vec::with_capacity(self.dim);
            for d in 0..self.dim {
                let mu = self.mu(theta, class, d);
                let z: f64 = StandardNormal.sample(rng);
                x.push(mu + self.sigma(mu) * z);
            }
            ds.push(Observation::observed(class, &x))?;
        }
        Ok(ds)
    }

    fn simulate_missing_components(
        &self,
        class: usize,
        x: &[FeatureValue],
        theta: &ParameterPoint,
        rng: &mut dyn RngCore,
    ) -> Result<Vec<f64>> {
        self.check_class(class)?;
        self.check_theta(theta)?;
        if x.len() != self.dim {
            return Err(Error::DimensionMismatch {
                expected: self.dim,
                got: x.len(),
            });
        }
        if !self.sigmas_valid(theta) {
            return Err(Error::Config(
                "cannot impute: parameters imply non-positive deviations".into(),
            ));
        }
        // Diagonal covariance: conditional on the class, each missing
        // component is independent of the observed ones.
        let mut out = Vec::with_capacity(self.dim);
        for (d, f) in x.iter().enumerate() {
            match f.observed() {
                Some(v) => out.push(v),
                None => {
                    let mu = self.mu(theta, class, d);
                    let z: f64 = StandardNormal.sample(rng);
                    out.push(mu + self.sigma(mu) * z);
                }
            }
        }
        Ok(out)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::seeding::rng_from;

    #[test]
    fn zero_slope_fixes_sigma_at_two() {
        let fam = CgmFamily::new(3, 0.0).unwrap();
        assert_eq!(fam.sigma(-100.0), 2.0);
        assert_eq!(fam.sigma(31.7), 2.0);
    }

    #[test]
    fn joint_at_mode_with_zero_slope() {
        // D = 1, slope 0, mu = x: ln(1/2) + ln(1/(2 sqrt(2 pi))).
        let fam = CgmFamily::new(1, 0.0).unwrap();
        let theta = fam.point_from_means(&[vec![4.0], vec![1.0]]).unwrap();
        let mut rng = rng_from(0, &[]);
        let expected = 0.5f64.ln() + (1.0 / (2.0 * (2.0 * std::f64::consts::PI).sqrt())).ln();
        let got = fam.log_joint(0, &[4.0], &theta, &mut rng).unwrap().value();
        assert!((got - expected).abs() < 1e-13);
    }

    #[test]
    fn joint_with_unit_slope_uses_tied_sigma() {
        // D = 1, slope 1, mu = 3 -> sigma = 5; evaluate at x = 3.
        let fam = CgmFamily::new(1, 1.0).unwrap();
        let theta = fam.point_from_means(&[vec![3.0], vec![3.0]]).unwrap();
        let mut rng = rng_from(0, &[]);
        let expected = 0.5f64.ln() + normal_log_pdf(3.0, 3.0, 5.0);
        let got = fam.log_joint(0, &[3.0], &theta, &mut rng).unwrap().value();
        assert!((got - expected).abs() < 1e-13);
    }

    #[test]
    fn margin_integrates_to_one() {
        // Quadrature cross-check that the mixture density is normalized.
        let fam = CgmFamily::new(1, 1.0).unwrap();
        let theta = fam.point_from_means(&[vec![2.0], vec![6.0]]).unwrap();
        let mut rng = rng_from(0, &[]);
        let (lo, hi, steps) = (-80.0, 120.0, 20_000);
        let h = (hi - lo) / steps as f64;
        let mut total = 0.0;
        for i in 0..steps {
            let x = lo + (i as f64 + 0.5) * h;
            total += fam.log_margin(&[x], &theta, &mut rng).unwrap().value().exp() * h;
        }
        assert!((total - 1.0).abs() < 1e-6, "integral {total}");
    }

    #[test]
    fn invalid_sigma_rejects_parameters() {
        // slope 2, mu = -1.5 -> sigma = -1: invalid.
        let fam = CgmFamily::new(1, 2.0).unwrap();
        let theta = fam.point_from_means(&[vec![-1.5], vec![3.0]]).unwrap();
        let mut rng = rng_from(0, &[]);
        assert_eq!(
            fam.log_joint(0, &[0.0], &theta, &mut rng).unwrap().value(),
            f64::NEG_INFINITY
        );
        assert_eq!(
            fam.log_joint(1, &[0.0], &theta, &mut rng).unwrap().value(),
            f64::NEG_INFINITY
        );
        assert_eq!(fam.log_prior(&theta).unwrap().value(), f64::NEG_INFINITY);
        assert!(fam.simulate(&theta, 1, &mut rng).is_err());
    }

    #[test]
    fn zero_slope_conditional_matches_direct_softmax_form() {
        // With shared sigma = 2 the conditional is a softmax of quadratic
        // scores; compute it directly as an independent oracle.
        let fam = CgmFamily::new(2, 0.0).unwrap();
        let theta = fam
            .point_from_means(&[vec![5.0, 9.0], vec![9.0, 9.0]])
            .unwrap();
        let mut rng = rng_from(0, &[]);
        let x = [6.0, 8.5];
        let score = |means: &[f64]| -> f64 {
            x.iter()
                .zip(means)
                .map(|(&v, &m)| -((v - m) * (v - m)) / (2.0 * 4.0))
                .sum()
        };
        let s0 = score(&[5.0, 9.0]);
        let s1 = score(&[9.0, 9.0]);
        let expected0 = s0 - crate::logspace::log_sum_exp(&[s0, s1]);
        let got0 = fam.log_conditional(0, &x, &theta, &mut rng).unwrap().value();
        assert!((got0 - expected0).abs() < 1e-10);
    }

    #[test]
    fn missing_marginal_agrees_with_reduced_model() {
        // Marginalizing dimension 1 of a 2-D model equals a 1-D model on
        // dimension 0 alone.
        let fam2 = CgmFamily::new(2, 0.5).unwrap();
        let fam1 = CgmFamily::new(1, 0.5).unwrap();
        let theta2 = fam2
            .point_from_means(&[vec![3.0, 4.0], vec![6.0, 1.0]])
            .unwrap();
        let theta1 = fam1.point_from_means(&[vec![3.0], vec![6.0]]).unwrap();
        let mut rng = rng_from(0, &[]);
        let x = [FeatureValue::Observed(2.5), FeatureValue::Missing];
        for class in 0..2 {
            let got = fam2
                .log_joint_marginal_missing(class, &x, &theta2, &mut rng)
                .unwrap()
                .value();
            let expected = fam1
                .log_joint(class, &[2.5], &theta1, &mut rng)
                .unwrap()
                .value();
            assert!((got - expected).abs() < 1e-12);
        }
    }

    #[test]
    fn fully_observed_marginal_is_bitwise_equal_to_joint() {
        let fam = CgmFamily::new(3, 1.0).unwrap();
        let theta = fam
            .point_from_means(&[vec![1.0, 2.0, 3.0], vec![4.0, 5.0, 6.0]])
            .unwrap();
        let mut rng = rng_from(0, &[]);
        let dense = [0.3, -1.2, 7.7];
        let wrapped: Vec<FeatureValue> = dense.iter().map(|&v| FeatureValue::Observed(v)).collect();
        for class in 0..2 {
            let a = fam.log_joint(class, &dense, &theta, &mut rng).unwrap().value();
            let b = fam
                .log_joint_marginal_missing(class, &wrapped, &theta, &mut rng)
                .unwrap()
                .value();
            assert_eq!(a, b);
        }
    }

    #[test]
    fn conditional_imputation_matches_component_moments() {
        let fam = CgmFamily::new(2, 0.0).unwrap();
        let theta = fam
            .point_from_means(&[vec![5.0, 1.0], vec![9.0, 1.0]])
            .unwrap();
        let mut rng = rng_from(31, &[4]);
        let x = [FeatureValue::Missing, FeatureValue::Observed(1.25)];
        let n = 10_000;
        let mut sum = 0.0;
        let mut sumsq = 0.0;
        for _ in 0..n {
            let filled = fam
                .simulate_missing_components(1, &x, &theta, &mut rng)
                .unwrap();
            assert_eq!(filled[1], 1.25); // observed entries preserved
            sum += filled[0];
            sumsq += filled[0] * filled[0];
        }
        let mean = sum / n as f64;
        let var = sumsq / n as f64 - mean * mean;
        assert!((mean - 9.0).abs() < 4.0 * 2.0 / (n as f64).sqrt(), "{mean}");
        assert!((var - 4.0).abs() < 0.3, "{var}");
    }

    #[test]
    fn prior_mode_is_centered() {
        let fam = CgmFamily::new(1, 0.0).unwrap();
        let at_prior_mean = fam
            .log_prior(&fam.point(vec![7.0, 7.0]).unwrap())
            .unwrap()
            .value();
        let off = fam
            .log_prior(&fam.point(vec![0.0, 14.0]).unwrap())
            .unwrap()
            .value();
        assert!(at_prior_mean > off);
        let expected = 2.0 * normal_log_pdf(7.0, 7.0, 7.0);
        assert!((at_prior_mean - expected).abs() < 1e-12);
    }
}
