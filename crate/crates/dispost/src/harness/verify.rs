//! Fast self-checks of the structural identities the crate relies on.
//!
//! `dispost verify` runs this battery. Each check re-derives one invariant
//! at a deliberately small scale — the full-scale versions with tight
//! sample budgets live in the integration suite — and reports the measured
//! discrepancy against its tolerance. Everything is seeded internally, so
//! the battery is deterministic and finishes in a few seconds.

use rand::RngCore;

use crate::data::{Dataset, Observation};
use crate::error::Result;
use crate::eval::{kl_report, predictive_report, KlEvaluation};
use crate::harness::grid::dataset_hash;
use crate::logspace::log_sum_exp;
use crate::missing::{mask_at_random, MissingnessSpec};
use crate::models::cgm::CgmFamily;
use crate::models::discrete::DiscreteFamily;
use crate::models::logreg::LogRegFamily;
use crate::models::toy::{TrueToyModel, TOY_DIM};
use crate::sampler::{
    run_chains, ChainConfig, PosteriorKind, PosteriorTarget, SampleSet, SampleTarget,
};
use crate::seeding::rng_from;
use crate::slice::{FixedCovariateFamily, SliceFamily};
use crate::{ModelFamily, ParameterPoint};

/// Seed of the whole battery; fixed so `verify` always runs the same checks.
pub const VERIFY_SEED: u64 = 0xD15C;

/// Outcome of one invariant check.
#[derive(Debug, Clone)]
pub struct VerifyCheck {
    pub name: &'static str,
    pub passed: bool,
    /// Measured discrepancy and its tolerance, human-readable.
    pub detail: String,
}

/// Runs every check and returns their outcomes in a fixed order.
pub fn run_verification() -> Result<Vec<VerifyCheck>> {
    Ok(vec![
        fixed_covariate_reduction()?,
        order_independence()?,
        kl_identity()?,
        sampler_vs_enumeration()?,
        masking_rate_ignorability()?,
        uniform_predictive()?,
    ])
}

fn check(name: &'static str, measured: f64, tolerance: f64) -> VerifyCheck {
    VerifyCheck {
        name,
        passed: measured < tolerance,
        detail: format!("measured {measured:.3e}, tolerance {tolerance:.0e}"),
    }
}

/// When every observation shares one covariate vector, the discriminative
/// posterior must equal the posterior of the reduced label-only model up to
/// an additive constant in log space.
fn fixed_covariate_reduction() -> Result<VerifyCheck> {
    let mut rng = rng_from(VERIFY_SEED, &[1]);
    let dim = 4;
    let covariate = vec![8.0, 6.5, 7.2, 9.1];
    let labels: Vec<usize> = (0..30).map(|i| i % 2).collect();

    let base = CgmFamily::new(dim, 0.0)?;
    let mut shared = Dataset::new(2, dim)?;
    for &c in &labels {
        shared.push(Observation::observed(c, &covariate))?;
    }
    let disc = PosteriorTarget::new(&base, &shared, PosteriorKind::Discriminative)?;

    let reduced_family = FixedCovariateFamily::new(CgmFamily::new(dim, 0.0)?, covariate.clone())?;
    let label_data = reduced_family.class_only_dataset(&labels)?;
    let reduced = PosteriorTarget::new(&reduced_family, &label_data, PosteriorKind::Joint)?;

    let mut deviation: f64 = 0.0;
    let mut offset = None;
    for _ in 0..100 {
        let values = disc.initial_point(&mut rng);
        let a = disc.log_density(&values, &mut rng)?;
        let b = reduced.log_density(&values, &mut rng)?;
        let d = a - b;
        let reference = *offset.get_or_insert(d);
        deviation = deviation.max((d - reference).abs());
    }
    Ok(check("fixed-covariate-reduction", deviation, 1e-9))
}

/// Reordering the observations must not change any posterior's density.
fn order_independence() -> Result<VerifyCheck> {
    let mut rng = rng_from(VERIFY_SEED, &[2]);
    let truth = TrueToyModel::new();
    let data = truth.simulate(&truth.theta(), 100, &mut rng)?;
    let mut order: Vec<usize> = (0..data.len()).collect();
    // Fisher-Yates with the battery's own stream.
    for i in (1..order.len()).rev() {
        let j = (rng.next_u64() % (i as u64 + 1)) as usize;
        order.swap(i, j);
    }
    let shuffled = data.permuted(&order)?;
    assert_ne!(dataset_hash(&data), dataset_hash(&shuffled));

    let family = CgmFamily::new(TOY_DIM, 0.5)?;
    let mut worst: f64 = 0.0;
    for kind in [PosteriorKind::Joint, PosteriorKind::Discriminative] {
        let original = PosteriorTarget::new(&family, &data, kind)?;
        let reordered = PosteriorTarget::new(&family, &shuffled, kind)?;
        for _ in 0..20 {
            let values = original.initial_point(&mut rng);
            let a = original.log_density(&values, &mut rng)?;
            let b = reordered.log_density(&values, &mut rng)?;
            if a.is_finite() || b.is_finite() {
                worst = worst.max((a - b).abs() / a.abs().max(1.0));
            }
        }
    }
    Ok(check("order-independence", worst, 1e-9))
}

/// The joint divergence must decompose exactly into the conditional
/// divergence plus the covariate-margin divergence, and can never fall
/// below the conditional part.
fn kl_identity() -> Result<VerifyCheck> {
    let mut rng = rng_from(VERIFY_SEED, &[3]);
    let family = DiscreteFamily::new(3, 4, 1.0)?;
    let eval = KlEvaluation::Exact { support: family.support() };
    let table = |rng: &mut dyn RngCore| -> Result<ParameterPoint> {
        let raw: Vec<f64> = (0..12)
            .map(|_| 0.05 + (rng.next_u64() % 1000) as f64 / 1000.0)
            .collect();
        let total: f64 = raw.iter().sum();
        let probs: Vec<f64> = raw.iter().map(|v| v / total).collect();
        family.point_from_table(&probs)
    };
    let mut worst_residual: f64 = 0.0;
    let mut worst_gap: f64 = 0.0;
    for _ in 0..20 {
        let truth = table(&mut rng)?;
        let model = table(&mut rng)?;
        let report = kl_report(&family, &truth, &family, &model, &eval, &mut rng)?;
        worst_residual = worst_residual.max(report.identity_residual().abs());
        worst_gap = worst_gap.max(report.k_cond - report.k_joint);
    }
    // A positive gap would mean the joint divergence fell below the
    // conditional one; fold it into the reported measurement.
    Ok(check("kl-identity", worst_residual.max(worst_gap), 1e-10))
}

/// Metropolis draws on a one-dimensional posterior must match exhaustive
/// grid enumeration of the same density in total variation.
fn sampler_vs_enumeration() -> Result<VerifyCheck> {
    let mut rng = rng_from(VERIFY_SEED, &[4]);
    let base = CgmFamily::new(1, 0.0)?;
    let theta_true = base.point_from_means(&[vec![5.0], vec![9.0]])?;
    let data = base.simulate(&theta_true, 40, &mut rng)?;

    // Freeze the class-1 mean at truth; the class-0 mean stays free.
    let slice = SliceFamily::new(CgmFamily::new(1, 0.0)?, theta_true.values().to_vec(), vec![0])?;
    let target = PosteriorTarget::new(&slice, &data, PosteriorKind::Joint)?;

    let (lo, hi, bins) = (0.0_f64, 12.0_f64, 240usize);
    let width = (hi - lo) / bins as f64;
    let mut log_dens = Vec::with_capacity(bins);
    for b in 0..bins {
        let center = lo + (b as f64 + 0.5) * width;
        log_dens.push(target.log_density(&[center], &mut rng)?);
    }
    let norm = log_sum_exp(&log_dens);
    let oracle: Vec<f64> = log_dens.iter().map(|ld| (ld - norm).exp()).collect();

    let config = ChainConfig {
        n_chains: 3,
        burn_in: 300,
        thinning: 2,
        n_keep: 1000,
        kernel_width: 0.8,
        adapt: true,
        seed: VERIFY_SEED,
    };
    let samples = run_chains(&target, &config)?;
    let mut counts = vec![0usize; bins];
    let mut total = 0usize;
    let mut outside = 0usize;
    for point in samples.pooled() {
        let v = point.values()[0];
        total += 1;
        if v < lo || v >= hi {
            outside += 1;
            continue;
        }
        counts[((v - lo) / width) as usize] += 1;
    }
    let mut tv = 0.5 * outside as f64 / total as f64;
    for b in 0..bins {
        tv += 0.5 * (counts[b] as f64 / total as f64 - oracle[b]).abs();
    }
    Ok(check("sampler-vs-enumeration", tv, 0.1))
}

/// The missing-data posterior must not depend on the masking rate: the
/// Bernoulli mask factor shifts every log density by the same constant, so
/// the grid-normalized posterior is identical for any rate.
fn masking_rate_ignorability() -> Result<VerifyCheck> {
    let mut rng = rng_from(VERIFY_SEED, &[5]);
    let truth = TrueToyModel::new();
    let full = truth.simulate(&truth.theta(), 60, &mut rng)?;
    let spec = MissingnessSpec::uniform(0.3, TOY_DIM)?;
    let masked = mask_at_random(&full, &spec, &mut rng)?;
    let missing = masked
        .iter()
        .flat_map(|o| &o.features)
        .filter(|f| f.is_missing())
        .count() as f64;
    let observed = (masked.len() * TOY_DIM) as f64 - missing;

    let family = CgmFamily::new(TOY_DIM, 0.0)?;
    let target = PosteriorTarget::new(&family, &masked, PosteriorKind::Discriminative)?;
    let mut base = Vec::with_capacity(50);
    for _ in 0..50 {
        let values = target.initial_point(&mut rng);
        base.push(target.log_density(&values, &mut rng)?);
    }
    let posterior_with_rate = |rate: f64| -> Vec<f64> {
        let mask_term = missing * rate.ln() + observed * (1.0 - rate).ln();
        let shifted: Vec<f64> = base.iter().map(|ld| ld + mask_term).collect();
        let norm = log_sum_exp(&shifted);
        shifted.iter().map(|v| v - norm).collect()
    };
    let low = posterior_with_rate(0.2);
    let high = posterior_with_rate(0.8);
    let deviation = low
        .iter()
        .zip(&high)
        .map(|(a, b)| (a - b).abs())
        .fold(0.0_f64, f64::max);
    Ok(check("masking-rate-ignorability", deviation, 1e-10))
}

/// A predictive that puts equal mass on each of `C` classes must score a
/// perplexity of exactly `C`.
fn uniform_predictive() -> Result<VerifyCheck> {
    let mut rng = rng_from(VERIFY_SEED, &[6]);
    let classes = 4;
    let family = LogRegFamily::new(TOY_DIM, classes)?;
    let flat = ParameterPoint::new(family.family_id(), vec![0.0; family.unconstrained_dim()])?;
    let config = ChainConfig {
        n_chains: 1,
        burn_in: 0,
        thinning: 1,
        n_keep: 1,
        kernel_width: 1.0,
        adapt: false,
        seed: VERIFY_SEED,
    };
    let samples = SampleSet::from_chains(family.family_id(), vec![vec![flat]], config)?;

    let mut test = Dataset::new(classes, TOY_DIM)?;
    for i in 0..50 {
        let features: Vec<f64> = (0..TOY_DIM)
            .map(|d| (i * TOY_DIM + d) as f64 / 10.0 - 3.0)
            .collect();
        test.push(Observation::observed(i % classes, &features))?;
    }
    let report = predictive_report(&family, &samples, &test, &mut rng)?;
    let deviation = (report.perplexity() - classes as f64).abs();
    Ok(check("uniform-predictive", deviation, 1e-12))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn the_battery_passes_and_reports_every_check() {
        let checks = run_verification().unwrap();
        assert_eq!(checks.len(), 6);
        let names: Vec<&str> = checks.iter().map(|c| c.name).collect();
        assert_eq!(
            names,
            vec![
                "fixed-covariate-reduction",
                "order-independence",
                "kl-identity",
                "sampler-vs-enumeration",
                "masking-rate-ignorability",
                "uniform-predictive",
            ]
        );
        for c in &checks {
            assert!(c.passed, "{} failed: {}", c.name, c.detail);
            assert!(c.detail.contains("tolerance"));
        }
    }
}
