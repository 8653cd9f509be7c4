//! Handle feature values that are missing completely at random, two ways.
//!
//! A generative family can integrate missing components out of its joint
//! density exactly, so the joint and discriminative posteriors keep using
//! every partially observed row. A regression family has no covariate
//! model to integrate under; it goes through multiple imputation instead:
//! a discriminative fit of the generative family on the complete cases
//! supplies parameter draws, each of which completes the dataset once, and
//! every completed dataset drives its own chain.
//!
//! Run with: cargo run --example missing_data

use dispost::eval::predictive_report;
use dispost::family::ModelFamily;
use dispost::missing::{
    impute_for_regression, log_conditional_missing, mask_at_random, MissingnessSpec, ThetaSource,
};
use dispost::models::cgm::CgmFamily;
use dispost::models::logreg::LogRegFamily;
use dispost::models::toy::{TrueToyModel, TOY_DIM};
use dispost::sampler::{run_chains, run_chains_on, SampleTarget};
use dispost::seeding::{rng_from, tags};
use dispost::{ChainConfig, FeatureValue, PosteriorKind, PosteriorTarget};

fn main() -> dispost::Result<()> {
    let seed = 13;
    let truth = TrueToyModel::new();
    let theta = truth.theta();
    let mut rng = rng_from(seed, &[tags::TRAIN_DATA]);
    let full = truth.simulate(&theta, 96, &mut rng)?;
    let mut test_rng = rng_from(seed, &[tags::TEST_DATA]);
    let test = truth.simulate(&theta, 1500, &mut test_rng)?;

    // Mask 30% of all feature components completely at random; a row is
    // complete only when all ten of its components survive, so few rows do.
    let spec = MissingnessSpec::uniform(0.3, TOY_DIM)?;
    let mut mask_rng = rng_from(seed, &[tags::MASK]);
    let masked = mask_at_random(&full, &spec, &mut mask_rng)?;
    let missing = masked
        .iter()
        .flat_map(|o| &o.features)
        .filter(|f| f.is_missing())
        .count();
    println!(
        "masked {missing} of {} feature values; {} of {} rows still complete",
        masked.len() * TOY_DIM,
        masked.complete_cases().len(),
        masked.len()
    );

    // A generative conditional marginalizes the missing components exactly.
    let family = CgmFamily::new(TOY_DIM, 0.0)?;
    let mut features: Vec<FeatureValue> = full.observations()[0]
        .features
        .iter()
        .map(|&v| v)
        .collect();
    features[0] = FeatureValue::Missing;
    features[5] = FeatureValue::Missing;
    let mut demo_rng = rng_from(seed, &[tags::EVAL]);
    let point = family.sample_prior(&mut demo_rng);
    let lc = log_conditional_missing(&family, 0, &features, &point, &mut demo_rng)?;
    println!(
        "example marginalized conditional: p(class 0 | observed x) = {:.4}",
        lc.value().exp()
    );

    // Discriminative fit on the masked data, exact marginalization inside.
    let target = PosteriorTarget::new(&family, &masked, PosteriorKind::Discriminative)?;
    let config = ChainConfig {
        n_chains: 3,
        burn_in: 500,
        thinning: 5,
        n_keep: 200,
        kernel_width: 2.4 / (target.dim() as f64).sqrt(),
        adapt: true,
        seed,
    };
    let disc = run_chains(&target, &config)?;
    let mut eval_rng = rng_from(seed, &[tags::EVAL, 1]);
    let disc_report = predictive_report(&family, &disc, &test, &mut eval_rng)?;
    println!("discriminative fit on masked data: perplexity {:.4}", disc_report.perplexity());

    // Regression via multiple imputation: the few complete cases inform a
    // generative pre-fit whose draws fill the gaps, one imputed dataset per
    // chain.
    let complete = masked.complete_cases();
    let pre_target = PosteriorTarget::new(&family, &complete, PosteriorKind::Discriminative)?;
    let pre = run_chains(&pre_target, &config)?;
    let mut impute_rng = rng_from(seed, &[tags::IMPUTE]);
    let imputations =
        impute_for_regression(&masked, &family, ThetaSource::Draws(&pre), 3, &mut impute_rng)?;
    let regression = LogRegFamily::new(TOY_DIM, 2)?;
    let targets: Vec<PosteriorTarget> = imputations
        .datasets()
        .iter()
        .map(|d| PosteriorTarget::new(&regression, d, PosteriorKind::Regression))
        .collect::<dispost::Result<_>>()?;
    let reg_config = ChainConfig { burn_in: 2500, ..config };
    let reg = run_chains_on(&targets, &reg_config)?;
    let mut eval_rng = rng_from(seed, &[tags::EVAL, 2]);
    let reg_report = predictive_report(&regression, &reg, &test, &mut eval_rng)?;
    println!("regression fit via imputation:     perplexity {:.4}", reg_report.perplexity());

    println!("\nThe discriminative fit keeps every partially observed row through");
    println!("exact marginalization; the regression route loses information twice");
    println!("— its pre-fit sees only the complete rows and the imputations add");
    println!("noise — so its perplexity trails on the same data.");
    Ok(())
}
