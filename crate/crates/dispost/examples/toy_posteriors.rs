//! Fit the same two-class dataset three ways — joint, discriminative, and
//! regression — and compare their posterior predictives on held-out data.
//!
//! The training data comes from a fixed two-class generator with two
//! informative feature dimensions and eight noise dimensions. The joint and
//! discriminative fits share one diagonal-Gaussian family whose spread is a
//! linear function of its mean (slope 2 here, so the family is deliberately
//! misspecified); the regression fit uses a softmax-linear family.
//!
//! Run with: cargo run --example toy_posteriors

use dispost::eval::predictive_report;
use dispost::models::cgm::CgmFamily;
use dispost::models::logreg::LogRegFamily;
use dispost::models::toy::{TrueToyModel, TOY_DIM};
use dispost::sampler::{run_chains, SampleTarget};
use dispost::seeding::{rng_from, tags};
use dispost::{ChainConfig, ModelFamily, PosteriorKind, PosteriorTarget};

fn main() -> dispost::Result<()> {
    let seed = 7;
    let truth = TrueToyModel::new();
    let theta = truth.theta();
    let mut data_rng = rng_from(seed, &[tags::TRAIN_DATA]);
    let train = truth.simulate(&theta, 256, &mut data_rng)?;
    let mut test_rng = rng_from(seed, &[tags::TEST_DATA]);
    let test = truth.simulate(&theta, 2000, &mut test_rng)?;
    println!("train: {} points, test: {} points, {} features", train.len(), test.len(), TOY_DIM);

    let generative = CgmFamily::new(TOY_DIM, 2.0)?;
    let regression = LogRegFamily::new(TOY_DIM, 2)?;
    let fits: [(&str, &dyn ModelFamily, PosteriorKind, usize); 3] = [
        ("joint         ", &generative, PosteriorKind::Joint, 5_000),
        ("discriminative", &generative, PosteriorKind::Discriminative, 2_000),
        ("regression    ", &regression, PosteriorKind::Regression, 6_000),
    ];

    for (label, family, kind, burn_in) in fits {
        let target = PosteriorTarget::new(family, &train, kind)?;
        let config = ChainConfig {
            n_chains: 3,
            burn_in,
            thinning: 5,
            n_keep: 200,
            kernel_width: 2.4 / (target.dim() as f64).sqrt(),
            adapt: true,
            seed,
        };
        let samples = run_chains(&target, &config)?;
        let mut eval_rng = rng_from(seed, &[tags::EVAL]);
        let report = predictive_report(family, &samples, &test, &mut eval_rng)?;
        let rhat = samples
            .rhat()
            .iter()
            .copied()
            .filter(|v| v.is_finite())
            .fold(f64::NEG_INFINITY, f64::max);
        println!(
            "{label}  perplexity {:.4}  mean logloss {:.4}  flagged coordinates {}/{}  max split R-hat {rhat:.1}",
            report.perplexity(),
            report.mean_logloss(),
            samples.flagged_coordinates().len(),
            target.dim(),
        );
    }
    println!("\nLower perplexity is better; 2.0 matches uniform guessing on two classes.");
    println!("The conditional fits keep high R-hat on some coordinates: their likelihoods");
    println!("leave near-flat directions (class-mean sums, bias/weight trade-offs) that");
    println!("never mix, while the predictive — which is constant along those directions —");
    println!("settles long before. The joint target identifies every coordinate.");
    Ok(())
}
