//! Decompose the joint Kullback-Leibler divergence between a true model and
//! a fitted family into its conditional and covariate-margin parts.
//!
//! For any pair of joint distributions over (class, covariate),
//!
//! ```text
//! KL(true joint || model joint)
//!     = E[ KL(true class conditional || model class conditional) ]
//!     + KL(true covariate margin || model covariate margin)
//! ```
//!
//! so the joint divergence can never fall below the conditional part. This
//! example checks the identity two ways: exactly, by enumerating a small
//! discrete family's support, and by Monte Carlo on a continuous family
//! where the report also carries jackknife standard errors.
//!
//! Run with: cargo run --example kl_decomposition

use dispost::eval::kl_report;
use dispost::models::cgm::CgmFamily;
use dispost::models::discrete::DiscreteFamily;
use dispost::seeding::{rng_from, tags};
use dispost::KlEvaluation;

fn main() -> dispost::Result<()> {
    let mut rng = rng_from(21, &[tags::EVAL]);

    // Exact enumeration over a 2-class, 3-value discrete family.
    let family = DiscreteFamily::new(2, 3, 1.0)?;
    let truth = family.point_from_table(&[0.30, 0.20, 0.10, 0.05, 0.15, 0.20])?;
    let model = family.point_from_table(&[0.18, 0.22, 0.10, 0.15, 0.15, 0.20])?;
    let eval = KlEvaluation::Exact { support: family.support() };
    let report = kl_report(&family, &truth, &family, &model, &eval, &mut rng)?;
    println!("discrete family, exact enumeration:");
    println!("  joint KL       {:.6}", report.k_joint);
    println!("  conditional KL {:.6}", report.k_cond);
    println!("  margin KL      {:.6}", report.margin_kl);
    println!("  identity residual {:.3e}", report.identity_residual());

    // Monte Carlo over a continuous family: true spread versus a family
    // whose spread grows with its mean.
    let truth_family = CgmFamily::new(3, 0.0)?;
    let theta_true = truth_family.point_from_means(&[vec![5.0, 9.0, 9.0], vec![9.0, 9.0, 9.0]])?;
    let fitted_family = CgmFamily::new(3, 0.5)?;
    let theta_fit =
        fitted_family.point_from_means(&[vec![5.5, 8.5, 9.0], vec![8.5, 9.5, 9.0]])?;
    let eval = KlEvaluation::MonteCarlo { samples: 20_000, seed: 99 };
    let report =
        kl_report(&truth_family, &theta_true, &fitted_family, &theta_fit, &eval, &mut rng)?;
    println!("\ncontinuous family, 20k Monte Carlo draws:");
    println!("  joint KL       {:.4}", report.k_joint);
    println!("  conditional KL {:.4}", report.k_cond);
    println!("  margin KL      {:.4}", report.margin_kl);
    if let Some(se) = &report.standard_errors {
        println!(
            "  jackknife SEs  joint {:.4}  conditional {:.4}  margin {:.4}",
            se.k_joint, se.k_cond, se.margin_kl
        );
    }
    println!("  identity residual {:.3e}", report.identity_residual());
    println!("\nThe residual stays at float round-off in both modes, and the");
    println!("joint divergence always dominates the conditional part.");
    Ok(())
}
