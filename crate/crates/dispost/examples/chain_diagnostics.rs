//! Inspect sampler behavior: acceptance rates, burn-in width adaptation,
//! split-chain convergence diagnostics, and the draw save/load round trip.
//!
//! The target is a joint posterior over a mean-dependent-spread Gaussian
//! family, so every coordinate is likelihood-identified and healthy chains
//! should agree. The first run gets a deliberately bad initial proposal
//! width and no adaptation; the second starts from the same width but
//! adapts during burn-in; the third uses the dimension-scaled default.
//!
//! Run with: cargo run --example chain_diagnostics

use dispost::family::ModelFamily;
use dispost::models::cgm::CgmFamily;
use dispost::models::toy::{TrueToyModel, TOY_DIM};
use dispost::sampler::{run_chains, SampleTarget};
use dispost::seeding::{rng_from, tags};
use dispost::{ChainConfig, PosteriorKind, PosteriorTarget};

fn main() -> dispost::Result<()> {
    let seed = 29;
    let truth = TrueToyModel::new();
    let mut rng = rng_from(seed, &[tags::TRAIN_DATA]);
    let train = truth.simulate(&truth.theta(), 128, &mut rng)?;
    let family = CgmFamily::new(TOY_DIM, 0.0)?;
    let target = PosteriorTarget::new(&family, &train, PosteriorKind::Joint)?;
    println!("target: {} unconstrained parameters\n", target.dim());

    let base = ChainConfig {
        n_chains: 4,
        burn_in: 3_000,
        thinning: 5,
        n_keep: 300,
        kernel_width: 8.0,
        adapt: false,
        seed,
    };
    let configs = [
        ("width 8.0, no adaptation  ", base.clone()),
        ("width 8.0, adaptation on  ", ChainConfig { adapt: true, ..base.clone() }),
        (
            "scaled width, adaptation  ",
            ChainConfig {
                kernel_width: 2.4 / (target.dim() as f64).sqrt(),
                adapt: true,
                ..base.clone()
            },
        ),
    ];

    for (label, config) in configs {
        let samples = run_chains(&target, &config)?;
        let rates: Vec<String> =
            samples.acceptance_rates().iter().map(|r| format!("{r:.2}")).collect();
        let widths: Vec<String> =
            samples.final_widths().iter().map(|w| format!("{w:.2}")).collect();
        let rhat_max = samples
            .rhat()
            .iter()
            .copied()
            .filter(|v| v.is_finite())
            .fold(f64::NEG_INFINITY, f64::max);
        println!("{label} acceptance [{}]", rates.join(", "));
        println!("{:28}final widths [{}]", "", widths.join(", "));
        println!("{:28}max split R-hat {rhat_max:.3}\n", "");
    }

    // Draws persist as a CSV of kept draws plus a small metadata sidecar.
    let config = ChainConfig {
        kernel_width: 2.4 / (target.dim() as f64).sqrt(),
        adapt: true,
        ..base
    };
    let samples = run_chains(&target, &config)?;
    let dir = std::env::temp_dir().join("dispost-diagnostics-example");
    std::fs::create_dir_all(&dir)?;
    let (draws_path, meta_path) = samples.save(&dir, "diagnostics")?;
    let rows = std::fs::read_to_string(&draws_path)?
        .lines()
        .skip(1) // header
        .count();
    assert_eq!(rows, samples.pooled_points().len());
    println!("saved draws to {}", draws_path.display());
    println!("  {} data rows, one per kept draw across all chains", rows);
    let meta = std::fs::read_to_string(&meta_path)?;
    println!("sidecar {} records:", meta_path.display());
    for line in meta.lines().take(6) {
        println!("  {line}");
    }
    Ok(())
}
