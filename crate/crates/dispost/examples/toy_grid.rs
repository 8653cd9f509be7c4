//! Run a miniature version of the toy-data grid study: three posterior
//! construction methods fitted across a grid of training-set sizes and
//! model misspecification levels, scored by predictive perplexity on a
//! shared held-out test set.
//!
//! The full study sweeps larger grids with longer chains; this example
//! shrinks everything so it finishes in about a minute while still showing
//! the characteristic pattern — the joint posterior wins when the model is
//! well specified, the discriminative posterior takes over under
//! misspecification as training data grows.
//!
//! Run with: cargo run --release --example toy_grid

use dispost::harness::{emit_plots, run_toy_grid, GridExperimentConfig, GridMethod};

fn main() -> dispost::Result<()> {
    let mut config = GridExperimentConfig::new(11);
    config.dataset_sizes = vec![32, 128];
    config.slopes = vec![0.0, 2.0];
    config.test_size = 2_000;
    config.methods = vec![GridMethod::JointMcmc, GridMethod::DiscMcmc, GridMethod::BayesReg];
    config.repeats = 2;
    config.n_chains = 2;
    config.burn_in = 400;
    config.regression_burn_in = 1_200;
    config.thinning = 5;
    config.n_keep = 150;
    config.validate()?;

    let n_cells = config.slopes.len()
        * config.dataset_sizes.len()
        * config.repeats
        * config.methods.len();
    println!("fitting {n_cells} cells...");
    let results = run_toy_grid(&config)?;

    println!("\nmean perplexity over repeats (lower is better):");
    for row in results.winners() {
        let scores: Vec<String> = row
            .means
            .iter()
            .map(|(m, p)| match p {
                Some(p) => format!("{m}={p:.4}"),
                None => format!("{m}=failed"),
            })
            .collect();
        println!(
            "  spread-slope {:>3}  n {:>4}:  {}  ->  {}",
            row.slope,
            row.n_train,
            scores.join("  "),
            row.winner
        );
    }

    let dir = std::env::temp_dir().join("dispost-toy-grid-example");
    std::fs::create_dir_all(&dir)?;
    let written = results.write_dir(&dir)?;
    let figures = emit_plots(&results, &dir)?;
    println!("\nwrote:");
    for path in written.iter().chain(&figures) {
        println!("  {}", path.display());
    }
    Ok(())
}
