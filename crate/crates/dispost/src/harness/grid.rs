//! Grid study on the fixed two-class toy generator.
//!
//! For every combination of training-set size, generator slope, and repeat,
//! this module draws a fresh training set from [`TrueToyModel`], fits each
//! requested method, and scores the fitted posterior predictive on a held-out
//! test set shared by all methods of the same repeat:
//!
//! * **jMCMC** — joint posterior over a [`CgmFamily`] with the given slope;
//! * **dMCMC** — discriminative posterior over the same family;
//! * **BayesReg** — softmax-linear regression posterior ([`LogRegFamily`]).
//!
//! Optionally each training set is thinned by masking feature components
//! completely at random. The regression method cannot score partially
//! observed rows directly, so masked cells route it through multiple
//! imputation: a discriminative fit of the generative family on the complete
//! cases supplies parameter draws, each imputed dataset feeds its own chain.
//!
//! A cell that fails (for example because no finite-density initial state
//! exists under an extreme slope) records its error message and the run
//! carries on; summaries treat such cells as missing data.

use std::fmt;
use std::io::Write;
use std::path::{Path, PathBuf};
use std::str::FromStr;

use rayon::prelude::*;

use crate::data::Dataset;
use crate::error::{Error, Result};
use crate::eval::predictive_report;
use crate::harness::kv::KvConfig;
use crate::logspace::stable_sum;
use crate::missing::{impute_for_regression, mask_at_random, MissingnessSpec, ThetaSource};
use crate::models::cgm::CgmFamily;
use crate::models::logreg::LogRegFamily;
use crate::models::toy::{TrueToyModel, TOY_DIM};
use crate::sampler::{
    run_chains, run_chains_on, ChainConfig, PosteriorKind, PosteriorTarget, SampleSet,
    SampleTarget,
};
use crate::seeding::{derive_seed, rng_from, tags};
use crate::ModelFamily;

/// Two method means closer than this count as a tied grid cell.
pub const WINNER_TIE_TOLERANCE: f64 = 1e-9;

/// Fitting methods available on the toy grid.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum GridMethod {
    /// Joint posterior sampling of the generative family.
    JointMcmc,
    /// Discriminative posterior sampling of the generative family.
    DiscMcmc,
    /// Bayesian softmax-linear regression.
    BayesReg,
}

impl GridMethod {
    pub const ALL: [GridMethod; 3] =
        [GridMethod::JointMcmc, GridMethod::DiscMcmc, GridMethod::BayesReg];

    pub fn name(&self) -> &'static str {
        match self {
            GridMethod::JointMcmc => "jMCMC",
            GridMethod::DiscMcmc => "dMCMC",
            GridMethod::BayesReg => "BayesReg",
        }
    }
}

impl fmt::Display for GridMethod {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for GridMethod {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.to_ascii_lowercase().as_str() {
            "jmcmc" | "joint" => Ok(GridMethod::JointMcmc),
            "dmcmc" | "disc" | "discriminative" => Ok(GridMethod::DiscMcmc),
            "bayesreg" | "regression" => Ok(GridMethod::BayesReg),
            other => Err(Error::Config(format!(
                "unknown method '{other}'; expected jMCMC, dMCMC, or BayesReg"
            ))),
        }
    }
}

/// Full description of a toy-grid run.
///
/// All fields are public so programmatic callers can tweak a default config;
/// [`GridExperimentConfig::from_kv`] builds one from a `key = value` file.
#[derive(Debug, Clone)]
pub struct GridExperimentConfig {
    /// Training-set sizes, one grid column per entry.
    pub dataset_sizes: Vec<usize>,
    /// Generator slopes, one grid row per entry. Slope `0` matches the true
    /// model's constant spread; larger slopes misspecify it.
    pub slopes: Vec<f64>,
    /// Held-out test points per repeat.
    pub test_size: usize,
    /// Methods fitted in every cell.
    pub methods: Vec<GridMethod>,
    /// Fresh training draws per cell.
    pub repeats: usize,
    /// Probability that any single feature component of a training row is
    /// masked. Zero leaves the data fully observed.
    pub missing_rate: f64,
    /// Master seed; every random stream in the run derives from it.
    pub seed: u64,
    /// Chains per fit.
    pub n_chains: usize,
    /// Burn-in steps for the joint and discriminative fits.
    pub burn_in: usize,
    /// Burn-in steps for the regression fits, which start further from
    /// their posterior mass.
    pub regression_burn_in: usize,
    /// Post-burn-in steps per kept draw.
    pub thinning: usize,
    /// Kept draws per chain.
    pub n_keep: usize,
    /// Initial proposal width; `None` uses `2.4 / sqrt(dim)` per target.
    pub kernel_width: Option<f64>,
    /// Adapt the proposal width during burn-in.
    pub adapt: bool,
}

impl GridExperimentConfig {
    /// Study defaults: the full size ladder, slopes 0 and 2, three repeats,
    /// all three methods, fully observed data.
    pub fn new(seed: u64) -> Self {
        let standard = ChainConfig::standard(0);
        let regression = ChainConfig::regression(0);
        GridExperimentConfig {
            dataset_sizes: vec![32, 64, 128, 256, 512, 1024],
            slopes: vec![0.0, 2.0],
            test_size: 10_000,
            methods: GridMethod::ALL.to_vec(),
            repeats: 3,
            missing_rate: 0.0,
            seed,
            n_chains: standard.n_chains,
            burn_in: standard.burn_in,
            regression_burn_in: regression.burn_in,
            thinning: standard.thinning,
            n_keep: standard.n_keep,
            kernel_width: None,
            adapt: true,
        }
    }

    const KEYS: [&'static str; 14] = [
        "sizes",
        "slopes",
        "test_size",
        "methods",
        "repeats",
        "missing_rate",
        "seed",
        "chains",
        "burn_in",
        "regression_burn_in",
        "thinning",
        "keep",
        "kernel_width",
        "adapt",
    ];

    /// Reads a config from `key = value` pairs; absent keys keep the
    /// defaults of [`GridExperimentConfig::new`], unknown keys are errors.
    pub fn from_kv(kv: &KvConfig) -> Result<Self> {
        kv.expect_known(&Self::KEYS)?;
        let seed = kv.get_u64("seed")?.unwrap_or(0);
        let mut config = GridExperimentConfig::new(seed);
        if let Some(sizes) = kv.get_usize_list("sizes")? {
            config.dataset_sizes = sizes;
        }
        if let Some(slopes) = kv.get_f64_list("slopes")? {
            config.slopes = slopes;
        }
        if let Some(v) = kv.get_usize("test_size")? {
            config.test_size = v;
        }
        if let Some(names) = kv.get_list("methods") {
            config.methods = names
                .iter()
                .map(|n| n.parse())
                .collect::<Result<Vec<GridMethod>>>()?;
        }
        if let Some(v) = kv.get_usize("repeats")? {
            config.repeats = v;
        }
        if let Some(v) = kv.get_f64("missing_rate")? {
            config.missing_rate = v;
        }
        if let Some(v) = kv.get_usize("chains")? {
            config.n_chains = v;
        }
        if let Some(v) = kv.get_usize("burn_in")? {
            config.burn_in = v;
        }
        if let Some(v) = kv.get_usize("regression_burn_in")? {
            config.regression_burn_in = v;
        }
        if let Some(v) = kv.get_usize("thinning")? {
            config.thinning = v;
        }
        if let Some(v) = kv.get_usize("keep")? {
            config.n_keep = v;
        }
        if let Some(v) = kv.get_f64("kernel_width")? {
            config.kernel_width = Some(v);
        }
        if let Some(v) = kv.get_bool("adapt")? {
            config.adapt = v;
        }
        config.validate()?;
        Ok(config)
    }

    pub fn validate(&self) -> Result<()> {
        if self.dataset_sizes.is_empty() || self.dataset_sizes.contains(&0) {
            return Err(Error::Config(
                "sizes must list at least one positive training-set size".into(),
            ));
        }
        if self.slopes.is_empty() {
            return Err(Error::Config("slopes must list at least one value".into()));
        }
        if self.methods.is_empty() {
            return Err(Error::Config("methods must list at least one method".into()));
        }
        for (i, m) in self.methods.iter().enumerate() {
            if self.methods[..i].contains(m) {
                return Err(Error::Config(format!("method {m} listed twice")));
            }
        }
        if self.repeats == 0 {
            return Err(Error::Config("repeats must be at least 1".into()));
        }
        if self.test_size == 0 {
            return Err(Error::Config("test_size must be positive".into()));
        }
        if !(0.0..1.0).contains(&self.missing_rate) {
            return Err(Error::Config(format!(
                "missing_rate must lie in [0, 1), got {}",
                self.missing_rate
            )));
        }
        // Chain shape errors surface here rather than deep inside a cell.
        self.chain_config(1, false, 0).validate()?;
        self.chain_config(1, true, 0).validate()?;
        Ok(())
    }

    fn chain_config(&self, dim: usize, regression: bool, seed: u64) -> ChainConfig {
        ChainConfig {
            n_chains: self.n_chains,
            burn_in: if regression { self.regression_burn_in } else { self.burn_in },
            thinning: self.thinning,
            n_keep: self.n_keep,
            kernel_width: self
                .kernel_width
                .unwrap_or(2.4 / (dim.max(1) as f64).sqrt()),
            adapt: self.adapt,
            seed,
        }
    }
}

/// One fitted (slope, size, repeat, method) combination.
#[derive(Debug, Clone)]
pub struct GridCell {
    pub slope: f64,
    pub n_train: usize,
    pub repeat: usize,
    pub method: GridMethod,
    /// Posterior-predictive perplexity on the shared test set.
    pub perplexity: Option<f64>,
    pub mean_logloss: Option<f64>,
    /// Mean Metropolis acceptance rate across chains.
    pub acceptance: Option<f64>,
    /// Largest finite split R-hat across parameter coordinates.
    pub rhat_max: Option<f64>,
    /// Fingerprint of the test set this cell was scored on; equal within a
    /// repeat by construction.
    pub test_hash: u64,
    /// Why the cell failed, if it did.
    pub error: Option<String>,
}

/// Verdict of one (slope, size) winner comparison.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Winner {
    Method(GridMethod),
    /// Best and runner-up means within [`WINNER_TIE_TOLERANCE`].
    Tie,
    /// No method produced a successful repeat.
    NoData,
}

impl fmt::Display for Winner {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Winner::Method(m) => m.fmt(f),
            Winner::Tie => f.write_str("tie"),
            Winner::NoData => f.write_str("n/a"),
        }
    }
}

/// Mean perplexities and the winning method for one (slope, size) pair.
#[derive(Debug, Clone)]
pub struct WinnerRow {
    pub slope: f64,
    pub n_train: usize,
    /// Mean perplexity over successful repeats, aligned with the run's
    /// method list; `None` where every repeat failed.
    pub means: Vec<(GridMethod, Option<f64>)>,
    pub winner: Winner,
}

/// Everything a toy-grid run produced, in deterministic cell order
/// (slope-major, then size, repeat, method).
#[derive(Debug, Clone)]
pub struct GridResults {
    pub slopes: Vec<f64>,
    pub dataset_sizes: Vec<usize>,
    pub methods: Vec<GridMethod>,
    pub cells: Vec<GridCell>,
}

impl GridResults {
    pub fn has_failures(&self) -> bool {
        self.cells.iter().any(|c| c.error.is_some())
    }

    /// Winner table over (slope, size) pairs: lowest mean perplexity wins,
    /// means within [`WINNER_TIE_TOLERANCE`] tie.
    pub fn winners(&self) -> Vec<WinnerRow> {
        let mut rows = Vec::new();
        for &slope in &self.slopes {
            for &n in &self.dataset_sizes {
                let means: Vec<(GridMethod, Option<f64>)> = self
                    .methods
                    .iter()
                    .map(|&m| {
                        let values: Vec<f64> = self
                            .cells
                            .iter()
                            .filter(|c| {
                                c.method == m
                                    && c.n_train == n
                                    && c.slope.to_bits() == slope.to_bits()
                                    && c.error.is_none()
                            })
                            .filter_map(|c| c.perplexity)
                            .collect();
                        let mean = if values.is_empty() {
                            None
                        } else {
                            Some(stable_sum(values.iter().copied()) / values.len() as f64)
                        };
                        (m, mean)
                    })
                    .collect();
                let mut scored: Vec<(GridMethod, f64)> = means
                    .iter()
                    .filter_map(|&(m, v)| v.map(|v| (m, v)))
                    .collect();
                scored.sort_by(|a, b| a.1.total_cmp(&b.1));
                let winner = match scored.as_slice() {
                    [] => Winner::NoData,
                    [(m, _)] => Winner::Method(*m),
                    [(m, best), (_, second), ..] => {
                        if second - best <= WINNER_TIE_TOLERANCE {
                            Winner::Tie
                        } else {
                            Winner::Method(*m)
                        }
                    }
                };
                rows.push(WinnerRow { slope, n_train: n, means, winner });
            }
        }
        rows
    }

    /// Per-cell CSV: one row per (slope, size, repeat, method).
    pub fn write_cells_csv<W: Write>(&self, writer: W) -> Result<()> {
        let mut w = csv::Writer::from_writer(writer);
        w.write_record([
            "slope",
            "n_train",
            "repeat",
            "method",
            "perplexity",
            "mean_logloss",
            "acceptance",
            "rhat_max",
            "test_hash",
            "error",
        ])?;
        for c in &self.cells {
            w.write_record([
                c.slope.to_string(),
                c.n_train.to_string(),
                c.repeat.to_string(),
                c.method.to_string(),
                opt(c.perplexity),
                opt(c.mean_logloss),
                opt(c.acceptance),
                opt(c.rhat_max),
                format!("{:016x}", c.test_hash),
                c.error.clone().unwrap_or_default(),
            ])?;
        }
        w.flush()?;
        Ok(())
    }

    /// Winner CSV: one row per (slope, size) with per-method means.
    pub fn write_winners_csv<W: Write>(&self, writer: W) -> Result<()> {
        let mut w = csv::Writer::from_writer(writer);
        let mut header = vec!["slope".to_string(), "n_train".to_string()];
        header.extend(self.methods.iter().map(|m| m.to_string()));
        header.push("winner".to_string());
        w.write_record(&header)?;
        for row in self.winners() {
            let mut record = vec![row.slope.to_string(), row.n_train.to_string()];
            record.extend(row.means.iter().map(|&(_, v)| opt(v)));
            record.push(row.winner.to_string());
            w.write_record(&record)?;
        }
        w.flush()?;
        Ok(())
    }

    /// Writes `grid_cells.csv` and `grid_winners.csv` under `dir`.
    pub fn write_dir(&self, dir: &Path) -> Result<Vec<PathBuf>> {
        std::fs::create_dir_all(dir)?;
        let cells = dir.join("grid_cells.csv");
        self.write_cells_csv(std::fs::File::create(&cells)?)?;
        let winners = dir.join("grid_winners.csv");
        self.write_winners_csv(std::fs::File::create(&winners)?)?;
        Ok(vec![cells, winners])
    }
}

fn opt(v: Option<f64>) -> String {
    v.map(|v| v.to_string()).unwrap_or_default()
}

/// Order-insensitive fingerprint ingredients: class labels and feature bit
/// patterns, FNV-1a over the byte stream in row order.
pub fn dataset_hash(dataset: &Dataset) -> u64 {
    const OFFSET: u64 = 0xcbf2_9ce4_8422_2325;
    const PRIME: u64 = 0x0000_0100_0000_01b3;
    let mut hash = OFFSET;
    let eat = |hash: &mut u64, bytes: &[u8]| {
        for &b in bytes {
            *hash = (*hash ^ u64::from(b)).wrapping_mul(PRIME);
        }
    };
    for obs in dataset.observations() {
        eat(&mut hash, &(obs.class as u64).to_le_bytes());
        for f in &obs.features {
            match f.observed() {
                Some(v) => {
                    eat(&mut hash, &[1]);
                    eat(&mut hash, &v.to_bits().to_le_bytes());
                }
                None => eat(&mut hash, &[0]),
            }
        }
    }
    hash
}

/// Runs the full grid. Cells execute in parallel; the returned cell order is
/// the deterministic slope-major order regardless of scheduling, and every
/// random stream is derived from `config.seed`, so identical configs yield
/// byte-identical CSV output.
pub fn run_toy_grid(config: &GridExperimentConfig) -> Result<GridResults> {
    config.validate()?;
    let truth = TrueToyModel::new();
    let theta = truth.theta();

    let mut tests = Vec::with_capacity(config.repeats);
    for repeat in 0..config.repeats {
        let mut rng = rng_from(config.seed, &[tags::TEST_DATA, repeat as u64]);
        tests.push(truth.simulate(&theta, config.test_size, &mut rng)?);
    }
    let hashes: Vec<u64> = tests.iter().map(dataset_hash).collect();

    let mut keys = Vec::new();
    for si in 0..config.slopes.len() {
        for ni in 0..config.dataset_sizes.len() {
            for repeat in 0..config.repeats {
                for mi in 0..config.methods.len() {
                    keys.push((si, ni, repeat, mi));
                }
            }
        }
    }

    let cells: Vec<GridCell> = keys
        .into_par_iter()
        .map(|(si, ni, repeat, mi)| {
            run_cell(config, &truth, &tests[repeat], hashes[repeat], si, ni, repeat, mi)
        })
        .collect();

    Ok(GridResults {
        slopes: config.slopes.clone(),
        dataset_sizes: config.dataset_sizes.clone(),
        methods: config.methods.clone(),
        cells,
    })
}

#[allow(clippy::too_many_arguments)]
fn run_cell(
    config: &GridExperimentConfig,
    truth: &TrueToyModel,
    test: &Dataset,
    test_hash: u64,
    si: usize,
    ni: usize,
    repeat: usize,
    mi: usize,
) -> GridCell {
    let method = config.methods[mi];
    let mut cell = GridCell {
        slope: config.slopes[si],
        n_train: config.dataset_sizes[ni],
        repeat,
        method,
        perplexity: None,
        mean_logloss: None,
        acceptance: None,
        rhat_max: None,
        test_hash,
        error: None,
    };
    match fit_and_score(config, truth, test, si, ni, repeat, mi) {
        Ok((report_perplexity, report_logloss, samples)) => {
            cell.perplexity = Some(report_perplexity);
            cell.mean_logloss = Some(report_logloss);
            let rates = samples.acceptance_rates();
            cell.acceptance =
                Some(stable_sum(rates.iter().copied()) / rates.len() as f64);
            cell.rhat_max = samples
                .rhat()
                .iter()
                .copied()
                .filter(|v| v.is_finite())
                .max_by(f64::total_cmp);
        }
        Err(e) => cell.error = Some(e.to_string()),
    }
    cell
}

fn fit_and_score(
    config: &GridExperimentConfig,
    truth: &TrueToyModel,
    test: &Dataset,
    si: usize,
    ni: usize,
    repeat: usize,
    mi: usize,
) -> Result<(f64, f64, SampleSet)> {
    let slope = config.slopes[si];
    let n = config.dataset_sizes[ni];
    let method = config.methods[mi];
    let cell_tags = [si as u64, ni as u64, repeat as u64];

    let theta = truth.theta();
    let mut train_rng = rng_from(
        config.seed,
        &[tags::TRAIN_DATA, cell_tags[0], cell_tags[1], cell_tags[2]],
    );
    let mut train = truth.simulate(&theta, n, &mut train_rng)?;
    if config.missing_rate > 0.0 {
        let spec = MissingnessSpec::uniform(config.missing_rate, TOY_DIM)?;
        let mut mask_rng = rng_from(
            config.seed,
            &[tags::MASK, cell_tags[0], cell_tags[1], cell_tags[2]],
        );
        train = mask_at_random(&train, &spec, &mut mask_rng)?;
    }

    let chain_seed = derive_seed(
        config.seed,
        &[tags::CHAIN, cell_tags[0], cell_tags[1], cell_tags[2], mi as u64],
    );
    let mut eval_rng = rng_from(
        config.seed,
        &[tags::EVAL, cell_tags[0], cell_tags[1], cell_tags[2], mi as u64],
    );

    let (family, samples): (Box<dyn ModelFamily>, SampleSet) = match method {
        GridMethod::JointMcmc | GridMethod::DiscMcmc => {
            let family = CgmFamily::new(TOY_DIM, slope)?;
            let kind = if method == GridMethod::JointMcmc {
                PosteriorKind::Joint
            } else {
                PosteriorKind::Discriminative
            };
            let target = PosteriorTarget::new(&family, &train, kind)?;
            let chains = config.chain_config(target.dim(), false, chain_seed);
            let samples = run_chains(&target, &chains)?;
            (Box::new(family), samples)
        }
        GridMethod::BayesReg => {
            let family = LogRegFamily::new(TOY_DIM, 2)?;
            let samples = if train.is_fully_observed() {
                let target = PosteriorTarget::new(&family, &train, PosteriorKind::Regression)?;
                let chains = config.chain_config(target.dim(), true, chain_seed);
                run_chains(&target, &chains)?
            } else {
                regression_fit_with_imputation(config, slope, &train, &family, &cell_tags, mi)?
            };
            (Box::new(family), samples)
        }
    };

    let report = predictive_report(family.as_ref(), &samples, test, &mut eval_rng)?;
    Ok((report.perplexity(), report.mean_logloss(), samples))
}

/// Regression on partially observed data: fit the generative family
/// discriminatively on the complete cases, draw one imputed dataset per
/// chain from those parameter draws, and give each chain its own dataset.
fn regression_fit_with_imputation(
    config: &GridExperimentConfig,
    slope: f64,
    train: &Dataset,
    family: &LogRegFamily,
    cell_tags: &[u64; 3],
    mi: usize,
) -> Result<SampleSet> {
    let generator = CgmFamily::new(TOY_DIM, slope)?;
    let complete = train.complete_cases();
    let pre_seed = derive_seed(
        config.seed,
        &[tags::CHAIN, cell_tags[0], cell_tags[1], cell_tags[2], mi as u64, 1],
    );
    let pre_target = PosteriorTarget::new(&generator, &complete, PosteriorKind::Discriminative)?;
    let pre_chains = config.chain_config(pre_target.dim(), false, pre_seed);
    let pre = run_chains(&pre_target, &pre_chains)?;

    let mut impute_rng = rng_from(
        config.seed,
        &[tags::IMPUTE, cell_tags[0], cell_tags[1], cell_tags[2]],
    );
    let imputations = impute_for_regression(
        train,
        &generator,
        ThetaSource::Draws(&pre),
        config.n_chains,
        &mut impute_rng,
    )?;
    let targets: Vec<PosteriorTarget> = imputations
        .datasets()
        .iter()
        .map(|d| PosteriorTarget::new(family, d, PosteriorKind::Regression))
        .collect::<Result<_>>()?;
    let chain_seed = derive_seed(
        config.seed,
        &[tags::CHAIN, cell_tags[0], cell_tags[1], cell_tags[2], mi as u64],
    );
    let chains = config.chain_config(targets[0].dim(), true, chain_seed);
    run_chains_on(&targets, &chains)
}
