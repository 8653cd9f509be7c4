//! End-to-end experiment drivers.
//!
//! The harness turns the sampling and evaluation layers into two
//! reproducible studies plus supporting machinery:
//!
//! * [`grid`] — the toy-grid study: joint, discriminative, and regression
//!   fits across training sizes and misspecification slopes, with optional
//!   feature masking, winner tables, and CSV output;
//! * [`docs`] — the document study: word-mixture and topic-admixture fits
//!   on synthetic or file-backed corpora, with mutual-information
//!   vocabulary selection and published reference perplexities for context;
//! * [`plots`] — self-contained SVG figures of grid results;
//! * [`features`] — mutual-information word selection;
//! * [`kv`] — the `key = value` config-file format both studies read;
//! * [`registry`] — model-family lookup by identifier string;
//! * [`verify`] — a fast battery re-checking the structural identities the
//!   stack relies on.
//!
//! Every study derives all randomness from one master seed, so a config
//! file plus a seed reproduces results byte for byte.

pub mod docs;
pub mod features;
pub mod grid;
pub mod kv;
pub mod plots;
pub mod registry;
pub mod verify;

pub use docs::{
    run_doc_experiment, synthetic_corpus, CorpusSource, DocCell, DocExperimentConfig, DocMethod,
    DocModel, DocResults, REFERENCE_PERPLEXITIES,
};
pub use features::{mutual_information_scores, select_features_mi, FeatureSelection};
pub use grid::{
    dataset_hash, run_toy_grid, GridCell, GridExperimentConfig, GridMethod, GridResults, Winner,
    WinnerRow,
};
pub use kv::KvConfig;
pub use plots::{emit_plots, perplexity_curves_svg, winner_grid_svg};
pub use registry::family_from_id;
pub use verify::{run_verification, VerifyCheck};
