//! Built-in model families.

pub mod cgm;
pub mod discrete;
pub mod logreg;
pub mod mlda;
pub mod mum;
pub mod toy;

pub use cgm::{CgmFamily, CGM_PRIOR_MEAN, CGM_PRIOR_SD, CGM_SIGMA_FLOOR};
pub use discrete::DiscreteFamily;
pub use logreg::{LogRegFamily, LOGREG_PRIOR_BOUND};
pub use mlda::{
    McDiagnostics, MldaFamily, MLDA_ALPHA_ALPHA, MLDA_BETA_ALPHA, MLDA_JACKKNIFE_BLOCKS,
    MLDA_MC_BATCH, MLDA_MC_CAP, MLDA_MC_RELATIVE_TOLERANCE, MLDA_PI_ALPHA,
};
pub use mum::{MumFamily, MUM_BETA_ALPHA, MUM_PI_ALPHA};
pub use toy::{
    TrueToyModel, TOY_CLASS0_INFORMATIVE_MEAN, TOY_CLASS1_INFORMATIVE_MEAN, TOY_DIM,
    TOY_INFORMATIVE_DIMS, TOY_NOISE_MEAN, TOY_SD,
};
