//! Self-healing hybrid prediction pipeline for dirty tabular data.
//!
//! Stages, in pipeline order:
//!
//! - [`rulemine`]: crisp (apriori) and fuzzy association rules used as validation rules
//! - [`cleanse`]: context-dependent attribute correction, pruning, z-score normalization
//! - [`featsel`]: genetic-algorithm wrapper feature selection, one mask per base classifier
//! - [`ensemble`]: locally boosted base classifiers combined by majority vote
//! - [`metrics`]: confusion matrices, accuracy/specificity/sensitivity/kappa, cross-validation

pub mod classify;
pub mod cleanse;
pub mod config;
pub mod ensemble;
pub mod error;
pub mod featsel;
pub mod metrics;
pub mod pima;
pub mod rng;
pub mod rulemine;
pub mod tabular;

pub use config::RshConfig;
pub use error::{Error, Result, Stage};
