//! Predicting long-term sustained activity of open-source projects from their
//! early participation.
//!
//! The pipeline runs in stages, each in its own module:
//!
//! 1. [`ingest`]: event logs, project snapshots and participant profiles.
//! 2. [`corpus`]: project selection filters and sustained-activity labels.
//! 3. [`roles`]: core / peripheral / non-code participant split.
//! 4. [`features`]: the 64-variable early-participation feature vector.
//! 5. [`learner`]: gradient-boosted trees, logistic baseline, cross-validation.
//! 6. [`explain`]: perturbation-based local linear explanations.
//! 7. [`determinants`]: sign-group rank tests and effect classification.
//!
//! [`synth`] generates corpora with planted ground truth for validation.

pub mod config;
pub mod corpus;
pub mod determinants;
pub mod explain;
pub mod features;
pub mod ingest;
pub mod learner;
pub mod roles;
pub mod seeds;
pub mod stats;
pub mod synth;
pub mod tables;
