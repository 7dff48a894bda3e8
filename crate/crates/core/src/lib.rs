//! Implicit discourse relation classification without implicit supervision.
//!
//! An implicit relation is turned into a set of explicit candidates by
//! inserting each connective of a fixed inventory between its arguments.
//! A language model scores the candidates, giving a distribution over
//! connectives, and a classifier trained on explicit relations maps
//! connectives to senses. The two are combined either by taking the best
//! connective (pipeline) or by summing over all connectives (marginal).
//!
//! Module map:
//!
//! * [`corpus`]: PDTB/BioDRB pipe parsing, splits, argument-order filtering, statistics.
//! * [`candidates`]: connective inventory and candidate generation.
//! * [`lm`]: connective distributions from pluggable scoring backends.
//! * [`classifier`]: explicit relation classifiers (frequency table, sidecar).
//! * [`inference`]: pipeline and marginal prediction, label-shift reports.
//! * [`evaluation`]: metrics, baselines, agreement and confusion matrices.
//! * [`sidecar`]: JSON Lines client for the external model service.
//! * [`experiment`]: configuration and end-to-end runs used by the CLI.

pub mod candidates;
pub mod classifier;
pub mod corpus;
pub mod evaluation;
pub mod experiment;
pub mod inference;
pub mod lm;
pub mod sidecar;
pub mod synthetic;

use sha2::{Digest, Sha256};

/// Short hex fingerprint of arbitrary bytes, used to tag artifacts.
pub fn fingerprint(bytes: &[u8]) -> String {
    let digest = Sha256::digest(bytes);
    hex::encode(&digest[..8])
}
