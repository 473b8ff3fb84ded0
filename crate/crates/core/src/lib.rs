//! Detection of shared lemmatised constructions in referential-communication
//! dialogue corpora, with pseudo-pair baselines and the analyses that relate
//! construction dynamics to post-interaction naming convergence.

pub mod analysis;
pub mod bundle;
pub mod corpus;
pub mod extraction;
pub mod metrics;
pub mod pipeline;
pub mod pseudo;
pub mod report;
pub mod stats;
pub mod synth;
pub mod typing;
