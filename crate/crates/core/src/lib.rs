//! Inter-industry payment ledgers as weighted production networks.

pub mod centrality;
pub mod concordance;
pub mod diffs;
pub mod distcorr;
pub mod ingest;
pub mod iot;
pub mod linalg;
pub mod money;
pub mod netstats;
pub mod period;
pub mod plfit;
pub mod rng;
pub mod series;
pub mod stats;
pub mod synth;
