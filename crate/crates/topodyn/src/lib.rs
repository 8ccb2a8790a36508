//! Topological features of reconstructed dynamical attractors.
//!
//! The pipeline: delay-embed a scalar series into a point cloud
//! ([`embedding`]), build a Rips filtration with temporal links
//! ([`filtration`]), reduce it to persistence diagrams ([`homology`]),
//! compare diagrams with matching distances ([`metrics`]), and classify
//! multichannel recordings by nearest neighbor over summed channel
//! distances ([`classify`]). [`dynamics`] synthesizes benchmark signals
//! from chaotic flows, [`dataset`] handles on-disk corpora, and
//! [`oracle`] is a slow reference implementation of persistence used by
//! the test suite.

pub mod classify;
pub mod dataset;
pub mod dynamics;
pub mod embedding;
pub mod filtration;
pub mod homology;
pub mod io;
pub mod metrics;
pub mod oracle;

pub use embedding::{
    delay_embed, estimate_delay, subsample, EmbeddingConfig, EmbeddingError, PointCloud,
    TimeSeries,
};
