//! Scene configuration, frame persistence, kernel assets, metrics, and the
//! pipeline drivers behind the `splat` binary.

pub mod asset;
pub mod config;
pub mod framedump;
pub mod metrics;
pub mod run;
pub mod setup;
