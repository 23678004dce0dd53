//! OFDM monostatic radar range-Doppler estimation toolkit.
//!
//! The pipeline: synthesize channel-estimate matrices from multi-target
//! scenes, build sparse log-amplitude range-Doppler labels, train a small
//! residual CNN to predict the map, and benchmark it against a classical
//! 2D-periodogram estimator with index-RMSE, PSNR and timing metrics.

pub mod config;
pub mod dataset;
pub mod error;
pub mod map;
pub mod metrics;
pub mod model;
pub mod nn;
pub mod periodogram;
pub mod render;
pub mod sim;

pub use error::{Error, Result};
pub use map::RdMap;
pub use sim::{ChannelEstimate, RadarConfig, Target, TargetScene};
