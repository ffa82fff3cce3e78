//! DRASTIC-style GOP configuration selection for HEVC encoders.
//!
//! The crate walks the whole pipeline: enumerate a GOP configuration space
//! ([`config_space`]), measure each configuration on a video segment through
//! one of three backends ([`backend`]), reduce measurements to a Pareto front
//! over (PSNR, encoding time, bitrate) ([`pareto`]), solve the four
//! constrained optimization modes over a front ([`solver`]), simulate
//! per-segment dynamic switching ([`planner`]), and persist everything in a
//! seven-table relational store with the matching retrieval queries ([`rvd`]).
//!
//! All file formats are plain columnar UTF-8 text with header rows, so the
//! output of one stage feeds directly into the next.

pub mod backend;
pub mod config_space;
pub mod fixtures;
mod id;
pub mod pareto;
pub mod planner;
pub mod rvd;
pub mod solver;

pub use id::ConfigId;
