//! Online 3D multi-object tracking and 3D MOT evaluation.
//!
//! The tracking pipeline runs once per frame: every live trajectory is
//! advanced by a constant-velocity Kalman filter, predictions are associated
//! with the frame's detections through a Hungarian solve over a 3D IoU (or
//! negative center distance) affinity matrix, matched trajectories are
//! updated, and a birth/death memory decides which trajectories are created,
//! confirmed and retired.
//!
//! The evaluation side matches hypotheses to ground truth directly in 3D,
//! computes CLEAR metrics per confidence threshold and integrates them over a
//! recall sweep into AMOTA, AMOTP and the scaled sAMOTA.
//!
//! Data-parallel work (per-sequence matching, per-class evaluation, batch
//! affinity construction) goes through [`exec::Execution`], which uses rayon
//! when the `parallel` feature is enabled and runs sequentially otherwise.

pub mod assignment;
pub mod cli;
pub mod error;
pub mod exec;
pub mod geometry;
pub mod io;
pub mod kalman;
pub mod metrics;
pub mod tracker;

pub use error::{Error, Result};
pub use exec::Execution;
pub use geometry::Box3D;
