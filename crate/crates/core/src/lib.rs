//! Connectivity restoration for UAV swarm networks split by massive damage.
//!
//! The crate is organised bottom-up:
//!
//! - [`swarm`]: disk-model swarm graphs, damage scenarios, hop distances,
//!   sub-net counting and the multi-hop differential sub-graphs (MDSGs).
//! - [`apf`]: the closed-form potential-field planner driven by MDSG centroids.
//! - [`gco`]: the bipartite graph convolution kernel `I - eps * L` and batching.
//! - [`gcn`]: the trainable graph-convolution planner (forward, joint loss,
//!   manual backprop, Adam, model persistence).
//! - [`sim`]: time-stepped kinematic replay of velocity policies and the
//!   direct-centering baseline.
//! - [`metrics`]: recovery time, spatial coverage and degree distributions.

pub mod apf;
pub mod error;
pub mod gcn;
pub mod gco;
pub mod geometry;
pub mod metrics;
pub mod sim;
pub mod swarm;

pub use error::{Error, Result};
pub use geometry::Position;
