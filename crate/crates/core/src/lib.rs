//! Simulation of a 15-DoF tendon-driven robotic hand.
//!
//! Each finger has a two-axis MCP joint driven by two palm motors through
//! antagonistic tendons and a PIP joint driven by a forearm motor through a
//! conduit. The crate covers finger kinematics, the tendon transmission, the
//! motor model, the cascaded position/current controller with its sensing
//! chain and board network, workspace estimation and a grasp preset library.
//!
//! Angles are radians and lengths millimetres throughout; torques are N·mm.

#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod actuation;
pub mod bus;
pub mod calibration;
pub mod config;
pub mod control;
pub mod error;
pub mod grasp;
pub mod host;
pub mod kinematics;
pub mod sensing;
pub mod transmission;
pub mod workspace;

pub use config::HandConfig;
pub use error::{Error, Result};
