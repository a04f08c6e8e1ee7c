//! Reliability-aware speed control for PMSM traction drives: H∞ controller
//! synthesis, closed-loop drive-cycle simulation and IGBT lifetime analysis.

pub mod cli;
pub mod config;
pub mod drive_cycle;
pub mod error;
pub mod linalg;
pub mod lti;
pub mod motor;
pub mod norm;
pub mod pipeline;
pub mod rainflow;
pub mod riccati;
pub mod sim;
pub mod synthesis;
pub mod thermal;

pub use error::{Error, Result};
