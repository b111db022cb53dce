//! Desk-scale simulation of digitally encoded quantum grid solvers.
//!
//! The crate has three layers:
//!
//! - a sparse state-vector simulator ([`sim`]) where grid data is stored
//!   digitally, one basis branch per grid point, with exact amplitude-level
//!   treatment of the interference-bearing steps;
//! - the data-register sharing protocol ([`sharing`]) that lets paired
//!   branches learn each other's data bits through Grover diffusion and
//!   3-bit phase estimation, and the solver pipelines built on it
//!   ([`qjacobi`], [`qmultigrid`]);
//! - classical reference solvers ([`classical`]) in both real and fixed-point
//!   arithmetic. The fixed-point variants are bit-exact oracles for the
//!   quantum pipelines, and [`resources`] implements the cost formulas the
//!   protocol is priced in.

pub mod classical;
pub mod encoding;
pub mod error;
pub mod pipeline;
pub mod qjacobi;
pub mod qmultigrid;
pub mod resources;
pub mod sharing;
pub mod sim;

pub use error::{Error, Result};
