//! Simulation of Rydberg-blockade cross-phase modulation between stored
//! control photons and a propagating EIT target pulse.

#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod blockade;
pub mod cli;
pub mod config;
pub mod constants;
pub mod error;
pub mod fitting;
pub mod output;
pub mod photostatistics;
pub mod polarization;
pub mod quadrature;
pub mod susceptibility;

pub use error::{Error, Result};
