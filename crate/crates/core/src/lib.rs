//! Computational machinery for cube structures in dynamics: discrete-cube
//! combinatorics, Host-Kra cube groups, dynamical cubespaces for explicit
//! systems, Gowers box seminorms, nilcycle extraction and verification, and
//! a sampled function-bundle model of group extensions.

pub mod cube;
pub mod cubespace;
pub mod nilcycle;
pub mod seminorms;
mod error;
pub mod groups;
pub mod model;
pub mod stats;
pub mod systems;

pub use error::{Error, Result};
