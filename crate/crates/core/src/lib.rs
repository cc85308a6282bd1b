//! Equilibrium payoffs and strategies of symmetric two-player stochastic
//! impulse games, computed on a symmetric finite-difference grid.
//!
//! The outer iteration ([`driver::run`]) alternates between applying the
//! opponent's mirrored strategy and solving the player's impulse-control
//! problem with fixed-point policy iteration or Howard's algorithm.

pub mod config;
pub mod diagnostics;
pub mod discretization;
pub mod driver;
pub mod error;
pub mod game;
pub mod matrix;
pub mod output;
pub mod solver;

pub use error::{Error, Result};
