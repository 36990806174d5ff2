//! Simulation toolkit for random products of weighted backward shifts
//! driven by ergodic systems: growth diagnostics on log weight-products,
//! Birkhoff and Nörlund averages, Rokhlin-tower constructions, and seeded
//! experiment recipes with evidence verdicts.

pub mod averages;
pub mod cocycle;
pub mod config;
pub mod ergodic;
pub mod error;
pub mod exec;
pub mod fft;
pub mod recipes;
pub mod report;
pub mod rokhlin;
pub mod spaces;
pub mod util;
pub mod weights;

pub use error::{Error, Result};
