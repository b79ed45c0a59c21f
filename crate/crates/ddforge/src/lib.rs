//! Dephasing of two coupled qubits under correlated Ornstein-Uhlenbeck
//! (Lorentzian-spectrum) noise, with dynamical-decoupling filter functions,
//! a post-Markovian master equation solver, Monte-Carlo trajectory
//! ensembles, and Nelder-Mead pulse-timing optimization.
//!
//! Units: times in microseconds unless a name says otherwise (`_ns`),
//! angular frequencies in rad/us. Noise amplitudes are stored as angular
//! quantities; the CLI converts from lambda/2pi in kHz.

pub mod config;
pub mod error;
pub mod filter;
pub mod metrics;
pub mod noise;
pub mod optimize;
pub mod pmme;
pub mod qmath;
pub mod sequence;
pub mod swap;
pub mod trajectory;

pub use error::DdError;
