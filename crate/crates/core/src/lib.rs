//! Simulation and equilibrium analysis for the four-player quantum Minority game.
//!
//! Players share one qubit each of a four-qubit state drawn from a family that
//! interpolates between the GHZ state and a product of two EPR pairs. Each
//! player applies a local SU(2) strategy, the referee reads the qubits out and
//! pays the player who ends up alone on the minority side.
//!
//! Module map:
//!
//! - [`qcore`]: dense 2^n state vectors, 2×2 operators, ensembles.
//! - [`states`]: the entangled state family, white-noise mixing, fidelities.
//! - [`strategies`]: strategy parametrization and waveplate realization.
//! - [`game`]: the Minority payoff rule and expected payoffs in Z/X/Y readout.
//! - [`equilibrium`]: symmetric Nash and Pareto-optimal profiles.
//! - [`analysis`]: coincidence-count processing and fitting of the noise fidelity.

pub mod analysis;
pub mod equilibrium;
mod error;
pub mod game;
pub mod optimize;
pub mod qcore;
pub mod states;
pub mod strategies;

pub use error::{Error, ParseIssue, Result};

/// Default numerical tolerances.
pub mod tol {
    /// Algebraic identities (norms, unitarity, probability sums).
    pub const ALGEBRAIC: f64 = 1e-12;
    /// Local optimizer convergence.
    pub const OPTIMIZATION: f64 = 1e-9;
    /// Best-response gain below which a profile counts as an equilibrium.
    pub const CERTIFY: f64 = 1e-6;
}
