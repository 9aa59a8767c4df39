//! Loop-formalism numerics for thermal QED of non-relativistic charged fluids.
//!
//! Quantum point charges in equilibrium with the radiation field map onto
//! closed Brownian loops carrying stochastic line integrals; integrating the
//! photon field out leaves an effective current-current pair potential on top
//! of the equal-time Coulomb interaction. This crate provides
//!
//! - the physical length-scale hierarchy and ultraviolet form factor
//!   ([`scales`]),
//! - Brownian bridge sampling with exact discrete covariance and midpoint-rule
//!   stochastic line integrals ([`paths`]),
//! - the photon covariance kernels and the quantum kernel `Q(k, τ)`
//!   ([`kernels`]),
//! - loop-loop interactions: Coulomb, self-energy, the effective magnetic
//!   potential, the dipolar Coulomb tail, and the assembled Gibbs weight
//!   ([`potentials`]),
//! - asymptotic screening analysis: the dipolar-tail cancellation, the
//!   sub-photon-regime amplitude constant `A`, and regime estimates
//!   ([`asymptotics`]),
//! - a deterministic Monte Carlo experiment harness with a CLI ([`harness`]).
//!
//! All pair-potential evaluators work in scaled variables: the pair
//! separation sets the unit of length, so inputs are the dimensionless ratios
//! `λ_mat/r`, `λ_ph/r`, `λ_cut/r`.

pub mod asymptotics;
pub mod harness;
pub mod kernels;
pub mod par;
pub mod paths;
pub mod potentials;
pub mod quad;
pub mod scales;

use thiserror::Error;

/// Crate-wide error type.
#[derive(Debug, Error)]
pub enum Error {
    /// Input outside the mathematical domain of an operation.
    #[error("domain error: {0}")]
    Domain(String),
    /// A quadrature failed to reach its requested tolerance.
    #[error("quadrature did not converge: requested {requested:e}, achieved {achieved:e}")]
    Quadrature { requested: f64, achieved: f64 },
    /// A computed component came out non-finite.
    #[error("non-finite value in {context}")]
    NonFinite { context: String },
    /// Configuration file problem.
    #[error("config error: {0}")]
    Config(String),
    /// Unknown experiment name.
    #[error("unknown experiment: {0}")]
    UnknownExperiment(String),
    /// I/O failure while emitting artifacts.
    #[error("i/o error: {0}")]
    Io(#[from] std::io::Error),
}

pub type Result<T> = std::result::Result<T, Error>;
