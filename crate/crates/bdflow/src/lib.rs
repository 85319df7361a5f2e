//! Simulation and analysis of barotropic compressible Navier-Stokes flow
//! under the BD viscosity relation `lambda = 2 rho mu' - 2 mu`, built
//! around the effective velocity `v = u + grad phi(rho)`.
//!
//! The crate provides:
//! - spectral fields and exact differential operators on the periodic box
//!   ([`spectral_grid`]),
//! - dyadic frequency analysis: blocks, Besov / hybrid / Chemin-Lerner
//!   norms and the Bony decomposition ([`littlewood_paley`]),
//! - the viscosity law and derived potentials ([`constitutive`]),
//! - the three equivalent system formulations and their remainders
//!   ([`formulations`]),
//! - IMEX time integration with closed-form linear references
//!   ([`evolution`]),
//! - entropy budgets, smoothing certificates and estimate certificates
//!   ([`diagnostics`]),
//! - configuration, scenarios and run orchestration ([`runner`]).

pub mod constitutive;
pub mod diagnostics;
pub mod evolution;
pub mod formulations;
pub mod littlewood_paley;
pub mod runner;
pub mod selftest;
pub mod spectral_grid;
