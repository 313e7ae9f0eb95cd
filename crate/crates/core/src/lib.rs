//! Casimir momentum of a chiral two-particle oscillator in a static magnetic
//! field.
//!
//! The crate evaluates the vacuum-field momentum transferred to a
//! magnetochiral molecule modelled as an anisotropic harmonic oscillator with
//! a chiral perturbation `C x y z`, through a linear-response (semiclassical)
//! route and a perturbative QED route, and checks the energy balance of the
//! adiabatic field switch-on. All quantities are in internal units with
//! hbar = c = m_e = eps0 = 1.

pub mod acceptance;
pub mod cli;
pub mod config;
pub mod energy;
pub mod error;
pub mod fock;
pub mod params;
pub mod perturbation;
pub mod qed;
pub mod quadrature;
pub mod response;
pub mod run;
pub mod semiclassical;
pub mod solver;
pub mod units;

pub use error::{Error, Result};
