//! Pseudo-spectral simulation of fractional porous medium flow on the
//! periodic torus, with diagnostics for its blow-up functionals and energy
//! identities and numerical checks of the supporting inequalities.

pub mod diagnostics;
pub mod driver;
pub mod model;
pub mod spectral;
pub mod timestepping;
pub mod verify;
