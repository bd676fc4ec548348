//! Casimir free energy, entropy and pressure between two parallel magnetic
//! metal plates in Lifshitz theory.
//!
//! Quantities are dimensionless internally: frequencies in units of
//! `ω_c = c/(2a)`, free energies in units of `ħc/a³`. Public entry points that
//! take a [`PlateConfiguration`] return SI values.

pub mod cli;
pub mod constants;
pub mod diagnostics;
pub mod error;
pub mod lifshitz_numeric;
pub mod materials;
pub mod mu_dispersion;
pub mod perturbation_drude;
pub mod perturbation_plasma;
pub mod quadrature;
pub mod special_functions;

pub use error::{Error, Result};
pub use lifshitz_numeric::{EntropyResult, FreeEnergyResult, Model, ReflectionPair, Representation};
pub use materials::{DimensionlessState, Dispersion, MaterialModel, PlateConfiguration, Relaxation};
