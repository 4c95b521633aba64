//! Density of states, volume entropy, temperature and observables of
//! energy-constrained random mixed-state ensembles (Hilbert-Schmidt,
//! Bures-Hall and pure-Haar) over arbitrary finite Hamiltonian spectra,
//! with a seeded Monte Carlo oracle cross-checking every analytic pipeline.

pub mod asymptotics;
pub mod bh;
pub mod dos;
pub mod error;
pub mod exact;
pub mod hs;
pub mod pure;
pub mod quad;
pub mod sampling;
pub mod special;
pub mod spectrum;
pub mod thermo;
pub mod verify;

pub use bh::{bh_plateau_closed_form, bh_qubit_closed_form, BhDos, BhOptions};
pub use dos::{CdfTable, DosBuilder, DosFunction, Ensemble, Normalization};
pub use error::{Error, Result};
pub use hs::{hs_coefficients, hs_coefficients_float, HsCoefficientTable};
pub use pure::{pure_omega_density, pure_omega_integrated, PureDos, PureOptions};
pub use spectrum::{
    curie_weiss, curie_weiss_exact, linear_spectrum, linear_spectrum_exact,
    noninteracting_spins, noninteracting_spins_exact, ModelSpec, Spectrum,
};
