//! Numerical laboratory for the van der Waals–London asymptotics of model atoms
//! with pseudo-relativistic kinetic energy `√(p² + 1) − 1` (units ħ = m = c = 1).

pub mod dimer;
pub mod lattice;
pub mod multipole;
pub mod operators;
pub mod special;
pub mod spectra;
pub mod symmetry;
pub mod vdw;

pub use num_complex::Complex64;
