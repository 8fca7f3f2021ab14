//! Numerical laboratory for random monochromatic waves and wavelength-scale
//! localization of Laplacian eigenfunctions on explicit manifolds.
//!
//! The crate provides:
//! - two independent samplers of the isotropic monochromatic Gaussian field
//!   (plane-wave superposition and Bessel–Fourier expansion) with exact
//!   analytic derivatives,
//! - flat tori and the round sphere with closed-form spectra, eigenfunctions,
//!   exponential maps and frame fields,
//! - the wavelength-scale localization map, C^r(B) norms, a Fréchet metric on
//!   smooth functions, and a Helmholtz residual,
//! - a library of bounded test functionals including a nodal-component
//!   counter,
//! - seeded Monte-Carlo experiment engines with replayable records, and a
//!   declarative configuration layer used by the `berrylab` CLI.

pub mod config;
pub mod experiment;
pub mod field;
pub mod functional;
pub mod jets;
pub mod localize;
pub mod manifold;
pub mod special;
pub mod stats;
