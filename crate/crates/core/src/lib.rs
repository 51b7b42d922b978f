//! Numerical potential theory for compactly supported measures.
//!
//! The crate evaluates Newtonian/logarithmic potentials of finite atomic
//! measures, decides balayage (sweeping-out) relations between them on
//! rasterized open sets, and measures the residuals of the classical,
//! symmetric and measure-potential Poisson–Jensen identities. Ball domains
//! carry closed-form harmonic measures and Green's functions; general grid
//! domains are handled by walk-on-spheres.
//!
//! Every integral in the crate is a finite sum over atoms. Continuous measures
//! (harmonic measure on a sphere, for instance) enter only through quadrature
//! discretizations into [`DiscreteMeasure`].

// `!(x > 0.0)` guards are deliberate: they also reject NaN.
#![allow(clippy::neg_cmp_op_on_partial_ord)]
#![allow(clippy::excessive_precision, clippy::needless_range_loop)]

pub mod balayage;
pub mod classical_domains;
pub mod duality;
pub mod error;
pub mod geometry;
pub mod kernels;
pub mod measures;
pub mod poisson_jensen;
pub mod potentials;
pub mod sphere;

pub use error::{Error, Result};
pub use kernels::{Dimension, ExtReal};
pub use measures::{Atom, DiscreteMeasure, Mass};
