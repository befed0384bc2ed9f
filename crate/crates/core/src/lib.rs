//! Distributional densitized scalar curvature of Regge metrics on simplicial
//! meshes, with an HHJ-based H⁻² norm and a convergence harness.

pub mod error;
pub mod functionals;
pub mod geometry;
pub mod harness;
pub mod hhj;
pub mod lagrange;
pub mod linalg;
pub mod mesh;
pub mod metric;
pub mod polynomial;
pub mod quadrature;
pub mod regge;

pub use error::{Error, Result};
