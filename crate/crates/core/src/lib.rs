//! Sign changes of Hecke eigenvalues: exact coefficient tables, B-free
//! sieving, Voronoi residual experiments and short-interval sign counts.

pub mod arith;
pub mod bfree;
pub mod error;
pub mod forms;
pub mod intervals;
pub mod quadrature;
pub mod series;
pub mod summation;
pub mod verify;
pub mod voronoi;

pub use error::{Error, Result};
pub use forms::{EigenForm, FormSource, Weierstrass};
pub use summation::Precision;
