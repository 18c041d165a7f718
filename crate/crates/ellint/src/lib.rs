//! Graph integrals on elliptic curves built from heat-kernel propagators,
//! with the graph polynomials that control their convergence.

pub mod engine;
pub mod error;
pub mod graph;
pub mod modular;
pub mod polynomials;
pub mod propagator;
pub mod quadrature;

pub use error::{Error, Result};
pub use num_complex::Complex64;
