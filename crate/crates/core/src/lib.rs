//! Nonlinear (f-deformed) two-mode charge coherent states, their even and odd
//! superpositions, and numerical checks of their algebraic and
//! nonclassical properties.

pub mod dalg;
pub mod deform;
pub mod error;
pub mod fock;
pub mod nonclass;
pub mod numeric;
pub mod resolve;
pub mod states;

pub use deform::{DeformationSpec, Radius};
pub use error::{Error, Result};
pub use fock::{ChargeSectorState, FockSpace, Op, OpExpr, Quadrature};
pub use num_complex::Complex64 as C64;
