//! Calculus of functions differentiable with respect to a finite-dimensional
//! commutative unital algebra along a fixed map `phi`.

pub mod algebra;
pub mod catalog;
pub mod cre;
pub mod error;
pub mod examples;
pub mod golden;
pub mod integral;
pub mod linalg;
pub mod map;
pub mod ode;
pub mod pde;
pub mod phi;
pub mod quadratic;

pub use algebra::{Algebra, AnyAlgebra, Element, PlanarCase, Scalar, ScalarKind};
pub use error::{Error, Result};
pub use map::{PhiMap, SmoothMap, VectorFunction};
