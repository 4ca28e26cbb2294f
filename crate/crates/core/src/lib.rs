//! Numeric tensor calculus on first-order jet bundles J¹(T,M): the Cartan
//! canonical connection of a generalized metrical multi-time Lagrange space,
//! its torsion and curvature, the induced electromagnetic and gravitational
//! field equations, and checks of every identity they satisfy.

// index loops mirror the component formulas
#![allow(clippy::needless_range_loop)]

pub mod diff;
pub mod dual;
pub mod em;
pub mod expr;
pub mod geometry;
pub mod gravity;
pub mod jet;
pub mod linalg;
pub mod residual;
pub mod sampling;
pub mod scalar;
pub mod spaces;
pub mod tensor;

pub use dual::Dual;
pub use geometry::{GeometryContext, GeometryError};
pub use jet::{Coord, Dims, JetPoint};
pub use scalar::Scalar;
pub use tensor::{DTensor, Slot};

/// Double-precision jet point.
pub type Point = JetPoint<f64>;
/// Single-precision jet point.
pub type Point32 = JetPoint<f32>;
/// Double-precision d-tensor.
pub type Tensor = DTensor<f64>;
/// Single-precision d-tensor.
pub type Tensor32 = DTensor<f32>;
/// First-order dual over `f64`.
pub type Dual64 = Dual<f64>;
