//! Lowest-order virtual element discretisation of the damped semilinear
//! sine-Gordon equation `u_tt + γ u_t − Δu = f(u) + g` on polygonal meshes.
//!
//! The numerical core is generic over the scalar type (`f32` or `f64`);
//! the aliases at the crate root fix it to `f64`.

// negated comparisons below are deliberate: they also reject NaN
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod assembly;
pub mod geometry;
pub mod harness;
pub mod linalg;
pub mod mesh;
pub mod nonlinear;
pub mod norms;
pub mod quadrature;
pub mod scalar;
pub mod timestepper;
pub mod vem_local;

pub use scalar::Scalar;

pub type Point = geometry::Point2<f64>;
pub type Mesh = mesh::PolygonalMesh<f64>;
pub type System = assembly::GlobalSystem<f64>;
