//! Partition-of-unity collocation with radial kernels for time-dependent PDEs
//! on the unit square, stepped with the theta scheme.
//!
//! The numerical core is generic over the scalar ([`Real`], implemented for
//! `f32`, `f64` and the double-double [`dd::Dd`]); the aliases below fix it to
//! `f64` or `f32`. The [`experiment`] layer works in `f64`.

pub mod assembly;
pub mod covering;
pub mod dd;
pub mod error;
pub mod experiment;
pub mod kernels;
pub mod linalg;
pub mod localinterp;
pub mod pde;
pub mod points;
pub mod scalar;
pub mod stability;

pub use error::{Error, Result};
pub use localinterp::{Op, Precision};
pub use scalar::{Point2, Real};

pub type KernelSpec = kernels::KernelSpec<f64>;
pub type NodeSet = points::NodeSet<f64>;
pub type Covering = covering::Covering<f64>;
pub type Discretization = assembly::Discretization<f64>;
pub type SparseMatrix = linalg::SparseMatrix<f64>;
pub type Problem = pde::Problem<f64>;
pub type TimeScheme = pde::TimeScheme<f64>;

pub type KernelSpecF32 = kernels::KernelSpec<f32>;
pub type NodeSetF32 = points::NodeSet<f32>;
pub type CoveringF32 = covering::Covering<f32>;
pub type DiscretizationF32 = assembly::Discretization<f32>;
pub type SparseMatrixF32 = linalg::SparseMatrix<f32>;
pub type ProblemF32 = pde::Problem<f32>;
pub type TimeSchemeF32 = pde::TimeScheme<f32>;
