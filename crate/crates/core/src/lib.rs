//! Fisher metric, Fisher distance, Markov pushforwards, Hausdorff-Jeffrey
//! measures and Cramér-Rao gaps on finite-dimensional, possibly singular,
//! statistical models.

#![allow(clippy::neg_cmp_op_on_partial_ord, clippy::needless_range_loop)]

pub mod distance;
pub mod error;
pub mod estimation;
pub mod fisher;
pub mod hausdorff;
pub mod markov;
pub mod measure;
pub mod models;
pub mod quadrature;
pub mod special;
pub mod tol;
pub mod verify;
pub mod weak;

pub use error::{Error, Result};
pub use fisher::FisherMatrix;
pub use measure::{Measure, SampleSpace, TangentVector};
pub use models::{CurveInModel, ParamDomain, ParamModel};
pub use quadrature::QuadRule;
