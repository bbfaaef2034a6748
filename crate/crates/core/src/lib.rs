//! CP (CANDECOMP/PARAFAC) decomposition of dense real and complex tensors.
//!
//! The main solver is a damped Gauss-Newton (Levenberg-Marquardt) iteration
//! whose step is computed from `R x R` Gram products and a small
//! `N R^2 x N R^2` system instead of the full `RT x RT` approximate Hessian.
//! A dense Jacobian-based solver is kept alongside as a correctness oracle,
//! together with ALS baselines, a collinear benchmark generator and
//! angular-error scoring.

pub mod als;
pub mod complex;
pub mod cp;
pub mod error;
pub mod fit;
pub mod flm;
pub mod gram;
pub mod hessian;
pub mod init;
pub mod io;
pub mod kruskal;
pub mod linalg;
pub mod products;
pub mod rng;
pub mod scalar;
pub mod synth;
pub mod tensor;
pub mod verify;

/// Column-major dense matrix.
pub type Matrix<T> = nalgebra::DMatrix<T>;

pub use error::{CpError, Result};
pub use gram::{build_gram_cache, GramCache};
pub use kruskal::KruskalModel;
pub use scalar::{Scalar, ScalarKind};
pub use tensor::DenseTensor;
