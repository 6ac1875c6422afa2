//! Dense matrices, activations, parameter storage and the finite-difference
//! gradient oracle.

mod activation;
pub mod gradcheck;
mod matrix;
mod param;

pub use activation::{activate, relu, sigmoid, Activation};
pub use gradcheck::{finite_difference_gradient, max_relative_error, relative_error};
pub use matrix::Matrix;
pub(crate) use matrix::{gemm_acc, gemm_tn_acc, transposed};
pub use param::{ParamTensor, Parameterized};
