//! Dense linear algebra and finite-difference checking.

mod gradcheck;
mod matrix;

pub use gradcheck::{grad_check, relative_error};
pub(crate) use matrix::softmax_in_place;
pub use matrix::{dot, matmul, matmul_nt, matmul_tn, relu, sigmoid, sigmoid_scalar, softmax_rows, Matrix};
