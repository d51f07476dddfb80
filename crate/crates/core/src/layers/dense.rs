use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::layers::{glorot_uniform, Parameterized};
use crate::numeric::{matmul, matmul_nt, matmul_tn, sigmoid_scalar, Matrix};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Activation {
    Relu,
    Sigmoid,
    None,
}

impl Activation {
    #[inline]
    fn apply(self, x: f64) -> f64 {
        match self {
            Activation::Relu => x.max(0.0),
            Activation::Sigmoid => sigmoid_scalar(x),
            Activation::None => x,
        }
    }

    /// Derivative expressed through the activation's output.
    #[inline]
    fn derivative_from_output(self, y: f64) -> f64 {
        match self {
            Activation::Relu => {
                if y > 0.0 {
                    1.0
                } else {
                    0.0
                }
            }
            Activation::Sigmoid => y * (1.0 - y),
            Activation::None => 1.0,
        }
    }
}

/// `φ(X·W + b)` with `W: in × out`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DenseLayer {
    pub weight: Matrix,
    pub bias: Vec<f64>,
    pub activation: Activation,
}

impl DenseLayer {
    pub fn new(in_dim: usize, out_dim: usize, activation: Activation, rng: &mut impl Rng) -> Self {
        Self {
            weight: glorot_uniform(rng, in_dim, out_dim),
            bias: vec![0.0; out_dim],
            activation,
        }
    }

    pub fn in_dim(&self) -> usize {
        self.weight.rows()
    }

    pub fn out_dim(&self) -> usize {
        self.weight.cols()
    }

    pub fn forward(&self, x: &Matrix) -> Result<Matrix> {
        if x.cols() != self.in_dim() {
            return Err(Error::Shape {
                op: "dense_forward",
                left: x.shape(),
                right: self.weight.shape(),
            });
        }
        let mut out = matmul(x, &self.weight)?;
        let act = self.activation;
        for i in 0..out.rows() {
            for (v, b) in out.row_mut(i).iter_mut().zip(&self.bias) {
                *v = act.apply(*v + b);
            }
        }
        Ok(out)
    }

    /// Returns `(dL/dX, [dL/dW, dL/db])` given the forward input and output.
    pub fn backward(&self, x: &Matrix, output: &Matrix, grad_out: &Matrix) -> Result<(Matrix, Vec<Vec<f64>>)> {
        if output.shape() != grad_out.shape() || x.rows() != output.rows() {
            return Err(Error::Shape {
                op: "dense_backward",
                left: output.shape(),
                right: grad_out.shape(),
            });
        }
        let act = self.activation;
        let grad_pre = output.zip_map(grad_out, "dense_backward", |y, g| g * act.derivative_from_output(y))?;
        let grad_w = matmul_tn(x, &grad_pre)?;
        let grad_b = grad_pre.column_sums();
        let grad_x = matmul_nt(&grad_pre, &self.weight)?;
        Ok((grad_x, vec![grad_w.into_vec(), grad_b]))
    }
}

impl Parameterized for DenseLayer {
    fn param_names(&self) -> Vec<&'static str> {
        vec!["weight", "bias"]
    }

    fn params(&self) -> Vec<&[f64]> {
        vec![self.weight.as_slice(), &self.bias]
    }

    fn params_mut(&mut self) -> Vec<&mut [f64]> {
        vec![self.weight.as_mut_slice(), &mut self.bias]
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::layers::test_support::{check_layer, random_matrix};
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    #[test]
    fn identity_weights_pass_input_through() {
        let layer = DenseLayer {
            weight: Matrix::identity(3),
            bias: vec![0.0; 3],
            activation: Activation::None,
        };
        let x = Matrix::from_rows(&[[1.0, -2.0, 3.0], [0.5, 0.0, -1.0]]).unwrap();
        assert_eq!(layer.forward(&x).unwrap(), x);
    }

    #[test]
    fn zero_weights_give_relu_of_bias() {
        let layer = DenseLayer {
            weight: Matrix::zeros(2, 3),
            bias: vec![-1.0, 0.5, 2.0],
            activation: Activation::Relu,
        };
        let out = layer.forward(&Matrix::filled(4, 2, 7.0)).unwrap();
        for row in out.iter_rows() {
            assert_eq!(row, &[0.0, 0.5, 2.0]);
        }
    }

    #[test]
    fn shape_mismatch() {
        let mut rng = ChaCha8Rng::seed_from_u64(0);
        let layer = DenseLayer::new(3, 2, Activation::Relu, &mut rng);
        assert!(layer.forward(&Matrix::zeros(2, 4)).is_err());
    }

    #[test]
    fn gradients_match_finite_differences() {
        let mut rng = ChaCha8Rng::seed_from_u64(21);
        for act in [Activation::Relu, Activation::Sigmoid, Activation::None] {
            let mut layer = DenseLayer::new(5, 4, act, &mut rng);
            layer.bias = vec![0.1, -0.2, 0.3, 0.05];
            let x = random_matrix(&mut rng, 6, 5);
            let weights = random_matrix(&mut rng, 6, 4);
            let err = check_layer(
                &mut layer,
                &x,
                &weights,
                |l, x| l.forward(x).unwrap(),
                |l, x, out, g| l.backward(x, out, g).unwrap(),
            );
            assert!(err < 1e-4, "{act:?}: {err}");
        }
    }
}
