use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::layers::{glorot_uniform, Mode, Parameterized};
use crate::numeric::{sigmoid_scalar, Matrix};

/// Column means over the batch: the per-attribute descriptor `z`.
pub fn squeeze(x: &Matrix) -> Result<Vec<f64>> {
    if x.rows() == 0 {
        return Err(Error::invalid("squeeze over an empty batch"));
    }
    x.column_means()
}

/// Hidden width of the excitation bottleneck: `d / r`, but never narrower than
/// `min(d, 4)`.
pub fn bottleneck_width(d: usize, reduction_ratio: usize) -> usize {
    (d / reduction_ratio.max(1)).max(d.min(4)).max(1)
}

/// Squeeze-and-excitation over the columns of its input.
///
/// Scores are `s = σ(relu(z·W1)·W2)`. Training uses the batch descriptor and
/// tracks an exponential moving average of it; evaluation uses only the frozen
/// average, so a row's output never depends on the rest of its batch.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SqueezeExcite {
    pub w1: Matrix,
    pub w2: Matrix,
    pub frozen_z: Option<Vec<f64>>,
    pub ema_beta: f64,
}

/// Everything the backward pass needs from a forward call.
#[derive(Debug, Clone)]
pub struct SeForward {
    pub output: Matrix,
    pub descriptor: Vec<f64>,
    pub hidden_pre: Vec<f64>,
    pub scores: Vec<f64>,
}

impl SqueezeExcite {
    pub fn new(d: usize, reduction_ratio: usize, ema_beta: f64, rng: &mut impl Rng) -> Self {
        let h = bottleneck_width(d, reduction_ratio);
        Self {
            w1: glorot_uniform(rng, d, h),
            w2: glorot_uniform(rng, h, d),
            frozen_z: None,
            ema_beta,
        }
    }

    pub fn channels(&self) -> usize {
        self.w1.rows()
    }

    fn excite_parts(&self, z: &[f64]) -> Result<(Vec<f64>, Vec<f64>)> {
        if z.len() != self.channels() {
            return Err(Error::Shape {
                op: "excite",
                left: (1, z.len()),
                right: self.w1.shape(),
            });
        }
        let h = self.w1.cols();
        let mut hidden_pre = vec![0.0; h];
        for (zj, w_row) in z.iter().zip(self.w1.iter_rows()) {
            for (acc, w) in hidden_pre.iter_mut().zip(w_row) {
                *acc += zj * w;
            }
        }
        let mut logits = vec![0.0; self.channels()];
        for (&u, w_row) in hidden_pre.iter().zip(self.w2.iter_rows()) {
            let a = u.max(0.0);
            if a == 0.0 {
                continue;
            }
            for (acc, w) in logits.iter_mut().zip(w_row) {
                *acc += a * w;
            }
        }
        Ok((hidden_pre, logits.into_iter().map(sigmoid_scalar).collect()))
    }

    /// Importance scores for descriptor `z`.
    pub fn excite(&self, z: &[f64]) -> Result<Vec<f64>> {
        Ok(self.excite_parts(z)?.1)
    }

    /// The static scores used at evaluation time.
    pub fn frozen_scores(&self) -> Result<Vec<f64>> {
        let z = self
            .frozen_z
            .as_ref()
            .ok_or_else(|| Error::NotTrained("squeeze-excitation statistics are not frozen".into()))?;
        self.excite(z)
    }

    pub fn forward(&self, x: &Matrix, mode: Mode) -> Result<SeForward> {
        if x.cols() != self.channels() {
            return Err(Error::Shape {
                op: "se_forward",
                left: x.shape(),
                right: self.w1.shape(),
            });
        }
        let descriptor = match mode {
            Mode::Train => squeeze(x)?,
            Mode::Eval => self
                .frozen_z
                .clone()
                .ok_or_else(|| Error::NotTrained("squeeze-excitation statistics are not frozen".into()))?,
        };
        let (hidden_pre, scores) = self.excite_parts(&descriptor)?;
        let output = x.scale_columns(&scores)?;
        Ok(SeForward {
            output,
            descriptor,
            hidden_pre,
            scores,
        })
    }

    /// Returns `(dL/dX, [dL/dW1, dL/dW2])`. In train mode the descriptor is
    /// the batch mean, so the gradient also flows back through the squeeze.
    pub fn backward(
        &self,
        x: &Matrix,
        fwd: &SeForward,
        grad_out: &Matrix,
        mode: Mode,
    ) -> Result<(Matrix, Vec<Vec<f64>>)> {
        if x.shape() != grad_out.shape() {
            return Err(Error::Shape {
                op: "se_backward",
                left: x.shape(),
                right: grad_out.shape(),
            });
        }
        let d = self.channels();
        let h = self.w1.cols();
        let mut grad_x = grad_out.scale_columns(&fwd.scores)?;

        // dL/ds_j = Σ_i G_ij X_ij
        let mut grad_logit = vec![0.0; d];
        for (g_row, x_row) in grad_out.iter_rows().zip(x.iter_rows()) {
            for ((acc, g), xv) in grad_logit.iter_mut().zip(g_row).zip(x_row) {
                *acc += g * xv;
            }
        }
        for (g, s) in grad_logit.iter_mut().zip(&fwd.scores) {
            *g *= s * (1.0 - s);
        }

        let mut grad_w2 = Matrix::zeros(h, d);
        let mut grad_hidden = vec![0.0; h];
        for (k, &u) in fwd.hidden_pre.iter().enumerate() {
            let a = u.max(0.0);
            let w_row = self.w2.row(k);
            let mut back = 0.0;
            for (j, &gl) in grad_logit.iter().enumerate() {
                grad_w2[(k, j)] = a * gl;
                back += w_row[j] * gl;
            }
            grad_hidden[k] = if u > 0.0 { back } else { 0.0 };
        }

        let mut grad_w1 = Matrix::zeros(d, h);
        let mut grad_z = vec![0.0; d];
        for j in 0..d {
            let zj = fwd.descriptor[j];
            let w_row = self.w1.row(j);
            let mut back = 0.0;
            for k in 0..h {
                grad_w1[(j, k)] = zj * grad_hidden[k];
                back += w_row[k] * grad_hidden[k];
            }
            grad_z[j] = back;
        }

        if mode == Mode::Train {
            let inv_b = 1.0 / x.rows() as f64;
            for i in 0..grad_x.rows() {
                for (g, gz) in grad_x.row_mut(i).iter_mut().zip(&grad_z) {
                    *g += gz * inv_b;
                }
            }
        }
        Ok((grad_x, vec![grad_w1.into_vec(), grad_w2.into_vec()]))
    }

    /// `frozen_z ← β·frozen_z + (1−β)·z`; the first update adopts `z` as is.
    pub fn update_ema(&mut self, z: &[f64]) {
        let beta = self.ema_beta;
        match &mut self.frozen_z {
            Some(f) => {
                for (fj, zj) in f.iter_mut().zip(z) {
                    *fj = beta * *fj + (1.0 - beta) * zj;
                }
            }
            None => self.frozen_z = Some(z.to_vec()),
        }
    }
}

impl Parameterized for SqueezeExcite {
    fn param_names(&self) -> Vec<&'static str> {
        vec!["w1", "w2"]
    }

    fn params(&self) -> Vec<&[f64]> {
        vec![self.w1.as_slice(), self.w2.as_slice()]
    }

    fn params_mut(&mut self) -> Vec<&mut [f64]> {
        vec![self.w1.as_mut_slice(), self.w2.as_mut_slice()]
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::layers::test_support::{check_layer, random_matrix};
    use crate::numeric::relu;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    #[test]
    fn squeeze_is_column_mean() {
        let x = Matrix::from_rows(&[[1.0, 3.0], [2.0, 5.0]]).unwrap();
        assert_eq!(squeeze(&x).unwrap(), vec![1.5, 4.0]);
        let one = Matrix::from_rows(&[[0.3, -7.0, 2.0]]).unwrap();
        assert_eq!(squeeze(&one).unwrap(), one.row(0));
        assert!(squeeze(&Matrix::zeros(0, 3)).is_err());
    }

    #[test]
    fn squeeze_matches_direct_summation() {
        let mut rng = ChaCha8Rng::seed_from_u64(2);
        let x = random_matrix(&mut rng, 7, 5);
        let z = squeeze(&x).unwrap();
        for j in 0..5 {
            let mut s = 0.0;
            for i in 0..7 {
                s += x[(i, j)];
            }
            assert!((z[j] - s / 7.0).abs() < 1e-12);
        }
    }

    #[test]
    fn zero_weights_excite_to_half() {
        let se = SqueezeExcite {
            w1: Matrix::zeros(3, 4),
            w2: Matrix::zeros(4, 3),
            frozen_z: None,
            ema_beta: 0.9,
        };
        assert_eq!(se.excite(&[1.0, -2.0, 3.0]).unwrap(), vec![0.5; 3]);
        let se = SqueezeExcite {
            w1: Matrix::identity(2),
            w2: Matrix::identity(2),
            frozen_z: None,
            ema_beta: 0.9,
        };
        assert_eq!(se.excite(&[0.0, 0.0]).unwrap(), vec![0.5, 0.5]);
    }

    #[test]
    fn excite_matches_formula() {
        let mut rng = ChaCha8Rng::seed_from_u64(4);
        let se = SqueezeExcite::new(8, 2, 0.9, &mut rng);
        let z: Vec<f64> = random_matrix(&mut rng, 1, 8).into_vec();
        let zm = Matrix::row_vector(&z);
        let expect = crate::numeric::sigmoid(&relu(&zm.matmul(&se.w1).unwrap()).matmul(&se.w2).unwrap());
        let got = se.excite(&z).unwrap();
        for (a, b) in got.iter().zip(expect.as_slice()) {
            assert!((a - b).abs() < 1e-12);
        }
    }

    #[test]
    fn bottleneck_floor() {
        assert_eq!(bottleneck_width(31, 4), 7);
        assert_eq!(bottleneck_width(6, 4), 4);
        assert_eq!(bottleneck_width(2, 4), 2);
        assert_eq!(bottleneck_width(64, 4), 16);
    }

    #[test]
    fn train_mode_scales_each_column() {
        let mut rng = ChaCha8Rng::seed_from_u64(6);
        let se = SqueezeExcite::new(5, 4, 0.9, &mut rng);
        let x = random_matrix(&mut rng, 4, 5);
        let f = se.forward(&x, Mode::Train).unwrap();
        for i in 0..4 {
            for j in 0..5 {
                assert_eq!(f.output[(i, j)], x[(i, j)] * f.scores[j]);
            }
        }
    }

    #[test]
    fn unit_scores_are_identity() {
        // a large positive bias path drives every score to exactly 1.0
        let se = SqueezeExcite {
            w1: Matrix::filled(2, 1, 1.0),
            w2: Matrix::filled(1, 2, 1e3),
            frozen_z: Some(vec![1.0, 1.0]),
            ema_beta: 0.9,
        };
        let x = Matrix::from_rows(&[[0.2, 0.7], [0.9, 0.1]]).unwrap();
        assert_eq!(se.forward(&x, Mode::Eval).unwrap().output, x);
    }

    #[test]
    fn eval_requires_frozen_statistics() {
        let mut rng = ChaCha8Rng::seed_from_u64(6);
        let se = SqueezeExcite::new(3, 4, 0.9, &mut rng);
        let err = se.forward(&Matrix::zeros(2, 3), Mode::Eval).unwrap_err();
        assert!(matches!(err, Error::NotTrained(_)));
    }

    #[test]
    fn eval_scores_ignore_the_batch() {
        let mut rng = ChaCha8Rng::seed_from_u64(8);
        let mut se = SqueezeExcite::new(4, 4, 0.9, &mut rng);
        se.update_ema(&[0.1, 0.5, 0.9, 0.3]);
        let a = se.forward(&random_matrix(&mut rng, 3, 4), Mode::Eval).unwrap();
        let b = se.forward(&random_matrix(&mut rng, 9, 4), Mode::Eval).unwrap();
        assert_eq!(a.scores, b.scores);

        // a row's eval output is the same alone or inside a batch
        let batch = random_matrix(&mut rng, 5, 4);
        let full = se.forward(&batch, Mode::Eval).unwrap().output;
        let single = se.forward(&batch.select_rows(&[2]), Mode::Eval).unwrap().output;
        assert_eq!(full.row(2), single.row(0));
    }

    #[test]
    fn train_mode_depends_on_batch_composition() {
        let mut rng = ChaCha8Rng::seed_from_u64(10);
        let se = SqueezeExcite::new(4, 4, 0.9, &mut rng);
        let batch = random_matrix(&mut rng, 5, 4);
        let full = se.forward(&batch, Mode::Train).unwrap().output;
        let single = se.forward(&batch.select_rows(&[2]), Mode::Train).unwrap().output;
        assert_ne!(full.row(2), single.row(0));
    }

    #[test]
    fn ema_update() {
        let mut se = SqueezeExcite {
            w1: Matrix::zeros(2, 1),
            w2: Matrix::zeros(1, 2),
            frozen_z: None,
            ema_beta: 0.9,
        };
        se.update_ema(&[1.0, 2.0]);
        assert_eq!(se.frozen_z.as_deref(), Some(&[1.0, 2.0][..]));
        se.update_ema(&[2.0, 0.0]);
        let f = se.frozen_z.clone().unwrap();
        assert!((f[0] - 1.1).abs() < 1e-15 && (f[1] - 1.8).abs() < 1e-15);
    }

    #[test]
    fn permuting_rows_permutes_outputs() {
        let mut rng = ChaCha8Rng::seed_from_u64(12);
        let mut se = SqueezeExcite::new(4, 4, 0.9, &mut rng);
        se.update_ema(&[0.2, 0.4, 0.6, 0.8]);
        let x = random_matrix(&mut rng, 5, 4);
        let perm = [3, 0, 4, 1, 2];
        for mode in [Mode::Train, Mode::Eval] {
            let out = se.forward(&x, mode).unwrap().output;
            let out_p = se.forward(&x.select_rows(&perm), mode).unwrap().output;
            assert!(out_p.max_abs_diff(&out.select_rows(&perm)).unwrap() < 1e-15);
        }
    }

    #[test]
    fn gradients_match_finite_differences() {
        let mut rng = ChaCha8Rng::seed_from_u64(31);
        for mode in [Mode::Train, Mode::Eval] {
            let mut se = SqueezeExcite::new(6, 2, 0.9, &mut rng);
            se.frozen_z = Some(vec![0.3, 0.7, 0.1, 0.9, 0.5, 0.2]);
            let x = random_matrix(&mut rng, 5, 6);
            let weights = random_matrix(&mut rng, 5, 6);
            let err = check_layer(
                &mut se,
                &x,
                &weights,
                |l, x| l.forward(x, mode).unwrap().output,
                |l, x, _out, g| {
                    let f = l.forward(x, mode).unwrap();
                    l.backward(x, &f, g, mode).unwrap()
                },
            );
            assert!(err < 1e-4, "{mode:?}: {err}");
        }
    }
}
