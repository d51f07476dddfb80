use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::layers::{glorot_uniform, Parameterized};
use crate::numeric::{dot, matmul, matmul_nt, matmul_tn, softmax_in_place, Matrix};

/// Single-head self-attention with attributes as tokens.
///
/// Each scalar attribute value `x_j` is embedded as `x_j·embed_weight[j] +
/// embed_bias[j]` (an `e`-vector), giving `E: d × e`. Then `K = E·Wk`,
/// `Q = E·Wq`, `V = E·Wv`, `A = softmax_rows(Q·Kᵀ / temperature)` with rows as
/// queries and columns as keys, and the output for attribute `j` is
/// `(A·V)[j] · out_proj`. There is no `1/√e` factor; `temperature` defaults to 1.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SelfAttention {
    pub embed_weight: Matrix,
    pub embed_bias: Matrix,
    pub wk: Matrix,
    pub wq: Matrix,
    pub wv: Matrix,
    pub out_proj: Matrix,
    pub temperature: f64,
}

/// Per-sample intermediates retained for the backward pass.
#[derive(Debug, Clone)]
pub struct AttentionCache {
    pub attention: Matrix,
    output: Vec<f64>,
}

/// Projections folded through the per-attribute embedding.
///
/// With `E[j] = x_j·a_j + b_j`, the scaled score is
/// `S_ij = x_i x_j·M1_ij + x_i·M2_ij + x_j·M3_ij + M4_ij` where
/// `M1 = t·Qa·Kaᵀ`, `M2 = t·Qa·Kbᵀ`, `M3 = t·Qb·Kaᵀ`, `M4 = t·Qb·Kbᵀ`,
/// `Qa = A·Wq`, `Qb = B·Wq` (likewise for keys) and `t = 1/temperature`.
/// The value path reduces to `v_k = x_k·alpha_k + beta_k` with
/// `alpha = (A·Wv)·out_proj` and `beta = (B·Wv)·out_proj`.
struct Folded {
    qa: Matrix,
    qb: Matrix,
    ka: Matrix,
    kb: Matrix,
    va: Matrix,
    vb: Matrix,
    m: [Matrix; 4],
    alpha: Vec<f64>,
    beta: Vec<f64>,
}

impl SelfAttention {
    pub fn new(d: usize, embed_dim: usize, temperature: f64, rng: &mut impl Rng) -> Self {
        // each attribute's embedding is its own 1 -> e map
        let limit = (6.0 / (1 + embed_dim) as f64).sqrt();
        let embed = (0..d * embed_dim).map(|_| rng.random_range(-limit..=limit)).collect();
        Self {
            embed_weight: Matrix::new(d, embed_dim, embed).expect("sized by construction"),
            embed_bias: Matrix::zeros(d, embed_dim),
            wk: glorot_uniform(rng, embed_dim, embed_dim),
            wq: glorot_uniform(rng, embed_dim, embed_dim),
            wv: glorot_uniform(rng, embed_dim, embed_dim),
            out_proj: glorot_uniform(rng, embed_dim, 1),
            temperature,
        }
    }

    pub fn tokens(&self) -> usize {
        self.embed_weight.rows()
    }

    pub fn embed_dim(&self) -> usize {
        self.embed_weight.cols()
    }

    fn check_input(&self, x: &Matrix) -> Result<()> {
        if x.cols() != self.tokens() {
            return Err(Error::Shape {
                op: "sa_forward",
                left: x.shape(),
                right: self.embed_weight.shape(),
            });
        }
        Ok(())
    }

    fn fold(&self) -> Result<Folded> {
        let t = 1.0 / self.temperature;
        let qa = matmul(&self.embed_weight, &self.wq)?;
        let qb = matmul(&self.embed_bias, &self.wq)?;
        let ka = matmul(&self.embed_weight, &self.wk)?;
        let kb = matmul(&self.embed_bias, &self.wk)?;
        let va = matmul(&self.embed_weight, &self.wv)?;
        let vb = matmul(&self.embed_bias, &self.wv)?;
        let m = [
            matmul_nt(&qa, &ka)?.scale(t),
            matmul_nt(&qa, &kb)?.scale(t),
            matmul_nt(&qb, &ka)?.scale(t),
            matmul_nt(&qb, &kb)?.scale(t),
        ];
        let proj = self.out_proj.as_slice();
        let alpha = va.iter_rows().map(|r| dot(r, proj)).collect();
        let beta = vb.iter_rows().map(|r| dot(r, proj)).collect();
        Ok(Folded {
            qa,
            qb,
            ka,
            kb,
            va,
            vb,
            m,
            alpha,
            beta,
        })
    }

    fn forward_sample(&self, f: &Folded, x: &[f64]) -> AttentionCache {
        let d = x.len();
        let [m1, m2, m3, m4] = &f.m;
        let mut attention = Matrix::zeros(d, d);
        let v: Vec<f64> = (0..d).map(|k| x[k] * f.alpha[k] + f.beta[k]).collect();
        let mut output = vec![0.0; d];
        for i in 0..d {
            let xi = x[i];
            let (r1, r2, r3, r4) = (m1.row(i), m2.row(i), m3.row(i), m4.row(i));
            let row = attention.row_mut(i);
            for j in 0..d {
                row[j] = (xi * r1[j] + r3[j]) * x[j] + xi * r2[j] + r4[j];
            }
            softmax_in_place(row);
            output[i] = dot(row, &v);
        }
        AttentionCache { attention, output }
    }

    /// Output `n × d` plus one `d × d` attention map per sample.
    pub fn forward(&self, x: &Matrix) -> Result<(Matrix, Vec<Matrix>)> {
        let (out, caches) = self.forward_cached(x)?;
        Ok((out, caches.into_iter().map(|c| c.attention).collect()))
    }

    pub fn forward_cached(&self, x: &Matrix) -> Result<(Matrix, Vec<AttentionCache>)> {
        self.check_input(x)?;
        let f = self.fold()?;
        let mut data = Vec::with_capacity(x.rows() * self.tokens());
        let mut caches = Vec::with_capacity(x.rows());
        for row in x.iter_rows() {
            let cache = self.forward_sample(&f, row);
            data.extend_from_slice(&cache.output);
            caches.push(cache);
        }
        Ok((Matrix::new(x.rows(), self.tokens(), data)?, caches))
    }

    /// Attention map for a single sample.
    pub fn attention_map(&self, row: &[f64]) -> Result<Matrix> {
        if row.len() != self.tokens() {
            return Err(Error::Shape {
                op: "attention_map",
                left: (1, row.len()),
                right: self.embed_weight.shape(),
            });
        }
        Ok(self.forward_sample(&self.fold()?, row).attention)
    }

    /// Returns `(dL/dX, grads)` with grads ordered as [`Parameterized::params`].
    pub fn backward(
        &self,
        x: &Matrix,
        caches: &[AttentionCache],
        grad_out: &Matrix,
    ) -> Result<(Matrix, Vec<Vec<f64>>)> {
        self.check_input(x)?;
        if grad_out.shape() != x.shape() || caches.len() != x.rows() {
            return Err(Error::Shape {
                op: "sa_backward",
                left: x.shape(),
                right: grad_out.shape(),
            });
        }
        let d = self.tokens();
        let f = self.fold()?;
        let [m1, m2, m3, _] = &f.m;
        let mut gm = [
            Matrix::zeros(d, d),
            Matrix::zeros(d, d),
            Matrix::zeros(d, d),
            Matrix::zeros(d, d),
        ];
        let mut g_alpha = vec![0.0; d];
        let mut g_beta = vec![0.0; d];
        let mut grad_x = Matrix::zeros(x.rows(), d);
        let mut v = vec![0.0; d];
        let mut g_v = vec![0.0; d];
        let mut g_scores = vec![0.0; d * d];

        for (n, cache) in caches.iter().enumerate() {
            let x_row = x.row(n);
            let g = grad_out.row(n);
            for k in 0..d {
                v[k] = x_row[k] * f.alpha[k] + f.beta[k];
            }
            g_v.iter_mut().for_each(|e| *e = 0.0);
            for j in 0..d {
                let a_row = cache.attention.row(j);
                let gj = g[j];
                let oj = cache.output[j];
                let gs = &mut g_scores[j * d..(j + 1) * d];
                for k in 0..d {
                    g_v[k] += a_row[k] * gj;
                    gs[k] = a_row[k] * gj * (v[k] - oj);
                }
            }
            let gx = grad_x.row_mut(n);
            for k in 0..d {
                gx[k] = g_v[k] * f.alpha[k];
                g_alpha[k] += g_v[k] * x_row[k];
                g_beta[k] += g_v[k];
            }
            let [g1, g2, g3, g4] = &mut gm;
            for i in 0..d {
                let xi = x_row[i];
                let gs = &g_scores[i * d..(i + 1) * d];
                let (r1, r2, r3) = (m1.row(i), m2.row(i), m3.row(i));
                let (a1, a2, a3, a4) = (g1.row_mut(i), g2.row_mut(i), g3.row_mut(i), g4.row_mut(i));
                let mut row_term = 0.0;
                for j in 0..d {
                    let s = gs[j];
                    let sx = s * x_row[j];
                    a1[j] += xi * sx;
                    a2[j] += xi * s;
                    a3[j] += sx;
                    a4[j] += s;
                    row_term += sx * r1[j] + s * r2[j];
                    gx[j] += s * (xi * r1[j] + r3[j]);
                }
                gx[i] += row_term;
            }
        }

        let t = 1.0 / self.temperature;
        let [g1, g2, g3, g4] = gm;
        let g_qa = matmul(&g1, &f.ka)?.add(&matmul(&g2, &f.kb)?)?.scale(t);
        let g_qb = matmul(&g3, &f.ka)?.add(&matmul(&g4, &f.kb)?)?.scale(t);
        let g_ka = matmul_tn(&g1, &f.qa)?.add(&matmul_tn(&g3, &f.qb)?)?.scale(t);
        let g_kb = matmul_tn(&g2, &f.qa)?.add(&matmul_tn(&g4, &f.qb)?)?.scale(t);
        let proj = Matrix::row_vector(self.out_proj.as_slice());
        let g_va = matmul(&Matrix::column_vector(&g_alpha), &proj)?;
        let g_vb = matmul(&Matrix::column_vector(&g_beta), &proj)?;
        let g_proj = matmul_tn(&f.va, &Matrix::column_vector(&g_alpha))?
            .add(&matmul_tn(&f.vb, &Matrix::column_vector(&g_beta))?)?;

        let (ew, eb) = (&self.embed_weight, &self.embed_bias);
        let g_wq = matmul_tn(ew, &g_qa)?.add(&matmul_tn(eb, &g_qb)?)?;
        let g_wk = matmul_tn(ew, &g_ka)?.add(&matmul_tn(eb, &g_kb)?)?;
        let g_wv = matmul_tn(ew, &g_va)?.add(&matmul_tn(eb, &g_vb)?)?;
        let g_ew = matmul_nt(&g_qa, &self.wq)?
            .add(&matmul_nt(&g_ka, &self.wk)?)?
            .add(&matmul_nt(&g_va, &self.wv)?)?;
        let g_eb = matmul_nt(&g_qb, &self.wq)?
            .add(&matmul_nt(&g_kb, &self.wk)?)?
            .add(&matmul_nt(&g_vb, &self.wv)?)?;

        Ok((
            grad_x,
            vec![
                g_ew.into_vec(),
                g_eb.into_vec(),
                g_wk.into_vec(),
                g_wq.into_vec(),
                g_wv.into_vec(),
                g_proj.into_vec(),
            ],
        ))
    }
}

impl Parameterized for SelfAttention {
    fn param_names(&self) -> Vec<&'static str> {
        vec!["embed_weight", "embed_bias", "wk", "wq", "wv", "out_proj"]
    }

    fn params(&self) -> Vec<&[f64]> {
        vec![
            self.embed_weight.as_slice(),
            self.embed_bias.as_slice(),
            self.wk.as_slice(),
            self.wq.as_slice(),
            self.wv.as_slice(),
            self.out_proj.as_slice(),
        ]
    }

    fn params_mut(&mut self) -> Vec<&mut [f64]> {
        vec![
            self.embed_weight.as_mut_slice(),
            self.embed_bias.as_mut_slice(),
            self.wk.as_mut_slice(),
            self.wq.as_mut_slice(),
            self.wv.as_mut_slice(),
            self.out_proj.as_mut_slice(),
        ]
    }
}
