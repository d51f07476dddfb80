use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum OptimizerKind {
    Adam,
    Sgd,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct AdamParams {
    pub beta1: f64,
    pub beta2: f64,
    pub eps: f64,
}

impl Default for AdamParams {
    fn default() -> Self {
        Self {
            beta1: 0.9,
            beta2: 0.999,
            eps: 1e-8,
        }
    }
}

/// First and second moment estimates, one buffer per parameter block.
#[derive(Debug, Clone, Default)]
pub struct AdamState {
    pub step: u64,
    pub m: Vec<Vec<f64>>,
    pub v: Vec<Vec<f64>>,
}

impl AdamState {
    pub fn new(shapes: &[usize]) -> Self {
        Self {
            step: 0,
            m: shapes.iter().map(|&n| vec![0.0; n]).collect(),
            v: shapes.iter().map(|&n| vec![0.0; n]).collect(),
        }
    }
}

fn check_blocks(params: &[&mut [f64]], grads: &[Vec<f64>]) -> Result<()> {
    if params.len() != grads.len() || params.iter().zip(grads).any(|(p, g)| p.len() != g.len()) {
        return Err(Error::invalid("parameter and gradient blocks do not match"));
    }
    Ok(())
}

/// One bias-corrected Adam update.
pub fn adam_step(
    params: &mut [&mut [f64]],
    grads: &[Vec<f64>],
    state: &mut AdamState,
    lr: f64,
    hp: &AdamParams,
) -> Result<()> {
    check_blocks(params, grads)?;
    if state.m.len() != params.len() {
        *state = AdamState::new(&params.iter().map(|p| p.len()).collect::<Vec<_>>());
    }
    state.step += 1;
    let t = state.step as i32;
    let c1 = 1.0 - hp.beta1.powi(t);
    let c2 = 1.0 - hp.beta2.powi(t);
    for (b, (p, g)) in params.iter_mut().zip(grads).enumerate() {
        let (m, v) = (&mut state.m[b], &mut state.v[b]);
        for i in 0..p.len() {
            m[i] = hp.beta1 * m[i] + (1.0 - hp.beta1) * g[i];
            v[i] = hp.beta2 * v[i] + (1.0 - hp.beta2) * g[i] * g[i];
            let m_hat = m[i] / c1;
            let v_hat = v[i] / c2;
            p[i] -= lr * m_hat / (v_hat.sqrt() + hp.eps);
        }
    }
    Ok(())
}

pub fn sgd_step(params: &mut [&mut [f64]], grads: &[Vec<f64>], lr: f64) -> Result<()> {
    check_blocks(params, grads)?;
    for (p, g) in params.iter_mut().zip(grads) {
        for (pi, gi) in p.iter_mut().zip(g) {
            *pi -= lr * gi;
        }
    }
    Ok(())
}
