//! Adam with bias correction and an L2 term added to the gradient.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::matrix::DenseMatrix;

pub const BETA1: f64 = 0.9;
pub const BETA2: f64 = 0.999;
pub const EPSILON: f64 = 1e-8;

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct AdamState {
    first: Vec<DenseMatrix>,
    second: Vec<DenseMatrix>,
    step: u64,
}

impl AdamState {
    pub fn new(params: &[DenseMatrix]) -> Self {
        let zeros: Vec<DenseMatrix> = params
            .iter()
            .map(|w| DenseMatrix::zeros(w.rows(), w.cols()))
            .collect();
        Self {
            first: zeros.clone(),
            second: zeros,
            step: 0,
        }
    }

    pub fn step(&self) -> u64 {
        self.step
    }

    pub fn first_moments(&self) -> &[DenseMatrix] {
        &self.first
    }

    pub fn second_moments(&self) -> &[DenseMatrix] {
        &self.second
    }
}

/// One Adam update of every matrix in `params`. The state is left untouched
/// when any gradient entry is non-finite.
pub fn adam_step(
    params: &mut [DenseMatrix],
    grads: &[DenseMatrix],
    state: &mut AdamState,
    lr: f64,
    weight_decay: f64,
) -> Result<()> {
    if params.len() != grads.len() || params.len() != state.first.len() {
        return Err(Error::dims(
            "adam_step",
            format!(
                "{} params, {} grads, {} moment slots",
                params.len(),
                grads.len(),
                state.first.len()
            ),
        ));
    }
    for (l, (p, g)) in params.iter().zip(grads).enumerate() {
        if p.shape() != g.shape() || p.shape() != state.first[l].shape() {
            return Err(Error::dims(
                "adam_step",
                format!("matrix {l}: param {:?}, grad {:?}", p.shape(), g.shape()),
            ));
        }
        if let Some(pos) = g.as_slice().iter().position(|v| !v.is_finite()) {
            return Err(Error::NonFinite(format!(
                "gradient of matrix {l} at entry ({}, {}) is {}",
                pos / g.cols().max(1),
                pos % g.cols().max(1),
                g.as_slice()[pos]
            )));
        }
    }
    state.step += 1;
    let t = state.step as i32;
    let c1 = 1.0 - BETA1.powi(t);
    let c2 = 1.0 - BETA2.powi(t);
    for (l, (p, g)) in params.iter_mut().zip(grads).enumerate() {
        let m = state.first[l].as_mut_slice();
        let v = state.second[l].as_mut_slice();
        for (k, (theta, &grad)) in p.as_mut_slice().iter_mut().zip(g.as_slice()).enumerate() {
            let g = grad + weight_decay * *theta;
            m[k] = BETA1 * m[k] + (1.0 - BETA1) * g;
            v[k] = BETA2 * v[k] + (1.0 - BETA2) * g * g;
            let m_hat = m[k] / c1;
            let v_hat = v[k] / c2;
            *theta -= lr * m_hat / (v_hat.sqrt() + EPSILON);
        }
    }
    Ok(())
}
