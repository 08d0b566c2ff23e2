//! Encoders: the linear map and two-layer MLP used on compressed nodes, and
//! the GCN that reuses the same weights on the full graph.

use rand::Rng as _;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::graph::{spmm, SparseGraph};
use crate::matrix::DenseMatrix;
use crate::rng::Rng;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Arch {
    Linear,
    Mlp2,
}

impl Arch {
    pub fn n_layers(self) -> usize {
        match self {
            Arch::Linear => 1,
            Arch::Mlp2 => 2,
        }
    }

    pub fn default_activations(self) -> Vec<Activation> {
        match self {
            Arch::Linear => vec![Activation::Identity],
            Arch::Mlp2 => vec![Activation::Relu, Activation::Relu],
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Activation {
    Relu,
    Identity,
}

impl Activation {
    #[inline]
    pub fn apply(self, v: f64) -> f64 {
        match self {
            Activation::Relu => v.max(0.0),
            Activation::Identity => v,
        }
    }

    /// Derivative at a pre-activation value; ReLU uses 0 at exactly 0.
    #[inline]
    pub fn derivative(self, pre: f64) -> f64 {
        match self {
            Activation::Relu => {
                if pre > 0.0 {
                    1.0
                } else {
                    0.0
                }
            }
            Activation::Identity => 1.0,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct EncoderParams {
    arch: Arch,
    layers: Vec<DenseMatrix>,
    activations: Vec<Activation>,
}

impl EncoderParams {
    pub fn new(arch: Arch, layers: Vec<DenseMatrix>, activations: Vec<Activation>) -> Result<Self> {
        if layers.len() != arch.n_layers() || activations.len() != layers.len() {
            return Err(Error::invalid(format!(
                "{arch:?} needs {} weight matrices and activations, got {} and {}",
                arch.n_layers(),
                layers.len(),
                activations.len()
            )));
        }
        for (l, pair) in layers.windows(2).enumerate() {
            if pair[0].cols() != pair[1].rows() {
                return Err(Error::dims(
                    "EncoderParams::new",
                    format!(
                        "layer {l} outputs {} columns but layer {} expects {} rows",
                        pair[0].cols(),
                        l + 1,
                        pair[1].rows()
                    ),
                ));
            }
        }
        if let Some(l) = layers.iter().position(|w| !w.is_finite()) {
            return Err(Error::NonFinite(format!("weight matrix {l}")));
        }
        Ok(Self {
            arch,
            layers,
            activations,
        })
    }

    pub fn linear(w: DenseMatrix) -> Result<Self> {
        Self::new(Arch::Linear, vec![w], vec![Activation::Identity])
    }

    pub fn mlp2(w1: DenseMatrix, w2: DenseMatrix, activations: [Activation; 2]) -> Result<Self> {
        Self::new(Arch::Mlp2, vec![w1, w2], activations.to_vec())
    }

    /// Glorot-uniform weights: entries in `[−a, a]`, `a = sqrt(6 / (fan_in + fan_out))`.
    /// `hidden` is ignored for the linear arch.
    pub fn init(
        arch: Arch,
        input_dim: usize,
        hidden: usize,
        output_dim: usize,
        activations: Option<Vec<Activation>>,
        rng: &mut Rng,
    ) -> Result<Self> {
        let dims = match arch {
            Arch::Linear => vec![input_dim, output_dim],
            Arch::Mlp2 => vec![input_dim, hidden, output_dim],
        };
        if dims.contains(&0) {
            return Err(Error::invalid(format!(
                "encoder dimensions must be positive, got {dims:?}"
            )));
        }
        let layers = dims
            .windows(2)
            .map(|d| {
                let a = (6.0 / (d[0] + d[1]) as f64).sqrt();
                DenseMatrix::from_fn(d[0], d[1], |_, _| rng.random_range(-a..=a))
            })
            .collect();
        Self::new(
            arch,
            layers,
            activations.unwrap_or_else(|| arch.default_activations()),
        )
    }

    pub fn zeros_like(&self) -> Vec<DenseMatrix> {
        self.layers
            .iter()
            .map(|w| DenseMatrix::zeros(w.rows(), w.cols()))
            .collect()
    }

    pub fn arch(&self) -> Arch {
        self.arch
    }

    pub fn layers(&self) -> &[DenseMatrix] {
        &self.layers
    }

    pub fn layers_mut(&mut self) -> &mut [DenseMatrix] {
        &mut self.layers
    }

    pub fn activations(&self) -> &[Activation] {
        &self.activations
    }

    pub fn input_dim(&self) -> usize {
        self.layers[0].rows()
    }

    pub fn output_dim(&self) -> usize {
        self.layers[self.layers.len() - 1].cols()
    }

    pub fn hidden_dim(&self) -> Option<usize> {
        (self.arch == Arch::Mlp2).then(|| self.layers[0].cols())
    }

    pub fn is_finite(&self) -> bool {
        self.layers.iter().all(DenseMatrix::is_finite)
    }
}

/// Per-layer inputs (after propagation, for the GCN) and pre-activations.
#[derive(Clone, Debug)]
pub struct ForwardTape {
    inputs: Vec<DenseMatrix>,
    pre: Vec<DenseMatrix>,
    propagated: bool,
}

impl ForwardTape {
    pub fn n_layers(&self) -> usize {
        self.pre.len()
    }

    pub fn pre_activations(&self) -> &[DenseMatrix] {
        &self.pre
    }
}

fn forward_impl(
    a_hat: Option<&SparseGraph>,
    x: &DenseMatrix,
    params: &EncoderParams,
) -> Result<(DenseMatrix, ForwardTape)> {
    if x.cols() != params.input_dim() {
        return Err(Error::dims(
            "encoder forward",
            format!(
                "{} feature columns, weights expect {}",
                x.cols(),
                params.input_dim()
            ),
        ));
    }
    if let Some(a) = a_hat {
        if a.n() != x.rows() {
            return Err(Error::dims(
                "gcn_forward",
                format!("graph has {} nodes, features have {} rows", a.n(), x.rows()),
            ));
        }
    }
    let mut inputs = Vec::with_capacity(params.layers.len());
    let mut pre = Vec::with_capacity(params.layers.len());
    let mut h = x.clone();
    for (w, &act) in params.layers.iter().zip(&params.activations) {
        let input = match a_hat {
            Some(a) => spmm(a, &h)?,
            None => h,
        };
        let p = input.matmul(w)?;
        h = p.map(|v| act.apply(v));
        inputs.push(input);
        pre.push(p);
    }
    Ok((
        h,
        ForwardTape {
            inputs,
            pre,
            propagated: a_hat.is_some(),
        },
    ))
}

/// Forward pass of either arch on compressed features, no propagation.
pub fn forward(x_c: &DenseMatrix, params: &EncoderParams) -> Result<(DenseMatrix, ForwardTape)> {
    forward_impl(None, x_c, params)
}

/// `σ(σ(X_c W₁) W₂)`.
pub fn mlp_forward(
    x_c: &DenseMatrix,
    params: &EncoderParams,
) -> Result<(DenseMatrix, ForwardTape)> {
    if params.arch != Arch::Mlp2 {
        return Err(Error::invalid("mlp_forward needs mlp2 parameters"));
    }
    forward_impl(None, x_c, params)
}

/// `X_c W`.
pub fn linear_forward(
    x_c: &DenseMatrix,
    params: &EncoderParams,
) -> Result<(DenseMatrix, ForwardTape)> {
    if params.arch != Arch::Linear {
        return Err(Error::invalid("linear_forward needs linear parameters"));
    }
    forward_impl(None, x_c, params)
}

/// `σ(Â σ(Â X W₁) W₂)`, or `Â X W` for the linear arch.
pub fn gcn_forward(
    a_hat: &SparseGraph,
    x: &DenseMatrix,
    params: &EncoderParams,
) -> Result<DenseMatrix> {
    Ok(forward_impl(Some(a_hat), x, params)?.0)
}

pub fn gcn_forward_with_tape(
    a_hat: &SparseGraph,
    x: &DenseMatrix,
    params: &EncoderParams,
) -> Result<(DenseMatrix, ForwardTape)> {
    forward_impl(Some(a_hat), x, params)
}

fn backward_impl(
    a_hat: Option<&SparseGraph>,
    tape: &ForwardTape,
    params: &EncoderParams,
    grad_z: &DenseMatrix,
) -> Result<Vec<DenseMatrix>> {
    if tape.n_layers() != params.layers.len() {
        return Err(Error::dims(
            "encoder_backward",
            format!(
                "tape has {} layers, params {}",
                tape.n_layers(),
                params.layers.len()
            ),
        ));
    }
    for (l, (p, w)) in tape.pre.iter().zip(&params.layers).enumerate() {
        if p.cols() != w.cols() || tape.inputs[l].cols() != w.rows() {
            return Err(Error::dims(
                "encoder_backward",
                format!("tape layer {l} does not match weight shape {:?}", w.shape()),
            ));
        }
    }
    let last = tape.pre.len() - 1;
    if grad_z.shape() != tape.pre[last].shape() {
        return Err(Error::dims(
            "encoder_backward",
            format!(
                "gradient {:?} vs output {:?}",
                grad_z.shape(),
                tape.pre[last].shape()
            ),
        ));
    }
    let mut grads = vec![DenseMatrix::zeros(0, 0); params.layers.len()];
    let mut upstream = grad_z.clone();
    for l in (0..=last).rev() {
        let act = params.activations[l];
        let mut d_pre = upstream;
        for (g, &p) in d_pre.as_mut_slice().iter_mut().zip(tape.pre[l].as_slice()) {
            *g *= act.derivative(p);
        }
        grads[l] = tape.inputs[l].t_matmul(&d_pre)?;
        if l > 0 {
            let d_input = d_pre.matmul_t(&params.layers[l])?;
            upstream = match a_hat {
                // Â is symmetric, so Âᵀ·g = Â·g
                Some(a) => spmm(a, &d_input)?,
                None => d_input,
            };
        } else {
            upstream = DenseMatrix::zeros(0, 0);
        }
    }
    Ok(grads)
}

/// Weight gradients for a tape recorded by [`forward`], [`mlp_forward`] or
/// [`linear_forward`].
pub fn encoder_backward(
    tape: &ForwardTape,
    params: &EncoderParams,
    grad_z: &DenseMatrix,
) -> Result<Vec<DenseMatrix>> {
    if tape.propagated {
        return Err(Error::invalid(
            "tape was recorded by gcn_forward; use gcn_backward",
        ));
    }
    backward_impl(None, tape, params, grad_z)
}

/// Weight gradients through the GCN, including the propagation between layers.
pub fn gcn_backward(
    a_hat: &SparseGraph,
    tape: &ForwardTape,
    params: &EncoderParams,
    grad_z: &DenseMatrix,
) -> Result<Vec<DenseMatrix>> {
    if !tape.propagated {
        return Err(Error::invalid(
            "tape was recorded without propagation; use encoder_backward",
        ));
    }
    backward_impl(Some(a_hat), tape, params, grad_z)
}
