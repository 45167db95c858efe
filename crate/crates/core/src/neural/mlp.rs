//! Dense multilayer perceptron with batched forward and reverse-mode
//! backward passes.
//!
//! All parameters live in one flat `Vec<f64>` so optimizers, soft updates
//! and checkpoints can treat a network as a single vector. Each layer's block
//! holds its `fan_out x fan_in` weight matrix (row-major) followed by its
//! bias. Batches are row-major `batch x dim` slices.

use matrixmultiply::dgemm;
use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Activation {
    Relu,
    Sigmoid,
    Identity,
}

impl Activation {
    #[inline]
    fn apply(self, x: f64) -> f64 {
        match self {
            Activation::Relu => x.max(0.0),
            Activation::Sigmoid => 1.0 / (1.0 + (-x).exp()),
            Activation::Identity => x,
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
            Activation::Identity => 1.0,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct MlpSpec {
    pub input_dim: usize,
    pub hidden_dims: Vec<usize>,
    pub output_dim: usize,
    pub hidden_activation: Activation,
    pub output_activation: Activation,
}

impl MlpSpec {
    pub fn new(
        input_dim: usize,
        hidden_dims: Vec<usize>,
        output_dim: usize,
        output_activation: Activation,
    ) -> Self {
        Self {
            input_dim,
            hidden_dims,
            output_dim,
            hidden_activation: Activation::Relu,
            output_activation,
        }
    }

    pub fn validate(&self) -> Result<()> {
        if self.input_dim == 0 || self.output_dim == 0 || self.hidden_dims.contains(&0) {
            return Err(Error::invalid(format!(
                "all layer widths must be >= 1: {self:?}"
            )));
        }
        Ok(())
    }

    fn widths(&self) -> Vec<usize> {
        let mut w = Vec::with_capacity(self.hidden_dims.len() + 2);
        w.push(self.input_dim);
        w.extend_from_slice(&self.hidden_dims);
        w.push(self.output_dim);
        w
    }

    pub fn num_layers(&self) -> usize {
        self.hidden_dims.len() + 1
    }

    pub fn activation(&self, layer: usize) -> Activation {
        if layer + 1 == self.num_layers() {
            self.output_activation
        } else {
            self.hidden_activation
        }
    }

    pub fn layout(&self) -> Vec<LayerShape> {
        let widths = self.widths();
        let mut offset = 0;
        widths
            .windows(2)
            .map(|w| {
                let shape = LayerShape {
                    fan_in: w[0],
                    fan_out: w[1],
                    offset,
                };
                offset += shape.len();
                shape
            })
            .collect()
    }

    pub fn num_params(&self) -> usize {
        self.layout().iter().map(LayerShape::len).sum()
    }
}

/// Where one layer's parameters sit inside the flat vector.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct LayerShape {
    pub fan_in: usize,
    pub fan_out: usize,
    pub offset: usize,
}

impl LayerShape {
    pub fn len(&self) -> usize {
        self.fan_out * (self.fan_in + 1)
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    pub fn weights(&self) -> std::ops::Range<usize> {
        self.offset..self.offset + self.fan_out * self.fan_in
    }

    pub fn bias(&self) -> std::ops::Range<usize> {
        let start = self.offset + self.fan_out * self.fan_in;
        start..start + self.fan_out
    }
}

/// Activations kept from a forward pass; `layers[0]` is the input and the
/// last entry is the network output.
#[derive(Debug, Clone)]
pub struct ForwardCache {
    pub batch: usize,
    pub layers: Vec<Vec<f64>>,
}

impl ForwardCache {
    pub fn output(&self) -> &[f64] {
        self.layers.last().expect("cache holds at least the input")
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Mlp {
    spec: MlpSpec,
    layout: Vec<LayerShape>,
    params: Vec<f64>,
}

impl Mlp {
    /// Uniform init in `+-1/sqrt(fan_in)`; the last layer is further scaled by
    /// `final_scale`.
    pub fn new<R: Rng + ?Sized>(spec: MlpSpec, final_scale: f64, rng: &mut R) -> Result<Self> {
        spec.validate()?;
        let layout = spec.layout();
        let mut params = vec![0.0; spec.num_params()];
        let last = layout.len() - 1;
        for (i, shape) in layout.iter().enumerate() {
            let mut bound = 1.0 / (shape.fan_in as f64).sqrt();
            if i == last {
                bound *= final_scale;
            }
            for p in &mut params[shape.offset..shape.offset + shape.len()] {
                *p = rng.random_range(-bound..=bound);
            }
        }
        Ok(Self {
            spec,
            layout,
            params,
        })
    }

    pub fn from_params(spec: MlpSpec, params: Vec<f64>) -> Result<Self> {
        spec.validate()?;
        if params.len() != spec.num_params() {
            return Err(Error::invalid(format!(
                "expected {} parameters, got {}",
                spec.num_params(),
                params.len()
            )));
        }
        let layout = spec.layout();
        Ok(Self {
            spec,
            layout,
            params,
        })
    }

    pub fn zeros(spec: MlpSpec) -> Result<Self> {
        let n = spec.num_params();
        Self::from_params(spec, vec![0.0; n])
    }

    pub fn spec(&self) -> &MlpSpec {
        &self.spec
    }

    pub fn layout(&self) -> &[LayerShape] {
        &self.layout
    }

    pub fn params(&self) -> &[f64] {
        &self.params
    }

    pub fn params_mut(&mut self) -> &mut [f64] {
        &mut self.params
    }

    pub fn input_dim(&self) -> usize {
        self.spec.input_dim
    }

    pub fn output_dim(&self) -> usize {
        self.spec.output_dim
    }

    /// Batched forward pass over `batch` rows of `input`.
    pub fn forward(&self, input: &[f64], batch: usize) -> Result<ForwardCache> {
        if batch == 0 || input.len() != batch * self.spec.input_dim {
            return Err(Error::invalid(format!(
                "input of length {} does not hold {} rows of width {}",
                input.len(),
                batch,
                self.spec.input_dim
            )));
        }
        let mut layers = Vec::with_capacity(self.layout.len() + 1);
        layers.push(input.to_vec());
        for (l, shape) in self.layout.iter().enumerate() {
            let prev = &layers[l];
            let (fi, fo) = (shape.fan_in, shape.fan_out);
            let w = &self.params[shape.weights()];
            let b = &self.params[shape.bias()];
            let mut out = Vec::with_capacity(batch * fo);
            for _ in 0..batch {
                out.extend_from_slice(b);
            }
            // out (batch x fo) += prev (batch x fi) * W^T (fi x fo)
            unsafe {
                dgemm(
                    batch,
                    fi,
                    fo,
                    1.0,
                    prev.as_ptr(),
                    fi as isize,
                    1,
                    w.as_ptr(),
                    1,
                    fi as isize,
                    1.0,
                    out.as_mut_ptr(),
                    fo as isize,
                    1,
                );
            }
            let act = self.spec.activation(l);
            if act != Activation::Identity {
                for v in out.iter_mut() {
                    *v = act.apply(*v);
                }
            }
            layers.push(out);
        }
        Ok(ForwardCache { batch, layers })
    }

    /// Single-sample convenience wrapper.
    pub fn predict(&self, input: &[f64]) -> Result<Vec<f64>> {
        Ok(self.forward(input, 1)?.layers.pop().expect("non-empty"))
    }

    /// Reverse pass. `grad_output` is dLoss/dOutput for every row. Parameter
    /// gradients are written into `grads` (overwritten). Returns dLoss/dInput
    /// when `want_input_grad` is set.
    pub fn backward(
        &self,
        cache: &ForwardCache,
        grad_output: &[f64],
        grads: &mut [f64],
        want_input_grad: bool,
    ) -> Result<Option<Vec<f64>>> {
        if grads.len() != self.params.len() {
            return Err(Error::invalid("gradient buffer has the wrong size"));
        }
        self.backprop(cache, grad_output, Some(grads), want_input_grad)
    }

    /// Gradient with respect to the input only.
    pub fn input_gradient(&self, cache: &ForwardCache, grad_output: &[f64]) -> Result<Vec<f64>> {
        Ok(self
            .backprop(cache, grad_output, None, true)?
            .expect("input gradient requested"))
    }

    fn backprop(
        &self,
        cache: &ForwardCache,
        grad_output: &[f64],
        mut grads: Option<&mut [f64]>,
        want_input_grad: bool,
    ) -> Result<Option<Vec<f64>>> {
        let batch = cache.batch;
        if grad_output.len() != batch * self.spec.output_dim {
            return Err(Error::invalid("output gradient has the wrong size"));
        }
        let mut delta = grad_output.to_vec();
        for l in (0..self.layout.len()).rev() {
            let shape = self.layout[l];
            let (fi, fo) = (shape.fan_in, shape.fan_out);
            let act = self.spec.activation(l);
            if act != Activation::Identity {
                for (d, &y) in delta.iter_mut().zip(&cache.layers[l + 1]) {
                    *d *= act.derivative_from_output(y);
                }
            }
            if let Some(grads) = grads.as_deref_mut() {
                accumulate_layer_grads(shape, batch, &delta, &cache.layers[l], grads);
            }
            if l == 0 && !want_input_grad {
                return Ok(None);
            }
            // delta_prev (batch x fi) = delta (batch x fo) * W (fo x fi)
            let w = &self.params[shape.weights()];
            let mut next = vec![0.0; batch * fi];
            unsafe {
                dgemm(
                    batch,
                    fo,
                    fi,
                    1.0,
                    delta.as_ptr(),
                    fo as isize,
                    1,
                    w.as_ptr(),
                    fi as isize,
                    1,
                    0.0,
                    next.as_mut_ptr(),
                    fi as isize,
                    1,
                );
            }
            delta = next;
        }
        Ok(Some(delta))
    }
}

/// Writes one layer's weight and bias gradients.
fn accumulate_layer_grads(
    shape: LayerShape,
    batch: usize,
    delta: &[f64],
    prev: &[f64],
    grads: &mut [f64],
) {
    let (fi, fo) = (shape.fan_in, shape.fan_out);
    // dW (fo x fi) = delta^T (fo x batch) * prev (batch x fi)
    let gw = &mut grads[shape.weights()];
    unsafe {
        dgemm(
            fo,
            batch,
            fi,
            1.0,
            delta.as_ptr(),
            1,
            fo as isize,
            prev.as_ptr(),
            fi as isize,
            1,
            0.0,
            gw.as_mut_ptr(),
            fi as isize,
            1,
        );
    }
    let gb = &mut grads[shape.bias()];
    gb.iter_mut().for_each(|g| *g = 0.0);
    for row in delta.chunks_exact(fo) {
        for (g, d) in gb.iter_mut().zip(row) {
            *g += d;
        }
    }
}
