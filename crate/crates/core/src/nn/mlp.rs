use alloc::vec;
use alloc::vec::Vec;

use rand::Rng;

use super::matrix::{gemm, Matrix, View};
use crate::{Error, Result};

/// Elementwise nonlinearity applied after a layer's affine map.
///
/// Hidden layers use [`Activation::Relu`]; its subgradient at zero is taken
/// to be zero. Output layers use [`Activation::Identity`].
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Activation {
    Relu,
    Identity,
}

impl Activation {
    fn apply(self, values: &mut [f64]) {
        if self == Activation::Relu {
            for v in values {
                if *v < 0.0 {
                    *v = 0.0;
                }
            }
        }
    }
}

/// Location and shape of one layer inside the flat parameter buffer.
///
/// Weights are stored row-major as `outputs × inputs` starting at `offset`,
/// immediately followed by `outputs` bias entries.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct LayerShape {
    pub inputs: usize,
    pub outputs: usize,
    pub activation: Activation,
    pub offset: usize,
}

impl LayerShape {
    fn weight_len(&self) -> usize {
        self.inputs * self.outputs
    }

    /// Index of the first bias in the flat parameter vector.
    pub fn bias_offset(&self) -> usize {
        self.offset + self.weight_len()
    }

    fn end(&self) -> usize {
        self.bias_offset() + self.outputs
    }
}

/// Multilayer perceptron with a flat parameter vector.
#[derive(Debug, Clone, PartialEq)]
pub struct Mlp {
    layers: Vec<LayerShape>,
    params: Vec<f64>,
}

/// Forward activations recorded for one reverse pass.
///
/// `activations[0]` is the input batch, `activations[l + 1]` is the output
/// of layer `l` after its nonlinearity.
#[derive(Debug, Clone)]
pub struct Tape {
    activations: Vec<Matrix>,
}

impl Tape {
    pub fn output(&self) -> &Matrix {
        self.activations
            .last()
            .expect("tape always holds the input")
    }

    pub fn input(&self) -> &Matrix {
        &self.activations[0]
    }
}

/// Result of a reverse pass.
#[derive(Debug, Clone, PartialEq)]
pub struct Gradients {
    /// Same layout as [`Mlp::params`].
    pub params: Vec<f64>,
    /// Same shape as the recorded input batch.
    pub input: Matrix,
}

fn layout(sizes: &[usize]) -> Result<(Vec<LayerShape>, usize)> {
    if sizes.len() < 2 {
        return Err(Error::Config("mlp layer sizes", 2, sizes.len()));
    }
    if let Some(&zero) = sizes.iter().find(|&&s| s == 0) {
        return Err(Error::Config("mlp layer width", 1, zero));
    }
    let mut layers = Vec::with_capacity(sizes.len() - 1);
    let mut offset = 0;
    for (i, pair) in sizes.windows(2).enumerate() {
        let activation = if i + 2 == sizes.len() {
            Activation::Identity
        } else {
            Activation::Relu
        };
        let shape = LayerShape {
            inputs: pair[0],
            outputs: pair[1],
            activation,
            offset,
        };
        offset = shape.end();
        layers.push(shape);
    }
    Ok((layers, offset))
}

impl Mlp {
    /// Network with ReLU hidden layers and a linear output, initialised with
    /// weights and biases drawn from `U(-1/√fan_in, 1/√fan_in)`.
    pub fn new<R: Rng + ?Sized>(sizes: &[usize], rng: &mut R) -> Result<Self> {
        let (layers, len) = layout(sizes)?;
        let mut params = vec![0.0; len];
        for layer in &layers {
            let bound = 1.0 / libm::sqrt(layer.inputs as f64);
            for p in &mut params[layer.offset..layer.end()] {
                *p = rng.random_range(-bound..bound);
            }
        }
        Ok(Self { layers, params })
    }

    /// All-zero network with the given layer widths.
    pub fn zeros(sizes: &[usize]) -> Result<Self> {
        let (layers, len) = layout(sizes)?;
        Ok(Self {
            layers,
            params: vec![0.0; len],
        })
    }

    /// Builds a network from explicit `(weights, bias, activation)` triples,
    /// where `weights` is `outputs × inputs`.
    pub fn from_layers(spec: Vec<(Matrix, Vec<f64>, Activation)>) -> Result<Self> {
        if spec.is_empty() {
            return Err(Error::Config("mlp layer count", 1, 0));
        }
        let mut layers = Vec::with_capacity(spec.len());
        let mut params = Vec::new();
        for (w, b, activation) in spec {
            if b.len() != w.rows() {
                return Err(Error::Config("bias length", w.rows(), b.len()));
            }
            if let Some(prev) = layers.last().map(|l: &LayerShape| l.outputs) {
                if prev != w.cols() {
                    return Err(Error::Config("layer input width", prev, w.cols()));
                }
            }
            if w.rows() == 0 || w.cols() == 0 {
                return Err(Error::Config("layer width", 1, 0));
            }
            if w.as_slice().iter().chain(&b).any(|v| !v.is_finite()) {
                return Err(Error::NonFinite("layer parameters"));
            }
            layers.push(LayerShape {
                inputs: w.cols(),
                outputs: w.rows(),
                activation,
                offset: params.len(),
            });
            params.extend_from_slice(w.as_slice());
            params.extend_from_slice(&b);
        }
        Ok(Self { layers, params })
    }

    pub fn layers(&self) -> &[LayerShape] {
        &self.layers
    }

    pub fn params(&self) -> &[f64] {
        &self.params
    }

    pub fn params_mut(&mut self) -> &mut [f64] {
        &mut self.params
    }

    pub fn num_params(&self) -> usize {
        self.params.len()
    }

    pub fn input_dim(&self) -> usize {
        self.layers[0].inputs
    }

    pub fn output_dim(&self) -> usize {
        self.layers[self.layers.len() - 1].outputs
    }

    /// True when both networks have identical layer layouts.
    pub fn same_architecture(&self, other: &Mlp) -> bool {
        self.layers == other.layers
    }

    fn check_input(&self, cols: usize) -> Result<()> {
        if cols != self.input_dim() {
            return Err(Error::Config("mlp input width", self.input_dim(), cols));
        }
        Ok(())
    }

    fn layer_forward(&self, layer: &LayerShape, x: &Matrix) -> Matrix {
        let batch = x.rows();
        let mut y = Matrix::zeros(batch, layer.outputs);
        let w = &self.params[layer.offset..layer.bias_offset()];
        let b = &self.params[layer.bias_offset()..layer.end()];
        for r in 0..batch {
            y.row_mut(r).copy_from_slice(b);
        }
        gemm(
            batch,
            layer.inputs,
            layer.outputs,
            1.0,
            View {
                data: x.as_slice(),
                row_stride: layer.inputs,
                col_stride: 1,
            },
            View {
                data: w,
                row_stride: 1,
                col_stride: layer.inputs,
            },
            1.0,
            y.as_mut_slice(),
        );
        layer.activation.apply(y.as_mut_slice());
        y
    }

    /// Forward pass for a single input vector.
    pub fn forward(&self, input: &[f64]) -> Result<Vec<f64>> {
        self.check_input(input.len())?;
        let x = Matrix::from_vec(1, input.len(), input.to_vec())?;
        Ok(self.forward_batch(&x)?.into_vec())
    }

    /// Forward pass over a batch whose rows are inputs.
    pub fn forward_batch(&self, inputs: &Matrix) -> Result<Matrix> {
        self.check_input(inputs.cols())?;
        let mut x = self.layer_forward(&self.layers[0], inputs);
        for layer in &self.layers[1..] {
            x = self.layer_forward(layer, &x);
        }
        Ok(x)
    }

    /// Forward pass that keeps every activation for [`Mlp::backward`].
    pub fn record(&self, inputs: Matrix) -> Result<Tape> {
        self.check_input(inputs.cols())?;
        let mut activations = Vec::with_capacity(self.layers.len() + 1);
        activations.push(inputs);
        for layer in &self.layers {
            let next = self.layer_forward(layer, activations.last().unwrap());
            activations.push(next);
        }
        Ok(Tape { activations })
    }

    /// Reverse pass: given `∂L/∂output` for every batch row, returns
    /// `∂L/∂params` (summed over the batch) and `∂L/∂input` per row.
    pub fn backward(&self, tape: Tape, output_grad: &Matrix) -> Result<Gradients> {
        let (params, input) = self.reverse(tape, output_grad, true, true)?;
        Ok(Gradients {
            params: params.unwrap(),
            input: input.unwrap(),
        })
    }

    /// Reverse pass producing only parameter gradients.
    pub fn backward_params(&self, tape: Tape, output_grad: &Matrix) -> Result<Vec<f64>> {
        Ok(self.reverse(tape, output_grad, true, false)?.0.unwrap())
    }

    /// Reverse pass producing only input gradients.
    pub fn backward_input(&self, tape: Tape, output_grad: &Matrix) -> Result<Matrix> {
        Ok(self.reverse(tape, output_grad, false, true)?.1.unwrap())
    }

    fn reverse(
        &self,
        tape: Tape,
        output_grad: &Matrix,
        want_params: bool,
        want_input: bool,
    ) -> Result<(Option<Vec<f64>>, Option<Matrix>)> {
        let out = tape.output();
        if output_grad.rows() != out.rows() || output_grad.cols() != out.cols() {
            return Err(Error::Config(
                "output gradient shape",
                out.rows() * out.cols(),
                output_grad.rows() * output_grad.cols(),
            ));
        }
        if tape.activations.len() != self.layers.len() + 1 {
            return Err(Error::Usage("tape was recorded by a different network"));
        }
        let batch = out.rows();
        let mut param_grads = if want_params {
            Some(vec![0.0; self.params.len()])
        } else {
            None
        };
        let mut grad = output_grad.clone();
        let mut acts = tape.activations;
        for (l, layer) in self.layers.iter().enumerate().rev() {
            let post = acts.pop().unwrap();
            if layer.activation == Activation::Relu {
                for (g, &a) in grad.as_mut_slice().iter_mut().zip(post.as_slice()) {
                    if a <= 0.0 {
                        *g = 0.0;
                    }
                }
            }
            let x = acts.last().unwrap();
            if let Some(pg) = param_grads.as_mut() {
                // dW = Gᵀ · X
                gemm(
                    layer.outputs,
                    batch,
                    layer.inputs,
                    1.0,
                    View {
                        data: grad.as_slice(),
                        row_stride: 1,
                        col_stride: layer.outputs,
                    },
                    View {
                        data: x.as_slice(),
                        row_stride: layer.inputs,
                        col_stride: 1,
                    },
                    0.0,
                    &mut pg[layer.offset..layer.bias_offset()],
                );
                let db = &mut pg[layer.bias_offset()..layer.end()];
                for r in 0..batch {
                    for (d, g) in db.iter_mut().zip(grad.row(r)) {
                        *d += g;
                    }
                }
            }
            if l == 0 && !want_input {
                break;
            }
            // dX = G · W
            let mut prev = Matrix::zeros(batch, layer.inputs);
            gemm(
                batch,
                layer.outputs,
                layer.inputs,
                1.0,
                View {
                    data: grad.as_slice(),
                    row_stride: layer.outputs,
                    col_stride: 1,
                },
                View {
                    data: &self.params[layer.offset..layer.bias_offset()],
                    row_stride: layer.inputs,
                    col_stride: 1,
                },
                0.0,
                prev.as_mut_slice(),
            );
            grad = prev;
        }
        let input = if want_input { Some(grad) } else { None };
        Ok((param_grads, input))
    }

    /// Value and gradients of a scalar loss of the network output at one input.
    ///
    /// `loss` receives the forward output and returns `(value, ∂value/∂output)`.
    pub fn gradient<F>(&self, input: &[f64], loss: F) -> Result<(f64, Gradients)>
    where
        F: FnOnce(&[f64]) -> (f64, Vec<f64>),
    {
        self.check_input(input.len())?;
        let tape = self.record(Matrix::from_vec(1, input.len(), input.to_vec())?)?;
        let (value, d_out) = loss(tape.output().row(0));
        if d_out.len() != self.output_dim() {
            return Err(Error::Usage(
                "loss must be a scalar with one partial per network output",
            ));
        }
        let d_out = Matrix::from_vec(1, d_out.len(), d_out)?;
        let grads = self.backward(tape, &d_out)?;
        Ok((value, grads))
    }
}
