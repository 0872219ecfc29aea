//! Fully connected approximator `x -> p̂(x; θ)`.
//!
//! One scalar input, a stack of equally wide hidden layers with a smooth
//! activation, and an affine output layer of one neuron (real field) or two
//! neurons (real and imaginary part). Parameters are stored as one flat
//! vector, layer-major, each layer as its weight matrix (row-major,
//! `rows = fan_out`) followed by its bias.

pub mod batch;
pub mod io;

use ndarray::{ArrayView1, ArrayView2};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::autodiff::{Activation, Jet2, Scalar};
use crate::error::{Error, Result};

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Architecture {
    /// Layer widths from input to output, e.g. `[1, 64, 64, 64, 64, 64, 1]`.
    pub widths: Vec<usize>,
    pub activation: Activation,
}

/// Location of one affine layer inside the flat parameter vector.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct LayerSpan {
    pub weights: usize,
    pub bias: usize,
    pub rows: usize,
    pub cols: usize,
}

impl LayerSpan {
    pub fn len(&self) -> usize {
        self.rows * self.cols + self.rows
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    /// Range of this layer's weights and bias in the flat vector.
    pub fn range(&self) -> std::ops::Range<usize> {
        self.weights..self.bias + self.rows
    }
}

impl Architecture {
    pub fn new(hidden_layers: usize, width: usize, outputs: usize, activation: Activation) -> Result<Self> {
        let mut widths = Vec::with_capacity(hidden_layers + 2);
        widths.push(1);
        widths.extend(std::iter::repeat_n(width, hidden_layers));
        widths.push(outputs);
        let arch = Self { widths, activation };
        arch.validate()?;
        Ok(arch)
    }

    /// Builds from a total layer count `m` as tabulated for the reference
    /// setup. With `counts_input = false`, `m` counts hidden layers plus the
    /// output layer (`m - 1` hidden); otherwise the input layer is counted
    /// too (`m - 2` hidden).
    pub fn from_layer_count(
        m: usize,
        width: usize,
        outputs: usize,
        activation: Activation,
        counts_input: bool,
    ) -> Result<Self> {
        let non_hidden = if counts_input { 2 } else { 1 };
        if m <= non_hidden {
            return Err(Error::config(format!("layer count {m} leaves no hidden layer")));
        }
        Self::new(m - non_hidden, width, outputs, activation)
    }

    pub fn validate(&self) -> Result<()> {
        if self.widths.len() < 3 {
            return Err(Error::config("network needs at least one hidden layer"));
        }
        if let Some(q) = self.widths.iter().position(|&w| w == 0) {
            return Err(Error::config(format!("layer {q} has zero width")));
        }
        if self.widths[0] != 1 {
            return Err(Error::config(format!(
                "input width must be 1, got {}",
                self.widths[0]
            )));
        }
        let out = self.outputs();
        if !(1..=2).contains(&out) {
            return Err(Error::config(format!("output width must be 1 or 2, got {out}")));
        }
        Ok(())
    }

    pub fn outputs(&self) -> usize {
        *self.widths.last().expect("non-empty widths")
    }

    pub fn hidden_layers(&self) -> usize {
        self.widths.len() - 2
    }

    /// Number of affine layers (hidden + output).
    pub fn layer_count(&self) -> usize {
        self.widths.len() - 1
    }

    pub fn spans(&self) -> Vec<LayerSpan> {
        let mut offset = 0;
        self.widths
            .windows(2)
            .map(|w| {
                let (cols, rows) = (w[0], w[1]);
                let span = LayerSpan {
                    weights: offset,
                    bias: offset + rows * cols,
                    rows,
                    cols,
                };
                offset += span.len();
                span
            })
            .collect()
    }

    pub fn param_count(&self) -> usize {
        self.widths.windows(2).map(|w| w[0] * w[1] + w[1]).sum()
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct NetworkParams {
    pub arch: Architecture,
    /// Seed the parameters were initialized from, when known.
    pub seed: Option<u64>,
    values: Vec<f64>,
}

/// Output jets, one per output neuron.
#[derive(Debug, Clone, PartialEq)]
pub struct NetOutput {
    pub parts: Vec<Jet2>,
}

impl NetworkParams {
    /// Scaled-uniform initialization: weights `U(-s, s)` with
    /// `s = sqrt(6 / (fan_in + fan_out))`, biases zero.
    pub fn init(arch: &Architecture, seed: u64) -> Result<Self> {
        arch.validate()?;
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let mut values = vec![0.0; arch.param_count()];
        for span in arch.spans() {
            let limit = (6.0 / (span.rows + span.cols) as f64).sqrt();
            for w in &mut values[span.weights..span.bias] {
                *w = rng.random_range(-limit..limit);
            }
        }
        Ok(Self {
            arch: arch.clone(),
            seed: Some(seed),
            values,
        })
    }

    pub fn zeros(arch: &Architecture) -> Result<Self> {
        arch.validate()?;
        Ok(Self {
            arch: arch.clone(),
            seed: None,
            values: vec![0.0; arch.param_count()],
        })
    }

    pub fn unflatten(values: Vec<f64>, arch: &Architecture) -> Result<Self> {
        arch.validate()?;
        if values.len() != arch.param_count() {
            return Err(Error::config(format!(
                "parameter vector has length {}, architecture {:?} needs {}",
                values.len(),
                arch.widths,
                arch.param_count()
            )));
        }
        Ok(Self {
            arch: arch.clone(),
            seed: None,
            values,
        })
    }

    pub fn flatten(&self) -> Vec<f64> {
        self.values.clone()
    }

    pub fn as_slice(&self) -> &[f64] {
        &self.values
    }

    pub fn as_mut_slice(&mut self) -> &mut [f64] {
        &mut self.values
    }

    pub fn len(&self) -> usize {
        self.values.len()
    }

    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }

    pub fn with_seed(mut self, seed: Option<u64>) -> Self {
        self.seed = seed;
        self
    }

    /// Weight matrix (`fan_out x fan_in`) and bias of affine layer `q`
    /// (0-based, the last one is the output layer).
    pub fn layer(&self, q: usize) -> (ArrayView2<'_, f64>, ArrayView1<'_, f64>) {
        let span = self.arch.spans()[q];
        layer_views(&self.values, &span)
    }

    pub fn forward_jet(&self, x: f64) -> Result<NetOutput> {
        if !x.is_finite() {
            return Err(Error::config(format!("evaluation point {x} is not finite")));
        }
        let parts = forward_jet_generic(&self.arch, &self.values, x);
        if let Some(bad) = parts.iter().position(|j| !j.is_finite()) {
            return Err(Error::numerical(format!(
                "network output {bad} is not finite at x = {x}"
            )));
        }
        Ok(NetOutput { parts })
    }
}

pub(crate) fn layer_views<'a>(
    values: &'a [f64],
    span: &LayerSpan,
) -> (ArrayView2<'a, f64>, ArrayView1<'a, f64>) {
    let w = ArrayView2::from_shape((span.rows, span.cols), &values[span.weights..span.bias])
        .expect("span matches architecture");
    let b = ArrayView1::from(&values[span.bias..span.bias + span.rows]);
    (w, b)
}

/// Point-wise forward pass over any scalar type, seeded with the identity jet
/// at `x`. The generic version backs tape gradients in tests and diagnostics;
/// training uses the batched pass in [`batch`].
pub fn forward_jet_generic<T: Scalar>(arch: &Architecture, params: &[T], x: f64) -> Vec<Jet2<T>> {
    let factory = params[0];
    let mut act: Vec<Jet2<T>> = vec![Jet2::new(
        factory.constant(x),
        factory.constant(1.0),
        factory.constant(0.0),
    )];
    let spans = arch.spans();
    let last = spans.len() - 1;
    for (q, span) in spans.iter().enumerate() {
        let mut next = Vec::with_capacity(span.rows);
        for r in 0..span.rows {
            let row = &params[span.weights + r * span.cols..span.weights + (r + 1) * span.cols];
            let mut z = Jet2::lift(params[span.bias + r]);
            for (w, a) in row.iter().zip(&act) {
                z = z + Jet2::new(*w * a.value, *w * a.d1, *w * a.d2);
            }
            next.push(if q == last { z } else { z.activate(arch.activation) });
        }
        act = next;
    }
    act
}
