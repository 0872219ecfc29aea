//! Batched jet forward pass with an exact reverse pass over the parameters.
//!
//! For a batch of `n` points every layer holds a `3n x width` matrix whose
//! row blocks are the values, first and second `x`-derivatives of the layer's
//! outputs. The affine part of a layer acts identically on all three blocks
//! (the bias only on the value block), so each layer is a single GEMM.

use ndarray::linalg::general_mat_mul;
use ndarray::{s, Array2, ArrayView2, ArrayViewMut1, ArrayViewMut2, Axis};

use super::{layer_views, Architecture, LayerSpan};
use crate::autodiff::{Activation, Jet2};

struct HiddenCache {
    /// `σ'`, `σ''`, `σ'''` at the pre-activation values (`n x width`,
    /// row-major).
    d1: Vec<f64>,
    d2: Vec<f64>,
    d3: Vec<f64>,
    /// Pre-activation first and second derivative blocks.
    z1: Vec<f64>,
    z2: Vec<f64>,
}

/// Cached forward pass over a batch of points.
pub struct BatchForward {
    n: usize,
    spans: Vec<LayerSpan>,
    /// Input to each affine layer (`3n x fan_in`).
    inputs: Vec<Array2<f64>>,
    hidden: Vec<HiddenCache>,
    output: Array2<f64>,
}

impl BatchForward {
    pub fn run(arch: &Architecture, params: &[f64], xs: &[f64]) -> Self {
        let n = xs.len();
        let spans = arch.spans();
        let mut input = Array2::zeros((3 * n, 1));
        for (i, &x) in xs.iter().enumerate() {
            input[[i, 0]] = x;
            input[[n + i, 0]] = 1.0;
        }
        let mut inputs = Vec::with_capacity(spans.len());
        let mut hidden = Vec::with_capacity(spans.len() - 1);
        let last = spans.len() - 1;
        let mut output = Array2::zeros((0, 0));
        for (q, span) in spans.iter().enumerate() {
            let (w, b) = layer_views(params, span);
            let mut z = Array2::zeros((3 * n, span.rows));
            general_mat_mul(1.0, &input, &w.t(), 0.0, &mut z);
            z.slice_mut(s![..n, ..]).outer_iter_mut().for_each(|mut row| row += &b);
            inputs.push(input);
            if q == last {
                output = z;
                break;
            }
            let (act, cache) = activate(z, n, arch.activation);
            hidden.push(cache);
            input = act;
        }
        Self {
            n,
            spans,
            inputs,
            hidden,
            output,
        }
    }

    pub fn len(&self) -> usize {
        self.n
    }

    pub fn is_empty(&self) -> bool {
        self.n == 0
    }

    /// Output jet of neuron `part` at point `i`.
    #[inline]
    pub fn output_jet(&self, i: usize, part: usize) -> Jet2 {
        let n = self.n;
        Jet2::new(
            self.output[[i, part]],
            self.output[[n + i, part]],
            self.output[[2 * n + i, part]],
        )
    }

    /// Raw `3n x outputs` output blocks.
    pub fn output(&self) -> ArrayView2<'_, f64> {
        self.output.view()
    }

    /// Accumulates `∂loss/∂θ` into `grad` given `∂loss/∂output`, laid out
    /// like [`output`](Self::output).
    pub fn backward(&self, params: &[f64], out_adjoint: Array2<f64>, grad: &mut [f64]) {
        let n = self.n;
        let mut g = out_adjoint;
        for q in (0..self.spans.len()).rev() {
            let span = self.spans[q];
            let (w, _) = layer_views(params, &span);
            let input = &self.inputs[q];
            {
                let (gw, gb) = grad_views(grad, &span);
                let mut gw = gw;
                general_mat_mul(1.0, &g.t(), input, 1.0, &mut gw);
                let mut gb = gb;
                gb += &g.slice(s![..n, ..]).sum_axis(Axis(0));
            }
            if q == 0 {
                break;
            }
            let mut ga = Array2::zeros((3 * n, span.cols));
            general_mat_mul(1.0, &g, &w, 0.0, &mut ga);
            g = activation_backward(ga, &self.hidden[q - 1], n);
        }
    }
}

fn grad_views<'a>(grad: &'a mut [f64], span: &LayerSpan) -> (ArrayViewMut2<'a, f64>, ArrayViewMut1<'a, f64>) {
    let (w, rest) = grad[span.weights..span.bias + span.rows].split_at_mut(span.rows * span.cols);
    (
        ArrayViewMut2::from_shape((span.rows, span.cols), w).expect("span matches"),
        ArrayViewMut1::from(rest),
    )
}

fn blocks(z: &mut Array2<f64>, len: usize) -> (&mut [f64], &mut [f64], &mut [f64]) {
    let all = z.as_slice_mut().expect("standard layout");
    let (v, rest) = all.split_at_mut(len);
    let (a1, a2) = rest.split_at_mut(len);
    (v, a1, a2)
}

fn activate(mut z: Array2<f64>, n: usize, activation: Activation) -> (Array2<f64>, HiddenCache) {
    let len = n * z.ncols();
    let (v, a1, a2) = blocks(&mut z, len);
    let z1 = a1.to_vec();
    let z2 = a2.to_vec();
    let mut d1 = vec![0.0; len];
    let mut d2 = vec![0.0; len];
    let mut d3 = vec![0.0; len];
    for k in 0..len {
        let [s0, s1, s2, s3] = activation.derivatives(v[k]);
        let (x1, x2) = (a1[k], a2[k]);
        v[k] = s0;
        a1[k] = s1 * x1;
        a2[k] = s2 * x1 * x1 + s1 * x2;
        d1[k] = s1;
        d2[k] = s2;
        d3[k] = s3;
    }
    (z, HiddenCache { d1, d2, d3, z1, z2 })
}

fn activation_backward(mut g: Array2<f64>, cache: &HiddenCache, n: usize) -> Array2<f64> {
    let len = n * g.ncols();
    let (g0, g1, g2) = blocks(&mut g, len);
    let c = cache;
    for k in 0..len {
        let (s1, s2, s3) = (c.d1[k], c.d2[k], c.d3[k]);
        let (z1, z2) = (c.z1[k], c.z2[k]);
        let (ga, ga1, ga2) = (g0[k], g1[k], g2[k]);
        g0[k] = ga * s1 + ga1 * s2 * z1 + ga2 * (s3 * z1 * z1 + s2 * z2);
        g1[k] = ga1 * s1 + 2.0 * ga2 * s2 * z1;
        g2[k] = ga2 * s1;
    }
    g
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::autodiff::{Scalar, Tape, Var};
    use crate::network::{forward_jet_generic, NetworkParams};

    #[test]
    fn batch_matches_pointwise_forward() {
        for act in Activation::HIDDEN {
            let arch = Architecture::new(3, 7, 2, act).unwrap();
            let p = NetworkParams::init(&arch, 11).unwrap();
            let xs = [0.0, 0.13, 0.5, 0.91, 1.0];
            let fwd = BatchForward::run(&arch, p.as_slice(), &xs);
            for (i, &x) in xs.iter().enumerate() {
                let reference = p.forward_jet(x).unwrap();
                for part in 0..2 {
                    let a = fwd.output_jet(i, part);
                    let b = reference.parts[part];
                    for (u, v) in a.as_array().iter().zip(b.as_array()) {
                        assert!((u - v).abs() <= 1e-13 * (1.0 + v.abs()), "{act}: {u} vs {v}");
                    }
                }
            }
        }
    }

    // Weighted sum of all output jet components; the backward pass must agree
    // with the scalar tape run over the point-wise forward pass.
    #[test]
    fn backward_matches_tape() {
        for act in Activation::HIDDEN {
            let arch = Architecture::new(2, 5, 2, act).unwrap();
            let p = NetworkParams::init(&arch, 3).unwrap();
            let xs = [0.1, 0.4, 0.77];
            let weights = |i: usize, part: usize, k: usize| 0.3 + 0.1 * i as f64 - 0.7 * part as f64 + 0.25 * k as f64;

            let fwd = BatchForward::run(&arch, p.as_slice(), &xs);
            let n = xs.len();
            let mut adj = Array2::zeros((3 * n, 2));
            for i in 0..n {
                for part in 0..2 {
                    for k in 0..3 {
                        adj[[k * n + i, part]] = weights(i, part, k);
                    }
                }
            }
            let mut grad = vec![0.0; p.len()];
            fwd.backward(p.as_slice(), adj, &mut grad);

            let tape = Tape::new();
            let vars: Vec<Var> = p.as_slice().iter().map(|&v| tape.var(v)).collect();
            let mut total = vars[0].constant(0.0);
            for (i, &x) in xs.iter().enumerate() {
                let out = forward_jet_generic(&arch, &vars, x);
                for (part, jet) in out.iter().enumerate() {
                    total = total
                        + jet.value.scale(weights(i, part, 0))
                        + jet.d1.scale(weights(i, part, 1))
                        + jet.d2.scale(weights(i, part, 2));
                }
            }
            let adjoints = tape.gradient(total);
            for (k, v) in vars.iter().enumerate() {
                let expect = adjoints[v.index()];
                assert!(
                    (grad[k] - expect).abs() <= 1e-12 * (1.0 + expect.abs()),
                    "{act} param {k}: {} vs {expect}",
                    grad[k]
                );
            }
        }
    }
}
