//! Relative error and gradient histograms.

use num_complex::Complex64;
use serde::Serialize;

use crate::error::{Error, Result};
use crate::network::Architecture;
use crate::trial::DuctGeometry;

/// Relative root-sum-square error on an inclusive test grid.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct ErrorReport {
    /// Over the complex values.
    pub delta: f64,
    /// Real and imaginary parts on their own; `None` when the true part
    /// vanishes on the whole grid.
    pub delta_real: Option<f64>,
    pub delta_imag: Option<f64>,
    pub n_t: usize,
    pub x1: f64,
    pub x2: f64,
}

/// `sqrt(Σ|pred - true|²) / sqrt(Σ|true|²)` over `n_t` equispaced points
/// spanning `[x1, x2]`.
pub fn relative_error(
    predicted: impl Fn(f64) -> Result<Complex64>,
    truth: impl Fn(f64) -> Result<Complex64>,
    geometry: &DuctGeometry,
    n_t: usize,
) -> Result<ErrorReport> {
    geometry.validate()?;
    if n_t < 2 {
        return Err(Error::config(format!("need at least 2 test points, got {n_t}")));
    }
    let mut num = [0.0; 2];
    let mut den = [0.0; 2];
    for x in geometry.linspace(n_t) {
        let p = predicted(x)?;
        let t = truth(x)?;
        let d = p - t;
        num[0] += d.re * d.re;
        num[1] += d.im * d.im;
        den[0] += t.re * t.re;
        den[1] += t.im * t.im;
    }
    let total_den = den[0] + den[1];
    if total_den == 0.0 {
        return Err(Error::UndefinedMetric("true field vanishes on the test grid".into()));
    }
    let delta = ((num[0] + num[1]) / total_den).sqrt();
    if !delta.is_finite() {
        return Err(Error::numerical("relative error is not finite"));
    }
    let part = |i: usize| (den[i] > 0.0).then(|| (num[i] / den[i]).sqrt());
    Ok(ErrorReport {
        delta,
        delta_real: part(0),
        delta_imag: part(1),
        n_t,
        x1: geometry.x1,
        x2: geometry.x2,
    })
}

/// Default test-grid size.
pub const DEFAULT_TEST_POINTS: usize = 500;

/// Magnitude below which a gradient component counts as vanished.
pub const VANISHED: f64 = 1e-6;

/// Symmetric log-spaced binning: `bins_per_decade` bins per decade for
/// magnitudes in `[10^min_exp, 10^max_exp]` on each side, a zero bin for
/// smaller magnitudes, and larger magnitudes clamped into the outer bins.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct HistogramAxis {
    pub min_exp: i32,
    pub max_exp: i32,
    pub bins_per_decade: usize,
}

impl Default for HistogramAxis {
    fn default() -> Self {
        Self {
            min_exp: -12,
            max_exp: 4,
            bins_per_decade: 2,
        }
    }
}

impl HistogramAxis {
    fn validate(&self) -> Result<()> {
        if self.max_exp <= self.min_exp || self.bins_per_decade == 0 {
            return Err(Error::config("histogram axis needs max_exp > min_exp and at least one bin per decade"));
        }
        Ok(())
    }

    fn side_bins(&self) -> usize {
        (self.max_exp - self.min_exp) as usize * self.bins_per_decade
    }

    /// Ascending magnitudes bounding the bins on one side.
    fn magnitudes(&self) -> Vec<f64> {
        let b = self.bins_per_decade as f64;
        (0..=self.side_bins())
            .map(|i| 10f64.powf(self.min_exp as f64 + i as f64 / b))
            .collect()
    }

    /// Edges from `-10^max_exp` to `10^max_exp`; the bin between
    /// `-10^min_exp` and `10^min_exp` is the zero bin.
    pub fn edges(&self) -> Vec<f64> {
        let m = self.magnitudes();
        m.iter().rev().map(|v| -v).chain(m.iter().copied()).collect()
    }

    fn bin(&self, g: f64, magnitudes: &[f64]) -> usize {
        let side = self.side_bins();
        let a = g.abs();
        if a < magnitudes[0] {
            return side;
        }
        // index of the magnitude bin, clamped into the outermost one
        let k = magnitudes.partition_point(|&m| m <= a).clamp(1, side) - 1;
        if g < 0.0 {
            side - 1 - k
        } else {
            side + 1 + k
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct GradHistogram {
    pub label: String,
    pub layer: usize,
    pub edges: Vec<f64>,
    /// One more bin than half the edges: the zero bin sits in the middle.
    pub counts: Vec<usize>,
    pub components: usize,
    /// Fraction of components with magnitude below [`VANISHED`].
    pub vanished_fraction: f64,
}

impl GradHistogram {
    pub fn fraction_below(values: &[f64], eps: f64) -> f64 {
        values.iter().filter(|g| g.abs() < eps).count() as f64 / values.len() as f64
    }
}

/// Index of the affine layer feeding the last hidden layer.
pub fn last_hidden_layer(arch: &Architecture) -> usize {
    arch.hidden_layers() - 1
}

/// The slice of `gradient` belonging to affine layer `layer` (weights then
/// biases).
pub fn layer_gradient<'g>(arch: &Architecture, gradient: &'g [f64], layer: usize) -> Result<&'g [f64]> {
    if gradient.len() != arch.param_count() {
        return Err(Error::config(format!(
            "gradient has {} components, the network has {} parameters",
            gradient.len(),
            arch.param_count()
        )));
    }
    let spans = arch.spans();
    let span = spans.get(layer).ok_or_else(|| {
        Error::config(format!("layer {layer} out of range, the network has {} affine layers", spans.len()))
    })?;
    Ok(&gradient[span.weights..span.bias + span.rows])
}

/// Histogram of one loss term's gradient components within `layer`.
pub fn gradient_histogram(
    label: impl Into<String>,
    arch: &Architecture,
    gradient: &[f64],
    layer: usize,
    axis: &HistogramAxis,
) -> Result<GradHistogram> {
    axis.validate()?;
    let values = layer_gradient(arch, gradient, layer)?;
    if let Some(i) = values.iter().position(|g| !g.is_finite()) {
        return Err(Error::NumericalFailure {
            context: "gradient histogram".into(),
            param_index: Some(i),
        });
    }
    let magnitudes = axis.magnitudes();
    let mut counts = vec![0; 2 * axis.side_bins() + 1];
    for &g in values {
        counts[axis.bin(g, &magnitudes)] += 1;
    }
    Ok(GradHistogram {
        label: label.into(),
        layer,
        edges: axis.edges(),
        counts,
        components: values.len(),
        vanished_fraction: GradHistogram::fraction_below(values, VANISHED),
    })
}
