//! Batched residual losses with exact gradients.
//!
//! A loss term holds, for each of its points, the wrapping of the network
//! output into a field (`t = B + φ·n`, with `B = 0`, `φ = s` for untrialed
//! networks), the operator coefficients and a source. Points are processed
//! in fixed-size chunks, in parallel, and reduced in chunk order.

use ndarray::Array2;
use rayon::prelude::*;

use super::{Coeff, DuctProblem, Operator};
use crate::autodiff::{Evaluation, Jet2, Objective};
use crate::error::{Error, Result};
use crate::network::batch::BatchForward;
use crate::network::Architecture;
use crate::trial::{boundary_and_blend, BoundaryConditions, DuctGeometry, JetField, Parts};

/// Points per chunk.
pub const DEFAULT_CHUNK: usize = 256;

/// How network outputs become field parts.
#[derive(Debug, Clone, Copy)]
pub enum Wrap<'a> {
    Trial {
        geometry: &'a DuctGeometry,
        bc: &'a BoundaryConditions,
    },
    Raw {
        scale: f64,
    },
}

#[derive(Debug, Clone)]
pub struct LossTerm {
    pub label: String,
    pub weight: f64,
    /// Divisor of the summed squares (the point count for a mean).
    norm: f64,
    rows: usize,
    parts: usize,
    xs: Vec<f64>,
    blend: Vec<Jet2>,
    /// `[point * parts + part]`
    boundary: Vec<Jet2>,
    /// `[(point * rows + row) * parts + part]`
    coeffs: Vec<Coeff>,
    /// `[point * rows + row]`
    source: Vec<f64>,
}

impl LossTerm {
    /// General constructor; `coefficients(x)` returns `rows * parts` entries
    /// and `source` holds `rows` values per point (empty for none).
    pub fn new(
        label: impl Into<String>,
        xs: Vec<f64>,
        rows: usize,
        parts: usize,
        wrap: Wrap<'_>,
        coefficients: impl Fn(f64) -> Result<Vec<Coeff>>,
        source: Vec<f64>,
        norm: f64,
    ) -> Result<Self> {
        if xs.is_empty() {
            return Err(Error::config("loss term without points"));
        }
        if !source.is_empty() && source.len() != xs.len() * rows {
            return Err(Error::config("source length does not match points and rows"));
        }
        let mut blend = Vec::with_capacity(xs.len());
        let mut boundary = Vec::with_capacity(xs.len() * parts);
        let mut coeffs = Vec::with_capacity(xs.len() * rows * parts);
        let part_kind = if parts == 1 { Parts::Real } else { Parts::Complex };
        for &x in &xs {
            match wrap {
                Wrap::Trial { geometry, bc } => {
                    let (b, phi) = boundary_and_blend(geometry, bc, part_kind, x);
                    boundary.extend(b);
                    blend.push(phi);
                }
                Wrap::Raw { scale } => {
                    boundary.extend(std::iter::repeat_n(Jet2::ZERO, parts));
                    blend.push(Jet2::constant(scale));
                }
            }
            let c = coefficients(x)?;
            if c.len() != rows * parts {
                return Err(Error::config("coefficient count does not match rows and parts"));
            }
            coeffs.extend(c);
        }
        let source = if source.is_empty() { vec![0.0; xs.len() * rows] } else { source };
        Ok(Self {
            label: label.into(),
            weight: 1.0,
            norm,
            rows,
            parts,
            xs,
            blend,
            boundary,
            coeffs,
            source,
        })
    }

    /// Mean-square residual of `op` over `xs`.
    pub fn operator(label: impl Into<String>, op: &Operator, xs: Vec<f64>, wrap: Wrap<'_>, source: Vec<f64>) -> Result<Self> {
        let n = xs.len() as f64;
        Self::new(label, xs, op.rows(), op.parts(), wrap, |x| op.coefficients(x), source, n)
    }

    /// Penalty `(1/norm) Σ_parts (n(x) - g)²` of an untrialed network at one
    /// point.
    pub fn point_penalty(label: impl Into<String>, x: f64, target: &[f64], norm: f64) -> Result<Self> {
        let parts = target.len();
        let identity = move |_x: f64| {
            Ok((0..parts * parts)
                .map(|k| if k / parts == k % parts { [1.0, 0.0, 0.0] } else { [0.0; 3] })
                .collect())
        };
        let source = target.iter().map(|g| -g).collect();
        Self::new(label, vec![x], parts, parts, Wrap::Raw { scale: 1.0 }, identity, source, norm)
    }

    pub fn points(&self) -> &[f64] {
        &self.xs
    }

    pub fn rows(&self) -> usize {
        self.rows
    }

    pub fn parts(&self) -> usize {
        self.parts
    }

    /// Row sums of squared residuals over `range`, accumulating the gradient
    /// of `weight * Σ_rows (sum / norm)` into `grad` when given.
    fn eval_chunk(
        &self,
        arch: &Architecture,
        params: &[f64],
        range: std::ops::Range<usize>,
        weight: f64,
        grad: Option<&mut [f64]>,
    ) -> Vec<f64> {
        let xs = &self.xs[range.clone()];
        let n = xs.len();
        let (rows, parts) = (self.rows, self.parts);
        let fwd = BatchForward::run(arch, params, xs);
        let out = fwd.output();
        let mut sums = vec![0.0; rows];
        let mut adj = grad.is_some().then(|| Array2::<f64>::zeros((3 * n, parts)));
        let mut trial = vec![Jet2::ZERO; parts];
        let scale = 2.0 * weight / self.norm;
        for (i, gi) in range.enumerate() {
            let phi = self.blend[gi];
            for (j, t) in trial.iter_mut().enumerate() {
                let net = Jet2::new(out[[i, j]], out[[n + i, j]], out[[2 * n + i, j]]);
                *t = self.boundary[gi * parts + j] + phi * net;
            }
            for r in 0..rows {
                let coeffs = &self.coeffs[(gi * rows + r) * parts..(gi * rows + r + 1) * parts];
                let mut res = self.source[gi * rows + r];
                for (c, t) in coeffs.iter().zip(&trial) {
                    res += c[0] * t.value + c[1] * t.d1 + c[2] * t.d2;
                }
                sums[r] += res * res;
                if let Some(adj) = adj.as_mut() {
                    let g = scale * res;
                    for (j, c) in coeffs.iter().enumerate() {
                        adj[[i, j]] += g * (c[0] * phi.value + c[1] * phi.d1 + c[2] * phi.d2);
                        adj[[n + i, j]] += g * (c[1] * phi.value + 2.0 * c[2] * phi.d1);
                        adj[[2 * n + i, j]] += g * c[2] * phi.value;
                    }
                }
            }
        }
        if let (Some(adj), Some(grad)) = (adj, grad) {
            fwd.backward(params, adj, grad);
        }
        sums
    }
}

/// Unweighted per-row losses of one term and, optionally, its gradient.
#[derive(Debug, Clone)]
pub struct TermEvaluation {
    pub row_losses: Vec<f64>,
    pub gradient: Vec<f64>,
}

impl TermEvaluation {
    pub fn loss(&self) -> f64 {
        self.row_losses.iter().sum()
    }
}

#[derive(Debug, Clone)]
pub struct PinnObjective {
    arch: Architecture,
    terms: Vec<LossTerm>,
    chunk: usize,
}

impl PinnObjective {
    pub fn new(arch: Architecture, terms: Vec<LossTerm>) -> Result<Self> {
        arch.validate()?;
        if terms.is_empty() {
            return Err(Error::config("objective without loss terms"));
        }
        if let Some(t) = terms.iter().find(|t| t.parts != arch.outputs()) {
            return Err(Error::config(format!(
                "term `{}` needs {} network outputs, architecture has {}",
                t.label,
                t.parts,
                arch.outputs()
            )));
        }
        Ok(Self {
            arch,
            terms,
            chunk: DEFAULT_CHUNK,
        })
    }

    /// Trial-wrapped pressure residual of `problem` over interior points.
    pub fn pressure(problem: &DuctProblem, arch: Architecture, xs: Vec<f64>) -> Result<Self> {
        problem.validate()?;
        let op = problem.pressure_operator()?;
        let wrap = Wrap::Trial {
            geometry: &problem.geometry,
            bc: &problem.bc,
        };
        Self::new(arch, vec![LossTerm::operator("domain", &op, xs, wrap, Vec::new())?])
    }

    /// Untrialed network: domain residual plus one boundary penalty per end,
    /// weighted by `lambda`, each normalized by the two boundary points.
    pub fn lagrange(problem: &DuctProblem, arch: Architecture, xs: Vec<f64>, lambda: [f64; 2]) -> Result<Self> {
        problem.validate()?;
        let op = problem.pressure_operator()?;
        let parts = problem.parts().count();
        let target = |p: num_complex::Complex64| if parts == 1 { vec![p.re] } else { vec![p.re, p.im] };
        let domain = LossTerm::operator("domain", &op, xs, Wrap::Raw { scale: 1.0 }, Vec::new())?;
        let mut b1 = LossTerm::point_penalty("boundary_1", problem.geometry.x1, &target(problem.bc.p1), 2.0)?;
        let mut b2 = LossTerm::point_penalty("boundary_2", problem.geometry.x2, &target(problem.bc.p2), 2.0)?;
        b1.weight = lambda[0];
        b2.weight = lambda[1];
        Self::new(arch, vec![domain, b1, b2])
    }

    /// Momentum residual for an untrialed two-output network predicting
    /// `ρc·u`, driven by the gradient of a fixed pressure field.
    pub fn velocity(problem: &DuctProblem, pressure: &impl JetField, arch: Architecture, xs: Vec<f64>) -> Result<Self> {
        problem.validate()?;
        let op = Operator::Momentum {
            k: problem.k(),
            mach: problem.mach(),
        };
        let mut source = Vec::with_capacity(2 * xs.len());
        for &x in &xs {
            let p = pressure.jets(x)?;
            source.push(p[0].d1);
            source.push(p.get(1).map_or(0.0, |j| j.d1));
        }
        let term = LossTerm::operator("momentum", &op, xs, Wrap::Raw { scale: 1.0 }, source)?;
        Self::new(arch, vec![term])
    }

    pub fn with_chunk(mut self, chunk: usize) -> Self {
        self.chunk = chunk.max(1);
        self
    }

    pub fn arch(&self) -> &Architecture {
        &self.arch
    }

    pub fn terms(&self) -> &[LossTerm] {
        &self.terms
    }

    pub fn set_weight(&mut self, term: usize, weight: f64) {
        self.terms[term].weight = weight;
    }

    fn chunks(&self, term: Option<usize>) -> Vec<(usize, std::ops::Range<usize>)> {
        let mut out = Vec::new();
        for (t, lt) in self.terms.iter().enumerate() {
            if term.is_some_and(|only| only != t) {
                continue;
            }
            let n = lt.xs.len();
            let mut start = 0;
            while start < n {
                let end = (start + self.chunk).min(n);
                out.push((t, start..end));
                start = end;
            }
        }
        out
    }

    fn check_params(&self, params: &[f64]) -> Result<()> {
        if params.len() != self.arch.param_count() {
            return Err(Error::config(format!(
                "parameter vector has length {}, expected {}",
                params.len(),
                self.arch.param_count()
            )));
        }
        Ok(())
    }

    /// Per-chunk `(term, row sums, gradient)`, in chunk order. Gradients are
    /// scaled by `weights[term]`.
    fn run(&self, params: &[f64], term: Option<usize>, weights: &[f64], with_grad: bool) -> Vec<(usize, Vec<f64>, Vec<f64>)> {
        let dim = params.len();
        self.chunks(term)
            .into_par_iter()
            .map(|(t, range)| {
                let mut grad = if with_grad { vec![0.0; dim] } else { Vec::new() };
                let sums = self.terms[t].eval_chunk(
                    &self.arch,
                    params,
                    range,
                    weights[t],
                    with_grad.then_some(grad.as_mut_slice()),
                );
                (t, sums, grad)
            })
            .collect()
    }

    fn non_finite(params: &[f64], what: &str) -> Error {
        Error::NumericalFailure {
            context: format!("{what} is not finite"),
            param_index: params.iter().position(|p| !p.is_finite()),
        }
    }

    /// Unweighted losses and gradients of each term separately.
    pub fn evaluate_terms(&self, params: &[f64]) -> Result<Vec<TermEvaluation>> {
        self.check_params(params)?;
        let ones = vec![1.0; self.terms.len()];
        (0..self.terms.len())
            .map(|t| {
                let mut row_losses = vec![0.0; self.terms[t].rows];
                let mut gradient = vec![0.0; params.len()];
                for (_, sums, grad) in self.run(params, Some(t), &ones, true) {
                    for (acc, s) in row_losses.iter_mut().zip(sums) {
                        *acc += s;
                    }
                    for (acc, g) in gradient.iter_mut().zip(grad) {
                        *acc += g;
                    }
                }
                for l in &mut row_losses {
                    *l /= self.terms[t].norm;
                }
                if row_losses.iter().chain(&gradient).any(|v| !v.is_finite()) {
                    return Err(Self::non_finite(params, &format!("loss term `{}`", self.terms[t].label)));
                }
                Ok(TermEvaluation { row_losses, gradient })
            })
            .collect()
    }

    fn row_losses(&self, chunks: &[(usize, Vec<f64>, Vec<f64>)]) -> Vec<Vec<f64>> {
        let mut rows: Vec<Vec<f64>> = self.terms.iter().map(|t| vec![0.0; t.rows]).collect();
        for (t, sums, _) in chunks {
            for (acc, s) in rows[*t].iter_mut().zip(sums) {
                *acc += s;
            }
        }
        for (r, t) in rows.iter_mut().zip(&self.terms) {
            for l in r.iter_mut() {
                *l /= t.norm;
            }
        }
        rows
    }

    fn total(&self, rows: &[Vec<f64>]) -> f64 {
        rows.iter()
            .zip(&self.terms)
            .map(|(r, t)| t.weight * r.iter().sum::<f64>())
            .sum()
    }
}

impl Objective for PinnObjective {
    fn dimension(&self) -> usize {
        self.arch.param_count()
    }

    /// `parts` lists the unweighted row losses of every term in order.
    fn evaluate(&self, params: &[f64]) -> Result<Evaluation> {
        self.check_params(params)?;
        let weights: Vec<f64> = self.terms.iter().map(|t| t.weight).collect();
        let chunks = self.run(params, None, &weights, true);
        let rows = self.row_losses(&chunks);
        let loss = self.total(&rows);
        let mut gradient = vec![0.0; params.len()];
        for (_, _, grad) in &chunks {
            for (acc, g) in gradient.iter_mut().zip(grad) {
                *acc += g;
            }
        }
        if !loss.is_finite() || gradient.iter().any(|g| !g.is_finite()) {
            return Err(Self::non_finite(params, "loss"));
        }
        Ok(Evaluation {
            loss,
            parts: rows.concat(),
            gradient,
        })
    }

    fn value(&self, params: &[f64]) -> Result<f64> {
        self.check_params(params)?;
        let weights: Vec<f64> = self.terms.iter().map(|t| t.weight).collect();
        let chunks = self.run(params, None, &weights, false);
        let loss = self.total(&self.row_losses(&chunks));
        if !loss.is_finite() {
            return Err(Self::non_finite(params, "loss"));
        }
        Ok(loss)
    }
}
