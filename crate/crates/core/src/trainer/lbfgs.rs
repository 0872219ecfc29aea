//! Limited-memory BFGS with a strong-Wolfe line search.

use std::collections::VecDeque;

use serde::{Deserialize, Serialize};

use crate::autodiff::{inf_norm, Evaluation, Objective};
use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct LbfgsConfig {
    pub max_iterations: usize,
    /// Stop once the gradient ∞-norm is at or below this value.
    pub tolerance: f64,
    pub history_size: usize,
    /// Sufficient-decrease constant.
    pub c1: f64,
    /// Curvature constant.
    pub c2: f64,
    /// Objective evaluations allowed per line search.
    pub max_line_search: usize,
}

impl Default for LbfgsConfig {
    fn default() -> Self {
        Self {
            max_iterations: 1000,
            tolerance: 1e-6,
            history_size: 20,
            c1: 1e-4,
            c2: 0.9,
            max_line_search: 25,
        }
    }
}

impl LbfgsConfig {
    pub fn validate(&self) -> Result<()> {
        if self.max_iterations == 0 || self.history_size == 0 || self.max_line_search == 0 {
            return Err(Error::config("iterations, history size and line-search budget must be positive"));
        }
        if !(self.tolerance >= 0.0) {
            return Err(Error::config(format!("tolerance must be non-negative, got {}", self.tolerance)));
        }
        if !(0.0 < self.c1 && self.c1 < self.c2 && self.c2 < 1.0) {
            return Err(Error::config(format!(
                "line-search constants need 0 < c1 < c2 < 1, got {} and {}",
                self.c1, self.c2
            )));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Termination {
    Tolerance,
    MaxIterations,
    LineSearchFailure,
}

impl Termination {
    pub fn as_str(&self) -> &'static str {
        match self {
            Termination::Tolerance => "tolerance",
            Termination::MaxIterations => "max-iterations",
            Termination::LineSearchFailure => "line-search-failure",
        }
    }
}

/// State after an accepted iterate; iteration 0 is the starting point.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct HistoryEntry {
    pub iteration: usize,
    pub loss: f64,
    pub parts: Vec<f64>,
    pub grad_inf_norm: f64,
}

#[derive(Debug, Clone)]
pub struct LbfgsResult {
    pub params: Vec<f64>,
    pub history: Vec<HistoryEntry>,
    pub termination: Termination,
    pub evaluations: usize,
}

impl LbfgsResult {
    pub fn final_entry(&self) -> &HistoryEntry {
        self.history.last().expect("history holds the starting point")
    }
}

fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

struct Probe {
    alpha: f64,
    phi: f64,
    dphi: f64,
    eval: Option<Evaluation>,
}

struct LineSearch<'a, O: Objective + ?Sized> {
    objective: &'a O,
    x: &'a [f64],
    d: &'a [f64],
    phi0: f64,
    dphi0: f64,
    c1: f64,
    c2: f64,
    budget: usize,
    evaluations: usize,
}

impl<O: Objective + ?Sized> LineSearch<'_, O> {
    fn probe(&mut self, alpha: f64) -> Result<Probe> {
        self.evaluations += 1;
        let trial: Vec<f64> = self.x.iter().zip(self.d).map(|(x, d)| x + alpha * d).collect();
        match self.objective.evaluate(&trial) {
            Ok(eval) => Ok(Probe {
                alpha,
                phi: eval.loss,
                dphi: dot(&eval.gradient, self.d),
                eval: Some(eval),
            }),
            // a blown-up trial point only means the step is too long
            Err(Error::NumericalFailure { .. }) => Ok(Probe {
                alpha,
                phi: f64::INFINITY,
                dphi: f64::NAN,
                eval: None,
            }),
            Err(e) => Err(e),
        }
    }

    fn armijo(&self, p: &Probe) -> bool {
        p.phi <= self.phi0 + self.c1 * p.alpha * self.dphi0
    }

    fn curvature(&self, p: &Probe) -> bool {
        p.dphi.abs() <= -self.c2 * self.dphi0
    }

    fn exhausted(&self) -> bool {
        self.evaluations >= self.budget
    }

    /// Returns an accepted probe, or `None` when the budget runs out.
    fn search(&mut self, alpha0: f64) -> Result<Option<Probe>> {
        let zero = Probe {
            alpha: 0.0,
            phi: self.phi0,
            dphi: self.dphi0,
            eval: None,
        };
        let mut prev = zero;
        let mut alpha = alpha0;
        let mut first = true;
        loop {
            let cur = self.probe(alpha)?;
            if !self.armijo(&cur) || (!first && cur.phi >= prev.phi) {
                return self.zoom(prev, cur);
            }
            if self.curvature(&cur) {
                return Ok(Some(cur));
            }
            if cur.dphi >= 0.0 {
                return self.zoom(cur, prev);
            }
            if self.exhausted() {
                return Ok(Some(cur));
            }
            first = false;
            alpha = cur.alpha * 2.0;
            prev = cur;
        }
    }

    fn zoom(&mut self, mut lo: Probe, mut hi: Probe) -> Result<Option<Probe>> {
        loop {
            if self.exhausted() {
                // fall back to the best sufficient-decrease point seen
                return Ok(lo.eval.is_some().then_some(lo));
            }
            let width = (hi.alpha - lo.alpha).abs();
            if width <= 1e-16 * lo.alpha.abs().max(hi.alpha.abs()) {
                return Ok(lo.eval.is_some().then_some(lo));
            }
            let alpha = interpolate(&lo, &hi);
            let cur = self.probe(alpha)?;
            if !self.armijo(&cur) || cur.phi >= lo.phi {
                hi = cur;
            } else {
                if self.curvature(&cur) {
                    return Ok(Some(cur));
                }
                if cur.dphi * (hi.alpha - lo.alpha) >= 0.0 {
                    hi = lo;
                }
                lo = cur;
            }
        }
    }
}

/// Minimizer of the cubic through both probes, kept inside the inner 80% of
/// the bracket; bisection when the cubic is unusable.
fn interpolate(a: &Probe, b: &Probe) -> f64 {
    let (lo, hi) = (a.alpha.min(b.alpha), a.alpha.max(b.alpha));
    let mid = 0.5 * (lo + hi);
    let margin = 0.1 * (hi - lo);
    if !(a.phi.is_finite() && b.phi.is_finite() && a.dphi.is_finite() && b.dphi.is_finite()) {
        return mid;
    }
    let d1 = a.dphi + b.dphi - 3.0 * (a.phi - b.phi) / (a.alpha - b.alpha);
    let disc = d1 * d1 - a.dphi * b.dphi;
    if disc < 0.0 {
        return mid;
    }
    let d2 = (b.alpha - a.alpha).signum() * disc.sqrt();
    let t = b.alpha - (b.alpha - a.alpha) * (b.dphi + d2 - d1) / (b.dphi - a.dphi + 2.0 * d2);
    if t.is_finite() {
        t.clamp(lo + margin, hi - margin)
    } else {
        mid
    }
}

fn entry(iteration: usize, eval: &Evaluation) -> HistoryEntry {
    HistoryEntry {
        iteration,
        loss: eval.loss,
        parts: eval.parts.clone(),
        grad_inf_norm: inf_norm(&eval.gradient),
    }
}

/// Minimizes `objective` from `theta0`.
pub fn lbfgs_minimize<O: Objective + ?Sized>(objective: &O, theta0: &[f64], config: &LbfgsConfig) -> Result<LbfgsResult> {
    config.validate()?;
    if theta0.len() != objective.dimension() {
        return Err(Error::config(format!(
            "start vector has length {}, objective dimension is {}",
            theta0.len(),
            objective.dimension()
        )));
    }
    if let Some(i) = theta0.iter().position(|v| !v.is_finite()) {
        return Err(Error::NumericalFailure {
            context: "starting point".into(),
            param_index: Some(i),
        });
    }
    let mut x = theta0.to_vec();
    let mut eval = objective.evaluate(&x)?;
    let mut evaluations = 1;
    let mut history = vec![entry(0, &eval)];
    let mut memory: VecDeque<(Vec<f64>, Vec<f64>, f64)> = VecDeque::with_capacity(config.history_size);
    let n = x.len();

    for iteration in 1..=config.max_iterations {
        if history.last().unwrap().grad_inf_norm <= config.tolerance {
            return Ok(LbfgsResult {
                params: x,
                history,
                termination: Termination::Tolerance,
                evaluations,
            });
        }
        let g = &eval.gradient;
        let mut d = two_loop(g, &memory);
        let mut dphi0 = dot(g, &d);
        if !(dphi0 < 0.0) {
            memory.clear();
            d = g.iter().map(|v| -v).collect();
            dphi0 = dot(g, &d);
        }
        let alpha0 = if memory.is_empty() {
            (1.0 / dot(g, g).sqrt()).min(1.0)
        } else {
            1.0
        };
        let mut ls = LineSearch {
            objective,
            x: &x,
            d: &d,
            phi0: eval.loss,
            dphi0,
            c1: config.c1,
            c2: config.c2,
            budget: config.max_line_search,
            evaluations: 0,
        };
        let found = ls.search(alpha0)?;
        evaluations += ls.evaluations;
        let Some(probe) = found.filter(|p| p.phi < eval.loss) else {
            return Ok(LbfgsResult {
                params: x,
                history,
                termination: Termination::LineSearchFailure,
                evaluations,
            });
        };
        let new_eval = probe.eval.expect("accepted probes carry an evaluation");
        let s: Vec<f64> = d.iter().map(|v| probe.alpha * v).collect();
        let y: Vec<f64> = new_eval.gradient.iter().zip(g).map(|(a, b)| a - b).collect();
        let sy = dot(&s, &y);
        if sy > f64::EPSILON * dot(&y, &y) {
            if memory.len() == config.history_size {
                memory.pop_front();
            }
            memory.push_back((s.clone(), y, 1.0 / sy));
        }
        for i in 0..n {
            x[i] += s[i];
        }
        eval = new_eval;
        history.push(entry(iteration, &eval));
    }
    let termination = if history.last().unwrap().grad_inf_norm <= config.tolerance {
        Termination::Tolerance
    } else {
        Termination::MaxIterations
    };
    Ok(LbfgsResult {
        params: x,
        history,
        termination,
        evaluations,
    })
}

/// `-H g` from the stored pairs, with `H0 = (s·y / y·y) I`.
fn two_loop(g: &[f64], memory: &VecDeque<(Vec<f64>, Vec<f64>, f64)>) -> Vec<f64> {
    let mut q = g.to_vec();
    let mut alphas = Vec::with_capacity(memory.len());
    for (s, y, rho) in memory.iter().rev() {
        let a = rho * dot(s, &q);
        for (qi, yi) in q.iter_mut().zip(y) {
            *qi -= a * yi;
        }
        alphas.push(a);
    }
    if let Some((s, y, _)) = memory.back() {
        let gamma = dot(s, y) / dot(y, y);
        for qi in &mut q {
            *qi *= gamma;
        }
    }
    for ((s, y, rho), a) in memory.iter().zip(alphas.iter().rev()) {
        let b = rho * dot(y, &q);
        for (qi, si) in q.iter_mut().zip(s) {
            *qi += (a - b) * si;
        }
    }
    q.iter_mut().for_each(|v| *v = -*v);
    q
}
