//! Derivative machinery: spatial jets for residuals and exact parameter
//! gradients for training.

pub mod jet;
pub mod tape;

pub use jet::{jet_activation, jet_compose, Activation, Jet2, JetOp, Scalar};
pub use tape::{Tape, Var};

use crate::error::{Error, Result};

/// Gradient of a scalar loss with respect to the flattened parameter vector.
#[derive(Debug, Clone, PartialEq)]
pub struct ParamGradient(pub Vec<f64>);

impl ParamGradient {
    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }

    pub fn as_slice(&self) -> &[f64] {
        &self.0
    }

    pub fn inf_norm(&self) -> f64 {
        inf_norm(&self.0)
    }
}

pub fn inf_norm(v: &[f64]) -> f64 {
    v.iter().fold(0.0f64, |m, x| m.max(x.abs()))
}

/// Loss value, optional per-part breakdown, and exact gradient at one point.
#[derive(Debug, Clone)]
pub struct Evaluation {
    pub loss: f64,
    /// Per-part losses (real/imaginary rows, or domain/boundary terms);
    /// empty when the objective has no breakdown.
    pub parts: Vec<f64>,
    pub gradient: Vec<f64>,
}

/// A differentiable scalar function of a flat parameter vector.
pub trait Objective {
    fn dimension(&self) -> usize;

    fn evaluate(&self, params: &[f64]) -> Result<Evaluation>;

    fn value(&self, params: &[f64]) -> Result<f64> {
        Ok(self.evaluate(params)?.loss)
    }
}

fn check_loss(loss: f64, params: &[f64]) -> Result<()> {
    if loss.is_finite() {
        return Ok(());
    }
    Err(Error::NumericalFailure {
        context: format!("loss evaluated to {loss}"),
        param_index: params.iter().position(|p| !p.is_finite()),
    })
}

/// Exact gradient of an arbitrary loss written over tape variables.
pub fn loss_gradient<F>(params: &[f64], loss: F) -> Result<(f64, ParamGradient)>
where
    F: for<'t> Fn(&[Var<'t>]) -> Var<'t>,
{
    let tape = Tape::new();
    let vars: Vec<Var<'_>> = params.iter().map(|&p| tape.var(p)).collect();
    let out = loss(&vars);
    let value = out.value();
    check_loss(value, params)?;
    let adj = tape.gradient(out);
    let grad = vars.iter().map(|v| adj[v.index()]).collect();
    Ok((value, ParamGradient(grad)))
}

/// [`Objective`] adapter for a tape-expressed loss.
pub struct TapeObjective<F> {
    dimension: usize,
    loss: F,
}

impl<F> TapeObjective<F>
where
    F: for<'t> Fn(&[Var<'t>]) -> Var<'t>,
{
    pub fn new(dimension: usize, loss: F) -> Self {
        Self { dimension, loss }
    }
}

impl<F> Objective for TapeObjective<F>
where
    F: for<'t> Fn(&[Var<'t>]) -> Var<'t>,
{
    fn dimension(&self) -> usize {
        self.dimension
    }

    fn evaluate(&self, params: &[f64]) -> Result<Evaluation> {
        let (loss, grad) = loss_gradient(params, &self.loss)?;
        Ok(Evaluation {
            loss,
            parts: Vec::new(),
            gradient: grad.0,
        })
    }
}

/// Below this magnitude a gradient component is compared absolutely.
const FD_FLOOR: f64 = 1e-6;

/// Largest relative deviation between the objective's gradient and a
/// Richardson-extrapolated central difference with steps `h` and `h/2`:
/// `max_i |g_i - fd_i| / (|g_i| + 1e-6)`. The extrapolation is fourth order,
/// so `h` can be large enough to keep rounding noise (about `eps·|L|/h`)
/// small on large losses.
pub fn fd_check<O: Objective + ?Sized>(objective: &O, params: &[f64], h: f64) -> Result<f64> {
    if !(h > 0.0) {
        return Err(Error::config(format!("finite-difference step must be positive, got {h}")));
    }
    let analytic = objective.evaluate(params)?.gradient;
    let mut probe = params.to_vec();
    let mut central = |i: usize, step: f64| -> Result<f64> {
        let orig = probe[i];
        probe[i] = orig + step;
        let fp = objective.value(&probe)?;
        probe[i] = orig - step;
        let fm = objective.value(&probe)?;
        probe[i] = orig;
        Ok((fp - fm) / (2.0 * step))
    };
    let mut worst = 0.0f64;
    for (i, &g) in analytic.iter().enumerate() {
        let fd = (4.0 * central(i, 0.5 * h)? - central(i, h)?) / 3.0;
        worst = worst.max((g - fd).abs() / (g.abs() + FD_FLOOR));
    }
    Ok(worst)
}
