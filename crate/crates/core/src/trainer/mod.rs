//! Collocation sampling, L-BFGS and the training pipelines.

mod lbfgs;

use std::fmt::Write as _;
use std::time::Instant;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

pub use lbfgs::{lbfgs_minimize, HistoryEntry, LbfgsConfig, LbfgsResult, Termination};

use crate::autodiff::Activation;
use crate::error::{Error, Result};
use crate::format::{fmt_float, fmt_opt};
use crate::network::{Architecture, NetworkParams};
use crate::oracle::nearest_resonance;
use crate::physics::{lambda_estimate, lambda_update, DuctProblem, PinnObjective, ProblemKind};
use crate::trial::{DuctGeometry, JetField, RawField, TrialField};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Sampling {
    Equispaced,
    UniformRandom,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct TrainingConfig {
    /// Interior collocation points.
    pub collocation_points: usize,
    /// Boundary points; satisfied exactly by the trial form, used as the
    /// penalty normalization in the Lagrange baseline.
    pub boundary_points: usize,
    pub iterations: usize,
    /// Gradient ∞-norm threshold.
    pub tolerance: f64,
    pub history_size: usize,
    pub seed: u64,
    pub sampling: Sampling,
    pub activation: Activation,
    pub hidden_layers: usize,
    pub width: usize,
}

impl Default for TrainingConfig {
    fn default() -> Self {
        Self {
            collocation_points: 14000,
            boundary_points: 2,
            iterations: 14000,
            tolerance: 1e-3,
            history_size: 20,
            seed: 0,
            sampling: Sampling::Equispaced,
            activation: Activation::Sin,
            hidden_layers: 6,
            width: 90,
        }
    }
}

impl TrainingConfig {
    /// Reduced scale: five hidden layers of 64, 2000 points, 3000 iterations.
    pub fn desk() -> Self {
        Self {
            collocation_points: 2000,
            iterations: 3000,
            hidden_layers: 5,
            width: 64,
            ..Self::default()
        }
    }

    pub fn validate(&self) -> Result<()> {
        if self.collocation_points < 2 {
            return Err(Error::config(format!(
                "need at least 2 collocation points, got {}",
                self.collocation_points
            )));
        }
        if self.boundary_points != 2 {
            return Err(Error::config(format!(
                "a one-dimensional duct has 2 boundary points, got {}",
                self.boundary_points
            )));
        }
        if self.iterations == 0 || self.history_size == 0 {
            return Err(Error::config("iterations and history size must be at least 1"));
        }
        if !(self.tolerance >= 0.0 && self.tolerance.is_finite()) {
            return Err(Error::config(format!("tolerance must be finite and non-negative, got {}", self.tolerance)));
        }
        self.architecture(1).map(drop)
    }

    pub fn architecture(&self, outputs: usize) -> Result<Architecture> {
        Architecture::new(self.hidden_layers, self.width, outputs, self.activation)
    }

    pub fn lbfgs(&self) -> LbfgsConfig {
        LbfgsConfig {
            max_iterations: self.iterations,
            tolerance: self.tolerance,
            history_size: self.history_size,
            ..LbfgsConfig::default()
        }
    }
}

/// Interior points of the duct. Equispaced points are `x1 + L·i/(N+1)`.
pub fn sample_collocation(geometry: &DuctGeometry, n: usize, mode: Sampling, seed: u64) -> Result<Vec<f64>> {
    geometry.validate()?;
    if n < 2 {
        return Err(Error::config(format!("need at least 2 collocation points, got {n}")));
    }
    let (x1, x2) = (geometry.x1, geometry.x2);
    Ok(match mode {
        Sampling::Equispaced => (1..=n)
            .map(|i| x1 + geometry.length() * i as f64 / (n + 1) as f64)
            .collect(),
        Sampling::UniformRandom => {
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            let mut out = Vec::with_capacity(n);
            while out.len() < n {
                let x = rng.random_range(x1..x2);
                if x > x1 {
                    out.push(x);
                }
            }
            out
        }
    })
}

#[derive(Debug, Clone, Serialize)]
pub struct TrainReport {
    pub loss_history: Vec<HistoryEntry>,
    #[serde(skip)]
    pub params: Vec<f64>,
    pub wall_time_s: f64,
    pub termination: Termination,
    pub evaluations: usize,
    pub warnings: Vec<String>,
}

impl TrainReport {
    pub fn final_entry(&self) -> &HistoryEntry {
        self.loss_history.last().expect("history holds the starting point")
    }

    pub fn final_loss(&self) -> f64 {
        self.final_entry().loss
    }

    pub fn final_grad_inf_norm(&self) -> f64 {
        self.final_entry().grad_inf_norm
    }

    pub fn iterations(&self) -> usize {
        self.final_entry().iteration
    }

    /// `iter,loss_total,loss_R,loss_I,grad_inf_norm`, `loss_I` empty for a
    /// single part.
    pub fn history_csv(&self) -> String {
        history_csv(&self.loss_history, &["loss_R", "loss_I"], |p| {
            vec![p.first().copied(), p.get(1).copied()]
        })
    }
}

/// Loss history as CSV with caller-chosen part columns.
pub fn history_csv(history: &[HistoryEntry], columns: &[&str], split: impl Fn(&[f64]) -> Vec<Option<f64>>) -> String {
    let mut out = String::from("iter,loss_total");
    for c in columns {
        out.push(',');
        out.push_str(c);
    }
    out.push_str(",grad_inf_norm\n");
    for h in history {
        let _ = write!(out, "{},{}", h.iteration, fmt_float(h.loss));
        for v in split(&h.parts) {
            out.push(',');
            out.push_str(&fmt_opt(v));
        }
        let _ = writeln!(out, ",{}", fmt_float(h.grad_inf_norm));
    }
    out
}

/// Warning text when `problem.frequency` lies within 1% of a duct resonance.
pub fn resonance_warning(problem: &DuctProblem) -> Option<String> {
    let c = match problem.kind {
        ProblemKind::Meanflow { mach } => problem.medium.c * (1.0 - mach * mach),
        _ => problem.medium.c,
    };
    let f = problem.frequency;
    let fn_ = nearest_resonance(&problem.geometry, c, f);
    ((f - fn_).abs() < 0.01 * fn_)
        .then(|| format!("frequency {f} Hz lies within 1% of the resonance at {fn_} Hz"))
}

fn run(objective: &PinnObjective, theta0: &[f64], config: &TrainingConfig, warnings: Vec<String>) -> Result<TrainReport> {
    let start = Instant::now();
    let result = lbfgs_minimize(objective, theta0, &config.lbfgs())?;
    Ok(TrainReport {
        loss_history: result.history,
        params: result.params,
        wall_time_s: start.elapsed().as_secs_f64(),
        termination: result.termination,
        evaluations: result.evaluations,
        warnings,
    })
}

/// Trains the trial-wrapped pressure field from a seeded initialization.
pub fn train_pressure(problem: &DuctProblem, config: &TrainingConfig) -> Result<(TrialField, TrainReport)> {
    config.validate()?;
    let arch = config.architecture(problem.parts().count())?;
    let init = NetworkParams::init(&arch, config.seed)?;
    train_pressure_with_init(problem, config, init)
}

/// Same as [`train_pressure`] from given starting parameters.
pub fn train_pressure_with_init(
    problem: &DuctProblem,
    config: &TrainingConfig,
    init: NetworkParams,
) -> Result<(TrialField, TrainReport)> {
    config.validate()?;
    problem.validate()?;
    let arch = config.architecture(problem.parts().count())?;
    if init.arch != arch {
        return Err(Error::config("initial parameters do not match the configured architecture"));
    }
    let xs = sample_collocation(&problem.geometry, config.collocation_points, config.sampling, config.seed)?;
    let objective = PinnObjective::pressure(problem, arch.clone(), xs)?;
    let warnings = resonance_warning(problem).into_iter().collect();
    let report = run(&objective, init.as_slice(), config, warnings)?;
    let net = NetworkParams::unflatten(report.params.clone(), &arch)?.with_seed(init.seed);
    let field = TrialField::new(net, problem.geometry, problem.bc, problem.parts())?;
    Ok((field, report))
}

/// Trains a fresh two-output network for the particle velocity against a
/// frozen pressure field. The network predicts `ρc·u`; the returned field
/// rescales by `1/ρc`. Loss values in the report are in the scaled units.
pub fn train_velocity_transfer(
    pressure: &impl JetField,
    problem: &DuctProblem,
    config: &TrainingConfig,
) -> Result<(RawField, TrainReport)> {
    config.validate()?;
    problem.validate()?;
    let arch = config.architecture(2)?;
    let xs = sample_collocation(&problem.geometry, config.collocation_points, config.sampling, config.seed)?;
    let objective = PinnObjective::velocity(problem, pressure, arch.clone(), xs)?;
    let init = NetworkParams::init(&arch, config.seed)?;
    let report = run(&objective, init.as_slice(), config, Vec::new())?;
    let net = NetworkParams::unflatten(report.params.clone(), &arch)?.with_seed(Some(config.seed));
    Ok((RawField::new(net, 1.0 / problem.medium.impedance()), report))
}

/// Boundary weighting for the untrialed baseline.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "mode", rename_all = "snake_case", deny_unknown_fields)]
pub enum LambdaMode {
    Fixed { lambda: f64 },
    /// `λ ← α·λ + (1-α)·max|∇L_d| / mean|∇L_bj|` every `interval`
    /// iterations, starting from 1. The optimizer restarts after each update.
    Adaptive { alpha: f64, interval: usize },
}

#[derive(Debug, Clone)]
pub struct LagrangeOutcome {
    pub field: RawField,
    pub report: TrainReport,
    /// Weights in force for each segment.
    pub lambda_trace: Vec<[f64; 2]>,
    /// Unweighted domain-loss gradient at the final parameters.
    pub domain_gradient: Vec<f64>,
    /// Unweighted gradient of `L_b1 + L_b2` at the final parameters.
    pub boundary_gradient: Vec<f64>,
}

impl LagrangeOutcome {
    /// `(L_d, L_b)` of a history entry, `L_b` unweighted.
    pub fn split(&self, parts: &[f64]) -> (f64, f64) {
        let rows = self.field.net.arch.outputs();
        (parts[..rows].iter().sum(), parts[rows..].iter().sum())
    }

    /// `iter,loss_total,L_d,L_b,grad_inf_norm`.
    pub fn history_csv(&self) -> String {
        history_csv(&self.report.loss_history, &["L_d", "L_b"], |p| {
            let (d, b) = self.split(p);
            vec![Some(d), Some(b)]
        })
    }
}

/// Trains an untrialed pressure network with boundary penalties.
pub fn train_lagrange(problem: &DuctProblem, config: &TrainingConfig, mode: LambdaMode) -> Result<LagrangeOutcome> {
    config.validate()?;
    problem.validate()?;
    let arch = config.architecture(problem.parts().count())?;
    let xs = sample_collocation(&problem.geometry, config.collocation_points, config.sampling, config.seed)?;
    let (mut lambda, alpha, interval) = match mode {
        LambdaMode::Fixed { lambda } => {
            if !(lambda > 0.0 && lambda.is_finite()) {
                return Err(Error::config(format!("boundary weight must be positive, got {lambda}")));
            }
            ([lambda; 2], 1.0, config.iterations)
        }
        LambdaMode::Adaptive { alpha, interval } => {
            if interval == 0 {
                return Err(Error::config("update interval must be at least 1"));
            }
            lambda_update(1.0, 1.0, alpha)?;
            ([1.0; 2], alpha, interval)
        }
    };
    let mut objective = PinnObjective::lagrange(problem, arch.clone(), xs, lambda)?;
    let warnings: Vec<String> = resonance_warning(problem).into_iter().collect();
    let start = Instant::now();
    let mut params = NetworkParams::init(&arch, config.seed)?.as_slice().to_vec();
    let mut history: Vec<HistoryEntry> = Vec::new();
    let mut evaluations = 0;
    let mut trace = Vec::new();
    let mut termination = Termination::MaxIterations;
    let mut done = 0;
    while done < config.iterations {
        trace.push(lambda);
        let budget = interval.min(config.iterations - done);
        let segment = LbfgsConfig {
            max_iterations: budget,
            ..config.lbfgs()
        };
        let result = lbfgs_minimize(&objective, &params, &segment)?;
        evaluations += result.evaluations;
        let skip = usize::from(!history.is_empty());
        history.extend(result.history.into_iter().skip(skip).map(|mut h| {
            h.iteration += done;
            h
        }));
        done = history.last().unwrap().iteration;
        params = result.params;
        termination = result.termination;
        if termination != Termination::MaxIterations || matches!(mode, LambdaMode::Fixed { .. }) {
            break;
        }
        if done < config.iterations {
            let terms = objective.evaluate_terms(&params)?;
            for j in 0..2 {
                let hat = lambda_estimate(&terms[0].gradient, &terms[j + 1].gradient);
                lambda[j] = lambda_update(lambda[j], hat, alpha)?;
                objective.set_weight(j + 1, lambda[j]);
            }
        }
    }
    let terms = objective.evaluate_terms(&params)?;
    let boundary_gradient = terms[1].gradient.iter().zip(&terms[2].gradient).map(|(a, b)| a + b).collect();
    let net = NetworkParams::unflatten(params.clone(), &arch)?.with_seed(Some(config.seed));
    Ok(LagrangeOutcome {
        field: RawField::new(net, 1.0),
        report: TrainReport {
            loss_history: history,
            params,
            wall_time_s: start.elapsed().as_secs_f64(),
            termination,
            evaluations,
            warnings,
        },
        lambda_trace: trace,
        domain_gradient: terms[0].gradient.clone(),
        boundary_gradient,
    })
}
