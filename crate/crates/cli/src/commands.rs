//! Subcommand implementations.

use std::fmt::Write as _;
use std::path::PathBuf;

use num_complex::Complex64;
use pinnduct::format::{fmt_float, fmt_opt};
use pinnduct::media::{validity_check, ValidityReport};
use pinnduct::metrics::{
    gradient_histogram, last_hidden_layer, relative_error, ErrorReport, GradHistogram, HistogramAxis,
};
use pinnduct::network::io::encode;
use pinnduct::oracle::{nearest_resonance, Reference};
use pinnduct::physics::{DuctProblem, ProblemKind};
use pinnduct::trainer::{
    train_lagrange, train_pressure, train_velocity_transfer, LambdaMode, TrainReport, TrainingConfig,
};
use pinnduct::trial::{RawField, TrialField};
use pinnduct::Result;
use rayon::prelude::*;
use serde::Serialize;
use serde_json::{json, Value};
use sha2::{Digest, Sha256};

use crate::config::{file_tag, RunConfig};
use crate::output::OutputDir;

pub const VERSION: &str = env!("CARGO_PKG_VERSION");

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum SweepKind {
    Activation,
    Collocation,
    Bias,
}

impl SweepKind {
    pub fn name(self) -> &'static str {
        match self {
            SweepKind::Activation => "activation",
            SweepKind::Collocation => "collocation",
            SweepKind::Bias => "bias",
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Command {
    Check,
    Solve,
    Oracle,
    Sweep(SweepKind),
}

impl Command {
    pub fn name(self) -> String {
        match self {
            Command::Check => "check".into(),
            Command::Solve => "solve".into(),
            Command::Oracle => "oracle".into(),
            Command::Sweep(k) => format!("sweep {}", k.name()),
        }
    }
}

/// Command-line overrides.
#[derive(Debug, Clone, Default)]
pub struct Overrides {
    pub out: Option<PathBuf>,
    pub seed: Option<u64>,
}

/// 0 success, 2 configuration or validation error, 3 numerical failure.
pub fn exit_code(result: &Result<()>) -> i32 {
    match result {
        Ok(()) => 0,
        Err(e) if e.is_numerical() => 3,
        Err(_) => 2,
    }
}

/// SHA-256 of the canonical config. The output directory is left out: it
/// does not change what is computed.
pub fn config_hash(cfg: &RunConfig) -> String {
    let mut cfg = cfg.clone();
    cfg.output.dir = None;
    let digest = Sha256::digest(cfg.canonical_json().as_bytes());
    let mut hex = String::with_capacity(64);
    for b in digest {
        let _ = write!(hex, "{b:02x}");
    }
    hex
}

/// Applies overrides and validates.
pub fn prepare(mut cfg: RunConfig, overrides: &Overrides) -> Result<RunConfig> {
    if let Some(seed) = overrides.seed {
        cfg.training.seed = seed;
    }
    if let Some(out) = &overrides.out {
        cfg.output.dir = Some(out.clone());
    }
    cfg.validate()?;
    Ok(cfg)
}

/// Runs `command`, writing into the configured directory. Everything the
/// run wrote is removed again if it fails.
pub fn execute(command: Command, cfg: &RunConfig) -> Result<Vec<PathBuf>> {
    if command == Command::Check {
        return Ok(Vec::new());
    }
    let root = cfg.output.dir.clone().unwrap_or_else(|| PathBuf::from("out"));
    // compute everything first, then write
    let (files, results) = match command {
        Command::Solve => solve(cfg)?,
        Command::Oracle => oracle(cfg)?,
        Command::Sweep(kind) => sweep(cfg, kind)?,
        Command::Check => unreachable!(),
    };
    let report = json!({
        "tool": "pinnduct",
        "version": VERSION,
        "command": command.name(),
        "config_hash": config_hash(cfg),
        "config": serde_json::to_value(cfg).expect("config serializes"),
        "results": results,
    });
    let mut out = OutputDir::create(&root)?;
    let written = (|| {
        for (name, body) in &files {
            out.write(name, body)?;
        }
        let mut text = serde_json::to_string_pretty(&report).expect("report serializes");
        text.push('\n');
        out.write("report.json", text.as_bytes())?;
        Ok(out.written().to_vec())
    })();
    match written {
        Ok(w) => Ok(w),
        Err(e) => {
            out.discard();
            Err(e)
        }
    }
}

type Files = Vec<(String, Vec<u8>)>;

#[derive(Serialize)]
struct TrainingSummary {
    termination: &'static str,
    iterations: usize,
    evaluations: usize,
    initial_loss: f64,
    final_loss: f64,
    final_parts: Vec<f64>,
    grad_inf_norm: f64,
    wall_time_s: f64,
}

fn summary(r: &TrainReport) -> TrainingSummary {
    TrainingSummary {
        termination: r.termination.as_str(),
        iterations: r.iterations(),
        evaluations: r.evaluations,
        initial_loss: r.loss_history[0].loss,
        final_loss: r.final_loss(),
        final_parts: r.final_entry().parts.clone(),
        grad_inf_norm: r.final_grad_inf_norm(),
        wall_time_s: r.wall_time_s,
    }
}

fn validity(problem: &DuctProblem) -> Result<Option<ValidityReport>> {
    match (problem.kind, problem.visco_thermal()) {
        (ProblemKind::Narrow { radius, .. }, Some(state)) => Ok(Some(validity_check(
            &state?,
            problem.k(),
            radius,
            problem.geometry.length(),
        ))),
        _ => Ok(None),
    }
}

fn validity_warnings(report: &Option<ValidityReport>) -> Vec<String> {
    report
        .iter()
        .flat_map(|r| r.failures())
        .map(|c| format!("validity check {} fails: ratio {} against {}", c.name, fmt_float(c.ratio), fmt_float(c.threshold)))
        .collect()
}

/// One CSV row per test point; `None` columns are left empty.
fn field_csv(
    xs: &[f64],
    p_pred: Option<&dyn Fn(f64) -> Result<Complex64>>,
    p_true: &dyn Fn(f64) -> Result<Complex64>,
    velocity: Option<(Option<&dyn Fn(f64) -> Result<Complex64>>, &dyn Fn(f64) -> Option<Complex64>)>,
) -> Result<String> {
    let mut out = String::from("x,p_pred_re,p_pred_im,p_true_re,p_true_im");
    if velocity.is_some() {
        out.push_str(",u_pred_re,u_pred_im,u_true_re,u_true_im");
    }
    out.push('\n');
    let pair = |v: Option<Complex64>| format!("{},{}", fmt_opt(v.map(|c| c.re)), fmt_opt(v.map(|c| c.im)));
    for &x in xs {
        let pred = p_pred.map(|f| f(x)).transpose()?;
        let _ = write!(out, "{},{},{}", fmt_float(x), pair(pred), pair(Some(p_true(x)?)));
        if let Some((u_pred, u_true)) = velocity {
            let up = u_pred.map(|f| f(x)).transpose()?;
            let _ = write!(out, ",{},{}", pair(up), pair(u_true(x)));
        }
        out.push('\n');
    }
    Ok(out)
}

fn trial_value(field: &TrialField) -> impl Fn(f64) -> Result<Complex64> + '_ {
    move |x| field.value(x)
}

fn raw_value(field: &RawField) -> impl Fn(f64) -> Result<Complex64> + '_ {
    move |x| field.value(x)
}

fn reference_pressure(r: &Reference) -> impl Fn(f64) -> Result<Complex64> + '_ {
    move |x| r.pressure(x)
}

fn velocity_error(u: &RawField, reference: &Reference, cfg: &RunConfig, problem: &DuctProblem) -> Result<Option<ErrorReport>> {
    if reference.velocity(problem.geometry.x1).is_none() {
        return Ok(None);
    }
    relative_error(
        raw_value(u),
        |x| Ok(reference.velocity(x).expect("closed form")),
        &problem.geometry,
        cfg.output.test_points,
    )
    .map(Some)
}

fn per_frequency<T: Send>(cfg: &RunConfig, job: impl Fn(f64) -> Result<T> + Sync) -> Result<Vec<T>> {
    cfg.problem.frequencies.par_iter().map(|&f| job(f)).collect()
}

fn solve(cfg: &RunConfig) -> Result<(Files, Value)> {
    let outcomes = per_frequency(cfg, |f| {
        let problem = cfg.problem(f)?;
        let reference = Reference::for_problem(&problem, cfg.output.webster_grid)?;
        let valid = validity(&problem)?;
        let (field, report) = train_pressure(&problem, &cfg.training)?;
        let delta_p = relative_error(trial_value(&field), reference_pressure(&reference), &problem.geometry, cfg.output.test_points)?;
        let tag = file_tag(f);
        let mut files: Files = vec![(format!("loss_{tag}.csv"), report.history_csv().into_bytes())];
        let mut warnings = report.warnings.clone();
        warnings.extend(validity_warnings(&valid));
        let xs = problem.geometry.linspace(cfg.output.test_points);
        let pred = trial_value(&field);
        let truth = reference_pressure(&reference);
        let u_true = |x: f64| reference.velocity(x);
        let (csv, delta_u, vel_summary) = if cfg.output.velocity {
            let (u, vrep) = train_velocity_transfer(&field, &problem, &cfg.training)?;
            files.push((format!("loss_velocity_{tag}.csv"), vrep.history_csv().into_bytes()));
            let u_pred = raw_value(&u);
            let csv = field_csv(&xs, Some(&pred), &truth, Some((Some(&u_pred), &u_true)))?;
            if cfg.output.save_params {
                files.push((format!("params_velocity_{tag}.pdnp"), encode(&u.net)));
            }
            (csv, velocity_error(&u, &reference, cfg, &problem)?, Some(summary(&vrep)))
        } else {
            (field_csv(&xs, Some(&pred), &truth, None)?, None, None)
        };
        files.insert(0, (format!("field_{tag}.csv"), csv.into_bytes()));
        if cfg.output.save_params {
            files.push((format!("params_{tag}.pdnp"), encode(&field.net)));
        }
        let entry = json!({
            "frequency": f,
            "wavenumber": problem.k(),
            "kind": problem.kind.name(),
            "delta_p": delta_p,
            "delta_u": delta_u,
            "training": summary(&report),
            "velocity_training": vel_summary,
            "warnings": warnings,
            "validity": valid,
            "files": files.iter().map(|(n, _)| n.clone()).collect::<Vec<_>>(),
        });
        Ok((files, entry))
    })?;
    Ok(collect(outcomes))
}

fn collect(outcomes: Vec<(Files, Value)>) -> (Files, Value) {
    let mut files = Vec::new();
    let mut entries = Vec::new();
    for (f, e) in outcomes {
        files.extend(f);
        entries.push(e);
    }
    (files, Value::Array(entries))
}

fn oracle(cfg: &RunConfig) -> Result<(Files, Value)> {
    let outcomes = per_frequency(cfg, |f| {
        let problem = cfg.problem(f)?;
        let reference = Reference::for_problem(&problem, cfg.output.webster_grid)?;
        let valid = validity(&problem)?;
        let xs = problem.geometry.linspace(cfg.output.test_points);
        let truth = reference_pressure(&reference);
        let u_true = |x: f64| reference.velocity(x);
        let velocity = cfg.output.velocity.then_some((None, &u_true as &dyn Fn(f64) -> Option<Complex64>));
        let csv = field_csv(&xs, None, &truth, velocity)?;
        let name = format!("field_{}.csv", file_tag(f));
        let c = match problem.kind {
            ProblemKind::Meanflow { mach } => problem.medium.c * (1.0 - mach * mach),
            _ => problem.medium.c,
        };
        let entry = json!({
            "frequency": f,
            "wavenumber": problem.k(),
            "kind": problem.kind.name(),
            "nearest_resonance": nearest_resonance(&problem.geometry, c, f),
            "warnings": validity_warnings(&valid),
            "validity": valid,
            "files": [name.clone()],
        });
        Ok((vec![(name, csv.into_bytes())], entry))
    })?;
    Ok(collect(outcomes))
}

fn sweep(cfg: &RunConfig, kind: SweepKind) -> Result<(Files, Value)> {
    match kind {
        SweepKind::Activation => activation_sweep(cfg),
        SweepKind::Collocation => collocation_sweep(cfg),
        SweepKind::Bias => bias_sweep(cfg),
    }
}

/// Trains the pressure of `problem` and returns the field with its error.
fn train_and_score(cfg: &RunConfig, training: &TrainingConfig, f: f64) -> Result<(TrainReport, ErrorReport)> {
    let problem = cfg.problem(f)?;
    let reference = Reference::for_problem(&problem, cfg.output.webster_grid)?;
    let (field, report) = train_pressure(&problem, training)?;
    let delta = relative_error(trial_value(&field), reference_pressure(&reference), &problem.geometry, cfg.output.test_points)?;
    Ok((report, delta))
}

fn activation_sweep(cfg: &RunConfig) -> Result<(Files, Value)> {
    let mut jobs = Vec::new();
    for &act in &cfg.sweep.activations {
        for &f in &cfg.problem.frequencies {
            jobs.push((act, f));
        }
    }
    let runs: Vec<_> = jobs
        .par_iter()
        .map(|&(act, f)| {
            let training = TrainingConfig {
                activation: act,
                ..cfg.training.clone()
            };
            train_and_score(cfg, &training, f).map(|r| (act, f, r))
        })
        .collect::<Result<_>>()?;
    let mut table = String::from("activation,frequency,delta_p,final_loss,iterations,termination\n");
    let mut files = Vec::new();
    let mut entries = Vec::new();
    for (act, f, (report, delta)) in runs {
        let name = format!("loss_{act}_{}.csv", file_tag(f));
        let _ = writeln!(
            table,
            "{act},{},{},{},{},{}",
            fmt_float(f),
            fmt_float(delta.delta),
            fmt_float(report.final_loss()),
            report.iterations(),
            report.termination.as_str()
        );
        files.push((name.clone(), report.history_csv().into_bytes()));
        entries.push(json!({
            "activation": act, "frequency": f, "delta_p": delta,
            "training": summary(&report), "warnings": report.warnings, "files": [name],
        }));
    }
    files.push(("activation_sweep.csv".into(), table.into_bytes()));
    Ok((files, Value::Array(entries)))
}

fn collocation_sweep(cfg: &RunConfig) -> Result<(Files, Value)> {
    let mut jobs = Vec::new();
    for &n in &cfg.sweep.collocation_points {
        for &f in &cfg.problem.frequencies {
            jobs.push((n, f));
        }
    }
    let runs: Vec<_> = jobs
        .par_iter()
        .map(|&(n, f)| {
            let training = TrainingConfig {
                collocation_points: n,
                ..cfg.training.clone()
            };
            train_and_score(cfg, &training, f).map(|r| (n, f, r))
        })
        .collect::<Result<_>>()?;
    let mut table = String::from("collocation_points,frequency,delta_p,final_loss,iterations,termination\n");
    let mut files = Vec::new();
    let mut entries = Vec::new();
    for (n, f, (report, delta)) in runs {
        let name = format!("loss_n{n}_{}.csv", file_tag(f));
        let _ = writeln!(
            table,
            "{n},{},{},{},{},{}",
            fmt_float(f),
            fmt_float(delta.delta),
            fmt_float(report.final_loss()),
            report.iterations(),
            report.termination.as_str()
        );
        files.push((name.clone(), report.history_csv().into_bytes()));
        entries.push(json!({
            "collocation_points": n, "frequency": f, "delta_p": delta,
            "training": summary(&report), "warnings": report.warnings, "files": [name],
        }));
    }
    files.push(("collocation_sweep.csv".into(), table.into_bytes()));
    Ok((files, Value::Array(entries)))
}

fn mode_label(mode: &LambdaMode) -> String {
    match mode {
        LambdaMode::Fixed { lambda } => format!("fixed{}", fmt_float(*lambda)),
        LambdaMode::Adaptive { .. } => "adaptive".into(),
    }
}

fn histogram_csv(hists: &[GradHistogram]) -> String {
    let mut out = String::from("term,lower,upper,count\n");
    for h in hists {
        for (i, c) in h.counts.iter().enumerate() {
            let _ = writeln!(out, "{},{},{},{c}", h.label, fmt_float(h.edges[i]), fmt_float(h.edges[i + 1]));
        }
    }
    out
}

fn bias_sweep(cfg: &RunConfig) -> Result<(Files, Value)> {
    let mut files = Vec::new();
    let mut entries = Vec::new();
    let mut table = String::from("method,frequency,delta_p,final_L_d,final_L_b,vanished_d,vanished_b\n");
    let axis = HistogramAxis::default();
    for &f in &cfg.problem.frequencies {
        let problem = cfg.problem(f)?;
        let reference = Reference::for_problem(&problem, cfg.output.webster_grid)?;
        let tag = file_tag(f);
        let (field, report) = train_pressure(&problem, &cfg.training)?;
        let delta = relative_error(trial_value(&field), reference_pressure(&reference), &problem.geometry, cfg.output.test_points)?;
        let name = format!("bias_trial_{tag}.csv");
        let _ = writeln!(
            table,
            "trial,{},{},{},0,,",
            fmt_float(f),
            fmt_float(delta.delta),
            fmt_float(report.final_loss())
        );
        files.push((name.clone(), report.history_csv().into_bytes()));
        entries.push(json!({
            "method": "trial", "frequency": f, "delta_p": delta,
            "training": summary(&report), "files": [name],
        }));
        let runs: Vec<_> = cfg
            .sweep
            .lambda_modes
            .par_iter()
            .map(|mode| train_lagrange(&problem, &cfg.training, *mode).map(|o| (*mode, o)))
            .collect::<Result<_>>()?;
        for (mode, outcome) in runs {
            let label = mode_label(&mode);
            let arch = &outcome.field.net.arch;
            let layer = last_hidden_layer(arch);
            let hd = gradient_histogram("L_d", arch, &outcome.domain_gradient, layer, &axis)?;
            let hb = gradient_histogram("L_b", arch, &outcome.boundary_gradient, layer, &axis)?;
            let delta = relative_error(
                raw_value(&outcome.field),
                reference_pressure(&reference),
                &problem.geometry,
                cfg.output.test_points,
            )?;
            let (ld, lb) = outcome.split(&outcome.report.final_entry().parts);
            let _ = writeln!(
                table,
                "{label},{},{},{},{},{},{}",
                fmt_float(f),
                fmt_float(delta.delta),
                fmt_float(ld),
                fmt_float(lb),
                fmt_float(hd.vanished_fraction),
                fmt_float(hb.vanished_fraction)
            );
            let loss_name = format!("bias_{label}_{tag}.csv");
            let hist_name = format!("histogram_{label}_{tag}.csv");
            files.push((loss_name.clone(), outcome.history_csv().into_bytes()));
            files.push((hist_name.clone(), histogram_csv(&[hd.clone(), hb.clone()]).into_bytes()));
            entries.push(json!({
                "method": label, "frequency": f, "delta_p": delta, "mode": mode,
                "final_L_d": ld, "final_L_b": lb,
                "lambda_trace": outcome.lambda_trace,
                "vanished_fraction": {"L_d": hd.vanished_fraction, "L_b": hb.vanished_fraction},
                "training": summary(&outcome.report), "files": [loss_name, hist_name],
            }));
        }
    }
    files.push(("bias_sweep.csv".into(), table.into_bytes()));
    Ok((files, Value::Array(entries)))
}
