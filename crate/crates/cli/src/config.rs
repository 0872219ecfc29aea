//! Run configuration documents.

use std::path::{Path, PathBuf};

use num_complex::Complex64;
use pinnduct::media::{air_ntp, MediumProperties, PhiConvention};
use pinnduct::physics::{AreaProfile, DuctProblem, ProblemKind};
use pinnduct::trainer::{LambdaMode, TrainingConfig};
use pinnduct::autodiff::Activation;
use pinnduct::trial::{BoundaryConditions, DuctGeometry};
use pinnduct::{Error, Result};
use serde::{Deserialize, Serialize};

/// JSON Schema for [`RunConfig`], shipped with the crate.
pub const SCHEMA: &str = include_str!("../schema/run_config.schema.json");

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RunConfig {
    pub problem: ProblemSpec,
    #[serde(default)]
    pub training: TrainingConfig,
    #[serde(default)]
    pub output: OutputSpec,
    #[serde(default)]
    pub sweep: SweepSpec,
}

/// A real number or a `[re, im]` pair.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum Value {
    Real(f64),
    Complex([f64; 2]),
}

impl Value {
    pub fn complex(self) -> Complex64 {
        match self {
            Value::Real(v) => Complex64::new(v, 0.0),
            Value::Complex([re, im]) => Complex64::new(re, im),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "type", rename_all = "snake_case", deny_unknown_fields)]
pub enum KindSpec {
    Uniform {},
    /// Rectangular section whose half-height and half-width vary linearly
    /// from `(h1, w1)` at `x1` to `(h2, w2)` at `x2`.
    Webster { h1: f64, w1: f64, h2: f64, w2: f64 },
    Narrow {
        radius: f64,
        #[serde(default)]
        convention: PhiConvention,
    },
    Meanflow { mach: f64 },
}

#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct MediumOverrides {
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub rho: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub mu: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub cp: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub thermal_conductivity: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub gamma: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub c: Option<f64>,
}

impl MediumOverrides {
    pub fn apply(&self, mut m: MediumProperties) -> MediumProperties {
        let set = |field: &mut f64, v: Option<f64>| {
            if let Some(v) = v {
                *field = v;
            }
        };
        set(&mut m.rho, self.rho);
        set(&mut m.mu, self.mu);
        set(&mut m.cp, self.cp);
        set(&mut m.thermal_conductivity, self.thermal_conductivity);
        set(&mut m.gamma, self.gamma);
        set(&mut m.c, self.c);
        m
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ProblemSpec {
    pub kind: KindSpec,
    pub x1: f64,
    pub x2: f64,
    pub p1: Value,
    pub p2: Value,
    /// Hz.
    pub frequencies: Vec<f64>,
    #[serde(default)]
    pub medium: MediumOverrides,
}

fn default_test_points() -> usize {
    pinnduct::metrics::DEFAULT_TEST_POINTS
}

fn default_grid() -> usize {
    pinnduct::oracle::DEFAULT_WEBSTER_GRID
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct OutputSpec {
    /// Output directory; `--out` takes precedence.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub dir: Option<PathBuf>,
    #[serde(default = "default_test_points")]
    pub test_points: usize,
    /// Also train the particle velocity against the trained pressure.
    #[serde(default)]
    pub velocity: bool,
    /// Write trained parameters as `params_<f>.pdnp`.
    #[serde(default)]
    pub save_params: bool,
    /// Intervals of the numerical reference for varying-area ducts.
    #[serde(default = "default_grid")]
    pub webster_grid: usize,
}

impl Default for OutputSpec {
    fn default() -> Self {
        Self {
            dir: None,
            test_points: default_test_points(),
            velocity: false,
            save_params: false,
            webster_grid: default_grid(),
        }
    }
}

fn default_activations() -> Vec<Activation> {
    Activation::HIDDEN.to_vec()
}

fn default_collocation() -> Vec<usize> {
    vec![500, 8000]
}

fn default_lambda_modes() -> Vec<LambdaMode> {
    vec![
        LambdaMode::Fixed { lambda: 1.0 },
        LambdaMode::Adaptive {
            alpha: 0.9,
            interval: 100,
        },
    ]
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SweepSpec {
    #[serde(default = "default_activations")]
    pub activations: Vec<Activation>,
    #[serde(default = "default_collocation")]
    pub collocation_points: Vec<usize>,
    #[serde(default = "default_lambda_modes")]
    pub lambda_modes: Vec<LambdaMode>,
}

impl Default for SweepSpec {
    fn default() -> Self {
        Self {
            activations: default_activations(),
            collocation_points: default_collocation(),
            lambda_modes: default_lambda_modes(),
        }
    }
}

impl RunConfig {
    pub fn from_json(text: &str) -> Result<Self> {
        let cfg: RunConfig = serde_json::from_str(text).map_err(|e| Error::Load {
            field: "config".into(),
            reason: e.to_string(),
        })?;
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path).map_err(|source| Error::Io {
            path: path.to_path_buf(),
            source,
        })?;
        Self::from_json(&text)
    }

    pub fn geometry(&self) -> Result<DuctGeometry> {
        DuctGeometry::new(self.problem.x1, self.problem.x2)
    }

    pub fn medium(&self) -> MediumProperties {
        self.problem.medium.apply(air_ntp())
    }

    pub fn kind(&self) -> Result<ProblemKind> {
        Ok(match self.problem.kind {
            KindSpec::Uniform {} => ProblemKind::Uniform,
            KindSpec::Webster { h1, w1, h2, w2 } => ProblemKind::Webster {
                area: AreaProfile::from_dimensions(h1, w1, h2, w2, &self.geometry()?)?,
            },
            KindSpec::Narrow { radius, convention } => ProblemKind::Narrow { radius, convention },
            KindSpec::Meanflow { mach } => ProblemKind::Meanflow { mach },
        })
    }

    pub fn problem(&self, frequency: f64) -> Result<DuctProblem> {
        let bc = BoundaryConditions {
            p1: self.problem.p1.complex(),
            p2: self.problem.p2.complex(),
        };
        DuctProblem::new(self.kind()?, self.geometry()?, bc, frequency, self.medium())
    }

    /// Checks everything that can be checked without computing.
    pub fn validate(&self) -> Result<()> {
        if self.problem.frequencies.is_empty() {
            return Err(Error::config("frequency list is empty"));
        }
        let mut seen = Vec::new();
        for &f in &self.problem.frequencies {
            self.problem(f)?;
            let name = file_tag(f);
            if seen.contains(&name) {
                return Err(Error::config(format!("frequency {f} listed twice")));
            }
            seen.push(name);
        }
        self.training.validate()?;
        if self.output.test_points < 2 {
            return Err(Error::config("need at least 2 test points"));
        }
        if self.output.webster_grid < pinnduct::oracle::MIN_GRID {
            return Err(Error::config(format!(
                "reference grid needs at least {} intervals",
                pinnduct::oracle::MIN_GRID
            )));
        }
        if self.sweep.activations.iter().any(|a| *a == Activation::Identity) {
            return Err(Error::config("identity is not a hidden-layer activation"));
        }
        if self.sweep.activations.is_empty() || self.sweep.collocation_points.is_empty() || self.sweep.lambda_modes.is_empty() {
            return Err(Error::config("sweep lists must not be empty"));
        }
        if let Some(n) = self.sweep.collocation_points.iter().find(|&&n| n < 2) {
            return Err(Error::config(format!("collocation count {n} is below 2")));
        }
        for mode in &self.sweep.lambda_modes {
            match *mode {
                LambdaMode::Fixed { lambda } if !(lambda > 0.0 && lambda.is_finite()) => {
                    return Err(Error::config(format!("boundary weight must be positive, got {lambda}")))
                }
                LambdaMode::Adaptive { alpha, interval } if !(0.0..=1.0).contains(&alpha) || interval == 0 => {
                    return Err(Error::config("adaptive weighting needs alpha in [0, 1] and a positive interval"))
                }
                _ => {}
            }
        }
        Ok(())
    }

    /// Canonical serialization used for hashing and echoing.
    pub fn canonical_json(&self) -> String {
        serde_json::to_string(self).expect("config serializes")
    }
}

/// Frequency as used in file names.
pub fn file_tag(f: f64) -> String {
    pinnduct::format::fmt_float(f)
}
