//! Fixtures shared by the benchmarks.

use pinnduct::media::air_ntp;
use pinnduct::network::{Architecture, NetworkParams};
use pinnduct::physics::{DuctProblem, PinnObjective, ProblemKind};
use pinnduct::trainer::{sample_collocation, Sampling, TrainingConfig};
use pinnduct::trial::{BoundaryConditions, DuctGeometry};

pub fn uniform(f: f64) -> DuctProblem {
    let geometry = DuctGeometry::new(0.0, 1.0).expect("unit duct");
    DuctProblem::new(ProblemKind::Uniform, geometry, BoundaryConditions::real(1.0, -1.0), f, air_ntp())
        .expect("valid problem")
}

/// Pressure objective of `problem` on `n` equispaced points, with seeded
/// initial parameters.
pub fn pressure_objective(problem: &DuctProblem, config: &TrainingConfig, n: usize) -> (PinnObjective, Vec<f64>) {
    let arch: Architecture = config.architecture(problem.parts().count()).expect("architecture");
    let xs = sample_collocation(&problem.geometry, n, Sampling::Equispaced, config.seed).expect("points");
    let objective = PinnObjective::pressure(problem, arch.clone(), xs).expect("objective");
    let params = NetworkParams::init(&arch, config.seed).expect("init").flatten();
    (objective, params)
}
