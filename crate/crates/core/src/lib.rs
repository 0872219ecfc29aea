//! Physics-informed neural network solver for one-dimensional
//! frequency-domain duct acoustics.

pub mod autodiff;
pub mod error;
pub mod format;
pub mod media;
pub mod metrics;
pub mod network;
pub mod oracle;
pub mod physics;
pub mod trainer;
pub mod trial;

pub use error::{Error, Result};
pub use media::{air_ntp, MediumProperties, PhiConvention};
pub use metrics::ErrorReport;
pub use network::{Architecture, NetworkParams};
pub use oracle::Reference;
pub use physics::{AreaProfile, DuctProblem, ProblemKind};
pub use trainer::{LambdaMode, Sampling, Termination, TrainReport, TrainingConfig};
pub use trial::{BoundaryConditions, DuctGeometry, JetField, Parts, RawField, TrialField};
pub use autodiff::Activation;
