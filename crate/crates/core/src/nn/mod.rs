//! Small dense networks with reverse-mode gradients.

pub mod checkpoint;
pub mod gradcheck;
pub mod graph;
pub mod nets;
pub mod optim;
pub mod params;

pub use gradcheck::{check_gradients, GradCheckReport};
pub use graph::{Gradients, Tape, Var};
pub use nets::{
    hadamard_fuse, DiscriminatorConfig, DiscriminatorNet, DuelingNet, DuelingOutput, GeneratorConfig, GeneratorNet,
    ParticleSet, QNet, QNetConfig,
};
pub use optim::{Optimizer, OptimizerConfig, OptimizerKind};
pub use params::{clone_params, Activation, Init, MlpSpec, ParamSet};
