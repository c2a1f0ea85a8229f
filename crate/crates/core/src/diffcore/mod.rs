//! Dense tensors, a reverse-mode tape over the handful of ops the model uses,
//! seeded randomness and a finite-difference gradient checker.

mod gradcheck;
mod graph;
mod init;
mod params;
mod rng;
mod tensor;

pub use gradcheck::{grad_check, GradCheckOptions, GradCheckReport, ParamCheck};
pub use graph::{sigmoid, ElementwiseDerivative, Gradients, Graph, NodeId};
pub use init::{xavier_bound, xavier_init};
pub use params::{Param, ParamId, ParamStore};
pub use rng::Rng;
pub use tensor::{matmul, Tensor};

/// Lower/upper clamp applied to every probability before a log.
pub const PROB_EPS: f64 = 1e-7;
