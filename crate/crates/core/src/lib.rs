//! Approximate tomography of many-qubit states with basis-dependent RBMs.
//!
//! A feed-forward network maps a local measurement basis to the parameters of
//! a restricted Boltzmann machine that models the outcome distribution in that
//! basis. Everything is generic over [`Scalar`] (`f32` or `f64`); the aliases
//! below fix `f64`.

pub mod error;
pub mod eval;
pub mod ffnn;
pub mod io;
pub mod pca;
pub mod pipeline;
pub(crate) mod linalg;
pub mod quantum;
pub mod rbm;
pub mod rng;
pub mod scalar;

pub use error::{Error, Result};
pub use scalar::Scalar;

/// Double-precision aliases for the generic types.
pub type State = quantum::PureState<f64>;
pub type Distribution = quantum::OutcomeDistribution<f64>;
pub type Basis = quantum::LocalBasis<f64>;
pub type Record = quantum::MeasurementRecord<f64>;
pub type Rbm = rbm::RbmParams<f64>;
pub type Ffnn = ffnn::FfnnModel<f64>;
pub type Pca = pca::PcaTransform<f64>;
pub type Model = pipeline::BdrbmModel<f64>;
pub type Dataset = pipeline::TrainingDataset<f64>;
