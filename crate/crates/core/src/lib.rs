//! Physics-constrained nowcasting of wind-turbine gearbox bearing
//! temperatures.
//!
//! The library covers the full desk-scale workflow: a SCADA-style data layer,
//! a lumped heat-transfer plant simulator (the verification oracle), a small
//! recurrent network engine with hand-derived gradients, three model families
//! (lagged linear, LSTM, and the physics-constrained LSTM), a reproducible
//! experiment harness, and a residual-based alarm stage.
//!
//! All numeric kernels are generic over [`num::Real`] (`f32` or `f64`); the
//! aliases at the crate root fix `f64`, which is the precision the training
//! and verification paths are specified for.

pub mod data;
pub(crate) mod linalg;
pub mod metrics;
pub mod models;
pub mod monitor;
pub mod nn;
pub mod num;
pub mod rng;
pub mod sim;
pub mod train;

pub use num::Real;

// Concrete `f64` aliases for the public surface.
pub type ScadaRecord = data::ScadaRecord<f64>;
pub type TurbineSeries = data::TurbineSeries<f64>;
pub type PlantDataset = data::PlantDataset<f64>;
pub type WindowSample = data::WindowSample<f64>;
pub type StandardizationStats = data::StandardizationStats<f64>;

pub type PlantPhysicsConfig = sim::PlantPhysicsConfig<f64>;
pub type WindModelConfig = sim::WindModelConfig<f64>;
pub type PowerCurve = sim::PowerCurve<f64>;
pub type AmbientModel = sim::AmbientModel<f64>;
pub type FaultProfile = sim::FaultProfile<f64>;
pub type PlantModel = sim::PlantModel<f64>;

pub type LstmParams = nn::LstmParams<f64>;
pub type DenseParams = nn::DenseParams<f64>;
pub type AdamState = nn::AdamState<f64>;

pub type LinearModel = models::LinearModel<f64>;
pub type RnnModel = models::RnnModel<f64>;
pub type PcRnnModel = models::PcRnnModel<f64>;
pub type LossBreakdown = models::LossBreakdown<f64>;
pub type TrainedModel = models::TrainedModel<f64>;

pub type Hyperparams = train::Hyperparams<f64>;
pub type ExperimentSpec = train::ExperimentSpec<f64>;
pub type ExperimentReport = train::ExperimentReport<f64>;

pub type ResidualSeries = monitor::ResidualSeries<f64>;
pub type AlarmConfig = monitor::AlarmConfig<f64>;
pub type AlarmEvent = monitor::AlarmEvent<f64>;
