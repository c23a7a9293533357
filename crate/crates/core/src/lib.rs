//! Core model of a human-AI ecosystem under institutional shaping.
//!
//! Every numeric type is generic over [`Real`] (`f32` or `f64`); the aliases
//! at the crate root fix the scalar to `f64`, which is what the harness uses.

// `!(x > 0)` style checks also reject NaN
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod action;
pub mod error;
pub mod fixtures;
pub mod geometry;
pub mod macro_dynamics;
pub mod mdp;
pub mod num;
pub mod population;

pub use error::{Error, Result};
pub use num::Real;

pub type MoralPoint = geometry::MoralPoint<f64>;
pub type MoralRegion = geometry::MoralRegion<f64>;
pub type AgentMoralModel = geometry::AgentMoralModel<f64>;
pub type ProjectionMap = geometry::ProjectionMap<f64>;
pub type ContextBias = geometry::ContextBias<f64>;
pub type VirtueBasis = geometry::VirtueBasis<f64>;
pub type VirtueProfile = geometry::VirtueProfile<f64>;

pub type ActionSpec = action::ActionSpec<f64>;
pub type ActionCatalog = action::ActionCatalog<f64>;
pub type ContextFrame = action::ContextFrame<f64>;
pub type Thresholds = action::Thresholds<f64>;
pub type PolicyDist = action::PolicyDist<f64>;
pub type Prevalence = action::Prevalence<f64>;

pub type Lineage = population::Lineage<f64>;
pub type PopulationState = population::PopulationState<f64>;
pub type InstitutionPolicy = population::InstitutionPolicy<f64>;
pub type FitnessReport = population::FitnessReport<f64>;

pub type CapabilityState = macro_dynamics::CapabilityState<f64>;
pub type MacroParams = macro_dynamics::MacroParams<f64>;

pub type TabularMdp = mdp::TabularMdp<f64>;
pub type ShapingWeights = mdp::ShapingWeights<f64>;
pub type BeliefParticles = mdp::BeliefParticles<f64>;
pub type AgentPolicy = mdp::AgentPolicy<f64>;
