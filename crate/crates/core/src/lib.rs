//! Equilibrium computation, stability analysis and learning simulation for a
//! principal–agent model in which society holds a dogmatic misbelief about
//! mean ability and learns about effort productivity.

pub mod analysis;
pub mod assumptions;
pub mod best_response;
pub mod equilibrium;
pub mod error;
pub mod learning;
pub mod multigroup;
pub mod primitives;
pub mod quadrature;
pub mod rng;
pub mod solver;
pub mod truncnorm;

pub use best_response::BestResponseEngine;
pub use error::{Error, Result};
pub use primitives::{
    build_lq, CallablePrimitives, LqParams, ModelPrimitives, PowerCostPrimitives, PrimitiveFunctions, Scenario,
    Support,
};
