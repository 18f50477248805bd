//! Capacity expansion planning with time aggregation driven by per-slice model solutions.

mod id;

pub mod clustering;
pub mod model;
pub mod pipeline;
pub mod timeseries;

pub use id::{InvalidId, TechId};
