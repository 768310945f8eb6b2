//! Tolling and Price-of-Anarchy toolkit for multitype (mixed-autonomy)
//! congestion games with affine latencies.

pub mod analysis;
pub mod cli;
pub mod equilibrium;
pub mod fixtures;
pub mod model;
pub mod optimal;
pub mod report;
pub mod rng;
pub mod scenario;
pub mod tolling;
pub mod validation;

mod game;
mod linalg;
