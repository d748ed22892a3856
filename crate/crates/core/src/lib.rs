//! Simulation toolkit for measuring energy relaxation times of excited states
//! during reverse quantum annealing.

pub mod annealer;
pub mod dynamics;
pub mod experiment;
mod linalg;
pub mod model;
pub mod noise;
pub mod operators;
pub mod spectral;
