//! Online Markov decision processes with adversarially chosen transition
//! models and losses.
//!
//! The learner picks a stationary policy each round with a lazily switching
//! expert algorithm over a finite policy class, while every policy's
//! counterfactual state law is tracked exactly by forward propagation.

pub mod adversary;
pub mod cli;
pub mod config;
pub mod cover;
pub mod error;
pub mod experts;
pub mod harness;
pub mod mdp;
pub mod mixing;
pub mod sdmdp;
pub mod streams;
pub mod textfmt;

pub use error::{Error, Result};
pub use mdp::{LossFunction, Policy, ProblemShape, StateDistribution, TransitionMatrix, TransitionModel};
