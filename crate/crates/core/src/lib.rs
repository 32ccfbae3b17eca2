//! Explicit Stein-method bounds for functionals of finitely many independent
//! discrete random variables, checked against exact distances.
//!
//! The usual flow is: describe the coordinates with [`IndependentSequence`],
//! pick a [`Functional`], evaluate it on the grid with
//! [`build_eval_tensor`], build a [`DiffProfile`], then hand the profile (or
//! its [`ComponentSummary`]) to [`normal_bounds`] or [`poisson_bounds`] and
//! compare with [`distance`].

pub mod cli;
pub mod diff_engine;
pub mod distance;
pub mod error;
pub mod functional;
pub mod mc;
pub mod model_io;
pub mod normal_bounds;
pub mod numeric;
pub mod pipeline;
pub mod poisson_bounds;
pub mod prob_model;
pub mod report;

pub use diff_engine::{build_eval_tensor, ComponentSummary, DiffProfile, EvalTensor, LocalProfile};
pub use error::{Result, SteinError};
pub use functional::Functional;
pub use prob_model::{DiscreteDistribution, IndependentSequence};
