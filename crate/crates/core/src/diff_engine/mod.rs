//! Difference operators on the product grid.
//!
//! [`EvalTensor`] holds a functional on every outcome; all conditional
//! expectations are weighted axis contractions of it. [`DiffProfile`] runs the
//! whole calculus once, [`LocalProfile`] gets the same scalars for additively
//! decomposed functionals from small windows, and both reduce to a
//! [`ComponentSummary`].

mod local;
mod profile;
mod summary;
mod tensor;

pub use local::LocalProfile;
pub use profile::{CoordinateTensors, DiffProfile};
pub use summary::{ComponentSummary, MOMENT_ORDERS};
pub use tensor::{build_eval_tensor, covariance_formula, EvalTensor};
