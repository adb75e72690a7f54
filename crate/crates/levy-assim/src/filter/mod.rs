//! Conditional-density filters: the continuous-discrete Bayes recursion and
//! the nonlocal Zakai stepper for continuous-time observations.

use std::sync::Arc;

pub mod discrete;
pub mod zakai;

pub use discrete::{bayes_update, gaussian_likelihood, run_cd_filter, DiscreteObservations};
pub use zakai::{run_zakai, step_zakai, ContinuousObservationPath};

/// Observation field `h(x, t)` with a printable name for run metadata.
#[derive(Clone)]
pub struct ObservationFn {
    name: String,
    eval: Arc<dyn Fn(f64, f64) -> f64 + Send + Sync>,
}

impl std::fmt::Debug for ObservationFn {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.debug_struct("ObservationFn").field("name", &self.name).finish()
    }
}

impl ObservationFn {
    pub fn new(
        name: impl Into<String>,
        eval: impl Fn(f64, f64) -> f64 + Send + Sync + 'static,
    ) -> Self {
        Self {
            name: name.into(),
            eval: Arc::new(eval),
        }
    }

    /// Direct state observation `h(x, t) = x`.
    pub fn identity() -> Self {
        Self::new("identity", |x, _| x)
    }

    pub fn zero() -> Self {
        Self::new("zero", |_, _| 0.0)
    }

    pub fn name(&self) -> &str {
        &self.name
    }

    pub fn eval(&self, x: f64, t: f64) -> f64 {
        (self.eval)(x, t)
    }
}
