//! State estimation for scalar stochastic systems driven by symmetric
//! alpha-stable Levy noise.
//!
//! The crate solves the nonlocal Fokker-Planck equation of such a system on a
//! truncated domain, assimilates either discrete-time observations (Bayes
//! updates between Fokker-Planck sweeps) or continuous-time observations (a
//! nonlocal Zakai equation with per-step renormalization), and extracts the
//! most probable orbit — the spatial argmax of the conditional density over
//! time — to detect transitions between metastable states.
//!
//! Modules follow the pipeline:
//!
//! - [`stable`]: stable-law constants, the jump measure, seeded increment
//!   sampling (Chambers-Mallows-Stuck).
//! - [`grid`] / [`operator`]: uniform grids and the dense discretization of
//!   the generator and its adjoint (drift divergence + symmetrized jump
//!   integral with zero exterior condition).
//! - [`density`] / [`fp`]: density fields and explicit Fokker-Planck
//!   stepping.
//! - [`filter`]: the continuous-discrete Bayes recursion and the Zakai
//!   stepper.
//! - [`sim`]: ground-truth path simulation, synthetic observations, and a
//!   bootstrap particle filter used as an independent verification oracle.
//! - [`orbit`]: most-probable-orbit extraction and metastable-transition
//!   labeling.
//! - [`scenario`]: config-driven experiment runs with CSV artifacts.
//!
//! See the `examples/` directory for one runnable program per capability.

pub mod density;
pub mod error;
pub mod filter;
pub mod fp;
pub mod grid;
pub mod operator;
pub mod orbit;
pub mod sim;
pub mod stable;

pub use density::{init_density, DensityEvolution, DensityField, InitialDensity, SnapshotKind};
pub use error::{Error, Result};
pub use filter::{
    bayes_update, gaussian_likelihood, run_cd_filter, run_zakai, step_zakai,
    ContinuousObservationPath, DiscreteObservations, ObservationFn,
};
pub use fp::{solve_fp, stability_limit, step_fp};
pub use grid::Grid1D;
pub use operator::{
    apply_generator, assemble_drift_divergence, assemble_nonlocal, DriftFn, DriftScheme, Exterior,
    OperatorMatrix,
};
pub use orbit::{detect_transitions, most_probable_orbit, MostProbableOrbit, TransitionEvent};
pub use sim::{
    bootstrap_particle_filter_continuous, bootstrap_particle_filter_discrete,
    generate_continuous_obs, generate_discrete_obs, mc_density_evolution, simulate_state,
    ParticleEnsemble, Trajectory,
};
pub use stable::{
    levy_constant, sample_stable_increments, seeded_rng, JumpMeasure, StableParams, Substream,
};
