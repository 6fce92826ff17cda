//! Global conservative solutions of the Hunter-Saxton equation.
//!
//! The equation is solved along characteristics, where it becomes a linear
//! system with a closed-form quadratic-in-time solution: time advancement is
//! exact and energy concentration (wave breaking) appears as plateaus of the
//! characteristic map carrying atoms of the energy measure.  On top of the
//! solver sits a Riemannian-style metric on the normalized characteristic
//! slice: tangents are measured after removing their best relabeling
//! direction (a coercive Galerkin solve), path lengths are integrated
//! seminorms, and distances are reported as certified upper bounds.
//!
//! Modules: [`banach`] (discrete function spaces), [`measure`] and [`pwl`]
//! (Eulerian data), [`state`] and [`transform`] (the two coordinate systems
//! and the maps between them), [`evolution`] (exact flow, weak-form
//! residuals), [`galerkin`] and [`metric`] (the distance machinery),
//! [`scenario`], [`config`], [`io`], [`run`] (the experiment harness).

pub mod banach;
pub mod config;
pub mod error;
pub mod evolution;
pub mod galerkin;
pub mod grid;
pub mod io;
pub mod measure;
pub mod metric;
pub mod pwl;
pub mod run;
pub mod scenario;
pub mod state;
pub mod transform;

pub use banach::{triple_inner, triple_norm, BanachTriple, TailedFunction};
pub use error::{Error, Result};
pub use evolution::{breaking_time, evolve, evolve_eulerian, weak_residual, TestFunction, Trajectory};
pub use galerkin::{coercivity_diagnostic, quotient_seminorm, split_tangent};
pub use grid::Grid;
pub use measure::RadonMeasure;
pub use metric::{
    distance_eulerian, distance_upper, lipschitz_certificate, path_length, CurvePath, RefineBudget,
};
pub use pwl::{PiecewiseLinear, Relabeling};
pub use scenario::{builtin_scenarios, random_normalized_state, scenario_by_name, Scenario};
pub use state::{normalize, relabel, EulerianState, LagrangianState};
pub use transform::{to_eulerian, to_lagrangian};
