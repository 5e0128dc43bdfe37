//! Spatially homogeneous discrete-velocity kinetic model of vehicular traffic.
//!
//! Vehicles occupy `n` speed classes on a uniform lattice in `[0, 1]`. Pairwise
//! encounters are stochastic games whose outcome probabilities depend on the
//! road density; the resulting ODE system conserves density, and its long-time
//! limits generate the fundamental (flux-density) and speed-density diagrams.
//!
//! * [`lattice`]: speed lattice, interaction rate, table of games.
//! * [`dynamics`]: right-hand side, RK4 integration, observables.
//! * [`equilibrium`] and [`stability`]: closed-form equilibria, brute-force
//!   enumeration, Jacobian-based stability.
//! * [`diagrams`]: density sweeps, critical density, unit rescaling.
//! * [`output`]: CSV/JSON/SVG writers.
//! * [`verify`]: the invariant suite behind `kintraffic verify`.

#![allow(clippy::needless_range_loop, clippy::neg_cmp_op_on_partial_ord)]

pub mod diagrams;
pub mod dynamics;
pub mod equilibrium;
pub mod error;
pub mod lattice;
pub mod output;
pub mod sampling;
pub mod stability;
pub mod verify;

pub use diagrams::{
    default_grid, detect_sigma, rescale_dimensional, sweep, Diagram, DiagramPoint, Method,
    SigmaDetection, SweepOptions, Units,
};
pub use dynamics::{
    observables, ContinuityGap, IntegrationConfig, KineticModel, KineticState, Observables,
    SteadyOutcome,
};
pub use equilibrium::{
    classify_stability, equilibrium_bruteforce, equilibrium_f1, equilibrium_quadratic,
    equilibrium_recursive, BranchRecord, BruteForceReport, Candidate, EquilibriumResult, Phase,
};
pub use error::{Error, Result};
pub use lattice::{
    build_game_table, build_lattice, interaction_rate, GameTable, ModelParams, SpeedLattice,
};
pub use stability::{classify_state, StabilityReport, Verdict};
