//! Atomistic and Cauchy-Born energies on periodic 2-lattices.
//!
//! A 2-lattice is the union of two shifted copies of a Bravais lattice
//! (honeycomb, hcp, diamond are physical examples). This crate evaluates
//!
//! * exact atomistic energies of N-periodic deformations under pair and
//!   toy many-body site potentials,
//! * the classical Cauchy-Born strain energy density together with its
//!   2-lattice generalization and the shift-gradient density `W_eps`,
//! * empirical convergence orders of each continuum model against the
//!   atomistic energy per site, under either the classical or the
//!   centroid atomistic/continuum connection.
//!
//! The `cblab` binary drives sweeps over the period N and reports fitted
//! log-log slopes; see the `convergence` module and the README.

pub mod convergence;
pub mod energy;
pub mod fields;
pub mod lattice;
pub mod potentials;
pub mod quadrature;
pub mod suite;
mod sum;

pub use convergence::{
    emit, fit_slope, run_experiment, ConvergenceReport, ExperimentConfig, OutputFormat, RateRow,
    SlopeFit, Symmetrization,
};
pub use energy::{
    atomistic_energy, cb_density, cb_energy, compare_at, eps_energy, EnergyReport, ModelTag,
};
pub use fields::{
    builtin_field, AtomisticDeformation, ConnectionRule, ContinuumField, ScaledField,
};
pub use lattice::{
    bravais_range_from_cutoff, close_range, iter_cell, range_from_cutoff, wrap, InteractionRange,
    MultiIndex, PeriodicCell, SymmetryOp, MAX_DIM,
};
pub use potentials::{
    builtin_potential, check_derivative_symmetry, pair_site, symmetrize_neg, symmetrize_point,
    BuiltinPotential, ManyBodyToy, PairPotential, SitePotential, SymmetryCertificate,
};
pub use quadrature::QuadratureSpec;

/// Real vector, zero-padded beyond the active dimension.
pub type Vector = nalgebra::Vector3<f64>;
/// Real matrix, identity-padded beyond the active dimension.
pub type Matrix = nalgebra::Matrix3<f64>;

#[derive(Debug, thiserror::Error)]
pub enum Error {
    #[error("dimension must be 1, 2, or 3, got {0}")]
    BadDimension(usize),

    #[error("multi-index (0; {alpha}, {alpha}) lies on the excluded diagonal")]
    ExcludedDiagonal { alpha: usize },

    #[error("atom index must be 0 or 1, got {0}")]
    BadAtomIndex(usize),

    #[error("interaction range entry has dimension {entry}, range has dimension {range}")]
    DimensionMismatch { entry: usize, range: usize },

    #[error("duplicate multi-index {0} in interaction range")]
    DuplicateEntry(String),

    #[error("strain matrix is singular (|det| = {det:.3e})")]
    SingularStrain { det: f64 },

    #[error("multi-index {0} not in the potential's interaction range")]
    MissingEntry(String),

    #[error(
        "interatomic distance {r:.6e} below guard radius {r_min:.6e} at range entry {entry}"
    )]
    BelowGuardRadius { r: f64, r_min: f64, entry: usize },

    #[error("at site {site:?}: {source}")]
    AtSite {
        site: Vec<i64>,
        #[source]
        source: Box<Error>,
    },

    #[error(
        "quadrature did not converge within {max_subdivisions} subdivisions \
         (last estimates {prev:.17e} and {last:.17e})"
    )]
    QuadratureNotConverged {
        prev: f64,
        last: f64,
        max_subdivisions: usize,
    },

    #[error("unknown field `{0}` (expected affine, trig_generic, or trig_shift_only)")]
    UnknownField(String),

    #[error(
        "unknown potential `{0}` (expected morse_single, morse_two_species, \
         lj_smooth_single, or eam_toy_single)"
    )]
    UnknownPotential(String),

    #[error("model {model} requires {requirement}")]
    IncompatibleModel { model: String, requirement: String },

    #[error("fewer than 3 points above the error floor ({retained} retained)")]
    InsufficientPoints { retained: usize },

    #[error("config: {0}")]
    Config(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error(transparent)]
    Json(#[from] serde_json::Error),
}

pub type Result<T> = std::result::Result<T, Error>;
