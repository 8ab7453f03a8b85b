#![cfg_attr(not(test), no_std)]

//! Spectral analysis of multipatch B-spline discretizations.
//!
//! The crate assembles the operators of second- and fourth-order
//! eigenvalue problems on multipatch spline spaces, perturbs them with
//! scaled interface penalties that weakly enforce higher continuity, and
//! provides the parameter-estimation schemes, spectrum post-processing,
//! and explicit time integration built on top.

extern crate alloc;

pub mod assembly;
pub mod bspline;
pub mod dynamics;
pub mod eigensolve;
pub mod error;
pub mod linalg;
pub mod multipatch;
pub mod num;
pub mod perturbation;
pub mod quadrature;
pub mod spectral;

pub use assembly::{OperatorSet, Space, SymOperator};
pub use bspline::{Side, SplineSpace1D};
pub use eigensolve::{max_eigenpair, max_eigenpair_default, solve_gevp, Spectrum};
pub use error::{Error, Result};
pub use multipatch::{
    count_interior_outliers, BoundaryCondition, MultipatchSpace1D, MultipatchSpace2D,
    OperatorOrder, ProblemKind,
};
pub use perturbation::{
    estimate_exact_targets_1d, estimate_pragmatic, perturb, regime_probe, IterationRecord,
    ParamScaling, PerturbationParams, PerturbedOperators, Regime,
};
pub use quadrature::{gauss_rule, QuadratureRule};
pub use spectral::{
    convergence_order, flag_outliers, match_modes_1d, match_modes_2d, AnalyticModeSet,
    AnalyticProblem, MatchedSpectrum, ModeIndex,
};
