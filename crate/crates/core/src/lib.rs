//! Elastic energy of an indented cone: evaluation, constructions, and
//! minimization.
//!
//! The library works with a radially symmetric deformation of the unit disc
//! described by an in-plane displacement `u(r)` and a slope profile
//! `wp(r) = w'(r)`, subject to `w(0) = 0` and `w(1) = 1 - delta`. The
//! energy couples stretching against a conical reference metric with a
//! thickness-weighted bending penalty. On top of the one-dimensional model
//! the crate provides explicit test deformations, a projected quasi-Newton
//! minimizer, a scaling-study harness, and a two-dimensional pyramid
//! construction with fold-aligned ridge energies.

pub mod bump;
pub mod cheb;
pub mod constructions;
pub mod energy;
pub mod error;
pub mod field;
pub mod grid;
pub mod harness;
pub mod minimize;
pub mod pyramid;
pub mod quadrature;
pub mod ridge;

pub use constructions::{
    construct_flatten, construct_invert, mollifier_eta, predicted_bound, profile_w0,
    ConstructionKind, SmoothProfile,
};
pub use energy::{energy, energy_gradient, EnergyBreakdown, EnergyGradient};
pub use error::{Error, Result};
pub use field::{check_admissible, AdmissibilityReport, Params, RadialField};
pub use grid::{make_grid, Grid};
pub use harness::{
    append_records, classify_regime, excess_function, fit_exponent, oscillation_check,
    read_records, summary_csv, sweep, sweep_key, sweep_point, well_exit_radius, ExponentFit,
    Regime, SweepConfig, SweepRecord,
};
pub use minimize::{initial_set, minimize, minimize_seeded, MinResult, DEFAULT_SEED};
pub use pyramid::{
    ball_energy, pyramid_energy, pyramid_folds, sharp_pyramid, sharp_pyramid_corrected,
    sigma_jump, vertex_smooth, BallReport, BuiltPatch, FoldSpec, PatchReport, PyramidAssembly,
    PyramidConstruction, PyramidEnergy, PyramidOptions, SharpPyramid, SmoothedVertex, ALPHA,
};
pub use ridge::{
    fold_coeffs, gamma_profiles, patch_energy, ridge_fields, width_profile, FoldProfile, Frame,
    PatchEnergy, PlanarMap, QuadOptions, RidgeMap, RidgePatch, WidthProfile,
    PROFILE_KERNEL_HALF_WIDTH,
};
