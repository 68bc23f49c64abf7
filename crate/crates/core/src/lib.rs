//! Bound-state spectrum of the box `(-1, 1)` carrying a PT-symmetric pair of
//! point interactions with strengths `-ω² ∓ iη` at `x = ∓a`.
//!
//! * [`secular`]: parameters, matching matrix and the secular function `F(κ)`.
//! * [`realroots`]: real roots of `F` including quasi-degenerate pairs.
//! * [`complexroots`]: argument-principle zero counts and off-axis zeros.
//! * [`wavefunction`]: eigenfunction reconstruction, parity parts and norms.
//! * [`oracle`]: shooting on a Gaussian-regularized potential.
//! * [`analysis`]: envelopes, beats, gap statistics and figure datasets.

// `!(x > 0.0)` is used on purpose: it also rejects NaN.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod analysis;
pub mod complexroots;
pub mod error;
mod linalg;
pub mod oracle;
pub mod realroots;
pub mod secular;
pub mod wavefunction;

pub use analysis::{
    beat_period, figure_data, gap_statistics, trace_envelope, BeatPeriod, EnvelopeTrace,
    FigureDataset, GapStatistics,
};
pub use complexroots::{
    breaking_search, locate_complex_zero, winding_count, BreakingReport, ComplexRegion, ZeroCount,
};
pub use error::{Error, Result};
pub use oracle::{
    convergence_study, integrate_ode, shoot_eigenvalue, ConvergenceStudy, RegularizedProblem,
};
pub use realroots::{
    compute_spectrum, find_level, refine_root, resolve_cluster, scan_brackets, EigenvalueRecord,
    LevelFlag, ScanConfig, SpectrumReport, SuspiciousSite,
};
pub use secular::{
    entire_derivative, entire_secular, make_parameters, matching_matrix, mu, nu,
    scaled_imaginary_axis, secular, secular_closed_form, secular_complex, secular_det,
    secular_imaginary_axis, ClosedForm, MatchingMatrix, Method, SecularValue, WellParameters,
};
pub use wavefunction::{
    eigenfunction, norms, nullspace_coeffs, parity_decompose, ParityParts, Side, Wavefunction,
};
