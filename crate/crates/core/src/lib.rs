//! Exact-arithmetic Newton/Hodge polygon calculus for graded F-crystals at
//! truncated p-adic precision.
//!
//! The crate models free modules over truncated unramified Witt rings with a
//! semilinear Frobenius and an endomorphism grading, and computes their
//! Newton, Hodge and Galois-averaged Hodge polygons exactly; constructs and
//! verifies Hodge-Newton decompositions at eligible breakpoints; synthesizes
//! extremal (μ-ordinary) modules from combinatorial types; checks the
//! slope-vector hypotheses of the general-linear decomposition criterion; and
//! tests the deformation-lifting criterion over truncated power-series rings.
//!
//! All arithmetic is exact: arbitrary-precision integers modulo `p^N` with
//! honest valuation sentinels, and arbitrary-precision rationals for slopes.
//! Operations that cannot be certified at the working precision fail with a
//! retryable error instead of returning approximate answers.

pub mod codec;
pub mod crystal;
pub mod deformation;
pub mod error;
pub mod hodge_newton;
pub mod kottwitz;
pub mod polygon;
pub mod random;
pub mod semilinear;
pub mod witt;

pub use crystal::{build_elementary, build_mu_ordinary, mu_ordinary_polygon, ObCrystal, TypeDF};
pub use error::{Error, Result};
pub use hodge_newton::{
    breakpoints, hn_decompose, hn_decompose_with_precision, hn_eligible, polarized_dual_check,
    verify_decomposition, BreakpointInfo, HNDecomposition, VerificationReport,
};
pub use kottwitz::{crystal_bridge, theorem_hypotheses, GroupData, HypothesesVerdict};
pub use polygon::{dual_point, LatticePoint, Polygon, Rat};
pub use semilinear::{
    compose, hodge, linearize, low_slope_sublattice, newton, slope_sublattice, Mat, SigmaMatrix,
};
pub use witt::{Val, WittElem, WittRing};
