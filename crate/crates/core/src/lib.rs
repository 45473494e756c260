//! Individual generalized singular values of a matrix pair `{A, B}`.
//!
//! Each value `α_i` (or `β_i`) is obtained as the difference of two
//! truncated trace maxima: either Ky Fan sums of eigenvalues of
//! `C = A(AᴴA + BᴴB)⁻¹Aᴴ`, maximized by a Riemannian Newton method on the
//! Grassmann manifold, or partial sums of singular values of
//! `E = A(AᴴA + BᴴB)^(-1/2)`, computed by Golub–Kahan bidiagonalization.
//! A dense decomposition serves as the reference.

pub mod bidiag;
pub mod error;
pub mod experiments;
pub mod gmp;
pub mod io;
pub mod linalg;
pub mod newton;
pub mod solver;

pub use bidiag::{bidiagonal_svd, golub_kahan, partial_singular, BidiagFactorization, PartialSvd};
pub use error::{Error, Result};
pub use experiments::{
    benchmark, compare_datasets, error_metrics, generate_planted_gmp, generate_random_gmp, ComparisonReport,
    ErrorReport, PlantedGmp,
};
pub use gmp::{
    dense_gsv_oracle, filter_matrix, gram_operators, validate_gmp, FilterRegime, FilterSide, FilterSpec,
    FilterVariant, GramOperators, GrassmanPair, GsvPair, GsvSpectrum,
};
pub use io::{Dataset, RunConfig};
pub use newton::{newton_grassmann, retract_pi, tangent_project, FrameInit, NewtonConfig, NewtonReport, StiefelPoint, TangentVector};
pub use solver::{angular_distance, dispatch, sweep, GsvSolver, Method, SolveRequest, SolverConfig, SweepCost, SweepResult};
