//! Fixtures shared by the benchmarks in `benches/`.

use gsvx::{generate_random_gmp, GsvSolver, SolverConfig};

/// Table-style shapes `(m, p, n)`.
pub const SHAPES: [(usize, usize, usize); 3] = [(60, 50, 12), (100, 80, 20), (200, 180, 40)];

/// Solver over a planted pair of the given shape; seed fixed so runs compare.
pub fn planted_solver(shape: (usize, usize, usize)) -> GsvSolver {
    let (m, p, n) = shape;
    let planted = generate_random_gmp(m, p, n, 2024).expect("valid shape");
    GsvSolver::new(planted.pair, SolverConfig::default()).expect("full-rank planted pair")
}
