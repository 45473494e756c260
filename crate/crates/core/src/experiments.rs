//! Planted-spectrum generator, error metrics, benchmarks and the
//! two-dataset comparison pipeline.

use std::time::Instant;

use nalgebra::{DMatrix, DVector};
use num_complex::Complex64;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::gmp::{validate_gmp, FilterSpec, GrassmanPair, GsvPair, DEFAULT_RANK_TOL};
use crate::io::Dataset;
use crate::linalg::{complexify, gaussian_real, CMat};
use crate::solver::{angular_distance, GsvSolver, Method, SolverConfig};

/// `W*` is redrawn while its condition number exceeds this.
pub const W_COND_LIMIT: f64 = 1e6;
/// Below this magnitude a planted value is treated as zero and the error is absolute.
pub const ZERO_STAR: f64 = 1e-300;

/// A matrix pair with known generalized singular values.
#[derive(Debug, Clone)]
pub struct PlantedGmp {
    pub pair: GrassmanPair,
    /// Descending.
    pub alpha_star: Vec<f64>,
    /// Ascending, `√(1 − α*²)`.
    pub beta_star: Vec<f64>,
    pub seed: u64,
}

impl PlantedGmp {
    pub fn truth(&self) -> Vec<GsvPair> {
        self.alpha_star
            .iter()
            .zip(&self.beta_star)
            .enumerate()
            .map(|(k, (&alpha, &beta))| GsvPair { index: k + 1, alpha, beta })
            .collect()
    }
}

fn check_dims(m: usize, p: usize, n: usize) -> Result<()> {
    if n == 0 || n > m || n > p {
        return Err(Error::InvalidDims(format!("need 1 ≤ n ≤ m and n ≤ p, got (m, p, n) = ({m}, {p}, {n})")));
    }
    Ok(())
}

fn orthonormal_columns(rng: &mut ChaCha8Rng, rows: usize, cols: usize) -> DMatrix<f64> {
    gaussian_real(rng, rows, cols).qr().q()
}

fn condition_number(w: &DMatrix<f64>) -> f64 {
    let s = w.singular_values();
    let max = s.max();
    let min = s.min();
    if min == 0.0 {
        f64::INFINITY
    } else {
        max / min
    }
}

/// Random pair with `α*` uniform on `(0, 1)`.
pub fn generate_random_gmp(m: usize, p: usize, n: usize, seed: u64) -> Result<PlantedGmp> {
    check_dims(m, p, n)?;
    let mut rng = ChaCha8Rng::seed_from_u64(seed ^ 0x9e37_79b9_7f4a_7c15);
    let alpha: Vec<f64> = (0..n).map(|_| rng.random_range(f64::EPSILON..1.0)).collect();
    generate_planted_gmp(m, p, n, &alpha, seed)
}

/// `A = U diag(α*) W`, `B = V diag(β*) W` with orthonormal `U`, `V` and a
/// well-conditioned Gaussian `W`. The values are sorted descending first.
pub fn generate_planted_gmp(m: usize, p: usize, n: usize, alpha_star: &[f64], seed: u64) -> Result<PlantedGmp> {
    check_dims(m, p, n)?;
    if alpha_star.len() != n {
        return Err(Error::InvalidDims(format!("{} planted values for n = {n}", alpha_star.len())));
    }
    if alpha_star.iter().any(|a| !(0.0..=1.0).contains(a)) {
        return Err(Error::InvalidDims("planted values must lie in [0, 1]".into()));
    }
    let mut alpha = alpha_star.to_vec();
    alpha.sort_by(|a, b| b.total_cmp(a));
    let beta: Vec<f64> = alpha.iter().map(|a| (1.0 - a * a).sqrt()).collect();

    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let u = orthonormal_columns(&mut rng, m, n);
    let v = orthonormal_columns(&mut rng, p, n);
    let w = loop {
        let w = gaussian_real(&mut rng, n, n);
        if condition_number(&w) <= W_COND_LIMIT {
            break w;
        }
    };
    let a = &u * DMatrix::from_diagonal(&DVector::from_column_slice(&alpha)) * &w;
    let b = &v * DMatrix::from_diagonal(&DVector::from_column_slice(&beta)) * &w;
    let pair = GrassmanPair::from_real(&a, &b)?;
    Ok(PlantedGmp { pair, alpha_star: alpha, beta_star: beta, seed })
}

/// Multiply rows and columns by random unit phases; the generalized
/// singular values are unchanged.
pub fn with_random_phases(pair: &GrassmanPair, seed: u64) -> Result<GrassmanPair> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut phase = |len: usize| -> Vec<Complex64> {
        (0..len).map(|_| Complex64::from_polar(1.0, rng.random_range(0.0..std::f64::consts::TAU))).collect()
    };
    let (m, p, n) = pair.dims();
    let (left_a, left_b, right) = (phase(m), phase(p), phase(n));
    let scale = |x: &CMat, left: &[Complex64]| CMat::from_fn(x.nrows(), n, |r, c| left[r] * x[(r, c)] * right[c]);
    GrassmanPair::new(scale(pair.a(), &left_a), scale(pair.b(), &left_b))
}

/// Relative-error summary of one run.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ErrorReport {
    pub sizes: (usize, usize, usize),
    pub method: Method,
    /// Largest relative α error over `i ≤ ⌊n/2⌋`.
    pub err1: f64,
    /// Largest relative β error over `i > ⌊n/2⌋`.
    pub err2: f64,
    pub err3: f64,
    pub err4: f64,
    pub wall_time_s: f64,
    /// Some planted value was zero and its error is absolute.
    #[serde(skip)]
    pub absolute_fallback: bool,
}

fn rel_err(computed: f64, star: f64, fallback: &mut bool) -> f64 {
    if star.abs() < ZERO_STAR {
        *fallback = true;
        (computed - star).abs()
    } else {
        (computed - star).abs() / star.abs()
    }
}

fn max_min(v: &[f64]) -> (f64, f64) {
    if v.is_empty() {
        return (0.0, 0.0);
    }
    (v.iter().copied().fold(f64::NEG_INFINITY, f64::max), v.iter().copied().fold(f64::INFINITY, f64::min))
}

pub fn error_metrics(planted: &PlantedGmp, computed: &[GsvPair], method: Method, wall_time_s: f64) -> Result<ErrorReport> {
    let n = planted.alpha_star.len();
    let mut by_index = vec![None; n];
    for q in computed {
        if (1..=n).contains(&q.index) {
            by_index[q.index - 1] = Some(*q);
        }
    }
    let half = n / 2;
    let mut fallback = false;
    let mut alpha_errs = Vec::with_capacity(half);
    let mut beta_errs = Vec::with_capacity(n - half);
    for (k, q) in by_index.iter().enumerate() {
        let q = q.ok_or(Error::MissingIndices(k + 1))?;
        if k < half {
            alpha_errs.push(rel_err(q.alpha, planted.alpha_star[k], &mut fallback));
        } else {
            beta_errs.push(rel_err(q.beta, planted.beta_star[k], &mut fallback));
        }
    }
    let (err1, err3) = max_min(&alpha_errs);
    let (err2, err4) = max_min(&beta_errs);
    let (m, p, _) = planted.pair.dims();
    Ok(ErrorReport { sizes: (m, p, n), method, err1, err2, err3, err4, wall_time_s, absolute_fallback: fallback })
}

/// Solve every index of a planted pair and score it.
pub fn run_planted(planted: &PlantedGmp, method: Method, config: SolverConfig) -> Result<ErrorReport> {
    let start = Instant::now();
    let solver = GsvSolver::new(planted.pair.clone(), config)?;
    let pairs = solver.solve_all(method)?;
    let elapsed = start.elapsed().as_secs_f64();
    error_metrics(planted, &pairs, method, elapsed)
}

/// One report per `(size, method)`, in input order. Size `k` is generated
/// from `seed + k`; with `parallel` the entries run on the rayon pool.
pub fn benchmark(
    sizes: &[(usize, usize, usize)],
    methods: &[Method],
    seed: u64,
    config: SolverConfig,
    parallel: bool,
) -> Result<Vec<ErrorReport>> {
    let jobs: Vec<(usize, Method)> =
        (0..sizes.len()).flat_map(|k| methods.iter().map(move |&method| (k, method))).collect();
    let run = |&(k, method): &(usize, Method)| -> Result<ErrorReport> {
        let (m, p, n) = sizes[k];
        let planted = generate_random_gmp(m, p, n, seed.wrapping_add(k as u64))?;
        run_planted(&planted, method, config)
    };
    if parallel {
        jobs.par_iter().map(run).collect()
    } else {
        jobs.iter().map(run).collect()
    }
}

/// Sweep outcome for one dataset pair.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DatasetSummary {
    pub id: String,
    pub sizes: (usize, usize, usize),
    /// Sorted by index.
    pub pairs: Vec<GsvPair>,
    /// `(index, θ)` sorted by index.
    pub theta: Vec<(usize, f64)>,
    pub equal_significance_index: Option<usize>,
    /// Indices that needed a solve.
    pub solved_indices: usize,
    pub solver_calls: usize,
    pub filters: Vec<FilterSpec>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ComparisonReport {
    pub method: Method,
    pub dataset_ids: (String, String),
    pub datasets: Vec<DatasetSummary>,
}

fn dataset_pair(e: &Dataset, f: &Dataset, rank_tol: f64) -> Result<GrassmanPair> {
    if e.values.ncols() != f.values.ncols() {
        return Err(Error::DimensionMismatch(format!(
            "datasets '{}' and '{}' have {} and {} columns",
            e.id,
            f.id,
            e.values.ncols(),
            f.values.ncols()
        )));
    }
    validate_gmp(complexify(&e.values), complexify(&f.values), rank_tol)
}

/// Summarize one already-validated pair.
pub fn summarize_pair(id: String, pair: &GrassmanPair, method: Method, config: SolverConfig) -> Result<DatasetSummary> {
    let sizes = pair.dims();
    let res = GsvSolver::new(pair.clone(), config)?.sweep(method)?;
    Ok(DatasetSummary {
        id,
        sizes,
        theta: res.computed.iter().map(|q| (q.index, angular_distance(q))).collect(),
        pairs: res.computed,
        equal_significance_index: res.crossing_index,
        solved_indices: res.cost.indices(),
        solver_calls: res.cost.solver_calls,
        filters: res.filters,
    })
}

/// Sweep `{E₁, F₁}` and `{E₂, F₂}` and collect their θ profiles.
pub fn compare_datasets(
    ds1: (&Dataset, &Dataset),
    ds2: (&Dataset, &Dataset),
    method: Method,
    config: SolverConfig,
) -> Result<ComparisonReport> {
    let pair1 = dataset_pair(ds1.0, ds1.1, DEFAULT_RANK_TOL)?;
    let pair2 = dataset_pair(ds2.0, ds2.1, DEFAULT_RANK_TOL)?;
    if pair1.n() != pair2.n() {
        return Err(Error::DimensionMismatch(format!("dataset pairs have n = {} and n = {}", pair1.n(), pair2.n())));
    }
    let id1 = format!("{}/{}", ds1.0.id, ds1.1.id);
    let id2 = format!("{}/{}", ds2.0.id, ds2.1.id);
    let datasets = vec![
        summarize_pair(id1.clone(), &pair1, method, config)?,
        summarize_pair(id2.clone(), &pair2, method, config)?,
    ];
    Ok(ComparisonReport { method, dataset_ids: (id1, id2), datasets })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::gmp::dense_gsv_oracle;

    fn dataset(id: &str, values: DMatrix<f64>) -> Dataset {
        let row_labels = (0..values.nrows()).map(|r| format!("g{r}")).collect();
        Dataset { id: id.into(), row_labels, values }
    }

    fn real_parts(x: &CMat) -> DMatrix<f64> {
        x.map(|z| z.re)
    }

    #[test]
    fn planted_values_recovered() {
        let planted = generate_random_gmp(5, 4, 3, 11).unwrap();
        let spec = dense_gsv_oracle(&planted.pair).unwrap();
        for (q, a) in spec.pairs.iter().zip(&planted.alpha_star) {
            assert!((q.alpha - a).abs() < 1e-12);
        }
        assert!(planted.alpha_star.windows(2).all(|w| w[0] >= w[1]));
        for (a, b) in planted.alpha_star.iter().zip(&planted.beta_star) {
            assert!((a * a + b * b - 1.0).abs() < 1e-15);
        }
    }

    #[test]
    fn generator_is_deterministic() {
        let x = generate_random_gmp(9, 7, 4, 5).unwrap();
        let y = generate_random_gmp(9, 7, 4, 5).unwrap();
        assert_eq!(x.pair.a(), y.pair.a());
        assert_eq!(x.pair.b(), y.pair.b());
        assert_ne!(generate_random_gmp(9, 7, 4, 6).unwrap().pair.a(), x.pair.a());
    }

    #[test]
    fn generator_rejects_bad_dims() {
        assert!(matches!(generate_random_gmp(3, 5, 4, 0), Err(Error::InvalidDims(_))));
        assert!(matches!(generate_random_gmp(5, 3, 4, 0), Err(Error::InvalidDims(_))));
        assert!(matches!(generate_planted_gmp(5, 5, 2, &[0.5], 0), Err(Error::InvalidDims(_))));
    }

    #[test]
    fn phases_keep_the_spectrum() {
        let planted = generate_random_gmp(8, 6, 5, 2).unwrap();
        let complex = with_random_phases(&planted.pair, 3).unwrap();
        assert!(complex.a().iter().any(|z| z.im.abs() > 1e-3));
        let spec = dense_gsv_oracle(&complex).unwrap();
        for (q, a) in spec.pairs.iter().zip(&planted.alpha_star) {
            assert!((q.alpha - a).abs() < 1e-12);
        }
    }

    #[test]
    fn exact_answers_score_zero() {
        let planted = generate_random_gmp(6, 6, 4, 1).unwrap();
        let r = error_metrics(&planted, &planted.truth(), Method::DenseOracle, 0.0).unwrap();
        assert_eq!((r.err1, r.err2, r.err3, r.err4), (0.0, 0.0, 0.0, 0.0));
    }

    #[test]
    fn relative_error_arithmetic() {
        let mut planted = generate_planted_gmp(3, 3, 2, &[0.8, 0.3], 0).unwrap();
        planted.alpha_star = vec![0.8, 0.3];
        let mut computed = planted.truth();
        computed[0].alpha = 0.81;
        let r = error_metrics(&planted, &computed, Method::TwoVarBidiag, 0.0).unwrap();
        assert!((r.err1 - 0.0125).abs() < 1e-15);
        assert_eq!(r.err1, r.err3);
    }

    #[test]
    fn missing_index_reported() {
        let planted = generate_random_gmp(6, 6, 4, 1).unwrap();
        let mut computed = planted.truth();
        computed.remove(2);
        assert!(matches!(error_metrics(&planted, &computed, Method::DenseOracle, 0.0), Err(Error::MissingIndices(3))));
    }

    #[test]
    fn planted_zero_uses_absolute_error() {
        let planted = generate_planted_gmp(4, 4, 4, &[0.9, 0.0, 0.0, 0.0], 0).unwrap();
        let mut computed = planted.truth();
        computed[1].alpha = 1e-3;
        let r = error_metrics(&planted, &computed, Method::DenseOracle, 0.0).unwrap();
        assert!(r.absolute_fallback);
        assert_eq!((r.err1, r.err3), (1e-3, 0.0));

        let planted = generate_planted_gmp(4, 4, 4, &[0.9, 0.6, 0.3, 0.1], 0).unwrap();
        let mut computed = planted.truth();
        computed[0].alpha = 0.9 * (1.0 + 1e-3);
        let r = error_metrics(&planted, &computed, Method::DenseOracle, 0.0).unwrap();
        assert!(!r.absolute_fallback);
        assert!((r.err1 - 1e-3).abs() < 1e-12);
    }

    #[test]
    fn benchmark_plumbing() {
        assert!(benchmark(&[], &Method::ALL, 0, SolverConfig::default(), false).unwrap().is_empty());
        let reports = benchmark(&[(12, 10, 6)], &Method::ALL, 3, SolverConfig::default(), true).unwrap();
        assert_eq!(reports.len(), 3);
        for (r, m) in reports.iter().zip(Method::ALL) {
            assert_eq!(r.method, m);
            assert_eq!(r.sizes, (12, 10, 6));
            assert!(r.err1 <= 1e-8 && r.err2 <= 1e-8, "{r:?}");
            assert!(r.err3 <= r.err1 && r.err4 <= r.err2);
        }
    }

    #[test]
    fn identical_datasets_have_flat_profile() {
        let planted = generate_random_gmp(10, 10, 6, 8).unwrap();
        let e = dataset("E", real_parts(planted.pair.a()));
        let report = compare_datasets((&e, &e), (&e, &e), Method::TwoVarBidiag, SolverConfig::default()).unwrap();
        for d in &report.datasets {
            assert!(d.theta.iter().all(|&(_, t)| t.abs() < 1e-10));
            for q in &d.pairs {
                assert!((q.alpha - std::f64::consts::FRAC_1_SQRT_2).abs() < 1e-10);
            }
        }
    }

    #[test]
    fn comparison_rejects_mismatched_columns() {
        let e = dataset("E", DMatrix::identity(4, 3));
        let f = dataset("F", DMatrix::identity(4, 4));
        let err = compare_datasets((&e, &f), (&f, &f), Method::TwoVarBidiag, SolverConfig::default()).unwrap_err();
        assert!(matches!(err, Error::DimensionMismatch(_)));
        let err = compare_datasets((&f, &f), (&e, &e), Method::TwoVarBidiag, SolverConfig::default()).unwrap_err();
        assert!(matches!(err, Error::DimensionMismatch(_)));
    }

    #[test]
    fn swapping_the_pair_negates_theta() {
        let alphas = [0.95, 0.85, 0.75, 0.72, 0.65, 0.5, 0.3, 0.2];
        let planted = generate_planted_gmp(20, 20, 8, &alphas, 9).unwrap();
        let e = dataset("E", real_parts(planted.pair.a()));
        let f = dataset("F", real_parts(planted.pair.b()));
        let report = compare_datasets((&e, &f), (&f, &e), Method::TwoVarBidiag, SolverConfig::default()).unwrap();
        let (x, y) = (&report.datasets[0], &report.datasets[1]);
        assert_eq!(x.equal_significance_index, Some(4));
        // Same genelet, counted from the other end.
        assert_eq!(y.equal_significance_index, Some(5));
        // Swapping maps index i to n + 1 − i.
        for &(i, t) in &x.theta {
            if let Some(&(_, s)) = y.theta.iter().find(|&&(j, _)| j == 9 - i) {
                assert!((t + s).abs() < 1e-10);
            }
        }
    }
}
