//! Index routing and the per-index solution paths.
//!
//! For an index `i`:
//!
//! * structural zeros (`m < n, i > m` gives `α_i = 0`; `p < n, i ≤ n − p`
//!   gives `β_i = 0`) are returned without any solve;
//! * `i ≤ ⌊n/2⌋` computes `α_i`, otherwise `β_i`; the other member of the
//!   pair follows from `α² + β² = 1`.
//!
//! The one-variable path takes `α_i² = K_C(i) − K_C(i−1)` and
//! `β_i² = K_D(n−i+1) − K_D(n−i)` where `K_X(j)` is the Ky Fan `j`-sum of
//! `X`, maximized by [`newton_grassmann`]. The two-variable path takes
//! `α_i = σ_i(E)` and `β_i = σ_{n−i+1}(F)` from [`partial_singular`]; both
//! only ever need the largest side of a spectrum.

use std::collections::BTreeMap;
use std::f64::consts::FRAC_1_SQRT_2;
use std::fmt;
use std::str::FromStr;
use std::sync::OnceLock;

use serde::{Deserialize, Serialize};

use crate::bidiag::{partial_singular, DEFAULT_SVD_TOL};
use crate::error::{Error, Result};
use crate::gmp::{
    dense_spectrum, gram_operators, FilterSide, FilterSpec, FilterVariant, GramOperators, GrassmanPair, GsvPair,
    GsvSpectrum, DEFAULT_PD_TOL,
};
use crate::linalg::CMat;
use crate::newton::{newton_grassmann, NewtonConfig};

/// Round-off allowance for negative Ky Fan differences.
pub const NEGATIVE_DIFF_TOL: f64 = 1e-10;
/// `|θ|` values within this distance of the minimum count as ties.
pub const THETA_TIE_TOL: f64 = 1e-12;

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum Method {
    #[serde(rename = "one-var")]
    OneVarNewton,
    #[default]
    #[serde(rename = "two-var")]
    TwoVarBidiag,
    #[serde(rename = "dense")]
    DenseOracle,
}

impl Method {
    pub const ALL: [Method; 3] = [Method::OneVarNewton, Method::TwoVarBidiag, Method::DenseOracle];

    pub fn name(self) -> &'static str {
        match self {
            Method::OneVarNewton => "one-var",
            Method::TwoVarBidiag => "two-var",
            Method::DenseOracle => "dense",
        }
    }
}

impl fmt::Display for Method {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for Method {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "one-var" | "newton" => Ok(Method::OneVarNewton),
            "two-var" | "bidiag" => Ok(Method::TwoVarBidiag),
            "dense" | "oracle" => Ok(Method::DenseOracle),
            other => Err(Error::InvalidConfig(format!("unknown method '{other}' (one-var, two-var, dense)"))),
        }
    }
}

/// Numerical settings shared by every index solve on a pair.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SolverConfig {
    pub newton: NewtonConfig,
    pub svd_tol: f64,
    /// Krylov dimension cap; `None` means `min` of the operator dimensions.
    pub max_k: Option<usize>,
    pub pd_tol: f64,
    pub seed: u64,
}

impl Default for SolverConfig {
    fn default() -> Self {
        Self {
            newton: NewtonConfig::default(),
            svd_tol: DEFAULT_SVD_TOL,
            max_k: None,
            pd_tol: DEFAULT_PD_TOL,
            seed: 0,
        }
    }
}

/// A single-index request.
#[derive(Debug, Clone)]
pub struct SolveRequest {
    pub pair: GrassmanPair,
    pub index: usize,
    pub method: Method,
    pub config: SolverConfig,
}

/// Which side of the pair a solve produced.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum Route {
    Alpha,
    Beta,
    /// Forced by the shape of the pair; nothing was solved.
    Structural,
}

/// One dispatched index with its cost.
#[derive(Debug, Clone)]
pub struct Solved {
    pub pair: GsvPair,
    pub route: Route,
    /// Inner solver invocations (Newton solves or partial SVDs).
    pub solver_calls: usize,
    /// Newton outer iterations or Krylov dimension, summed.
    pub inner_iterations: usize,
    pub filters: Vec<FilterSpec>,
}

/// Solver bound to one pair; the Gram operators are computed once.
#[derive(Debug)]
pub struct GsvSolver {
    pair: GrassmanPair,
    ops: GramOperators,
    config: SolverConfig,
    dense: OnceLock<GsvSpectrum>,
}

impl GsvSolver {
    pub fn new(pair: GrassmanPair, config: SolverConfig) -> Result<Self> {
        config.newton.validate()?;
        if !(config.svd_tol > 0.0) {
            return Err(Error::InvalidConfig("svd_tol must be positive".into()));
        }
        let ops = gram_operators(&pair, config.pd_tol)?;
        Ok(Self { pair, ops, config, dense: OnceLock::new() })
    }

    pub fn pair(&self) -> &GrassmanPair {
        &self.pair
    }

    pub fn operators(&self) -> &GramOperators {
        &self.ops
    }

    pub fn config(&self) -> &SolverConfig {
        &self.config
    }

    pub fn n(&self) -> usize {
        self.pair.n()
    }

    fn filter(&self, index: usize, side: FilterSide, variant: FilterVariant) -> FilterSpec {
        let (m, p, n) = self.pair.dims();
        FilterSpec::new(index, side, variant, m, p, n)
    }

    fn ky_fan_difference(&self, op: &CMat, upper: usize, index: usize) -> Result<(f64, usize, usize)> {
        let cfg = self.config.newton;
        let big = newton_grassmann(op, upper, &cfg, None)?;
        let mut iters = big.outer_iters;
        let mut calls = 1;
        let small_value = if upper > 1 {
            let small = newton_grassmann(op, upper - 1, &cfg, Some(&big.point.leading(upper - 1)))?;
            iters += small.outer_iters;
            calls += 1;
            small.value
        } else {
            0.0
        };
        let diff = big.value - small_value;
        if diff < -NEGATIVE_DIFF_TOL {
            return Err(Error::InconsistentSolves { index, value: diff });
        }
        Ok((diff.max(0.0).sqrt().min(1.0), calls, iters))
    }

    /// `α_i = √(K_C(i) − K_C(i−1))`.
    pub fn alpha_one_var(&self, i: usize) -> Result<Solved> {
        let (m, _, n) = self.pair.dims();
        self.check_alpha_range(i, m, n)?;
        let (alpha, calls, iters) = self.ky_fan_difference(&self.ops.c, i, i)?;
        Ok(Solved {
            pair: GsvPair::from_alpha(i, alpha),
            route: Route::Alpha,
            solver_calls: calls,
            inner_iterations: iters,
            filters: vec![
                self.filter(i, FilterSide::Alpha, FilterVariant::OneVar),
                self.filter(i - 1, FilterSide::Alpha, FilterVariant::OneVar),
            ],
        })
    }

    /// `β_i = √(K_D(n−i+1) − K_D(n−i))`.
    pub fn beta_one_var(&self, i: usize) -> Result<Solved> {
        let (_, p, n) = self.pair.dims();
        self.check_beta_range(i, p, n)?;
        let (beta, calls, iters) = self.ky_fan_difference(&self.ops.d, n - i + 1, i)?;
        Ok(Solved {
            pair: GsvPair::from_beta(i, beta),
            route: Route::Beta,
            solver_calls: calls,
            inner_iterations: iters,
            filters: vec![
                self.filter(i, FilterSide::Beta, FilterVariant::OneVar),
                self.filter(i + 1, FilterSide::Beta, FilterVariant::OneVar),
            ],
        })
    }

    /// `α_i = σ_i(E)`.
    pub fn alpha_two_var(&self, i: usize) -> Result<Solved> {
        let (m, _, n) = self.pair.dims();
        self.check_alpha_range(i, m, n)?;
        let svd = partial_singular(&self.ops.e, i, self.config.svd_tol, self.config.max_k, self.config.seed)?;
        Ok(Solved {
            pair: GsvPair::from_alpha(i, svd.values[i - 1]),
            route: Route::Alpha,
            solver_calls: 1,
            inner_iterations: svd.k,
            filters: vec![
                self.filter(i, FilterSide::Alpha, FilterVariant::TwoVar),
                self.filter(i - 1, FilterSide::Alpha, FilterVariant::TwoVar),
            ],
        })
    }

    /// `β_i = σ_{n−i+1}(F)`.
    pub fn beta_two_var(&self, i: usize) -> Result<Solved> {
        let (_, p, n) = self.pair.dims();
        self.check_beta_range(i, p, n)?;
        let count = n - i + 1;
        let svd = partial_singular(&self.ops.f, count, self.config.svd_tol, self.config.max_k, self.config.seed)?;
        Ok(Solved {
            pair: GsvPair::from_beta(i, svd.values[count - 1]),
            route: Route::Beta,
            solver_calls: 1,
            inner_iterations: svd.k,
            filters: vec![
                self.filter(i, FilterSide::Beta, FilterVariant::TwoVar),
                self.filter(i + 1, FilterSide::Beta, FilterVariant::TwoVar),
            ],
        })
    }

    fn check_alpha_range(&self, i: usize, m: usize, n: usize) -> Result<()> {
        if i == 0 || i > m.min(n) {
            return Err(Error::InvalidIndex { index: i, n: m.min(n) });
        }
        Ok(())
    }

    fn check_beta_range(&self, i: usize, p: usize, n: usize) -> Result<()> {
        if i == 0 || i > n || (p < n && i <= n - p) {
            return Err(Error::InvalidIndex { index: i, n });
        }
        Ok(())
    }

    /// The dense reference spectrum, computed on first use.
    pub fn dense(&self) -> &GsvSpectrum {
        self.dense.get_or_init(|| dense_spectrum(&self.ops))
    }

    /// Route index `i` to the right formulation and solve it.
    pub fn dispatch(&self, i: usize, method: Method) -> Result<Solved> {
        let (m, p, n) = self.pair.dims();
        if i == 0 || i > n {
            return Err(Error::InvalidIndex { index: i, n });
        }
        let structural = |pair| Solved { pair, route: Route::Structural, solver_calls: 0, inner_iterations: 0, filters: vec![] };
        if m < n && i > m {
            return Ok(structural(GsvPair::from_alpha(i, 0.0)));
        }
        if p < n && i <= n - p {
            return Ok(structural(GsvPair::from_beta(i, 0.0)));
        }
        let alpha_side = i <= n / 2;
        match (method, alpha_side) {
            (Method::OneVarNewton, true) => self.alpha_one_var(i),
            (Method::OneVarNewton, false) => self.beta_one_var(i),
            (Method::TwoVarBidiag, true) => self.alpha_two_var(i),
            (Method::TwoVarBidiag, false) => self.beta_two_var(i),
            (Method::DenseOracle, _) => {
                let q = self.dense().pairs[i - 1];
                let pair = if alpha_side { GsvPair::from_alpha(i, q.alpha) } else { GsvPair::from_beta(i, q.beta) };
                Ok(Solved {
                    pair,
                    route: if alpha_side { Route::Alpha } else { Route::Beta },
                    solver_calls: 1,
                    inner_iterations: 0,
                    filters: vec![],
                })
            }
        }
    }

    /// Every index `1..=n`.
    pub fn solve_all(&self, method: Method) -> Result<Vec<GsvPair>> {
        (1..=self.n()).map(|i| self.dispatch(i, method).map(|s| s.pair)).collect()
    }

    /// Find the equal-significance index with as few solves as possible.
    ///
    /// Computes `α_1` and `β_n`, then walks `β` down from `n − 1` and stops
    /// one index after `β` drops below `√2/2`. If the whole `β` side stays
    /// above `√2/2` the walk continues on `α` from index 2 and stops one
    /// index after `α` drops below `√2/2`. When `α_1 ≤ √2/2` or
    /// `β_n ≤ √2/2` the profile has one sign throughout and nothing more is
    /// computed.
    pub fn sweep(&self, method: Method) -> Result<SweepResult> {
        let n = self.n();
        let half = n / 2;
        let mut done: BTreeMap<usize, Solved> = BTreeMap::new();
        let solve = |i: usize, done: &mut BTreeMap<usize, Solved>| -> Result<GsvPair> {
            if let Some(s) = done.get(&i) {
                return Ok(s.pair);
            }
            let s = self.dispatch(i, method)?;
            let q = s.pair;
            done.insert(i, s);
            Ok(q)
        };

        let first = solve(1, &mut done)?;
        let last = solve(n, &mut done)?;
        if first.alpha > FRAC_1_SQRT_2 && last.beta > FRAC_1_SQRT_2 {
            let mut crossed = false;
            for i in (half + 1..n).rev() {
                if solve(i, &mut done)?.beta < FRAC_1_SQRT_2 {
                    crossed = true;
                    break;
                }
            }
            if !crossed {
                for j in 2..=half {
                    if solve(j, &mut done)?.alpha < FRAC_1_SQRT_2 {
                        break;
                    }
                }
            }
        }

        let computed: Vec<GsvPair> = done.values().map(|s| s.pair).collect();
        let theta: Vec<(usize, f64)> = computed.iter().map(|q| (q.index, angular_distance(q))).collect();
        let crossing_index = equal_significance_index(&theta);
        let mut cost = SweepCost::default();
        let mut filters = Vec::new();
        for s in done.values() {
            match s.route {
                Route::Alpha => cost.alpha_side += 1,
                Route::Beta => cost.beta_side += 1,
                Route::Structural => {}
            }
            cost.solver_calls += s.solver_calls;
            filters.extend(s.filters.iter().copied());
        }
        Ok(SweepResult { computed, crossing_index, theta, cost, filters })
    }
}

/// Work spent by a sweep. Structural zeros count nowhere.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct SweepCost {
    /// Indices solved through `α`.
    pub alpha_side: usize,
    /// Indices solved through `β`.
    pub beta_side: usize,
    /// Inner solver runs (two Newton solves per index on the one-variable path).
    pub solver_calls: usize,
}

impl SweepCost {
    pub fn indices(&self) -> usize {
        self.alpha_side + self.beta_side
    }
}

#[derive(Debug, Clone)]
pub struct SweepResult {
    /// Sorted by index.
    pub computed: Vec<GsvPair>,
    /// Computed index with the smallest `|θ|` (ties go to the larger index).
    pub crossing_index: Option<usize>,
    /// `(index, θ)` for every computed index.
    pub theta: Vec<(usize, f64)>,
    pub cost: SweepCost,
    pub filters: Vec<FilterSpec>,
}

impl SweepResult {
    pub fn indices(&self) -> Vec<usize> {
        self.computed.iter().map(|q| q.index).collect()
    }
}

/// Index of the smallest `|θ|`, ties broken toward the larger index.
pub fn equal_significance_index(theta: &[(usize, f64)]) -> Option<usize> {
    let best = theta.iter().map(|&(_, t)| t.abs()).fold(f64::INFINITY, f64::min);
    theta.iter().filter(|&&(_, t)| t.abs() <= best + THETA_TIE_TOL).map(|&(i, _)| i).max()
}

/// Antisymmetric angular distance `arctan(α/β) − π/4` in `[−π/4, π/4]`.
///
/// Written as `½(atan2(α, β) − atan2(β, α))` so swapping `α` and `β` negates
/// the result exactly; `β = 0` gives `+π/4`, `α = 0` gives `−π/4`.
pub fn angular_distance(pair: &GsvPair) -> f64 {
    0.5 * (pair.alpha.atan2(pair.beta) - pair.beta.atan2(pair.alpha))
}

/// Solve one request from scratch.
pub fn dispatch(req: &SolveRequest) -> Result<GsvPair> {
    let solver = GsvSolver::new(req.pair.clone(), req.config)?;
    solver.dispatch(req.index, req.method).map(|s| s.pair)
}

/// Sweep a pair from scratch.
pub fn sweep(pair: &GrassmanPair, method: Method, config: SolverConfig) -> Result<SweepResult> {
    GsvSolver::new(pair.clone(), config)?.sweep(method)
}
