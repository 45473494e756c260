//! Matrix pairs, their generalized singular values, and the derived Gram
//! operators every solver path works from.
//!
//! For an `(m, p, n)` pair `{A, B}` with `[A; B]` of full column rank, write
//! `M = AᴴA + BᴴB`. The solvers never touch `A` and `B` directly; they use
//!
//! ```text
//! C = A M⁻¹ Aᴴ      (m×m, eigenvalues α²)
//! D = B M⁻¹ Bᴴ      (p×p, eigenvalues β²)
//! E = A M^(-1/2)    (m×n, singular values α)
//! F = B M^(-1/2)    (p×n, singular values β)
//! ```
//!
//! `E` and `F` are assembled from a thin QR factorization of the stack,
//! `[A; B] = Q R`. Since `M = RᴴR`, `E = Q_A · polar(R)` where `Q_A` is the
//! top block of `Q`, so the spectrum of `E` inherits the conditioning of the
//! stack instead of its square.

use nalgebra::{DMatrix, DVector};
use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::linalg::{self, CMat};

pub const DEFAULT_RANK_TOL: f64 = 1e-12;
pub const DEFAULT_PD_TOL: f64 = 1e-14;
/// `cond(M)` above this logs a warning.
pub const COND_WARN: f64 = 1e12;

/// Tolerance used when classifying `α = 1` / `α = 0` and checking `α² + β² = 1`.
pub const PAIR_TOL: f64 = 1e-10;

/// A validated `(m, p, n)` matrix pair: same column count, stacked matrix of
/// full column rank.
#[derive(Debug, Clone)]
pub struct GrassmanPair {
    a: CMat,
    b: CMat,
}

impl GrassmanPair {
    /// Validate with the default rank tolerance.
    pub fn new(a: CMat, b: CMat) -> Result<Self> {
        validate_gmp(a, b, DEFAULT_RANK_TOL)
    }

    pub fn from_real(a: &DMatrix<f64>, b: &DMatrix<f64>) -> Result<Self> {
        Self::new(linalg::complexify(a), linalg::complexify(b))
    }

    pub fn a(&self) -> &CMat {
        &self.a
    }

    pub fn b(&self) -> &CMat {
        &self.b
    }

    pub fn m(&self) -> usize {
        self.a.nrows()
    }

    pub fn p(&self) -> usize {
        self.b.nrows()
    }

    pub fn n(&self) -> usize {
        self.a.ncols()
    }

    pub fn dims(&self) -> (usize, usize, usize) {
        (self.m(), self.p(), self.n())
    }

    /// The pair with the roles of `A` and `B` exchanged.
    pub fn swapped(&self) -> Self {
        Self { a: self.b.clone(), b: self.a.clone() }
    }

    fn stacked(&self) -> CMat {
        stack(&self.a, &self.b)
    }
}

fn stack(a: &CMat, b: &CMat) -> CMat {
    let (m, p, n) = (a.nrows(), b.nrows(), a.ncols());
    let mut s = CMat::zeros(m + p, n);
    s.rows_mut(0, m).copy_from(a);
    s.rows_mut(m, p).copy_from(b);
    s
}

/// Check the pair conditions and wrap `{A, B}`.
pub fn validate_gmp(a: CMat, b: CMat, rank_tol: f64) -> Result<GrassmanPair> {
    if a.ncols() != b.ncols() {
        return Err(Error::DimensionMismatch(format!(
            "A has {} columns but B has {}",
            a.ncols(),
            b.ncols()
        )));
    }
    if a.nrows() == 0 || b.nrows() == 0 || a.ncols() == 0 {
        return Err(Error::InvalidDims(format!(
            "pair dimensions must be positive, got ({}, {}, {})",
            a.nrows(),
            b.nrows(),
            a.ncols()
        )));
    }
    if a.iter().chain(b.iter()).any(|z| !z.re.is_finite() || !z.im.is_finite()) {
        return Err(Error::InvalidDims("matrix entries must be finite".into()));
    }
    let n = a.ncols();
    let s = stack(&a, &b);
    if s.nrows() < n {
        return Err(Error::RankDeficient { ratio: 0.0, tol: rank_tol });
    }
    let (_, r) = linalg::thin_qr(&s);
    let sv = linalg::singular_values_desc(&r);
    let ratio = if sv[0] > 0.0 { sv[n - 1] / sv[0] } else { 0.0 };
    if ratio <= rank_tol {
        return Err(Error::RankDeficient { ratio, tol: rank_tol });
    }
    Ok(GrassmanPair { a, b })
}

/// One generalized singular value pair, normalized so `α² + β² = 1`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct GsvPair {
    pub index: usize,
    pub alpha: f64,
    pub beta: f64,
}

impl GsvPair {
    /// Build from `α`, deriving `β = √(1 − α²)` after clamping to `[0, 1]`.
    pub fn from_alpha(index: usize, alpha: f64) -> Self {
        let alpha = alpha.clamp(0.0, 1.0);
        Self { index, alpha, beta: (1.0 - alpha * alpha).max(0.0).sqrt() }
    }

    /// Build from `β`, deriving `α = √(1 − β²)`.
    pub fn from_beta(index: usize, beta: f64) -> Self {
        let beta = beta.clamp(0.0, 1.0);
        Self { index, alpha: (1.0 - beta * beta).max(0.0).sqrt(), beta }
    }

    pub fn normalization_error(&self) -> f64 {
        (self.alpha * self.alpha + self.beta * self.beta - 1.0).abs()
    }
}

/// The full ordered spectrum: `α` non-increasing, `β` non-decreasing.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GsvSpectrum {
    pub pairs: Vec<GsvPair>,
    /// Number of pairs with `α = 1`.
    pub r: usize,
    /// Number of interior pairs, `0 < α < 1`.
    pub s: usize,
}

impl GsvSpectrum {
    /// Sorts by descending `α`, reindexes from 1 and classifies `r`, `s`.
    pub fn from_pairs(mut pairs: Vec<GsvPair>) -> Self {
        pairs.sort_by(|x, y| y.alpha.total_cmp(&x.alpha));
        for (k, pair) in pairs.iter_mut().enumerate() {
            pair.index = k + 1;
        }
        let r = pairs.iter().filter(|q| q.alpha >= 1.0 - PAIR_TOL).count();
        let zeros = pairs.iter().filter(|q| q.alpha <= PAIR_TOL).count();
        let s = pairs.len().saturating_sub(r + zeros);
        Self { pairs, r, s }
    }

    pub fn n(&self) -> usize {
        self.pairs.len()
    }

    pub fn alphas(&self) -> Vec<f64> {
        self.pairs.iter().map(|q| q.alpha).collect()
    }

    pub fn betas(&self) -> Vec<f64> {
        self.pairs.iter().map(|q| q.beta).collect()
    }

    /// 1-based lookup.
    pub fn get(&self, index: usize) -> Option<&GsvPair> {
        index.checked_sub(1).and_then(|k| self.pairs.get(k))
    }

    /// Checks ordering and normalization within the given tolerance; returns
    /// a description of the first violation.
    pub fn check_invariants(&self, tol: f64) -> std::result::Result<(), String> {
        for w in self.pairs.windows(2) {
            if w[1].alpha > w[0].alpha + tol {
                return Err(format!("alpha increases at index {}", w[1].index));
            }
            if w[1].beta < w[0].beta - tol {
                return Err(format!("beta decreases at index {}", w[1].index));
            }
        }
        for q in &self.pairs {
            if q.normalization_error() > PAIR_TOL {
                return Err(format!("alpha^2 + beta^2 != 1 at index {}", q.index));
            }
        }
        if self.r + self.s > self.n() {
            return Err("r + s exceeds n".into());
        }
        Ok(())
    }
}

/// Operators derived from `M = AᴴA + BᴴB`.
#[derive(Debug, Clone)]
pub struct GramOperators {
    pub gram: CMat,
    pub gram_inv: CMat,
    pub gram_inv_sqrt: CMat,
    pub c: CMat,
    pub d: CMat,
    pub e: CMat,
    pub f: CMat,
    /// `λ_max(M) / λ_min(M)`.
    pub cond: f64,
}

impl GramOperators {
    pub fn m(&self) -> usize {
        self.e.nrows()
    }

    pub fn p(&self) -> usize {
        self.f.nrows()
    }

    pub fn n(&self) -> usize {
        self.e.ncols()
    }
}

/// Compute `M`, `M⁻¹`, `M^(-1/2)`, `C`, `D`, `E`, `F` for a validated pair.
pub fn gram_operators(pair: &GrassmanPair, pd_tol: f64) -> Result<GramOperators> {
    let (m, p, n) = pair.dims();
    let (q, r) = linalg::thin_qr(&pair.stacked());
    // R = X S Yᴴ, so M = RᴴR = Y S² Yᴴ.
    let (s, x, y) = linalg::svd_desc(&r);
    let s = DVector::from_vec(s);
    let s_max = s.max();
    let s_min = s.min();
    let ratio = if s_max > 0.0 { (s_min / s_max).powi(2) } else { 0.0 };
    if ratio <= pd_tol {
        return Err(Error::NotPositiveDefinite { ratio, tol: pd_tol });
    }
    let cond = 1.0 / ratio;
    if cond > COND_WARN {
        log::warn!("cond(A^H A + B^H B) = {cond:.3e}; generalized singular values may be inaccurate");
    }

    let scaled = |pow: i32| {
        let d = DVector::from_iterator(n, s.iter().map(|&v| Complex64::new(v.powi(pow), 0.0)));
        &y * CMat::from_diagonal(&d) * y.adjoint()
    };
    let gram = pair.a().adjoint() * pair.a() + pair.b().adjoint() * pair.b();
    let gram_inv = scaled(-2);
    let gram_inv_sqrt = scaled(-1);

    let polar = &x * y.adjoint();
    let e = q.rows(0, m) * &polar;
    let f = q.rows(m, p) * &polar;
    let c = linalg::hermitize(&(&e * e.adjoint()));
    let d = linalg::hermitize(&(&f * f.adjoint()));
    Ok(GramOperators { gram, gram_inv, gram_inv_sqrt, c, d, e, f, cond })
}

/// Which spectrum a filter isolates.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum FilterSide {
    Alpha,
    Beta,
}

/// One-variable (trace of a quadratic form) or two-variable (bilinear trace).
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum FilterVariant {
    OneVar,
    TwoVar,
}

/// Shape regime of the side the filter acts on.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum FilterRegime {
    /// `n ≤ m`
    TallA,
    /// `m < n`
    WideA,
    /// `n ≤ p`
    TallB,
    /// `p < n`
    WideB,
}

impl FilterRegime {
    pub fn for_side(side: FilterSide, m: usize, p: usize, n: usize) -> Self {
        match side {
            FilterSide::Alpha if n <= m => FilterRegime::TallA,
            FilterSide::Alpha => FilterRegime::WideA,
            FilterSide::Beta if n <= p => FilterRegime::TallB,
            FilterSide::Beta => FilterRegime::WideB,
        }
    }
}

/// Symbolic truncation filter: leading (`Alpha`) or trailing (`Beta`) identity
/// block inside a zero matrix.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct FilterSpec {
    pub index: usize,
    pub side: FilterSide,
    pub variant: FilterVariant,
    pub regime: FilterRegime,
}

impl FilterSpec {
    pub fn new(index: usize, side: FilterSide, variant: FilterVariant, m: usize, p: usize, n: usize) -> Self {
        Self { index, side, variant, regime: FilterRegime::for_side(side, m, p, n) }
    }

    /// Valid index range `(lo, hi)`; index 0 is always accepted as the empty filter.
    ///
    /// Beta filters admit `n + 1` (also empty) since the trailing sums are
    /// differenced against `index + 1`.
    pub fn index_range(&self, m: usize, p: usize, n: usize) -> (usize, usize) {
        match (self.side, self.regime) {
            (FilterSide::Alpha, FilterRegime::TallA) => (1, n),
            (FilterSide::Alpha, _) => (1, m),
            (FilterSide::Beta, FilterRegime::TallB) => (1, n + 1),
            (FilterSide::Beta, _) => (n - p + 1, n + 1),
        }
    }

    /// Number of ones in the materialized filter.
    pub fn block_size(&self, n: usize) -> usize {
        match (self.index, self.side) {
            (0, _) => 0,
            (i, FilterSide::Alpha) => i,
            (i, FilterSide::Beta) => (n + 1).saturating_sub(i),
        }
    }
}

/// Dense 0/1 materialization of a filter.
///
/// One-variable filters are square (`m×m` or `p×p`); two-variable filters are
/// the zero-padded `n×m`, `n×p`, `m×n` or `p×n` rectangles.
pub fn filter_matrix(spec: FilterSpec, m: usize, p: usize, n: usize) -> Result<DMatrix<f64>> {
    let consistent = match spec.regime {
        FilterRegime::TallA => spec.side == FilterSide::Alpha && n <= m,
        FilterRegime::WideA => spec.side == FilterSide::Alpha && m < n,
        FilterRegime::TallB => spec.side == FilterSide::Beta && n <= p,
        FilterRegime::WideB => spec.side == FilterSide::Beta && p < n,
    };
    if !consistent {
        return Err(Error::InvalidFilter(format!(
            "regime {:?} does not apply to side {:?} with (m, p, n) = ({m}, {p}, {n})",
            spec.regime, spec.side
        )));
    }
    let (lo, hi) = spec.index_range(m, p, n);
    if spec.index != 0 && !(lo..=hi).contains(&spec.index) {
        return Err(Error::IndexOutOfRange { index: spec.index, lo, hi });
    }

    let (rows, cols) = match (spec.variant, spec.regime) {
        (FilterVariant::OneVar, FilterRegime::TallA | FilterRegime::WideA) => (m, m),
        (FilterVariant::OneVar, _) => (p, p),
        (FilterVariant::TwoVar, FilterRegime::TallA) => (n, m),
        (FilterVariant::TwoVar, FilterRegime::TallB) => (n, p),
        (FilterVariant::TwoVar, FilterRegime::WideA) => (m, n),
        (FilterVariant::TwoVar, FilterRegime::WideB) => (p, n),
    };
    let mut out = DMatrix::zeros(rows, cols);
    let ones = spec.block_size(n);
    if ones == 0 {
        return Ok(out);
    }
    // (row, col) of the first one; the block runs down the diagonal from there.
    let start = match (spec.variant, spec.regime) {
        (_, FilterRegime::TallA | FilterRegime::WideA) => (0, 0),
        // diag(O_{p-n}, O_{i-1}, I_{n-i+1}) and diag(O_{p-n+i-1}, I_{n-i+1})
        (FilterVariant::OneVar, _) => {
            let k = p + spec.index - 1 - n;
            (k, k)
        }
        // (O_{n×(p-n)}, diag(O_{i-1}, I_{n-i+1}))
        (FilterVariant::TwoVar, FilterRegime::TallB) => (spec.index - 1, p - n + spec.index - 1),
        // (O_{p×(n-p)}, diag(O_{p-n+i-1}, I_{n-i+1}))
        (FilterVariant::TwoVar, _) => {
            let k = p + spec.index - 1 - n;
            (k, n - p + k)
        }
    };
    for t in 0..ones {
        out[(start.0 + t, start.1 + t)] = 1.0;
    }
    Ok(out)
}

/// Dense reference spectrum: `α_i = σ_i(E)`, `β_i = √(1 − α_i²)`.
pub fn dense_gsv_oracle(pair: &GrassmanPair) -> Result<GsvSpectrum> {
    let ops = gram_operators(pair, DEFAULT_PD_TOL)?;
    Ok(dense_spectrum(&ops))
}

pub fn dense_spectrum(ops: &GramOperators) -> GsvSpectrum {
    let n = ops.n();
    let mut sv = linalg::singular_values_desc(&ops.e);
    sv.resize(n, 0.0);
    let pairs = sv.iter().enumerate().map(|(k, &a)| GsvPair::from_alpha(k + 1, a)).collect();
    GsvSpectrum::from_pairs(pairs)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::linalg::{complexify, fro_norm, gaussian_complex};
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    fn diag(v: &[f64]) -> DMatrix<f64> {
        DMatrix::from_diagonal(&DVector::from_column_slice(v))
    }

    fn random_pair(m: usize, p: usize, n: usize, seed: u64) -> GrassmanPair {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        GrassmanPair::new(gaussian_complex(&mut rng, m, n), gaussian_complex(&mut rng, p, n)).unwrap()
    }

    fn close(x: &CMat, y: &CMat, tol: f64) -> bool {
        fro_norm(&(x - y)) <= tol
    }

    #[test]
    fn identity_pair_is_valid() {
        let id = DMatrix::<f64>::identity(2, 2);
        let pair = GrassmanPair::from_real(&id, &id).unwrap();
        assert_eq!(pair.dims(), (2, 2, 2));
    }

    #[test]
    fn rank_deficient_stack_rejected() {
        let row = DMatrix::from_row_slice(1, 2, &[1.0, 1.0]);
        let err = GrassmanPair::from_real(&row, &row).unwrap_err();
        assert!(matches!(err, Error::RankDeficient { .. }), "{err}");
    }

    #[test]
    fn column_mismatch_rejected() {
        let a = DMatrix::<f64>::identity(2, 2);
        let b = DMatrix::<f64>::identity(3, 3);
        assert!(matches!(GrassmanPair::from_real(&a, &b), Err(Error::DimensionMismatch(_))));
    }

    #[test]
    fn gram_operators_identity_pair() {
        let id = DMatrix::<f64>::identity(2, 2);
        let pair = GrassmanPair::from_real(&id, &id).unwrap();
        let ops = gram_operators(&pair, DEFAULT_PD_TOL).unwrap();
        let h = std::f64::consts::FRAC_1_SQRT_2;
        assert!(close(&ops.gram, &complexify(&(id.clone() * 2.0)), 1e-14));
        assert!(close(&ops.gram_inv_sqrt, &complexify(&(id.clone() * h)), 1e-14));
        assert!(close(&ops.c, &complexify(&(id.clone() * 0.5)), 1e-14));
        assert!(close(&ops.d, &complexify(&(id.clone() * 0.5)), 1e-14));
        assert!(close(&ops.e, &complexify(&(id.clone() * h)), 1e-14));
        assert!(close(&ops.f, &complexify(&(id * h)), 1e-14));
        assert!((ops.cond - 1.0).abs() < 1e-12);
    }

    #[test]
    fn gram_operators_diagonal_pair() {
        let pair = GrassmanPair::from_real(&diag(&[3.0, 1.0]), &diag(&[4.0, 1.0])).unwrap();
        let ops = gram_operators(&pair, DEFAULT_PD_TOL).unwrap();
        let h = std::f64::consts::FRAC_1_SQRT_2;
        assert!(close(&ops.gram, &complexify(&diag(&[25.0, 2.0])), 1e-13));
        assert!(close(&ops.e, &complexify(&diag(&[0.6, h])), 1e-14));
        assert!(close(&ops.f, &complexify(&diag(&[0.8, h])), 1e-14));
        assert!(close(&ops.gram_inv, &complexify(&diag(&[1.0 / 25.0, 0.5])), 1e-15));
        assert!((ops.cond - 12.5).abs() < 1e-10);
    }

    #[test]
    fn gram_operators_match_definitions_on_random_pair() {
        let pair = random_pair(50, 40, 10, 11);
        let ops = gram_operators(&pair, DEFAULT_PD_TOL).unwrap();
        let n = pair.n();
        let id = CMat::identity(n, n);
        let ee_ff = ops.e.adjoint() * &ops.e + ops.f.adjoint() * &ops.f;
        assert!(close(&ee_ff, &id, 1e-10));
        // Direct definitions through the inverse square root.
        let e_direct = pair.a() * &ops.gram_inv_sqrt;
        let c_direct = pair.a() * &ops.gram_inv * pair.a().adjoint();
        assert!(fro_norm(&(&ops.e - e_direct)) <= 1e-10 * fro_norm(&ops.e));
        assert!(fro_norm(&(&ops.c - c_direct)) <= 1e-10 * fro_norm(&ops.c));
        assert!(close(&(&ops.gram * &ops.gram_inv), &id, 1e-10));
    }

    #[test]
    fn singular_values_of_e_and_f_are_complementary() {
        for (seed, dims) in [(1, (30, 25, 12)), (2, (5, 20, 8)), (3, (20, 4, 9))] {
            let pair = random_pair(dims.0, dims.1, dims.2, seed);
            let ops = gram_operators(&pair, DEFAULT_PD_TOL).unwrap();
            let n = pair.n();
            let mut se = linalg::singular_values_desc(&ops.e);
            let mut sf = linalg::singular_values_desc(&ops.f);
            se.resize(n, 0.0);
            sf.resize(n, 0.0);
            for i in 0..n {
                let lhs = se[i] * se[i] + sf[n - 1 - i] * sf[n - 1 - i];
                assert!((lhs - 1.0).abs() < 1e-10, "seed {seed} i {i}: {lhs}");
            }
            // Eigenvalues of C are the squared singular values of E, zero padded.
            let ev = linalg::hermitian_eigenvalues_desc(&ops.c);
            for (k, lam) in ev.iter().enumerate() {
                let want = if k < n { se[k] * se[k] } else { 0.0 };
                assert!((lam - want).abs() < 1e-10);
            }
        }
    }

    #[test]
    fn filter_examples() {
        let q = filter_matrix(FilterSpec::new(2, FilterSide::Alpha, FilterVariant::OneVar, 4, 4, 3), 4, 4, 3).unwrap();
        assert_eq!(q, diag(&[1.0, 1.0, 0.0, 0.0]));
        let pmat = filter_matrix(FilterSpec::new(2, FilterSide::Beta, FilterVariant::OneVar, 4, 4, 3), 4, 4, 3).unwrap();
        assert_eq!(pmat, diag(&[0.0, 0.0, 1.0, 1.0]));
        for side in [FilterSide::Alpha, FilterSide::Beta] {
            for variant in [FilterVariant::OneVar, FilterVariant::TwoVar] {
                let z = filter_matrix(FilterSpec::new(0, side, variant, 4, 5, 3), 4, 5, 3).unwrap();
                assert!(z.iter().all(|&x| x == 0.0));
            }
        }
    }

    #[test]
    fn two_var_filter_shapes() {
        // 𝒢_2 for (m, n) = (5, 3): (diag(1, 1, 0), O_{3×2})
        let g = filter_matrix(FilterSpec::new(2, FilterSide::Alpha, FilterVariant::TwoVar, 5, 4, 3), 5, 4, 3).unwrap();
        assert_eq!(g.shape(), (3, 5));
        assert_eq!(g.sum(), 2.0);
        assert_eq!((g[(0, 0)], g[(1, 1)]), (1.0, 1.0));
        // ℋ_2 for (p, n) = (4, 3): (O_{3×1}, diag(0, 1, 1))
        let h = filter_matrix(FilterSpec::new(2, FilterSide::Beta, FilterVariant::TwoVar, 5, 4, 3), 5, 4, 3).unwrap();
        assert_eq!(h.shape(), (3, 4));
        assert_eq!((h[(1, 2)], h[(2, 3)], h.sum()), (1.0, 1.0, 2.0));
        // 𝒲_3 for (p, n) = (2, 4): (O_{2×2}, I_2)
        let w = filter_matrix(FilterSpec::new(3, FilterSide::Beta, FilterVariant::TwoVar, 5, 2, 4), 5, 2, 4).unwrap();
        assert_eq!(w.shape(), (2, 4));
        assert_eq!(w.sum(), 2.0);
        assert_eq!((w[(0, 2)], w[(1, 3)]), (1.0, 1.0));
        // 𝒮_i for m < n
        let s = filter_matrix(FilterSpec::new(1, FilterSide::Alpha, FilterVariant::TwoVar, 2, 5, 4), 2, 5, 4).unwrap();
        assert_eq!(s.shape(), (2, 4));
        assert_eq!((s[(0, 0)], s.sum()), (1.0, 1.0));
    }

    #[test]
    fn filter_index_and_regime_errors() {
        let bad = FilterSpec::new(5, FilterSide::Alpha, FilterVariant::OneVar, 4, 4, 3);
        assert!(matches!(filter_matrix(bad, 4, 4, 3), Err(Error::IndexOutOfRange { .. })));
        // p < n: beta indices ≤ n − p are structural zeros, not filters.
        let bad = FilterSpec::new(1, FilterSide::Beta, FilterVariant::OneVar, 5, 2, 4);
        assert!(matches!(filter_matrix(bad, 5, 2, 4), Err(Error::IndexOutOfRange { .. })));
        let wrong = FilterSpec { index: 1, side: FilterSide::Alpha, variant: FilterVariant::OneVar, regime: FilterRegime::TallB };
        assert!(matches!(filter_matrix(wrong, 4, 4, 3), Err(Error::InvalidFilter(_))));
    }

    #[test]
    fn one_var_filters_are_projections_with_block_trace() {
        for (m, p, n) in [(6, 5, 4), (3, 7, 5), (7, 2, 4)] {
            for side in [FilterSide::Alpha, FilterSide::Beta] {
                let probe = FilterSpec::new(0, side, FilterVariant::OneVar, m, p, n);
                let (lo, hi) = probe.index_range(m, p, n);
                for i in lo..=hi {
                    let spec = FilterSpec { index: i, ..probe };
                    let f = filter_matrix(spec, m, p, n).unwrap();
                    assert_eq!(&f * &f, f);
                    assert_eq!(f.trace(), spec.block_size(n) as f64);
                    let tv = filter_matrix(FilterSpec { variant: FilterVariant::TwoVar, ..spec }, m, p, n).unwrap();
                    // Partial isometry: F Fᵀ F = F, and as many ones as the block.
                    assert_eq!(&tv * tv.transpose() * &tv, tv);
                    assert_eq!(tv.sum(), spec.block_size(n) as f64);
                }
            }
        }
    }

    #[test]
    fn one_var_filters_give_ky_fan_traces() {
        // tr(Aᴴ Φᴴ Q_i Φ A M⁻¹) with Φ from the eigenvectors of C attains
        // α_1² + … + α_i²; random unitaries never exceed it.
        let pair = random_pair(6, 5, 4, 21);
        let ops = gram_operators(&pair, DEFAULT_PD_TOL).unwrap();
        let spec = dense_spectrum(&ops);
        let (_, vecs) = linalg::hermitian_eigen_desc(&ops.c);
        let phi = vecs.adjoint();
        let mut rng = ChaCha8Rng::seed_from_u64(5);
        for i in 1..=4 {
            let q = complexify(&filter_matrix(FilterSpec::new(i, FilterSide::Alpha, FilterVariant::OneVar, 6, 5, 4), 6, 5, 4).unwrap());
            let objective = |u: &CMat| {
                let t = pair.a().adjoint() * u.adjoint() * &q * u * pair.a() * &ops.gram_inv;
                linalg::trace_re(&t)
            };
            let best: f64 = spec.pairs[..i].iter().map(|x| x.alpha * x.alpha).sum();
            assert!((objective(&phi) - best).abs() < 1e-10);
            for _ in 0..20 {
                let (u, _) = linalg::thin_qr(&gaussian_complex(&mut rng, 6, 6));
                assert!(objective(&u) <= best + 1e-10);
            }
        }
    }

    #[test]
    fn oracle_closed_forms() {
        let id = DMatrix::<f64>::identity(2, 2);
        let spec = dense_gsv_oracle(&GrassmanPair::from_real(&id, &id).unwrap()).unwrap();
        let h = std::f64::consts::FRAC_1_SQRT_2;
        for q in &spec.pairs {
            assert!((q.alpha - h).abs() < 1e-15 && (q.beta - h).abs() < 1e-15);
        }
        let spec = dense_gsv_oracle(&GrassmanPair::from_real(&diag(&[3.0, 1.0]), &diag(&[4.0, 1.0])).unwrap()).unwrap();
        assert!((spec.pairs[0].alpha - h).abs() < 1e-15);
        assert!((spec.pairs[1].alpha - 0.6).abs() < 1e-15);
        assert!((spec.pairs[1].beta - 0.8).abs() < 1e-15);
        assert_eq!((spec.r, spec.s), (0, 2));
    }

    #[test]
    fn oracle_spectrum_satisfies_invariants_and_independent_f() {
        for (seed, dims) in [(7, (12, 9, 6)), (8, (3, 9, 6)), (9, (9, 2, 6))] {
            let pair = random_pair(dims.0, dims.1, dims.2, seed);
            let ops = gram_operators(&pair, DEFAULT_PD_TOL).unwrap();
            let spec = dense_spectrum(&ops);
            spec.check_invariants(1e-10).unwrap();
            let n = pair.n();
            let mut sf = linalg::singular_values_desc(&ops.f);
            sf.resize(n, 0.0);
            for (k, q) in spec.pairs.iter().enumerate() {
                assert!((q.beta - sf[n - 1 - k]).abs() < 1e-8, "beta from F disagrees");
            }
        }
    }

    #[test]
    fn structural_counts() {
        // m < n forces trailing α = 0; p < n forces leading β = 0 (α = 1).
        let spec = dense_gsv_oracle(&random_pair(2, 6, 5, 4)).unwrap();
        assert!(spec.pairs[2..].iter().all(|q| q.alpha < 1e-12));
        let spec = dense_gsv_oracle(&random_pair(6, 2, 5, 4)).unwrap();
        assert_eq!(spec.r, 3);
    }
}
