//! Golub–Kahan bidiagonalization and the partial SVD built on it.
//!
//! Starting from a unit vector `v₁`, the recurrence
//!
//! ```text
//! r_k = E v_k − β_{k−1} u_{k−1},   α_k = ‖r_k‖,   u_k = r_k / α_k
//! p_k = Eᴴ u_k − α_k v_k,          β_k = ‖p_k‖,   v_{k+1} = p_k / β_k
//! ```
//!
//! produces orthonormal `U_k`, `V_k` and an upper bidiagonal `B_k` with
//!
//! ```text
//! E V_k = U_k B_k,    Eᴴ U_k = V_k B_kᴴ + p_k e_kᵀ.
//! ```
//!
//! Full reorthogonalization (two Gram–Schmidt passes) keeps `U_k`, `V_k`
//! orthonormal to working precision. Ritz triplets come from a dense SVD of
//! the small `k×k` matrix `B_k`.

use nalgebra::DMatrix;
use num_complex::Complex64;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use crate::error::{Error, Result};
use crate::linalg::{self, CMat, CVec};

pub const DEFAULT_SVD_TOL: f64 = 1e-12;
/// Breakdown threshold relative to the estimated `‖E‖`.
pub const BREAKDOWN_RTOL: f64 = 1e-14;

const POLISH_PASSES: usize = 8;

#[derive(Debug, Clone)]
pub struct BidiagFactorization {
    /// `m×k`
    pub u: CMat,
    /// `n×k`
    pub v: CMat,
    /// `α̂_1 … α̂_k`
    pub diag: Vec<f64>,
    /// `β̂_1 … β̂_{k−1}`
    pub superdiag: Vec<f64>,
    /// `p_k`, the unnormalized next right vector.
    pub residual_p: CVec,
    pub k: usize,
    /// The recurrence stopped early on a zero `α̂` or `β̂`.
    pub breakdown: bool,
}

impl BidiagFactorization {
    /// Dense `k×k` upper bidiagonal `B_k`.
    pub fn bidiagonal(&self) -> DMatrix<f64> {
        let mut b = DMatrix::zeros(self.k, self.k);
        for (j, &a) in self.diag.iter().enumerate() {
            b[(j, j)] = a;
        }
        for (j, &s) in self.superdiag.iter().enumerate() {
            b[(j, j + 1)] = s;
        }
        b
    }

    /// `(‖E V − U B‖, ‖Eᴴ U − V Bᴴ − p e_kᵀ‖)`.
    pub fn identity_residuals(&self, e: &CMat) -> (f64, f64) {
        let b = linalg::complexify(&self.bidiagonal());
        let first = linalg::fro_norm(&(e * &self.v - &self.u * &b));
        let mut second = e.adjoint() * &self.u - &self.v * b.adjoint();
        if self.k > 0 {
            let mut col = second.column_mut(self.k - 1);
            col -= &self.residual_p;
        }
        (first, linalg::fro_norm(&second))
    }
}

/// How the recurrence reacts to a zero `α̂` or `β̂`.
#[derive(Clone, Copy, PartialEq, Eq)]
enum OnBreakdown {
    Stop,
    /// Continue with a fresh random vector orthogonal to the current basis.
    Restart,
}

/// Recurrence state that can be extended step by step.
struct Lanczos<'a> {
    e: &'a CMat,
    reorth: bool,
    tol: f64,
    u: Vec<CVec>,
    v: Vec<CVec>,
    diag: Vec<f64>,
    superdiag: Vec<f64>,
    /// Next right vector, already normalized, if the recurrence can continue.
    next_v: Option<CVec>,
    /// Coupling between the last column and `next_v` (0 after a restart).
    pending_beta: f64,
    residual_p: CVec,
    breakdown: bool,
    rng: ChaCha8Rng,
}

fn orthogonalize(x: &mut CVec, basis: &[CVec]) {
    for _ in 0..2 {
        for b in basis {
            let coef = b.dotc(x);
            x.axpy(-coef, b, Complex64::new(1.0, 0.0));
        }
    }
}

/// Random unit vector orthogonal to `basis`, or `None` if the basis is complete.
fn fresh_vector(rng: &mut ChaCha8Rng, dim: usize, basis: &[CVec]) -> Option<CVec> {
    if basis.len() >= dim {
        return None;
    }
    for _ in 0..8 {
        let mut x = linalg::random_unit_vector(rng, dim);
        orthogonalize(&mut x, basis);
        let nrm = linalg::vec_norm(&x);
        if nrm > 1e-8 {
            return Some(x / Complex64::new(nrm, 0.0));
        }
    }
    fresh_vector(rng, dim, basis)
}

/// Unit vector in the range of `op` orthogonal to `basis`; falls back to a
/// plain random vector once that range is exhausted. Staying inside the range
/// keeps restarted Krylov spaces free of null-space directions.
fn fresh_range_vector(rng: &mut ChaCha8Rng, op: &CMat, basis: &[CVec]) -> Option<CVec> {
    let dim = op.nrows();
    if basis.len() >= dim {
        return None;
    }
    for _ in 0..2 {
        let w = linalg::random_unit_vector(rng, op.ncols());
        let mut x = op * w;
        let before = linalg::vec_norm(&x);
        orthogonalize(&mut x, basis);
        let nrm = linalg::vec_norm(&x);
        if before > 0.0 && nrm > 1e-6 * before {
            return Some(x / Complex64::new(nrm, 0.0));
        }
    }
    fresh_vector(rng, dim, basis)
}

impl<'a> Lanczos<'a> {
    fn new(e: &'a CMat, v1: CVec, reorth: bool, tol: f64, seed: u64) -> Self {
        let n = e.ncols();
        Self {
            e,
            reorth,
            tol,
            u: Vec::new(),
            v: Vec::new(),
            diag: Vec::new(),
            superdiag: Vec::new(),
            next_v: Some(v1),
            pending_beta: 0.0,
            residual_p: CVec::zeros(n),
            breakdown: false,
            rng: ChaCha8Rng::seed_from_u64(seed),
        }
    }

    fn k(&self) -> usize {
        self.diag.len()
    }

    /// One step of the recurrence. Returns false when no step was taken.
    fn step(&mut self, mode: OnBreakdown) -> bool {
        let (m, n) = self.e.shape();
        if self.k() >= m.min(n) {
            return false;
        }
        let Some(v) = self.next_v.take() else {
            return false;
        };
        let beta_prev = self.pending_beta;
        let mut r = self.e * &v;
        if let Some(u_prev) = self.u.last() {
            r.axpy(Complex64::new(-beta_prev, 0.0), u_prev, Complex64::new(1.0, 0.0));
        }
        if self.reorth {
            orthogonalize(&mut r, &self.u);
        }
        let mut alpha = linalg::vec_norm(&r);
        let u = if alpha > self.tol {
            r / Complex64::new(alpha, 0.0)
        } else {
            let fresh = match mode {
                OnBreakdown::Stop => None,
                OnBreakdown::Restart => fresh_range_vector(&mut self.rng, self.e, &self.u),
            };
            match fresh {
                Some(u) => {
                    alpha = 0.0;
                    u
                }
                None => {
                    // v is dropped; the previous p stays the residual.
                    self.breakdown = true;
                    return false;
                }
            }
        };
        if self.k() > 0 {
            self.superdiag.push(beta_prev);
        }
        let mut p = self.e.adjoint() * &u;
        p.axpy(Complex64::new(-alpha, 0.0), &v, Complex64::new(1.0, 0.0));
        self.v.push(v);
        self.u.push(u);
        self.diag.push(alpha);
        if self.reorth {
            orthogonalize(&mut p, &self.v);
        }
        let beta = linalg::vec_norm(&p);
        if beta > self.tol {
            self.next_v = Some(&p / Complex64::new(beta, 0.0));
            self.pending_beta = beta;
        } else {
            match mode {
                OnBreakdown::Stop => self.breakdown = true,
                OnBreakdown::Restart => {
                    self.next_v = fresh_range_vector(&mut self.rng, &self.e.adjoint(), &self.v);
                    self.pending_beta = 0.0;
                }
            }
        }
        self.residual_p = p;
        true
    }

    fn extend_to(&mut self, k: usize, mode: OnBreakdown) {
        while self.k() < k {
            if !self.step(mode) {
                break;
            }
        }
    }

    fn factorization(&self) -> BidiagFactorization {
        let (m, n) = self.e.shape();
        let cols = |vs: &[CVec], dim: usize| {
            let mut out = CMat::zeros(dim, vs.len());
            for (j, x) in vs.iter().enumerate() {
                out.set_column(j, x);
            }
            out
        };
        BidiagFactorization {
            u: cols(&self.u, m),
            v: cols(&self.v, n),
            diag: self.diag.clone(),
            superdiag: self.superdiag.clone(),
            residual_p: self.residual_p.clone(),
            k: self.k(),
            breakdown: self.breakdown,
        }
    }
}

/// Run `k` steps of Golub–Kahan bidiagonalization on `E` from `v1`.
///
/// A zero `α̂` or `β̂` ends the recurrence early; the returned factorization
/// then has fewer columns and `breakdown` set.
pub fn golub_kahan(e: &CMat, v1: &CVec, k: usize, reorth: bool) -> Result<BidiagFactorization> {
    let (m, n) = e.shape();
    if v1.len() != n {
        return Err(Error::DimensionMismatch(format!("start vector has length {}, expected {n}", v1.len())));
    }
    if (linalg::vec_norm(v1) - 1.0).abs() > 1e-12 {
        return Err(Error::InvalidConfig("start vector must have unit 2-norm".into()));
    }
    if k == 0 || k > m.min(n) {
        return Err(Error::InvalidDims(format!("k = {k} must lie in 1..={}", m.min(n))));
    }
    let tol = BREAKDOWN_RTOL * norm_estimate(e, 0);
    let mut lanczos = Lanczos::new(e, v1.clone(), reorth, tol, 0);
    lanczos.extend_to(k, OnBreakdown::Stop);
    Ok(lanczos.factorization())
}

/// SVD of the bidiagonal factor: `Fᵀ B G = diag(Γ)` with `Γ` descending.
pub fn bidiagonal_svd(f: &BidiagFactorization) -> (Vec<f64>, DMatrix<f64>, DMatrix<f64>) {
    dense_svd_sorted(&f.bidiagonal())
}

fn dense_svd_sorted(b: &DMatrix<f64>) -> (Vec<f64>, DMatrix<f64>, DMatrix<f64>) {
    let k = b.nrows();
    if k == 0 {
        return (Vec::new(), DMatrix::zeros(0, 0), DMatrix::zeros(0, 0));
    }
    let (gamma, u, v) = linalg::svd_desc(&linalg::complexify(b));
    let fk = u.map(|z| z.re);
    let gk = v.map(|z| z.re);
    (gamma, fk, gk)
}

/// Estimate `‖E‖₂` from a few power iterations on `EᴴE`.
pub fn norm_estimate(e: &CMat, seed: u64) -> f64 {
    let n = e.ncols();
    if n == 0 || e.nrows() == 0 {
        return 0.0;
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed ^ 0x9e37_79b9_7f4a_7c15);
    let mut x = linalg::random_unit_vector(&mut rng, n);
    let mut est = 0.0;
    for _ in 0..10 {
        let y = e * &x;
        est = linalg::vec_norm(&y);
        let z = e.adjoint() * y;
        let nz = linalg::vec_norm(&z);
        if nz == 0.0 {
            break;
        }
        x = z / Complex64::new(nz, 0.0);
    }
    est
}

/// Leading singular triplets of a matrix.
#[derive(Debug, Clone)]
pub struct PartialSvd {
    /// Descending.
    pub values: Vec<f64>,
    /// `m×j`
    pub left: CMat,
    /// `n×j`
    pub right: CMat,
    pub converged_flags: Vec<bool>,
    /// Krylov dimension used.
    pub k: usize,
}

impl PartialSvd {
    pub fn converged_count(&self) -> usize {
        self.converged_flags.iter().filter(|&&c| c).count()
    }
}

/// The `count` largest singular triplets of `E` by Golub–Kahan–Lanczos.
///
/// Starts at `k = count + 10` and doubles up to `max_k` (`None`: `min(m, n)`)
/// until every wanted triplet has `‖E v − σ u‖ + ‖Eᴴ u − σ v‖` below
/// `svd_tol · ‖E‖`. Breakdowns restart with a random vector orthogonal to the
/// current basis.
///
/// A single Krylov sequence sees only one copy of a repeated singular value,
/// so the converged triplets are locked and the deflated matrix
/// `E(I − YYᴴ)` is probed for a larger value that was missed; any such value
/// replaces the smallest locked one and the probe repeats.
pub fn partial_singular(e: &CMat, count: usize, svd_tol: f64, max_k: Option<usize>, seed: u64) -> Result<PartialSvd> {
    let (m, n) = e.shape();
    let full = m.min(n);
    if count == 0 || count > full {
        return Err(Error::InvalidDims(format!("count = {count} must lie in 1..={full}")));
    }
    if m < n {
        // Work on the tall orientation: the recurrence then never has to
        // keep its right vectors out of a null space.
        let flipped = partial_singular(&e.adjoint(), count, svd_tol, max_k, seed);
        let swap = |r: PartialSvd| PartialSvd { left: r.right, right: r.left, ..r };
        return match flipped {
            Ok(r) => Ok(swap(r)),
            Err(Error::SvdNotConverged(r)) => Err(Error::SvdNotConverged(Box::new(swap(*r)))),
            Err(other) => Err(other),
        };
    }
    let est = norm_estimate(e, seed);
    if est == 0.0 {
        return Ok(PartialSvd {
            values: vec![0.0; count],
            left: CMat::zeros(m, 0),
            right: CMat::zeros(n, 0),
            converged_flags: vec![true; count],
            k: 0,
        }
        .pad_zero_triplets(m, n, count));
    }
    let abs_tol = svd_tol * est;
    let mut locked = lanczos_triplets(e, count, abs_tol, max_k, seed, est)?;
    // With all n right vectors locked the decomposition is complete.
    if count == n {
        return Ok(locked);
    }
    let mut recovered = false;
    for round in 1..=count as u64 {
        let y = &locked.right;
        let deflated = e - (e * y) * y.adjoint();
        // Inside a cluster the probe's vector can stall short of the tolerance
        // while its value is already exact to that residual; the locked set is
        // re-polished against E below, so the value is all that is needed here.
        let probe = match lanczos_triplets(&deflated, 1, abs_tol, None, seed.wrapping_add(round), est) {
            Ok(r) => r,
            Err(Error::SvdNotConverged(r)) => *r,
            Err(other) => return Err(other),
        };
        locked.k += probe.k;
        let smallest = locked.values[count - 1];
        if probe.values[0] <= smallest + abs_tol {
            break;
        }
        log::debug!("partial svd: recovered a missed copy of {:.6e}", probe.values[0]);
        let pos = locked.values.iter().position(|&v| v < probe.values[0]).unwrap_or(count - 1);
        let insert = |x: &CMat, col: CVec| {
            let mut out = x.clone().insert_column(pos, Complex64::new(0.0, 0.0));
            out.set_column(pos, &col);
            out.remove_column(count)
        };
        locked.left = insert(&locked.left, probe.left.column(0).into_owned());
        locked.right = insert(&locked.right, probe.right.column(0).into_owned());
        locked.values.insert(pos, probe.values[0]);
        locked.values.truncate(count);
        recovered = true;
    }
    if recovered {
        locked = polish(e, &locked.right, count, abs_tol, locked.k);
    }
    if locked.converged_flags.iter().all(|&c| c) {
        Ok(locked)
    } else {
        Err(Error::SvdNotConverged(Box::new(locked)))
    }
}

/// Block Krylov refinement of approximate right vectors `y`: the search space
/// grows by EᴴE times the newest block until the leading triplets converge.
fn polish(e: &CMat, y: &CMat, count: usize, abs_tol: f64, k: usize) -> PartialSvd {
    let n = e.ncols();
    let mut basis: Vec<CVec> = Vec::with_capacity(n);
    let grow = |basis: &mut Vec<CVec>, block: Vec<CVec>| -> Vec<CVec> {
        let mut added = Vec::new();
        for mut x in block {
            let before = linalg::vec_norm(&x);
            orthogonalize(&mut x, basis);
            let nrm = linalg::vec_norm(&x);
            if basis.len() < n && nrm > 1e-10 * before {
                x.unscale_mut(nrm);
                basis.push(x.clone());
                added.push(x);
            }
        }
        added
    };
    let mut block = grow(&mut basis, y.column_iter().map(|c| c.into_owned()).collect());
    let mut result = rayleigh_ritz(e, &CMat::from_columns(&basis), count, abs_tol, k);
    for pass in 1..=POLISH_PASSES {
        if result.converged_flags.iter().all(|&c| c) || block.is_empty() {
            break;
        }
        let next = block.iter().map(|x| e.adjoint() * (e * x)).collect();
        block = grow(&mut basis, next);
        result = rayleigh_ritz(e, &CMat::from_columns(&basis), count, abs_tol, k + pass);
    }
    result
}

/// Leading `count` triplets of `e` within the span of the orthonormal columns of `q`.
fn rayleigh_ritz(e: &CMat, q: &CMat, count: usize, abs_tol: f64, k: usize) -> PartialSvd {
    let (mut values, u, v) = linalg::svd_desc(&(e * q));
    values.truncate(count);
    let left = u.columns(0, count).into_owned();
    let right = q * v.columns(0, count);
    let converged_flags = values
        .iter()
        .enumerate()
        .map(|(t, &s)| {
            let s = Complex64::new(s, 0.0);
            let r1 = e * right.column(t) - left.column(t) * s;
            let r2 = e.adjoint() * left.column(t) - right.column(t) * s;
            (r1.norm_squared() + r2.norm_squared()).sqrt() <= abs_tol
        })
        .collect();
    PartialSvd { values, left, right, converged_flags, k }
}

/// Plain Lanczos run on a tall matrix without the multiplicity check.
fn lanczos_triplets(e: &CMat, count: usize, abs_tol: f64, max_k: Option<usize>, seed: u64, est: f64) -> Result<PartialSvd> {
    let (m, n) = e.shape();
    let full = m.min(n);
    let max_k = max_k.unwrap_or(full).clamp(count, full);
    // Start inside the row space of E so restarts and deflation never waste
    // directions on its null space.
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let u0 = linalg::random_unit_vector(&mut rng, m);
    let mut v1 = e.adjoint() * u0;
    let norm = linalg::vec_norm(&v1);
    if norm > BREAKDOWN_RTOL * est {
        v1.unscale_mut(norm);
    } else {
        v1 = linalg::random_unit_vector(&mut rng, n);
    }
    let mut lanczos = Lanczos::new(e, v1, true, BREAKDOWN_RTOL * est, seed.wrapping_add(1));

    let mut target = (count + 10).min(max_k);
    loop {
        lanczos.extend_to(target, OnBreakdown::Restart);
        let fac = lanczos.factorization();
        let result = ritz_triplets(e, &fac, count, abs_tol);
        let done = result.converged_flags.iter().all(|&c| c);
        if done {
            return Ok(result);
        }
        if fac.k >= max_k || fac.k < target {
            return Err(Error::SvdNotConverged(Box::new(result)));
        }
        target = (target * 2).min(max_k);
    }
}

impl PartialSvd {
    fn pad_zero_triplets(mut self, m: usize, n: usize, count: usize) -> Self {
        self.left = CMat::zeros(m, count);
        self.right = CMat::zeros(n, count);
        self
    }
}

fn ritz_triplets(e: &CMat, fac: &BidiagFactorization, count: usize, abs_tol: f64) -> PartialSvd {
    let (gamma, fk, gk) = bidiagonal_svd(fac);
    let j = count.min(fac.k);
    let left = &fac.u * linalg::complexify(&fk.columns(0, j).into_owned());
    let right = &fac.v * linalg::complexify(&gk.columns(0, j).into_owned());
    let mut flags = Vec::with_capacity(count);
    for t in 0..j {
        let s = Complex64::new(gamma[t], 0.0);
        let y = right.column(t);
        let z = left.column(t);
        let r1 = e * y - z * s;
        let r2 = e.adjoint() * z - y * s;
        let res = (r1.norm_squared() + r2.norm_squared()).sqrt();
        flags.push(res <= abs_tol);
    }
    flags.resize(count, false);
    let mut values = gamma[..j].to_vec();
    values.resize(count, 0.0);
    PartialSvd { values, left, right, converged_flags: flags, k: fac.k }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::linalg::{complexify, gaussian_complex, orthonormality_error, singular_values_desc};
    use nalgebra::DVector;

    fn unit(n: usize, k: usize) -> CVec {
        let mut v = CVec::zeros(n);
        v[k] = Complex64::new(1.0, 0.0);
        v
    }

    #[test]
    fn reproduces_existing_bidiagonal() {
        let b = DMatrix::from_row_slice(3, 3, &[2.0, 0.5, 0.0, 0.0, 1.5, 0.3, 0.0, 0.0, 1.0]);
        let fac = golub_kahan(&complexify(&b), &unit(3, 0), 3, true).unwrap();
        assert_eq!(fac.k, 3);
        for j in 0..3 {
            assert!((fac.diag[j] - b[(j, j)]).abs() < 1e-14);
        }
        assert!((fac.superdiag[0] - 0.5).abs() < 1e-14 && (fac.superdiag[1] - 0.3).abs() < 1e-14);
        let id = CMat::identity(3, 3);
        assert!(linalg::fro_norm(&(&fac.u - &id)) < 1e-14);
        assert!(linalg::fro_norm(&(&fac.v - &id)) < 1e-14);
    }

    #[test]
    fn diagonal_breaks_down_after_one_step() {
        let e = complexify(&DMatrix::from_diagonal(&DVector::from_vec(vec![2.0, 1.0])));
        let fac = golub_kahan(&e, &unit(2, 0), 1, true).unwrap();
        assert_eq!(fac.diag, vec![2.0]);
        assert!(fac.superdiag.is_empty());
        assert!(linalg::vec_norm(&fac.residual_p) < 1e-15);
        let fac = golub_kahan(&e, &unit(2, 0), 2, true).unwrap();
        assert!(fac.breakdown);
        assert_eq!(fac.k, 1);
    }

    #[test]
    fn full_bidiagonalization_matches_dense_svd() {
        let mut rng = ChaCha8Rng::seed_from_u64(40);
        let e = gaussian_complex(&mut rng, 40, 30);
        let v1 = linalg::random_unit_vector(&mut rng, 30);
        let fac = golub_kahan(&e, &v1, 30, true).unwrap();
        let (gamma, _, _) = bidiagonal_svd(&fac);
        let dense = singular_values_desc(&e);
        for (g, d) in gamma.iter().zip(&dense) {
            assert!((g - d).abs() < 1e-10 * dense[0]);
        }
        let (r1, r2) = fac.identity_residuals(&e);
        assert!(r1 < 1e-10 * dense[0] && r2 < 1e-10 * dense[0]);
        assert!(orthonormality_error(&fac.u) < 1e-10 && orthonormality_error(&fac.v) < 1e-10);
    }

    #[test]
    fn bidiagonal_svd_examples() {
        let fac = |d: Vec<f64>, s: Vec<f64>| BidiagFactorization {
            u: CMat::zeros(0, 0),
            v: CMat::zeros(0, 0),
            k: d.len(),
            diag: d,
            superdiag: s,
            residual_p: CVec::zeros(0),
            breakdown: false,
        };
        let (g, f, gm) = bidiagonal_svd(&fac(vec![3.0, 1.0], vec![0.0]));
        assert_eq!(g, vec![3.0, 1.0]);
        assert!((f.abs() - DMatrix::identity(2, 2)).norm() < 1e-15);
        assert!((gm.abs() - DMatrix::identity(2, 2)).norm() < 1e-15);

        // [[1, 1], [0, 1]] has singular values (√5 ± 1)/2.
        let b = fac(vec![1.0, 1.0], vec![1.0]);
        let (g, f, gm) = bidiagonal_svd(&b);
        let s5 = 5f64.sqrt();
        assert!((g[0] - (s5 + 1.0) / 2.0).abs() < 1e-14);
        assert!((g[1] - (s5 - 1.0) / 2.0).abs() < 1e-14);
        let d = f.transpose() * b.bidiagonal() * gm;
        assert!((d - DMatrix::from_diagonal(&DVector::from_vec(g))).norm() < 1e-12 * 2.0);

        let (g, _, _) = bidiagonal_svd(&fac(vec![-0.5], vec![]));
        assert_eq!(g, vec![0.5]);
    }

    #[test]
    fn identities_hold_at_every_step() {
        let mut rng = ChaCha8Rng::seed_from_u64(41);
        let e = gaussian_complex(&mut rng, 25, 18);
        let v1 = linalg::random_unit_vector(&mut rng, 18);
        let norm = singular_values_desc(&e)[0];
        let mut prev: Vec<f64> = Vec::new();
        for k in 1..=18 {
            let fac = golub_kahan(&e, &v1, k, true).unwrap();
            let (r1, r2) = fac.identity_residuals(&e);
            assert!(r1 <= 1e-10 * norm && r2 <= 1e-10 * norm, "k = {k}");
            let (gamma, _, _) = bidiagonal_svd(&fac);
            // Ritz values grow with the Krylov space.
            for (j, p) in prev.iter().enumerate() {
                assert!(*p <= gamma[j] + 1e-12);
            }
            prev = gamma;
        }
    }

    #[test]
    fn partial_svd_of_padded_diagonal() {
        let mut d = DMatrix::zeros(8, 5);
        for (j, s) in [5.0, 4.0, 3.0, 2.0, 1.0].iter().enumerate() {
            d[(j, j)] = *s;
        }
        let res = partial_singular(&complexify(&d), 2, DEFAULT_SVD_TOL, None, 3).unwrap();
        assert!((res.values[0] - 5.0).abs() < 1e-12 && (res.values[1] - 4.0).abs() < 1e-12);
        assert!(res.converged_flags.iter().all(|&c| c));
    }

    #[test]
    fn partial_svd_full_spectrum() {
        let mut rng = ChaCha8Rng::seed_from_u64(42);
        let e = gaussian_complex(&mut rng, 20, 15);
        let res = partial_singular(&e, 15, DEFAULT_SVD_TOL, None, 1).unwrap();
        let dense = singular_values_desc(&e);
        for (a, b) in res.values.iter().zip(&dense) {
            assert!((a - b).abs() < 1e-10);
        }
    }

    #[test]
    fn partial_svd_triplet_residuals_and_seed_independence() {
        let mut rng = ChaCha8Rng::seed_from_u64(43);
        let e = gaussian_complex(&mut rng, 60, 45);
        let dense = singular_values_desc(&e);
        assert!(dense[5] - dense[6] > 1e-6);
        let a = partial_singular(&e, 6, DEFAULT_SVD_TOL, None, 1).unwrap();
        let b = partial_singular(&e, 6, DEFAULT_SVD_TOL, None, 99).unwrap();
        for t in 0..6 {
            assert!((a.values[t] - b.values[t]).abs() < 1e-8);
            let r = &e * a.right.column(t) - a.left.column(t) * Complex64::new(a.values[t], 0.0);
            assert!(r.norm() <= DEFAULT_SVD_TOL * dense[0] * 1.5);
        }
    }

    #[test]
    fn partial_svd_survives_invariant_start() {
        // A start vector inside a small invariant subspace forces a restart.
        let mut e = DMatrix::zeros(6, 6);
        for (j, s) in [1.0, 6.0, 5.0, 4.0, 3.0, 2.0].iter().enumerate() {
            e[(j, j)] = *s;
        }
        let e = complexify(&e);
        let tol = BREAKDOWN_RTOL * 6.0;
        let mut lanczos = Lanczos::new(&e, unit(6, 0), true, tol, 5);
        lanczos.extend_to(6, OnBreakdown::Restart);
        let fac = lanczos.factorization();
        assert_eq!(fac.k, 6);
        let (r1, r2) = fac.identity_residuals(&e);
        assert!(r1 < 1e-12 && r2 < 1e-12);
        let (gamma, _, _) = bidiagonal_svd(&fac);
        assert!((gamma[0] - 6.0).abs() < 1e-12);
    }

    #[test]
    fn invalid_arguments() {
        let e = CMat::identity(3, 3);
        assert!(golub_kahan(&e, &unit(3, 0), 0, true).is_err());
        assert!(golub_kahan(&e, &(unit(3, 0) * Complex64::new(2.0, 0.0)), 1, true).is_err());
        assert!(partial_singular(&e, 4, DEFAULT_SVD_TOL, None, 0).is_err());
    }

    #[test]
    fn repeated_values_are_all_found() {
        let mut rng = ChaCha8Rng::seed_from_u64(8);
        let (q, _) = linalg::thin_qr(&linalg::gaussian_complex(&mut rng, 9, 6));
        let (w, _) = linalg::thin_qr(&linalg::gaussian_complex(&mut rng, 6, 6));
        let sigma = [1.0, 1.0, 1.0, 1.0, 0.5, 0.2];
        let d = complexify(&DMatrix::from_diagonal(&DVector::from_column_slice(&sigma)));
        let e = &q * d * w.adjoint();
        for (mat, label) in [(e.clone(), "tall"), (e.adjoint(), "wide")] {
            let res = partial_singular(&mat, 5, DEFAULT_SVD_TOL, None, 2).unwrap();
            for (got, want) in res.values.iter().zip(&sigma) {
                assert!((got - want).abs() < 1e-12, "{label}: {:?}", res.values);
            }
            assert!(orthonormality_error(&res.right) < 1e-12);
        }
    }
}
