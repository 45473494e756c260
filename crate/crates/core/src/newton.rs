//! Newton's method on the Grassmann manifold for the Ky Fan trace problem
//!
//! ```text
//! max f(Φ) = ½ tr(Φᴴ C Φ)   over Φ ∈ St(m, i)
//! ```
//!
//! The objective only depends on `span(Φ)`, so the iteration lives on
//! `Grass(m, i)` with horizontal tangent vectors `ΦᴴZ = 0`, the metric
//! `⟨Z₁, Z₂⟩ = Re tr(Z₂ᴴ Z₁)` and the projection `P_Φ Z = (I − ΦΦᴴ) Z`.
//!
//! Each outer step solves the Newton equation
//!
//! ```text
//! P_Φ(C Z − Z ΦᴴCΦ) = −P_Φ CΦ
//! ```
//!
//! with truncated CG, accepts the direction if it meets the inexactness and
//! sufficient-ascent conditions, otherwise falls back to the projected
//! gradient, and then backtracks along `π(Φ + ρˡ Z)` with an Armijo test.
//!
//! The implementation is written as maximization: the sufficient-ascent
//! condition reads `⟨P_Φ CΦ, Z⟩ ≥ η_k ⟨Z, Z⟩`, which is the descent form
//! `⟨grad(−f), Z⟩ ≤ −η_k ⟨Z, Z⟩` for the negated objective.
//!
//! Reported values are `tr(ΦᴴCΦ)`, i.e. `2 f(Φ)`.
//!
//! From a random frame the Newton operator is indefinite until the iterate
//! is roughly aligned with the dominant subspace, and until then every step
//! is a gradient fallback whose rate degrades with the eigenvalue gap at `i`.
//! The default start therefore refines the seeded random frame by one
//! Rayleigh–Ritz pass over a short block Krylov space; [`FrameInit::Random`]
//! keeps the bare random frame.

use num_complex::Complex64;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::linalg::{self, CMat};

/// Entry-wise tolerance on `ΦᴴΦ − I` for a point to count as feasible.
pub const FEASIBILITY_TOL: f64 = 1e-12;
/// Maximum number of step halvings before the line search gives up.
pub const MAX_HALVINGS: usize = 60;

/// An `m×i` frame with orthonormal columns.
#[derive(Debug, Clone, PartialEq)]
pub struct StiefelPoint {
    phi: CMat,
}

impl StiefelPoint {
    pub fn new(phi: CMat) -> Result<Self> {
        let err = max_gram_deviation(&phi);
        if err > FEASIBILITY_TOL {
            return Err(Error::InvalidConfig(format!(
                "frame columns are not orthonormal (max |PhiᴴPhi - I| = {err:.3e})"
            )));
        }
        Ok(Self { phi })
    }

    /// A seeded random frame: complex Gaussian matrix orthonormalized by QR.
    pub fn random(m: usize, i: usize, seed: u64) -> Self {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let (q, _) = linalg::thin_qr(&linalg::gaussian_complex(&mut rng, m, i));
        Self { phi: q }
    }

    pub fn matrix(&self) -> &CMat {
        &self.phi
    }

    pub fn into_matrix(self) -> CMat {
        self.phi
    }

    pub fn rows(&self) -> usize {
        self.phi.nrows()
    }

    pub fn width(&self) -> usize {
        self.phi.ncols()
    }

    /// The leading `k` columns.
    pub fn leading(&self, k: usize) -> StiefelPoint {
        StiefelPoint { phi: self.phi.columns(0, k).into_owned() }
    }

    pub fn feasibility_error(&self) -> f64 {
        max_gram_deviation(&self.phi)
    }
}

fn max_gram_deviation(phi: &CMat) -> f64 {
    let g = phi.adjoint() * phi;
    let mut worst: f64 = 0.0;
    for r in 0..g.nrows() {
        for c in 0..g.ncols() {
            let target = if r == c { 1.0 } else { 0.0 };
            worst = worst.max((g[(r, c)] - Complex64::new(target, 0.0)).norm());
        }
    }
    worst
}

/// A horizontal tangent vector at some frame.
#[derive(Debug, Clone, PartialEq)]
pub struct TangentVector {
    z: CMat,
}

impl TangentVector {
    pub fn matrix(&self) -> &CMat {
        &self.z
    }

    pub fn into_matrix(self) -> CMat {
        self.z
    }

    pub fn norm(&self) -> f64 {
        linalg::fro_norm(&self.z)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct NewtonConfig {
    /// Inexactness cap `η ∈ (0, 1)`.
    pub eta: f64,
    /// Backtracking factor `ρ ∈ (0, 1)`.
    pub rho: f64,
    /// Armijo slope `σ ∈ (0, 1/2]`.
    pub sigma: f64,
    /// Stop when `‖P_Φ CΦ‖ ≤ grad_tol`.
    pub grad_tol: f64,
    pub max_outer: usize,
    /// Inner CG iteration cap; `None` means `m · i`.
    pub max_cg: Option<usize>,
    /// Seed of the random initial frame.
    pub seed: u64,
    pub init: FrameInit,
}

/// How the first frame is chosen when no warm start is given.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum FrameInit {
    /// The seeded random frame as is.
    Random,
    /// Ritz vectors of `C` on `span{Φ₀, CΦ₀, C²Φ₀, …}` with `Φ₀` the seeded
    /// random frame, using at most [`krylov_columns`] basis vectors.
    #[default]
    Krylov,
}

/// Size of the block Krylov space used by [`FrameInit::Krylov`].
pub fn krylov_columns(m: usize, i: usize) -> usize {
    m.min((6 * i).max(2 * i + 40))
}

impl Default for NewtonConfig {
    fn default() -> Self {
        Self { eta: 0.1, rho: 0.5, sigma: 1e-4, grad_tol: 1e-6, max_outer: 100, max_cg: None, seed: 0, init: FrameInit::Krylov }
    }
}

impl NewtonConfig {
    pub fn validate(&self) -> Result<()> {
        let open_unit = |x: f64| x > 0.0 && x < 1.0;
        if !open_unit(self.eta) {
            return Err(Error::InvalidConfig(format!("eta = {} must lie in (0, 1)", self.eta)));
        }
        if !open_unit(self.rho) {
            return Err(Error::InvalidConfig(format!("rho = {} must lie in (0, 1)", self.rho)));
        }
        if !(self.sigma > 0.0 && self.sigma <= 0.5) {
            return Err(Error::InvalidConfig(format!("sigma = {} must lie in (0, 1/2]", self.sigma)));
        }
        if !(self.grad_tol > 0.0) {
            return Err(Error::InvalidConfig("grad_tol must be positive".into()));
        }
        Ok(())
    }
}

#[derive(Debug, Clone)]
pub struct NewtonReport {
    /// Final frame; columns are Ritz vectors of `C` ordered by decreasing Ritz value.
    pub point: StiefelPoint,
    /// `tr(ΦᴴCΦ)` at the final frame.
    pub value: f64,
    pub grad_norm: f64,
    pub outer_iters: usize,
    pub cg_iters_total: usize,
    pub fallback_steps: usize,
    pub converged: bool,
    /// Objective after every accepted iterate, starting with the initial frame.
    pub history: Vec<f64>,
}

/// `P_Φ Z = (I − ΦΦᴴ) Z`.
pub fn tangent_project(phi: &StiefelPoint, z: &CMat) -> TangentVector {
    TangentVector { z: project(phi.matrix(), z) }
}

fn project(phi: &CMat, z: &CMat) -> CMat {
    z - phi * (phi.adjoint() * z)
}

/// Euclidean derivative `CΦ` of `½ tr(ΦᴴCΦ)`.
pub fn euclidean_gradient(c: &CMat, phi: &StiefelPoint) -> CMat {
    c * phi.matrix()
}

/// `tr(ΦᴴCΦ)`.
pub fn trace_value(c: &CMat, phi: &StiefelPoint) -> f64 {
    linalg::trace_re(&(phi.matrix().adjoint() * c * phi.matrix()))
}

/// Result of one inner solve.
#[derive(Debug, Clone)]
pub struct NewtonStep {
    pub direction: TangentVector,
    pub used_fallback: bool,
    pub cg_iters: usize,
}

/// Local Newton operator at a frame: `Z ↦ P_Φ(Z S − C Z)` with `S = ΦᴴCΦ`,
/// the Hessian of `−f` restricted to the horizontal space.
struct NewtonOperator<'a> {
    c: &'a CMat,
    phi: &'a CMat,
    s: CMat,
}

impl<'a> NewtonOperator<'a> {
    fn new(c: &'a CMat, phi: &'a CMat) -> Self {
        let s = phi.adjoint() * c * phi;
        Self { c, phi, s }
    }

    fn apply(&self, z: &CMat) -> CMat {
        project(self.phi, &(z * &self.s - self.c * z))
    }
}

/// Approximately solve the Newton equation at `phi` with truncated CG.
///
/// The returned direction satisfies
/// `‖P_Φ(CZ − ZΦᴴCΦ) + P_Φ CΦ‖ ≤ η_k ‖P_Φ CΦ‖` and
/// `⟨P_Φ CΦ, Z⟩ ≥ η_k ⟨Z, Z⟩` with `η_k = min(η, ‖P_Φ CΦ‖)`, or else it is
/// the projected gradient `P_Φ CΦ` and `used_fallback` is set.
pub fn newton_cg_step(c: &CMat, phi: &StiefelPoint, config: &NewtonConfig) -> NewtonStep {
    let (m, i) = phi.matrix().shape();
    let grad = project(phi.matrix(), &(c * phi.matrix()));
    let gnorm = linalg::fro_norm(&grad);
    if gnorm == 0.0 {
        return NewtonStep { direction: TangentVector { z: grad }, used_fallback: false, cg_iters: 0 };
    }
    let eta_k = config.eta.min(gnorm);
    let op = NewtonOperator::new(c, phi.matrix());
    let max_cg = config.max_cg.unwrap_or(m * i).max(1);

    let mut z = CMat::zeros(m, i);
    let mut r = grad.clone();
    let mut d = r.clone();
    let mut rr = linalg::inner(&r, &r);
    let mut iters = 0;
    while iters < max_cg {
        let hd = op.apply(&d);
        let curvature = linalg::inner(&d, &hd);
        iters += 1;
        if curvature <= 0.0 {
            break;
        }
        let step = Complex64::new(rr / curvature, 0.0);
        z += &d * step;
        r -= &hd * step;
        let rr_next = linalg::inner(&r, &r);
        if rr_next.sqrt() <= eta_k * gnorm {
            break;
        }
        d = &r + &d * Complex64::new(rr_next / rr, 0.0);
        rr = rr_next;
    }

    let residual = linalg::fro_norm(&(&grad - op.apply(&z)));
    let residual_ok = residual <= eta_k * gnorm;
    let ascent_ok = linalg::inner(&grad, &z) >= eta_k * linalg::inner(&z, &z);
    if residual_ok && ascent_ok {
        NewtonStep { direction: TangentVector { z }, used_fallback: false, cg_iters: iters }
    } else {
        NewtonStep { direction: TangentVector { z: grad }, used_fallback: true, cg_iters: iters }
    }
}

/// Projection retraction `π(X)`: an orthonormal basis of `span(X)` from the
/// thin QR factor with nonnegative diagonal in `R`.
pub fn retract_pi(x: &CMat) -> Result<StiefelPoint> {
    let (q, r) = linalg::thin_qr(x);
    let sv = linalg::singular_values_desc(&r);
    if let (Some(&hi), Some(&lo)) = (sv.first(), sv.last()) {
        let ratio = if hi > 0.0 { lo / hi } else { 0.0 };
        if ratio <= 1e-14 || sv.len() < x.ncols() {
            return Err(Error::RankDeficientStep { ratio });
        }
    }
    Ok(StiefelPoint { phi: q })
}

/// Rotate the frame so its columns are Ritz vectors in decreasing order.
fn ritz_order(c: &CMat, phi: &CMat) -> CMat {
    let s = phi.adjoint() * c * phi;
    let (_, vecs) = linalg::hermitian_eigen_desc(&s);
    phi * vecs
}

/// Orthonormalize `x` against `basis` (two Gram–Schmidt passes); false if
/// nothing independent is left.
fn independent_direction(x: &mut linalg::CVec, basis: &[linalg::CVec]) -> bool {
    let before = linalg::vec_norm(x);
    for _ in 0..2 {
        for b in basis {
            let coef = b.dotc(x);
            x.axpy(-coef, b, Complex64::new(1.0, 0.0));
        }
    }
    let after = linalg::vec_norm(x);
    if before == 0.0 || after <= 1e-10 * before {
        return false;
    }
    x.unscale_mut(after);
    true
}

/// Leading Ritz vectors of `C` on the block Krylov space started at `phi0`.
fn krylov_frame(c: &CMat, phi0: &CMat) -> CMat {
    let (m, i) = phi0.shape();
    let budget = krylov_columns(m, i);
    let mut basis: Vec<linalg::CVec> = phi0.column_iter().map(|col| col.into_owned()).collect();
    let mut block: Vec<linalg::CVec> = basis.clone();
    while basis.len() < budget && !block.is_empty() {
        let mut next = Vec::with_capacity(block.len());
        for x in &block {
            if basis.len() >= budget {
                break;
            }
            let mut w = c * x;
            if independent_direction(&mut w, &basis) {
                basis.push(w.clone());
                next.push(w);
            }
        }
        block = next;
    }
    let q = CMat::from_columns(&basis);
    let t = linalg::hermitize(&(q.adjoint() * c * &q));
    let (_, vecs) = linalg::hermitian_eigen_desc(&t);
    let (phi, _) = linalg::thin_qr(&(&q * vecs.columns(0, i)));
    phi
}

/// Maximize `tr(ΦᴴCΦ)` over `i`-dimensional subspaces.
///
/// With `i = 0` the value is 0 and no iteration runs. A warm start must have
/// exactly `i` columns; otherwise a seeded random frame is used.
pub fn newton_grassmann(
    c: &CMat,
    i: usize,
    config: &NewtonConfig,
    warm_start: Option<&StiefelPoint>,
) -> Result<NewtonReport> {
    config.validate()?;
    let m = c.nrows();
    if c.ncols() != m {
        return Err(Error::DimensionMismatch(format!("operator must be square, got {}x{}", m, c.ncols())));
    }
    if i > m {
        return Err(Error::InvalidDims(format!("frame width {i} exceeds dimension {m}")));
    }
    if i == 0 {
        return Ok(NewtonReport {
            point: StiefelPoint { phi: CMat::zeros(m, 0) },
            value: 0.0,
            grad_norm: 0.0,
            outer_iters: 0,
            cg_iters_total: 0,
            fallback_steps: 0,
            converged: true,
            history: vec![0.0],
        });
    }
    let mut point = match warm_start {
        Some(w) if w.rows() == m && w.width() == i => w.clone(),
        Some(w) => {
            return Err(Error::DimensionMismatch(format!(
                "warm start is {}x{}, expected {m}x{i}",
                w.rows(),
                w.width()
            )))
        }
        None => {
            let start = StiefelPoint::random(m, i, config.seed);
            match config.init {
                FrameInit::Random => start,
                FrameInit::Krylov => StiefelPoint { phi: krylov_frame(c, start.matrix()) },
            }
        }
    };

    let mut value = trace_value(c, &point);
    let mut history = vec![value];
    let mut cg_total = 0;
    let mut fallbacks = 0;
    let mut outer = 0;
    let mut grad_norm;
    loop {
        let grad = project(point.matrix(), &(c * point.matrix()));
        grad_norm = linalg::fro_norm(&grad);
        if grad_norm <= config.grad_tol || outer >= config.max_outer {
            break;
        }
        outer += 1;

        let step = newton_cg_step(c, &point, config);
        cg_total += step.cg_iters;
        if step.used_fallback {
            fallbacks += 1;
        }
        let z = step.direction.into_matrix();
        let slope = linalg::inner(&grad, &z);

        // f = value / 2, so the Armijo test on f is halved on the trace scale.
        let mut t = 1.0;
        let mut accepted = None;
        for _ in 0..=MAX_HALVINGS {
            let trial = retract_pi(&(point.matrix() + &z * Complex64::new(t, 0.0)))?;
            let trial_value = trace_value(c, &trial);
            if 0.5 * trial_value >= 0.5 * value + config.sigma * t * slope {
                accepted = Some((trial, trial_value));
                break;
            }
            t *= config.rho;
        }
        let Some((next, next_value)) = accepted else {
            return Err(Error::LineSearchStalled { halvings: MAX_HALVINGS });
        };
        point = next;
        value = next_value;
        history.push(value);
    }

    let phi = ritz_order(c, point.matrix());
    let point = StiefelPoint { phi };
    let value = trace_value(c, &point);
    let converged = grad_norm <= config.grad_tol;
    let report = NewtonReport {
        point,
        value,
        grad_norm,
        outer_iters: outer,
        cg_iters_total: cg_total,
        fallback_steps: fallbacks,
        converged,
        history,
    };
    if converged {
        Ok(report)
    } else {
        Err(Error::NewtonNotConverged(Box::new(report)))
    }
}
