//! Small dense kernels shared by the solvers.
//!
//! Everything works on `DMatrix<Complex64>`; real inputs are embedded with
//! zero imaginary part.

use nalgebra::{DMatrix, DVector};
use num_complex::Complex64;
use rand::Rng;
use rand_distr::StandardNormal;

pub type CMat = DMatrix<Complex64>;
pub type CVec = DVector<Complex64>;


/// Embed a real matrix into the complex field.
pub fn complexify(real: &DMatrix<f64>) -> CMat {
    real.map(|x| Complex64::new(x, 0.0))
}

/// Real part of `tr(Yᴴ X)`, the metric used on tangent spaces.
pub fn inner(x: &CMat, y: &CMat) -> f64 {
    x.iter().zip(y.iter()).map(|(a, b)| (b.conj() * a).re).sum()
}

pub fn fro_norm(x: &CMat) -> f64 {
    x.iter().map(|z| z.norm_sqr()).sum::<f64>().sqrt()
}

pub fn vec_norm(x: &CVec) -> f64 {
    x.iter().map(|z| z.norm_sqr()).sum::<f64>().sqrt()
}

/// Real part of the trace of a square matrix.
pub fn trace_re(x: &CMat) -> f64 {
    (0..x.nrows().min(x.ncols())).map(|k| x[(k, k)].re).sum()
}

/// Eigenvalues of a Hermitian matrix in descending order.
pub fn hermitian_eigenvalues_desc(h: &CMat) -> Vec<f64> {
    let mut vals: Vec<f64> = hermitize(h).symmetric_eigenvalues().iter().copied().collect();
    vals.sort_by(|a, b| b.total_cmp(a));
    vals
}

/// Eigen-pairs of a Hermitian matrix, sorted by descending eigenvalue.
pub fn hermitian_eigen_desc(h: &CMat) -> (Vec<f64>, CMat) {
    let eig = hermitize(h).symmetric_eigen();
    let n = eig.eigenvalues.len();
    let mut order: Vec<usize> = (0..n).collect();
    order.sort_by(|&a, &b| eig.eigenvalues[b].total_cmp(&eig.eigenvalues[a]));
    let vals = order.iter().map(|&k| eig.eigenvalues[k]).collect();
    let vecs = CMat::from_fn(n, n, |r, c| eig.eigenvectors[(r, order[c])]);
    (vals, vecs)
}

/// `(H + Hᴴ)/2`, removing round-off asymmetry before an eigensolve.
pub fn hermitize(h: &CMat) -> CMat {
    (h + h.adjoint()) * Complex64::new(0.5, 0.0)
}

/// Singular values in descending order.
pub fn singular_values_desc(x: &CMat) -> Vec<f64> {
    if x.nrows() == 0 || x.ncols() == 0 {
        return Vec::new();
    }
    let mut vals: Vec<f64> = x.clone().svd(false, false).singular_values.iter().copied().collect();
    vals.sort_by(|a, b| b.total_cmp(a));
    vals
}

/// Thin QR factorization `X = Q R` with `Q` of width `ncols(X)` and the
/// diagonal of `R` made real and nonnegative.
pub fn thin_qr(x: &CMat) -> (CMat, CMat) {
    let qr = x.clone().qr();
    let mut q = qr.q();
    let mut r = qr.r();
    for k in 0..r.nrows().min(r.ncols()) {
        let d = r[(k, k)];
        let mag = d.norm();
        if mag > 0.0 {
            let phase = d / mag;
            // Q diag(phase) · diag(phase)⁻¹ R leaves the product unchanged.
            let qcol = q.column(k) * phase;
            q.set_column(k, &qcol);
            let rrow = r.row(k) * phase.conj();
            r.set_row(k, &rrow);
        }
    }
    (q, r)
}

/// Matrix with i.i.d. standard normal real entries.
pub fn gaussian_real<R: Rng + ?Sized>(rng: &mut R, rows: usize, cols: usize) -> DMatrix<f64> {
    DMatrix::from_fn(rows, cols, |_, _| rng.sample::<f64, _>(StandardNormal))
}

/// Matrix with i.i.d. standard complex normal entries.
pub fn gaussian_complex<R: Rng + ?Sized>(rng: &mut R, rows: usize, cols: usize) -> CMat {
    CMat::from_fn(rows, cols, |_, _| {
        Complex64::new(rng.sample::<f64, _>(StandardNormal), rng.sample::<f64, _>(StandardNormal))
    })
}

/// Random unit vector in `ℂⁿ`.
pub fn random_unit_vector<R: Rng + ?Sized>(rng: &mut R, n: usize) -> CVec {
    let v = gaussian_complex(rng, n, 1).column(0).into_owned();
    let nrm = vec_norm(&v);
    v / Complex64::new(nrm, 0.0)
}

/// `‖XᴴX − I‖_F`, the loss of orthonormality of the columns of `X`.
pub fn orthonormality_error(x: &CMat) -> f64 {
    let g = x.adjoint() * x;
    fro_norm(&(g - CMat::identity(x.ncols(), x.ncols())))
}

/// Thin SVD `X = U diag(σ) Vᴴ` with `σ` descending, by one-sided Jacobi.
///
/// nalgebra's vector-returning SVD can lose orthogonality of its factors on
/// tightly clustered spectra; Jacobi rotations stay accurate there.
/// For `X` of size m×c, `U` is m×min(m,c) and `V` is c×min(m,c).
pub fn svd_desc(x: &CMat) -> (Vec<f64>, CMat, CMat) {
    let (m, c) = x.shape();
    if m < c {
        let (s, u, v) = svd_desc(&x.adjoint());
        return (s, v, u);
    }
    let mut w = x.clone();
    let mut v = CMat::identity(c, c);
    let eps = f64::EPSILON;
    for _ in 0..JACOBI_SWEEPS {
        let mut rotated = false;
        for p in 0..c {
            for q in p + 1..c {
                let alpha = w.column(p).norm_squared();
                let beta = w.column(q).norm_squared();
                let gamma = w.column(p).dotc(&w.column(q));
                let g = gamma.norm();
                if g == 0.0 || g <= eps * (alpha * beta).sqrt() {
                    continue;
                }
                rotated = true;
                let phase = gamma / g;
                let zeta = (beta - alpha) / (2.0 * g);
                let t = zeta.signum() / (zeta.abs() + (1.0 + zeta * zeta).sqrt());
                let cs = 1.0 / (1.0 + t * t).sqrt();
                let sn = cs * t;
                for mat in [&mut w, &mut v] {
                    for r in 0..mat.nrows() {
                        let xp = mat[(r, p)];
                        let xq = mat[(r, q)] * phase.conj();
                        mat[(r, p)] = xp * cs - xq * sn;
                        mat[(r, q)] = xp * sn + xq * cs;
                    }
                }
            }
        }
        if !rotated {
            break;
        }
    }
    let norms: Vec<f64> = (0..c).map(|j| w.column(j).norm()).collect();
    let mut order: Vec<usize> = (0..c).collect();
    order.sort_by(|&a, &b| norms[b].total_cmp(&norms[a]));
    let s: Vec<f64> = order.iter().map(|&j| norms[j]).collect();
    let floor = s.first().copied().unwrap_or(0.0) * eps * (m as f64);
    let mut u = CMat::zeros(m, c);
    let mut vs = CMat::zeros(c, c);
    let mut basis: Vec<CVec> = Vec::with_capacity(c);
    let mut unit = 0;
    for (k, &j) in order.iter().enumerate() {
        vs.set_column(k, &v.column(j));
        let mut col = if s[k] > floor {
            w.column(j) / Complex64::new(s[k], 0.0)
        } else {
            // Null direction: complete U with a unit vector orthogonal to the rest.
            loop {
                let mut e = CVec::zeros(m);
                e[unit % m] = Complex64::new(1.0, 0.0);
                unit += 1;
                for b in &basis {
                    let coef = b.dotc(&e);
                    e.axpy(-coef, b, Complex64::new(1.0, 0.0));
                }
                if e.norm() > 0.5 || unit > 2 * m {
                    break e;
                }
            }
        };
        for b in &basis {
            let coef = b.dotc(&col);
            col.axpy(-coef, b, Complex64::new(1.0, 0.0));
        }
        let nrm = col.norm();
        col.unscale_mut(nrm);
        u.set_column(k, &col);
        basis.push(col);
    }
    (s, u, vs)
}

const JACOBI_SWEEPS: usize = 60;

#[cfg(test)]
mod tests {
    use super::*;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    #[test]
    fn jacobi_svd_handles_clusters() {
        let mut rng = ChaCha8Rng::seed_from_u64(9);
        let (q1, _) = thin_qr(&gaussian_complex(&mut rng, 12, 6));
        let (q2, _) = thin_qr(&gaussian_complex(&mut rng, 6, 6));
        let sig = [1.0, 1.0 + 1e-15, 1.0 - 1e-15, 0.9, 1e-9, 0.0];
        let d = CMat::from_diagonal(&CVec::from_iterator(6, sig.iter().map(|&x| Complex64::new(x, 0.0))));
        let x = &q1 * d * q2.adjoint();
        for a in [x.clone(), x.adjoint()] {
            let (s, u, v) = svd_desc(&a);
            let sd = CMat::from_diagonal(&CVec::from_iterator(s.len(), s.iter().map(|&x| Complex64::new(x, 0.0))));
            assert!(fro_norm(&(&u * sd * v.adjoint() - &a)) < 1e-14);
            assert!(orthonormality_error(&u) < 1e-14 && orthonormality_error(&v) < 1e-14);
            assert!(s.windows(2).all(|w| w[0] >= w[1]));
            assert!((s[3] - 0.9).abs() < 1e-14 && (s[4] - 1e-9).abs() < 1e-14);
        }
    }

    #[test]
    fn thin_qr_has_nonnegative_real_diagonal() {
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        let x = gaussian_complex(&mut rng, 9, 4);
        let (q, r) = thin_qr(&x);
        assert_eq!(q.shape(), (9, 4));
        assert!(orthonormality_error(&q) < 1e-13);
        for k in 0..4 {
            assert!(r[(k, k)].im.abs() < 1e-14 && r[(k, k)].re > 0.0);
        }
        assert!(fro_norm(&(&q * &r - &x)) < 1e-12 * fro_norm(&x));
    }

    #[test]
    fn eigen_sorted_descending() {
        let h = complexify(&DMatrix::from_diagonal(&DVector::from_vec(vec![1.0, 3.0, 2.0])));
        let (vals, vecs) = hermitian_eigen_desc(&h);
        assert_eq!(vals, vec![3.0, 2.0, 1.0]);
        assert!((vecs[(1, 0)].norm() - 1.0).abs() < 1e-14);
    }
}
