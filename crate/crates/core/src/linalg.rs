//! Small dense linear-algebra helpers shared by the generators, estimators,
//! and reference solver. Everything here is O(d^2)-O(d^3) on modest d.

use nalgebra::{DMatrix, DVector};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};

use crate::error::{Error, Result};

/// Haar-distributed random orthogonal matrix: QR of a Gaussian matrix with
/// the sign of diag(R) fixed so the distribution is exactly uniform.
pub(crate) fn haar_orthogonal(d: usize, rng: &mut ChaCha8Rng) -> DMatrix<f64> {
    let g = DMatrix::from_fn(d, d, |_, _| {
        let v: f64 = StandardNormal.sample(rng);
        v
    });
    let qr = g.qr();
    let r = qr.r();
    let mut q = qr.q();
    for j in 0..d {
        if r[(j, j)] < 0.0 {
            for i in 0..d {
                q[(i, j)] = -q[(i, j)];
            }
        }
    }
    q
}

/// Largest generalized eigenvalue of (A, B) for symmetric A and symmetric
/// positive definite B, via lambda_max(L^{-1} A L^{-T}) with B = L L^T.
pub(crate) fn max_generalized_eigenvalue(a: &DMatrix<f64>, b: &DMatrix<f64>) -> Result<f64> {
    let chol = b
        .clone()
        .cholesky()
        .ok_or_else(|| Error::Singular("B in the generalized eigenproblem".into()))?;
    let l = chol.l();
    // M = L^{-1} A L^{-T}
    let mut m = a.clone();
    // solve L X = A (column-wise forward substitution)
    l.solve_lower_triangular_mut(&mut m);
    let mut mt = m.transpose();
    l.solve_lower_triangular_mut(&mut mt);
    let sym = (&mt + mt.transpose()) * 0.5;
    let eig = sym.symmetric_eigen();
    Ok(eig
        .eigenvalues
        .iter()
        .fold(f64::NEG_INFINITY, |acc, &v| acc.max(v)))
}

/// Solves H x = g for symmetric PSD H on its numerical range: eigenvalues
/// below `rel_cutoff * lambda_max` are treated as zero.
pub(crate) fn pseudo_solve(h: &DMatrix<f64>, g: &DVector<f64>, rel_cutoff: f64) -> DVector<f64> {
    let eig = h.clone().symmetric_eigen();
    let lam_max = eig
        .eigenvalues
        .iter()
        .fold(0.0f64, |acc, &v| acc.max(v.abs()));
    let cutoff = rel_cutoff * lam_max;
    let coeffs = eig.eigenvectors.transpose() * g;
    let mut scaled = DVector::zeros(g.len());
    for i in 0..g.len() {
        if eig.eigenvalues[i] > cutoff {
            scaled[i] = coeffs[i] / eig.eigenvalues[i];
        }
    }
    &eig.eigenvectors * scaled
}

/// Orthonormal basis of the range of a symmetric PSD matrix, keeping
/// eigenvectors with eigenvalue > rel_cutoff * lambda_max.
pub(crate) fn range_basis(m: &DMatrix<f64>, rel_cutoff: f64) -> DMatrix<f64> {
    let eig = m.clone().symmetric_eigen();
    let lam_max = eig
        .eigenvalues
        .iter()
        .fold(0.0f64, |acc, &v| acc.max(v.abs()));
    let cutoff = rel_cutoff * lam_max;
    let keep: Vec<usize> = (0..m.nrows())
        .filter(|&i| eig.eigenvalues[i] > cutoff)
        .collect();
    let mut basis = DMatrix::zeros(m.nrows(), keep.len());
    for (col, &i) in keep.iter().enumerate() {
        basis.set_column(col, &eig.eigenvectors.column(i));
    }
    basis
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand_chacha::rand_core::SeedableRng;

    #[test]
    fn haar_matrix_is_orthogonal_and_deterministic() {
        let mut rng = ChaCha8Rng::seed_from_u64(1);
        let q = haar_orthogonal(6, &mut rng);
        let qtq = q.transpose() * &q;
        let id = DMatrix::<f64>::identity(6, 6);
        assert!((qtq - id).abs().max() < 1e-12);

        let mut rng2 = ChaCha8Rng::seed_from_u64(1);
        let q2 = haar_orthogonal(6, &mut rng2);
        assert_eq!(q, q2);
    }

    #[test]
    fn generalized_eigenvalue_diagonal_case() {
        let a = DMatrix::from_diagonal(&DVector::from_vec(vec![3.0, 2.0]));
        let b = DMatrix::from_diagonal(&DVector::from_vec(vec![1.0, 4.0]));
        let lam = max_generalized_eigenvalue(&a, &b).unwrap();
        assert!((lam - 3.0).abs() < 1e-12);
    }

    #[test]
    fn pseudo_solve_recovers_on_range() {
        // rank-1 H: solve only in the spanned direction
        let u = DVector::from_vec(vec![1.0, 1.0]).normalize();
        let h = 2.0 * &u * u.transpose();
        let g = &u * 3.0;
        let x = pseudo_solve(&h, &g, 1e-12);
        assert!(((&h * &x) - g).abs().max() < 1e-12);
    }
}
