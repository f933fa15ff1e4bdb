//! Small dense linear-algebra helpers shared across modules.

use nalgebra::{DMatrix, DVector};
use num_complex::Complex64;
use rand::Rng;
use rand_distr::{Distribution, StandardNormal};

use crate::error::{Error, Result};

pub type CMat = DMatrix<Complex64>;

const EIG_EPS: f64 = 1e-15;
const EIG_MAX_ITER: usize = 10_000;

pub fn gaussian_vec<R: Rng + ?Sized>(rng: &mut R, n: usize) -> Vec<f64> {
    (0..n).map(|_| StandardNormal.sample(rng)).collect()
}

pub fn gaussian_matrix<R: Rng + ?Sized>(rng: &mut R, rows: usize, cols: usize) -> DMatrix<f64> {
    DMatrix::from_fn(rows, cols, |_, _| StandardNormal.sample(rng))
}

pub fn gaussian_cmatrix<R: Rng + ?Sized>(rng: &mut R, rows: usize, cols: usize) -> CMat {
    DMatrix::from_fn(rows, cols, |_, _| {
        Complex64::new(StandardNormal.sample(rng), StandardNormal.sample(rng))
    })
}

/// Uniformly distributed point on the unit sphere of `ℝⁿ`.
pub fn random_unit<R: Rng + ?Sized>(rng: &mut R, n: usize) -> Vec<f64> {
    loop {
        let v = gaussian_vec(rng, n);
        let norm = norm2(&v);
        if norm > 1e-12 {
            return v.iter().map(|x| x / norm).collect();
        }
    }
}

/// Uniformly distributed unit vector in `ℂⁿ`.
pub fn random_cunit<R: Rng + ?Sized>(rng: &mut R, n: usize) -> DVector<Complex64> {
    loop {
        let v = DVector::from_fn(n, |_, _| {
            Complex64::new(StandardNormal.sample(rng), StandardNormal.sample(rng))
        });
        let norm = v.norm();
        if norm > 1e-12 {
            return v.unscale(norm);
        }
    }
}

/// Haar-distributed orthogonal matrix (full `O(n)`, both determinant signs).
pub fn haar_orthogonal<R: Rng + ?Sized>(rng: &mut R, n: usize) -> DMatrix<f64> {
    let g = gaussian_matrix(rng, n, n);
    let qr = g.qr();
    let mut q = qr.q();
    let r = qr.r();
    for j in 0..n {
        if r[(j, j)] < 0.0 {
            q.column_mut(j).neg_mut();
        }
    }
    q
}

pub fn norm2(v: &[f64]) -> f64 {
    v.iter().map(|x| x * x).sum::<f64>().sqrt()
}

pub fn norm1(v: &[f64]) -> f64 {
    v.iter().map(|x| x.abs()).sum()
}

pub fn norm_inf(v: &[f64]) -> f64 {
    v.iter().fold(0.0, |m, x| m.max(x.abs()))
}

pub fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

/// Eigen-decomposition of a real symmetric matrix, eigenvalues in descending
/// order with matching eigenvector columns.
pub fn sym_eigen_desc(m: &DMatrix<f64>) -> Result<(Vec<f64>, DMatrix<f64>)> {
    let sym = (m + m.transpose()) * 0.5;
    let eig = nalgebra::SymmetricEigen::try_new(sym, EIG_EPS, EIG_MAX_ITER)
        .ok_or_else(|| Error::EigenFailure("real symmetric eigensolver did not converge".into()))?;
    let n = m.nrows();
    let mut order: Vec<usize> = (0..n).collect();
    order.sort_by(|&a, &b| eig.eigenvalues[b].total_cmp(&eig.eigenvalues[a]));
    let values = order.iter().map(|&i| eig.eigenvalues[i]).collect();
    let vectors = DMatrix::from_fn(n, n, |r, c| eig.eigenvectors[(r, order[c])]);
    Ok((values, vectors))
}

/// Eigen-decomposition of a complex Hermitian matrix, eigenvalues descending.
pub fn herm_eigen_desc(m: &CMat) -> Result<(Vec<f64>, CMat)> {
    let herm = (m + m.adjoint()).scale(0.5);
    let eig = nalgebra::SymmetricEigen::try_new(herm, EIG_EPS, EIG_MAX_ITER)
        .ok_or_else(|| Error::EigenFailure("Hermitian eigensolver did not converge".into()))?;
    let n = m.nrows();
    let mut order: Vec<usize> = (0..n).collect();
    order.sort_by(|&a, &b| eig.eigenvalues[b].total_cmp(&eig.eigenvalues[a]));
    let values = order.iter().map(|&i| eig.eigenvalues[i]).collect();
    let vectors = DMatrix::from_fn(n, n, |r, c| eig.eigenvectors[(r, order[c])]);
    Ok((values, vectors))
}

pub fn herm_min_eigen(m: &CMat) -> Result<(f64, DVector<Complex64>)> {
    let (vals, vecs) = herm_eigen_desc(m)?;
    let n = vals.len();
    Ok((vals[n - 1], vecs.column(n - 1).into_owned()))
}

pub fn singular_values(m: &DMatrix<f64>) -> Vec<f64> {
    if m.nrows() == 0 || m.ncols() == 0 {
        return Vec::new();
    }
    m.clone().svd(false, false).singular_values.iter().copied().collect()
}

pub fn spectral_norm(m: &DMatrix<f64>) -> f64 {
    singular_values(m).into_iter().fold(0.0, f64::max)
}

pub fn trace_norm(m: &DMatrix<f64>) -> f64 {
    singular_values(m).into_iter().sum()
}

pub fn kron_c(a: &CMat, b: &CMat) -> CMat {
    a.kronecker(b)
}

pub fn real_to_c(m: &DMatrix<f64>) -> CMat {
    m.map(|x| Complex64::new(x, 0.0))
}

/// Pauli matrices `σx, σy, σz`.
pub fn paulis() -> [CMat; 3] {
    let c = |re: f64, im: f64| Complex64::new(re, im);
    [
        CMat::from_row_slice(2, 2, &[c(0., 0.), c(1., 0.), c(1., 0.), c(0., 0.)]),
        CMat::from_row_slice(2, 2, &[c(0., 0.), c(0., -1.), c(0., 1.), c(0., 0.)]),
        CMat::from_row_slice(2, 2, &[c(1., 0.), c(0., 0.), c(0., 0.), c(-1., 0.)]),
    ]
}

pub fn cidentity(n: usize) -> CMat {
    CMat::identity(n, n)
}

/// Largest entrywise modulus of `a − b`.
pub fn cmax_diff(a: &CMat, b: &CMat) -> f64 {
    (a - b).iter().fold(0.0, |m, z| m.max(z.norm()))
}

pub fn max_diff(a: &DMatrix<f64>, b: &DMatrix<f64>) -> f64 {
    (a - b).amax()
}

pub fn vec_max_diff(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).fold(0.0, |m, (x, y)| m.max((x - y).abs()))
}

/// Nonnegative least squares `min ‖Ax − b‖₂` over `x ≥ 0` by the
/// Lawson–Hanson active-set method.
pub fn nnls(a: &DMatrix<f64>, b: &[f64]) -> Result<Vec<f64>> {
    let (m, n) = (a.nrows(), a.ncols());
    if b.len() != m {
        return Err(Error::DimensionMismatch { expected: m, found: b.len() });
    }
    let b = DVector::from_column_slice(b);
    let tol = 1e-13 * a.amax().max(1.0) * b.amax().max(1.0) * (m.max(n) as f64);
    let mut x = DVector::<f64>::zeros(n);
    let mut passive = vec![false; n];
    let solve = |passive: &[bool]| -> Option<DVector<f64>> {
        let idx: Vec<usize> = (0..n).filter(|&j| passive[j]).collect();
        let sub = DMatrix::from_fn(m, idx.len(), |i, c| a[(i, idx[c])]);
        let rhs = sub.transpose() * &b;
        let z = match (sub.transpose() * &sub).cholesky() {
            Some(ch) => ch.solve(&rhs),
            None => sub.svd(true, true).solve(&b, 1e-14).ok()?,
        };
        let mut full = DVector::zeros(n);
        for (c, &j) in idx.iter().enumerate() {
            full[j] = z[c];
        }
        Some(full)
    };
    for _ in 0..3 * n.max(1) {
        let w = a.transpose() * (&b - a * &x);
        let Some((j, wj)) = (0..n).filter(|&j| !passive[j]).map(|j| (j, w[j])).max_by(|p, q| p.1.total_cmp(&q.1)) else {
            break;
        };
        if wj <= tol {
            break;
        }
        passive[j] = true;
        loop {
            let z = solve(&passive).ok_or_else(|| Error::EigenFailure("nnls subproblem is singular".into()))?;
            if (0..n).filter(|&j| passive[j]).all(|j| z[j] > 0.0) {
                x = z;
                break;
            }
            let mut step = f64::INFINITY;
            for j in (0..n).filter(|&j| passive[j] && z[j] <= 0.0) {
                step = step.min(x[j] / (x[j] - z[j]));
            }
            x += (&z - &x) * step;
            for j in 0..n {
                if passive[j] && x[j] <= 1e-15 {
                    passive[j] = false;
                    x[j] = 0.0;
                }
            }
        }
    }
    Ok(x.iter().copied().collect())
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    #[test]
    fn nnls_recovers_nonnegative_combination() {
        let a = DMatrix::from_row_slice(3, 4, &[1.0, 0.0, 1.0, 2.0, 0.0, 1.0, 1.0, -1.0, 1.0, 1.0, 0.0, 0.5]);
        let x = nnls(&a, &[3.0, 1.0, 2.5]).unwrap();
        assert!(x.iter().all(|v| *v >= 0.0));
        let r = &a * DVector::from_vec(x) - DVector::from_vec(vec![3.0, 1.0, 2.5]);
        assert!(r.norm() < 1e-10);
        // b = −e₁ is not in the cone of columns of the identity.
        let y = nnls(&DMatrix::identity(2, 2), &[-1.0, 2.0]).unwrap();
        assert_eq!(y, vec![0.0, 2.0]);
    }

    #[test]
    fn haar_matrix_is_orthogonal() {
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        let q = haar_orthogonal(&mut rng, 5);
        let err = max_diff(&(q.transpose() * &q), &DMatrix::identity(5, 5));
        assert!(err < 1e-12);
    }

    #[test]
    fn eigen_sorted_descending() {
        let m = DMatrix::from_row_slice(3, 3, &[2.0, 0.0, 0.0, 0.0, -1.0, 0.0, 0.0, 0.0, 5.0]);
        let (vals, vecs) = sym_eigen_desc(&m).unwrap();
        assert_eq!(vals, vec![5.0, 2.0, -1.0]);
        assert!((vecs[(2, 0)].abs() - 1.0).abs() < 1e-14);
    }

    #[test]
    fn trace_norm_of_identity() {
        assert!((trace_norm(&DMatrix::identity(3, 3)) - 3.0).abs() < 1e-14);
        assert_eq!(spectral_norm(&DMatrix::zeros(2, 2)), 0.0);
    }
}
