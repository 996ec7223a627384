//! Hermitian eigendecomposition via the cyclic Jacobi method, plus the
//! operator norms built on it.
//!
//! All matrices in this crate are small (at most a few hundred rows), where
//! Jacobi is simple, backward stable and has no external dependencies.

use crate::matrix::ComplexMatrix;
use crate::scalar::Scalar;
use num_complex::Complex;

/// Eigenvalues in descending order; `vectors` holds the matching orthonormal
/// eigenvectors as columns.
pub struct HermitianEigen<T> {
    pub values: Vec<T>,
    pub vectors: ComplexMatrix<T>,
}

const MAX_SWEEPS: usize = 64;

/// Eigendecomposition of a Hermitian matrix.
///
/// The input is symmetrized first, so nearly-Hermitian matrices (e.g. Monte
/// Carlo means) are handled without fuss.
pub fn hermitian_eigen<T: Scalar>(a: &ComplexMatrix<T>) -> HermitianEigen<T> {
    assert!(a.is_square(), "eigendecomposition of a non-square matrix");
    let n = a.rows();
    let mut m = a.hermitize();
    let mut v = ComplexMatrix::identity(n);
    let scale = m.hs_norm();
    let target = scale * T::epsilon() * T::from_dim(n);

    for _ in 0..MAX_SWEEPS {
        let mut off = T::zero();
        for p in 0..n {
            for q in (p + 1)..n {
                off = off + m[(p, q)].norm_sqr();
            }
        }
        if off.sqrt() <= target || n < 2 {
            break;
        }
        for p in 0..n - 1 {
            for q in (p + 1)..n {
                rotate(&mut m, &mut v, p, q);
            }
        }
    }

    let mut pairs: Vec<(T, usize)> = (0..n).map(|i| (m[(i, i)].re, i)).collect();
    pairs.sort_by(|a, b| b.0.partial_cmp(&a.0).expect("finite eigenvalues"));
    let values: Vec<T> = pairs.iter().map(|&(val, _)| val).collect();
    let vectors = ComplexMatrix::from_fn(n, n, |i, j| v[(i, pairs[j].1)]);
    HermitianEigen { values, vectors }
}

// One Jacobi rotation zeroing m[p][q]; v accumulates the eigenvectors.
fn rotate<T: Scalar>(m: &mut ComplexMatrix<T>, v: &mut ComplexMatrix<T>, p: usize, q: usize) {
    let n = m.rows();
    let apq = m[(p, q)];
    let g = apq.norm();
    let app = m[(p, p)].re;
    let aqq = m[(q, q)].re;
    // Skip rotations that cannot move the diagonal at working precision.
    if g <= (app.abs() + aqq.abs()) * T::epsilon() {
        let zero = Complex::new(T::zero(), T::zero());
        m[(p, q)] = zero;
        m[(q, p)] = zero;
        return;
    }
    let u = apq.unscale(g); // unit-modulus phase of the pivot
    let tau = (aqq - app) / (g + g);
    let t = if tau >= T::zero() {
        T::one() / (tau + (T::one() + tau * tau).sqrt())
    } else {
        -T::one() / (-tau + (T::one() + tau * tau).sqrt())
    };
    let c = T::one() / (T::one() + t * t).sqrt();
    let s = t * c;
    let su_conj = u.conj().scale(s);
    let cu_conj = u.conj().scale(c);
    let su = u.scale(s);
    let cu = u.scale(c);

    // Column update: m <- m R and v <- v R with
    //   R[p][p] = c, R[p][q] = s, R[q][p] = -s*conj(u), R[q][q] = c*conj(u).
    for i in 0..n {
        let mp = m[(i, p)];
        let mq = m[(i, q)];
        m[(i, p)] = mp.scale(c) - mq * su_conj;
        m[(i, q)] = mp.scale(s) + mq * cu_conj;
        let vp = v[(i, p)];
        let vq = v[(i, q)];
        v[(i, p)] = vp.scale(c) - vq * su_conj;
        v[(i, q)] = vp.scale(s) + vq * cu_conj;
    }
    // Row update: m <- R^H m.
    for j in 0..n {
        let mp = m[(p, j)];
        let mq = m[(q, j)];
        m[(p, j)] = mp.scale(c) - mq * su;
        m[(q, j)] = mp.scale(s) + mq * cu;
    }
    let zero = Complex::new(T::zero(), T::zero());
    m[(p, q)] = zero;
    m[(q, p)] = zero;
    m[(p, p)] = Complex::new(m[(p, p)].re, T::zero());
    m[(q, q)] = Complex::new(m[(q, q)].re, T::zero());
}

/// Largest singular value, i.e. the operator norm ||a||_inf on vectors.
pub fn operator_norm<T: Scalar>(a: &ComplexMatrix<T>) -> T {
    // Work with the smaller Gram matrix of the two.
    let gram = if a.rows() >= a.cols() {
        a.adjoint().dot(a)
    } else {
        a.dot(&a.adjoint())
    };
    let eig = hermitian_eigen(&gram);
    eig.values
        .first()
        .copied()
        .unwrap_or(T::zero())
        .max(T::zero())
        .sqrt()
}

/// Smallest eigenvalue of a Hermitian matrix.
pub fn min_eigenvalue<T: Scalar>(a: &ComplexMatrix<T>) -> T {
    let eig = hermitian_eigen(a);
    *eig.values.last().expect("nonempty spectrum")
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::scalar::complex_standard_normal;
    use num_complex::Complex64;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    type M = ComplexMatrix<f64>;

    fn c(re: f64, im: f64) -> Complex64 {
        Complex64::new(re, im)
    }

    fn random_hermitian(n: usize, rng: &mut ChaCha8Rng) -> M {
        M::from_fn(n, n, |_, _| complex_standard_normal(rng)).hermitize()
    }

    #[test]
    fn pauli_x_spectrum() {
        let a = M::from_vec(2, 2, vec![c(0.0, 0.0), c(1.0, 0.0), c(1.0, 0.0), c(0.0, 0.0)]).unwrap();
        let eig = hermitian_eigen(&a);
        assert!((eig.values[0] - 1.0).abs() < 1e-14);
        assert!((eig.values[1] + 1.0).abs() < 1e-14);
    }

    #[test]
    fn complex_two_by_two_spectrum() {
        // [[2, i], [-i, 2]] has eigenvalues 3 and 1.
        let a = M::from_vec(2, 2, vec![c(2.0, 0.0), c(0.0, 1.0), c(0.0, -1.0), c(2.0, 0.0)]).unwrap();
        let eig = hermitian_eigen(&a);
        assert!((eig.values[0] - 3.0).abs() < 1e-14);
        assert!((eig.values[1] - 1.0).abs() < 1e-14);
    }

    #[test]
    fn random_hermitian_reconstruction() {
        let mut rng = ChaCha8Rng::seed_from_u64(17);
        for n in [1usize, 2, 3, 5, 8, 16] {
            let a = random_hermitian(n, &mut rng);
            let eig = hermitian_eigen(&a);
            // V is unitary.
            let vtv = eig.vectors.adjoint().dot(&eig.vectors);
            assert!(vtv.max_abs_diff(&M::identity(n)) < 1e-12, "n = {n}");
            // A V = V diag(lambda).
            let lambda = M::diag_re(&eig.values);
            let lhs = a.dot(&eig.vectors);
            let rhs = eig.vectors.dot(&lambda);
            assert!(lhs.max_abs_diff(&rhs) < 1e-11, "n = {n}");
            // Sorted descending.
            for w in eig.values.windows(2) {
                assert!(w[0] >= w[1]);
            }
        }
    }

    #[test]
    fn degenerate_spectrum_identity() {
        let a = M::identity(4);
        let eig = hermitian_eigen(&a);
        for v in &eig.values {
            assert!((v - 1.0).abs() < 1e-15);
        }
        let vtv = eig.vectors.adjoint().dot(&eig.vectors);
        assert!(vtv.max_abs_diff(&M::identity(4)) < 1e-13);
    }

    #[test]
    fn operator_norm_known_cases() {
        // Nilpotent [[0, 2],[0, 0]] has operator norm 2.
        let a = M::from_vec(2, 2, vec![c(0.0, 0.0), c(2.0, 0.0), c(0.0, 0.0), c(0.0, 0.0)]).unwrap();
        assert!((operator_norm(&a) - 2.0).abs() < 1e-13);
        // Scaled identity.
        let b = M::identity(3).scaled_re(-0.75);
        assert!((operator_norm(&b) - 0.75).abs() < 1e-13);
        // Rectangular column: norm equals the vector norm.
        let col = M::column(&[c(3.0, 0.0), c(4.0, 0.0)]);
        assert!((operator_norm(&col) - 5.0).abs() < 1e-13);
    }

    #[test]
    fn min_eigenvalue_of_shifted_projector() {
        let e = M::basis_column(3, 0);
        let p = e.outer(&e); // eigenvalues 1, 0, 0
        assert!(min_eigenvalue(&p).abs() < 1e-14);
        let shifted = &p - &M::identity(3).scaled_re(0.25);
        assert!((min_eigenvalue(&shifted) + 0.25).abs() < 1e-14);
    }
}
