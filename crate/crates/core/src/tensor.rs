//! Tensor-power linear algebra: Kronecker products, partial traces,
//! permutation operators, the swap operator and symmetric projectors.
//!
//! Basis convention used everywhere: tensor factors are ordered row-major
//! with the first factor as the slow index, so `kron(A, B)` places `A` on the
//! slow index. Factor indices in `partial_trace` are 0-based.

use crate::error::{Error, Result};
use crate::matrix::ComplexMatrix;
use crate::scalar::Scalar;
use itertools::Itertools;
use num_complex::Complex;

/// Largest total dimension any constructed operator may have.
pub const MAX_TOTAL_DIM: u64 = 1 << 20;

/// Largest tensor power for which the full symmetric-group sum is built.
pub const MAX_PROJECTOR_FACTORS: usize = 4;

/// A tensor power H^{⊗k} of a local space of dimension n.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct TensorSpace {
    local_dim: usize,
    factors: usize,
}

impl TensorSpace {
    pub fn new(local_dim: usize, factors: usize) -> Result<Self> {
        if local_dim == 0 || factors == 0 {
            return Err(Error::OutOfRange(
                "tensor space needs local_dim >= 1 and factors >= 1".into(),
            ));
        }
        let dim = (local_dim as u128).checked_pow(factors as u32);
        match dim {
            Some(d) if d <= MAX_TOTAL_DIM as u128 => Ok(Self { local_dim, factors }),
            Some(d) => Err(Error::SpaceTooLarge { dim: d, max: MAX_TOTAL_DIM }),
            None => Err(Error::SpaceTooLarge { dim: u128::MAX, max: MAX_TOTAL_DIM }),
        }
    }

    pub fn local_dim(&self) -> usize {
        self.local_dim
    }

    pub fn factors(&self) -> usize {
        self.factors
    }

    /// Total dimension n^k.
    pub fn dim(&self) -> usize {
        self.local_dim.pow(self.factors as u32)
    }
}

/// A permutation of k tensor slots, stored as the image of each position.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Permutation {
    images: Vec<usize>,
}

impl Permutation {
    pub fn new(images: Vec<usize>) -> Result<Self> {
        let k = images.len();
        let mut seen = vec![false; k];
        for &i in &images {
            if i >= k || seen[i] {
                return Err(Error::InvalidPermutation { degree: k });
            }
            seen[i] = true;
        }
        Ok(Self { images })
    }

    pub fn identity(k: usize) -> Self {
        Self { images: (0..k).collect() }
    }

    pub fn transposition(k: usize, a: usize, b: usize) -> Self {
        assert!(a < k && b < k, "transposition indices out of range");
        let mut images: Vec<usize> = (0..k).collect();
        images.swap(a, b);
        Self { images }
    }

    pub fn degree(&self) -> usize {
        self.images.len()
    }

    /// Image of position i.
    pub fn image(&self, i: usize) -> usize {
        self.images[i]
    }

    pub fn images(&self) -> &[usize] {
        &self.images
    }

    pub fn inverse(&self) -> Self {
        let mut images = vec![0; self.images.len()];
        for (i, &si) in self.images.iter().enumerate() {
            images[si] = i;
        }
        Self { images }
    }

    /// Composition self ∘ other: apply `other` first, then `self`.
    pub fn compose(&self, other: &Self) -> Self {
        assert_eq!(self.degree(), other.degree(), "composition degree mismatch");
        Self {
            images: (0..self.degree()).map(|i| self.images[other.images[i]]).collect(),
        }
    }

    /// All k! elements of the symmetric group S_k.
    pub fn enumerate(k: usize) -> Vec<Self> {
        (0..k)
            .permutations(k)
            .map(|images| Self { images })
            .collect()
    }
}

/// Kronecker product with the first factor on the slow index:
/// (A⊗B)(x⊗y) = Ax ⊗ By.
pub fn kron<T: Scalar>(a: &ComplexMatrix<T>, b: &ComplexMatrix<T>) -> Result<ComplexMatrix<T>> {
    let rows = (a.rows() as u64) * (b.rows() as u64);
    let cols = (a.cols() as u64) * (b.cols() as u64);
    if rows > MAX_TOTAL_DIM || cols > MAX_TOTAL_DIM {
        return Err(Error::SpaceTooLarge {
            dim: rows.max(cols) as u128,
            max: MAX_TOTAL_DIM,
        });
    }
    let (ar, ac, br, bc) = (a.rows(), a.cols(), b.rows(), b.cols());
    let mut out = ComplexMatrix::zeros(ar * br, ac * bc);
    for i in 0..ar {
        for j in 0..ac {
            let aij = a.get(i, j);
            if aij.re == T::zero() && aij.im == T::zero() {
                continue;
            }
            for p in 0..br {
                for q in 0..bc {
                    out[(i * br + p, j * bc + q)] = aij * b.get(p, q);
                }
            }
        }
    }
    Ok(out)
}

/// Kronecker product of a list of factors, left to right.
pub fn kron_all<T: Scalar>(factors: &[&ComplexMatrix<T>]) -> Result<ComplexMatrix<T>> {
    assert!(!factors.is_empty(), "kron_all of an empty list");
    let mut acc = factors[0].clone();
    for f in &factors[1..] {
        acc = kron(&acc, f)?;
    }
    Ok(acc)
}

/// Partial trace of an operator on a product of factors with the given
/// dimensions (first factor on the slow index), keeping the 0-based
/// factors listed in `keep` (in their original order). An empty `keep`
/// produces the 1×1 matrix holding the full trace.
pub fn partial_trace<T: Scalar>(
    a: &ComplexMatrix<T>,
    dims: &[usize],
    keep: &[usize],
) -> Result<ComplexMatrix<T>> {
    if dims.is_empty() || dims.iter().any(|&d| d == 0) {
        return Err(Error::ShapeMismatch("factor dims must be positive".into()));
    }
    let total: usize = dims.iter().product();
    if !a.is_square() || a.rows() != total {
        return Err(Error::ShapeMismatch(format!(
            "operator is {}x{} but the factor dims multiply to {}",
            a.rows(),
            a.cols(),
            total
        )));
    }
    let k = dims.len();
    let mut keep: Vec<usize> = keep.to_vec();
    keep.sort_unstable();
    keep.dedup();
    if keep.iter().any(|&i| i >= k) {
        return Err(Error::ShapeMismatch(format!(
            "keep indices must lie in 0..{k}"
        )));
    }
    let traced: Vec<usize> = (0..k).filter(|i| !keep.contains(i)).collect();

    // stride[j] = product of dims after j (first factor slow).
    let mut stride = vec![1usize; k];
    for j in (0..k.saturating_sub(1)).rev() {
        stride[j] = stride[j + 1] * dims[j + 1];
    }

    let kept_dim: usize = keep.iter().map(|&j| dims[j]).product::<usize>().max(1);
    let traced_dim: usize = traced.iter().map(|&j| dims[j]).product::<usize>().max(1);

    // Decompose a mixed-radix index over the given factor subset into a
    // base offset in the full index space.
    let offset = |mut idx: usize, subset: &[usize]| -> usize {
        let mut off = 0;
        for &j in subset.iter().rev() {
            off += (idx % dims[j]) * stride[j];
            idx /= dims[j];
        }
        off
    };

    let mut out = ComplexMatrix::zeros(kept_dim, kept_dim);
    for kr in 0..kept_dim {
        let row_base = offset(kr, &keep);
        for kc in 0..kept_dim {
            let col_base = offset(kc, &keep);
            let mut acc = Complex::new(T::zero(), T::zero());
            for t in 0..traced_dim {
                let toff = offset(t, &traced);
                acc += a.get(row_base + toff, col_base + toff);
            }
            out[(kr, kc)] = acc;
        }
    }
    Ok(out)
}

/// The swap operator S on H⊗H: S(x⊗y) = y⊗x.
pub fn swap_operator<T: Scalar>(n: usize) -> ComplexMatrix<T> {
    assert!(n >= 1, "swap operator needs n >= 1");
    let mut s = ComplexMatrix::zeros(n * n, n * n);
    let one = Complex::new(T::one(), T::zero());
    for i in 0..n {
        for j in 0..n {
            s[(i * n + j, j * n + i)] = one;
        }
    }
    s
}

/// Permutation operator Γ(s) on H^{⊗k}: slot i of the input moves to slot
/// s(i), so factor i of the output is x_{s^{-1}(i)}.
pub fn permutation_operator<T: Scalar>(
    space: &TensorSpace,
    s: &Permutation,
) -> Result<ComplexMatrix<T>> {
    if s.degree() != space.factors() {
        return Err(Error::ShapeMismatch(format!(
            "permutation degree {} does not match {} tensor factors",
            s.degree(),
            space.factors()
        )));
    }
    let n = space.local_dim();
    let k = space.factors();
    let dim = space.dim();
    let mut out = ComplexMatrix::zeros(dim, dim);
    let one = Complex::new(T::one(), T::zero());
    let mut digits = vec![0usize; k];
    for col in 0..dim {
        // Digits of the column index, first factor slow.
        let mut rem = col;
        for j in (0..k).rev() {
            digits[j] = rem % n;
            rem /= n;
        }
        // Basis vector e_{c_0}⊗…⊗e_{c_{k-1}} maps to the row whose digit at
        // slot s(j) is c_j.
        let mut row = vec![0usize; k];
        for j in 0..k {
            row[s.image(j)] = digits[j];
        }
        let row_idx = row.iter().fold(0usize, |acc, &d| acc * n + d);
        out[(row_idx, col)] = one;
    }
    Ok(out)
}

/// Orthogonal projector onto the symmetric subspace of H^{⊗k}:
/// the average of all k! permutation operators.
pub fn symmetric_projector<T: Scalar>(space: &TensorSpace) -> Result<ComplexMatrix<T>> {
    let k = space.factors();
    if k > MAX_PROJECTOR_FACTORS {
        return Err(Error::FactorLimit { factors: k, max: MAX_PROJECTOR_FACTORS });
    }
    let dim = space.dim();
    let mut sum = ComplexMatrix::zeros(dim, dim);
    for s in Permutation::enumerate(k) {
        sum = &sum + &permutation_operator(space, &s)?;
    }
    let factorial: usize = (1..=k).product();
    Ok(sum.scaled_re(T::one() / T::from_dim(factorial)))
}

/// binomial(n + k - 1, k): the rank of the symmetric projector.
pub fn symmetric_rank(n: usize, k: usize) -> u64 {
    let mut num = 1u64;
    let mut den = 1u64;
    for i in 0..k {
        num *= (n + i) as u64;
        den *= (i + 1) as u64;
    }
    num / den
}
