//! Haar-measure sampling and matrix integrals over the unit sphere.
//!
//! Two routes are provided for every integral: a seeded Monte Carlo
//! estimator with per-entry standard errors, and an exact closed-form
//! evaluator built from tensor-power algebra. Tests and the CLI cross-check
//! the two against each other.
//!
//! Monte Carlo runs are split into fixed-size chunks; chunk `i` draws from
//! an independent ChaCha stream derived from `(seed, i)` and the partial
//! sums are reduced in chunk order, so results are bit-identical regardless
//! of how many worker threads execute the chunks.

use crate::error::{Error, Result};
use crate::matrix::ComplexMatrix;
use crate::scalar::{complex_standard_normal, Scalar};
use crate::tensor::{kron, partial_trace, swap_operator, symmetric_projector, TensorSpace};
use num_complex::Complex;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use std::marker::PhantomData;

/// Samples per Monte Carlo chunk. Fixed so that the chunk decomposition,
/// and therefore the sampled values, depend only on `(seed, samples)`.
const MC_CHUNK: u64 = 8192;

/// Largest dense dimension a Monte Carlo moment estimate may have.
pub const MAX_MC_DIM: usize = 1 << 10;

/// Absolute floor added to `sigma * stderr` comparisons. It only matters for
/// degenerate entries whose sample variance is zero (for example n = 1,
/// where every sample equals 1 up to rounding).
pub const MC_ABS_FLOOR: f64 = 1e-12;

/// Residual below which a map is accepted as exactly covariant and the
/// Monte Carlo twirl is skipped.
pub const COVARIANT_FIT_TOL: f64 = 1e-10;

// ---------------------------------------------------------------------------
// Sampling
// ---------------------------------------------------------------------------

/// Matrix with independent standard complex Gaussian entries.
pub fn gaussian_matrix<T: Scalar, R: Rng + ?Sized>(
    rows: usize,
    cols: usize,
    rng: &mut R,
) -> ComplexMatrix<T> {
    ComplexMatrix::from_fn(rows, cols, |_, _| complex_standard_normal(rng))
}

/// Uniform draw from the unit sphere of C^n, as an n×1 column.
///
/// A normalized vector of independent complex Gaussians is exactly the
/// Haar-induced uniform measure; a zero draw is re-drawn.
pub fn sample_unit_vector<T: Scalar, R: Rng + ?Sized>(n: usize, rng: &mut R) -> ComplexMatrix<T> {
    loop {
        let v = gaussian_matrix(n, 1, rng);
        let norm = v.hs_norm();
        if norm > T::real(1e-150) {
            return v.scaled_re(T::one() / norm);
        }
    }
}

// Modified Gram-Schmidt with one reorthogonalization pass. The positive
// normalization makes the implicit R factor have a positive diagonal, which
// is exactly the phase convention that turns a Ginibre draw into a Haar one.
fn orthonormalize_columns<T: Scalar>(m: &mut ComplexMatrix<T>) -> bool {
    let (rows, cols) = (m.rows(), m.cols());
    for j in 0..cols {
        for _pass in 0..2 {
            for i in 0..j {
                let mut proj = Complex::new(T::zero(), T::zero());
                for r in 0..rows {
                    proj += m[(r, i)].conj() * m[(r, j)];
                }
                for r in 0..rows {
                    let update = proj * m[(r, i)];
                    m[(r, j)] -= update;
                }
            }
        }
        let mut norm_sq = T::zero();
        for r in 0..rows {
            norm_sq = norm_sq + m[(r, j)].norm_sqr();
        }
        let norm = norm_sq.sqrt();
        if norm <= T::real(1e-150) {
            return false;
        }
        for r in 0..rows {
            m[(r, j)] = m[(r, j)].unscale(norm);
        }
    }
    true
}

/// Haar-distributed isometry: `rows × cols` with orthonormal columns.
pub fn sample_isometry<T: Scalar, R: Rng + ?Sized>(
    rows: usize,
    cols: usize,
    rng: &mut R,
) -> Result<ComplexMatrix<T>> {
    if cols > rows {
        return Err(Error::OutOfRange(format!(
            "an isometry needs rows >= cols, got {rows}x{cols}"
        )));
    }
    loop {
        let mut g = gaussian_matrix(rows, cols, rng);
        if orthonormalize_columns(&mut g) {
            return Ok(g);
        }
    }
}

/// Haar-distributed unitary on C^n.
pub fn sample_unitary<T: Scalar, R: Rng + ?Sized>(n: usize, rng: &mut R) -> ComplexMatrix<T> {
    sample_isometry(n, n, rng).expect("square isometry")
}

/// Seeded stream of uniform draws from the unit sphere of C^dim.
pub struct SphereSampler<T> {
    dim: usize,
    seed: u64,
    stream: u64,
    rng: ChaCha8Rng,
    _scalar: PhantomData<T>,
}

impl<T: Scalar> SphereSampler<T> {
    pub fn new(dim: usize, seed: u64) -> Self {
        Self::with_stream(dim, seed, 0)
    }

    /// Independent sub-stream of the same seed, for parallel consumers.
    pub fn with_stream(dim: usize, seed: u64, stream: u64) -> Self {
        assert!(dim >= 1, "sphere dimension must be positive");
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        rng.set_stream(stream);
        Self { dim, seed, stream, rng, _scalar: PhantomData }
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn seed(&self) -> u64 {
        self.seed
    }

    pub fn stream(&self) -> u64 {
        self.stream
    }

    /// Next unit vector, as a dim×1 column.
    pub fn sample(&mut self) -> ComplexMatrix<T> {
        sample_unit_vector(self.dim, &mut self.rng)
    }
}

// ---------------------------------------------------------------------------
// Monte Carlo machinery
// ---------------------------------------------------------------------------

/// Matrix-valued Monte Carlo estimate: the sample mean together with a
/// per-entry standard error (real and imaginary fluctuations pooled).
pub struct McEstimate<T> {
    mean: ComplexMatrix<T>,
    stderr: Vec<T>,
    samples: u64,
}

impl<T: Scalar> McEstimate<T> {
    pub fn mean(&self) -> &ComplexMatrix<T> {
        &self.mean
    }

    pub fn samples(&self) -> u64 {
        self.samples
    }

    pub fn stderr(&self) -> &[T] {
        &self.stderr
    }

    pub fn stderr_at(&self, i: usize, j: usize) -> T {
        self.stderr[i * self.mean.cols() + j]
    }

    /// Scalar view of a 1×1 estimate.
    pub fn scalar(&self) -> (Complex<T>, T) {
        assert!(
            self.mean.rows() == 1 && self.mean.cols() == 1,
            "not a scalar estimate"
        );
        (self.mean.get(0, 0), self.stderr[0])
    }

    pub fn max_abs_deviation(&self, exact: &ComplexMatrix<T>) -> T {
        self.mean.max_abs_diff(exact)
    }

    /// Largest entrywise deviation measured in standard errors, with `floor`
    /// guarding zero-variance entries.
    pub fn worst_sigma_ratio(&self, exact: &ComplexMatrix<T>, floor: T) -> T {
        assert!(self.mean.same_shape(exact), "estimate/exact shape mismatch");
        let mut worst = T::zero();
        for (k, (a, b)) in self.mean.data().iter().zip(exact.data()).enumerate() {
            let dev = (a - b).norm();
            let ratio = dev / (self.stderr[k] + floor);
            worst = worst.max(ratio);
        }
        worst
    }

    /// Entrywise `|mean - exact| <= sigma * stderr + floor`.
    pub fn within_sigma(&self, exact: &ComplexMatrix<T>, sigma: T, floor: T) -> bool {
        assert!(self.mean.same_shape(exact), "estimate/exact shape mismatch");
        self.mean
            .data()
            .iter()
            .zip(exact.data())
            .enumerate()
            .all(|(k, (a, b))| (a - b).norm() <= sigma * self.stderr[k] + floor)
    }
}

/// Chunked deterministic Monte Carlo driver.
///
/// `init` builds per-chunk scratch state; `fill` writes one sample into the
/// row-major `rows × cols` buffer. Chunk `i` draws from stream `i` of the
/// seed, partial sums are reduced in chunk order.
pub fn mc_run<T, S, FI, FS>(
    rows: usize,
    cols: usize,
    samples: u64,
    seed: u64,
    init: FI,
    fill: FS,
) -> McEstimate<T>
where
    T: Scalar,
    S: Send,
    FI: Fn() -> S + Sync,
    FS: Fn(&mut S, &mut ChaCha8Rng, &mut [Complex<T>]) + Sync,
{
    assert!(samples >= 2, "need at least two samples for a standard error");
    let len = rows * cols;
    let n_chunks = (samples + MC_CHUNK - 1) / MC_CHUNK;
    let partials: Vec<(Vec<Complex<T>>, Vec<T>)> = (0..n_chunks)
        .into_par_iter()
        .map(|chunk| {
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            rng.set_stream(chunk);
            let mut state = init();
            let mut buf = vec![Complex::new(T::zero(), T::zero()); len];
            let mut sum = vec![Complex::new(T::zero(), T::zero()); len];
            let mut sumsq = vec![T::zero(); len];
            let count = MC_CHUNK.min(samples - chunk * MC_CHUNK);
            for _ in 0..count {
                fill(&mut state, &mut rng, &mut buf);
                for (k, &z) in buf.iter().enumerate() {
                    sum[k] += z;
                    sumsq[k] += z.norm_sqr();
                }
            }
            (sum, sumsq)
        })
        .collect();

    let mut sum = vec![Complex::new(T::zero(), T::zero()); len];
    let mut sumsq = vec![T::zero(); len];
    for (ps, pq) in partials {
        for k in 0..len {
            sum[k] += ps[k];
            sumsq[k] += pq[k];
        }
    }

    let n = T::from_dim(samples as usize);
    let mean_data: Vec<Complex<T>> = sum.iter().map(|&z| z.unscale(n)).collect();
    let stderr: Vec<T> = mean_data
        .iter()
        .zip(&sumsq)
        .map(|(m, &sq)| {
            let var = (sq - n * m.norm_sqr()) / (n - T::one());
            (var.max(T::zero()) / n).sqrt()
        })
        .collect();
    McEstimate {
        mean: ComplexMatrix::from_vec(rows, cols, mean_data).expect("mean shape"),
        stderr,
        samples,
    }
}

/// Monte Carlo over the unit sphere of C^n: `fill(phi, buf)` writes one
/// sample of the matrix-valued integrand.
pub fn mc_over_sphere<T: Scalar>(
    n: usize,
    rows: usize,
    cols: usize,
    samples: u64,
    seed: u64,
    fill: impl Fn(&ComplexMatrix<T>, &mut [Complex<T>]) + Sync,
) -> McEstimate<T> {
    mc_run(rows, cols, samples, seed, || (), |_, rng, buf| {
        let phi = sample_unit_vector(n, rng);
        fill(&phi, buf);
    })
}

/// Monte Carlo over two independent unit vectors.
pub fn mc_over_sphere2<T: Scalar>(
    n: usize,
    rows: usize,
    cols: usize,
    samples: u64,
    seed: u64,
    fill: impl Fn(&ComplexMatrix<T>, &ComplexMatrix<T>, &mut [Complex<T>]) + Sync,
) -> McEstimate<T> {
    mc_run(rows, cols, samples, seed, || (), |_, rng, buf| {
        let phi = sample_unit_vector(n, rng);
        let psi = sample_unit_vector(n, rng);
        fill(&phi, &psi, buf);
    })
}

/// Quadratic form ⟨Aφ, φ⟩ = tr(A φφ*).
pub fn quad_form<T: Scalar>(a: &ComplexMatrix<T>, phi: &ComplexMatrix<T>) -> Complex<T> {
    let n = phi.rows();
    let mut acc = Complex::new(T::zero(), T::zero());
    for i in 0..n {
        let mut row = Complex::new(T::zero(), T::zero());
        for j in 0..n {
            row += a.get(i, j) * phi.get(j, 0);
        }
        acc += phi.get(i, 0).conj() * row;
    }
    acc
}

fn require_square<T: Scalar>(a: &ComplexMatrix<T>, what: &str) -> Result<usize> {
    if !a.is_square() {
        return Err(Error::ShapeMismatch(format!(
            "{what} needs a square matrix, got {}x{}",
            a.rows(),
            a.cols()
        )));
    }
    Ok(a.rows())
}

fn require_two_factor<T: Scalar>(a: &ComplexMatrix<T>, what: &str) -> Result<usize> {
    let dim = require_square(a, what)?;
    let n = (dim as f64).sqrt().round() as usize;
    if n * n != dim {
        return Err(Error::ShapeMismatch(format!(
            "{what} needs an operator on H⊗H; {dim} is not a perfect square"
        )));
    }
    Ok(n)
}

// ---------------------------------------------------------------------------
// Exact evaluators
// ---------------------------------------------------------------------------

// 1 / (n(n+1)...(n+k-1))
fn inv_rising<T: Scalar>(n: usize, k: usize) -> T {
    let mut prod = T::one();
    for i in 0..k {
        prod = prod * T::from_dim(n + i);
    }
    T::one() / prod
}

/// Exact k-th moment ∫ (φφ*)^{⊗k} dφ = k! P_k / (n(n+1)...(n+k-1)).
pub fn exact_moment<T: Scalar>(n: usize, k: usize) -> Result<ComplexMatrix<T>> {
    let space = TensorSpace::new(n, k)?;
    let p = symmetric_projector(&space)?;
    let factorial: usize = (1..=k).product();
    Ok(p.scaled_re(T::from_dim(factorial) * inv_rising::<T>(n, k)))
}

/// Monte Carlo k-th moment of φφ*.
pub fn mc_moment<T: Scalar>(n: usize, k: usize, samples: u64, seed: u64) -> Result<McEstimate<T>> {
    let space = TensorSpace::new(n, k)?;
    let dim = space.dim();
    if dim > MAX_MC_DIM {
        return Err(Error::SpaceTooLarge { dim: dim as u128, max: MAX_MC_DIM as u64 });
    }
    Ok(mc_run(dim, dim, samples, seed, || (), move |_, rng, buf| {
        let phi = sample_unit_vector::<T, _>(n, rng);
        let mut power = phi.clone();
        for _ in 1..k {
            power = kron(&power, &phi).expect("within MC dimension cap");
        }
        let t = power.data();
        for i in 0..dim {
            for j in 0..dim {
                buf[i * dim + j] = t[i] * t[j].conj();
            }
        }
    }))
}

/// Exact ∫ tr(Aφφ*) φφ* dφ = (A + tr(A) I) / (n(n+1)).
pub fn exact_weighted2<T: Scalar>(a: &ComplexMatrix<T>) -> Result<ComplexMatrix<T>> {
    let n = require_square(a, "exact_weighted2")?;
    let ident = ComplexMatrix::identity(n).scaled(a.trace());
    Ok((a + &ident).scaled_re(inv_rising::<T>(n, 2)))
}

pub fn mc_weighted2<T: Scalar>(
    a: &ComplexMatrix<T>,
    samples: u64,
    seed: u64,
) -> Result<McEstimate<T>> {
    let n = require_square(a, "mc_weighted2")?;
    let a = a.clone();
    Ok(mc_over_sphere(n, n, n, samples, seed, move |phi, buf| {
        let w = quad_form(&a, phi);
        for i in 0..n {
            for j in 0..n {
                buf[i * n + j] = w * phi.get(i, 0) * phi.get(j, 0).conj();
            }
        }
    }))
}

/// Exact ∫ ⟨Aφ,φ⟩⟨Bφ,φ⟩ dφ = (tr(AB) + tr(A) tr(B)) / (n(n+1)).
pub fn exact_pair_scalar<T: Scalar>(
    a: &ComplexMatrix<T>,
    b: &ComplexMatrix<T>,
) -> Result<Complex<T>> {
    let n = require_square(a, "exact_pair_scalar")?;
    if !a.same_shape(b) {
        return Err(Error::ShapeMismatch("exact_pair_scalar needs equal shapes".into()));
    }
    let tr_ab = a.dot(b).trace();
    let tr_a = a.trace();
    let tr_b = b.trace();
    Ok((tr_ab + tr_a * tr_b).scale(inv_rising::<T>(n, 2)))
}

pub fn mc_pair_scalar<T: Scalar>(
    a: &ComplexMatrix<T>,
    b: &ComplexMatrix<T>,
    samples: u64,
    seed: u64,
) -> Result<McEstimate<T>> {
    let n = require_square(a, "mc_pair_scalar")?;
    if !a.same_shape(b) {
        return Err(Error::ShapeMismatch("mc_pair_scalar needs equal shapes".into()));
    }
    let (a, b) = (a.clone(), b.clone());
    Ok(mc_over_sphere(n, 1, 1, samples, seed, move |phi, buf| {
        buf[0] = quad_form(&a, phi) * quad_form(&b, phi);
    }))
}

/// Monte Carlo first moment tr(Aφφ*); its exact value is tr(A)/n.
pub fn mc_first_moment_scalar<T: Scalar>(
    a: &ComplexMatrix<T>,
    samples: u64,
    seed: u64,
) -> Result<McEstimate<T>> {
    let n = require_square(a, "mc_first_moment_scalar")?;
    let a = a.clone();
    Ok(mc_over_sphere(n, 1, 1, samples, seed, move |phi, buf| {
        buf[0] = quad_form(&a, phi);
    }))
}

/// Monte Carlo |tr(Aφφ*)|²; exact value (tr(AA*) + |tr A|²) / (n(n+1)).
pub fn mc_abs_sq_scalar<T: Scalar>(
    a: &ComplexMatrix<T>,
    samples: u64,
    seed: u64,
) -> Result<McEstimate<T>> {
    let n = require_square(a, "mc_abs_sq_scalar")?;
    let a = a.clone();
    Ok(mc_over_sphere(n, 1, 1, samples, seed, move |phi, buf| {
        let w = quad_form(&a, phi);
        buf[0] = Complex::new(w.norm_sqr(), T::zero());
    }))
}

/// Exact ∫ (φφ*⊗I) A (φφ*⊗I) dφ = (A + I ⊗ tr_1(A)) / (n(n+1)).
pub fn exact_sandwich1<T: Scalar>(a: &ComplexMatrix<T>) -> Result<ComplexMatrix<T>> {
    let n = require_two_factor(a, "exact_sandwich1")?;
    let tr1 = partial_trace(a, &[n, n], &[1])?;
    let second = kron(&ComplexMatrix::identity(n), &tr1)?;
    Ok((a + &second).scaled_re(inv_rising::<T>(n, 2)))
}

pub fn mc_sandwich1<T: Scalar>(
    a: &ComplexMatrix<T>,
    samples: u64,
    seed: u64,
) -> Result<McEstimate<T>> {
    let n = require_two_factor(a, "mc_sandwich1")?;
    let a = a.clone();
    let dim = n * n;
    Ok(mc_over_sphere(n, dim, dim, samples, seed, move |phi, buf| {
        let proj = kron(&phi.outer(phi), &ComplexMatrix::identity(n)).expect("small");
        let value = proj.dot(&a).dot(&proj);
        buf.copy_from_slice(value.data());
    }))
}

/// Exact double integral ∫∫ (φφ*⊗ψψ*) A (φφ*⊗ψψ*) dφ dψ.
pub fn exact_sandwich2<T: Scalar>(a: &ComplexMatrix<T>) -> Result<ComplexMatrix<T>> {
    let n = require_two_factor(a, "exact_sandwich2")?;
    let ident = ComplexMatrix::identity(n);
    let tr1 = partial_trace(a, &[n, n], &[1])?;
    let tr2 = partial_trace(a, &[n, n], &[0])?;
    let t1 = kron(&ident, &tr1)?;
    let t2 = kron(&tr2, &ident)?;
    let t3 = kron(&ident, &ident)?.scaled(a.trace());
    let scale = inv_rising::<T>(n, 2);
    Ok((&(a + &t1) + &(&t2 + &t3)).scaled_re(scale * scale))
}

pub fn mc_sandwich2<T: Scalar>(
    a: &ComplexMatrix<T>,
    samples: u64,
    seed: u64,
) -> Result<McEstimate<T>> {
    let n = require_two_factor(a, "mc_sandwich2")?;
    let a = a.clone();
    let dim = n * n;
    Ok(mc_over_sphere2(n, dim, dim, samples, seed, move |phi, psi, buf| {
        let proj = kron(&phi.outer(phi), &psi.outer(psi)).expect("small");
        let value = proj.dot(&a).dot(&proj);
        buf.copy_from_slice(value.data());
    }))
}

/// Exact ∫ ⟨Aφ,φ⟩⟨Bφ,φ⟩ φφ* dφ.
pub fn exact_third_scalar_weighted<T: Scalar>(
    a: &ComplexMatrix<T>,
    b: &ComplexMatrix<T>,
) -> Result<ComplexMatrix<T>> {
    let n = require_square(a, "exact_third_scalar_weighted")?;
    if !a.same_shape(b) {
        return Err(Error::ShapeMismatch(
            "exact_third_scalar_weighted needs equal shapes".into(),
        ));
    }
    let tr_a = a.trace();
    let tr_b = b.trace();
    let ab = a.dot(b);
    let ba = b.dot(a);
    let scalar = tr_a * tr_b + ab.trace();
    let mut acc = ComplexMatrix::identity(n).scaled(scalar);
    acc = &acc + &b.scaled(tr_a);
    acc = &acc + &a.scaled(tr_b);
    acc = &acc + &(&ab + &ba);
    Ok(acc.scaled_re(inv_rising::<T>(n, 3)))
}

pub fn mc_third_scalar_weighted<T: Scalar>(
    a: &ComplexMatrix<T>,
    b: &ComplexMatrix<T>,
    samples: u64,
    seed: u64,
) -> Result<McEstimate<T>> {
    let n = require_square(a, "mc_third_scalar_weighted")?;
    let (a, b) = (a.clone(), b.clone());
    Ok(mc_over_sphere(n, n, n, samples, seed, move |phi, buf| {
        let w = quad_form(&a, phi) * quad_form(&b, phi);
        for i in 0..n {
            for j in 0..n {
                buf[i * n + j] = w * phi.get(i, 0) * phi.get(j, 0).conj();
            }
        }
    }))
}

/// Exact ∫ ⟨Aφ,φ⟩ φφ*⊗φφ* dφ.
pub fn exact_third_matrix_weighted<T: Scalar>(a: &ComplexMatrix<T>) -> Result<ComplexMatrix<T>> {
    let n = require_square(a, "exact_third_matrix_weighted")?;
    let ident = ComplexMatrix::identity(n);
    let s = swap_operator::<T>(n);
    let ii = kron(&ident, &ident)?;
    let a_i = kron(a, &ident)?;
    let i_a = kron(&ident, a)?;
    let mut acc = (&ii + &s).scaled(a.trace());
    acc = &acc + &(&i_a + &a_i);
    acc = &acc + &s.dot(&a_i);
    acc = &acc + &a_i.dot(&s);
    Ok(acc.scaled_re(inv_rising::<T>(n, 3)))
}

pub fn mc_third_matrix_weighted<T: Scalar>(
    a: &ComplexMatrix<T>,
    samples: u64,
    seed: u64,
) -> Result<McEstimate<T>> {
    let n = require_square(a, "mc_third_matrix_weighted")?;
    let a = a.clone();
    let dim = n * n;
    Ok(mc_over_sphere(n, dim, dim, samples, seed, move |phi, buf| {
        let w = quad_form(&a, phi);
        let t = kron(phi, phi).expect("small");
        let td = t.data();
        for i in 0..dim {
            for j in 0..dim {
                buf[i * dim + j] = w * td[i] * td[j].conj();
            }
        }
    }))
}

/// Exact ∫ ⟨Aφ,φ⟩⟨Bφ,φ⟩ φφ*⊗φφ* dφ, expanded closed form.
pub fn exact_fourth_weighted<T: Scalar>(
    a: &ComplexMatrix<T>,
    b: &ComplexMatrix<T>,
) -> Result<ComplexMatrix<T>> {
    let n = require_square(a, "exact_fourth_weighted")?;
    if !a.same_shape(b) {
        return Err(Error::ShapeMismatch("exact_fourth_weighted needs equal shapes".into()));
    }
    let ident = ComplexMatrix::identity(n);
    let s = swap_operator::<T>(n);
    let ii = kron(&ident, &ident)?;
    let tr_a = a.trace();
    let tr_b = b.trace();
    let ab = a.dot(b);
    let ba = b.dot(a);

    let mut inner = ii.scaled(tr_a * tr_b + ab.trace());
    inner = &inner + &(&kron(b, &ident)? + &kron(&ident, b)?).scaled(tr_a);
    inner = &inner + &(&kron(a, &ident)? + &kron(&ident, a)?).scaled(tr_b);
    inner = &inner + &(&kron(&ab, &ident)? + &kron(&ident, &ab)?);
    inner = &inner + &(&kron(&ba, &ident)? + &kron(&ident, &ba)?);
    inner = &inner + &(&kron(a, b)? + &kron(b, a)?);

    Ok((&ii + &s).dot(&inner).scaled_re(inv_rising::<T>(n, 4)))
}

/// Verification route for the fourth-order weighted integral: the 24-term
/// permutation sum Σ_s tr_{12}[(A⊗B⊗I⊗I) Γ(s)] / (n(n+1)(n+2)(n+3)).
pub fn exact_fourth_weighted_perm_sum<T: Scalar>(
    a: &ComplexMatrix<T>,
    b: &ComplexMatrix<T>,
) -> Result<ComplexMatrix<T>> {
    use crate::tensor::{permutation_operator, Permutation};
    let n = require_square(a, "exact_fourth_weighted_perm_sum")?;
    if !a.same_shape(b) {
        return Err(Error::ShapeMismatch(
            "exact_fourth_weighted_perm_sum needs equal shapes".into(),
        ));
    }
    let dim4 = (n as u64).pow(4);
    if dim4 > 1 << 12 {
        return Err(Error::SpaceTooLarge { dim: dim4 as u128, max: 1 << 12 });
    }
    let space = TensorSpace::new(n, 4)?;
    let ident = ComplexMatrix::identity(n);
    let weight = kron(&kron(a, b)?, &kron(&ident, &ident)?)?;
    let dims = [n, n, n, n];
    let mut acc = ComplexMatrix::zeros(n * n, n * n);
    for s in Permutation::enumerate(4) {
        let gamma = permutation_operator::<T>(&space, &s)?;
        let term = partial_trace(&weight.dot(&gamma), &dims, &[2, 3])?;
        acc = &acc + &term;
    }
    Ok(acc.scaled_re(inv_rising::<T>(n, 4)))
}

pub fn mc_fourth_weighted<T: Scalar>(
    a: &ComplexMatrix<T>,
    b: &ComplexMatrix<T>,
    samples: u64,
    seed: u64,
) -> Result<McEstimate<T>> {
    let n = require_square(a, "mc_fourth_weighted")?;
    let (a, b) = (a.clone(), b.clone());
    let dim = n * n;
    Ok(mc_over_sphere(n, dim, dim, samples, seed, move |phi, buf| {
        let w = quad_form(&a, phi) * quad_form(&b, phi);
        let t = kron(phi, phi).expect("small");
        let td = t.data();
        for i in 0..dim {
            for j in 0..dim {
                buf[i * dim + j] = w * td[i] * td[j].conj();
            }
        }
    }))
}

// ---------------------------------------------------------------------------
// Twirl fitting
// ---------------------------------------------------------------------------

/// Least-squares fit of a map to the covariant model λX + μ tr(X) I.
#[derive(Debug, Clone, Copy)]
pub struct TwirlFit<T> {
    pub lambda: Complex<T>,
    pub mu: Complex<T>,
    /// Hilbert-Schmidt norm of the model error over the matrix-unit basis.
    pub residual: T,
}

// Superoperator of X ↦ tr(X) I under row-major vectorization.
fn trace_superop<T: Scalar>(n: usize) -> ComplexMatrix<T> {
    let one = Complex::new(T::one(), T::zero());
    let mut s = ComplexMatrix::zeros(n * n, n * n);
    for c in 0..n {
        for a in 0..n {
            s[(c * n + c, a * n + a)] = one;
        }
    }
    s
}

/// Fit (λ, μ) to the superoperator of a map on n×n inputs.
///
/// For n = 1 the two model terms coincide, so only λ+μ is identifiable; the
/// combined coefficient is reported in `mu` with `lambda` = 0.
pub fn fit_covariant_model<T: Scalar>(superop: &ComplexMatrix<T>) -> Result<TwirlFit<T>> {
    let n = require_two_factor(superop, "twirl fit")?;
    let nn = T::from_dim(n * n);
    let nf = T::from_dim(n);

    let c1 = superop.trace();
    let mut c2 = Complex::new(T::zero(), T::zero());
    for c in 0..n {
        for a in 0..n {
            c2 += superop.get(c * n + c, a * n + a);
        }
    }

    let (lambda, mu) = if n == 1 {
        (Complex::new(T::zero(), T::zero()), c1)
    } else {
        // Normal equations [[n², n],[n, n²]] (λ, μ)^T = (c1, c2)^T.
        let det = nn * nn - nf * nf;
        (
            (c1.scale(nn) - c2.scale(nf)).unscale(det),
            (c2.scale(nn) - c1.scale(nf)).unscale(det),
        )
    };

    let model = {
        let ident = ComplexMatrix::identity(n * n).scaled(lambda);
        let tr = trace_superop::<T>(n).scaled(mu);
        &ident + &tr
    };
    let residual = (superop - &model).hs_norm();
    Ok(TwirlFit { lambda, mu, residual })
}

/// Monte Carlo twirl of a superoperator: average of U^†·Φ(U·U^†)·U over
/// `samples` Haar unitaries.
pub fn twirl_superop<T: Scalar>(
    superop: &ComplexMatrix<T>,
    samples: u64,
    seed: u64,
) -> Result<ComplexMatrix<T>> {
    let n = require_two_factor(superop, "twirl")?;
    let dim = n * n;
    let sop = superop.clone();
    let est = mc_run(dim, dim, samples, seed, || (), move |_, rng, buf| {
        let u = sample_unitary::<T, _>(n, rng);
        let w = kron(&u, &u.conjugate()).expect("small");
        let twirled = w.adjoint().dot(&sop).dot(&w);
        buf.copy_from_slice(twirled.data());
    });
    Ok(est.mean().clone())
}

/// Fit the covariant model, twirling first when the map is not already
/// covariant.
///
/// Maps that are exactly covariant (pass-through residual at most
/// [`COVARIANT_FIT_TOL`]) are fitted directly and `samples` is ignored.
pub fn twirl_fit<T: Scalar>(
    superop: &ComplexMatrix<T>,
    samples: u64,
    seed: u64,
) -> Result<TwirlFit<T>> {
    let direct = fit_covariant_model(superop)?;
    if direct.residual <= T::real(COVARIANT_FIT_TOL) {
        return Ok(direct);
    }
    let twirled = twirl_superop(superop, samples, seed)?;
    fit_covariant_model(&twirled)
}
