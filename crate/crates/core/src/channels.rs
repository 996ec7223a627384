//! Kraus-form quantum channels: validation, application, Choi matrices,
//! complementary channels, channel norms and the named channel families.
//!
//! A channel E: M_n -> M_d is stored as its ordered Kraus list; the Choi
//! matrix is ordered output-factor ⊗ input-factor. Trace preservation is
//! validated at 1e-8 on inputs we did not generate ourselves, while
//! identities computed here are held to 1e-10.

use crate::eig::{hermitian_eigen, operator_norm};
use crate::error::{Error, Result};
use crate::haar::sample_isometry;
use crate::matrix::ComplexMatrix;
use crate::scalar::Scalar;
use num_complex::Complex;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use std::str::FromStr;

/// Trace-preservation tolerance applied to user-supplied channels.
pub const TP_INPUT_TOL: f64 = 1e-8;

/// Eigenvalue cutoff for the Choi rank.
pub const CHOI_RANK_CUTOFF: f64 = 1e-10;

/// Eigenvalues between the rank cutoff and this bound are reported as
/// borderline instead of being silently truncated.
pub const CHOI_BORDERLINE: f64 = 1e-8;

/// A channel in operator-sum form: X ↦ Σ_i A_i X A_i^*.
#[derive(Clone)]
pub struct KrausChannel<T> {
    dim_in: usize,
    dim_out: usize,
    kraus: Vec<ComplexMatrix<T>>,
}

/// Result of CPTP validation. `cp` is always true for operator-sum input;
/// it is recorded for report symmetry with Choi-matrix inputs.
#[derive(Clone, Copy, Debug)]
pub struct CptpReport<T> {
    pub tp_defect: T,
    pub cp: bool,
}

impl<T: Scalar> KrausChannel<T> {
    pub fn new(dim_in: usize, dim_out: usize, kraus: Vec<ComplexMatrix<T>>) -> Result<Self> {
        if dim_in == 0 || dim_out == 0 {
            return Err(Error::OutOfRange("channel dimensions must be positive".into()));
        }
        if kraus.is_empty() {
            return Err(Error::InvalidInput("a channel needs at least one Kraus operator".into()));
        }
        for a in &kraus {
            if a.rows() != dim_out || a.cols() != dim_in {
                return Err(Error::ShapeMismatch(format!(
                    "Kraus operator is {}x{}, expected {}x{}",
                    a.rows(),
                    a.cols(),
                    dim_out,
                    dim_in
                )));
            }
            a.all_finite()?;
        }
        Ok(Self { dim_in, dim_out, kraus })
    }

    /// The identity channel on C^n.
    pub fn identity(n: usize) -> Self {
        Self::new(n, n, vec![ComplexMatrix::identity(n)]).expect("identity channel")
    }

    pub fn dim_in(&self) -> usize {
        self.dim_in
    }

    pub fn dim_out(&self) -> usize {
        self.dim_out
    }

    pub fn kraus(&self) -> &[ComplexMatrix<T>] {
        &self.kraus
    }

    pub fn kraus_count(&self) -> usize {
        self.kraus.len()
    }

    /// Σ_i A_i^* A_i.
    pub fn kraus_gram(&self) -> ComplexMatrix<T> {
        let mut acc = ComplexMatrix::zeros(self.dim_in, self.dim_in);
        for a in &self.kraus {
            acc = &acc + &a.adjoint().dot(a);
        }
        acc
    }

    /// Operator-norm distance of Σ A_i^* A_i from the identity.
    pub fn tp_defect(&self) -> T {
        let gram = self.kraus_gram();
        operator_norm(&(&gram - &ComplexMatrix::identity(self.dim_in)))
    }

    pub fn validate_cptp(&self) -> CptpReport<T> {
        CptpReport { tp_defect: self.tp_defect(), cp: true }
    }

    pub fn is_trace_preserving(&self, tol: T) -> bool {
        self.tp_defect() <= tol
    }

    fn require_tp(&self) -> Result<()> {
        let defect = self.tp_defect();
        if defect <= T::real(TP_INPUT_TOL) {
            Ok(())
        } else {
            Err(Error::NotTracePreserving { defect: defect.to_f64().unwrap_or(f64::NAN) })
        }
    }

    /// E(X) = Σ_i A_i X A_i^*.
    pub fn apply(&self, x: &ComplexMatrix<T>) -> Result<ComplexMatrix<T>> {
        if x.rows() != self.dim_in || x.cols() != self.dim_in {
            return Err(Error::ShapeMismatch(format!(
                "channel input is {}x{}, expected {0}x{0} with n = {2}",
                x.rows(),
                x.cols(),
                self.dim_in
            )));
        }
        let mut acc = ComplexMatrix::zeros(self.dim_out, self.dim_out);
        for a in &self.kraus {
            acc = &acc + &a.dot(x).dot(&a.adjoint());
        }
        Ok(acc)
    }

    /// E(I), the image of the maximally mixed input times n.
    pub fn apply_identity(&self) -> ComplexMatrix<T> {
        let mut acc = ComplexMatrix::zeros(self.dim_out, self.dim_out);
        for a in &self.kraus {
            acc = &acc + &a.dot(&a.adjoint());
        }
        acc
    }

    /// Adjoint action E^*(Y) = Σ_i A_i^* Y A_i.
    pub fn adjoint_apply(&self, y: &ComplexMatrix<T>) -> Result<ComplexMatrix<T>> {
        if y.rows() != self.dim_out || y.cols() != self.dim_out {
            return Err(Error::ShapeMismatch(format!(
                "adjoint input is {}x{}, expected {2}x{2} with d = {2}",
                y.rows(),
                y.cols(),
                self.dim_out
            )));
        }
        let mut acc = ComplexMatrix::zeros(self.dim_in, self.dim_in);
        for a in &self.kraus {
            acc = &acc + &a.adjoint().dot(y).dot(a);
        }
        Ok(acc)
    }

    /// Choi matrix Σ_{ij} E(e_i e_j^*) ⊗ e_i e_j^*, output factor slow.
    pub fn choi(&self) -> ChoiMatrix<T> {
        let (n, d) = (self.dim_in, self.dim_out);
        let nd = n * d;
        let mut c = ComplexMatrix::zeros(nd, nd);
        // C = Σ_m w_m w_m^† with w_m = Σ_i (A_m e_i) ⊗ e_i, so
        // w_m[a·n + i] = A_m[a, i].
        for a in &self.kraus {
            for r in 0..nd {
                let ar = a.get(r / n, r % n);
                if ar.re == T::zero() && ar.im == T::zero() {
                    continue;
                }
                for col in 0..nd {
                    let term = ar * a.get(col / n, col % n).conj();
                    c[(r, col)] += term;
                }
            }
        }
        ChoiMatrix { dim_in: n, dim_out: d, matrix: c }
    }

    /// Complementary channel in Kraus form, on an output space whose
    /// dimension is the Kraus count as given (no prior minimization):
    /// X ↦ Σ_{ij} tr(A_i X A_j^*) e_i e_j^*.
    pub fn complementary(&self) -> Result<KrausChannel<T>> {
        self.require_tp()?;
        let (n, d, m) = (self.dim_in, self.dim_out, self.kraus.len());
        // Kraus operator B_a of the complementary channel stacks row a of
        // every A_i: B_a[i, c] = A_i[a, c].
        let kraus = (0..d)
            .map(|a| {
                ComplexMatrix::from_fn(m, n, |i, col| self.kraus[i].get(a, col))
            })
            .collect();
        KrausChannel::new(n, m, kraus)
    }

    /// ||E||_2^2 = Σ_{il} |tr(A_i^* A_l)|^2.
    pub fn hs_norm_sq(&self) -> T {
        let m = self.kraus.len();
        let mut acc = T::zero();
        for i in 0..m {
            for l in 0..m {
                let overlap = self.kraus[l]
                    .hs_inner(&self.kraus[i])
                    .expect("kraus operators share a shape");
                acc = acc + overlap.norm_sqr();
            }
        }
        acc
    }

    /// ||Ẽ||_2^2 = tr(E(I)^2), independent of the choice of complementary
    /// channel.
    pub fn comp_hs_norm_sq(&self) -> T {
        let ei = self.apply_identity();
        ei.dot(&ei).trace().re
    }

    /// Matrix of the channel between vectorized bases: column (a·n + b)
    /// holds vec(E(e_a e_b^*)), row-major vectorization on both sides.
    pub fn superoperator(&self) -> ComplexMatrix<T> {
        let (n, d) = (self.dim_in, self.dim_out);
        let mut s = ComplexMatrix::zeros(d * d, n * n);
        for a in 0..n {
            for b in 0..n {
                let unit = ComplexMatrix::basis_column(n, a).outer(&ComplexMatrix::basis_column(n, b));
                let out = self.apply(&unit).expect("unit input fits");
                for r in 0..d * d {
                    s[(r, a * n + b)] = out.data()[r];
                }
            }
        }
        s
    }

    /// Induced p → p norm for p ∈ {1, 2, ∞} of a positive trace-preserving
    /// channel.
    pub fn p2p_norm(&self, p: PNorm) -> Result<T> {
        self.require_tp()?;
        Ok(match p {
            PNorm::One => operator_norm(&self.kraus_gram()),
            PNorm::Two => operator_norm(&self.superoperator()),
            PNorm::Inf => operator_norm(&self.apply_identity()),
        })
    }

    /// Remixed Kraus list E_i = Σ_j mix[j, i] A_j. A unitary mix leaves the
    /// channel action and its norms unchanged.
    pub fn remix(&self, mix: &ComplexMatrix<T>) -> Result<KrausChannel<T>> {
        let m = self.kraus.len();
        if mix.rows() != m || mix.cols() != m {
            return Err(Error::ShapeMismatch(format!(
                "mixing matrix is {}x{}, expected {m}x{m}",
                mix.rows(),
                mix.cols()
            )));
        }
        let kraus: Vec<ComplexMatrix<T>> = (0..m)
            .map(|i| {
                let mut acc = ComplexMatrix::zeros(self.dim_out, self.dim_in);
                for j in 0..m {
                    acc = &acc + &self.kraus[j].scaled(mix.get(j, i));
                }
                acc
            })
            .collect();
        KrausChannel::new(self.dim_in, self.dim_out, kraus)
    }

    /// Minimal Kraus form via the Choi eigendecomposition.
    pub fn minimized(&self) -> Result<KrausExtraction<T>> {
        self.choi().kraus_channel()
    }

    /// All channel norms in one record.
    pub fn norms(&self) -> Result<ChannelNorms<T>> {
        let hs_sq = self.hs_norm_sq();
        let comp_hs_sq = self.comp_hs_norm_sq();
        Ok(ChannelNorms {
            hs_sq,
            comp_hs_sq,
            sum: hs_sq + comp_hs_sq,
            p1: self.p2p_norm(PNorm::One)?,
            p2: self.p2p_norm(PNorm::Two)?,
            pinf: self.p2p_norm(PNorm::Inf)?,
        })
    }
}

impl<T: Scalar> std::fmt::Debug for KrausChannel<T> {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        write!(
            f,
            "KrausChannel {{ dim_in: {}, dim_out: {}, kraus: {} ops }}",
            self.dim_in,
            self.dim_out,
            self.kraus.len()
        )
    }
}

impl<T: Scalar> std::fmt::Debug for ChoiMatrix<T> {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        write!(f, "ChoiMatrix {{ dim_in: {}, dim_out: {} }}", self.dim_in, self.dim_out)
    }
}

impl<T: Scalar> std::fmt::Debug for RandomIsometricChannel<T> {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        write!(
            f,
            "RandomIsometricChannel {{ dim_in: {}, dim_out: {}, parts: {} }}",
            self.dim_in,
            self.dim_out,
            self.isometries.len()
        )
    }
}

/// Which induced p → p norm to compute.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum PNorm {
    One,
    Two,
    Inf,
}

impl FromStr for PNorm {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        match s {
            "1" => Ok(PNorm::One),
            "2" => Ok(PNorm::Two),
            "inf" | "Inf" | "INF" | "infinity" => Ok(PNorm::Inf),
            other => Err(Error::UnsupportedNorm(other.to_string())),
        }
    }
}

/// Hilbert-Schmidt and induced norms of a channel.
#[derive(Clone, Copy, Debug)]
pub struct ChannelNorms<T> {
    pub hs_sq: T,
    pub comp_hs_sq: T,
    pub sum: T,
    pub p1: T,
    pub p2: T,
    pub pinf: T,
}

/// Choi matrix of a channel, ordered output-factor ⊗ input-factor.
#[derive(Clone)]
pub struct ChoiMatrix<T> {
    dim_in: usize,
    dim_out: usize,
    matrix: ComplexMatrix<T>,
}

/// Kraus extraction from a Choi matrix: the minimized channel plus any
/// borderline eigenvalues in (rank cutoff, borderline bound) that a report
/// should surface.
pub struct KrausExtraction<T> {
    pub channel: KrausChannel<T>,
    pub borderline: Vec<T>,
}

impl<T: Scalar> ChoiMatrix<T> {
    pub fn new(dim_in: usize, dim_out: usize, matrix: ComplexMatrix<T>) -> Result<Self> {
        let nd = dim_in * dim_out;
        if !matrix.is_square() || matrix.rows() != nd {
            return Err(Error::ShapeMismatch(format!(
                "Choi matrix is {}x{}, expected {nd}x{nd}",
                matrix.rows(),
                matrix.cols()
            )));
        }
        matrix.all_finite()?;
        if !matrix.is_hermitian(T::real(TP_INPUT_TOL)) {
            return Err(Error::InvalidInput("Choi matrix must be Hermitian".into()));
        }
        Ok(Self { dim_in, dim_out, matrix })
    }

    pub fn dim_in(&self) -> usize {
        self.dim_in
    }

    pub fn dim_out(&self) -> usize {
        self.dim_out
    }

    pub fn matrix(&self) -> &ComplexMatrix<T> {
        &self.matrix
    }

    /// Number of eigenvalues above the rank cutoff.
    pub fn rank(&self) -> usize {
        let eig = hermitian_eigen(&self.matrix);
        eig.values.iter().filter(|&&v| v > T::real(CHOI_RANK_CUTOFF)).count()
    }

    /// Minimal Kraus decomposition; errors when the matrix is not positive
    /// semidefinite within tolerance.
    pub fn kraus_channel(&self) -> Result<KrausExtraction<T>> {
        let (n, _d) = (self.dim_in, self.dim_out);
        let eig = hermitian_eigen(&self.matrix);
        let min_eig = *eig.values.last().expect("nonempty spectrum");
        if min_eig < -T::real(TP_INPUT_TOL) {
            return Err(Error::NotPsd { min_eig: min_eig.to_f64().unwrap_or(f64::NAN) });
        }
        let cutoff = T::real(CHOI_RANK_CUTOFF);
        let borderline: Vec<T> = eig
            .values
            .iter()
            .copied()
            .filter(|&v| v > cutoff && v < T::real(CHOI_BORDERLINE))
            .collect();
        let mut kraus = Vec::new();
        for (idx, &value) in eig.values.iter().enumerate() {
            if value <= cutoff {
                continue;
            }
            let scale = value.sqrt();
            // Eigenvector column w maps back to a Kraus operator through
            // A[a, c] = sqrt(λ) w[a·n + c].
            let a = ComplexMatrix::from_fn(self.dim_out, n, |row, col| {
                eig.vectors.get(row * n + col, idx).scale(scale)
            });
            kraus.push(a);
        }
        if kraus.is_empty() {
            return Err(Error::InvalidInput("Choi matrix has no positive eigenvalues".into()));
        }
        Ok(KrausExtraction {
            channel: KrausChannel::new(n, self.dim_out, kraus)?,
            borderline,
        })
    }
}

// ---------------------------------------------------------------------------
// Generators
// ---------------------------------------------------------------------------

fn check_isometry<T: Scalar>(v: &ComplexMatrix<T>, tol: f64) -> Result<()> {
    let defect = operator_norm(&(&v.adjoint().dot(v) - &ComplexMatrix::identity(v.cols())));
    if defect > T::real(tol) {
        return Err(Error::NotIsometry { defect: defect.to_f64().unwrap_or(f64::NAN) });
    }
    Ok(())
}

fn check_unit_column<T: Scalar>(psi: &ComplexMatrix<T>, tol: f64) -> Result<()> {
    if psi.cols() != 1 {
        return Err(Error::ShapeMismatch(format!(
            "expected a column vector, got {}x{}",
            psi.rows(),
            psi.cols()
        )));
    }
    let defect = (psi.hs_norm() - T::one()).abs();
    if defect > T::real(tol) {
        return Err(Error::NotUnitVector { defect: defect.to_f64().unwrap_or(f64::NAN) });
    }
    Ok(())
}

/// The nd mutually HS-orthogonal isometries U^j W V^i built from the
/// embedding W, the cyclic shift U on the output space and the clock V on
/// the input space. Requires n <= d.
pub fn gen_vij_basis<T: Scalar>(n: usize, d: usize) -> Result<Vec<ComplexMatrix<T>>> {
    if n > d {
        return Err(Error::OutOfRange(format!(
            "the isometry basis needs dim_in <= dim_out, got n = {n}, d = {d}"
        )));
    }
    let zero = Complex::new(T::zero(), T::zero());
    let one = Complex::new(T::one(), T::zero());
    // W embeds C^n into the first n coordinates of C^d.
    let w = ComplexMatrix::from_fn(d, n, |r, c| if r == c { one } else { zero });
    // U f_i = f_{i+1 mod d}.
    let u = ComplexMatrix::from_fn(d, d, |r, c| if r == (c + 1) % d { one } else { zero });
    // V e_j = ω^j e_j with ω the principal n-th root of unity.
    let tau = T::TAU();
    let nf = T::from_dim(n);
    let v = ComplexMatrix::from_fn(n, n, |r, c| {
        if r == c {
            let angle = tau * T::from_dim(r) / nf;
            Complex::new(angle.cos(), angle.sin())
        } else {
            zero
        }
    });

    let mut basis = Vec::with_capacity(n * d);
    let mut u_pow = ComplexMatrix::identity(d);
    // Iterate j (shift powers) outer, i (clock powers) inner.
    for _j in 0..d {
        let mut v_pow = ComplexMatrix::identity(n);
        let uw = u_pow.dot(&w);
        for _i in 0..n {
            basis.push(uw.dot(&v_pow));
            v_pow = v_pow.dot(&v);
        }
        u_pow = u_pow.dot(&u);
    }
    Ok(basis)
}

/// The completely depolarizing channel X ↦ tr(X) I/d.
///
/// For n <= d the Kraus family is the isometry basis {V_ij/√(nd)}; for
/// n > d, where no isometry from C^n into C^d exists, the matrix-unit
/// family {f_a e_b^*/√d} realizes the same channel.
pub fn gen_depolarizing<T: Scalar>(n: usize, d: usize) -> Result<KrausChannel<T>> {
    if n == 0 || d == 0 {
        return Err(Error::OutOfRange("depolarizing needs n, d >= 1".into()));
    }
    let kraus = if n <= d {
        let scale = T::one() / T::from_dim(n * d).sqrt();
        gen_vij_basis::<T>(n, d)?
            .into_iter()
            .map(|v| v.scaled_re(scale))
            .collect()
    } else {
        let scale = T::one() / T::from_dim(d).sqrt();
        let mut ops = Vec::with_capacity(n * d);
        for a in 0..d {
            for b in 0..n {
                let unit = ComplexMatrix::basis_column(d, a).outer(&ComplexMatrix::basis_column(n, b));
                ops.push(unit.scaled_re(scale));
            }
        }
        ops
    };
    KrausChannel::new(n, d, kraus)
}

/// Isometric channel X ↦ V X V^*.
pub fn gen_isometric<T: Scalar>(v: ComplexMatrix<T>) -> Result<KrausChannel<T>> {
    if v.cols() > v.rows() {
        return Err(Error::NotIsometry { defect: f64::INFINITY });
    }
    check_isometry(&v, 1e-10)?;
    let (d, n) = (v.rows(), v.cols());
    KrausChannel::new(n, d, vec![v])
}

/// Replacement channel X ↦ tr(X) ψψ^* with Kraus set {ψ e_i^*}.
pub fn gen_replacement<T: Scalar>(psi: &ComplexMatrix<T>, n: usize) -> Result<KrausChannel<T>> {
    check_unit_column(psi, 1e-10)?;
    let d = psi.rows();
    let kraus = (0..n)
        .map(|i| psi.outer(&ComplexMatrix::basis_column(n, i)))
        .collect();
    KrausChannel::new(n, d, kraus)
}

/// Interpolation λ·(replacement onto ψ) + (1-λ)·(depolarizing), realized by
/// scaling and concatenating the two Kraus families.
pub fn gen_e_lambda<T: Scalar>(
    lambda: T,
    psi: &ComplexMatrix<T>,
    n: usize,
    d: usize,
) -> Result<KrausChannel<T>> {
    if lambda < T::zero() || lambda > T::one() {
        return Err(Error::OutOfRange(format!(
            "lambda must lie in [0, 1], got {}",
            lambda.to_f64().unwrap_or(f64::NAN)
        )));
    }
    if psi.rows() != d {
        return Err(Error::ShapeMismatch(format!(
            "psi lives in C^{}, expected C^{d}",
            psi.rows()
        )));
    }
    // The endpoints keep a single clean family.
    if lambda == T::one() {
        return gen_replacement(psi, n);
    }
    if lambda == T::zero() {
        return gen_depolarizing(n, d);
    }
    let rep = gen_replacement(psi, n)?;
    let dep = gen_depolarizing::<T>(n, d)?;
    let mut kraus: Vec<ComplexMatrix<T>> = rep
        .kraus()
        .iter()
        .map(|a| a.scaled_re(lambda.sqrt()))
        .collect();
    kraus.extend(dep.kraus().iter().map(|a| a.scaled_re((T::one() - lambda).sqrt())));
    KrausChannel::new(n, d, kraus)
}

/// Random isometric channel Σ_j p_j V_j X V_j^*, kept in structured form so
/// the common-isometry analysis can inspect the parts.
#[derive(Clone)]
pub struct RandomIsometricChannel<T> {
    weights: Vec<T>,
    isometries: Vec<ComplexMatrix<T>>,
    dim_in: usize,
    dim_out: usize,
}

impl<T: Scalar> RandomIsometricChannel<T> {
    pub fn weights(&self) -> &[T] {
        &self.weights
    }

    pub fn isometries(&self) -> &[ComplexMatrix<T>] {
        &self.isometries
    }

    pub fn dim_in(&self) -> usize {
        self.dim_in
    }

    pub fn dim_out(&self) -> usize {
        self.dim_out
    }

    /// Kraus realization {√p_j · V_j}.
    pub fn to_kraus(&self) -> KrausChannel<T> {
        let kraus = self
            .weights
            .iter()
            .zip(&self.isometries)
            .map(|(&p, v)| v.scaled_re(p.sqrt()))
            .collect();
        KrausChannel::new(self.dim_in, self.dim_out, kraus).expect("validated parts")
    }
}

pub fn gen_random_isometric<T: Scalar>(
    weights: &[T],
    isometries: Vec<ComplexMatrix<T>>,
) -> Result<RandomIsometricChannel<T>> {
    if weights.is_empty() || weights.len() != isometries.len() {
        return Err(Error::InvalidDistribution(format!(
            "{} weights for {} isometries",
            weights.len(),
            isometries.len()
        )));
    }
    if weights.iter().any(|&p| p <= T::zero()) {
        return Err(Error::InvalidDistribution("weights must be positive".into()));
    }
    let total: T = weights.iter().copied().sum();
    if (total - T::one()).abs() > T::real(1e-10) {
        return Err(Error::InvalidDistribution(format!(
            "weights sum to {}, expected 1",
            total.to_f64().unwrap_or(f64::NAN)
        )));
    }
    let (d, n) = (isometries[0].rows(), isometries[0].cols());
    for v in &isometries {
        if v.rows() != d || v.cols() != n {
            return Err(Error::ShapeMismatch("isometries must share a shape".into()));
        }
        check_isometry(v, 1e-10)?;
    }
    Ok(RandomIsometricChannel { weights: weights.to_vec(), isometries, dim_in: n, dim_out: d })
}

fn random_cptp_with_rng<T: Scalar>(
    n: usize,
    d: usize,
    rank: usize,
    rng: &mut ChaCha8Rng,
) -> Result<KrausChannel<T>> {
    if rank < 1 || rank > n * d {
        return Err(Error::OutOfRange(format!(
            "rank must lie in 1..={}, got {rank}",
            n * d
        )));
    }
    if rank * d < n {
        return Err(Error::OutOfRange(format!(
            "no trace-preserving channel exists with rank {rank}: rank*d = {} < n = {n}",
            rank * d
        )));
    }
    // Stinespring route: a Haar isometry V: C^n -> C^d ⊗ C^rank, sliced along
    // the environment index. A_i[a, c] = V[a·rank + i, c].
    let v = sample_isometry::<T, _>(d * rank, n, rng)?;
    let kraus = (0..rank)
        .map(|i| ComplexMatrix::from_fn(d, n, |a, c| v.get(a * rank + i, c)))
        .collect();
    KrausChannel::new(n, d, kraus)
}

/// Seeded random CPTP channel with the given Choi rank, built from a Haar
/// Stinespring isometry. The same seed reproduces the same Kraus list.
pub fn gen_random_cptp<T: Scalar>(
    n: usize,
    d: usize,
    rank: usize,
    seed: u64,
) -> Result<KrausChannel<T>> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    random_cptp_with_rng(n, d, rank, &mut rng)
}

/// Ensemble of seeded random CPTP channels: sample `i` draws from stream `i`
/// of the seed, so the list does not depend on evaluation order. Ranks are
/// drawn uniformly from the feasible range.
pub fn random_cptp_ensemble<T: Scalar>(
    n: usize,
    d: usize,
    count: usize,
    seed: u64,
) -> Result<Vec<KrausChannel<T>>> {
    let min_rank = n.div_ceil(d).max(1);
    (0..count)
        .map(|i| {
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            rng.set_stream(i as u64);
            let rank = rng.gen_range(min_rank..=n * d);
            random_cptp_with_rng(n, d, rank, &mut rng)
        })
        .collect()
}
