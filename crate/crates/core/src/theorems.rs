//! Executable verifiers for the norm-range results: the bounds on
//! ||E||₂² + ||Ẽ||₂², the extremal-channel classifications, the sweep
//! families interpolating between the two bounds, random-isometric channel
//! analysis, and the broadcasting-map identity.
//!
//! Classification convention: a sum within 1e-8 of a bound counts as "at the
//! bound"; exact constructions sit 6+ orders of magnitude inside that, so
//! the threshold cleanly separates them from Monte Carlo noise.
//!
//! Note on the upper bound: an isometry C^n -> C^d needs n <= d, so for
//! n > d only replacement channels can attain sum = n² + n.

use crate::channels::{
    gen_depolarizing, gen_e_lambda, gen_vij_basis, KrausChannel, RandomIsometricChannel,
};
use crate::eig::{hermitian_eigen, operator_norm};
use crate::error::{Error, Result};
use crate::haar::{mc_over_sphere, sample_unit_vector, McEstimate, SphereSampler};
use crate::matrix::ComplexMatrix;
use crate::scalar::Scalar;
use crate::tensor::{kron, swap_operator};
use num_complex::Complex;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

/// "At the bound" threshold for classification.
pub const BOUND_TOL: f64 = 1e-8;

/// A pure input counts as a purity-defect witness below this output purity.
pub const PURITY_WITNESS_TOL: f64 = 1e-6;

/// Random pure inputs searched for a purity defect, on top of the basis.
const PURITY_SEARCH_SAMPLES: usize = 200;

/// How a channel relates to the bounds on ||E||₂² + ||Ẽ||₂².
#[derive(Clone, Debug, PartialEq, Eq)]
pub enum ChannelClass {
    Depolarizing,
    Isometric,
    Replacement,
    Interior,
}

impl ChannelClass {
    pub fn name(&self) -> &'static str {
        match self {
            ChannelClass::Depolarizing => "Depolarizing",
            ChannelClass::Isometric => "Isometric",
            ChannelClass::Replacement => "Replacement",
            ChannelClass::Interior => "Interior",
        }
    }
}

/// Norms, bounds, classification and the Monte Carlo purity bridge for one
/// channel.
#[derive(Clone, Debug)]
pub struct Theorem1Report<T> {
    pub n: usize,
    pub d: usize,
    pub hs_sq: T,
    pub comp_hs_sq: T,
    pub sum: T,
    pub lower_bound: T,
    pub upper_bound: T,
    pub classification: ChannelClass,
    /// Monte Carlo estimate of the mean output purity over pure inputs.
    pub mc_value: T,
    pub mc_stderr: T,
    /// Predicted value sum / (n(n+1)).
    pub mc_predicted: T,
    pub mc_samples: u64,
}

impl<T: Scalar> Theorem1Report<T> {
    /// Slack of the two bound inequalities (negative values are violations).
    pub fn bound_slack(&self) -> (T, T) {
        (self.sum - self.lower_bound, self.upper_bound - self.sum)
    }
}

/// Mean output purity ∫ tr(E(φφ*)²) dφ, estimated by Monte Carlo.
///
/// The integrand is evaluated without forming E(φφ*) through `apply`:
/// with v_i = A_i φ, the output is ρ = Σ_i v_i v_i^† and
/// tr(ρ²) = Σ_{ij} |ρ_ij|².
pub fn mc_mean_output_purity<T: Scalar>(
    e: &KrausChannel<T>,
    samples: u64,
    seed: u64,
) -> McEstimate<T> {
    let n = e.dim_in();
    let d = e.dim_out();
    let m = e.kraus_count();
    let e = e.clone();
    let zero = Complex::new(T::zero(), T::zero());
    crate::haar::mc_run(
        1,
        1,
        samples,
        seed,
        move || (vec![zero; m * d], vec![zero; d * d]),
        move |(images, rho), rng, buf| {
            let phi = crate::haar::sample_unit_vector::<T, _>(n, rng);
            for (i, a) in e.kraus().iter().enumerate() {
                for r in 0..d {
                    let mut acc = zero;
                    for c in 0..n {
                        acc += a.get(r, c) * phi.get(c, 0);
                    }
                    images[i * d + r] = acc;
                }
            }
            for z in rho.iter_mut() {
                *z = zero;
            }
            for i in 0..m {
                let v = &images[i * d..(i + 1) * d];
                for r in 0..d {
                    for c in 0..d {
                        rho[r * d + c] += v[r] * v[c].conj();
                    }
                }
            }
            let purity: T = rho.iter().map(|z| z.norm_sqr()).sum();
            buf[0] = Complex::new(purity, T::zero());
        },
    )
}

/// Full report for one trace-preserving channel: norms via the Kraus-overlap
/// and E(I) formulas, bound check, classification, and the Monte Carlo
/// purity bridge.
pub fn theorem1_report<T: Scalar>(
    e: &KrausChannel<T>,
    mc_samples: u64,
    seed: u64,
) -> Result<Theorem1Report<T>> {
    let (n, d) = (e.dim_in(), e.dim_out());
    let (nf, df) = (T::from_dim(n), T::from_dim(d));
    let hs_sq = e.hs_norm_sq();
    let comp_hs_sq = e.comp_hs_norm_sq();
    let sum = hs_sq + comp_hs_sq;
    let lower = (nf + nf * nf) / df;
    let upper = nf * nf + nf;
    let tol = T::real(BOUND_TOL);

    let classification = if sum <= lower + tol {
        // Cross-check the structural statement on the matrix-unit basis.
        let mut max_dev = T::zero();
        for a in 0..n {
            for b in 0..n {
                let unit = ComplexMatrix::basis_column(n, a)
                    .outer(&ComplexMatrix::basis_column(n, b));
                let out = e.apply(&unit)?;
                let expected = ComplexMatrix::identity(d).scaled(unit.trace().unscale(df));
                max_dev = max_dev.max(out.max_abs_diff(&expected));
            }
        }
        if max_dev > tol {
            return Err(Error::InvalidInput(format!(
                "channel sits at the lower bound but deviates from the depolarizing action by {:e}",
                max_dev.to_f64().unwrap_or(f64::NAN)
            )));
        }
        ChannelClass::Depolarizing
    } else if sum >= upper - tol {
        match purity_classify(e)? {
            PurityVerdict::Isometric(_) => ChannelClass::Isometric,
            PurityVerdict::Replacement(_) => ChannelClass::Replacement,
            PurityVerdict::Not { defect, .. } => {
                return Err(Error::InvalidInput(format!(
                    "channel sits at the upper bound but shows a purity defect of {:e}",
                    defect.to_f64().unwrap_or(f64::NAN)
                )))
            }
        }
    } else {
        ChannelClass::Interior
    };

    let est = mc_mean_output_purity(e, mc_samples, seed);
    let (mc_value, mc_stderr) = est.scalar();
    Ok(Theorem1Report {
        n,
        d,
        hs_sq,
        comp_hs_sq,
        sum,
        lower_bound: lower,
        upper_bound: upper,
        classification,
        mc_value: mc_value.re,
        mc_stderr,
        mc_predicted: sum / (nf * (nf + T::one())),
        mc_samples,
    })
}

/// Numeric state of the four equivalent lower-bound conditions for one
/// channel.
#[derive(Clone, Copy, Debug)]
pub struct EquivConditions<T> {
    /// |sum - (n+n²)/d|
    pub dev_sum: T,
    /// Largest deviation of the action from X ↦ tr(X) I/d on a basis.
    pub dev_action: T,
    /// |‖E‖₂ + ‖Ẽ‖₂ - (√n+n)/√d|
    pub dev_norm_sum: T,
    /// |‖E‖₂² - n/d|
    pub dev_hs: T,
}

impl<T: Scalar> EquivConditions<T> {
    pub fn holds(&self, tol: T) -> [bool; 4] {
        [
            self.dev_sum <= tol,
            self.dev_action <= tol,
            self.dev_norm_sum <= tol,
            self.dev_hs <= tol,
        ]
    }
}

/// Evaluate the four lower-bound conditions for a channel.
pub fn equiv_conditions<T: Scalar>(e: &KrausChannel<T>) -> Result<EquivConditions<T>> {
    let (n, d) = (e.dim_in(), e.dim_out());
    let (nf, df) = (T::from_dim(n), T::from_dim(d));
    let hs_sq = e.hs_norm_sq();
    let comp_sq = e.comp_hs_norm_sq();
    let mut dev_action = T::zero();
    for a in 0..n {
        for b in 0..n {
            let unit =
                ComplexMatrix::basis_column(n, a).outer(&ComplexMatrix::basis_column(n, b));
            let out = e.apply(&unit)?;
            let expected = ComplexMatrix::identity(d).scaled(unit.trace().unscale(df));
            dev_action = dev_action.max(out.max_abs_diff(&expected));
        }
    }
    Ok(EquivConditions {
        dev_sum: (hs_sq + comp_sq - (nf + nf * nf) / df).abs(),
        dev_action,
        dev_norm_sum: (hs_sq.sqrt() + comp_sq.sqrt() - (nf.sqrt() + nf) / df.sqrt()).abs(),
        dev_hs: (hs_sq - nf / df).abs(),
    })
}

/// Result of the lower-bound equivalence sweep.
#[derive(Clone, Debug)]
pub struct EquivCheckReport<T> {
    pub n: usize,
    pub d: usize,
    /// Largest deviation among the four conditions for the depolarizing
    /// channel itself.
    pub depolarizing_max_dev: T,
    /// Channels whose four conditions did not agree on holding/failing.
    pub violations: usize,
    pub channels_checked: usize,
}

/// Check that the four conditions hold simultaneously for the depolarizing
/// channel and fail simultaneously for perturbed/random channels.
pub fn theorem1_equiv_check<T: Scalar>(n: usize, d: usize, seed: u64) -> Result<EquivCheckReport<T>> {
    if n > 4 || d > 4 {
        return Err(Error::OutOfRange("equivalence sweep is desk-scale: n, d <= 4".into()));
    }
    let dep = gen_depolarizing::<T>(n, d)?;
    let conds = equiv_conditions(&dep)?;
    let depolarizing_max_dev = conds
        .dev_sum
        .max(conds.dev_action)
        .max(conds.dev_norm_sum)
        .max(conds.dev_hs);
    if depolarizing_max_dev > T::real(1e-10) {
        return Err(Error::InvalidInput(format!(
            "depolarizing channel fails its own equivalence conditions by {:e}",
            depolarizing_max_dev.to_f64().unwrap_or(f64::NAN)
        )));
    }

    // Perturbed channels: interpolations with small λ plus random channels.
    let mut violations = 0;
    let mut checked = 0;
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let equivalence_tol = T::real(1e-6);
    for trial in 0..50 {
        let e = if trial % 2 == 0 {
            let lambda = T::real(0.05) + T::real(0.9) * T::real((trial as f64) / 50.0);
            let psi = sample_unit_vector::<T, _>(d, &mut rng);
            gen_e_lambda(lambda, &psi, n, d)?
        } else {
            crate::channels::random_cptp_ensemble::<T>(n, d, 1, seed ^ (trial as u64))?
                .pop()
                .expect("one channel")
        };
        let conds = equiv_conditions(&e)?;
        checked += 1;
        let holds = conds.holds(equivalence_tol);
        // Either all four hold or all four fail.
        if holds.iter().any(|&h| h) != holds.iter().all(|&h| h) {
            violations += 1;
        }
    }
    Ok(EquivCheckReport { n, d, depolarizing_max_dev, violations, channels_checked: checked })
}

/// Structural verdict on whether a channel preserves purity.
#[derive(Clone, Debug)]
pub enum PurityVerdict<T> {
    /// X ↦ V X V^* with the recovered isometry, phase-gauged.
    Isometric(ComplexMatrix<T>),
    /// X ↦ tr(X) ψψ^* with the recovered unit vector, phase-gauged.
    Replacement(ComplexMatrix<T>),
    /// A pure input with an impure image; `defect` = 1 - tr(E(xx*)²).
    Not { witness: ComplexMatrix<T>, defect: T },
}

impl<T: Scalar> PurityVerdict<T> {
    pub fn name(&self) -> &'static str {
        match self {
            PurityVerdict::Isometric(_) => "Isometric",
            PurityVerdict::Replacement(_) => "Replacement",
            PurityVerdict::Not { .. } => "Not",
        }
    }
}

/// Distance between two matrices minimized over a global phase:
/// min_θ max_entry |a - e^{iθ} b|. This is the right metric for comparing
/// recovered isometries or state vectors against references, since both are
/// only defined up to a phase (and gauge conventions based on the largest
/// entry are unstable when entry moduli tie, as they do for 2×2 unitaries).
pub fn phase_aligned_distance<T: Scalar>(a: &ComplexMatrix<T>, b: &ComplexMatrix<T>) -> T {
    let inner = match a.hs_inner(b) {
        Ok(v) => v,
        Err(_) => return T::infinity(),
    };
    let norm = inner.norm();
    if norm <= T::zero() {
        return a.max_abs_diff(b);
    }
    a.max_abs_diff(&b.scaled(inner.unscale(norm)))
}

/// Rotate a matrix by a global phase so its largest-modulus entry is real
/// and positive. Recovered isometries and vectors are only defined up to a
/// phase; this fixes the gauge for comparisons.
pub fn fix_global_phase<T: Scalar>(m: &ComplexMatrix<T>) -> ComplexMatrix<T> {
    let mut best = Complex::new(T::zero(), T::zero());
    let mut best_norm = T::zero();
    for &z in m.data() {
        let nz = z.norm();
        if nz > best_norm {
            best_norm = nz;
            best = z;
        }
    }
    if best_norm <= T::zero() {
        return m.clone();
    }
    m.scaled(best.conj().unscale(best_norm))
}

/// Decide whether a trace-preserving channel maps every pure state to a
/// pure state, and recover the structure when it does.
///
/// The Kraus list is minimized through the Choi eigendecomposition first;
/// a single isometric operator means an isometric channel, a family of
/// rank-one operators with a common left vector means a replacement
/// channel, and otherwise a witness with maximal purity defect is returned
/// from the basis plus a fixed random search.
pub fn purity_classify<T: Scalar>(e: &KrausChannel<T>) -> Result<PurityVerdict<T>> {
    let defect = e.tp_defect();
    if defect > T::real(crate::channels::TP_INPUT_TOL) {
        return Err(Error::NotTracePreserving { defect: defect.to_f64().unwrap_or(f64::NAN) });
    }
    let minimized = e.minimized()?.channel;
    let n = minimized.dim_in();
    let tol = T::real(BOUND_TOL);

    if minimized.kraus_count() == 1 {
        let a = &minimized.kraus()[0];
        let gram_defect =
            operator_norm(&(&a.adjoint().dot(a) - &ComplexMatrix::identity(n)));
        if gram_defect <= tol {
            return Ok(PurityVerdict::Isometric(fix_global_phase(a)));
        }
    } else {
        // Replacement test: E(I) = n ψψ* is rank one; every minimized Kraus
        // operator must then factor through ψ.
        let ei = minimized.apply_identity();
        let eig = hermitian_eigen(&ei);
        let d = minimized.dim_out();
        let psi = ComplexMatrix::from_fn(d, 1, |r, _| eig.vectors.get(r, 0));
        let mut is_replacement = eig.values.len() == 1
            || eig.values.get(1).map(|&v| v.abs() <= tol).unwrap_or(true);
        if is_replacement {
            for a in minimized.kraus() {
                // Residual of A after projecting onto the ψ direction.
                let projected = psi.dot(&psi.adjoint().dot(a));
                if (a - &projected).max_abs_entry() > tol {
                    is_replacement = false;
                    break;
                }
            }
        }
        if is_replacement {
            return Ok(PurityVerdict::Replacement(fix_global_phase(&psi)));
        }
    }

    // Witness search: basis vectors plus a fixed seeded random sample.
    let mut rng = ChaCha8Rng::seed_from_u64(0x7075_7269_7479);
    let mut worst_defect = T::neg_infinity();
    let mut witness = ComplexMatrix::basis_column(n, 0);
    let mut consider = |x: ComplexMatrix<T>, e: &KrausChannel<T>| -> Result<()> {
        let rho = e.apply(&x.outer(&x))?;
        let purity = rho.dot(&rho).trace().re;
        let defect = T::one() - purity;
        if defect > worst_defect {
            worst_defect = defect;
            witness = x;
        }
        Ok(())
    };
    for i in 0..n {
        consider(ComplexMatrix::basis_column(n, i), e)?;
    }
    for _ in 0..PURITY_SEARCH_SAMPLES {
        consider(sample_unit_vector(n, &mut rng), e)?;
    }
    Ok(PurityVerdict::Not { witness, defect: worst_defect })
}

/// Families of channels sweeping the interval between the two bounds.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum SweepFamily {
    /// λ tr(X) ψψ* + (1-λ) tr(X) I/d.
    ELambda,
    /// t V X V^* + (1-t) tr(X) I/d with a fixed isometry V.
    Cor10T,
}

impl std::str::FromStr for SweepFamily {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        match s {
            "e_lambda" | "elambda" => Ok(SweepFamily::ELambda),
            "cor10_t" | "cor10t" => Ok(SweepFamily::Cor10T),
            other => Err(Error::InvalidInput(format!("unknown sweep family \"{other}\""))),
        }
    }
}

/// One sweep row.
#[derive(Clone, Copy, Debug)]
pub struct SweepPoint<T> {
    pub parameter: T,
    pub hs_sq: T,
    pub comp_hs_sq: T,
    pub sum: T,
    pub lower_bound: T,
    pub upper_bound: T,
}

/// Closed-form norms of the interpolated replacement/depolarizing channel.
pub fn e_lambda_closed_forms<T: Scalar>(n: usize, d: usize, lambda: T) -> (T, T) {
    let (nf, df) = (T::from_dim(n), T::from_dim(d));
    let lam_sq = lambda * lambda;
    let hs = nf * (T::one() - lam_sq) / df + nf * lam_sq;
    let comp = nf * nf * (T::one() - lam_sq) / df + nf * nf * lam_sq;
    (hs, comp)
}

/// Closed-form norms of the isometry/depolarizing interpolation.
pub fn cor10_t_closed_forms<T: Scalar>(n: usize, d: usize, t: T) -> (T, T) {
    let (nf, df) = (T::from_dim(n), T::from_dim(d));
    let t_sq = t * t;
    let hs = nf * nf * t_sq + nf * (T::one() - t_sq) / df;
    let comp = nf * nf * (T::one() - t_sq) / df + nf * t_sq;
    (hs, comp)
}

/// Sweep a family over a uniform grid on [0, 1], computing the norms from
/// the constructed channels (the closed forms above are the independent
/// check).
pub fn range_sweep<T: Scalar>(
    n: usize,
    d: usize,
    grid_size: usize,
    family: SweepFamily,
    seed: u64,
) -> Result<Vec<SweepPoint<T>>> {
    if grid_size < 2 {
        return Err(Error::OutOfRange("sweep grid needs at least 2 points".into()));
    }
    if family == SweepFamily::Cor10T && n > d {
        return Err(Error::OutOfRange(
            "the isometry interpolation needs n <= d".into(),
        ));
    }
    let (nf, df) = (T::from_dim(n), T::from_dim(d));
    let lower = (nf + nf * nf) / df;
    let upper = nf * nf + nf;

    // ψ is an arbitrary unit vector; draw it from the seed to exercise
    // unitary invariance of the closed forms.
    let psi = SphereSampler::<T>::new(d, seed).sample();
    let vij = if family == SweepFamily::Cor10T {
        Some(gen_vij_basis::<T>(n, d)?)
    } else {
        None
    };

    let mut points = Vec::with_capacity(grid_size);
    for idx in 0..grid_size {
        let x = T::from_dim(idx) / T::from_dim(grid_size - 1);
        let channel = match family {
            SweepFamily::ELambda => gen_e_lambda(x, &psi, n, d)?,
            SweepFamily::Cor10T => {
                let basis = vij.as_ref().expect("built above");
                let mut kraus = vec![basis[0].scaled_re(x.sqrt())];
                let rest = ((T::one() - x) / T::from_dim(n * d)).sqrt();
                kraus.extend(basis.iter().map(|v| v.scaled_re(rest)));
                KrausChannel::new(n, d, kraus)?
            }
        };
        let hs_sq = channel.hs_norm_sq();
        let comp_hs_sq = channel.comp_hs_norm_sq();
        points.push(SweepPoint {
            parameter: x,
            hs_sq,
            comp_hs_sq,
            sum: hs_sq + comp_hs_sq,
            lower_bound: lower,
            upper_bound: upper,
        });
    }
    Ok(points)
}

/// Analysis of a random isometric channel against the n²/d ≤ ||Ẽ||₂² ≤ n
/// window, with the common-isometry decomposition at the upper endpoint.
#[derive(Clone, Debug)]
pub struct Cor10aReport<T> {
    pub n: usize,
    pub d: usize,
    pub comp_hs_sq: T,
    pub lower_bound: T,
    pub upper_bound: T,
    pub at_upper: bool,
    /// Largest pairwise deviation among the range projectors V_j V_j^*.
    pub max_projector_dev: T,
    /// At the upper endpoint: the common isometry and the unitaries U_j with
    /// V_j = V U_j, each verified unitary.
    pub decomposition: Option<(ComplexMatrix<T>, Vec<ComplexMatrix<T>>)>,
    /// Largest unitarity defect among the recovered U_j.
    pub max_unitary_defect: T,
}

pub fn cor10a_check<T: Scalar>(ch: &RandomIsometricChannel<T>) -> Result<Cor10aReport<T>> {
    let (n, d) = (ch.dim_in(), ch.dim_out());
    if n > d {
        return Err(Error::OutOfRange("random isometric channels need n <= d".into()));
    }
    let kraus = ch.to_kraus();
    let comp_hs_sq = kraus.comp_hs_norm_sq();
    let (nf, df) = (T::from_dim(n), T::from_dim(d));
    let lower = nf * nf / df;
    let upper = nf;

    let mut max_projector_dev = T::zero();
    let parts = ch.isometries();
    for i in 0..parts.len() {
        let pi = parts[i].dot(&parts[i].adjoint());
        for pj in parts.iter().skip(i + 1) {
            let proj_j = pj.dot(&pj.adjoint());
            max_projector_dev = max_projector_dev.max(pi.max_abs_diff(&proj_j));
        }
    }

    let at_upper = comp_hs_sq >= upper - T::real(BOUND_TOL);
    let mut decomposition = None;
    let mut max_unitary_defect = T::zero();
    if at_upper {
        if max_projector_dev > T::real(BOUND_TOL) {
            return Err(Error::InvalidInput(format!(
                "||Ẽ||₂² sits at the upper bound but the range projectors differ by {:e}",
                max_projector_dev.to_f64().unwrap_or(f64::NAN)
            )));
        }
        let v = parts[0].clone();
        let unitaries: Vec<ComplexMatrix<T>> = parts
            .iter()
            .map(|vj| v.adjoint().dot(vj))
            .collect();
        for u in &unitaries {
            let defect =
                operator_norm(&(&u.adjoint().dot(u) - &ComplexMatrix::identity(n)));
            max_unitary_defect = max_unitary_defect.max(defect);
        }
        decomposition = Some((v, unitaries));
    }

    Ok(Cor10aReport {
        n,
        d,
        comp_hs_sq,
        lower_bound: lower,
        upper_bound: upper,
        at_upper,
        max_projector_dev,
        decomposition,
        max_unitary_defect,
    })
}

// ---------------------------------------------------------------------------
// Broadcasting identity
// ---------------------------------------------------------------------------

/// Canonical broadcasting map CB(X) = (S(X⊗I) + (X⊗I)S)/2.
pub fn broadcast_cb<T: Scalar>(x: &ComplexMatrix<T>) -> Result<ComplexMatrix<T>> {
    let n = x.rows();
    if !x.is_square() {
        return Err(Error::ShapeMismatch("broadcasting input must be square".into()));
    }
    let s = swap_operator::<T>(n);
    let xi = kron(x, &ComplexMatrix::identity(n))?;
    Ok((&s.dot(&xi) + &xi.dot(&s)).scaled_re(T::real(0.5)))
}

/// Closed form of the mean-limited broadcaster:
/// M(X) = (n+2)²/(8(n+1)) [S(X⊗I) + (X⊗I)S] - tr(X) I⊗I / (4(n+1)).
pub fn broadcast_m_closed<T: Scalar>(x: &ComplexMatrix<T>) -> Result<ComplexMatrix<T>> {
    let n = x.rows();
    if !x.is_square() {
        return Err(Error::ShapeMismatch("broadcasting input must be square".into()));
    }
    let nf = T::from_dim(n);
    let s = swap_operator::<T>(n);
    let xi = kron(x, &ComplexMatrix::identity(n))?;
    let anti = &s.dot(&xi) + &xi.dot(&s);
    let c1 = (nf + T::real(2.0)) * (nf + T::real(2.0)) / (T::real(8.0) * (nf + T::one()));
    let c2 = T::one() / (T::real(4.0) * (nf + T::one()));
    let ident2 = ComplexMatrix::identity(n * n).scaled(x.trace().scale(c2));
    Ok(&anti.scaled_re(c1) - &ident2)
}

/// Completely depolarizing broadcaster M'(X) = tr(X) (I/n) ⊗ (I/n).
pub fn broadcast_m_prime<T: Scalar>(x: &ComplexMatrix<T>) -> Result<ComplexMatrix<T>> {
    let n = x.rows();
    if !x.is_square() {
        return Err(Error::ShapeMismatch("broadcasting input must be square".into()));
    }
    let nf = T::from_dim(n);
    Ok(ComplexMatrix::identity(n * n).scaled(x.trace().unscale(nf * nf)))
}

/// Mixing weight p = 4(n+1)/(n+2)².
pub fn broadcast_p<T: Scalar>(n: usize) -> T {
    let nf = T::from_dim(n);
    T::real(4.0) * (nf + T::one()) / ((nf + T::real(2.0)) * (nf + T::real(2.0)))
}

/// Monte Carlo evaluation of M(X) = n ∫ tr(ρ_φ X) (ρ_φ ⊗ ρ_φ) dφ with
/// ρ_φ = ((n+2) φφ* - I)/2.
pub fn mc_broadcast_m<T: Scalar>(
    x: &ComplexMatrix<T>,
    samples: u64,
    seed: u64,
) -> Result<McEstimate<T>> {
    let n = x.rows();
    if !x.is_square() {
        return Err(Error::ShapeMismatch("broadcasting input must be square".into()));
    }
    let x = x.clone();
    let dim = n * n;
    Ok(mc_over_sphere(n, dim, dim, samples, seed, move |phi, buf| {
        let nf = T::from_dim(n);
        let half = T::real(0.5);
        let rho = (&phi.outer(phi).scaled_re(nf + T::real(2.0)) - &ComplexMatrix::identity(n))
            .scaled_re(half);
        let weight = rho.dot(&x).trace().scale(nf);
        let prod = kron(&rho, &rho).expect("small");
        for (o, &z) in buf.iter_mut().zip(prod.data()) {
            *o = z * weight;
        }
    }))
}

/// Result of checking CB = p M + (1-p) M' exactly on the matrix-unit basis,
/// trace preservation of M, and the Monte Carlo route to M.
#[derive(Clone, Debug)]
pub struct BroadcastReport<T> {
    pub n: usize,
    pub p: T,
    /// Largest entrywise defect of the identity over the matrix-unit basis.
    pub max_identity_defect: T,
    /// Largest trace-preservation defect of M over the basis.
    pub max_trace_defect: T,
    /// Worst Monte Carlo deviation of M(X) in units of stderr.
    pub mc_worst_sigma: T,
    pub mc_samples: u64,
}

pub fn broadcasting_verify<T: Scalar>(
    n: usize,
    mc_samples: u64,
    seed: u64,
) -> Result<BroadcastReport<T>> {
    if n == 0 {
        return Err(Error::OutOfRange("broadcasting needs n >= 1".into()));
    }
    let p = broadcast_p::<T>(n);
    let one_minus_p = T::one() - p;
    let mut max_identity_defect = T::zero();
    let mut max_trace_defect = T::zero();
    for a in 0..n {
        for b in 0..n {
            let unit =
                ComplexMatrix::basis_column(n, a).outer(&ComplexMatrix::basis_column(n, b));
            let cb = broadcast_cb(&unit)?;
            let m = broadcast_m_closed(&unit)?;
            let mp = broadcast_m_prime(&unit)?;
            let combo = &m.scaled_re(p) + &mp.scaled_re(one_minus_p);
            max_identity_defect = max_identity_defect.max(cb.max_abs_diff(&combo));
            max_trace_defect =
                max_trace_defect.max((m.trace() - unit.trace()).norm());
        }
    }

    // Monte Carlo bridge on a seeded random Hermitian input.
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let x = crate::haar::gaussian_matrix::<T, _>(n, n, &mut rng).hermitize();
    let est = mc_broadcast_m(&x, mc_samples, seed)?;
    let exact = broadcast_m_closed(&x)?;
    let mc_worst_sigma = est.worst_sigma_ratio(&exact, T::real(crate::haar::MC_ABS_FLOOR));

    Ok(BroadcastReport {
        n,
        p,
        max_identity_defect,
        max_trace_defect,
        mc_worst_sigma,
        mc_samples,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::channels::{gen_isometric, gen_random_cptp, gen_random_isometric, gen_replacement};
    use crate::haar::sample_isometry;
    use rand::SeedableRng;

    type M = ComplexMatrix<f64>;

    #[test]
    fn theorem1_depolarizing_lower_bound() {
        let e = gen_depolarizing::<f64>(3, 2).unwrap();
        let report = theorem1_report(&e, 2_000, 1).unwrap();
        assert_eq!(report.classification, ChannelClass::Depolarizing);
        assert!((report.sum - 6.0).abs() < 1e-12);
        assert!((report.lower_bound - 6.0).abs() < 1e-14);
    }

    #[test]
    fn theorem1_identity_upper_bound() {
        let e = KrausChannel::<f64>::identity(3);
        let report = theorem1_report(&e, 2_000, 1).unwrap();
        assert_eq!(report.classification, ChannelClass::Isometric);
        assert!((report.sum - 12.0).abs() < 1e-12);
    }

    #[test]
    fn theorem1_interior_channel() {
        let psi = M::basis_column(2, 0);
        let e = gen_e_lambda(0.5, &psi, 2, 2).unwrap();
        let report = theorem1_report(&e, 2_000, 1).unwrap();
        assert_eq!(report.classification, ChannelClass::Interior);
        assert!((report.sum - 3.75).abs() < 1e-12);
        assert!(report.sum > report.lower_bound && report.sum < report.upper_bound);
    }

    #[test]
    fn theorem1_mc_bridge() {
        let e = gen_random_cptp::<f64>(3, 2, 3, 55).unwrap();
        let report = theorem1_report(&e, 50_000, 9).unwrap();
        let dev = (report.mc_value - report.mc_predicted).abs();
        assert!(dev <= 5.0 * report.mc_stderr + 1e-12, "dev {dev} stderr {}", report.mc_stderr);
    }

    #[test]
    fn equivalence_check_families() {
        let report = theorem1_equiv_check::<f64>(2, 2, 3).unwrap();
        assert_eq!(report.violations, 0);
        assert!(report.depolarizing_max_dev <= 1e-10);
        assert_eq!(report.channels_checked, 50);
        // n = d = 1: the only channel is the scalar identity, which is also
        // depolarizing; all conditions hold.
        let report = theorem1_equiv_check::<f64>(1, 1, 3).unwrap();
        assert_eq!(report.violations, 0);
    }

    #[test]
    fn equiv_conditions_fail_together_for_e_lambda() {
        let psi = M::basis_column(2, 0);
        let e = gen_e_lambda(0.1, &psi, 2, 2).unwrap();
        let conds = equiv_conditions(&e).unwrap();
        let holds = conds.holds(1e-6);
        assert!(holds.iter().all(|&h| !h), "{conds:?}");
    }

    #[test]
    fn purity_isometric_recovers_input() {
        let mut rng = ChaCha8Rng::seed_from_u64(61);
        let v = sample_isometry::<f64, _>(3, 2, &mut rng).unwrap();
        let e = gen_isometric(v.clone()).unwrap();
        match purity_classify(&e).unwrap() {
            PurityVerdict::Isometric(rec) => {
                let dev = phase_aligned_distance(&rec, &v);
                assert!(dev <= 1e-8, "dev {dev}");
            }
            other => panic!("expected isometric, got {}", other.name()),
        }
    }

    #[test]
    fn purity_replacement_recovers_psi() {
        let mut rng = ChaCha8Rng::seed_from_u64(62);
        let psi = sample_unit_vector::<f64, _>(3, &mut rng);
        let e = gen_replacement(&psi, 2).unwrap();
        match purity_classify(&e).unwrap() {
            PurityVerdict::Replacement(rec) => {
                let dev = phase_aligned_distance(&rec, &psi);
                assert!(dev <= 1e-8, "dev {dev}");
            }
            other => panic!("expected replacement, got {}", other.name()),
        }
    }

    #[test]
    fn purity_depolarizing_witness() {
        let e = gen_depolarizing::<f64>(2, 2).unwrap();
        match purity_classify(&e).unwrap() {
            PurityVerdict::Not { witness, defect } => {
                // Every pure input maps to I/2: defect 1 - 1/2 = 1/2.
                assert!((defect - 0.5).abs() < 1e-10);
                assert!((witness.hs_norm() - 1.0).abs() < 1e-10);
            }
            other => panic!("expected Not, got {}", other.name()),
        }
    }

    #[test]
    fn purity_random_channel_not() {
        let e = gen_random_cptp::<f64>(2, 2, 3, 77).unwrap();
        match purity_classify(&e).unwrap() {
            PurityVerdict::Not { defect, .. } => assert!(defect > 1e-6),
            other => panic!("expected Not, got {}", other.name()),
        }
    }

    #[test]
    fn purity_replacement_n1_collapses_to_isometric() {
        let mut rng = ChaCha8Rng::seed_from_u64(63);
        let psi = sample_unit_vector::<f64, _>(3, &mut rng);
        let e = gen_replacement(&psi, 1).unwrap();
        assert!(matches!(purity_classify(&e).unwrap(), PurityVerdict::Isometric(_)));
    }

    #[test]
    fn sweep_e_lambda_frozen_points() {
        let points = range_sweep::<f64>(2, 2, 3, SweepFamily::ELambda, 5).unwrap();
        let sums: Vec<f64> = points.iter().map(|p| p.sum).collect();
        assert!((sums[0] - 3.0).abs() < 1e-10);
        assert!((sums[1] - 3.75).abs() < 1e-10);
        assert!((sums[2] - 6.0).abs() < 1e-10);
    }

    #[test]
    fn sweep_families_match_closed_forms() {
        for family in [SweepFamily::ELambda, SweepFamily::Cor10T] {
            let points = range_sweep::<f64>(2, 3, 21, family, 7).unwrap();
            let mut last_sum = f64::NEG_INFINITY;
            for p in &points {
                let (hs, comp) = match family {
                    SweepFamily::ELambda => e_lambda_closed_forms(2, 3, p.parameter),
                    SweepFamily::Cor10T => cor10_t_closed_forms(2, 3, p.parameter),
                };
                assert!((p.hs_sq - hs).abs() <= 1e-10, "{family:?} hs at {}", p.parameter);
                assert!((p.comp_hs_sq - comp).abs() <= 1e-10, "{family:?} comp at {}", p.parameter);
                assert!(p.sum >= last_sum - 1e-12, "monotone");
                last_sum = p.sum;
            }
            assert!((points[0].sum - points[0].lower_bound).abs() < 1e-10);
            assert!((points.last().unwrap().sum - points[0].upper_bound).abs() < 1e-10);
        }
    }

    #[test]
    fn sweep_with_two_points_returns_the_bounds() {
        let points = range_sweep::<f64>(3, 2, 2, SweepFamily::ELambda, 1).unwrap();
        assert_eq!(points.len(), 2);
        assert!((points[0].sum - points[0].lower_bound).abs() < 1e-10);
        assert!((points[1].sum - points[1].upper_bound).abs() < 1e-10);
    }

    #[test]
    fn sweep_rejects_bad_inputs() {
        assert!(range_sweep::<f64>(2, 2, 1, SweepFamily::ELambda, 0).is_err());
        assert!(range_sweep::<f64>(3, 2, 5, SweepFamily::Cor10T, 0).is_err());
    }

    #[test]
    fn cor10a_common_isometry() {
        let mut rng = ChaCha8Rng::seed_from_u64(64);
        let v = sample_isometry::<f64, _>(3, 2, &mut rng).unwrap();
        let u = crate::haar::sample_unitary::<f64, _>(2, &mut rng);
        let ch = gen_random_isometric(&[0.4, 0.6], vec![v.clone(), v.dot(&u)]).unwrap();
        let report = cor10a_check(&ch).unwrap();
        assert!(report.at_upper);
        assert!((report.comp_hs_sq - 2.0).abs() < 1e-10);
        assert!(report.max_projector_dev <= 1e-8);
        assert!(report.max_unitary_defect <= 1e-8);
        assert!(report.decomposition.is_some());
    }

    #[test]
    fn cor10a_vij_uniform_hits_lower_bound() {
        let (n, d) = (2usize, 3usize);
        let basis = gen_vij_basis::<f64>(n, d).unwrap();
        let weights = vec![1.0 / (n * d) as f64; n * d];
        let ch = gen_random_isometric(&weights, basis).unwrap();
        let report = cor10a_check(&ch).unwrap();
        assert!(!report.at_upper);
        assert!((report.comp_hs_sq - (n * n) as f64 / d as f64).abs() < 1e-10);
    }

    #[test]
    fn cor10a_square_case_bounds_coincide() {
        let mut rng = ChaCha8Rng::seed_from_u64(65);
        let n = 2;
        let us: Vec<M> = (0..3).map(|_| crate::haar::sample_unitary::<f64, _>(n, &mut rng)).collect();
        let ch = gen_random_isometric(&[0.2, 0.3, 0.5], us).unwrap();
        let report = cor10a_check(&ch).unwrap();
        assert!((report.lower_bound - report.upper_bound).abs() < 1e-14);
        assert!(report.at_upper);
        assert!(report.decomposition.is_some());
    }

    #[test]
    fn broadcast_identity_on_identity_input() {
        // CB(I) = S.
        let n = 3;
        let cb = broadcast_cb(&M::identity(n)).unwrap();
        assert!(cb.max_abs_diff(&swap_operator(n)) < 1e-13);
    }

    #[test]
    fn broadcast_p_frozen() {
        assert!((broadcast_p::<f64>(2) - 0.75).abs() < 1e-15);
    }

    #[test]
    fn broadcast_exact_identity_random_hermitian() {
        let mut rng = ChaCha8Rng::seed_from_u64(66);
        for n in [2usize, 3] {
            let x = crate::haar::gaussian_matrix::<f64, _>(n, n, &mut rng).hermitize();
            let cb = broadcast_cb(&x).unwrap();
            let p = broadcast_p::<f64>(n);
            let combo = &broadcast_m_closed(&x).unwrap().scaled_re(p)
                + &broadcast_m_prime(&x).unwrap().scaled_re(1.0 - p);
            assert!(cb.max_abs_diff(&combo) <= 1e-10);
        }
    }

    #[test]
    fn broadcast_full_verify() {
        let report = broadcasting_verify::<f64>(2, 30_000, 4).unwrap();
        assert!(report.max_identity_defect <= 1e-10);
        assert!(report.max_trace_defect <= 1e-10);
        assert!(report.mc_worst_sigma <= 5.0, "sigma {}", report.mc_worst_sigma);
        assert!((report.p - 0.75).abs() < 1e-15);
    }

    #[test]
    fn classification_consistent_with_norm_sum() {
        let mut rng = ChaCha8Rng::seed_from_u64(67);
        // Extremal families classify as extremal; random channels do not.
        let cases: Vec<(KrausChannel<f64>, bool)> = vec![
            (KrausChannel::identity(2), true),
            (
                gen_replacement(&sample_unit_vector::<f64, _>(2, &mut rng), 3).unwrap(),
                true,
            ),
            (gen_random_cptp::<f64>(2, 2, 2, 91).unwrap(), false),
            (gen_depolarizing::<f64>(2, 3).unwrap(), false),
        ];
        for (e, expected_extremal) in cases {
            let upper = (e.dim_in() * e.dim_in() + e.dim_in()) as f64;
            let sum = e.hs_norm_sq() + e.comp_hs_norm_sq();
            let at_upper = (sum - upper).abs() <= 1e-8;
            let verdict = purity_classify(&e).unwrap();
            let structural = !matches!(verdict, PurityVerdict::Not { .. });
            assert_eq!(at_upper, expected_extremal);
            assert_eq!(structural, expected_extremal, "sum {sum} verdict {}", verdict.name());
        }
    }
}
