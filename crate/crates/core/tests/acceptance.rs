//! Acceptance suite: one test per criterion, each printing a pass line.
//!
//! Everything runs at desk scale (n, d ≤ 4, tensor power k ≤ 4, Monte Carlo
//! sample counts up to 10⁶) with the tolerances pinned in the asserts.

use channel_moments::channels::{
    gen_depolarizing, gen_isometric, gen_replacement, gen_vij_basis, random_cptp_ensemble, PNorm,
};
use channel_moments::haar::{
    exact_fourth_weighted, exact_fourth_weighted_perm_sum, exact_moment, exact_pair_scalar,
    exact_sandwich1, exact_sandwich2, exact_third_matrix_weighted, exact_third_scalar_weighted,
    exact_weighted2, fit_covariant_model, mc_abs_sq_scalar, mc_first_moment_scalar,
    mc_fourth_weighted, mc_moment, mc_sandwich1, mc_sandwich2,
    mc_third_matrix_weighted, mc_third_scalar_weighted, mc_weighted2, sample_isometry,
    sample_unitary, sample_unit_vector, twirl_fit, McEstimate, MC_ABS_FLOOR,
};
use channel_moments::tensor::{kron, symmetric_projector, symmetric_rank, TensorSpace};
use channel_moments::theorems::{
    broadcast_cb, broadcast_m_closed, broadcast_m_prime, broadcast_p, cor10_t_closed_forms,
    e_lambda_closed_forms, mc_broadcast_m, mc_mean_output_purity, phase_aligned_distance,
    purity_classify, range_sweep, ChannelClass, PurityVerdict, SweepFamily,
};
use channel_moments::{CChannel, CMatrix, C64};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

const SIGMA: f64 = 5.0;
const FLOOR: f64 = MC_ABS_FLOOR;

fn random_hermitian(n: usize, rng: &mut ChaCha8Rng) -> CMatrix {
    channel_moments::haar::gaussian_matrix(n, n, rng).hermitize()
}

fn within(est: &McEstimate<f64>, exact: &CMatrix) -> bool {
    est.within_sigma(exact, SIGMA, FLOOR)
}

fn scalar_matrix(z: C64) -> CMatrix {
    CMatrix::from_vec(1, 1, vec![z]).unwrap()
}

#[test]
fn acceptance_01_symmetric_projectors() {
    for n in 1..=4usize {
        for k in 1..=4usize {
            if n.pow(k as u32) > 256 {
                continue;
            }
            let space = TensorSpace::new(n, k).unwrap();
            let p = symmetric_projector::<f64>(&space).unwrap();
            assert!(p.is_hermitian(1e-12), "hermitian (n,k)=({n},{k})");
            let idem = p.dot(&p).max_abs_diff(&p);
            assert!(idem <= 1e-10, "idempotent (n,k)=({n},{k}): {idem}");
            let trace_dev = (p.trace().re - symmetric_rank(n, k) as f64).abs();
            assert!(trace_dev <= 1e-10, "trace (n,k)=({n},{k}): {trace_dev}");
        }
    }
    println!("criterion 01 symmetric projector suite: PASS");
}

#[test]
fn acceptance_02_moment_identity_exact_vs_mc() {
    let configs = [(2usize, 2usize), (3, 2), (2, 3)];
    for &(n, k) in &configs {
        let exact = exact_moment::<f64>(n, k).unwrap();
        let mut passes = 0;
        for seed in 0..20u64 {
            let est = mc_moment::<f64>(n, k, 200_000, 1_000 + seed).unwrap();
            if within(&est, &exact) {
                passes += 1;
            }
        }
        assert!(passes >= 19, "(n,k)=({n},{k}): only {passes}/20 seeds passed");
    }
    println!("criterion 02 moment identity exact vs MC: PASS");
}

#[test]
fn acceptance_03_weighted_integral_suite() {
    let samples = 200_000u64;
    for n in [2usize, 3usize] {
        let mut rng = ChaCha8Rng::seed_from_u64(300 + n as u64);
        let a = channel_moments::haar::gaussian_matrix::<f64, _>(n, n, &mut rng);
        let b = channel_moments::haar::gaussian_matrix::<f64, _>(n, n, &mut rng);
        let u = sample_unitary::<f64, _>(n, &mut rng);
        let ident = CMatrix::identity(n);
        let nn1 = (n * (n + 1)) as f64;

        // prop3c: matrix units against the Kronecker-delta closed form.
        for i in 0..n {
            for j in 0..n {
                let unit = CMatrix::basis_column(n, i).outer(&CMatrix::basis_column(n, j));
                let got = exact_weighted2(&unit).unwrap();
                let mut expected = unit.clone();
                if i == j {
                    expected = &expected + &ident;
                }
                assert!(got.max_abs_diff(&expected.scaled_re(1.0 / nn1)) <= 1e-12);
            }
        }
        let est = mc_weighted2(
            &CMatrix::basis_column(n, 0).outer(&CMatrix::basis_column(n, n - 1)),
            samples,
            31,
        )
        .unwrap();
        let exact = exact_weighted2(
            &CMatrix::basis_column(n, 0).outer(&CMatrix::basis_column(n, n - 1)),
        )
        .unwrap();
        assert!(within(&est, &exact), "prop3c MC n={n}");

        // prop3d: A = I collapse, linearity, covariance, MC.
        let w2_id = exact_weighted2(&ident).unwrap();
        assert!(w2_id.max_abs_diff(&ident.scaled_re(1.0 / n as f64)) <= 1e-12);
        let alpha = C64::new(0.6, -0.4);
        let combo = &a.scaled(alpha) + &b;
        let lin_dev = exact_weighted2(&combo).unwrap().max_abs_diff(
            &(&exact_weighted2(&a).unwrap().scaled(alpha) + &exact_weighted2(&b).unwrap()),
        );
        assert!(lin_dev <= 1e-12, "prop3d linearity n={n}");
        let cov_dev = exact_weighted2(&u.dot(&a).dot(&u.adjoint()))
            .unwrap()
            .max_abs_diff(&u.dot(&exact_weighted2(&a).unwrap()).dot(&u.adjoint()));
        assert!(cov_dev <= 1e-12, "prop3d covariance n={n}");
        let est = mc_weighted2(&a, samples, 32).unwrap();
        assert!(within(&est, &exact_weighted2(&a).unwrap()), "prop3d MC n={n}");

        // cor6a: |tr(Aφφ*)|² both as a pair-scalar specialization and by MC.
        let exact_abs = exact_pair_scalar(&a, &a.adjoint()).unwrap();
        let direct = (a.hs_norm_sq() + a.trace().norm_sqr()) / nn1;
        assert!((exact_abs - C64::new(direct, 0.0)).norm() <= 1e-12, "cor6a reduction n={n}");
        let est = mc_abs_sq_scalar(&a, samples, 33).unwrap();
        assert!(within(&est, &scalar_matrix(exact_abs)), "cor6a MC n={n}");

        // cor6b: first moment.
        let exact_first = a.trace().unscale(n as f64);
        let est = mc_first_moment_scalar(&a, samples, 34).unwrap();
        assert!(within(&est, &scalar_matrix(exact_first)), "cor6b MC n={n}");
        // A = I collapses to exactly 1.
        assert!((CMatrix::identity(n).trace().unscale(n as f64) - C64::new(1.0, 0.0)).norm() <= 1e-12);

        // cor7a: product inputs against the partial-trace closed form; MC.
        let big = kron(&a, &b).unwrap();
        let expected = (&big + &kron(&ident.scaled(a.trace()), &b).unwrap()).scaled_re(1.0 / nn1);
        assert!(exact_sandwich1(&big).unwrap().max_abs_diff(&expected) <= 1e-12, "cor7a n={n}");
        let est = mc_sandwich1(&big, samples, 35).unwrap();
        assert!(within(&est, &exact_sandwich1(&big).unwrap()), "cor7a MC n={n}");

        // cor7b: factorization on products; MC over two spheres.
        let fact = kron(&exact_weighted2(&a).unwrap(), &exact_weighted2(&b).unwrap()).unwrap();
        assert!(exact_sandwich2(&big).unwrap().max_abs_diff(&fact) <= 1e-12, "cor7b n={n}");
        let est = mc_sandwich2(&big, samples, 36).unwrap();
        assert!(within(&est, &exact_sandwich2(&big).unwrap()), "cor7b MC n={n}");

        // thm9a: A = B = I collapse, A = I reduction, MC.
        let t9_id = exact_third_scalar_weighted(&ident, &ident).unwrap();
        assert!(t9_id.max_abs_diff(&ident.scaled_re(1.0 / n as f64)) <= 1e-12);
        let red = exact_third_scalar_weighted(&ident, &b).unwrap();
        assert!(red.max_abs_diff(&exact_weighted2(&b).unwrap()) <= 1e-12, "thm9a reduction n={n}");
        let est = mc_third_scalar_weighted(&a, &b, 400_000, 37).unwrap();
        assert!(
            within(&est, &exact_third_scalar_weighted(&a, &b).unwrap()),
            "thm9a MC n={n}"
        );

        // thm9b: A = I collapse to the second moment, partial-trace
        // reduction, MC.
        let t9b_id = exact_third_matrix_weighted(&ident).unwrap();
        assert!(t9b_id.max_abs_diff(&exact_moment::<f64>(n, 2).unwrap()) <= 1e-12);
        let full = exact_third_matrix_weighted(&a).unwrap();
        let reduced = channel_moments::tensor::partial_trace(&full, &[n, n], &[0]).unwrap();
        assert!(reduced.max_abs_diff(&exact_weighted2(&a).unwrap()) <= 1e-12, "thm9b reduction");
        let est = mc_third_matrix_weighted(&a, samples, 38).unwrap();
        assert!(within(&est, &exact_third_matrix_weighted(&a).unwrap()), "thm9b MC n={n}");

        // remark3 (n = 2 only): closed form against the permutation sum,
        // reductions, and MC at a million samples.
        if n == 2 {
            let closed = exact_fourth_weighted(&a, &b).unwrap();
            let summed = exact_fourth_weighted_perm_sum(&a, &b).unwrap();
            assert!(closed.max_abs_diff(&summed) <= 1e-10, "remark3 two routes");
            let collapse = exact_fourth_weighted(&ident, &ident).unwrap();
            assert!(collapse.max_abs_diff(&exact_moment::<f64>(n, 2).unwrap()) <= 1e-12);
            let reduction = exact_fourth_weighted(&ident, &b).unwrap();
            assert!(
                reduction.max_abs_diff(&exact_third_matrix_weighted(&b).unwrap()) <= 1e-12,
                "remark3 reduction"
            );
            let est = mc_fourth_weighted(&a, &b, 1_000_000, 39).unwrap();
            assert!(within(&est, &closed), "remark3 MC");
        }

        // prop3b bridge used by all of the above: pair scalar vs moment
        // pairing.
        let lhs = kron(&a, &b).unwrap().hs_inner(&exact_moment::<f64>(n, 2).unwrap()).unwrap();
        let rhs = exact_pair_scalar(&a, &b).unwrap();
        assert!((lhs - rhs).norm() <= 1e-12, "prop3 web n={n}");
    }
    println!("criterion 03 weighted integral suite: PASS");
}

#[test]
fn acceptance_04_norm_formula_cross_check() {
    let mut rng = ChaCha8Rng::seed_from_u64(400);
    let mut checked = 0;
    for n in 1..=4usize {
        for d in 1..=4usize {
            let channels = random_cptp_ensemble::<f64>(n, d, 7, 4_000 + (n * 4 + d) as u64).unwrap();
            for e in &channels {
                // Eq-(4.1)-style Kraus-overlap value vs superoperator
                // Frobenius norm squared.
                let dev = (e.hs_norm_sq() - e.superoperator().hs_norm_sq()).abs();
                assert!(dev <= 1e-10, "(n,d)=({n},{d}) hs route dev {dev}");
                // Eq-(4.2)-style value vs the complementary channel's norm.
                let dev = (e.comp_hs_norm_sq() - e.complementary().unwrap().hs_norm_sq()).abs();
                assert!(dev <= 1e-10, "(n,d)=({n},{d}) comp route dev {dev}");
                // Kraus remix invariance under a Haar unitary mix.
                let mix = sample_unitary::<f64, _>(e.kraus_count(), &mut rng);
                let remixed = e.remix(&mix).unwrap();
                assert!((remixed.hs_norm_sq() - e.hs_norm_sq()).abs() <= 1e-10);
                assert!((remixed.comp_hs_norm_sq() - e.comp_hs_norm_sq()).abs() <= 1e-10);
                let x = random_hermitian(n, &mut rng);
                let app_dev = remixed.apply(&x).unwrap().max_abs_diff(&e.apply(&x).unwrap());
                assert!(app_dev <= 1e-10);
                checked += 1;
            }
        }
    }
    assert!(checked >= 100, "need at least 100 channels, got {checked}");
    println!("criterion 04 norm formula cross-check: PASS ({checked} channels)");
}

#[test]
fn acceptance_05_theorem1_bounds_and_mc_bridge() {
    let per_pair = 63; // 16 pairs x 63 = 1008 channels
    let mut checked = 0;
    for n in 1..=4usize {
        for d in 1..=4usize {
            let channels =
                random_cptp_ensemble::<f64>(n, d, per_pair, 5_000 + (n * 4 + d) as u64).unwrap();
            let (nf, df) = (n as f64, d as f64);
            let lower = (nf + nf * nf) / df;
            let upper = nf * nf + nf;
            for (idx, e) in channels.iter().enumerate() {
                let sum = e.hs_norm_sq() + e.comp_hs_norm_sq();
                assert!(sum >= lower - 1e-8, "(n,d)=({n},{d}) sum {sum} below {lower}");
                assert!(sum <= upper + 1e-8, "(n,d)=({n},{d}) sum {sum} above {upper}");
                let est = mc_mean_output_purity(e, 100_000, 7_000 + idx as u64);
                let predicted = sum / (nf * (nf + 1.0));
                let (value, stderr) = est.scalar();
                let dev = (value.re - predicted).abs();
                assert!(
                    dev <= SIGMA * stderr + FLOOR,
                    "(n,d)=({n},{d}) channel {idx}: dev {dev} vs stderr {stderr}"
                );
                checked += 1;
            }
        }
    }
    assert!(checked >= 1000);
    println!("criterion 05 theorem-1 bounds and MC bridge: PASS ({checked} channels)");
}

#[test]
fn acceptance_06_extremal_exactness() {
    let mut rng = ChaCha8Rng::seed_from_u64(600);
    // Depolarizing attains the lower bound for every (n, d) ≤ 4.
    for n in 1..=4usize {
        for d in 1..=4usize {
            let e = gen_depolarizing::<f64>(n, d).unwrap();
            let sum = e.hs_norm_sq() + e.comp_hs_norm_sq();
            let lower = (n as f64 + (n * n) as f64) / d as f64;
            assert!((sum - lower).abs() <= 1e-12, "(n,d)=({n},{d}): {sum} vs {lower}");
            if d == 1 {
                // A one-dimensional output space makes every output pure,
                // so the interval collapses and depolarizing coincides with
                // the replacement channel (isometric at n = 1).
                assert!(!matches!(
                    purity_classify(&e).unwrap(),
                    PurityVerdict::Not { .. }
                ));
            } else {
                assert!(matches!(purity_classify(&e).unwrap(), PurityVerdict::Not { .. }));
            }
        }
    }
    // Isometric and replacement channels attain the upper bound, and the
    // classifier recovers their data up to a global phase.
    for (n, d) in [(2usize, 2usize), (2, 3), (3, 4), (4, 4)] {
        let v = sample_isometry::<f64, _>(d, n, &mut rng).unwrap();
        let e = gen_isometric(v.clone()).unwrap();
        let sum = e.hs_norm_sq() + e.comp_hs_norm_sq();
        assert!((sum - (n * n + n) as f64).abs() <= 1e-12);
        match purity_classify(&e).unwrap() {
            PurityVerdict::Isometric(rec) => {
                let dev = phase_aligned_distance(&rec, &v);
                assert!(dev <= 1e-8, "(n,d)=({n},{d}) isometry recovery dev {dev}");
            }
            other => panic!("expected isometric, got {}", other.name()),
        }
    }
    for (n, d) in [(2usize, 2usize), (3, 2), (4, 3)] {
        let psi = sample_unit_vector::<f64, _>(d, &mut rng);
        let e = gen_replacement(&psi, n).unwrap();
        let sum = e.hs_norm_sq() + e.comp_hs_norm_sq();
        assert!((sum - (n * n + n) as f64).abs() <= 1e-12);
        match purity_classify(&e).unwrap() {
            PurityVerdict::Replacement(rec) => {
                let dev = phase_aligned_distance(&rec, &psi);
                assert!(dev <= 1e-8, "(n,d)=({n},{d}) psi recovery dev {dev}");
            }
            other => panic!("expected replacement, got {}", other.name()),
        }
    }
    println!("criterion 06 extremal exactness: PASS");
}

#[test]
fn acceptance_07_sweep_coverage() {
    for (family, n, d) in [
        (SweepFamily::ELambda, 2usize, 2usize),
        (SweepFamily::ELambda, 3, 2),
        (SweepFamily::Cor10T, 2, 2),
        (SweepFamily::Cor10T, 2, 3),
    ] {
        let points = range_sweep::<f64>(n, d, 101, family, 70).unwrap();
        assert_eq!(points.len(), 101);
        for p in &points {
            let (hs, comp) = match family {
                SweepFamily::ELambda => e_lambda_closed_forms(n, d, p.parameter),
                SweepFamily::Cor10T => cor10_t_closed_forms(n, d, p.parameter),
            };
            assert!((p.hs_sq - hs).abs() <= 1e-10, "{family:?} hs at {}", p.parameter);
            assert!((p.comp_hs_sq - comp).abs() <= 1e-10, "{family:?} comp at {}", p.parameter);
            assert!((p.sum - (hs + comp)).abs() <= 1e-10);
        }
        assert!((points[0].sum - points[0].lower_bound).abs() <= 1e-10, "{family:?} low end");
        assert!(
            (points.last().unwrap().sum - points[0].upper_bound).abs() <= 1e-10,
            "{family:?} high end"
        );
    }
    println!("criterion 07 sweep coverage: PASS");
}

#[test]
fn acceptance_08_vij_basis() {
    for (n, d) in [(2usize, 2usize), (2, 3), (3, 3)] {
        let basis = gen_vij_basis::<f64>(n, d).unwrap();
        assert_eq!(basis.len(), n * d);
        let ident_n = CMatrix::identity(n);
        for v in &basis {
            assert!(v.adjoint().dot(v).max_abs_diff(&ident_n) <= 1e-12, "(n,d)=({n},{d})");
        }
        for (i, vi) in basis.iter().enumerate() {
            for (j, vj) in basis.iter().enumerate() {
                if i != j {
                    assert!(vi.hs_inner(vj).unwrap().norm() <= 1e-12, "(n,d)=({n},{d})");
                }
            }
        }
        // (1/nd) Σ V_ij X V_ij^* = tr(X) I/d on the full matrix-unit basis.
        for a in 0..n {
            for b in 0..n {
                let x = CMatrix::basis_column(n, a).outer(&CMatrix::basis_column(n, b));
                let mut acc = CMatrix::zeros(d, d);
                for v in &basis {
                    acc = &acc + &v.dot(&x).dot(&v.adjoint());
                }
                let got = acc.scaled_re(1.0 / (n * d) as f64);
                let expected = CMatrix::identity(d).scaled(x.trace().unscale(d as f64));
                assert!(got.max_abs_diff(&expected) <= 1e-10, "(n,d)=({n},{d}) unit ({a},{b})");
            }
        }
    }
    println!("criterion 08 isometry basis: PASS");
}

#[test]
fn acceptance_09_broadcasting_identity() {
    for n in [2usize, 3, 4] {
        let p = broadcast_p::<f64>(n);
        for a in 0..n {
            for b in 0..n {
                let unit = CMatrix::basis_column(n, a).outer(&CMatrix::basis_column(n, b));
                let cb = broadcast_cb(&unit).unwrap();
                let combo = &broadcast_m_closed(&unit).unwrap().scaled_re(p)
                    + &broadcast_m_prime(&unit).unwrap().scaled_re(1.0 - p);
                assert!(cb.max_abs_diff(&combo) <= 1e-10, "n={n} unit ({a},{b})");
            }
        }
    }
    // Monte Carlo route to the closed form of M at n = 2.
    let mut rng = ChaCha8Rng::seed_from_u64(900);
    let x = random_hermitian(2, &mut rng);
    let est = mc_broadcast_m(&x, 200_000, 901).unwrap();
    assert!(within(&est, &broadcast_m_closed(&x).unwrap()), "broadcasting MC");
    println!("criterion 09 broadcasting identity: PASS");
}

#[test]
fn acceptance_10_twirl() {
    let n = 3usize;
    // Identity map fits (1, 0) exactly.
    let fit = twirl_fit(&CMatrix::identity(n * n), 10, 0).unwrap();
    assert!(fit.residual <= 1e-10);
    assert!((fit.lambda - C64::new(1.0, 0.0)).norm() <= 1e-10);
    assert!(fit.mu.norm() <= 1e-10);
    // Depolarizing map fits (0, 1/n) exactly.
    let dep = gen_depolarizing::<f64>(n, n).unwrap().superoperator();
    let fit = twirl_fit(&dep, 10, 0).unwrap();
    assert!(fit.residual <= 1e-10);
    assert!(fit.lambda.norm() <= 1e-10);
    assert!((fit.mu - C64::new(1.0 / n as f64, 0.0)).norm() <= 1e-10);
    // A seeded random trace-preserving map twirled at N = 5·10⁴.
    let e = channel_moments::channels::gen_random_cptp::<f64>(n, n, 4, 1001).unwrap();
    let sop = e.superoperator();
    let direct = fit_covariant_model(&sop).unwrap();
    assert!(direct.residual > 1e-6, "random map should not be covariant already");
    let fit = twirl_fit(&sop, 50_000, 1002).unwrap();
    assert!(fit.residual <= 0.05, "residual {}", fit.residual);
    // Trace preservation forces nλ + n²μ = n.
    let constraint = fit.lambda.scale(n as f64) + fit.mu.scale((n * n) as f64);
    assert!(
        (constraint - C64::new(n as f64, 0.0)).norm() <= 0.02,
        "trace constraint {constraint}"
    );
    println!("criterion 10 twirl fits: PASS");
}

#[test]
fn acceptance_11_p2p_norms() {
    for n in 1..=4usize {
        for d in 1..=4usize {
            let channels = random_cptp_ensemble::<f64>(n, d, 4, 11_000 + (n * 4 + d) as u64).unwrap();
            let ratio = n as f64 / d as f64;
            for e in &channels {
                assert!((e.p2p_norm(PNorm::One).unwrap() - 1.0).abs() <= 1e-10, "(n,d)=({n},{d})");
                assert!(e.p2p_norm(PNorm::Two).unwrap() >= ratio.sqrt() - 1e-10);
                assert!(e.p2p_norm(PNorm::Inf).unwrap() >= ratio - 1e-10);
            }
            // Depolarizing attains both lower bounds with equality.
            let dep = gen_depolarizing::<f64>(n, d).unwrap();
            assert!((dep.p2p_norm(PNorm::Two).unwrap() - ratio.sqrt()).abs() <= 1e-10);
            assert!((dep.p2p_norm(PNorm::Inf).unwrap() - ratio).abs() <= 1e-10);
            assert!((dep.p2p_norm(PNorm::One).unwrap() - 1.0).abs() <= 1e-10);
        }
    }
    println!("criterion 11 induced p->p norms: PASS");
}

#[test]
fn acceptance_classification_follows_norm_sum() {
    // Channels classify as extremal exactly when the sum sits at a bound.
    let mut rng = ChaCha8Rng::seed_from_u64(1200);
    let psi = sample_unit_vector::<f64, _>(2, &mut rng);
    let cases: Vec<(CChannel, ChannelClass)> = vec![
        (gen_depolarizing::<f64>(3, 2).unwrap(), ChannelClass::Depolarizing),
        (CChannel::identity(3), ChannelClass::Isometric),
        (gen_replacement(&psi, 3).unwrap(), ChannelClass::Replacement),
        (
            channel_moments::channels::gen_e_lambda(0.5, &psi, 2, 2).unwrap(),
            ChannelClass::Interior,
        ),
    ];
    for (e, expected) in cases {
        let report = channel_moments::theorems::theorem1_report(&e, 5_000, 3).unwrap();
        assert_eq!(report.classification, expected);
        let (low_slack, high_slack) = report.bound_slack();
        assert!(low_slack >= -1e-8 && high_slack >= -1e-8);
        // The purity bridge holds for every report.
        let dev = (report.mc_value - report.mc_predicted).abs();
        assert!(dev <= SIGMA * report.mc_stderr + FLOOR);
    }
    println!("criterion xx classification consistency: PASS");
}
