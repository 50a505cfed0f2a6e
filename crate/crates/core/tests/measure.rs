use num_complex::Complex64;
use proptest::prelude::*;
use quarter_cantor::measure::{self, LaurentPoly, LeakagePolicy, MomentSequence, UnitaryTruncation};
use quarter_cantor::operator;
use quarter_cantor::spectrum::{self, gamma_set, CoeffVector, GammaSet};
use quarter_cantor::Error;

const TOL: f64 = 1e-12;

fn c(re: f64) -> Complex64 {
    Complex64::new(re, 0.0)
}

fn truncation(m: u32) -> (GammaSet, UnitaryTruncation) {
    let set = gamma_set(m, 1).unwrap();
    let trunc = UnitaryTruncation::new(&set, TOL).unwrap();
    (set, trunc)
}

fn mix(set: &GammaSet, a: u64, b: u64) -> CoeffVector {
    CoeffVector::from_terms(set.clone(), &[(a, c(1.0)), (b, c(1.0))])
        .unwrap()
        .normalized()
        .unwrap()
}

fn battery(set: &GammaSet) -> Vec<CoeffVector> {
    let mut out: Vec<CoeffVector> = [1u64, 4, 5, 21]
        .iter()
        .map(|&g| CoeffVector::basis(set.clone(), g).unwrap())
        .collect();
    out.push(mix(set, 0, 1));
    out.push(mix(set, 1, 4));
    out.extend((0..4).map(|s| spectrum::random_unit_vector(set, s)));
    out
}

#[test]
fn e0_is_a_dirac_mass_at_one() {
    let (set, trunc) = truncation(8);
    let e0 = CoeffVector::basis(set, 0).unwrap();
    let ms = measure::moments(&e0, 12, &trunc, &LeakagePolicy::default()).unwrap();
    assert!(ms.iter().all(|(_, v)| v == c(1.0)));
    assert_eq!(ms.leakage_budget(), 0.0);
    assert_eq!(measure::atom_at_one(&ms), 1.0);
    assert!(measure::herglotz_defect(&ms).unwrap().abs() <= 1e-12);
    let (w, leak) = trunc.power_apply(&e0, 1, &LeakagePolicy::default()).unwrap();
    assert_eq!(w, e0);
    assert_eq!(leak, 0.0);
}

#[test]
fn first_moments_of_small_vectors() {
    let (set, trunc) = truncation(8);
    let policy = LeakagePolicy::unlimited();
    let e1 = CoeffVector::basis(set.clone(), 1).unwrap();
    assert_eq!(measure::moments(&e1, 1, &trunc, &policy).unwrap().moment(1), c(0.0));
    let ms = measure::moments(&mix(&set, 0, 1), 1, &trunc, &policy).unwrap();
    assert!((ms.moment(1) - c(0.5)).norm() <= 1e-9);
}

#[test]
fn moment_invariants_over_battery() {
    let (set, trunc) = truncation(8);
    for v in battery(&set) {
        let ms = measure::moments(&v, 10, &trunc, &LeakagePolicy::unlimited()).unwrap();
        assert!(ms.hermitian_defect() <= 1e-10);
        assert!((ms.moment(0).re - v.norm2()).abs() <= 1e-9);
        for (_, m) in ms.iter() {
            assert!(m.norm() <= ms.moment(0).re + ms.leakage_budget() + 1e-12);
        }
        let d = measure::herglotz_defect(&ms).unwrap();
        assert!(d >= -(ms.leakage_budget() + 1e-8), "defect {d}");
        let est = measure::estimate_measure(&ms).unwrap();
        assert_eq!(est.grid.len(), 80);
        assert!(est.density.iter().all(|&x| x >= -1e-9));
        assert!((est.total_mass() - ms.moment(0).re).abs() <= 1e-6);
    }
}

#[test]
fn leakage_refusal_and_budget() {
    let (set, trunc) = truncation(10);
    let e1 = CoeffVector::basis(set, 1).unwrap();
    match measure::moments(&e1, 16, &trunc, &LeakagePolicy::default()) {
        Err(Error::TruncationRefused { budget, limit }) => {
            assert!(budget > limit);
            assert_eq!(limit, 0.1);
        }
        other => panic!("expected refusal, got {other:?}"),
    }
    let ms = measure::moments(&e1, 16, &trunc, &LeakagePolicy::unlimited()).unwrap();
    let cumulative: Vec<f64> = (0..=16).map(|k| ms.cumulative_leakage(k)).collect();
    assert!(cumulative.windows(2).all(|w| w[0] <= w[1]));
    assert!(ms.leakage_budget() >= cumulative[16]);
    assert!(measure::moments(&e1.scaled(c(2.0)), 4, &trunc, &LeakagePolicy::unlimited()).is_err());
}

// Atom estimates and Cesàro residuals frozen from an independent
// matrix-power oracle on the 1024-term truncation.
#[test]
fn oracle_values_at_1024_terms() {
    let (set, trunc) = truncation(10);
    let policy = LeakagePolicy::unlimited();
    let e1 = CoeffVector::basis(set.clone(), 1).unwrap();
    let m = mix(&set, 0, 1);

    let a1 = measure::atom_at_one(&measure::moments(&e1, 16, &trunc, &policy).unwrap());
    let am = measure::atom_at_one(&measure::moments(&m, 16, &trunc, &policy).unwrap());
    assert!((a1 - 0.11189277618115162).abs() <= 1e-9);
    assert!((am - 0.5559463880906891).abs() <= 1e-9);
    assert!(a1 <= 0.3);
    assert!((am - 0.5).abs() <= 0.1);

    for (v, r8, r64) in [
        (&e1, 0.4878049138000636, 0.10951247053459157),
        (&m, 0.34493016244414487, 0.07743701053951454),
    ] {
        let traj = measure::cesaro_trajectory(v, 64, &trunc, &policy).unwrap();
        assert_eq!(traj.len(), 65);
        assert!((traj[8].residual_norm - r8).abs() <= 1e-9);
        assert!((traj[64].residual_norm - r64).abs() <= 1e-9);
        let direct = measure::cesaro_average(v, 64, &trunc, &policy).unwrap();
        assert_eq!(direct, traj[64]);
    }
    let proj = measure::cesaro_average(&m, 64, &trunc, &policy).unwrap().projection_coeff;
    assert!((proj - c(std::f64::consts::FRAC_1_SQRT_2)).norm() <= 1e-12);
}

#[test]
fn ergodic_battery() {
    let (set, trunc) = truncation(10);
    let policy = LeakagePolicy::unlimited();
    let mut fs: Vec<CoeffVector> = battery(&set)
        .into_iter()
        .filter(|f| f.coeff(0) == c(0.0))
        .collect();
    fs.push(mix(&set, 5, 21));
    assert!(fs.len() >= 5);
    for f in &fs {
        let traj = measure::cesaro_trajectory(f, 64, &trunc, &policy).unwrap();
        assert!(traj[64].residual_norm <= 0.3, "{:?}", traj[64]);
        assert!(traj[64].residual_norm <= traj[8].residual_norm);
    }
    let e0 = CoeffVector::basis(set, 0).unwrap();
    let r = measure::cesaro_average(&e0, 64, &trunc, &LeakagePolicy::default()).unwrap();
    assert_eq!(r.residual_norm, 0.0);
    assert_eq!(r.projection_coeff, c(1.0));
}

#[test]
fn missing_atom_forces_motion() {
    let (set, trunc) = truncation(8);
    let policy = LeakagePolicy::unlimited();
    for v in battery(&set) {
        let ms = measure::moments(&v, 8, &trunc, &policy).unwrap();
        let delta = 1.0 - measure::atom_at_one(&ms);
        let (uv, leak) = trunc.power_apply(&v, 1, &policy).unwrap();
        let diff = uv.add_scaled(c(-1.0), &v).unwrap().norm2() + leak;
        assert!(diff >= 2.0 * delta - ms.leakage_budget() - leak - 1e-9, "{diff} vs delta {delta}");
    }
}

#[test]
fn eigenvector_floor_matches_oracle() {
    let (_, trunc) = truncation(6);
    let floor = measure::eigenvector_floor(&trunc, 64).unwrap();
    assert!((floor - 0.11613650820855174).abs() <= 1e-9, "{floor}");
}

#[test]
fn herglotz_guard_rejects_non_hermitian_input() {
    let set = gamma_set(2, 1).unwrap();
    let v = CoeffVector::basis(set, 0).unwrap();
    let ms = MomentSequence::from_values(v, vec![c(0.1), c(1.0), c(0.7)], 0.0).unwrap();
    assert!(matches!(measure::herglotz_defect(&ms), Err(Error::InvariantViolation(_))));
}

#[test]
fn isometry_and_pushforward_identities() {
    let (set, trunc) = truncation(10);
    let policy = LeakagePolicy::unlimited();
    let e0 = CoeffVector::basis(set.clone(), 0).unwrap();
    let e1 = CoeffVector::basis(set.clone(), 1).unwrap();
    let one = LaurentPoly::constant(1.0);
    let z = LaurentPoly::from_terms(&[(1, c(1.0))]);
    let sym = LaurentPoly::from_terms(&[(-1, c(1.0)), (1, c(1.0))]);
    let z2 = LaurentPoly::from_terms(&[(2, c(1.0))]);
    let phi = LaurentPoly::from_terms(&[(0, c(1.0)), (1, Complex64::new(0.5, -2.0))]);

    for v in [&e0, &e1] {
        assert_eq!(measure::isometry_residual(v, &one, &trunc, &policy).unwrap().residual, 0.0);
        for k in -3..=3 {
            let r = measure::pushforward_identity_residual(v, &one, k, &trunc, &policy).unwrap();
            assert!(r.residual <= r.leakage_budget + TOL);
        }
    }
    let r = measure::isometry_residual(&e1, &z, &trunc, &policy).unwrap();
    assert!(r.residual <= 2.0 * r.leakage_budget + TOL);

    // On the Galerkin truncation ‖(U + U*)e₁‖² misses exactly the mass U*e₁
    // leaks.
    let leak = trunc.power_apply(&e1, -1, &policy).unwrap().1;
    let r = measure::isometry_residual(&e1, &sym, &trunc, &policy).unwrap();
    assert!((r.residual - leak).abs() <= 1e-12);
    assert!((leak - 0.051924301885276414).abs() <= 1e-9);
    assert!(r.residual <= 1e-6 + r.leakage_budget);

    let r = measure::pushforward_identity_residual(&e1, &z2, 1, &trunc, &policy).unwrap();
    assert!(r.residual <= 1e-6, "{r:?}");

    let phi1 = phi.eval(c(1.0)).norm_sqr();
    for k in -2..=2 {
        let (w, _) = trunc.apply_poly(&phi, &e0, &policy).unwrap();
        let ms = measure::moments_of(&w, 2, &trunc, &policy).unwrap();
        assert!((ms.moment(k) - c(phi1)).norm() <= 1e-12);
        let r = measure::pushforward_identity_residual(&e0, &phi, k, &trunc, &policy).unwrap();
        assert!(r.residual <= 1e-12);
    }
}

#[test]
fn radon_nikodym_profiles() {
    let (set, trunc) = truncation(8);
    let policy = LeakagePolicy::unlimited();
    let e0 = CoeffVector::basis(set.clone(), 0).unwrap();
    let p = measure::rn_sqrt_profile(&e0, &LaurentPoly::constant(1.0), 8, 64, &trunc, &policy).unwrap();
    assert!(!p.points.is_empty());
    assert!(p.points.iter().all(|q| (q.estimate - 1.0).abs() <= 1e-9));

    let two_z = LaurentPoly::from_terms(&[(1, c(2.0))]);
    let p = measure::rn_sqrt_profile(&e0, &two_z, 8, 64, &trunc, &policy).unwrap();
    let at_one = p.points.iter().find(|q| q.theta == 0.0).unwrap();
    assert!((at_one.estimate - 2.0).abs() <= 0.2);
    assert_eq!(at_one.phi_abs, 2.0);

    let e1 = CoeffVector::basis(set, 1).unwrap();
    let z1 = LaurentPoly::from_terms(&[(0, c(1.0)), (1, c(1.0))]);
    let p = measure::rn_sqrt_profile(&e1, &z1, 8, 64, &trunc, &policy).unwrap();
    assert!(p.points.iter().all(|q| q.estimate.is_finite() && q.estimate >= 0.0));
    assert!(p.leakage_budget > 0.0);
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(24))]

    #[test]
    fn toeplitz_positive_for_random_vectors(seed in any::<u64>(), order in 1usize..10) {
        let (set, trunc) = truncation(6);
        let v = spectrum::random_unit_vector(&set, seed);
        let ms = measure::moments(&v, order, &trunc, &LeakagePolicy::unlimited()).unwrap();
        prop_assert!(ms.hermitian_defect() <= 1e-10);
        prop_assert!(measure::herglotz_defect(&ms).unwrap() >= -(ms.leakage_budget() + 1e-8));
    }

    #[test]
    fn laurent_eval_matches_terms(re in -2.0f64..2.0, im in -2.0f64..2.0, theta in 0.0f64..6.3) {
        let phi = LaurentPoly::from_terms(&[(-2, Complex64::new(re, im)), (0, c(1.0)), (3, c(-0.5))]);
        let z = Complex64::from_polar(1.0, theta);
        let want = Complex64::new(re, im) * z.powi(-2) + 1.0 - 0.5 * z.powi(3);
        prop_assert!((phi.eval(z) - want).norm() <= 1e-12);
    }
}

#[test]
fn truncation_matches_operator_module() {
    let (set, trunc) = truncation(6);
    assert_eq!(trunc.forward(), &operator::build_u(&set, TOL).unwrap());
    assert_eq!(trunc.backward(), &trunc.forward().adjoint());
}
