mod common;

use common::{c, energy_law, max_abs_diff, schmidt_density, FullLiouvillian};
use nalgebra::DMatrix;
use num_complex::Complex64;
use pnes::channel::{
    evolve_pnes, evolve_pnes_with, propagator, propagator_with, ChannelParams, CutoffPolicy, PropagatorMethod,
};
use pnes::fock::{FockCutoff, TolProfile, TwoModeState};
use pnes::states::PnesCoefficients;

fn cut(d: usize) -> FockCutoff {
    FockCutoff::new(d).unwrap()
}

fn normalized(v: &[f64]) -> Vec<Complex64> {
    let norm = v.iter().map(|x| x * x).sum::<f64>().sqrt();
    v.iter().map(|x| c(x / norm)).collect()
}

#[test]
fn pnes_evolution_matches_full_liouvillian() {
    let cases: [(&[f64], f64, f64, f64); 3] = [
        (&[1.0, 0.3, 0.09, 0.027, 0.0081], 1.0, 0.25, 0.5),
        (&[0.8, 0.0, 0.6], 2.0, 1.0, 0.7),
        (&[0.5, -0.4, 0.3, 0.2, -0.1, 0.05, 0.02, 0.01], 1.0, 0.5, 2.0),
    ];
    for (coeffs, gamma, n_t, t) in cases {
        let psi = normalized(coeffs);
        let oracle = FullLiouvillian::new(8, gamma, n_t).rk4(&schmidt_density(&psi, 8), t, 2.5e-4);
        let params = ChannelParams::new(gamma, n_t).unwrap();
        let state = PnesCoefficients::custom(psi.clone()).unwrap();
        let rho = propagator(&params, t, cut(8)).unwrap().apply_pnes(&state);
        let diff = max_abs_diff(rho.matrix(), &oracle);
        assert!(diff < 1e-8, "gamma={gamma} n_t={n_t} t={t}: {diff:e}");
    }
}

#[test]
fn general_state_evolution_matches_full_liouvillian() {
    // thermal-like mode 1, coherence-carrying mode 2
    let d = 6;
    let rho_a = DMatrix::from_fn(d, d, |i, j| if i == j { c(0.5f64.powi(i as i32 + 1)) } else { c(0.0) });
    let v = nalgebra::DVector::from_fn(d, |n, _| c(0.7f64.powi(n as i32) / (1.0 + n as f64)));
    let rho_b = &v * v.adjoint();
    let rho = TwoModeState::product(&(&rho_a / c(rho_a.trace().re)), &(&rho_b / c(rho_b.trace().re))).unwrap();
    let (gamma, n_t, t) = (1.0, 0.4, 0.9);
    let oracle = FullLiouvillian::new(d, gamma, n_t).rk4(rho.matrix(), t, 2.5e-4);
    let params = ChannelParams::new(gamma, n_t).unwrap();
    let out = propagator(&params, t, cut(d)).unwrap().apply(&rho).unwrap();
    assert!(max_abs_diff(out.matrix(), &oracle) < 1e-8);
}

#[test]
fn pade_and_adaptive_propagators_agree() {
    let params = ChannelParams::new(1.0, 0.6).unwrap();
    for t in [0.05, 1.0, 6.0] {
        let p = propagator_with(&params, t, cut(16), PropagatorMethod::Pade).unwrap();
        let q = propagator_with(&params, t, cut(16), PropagatorMethod::Adaptive).unwrap();
        for s in 0..16 {
            let diff = (p.sector(s) - q.sector(s)).abs().max();
            assert!(diff < 1e-10, "t={t} s={s}: {diff:e}");
        }
    }
}

#[test]
fn propagators_form_a_semigroup() {
    let params = ChannelParams::new(1.3, 0.35).unwrap();
    let (t1, t2) = (0.4, 1.1);
    let a = propagator(&params, t1, cut(14)).unwrap();
    let b = propagator(&params, t2, cut(14)).unwrap();
    let ab = propagator(&params, t1 + t2, cut(14)).unwrap();
    for s in 0..14 {
        let composed = b.sector(s) * a.sector(s);
        assert!((composed - ab.sector(s)).abs().max() < 1e-12, "sector {s}");
    }
    let zero = propagator(&params, 0.0, cut(14)).unwrap();
    for s in 0..14 {
        assert!((zero.sector(s) - DMatrix::identity(14 - s, 14 - s)).abs().max() < 1e-15);
    }
}

#[test]
fn evolved_pnes_keeps_sector_structure() {
    let state = PnesCoefficients::twb(0.4, cut(16)).unwrap();
    let params = ChannelParams::with_thermal(0.3).unwrap();
    let rho = evolve_pnes(&state, &params, 0.8, cut(20)).unwrap();
    assert!(rho.has_sector_structure());
    for n1 in 0..20 {
        for n2 in 0..20 {
            for m1 in 0..20 {
                for m2 in 0..20 {
                    if n1 as i64 - n2 as i64 != m1 as i64 - m2 as i64 {
                        assert_eq!(rho.element(n1, n2, m1, m2), c(0.0));
                    }
                }
            }
        }
    }
}

#[test]
fn energy_follows_relaxation_law() {
    let params = ChannelParams::new(0.7, 0.25).unwrap();
    let policy = CutoffPolicy::default();
    for (state, e0) in
        [(PnesCoefficients::twb(0.5, cut(60)).unwrap(), 2.0 / 3.0), (PnesCoefficients::psi01(0.3).unwrap(), 0.6)]
    {
        for t in [0.1, 1.0, 3.0] {
            let d = policy.select(&state, &params, None).unwrap();
            let rho = evolve_pnes(&state, &params, t, d).unwrap();
            let want = energy_law(e0, 0.7, 0.25, t);
            assert!((rho.mean_total_photons() - want).abs() < 1e-6 * want, "t={t}");
        }
    }
}

#[test]
fn evolved_states_pass_sanity_checks() {
    let tol = TolProfile::default();
    let policy = CutoffPolicy::default();
    let state = PnesCoefficients::pssv(0.3, cut(40)).unwrap();
    for n_t in [0.05, 0.5, 1.0] {
        let params = ChannelParams::with_thermal(n_t).unwrap();
        let d = policy.select(&state, &params, None).unwrap();
        for t in [0.0, 0.2, 1.0, 4.0] {
            let rho = evolve_pnes_with(&state, &params, t, d, &policy).unwrap();
            let report = rho.sanity_check(&tol);
            assert!(report.passed(), "n_t={n_t} t={t}: {report:?}");
        }
    }
}

#[test]
fn undersized_cutoff_is_rejected() {
    let state = PnesCoefficients::twb(0.8, cut(200)).unwrap();
    let params = ChannelParams::with_thermal(0.1).unwrap();
    let err = evolve_pnes(&state, &params, 0.5, cut(10)).unwrap_err();
    assert!(err.is_numerical_policy(), "{err}");
}
