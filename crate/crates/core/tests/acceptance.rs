//! End-to-end acceptance checks. Each test prints one PASS/FAIL line on the
//! real stdout (bypassing the harness capture) and then asserts.

mod common;

use std::io::Write;
use std::time::{Duration, Instant};

use common::{bisect, c, max_abs_diff, random_coeffs, rng, schmidt_density, FullLiouvillian};
use num_complex::Complex64;
use pnes::channel::{energy_closed_form, evolve_pnes_adaptive, propagator, ChannelParams, CutoffPolicy};
use pnes::entanglement::{negativity, sector_negativity, NEGATIVITY_THRESHOLD};
use pnes::experiments::{fig1, run_sweep, Fig1Config, Fig1Series, MatchKind, MatchSelection, SweepConfig};
use pnes::fock::{FockCutoff, TolProfile};
use pnes::gaussian::{cm_from_fock, evolve_cm, gaussian_negativity, nu_tilde_minus_general, t_g_closed, twb_cm};
use pnes::states::{pure_negativity, PnesCoefficients, StateSpec, TwbParams};

fn report(name: &str, ok: bool, elapsed: Duration, detail: &str) {
    let line = format!("{} {name} ({:.2}s) {detail}\n", if ok { "PASS" } else { "FAIL" }, elapsed.as_secs_f64());
    let mut out = std::io::stdout().lock();
    let _ = out.write_all(line.as_bytes());
    let _ = out.flush();
}

fn cut(d: usize) -> FockCutoff {
    FockCutoff::new(d).unwrap()
}

fn resolve(spec: &str) -> PnesCoefficients {
    let policy = CutoffPolicy::default();
    spec.parse::<StateSpec>().unwrap().resolve(policy.tail_tol, policy.amplitude_tol, policy.floor).unwrap()
}

const SERIES: [&str; 5] =
    ["pssv:energy=0.026", "pssv:energy=0.6", "psi01:c1sq=0.5", "psi01:c1sq=0.25", "psi01:c1sq=0.05"];

#[test]
fn gaussian_separation_time() {
    let start = Instant::now();
    let mut worst = 0.0f64;
    for r in [0.1, 0.25, 0.5, 1.0, 2.0] {
        for n_t in [0.05, 0.1, 0.25, 0.5, 1.0] {
            let params = ChannelParams::with_thermal(n_t).unwrap();
            let gap = |t: f64| nu_tilde_minus_general(&evolve_cm(&twb_cm(r), &params, t).to_cm()) - 0.5;
            let root = bisect(gap, 0.0, 50.0);
            worst = worst.max((t_g_closed(r, &params) - root).abs() / root);
        }
    }
    let elapsed = start.elapsed();
    let ok = worst < 1e-9 && elapsed < Duration::from_secs(1);
    report("gaussian_separation_time", ok, elapsed, &format!("max relative error {worst:.2e}"));
    assert!(ok);
}

#[test]
fn channel_correctness() {
    let start = Instant::now();
    let policy = CutoffPolicy::default();
    let tol = TolProfile::default();
    let mut failures = Vec::new();
    let (mut worst_trace, mut worst_eig, mut worst_energy) = (0.0f64, 0.0f64, 0.0f64);
    for spec in ["pssv:energy=0.6", "twb:lambda=0.5"] {
        let coeffs = resolve(spec);
        let e0 = pnes::states::pnes_energy(&coeffs);
        for n_t in [0.25, 1.0] {
            let params = ChannelParams::with_thermal(n_t).unwrap();
            for t in [0.1, 0.5, 1.0, 2.0, 5.0] {
                let d = policy.select(&coeffs, &params, Some(t)).unwrap();
                let (rho, _) = evolve_pnes_adaptive(&coeffs, &params, t, d, &policy).unwrap();
                let report = rho.sanity_check(&tol);
                let want = energy_closed_form(e0, &params, t);
                let energy_err = (rho.mean_total_photons() - want).abs() / want;
                worst_trace = worst_trace.max(report.trace_deviation);
                worst_eig = worst_eig.min(report.min_eigenvalue);
                worst_energy = worst_energy.max(energy_err);
                if report.trace_deviation > 1e-10 || report.min_eigenvalue < -1e-8 || energy_err > 1e-6 {
                    failures.push(format!("{spec} n_t={n_t} t={t}"));
                }
            }
        }
    }
    let elapsed = start.elapsed();
    let ok = failures.is_empty() && elapsed < Duration::from_secs(30);
    report(
        "channel_correctness",
        ok,
        elapsed,
        &format!(
            "trace dev {worst_trace:.1e}, min eigenvalue {worst_eig:.1e}, energy rel err {worst_energy:.1e} {failures:?}"
        ),
    );
    assert!(ok);
}

#[test]
fn oracle_equivalence() {
    let start = Instant::now();
    let cases: [(&[f64], f64, f64, f64); 3] = [
        (&[1.0, 0.4, 0.16, 0.064, 0.0256, 0.01, 0.004, 0.0016], 1.0, 0.25, 0.5),
        (&[0.0, 1.0, 0.0, 0.5], 1.5, 1.0, 0.8),
        (&[0.6, -0.5, 0.4, 0.3, -0.2, 0.1], 1.0, 0.1, 1.7),
    ];
    let mut worst = 0.0f64;
    for (v, gamma, n_t, t) in cases {
        let norm = v.iter().map(|x| x * x).sum::<f64>().sqrt();
        let psi: Vec<Complex64> = v.iter().map(|x| c(x / norm)).collect();
        let oracle = FullLiouvillian::new(8, gamma, n_t).rk4(&schmidt_density(&psi, 8), t, 2.5e-4);
        let params = ChannelParams::new(gamma, n_t).unwrap();
        let rho = propagator(&params, t, cut(8)).unwrap().apply_pnes(&PnesCoefficients::custom(psi).unwrap());
        worst = worst.max(max_abs_diff(rho.matrix(), &oracle));
    }
    let elapsed = start.elapsed();
    let ok = worst < 1e-8 && elapsed < Duration::from_secs(30);
    report("oracle_equivalence", ok, elapsed, &format!("max elementwise difference {worst:.2e}"));
    assert!(ok);
}

#[test]
fn gaussian_fock_cross_check() {
    let start = Instant::now();
    let r = 0.5f64;
    let params = ChannelParams::with_thermal(0.25).unwrap();
    let coeffs = PnesCoefficients::twb(TwbParams::from_r(r).unwrap().lambda(), cut(120)).unwrap();
    let t_g = t_g_closed(r, &params);
    let policy = CutoffPolicy::default();
    let (mut worst_neg, mut worst_cm) = (0.0f64, 0.0f64);
    for t in [0.0, 0.2, 0.5 * t_g, 0.9 * t_g] {
        let d = policy.select(&coeffs, &params, Some(t)).unwrap();
        let (rho, _) = evolve_pnes_adaptive(&coeffs, &params, t, d, &policy).unwrap();
        let form = evolve_cm(&twb_cm(r), &params, t);
        let fock = sector_negativity(&rho, NEGATIVITY_THRESHOLD).value;
        worst_neg = worst_neg.max((fock - gaussian_negativity(&form).unwrap()).abs());
        let cm = cm_from_fock(&rho).unwrap();
        worst_cm = worst_cm.max((cm.matrix() - form.to_cm().matrix()).abs().max());
    }
    let elapsed = start.elapsed();
    let ok = worst_neg < 1e-6 && worst_cm < 1e-8 && elapsed < Duration::from_secs(60);
    report(
        "gaussian_fock_cross_check",
        ok,
        elapsed,
        &format!("negativity diff {worst_neg:.2e}, covariance diff {worst_cm:.2e}"),
    );
    assert!(ok);
}

#[test]
fn residual_negativity_at_energy_matched_tg() {
    let start = Instant::now();
    let mut failures = Vec::new();
    for spec in SERIES {
        let config = SweepConfig {
            state: spec.into(),
            match_kind: MatchSelection::Energy,
            cutoff: CutoffPolicy { fixed: Some(24), ..CutoffPolicy::default() },
            ..SweepConfig::default()
        };
        for rec in run_sweep(&config).unwrap() {
            match rec.point() {
                Some(p) if p.n_r > 1e-9 => {}
                Some(p) => failures.push(format!("{spec} B/A={} n_r={:.2e}", rec.b_over_a, p.n_r)),
                None => failures.push(format!("{spec} B/A={} {:?}", rec.b_over_a, rec.outcome)),
            }
        }
    }
    let elapsed = start.elapsed();
    let ok = failures.is_empty() && elapsed < Duration::from_secs(300);
    report(
        "residual_negativity_at_energy_matched_tg",
        ok,
        elapsed,
        &format!("{} of 50 points not above 1e-9: {failures:?}", failures.len()),
    );
    assert!(ok);
}

fn frozen(id: &str) -> Vec<Vec<String>> {
    let path = format!("{}/tests/data/fig1/fig1_{id}.csv", env!("CARGO_MANIFEST_DIR"));
    std::fs::read_to_string(path).unwrap().lines().skip(1).map(|l| l.split(',').map(String::from).collect()).collect()
}

fn csv_rows(series: &Fig1Series) -> Vec<Vec<String>> {
    let mut buf = Vec::new();
    pnes::experiments::write_csv(&mut buf, &series.records).unwrap();
    String::from_utf8(buf).unwrap().lines().skip(1).map(|l| l.split(',').map(String::from).collect()).collect()
}

/// Largest deviation over the value columns (cutoff and convergence delta excluded).
fn regression_deviation(got: &[Vec<String>], want: &[Vec<String>]) -> f64 {
    if got.len() != want.len() {
        return f64::INFINITY;
    }
    let mut worst = 0.0f64;
    for (g, w) in got.iter().zip(want) {
        if g[2] != w[2] {
            return f64::INFINITY;
        }
        for col in (0..11).filter(|&c| c != 2) {
            worst = worst.max(match (g[col].parse::<f64>(), w[col].parse::<f64>()) {
                (Ok(a), Ok(b)) => (a - b).abs(),
                _ if g[col] == w[col] => 0.0,
                _ => f64::INFINITY,
            });
        }
    }
    worst
}

#[test]
fn fig1_smallness_ordering_and_regression() {
    let start = Instant::now();
    let series = fig1(&Fig1Config::default()).unwrap();
    let mut failures = Vec::new();
    let mut worst_regression = 0.0f64;
    let mut worst_overlap = 0.0f64;
    for s in &series {
        let dev = regression_deviation(&csv_rows(s), &frozen(&s.spec.id));
        worst_regression = worst_regression.max(dev);
        if dev > 1e-6 {
            failures.push(format!("{} regression {dev:.1e}", s.spec.id));
        }
        if !s.spec.id.starts_with("pssv") {
            continue;
        }
        for rec in &s.records {
            let Some(p) = rec.point() else {
                failures.push(format!("{} B/A={} failed", s.spec.id, rec.b_over_a));
                continue;
            };
            if !(p.ratio_rg.unwrap_or(f64::INFINITY) < 1.0 && p.n_r <= p.n_0) {
                failures.push(format!("{} B/A={} {}", s.spec.id, rec.b_over_a, rec.match_kind));
            }
        }
        if s.spec.id == "pssv_e0_0.013" {
            let curve = |kind: MatchKind| -> Vec<f64> {
                s.records.iter().filter(|r| r.match_kind == kind).filter_map(|r| r.point()?.ratio_rg).collect()
            };
            let (energy, entanglement) = (curve(MatchKind::Energy), curve(MatchKind::Entanglement));
            if energy.len() != 10 || entanglement.len() != 10 {
                failures.push("overlap curves incomplete".into());
            }
            for (a, b) in energy.iter().zip(&entanglement) {
                let rel = (a - b).abs() / a.abs().max(b.abs());
                worst_overlap = worst_overlap.max(rel);
                if rel > 0.05 {
                    failures.push(format!("curves differ by {rel:.3}"));
                }
            }
        }
    }
    let elapsed = start.elapsed();
    let ok = failures.is_empty();
    report(
        "fig1_smallness_ordering_and_regression",
        ok,
        elapsed,
        &format!("regression dev {worst_regression:.1e}, curve overlap {worst_overlap:.3} {failures:?}"),
    );
    assert!(ok);
}

#[test]
fn pure_state_identities() {
    let start = Instant::now();
    let mut gen = rng(20_240_601);
    let mut states: Vec<(String, PnesCoefficients)> = (0..20)
        .map(|k| {
            let v = random_coeffs(&mut gen, 10);
            (format!("random#{k}"), PnesCoefficients::custom(v.iter().map(|&x| c(x)).collect()).unwrap())
        })
        .collect();
    for spec in ["twb:lambda=0.5", "pssv:x=0.3"].into_iter().chain(SERIES) {
        states.push((spec.into(), resolve(spec)));
    }
    let mut worst = 0.0f64;
    let mut failures = Vec::new();
    for (name, coeffs) in &states {
        let d = coeffs.len().max(2);
        let eig = negativity(&coeffs.to_state(cut(d))).value;
        let diff = (eig - pure_negativity(coeffs)).abs();
        worst = worst.max(diff);
        if diff >= 1e-10 {
            failures.push(name.clone());
        }
    }
    let elapsed = start.elapsed();
    let ok = failures.is_empty() && elapsed < Duration::from_secs(60);
    report(
        "pure_state_identities",
        ok,
        elapsed,
        &format!("{} states, max diff {worst:.2e} {failures:?}", states.len()),
    );
    assert!(ok);
}

#[test]
fn fig1_runtime_budget() {
    let start = Instant::now();
    let config = Fig1Config::default();
    assert!(config.check);
    let series = fig1(&config).unwrap();
    let elapsed = start.elapsed();
    let mut failures = Vec::new();
    let mut max_dim = 0;
    for s in &series {
        if s.records.len() != 20 {
            failures.push(format!("{} has {} points", s.spec.id, s.records.len()));
        }
        let mut checked = false;
        for rec in &s.records {
            match rec.point() {
                Some(p) => {
                    max_dim = max_dim.max(p.cutoff);
                    checked |= p.conv_delta.is_some();
                }
                None => failures.push(format!("{} B/A={} failed", s.spec.id, rec.b_over_a)),
            }
        }
        if !checked {
            failures.push(format!("{} never checked", s.spec.id));
        }
    }
    let ok = series.len() == 5 && max_dim <= 24 && failures.is_empty() && elapsed < Duration::from_secs(300);
    report("fig1_runtime_budget", ok, elapsed, &format!("max cutoff {max_dim} {failures:?}"));
    assert!(ok);
}
