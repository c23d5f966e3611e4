use collapse_thermo::bench::{run_benchmark, run_state, stationary_drift, BenchConfig, ExactSolver, FpScheme, BENCH_COLUMNS};
use collapse_thermo::{CovarianceState, Error, GridGeometry, PhaseGrid};

fn cfg(d: f64, f: f64, n: usize, half: f64, horizon: f64) -> BenchConfig {
    BenchConfig {
        geometry: GridGeometry::square(n, half).unwrap(),
        horizon,
        initial_nbar: vec![0.0],
        ..BenchConfig::new(d, f)
    }
}

#[test]
fn target_is_stationary_under_grid_solver() {
    let c = cfg(0.75, 1.0, 128, 7.0, 1.0);
    let drift = stationary_drift(&c, 20).unwrap();
    assert!(drift < 1e-6, "{drift:e}");
}

#[test]
fn mass_is_conserved_on_wide_window() {
    let c = cfg(1.0, 4.0 / 3.0, 160, 8.0, 5.0);
    let mut solver = ExactSolver::new(&c).unwrap();
    let mut w = PhaseGrid::wigner_thermal(0.0, c.geometry).unwrap();
    let m0 = w.quadrature();
    for _ in 0..c.steps().unwrap() {
        solver.step(&mut w);
    }
    assert!((w.quadrature() - m0).abs() < 1e-10);
    assert!(w.values.iter().all(|v| *v > -1e-12));
}

#[test]
fn grid_moments_follow_covariance_equations() {
    let c = cfg(0.75, 1.0, 160, 8.0, 3.0);
    let start = CovarianceState {
        mean_q: 0.8,
        mean_p: 0.0,
        ..CovarianceState::thermal(0.0).unwrap()
    };
    let mut solver = ExactSolver::new(&c).unwrap();
    let mut w = PhaseGrid::gaussian(collapse_thermo::AxisTag::Wigner, &start, c.geometry).unwrap();
    let n = c.steps().unwrap();
    for _ in 0..n {
        solver.step(&mut w);
    }
    let ode = *c.generator().integrate(start, c.horizon, n * 4).unwrap().last().unwrap();
    let got = w.moments().unwrap();
    for (a, b) in [
        (got.var_q, ode.var_q),
        (got.var_p, ode.var_p),
        (got.mean_q, ode.mean_q),
        (got.mean_p, ode.mean_p),
    ] {
        assert!((a - b).abs() < 1e-4 * b.abs().max(1.0), "{a} vs {b}");
    }
    assert!((got.cov_qp - ode.cov_qp).abs() < 1e-4);
}

#[test]
fn finite_volume_scheme_tracks_exact_transition() {
    let exact = cfg(0.75, 1.0, 96, 6.0, 0.5);
    let fv = BenchConfig {
        scheme: FpScheme::FiniteVolume,
        ..exact.clone()
    };
    let a = run_state(&exact, 0.0).unwrap();
    let b = run_state(&fv, 0.0).unwrap();
    let rel = (a.k_exact.last().unwrap() - b.k_exact.last().unwrap()).abs() / a.k_exact.last().unwrap();
    assert!(rel < 1e-2, "{rel}");
}

#[test]
fn forced_substeps_must_respect_stability_bound() {
    let c = BenchConfig {
        scheme: FpScheme::FiniteVolume,
        substeps: Some(1),
        ..cfg(1.0, 4.0 / 3.0, 800, 4.0, 0.1)
    };
    assert!(matches!(ExactSolver::new(&c), Err(Error::Stability(_))));
    let auto = BenchConfig { substeps: None, ..c };
    let n = auto.fv_substeps().unwrap();
    assert!(auto.diffusion_number(n) <= 0.25);
}

#[test]
fn linearized_run_starts_on_exact_run() {
    let c = cfg(1.0, 4.0 / 3.0, 96, 6.0, 0.2);
    let r = run_state(&c, 0.5).unwrap();
    assert_eq!(r.t.len(), 21);
    assert_eq!(r.l2[0], 0.0);
    assert_eq!(r.k_exact[0], r.k_lin[0]);
    assert!(r.l2.windows(2).all(|w| w[1] >= w[0]));
}

#[test]
fn report_writes_documented_columns() {
    let c = cfg(0.75, 1.0, 64, 6.0, 0.05);
    let report = run_benchmark(&c).unwrap();
    assert_eq!(report.runs.len(), 1);
    assert_eq!(report.summaries()[0].initial_nbar, 0.0);
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("bench.csv");
    report.runs[0].write_csv(&path).unwrap();
    let text = std::fs::read_to_string(&path).unwrap();
    assert_eq!(text.lines().next().unwrap(), BENCH_COLUMNS.join(","));
    assert_eq!(text.lines().count(), 7);
}

#[test]
fn strided_recording_matches_full_run() {
    let full = cfg(1.0, 4.0 / 3.0, 96, 6.0, 0.12);
    let strided = BenchConfig { record_every: 3, ..full.clone() };
    let a = run_state(&full, 0.5).unwrap();
    let b = run_state(&strided, 0.5).unwrap();
    assert_eq!(b.t.len(), 5);
    for (k, &t) in b.t.iter().enumerate() {
        assert!((a.t[3 * k] - t).abs() < 1e-12);
        assert_eq!(a.k_exact[3 * k], b.k_exact[k]);
        assert_eq!(a.l2[3 * k], b.l2[k]);
    }
    assert_eq!(a.lin_final_distance, b.lin_final_distance);
    assert!(run_state(&BenchConfig { record_every: 0, ..full }, 0.0).is_err());
}

#[test]
fn pure_rotation_returns_moments_after_one_period() {
    let period = 2.0 * std::f64::consts::PI;
    let c = BenchConfig {
        sigma_eq: 1.0,
        horizon: period,
        dt: period / 600.0,
        ..cfg(0.0, 0.0, 200, 8.0, 1.0)
    };
    let start = CovarianceState { mean_q: 0.5, mean_p: -0.3, var_q: 1.8, var_p: 0.6, cov_qp: 0.2, t: 0.0 };
    let mut w = PhaseGrid::gaussian(collapse_thermo::AxisTag::Wigner, &start, c.geometry).unwrap();
    let m0 = w.moments().unwrap();
    let mut solver = ExactSolver::new(&c).unwrap();
    for _ in 0..c.steps().unwrap() {
        solver.step(&mut w);
    }
    let m = w.moments().unwrap();
    for (a, b) in [(m.var_q, m0.var_q), (m.var_p, m0.var_p), (m.cov_qp, m0.cov_qp), (m.mean_q, m0.mean_q), (m.mean_p, m0.mean_p)] {
        assert!((a - b).abs() < 1e-6, "{a} vs {b}");
    }
}

#[test]
fn linearized_momentum_variance_rate_matches_moment_equation() {
    for (d, f) in collapse_thermo::bench::PRESETS {
        for nbar in [0.0, 1.0] {
            let c = BenchConfig { horizon: 0.01, ..cfg(d, f, 1000, 8.0, 1.0) };
            let run = run_state(&c, nbar).unwrap();
            let v0 = 2.0 * nbar + 1.0;
            let expected = 2.0 * d - 2.0 * f * v0;
            let got = (run.lin_moments[1].var_p - run.lin_moments[0].var_p) / run.t[1];
            assert!((got - expected).abs() < 1e-3 * expected.abs(), "D={d} f={f}: {got} vs {expected}");
            let q_rate = (run.lin_moments[1].var_q - run.lin_moments[0].var_q) / run.t[1];
            assert!(q_rate.abs() < 1e-6);
        }
    }
}

#[test]
fn linearized_presets_leave_the_uncertainty_region() {
    // Both presets have D/f = 3/4 below the ground variance, so var_p of a
    // ground start decreases at once and det V < 1 after the first step.
    // On the lattice the central difference adds −f·h² to the rate.
    for (d, f) in collapse_thermo::bench::PRESETS {
        let c = cfg(d, f, 160, 8.0, 0.5);
        let h = c.geometry.hy();
        let run = run_state(&c, 0.0).unwrap();
        assert!((run.lin_moments[0].det() - 1.0).abs() < 1e-6);
        assert!(run.lin_moments[1].det() < 1.0 - 1e-9);
        let last = run.lin_moments.last().unwrap();
        let expected = 1.0 + 0.5 * (2.0 * d - 2.0 * f - f * h * h);
        assert!((last.det() - expected).abs() < 1e-6, "{} vs {expected}", last.det());
    }
}
