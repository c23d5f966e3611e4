use std::f64::consts::PI;

use collapse_thermo::entropy::{
    differential_entropy, gaussian_entropy, kl_gaussian, kl_gaussian_rate, kl_grid, node_rates, production_rate_current,
    production_rate_flux, read_entropy_csv, uniform_step, wehrl_entropy, EntropySeries,
};
use collapse_thermo::{AxisTag, CovarianceState, Error, GridGeometry, KleinKramers, PhaseGrid};

fn state(mq: f64, mp: f64, vq: f64, vp: f64, c: f64) -> CovarianceState {
    CovarianceState {
        mean_q: mq,
        mean_p: mp,
        var_q: vq,
        var_p: vp,
        cov_qp: c,
        t: 0.0,
    }
}

fn wide(n: usize) -> GridGeometry {
    GridGeometry::square(n, 9.0).unwrap()
}

#[test]
fn grid_relative_entropy_matches_closed_form() {
    let a = state(0.3, -0.2, 1.2, 0.9, 0.2);
    let b = state(0.0, 0.1, 1.6, 1.4, -0.1);
    let wa = PhaseGrid::gaussian(AxisTag::Wigner, &a, wide(240)).unwrap();
    let wb = PhaseGrid::gaussian(AxisTag::Wigner, &b, wide(240)).unwrap();
    let exact = kl_gaussian(&a, &b).unwrap();
    assert!((kl_grid(&wa, &wb).unwrap() - exact).abs() < 1e-8);
    assert!(kl_grid(&wa, &wa).unwrap().abs() < 1e-12);
}

#[test]
fn grid_entropy_matches_closed_form() {
    let a = state(0.5, 0.0, 2.0, 0.7, 0.4);
    let w = PhaseGrid::gaussian(AxisTag::Wigner, &a, GridGeometry::square(320, 12.0).unwrap()).unwrap();
    let err = (differential_entropy(&w).unwrap() - gaussian_entropy(&a).unwrap()).abs();
    assert!(err < 1e-8, "{err:e}");
}

#[test]
fn wehrl_entropy_of_thermal_states() {
    let geo = GridGeometry::square(400, 8.0).unwrap();
    for nbar in [0.0, 0.1, 0.5, 1.0] {
        let q = PhaseGrid::husimi_thermal(nbar, geo).unwrap();
        let exact = 1.0 + PI.ln() + (1.0 + nbar).ln();
        assert!((wehrl_entropy(&q).unwrap() - exact).abs() < 1e-8, "nbar {nbar}");
    }
    let w = PhaseGrid::wigner_thermal(0.0, geo).unwrap();
    assert!(wehrl_entropy(&w).is_err());
}

#[test]
fn negative_density_is_reported() {
    let geo = GridGeometry::square(32, 4.0).unwrap();
    let mut q = PhaseGrid::husimi_thermal(0.0, geo).unwrap();
    q.values[[3, 5]] = -1e-3;
    match differential_entropy(&q) {
        Err(Error::NegativeDensity { value, x, y }) => {
            assert_eq!(value, -1e-3);
            assert_eq!((x, y), (geo.x(3), geo.y(5)));
        }
        other => panic!("{other:?}"),
    }
}

#[test]
fn current_form_matches_analytic_rate_for_gaussians() {
    let gen = KleinKramers::new(1.0, 0.8, 0.6);
    let eq = CovarianceState::isotropic(gen.stationary_variance().unwrap());
    for s in [state(0.0, 0.0, 1.0, 1.0, 0.0), state(0.4, -0.3, 1.3, 0.6, 0.2)] {
        let exact = kl_gaussian_rate(&s, &eq, &gen).unwrap();
        let err = |n| {
            let w = PhaseGrid::gaussian(AxisTag::Wigner, &s, wide(n)).unwrap();
            (production_rate_current(&w, &gen).unwrap() - exact).abs()
        };
        // The squared current converges at fourth order.
        let (coarse, fine) = (err(300), err(600));
        assert!(fine < 1e-5 * exact, "{fine:e}");
        assert!((12.0..20.0).contains(&(coarse / fine)), "{coarse:e} {fine:e}");
    }
}

#[test]
fn current_form_vanishes_on_stationary_state() {
    let gen = KleinKramers::new(1.0, 0.8, 0.6);
    let pi = |n| {
        let w = PhaseGrid::wigner_equilibrium(2.0 * 0.75, wide(n)).unwrap();
        (production_rate_current(&w, &gen).unwrap(), production_rate_flux(&w, &w, &gen).unwrap())
    };
    let ((c0, f0), (c1, f1)) = (pi(200), pi(400));
    assert!(c1 >= 0.0 && c1 < 2e-6, "{c1:e}");
    assert!((12.0..20.0).contains(&(c0 / c1)), "{c0:e} {c1:e}");
    // Against itself the flux integrand cancels node by node.
    assert_eq!((f0, f1), (0.0, 0.0));
}

#[test]
fn current_form_rejects_frictionless_generator() {
    let w = PhaseGrid::wigner_thermal(0.0, wide(32)).unwrap();
    assert!(production_rate_current(&w, &KleinKramers::new(1.0, 0.0, 0.1)).is_err());
}

#[test]
fn node_rates_are_exact_on_quadratics() {
    let dt = 0.1;
    let k: Vec<f64> = (0..8).map(|i| 1.0 + 2.0 * (i as f64 * dt) - 3.0 * (i as f64 * dt).powi(2)).collect();
    for (i, r) in node_rates(&k, dt).iter().enumerate() {
        let t = i as f64 * dt;
        assert!((r + (2.0 - 6.0 * t)).abs() < 1e-12);
    }
}

#[test]
fn uniform_time_is_required() {
    assert!(uniform_step(&[0.0, 0.1, 0.3]).is_err());
    assert!(uniform_step(&[0.0]).is_err());
    assert!(matches!(uniform_step(&[0.0, 0.0]), Err(Error::NonUniformTime(_))));
    assert!((uniform_step(&[0.0, 0.25, 0.5]).unwrap() - 0.25).abs() < 1e-15);
}

#[test]
fn series_locates_crossing_and_round_trips() {
    let t: Vec<f64> = (0..6).map(|i| i as f64).collect();
    let k = vec![4.0, 2.0, 1.0, 0.5, 1.0, 2.0];
    let s = EntropySeries::from_samples(t, k, Some(vec![0.0; 6]), "x").unwrap();
    assert_eq!(s.pi, vec![2.0, 1.0, 0.5, -0.5, -1.0]);
    assert_eq!(s.first_negative_crossing(), Some(3.0));
    assert_eq!(s.phi.as_ref().unwrap(), &s.pi);

    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("s.csv");
    s.write_csv(&path).unwrap();
    let rows = read_entropy_csv(&path).unwrap();
    assert_eq!(rows.len(), 6);
    let text = std::fs::read_to_string(&path).unwrap();
    assert_eq!(text.lines().next().unwrap(), "t,K,S,t_mid,Pi,phi");
    assert!(text.lines().last().unwrap().ends_with(",,,"));
}
