mod common;

use collapse_thermo::grid::Axis;
use collapse_thermo::qlindblad::{q_entropy_experiment, QGenerator};
use collapse_thermo::{GridGeometry, ModelParams, PhaseGrid};
use common::line_1d;

/// Integrates each `k`-dependent prefactor of `A₀ + A₁ + A₂` separately and
/// assembles the generator term by term.
fn generator_by_quadrature(p: &ModelParams, q: &PhaseGrid) -> PhaseGrid {
    let (m, b, r) = (p.mass, p.beta, p.cutoff);
    let gam = |k: f64| p.csl_rate * (-k * k * r * r).exp();
    let int = |f: &dyn Fn(f64) -> f64| line_1d(|k| gam(k) * f(k), r);

    let c_q = int(&|k| b * m * k * k);
    let c_xx = int(&|k| b * b / 32.0 * k * k);
    let c_ydy = int(&|k| b * m * k * k * (1.0 + b * k * k / (4.0 * m)));
    let c_yy = int(&|k| {
        b / 4.0 * m * k * k * (1.0 + b * k * k / (4.0 * m))
            + b * b / 16.0 * k.powi(6)
            + b / 2.0 * m * k.powi(4)
            + m * m / 2.0 * k * k
    });
    let c_bracket = int(&|k| b * b / 16.0 * k.powi(4));

    let d = |axis, n| q.derivative(axis, n).unwrap().values;
    let (dy, dyy, dyyy, dyyyy, dxx) = (d(Axis::Y, 1), d(Axis::Y, 2), d(Axis::Y, 3), d(Axis::Y, 4), d(Axis::X, 2));
    let dxxyy = q.derivative(Axis::X, 2).unwrap().derivative(Axis::Y, 2).unwrap().values;
    let mut out = q.values.clone();
    for ((i, j), v) in out.indexed_iter_mut() {
        let y = q.geometry.y(j);
        let bracket = (4.0 * y * y + 1.0) * dyy[[i, j]]
            + 2.0 * y * dyyy[[i, j]]
            + 0.25 * (dyyyy[[i, j]] + dxxyy[[i, j]]);
        *v = c_q * *v
            + c_xx * dxx[[i, j]]
            + c_ydy * y * dy[[i, j]]
            + c_yy * dyy[[i, j]]
            + c_bracket * bracket;
    }
    q.with_values(out)
}

#[test]
fn moment_collection_matches_direct_quadrature() {
    for (beta, nbar, r0) in [(0.01, 0.1, 0.9), (100.0, 0.1, 0.9), (3.0, 0.5, 1.7)] {
        let p = ModelParams::csl(1.0, 1.0, r0, beta, 1.0);
        let gen = QGenerator::new(p).unwrap();
        let q = PhaseGrid::husimi_thermal(nbar, GridGeometry::square(64, 4.0).unwrap()).unwrap();
        let fast = gen.apply(&q).unwrap();
        let oracle = generator_by_quadrature(&p, &q);
        let scale = oracle.values.iter().fold(0.0f64, |a, v| a.max(v.abs()));
        let err = fast.values.iter().zip(oracle.values.iter()).fold(0.0f64, |a, (x, y)| a.max((x - y).abs()));
        assert!(err <= 1e-8 * scale, "beta={beta}: err {err:e}, scale {scale:e}");
    }
}

#[test]
fn generator_is_linear() {
    let gen = QGenerator::new(ModelParams::csl(1.0, 1.0, 0.9, 3.0, 1.0)).unwrap();
    let geo = GridGeometry::square(48, 4.0).unwrap();
    let a = PhaseGrid::husimi_thermal(0.1, geo).unwrap();
    let b = PhaseGrid::husimi_thermal(0.7, geo).unwrap();
    let sum = a.with_values(&a.values * 2.0 + &b.values * 0.5);
    let lhs = gen.apply(&sum).unwrap().values;
    let rhs = gen.apply(&a).unwrap().values * 2.0 + gen.apply(&b).unwrap().values * 0.5;
    for (x, y) in lhs.iter().zip(rhs.iter()) {
        assert!((x - y).abs() <= 1e-12 * (1.0 + y.abs()));
    }
}

#[test]
fn weak_dissipation_relaxes_towards_hotter_targets() {
    let p = ModelParams::csl(1.0, 1.0, 0.9, 0.01, 1.0);
    let geo = GridGeometry::square(200, 6.0).unwrap();
    let exp = q_entropy_experiment(&p, 0.1, &[0.1, 0.15, 0.2], 10, 1e-6, geo).unwrap();
    assert_eq!(exp.series.len(), 3);
    // Against its own initial state K grows from zero, so Π starts negative.
    assert_eq!(exp.series[0].k[0], 0.0);
    assert!(exp.series[0].pi.iter().all(|&v| v < 0.0));
    for s in &exp.series[1..] {
        assert_eq!(s.t.len(), 11);
        assert!(s.min_pi() > 0.0, "{}", s.min_pi());
    }
    let drift = exp.mass.iter().map(|m| (m - exp.mass[0]).abs()).fold(0.0, f64::max);
    assert!(drift < 1e-9, "mass drift {drift:e}");
}

#[test]
fn experiment_validates_inputs() {
    let geo = GridGeometry::square(32, 4.0).unwrap();
    let p = ModelParams::csl(1.0, 1.0, 0.9, 1.0, 1.0);
    assert!(q_entropy_experiment(&p, 0.1, &[0.1], 0, 1e-6, geo).is_err());
    assert!(q_entropy_experiment(&p, 0.1, &[0.1], 4, 0.0, geo).is_err());
    assert!(q_entropy_experiment(&ModelParams::default(), 0.1, &[0.1], 4, 1e-6, geo).is_err());
}
