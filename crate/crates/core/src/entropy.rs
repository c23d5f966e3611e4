//! Relative entropy, entropy production and Wehrl entropy.

use std::f64::consts::PI;
use std::path::Path;

use ndarray::Zip;
use serde::{Deserialize, Serialize};

use crate::gaussian::{CovarianceState, KleinKramers};
use crate::grid::{trapezoid_weights, Axis, AxisTag, PhaseGrid};
use crate::{Error, Result};

/// Cells below this fraction of the peak are left out of logarithmic
/// integrands.
pub const MASK_RELATIVE: f64 = 1e-300;

/// Negative values smaller than this fraction of the peak are treated as
/// round-off and masked; anything more negative is an error where a density
/// is required.
pub const NEGATIVE_TOLERANCE: f64 = 1e-12;

/// Relative entropy `K(a‖b)` of two bivariate Gaussians.
pub fn kl_gaussian(a: &CovarianceState, b: &CovarianceState) -> Result<f64> {
    let (d0, d1) = (a.det(), b.det());
    if !a.is_positive() {
        return Err(Error::SingularCovariance(d0));
    }
    if !b.is_positive() {
        return Err(Error::SingularCovariance(d1));
    }
    let trace = (b.var_p * a.var_q + b.var_q * a.var_p - 2.0 * b.cov_qp * a.cov_qp) / d1;
    let (dq, dp) = (a.mean_q - b.mean_q, a.mean_p - b.mean_p);
    let quad = (b.var_p * dq * dq + b.var_q * dp * dp - 2.0 * b.cov_qp * dq * dp) / d1;
    Ok(0.5 * (trace + quad - 2.0 + (d1 / d0).ln()))
}

/// Differential entropy `−∫W ln W` of a Gaussian, `1 + ln 2π + ½ ln det V`.
pub fn gaussian_entropy(s: &CovarianceState) -> Result<f64> {
    if !s.is_positive() {
        return Err(Error::SingularCovariance(s.det()));
    }
    Ok(1.0 + (2.0 * PI).ln() + 0.5 * s.det().ln())
}

/// `−dK(a(t)‖b)/dt` with `a` moving under `gen` and `b` fixed.
pub fn kl_gaussian_rate(a: &CovarianceState, b: &CovarianceState, gen: &KleinKramers) -> Result<f64> {
    let (d0, d1) = (a.det(), b.det());
    if !a.is_positive() {
        return Err(Error::SingularCovariance(d0));
    }
    if !b.is_positive() {
        return Err(Error::SingularCovariance(d1));
    }
    let [mq, mp, vq, vp, c] = gen.derivatives(a);
    let trace_b = (b.var_p * vq + b.var_q * vp - 2.0 * b.cov_qp * c) / d1;
    let trace_a = (a.var_p * vq + a.var_q * vp - 2.0 * a.cov_qp * c) / d0;
    let (dq, dp) = (a.mean_q - b.mean_q, a.mean_p - b.mean_p);
    let mean = (b.var_p * dq * mq + b.var_q * dp * mp - b.cov_qp * (dq * mp + dp * mq)) / d1;
    Ok(-0.5 * (trace_b + 2.0 * mean - trace_a))
}

/// `∫ w ln(w/target)` over cells where `w` is above the mask.
pub fn kl_grid(w: &PhaseGrid, target: &PhaseGrid) -> Result<f64> {
    w.check_same_geometry(target)?;
    let threshold = MASK_RELATIVE * w.peak();
    let g = &w.geometry;
    let wx = trapezoid_weights(g.nx);
    let wy = trapezoid_weights(g.ny);
    let mut total = 0.0;
    for (i, (row, trow)) in w.values.outer_iter().zip(target.values.outer_iter()).enumerate() {
        let mut s = 0.0;
        for (j, (&v, &t)) in row.iter().zip(trow.iter()).enumerate() {
            if v > threshold {
                if !(t > 0.0) {
                    return Err(Error::param(
                        "target",
                        format!("target is {t} at ({}, {}) where the state is {v}", g.x(i), g.y(j)),
                    ));
                }
                s += wy[j] * v * (v / t).ln();
            }
        }
        total += wx[i] * s;
    }
    Ok(total * g.hx() * g.hy())
}

fn check_density(w: &PhaseGrid) -> Result<f64> {
    let peak = w.peak();
    let floor = -NEGATIVE_TOLERANCE * peak.max(0.0);
    let g = &w.geometry;
    for ((i, j), &v) in w.values.indexed_iter() {
        if v < floor {
            return Err(Error::NegativeDensity {
                value: v,
                x: g.x(i),
                y: g.y(j),
            });
        }
    }
    Ok(MASK_RELATIVE * peak)
}

/// `−∫ w ln w` over cells above the mask.
pub fn differential_entropy(w: &PhaseGrid) -> Result<f64> {
    let threshold = check_density(w)?;
    Ok(-w.weighted_sum(|_, _, v| if v > threshold { v * v.ln() } else { 0.0 }))
}

/// Wehrl entropy `−∫d²α Q ln Q` of a Husimi grid.
pub fn wehrl_entropy(q: &PhaseGrid) -> Result<f64> {
    if q.tag != AxisTag::Husimi {
        return Err(Error::param("tag", "the Wehrl entropy is defined for Husimi grids"));
    }
    differential_entropy(q)
}

fn check_friction(gen: &KleinKramers) -> Result<()> {
    if !(gen.friction > 0.0 && gen.diffusion > 0.0) {
        return Err(Error::param(
            "generator",
            format!("needs friction > 0 and diffusion > 0, got f={} D={}", gen.friction, gen.diffusion),
        ));
    }
    Ok(())
}

/// Probability current `J = f p W + D ∂_p W` of the Fokker–Planck part.
pub fn probability_current(w: &PhaseGrid, gen: &KleinKramers) -> Result<PhaseGrid> {
    let mut j = w.derivative(Axis::Y, 1)?;
    let ys = w.geometry.ys();
    let (f, d) = (gen.friction, gen.diffusion);
    Zip::from(j.values.rows_mut()).and(w.values.rows()).for_each(|mut jr, wr| {
        for ((jv, &wv), &p) in jr.iter_mut().zip(wr.iter()).zip(&ys) {
            *jv = f * p * wv + d * *jv;
        }
    });
    Ok(j)
}

/// Entropy production `∫ J²/(D W)` relative to the stationary state of
/// `gen`; non-negative by construction.
pub fn production_rate_current(w: &PhaseGrid, gen: &KleinKramers) -> Result<f64> {
    check_wigner(w)?;
    check_friction(gen)?;
    let threshold = check_density(w)?;
    let j = probability_current(w, gen)?;
    let inv_d = 1.0 / gen.diffusion;
    let mut integrand = j;
    Zip::from(&mut integrand.values).and(&w.values).for_each(|jv, &wv| {
        *jv = if wv > threshold { *jv * *jv * inv_d / wv } else { 0.0 };
    });
    Ok(integrand.quadrature())
}

/// `∫ J·∂_p ln(W/target)`, the production rate against an isotropic target
/// that need not be stationary. Reduces to [`production_rate_current`] when
/// `target` is the stationary Gaussian of `gen`.
pub fn production_rate_flux(w: &PhaseGrid, target: &PhaseGrid, gen: &KleinKramers) -> Result<f64> {
    check_wigner(w)?;
    w.check_same_geometry(target)?;
    check_friction(gen)?;
    let threshold = check_density(w)?;
    let j = probability_current(w, gen)?;
    let dw = w.derivative(Axis::Y, 1)?;
    let dt = target.derivative(Axis::Y, 1)?;
    let mut integrand = j;
    Zip::from(&mut integrand.values)
        .and(&w.values)
        .and(&dw.values)
        .and(&target.values)
        .and(&dt.values)
        .for_each(|jv, &wv, &dwv, &tv, &dtv| {
            *jv = if wv > threshold { *jv * (dwv / wv - dtv / tv) } else { 0.0 };
        });
    Ok(integrand.quadrature())
}

fn check_wigner(w: &PhaseGrid) -> Result<()> {
    if w.tag == AxisTag::Wigner {
        Ok(())
    } else {
        Err(Error::param("tag", "the current form needs a Wigner grid over (q, p)"))
    }
}

/// Checks that `t` is uniformly spaced and returns the step.
pub fn uniform_step(t: &[f64]) -> Result<f64> {
    if t.len() < 2 {
        return Err(Error::NonUniformTime(format!("need at least 2 samples, got {}", t.len())));
    }
    let dt = (t[t.len() - 1] - t[0]) / (t.len() - 1) as f64;
    if !(dt > 0.0) {
        return Err(Error::NonUniformTime(format!("timestamps are not increasing (dt = {dt})")));
    }
    let tol = 1e-12 * t[t.len() - 1].abs().max(1.0);
    for (i, w) in t.windows(2).enumerate() {
        if ((w[1] - w[0]) - dt).abs() > tol {
            return Err(Error::NonUniformTime(format!(
                "step {i} is {} but the mean step is {dt}",
                w[1] - w[0]
            )));
        }
    }
    Ok(dt)
}

/// `−dK/dt` at every node: second-order central differences inside and
/// second-order one-sided differences at both ends.
pub fn node_rates(k: &[f64], dt: f64) -> Vec<f64> {
    let n = k.len();
    match n {
        0 | 1 => vec![0.0; n],
        2 => vec![-(k[1] - k[0]) / dt; 2],
        _ => (0..n)
            .map(|i| {
                let d = if i == 0 {
                    -1.5 * k[0] + 2.0 * k[1] - 0.5 * k[2]
                } else if i == n - 1 {
                    1.5 * k[n - 1] - 2.0 * k[n - 2] + 0.5 * k[n - 3]
                } else {
                    0.5 * (k[i + 1] - k[i - 1])
                };
                -d / dt
            })
            .collect(),
    }
}

/// Relative entropy samples with the production rate `Π = −dK/dt` and the
/// flux `φ = Π − dS/dt` at interval midpoints.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EntropySeries {
    pub target: String,
    pub t: Vec<f64>,
    pub k: Vec<f64>,
    pub entropy: Option<Vec<f64>>,
    pub t_mid: Vec<f64>,
    pub pi: Vec<f64>,
    pub phi: Option<Vec<f64>>,
}

pub const ENTROPY_COLUMNS: [&str; 6] = ["t", "K", "S", "t_mid", "Pi", "phi"];

impl EntropySeries {
    pub fn from_samples(t: Vec<f64>, k: Vec<f64>, entropy: Option<Vec<f64>>, target: impl Into<String>) -> Result<Self> {
        if k.len() != t.len() || entropy.as_ref().is_some_and(|s| s.len() != t.len()) {
            return Err(Error::param("series", "timestamps and values differ in length"));
        }
        let dt = uniform_step(&t)?;
        let t_mid: Vec<f64> = t.windows(2).map(|w| 0.5 * (w[0] + w[1])).collect();
        let pi: Vec<f64> = k.windows(2).map(|w| -(w[1] - w[0]) / dt).collect();
        let phi = entropy.as_ref().map(|s| {
            s.windows(2)
                .zip(&pi)
                .map(|(w, p)| p - (w[1] - w[0]) / dt)
                .collect()
        });
        Ok(Self {
            target: target.into(),
            t,
            k,
            entropy,
            t_mid,
            pi,
            phi,
        })
    }

    /// Series for a Gaussian trajectory against a fixed Gaussian target.
    pub fn gaussian(samples: &[CovarianceState], target: &CovarianceState, label: impl Into<String>) -> Result<Self> {
        let t = samples.iter().map(|s| s.t).collect();
        let k = samples.iter().map(|s| kl_gaussian(s, target)).collect::<Result<_>>()?;
        let s = samples.iter().map(gaussian_entropy).collect::<Result<_>>()?;
        Self::from_samples(t, k, Some(s), label)
    }

    pub fn min_pi(&self) -> f64 {
        self.pi.iter().copied().fold(f64::INFINITY, f64::min)
    }

    /// First time at which `Π` goes from non-negative to negative, by linear
    /// interpolation between midpoints.
    pub fn first_negative_crossing(&self) -> Option<f64> {
        self.pi.windows(2).zip(self.t_mid.windows(2)).find_map(|(p, t)| {
            (p[0] >= 0.0 && p[1] < 0.0).then(|| t[0] + (t[1] - t[0]) * p[0] / (p[0] - p[1]))
        })
    }

    /// One row per sample; the midpoint columns are empty on the last row.
    pub fn write_csv(&self, path: &Path) -> Result<()> {
        let mut w = csv::Writer::from_path(path)?;
        w.write_record(ENTROPY_COLUMNS)?;
        for i in 0..self.t.len() {
            let s = self.entropy.as_ref().map(|s| s[i]);
            let mid = self.t_mid.get(i).copied();
            let pi = self.pi.get(i).copied();
            let phi = self.phi.as_ref().and_then(|p| p.get(i).copied());
            w.serialize((self.t[i], self.k[i], s, mid, pi, phi))?;
        }
        w.flush()?;
        Ok(())
    }
}

type EntropyRow = (f64, f64, Option<f64>, Option<f64>, Option<f64>, Option<f64>);

/// Reads the columns written by [`EntropySeries::write_csv`].
pub fn read_entropy_csv(path: &Path) -> Result<Vec<EntropyRow>> {
    let mut r = csv::Reader::from_path(path)?;
    if r.headers()?.iter().ne(ENTROPY_COLUMNS) {
        return Err(Error::param("csv", format!("unexpected header {:?}", r.headers()?)));
    }
    r.deserialize().map(|row| Ok(row?)).collect()
}
