//! Means and covariance of a Gaussian Wigner function under the
//! Klein–Kramers equation
//!
//! `∂ₜW = −ωp ∂_q W + ωq ∂_p W + f ∂_p(pW) + D̂ ∂²_p W`
//!
//! written in scaled quadratures where the ground state has unit variance.
//! The flow is clockwise: `dq/dt = ωp`, `dp/dt = −ωq`.

use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::params::{ChannelCoefficients, ModelParams};
use crate::{Error, Result};

/// Numerical slack on `var_q·var_p − cov_qp² ≥ 1`.
pub const UNCERTAINTY_SLACK: f64 = 1e-9;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct CovarianceState {
    pub mean_q: f64,
    pub mean_p: f64,
    pub var_q: f64,
    pub var_p: f64,
    pub cov_qp: f64,
    pub t: f64,
}

impl CovarianceState {
    /// Thermal state with `V = (2n̄+1)·I`.
    pub fn thermal(nbar: f64) -> Result<Self> {
        if !(nbar >= 0.0 && nbar.is_finite()) {
            return Err(Error::param("nbar", format!("occupation must be >= 0, got {nbar}")));
        }
        Ok(Self::isotropic(2.0 * nbar + 1.0))
    }

    pub fn isotropic(var: f64) -> Self {
        Self {
            mean_q: 0.0,
            mean_p: 0.0,
            var_q: var,
            var_p: var,
            cov_qp: 0.0,
            t: 0.0,
        }
    }

    pub fn det(&self) -> f64 {
        self.var_q * self.var_p - self.cov_qp * self.cov_qp
    }

    pub fn is_positive(&self) -> bool {
        self.var_q > 0.0 && self.var_p > 0.0 && self.det() > 0.0
    }

    pub fn satisfies_uncertainty(&self) -> bool {
        self.det() >= 1.0 - UNCERTAINTY_SLACK
    }

    fn to_array(self) -> [f64; 5] {
        [self.mean_q, self.mean_p, self.var_q, self.var_p, self.cov_qp]
    }

    fn from_array(a: [f64; 5], t: f64) -> Self {
        Self {
            mean_q: a[0],
            mean_p: a[1],
            var_q: a[2],
            var_p: a[3],
            cov_qp: a[4],
            t,
        }
    }

    /// Euclidean distance between the `(var_q, var_p, cov_qp)` triples.
    pub fn covariance_distance(&self, other: &Self) -> f64 {
        ((self.var_q - other.var_q).powi(2)
            + (self.var_p - other.var_p).powi(2)
            + (self.cov_qp - other.cov_qp).powi(2))
        .sqrt()
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Regime {
    Frictionless,
    LinearFriction,
}

/// Scaled Klein–Kramers generator. `diffusion` is the coefficient of `∂²_p`
/// in the scaled variables, so `d var_p/dt` picks up `+2·diffusion`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct KleinKramers {
    pub omega: f64,
    pub friction: f64,
    pub diffusion: f64,
}

impl KleinKramers {
    pub fn new(omega: f64, friction: f64, diffusion: f64) -> Self {
        Self {
            omega,
            friction,
            diffusion,
        }
    }

    /// Scaled generator for a model: the momentum diffusion `D` of the
    /// physical equation becomes `2D/(mω)` once `p` is measured in units of
    /// the ground-state width, so the stationary variance is `2D/(mωf)`.
    pub fn from_coefficients(coeffs: &ChannelCoefficients, mass: f64, omega: f64, regime: Regime) -> Self {
        let friction = match regime {
            Regime::Frictionless => 0.0,
            Regime::LinearFriction => coeffs.friction,
        };
        Self::new(omega, friction, 2.0 * coeffs.diffusion / (mass * omega))
    }

    pub fn for_model(params: &ModelParams, regime: Regime) -> Result<Self> {
        params.validate()?;
        let coeffs = match regime {
            Regime::Frictionless => params.with_beta(0.0).coefficients()?,
            Regime::LinearFriction => {
                if !(params.beta > 0.0) {
                    return Err(Error::param("beta", "the friction regime needs beta > 0"));
                }
                params.coefficients()?
            }
        };
        Ok(Self::from_coefficients(&coeffs, params.mass, params.omega, regime))
    }

    /// Isotropic stationary variance `diffusion/friction`, if there is one.
    pub fn stationary_variance(&self) -> Option<f64> {
        (self.friction > 0.0).then(|| self.diffusion / self.friction)
    }

    /// Time derivatives of `(mean_q, mean_p, var_q, var_p, cov_qp)`.
    pub fn derivatives(&self, s: &CovarianceState) -> [f64; 5] {
        let (w, f, d) = (self.omega, self.friction, self.diffusion);
        [
            w * s.mean_p,
            -w * s.mean_q - f * s.mean_p,
            2.0 * w * s.cov_qp,
            -2.0 * w * s.cov_qp - 2.0 * f * s.var_p + 2.0 * d,
            w * (s.var_p - s.var_q) - f * s.cov_qp,
        ]
    }

    fn rk4_step(&self, s: &CovarianceState, h: f64) -> CovarianceState {
        let y = s.to_array();
        let shift = |k: &[f64; 5], c: f64| {
            let mut out = y;
            for i in 0..5 {
                out[i] += c * k[i];
            }
            CovarianceState::from_array(out, s.t)
        };
        let k1 = self.derivatives(s);
        let k2 = self.derivatives(&shift(&k1, 0.5 * h));
        let k3 = self.derivatives(&shift(&k2, 0.5 * h));
        let k4 = self.derivatives(&shift(&k3, h));
        let mut out = y;
        for i in 0..5 {
            out[i] += h / 6.0 * (k1[i] + 2.0 * k2[i] + 2.0 * k3[i] + k4[i]);
        }
        CovarianceState::from_array(out, s.t + h)
    }

    /// Fixed-step RK4 over `[0, horizon]` with `steps` steps; returns
    /// `steps + 1` samples. Only positivity of the covariance is enforced.
    pub fn integrate(&self, initial: CovarianceState, horizon: f64, steps: usize) -> Result<Vec<CovarianceState>> {
        self.integrate_checked(initial, horizon, steps, false)
    }

    fn integrate_checked(
        &self,
        initial: CovarianceState,
        horizon: f64,
        steps: usize,
        uncertainty: bool,
    ) -> Result<Vec<CovarianceState>> {
        if steps < 2 {
            return Err(Error::param("steps", format!("need at least 2 steps, got {steps}")));
        }
        if !(horizon > 0.0 && horizon.is_finite()) {
            return Err(Error::param("horizon", format!("must be > 0, got {horizon}")));
        }
        let h = horizon / steps as f64;
        let mut out = Vec::with_capacity(steps + 1);
        let mut s = CovarianceState { t: 0.0, ..initial };
        out.push(s);
        for n in 1..=steps {
            s = self.rk4_step(&s, h);
            s.t = n as f64 * h;
            if !s.is_positive() {
                return Err(Error::InvariantViolation {
                    invariant: "positive covariance",
                    step: n,
                    time: s.t,
                    detail: format!("var_q={}, var_p={}, det={}", s.var_q, s.var_p, s.det()),
                });
            }
            if uncertainty && !s.satisfies_uncertainty() {
                return Err(Error::InvariantViolation {
                    invariant: "uncertainty bound det V >= 1",
                    step: n,
                    time: s.t,
                    detail: format!("det V = {}", s.det()),
                });
            }
            out.push(s);
        }
        Ok(out)
    }
}

/// Moment equations for a model and regime.
pub fn moment_odes(
    state: &CovarianceState,
    coeffs: &ChannelCoefficients,
    mass: f64,
    omega: f64,
    regime: Regime,
) -> [f64; 5] {
    KleinKramers::from_coefficients(coeffs, mass, omega, regime).derivatives(state)
}

/// Samples of a Gaussian trajectory at uniform times `i·dt`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TrajectoryRecord {
    pub params: ModelParams,
    pub regime: Regime,
    pub dt: f64,
    pub samples: Vec<CovarianceState>,
}

/// RK4 propagation of a physical state. Fails if a sample drops below the
/// uncertainty bound, which signals a step that is too large.
pub fn propagate(
    initial: CovarianceState,
    params: &ModelParams,
    regime: Regime,
    horizon: f64,
    steps: usize,
) -> Result<TrajectoryRecord> {
    let gen = KleinKramers::for_model(params, regime)?;
    let check = initial.satisfies_uncertainty();
    let samples = gen.integrate_checked(initial, horizon, steps, check)?;
    Ok(TrajectoryRecord {
        params: *params,
        regime,
        dt: horizon / steps as f64,
        samples,
    })
}

pub const TRAJECTORY_COLUMNS: [&str; 6] = ["t", "mean_q", "mean_p", "var_q", "var_p", "cov_qp"];

impl TrajectoryRecord {
    pub fn times(&self) -> Vec<f64> {
        self.samples.iter().map(|s| s.t).collect()
    }

    pub fn write_csv(&self, path: &Path) -> Result<()> {
        write_states_csv(&self.samples, path)
    }
}

pub fn write_states_csv(samples: &[CovarianceState], path: &Path) -> Result<()> {
    let mut w = csv::Writer::from_path(path)?;
    w.write_record(TRAJECTORY_COLUMNS)?;
    for s in samples {
        w.serialize((s.t, s.mean_q, s.mean_p, s.var_q, s.var_p, s.cov_qp))?;
    }
    w.flush()?;
    Ok(())
}

pub fn read_states_csv(path: &Path) -> Result<Vec<CovarianceState>> {
    let mut r = csv::Reader::from_path(path)?;
    if r.headers()?.iter().ne(TRAJECTORY_COLUMNS) {
        return Err(Error::param("csv", format!("unexpected header {:?}", r.headers()?)));
    }
    r.deserialize()
        .map(|row| {
            let (t, mean_q, mean_p, var_q, var_p, cov_qp): (f64, f64, f64, f64, f64, f64) = row?;
            Ok(CovarianceState {
                mean_q,
                mean_p,
                var_q,
                var_p,
                cov_qp,
                t,
            })
        })
        .collect()
}
