//! Model constants and the closed-form coefficients obtained from moments of
//! the collapse kernel `Γ(k)`.
//!
//! All coefficients are assembled from [`ModelParams::gamma_moment`], the
//! Gaussian moment `∫ dᵈk/(2π)ᵈ k^{2n} Γ(k)`:
//!
//! * DP,  `d = 3`: `Γ = 4πħG e^{-k²R₀²}/k²`, moment `ħG Γ(n+½) / (π R₀^{2n+1})`
//! * CSL, `d = 3`: `Γ = ħ²γ e^{-k²R₀²}`, moment `ħ²γ Γ(n+3/2) / (4π² R₀^{2n+3})`
//! * CSL, `d = 1`: `Γ = ħ²γ e^{-k²R₀²}`, moment `ħ²γ Γ(n+½) / (2π R₀^{2n+1})`

use std::f64::consts::PI;

use serde::{Deserialize, Serialize};

use crate::{Error, Result};

/// Which collapse kernel is in use.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Model {
    Dp,
    Csl,
}

/// Dimension of the k-space integral.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum KernelDim {
    One,
    Three,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ModelParams {
    pub mass: f64,
    pub omega: f64,
    /// Cutoff length `R₀`.
    pub cutoff: f64,
    /// Dissipation strength `β` (an inverse energy).
    pub beta: f64,
    /// CSL coupling `γ`; ignored by the DP kernel.
    pub csl_rate: f64,
    pub hbar: f64,
    pub g: f64,
    pub model: Model,
}

impl Default for ModelParams {
    /// The DP parameters used for the Gaussian runs: `m = 2`, `R₀ = 3`, `ω = 1`.
    fn default() -> Self {
        Self {
            mass: 2.0,
            omega: 1.0,
            cutoff: 3.0,
            beta: 0.0,
            csl_rate: 0.0,
            hbar: 1.0,
            g: 1.0,
            model: Model::Dp,
        }
    }
}

/// Drift and diffusion coefficients of the phase-space equation.
///
/// `diffusion` and `friction` are the small-β Klein–Kramers pair; the rest are
/// the scalar prefactors of the full fourth-order equation.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ChannelCoefficients {
    pub diffusion: f64,
    pub friction: f64,
    pub d1: f64,
    pub d2: f64,
    pub d3: f64,
    /// Position-diffusion scalar `D̃`.
    pub d_tilde: f64,
    /// Prefactor of the fourth-derivative tensor `R^{ijkl}`.
    pub r: f64,
}

/// `Γ(n + ½)`.
fn gamma_half(n: u32) -> f64 {
    (0..n).fold(PI.sqrt(), |acc, k| acc * (k as f64 + 0.5))
}

impl ModelParams {
    pub fn dp(mass: f64, omega: f64, cutoff: f64, beta: f64) -> Self {
        Self {
            mass,
            omega,
            cutoff,
            beta,
            ..Self::default()
        }
    }

    pub fn csl(mass: f64, omega: f64, cutoff: f64, beta: f64, csl_rate: f64) -> Self {
        Self {
            mass,
            omega,
            cutoff,
            beta,
            csl_rate,
            model: Model::Csl,
            ..Self::default()
        }
    }

    pub fn with_beta(self, beta: f64) -> Self {
        Self { beta, ..self }
    }

    pub fn validate(&self) -> Result<()> {
        let positive = [
            ("mass", self.mass),
            ("omega", self.omega),
            ("cutoff", self.cutoff),
            ("hbar", self.hbar),
            ("g", self.g),
        ];
        for (name, value) in positive {
            if !(value.is_finite() && value > 0.0) {
                return Err(Error::param(name, format!("must be finite and > 0, got {value}")));
            }
        }
        for (name, value) in [("beta", self.beta), ("csl_rate", self.csl_rate)] {
            if !(value.is_finite() && value >= 0.0) {
                return Err(Error::param(name, format!("must be finite and >= 0, got {value}")));
            }
        }
        Ok(())
    }

    fn check_cutoff(&self) -> Result<()> {
        if self.cutoff > 0.0 && self.cutoff.is_finite() {
            Ok(())
        } else {
            Err(Error::param("cutoff", format!("R0 must be > 0, got {}", self.cutoff)))
        }
    }

    /// Collapse rate `Λ_DP = G m² / (√π ħ R₀)`.
    pub fn lambda_dp(&self) -> Result<f64> {
        if self.model != Model::Dp {
            return Err(Error::param("model", "lambda_dp is defined for the DP kernel"));
        }
        self.check_cutoff()?;
        Ok(self.g * self.mass * self.mass / (PI.sqrt() * self.hbar * self.cutoff))
    }

    /// `∫ dᵈk/(2π)ᵈ k^{2n} Γ(k)` in closed form.
    pub fn gamma_moment(&self, n: u32, dim: KernelDim) -> Result<f64> {
        self.check_cutoff()?;
        let r = self.cutoff;
        match (self.model, dim) {
            (Model::Dp, KernelDim::One) => Err(Error::DivergentKernel),
            (Model::Dp, KernelDim::Three) => {
                Ok(self.hbar * self.g * gamma_half(n) / (PI * r.powi(2 * n as i32 + 1)))
            }
            (Model::Csl, KernelDim::Three) => Ok(self.hbar * self.hbar * self.csl_rate
                * gamma_half(n + 1)
                / (4.0 * PI * PI * r.powi(2 * n as i32 + 3))),
            (Model::Csl, KernelDim::One) => Ok(self.hbar * self.hbar * self.csl_rate
                * gamma_half(n)
                / (2.0 * PI * r.powi(2 * n as i32 + 1))),
        }
    }

    /// `∫ dk/(2π) k^{power} Γ(k)` for the 1D kernel; odd powers vanish because
    /// `Γ` is even.
    pub fn signed_moment_1d(&self, power: u32) -> Result<f64> {
        if power % 2 == 1 {
            if self.model == Model::Dp {
                return Err(Error::DivergentKernel);
            }
            return Ok(0.0);
        }
        self.gamma_moment(power / 2, KernelDim::One)
    }

    /// Momentum diffusion of the frictionless model, `D = ħ G m²/(3√π R₀³)`
    /// for DP. Evaluated through the same moment as [`Self::coefficients`].
    pub fn frictionless_diffusion(&self) -> Result<f64> {
        let m1 = self.gamma_moment(1, KernelDim::Three)?;
        Ok(2.0 * self.mass * self.mass / 3.0 * m1)
    }

    pub fn coefficients(&self) -> Result<ChannelCoefficients> {
        let m = self.mass;
        let hb2 = self.hbar * self.hbar;
        let beta = self.beta;
        let m1 = self.gamma_moment(1, KernelDim::Three)?;
        let m2 = self.gamma_moment(2, KernelDim::Three)?;
        let m3 = self.gamma_moment(3, KernelDim::Three)?;

        let diffusion = if beta == 0.0 {
            self.frictionless_diffusion()?
        } else {
            2.0 * m * m / 3.0 * (m1 + hb2 * beta / (2.0 * m) * m2)
        };
        let friction = m * beta / 3.0 * m1;
        let c = hb2 * beta / (4.0 * m);
        let d1 = 2.0 * m * m / 3.0 * (m1 + 2.0 * c * m2 + c * c * m3);
        let d3 = hb2 * beta * beta / 60.0 * m2;
        Ok(ChannelCoefficients {
            diffusion,
            friction,
            d1,
            d2: d3 / 2.0,
            d3,
            d_tilde: hb2 * beta * beta / 24.0 * m1,
            r: hb2 * beta * beta / 120.0 * m2,
        })
    }

    /// Stationary isotropic variance of the small-β dynamics,
    /// `σ²_eq = (4/(ωβ))·[1 + 3ħ²β/(4mR₀²)]`.
    pub fn sigma_eq(&self) -> Result<f64> {
        if !(self.beta > 0.0) {
            return Err(Error::param(
                "beta",
                "the frictionless model has no stationary state (beta must be > 0)",
            ));
        }
        if !(self.omega > 0.0) {
            return Err(Error::param("omega", "must be > 0"));
        }
        self.check_cutoff()?;
        let correction =
            3.0 * self.hbar * self.hbar * self.beta / (4.0 * self.mass * self.cutoff.powi(2));
        Ok(4.0 / (self.omega * self.beta) * (1.0 + correction))
    }

    /// Largest `β` compatible with the uncertainty bound,
    /// `β_c = 4 / (ħω − 3ħ²/(mR₀²))`.
    pub fn beta_critical(&self) -> Result<f64> {
        self.check_cutoff()?;
        let denom = self.hbar * self.omega
            - 3.0 * self.hbar * self.hbar / (self.mass * self.cutoff.powi(2));
        if !(denom > 0.0) {
            return Err(Error::NoFiniteBound(format!(
                "ħω − 3ħ²/(mR₀²) = {denom:e} is not positive"
            )));
        }
        Ok(4.0 / denom)
    }

    /// Equilibrium inverse temperature from `coth(β_eq ħω/2) = 8/(βħω)`,
    /// solved by bisection on `β_eq ħω ∈ (1e-12, 50)`.
    pub fn beta_equilibrium(&self) -> Result<f64> {
        let energy = self.hbar * self.omega;
        let rhs = 8.0 / (self.beta * energy);
        if !(rhs > 1.0) || !rhs.is_finite() {
            return Err(Error::NoSolution(format!(
                "8/(βħω) = {rhs} must exceed 1 for an equilibrium temperature"
            )));
        }
        // (e^x + 1)/(e^x − 1) is monotone decreasing in x.
        let lhs = |x: f64| 1.0 / (0.5 * x).tanh();
        let (mut lo, mut hi) = (1e-12, 50.0);
        if lhs(lo) < rhs || lhs(hi) > rhs {
            return Err(Error::NoSolution(format!(
                "root for 8/(βħω) = {rhs} lies outside the bracket (1e-12, 50)/ħω"
            )));
        }
        while (hi - lo) > 1e-12 * hi {
            let mid = 0.5 * (lo + hi);
            if lhs(mid) > rhs {
                lo = mid;
            } else {
                hi = mid;
            }
        }
        Ok(0.5 * (lo + hi) / energy)
    }
}

/// CSL coupling `γ` from the usual rate `λ` and correlation length `r_c`:
/// `γ = 8π^{3/2} λ r_c³`.
pub fn csl_rate_from_lambda(lambda: f64, r_c: f64) -> f64 {
    8.0 * PI.powf(1.5) * lambda * r_c.powi(3)
}

/// Momentum diffusion of mass-proportional CSL, `γ m² / (8π^{3/2} m₀² r_c⁵)`.
pub fn csl_diffusion(gamma: f64, r_c: f64, mass: f64, reference_mass: f64) -> f64 {
    gamma * mass * mass / (8.0 * PI.powf(1.5) * reference_mass.powi(2) * r_c.powi(5))
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;

    #[test]
    fn lambda_dp_values() {
        let p = ModelParams::dp(2.0, 1.0, 3.0, 0.0);
        assert_relative_eq!(p.lambda_dp().unwrap(), 4.0 / (3.0 * PI.sqrt()), max_relative = 1e-14);
        assert_relative_eq!(p.lambda_dp().unwrap(), 0.75225, epsilon = 1e-5);
        let p = ModelParams::dp(1.0, 1.0, 1.0, 0.0);
        assert_relative_eq!(p.lambda_dp().unwrap(), 1.0 / PI.sqrt(), max_relative = 1e-14);
        let p = ModelParams::dp(0.0, 1.0, 5.0, 0.0);
        assert_eq!(p.lambda_dp().unwrap(), 0.0);
    }

    #[test]
    fn lambda_dp_rejects_bad_cutoff() {
        for r in [0.0, -1.0] {
            assert!(ModelParams::dp(1.0, 1.0, r, 0.0).lambda_dp().is_err());
        }
        let csl = ModelParams::csl(1.0, 1.0, 1.0, 0.0, 1.0);
        assert!(csl.lambda_dp().is_err());
    }

    #[test]
    fn moments_closed_forms() {
        let csl = ModelParams::csl(1.0, 1.0, 0.9, 0.0, 1.0);
        let m0 = csl.gamma_moment(0, KernelDim::One).unwrap();
        assert_relative_eq!(m0, PI.sqrt() / (2.0 * PI * 0.9), max_relative = 1e-14);
        assert!((m0 - 0.31344).abs() < 1e-4);

        let dp = ModelParams::dp(2.0, 1.0, 3.0, 0.0);
        let d0 = dp.gamma_moment(0, KernelDim::Three).unwrap();
        let d1 = dp.gamma_moment(1, KernelDim::Three).unwrap();
        assert_relative_eq!(d0, 1.0 / (PI.sqrt() * 3.0), max_relative = 1e-14);
        assert_relative_eq!(d1, 1.0 / (2.0 * PI.sqrt() * 27.0), max_relative = 1e-14);
        // the rate is m²/ħ² times the zeroth moment
        assert_relative_eq!(dp.lambda_dp().unwrap(), 4.0 * d0, max_relative = 1e-14);
    }

    #[test]
    fn dp_one_dimensional_kernel_is_rejected() {
        let dp = ModelParams::default();
        assert!(matches!(dp.gamma_moment(0, KernelDim::One), Err(Error::DivergentKernel)));
    }

    #[test]
    fn odd_moments_vanish() {
        let csl = ModelParams::csl(1.0, 1.0, 0.9, 1.0, 1.0);
        for p in [1, 3, 5] {
            assert_eq!(csl.signed_moment_1d(p).unwrap(), 0.0);
        }
        assert_eq!(
            csl.signed_moment_1d(4).unwrap(),
            csl.gamma_moment(2, KernelDim::One).unwrap()
        );
    }

    #[test]
    fn frictionless_coefficients() {
        let p = ModelParams::default();
        let c = p.coefficients().unwrap();
        assert_relative_eq!(c.diffusion, 4.0 / (81.0 * PI.sqrt()), max_relative = 1e-14);
        assert_eq!(c.diffusion, p.frictionless_diffusion().unwrap());
        assert_eq!(c.friction, 0.0);
        assert_eq!(c.d3, 0.0);
    }

    #[test]
    fn d3_is_twice_d2() {
        for beta in [0.1, 1.0, 3.0, 17.0] {
            let c = ModelParams::default().with_beta(beta).coefficients().unwrap();
            assert_eq!(c.d3, 2.0 * c.d2);
            assert!(c.diffusion > 0.0 && c.friction > 0.0);
        }
    }

    #[test]
    fn sigma_eq_reference_value() {
        let p = ModelParams::dp(2.0, 1.0, 3.0, 3.0);
        assert_relative_eq!(p.sigma_eq().unwrap(), 1.5, max_relative = 1e-14);
        let c = p.coefficients().unwrap();
        let via_coeffs = 2.0 * c.diffusion / (p.mass * p.omega * c.friction);
        assert_relative_eq!(p.sigma_eq().unwrap(), via_coeffs, max_relative = 1e-10);
    }

    #[test]
    fn sigma_eq_large_cutoff_limit() {
        let p = ModelParams::dp(2.0, 1.3, 1e8, 0.7);
        assert_relative_eq!(p.sigma_eq().unwrap(), 4.0 / (1.3 * 0.7), max_relative = 1e-12);
    }

    #[test]
    fn sigma_eq_needs_friction() {
        assert!(ModelParams::default().sigma_eq().is_err());
    }

    #[test]
    fn beta_critical_values() {
        let p = ModelParams::default();
        let bc = p.beta_critical().unwrap();
        assert_relative_eq!(bc, 4.8, max_relative = 1e-14);
        // saturating the bound gives the ground-state variance ħ
        assert_relative_eq!(p.with_beta(bc).sigma_eq().unwrap(), 1.0, max_relative = 1e-12);

        let far = ModelParams::dp(2.0, 1.0, 1e9, 0.0);
        assert_relative_eq!(far.beta_critical().unwrap(), 4.0, max_relative = 1e-12);

        // m R₀² = 3ħ/ω
        let singular = ModelParams::dp(3.0, 1.0, 1.0, 0.0);
        assert!(matches!(singular.beta_critical(), Err(Error::NoFiniteBound(_))));
    }

    #[test]
    fn beta_equilibrium_matches_closed_root() {
        for beta in [0.01, 0.5, 2.0, 7.0] {
            let p = ModelParams::default().with_beta(beta);
            let rhs: f64 = 8.0 / beta;
            let exact = ((rhs + 1.0) / (rhs - 1.0)).ln();
            assert_relative_eq!(p.beta_equilibrium().unwrap(), exact, max_relative = 1e-11);
        }
    }

    #[test]
    fn beta_equilibrium_small_beta() {
        let p = ModelParams::default().with_beta(0.01);
        let approx = 2.0 * 0.01 / (8.0 - 0.01);
        let got = p.beta_equilibrium().unwrap();
        assert!(((got - approx) / approx).abs() < 0.01, "{got} vs {approx}");
    }

    #[test]
    fn beta_equilibrium_at_boundary_fails() {
        let p = ModelParams::default().with_beta(8.0);
        assert!(matches!(p.beta_equilibrium(), Err(Error::NoSolution(_))));
        assert!(ModelParams::default().with_beta(9.0).beta_equilibrium().is_err());
    }

    #[test]
    fn beta_equilibrium_is_increasing() {
        let mut last = 0.0;
        for i in 1..400 {
            let beta = 8.0 * i as f64 / 400.0 * 0.999;
            let v = ModelParams::default().with_beta(beta).beta_equilibrium().unwrap();
            assert!(v > last, "not increasing at beta = {beta}");
            last = v;
        }
    }

    #[test]
    fn csl_mapping() {
        let (lambda, r_c, m) = (1e-17, 1e-7, 3.0);
        let gamma = csl_rate_from_lambda(lambda, r_c);
        assert_relative_eq!(csl_diffusion(gamma, r_c, m, 1.0), lambda / (r_c * r_c) * m * m, max_relative = 1e-12);
    }

    #[test]
    fn validate_rejects_nonphysical() {
        assert!(ModelParams::default().validate().is_ok());
        assert!(ModelParams { mass: 0.0, ..Default::default() }.validate().is_err());
        assert!(ModelParams { beta: -1.0, ..Default::default() }.validate().is_err());
        assert!(ModelParams { omega: f64::NAN, ..Default::default() }.validate().is_err());
    }
}
