//! Husimi-function generator of the dissipative collapse dynamics for a
//! one-dimensional Gaussian kernel, and its early-time linearized channel.
//!
//! With `x = Re α`, `y = Im α` and `ħ = 1`, the generator is
//!
//! `𝒬[Q] = ∫ dk/(2π) Γ(k) (A₀ + A₁ + A₂)[Q]`
//!
//! with
//!
//! * `A₀ = βm k² + (β²/32) k² ∂²_x`
//! * `A₁ = βm k² (1 + βk²/(4m)) y∂_y + (β/4) m k² (1 + βk²/(4m)) ∂²_y`
//! * `A₂ = (β²/16) k⁶ ∂²_y + (β/2) m k⁴ ∂²_y + (m²/2) k² ∂²_y
//!        + (β²/16) k⁴ [(4y² + 1) ∂²_y + 2y ∂³_y + ¼(∂⁴_y + ∂²_y ∂²_x)]`
//!
//! Collecting powers of `k` turns the integral into three kernel moments.

use ndarray::Array2;
use serde::{Deserialize, Serialize};

use crate::entropy::{differential_entropy, kl_grid, EntropySeries};
use crate::grid::{Axis, AxisTag, GridGeometry, PhaseGrid};
use crate::params::{KernelDim, ModelParams};
use crate::{Error, Result};

/// Smallest lattice on which the fourth-order stencils have interior points.
const MIN_STENCIL_POINTS: usize = 6;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct QGenerator {
    pub params: ModelParams,
    /// `∫ dk/(2π) k^{2n} Γ(k)` for `n = 1, 2, 3`.
    pub moments: [f64; 3],
}

impl QGenerator {
    pub fn new(params: ModelParams) -> Result<Self> {
        params.validate()?;
        if params.hbar != 1.0 {
            return Err(Error::param(
                "hbar",
                format!("the Husimi generator is implemented for hbar = 1, got {}", params.hbar),
            ));
        }
        let mut moments = [0.0; 3];
        for (n, m) in moments.iter_mut().enumerate() {
            *m = params.gamma_moment(n as u32 + 1, KernelDim::One)?;
        }
        Ok(Self { params, moments })
    }

    /// The grids multiplying `k²`, `k⁴` and `k⁶` in `(A₀ + A₁ + A₂)[Q]`.
    pub fn operator_terms(&self, q: &PhaseGrid) -> Result<[PhaseGrid; 3]> {
        if q.tag != AxisTag::Husimi {
            return Err(Error::param("tag", "the generator acts on Husimi grids"));
        }
        let g = &q.geometry;
        if g.nx < MIN_STENCIL_POINTS || g.ny < MIN_STENCIL_POINTS {
            return Err(Error::GridTooSmall(format!("{}x{} lattice", g.nx, g.ny)));
        }
        let (m, b) = (self.params.mass, self.params.beta);
        let b2 = b * b;
        let dy = q.derivative(Axis::Y, 1)?;
        let dyy = q.derivative(Axis::Y, 2)?;
        let dyyy = q.derivative(Axis::Y, 3)?;
        let dyyyy = q.derivative(Axis::Y, 4)?;
        let dxx = q.derivative(Axis::X, 2)?;
        let dxxyy = dxx.derivative(Axis::Y, 2)?;
        let ys = g.ys();

        let mut c1 = Array2::zeros(g.shape());
        let mut c2 = Array2::zeros(g.shape());
        let mut c3 = Array2::zeros(g.shape());
        for i in 0..g.nx {
            for (j, &y) in ys.iter().enumerate() {
                let v = q.values[[i, j]];
                let vy = dy.values[[i, j]];
                let vyy = dyy.values[[i, j]];
                c1[[i, j]] = b * m * v
                    + b2 / 32.0 * dxx.values[[i, j]]
                    + b * m * y * vy
                    + (b * m / 4.0 + m * m / 2.0) * vyy;
                let bracket = (4.0 * y * y + 1.0) * vyy
                    + 2.0 * y * dyyy.values[[i, j]]
                    + 0.25 * (dyyyy.values[[i, j]] + dxxyy.values[[i, j]]);
                c2[[i, j]] = b2 / 4.0 * y * vy + (b2 / 16.0 + b * m / 2.0) * vyy + b2 / 16.0 * bracket;
                c3[[i, j]] = b2 / 16.0 * vyy;
            }
        }
        Ok([q.with_values(c1), q.with_values(c2), q.with_values(c3)])
    }

    /// `𝒬[Q]`.
    pub fn apply(&self, q: &PhaseGrid) -> Result<PhaseGrid> {
        let [c1, c2, c3] = self.operator_terms(q)?;
        let [m1, m2, m3] = self.moments;
        let mut out = c1.values * m1;
        out.scaled_add(m2, &c2.values);
        out.scaled_add(m3, &c3.values);
        Ok(q.with_values(out))
    }
}

/// `Q(t) = Q₀ + t·𝒬[Q₀]` for a fixed point `Q₀` of the unitary part.
#[derive(Debug, Clone)]
pub struct LinearizedChannel {
    pub initial: PhaseGrid,
    pub rate: PhaseGrid,
}

impl LinearizedChannel {
    pub fn new(initial: PhaseGrid, gen: &QGenerator) -> Result<Self> {
        let rate = gen.apply(&initial)?;
        Ok(Self { initial, rate })
    }

    pub fn at(&self, t: f64) -> PhaseGrid {
        let mut v = self.initial.values.clone();
        if t != 0.0 {
            v.scaled_add(t, &self.rate.values);
        }
        self.initial.with_values(v)
    }
}

/// States at `t_i = i·dt` for `i = 0..=steps`.
pub fn linearized_evolution(q0: &PhaseGrid, gen: &QGenerator, steps: usize, dt: f64) -> Result<Vec<PhaseGrid>> {
    let channel = LinearizedChannel::new(q0.clone(), gen)?;
    Ok((0..=steps).map(|i| channel.at(i as f64 * dt)).collect())
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct QExperiment {
    pub beta: f64,
    pub initial_nbar: f64,
    pub targets: Vec<f64>,
    /// One series per target occupation, in the order given.
    pub series: Vec<EntropySeries>,
    /// Total mass `∫Q` at every sample.
    pub mass: Vec<f64>,
    /// Most negative value reached by any sample (zero if none).
    pub min_value: f64,
}

/// Relative entropy of the linearized state to thermal targets, with the
/// Wehrl entropy of the state for the flux while it stays non-negative.
pub fn q_entropy_experiment(
    params: &ModelParams,
    nbar_init: f64,
    targets: &[f64],
    steps: usize,
    dt: f64,
    geometry: GridGeometry,
) -> Result<QExperiment> {
    if steps < 1 || !(dt > 0.0) {
        return Err(Error::param("steps", format!("need steps >= 1 and dt > 0, got {steps}, {dt}")));
    }
    let gen = QGenerator::new(*params)?;
    let q0 = PhaseGrid::husimi_thermal(nbar_init, geometry)?;
    let channel = LinearizedChannel::new(q0, &gen)?;
    let target_grids = targets
        .iter()
        .map(|&n| PhaseGrid::husimi_thermal(n, geometry))
        .collect::<Result<Vec<_>>>()?;

    let times: Vec<f64> = (0..=steps).map(|i| i as f64 * dt).collect();
    let mut k = vec![Vec::with_capacity(times.len()); targets.len()];
    let mut entropy = Some(Vec::with_capacity(times.len()));
    let mut mass = Vec::with_capacity(times.len());
    let mut min_value: f64 = 0.0;
    for &t in &times {
        let q = channel.at(t);
        mass.push(q.quadrature());
        min_value = min_value.min(q.values.iter().copied().fold(f64::INFINITY, f64::min));
        for (kt, target) in k.iter_mut().zip(&target_grids) {
            kt.push(kl_grid(&q, target)?);
        }
        entropy = match (entropy, differential_entropy(&q)) {
            (Some(mut s), Ok(v)) => {
                s.push(v);
                Some(s)
            }
            _ => None,
        };
    }
    let series = k
        .into_iter()
        .zip(targets)
        .map(|(kt, n)| EntropySeries::from_samples(times.clone(), kt, entropy.clone(), format!("husimi thermal nbar={n}")))
        .collect::<Result<_>>()?;
    Ok(QExperiment {
        beta: params.beta,
        initial_nbar: nbar_init,
        targets: targets.to_vec(),
        series,
        mass,
        min_value,
    })
}
