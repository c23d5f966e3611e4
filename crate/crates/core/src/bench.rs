//! Grid solver for the one-dimensional Klein–Kramers equation
//!
//! `∂ₜW = −ωp ∂_q W + ωq ∂_p W + ∂_p(f p W) + D ∂²_p W`
//!
//! and its comparison with the linearized evolution
//! `W_lin(t) = W₀ + t·(∂_p(f p W₀) + D ∂²_p W₀)`.
//!
//! A step is Strang-split: half a rotation, a full Fokker–Planck step in `p`,
//! half a rotation. The rotation is three shears, each a sixth-order Lagrange
//! interpolation with periodic wrap. The Fokker–Planck part either applies
//! the exact Ornstein–Uhlenbeck transition (contraction followed by a
//! spectral Gaussian convolution) or sub-steps an explicit zero-flux finite
//! volume scheme.

use std::path::Path;
use std::sync::Arc;

use ndarray::{Array2, Zip};
use rustfft::num_complex::Complex;
use rustfft::{Fft, FftPlanner};
use serde::{Deserialize, Serialize};

use crate::entropy::{kl_grid, node_rates, production_rate_current};
use crate::gaussian::{CovarianceState, KleinKramers};
use crate::grid::{Axis, GridGeometry, PhaseGrid};
use crate::{Error, Result};

/// Explicit diffusion bound `D·dt/h² ≤ 0.25`.
pub const DIFFUSION_CFL: f64 = 0.25;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum FpScheme {
    OrnsteinUhlenbeck,
    FiniteVolume,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BenchConfig {
    pub diffusion: f64,
    pub friction: f64,
    pub omega: f64,
    pub geometry: GridGeometry,
    pub horizon: f64,
    pub dt: f64,
    pub initial_nbar: Vec<f64>,
    /// Parameter of the target `exp(−(q²+p²)/σ²)/(πσ²)`.
    pub sigma_eq: f64,
    pub scheme: FpScheme,
    /// Finite-volume sub-steps per time step; chosen from the stability
    /// bound when absent.
    pub substeps: Option<usize>,
    /// Diagnostics (K, Π, L2, moments) are recorded every this many steps.
    pub record_every: usize,
}

/// The two `(D, f)` pairs compared in the benchmark.
pub const PRESETS: [(f64, f64); 2] = [(1.0, 4.0 / 3.0), (0.75, 1.0)];

impl BenchConfig {
    /// Defaults for a `(D, f)` pair: `ω = 1`, 800² on `[−4, 4]²`, `T = 40`,
    /// `dt = 0.01`, thermal starts `n̄ ∈ {0, 0.5, 1}`, `σ²_eq = 2D/f`.
    pub fn new(diffusion: f64, friction: f64) -> Self {
        Self {
            diffusion,
            friction,
            omega: 1.0,
            geometry: GridGeometry {
                nx: 800,
                ny: 800,
                x_min: -4.0,
                x_max: 4.0,
                y_min: -4.0,
                y_max: 4.0,
            },
            horizon: 40.0,
            dt: 0.01,
            initial_nbar: vec![0.0, 0.5, 1.0],
            sigma_eq: 2.0 * diffusion / friction,
            scheme: FpScheme::OrnsteinUhlenbeck,
            substeps: None,
            record_every: 1,
        }
    }

    pub fn generator(&self) -> KleinKramers {
        KleinKramers::new(self.omega, self.friction, self.diffusion)
    }

    pub fn steps(&self) -> Result<usize> {
        let n = (self.horizon / self.dt).round();
        if !(n >= 1.0) || (n * self.dt - self.horizon).abs() > 1e-9 * self.horizon {
            return Err(Error::param(
                "dt",
                format!("horizon {} is not a whole number of steps of {}", self.horizon, self.dt),
            ));
        }
        Ok(n as usize)
    }

    /// `D·dt/h²` for one sub-step.
    pub fn diffusion_number(&self, substeps: usize) -> f64 {
        self.diffusion * self.dt / substeps as f64 / self.geometry.hy().powi(2)
    }

    /// Sub-steps used by the finite-volume scheme.
    pub fn fv_substeps(&self) -> Result<usize> {
        let h = self.geometry.hy();
        match self.substeps {
            Some(0) => Err(Error::param("substeps", "must be >= 1")),
            Some(n) => {
                let r = self.diffusion_number(n);
                if r > DIFFUSION_CFL {
                    return Err(Error::Stability(format!(
                        "D·dt/h² = {r:.4} with {n} sub-steps exceeds {DIFFUSION_CFL} \
                         (D = {}, dt = {}, h = {h:.3e})",
                        self.diffusion, self.dt
                    )));
                }
                Ok(n)
            }
            None => {
                let pmax = self.geometry.y_min.abs().max(self.geometry.y_max.abs());
                let diff = self.diffusion * self.dt / (DIFFUSION_CFL * h * h);
                let adv = self.friction * pmax * self.dt / (0.5 * h);
                Ok(diff.max(adv).ceil().max(1.0) as usize)
            }
        }
    }

    pub fn validate(&self) -> Result<()> {
        self.geometry.validate()?;
        for (name, v) in [("diffusion", self.diffusion), ("friction", self.friction)] {
            if !(v >= 0.0 && v.is_finite()) {
                return Err(Error::param(name, format!("must be >= 0, got {v}")));
            }
        }
        for (name, v) in [
            ("omega", self.omega),
            ("horizon", self.horizon),
            ("dt", self.dt),
            ("sigma_eq", self.sigma_eq),
        ] {
            if !(v > 0.0 && v.is_finite()) {
                return Err(Error::param(name, format!("must be > 0, got {v}")));
            }
        }
        if let Some(n) = self.initial_nbar.iter().find(|n| !(**n >= 0.0)) {
            return Err(Error::param("initial_nbar", format!("occupation {n} is negative")));
        }
        self.steps()?;
        if self.record_every == 0 {
            return Err(Error::param("record_every", "must be >= 1"));
        }
        if self.scheme == FpScheme::FiniteVolume {
            self.fv_substeps()?;
        }
        Ok(())
    }
}

/// Weights of the six-point Lagrange interpolant on nodes `−2..=3` at `s`.
fn lagrange6(s: f64) -> [f64; 6] {
    let mut w = [1.0; 6];
    for (k, wk) in w.iter_mut().enumerate() {
        let xk = k as f64 - 2.0;
        for m in 0..6 {
            if m != k {
                let xm = m as f64 - 2.0;
                *wk *= (s - xm) / (xk - xm);
            }
        }
    }
    w
}

/// Integer offset and weights for sampling at `index + shift`.
fn interp_plan(shift: f64) -> (isize, [f64; 6]) {
    let n = shift.floor();
    (n as isize, lagrange6(shift - n))
}

fn wrap(i: isize, n: usize) -> usize {
    i.rem_euclid(n as isize) as usize
}

/// `out(x, y) = in(x + a·y, y)`.
fn shear_x(input: &Array2<f64>, out: &mut Array2<f64>, plan: &[(isize, [f64; 6])]) {
    let (nx, ny) = input.dim();
    out.fill(0.0);
    // columns sharing an integer offset are processed as contiguous runs
    let mut runs: Vec<(usize, usize, isize)> = Vec::new();
    for (j, (n, _)) in plan.iter().enumerate() {
        match runs.last_mut() {
            Some((_, end, m)) if *m == *n && *end == j => *end = j + 1,
            _ => runs.push((j, j + 1, *n)),
        }
    }
    for i in 0..nx {
        let mut orow = out.row_mut(i);
        let orow = orow.as_slice_mut().expect("contiguous rows");
        for &(start, end, n) in &runs {
            for k in 0..6 {
                let src = input.row(wrap(i as isize + n + k as isize - 2, nx));
                let src = &src.as_slice().expect("contiguous rows")[start..end];
                for ((o, s), (_, w)) in orow[start..end].iter_mut().zip(src).zip(&plan[start..end]) {
                    *o += w[k] * s;
                }
            }
        }
    }
    debug_assert_eq!(plan.len(), ny);
}

/// `out(x, y) = in(x, y + b·x)`.
fn shear_y(input: &Array2<f64>, out: &mut Array2<f64>, plan: &[(isize, [f64; 6])]) {
    let ny = input.ncols();
    for (i, (n, w)) in plan.iter().enumerate() {
        let src = input.row(i);
        let src = src.as_slice().expect("contiguous rows");
        let mut o = out.row_mut(i);
        let o = o.as_slice_mut().expect("contiguous rows");
        let lo = (2 - n).max(0) as usize;
        let hi = ((ny as isize) - 3 - n).clamp(0, ny as isize) as usize;
        for (j, oj) in o.iter_mut().enumerate() {
            let base = j as isize + n - 2;
            *oj = if j >= lo && j < hi {
                let b = base as usize;
                w.iter().zip(&src[b..b + 6]).map(|(a, c)| a * c).sum()
            } else {
                (0..6).map(|k| w[k] * src[wrap(base + k as isize, ny)]).sum()
            };
        }
    }
}

struct Rotation {
    x_plan: Vec<(isize, [f64; 6])>,
    y_plan: Vec<(isize, [f64; 6])>,
}

impl Rotation {
    /// Pullback by the flow over an angle `theta`:
    /// `W'(q, p) = W(q cos θ − p sin θ, q sin θ + p cos θ)`.
    fn new(theta: f64, g: &GridGeometry) -> Self {
        let a = -(0.5 * theta).tan();
        let b = theta.sin();
        let x_plan = g.ys().iter().map(|&p| interp_plan(a * p / g.hx())).collect();
        let y_plan = g.xs().iter().map(|&q| interp_plan(b * q / g.hy())).collect();
        Self { x_plan, y_plan }
    }

    fn apply(&self, w: &mut Array2<f64>, scratch: &mut Array2<f64>) {
        shear_x(w, scratch, &self.x_plan);
        shear_y(scratch, w, &self.y_plan);
        shear_x(w, scratch, &self.x_plan);
        std::mem::swap(w, scratch);
    }
}

/// Exact transition of `∂ₜW = ∂_p(f p W) + D ∂²_p W` over one step.
struct OrnsteinUhlenbeck {
    inverse_contraction: f64,
    contraction: Vec<(isize, [f64; 6])>,
    multiplier: Vec<f64>,
    forward: Arc<dyn Fft<f64>>,
    inverse: Arc<dyn Fft<f64>>,
    identity: bool,
}

impl OrnsteinUhlenbeck {
    fn new(gen: &KleinKramers, tau: f64, g: &GridGeometry) -> Self {
        let (f, d) = (gen.friction, gen.diffusion);
        let c = (-f * tau).exp();
        let variance = if f > 0.0 {
            d / f * (1.0 - c * c)
        } else {
            2.0 * d * tau
        };
        let h = g.hy();
        let contraction = g
            .ys()
            .iter()
            .map(|&p| interp_plan((p / c - g.y_min) / h))
            .collect();
        let n = g.ny;
        let period = n as f64 * h;
        let multiplier = (0..n)
            .map(|m| {
                let m = if m <= n / 2 { m as f64 } else { m as f64 - n as f64 };
                let xi = 2.0 * std::f64::consts::PI * m / period;
                (-0.5 * variance * xi * xi).exp() / n as f64
            })
            .collect();
        let mut planner = FftPlanner::new();
        Self {
            inverse_contraction: 1.0 / c,
            contraction,
            multiplier,
            forward: planner.plan_fft_forward(n),
            inverse: planner.plan_fft_inverse(n),
            identity: f == 0.0 && d == 0.0,
        }
    }

    fn apply(&self, w: &mut Array2<f64>, scratch: &mut Array2<f64>) {
        if self.identity {
            return;
        }
        let ny = w.ncols();
        // p → e^{−fτ} p, mass of every row kept
        Zip::from(scratch.rows_mut()).and(w.rows()).for_each(|mut o, src| {
            let src = src.as_slice().expect("contiguous rows");
            let o = o.as_slice_mut().expect("contiguous rows");
            let before: f64 = src.iter().sum();
            let mut after = 0.0;
            for (oj, (n, wts)) in o.iter_mut().zip(&self.contraction) {
                let mut v = 0.0;
                for (k, wk) in wts.iter().enumerate() {
                    let idx = n + k as isize - 2;
                    if idx >= 0 && (idx as usize) < ny {
                        v += wk * src[idx as usize];
                    }
                }
                *oj = v * self.inverse_contraction;
                after += *oj;
            }
            if after != 0.0 {
                let s = before / after;
                o.iter_mut().for_each(|v| *v *= s);
            }
        });
        // Gaussian convolution along p, two rows per complex transform
        let mut buf = vec![Complex::new(0.0, 0.0); ny];
        let mut fft_scratch = vec![Complex::new(0.0, 0.0); self.forward.get_inplace_scratch_len()];
        let nx = w.nrows();
        let mut i = 0;
        while i < nx {
            let pair = i + 1 < nx;
            {
                let a = scratch.row(i);
                for (b, &v) in buf.iter_mut().zip(a.iter()) {
                    *b = Complex::new(v, 0.0);
                }
                if pair {
                    for (b, &v) in buf.iter_mut().zip(scratch.row(i + 1).iter()) {
                        b.im = v;
                    }
                }
            }
            self.forward.process_with_scratch(&mut buf, &mut fft_scratch);
            for (b, m) in buf.iter_mut().zip(&self.multiplier) {
                *b *= *m;
            }
            self.inverse.process_with_scratch(&mut buf, &mut fft_scratch);
            for (o, b) in w.row_mut(i).iter_mut().zip(&buf) {
                *o = b.re;
            }
            if pair {
                for (o, b) in w.row_mut(i + 1).iter_mut().zip(&buf) {
                    *o = b.im;
                }
            }
            i += 2;
        }
    }
}

/// Explicit zero-flux finite volumes in `p`.
struct FiniteVolume {
    friction: f64,
    diffusion: f64,
    substeps: usize,
    tau: f64,
    h: f64,
    ys: Vec<f64>,
}

impl FiniteVolume {
    fn apply(&self, w: &mut Array2<f64>) {
        let ny = self.ys.len();
        let (f, d, h) = (self.friction, self.diffusion, self.h);
        let r = self.tau / h;
        let mut flux = vec![0.0; ny + 1];
        for mut row in w.rows_mut() {
            let row = row.as_slice_mut().expect("contiguous rows");
            for _ in 0..self.substeps {
                for j in 0..ny - 1 {
                    let (a, b) = (row[j], row[j + 1]);
                    flux[j + 1] = 0.5 * f * (self.ys[j] * a + self.ys[j + 1] * b) + d * (b - a) / h;
                }
                for j in 0..ny {
                    row[j] += r * (flux[j + 1] - flux[j]);
                }
            }
        }
    }
}

enum FpStep {
    Exact(OrnsteinUhlenbeck),
    Fv(FiniteVolume),
}

/// Reusable stepper for one configuration.
pub struct ExactSolver {
    rotation: Rotation,
    fp: FpStep,
    scratch: Array2<f64>,
}

impl ExactSolver {
    pub fn new(cfg: &BenchConfig) -> Result<Self> {
        cfg.validate()?;
        let g = &cfg.geometry;
        let gen = cfg.generator();
        let fp = match cfg.scheme {
            FpScheme::OrnsteinUhlenbeck => FpStep::Exact(OrnsteinUhlenbeck::new(&gen, cfg.dt, g)),
            FpScheme::FiniteVolume => {
                let substeps = cfg.fv_substeps()?;
                FpStep::Fv(FiniteVolume {
                    friction: gen.friction,
                    diffusion: gen.diffusion,
                    substeps,
                    tau: cfg.dt / substeps as f64,
                    h: g.hy(),
                    ys: g.ys(),
                })
            }
        };
        Ok(Self {
            rotation: Rotation::new(0.5 * cfg.omega * cfg.dt, g),
            fp,
            scratch: Array2::zeros(g.shape()),
        })
    }

    pub fn step(&mut self, w: &mut PhaseGrid) {
        let v = &mut w.values;
        self.rotation.apply(v, &mut self.scratch);
        match &self.fp {
            FpStep::Exact(ou) => ou.apply(v, &mut self.scratch),
            FpStep::Fv(fv) => fv.apply(v),
        }
        self.rotation.apply(v, &mut self.scratch);
    }
}

/// One time step of the grid solver.
pub fn exact_step(w: &PhaseGrid, cfg: &BenchConfig) -> Result<PhaseGrid> {
    check_layout(w, cfg)?;
    let mut solver = ExactSolver::new(cfg)?;
    let mut out = w.clone();
    solver.step(&mut out);
    Ok(out)
}

fn check_layout(w: &PhaseGrid, cfg: &BenchConfig) -> Result<()> {
    if w.tag != crate::grid::AxisTag::Wigner {
        return Err(Error::param("tag", "the benchmark evolves Wigner grids"));
    }
    if w.geometry != cfg.geometry {
        return Err(Error::GeometryMismatch("grid and configuration differ".into()));
    }
    Ok(())
}

/// `∂_p(f p W) + D ∂²_p W` by finite differences.
pub fn fokker_planck_rate(w: &PhaseGrid, gen: &KleinKramers) -> Result<PhaseGrid> {
    let dp = w.derivative(Axis::Y, 1)?;
    let dpp = w.derivative(Axis::Y, 2)?;
    let ys = w.geometry.ys();
    let (f, d) = (gen.friction, gen.diffusion);
    let mut out = dpp.values;
    Zip::from(out.rows_mut())
        .and(w.values.rows())
        .and(dp.values.rows())
        .for_each(|mut o, wr, dr| {
            for (((o, &v), &dv), &p) in o.iter_mut().zip(wr.iter()).zip(dr.iter()).zip(&ys) {
                *o = f * v + f * p * dv + d * *o;
            }
        });
    Ok(w.with_values(out))
}

/// Per-step diagnostics of one initial state.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BenchRun {
    pub initial_nbar: f64,
    pub t: Vec<f64>,
    pub k_exact: Vec<f64>,
    pub k_lin: Vec<f64>,
    /// `−dK/dt` of the grid solution at the sample times.
    pub pi_exact: Vec<f64>,
    /// `∫J²/(DW)` of the grid solution (NaN without friction).
    pub pi_exact_current: Vec<f64>,
    pub pi_lin: Vec<f64>,
    /// `‖W_lin − W_exact‖₂`.
    pub l2: Vec<f64>,
    pub mass_exact: Vec<f64>,
    pub exact_moments: Vec<CovarianceState>,
    pub lin_moments: Vec<CovarianceState>,
    /// `‖W_exact(T) − W_eq‖₂` and `‖W_lin(T) − W_eq‖₂`.
    pub exact_final_distance: f64,
    pub lin_final_distance: f64,
}

pub const BENCH_COLUMNS: [&str; 9] = [
    "t",
    "Pi_exact",
    "Pi_lin",
    "D_L2",
    "Pi_exact_current",
    "K_exact",
    "K_lin",
    "mass_exact",
    "det_V_lin",
];

impl BenchRun {
    pub fn write_csv(&self, path: &Path) -> Result<()> {
        let mut w = csv::Writer::from_path(path)?;
        w.write_record(BENCH_COLUMNS)?;
        for i in 0..self.t.len() {
            w.serialize((
                self.t[i],
                self.pi_exact[i],
                self.pi_lin[i],
                self.l2[i],
                self.pi_exact_current[i],
                self.k_exact[i],
                self.k_lin[i],
                self.mass_exact[i],
                self.lin_moments[i].det(),
            ))?;
        }
        w.flush()?;
        Ok(())
    }

    /// `max |Π_lin − Π_exact| / max |Π_exact|` over samples with `t < t_max`.
    pub fn early_discrepancy(&self, t_max: f64) -> f64 {
        let scale = self.pi_exact.iter().fold(0.0f64, |m, v| m.max(v.abs()));
        self.t
            .iter()
            .zip(self.pi_exact.iter().zip(&self.pi_lin))
            .filter(|(t, _)| **t < t_max)
            .map(|(_, (e, l))| (l - e).abs())
            .fold(0.0, f64::max)
            / scale
    }

    pub fn min_pi_lin(&self) -> f64 {
        self.pi_lin.iter().copied().fold(f64::INFINITY, f64::min)
    }

    pub fn mass_drift(&self) -> f64 {
        let m0 = self.mass_exact[0];
        self.mass_exact.iter().map(|m| (m - m0).abs()).fold(0.0, f64::max)
    }
}

/// Evolves one thermal start with both the grid solver and the linearized
/// channel, recording `every_step` diagnostics.
pub fn run_state(cfg: &BenchConfig, nbar: f64) -> Result<BenchRun> {
    cfg.validate()?;
    let steps = cfg.steps()?;
    let gen = cfg.generator();
    let g = cfg.geometry;
    let w0 = PhaseGrid::wigner_thermal(nbar, g)?;
    let target = PhaseGrid::wigner_equilibrium(cfg.sigma_eq, g)?;
    let rate = fokker_planck_rate(&w0, &gen)?;
    let mut solver = ExactSolver::new(cfg)?;
    let current_ok = gen.friction > 0.0 && gen.diffusion > 0.0;

    let n = steps / cfg.record_every + 1;
    let mut run = BenchRun {
        initial_nbar: nbar,
        t: Vec::with_capacity(n),
        k_exact: Vec::with_capacity(n),
        k_lin: Vec::with_capacity(n),
        pi_exact: Vec::new(),
        pi_exact_current: Vec::with_capacity(n),
        pi_lin: Vec::new(),
        l2: Vec::with_capacity(n),
        mass_exact: Vec::with_capacity(n),
        exact_moments: Vec::with_capacity(n),
        lin_moments: Vec::with_capacity(n),
        exact_final_distance: 0.0,
        lin_final_distance: 0.0,
    };
    let mut w = w0.clone();
    let mut lin = w0.clone();
    for step in 0..=steps {
        let t = step as f64 * cfg.dt;
        if step > 0 {
            solver.step(&mut w);
        }
        if step % cfg.record_every != 0 {
            continue;
        }
        if step > 0 {
            Zip::from(&mut lin.values)
                .and(&w0.values)
                .and(&rate.values)
                .for_each(|l, &a, &r| *l = a + t * r);
        }
        run.t.push(t);
        run.k_exact.push(kl_grid(&w, &target)?);
        run.k_lin.push(kl_grid(&lin, &target)?);
        run.pi_exact_current.push(if current_ok {
            production_rate_current(&w, &gen).unwrap_or(f64::NAN)
        } else {
            f64::NAN
        });
        run.l2.push(lin.l2_distance(&w)?);
        let mut m = w.moments()?;
        m.t = t;
        run.mass_exact.push(w.quadrature());
        run.exact_moments.push(m);
        let mut ml = lin.moments()?;
        ml.t = t;
        run.lin_moments.push(ml);
    }
    let h = cfg.dt * cfg.record_every as f64;
    run.pi_exact = node_rates(&run.k_exact, h);
    run.pi_lin = node_rates(&run.k_lin, h);
    let t_end = steps as f64 * cfg.dt;
    Zip::from(&mut lin.values)
        .and(&w0.values)
        .and(&rate.values)
        .for_each(|l, &a, &r| *l = a + t_end * r);
    run.exact_final_distance = w.l2_distance(&target)?;
    run.lin_final_distance = lin.l2_distance(&target)?;
    Ok(run)
}

/// Largest per-step `‖W(t+dt) − W(t)‖₂` of the target state under the grid
/// solver, over `steps` steps.
pub fn stationary_drift(cfg: &BenchConfig, steps: usize) -> Result<f64> {
    let mut solver = ExactSolver::new(cfg)?;
    let mut w = PhaseGrid::wigner_equilibrium(cfg.sigma_eq, cfg.geometry)?;
    let mut worst: f64 = 0.0;
    for _ in 0..steps {
        let before = w.clone();
        solver.step(&mut w);
        worst = worst.max(w.l2_distance(&before)?);
    }
    Ok(worst)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BenchSummary {
    pub initial_nbar: f64,
    pub early_discrepancy: f64,
    pub min_pi_exact: f64,
    pub min_pi_lin: f64,
    pub final_l2: f64,
    pub mass_drift: f64,
    pub exact_final_distance: f64,
    pub lin_final_distance: f64,
    pub min_det_lin: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BenchReport {
    pub config: BenchConfig,
    pub stationary_drift: f64,
    pub runs: Vec<BenchRun>,
}

impl BenchReport {
    pub fn summaries(&self) -> Vec<BenchSummary> {
        self.runs
            .iter()
            .map(|r| BenchSummary {
                initial_nbar: r.initial_nbar,
                early_discrepancy: r.early_discrepancy(1.0),
                min_pi_exact: r.pi_exact.iter().copied().fold(f64::INFINITY, f64::min),
                min_pi_lin: r.min_pi_lin(),
                final_l2: *r.l2.last().expect("at least one sample"),
                mass_drift: r.mass_drift(),
                exact_final_distance: r.exact_final_distance,
                lin_final_distance: r.lin_final_distance,
                min_det_lin: r.lin_moments.iter().map(|m| m.det()).fold(f64::INFINITY, f64::min),
            })
            .collect()
    }
}

/// Runs every configured initial state in sequence.
pub fn run_benchmark(cfg: &BenchConfig) -> Result<BenchReport> {
    cfg.validate()?;
    let runs = cfg
        .initial_nbar
        .iter()
        .map(|&n| run_state(cfg, n))
        .collect::<Result<_>>()?;
    Ok(BenchReport {
        config: cfg.clone(),
        stationary_drift: stationary_drift(cfg, 10)?,
        runs,
    })
}
