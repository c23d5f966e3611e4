//! Uniform two-dimensional phase-space lattices.
//!
//! Values are stored as `values[[i, j]]` with `i` indexing the first axis
//! (`q` or `Re α`) and `j` the second (`p` or `Im α`); the second axis is
//! contiguous in memory.

use std::fs::File;
use std::io::{BufRead, BufReader, BufWriter, Read, Write};
use std::path::Path;

use ndarray::{Array2, Zip};
use serde::{Deserialize, Serialize};

use crate::gaussian::CovarianceState;
use crate::{Error, Result};

/// Minimum number of lattice points per axis.
pub const MIN_POINTS: usize = 16;

/// What the two axes of a grid mean.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum AxisTag {
    /// Wigner function over `(q, p)`.
    Wigner,
    /// Husimi function over `(Re α, Im α)`.
    Husimi,
}

impl AxisTag {
    pub fn labels(self) -> (&'static str, &'static str) {
        match self {
            AxisTag::Wigner => ("q", "p"),
            AxisTag::Husimi => ("re_alpha", "im_alpha"),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Axis {
    X,
    Y,
}

/// Lattice layout; both end points of each range are grid nodes.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct GridGeometry {
    pub nx: usize,
    pub ny: usize,
    pub x_min: f64,
    pub x_max: f64,
    pub y_min: f64,
    pub y_max: f64,
}

impl GridGeometry {
    pub fn new(nx: usize, ny: usize, x: (f64, f64), y: (f64, f64)) -> Result<Self> {
        let g = Self {
            nx,
            ny,
            x_min: x.0,
            x_max: x.1,
            y_min: y.0,
            y_max: y.1,
        };
        g.validate()?;
        Ok(g)
    }

    /// `n × n` points on `[-half_width, half_width]²`.
    pub fn square(n: usize, half_width: f64) -> Result<Self> {
        Self::new(n, n, (-half_width, half_width), (-half_width, half_width))
    }

    pub fn validate(&self) -> Result<()> {
        if self.nx < MIN_POINTS || self.ny < MIN_POINTS {
            return Err(Error::GridTooSmall(format!(
                "{}x{} lattice, need at least {MIN_POINTS} points per axis",
                self.nx, self.ny
            )));
        }
        for (lo, hi, name) in [(self.x_min, self.x_max, "x"), (self.y_min, self.y_max, "y")] {
            if !(lo.is_finite() && hi.is_finite() && lo < hi) {
                return Err(Error::param("grid", format!("{name} range [{lo}, {hi}] is empty")));
            }
        }
        Ok(())
    }

    pub fn hx(&self) -> f64 {
        (self.x_max - self.x_min) / (self.nx - 1) as f64
    }

    pub fn hy(&self) -> f64 {
        (self.y_max - self.y_min) / (self.ny - 1) as f64
    }

    // Measured from the midpoint so that symmetric ranges give exactly
    // mirrored coordinates.
    pub fn x(&self, i: usize) -> f64 {
        0.5 * (self.x_min + self.x_max) + self.hx() * (i as f64 - 0.5 * (self.nx - 1) as f64)
    }

    pub fn y(&self, j: usize) -> f64 {
        0.5 * (self.y_min + self.y_max) + self.hy() * (j as f64 - 0.5 * (self.ny - 1) as f64)
    }

    pub fn xs(&self) -> Vec<f64> {
        (0..self.nx).map(|i| self.x(i)).collect()
    }

    pub fn ys(&self) -> Vec<f64> {
        (0..self.ny).map(|j| self.y(j)).collect()
    }

    pub fn shape(&self) -> (usize, usize) {
        (self.nx, self.ny)
    }
}

/// Trapezoid weights for `n` nodes with unit spacing.
pub fn trapezoid_weights(n: usize) -> Vec<f64> {
    let mut w = vec![1.0; n];
    w[0] = 0.5;
    w[n - 1] = 0.5;
    w
}

/// Central stencils (offsets `-r..=r`) and forward one-sided stencils, all
/// second-order accurate, in units of `h^order`.
fn stencils(order: u32) -> (&'static [f64], &'static [f64]) {
    match order {
        1 => (&[-0.5, 0.0, 0.5], &[-1.5, 2.0, -0.5]),
        2 => (&[1.0, -2.0, 1.0], &[2.0, -5.0, 4.0, -1.0]),
        3 => (&[-0.5, 1.0, 0.0, -1.0, 0.5], &[-2.5, 9.0, -12.0, 7.0, -1.5]),
        4 => (&[1.0, -4.0, 6.0, -4.0, 1.0], &[3.0, -14.0, 26.0, -24.0, 11.0, -2.0]),
        _ => unreachable!("checked by caller"),
    }
}

/// Per-node `(first index, coefficients)` for a derivative along one axis.
fn stencil_plan(n: usize, order: u32, h: f64) -> Vec<(usize, Vec<f64>)> {
    let (central, forward) = stencils(order);
    let r = central.len() / 2;
    let scale = h.powi(-(order as i32));
    let sign = if order % 2 == 1 { -1.0 } else { 1.0 };
    (0..n)
        .map(|i| {
            if i < r {
                (i, forward.iter().map(|c| c * scale).collect())
            } else if i + r >= n {
                let k = forward.len() - 1;
                let coeffs = forward.iter().rev().map(|c| sign * c * scale).collect();
                (i - k, coeffs)
            } else {
                (i - r, central.iter().map(|c| c * scale).collect())
            }
        })
        .collect()
}

/// Real-valued phase-space function sampled on a [`GridGeometry`].
#[derive(Debug, Clone, PartialEq)]
pub struct PhaseGrid {
    pub tag: AxisTag,
    pub geometry: GridGeometry,
    pub values: Array2<f64>,
}

#[derive(Serialize, Deserialize)]
struct DumpHeader {
    tag: AxisTag,
    #[serde(flatten)]
    geometry: GridGeometry,
}

impl PhaseGrid {
    pub fn new(tag: AxisTag, geometry: GridGeometry, values: Array2<f64>) -> Result<Self> {
        geometry.validate()?;
        if values.dim() != geometry.shape() {
            return Err(Error::GeometryMismatch(format!(
                "values are {:?}, geometry is {:?}",
                values.dim(),
                geometry.shape()
            )));
        }
        if let Some(v) = values.iter().find(|v| !v.is_finite()) {
            return Err(Error::param("values", format!("non-finite entry {v}")));
        }
        Ok(Self {
            tag,
            geometry,
            values,
        })
    }

    pub fn zeros(tag: AxisTag, geometry: GridGeometry) -> Self {
        Self {
            tag,
            geometry,
            values: Array2::zeros(geometry.shape()),
        }
    }

    pub fn from_fn(tag: AxisTag, geometry: GridGeometry, f: impl Fn(f64, f64) -> f64) -> Self {
        let xs = geometry.xs();
        let ys = geometry.ys();
        let values = Array2::from_shape_fn(geometry.shape(), |(i, j)| f(xs[i], ys[j]));
        Self {
            tag,
            geometry,
            values,
        }
    }

    /// Same layout, new values.
    pub fn with_values(&self, values: Array2<f64>) -> Self {
        debug_assert_eq!(values.dim(), self.geometry.shape());
        Self {
            tag: self.tag,
            geometry: self.geometry,
            values,
        }
    }

    pub fn check_same_geometry(&self, other: &PhaseGrid) -> Result<()> {
        if self.geometry != other.geometry || self.tag != other.tag {
            return Err(Error::GeometryMismatch(format!(
                "{:?} {:?} vs {:?} {:?}",
                self.tag, self.geometry, other.tag, other.geometry
            )));
        }
        Ok(())
    }

    /// Trapezoid rule over both axes.
    pub fn quadrature(&self) -> f64 {
        self.weighted_sum(|_, _, v| v)
    }

    /// Trapezoid rule applied to `f(x, y, value)`.
    pub fn weighted_sum(&self, f: impl Fn(f64, f64, f64) -> f64) -> f64 {
        let g = &self.geometry;
        let wx = trapezoid_weights(g.nx);
        let wy = trapezoid_weights(g.ny);
        let ys = g.ys();
        let mut total = 0.0;
        for (i, row) in self.values.outer_iter().enumerate() {
            let x = g.x(i);
            let mut s = 0.0;
            for (j, &v) in row.iter().enumerate() {
                s += wy[j] * f(x, ys[j], v);
            }
            total += wx[i] * s;
        }
        total * g.hx() * g.hy()
    }

    /// Largest value on the lattice.
    pub fn peak(&self) -> f64 {
        self.values.iter().copied().fold(f64::NEG_INFINITY, f64::max)
    }

    /// Finite-difference derivative of the given order (1 to 4) along one
    /// axis. Mixed derivatives are obtained by composing calls.
    pub fn derivative(&self, axis: Axis, order: u32) -> Result<PhaseGrid> {
        if !(1..=4).contains(&order) {
            return Err(Error::param("order", format!("supported orders are 1..=4, got {order}")));
        }
        let g = &self.geometry;
        let mut out = Array2::zeros(g.shape());
        match axis {
            Axis::Y => {
                let plan = stencil_plan(g.ny, order, g.hy());
                let (central, _) = stencils(order);
                let r = central.len() / 2;
                let scale = g.hy().powi(-(order as i32));
                let c: Vec<f64> = central.iter().map(|c| c * scale).collect();
                Zip::from(out.rows_mut())
                    .and(self.values.rows())
                    .for_each(|mut o, src| {
                        let src = src.as_slice().expect("rows are contiguous");
                        let o = o.as_slice_mut().expect("rows are contiguous");
                        for j in r..g.ny - r {
                            let window = &src[j - r..j + r + 1];
                            o[j] = window.iter().zip(&c).map(|(a, b)| a * b).sum();
                        }
                        for j in (0..r).chain(g.ny - r..g.ny) {
                            let (start, coeffs) = &plan[j];
                            o[j] = coeffs.iter().enumerate().map(|(k, c)| c * src[start + k]).sum();
                        }
                    });
            }
            Axis::X => {
                let plan = stencil_plan(g.nx, order, g.hx());
                for (i, (start, coeffs)) in plan.iter().enumerate() {
                    let mut row = out.row_mut(i);
                    for (k, &c) in coeffs.iter().enumerate() {
                        if c != 0.0 {
                            row.scaled_add(c, &self.values.row(start + k));
                        }
                    }
                }
            }
        }
        Ok(self.with_values(out))
    }

    /// `W_Th = exp(-(q²+p²)/(2(2n̄+1))) / (2π(2n̄+1))`.
    pub fn wigner_thermal(nbar: f64, geometry: GridGeometry) -> Result<PhaseGrid> {
        check_occupation(nbar)?;
        geometry.validate()?;
        let s = 2.0 * nbar + 1.0;
        let norm = 1.0 / (2.0 * std::f64::consts::PI * s);
        Ok(Self::from_fn(AxisTag::Wigner, geometry, |q, p| {
            norm * (-(q * q + p * p) / (2.0 * s)).exp()
        }))
    }

    /// `Q_Th = exp(-|α|²/(1+n̄)) / (π(1+n̄))`.
    pub fn husimi_thermal(nbar: f64, geometry: GridGeometry) -> Result<PhaseGrid> {
        check_occupation(nbar)?;
        geometry.validate()?;
        let s = 1.0 + nbar;
        let norm = 1.0 / (std::f64::consts::PI * s);
        Ok(Self::from_fn(AxisTag::Husimi, geometry, |x, y| {
            norm * (-(x * x + y * y) / s).exp()
        }))
    }

    /// `W_eq = exp(-(q²+p²)/σ²) / (πσ²)`; the marginal variance is `σ²/2`.
    pub fn wigner_equilibrium(sigma2: f64, geometry: GridGeometry) -> Result<PhaseGrid> {
        if !(sigma2 > 0.0 && sigma2.is_finite()) {
            return Err(Error::param("sigma2", format!("must be > 0, got {sigma2}")));
        }
        geometry.validate()?;
        let norm = 1.0 / (std::f64::consts::PI * sigma2);
        Ok(Self::from_fn(AxisTag::Wigner, geometry, |q, p| {
            norm * (-(q * q + p * p) / sigma2).exp()
        }))
    }

    /// Normalized bivariate Gaussian with the means and covariance of `state`.
    pub fn gaussian(tag: AxisTag, state: &CovarianceState, geometry: GridGeometry) -> Result<PhaseGrid> {
        geometry.validate()?;
        let det = state.det();
        if !(state.var_q > 0.0 && state.var_p > 0.0 && det > 0.0) {
            return Err(Error::SingularCovariance(det));
        }
        let (a, b, c) = (state.var_p / det, state.var_q / det, -state.cov_qp / det);
        let norm = 1.0 / (2.0 * std::f64::consts::PI * det.sqrt());
        Ok(Self::from_fn(tag, geometry, |x, y| {
            let (dx, dy) = (x - state.mean_q, y - state.mean_p);
            norm * (-0.5 * (a * dx * dx + b * dy * dy + 2.0 * c * dx * dy)).exp()
        }))
    }

    /// `sqrt(∫ (a − b)²)`.
    pub fn l2_distance(&self, other: &PhaseGrid) -> Result<f64> {
        self.check_same_geometry(other)?;
        let diff = self.with_values(&self.values - &other.values);
        Ok(diff.weighted_sum(|_, _, v| v * v).sqrt())
    }

    /// Means and second central moments, normalized by the total mass.
    pub fn moments(&self) -> Result<CovarianceState> {
        let g = &self.geometry;
        let wx = trapezoid_weights(g.nx);
        let wy = trapezoid_weights(g.ny);
        let ys = g.ys();
        // raw sums of 1, y, y² per row, then combined with x weights
        let mut m = [0.0f64; 6];
        for (i, row) in self.values.outer_iter().enumerate() {
            let (mut s0, mut s1, mut s2) = (0.0, 0.0, 0.0);
            for ((&v, &w), &y) in row.iter().zip(&wy).zip(&ys) {
                let a = v * w;
                s0 += a;
                s1 += a * y;
                s2 += a * y * y;
            }
            let x = g.x(i);
            let c = wx[i];
            m[0] += c * s0;
            m[1] += c * x * s0;
            m[2] += c * s1;
            m[3] += c * x * x * s0;
            m[4] += c * s2;
            m[5] += c * x * s1;
        }
        let mass = m[0] * g.hx() * g.hy();
        let m: Vec<f64> = m.iter().map(|v| v * g.hx() * g.hy()).collect();
        if !(mass > 0.0) {
            return Err(Error::param("grid", format!("total mass {mass} is not positive")));
        }
        let (mq, mp) = (m[1] / mass, m[2] / mass);
        Ok(CovarianceState {
            mean_q: mq,
            mean_p: mp,
            var_q: m[3] / mass - mq * mq,
            var_p: m[4] / mass - mp * mp,
            cov_qp: m[5] / mass - mq * mp,
            t: 0.0,
        })
    }

    /// Flat CSV with one `(x, y, value)` row per node.
    pub fn write_csv(&self, path: &Path) -> Result<()> {
        let mut w = csv::Writer::from_path(path)?;
        let (lx, ly) = self.tag.labels();
        w.write_record([lx, ly, "value"])?;
        let ys = self.geometry.ys();
        for (i, row) in self.values.outer_iter().enumerate() {
            let x = self.geometry.x(i);
            for (j, v) in row.iter().enumerate() {
                w.serialize((x, ys[j], v))?;
            }
        }
        w.flush()?;
        Ok(())
    }

    /// One JSON header line followed by the values as little-endian `f64`
    /// in row-major order.
    pub fn write_dump(&self, path: &Path) -> Result<()> {
        let mut w = BufWriter::new(File::create(path)?);
        let header = DumpHeader {
            tag: self.tag,
            geometry: self.geometry,
        };
        serde_json::to_writer(&mut w, &header)?;
        w.write_all(b"\n")?;
        for v in self.values.iter() {
            w.write_all(&v.to_le_bytes())?;
        }
        w.flush()?;
        Ok(())
    }

    pub fn read_dump(path: &Path) -> Result<PhaseGrid> {
        let mut r = BufReader::new(File::open(path)?);
        let mut line = Vec::new();
        r.read_until(b'\n', &mut line)?;
        let header: DumpHeader = serde_json::from_slice(&line)?;
        let (nx, ny) = header.geometry.shape();
        let mut bytes = vec![0u8; nx * ny * 8];
        r.read_exact(&mut bytes)?;
        let data = bytes
            .chunks_exact(8)
            .map(|c| f64::from_le_bytes(c.try_into().expect("chunk of 8")))
            .collect();
        let values = Array2::from_shape_vec((nx, ny), data)
            .map_err(|e| Error::GeometryMismatch(e.to_string()))?;
        PhaseGrid::new(header.tag, header.geometry, values)
    }
}

fn check_occupation(nbar: f64) -> Result<()> {
    if nbar >= 0.0 && nbar.is_finite() {
        Ok(())
    } else {
        Err(Error::param("nbar", format!("occupation must be >= 0, got {nbar}")))
    }
}
