//! Phase-space dynamics of the Diósi–Penrose collapse model and its
//! linear-friction extension, with the entropy functionals used to test
//! their thermodynamic consistency.
//!
//! Conventions: `ħ = G = 1` unless set otherwise, quadratures are scaled so
//! that the oscillator ground state has unit variance (`V = (2n̄+1)·𝕀` for a
//! thermal state), and time is measured in units of `1/ω`.

pub mod bench;
pub mod entropy;
mod error;
pub mod gaussian;
pub mod grid;
pub mod params;
pub mod qlindblad;

pub use error::{Error, Result};
pub use gaussian::{CovarianceState, KleinKramers, Regime, TrajectoryRecord};
pub use grid::{AxisTag, GridGeometry, PhaseGrid};
pub use params::{ChannelCoefficients, Model, ModelParams};
