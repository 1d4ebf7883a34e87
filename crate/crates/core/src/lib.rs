//! Weighted symmetrization for infinite measures.
//!
//! This crate implements rearrangement machinery for measures of the form
//! `dμ = exp(c|x|²) dx` on ℝⁿ (and relatives with product or singular radial
//! densities), together with desk-scale numerical verification of the
//! inequalities that hold for them:
//!
//! * exact 1-D interval geometry with the measure transform Ψ and the
//!   isoperimetric function J = ψ∘Ψ⁻¹ ([`density`], [`interval`]),
//! * fractional-occupancy grid sets with weighted measure, two perimeter
//!   estimators, parallel sets, and Steiner / Schwarz set symmetrization
//!   ([`grid`], [`sets`]),
//! * decreasing rearrangement of grid functions with the layer profile,
//!   equimeasurability / Hardy–Littlewood / nonexpansivity evaluators and
//!   Pólya–Szegő energy comparison ([`functions`]),
//! * a weighted p-Laplace Dirichlet solver with the explicit radial bound
//!   and the pointwise / gradient-norm comparison ([`elliptic`]),
//! * Rayleigh-quotient and harmonic-oscillator checks for the best Sobolev
//!   constant 2cn ([`spectral`]),
//! * batch verification suites and a CLI front end ([`suites`], [`cli`]).
//!
//! All data-parallel loops use fixed-order reductions, so results are
//! bit-identical regardless of the thread count (see [`par`]). The
//! `parallel` feature (on by default) backs them with rayon; without it the
//! same code runs sequentially.

pub mod cli;
pub mod density;
pub mod edt;
pub mod elliptic;
pub mod error;
pub mod functions;
pub mod grid;
pub mod interval;
pub mod par;
pub mod quad;
pub mod report;
pub mod sample;
pub mod sets;
pub mod spectral;
pub mod suites;

pub use density::{Density1D, GridDensity, ProductDensity, RadialDensity, SingularRadialDensity};
pub use error::{Error, Result};
pub use grid::{GridFunction, GridSet, GridSpec};
pub use interval::IntervalSet;
pub use report::ComparisonReport;
