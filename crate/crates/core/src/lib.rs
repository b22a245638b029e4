//! McGehee blowup of equilibria in real-analytic electromagnetic Lagrangian
//! systems.
//!
//! Given a polynomially truncated potential germ `U`, metric coefficients
//! `g_ij` and a magnetic one-form `A_i` on a ball around an equilibrium, the
//! change of variables `x = r q`, `v = r^{l/2} y` (with `l` the degree of the
//! first non-zero jet of `U` and `q` on the unit sphere) replaces the
//! equilibrium with a boundary sphere bundle at `r = 0` that carries its own
//! real-analytic flow. This crate builds that blown-up vector field together
//! with the rescaled energy, integrates both the original and the blown-up
//! dynamics, enumerates and linearizes the fixed points on the critical
//! boundary, evaluates total-instability criteria, and provides set-dynamics
//! tools (Hausdorff distance, superior limits, epsilon-chains) used to verify
//! the qualitative claims numerically.
//!
//! Module map:
//!
//! * [`germ`] — sparse multivariate truncated power series: evaluation,
//!   differentiation, homogeneous jets and radial splits.
//! * [`system`] — the Lagrangian system and the original phase-space flow
//!   (Christoffel symbols, magnetic force, energy).
//! * [`blowup`] — the McGehee coordinate change, the blown-up field with its
//!   correction terms, the rescaled energy and the radial-velocity rate.
//! * [`integrate`] — adaptive Dormand–Prince integration of both flows, time
//!   reparametrization between them, and escape-time experiments.
//! * [`boundary`] — critical points of the first jet on the sphere, the
//!   fixed-point catalog on the critical boundary, closed-form linearization.
//! * [`criteria`] — generic and non-generic total-instability criteria,
//!   asymptotic orbits and the boomerang construction.
//! * [`setdyn`] — finite point-cloud renderings of Hausdorff distance,
//!   superior limits of set sequences and (epsilon, T)-chain recurrence.
//!
//! The crate is `no_std`-compatible (with `alloc`); the companion CLI crate
//! carries all file formats and IO.

#![cfg_attr(not(feature = "std"), no_std)]
#![forbid(unsafe_code)]

extern crate alloc;

pub mod blowup;
pub mod boundary;
pub mod criteria;
pub mod germ;
pub mod integrate;
mod linalg;
pub mod setdyn;
pub mod system;

pub use blowup::{BlownSystem, McGeheeState};
pub use germ::{AnalyticGerm, HomogeneousPoly, RadialSplit};
pub use integrate::{IntegratorConfig, Trajectory};
pub use system::{LagrangianSystem, MagneticPotential, MetricField, PhaseState};
