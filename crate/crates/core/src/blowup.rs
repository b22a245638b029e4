//! The McGehee coordinate change and the blown-up vector field.
//!
//! With `l` the degree of the first non-zero potential jet, the coordinates
//! `x = r q`, `v = r^{l/2} y` (`q` on the unit sphere) and the time rescaling
//! `dtau = r^{l/2 - 1} dt` turn the motion equations into
//!
//! ```text
//! r'  = nu r
//! q'  = y - nu q
//! y'  = -grad U_l(q) - (l/2) nu y + r F_X(r,q,y) + r^Delta FM_X(r,q,y)
//! ```
//!
//! where `nu = <q, y>` and the corrections
//!
//! ```text
//! F_X^k  = -V^k_{>l}(r,q) - h^{ka}(r,q) d_a U_l(q) - Gamma^k_{ij}(rq) y^i y^j
//! FM_X^k = g^{ka}(rq) F_{ab,>=d}(r,q) y^b
//! ```
//!
//! are assembled from radial splits of the potential gradient, the metric and
//! the magnetic field strength, never by dividing by `r`, so the field is
//! finite and smooth through the boundary `r = 0`. The rescaled energy
//! `Ht = |y|^2/2 + U_l(q) + r F_H` satisfies `Ht = r^{-l} H` on the interior,
//! and the radial velocity `nu` has flow derivative
//!
//! ```text
//! nu' = (1 + l/2)(|y|^2 - nu^2) - l Ht + r (<q, F_X> + l F_H) + r^Delta <q, FM_X>
//! ```
//!
//! For odd `l` the exponent `Delta = d - l/2` is a half-integer and `r^Delta`
//! is read as `|r|^Delta` on the extended manifold `r < 0`.

use alloc::vec::Vec;

use nalgebra::DMatrix;

#[allow(unused_imports)]
use num_traits::Float;

use crate::germ::{GermError, HomogeneousPoly, RadialSplit};
use crate::integrate::Trajectory;
use crate::linalg;
use crate::system::{LagrangianSystem, PhaseState, SystemError, SystemReport, ValidationError};

/// Boundary trajectories must keep `|r|` below this to count as lying on
/// `r = 0`.
pub const BOUNDARY_TOL: f64 = 1e-12;

#[derive(Debug, thiserror::Error, Clone, PartialEq)]
pub enum BlowupError {
    #[error("x = 0 blows up to the whole boundary sphere, not a point")]
    BlowupPoint,
    #[error("state outside the domain: |r| = {r} >= r_e = {r_e}")]
    DomainExit { r: f64, r_e: f64 },
    #[error("negative radius {0} is outside the McGehee manifold")]
    NegativeRadius(f64),
    #[error("trajectory leaves the boundary: |r| = {0} exceeds {BOUNDARY_TOL}")]
    NotOnBoundary(f64),
    #[error("trajectory too short for finite differences")]
    TooFewSamples,
    #[error(transparent)]
    System(#[from] SystemError),
    #[error(transparent)]
    Germ(#[from] GermError),
}

/// Point of the McGehee manifold `(r, q, y)` with `q` on the unit sphere.
#[derive(Debug, Clone, PartialEq)]
pub struct McGeheeState {
    pub r: f64,
    pub q: Vec<f64>,
    pub y: Vec<f64>,
}

impl McGeheeState {
    pub fn new(r: f64, q: Vec<f64>, y: Vec<f64>) -> Self {
        Self { r, q, y }
    }

    /// Radial velocity component `nu = <q, y>`.
    pub fn nu(&self) -> f64 {
        linalg::dot(&self.q, &self.y)
    }

    /// Tangential part `y - nu q`.
    pub fn y_tangent(&self) -> Vec<f64> {
        let nu = self.nu();
        self.y.iter().zip(&self.q).map(|(y, q)| y - nu * q).collect()
    }

    /// Flat embedding `[r, q, y]` used by the integrator and point clouds.
    pub fn to_flat(&self) -> Vec<f64> {
        let mut out = Vec::with_capacity(1 + 2 * self.q.len());
        out.push(self.r);
        out.extend_from_slice(&self.q);
        out.extend_from_slice(&self.y);
        out
    }

    pub fn from_flat(state: &[f64]) -> Self {
        let n = (state.len() - 1) / 2;
        Self {
            r: state[0],
            q: state[1..1 + n].to_vec(),
            y: state[1 + n..].to_vec(),
        }
    }
}

/// Evaluated correction terms of the blown-up field.
pub(crate) struct Corrections {
    /// `F_X` (metric/higher-order potential correction).
    pub f_x: Vec<f64>,
    /// `F_H = u_{>l} + h_ab y^a y^b / 2`.
    pub f_h: f64,
    /// `FM_X` (magnetic correction), zero without a magnetic term.
    pub fm_x: Vec<f64>,
    /// Radial factor multiplying `FM_X`, already `r^Delta` or `|r|^Delta`.
    pub mag_factor: f64,
}

/// A Lagrangian system together with the cached radial splits that define the
/// blown-up field. Immutable after construction.
#[derive(Debug, Clone)]
pub struct BlownSystem {
    sys: LagrangianSystem,
    report: SystemReport,
    l: u32,
    jet: HomogeneousPoly,
    grad_jet: Vec<HomogeneousPoly>,
    u_split: RadialSplit,           // U anchored at l
    du_splits: Vec<RadialSplit>,    // d_k U anchored at l - 1
    g_splits: Vec<RadialSplit>,     // g_ab - delta_ab anchored at 1 (row-major)
    f_splits: Option<Vec<RadialSplit>>, // F_ab anchored at d - 1 (row-major)
    delta: Option<f64>,
}

impl BlownSystem {
    /// Validates the system and caches every split the field needs.
    pub fn new(sys: LagrangianSystem) -> Result<Self, ValidationError> {
        let report = sys.validate()?;
        let n = sys.dim();
        let l = report.l1;
        let (_, jet) = sys.potential().first_nonzero_jet()?;
        let grad_jet = jet.gradient();

        let u_split = RadialSplit::anchored(sys.potential(), l)?;
        let du_splits = sys
            .potential()
            .gradient()?
            .iter()
            .map(|g| RadialSplit::anchored(g, l - 1))
            .collect::<Result<Vec<_>, _>>()?;

        let mut g_splits = Vec::with_capacity(n * n);
        for a in 0..n {
            for b in 0..n {
                let mut delta_ab = crate::germ::AnalyticGerm::zero(n, sys.metric().entry(a, b).trunc());
                if a == b {
                    delta_ab.add_term(alloc::vec![0; n], 1.0)?;
                }
                let corr = sys.metric().entry(a, b).sub(&delta_ab)?;
                g_splits.push(RadialSplit::anchored(&corr, 1)?);
            }
        }

        let f_splits = match report.magnetic_degree {
            Some(d) => {
                let strength = sys.magnetic().field_strength()?;
                let splits = strength
                    .iter()
                    .map(|f| RadialSplit::anchored(f, d - 1))
                    .collect::<Result<Vec<_>, _>>()?;
                Some(splits)
            }
            None => None,
        };

        let delta = report.delta;
        Ok(Self { sys, report, l, jet, grad_jet, u_split, du_splits, g_splits, f_splits, delta })
    }

    pub fn system(&self) -> &LagrangianSystem {
        &self.sys
    }

    pub fn report(&self) -> &SystemReport {
        &self.report
    }

    /// Degree `l` of the first non-zero potential jet.
    pub fn jet_degree(&self) -> u32 {
        self.l
    }

    /// The first non-zero jet `U_l`.
    pub fn first_jet(&self) -> &HomogeneousPoly {
        &self.jet
    }

    /// `f(q) = U_l(q)` on the unit sphere.
    pub fn sphere_value(&self, q: &[f64]) -> Result<f64, GermError> {
        self.jet.evaluate(q)
    }

    pub fn domain_radius(&self) -> f64 {
        self.sys.domain_radius()
    }

    /// `x = rq, v = r^{l/2} y` with `r = |x|`.
    pub fn to_mcgehee(&self, s: &PhaseState) -> Result<McGeheeState, BlowupError> {
        let r = linalg::norm(&s.x);
        if r == 0.0 {
            return Err(BlowupError::BlowupPoint);
        }
        let q: Vec<f64> = s.x.iter().map(|x| x / r).collect();
        let scale = r.powf(self.l as f64 / 2.0);
        let y: Vec<f64> = s.v.iter().map(|v| v / scale).collect();
        Ok(McGeheeState::new(r, q, y))
    }

    /// Inverse map; the whole boundary `r = 0` collapses to the origin of
    /// phase space.
    pub fn from_mcgehee(&self, z: &McGeheeState) -> Result<PhaseState, BlowupError> {
        if z.r < 0.0 {
            return Err(BlowupError::NegativeRadius(z.r));
        }
        let x: Vec<f64> = z.q.iter().map(|q| q * z.r).collect();
        let scale = z.r.powf(self.l as f64 / 2.0);
        let v: Vec<f64> = z.y.iter().map(|y| y * scale).collect();
        Ok(PhaseState::new(x, v))
    }

    fn check_domain(&self, r: f64) -> Result<(), BlowupError> {
        if r.abs() >= self.sys.domain_radius() {
            return Err(BlowupError::DomainExit { r, r_e: self.sys.domain_radius() });
        }
        Ok(())
    }

    /// Matrix `h_ab(r, q)` with `g_ab(rq) = delta_ab + r h_ab(r, q)`.
    fn h_lower(&self, r: f64, q: &[f64]) -> Result<DMatrix<f64>, GermError> {
        let n = self.sys.dim();
        let mut h = DMatrix::zeros(n, n);
        for a in 0..n {
            for b in 0..n {
                h[(a, b)] = self.g_splits[a * n + b].eval_series(r, q)?;
            }
        }
        Ok(h)
    }

    /// `r^Delta`, read as `|r|^Delta` when `Delta` is not an integer.
    fn magnetic_factor(&self, r: f64) -> f64 {
        match self.delta {
            None => 0.0,
            Some(d) => {
                if d.fract() == 0.0 {
                    r.powi(d as i32)
                } else {
                    r.abs().powf(d)
                }
            }
        }
    }

    pub(crate) fn corrections(
        &self,
        r: f64,
        q: &[f64],
        y: &[f64],
    ) -> Result<Corrections, BlowupError> {
        let n = self.sys.dim();
        let h = self.h_lower(r, q)?;
        // g^{ka}(rq) = (I + r h)^{-1} and h^{ka} = -(I + r h)^{-1} h, which
        // stays finite at r = 0.
        let mut iplus = DMatrix::identity(n, n);
        iplus += &h * r;
        let ginv = iplus.try_inverse().ok_or(SystemError::SingularMetric)?;
        let h_upper = -(&ginv * &h);

        let x: Vec<f64> = q.iter().map(|qi| qi * r).collect();
        let gamma = self.sys.christoffel_unchecked(&x)?;

        let mut grad_l = alloc::vec![0.0; n];
        for (k, p) in self.grad_jet.iter().enumerate() {
            grad_l[k] = p.evaluate(q)?;
        }

        let mut f_x = alloc::vec![0.0; n];
        for k in 0..n {
            let mut acc = -self.du_splits[k].eval_above(r, q)?;
            for a in 0..n {
                acc -= h_upper[(k, a)] * grad_l[a];
            }
            for i in 0..n {
                for j in 0..n {
                    acc -= gamma[(k * n + i) * n + j] * y[i] * y[j];
                }
            }
            f_x[k] = acc;
        }

        let mut quad = 0.0;
        for a in 0..n {
            for b in 0..n {
                quad += h[(a, b)] * y[a] * y[b];
            }
        }
        let f_h = self.u_split.eval_above(r, q)? + 0.5 * quad;

        let mut fm_x = alloc::vec![0.0; n];
        let mut mag_factor = 0.0;
        if let Some(splits) = &self.f_splits {
            let mut strength = alloc::vec![0.0; n * n];
            for a in 0..n {
                for b in 0..n {
                    strength[a * n + b] = splits[a * n + b].eval_series(r, q)?;
                }
            }
            for k in 0..n {
                let mut acc = 0.0;
                for a in 0..n {
                    for b in 0..n {
                        acc += ginv[(k, a)] * strength[a * n + b] * y[b];
                    }
                }
                fm_x[k] = acc;
            }
            mag_factor = self.magnetic_factor(r);
        }

        Ok(Corrections { f_x, f_h, fm_x, mag_factor })
    }

    /// Right-hand side `(r', q', y')` of the blown-up equations; finite and
    /// smooth through `r = 0` and defined for `|r| < r_e` (extended manifold).
    pub fn blown_field(&self, z: &McGeheeState) -> Result<(f64, Vec<f64>, Vec<f64>), BlowupError> {
        self.check_domain(z.r)?;
        self.blown_field_unchecked(z.r, &z.q, &z.y)
    }

    pub(crate) fn blown_field_unchecked(
        &self,
        r: f64,
        q: &[f64],
        y: &[f64],
    ) -> Result<(f64, Vec<f64>, Vec<f64>), BlowupError> {
        let n = self.sys.dim();
        let nu = linalg::dot(q, y);
        let corr = self.corrections(r, q, y)?;
        let half_l = self.l as f64 / 2.0;

        let rdot = nu * r;
        let qdot: Vec<f64> = (0..n).map(|i| y[i] - nu * q[i]).collect();
        let mut ydot = alloc::vec![0.0; n];
        for k in 0..n {
            ydot[k] = -self.grad_jet[k].evaluate(q)? - half_l * nu * y[k]
                + r * corr.f_x[k]
                + corr.mag_factor * corr.fm_x[k];
        }
        Ok((rdot, qdot, ydot))
    }

    /// Rescaled energy `Ht = |y|^2/2 + U_l(q) + r F_H`; equals `r^{-l} H` on
    /// the interior and extends analytically to the boundary.
    pub fn rescaled_energy(&self, z: &McGeheeState) -> Result<f64, BlowupError> {
        self.check_domain(z.r)?;
        self.rescaled_energy_unchecked(z.r, &z.q, &z.y)
    }

    pub(crate) fn rescaled_energy_unchecked(
        &self,
        r: f64,
        q: &[f64],
        y: &[f64],
    ) -> Result<f64, BlowupError> {
        let corr = self.corrections(r, q, y)?;
        Ok(0.5 * linalg::dot(y, y) + self.jet.evaluate(q)? + r * corr.f_h)
    }

    /// Flow derivative of `nu` along the blown-up field.
    ///
    /// At `r = 0` this reduces to `(1 + l/2)|y_tg|^2 - l Ht`, which makes
    /// `nu` a Lyapunov function on the critical and subcritical boundary.
    pub fn nu_derivative(&self, z: &McGeheeState) -> Result<f64, BlowupError> {
        self.check_domain(z.r)?;
        let r = z.r;
        let q = &z.q;
        let y = &z.y;
        let nu = z.nu();
        let corr = self.corrections(r, q, y)?;
        let ht = 0.5 * linalg::dot(y, y) + self.jet.evaluate(q)? + r * corr.f_h;
        let l = self.l as f64;
        Ok((1.0 + l / 2.0) * (linalg::dot(y, y) - nu * nu) - l * ht
            + r * (linalg::dot(q, &corr.f_x) + l * corr.f_h)
            + corr.mag_factor * linalg::dot(q, &corr.fm_x))
    }

    /// Maximum residual of the boundary energy law `Ht' = -l nu Ht` over the
    /// interior samples of a boundary trajectory, with `Ht'` estimated by
    /// non-uniform three-point finite differences.
    pub fn boundary_energy_ode_residual(&self, traj: &Trajectory) -> Result<f64, BlowupError> {
        let samples = &traj.samples;
        if samples.len() < 3 {
            return Err(BlowupError::TooFewSamples);
        }
        let l = self.l as f64;
        let mut worst = 0.0f64;
        for w in samples.windows(3) {
            let (s0, s1, s2) = (&w[0], &w[1], &w[2]);
            let r = s1.state[0].abs();
            if r > BOUNDARY_TOL {
                return Err(BlowupError::NotOnBoundary(r));
            }
            let h1 = s1.t - s0.t;
            let h2 = s2.t - s1.t;
            // Three-point derivative on a non-uniform grid.
            let d = -h2 / (h1 * (h1 + h2)) * s0.energy
                + (h2 - h1) / (h1 * h2) * s1.energy
                + h1 / (h2 * (h1 + h2)) * s2.energy;
            let nu = s1.nu.expect("blown trajectory records nu");
            worst = worst.max((d + l * nu * s1.energy).abs());
        }
        Ok(worst)
    }
}
