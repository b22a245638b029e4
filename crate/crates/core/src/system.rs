//! Electromagnetic Lagrangian systems `L = K + mu - U` near an equilibrium
//! and their phase-space dynamics.
//!
//! The configuration space is a ball of radius `r_e` centered at the
//! equilibrium, the metric coefficients `g_ab`, the potential `U` and the
//! magnetic one-form `A_i` are analytic germs, and the motion equations read
//!
//! ```text
//! x'^k = v^k
//! v'^k = -g^{ka} dU_a - Gamma^k_{ij} v^i v^j + g^{ka} F_{ab} v^b
//! ```
//!
//! with `F_ab = d_a A_b - d_b A_a` the magnetic field strength. The energy
//! `H = g_x(v,v)/2 + U(x)` is constant along orbits; the magnetic force is
//! workless.

use alloc::string::String;
use alloc::vec::Vec;

use nalgebra::{DMatrix, DVector};
use rand::Rng;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

#[allow(unused_imports)]
use num_traits::Float;

use crate::germ::{AnalyticGerm, GermError, HomogeneousPoly, JET_COEFF_TOL};
use crate::linalg;

/// Tolerance for the normalization checks `U(0) = 0`, `dU(0) = 0` and
/// `g_ab(0) = delta_ab`.
pub const ORIGIN_TOL: f64 = 1e-12;

/// Number of sample points for the positive-definiteness check of the metric.
const PD_SAMPLES: usize = 32;

#[derive(Debug, thiserror::Error, Clone, PartialEq)]
pub enum ValidationError {
    #[error("potential germ is identically zero")]
    PotentialZero,
    #[error("potential not zero at p: constant term {value}")]
    PotentialNotZeroAtOrigin { value: f64 },
    #[error("p is not a critical point of the potential: degree-1 coefficient {value} on variable {var}")]
    PotentialNotCritical { var: usize, value: f64 },
    #[error("metric not symmetric: entries ({a},{b}) and ({b},{a}) differ at coefficient level")]
    MetricNotSymmetric { a: usize, b: usize },
    #[error("metric is not the identity at the origin: g_{a}{b}(0) = {value}")]
    MetricNotIdentityAtOrigin { a: usize, b: usize, value: f64 },
    #[error("metric not positive definite at sampled point {point:?}")]
    MetricNotPositiveDefinite { point: Vec<f64> },
    #[error("domain radius must be positive, got {0}")]
    DomainRadiusNotPositive(f64),
    #[error("component dimensions disagree: {0}")]
    Shape(String),
    #[error(transparent)]
    Germ(#[from] GermError),
}

#[derive(Debug, thiserror::Error, Clone, PartialEq)]
pub enum SystemError {
    #[error("state left the domain: |x| = {norm} >= r_e = {r_e}")]
    DomainExit { norm: f64, r_e: f64 },
    #[error("metric is numerically singular at the requested point")]
    SingularMetric,
    #[error(transparent)]
    Germ(#[from] GermError),
}

/// Symmetric matrix of metric coefficient germs `g_ab(x)`.
#[derive(Debug, Clone)]
pub struct MetricField {
    dim: usize,
    entries: Vec<AnalyticGerm>, // row-major n x n
}

impl MetricField {
    /// The Euclidean metric: `g_ab = delta_ab`.
    pub fn euclidean(dim: usize, trunc: u32) -> Self {
        let mut entries = Vec::with_capacity(dim * dim);
        for a in 0..dim {
            for b in 0..dim {
                let mut g = AnalyticGerm::zero(dim, trunc);
                if a == b {
                    g.add_term(alloc::vec![0; dim], 1.0).expect("constant term");
                }
                entries.push(g);
            }
        }
        Self { dim, entries }
    }

    /// Builds a metric from a full row-major `n x n` matrix of germs. Only
    /// shapes are checked here; symmetry and normalization are examined by
    /// [`LagrangianSystem::validate`].
    pub fn new(dim: usize, entries: Vec<AnalyticGerm>) -> Result<Self, ValidationError> {
        if entries.len() != dim * dim {
            return Err(ValidationError::Shape(alloc::format!(
                "metric needs {} entries, got {}",
                dim * dim,
                entries.len()
            )));
        }
        if let Some(g) = entries.iter().find(|g| g.dim() != dim) {
            return Err(ValidationError::Shape(alloc::format!(
                "metric entry has dimension {}, system has {}",
                g.dim(),
                dim
            )));
        }
        Ok(Self { dim, entries })
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn entry(&self, a: usize, b: usize) -> &AnalyticGerm {
        &self.entries[a * self.dim + b]
    }

    pub fn eval(&self, x: &[f64]) -> Result<DMatrix<f64>, GermError> {
        let n = self.dim;
        let mut m = DMatrix::zeros(n, n);
        for a in 0..n {
            for b in 0..n {
                m[(a, b)] = self.entry(a, b).evaluate(x)?;
            }
        }
        Ok(m)
    }

    /// Germ matrix of the correction `g - delta`.
    fn correction(&self, a: usize, b: usize) -> Result<AnalyticGerm, GermError> {
        let mut delta = AnalyticGerm::zero(self.dim, self.entry(a, b).trunc());
        if a == b {
            delta.add_term(alloc::vec![0; self.dim], 1.0)?;
        }
        self.entry(a, b).sub(&delta)
    }

    /// Minimal degree >= 1 present in `g - delta`, or `None` for the
    /// Euclidean case.
    pub fn correction_degree(&self) -> Result<Option<u32>, GermError> {
        let mut m: Option<u32> = None;
        for a in 0..self.dim {
            for b in 0..self.dim {
                if let Ok((d, _)) = self.correction(a, b)?.first_nonzero_jet() {
                    m = Some(m.map_or(d, |cur| cur.min(d)));
                }
            }
        }
        Ok(m)
    }

    /// Degree-`m` homogeneous part of `g_ab - delta_ab`, row-major.
    pub fn correction_part(&self, m: u32) -> Result<Vec<HomogeneousPoly>, GermError> {
        let mut parts = Vec::with_capacity(self.dim * self.dim);
        for a in 0..self.dim {
            for b in 0..self.dim {
                parts.push(self.correction(a, b)?.homogeneous_part(m));
            }
        }
        Ok(parts)
    }
}

/// Magnetic one-form `mu = sum_i A_i dx^i`.
#[derive(Debug, Clone)]
pub struct MagneticPotential {
    dim: usize,
    components: Vec<AnalyticGerm>,
}

impl MagneticPotential {
    pub fn zero(dim: usize, trunc: u32) -> Self {
        Self { dim, components: (0..dim).map(|_| AnalyticGerm::zero(dim, trunc)).collect() }
    }

    pub fn new(dim: usize, components: Vec<AnalyticGerm>) -> Result<Self, ValidationError> {
        if components.len() != dim {
            return Err(ValidationError::Shape(alloc::format!(
                "magnetic potential needs {} components, got {}",
                dim,
                components.len()
            )));
        }
        if let Some(g) = components.iter().find(|g| g.dim() != dim) {
            return Err(ValidationError::Shape(alloc::format!(
                "magnetic component has dimension {}, system has {}",
                g.dim(),
                dim
            )));
        }
        Ok(Self { dim, components })
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn component(&self, i: usize) -> &AnalyticGerm {
        &self.components[i]
    }

    pub fn is_zero(&self) -> bool {
        self.components.iter().all(|g| g.max_abs_coeff() <= JET_COEFF_TOL)
    }

    /// Degree of the first non-zero jet of the one-form, `None` when zero.
    pub fn first_jet_degree(&self) -> Option<u32> {
        self.components
            .iter()
            .filter_map(|g| g.first_nonzero_jet().ok().map(|(d, _)| d))
            .min()
    }

    /// Field-strength germs `F_ab = d_a A_b - d_b A_a`, row-major and
    /// antisymmetric by construction.
    pub fn field_strength(&self) -> Result<Vec<AnalyticGerm>, GermError> {
        let n = self.dim;
        let mut f = Vec::with_capacity(n * n);
        for a in 0..n {
            for b in 0..n {
                f.push(self.components[b].partial(a)?.sub(&self.components[a].partial(b)?)?);
            }
        }
        Ok(f)
    }
}

/// Point of phase space.
#[derive(Debug, Clone, PartialEq)]
pub struct PhaseState {
    pub x: Vec<f64>,
    pub v: Vec<f64>,
}

impl PhaseState {
    pub fn new(x: Vec<f64>, v: Vec<f64>) -> Self {
        Self { x, v }
    }
}

/// Derived degrees and hypothesis checks produced by
/// [`LagrangianSystem::validate`].
#[derive(Debug, Clone, PartialEq)]
pub struct SystemReport {
    /// Degree of the first non-zero jet of the potential (`l`, at least 2).
    pub l1: u32,
    /// Degree of the second non-zero jet, absent for homogeneous potentials.
    pub l2: Option<u32>,
    /// Degree of the first non-zero jet of the magnetic one-form, absent
    /// when the one-form vanishes.
    pub magnetic_degree: Option<u32>,
    /// First metric-correction degree `m`, absent for the Euclidean metric.
    pub metric_degree: Option<u32>,
    /// `Delta = d - l1/2`; absent means "infinite" (no magnetic term).
    pub delta: Option<f64>,
    /// `mu = min(l2 - l1, m)`; absent when the potential is homogeneous and
    /// the metric Euclidean.
    pub mu: Option<u32>,
    /// `Delta >= 1`, vacuously true without a magnetic term.
    pub weak_magnetism: bool,
    /// `Delta > mu`; `None` when `mu` is undefined.
    pub weak_magnetism_ii: Option<bool>,
}

impl SystemReport {
    /// `Delta` with the infinite sentinel made explicit.
    pub fn delta_value(&self) -> f64 {
        self.delta.unwrap_or(f64::INFINITY)
    }
}

/// A validated-on-construction bundle of potential, metric, magnetic
/// potential and domain radius, together with cached derivative germs.
/// Immutable after construction; all evaluations are pure.
#[derive(Debug, Clone)]
pub struct LagrangianSystem {
    dim: usize,
    r_e: f64,
    potential: AnalyticGerm,
    metric: MetricField,
    magnetic: MagneticPotential,
    grad_u: Vec<AnalyticGerm>,    // n
    dg: Vec<AnalyticGerm>,        // n^3, [i][a][b] = d_i g_ab
    f_ab: Vec<AnalyticGerm>,      // n^2 field strength
}

impl LagrangianSystem {
    pub fn new(
        potential: AnalyticGerm,
        metric: MetricField,
        magnetic: MagneticPotential,
        r_e: f64,
    ) -> Result<Self, ValidationError> {
        let dim = potential.dim();
        if metric.dim() != dim || magnetic.dim() != dim {
            return Err(ValidationError::Shape(alloc::format!(
                "potential dim {}, metric dim {}, magnetic dim {}",
                dim,
                metric.dim(),
                magnetic.dim()
            )));
        }
        if !(r_e > 0.0) {
            return Err(ValidationError::DomainRadiusNotPositive(r_e));
        }

        let grad_u = potential.gradient()?;
        let mut dg = Vec::with_capacity(dim * dim * dim);
        for i in 0..dim {
            for a in 0..dim {
                for b in 0..dim {
                    dg.push(metric.entry(a, b).partial(i)?);
                }
            }
        }
        let f_ab = magnetic.field_strength()?;

        Ok(Self { dim, r_e, potential, metric, magnetic, grad_u, dg, f_ab })
    }

    /// Newtonian shorthand: Euclidean metric, no magnetic term.
    pub fn newtonian(potential: AnalyticGerm, r_e: f64) -> Result<Self, ValidationError> {
        let dim = potential.dim();
        let trunc = potential.trunc();
        Self::new(
            potential,
            MetricField::euclidean(dim, trunc),
            MagneticPotential::zero(dim, trunc),
            r_e,
        )
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn domain_radius(&self) -> f64 {
        self.r_e
    }

    pub fn potential(&self) -> &AnalyticGerm {
        &self.potential
    }

    pub fn metric(&self) -> &MetricField {
        &self.metric
    }

    pub fn magnetic(&self) -> &MagneticPotential {
        &self.magnetic
    }

    /// Checks all structural invariants and computes the derived degrees
    /// `l1, l2, d, m, Delta, mu` together with the magnetism hypotheses.
    pub fn validate(&self) -> Result<SystemReport, ValidationError> {
        if self.potential.is_zero() {
            return Err(ValidationError::PotentialZero);
        }
        let c0 = self.potential.coeff(&alloc::vec![0; self.dim]);
        if c0.abs() > ORIGIN_TOL {
            return Err(ValidationError::PotentialNotZeroAtOrigin { value: c0 });
        }
        for var in 0..self.dim {
            let mut alpha = alloc::vec![0u32; self.dim];
            alpha[var] = 1;
            let c = self.potential.coeff(&alpha);
            if c.abs() > ORIGIN_TOL {
                return Err(ValidationError::PotentialNotCritical { var, value: c });
            }
        }

        for a in 0..self.dim {
            for b in (a + 1)..self.dim {
                if self.metric.entry(a, b) != self.metric.entry(b, a) {
                    return Err(ValidationError::MetricNotSymmetric { a, b });
                }
            }
        }
        for a in 0..self.dim {
            for b in 0..self.dim {
                let c = self.metric.entry(a, b).coeff(&alloc::vec![0; self.dim]);
                let want = if a == b { 1.0 } else { 0.0 };
                if (c - want).abs() > ORIGIN_TOL {
                    return Err(ValidationError::MetricNotIdentityAtOrigin { a, b, value: c });
                }
            }
        }

        // Positive definiteness on a deterministic sample of the domain ball.
        let mut rng = ChaCha8Rng::seed_from_u64(0x5eed);
        for _ in 0..PD_SAMPLES {
            let mut x: Vec<f64> = (0..self.dim).map(|_| rng.random::<f64>() * 2.0 - 1.0).collect();
            let scale = 0.9 * self.r_e * rng.random::<f64>() / linalg::norm(&x).max(1e-300);
            for xi in &mut x {
                *xi *= scale;
            }
            let g = self.metric.eval(&x)?;
            if nalgebra::Cholesky::new(g).is_none() {
                return Err(ValidationError::MetricNotPositiveDefinite { point: x });
            }
        }

        let (l1, _) = self.potential.first_nonzero_jet().map_err(|_| ValidationError::PotentialZero)?;
        let l2 = self.potential.second_nonzero_jet()?.map(|(d, _)| d);
        let magnetic_degree = self.magnetic.first_jet_degree();
        let metric_degree = self.metric.correction_degree()?;
        let delta = magnetic_degree.map(|d| d as f64 - l1 as f64 / 2.0);
        let mu = match (l2.map(|d| d - l1), metric_degree) {
            (Some(a), Some(b)) => Some(a.min(b)),
            (Some(a), None) => Some(a),
            (None, Some(b)) => Some(b),
            (None, None) => None,
        };
        let weak_magnetism = delta.is_none_or(|d| d >= 1.0);
        let weak_magnetism_ii = mu.map(|m| delta.is_none_or(|d| d > m as f64));

        Ok(SystemReport {
            l1,
            l2,
            magnetic_degree,
            metric_degree,
            delta,
            mu,
            weak_magnetism,
            weak_magnetism_ii,
        })
    }

    fn check_domain(&self, x: &[f64]) -> Result<(), SystemError> {
        let norm = linalg::norm(x);
        if norm >= self.r_e {
            return Err(SystemError::DomainExit { norm, r_e: self.r_e });
        }
        Ok(())
    }

    /// Christoffel symbols `Gamma^k_{ij}(x)` flattened as `[k][i][j]`.
    pub fn christoffel(&self, x: &[f64]) -> Result<Vec<f64>, SystemError> {
        self.check_domain(x)?;
        self.christoffel_unchecked(x)
    }

    pub(crate) fn christoffel_unchecked(&self, x: &[f64]) -> Result<Vec<f64>, SystemError> {
        let n = self.dim;
        let g = self.metric.eval(x)?;
        let inv = g.try_inverse().ok_or(SystemError::SingularMetric)?;
        let mut dgx = alloc::vec![0.0; n * n * n];
        for (idx, germ) in self.dg.iter().enumerate() {
            dgx[idx] = germ.evaluate(x)?;
        }
        let dg = |i: usize, a: usize, b: usize| dgx[(i * n + a) * n + b];
        let mut gamma = alloc::vec![0.0; n * n * n];
        for k in 0..n {
            for i in 0..n {
                for j in 0..n {
                    let mut s = 0.0;
                    for a in 0..n {
                        s += inv[(k, a)] * (dg(i, a, j) + dg(j, a, i) - dg(a, i, j));
                    }
                    gamma[(k * n + i) * n + j] = 0.5 * s;
                }
            }
        }
        Ok(gamma)
    }

    /// Right-hand side `(x', v')` of the motion equations.
    pub fn original_field(&self, s: &PhaseState) -> Result<(Vec<f64>, Vec<f64>), SystemError> {
        self.check_domain(&s.x)?;
        self.original_field_unchecked(&s.x, &s.v)
    }

    pub(crate) fn original_field_unchecked(
        &self,
        x: &[f64],
        v: &[f64],
    ) -> Result<(Vec<f64>, Vec<f64>), SystemError> {
        let n = self.dim;
        let g = self.metric.eval(x)?;
        let inv = g.try_inverse().ok_or(SystemError::SingularMetric)?;
        let gamma = self.christoffel_unchecked(x)?;
        let mut du = alloc::vec![0.0; n];
        for (i, germ) in self.grad_u.iter().enumerate() {
            du[i] = germ.evaluate(x)?;
        }
        let mut fx = alloc::vec![0.0; n * n];
        for (idx, germ) in self.f_ab.iter().enumerate() {
            fx[idx] = germ.evaluate(x)?;
        }
        let mut vdot = alloc::vec![0.0; n];
        for k in 0..n {
            let mut acc = 0.0;
            for a in 0..n {
                acc -= inv[(k, a)] * du[a];
                for b in 0..n {
                    acc += inv[(k, a)] * fx[a * n + b] * v[b];
                }
            }
            for i in 0..n {
                for j in 0..n {
                    acc -= gamma[(k * n + i) * n + j] * v[i] * v[j];
                }
            }
            vdot[k] = acc;
        }
        Ok((v.to_vec(), vdot))
    }

    /// Energy `H(x, v) = g_x(v, v)/2 + U(x)`.
    pub fn energy(&self, s: &PhaseState) -> Result<f64, SystemError> {
        self.check_domain(&s.x)?;
        self.energy_unchecked(&s.x, &s.v)
    }

    pub(crate) fn energy_unchecked(&self, x: &[f64], v: &[f64]) -> Result<f64, SystemError> {
        let g = self.metric.eval(x)?;
        let vv = DVector::from_column_slice(v);
        let kinetic = 0.5 * (&g * &vv).dot(&vv);
        Ok(kinetic + self.potential.evaluate(x)?)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_abs_diff_eq;

    fn quartic_system() -> LagrangianSystem {
        let u = AnalyticGerm::from_terms(
            2,
            6,
            [(alloc::vec![0, 2], 1.0), (alloc::vec![4, 0], -1.0)],
        )
        .unwrap();
        LagrangianSystem::newtonian(u, 1.5).unwrap()
    }

    #[test]
    fn validate_quartic_jets() {
        let report = quartic_system().validate().unwrap();
        assert_eq!(report.l1, 2);
        assert_eq!(report.l2, Some(4));
        assert_eq!(report.magnetic_degree, None);
        assert_eq!(report.metric_degree, None);
        assert_eq!(report.delta, None);
        assert_eq!(report.mu, Some(2));
        assert!(report.weak_magnetism);
        assert_eq!(report.weak_magnetism_ii, Some(true));
    }

    #[test]
    fn validate_rejects_nonzero_constant() {
        let u = AnalyticGerm::from_terms(1, 4, [(alloc::vec![0], 1.0), (alloc::vec![2], -1.0)])
            .unwrap();
        let sys = LagrangianSystem::newtonian(u, 1.0).unwrap();
        assert!(matches!(
            sys.validate(),
            Err(ValidationError::PotentialNotZeroAtOrigin { .. })
        ));
    }

    #[test]
    fn validate_rejects_noncritical_origin() {
        let u = AnalyticGerm::from_terms(2, 4, [(alloc::vec![1, 0], 0.5), (alloc::vec![0, 2], 1.0)])
            .unwrap();
        let sys = LagrangianSystem::newtonian(u, 1.0).unwrap();
        assert!(matches!(sys.validate(), Err(ValidationError::PotentialNotCritical { var: 0, .. })));
    }

    #[test]
    fn validate_magnetic_jet_degrees() {
        // mu = x1^2 x2 dx1 over the quartic potential: d = 3, Delta = 2.
        let u = AnalyticGerm::from_terms(
            2,
            6,
            [(alloc::vec![0, 2], 1.0), (alloc::vec![4, 0], -1.0)],
        )
        .unwrap();
        let a1 = AnalyticGerm::from_terms(2, 6, [(alloc::vec![2, 1], 1.0)]).unwrap();
        let a2 = AnalyticGerm::zero(2, 6);
        let sys = LagrangianSystem::new(
            u,
            MetricField::euclidean(2, 6),
            MagneticPotential::new(2, alloc::vec![a1, a2]).unwrap(),
            1.5,
        )
        .unwrap();
        let report = sys.validate().unwrap();
        assert_eq!(report.magnetic_degree, Some(3));
        assert_eq!(report.delta, Some(2.0));
        assert!(report.weak_magnetism);
    }

    #[test]
    fn validate_rejects_asymmetric_metric() {
        let u = AnalyticGerm::from_terms(2, 4, [(alloc::vec![2, 0], -1.0)]).unwrap();
        let one = AnalyticGerm::from_terms(2, 4, [(alloc::vec![0, 0], 1.0)]).unwrap();
        let off = AnalyticGerm::from_terms(2, 4, [(alloc::vec![1, 0], 0.3)]).unwrap();
        let metric = MetricField::new(
            2,
            alloc::vec![one.clone(), off, AnalyticGerm::zero(2, 4), one],
        )
        .unwrap();
        let sys =
            LagrangianSystem::new(u, metric, MagneticPotential::zero(2, 4), 1.0).unwrap();
        assert!(matches!(sys.validate(), Err(ValidationError::MetricNotSymmetric { a: 0, b: 1 })));
    }

    #[test]
    fn christoffel_euclidean_vanishes() {
        let gamma = quartic_system().christoffel(&[0.3, -0.2]).unwrap();
        for v in gamma {
            assert_abs_diff_eq!(v, 0.0);
        }
    }

    /// g = (1 + x1) * identity in the plane, evaluated at the origin.
    #[test]
    fn christoffel_conformal_metric_by_hand() {
        let u = AnalyticGerm::from_terms(2, 4, [(alloc::vec![2, 0], -1.0)]).unwrap();
        let mut diag = AnalyticGerm::zero(2, 4);
        diag.add_term(alloc::vec![0, 0], 1.0).unwrap();
        diag.add_term(alloc::vec![1, 0], 1.0).unwrap();
        let metric = MetricField::new(
            2,
            alloc::vec![
                diag.clone(),
                AnalyticGerm::zero(2, 4),
                AnalyticGerm::zero(2, 4),
                diag,
            ],
        )
        .unwrap();
        let sys = LagrangianSystem::new(u, metric, MagneticPotential::zero(2, 4), 1.0).unwrap();
        let n = 2;
        let gamma = sys.christoffel(&[0.0, 0.0]).unwrap();
        let g = |k: usize, i: usize, j: usize| gamma[(k * n + i) * n + j];
        assert_abs_diff_eq!(g(0, 0, 0), 0.5);
        assert_abs_diff_eq!(g(0, 1, 1), -0.5);
        assert_abs_diff_eq!(g(1, 0, 1), 0.5);
        assert_abs_diff_eq!(g(1, 1, 0), 0.5);
        assert_abs_diff_eq!(g(0, 0, 1), 0.0);
        assert_abs_diff_eq!(g(1, 0, 0), 0.0);
        assert_abs_diff_eq!(g(1, 1, 1), 0.0);
        assert_abs_diff_eq!(g(0, 1, 0), 0.0);
    }

    #[test]
    fn christoffel_symmetric_in_lower_indices() {
        let u = AnalyticGerm::from_terms(2, 4, [(alloc::vec![2, 0], -1.0)]).unwrap();
        let mut g00 = AnalyticGerm::zero(2, 4);
        g00.add_term(alloc::vec![0, 0], 1.0).unwrap();
        g00.add_term(alloc::vec![1, 1], 0.2).unwrap();
        let mut g01 = AnalyticGerm::zero(2, 4);
        g01.add_term(alloc::vec![2, 0], 0.1).unwrap();
        let mut g11 = AnalyticGerm::zero(2, 4);
        g11.add_term(alloc::vec![0, 0], 1.0).unwrap();
        g11.add_term(alloc::vec![0, 2], -0.15).unwrap();
        let metric =
            MetricField::new(2, alloc::vec![g00, g01.clone(), g01, g11]).unwrap();
        let sys = LagrangianSystem::new(u, metric, MagneticPotential::zero(2, 4), 1.0).unwrap();
        sys.validate().unwrap();
        let n = 2;
        let gamma = sys.christoffel(&[0.31, -0.44]).unwrap();
        for k in 0..n {
            for i in 0..n {
                for j in 0..n {
                    let a = gamma[(k * n + i) * n + j];
                    let b = gamma[(k * n + j) * n + i];
                    assert!((a - b).abs() <= 1e-14);
                }
            }
        }
    }

    #[test]
    fn original_field_examples() {
        let sys = quartic_system();
        let (xdot, vdot) = sys
            .original_field(&PhaseState::new(alloc::vec![1.0, 0.0], alloc::vec![0.0, 0.0]))
            .unwrap();
        assert_abs_diff_eq!(xdot[0], 0.0);
        assert_abs_diff_eq!(xdot[1], 0.0);
        assert_abs_diff_eq!(vdot[0], 4.0);
        assert_abs_diff_eq!(vdot[1], 0.0);

        let (xdot, vdot) = sys
            .original_field(&PhaseState::new(alloc::vec![0.0, 0.0], alloc::vec![0.0, 0.0]))
            .unwrap();
        assert!(xdot.iter().chain(&vdot).all(|&c| c == 0.0));
    }

    #[test]
    fn original_field_domain_wall() {
        let sys = quartic_system();
        let err = sys
            .original_field(&PhaseState::new(alloc::vec![2.0, 0.0], alloc::vec![0.0, 0.0]))
            .unwrap_err();
        assert!(matches!(err, SystemError::DomainExit { .. }));
    }

    #[test]
    fn energy_examples() {
        let sys = quartic_system();
        assert_abs_diff_eq!(
            sys.energy(&PhaseState::new(alloc::vec![0.0, 0.0], alloc::vec![0.0, 0.0])).unwrap(),
            0.0
        );
        assert_abs_diff_eq!(
            sys.energy(&PhaseState::new(alloc::vec![1.0, 0.0], alloc::vec![0.0, 1.0])).unwrap(),
            -0.5
        );
    }
}
