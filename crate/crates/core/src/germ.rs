//! Sparse multivariate truncated power series ("analytic germs").
//!
//! A germ is stored as a map from exponent multi-indices to coefficients,
//! graded by total degree, together with a truncation order beyond which all
//! coefficients are unknown. Transcendental inputs enter only as explicit
//! Taylor truncations, so every object here is an honest polynomial and all
//! operations (evaluation, differentiation, jet extraction, radial splitting)
//! are exact.

use alloc::collections::BTreeMap;
use alloc::vec::Vec;

/// Coefficients with magnitude at or below this are treated as zero when
/// detecting non-zero jets of computed germs. Storage itself only drops exact
/// zeros.
pub const JET_COEFF_TOL: f64 = 1e-12;

#[derive(Debug, thiserror::Error, Clone, PartialEq)]
pub enum GermError {
    #[error("dimension mismatch: germ has dimension {expected}, got {got}")]
    DimensionMismatch { expected: usize, got: usize },
    #[error("term of degree {degree} exceeds truncation order {trunc}")]
    DegreeAboveTruncation { degree: u32, trunc: u32 },
    #[error("germ is zero: no non-zero jet exists")]
    NoJet,
    #[error("germ has terms below the requested split degree {degree}")]
    TermsBelowSplitDegree { degree: u32 },
    #[error("truncation order {trunc} too small for this operation")]
    TruncationTooSmall { trunc: u32 },
}

/// Truncated multivariate power series in canonical form: no explicit zero
/// coefficients, every multi-index of length `dim` and total degree at most
/// `trunc`.
#[derive(Debug, Clone, PartialEq)]
pub struct AnalyticGerm {
    dim: usize,
    trunc: u32,
    terms: BTreeMap<Vec<u32>, f64>,
}

/// Polynomial whose stored terms all share one total degree.
#[derive(Debug, Clone, PartialEq)]
pub struct HomogeneousPoly {
    dim: usize,
    degree: u32,
    terms: BTreeMap<Vec<u32>, f64>,
}

/// Decomposition `w(rq) = r^d w_d(q) + r^{d+1} w_{>d}(r, q)` of a germ with
/// no terms below degree `d`: `base` is the degree-`d` homogeneous part and
/// `tail[j]` the degree `d+1+j` part, so that
/// `w_{>d}(r, q) = sum_j r^j tail[j](q)`.
#[derive(Debug, Clone, PartialEq)]
pub struct RadialSplit {
    base: HomogeneousPoly,
    tail: Vec<HomogeneousPoly>,
}

fn check_dim(expected: usize, got: usize) -> Result<(), GermError> {
    if expected == got {
        Ok(())
    } else {
        Err(GermError::DimensionMismatch { expected, got })
    }
}

fn monomial(alpha: &[u32], x: &[f64]) -> f64 {
    let mut p = 1.0;
    for (&e, &xi) in alpha.iter().zip(x) {
        if e > 0 {
            p *= xi.powi(e as i32);
        }
    }
    p
}

impl AnalyticGerm {
    pub fn zero(dim: usize, trunc: u32) -> Self {
        Self { dim, trunc, terms: BTreeMap::new() }
    }

    /// Builds a germ from `(multi-index, coefficient)` pairs, accumulating
    /// repeated indices and dropping exact zeros.
    pub fn from_terms<I>(dim: usize, trunc: u32, terms: I) -> Result<Self, GermError>
    where
        I: IntoIterator<Item = (Vec<u32>, f64)>,
    {
        let mut g = Self::zero(dim, trunc);
        for (alpha, c) in terms {
            g.add_term(alpha, c)?;
        }
        Ok(g)
    }

    /// Adds `c` to the coefficient of `alpha`, keeping canonical form.
    pub fn add_term(&mut self, alpha: Vec<u32>, c: f64) -> Result<(), GermError> {
        check_dim(self.dim, alpha.len())?;
        let degree: u32 = alpha.iter().sum();
        if degree > self.trunc {
            return Err(GermError::DegreeAboveTruncation { degree, trunc: self.trunc });
        }
        let new = self.terms.get(&alpha).copied().unwrap_or(0.0) + c;
        if new == 0.0 {
            self.terms.remove(&alpha);
        } else {
            self.terms.insert(alpha, new);
        }
        Ok(())
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn trunc(&self) -> u32 {
        self.trunc
    }

    pub fn is_zero(&self) -> bool {
        self.terms.is_empty()
    }

    pub fn coeff(&self, alpha: &[u32]) -> f64 {
        self.terms.get(alpha).copied().unwrap_or(0.0)
    }

    /// Terms in lexicographic multi-index order.
    pub fn terms(&self) -> impl Iterator<Item = (&[u32], f64)> {
        self.terms.iter().map(|(a, &c)| (a.as_slice(), c))
    }

    pub fn max_abs_coeff(&self) -> f64 {
        self.terms.values().fold(0.0, |m, c| m.max(c.abs()))
    }

    /// `sum_alpha c_alpha x^alpha` over the stored terms.
    pub fn evaluate(&self, x: &[f64]) -> Result<f64, GermError> {
        check_dim(self.dim, x.len())?;
        Ok(self.terms.iter().map(|(a, &c)| c * monomial(a, x)).sum())
    }

    /// Formal partial derivative with respect to variable `i`; the truncation
    /// order drops by one.
    pub fn partial(&self, i: usize) -> Result<Self, GermError> {
        if i >= self.dim {
            return Err(GermError::DimensionMismatch { expected: self.dim, got: i });
        }
        if self.trunc == 0 {
            return Err(GermError::TruncationTooSmall { trunc: self.trunc });
        }
        let mut out = Self::zero(self.dim, self.trunc - 1);
        for (alpha, &c) in &self.terms {
            let e = alpha[i];
            if e == 0 {
                continue;
            }
            let mut beta = alpha.clone();
            beta[i] = e - 1;
            out.add_term(beta, c * e as f64)?;
        }
        Ok(out)
    }

    pub fn gradient(&self) -> Result<Vec<Self>, GermError> {
        (0..self.dim).map(|i| self.partial(i)).collect()
    }

    /// Row-major `dim x dim` matrix of second partials; trunc drops by two.
    pub fn hessian(&self) -> Result<Vec<Self>, GermError> {
        if self.trunc < 2 {
            return Err(GermError::TruncationTooSmall { trunc: self.trunc });
        }
        let grad = self.gradient()?;
        let mut out = Vec::with_capacity(self.dim * self.dim);
        for gi in &grad {
            for j in 0..self.dim {
                out.push(gi.partial(j)?);
            }
        }
        Ok(out)
    }

    pub fn scaled(&self, c: f64) -> Self {
        if c == 0.0 {
            return Self::zero(self.dim, self.trunc);
        }
        let terms = self.terms.iter().map(|(a, &v)| (a.clone(), c * v)).collect();
        Self { dim: self.dim, trunc: self.trunc, terms }
    }

    pub fn sub(&self, other: &Self) -> Result<Self, GermError> {
        check_dim(self.dim, other.dim)?;
        let mut out = self.clone();
        out.trunc = self.trunc.min(other.trunc);
        out.terms.retain(|a, _| a.iter().sum::<u32>() <= out.trunc);
        for (alpha, &c) in &other.terms {
            if alpha.iter().sum::<u32>() <= out.trunc {
                out.add_term(alpha.clone(), -c)?;
            }
        }
        Ok(out)
    }

    /// Collects the stored terms of one total degree (may be empty).
    pub fn homogeneous_part(&self, degree: u32) -> HomogeneousPoly {
        let terms = self
            .terms
            .iter()
            .filter(|(a, _)| a.iter().sum::<u32>() == degree)
            .map(|(a, &c)| (a.clone(), c))
            .collect();
        HomogeneousPoly { dim: self.dim, degree, terms }
    }

    /// Degrees that carry at least one coefficient above `JET_COEFF_TOL`,
    /// ascending.
    fn significant_degrees(&self) -> Vec<u32> {
        let mut degs: Vec<u32> = Vec::new();
        for (alpha, &c) in &self.terms {
            if c.abs() <= JET_COEFF_TOL {
                continue;
            }
            let d: u32 = alpha.iter().sum();
            if !degs.contains(&d) {
                degs.push(d);
            }
        }
        degs.sort_unstable();
        degs
    }

    /// Minimal degree with a non-zero coefficient and the homogeneous
    /// polynomial collecting exactly those terms.
    pub fn first_nonzero_jet(&self) -> Result<(u32, HomogeneousPoly), GermError> {
        let degs = self.significant_degrees();
        match degs.first() {
            Some(&d) => Ok((d, self.homogeneous_part(d))),
            None => Err(GermError::NoJet),
        }
    }

    /// Next non-zero homogeneous part after the first, or `None` when the
    /// germ is homogeneous up to its truncation order.
    pub fn second_nonzero_jet(&self) -> Result<Option<(u32, HomogeneousPoly)>, GermError> {
        let degs = self.significant_degrees();
        if degs.is_empty() {
            return Err(GermError::NoJet);
        }
        Ok(degs.get(1).map(|&d| (d, self.homogeneous_part(d))))
    }

    /// Radial split anchored at the first non-zero jet degree.
    pub fn radial_split(&self) -> Result<RadialSplit, GermError> {
        let (d, _) = self.first_nonzero_jet()?;
        RadialSplit::anchored(self, d)
    }
}

impl HomogeneousPoly {
    pub fn zero(dim: usize, degree: u32) -> Self {
        Self { dim, degree, terms: BTreeMap::new() }
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn degree(&self) -> u32 {
        self.degree
    }

    pub fn is_zero(&self) -> bool {
        self.terms.is_empty()
    }

    pub fn terms(&self) -> impl Iterator<Item = (&[u32], f64)> {
        self.terms.iter().map(|(a, &c)| (a.as_slice(), c))
    }

    pub fn max_abs_coeff(&self) -> f64 {
        self.terms.values().fold(0.0, |m, c| m.max(c.abs()))
    }

    pub fn evaluate(&self, x: &[f64]) -> Result<f64, GermError> {
        check_dim(self.dim, x.len())?;
        Ok(self.terms.iter().map(|(a, &c)| c * monomial(a, x)).sum())
    }

    /// Componentwise formal derivative; each component is homogeneous of
    /// degree one less (degree-zero input gives zero polynomials).
    pub fn gradient(&self) -> Vec<HomogeneousPoly> {
        let out_degree = self.degree.saturating_sub(1);
        let mut out: Vec<HomogeneousPoly> =
            (0..self.dim).map(|_| HomogeneousPoly::zero(self.dim, out_degree)).collect();
        for (alpha, &c) in &self.terms {
            for i in 0..self.dim {
                let e = alpha[i];
                if e == 0 {
                    continue;
                }
                let mut beta = alpha.clone();
                beta[i] = e - 1;
                let entry = out[i].terms.entry(beta).or_insert(0.0);
                *entry += c * e as f64;
            }
        }
        for p in &mut out {
            p.terms.retain(|_, v| *v != 0.0);
        }
        out
    }

    /// Dense symmetric Hessian matrix evaluated at `x` (row-major).
    pub fn hessian_at(&self, x: &[f64]) -> Result<Vec<f64>, GermError> {
        check_dim(self.dim, x.len())?;
        let grad = self.gradient();
        let mut h = alloc::vec![0.0; self.dim * self.dim];
        for (i, gi) in grad.iter().enumerate() {
            let rows = gi.gradient();
            for (j, gij) in rows.iter().enumerate() {
                h[i * self.dim + j] = gij.evaluate(x)?;
            }
        }
        Ok(h)
    }

    pub fn scaled(&self, c: f64) -> Self {
        if c == 0.0 {
            return Self::zero(self.dim, self.degree);
        }
        let terms = self.terms.iter().map(|(a, &v)| (a.clone(), c * v)).collect();
        Self { dim: self.dim, degree: self.degree, terms }
    }

    pub fn to_germ(&self, trunc: u32) -> Result<AnalyticGerm, GermError> {
        AnalyticGerm::from_terms(self.dim, trunc.max(self.degree), self.terms.iter().map(|(a, &c)| (a.clone(), c)))
    }
}

impl RadialSplit {
    /// Splits a germ with no significant terms below degree `d` as
    /// `w(rq) = r^d base(q) + r^{d+1} sum_j r^j tail[j](q)`.
    ///
    /// Terms below `d` with magnitude within `JET_COEFF_TOL` are tolerated
    /// and ignored; genuinely non-zero ones are an error.
    pub fn anchored(germ: &AnalyticGerm, d: u32) -> Result<Self, GermError> {
        if let Some(&lowest) = germ.significant_degrees().first() {
            if lowest < d {
                return Err(GermError::TermsBelowSplitDegree { degree: d });
            }
        }
        let base = germ.homogeneous_part(d);
        let tail: Vec<HomogeneousPoly> =
            (d + 1..=germ.trunc).map(|k| germ.homogeneous_part(k)).collect();
        // Drop trailing all-zero parts but keep interior gaps.
        let mut tail = tail;
        while tail.last().is_some_and(|p| p.is_zero()) {
            tail.pop();
        }
        Ok(Self { base, tail })
    }

    pub fn base_degree(&self) -> u32 {
        self.base.degree()
    }

    pub fn base(&self) -> &HomogeneousPoly {
        &self.base
    }

    /// Homogeneous coefficients of `r^j` inside `w_{>d}`; `tail()[j]` has
    /// degree `d + 1 + j`.
    pub fn tail(&self) -> &[HomogeneousPoly] {
        &self.tail
    }

    pub fn eval_base(&self, q: &[f64]) -> Result<f64, GermError> {
        self.base.evaluate(q)
    }

    /// `w_{>d}(r, q) = sum_j r^j tail[j](q)` by Horner evaluation.
    pub fn eval_above(&self, r: f64, q: &[f64]) -> Result<f64, GermError> {
        let mut acc = 0.0;
        for p in self.tail.iter().rev() {
            acc = acc * r + p.evaluate(q)?;
        }
        Ok(acc)
    }

    /// `w_d(q) + r w_{>d}(r, q)`, i.e. `w(rq) / r^d` continued through `r = 0`.
    pub fn eval_series(&self, r: f64, q: &[f64]) -> Result<f64, GermError> {
        Ok(self.eval_base(q)? + r * self.eval_above(r, q)?)
    }

    /// `r^d w_d(q) + r^{d+1} w_{>d}(r, q)`; equals the germ at `x = rq`.
    pub fn reassemble(&self, r: f64, q: &[f64]) -> Result<f64, GermError> {
        Ok(r.powi(self.base.degree() as i32) * self.eval_series(r, q)?)
    }
}
