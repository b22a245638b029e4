//! Adaptive integration of the original and blown-up flows.
//!
//! A Dormand–Prince 5(4) embedded pair with PI step-size control drives both
//! flows; the blown-up integration renormalizes the sphere factor after
//! accepted steps and records the rescaled energy and the radial velocity
//! `nu` per sample. Cubic Hermite interpolation over accepted steps supports
//! event location (escape radii, fixed-point convergence) and the pointwise
//! flow-equivalence checks, and a derivative-corrected trapezoid rule
//! converts blown time `tau` back to original time `t` via
//! `dt = r^{1 - l/2} dtau`.

use alloc::string::String;
use alloc::vec::Vec;

#[allow(unused_imports)]
use num_traits::Float;

use crate::blowup::{BlownSystem, BlowupError, McGeheeState};
use crate::linalg;
use crate::system::{LagrangianSystem, PhaseState, SystemError};

/// Sphere drift beyond which the unit factor is renormalized after an
/// accepted step.
pub const SPHERE_DRIFT_TOL: f64 = 1e-10;

#[derive(Debug, Clone, PartialEq)]
pub struct IntegratorConfig {
    pub rtol: f64,
    pub atol: f64,
    pub max_step: f64,
    /// Length of the integration span (in `t` or `tau`).
    pub t_max: f64,
    pub max_steps: usize,
    /// Field norm below which a state counts as a fixed point.
    pub fixed_point_tol: f64,
    /// Consecutive accepted steps below `fixed_point_tol` before stopping.
    pub fixed_point_consecutive: usize,
    /// Absolute time tolerance for event bisection.
    pub event_tol: f64,
}

impl Default for IntegratorConfig {
    fn default() -> Self {
        Self {
            rtol: 1e-10,
            atol: 1e-12,
            max_step: 0.05,
            t_max: 50.0,
            max_steps: 5_000_000,
            fixed_point_tol: 1e-10,
            fixed_point_consecutive: 3,
            event_tol: 1e-12,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Termination {
    /// The requested span was exhausted.
    TimeOut,
    /// An accepted step left the domain ball.
    DomainExit,
    /// The field norm stayed below tolerance for consecutive steps.
    FixedPoint,
    /// The user event function crossed zero.
    Event,
}

/// One accepted integration sample.
#[derive(Debug, Clone, PartialEq)]
pub struct Sample {
    pub t: f64,
    pub state: Vec<f64>,
    /// `H` along original trajectories, `Ht` along blown ones.
    pub energy: f64,
    /// Radial velocity `nu`, recorded for blown trajectories.
    pub nu: Option<f64>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Trajectory {
    pub samples: Vec<Sample>,
    pub termination: Termination,
    /// Field values at the samples, kept for Hermite interpolation.
    pub(crate) derivs: Vec<Vec<f64>>,
}

impl Trajectory {
    pub fn first(&self) -> &Sample {
        self.samples.first().expect("non-empty trajectory")
    }

    pub fn last(&self) -> &Sample {
        self.samples.last().expect("non-empty trajectory")
    }

    /// Cubic Hermite interpolation of the state at time `t`, `None` outside
    /// the sampled span.
    pub fn interpolate(&self, t: f64) -> Option<Vec<f64>> {
        let ts: Vec<f64> = self.samples.iter().map(|s| s.t).collect();
        if self.samples.is_empty() || t < ts[0] || t > *ts.last().unwrap() {
            return None;
        }
        let idx = match ts.binary_search_by(|x| x.partial_cmp(&t).unwrap()) {
            Ok(i) => return Some(self.samples[i].state.clone()),
            Err(i) => i - 1,
        };
        let (s0, s1) = (&self.samples[idx], &self.samples[idx + 1]);
        Some(hermite(
            s0.t,
            &s0.state,
            &self.derivs[idx],
            s1.t,
            &s1.state,
            &self.derivs[idx + 1],
            t,
        ))
    }

    pub(crate) fn from_parts(
        samples: Vec<Sample>,
        derivs: Vec<Vec<f64>>,
        termination: Termination,
    ) -> Self {
        Self { samples, termination, derivs }
    }
}

#[derive(Debug, thiserror::Error)]
pub enum IntegrateError {
    #[error("step size underflow at t = {t}: the problem looks stiff at this state")]
    Stiffness { t: f64, partial: Trajectory },
    #[error("step budget exhausted at t = {t}")]
    StepBudget { t: f64, partial: Trajectory },
    #[error("field evaluation failed: {source}")]
    Field {
        source: SystemError,
        partial: Trajectory,
    },
    #[error("precondition violated: {0}")]
    Precondition(String),
    #[error(transparent)]
    System(#[from] SystemError),
    #[error(transparent)]
    Blowup(#[from] BlowupError),
}

fn hermite(
    t0: f64,
    y0: &[f64],
    f0: &[f64],
    t1: f64,
    y1: &[f64],
    f1: &[f64],
    t: f64,
) -> Vec<f64> {
    let h = t1 - t0;
    let s = (t - t0) / h;
    let h00 = (1.0 + 2.0 * s) * (1.0 - s) * (1.0 - s);
    let h10 = s * (1.0 - s) * (1.0 - s);
    let h01 = s * s * (3.0 - 2.0 * s);
    let h11 = s * s * (s - 1.0);
    (0..y0.len())
        .map(|i| h00 * y0[i] + h * h10 * f0[i] + h01 * y1[i] + h * h11 * f1[i])
        .collect()
}

// Dormand-Prince 5(4) tableau (autonomous fields, stage times unused).
const A: [[f64; 6]; 6] = [
    [1.0 / 5.0, 0.0, 0.0, 0.0, 0.0, 0.0],
    [3.0 / 40.0, 9.0 / 40.0, 0.0, 0.0, 0.0, 0.0],
    [44.0 / 45.0, -56.0 / 15.0, 32.0 / 9.0, 0.0, 0.0, 0.0],
    [19372.0 / 6561.0, -25360.0 / 2187.0, 64448.0 / 6561.0, -212.0 / 729.0, 0.0, 0.0],
    [9017.0 / 3168.0, -355.0 / 33.0, 46732.0 / 5247.0, 49.0 / 176.0, -5103.0 / 18656.0, 0.0],
    [35.0 / 384.0, 0.0, 500.0 / 1113.0, 125.0 / 192.0, -2187.0 / 6784.0, 11.0 / 84.0],
];
const B5: [f64; 7] =
    [35.0 / 384.0, 0.0, 500.0 / 1113.0, 125.0 / 192.0, -2187.0 / 6784.0, 11.0 / 84.0, 0.0];
const B4: [f64; 7] = [
    5179.0 / 57600.0,
    0.0,
    7571.0 / 16695.0,
    393.0 / 640.0,
    -92097.0 / 339200.0,
    187.0 / 2100.0,
    1.0 / 40.0,
];

struct DriveSpec<'a> {
    rhs: &'a dyn Fn(&[f64], &mut [f64]) -> Result<(), SystemError>,
    /// Post-step renormalization hook (sphere factor).
    normalize: Option<&'a dyn Fn(&mut [f64])>,
    in_domain: &'a dyn Fn(&[f64]) -> bool,
    event: Option<&'a dyn Fn(f64, &[f64]) -> f64>,
}

struct Raw {
    ts: Vec<f64>,
    states: Vec<Vec<f64>>,
    derivs: Vec<Vec<f64>>,
    termination: Termination,
}

fn weighted_error(e: &[f64], y0: &[f64], y1: &[f64], rtol: f64, atol: f64) -> f64 {
    let mut acc = 0.0;
    for i in 0..e.len() {
        let sc = atol + rtol * y0[i].abs().max(y1[i].abs());
        let q = e[i] / sc;
        acc += q * q;
    }
    (acc / e.len() as f64).sqrt()
}

/// Forward driver over the unit-direction span `[0, span]`, `span > 0`.
fn drive(spec: &DriveSpec<'_>, y0: &[f64], span: f64, cfg: &IntegratorConfig) -> Result<Raw, IntegrateError> {
    let dim = y0.len();
    let mut y = y0.to_vec();
    if let Some(nrm) = spec.normalize {
        nrm(&mut y);
    }
    let mut t = 0.0f64;
    let mut f = alloc::vec![0.0; dim];
    let partial = |ts: Vec<f64>, states: Vec<Vec<f64>>, derivs: Vec<Vec<f64>>| {
        Raw { ts, states, derivs, termination: Termination::TimeOut }
    };
    let to_err = |raw: Raw| Trajectory::from_parts(
        raw.ts
            .iter()
            .zip(&raw.states)
            .map(|(&t, s)| Sample { t, state: s.clone(), energy: 0.0, nu: None })
            .collect(),
        raw.derivs.clone(),
        raw.termination,
    );

    if let Err(source) = (spec.rhs)(&y, &mut f) {
        return Err(IntegrateError::Field {
            source,
            partial: to_err(partial(alloc::vec![], alloc::vec![], alloc::vec![])),
        });
    }

    let mut ts = alloc::vec![t];
    let mut states = alloc::vec![y.clone()];
    let mut derivs = alloc::vec![f.clone()];

    let g0 = spec.event.map(|e| e(t, &y));

    // Initial step from the magnitude heuristic.
    let d0 = linalg::norm(&y) + 1e-6;
    let d1 = linalg::norm(&f) + 1e-6;
    let mut h = (0.01 * d0 / d1).min(cfg.max_step).min(span);

    let mut err_prev: f64 = 1e-2;
    let mut g_prev = g0;
    let mut fp_streak = 0usize;
    let mut k = alloc::vec![alloc::vec![0.0; dim]; 7];
    let mut steps = 0usize;

    loop {
        if t >= span {
            return Ok(Raw { ts, states, derivs, termination: Termination::TimeOut });
        }
        steps += 1;
        if steps > cfg.max_steps {
            let raw = partial(ts, states, derivs);
            return Err(IntegrateError::StepBudget { t, partial: to_err(raw) });
        }
        h = h.min(span - t).min(cfg.max_step);
        if h < 1e-14 * (1.0 + t.abs()) {
            let raw = partial(ts, states, derivs);
            return Err(IntegrateError::Stiffness { t, partial: to_err(raw) });
        }

        k[0].copy_from_slice(&f);
        let mut stage_fail = None;
        let mut ytmp = alloc::vec![0.0; dim];
        for s in 1..7 {
            for i in 0..dim {
                let mut acc = 0.0;
                for (j, kj) in k.iter().enumerate().take(s) {
                    let a = A[s - 1][j];
                    if a != 0.0 {
                        acc += a * kj[i];
                    }
                }
                ytmp[i] = y[i] + h * acc;
            }
            let (head, tail) = k.split_at_mut(s);
            let _ = head;
            if let Err(e) = (spec.rhs)(&ytmp, &mut tail[0]) {
                stage_fail = Some(e);
                break;
            }
        }
        if let Some(source) = stage_fail {
            let raw = partial(ts, states, derivs);
            return Err(IntegrateError::Field { source, partial: to_err(raw) });
        }

        let mut y1 = alloc::vec![0.0; dim];
        let mut e = alloc::vec![0.0; dim];
        for i in 0..dim {
            let mut acc5 = 0.0;
            let mut acc4 = 0.0;
            for (j, kj) in k.iter().enumerate() {
                acc5 += B5[j] * kj[i];
                acc4 += B4[j] * kj[i];
            }
            y1[i] = y[i] + h * acc5;
            e[i] = h * (acc5 - acc4);
        }
        let _ = C; // stage times are not needed for autonomous fields

        let err = weighted_error(&e, &y, &y1, cfg.rtol, cfg.atol);
        if err <= 1.0 {
            let t1 = t + h;
            // FSAL: stage 7 is the field at y1, unless renormalization moved it.
            let mut f1 = k[6].clone();
            if let Some(nrm) = spec.normalize {
                let before = y1.clone();
                nrm(&mut y1);
                if y1 != before {
                    if let Err(source) = (spec.rhs)(&y1, &mut f1) {
                        let raw = partial(ts, states, derivs);
                        return Err(IntegrateError::Field { source, partial: to_err(raw) });
                    }
                }
            }

            if let (Some(event), Some(gp)) = (spec.event, g_prev) {
                let g1 = event(t1, &y1);
                if (gp < 0.0 && g1 >= 0.0) || (gp > 0.0 && g1 <= 0.0) {
                    let (te, ye) = locate_event(event, t, &y, &f, t1, &y1, &f1, cfg.event_tol);
                    let mut fe = alloc::vec![0.0; dim];
                    let _ = (spec.rhs)(&ye, &mut fe);
                    ts.push(te);
                    states.push(ye);
                    derivs.push(fe);
                    return Ok(Raw { ts, states, derivs, termination: Termination::Event });
                }
                g_prev = Some(g1);
            }

            if !(spec.in_domain)(&y1) {
                return Ok(Raw { ts, states, derivs, termination: Termination::DomainExit });
            }

            t = t1;
            y.copy_from_slice(&y1);
            f.copy_from_slice(&f1);
            ts.push(t);
            states.push(y.clone());
            derivs.push(f.clone());

            if linalg::norm(&f) < cfg.fixed_point_tol {
                fp_streak += 1;
                if fp_streak >= cfg.fixed_point_consecutive {
                    return Ok(Raw { ts, states, derivs, termination: Termination::FixedPoint });
                }
            } else {
                fp_streak = 0;
            }

            // PI step controller.
            let fac = if err == 0.0 {
                5.0
            } else {
                (0.9 * err.powf(-0.17) * err_prev.powf(0.04)).clamp(0.2, 5.0)
            };
            err_prev = err.max(1e-4);
            h *= fac;
        } else {
            let fac = (0.9 * err.powf(-0.2)).clamp(0.1, 1.0);
            h *= fac;
        }
    }
}

#[allow(clippy::too_many_arguments)]
fn locate_event(
    event: &dyn Fn(f64, &[f64]) -> f64,
    t0: f64,
    y0: &[f64],
    f0: &[f64],
    t1: f64,
    y1: &[f64],
    f1: &[f64],
    tol: f64,
) -> (f64, Vec<f64>) {
    let mut a = t0;
    let mut b = t1;
    let ga = event(t0, y0);
    let mut sign_a = ga.signum();
    for _ in 0..200 {
        if (b - a).abs() <= tol.max(1e-15 * (1.0 + b.abs())) {
            break;
        }
        let m = 0.5 * (a + b);
        let ym = hermite(t0, y0, f0, t1, y1, f1, m);
        let gm = event(m, &ym);
        if gm.signum() == sign_a && gm != 0.0 {
            a = m;
            sign_a = gm.signum();
        } else {
            b = m;
        }
    }
    let te = 0.5 * (a + b);
    (te, hermite(t0, y0, f0, t1, y1, f1, te))
}

/// Runs `drive` over a signed span by integrating the negated field for
/// negative spans and mirroring the sample times, so the returned times are
/// strictly increasing either way.
fn drive_signed(
    spec: &DriveSpec<'_>,
    y0: &[f64],
    span: f64,
    cfg: &IntegratorConfig,
) -> Result<Raw, IntegrateError> {
    if span >= 0.0 {
        return drive(spec, y0, span, cfg);
    }
    let neg_rhs = |y: &[f64], out: &mut [f64]| -> Result<(), SystemError> {
        (spec.rhs)(y, out)?;
        for v in out.iter_mut() {
            *v = -*v;
        }
        Ok(())
    };
    let neg_event_holder = spec.event.map(|e| move |t: f64, y: &[f64]| e(-t, y));
    let neg_spec = DriveSpec {
        rhs: &neg_rhs,
        normalize: spec.normalize,
        in_domain: spec.in_domain,
        event: neg_event_holder.as_ref().map(|e| e as &dyn Fn(f64, &[f64]) -> f64),
    };
    let mut raw = drive(&neg_spec, y0, -span, cfg)?;
    raw.ts.iter_mut().for_each(|t| *t = -*t);
    raw.ts.reverse();
    raw.states.reverse();
    raw.derivs.reverse();
    for d in raw.derivs.iter_mut() {
        for v in d.iter_mut() {
            *v = -*v;
        }
    }
    Ok(raw)
}

fn original_trajectory(sys: &LagrangianSystem, raw: Raw) -> Result<Trajectory, IntegrateError> {
    let n = sys.dim();
    let mut samples = Vec::with_capacity(raw.ts.len());
    for (t, state) in raw.ts.iter().zip(&raw.states) {
        let energy = sys.energy_unchecked(&state[..n], &state[n..])?;
        samples.push(Sample { t: *t, state: state.clone(), energy, nu: None });
    }
    Ok(Trajectory::from_parts(samples, raw.derivs, raw.termination))
}

fn blown_trajectory(bs: &BlownSystem, raw: Raw) -> Result<Trajectory, IntegrateError> {
    let n = bs.system().dim();
    let mut samples = Vec::with_capacity(raw.ts.len());
    for (t, state) in raw.ts.iter().zip(&raw.states) {
        let (r, q, y) = (state[0], &state[1..1 + n], &state[1 + n..]);
        let energy = bs.rescaled_energy_unchecked(r, q, y)?;
        let nu = linalg::dot(q, y);
        samples.push(Sample { t: *t, state: state.clone(), energy, nu: Some(nu) });
    }
    Ok(Trajectory::from_parts(samples, raw.derivs, raw.termination))
}

/// Integrates the original flow from `s0` over `[0, cfg.t_max]`.
pub fn integrate_original(
    sys: &LagrangianSystem,
    s0: &PhaseState,
    cfg: &IntegratorConfig,
) -> Result<Trajectory, IntegrateError> {
    integrate_original_span(sys, s0, cfg, cfg.t_max)
}

/// Signed-span variant; negative spans integrate backward in time.
pub fn integrate_original_span(
    sys: &LagrangianSystem,
    s0: &PhaseState,
    cfg: &IntegratorConfig,
    span: f64,
) -> Result<Trajectory, IntegrateError> {
    let n = sys.dim();
    let norm_x = linalg::norm(&s0.x);
    if norm_x >= sys.domain_radius() {
        return Err(IntegrateError::Precondition(alloc::format!(
            "initial |x| = {norm_x} outside the domain ball r_e = {}",
            sys.domain_radius()
        )));
    }
    let rhs = |y: &[f64], out: &mut [f64]| -> Result<(), SystemError> {
        let (xdot, vdot) = sys.original_field_unchecked(&y[..n], &y[n..])?;
        out[..n].copy_from_slice(&xdot);
        out[n..].copy_from_slice(&vdot);
        Ok(())
    };
    let in_domain = |y: &[f64]| linalg::norm(&y[..n]) < sys.domain_radius();
    let spec = DriveSpec { rhs: &rhs, normalize: None, in_domain: &in_domain, event: None };
    let mut y0 = s0.x.clone();
    y0.extend_from_slice(&s0.v);
    let raw = drive_signed(&spec, &y0, span, cfg)?;
    original_trajectory(sys, raw)
}

/// Integrates the blown-up flow from `z0` over `[0, cfg.t_max]` in `tau`.
pub fn integrate_blown(
    bs: &BlownSystem,
    z0: &McGeheeState,
    cfg: &IntegratorConfig,
) -> Result<Trajectory, IntegrateError> {
    integrate_blown_span(bs, z0, cfg, cfg.t_max)
}

/// Signed-span variant of [`integrate_blown`].
pub fn integrate_blown_span(
    bs: &BlownSystem,
    z0: &McGeheeState,
    cfg: &IntegratorConfig,
    span: f64,
) -> Result<Trajectory, IntegrateError> {
    integrate_blown_event(bs, z0, cfg, span, None)
}

/// Blown-up integration with an optional terminating event function.
pub fn integrate_blown_event(
    bs: &BlownSystem,
    z0: &McGeheeState,
    cfg: &IntegratorConfig,
    span: f64,
    event: Option<&dyn Fn(f64, &[f64]) -> f64>,
) -> Result<Trajectory, IntegrateError> {
    let n = bs.system().dim();
    if z0.r.abs() >= bs.domain_radius() {
        return Err(IntegrateError::Precondition(alloc::format!(
            "initial |r| = {} outside the domain ball r_e = {}",
            z0.r.abs(),
            bs.domain_radius()
        )));
    }
    let rhs = |y: &[f64], out: &mut [f64]| -> Result<(), SystemError> {
        let (rdot, qdot, ydot) = bs
            .blown_field_unchecked(y[0], &y[1..1 + n], &y[1 + n..])
            .map_err(|e| match e {
                BlowupError::System(s) => s,
                other => SystemError::Germ(match other {
                    BlowupError::Germ(g) => g,
                    _ => unreachable!("unchecked blown field fails only through system or germ"),
                }),
            })?;
        out[0] = rdot;
        out[1..1 + n].copy_from_slice(&qdot);
        out[1 + n..].copy_from_slice(&ydot);
        Ok(())
    };
    let normalize = |y: &mut [f64]| {
        let qn = linalg::norm(&y[1..1 + n]);
        if (qn - 1.0).abs() > SPHERE_DRIFT_TOL && qn > 0.0 {
            for v in y[1..1 + n].iter_mut() {
                *v /= qn;
            }
        }
    };
    let in_domain = |y: &[f64]| y[0].abs() < bs.domain_radius();
    let spec =
        DriveSpec { rhs: &rhs, normalize: Some(&normalize), in_domain: &in_domain, event };
    let raw = drive_signed(&spec, &z0.to_flat(), span, cfg)?;
    blown_trajectory(bs, raw)
}

/// First time `|x(t)| >= r_b`, or `None` when the orbit neither escapes nor
/// stops within the configured span.
///
/// Total instability quantifies over subcritical states, so `H(s0) < 0` is a
/// precondition.
pub fn escape_time(
    sys: &LagrangianSystem,
    s0: &PhaseState,
    r_b: f64,
    cfg: &IntegratorConfig,
) -> Result<Option<f64>, IntegrateError> {
    let h = sys.energy(s0)?;
    if h >= 0.0 {
        return Err(IntegrateError::Precondition(alloc::format!(
            "escape time requires a subcritical start, H = {h} >= 0"
        )));
    }
    if !(r_b > linalg::norm(&s0.x) && r_b < sys.domain_radius()) {
        return Err(IntegrateError::Precondition(alloc::format!(
            "need |x0| < r_b < r_e, got |x0| = {}, r_b = {r_b}, r_e = {}",
            linalg::norm(&s0.x),
            sys.domain_radius()
        )));
    }
    let n = sys.dim();
    let rhs = |y: &[f64], out: &mut [f64]| -> Result<(), SystemError> {
        let (xdot, vdot) = sys.original_field_unchecked(&y[..n], &y[n..])?;
        out[..n].copy_from_slice(&xdot);
        out[n..].copy_from_slice(&vdot);
        Ok(())
    };
    let in_domain = |y: &[f64]| linalg::norm(&y[..n]) < sys.domain_radius();
    let event = |_t: f64, y: &[f64]| linalg::norm(&y[..n]) - r_b;
    let spec = DriveSpec {
        rhs: &rhs,
        normalize: None,
        in_domain: &in_domain,
        event: Some(&event),
    };
    let mut y0 = s0.x.clone();
    y0.extend_from_slice(&s0.v);
    let raw = drive(&spec, &y0, cfg.t_max, cfg)?;
    match raw.termination {
        Termination::Event => Ok(Some(*raw.ts.last().expect("event sample recorded"))),
        _ => Ok(None),
    }
}

/// Cumulative original time along an interior blown trajectory:
/// `(t_i, tau_i)` pairs from quadrature of `dt = r^{1 - l/2} dtau`.
///
/// The quadrature is a trapezoid rule with the endpoint-derivative
/// correction `h^2/12 (phi'_0 - phi'_1)` per step; the integrand derivative
/// `phi' = (1 - l/2) nu r^{1 - l/2}` comes from the recorded field values,
/// so the rule stays fourth-order against the integrator's own samples.
pub fn reparametrize_time(
    bs: &BlownSystem,
    traj: &Trajectory,
) -> Result<Vec<(f64, f64)>, IntegrateError> {
    let l = bs.jet_degree() as f64;
    let expo = 1.0 - l / 2.0;
    let mut out = Vec::with_capacity(traj.samples.len());
    let mut t = 0.0f64;
    for (i, s) in traj.samples.iter().enumerate() {
        let r = s.state[0];
        if r <= 0.0 {
            return Err(IntegrateError::Precondition(alloc::format!(
                "time reparametrization needs r > 0 throughout, got r = {r} at tau = {}",
                s.t
            )));
        }
        if i > 0 {
            let prev = &traj.samples[i - 1];
            let h = s.t - prev.t;
            let phi0 = prev.state[0].powf(expo);
            let phi1 = r.powf(expo);
            let dphi0 = expo * traj.derivs[i - 1][0] * prev.state[0].powf(expo - 1.0);
            let dphi1 = expo * traj.derivs[i][0] * r.powf(expo - 1.0);
            t += 0.5 * h * (phi0 + phi1) + h * h / 12.0 * (dphi0 - dphi1);
        }
        out.push((t, s.t));
    }
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::germ::AnalyticGerm;
    use approx::assert_abs_diff_eq;

    fn pendulum() -> LagrangianSystem {
        let u = AnalyticGerm::from_terms(
            1,
            8,
            [
                (alloc::vec![2], -0.5),
                (alloc::vec![4], 1.0 / 24.0),
                (alloc::vec![6], -1.0 / 720.0),
                (alloc::vec![8], 1.0 / 40320.0),
            ],
        )
        .unwrap();
        LagrangianSystem::newtonian(u, 6.0).unwrap()
    }

    fn quartic() -> LagrangianSystem {
        let u = AnalyticGerm::from_terms(
            2,
            6,
            [(alloc::vec![0, 2], 1.0), (alloc::vec![4, 0], -1.0)],
        )
        .unwrap();
        LagrangianSystem::newtonian(u, 1.5).unwrap()
    }

    #[test]
    fn pendulum_conserves_energy() {
        let sys = pendulum();
        let s0 = PhaseState::new(alloc::vec![3.0], alloc::vec![0.0]);
        let h0 = sys.energy(&s0).unwrap();
        assert!(h0 < 0.0);
        let cfg = IntegratorConfig { t_max: 40.0, ..Default::default() };
        let traj = integrate_original(&sys, &s0, &cfg).unwrap();
        assert_eq!(traj.termination, Termination::TimeOut);
        let drift = traj
            .samples
            .iter()
            .map(|s| (s.energy - h0).abs())
            .fold(0.0f64, f64::max);
        assert!(drift <= 1e-8 * (1.0 + h0.abs()), "energy drift {drift}");
    }

    #[test]
    fn equilibrium_start_is_constant() {
        let sys = quartic();
        let s0 = PhaseState::new(alloc::vec![0.0, 0.0], alloc::vec![0.0, 0.0]);
        let traj = integrate_original(&sys, &s0, &IntegratorConfig::default()).unwrap();
        assert_eq!(traj.termination, Termination::FixedPoint);
        for s in &traj.samples {
            assert!(linalg::norm(&s.state) == 0.0);
        }
    }

    #[test]
    fn quartic_subcritical_orbit_exits_domain() {
        let sys = quartic();
        let s0 = PhaseState::new(alloc::vec![0.2, 0.0], alloc::vec![0.0, 0.0]);
        assert!(sys.energy(&s0).unwrap() < 0.0);
        let cfg = IntegratorConfig { t_max: 100.0, ..Default::default() };
        let traj = integrate_original(&sys, &s0, &cfg).unwrap();
        assert_eq!(traj.termination, Termination::DomainExit);
    }

    #[test]
    fn escape_time_examples() {
        let sys = quartic();
        let cfg = IntegratorConfig { t_max: 100.0, ..Default::default() };
        let s0 = PhaseState::new(alloc::vec![0.1, 0.0], alloc::vec![0.0, 0.0]);
        let t = escape_time(&sys, &s0, 1.0, &cfg).unwrap();
        assert!(t.is_some());

        // Strict-minimum potentials have no subcritical states at all.
        let u = AnalyticGerm::from_terms(2, 4, [(alloc::vec![2, 0], 1.0), (alloc::vec![0, 2], 1.0)])
            .unwrap();
        let stable = LagrangianSystem::newtonian(u, 1.0).unwrap();
        let s0 = PhaseState::new(alloc::vec![0.1, 0.0], alloc::vec![0.0, 0.0]);
        assert!(matches!(
            escape_time(&stable, &s0, 0.5, &cfg),
            Err(IntegrateError::Precondition(_))
        ));
    }

    #[test]
    fn escape_time_decreases_with_deeper_energy() {
        // Same direction, v = 0, deeper |H| means a start farther out, which
        // escapes sooner.
        let sys = quartic();
        let cfg = IntegratorConfig { t_max: 200.0, ..Default::default() };
        let mut times = alloc::vec![];
        for r0 in [0.05, 0.1, 0.2] {
            let s0 = PhaseState::new(alloc::vec![r0, 0.0], alloc::vec![0.0, 0.0]);
            times.push(escape_time(&sys, &s0, 1.0, &cfg).unwrap().unwrap());
        }
        assert!(times[0] >= times[1] && times[1] >= times[2], "{times:?}");
    }

    #[test]
    fn blown_boundary_stays_on_boundary() {
        let u = AnalyticGerm::from_terms(2, 4, [(alloc::vec![2, 0], -1.0), (alloc::vec![0, 2], 1.0)])
            .unwrap();
        let bs = BlownSystem::new(LagrangianSystem::newtonian(u, 1.5).unwrap()).unwrap();
        let z0 = McGeheeState::new(0.0, alloc::vec![0.6, 0.8], alloc::vec![0.1, -0.2]);
        let cfg = IntegratorConfig { t_max: 8.0, ..Default::default() };
        let traj = integrate_blown(&bs, &z0, &cfg).unwrap();
        for s in &traj.samples {
            assert!(s.state[0].abs() <= 1e-14, "r drifted to {}", s.state[0]);
            let qn = linalg::norm(&s.state[1..3]);
            assert!((qn - 1.0).abs() <= 1e-10);
        }
    }

    #[test]
    fn nu_monotone_on_subcritical_boundary() {
        let u = AnalyticGerm::from_terms(2, 4, [(alloc::vec![2, 0], -1.0), (alloc::vec![0, 2], 1.0)])
            .unwrap();
        let bs = BlownSystem::new(LagrangianSystem::newtonian(u, 1.5).unwrap()).unwrap();
        let z0 = McGeheeState::new(0.0, alloc::vec![1.0, 0.0], alloc::vec![0.0, 0.0]);
        assert!(bs.rescaled_energy(&z0).unwrap() < 0.0);
        let cfg = IntegratorConfig { t_max: 12.0, ..Default::default() };
        let traj = integrate_blown(&bs, &z0, &cfg).unwrap();
        let mut prev = f64::NEG_INFINITY;
        for s in &traj.samples {
            let nu = s.nu.unwrap();
            assert!(nu >= prev - 1e-9, "nu decreased: {prev} -> {nu}");
            prev = nu;
        }
    }

    #[test]
    fn fixed_point_start_is_constant_blown() {
        let u = AnalyticGerm::from_terms(2, 4, [(alloc::vec![2, 0], -1.0), (alloc::vec![0, 2], 1.0)])
            .unwrap();
        let bs = BlownSystem::new(LagrangianSystem::newtonian(u, 1.5).unwrap()).unwrap();
        let nu = 2.0f64.sqrt();
        let z0 = McGeheeState::new(0.0, alloc::vec![1.0, 0.0], alloc::vec![nu, 0.0]);
        let traj = integrate_blown(&bs, &z0, &IntegratorConfig::default()).unwrap();
        assert_eq!(traj.termination, Termination::FixedPoint);
    }

    #[test]
    fn reparametrize_is_identity_for_degree_two() {
        let u = AnalyticGerm::from_terms(2, 4, [(alloc::vec![2, 0], -1.0), (alloc::vec![0, 2], 1.0)])
            .unwrap();
        let bs = BlownSystem::new(LagrangianSystem::newtonian(u, 1.5).unwrap()).unwrap();
        let z0 = McGeheeState::new(0.3, alloc::vec![1.0, 0.0], alloc::vec![0.2, 0.1]);
        let cfg = IntegratorConfig { t_max: 1.0, ..Default::default() };
        let traj = integrate_blown(&bs, &z0, &cfg).unwrap();
        for (t, tau) in reparametrize_time(&bs, &traj).unwrap() {
            assert_abs_diff_eq!(t, tau, epsilon = 1e-12);
        }
    }

    #[test]
    fn reparametrize_constant_radius_degree_four() {
        // Synthetic trajectory with constant r = 0.5 under l = 4:
        // dt = r^{-1} dtau, so t = 2 tau.
        let u = AnalyticGerm::from_terms(2, 6, [(alloc::vec![4, 0], -1.0), (alloc::vec![0, 4], 1.0)])
            .unwrap();
        let bs = BlownSystem::new(LagrangianSystem::newtonian(u, 1.5).unwrap()).unwrap();
        let mk = |tau: f64| Sample {
            t: tau,
            state: alloc::vec![0.5, 1.0, 0.0, 0.0, 0.0],
            energy: 0.0,
            nu: Some(0.0),
        };
        let taus = [0.0, 0.25, 0.5, 1.0, 1.75];
        let traj = Trajectory::from_parts(
            taus.iter().map(|&t| mk(t)).collect(),
            taus.iter().map(|_| alloc::vec![0.0; 5]).collect(),
            Termination::TimeOut,
        );
        for (t, tau) in reparametrize_time(&bs, &traj).unwrap() {
            assert_abs_diff_eq!(t, 2.0 * tau, epsilon = 1e-13);
        }
    }

    #[test]
    fn backward_integration_mirrors_forward_for_rest_starts() {
        // Mechanical reversibility: from v = 0 the backward orbit is the
        // forward orbit with velocities flipped.
        let sys = pendulum();
        let s0 = PhaseState::new(alloc::vec![0.5], alloc::vec![0.0]);
        let cfg = IntegratorConfig { t_max: 3.0, ..Default::default() };
        let fwd = integrate_original_span(&sys, &s0, &cfg, 3.0).unwrap();
        let bwd = integrate_original_span(&sys, &s0, &cfg, -3.0).unwrap();
        assert_eq!(fwd.samples.len(), bwd.samples.len());
        for (f, b) in fwd.samples.iter().zip(bwd.samples.iter().rev()) {
            assert_abs_diff_eq!(f.t, -b.t, epsilon = 1e-13);
            assert_abs_diff_eq!(f.state[0], b.state[0], epsilon = 1e-8);
            assert_abs_diff_eq!(f.state[1], -b.state[1], epsilon = 1e-8);
        }
    }

    #[test]
    fn interpolation_matches_samples_and_is_smooth() {
        let sys = pendulum();
        let s0 = PhaseState::new(alloc::vec![1.0], alloc::vec![0.3]);
        let cfg = IntegratorConfig { t_max: 2.0, ..Default::default() };
        let traj = integrate_original(&sys, &s0, &cfg).unwrap();
        let s = &traj.samples[3];
        let at = traj.interpolate(s.t).unwrap();
        assert_abs_diff_eq!(at[0], s.state[0], epsilon = 1e-14);
        // Between samples the interpolant stays close to a fresh integration.
        let tmid = 0.5 * (traj.samples[3].t + traj.samples[4].t);
        let fine = integrate_original_span(&sys, &s0, &cfg, tmid).unwrap();
        let interp = traj.interpolate(tmid).unwrap();
        assert_abs_diff_eq!(interp[0], fine.last().state[0], epsilon = 1e-9);
        assert_abs_diff_eq!(interp[1], fine.last().state[1], epsilon = 1e-9);
    }
}
