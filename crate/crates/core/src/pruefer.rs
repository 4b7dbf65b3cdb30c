//! Prüfer-angle integration for `-(p u')' + q u = lambda r u`.
//!
//! With `u = rho sin(theta)`, `p u' = rho cos(theta)`:
//!
//! ```text
//! theta'   = cos^2(theta) / p - (q - lambda r) sin^2(theta)
//! log rho' = (1/p + q - lambda r) sin(theta) cos(theta)
//! ```
//!
//! The angle is integrated as a continuous lift with a Dormand–Prince 5(4)
//! pair; every accepted step moves `theta` by at most `pi/2`, and crossings of
//! multiples of `pi` are located on the dense output.

use std::f64::consts::{FRAC_PI_2, PI};
use std::fmt::Write as _;
use std::sync::Arc;

use serde::{Deserialize, Serialize};

use crate::coeffs::{CoefficientSet, FamilyDocument};
use crate::count::Snap;
use crate::error::{Error, Result};

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct Tolerances {
    pub rtol: f64,
    pub atol: f64,
}

impl Default for Tolerances {
    fn default() -> Self {
        Tolerances { rtol: 1e-9, atol: 1e-12 }
    }
}

impl Tolerances {
    pub fn new(rtol: f64, atol: f64) -> Result<Self> {
        if !(rtol > 0.0 && atol > 0.0 && rtol.is_finite() && atol.is_finite()) {
            return Err(Error::Precondition(format!("tolerances must be positive, got rtol={rtol}, atol={atol}")));
        }
        Ok(Tolerances { rtol, atol })
    }

    pub fn scaled(&self, factor: f64) -> Self {
        Tolerances { rtol: self.rtol * factor, atol: self.atol * factor }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct PrueferOptions {
    pub tol: Tolerances,
    pub snap: Snap,
    pub max_steps: usize,
    /// Optional cap on the step length in x.
    pub max_step: Option<f64>,
}

impl Default for PrueferOptions {
    fn default() -> Self {
        PrueferOptions { tol: Tolerances::default(), snap: Snap::default(), max_steps: 5_000_000, max_step: None }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct PrueferState {
    pub x: f64,
    pub theta: f64,
    pub log_rho: f64,
}

/// Dense-output polynomial for one accepted step.
#[derive(Clone, Copy, Debug)]
struct Segment {
    x0: f64,
    h: f64,
    rc: [[f64; 2]; 5],
}

impl Segment {
    fn eval(&self, x: f64) -> [f64; 2] {
        let s = ((x - self.x0) / self.h).clamp(0.0, 1.0);
        let s1 = 1.0 - s;
        let mut out = [0.0; 2];
        for (i, o) in out.iter_mut().enumerate() {
            let r = &self.rc;
            *o = r[0][i] + s * (r[1][i] + s1 * (r[2][i] + s * (r[3][i] + s1 * r[4][i])));
        }
        out
    }
}

/// A solution of `(tau - lambda) u = 0` in Prüfer form.
#[derive(Clone, Debug, Serialize)]
pub struct SolutionTrace {
    pub lambda: f64,
    #[serde(serialize_with = "serialize_doc")]
    pub coefficients: Arc<CoefficientSet>,
    pub theta_a: f64,
    pub states: Vec<PrueferState>,
    pub tolerances: Tolerances,
    pub snap: Snap,
    /// x where the lift crosses a multiple of pi (upwards), strictly above `theta_a`.
    pub events: Vec<f64>,
    /// Sum of accepted local error estimates for `theta`.
    pub error_estimate: f64,
    #[serde(skip)]
    segments: Vec<Segment>,
}

fn serialize_doc<S: serde::Serializer>(c: &Arc<CoefficientSet>, s: S) -> std::result::Result<S::Ok, S::Error> {
    let doc: FamilyDocument = c.document();
    doc.serialize(s)
}

// Dormand–Prince 5(4) tableau.
const C: [f64; 7] = [0.0, 1.0 / 5.0, 3.0 / 10.0, 4.0 / 5.0, 8.0 / 9.0, 1.0, 1.0];
const A: [[f64; 6]; 7] = [
    [0.0; 6],
    [1.0 / 5.0, 0.0, 0.0, 0.0, 0.0, 0.0],
    [3.0 / 40.0, 9.0 / 40.0, 0.0, 0.0, 0.0, 0.0],
    [44.0 / 45.0, -56.0 / 15.0, 32.0 / 9.0, 0.0, 0.0, 0.0],
    [19372.0 / 6561.0, -25360.0 / 2187.0, 64448.0 / 6561.0, -212.0 / 729.0, 0.0, 0.0],
    [9017.0 / 3168.0, -355.0 / 33.0, 46732.0 / 5247.0, 49.0 / 176.0, -5103.0 / 18656.0, 0.0],
    [35.0 / 384.0, 0.0, 500.0 / 1113.0, 125.0 / 192.0, -2187.0 / 6784.0, 11.0 / 84.0],
];
const E: [f64; 7] = [
    71.0 / 57600.0,
    0.0,
    -71.0 / 16695.0,
    71.0 / 1920.0,
    -17253.0 / 339200.0,
    22.0 / 525.0,
    -1.0 / 40.0,
];
const D: [f64; 7] = [
    -12715105075.0 / 11282082432.0,
    0.0,
    87487479700.0 / 32700410799.0,
    -10690763975.0 / 1880347072.0,
    701980252875.0 / 199316789632.0,
    -1453857185.0 / 822651844.0,
    69997945.0 / 29380423.0,
];

fn rhs(c: &CoefficientSet, lambda: f64, x: f64, y: [f64; 2]) -> [f64; 2] {
    let p = c.p(x);
    let v = c.shifted_potential(lambda, x);
    let (s, co) = y[0].sin_cos();
    [co * co / p - v * s * s, (1.0 / p + v) * s * co]
}

/// `d theta' / d theta = -sin(2 theta) (1/p + q - lambda r)`.
fn theta_jacobian(c: &CoefficientSet, lambda: f64, x: f64, theta: f64) -> f64 {
    -(2.0 * theta).sin() * (1.0 / c.p(x) + c.shifted_potential(lambda, x))
}

/// Dense coefficients in Hairer's form; `rc[4] = 0` gives the cubic Hermite
/// interpolant through both endpoints and slopes.
fn hermite(y0: [f64; 2], y1: [f64; 2], f0: [f64; 2], f1: [f64; 2], h: f64) -> [[f64; 2]; 5] {
    let mut rc = [[0.0; 2]; 5];
    for i in 0..2 {
        let dy = y1[i] - y0[i];
        rc[0][i] = y0[i];
        rc[1][i] = dy;
        rc[2][i] = h * f0[i] - dy;
        rc[3][i] = dy - h * f1[i] - rc[2][i];
    }
    rc
}

struct StepOutcome {
    y: [f64; 2],
    /// Weighted error norm (<= 1 accepts).
    err: f64,
    /// Absolute error estimate for theta.
    theta_err: f64,
    rc: [[f64; 2]; 5],
    f_end: [f64; 2],
}

fn dopri_step(c: &CoefficientSet, lambda: f64, x: f64, y: [f64; 2], k1: [f64; 2], h: f64, scale: f64) -> StepOutcome {
    let mut k = [[0.0; 2]; 7];
    k[0] = k1;
    for s in 1..7 {
        let mut ys = y;
        for (j, kj) in k.iter().enumerate().take(s) {
            ys[0] += h * A[s][j] * kj[0];
            ys[1] += h * A[s][j] * kj[1];
        }
        k[s] = rhs(c, lambda, x + C[s] * h, ys);
    }
    let mut y_new = y;
    let mut e = [0.0; 2];
    for j in 0..6 {
        y_new[0] += h * A[6][j] * k[j][0];
        y_new[1] += h * A[6][j] * k[j][1];
    }
    for j in 0..7 {
        e[0] += h * E[j] * k[j][0];
        e[1] += h * E[j] * k[j][1];
    }
    let mut rc = [[0.0; 2]; 5];
    for i in 0..2 {
        let dy = y_new[i] - y[i];
        rc[0][i] = y[i];
        rc[1][i] = dy;
        rc[2][i] = h * k[0][i] - dy;
        rc[3][i] = dy - h * k[6][i] - rc[2][i];
        rc[4][i] = h * (0..7).map(|j| D[j] * k[j][i]).sum::<f64>();
    }
    let err = ((e[0] / scale).powi(2) + (e[1] / scale).powi(2)).sqrt() / 2f64.sqrt();
    StepOutcome { y: y_new, err, theta_err: e[0].abs(), rc, f_end: k[6] }
}

const SDIRK_GAMMA: f64 = 1.0 - std::f64::consts::FRAC_1_SQRT_2;

/// Solves `k = theta'(x, base + h gamma k)` by Newton iteration.
fn implicit_stage(c: &CoefficientSet, lambda: f64, x: f64, base: f64, h: f64, guess: f64) -> Option<f64> {
    let hg = h * SDIRK_GAMMA;
    let mut k = guess;
    for _ in 0..30 {
        let t = base + hg * k;
        let f = rhs(c, lambda, x, [t, 0.0])[0];
        let jac = theta_jacobian(c, lambda, x, t);
        let step = (k - f) / (1.0 - hg * jac);
        k -= step;
        if !k.is_finite() {
            return None;
        }
        if (hg * step).abs() <= 1e-15 * (1.0 + base.abs()) {
            return Some(k);
        }
    }
    None
}

/// L-stable two-stage SDIRK (order 2, embedded order 1) for stiff stretches
/// where the angle sits on an attracting equilibrium. `log rho` does not feed
/// back into `theta`, so only a scalar Newton solve is needed.
fn sdirk_step(c: &CoefficientSet, lambda: f64, x: f64, y: [f64; 2], f0: [f64; 2], h: f64, scale: f64) -> Option<StepOutcome> {
    let g = SDIRK_GAMMA;
    let x1 = x + g * h;
    let k1 = implicit_stage(c, lambda, x1, y[0], h, f0[0])?;
    let t1 = y[0] + h * g * k1;
    let base2 = y[0] + h * (1.0 - g) * k1;
    let k2 = implicit_stage(c, lambda, x + h, base2, h, k1)?;
    let t2 = base2 + h * g * k2;
    let r1 = rhs(c, lambda, x1, [t1, 0.0])[1];
    let r2 = rhs(c, lambda, x + h, [t2, 0.0])[1];
    let y_new = [t2, y[1] + h * ((1.0 - g) * r1 + g * r2)];
    let e = [h * g * (k2 - k1), h * g * (r2 - r1)];
    let err = ((e[0] / scale).powi(2) + (e[1] / scale).powi(2)).sqrt() / 2f64.sqrt();
    let f_end = rhs(c, lambda, x + h, y_new);
    Some(StepOutcome { y: y_new, err, theta_err: e[0].abs(), rc: hermite(y, y_new, f0, f_end, h), f_end })
}

/// Integrates the Prüfer system from `a` (with `theta(a) = theta_a`,
/// `log rho(a) = 0`) to `x_end`.
///
/// Steps are Dormand–Prince 5(4); where the step would be limited by
/// stability rather than accuracy (`h |d theta'/d theta| > 2` with an
/// attracting angle), an L-stable SDIRK step is taken instead.
pub fn integrate_pruefer(
    c: Arc<CoefficientSet>,
    lambda: f64,
    theta_a: f64,
    x_end: f64,
    opts: &PrueferOptions,
) -> Result<SolutionTrace> {
    let iv = *c.interval();
    let a = iv.a;
    if !(x_end > a && x_end <= iv.b && x_end.is_finite()) {
        return Err(Error::Domain(format!("x_end = {x_end} outside ({a}, {}]", iv.b)));
    }
    if !theta_a.is_finite() || !lambda.is_finite() {
        return Err(Error::Precondition("theta_a and lambda must be finite".into()));
    }
    let tol = opts.tol;
    // Absolute error scale (the lift grows without bound, so a relative scale
    // would loosen with every turn). The local target is 3% of it, which
    // keeps the accumulated error near the requested level.
    let scale = 0.03 * (tol.atol + tol.rtol);
    let span = x_end - a;
    let cap = |h: f64| opts.max_step.map_or(h, |m| h.min(m));
    let mut h = cap((0.01 * span).min(0.01 * c.p(a).max(1e-300).min(1.0)).max(1e-10 * span));

    let mut x = a;
    let mut y = [theta_a, 0.0];
    let mut f0 = rhs(&c, lambda, x, y);
    let mut states = vec![PrueferState { x, theta: y[0], log_rho: y[1] }];
    let mut segments = Vec::new();
    let mut events = Vec::new();
    let mut error_estimate = 0.0;
    let mut steps = 0usize;

    while x < x_end {
        steps += 1;
        if steps > opts.max_steps {
            return Err(Error::StepFailure { last_x: x });
        }
        let last = x + h >= x_end;
        let h_try = if last { x_end - x } else { h };
        if h_try < 1e-14 * x.abs().max(1.0) {
            return Err(Error::StepFailure { last_x: x });
        }

        let jac = theta_jacobian(&c, lambda, x, y[0]);
        let stiff = jac < 0.0 && h_try * -jac > 2.0;
        let outcome = if stiff {
            sdirk_step(&c, lambda, x, y, f0, h_try, scale)
        } else {
            Some(dopri_step(&c, lambda, x, y, f0, h_try, scale))
        };
        let order_exp = if stiff { 0.5 } else { 0.2 };
        let Some(out) = outcome.filter(|o| o.y.iter().all(|v| v.is_finite()) && o.err.is_finite()) else {
            h = h_try * 0.25;
            continue;
        };
        let dtheta = (out.y[0] - y[0]).abs();
        if out.err > 1.0 || dtheta > FRAC_PI_2 {
            let mut factor = if out.err > 1.0 { (0.9 * out.err.powf(-order_exp)).clamp(0.2, 0.9) } else { 0.9 };
            if dtheta > FRAC_PI_2 {
                factor = factor.min(0.9 * FRAC_PI_2 / dtheta);
            }
            h = h_try * factor;
            continue;
        }

        let seg = Segment { x0: x, h: h_try, rc: out.rc };
        locate_events(&seg, y[0], out.y[0], theta_a, &mut events);
        segments.push(seg);

        error_estimate += out.theta_err;
        x = if last { x_end } else { x + h_try };
        y = out.y;
        f0 = out.f_end;
        states.push(PrueferState { x, theta: y[0], log_rho: y[1] });

        let grow = if out.err == 0.0 { 5.0 } else { (0.9 * out.err.powf(-order_exp)).clamp(0.2, 5.0) };
        h = cap(h_try * grow);
    }

    Ok(SolutionTrace {
        lambda,
        coefficients: c,
        theta_a,
        states,
        tolerances: tol,
        snap: opts.snap,
        events,
        error_estimate,
        segments,
    })
}

/// Records upward crossings `theta0 < k pi <= theta1` with `k pi > theta_a`.
fn locate_events(seg: &Segment, theta0: f64, theta1: f64, theta_a: f64, events: &mut Vec<f64>) {
    if theta1 <= theta0 {
        return;
    }
    let k_lo = (theta0 / PI).floor() as i64 + 1;
    let k_hi = (theta1 / PI).floor() as i64;
    for k in k_lo..=k_hi {
        let target = k as f64 * PI;
        if target <= theta_a {
            continue;
        }
        let (mut lo, mut hi) = (seg.x0, seg.x0 + seg.h);
        let tol = 1e-12f64.max(4.0 * f64::EPSILON * hi.abs());
        for _ in 0..200 {
            if hi - lo <= tol {
                break;
            }
            let mid = 0.5 * (lo + hi);
            if seg.eval(mid)[0] < target {
                lo = mid;
            } else {
                hi = mid;
            }
        }
        events.push(0.5 * (lo + hi));
    }
}

impl SolutionTrace {
    pub fn x_start(&self) -> f64 {
        self.states[0].x
    }

    pub fn x_end(&self) -> f64 {
        self.states[self.states.len() - 1].x
    }

    fn check(&self, x: f64) -> Result<()> {
        let (lo, hi) = (self.x_start(), self.x_end());
        if x >= lo && x <= hi {
            Ok(())
        } else {
            Err(Error::Range { x, lo, hi })
        }
    }

    fn dense(&self, x: f64) -> Result<[f64; 2]> {
        self.check(x)?;
        if self.segments.is_empty() || x == self.x_start() {
            let s = self.states[0];
            return Ok([s.theta, s.log_rho]);
        }
        let i = self.segments.partition_point(|s| s.x0 <= x).max(1) - 1;
        let seg = &self.segments[i];
        if x == seg.x0 + seg.h || i + 1 == self.segments.len() && x == self.x_end() {
            let s = self.states[i + 1];
            return Ok([s.theta, s.log_rho]);
        }
        Ok(seg.eval(x))
    }

    pub fn theta_at(&self, x: f64) -> Result<f64> {
        self.dense(x).map(|v| v[0])
    }

    pub fn log_rho_at(&self, x: f64) -> Result<f64> {
        self.dense(x).map(|v| v[1])
    }

    /// `u(x) = rho sin(theta)`.
    pub fn u_at(&self, x: f64) -> Result<f64> {
        let [t, l] = self.dense(x)?;
        Ok(l.exp() * t.sin())
    }

    /// `(p u')(x) = rho cos(theta)`.
    pub fn pu_prime_at(&self, x: f64) -> Result<f64> {
        let [t, l] = self.dense(x)?;
        Ok(l.exp() * t.cos())
    }

    pub fn to_csv(&self) -> String {
        let mut out = String::from("x,theta,log_rho\n");
        for s in &self.states {
            let _ = writeln!(out, "{:e},{:e},{:e}", s.x, s.theta, s.log_rho);
        }
        out
    }

    pub fn to_json(&self) -> serde_json::Value {
        serde_json::to_value(self).expect("trace serializes")
    }
}

/// Number of zeros of `u` in `(a, x)`: `ceil(theta(x)/pi) - floor(theta(a)/pi) - 1`.
pub fn count_zeros(trace: &SolutionTrace, x: f64) -> Result<i64> {
    let t = trace.theta_at(x)?;
    Ok(trace.snap.count(trace.theta_a, t).max(0))
}

pub fn zero_positions(trace: &SolutionTrace) -> &[f64] {
    &trace.events
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::coeffs::{build_coefficients, FamilySpec, Interval};

    fn free(a: f64, b: f64) -> Arc<CoefficientSet> {
        Arc::new(build_coefficients(FamilySpec::Constant { p: 1.0, q: 0.0, r: 1.0 }, Interval::new(a, b).unwrap()).unwrap())
    }

    #[test]
    fn sine_lift_is_linear() {
        let t = integrate_pruefer(free(0.0, f64::INFINITY), 1.0, 0.0, 10.0, &PrueferOptions::default()).unwrap();
        for x in [0.5, 3.0, 7.7, 10.0] {
            assert!((t.theta_at(x).unwrap() - x).abs() < 1e-9);
            assert!(t.log_rho_at(x).unwrap().abs() < 1e-9);
        }
        assert_eq!(count_zeros(&t, 10.0).unwrap(), 3);
        assert_eq!(count_zeros(&t, PI).unwrap(), 0);
        let z = zero_positions(&t);
        assert_eq!(z.len(), 3);
        for (k, zk) in z.iter().enumerate() {
            assert!((zk - (k + 1) as f64 * PI).abs() < 1e-10);
        }
    }

    #[test]
    fn zero_energy_lift_is_arctan() {
        let t = integrate_pruefer(free(0.0, f64::INFINITY), 0.0, 0.0, 50.0, &PrueferOptions::default()).unwrap();
        for x in [0.1, 1.0, 5.0, 50.0] {
            assert!((t.theta_at(x).unwrap() - x.atan()).abs() < 1e-9);
            assert_eq!(count_zeros(&t, x).unwrap(), 0);
        }
        assert!(zero_positions(&t).is_empty());
    }

    #[test]
    fn sin_2x_has_one_zero_before_3() {
        let t = integrate_pruefer(free(0.0, f64::INFINITY), 4.0, 0.0, 3.0, &PrueferOptions::default()).unwrap();
        let z = zero_positions(&t);
        assert_eq!(z.len(), 1);
        assert!((z[0] - FRAC_PI_2).abs() < 1e-10);
    }

    #[test]
    fn range_and_domain_errors() {
        let c = free(0.0, 5.0);
        assert!(matches!(integrate_pruefer(c.clone(), 1.0, 0.0, 6.0, &PrueferOptions::default()), Err(Error::Domain(_))));
        let t = integrate_pruefer(c, 1.0, 0.0, 5.0, &PrueferOptions::default()).unwrap();
        assert!(matches!(count_zeros(&t, 5.5), Err(Error::Range { .. })));
    }

    #[test]
    fn csv_header() {
        let t = integrate_pruefer(free(0.0, 1.0), 1.0, 0.0, 1.0, &PrueferOptions::default()).unwrap();
        assert!(t.to_csv().starts_with("x,theta,log_rho\n"));
        let j = t.to_json();
        assert_eq!(j["coefficients"]["family"], "constant");
    }
}
