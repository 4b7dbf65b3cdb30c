//! Relative oscillation: modified Wronskians and the relative count
//! `N(u0, u1)(x) = ceil(delta(x)/pi) - floor(delta(a)/pi) - 1`, where
//! `delta = theta1 - theta0` is formed from two independently integrated lifts.

use std::f64::consts::PI;
use std::fmt::Write as _;
use std::sync::Arc;

use serde::{Deserialize, Serialize};

use crate::coeffs::CoefficientSet;
use crate::count::Snap;
use crate::error::{Error, Result};
use crate::pruefer::{integrate_pruefer, PrueferOptions, SolutionTrace};

#[derive(Clone, Debug, Serialize)]
pub struct RelativeTrace {
    pub trace0: Arc<SolutionTrace>,
    pub trace1: Arc<SolutionTrace>,
    pub snap: Snap,
    /// Both traces describe the same solution of the same equation.
    pub degenerate: bool,
    /// x where `delta` crosses a multiple of pi, i.e. zeros of the modified Wronskian.
    pub w_events: Vec<f64>,
    x_lo: f64,
    x_hi: f64,
    delta_lo: f64,
}

impl RelativeTrace {
    pub fn new(trace0: Arc<SolutionTrace>, trace1: Arc<SolutionTrace>) -> Result<Self> {
        let x_lo = trace0.x_start().max(trace1.x_start());
        let x_hi = trace0.x_end().min(trace1.x_end());
        if !(x_hi > x_lo) {
            return Err(Error::Range { x: x_lo, lo: x_lo, hi: x_hi });
        }
        let degenerate = Arc::ptr_eq(&trace0, &trace1)
            || (trace0.lambda == trace1.lambda
                && trace0.theta_a == trace1.theta_a
                && trace0.coefficients.document() == trace1.coefficients.document());
        let delta_lo = trace1.theta_at(x_lo)? - trace0.theta_at(x_lo)?;
        let snap = trace0.snap;
        let mut rt = RelativeTrace { trace0, trace1, snap, degenerate, w_events: Vec::new(), x_lo, x_hi, delta_lo };
        rt.w_events = if degenerate { Vec::new() } else { rt.locate_w_events()? };
        Ok(rt)
    }

    /// Integrates both solutions (Prüfer radius 1 at `a`) and pairs them.
    #[allow(clippy::too_many_arguments)]
    pub fn integrate(
        c0: Arc<CoefficientSet>,
        lambda0: f64,
        theta0: f64,
        c1: Arc<CoefficientSet>,
        lambda1: f64,
        theta1: f64,
        x_end: f64,
        opts: &PrueferOptions,
    ) -> Result<Self> {
        let t0 = Arc::new(integrate_pruefer(c0, lambda0, theta0, x_end, opts)?);
        let t1 = Arc::new(integrate_pruefer(c1, lambda1, theta1, x_end, opts)?);
        RelativeTrace::new(t0, t1)
    }

    pub fn x_start(&self) -> f64 {
        self.x_lo
    }

    pub fn x_end(&self) -> f64 {
        self.x_hi
    }

    fn check(&self, x: f64) -> Result<()> {
        if x >= self.x_lo && x <= self.x_hi {
            Ok(())
        } else {
            Err(Error::Range { x, lo: self.x_lo, hi: self.x_hi })
        }
    }

    pub fn delta(&self, x: f64) -> Result<f64> {
        self.check(x)?;
        if self.degenerate {
            return Ok(0.0);
        }
        Ok(self.trace1.theta_at(x)? - self.trace0.theta_at(x)?)
    }

    pub fn n_rel(&self, x: f64) -> Result<i64> {
        let d = self.delta(x)?;
        let d_lo = if self.degenerate { 0.0 } else { self.delta_lo };
        Ok(self.snap.count(d_lo, d))
    }

    /// Union of both traces' step points inside the common range.
    fn breakpoints(&self) -> Vec<f64> {
        let mut xs: Vec<f64> = self
            .trace0
            .states
            .iter()
            .chain(self.trace1.states.iter())
            .map(|s| s.x)
            .filter(|&x| x >= self.x_lo && x <= self.x_hi)
            .collect();
        xs.push(self.x_lo);
        xs.push(self.x_hi);
        xs.sort_by(f64::total_cmp);
        xs.dedup();
        xs
    }

    fn locate_w_events(&self) -> Result<Vec<f64>> {
        let band = |d: f64| -> Option<i64> {
            if self.snap.multiple_of_pi(d).is_some() {
                None
            } else {
                Some((d / PI).floor() as i64)
            }
        };
        let xs = self.breakpoints();
        let mut events = Vec::new();
        let mut last: Option<(f64, i64)> = None;
        for w in xs.windows(2) {
            for j in 0..4 {
                let x = w[0] + (w[1] - w[0]) * j as f64 / 4.0;
                self.track(x, &band, &mut last, &mut events)?;
            }
        }
        self.track(self.x_hi, &band, &mut last, &mut events)?;
        Ok(events)
    }

    fn track(
        &self,
        x: f64,
        band: &dyn Fn(f64) -> Option<i64>,
        last: &mut Option<(f64, i64)>,
        events: &mut Vec<f64>,
    ) -> Result<()> {
        let d = self.delta(x)?;
        let Some(b) = band(d) else {
            return Ok(());
        };
        if let Some((x_prev, b_prev)) = *last {
            let (lo_k, hi_k) = if b > b_prev { (b_prev + 1, b) } else { (b + 1, b_prev) };
            if b != b_prev {
                for k in lo_k..=hi_k {
                    events.push(self.bisect(x_prev, x, k as f64 * PI)?);
                }
            }
        }
        *last = Some((x, b));
        Ok(())
    }

    fn bisect(&self, mut lo: f64, mut hi: f64, target: f64) -> Result<f64> {
        let below_lo = self.delta(lo)? < target;
        let tol = 1e-12f64.max(4.0 * f64::EPSILON * hi.abs());
        for _ in 0..200 {
            if hi - lo <= tol {
                break;
            }
            let mid = 0.5 * (lo + hi);
            if (self.delta(mid)? < target) == below_lo {
                lo = mid;
            } else {
                hi = mid;
            }
        }
        Ok(0.5 * (lo + hi))
    }

    pub fn to_csv(&self) -> Result<String> {
        let mut out = String::from("x,delta,n_rel,W\n");
        for x in self.breakpoints() {
            let _ = writeln!(
                out,
                "{:e},{:e},{},{:e}",
                x,
                self.delta(x)?,
                self.n_rel(x)?,
                modified_wronskian(self, x)?
            );
        }
        Ok(out)
    }
}

/// `W(u0, u1) = u0 (p1 u1') - (p0 u0') u1 = rho0 rho1 sin(theta0 - theta1)`.
pub fn modified_wronskian(rt: &RelativeTrace, x: f64) -> Result<f64> {
    rt.check(x)?;
    if rt.degenerate {
        return Ok(0.0);
    }
    let t0 = rt.trace0.theta_at(x)?;
    let t1 = rt.trace1.theta_at(x)?;
    let l = rt.trace0.log_rho_at(x)? + rt.trace1.log_rho_at(x)?;
    Ok(l.exp() * (t0 - t1).sin())
}

pub fn relative_count(rt: &RelativeTrace, x: f64) -> Result<i64> {
    rt.n_rel(x)
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum DenseWarning {
    /// Two Wronskian zeros closer than one grid cell.
    GridTooCoarse { x1: f64, x2: f64, cell: f64 },
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct DenseCount {
    pub count: i64,
    pub roots: Vec<f64>,
    pub grid_n: usize,
    pub degenerate: bool,
    pub warnings: Vec<DenseWarning>,
}

/// Sign changes of the modified Wronskian on a uniform grid of `(a, x]`, each
/// refined by bisection. Independent of the angle bookkeeping in
/// [`relative_count`]; intended as an oracle.
pub fn wronskian_zero_count_dense(rt: &RelativeTrace, x: f64, grid_n: usize) -> Result<DenseCount> {
    if grid_n < 1000 {
        return Err(Error::Precondition(format!("grid_n must be at least 1000, got {grid_n}")));
    }
    rt.check(x)?;
    if rt.degenerate {
        return Ok(DenseCount { count: 0, roots: Vec::new(), grid_n, degenerate: true, warnings: Vec::new() });
    }
    let a = rt.x_lo;
    let h = (x - a) / grid_n as f64;
    let w = |t: f64| modified_wronskian(rt, t);
    let mut roots = Vec::new();
    let mut prev: Option<(f64, f64)> = None;
    for i in 1..=grid_n {
        let t = if i == grid_n { x } else { a + h * i as f64 };
        let v = w(t)?;
        if v == 0.0 {
            continue;
        }
        if let Some((tp, vp)) = prev {
            if (vp > 0.0) != (v > 0.0) {
                let (mut lo, mut hi) = (tp, t);
                for _ in 0..100 {
                    if hi - lo <= 1e-13 * hi.abs().max(1.0) {
                        break;
                    }
                    let mid = 0.5 * (lo + hi);
                    if (w(mid)? > 0.0) == (vp > 0.0) {
                        lo = mid;
                    } else {
                        hi = mid;
                    }
                }
                roots.push(0.5 * (lo + hi));
            }
        }
        prev = Some((t, v));
    }
    let mut warnings = Vec::new();
    let inside: Vec<f64> = rt.w_events.iter().copied().filter(|&e| e > a && e < x).collect();
    for pair in inside.windows(2).chain(roots.windows(2)) {
        if pair[1] - pair[0] < h {
            warnings.push(DenseWarning::GridTooCoarse { x1: pair[0], x2: pair[1], cell: h });
        }
    }
    Ok(DenseCount { count: roots.len() as i64, roots, grid_n, degenerate: false, warnings })
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ConditionReport {
    /// `p0 >= p1` and `q0 - lambda0 r0 >= q1 - lambda1 r1` at every sample.
    pub cond_weak: bool,
    /// As `cond_weak` with strict inequality in the potential part.
    pub cond_strict: bool,
    pub grid: Vec<f64>,
    pub first_weak_violation: Option<f64>,
    pub first_strict_violation: Option<f64>,
}

pub fn check_conditions(
    c0: &CoefficientSet,
    lambda0: f64,
    c1: &CoefficientSet,
    lambda1: f64,
    region_grid: &[f64],
) -> ConditionReport {
    let mut weak_v = None;
    let mut strict_v = None;
    for &x in region_grid {
        let dp = crate::coeffs::coefficient_difference(c1, c0, x).p;
        let v0 = c0.shifted_potential(lambda0, x);
        let v1 = c1.shifted_potential(lambda1, x);
        let p_ok = dp <= 0.0;
        if weak_v.is_none() && !(p_ok && v0 >= v1) {
            weak_v = Some(x);
        }
        if strict_v.is_none() && !(p_ok && v0 > v1) {
            strict_v = Some(x);
        }
    }
    ConditionReport {
        cond_weak: weak_v.is_none(),
        cond_strict: strict_v.is_none(),
        grid: region_grid.to_vec(),
        first_weak_violation: weak_v,
        first_strict_violation: strict_v,
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SturmReport {
    pub pairs_checked: usize,
    /// Consecutive zeros of `u0` with no zero of `u1` strictly between.
    pub violations: Vec<(f64, f64)>,
    pub pass: bool,
}

/// Between two consecutive zeros of `u0` lies a zero of `u1`, provided the
/// strict comparison conditions hold.
pub fn sturm_comparison_check(rt: &RelativeTrace) -> Result<SturmReport> {
    let grid = rt.breakpoints();
    let cond = check_conditions(
        &rt.trace0.coefficients,
        rt.trace0.lambda,
        &rt.trace1.coefficients,
        rt.trace1.lambda,
        &grid,
    );
    if !cond.cond_strict {
        return Err(Error::Precondition(format!(
            "strict comparison condition fails at x = {}",
            cond.first_strict_violation.unwrap_or(f64::NAN)
        )));
    }
    let z0: Vec<f64> = rt.trace0.events.iter().copied().filter(|&z| z <= rt.x_hi).collect();
    let z1 = &rt.trace1.events;
    let mut violations = Vec::new();
    for w in z0.windows(2) {
        let i = z1.partition_point(|&z| z <= w[0]);
        if !(i < z1.len() && z1[i] < w[1]) {
            violations.push((w[0], w[1]));
        }
    }
    let pairs_checked = z0.len().saturating_sub(1);
    Ok(SturmReport { pairs_checked, pass: violations.is_empty(), violations })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::coeffs::{build_coefficients, FamilySpec, Interval};
    use std::f64::consts::FRAC_PI_2;

    fn free() -> Arc<CoefficientSet> {
        Arc::new(build_coefficients(FamilySpec::Constant { p: 1.0, q: 0.0, r: 1.0 }, Interval::half_line(0.0)).unwrap())
    }

    fn pair(l0: f64, t0: f64, l1: f64, t1: f64, x_end: f64) -> RelativeTrace {
        RelativeTrace::integrate(free(), l0, t0, free(), l1, t1, x_end, &PrueferOptions::default()).unwrap()
    }

    #[test]
    fn x_versus_sine() {
        let rt = pair(0.0, 0.0, 1.0, 0.0, 10.0);
        let w = modified_wronskian(&rt, PI).unwrap();
        assert!((w + PI).abs() < 1e-8, "{w}");
        for x in [0.5f64, 2.0, 6.0, 9.5] {
            let exact = x * x.cos() - x.sin();
            assert!((modified_wronskian(&rt, x).unwrap() - exact).abs() < 1e-8);
        }
        assert_eq!(relative_count(&rt, 10.0).unwrap(), 2);
        let dense = wronskian_zero_count_dense(&rt, 10.0, 2000).unwrap();
        assert_eq!(dense.count, 2);
        assert!((dense.roots[0] - 4.493409457909064).abs() < 1e-7);
        assert!((dense.roots[1] - 7.725251836937707).abs() < 1e-7);
        assert_eq!(rt.w_events.len(), 2);
    }

    #[test]
    fn same_equation_pairs() {
        let dep = pair(1.0, 0.0, 1.0, PI, 20.0);
        let ind = pair(1.0, 0.0, 1.0, FRAC_PI_2, 20.0);
        for i in 1..=40 {
            let x = 0.5 * i as f64;
            assert_eq!(relative_count(&dep, x).unwrap(), -1);
            assert_eq!(relative_count(&ind, x).unwrap(), 0);
        }
        let w0 = modified_wronskian(&ind, 0.3).unwrap();
        for i in 1..=50 {
            let w = modified_wronskian(&ind, 0.4 * i as f64).unwrap();
            assert!((w - w0).abs() < 1e-8);
        }
        assert_eq!(wronskian_zero_count_dense(&ind, 20.0, 1000).unwrap().count, 0);
    }

    #[test]
    fn degenerate_pair() {
        let t = Arc::new(integrate_pruefer(free(), 1.0, 0.0, 5.0, &PrueferOptions::default()).unwrap());
        let rt = RelativeTrace::new(t.clone(), t).unwrap();
        assert!(rt.degenerate);
        assert_eq!(relative_count(&rt, 4.0).unwrap(), -1);
        assert_eq!(modified_wronskian(&rt, 4.0).unwrap(), 0.0);
        let d = wronskian_zero_count_dense(&rt, 5.0, 1000).unwrap();
        assert!(d.degenerate && d.count == 0);
        assert!(wronskian_zero_count_dense(&rt, 5.0, 10).is_err());
    }

    #[test]
    fn conditions() {
        let c = free();
        let grid: Vec<f64> = (1..10).map(|i| i as f64).collect();
        let r = check_conditions(&c, 0.0, &c, 1.0, &grid);
        assert!(r.cond_weak && r.cond_strict);
        let r = check_conditions(&c, 1.0, &c, 1.0, &grid);
        assert!(r.cond_weak && !r.cond_strict);
        let c1 = build_coefficients(FamilySpec::Constant { p: 2.0, q: 0.0, r: 1.0 }, Interval::half_line(0.0)).unwrap();
        let r = check_conditions(&c, 0.0, &c1, 1.0, &grid);
        assert!(!r.cond_weak && !r.cond_strict);
    }

    #[test]
    fn sturm_interlacing() {
        let rep = sturm_comparison_check(&pair(1.0, 0.0, 4.0, 0.0, 30.0)).unwrap();
        assert!(rep.pass && rep.pairs_checked == 8);
        let rep = sturm_comparison_check(&pair(1.0, 0.0, 1.01, 0.0, 300.0)).unwrap();
        assert!(rep.pass && rep.pairs_checked > 90);
        assert!(matches!(sturm_comparison_check(&pair(1.0, 0.0, 1.0, 0.5, 10.0)), Err(Error::Precondition(_))));
    }
}
