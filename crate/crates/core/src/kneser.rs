//! Iterated logarithms, principal solutions and Kneser-type criteria.
//!
//! The decisive quantity is compared against the critical constant `-1/4`:
//! a tail limsup below it means oscillation, a tail liminf above it means
//! nonoscillation. Both are estimated from ratio-2 tail windows.

use std::sync::Arc;

use serde::{Deserialize, Serialize};

use crate::coeffs::{coefficient_difference, CoefficientSet, Interval};
use crate::error::{Error, Result};
use crate::quad::{integrate, QuadOptions};
use crate::tail::{analyze_bounded, analyze_limit, classify_window_sums, window_stats, LimitTrend, SumTrend, WindowStat};

pub const KNESER_THRESHOLD: f64 = -0.25;
pub const DEFAULT_MARGIN: f64 = 0.01;
pub const DEFAULT_ELL_GRID: [f64; 4] = [1.0, 2.0, 4.0, 8.0];
const KNESER_WINDOWS: usize = 4;

/// The iterated-logarithm ladder of order `n`.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct LogScale {
    pub n: u32,
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct LogScaleValues {
    pub log_n: f64,
    pub big_l: f64,
    pub q: f64,
}

impl LogScale {
    pub fn new(n: u32) -> Self {
        LogScale { n }
    }

    /// `e_{-1} = -inf`, `e_k = exp(e_{k-1})`.
    pub fn e(k: i32) -> f64 {
        let mut e = f64::NEG_INFINITY;
        for _ in 0..=k {
            e = e.exp();
        }
        e
    }

    /// `log_0(x) = x`, `log_k(x) = ln |log_{k-1}(x)|`.
    pub fn iter_log(k: u32, x: f64) -> f64 {
        let mut v = x;
        for _ in 0..k {
            v = v.abs().ln();
        }
        v
    }

    /// `L_k(x) = prod_{j=0}^{k} log_j(x)`, with `L_{-1} = 1`.
    pub fn big_l(k: i32, x: f64) -> f64 {
        let mut prod = 1.0;
        let mut lg = x;
        for j in 0..=k {
            if j > 0 {
                lg = lg.abs().ln();
            }
            prod *= lg;
        }
        prod
    }

    /// `sum_{j=0}^{k} 1 / L_j(x)`; zero for `k < 0`.
    pub fn recip_sum(k: i32, x: f64) -> f64 {
        let mut prod = 1.0;
        let mut lg = x;
        let mut sum = 0.0;
        for j in 0..=k {
            if j > 0 {
                lg = lg.abs().ln();
            }
            prod *= lg;
            sum += 1.0 / prod;
        }
        sum
    }

    /// `-1/4 sum_{j=0}^{k-1} 1 / L_j(x)^2`.
    pub fn q_of(k: i32, x: f64) -> f64 {
        let mut prod = 1.0;
        let mut lg = x;
        let mut sum = 0.0;
        for j in 0..k {
            if j > 0 {
                lg = lg.abs().ln();
            }
            prod *= lg;
            sum += 1.0 / (prod * prod);
        }
        -0.25 * sum
    }

    pub fn big_l_unchecked(&self, x: f64) -> f64 {
        Self::big_l(self.n as i32, x)
    }

    pub fn q_unchecked(&self, x: f64) -> f64 {
        Self::q_of(self.n as i32, x)
    }

    /// `(log_n, L_n, Q_n)` at `x`; requires `x > e_{n-1}`.
    pub fn eval(&self, x: f64) -> Result<LogScaleValues> {
        let floor = Self::e(self.n as i32 - 1);
        if !(x > floor) || !x.is_finite() {
            return Err(Error::Domain(format!("log scale n = {} needs x > e_{} = {floor}, got {x}", self.n, self.n as i32 - 1)));
        }
        Ok(LogScaleValues {
            log_n: Self::iter_log(self.n, x),
            big_l: self.big_l_unchecked(x),
            q: self.q_unchecked(x),
        })
    }
}

pub type Func = Arc<dyn Fn(f64) -> f64 + Send + Sync>;

/// `v0(x) = u0(x) * int_c^x dt / (p0 u0^2)`.
pub fn dalembert(u0: &dyn Fn(f64) -> f64, p0: &dyn Fn(f64) -> f64, c: f64, x: f64, opts: &QuadOptions) -> Result<f64> {
    let integral = dalembert_integral(u0, p0, c, x, opts)?;
    Ok(u0(x) * integral)
}

fn dalembert_integral(u0: &dyn Fn(f64) -> f64, p0: &dyn Fn(f64) -> f64, c: f64, x: f64, opts: &QuadOptions) -> Result<f64> {
    let mut bad: Option<(f64, f64)> = None;
    let v = integrate(
        |t| {
            let u = u0(t);
            if !(u > 0.0) && bad.is_none() {
                bad = Some((t, u));
            }
            1.0 / (p0(t) * u * u)
        },
        c,
        x,
        opts,
    );
    if let Some((x, value)) = bad {
        return Err(Error::Positivity { x, value });
    }
    v
}

/// A minimal positive solution `u0` of `(tau_0 - lambda) u = 0` near `b`
/// together with its d'Alembert companion `v0` (so that `W(u0, v0) = 1`).
#[derive(Clone)]
pub struct PrincipalPair {
    u0: Func,
    du0: Func,
    p0: Func,
    anchor: f64,
    v0_closed: Option<Func>,
    quad: QuadOptions,
}

impl std::fmt::Debug for PrincipalPair {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.debug_struct("PrincipalPair")
            .field("anchor", &self.anchor)
            .field("closed_form_v0", &self.v0_closed.is_some())
            .finish()
    }
}

impl PrincipalPair {
    /// `v0` is computed by adaptive quadrature from `anchor`.
    pub fn new(u0: Func, du0: Func, p0: Func, anchor: f64) -> Self {
        PrincipalPair { u0, du0, p0, anchor, v0_closed: None, quad: QuadOptions::default() }
    }

    pub fn with_closed_v0(mut self, v0: Func) -> Self {
        self.v0_closed = Some(v0);
        self
    }

    /// `u0 = sqrt(L_{n-1})`, `p0 = p_inf`, `v0 = sqrt(L_{n-1}) log_n / p_inf`, anchored at `e_n`.
    /// `u0'` uses `L_m' = L_m * sum_{j<=m} 1/L_j`.
    pub fn iterated_log(n: u32, p_inf: f64) -> Self {
        let m = n as i32 - 1;
        let u0: Func = Arc::new(move |x| LogScale::big_l(m, x).sqrt());
        let du0: Func = Arc::new(move |x| 0.5 * LogScale::big_l(m, x).sqrt() * LogScale::recip_sum(m, x));
        let p0: Func = Arc::new(move |_| p_inf);
        let v0: Func = Arc::new(move |x| LogScale::big_l(m, x).sqrt() * LogScale::iter_log(n, x) / p_inf);
        PrincipalPair::new(u0, du0, p0, LogScale::e(n as i32)).with_closed_v0(v0)
    }

    pub fn anchor(&self) -> f64 {
        self.anchor
    }

    pub fn u0(&self, x: f64) -> f64 {
        (self.u0)(x)
    }

    pub fn du0(&self, x: f64) -> f64 {
        (self.du0)(x)
    }

    pub fn p0(&self, x: f64) -> f64 {
        (self.p0)(x)
    }

    pub fn v0(&self, x: f64) -> Result<f64> {
        match &self.v0_closed {
            Some(v) => Ok(v(x)),
            None => dalembert(&*self.u0, &*self.p0, self.anchor, x, &self.quad),
        }
    }

    /// `v0' = u0' * v0 / u0 + 1 / (p0 u0)`.
    pub fn dv0(&self, x: f64) -> Result<f64> {
        let u = self.u0(x);
        Ok(self.du0(x) * self.v0(x)? / u + 1.0 / (self.p0(x) * u))
    }

    /// `u0 (p0 v0') - (p0 u0') v0`; equals 1 for a valid pair.
    pub fn wronskian(&self, x: f64) -> Result<f64> {
        let p = self.p0(x);
        Ok(self.u0(x) * p * self.dv0(x)? - p * self.du0(x) * self.v0(x)?)
    }

    /// `rho = 1 / (p0 u0 v0)`.
    pub fn rho(&self, x: f64) -> Result<f64> {
        Ok(1.0 / (self.p0(x) * self.u0(x) * self.v0(x)?))
    }

    /// Window integrals of `1 / (p0 u0^2)`; `Divergent` certifies minimality.
    pub fn minimality(&self, interval: &Interval, tail_grid: &[f64]) -> Result<SumTrend> {
        let sums = window_integrals(interval, tail_grid, |t| {
            let u = self.u0(t);
            1.0 / (self.p0(t) * u * u)
        })?;
        Ok(classify_window_sums(&sums))
    }
}

/// Integrals of `f` over the ratio-2 windows spanned by `tail_grid`.
pub(crate) fn window_integrals(interval: &Interval, tail_grid: &[f64], f: impl Fn(f64) -> f64) -> Result<Vec<f64>> {
    let samples: Vec<(f64, f64)> = tail_grid.iter().map(|&x| (x, 0.0)).collect();
    let windows = window_stats(interval, &samples);
    let opts = QuadOptions { rtol: 1e-8, ..QuadOptions::default() };
    let mut edges: Vec<f64> = windows.iter().map(|w| w.lo).collect();
    if let Some(w) = windows.last() {
        if w.hi > w.lo {
            edges.push(w.hi);
        }
    }
    edges.windows(2).map(|e| integrate(&f, e[0], e[1], &opts)).collect()
}

fn check_point(c: &CoefficientSet, x: f64) -> Result<()> {
    if c.interval().contains_open(x) {
        Ok(())
    } else {
        Err(Error::Domain(format!("x = {x} outside ({}, {})", c.interval().a, c.interval().b)))
    }
}

/// `p0 v0^2 [u0^2 (q1 - q0 - lambda (r1 - r0)) + (p0 u0')^2 (p1 - p0) / (p1 p0)]`.
pub fn delta(c0: &CoefficientSet, c1: &CoefficientSet, lambda: f64, pair: &PrincipalPair, x: f64) -> Result<f64> {
    check_point(c0, x)?;
    check_point(c1, x)?;
    let d = coefficient_difference(c1, c0, x);
    let p0 = c0.p(x);
    let p1 = c1.p(x);
    let u = pair.u0(x);
    let pdu = p0 * pair.du0(x);
    let v = pair.v0(x)?;
    Ok(p0 * v * v * (u * u * (d.q - lambda * d.r) + pdu * pdu * d.p / (p1 * p0)))
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct DeltaTildeParts {
    /// `L_n^2 (q1/p_inf - Q_n - q_inf r1 / (p_inf r_inf))`
    pub main: f64,
    /// `L_n^2 (1/4) (sum_{j<n} 1/L_j)^2 (1 - p_inf/p1)`
    pub correction: f64,
}

impl DeltaTildeParts {
    pub fn total(&self) -> f64 {
        self.main + self.correction
    }
}

pub fn delta_tilde_parts(c1: &CoefficientSet, n: u32, x: f64) -> Result<DeltaTildeParts> {
    let tail = c1.tail().ok_or(Error::MissingTail)?;
    check_point(c1, x)?;
    let e_n = LogScale::e(n as i32);
    if !(x > e_n) {
        return Err(Error::Domain(format!("need x > e_{n} = {e_n}, got {x}")));
    }
    let dev = c1.deviation(x).ok_or(Error::MissingTail)?;
    let l = LogScale::big_l(n as i32, x);
    let s = LogScale::recip_sum(n as i32 - 1, x);
    let qn = LogScale::q_of(n as i32, x);
    let p1 = tail.p_inf + dev.p;
    let main = dev.q / tail.p_inf - qn - tail.q_inf * dev.r / (tail.p_inf * tail.r_inf);
    let correction = 0.25 * s * s * (dev.p / p1);
    Ok(DeltaTildeParts { main: l * l * main, correction: l * l * correction })
}

/// The tail quantity whose limsup/liminf against `-1/4` decides accumulation
/// of eigenvalues at `q_inf / r_inf`.
pub fn delta_tilde(c1: &CoefficientSet, n: u32, x: f64) -> Result<f64> {
    delta_tilde_parts(c1, n, x).map(|p| p.total())
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SideConditions {
    /// `v0 p0 u0' (p1 - p0) / p1 -> 0`
    pub weighted: LimitTrend,
    /// `(p1 - p0) / p1 -> 0`
    pub relative_p: LimitTrend,
    pub pass: bool,
}

pub fn side_conditions_thm_gu(
    c0: &CoefficientSet,
    c1: &CoefficientSet,
    pair: &PrincipalPair,
    tail_grid: &[f64],
) -> Result<SideConditions> {
    let mut weighted = Vec::with_capacity(tail_grid.len());
    let mut relative = Vec::with_capacity(tail_grid.len());
    for &x in tail_grid {
        let d = coefficient_difference(c1, c0, x);
        let rel = d.p / c1.p(x);
        relative.push((x, rel));
        let w = if rel == 0.0 { 0.0 } else { pair.v0(x)? * c0.p(x) * pair.du0(x) * rel };
        weighted.push((x, w));
    }
    let iv = c1.interval();
    let weighted = analyze_limit(iv, &weighted, Some(0.0));
    let relative_p = analyze_limit(iv, &relative, Some(0.0));
    let pass = weighted.trend.is_convergent() && relative_p.trend.is_convergent();
    Ok(SideConditions { weighted, relative_p, pass })
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum KneserMode {
    Pointwise,
    Averaged,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum KneserVerdict {
    Oscillatory,
    Nonoscillatory,
    Inconclusive,
}

/// Where the Kneser quantity comes from.
pub enum KneserInput<'a> {
    Samples(&'a [(f64, f64)]),
    Function { f: &'a (dyn Fn(f64) -> f64 + Sync), grid: &'a [f64] },
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct AveragedConditions {
    pub delta_bounded: bool,
    pub rho_bounded: bool,
    pub rho_vanishes: bool,
    /// `(1/l) int_0^l |rho(x+t) - rho(x)| dt / rho(x) -> 0` for every `l` in the grid.
    pub rho_slowly_varying: bool,
    pub pass: bool,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "status", rename_all = "snake_case")]
pub enum SideConditionRecord {
    NotRequired,
    NotChecked,
    Checked(AveragedConditions),
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct EllSummary {
    pub ell: f64,
    pub limsup: f64,
    pub liminf: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct KneserReport {
    pub mode: KneserMode,
    pub samples: Vec<(f64, f64)>,
    pub windows: Vec<WindowStat>,
    pub sup_tail: f64,
    pub inf_tail: f64,
    /// Distance of the decisive extremum from -1/4 (nearest extremum when inconclusive).
    pub margin: f64,
    pub margin_min: f64,
    pub verdict: KneserVerdict,
    pub per_ell: Vec<EllSummary>,
    pub side_conditions: SideConditionRecord,
}

/// Window extrema over the last windows, plus whether each extremum sequence
/// moves monotonically (or stays within half the margin).
fn tail_extrema(windows: &[WindowStat], margin_min: f64) -> Option<(f64, f64, bool, bool)> {
    if windows.len() < KNESER_WINDOWS {
        return None;
    }
    let last = &windows[windows.len() - KNESER_WINDOWS..];
    let sups: Vec<f64> = last.iter().map(|w| w.max).collect();
    let infs: Vec<f64> = last.iter().map(|w| w.min).collect();
    let steady = |v: &[f64]| {
        let tol = 1e-12 * v.iter().fold(1.0_f64, |m, x| m.max(x.abs()));
        let up = v.windows(2).all(|p| p[1] >= p[0] - tol);
        let down = v.windows(2).all(|p| p[1] <= p[0] + tol);
        let lo = v.iter().copied().fold(f64::INFINITY, f64::min);
        let hi = v.iter().copied().fold(f64::NEG_INFINITY, f64::max);
        up || down || hi - lo < 0.5 * margin_min
    };
    let sup = sups.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    let inf = infs.iter().copied().fold(f64::INFINITY, f64::min);
    Some((sup, inf, steady(&sups), steady(&infs)))
}

fn decide(sup: f64, inf: f64, sup_ok: bool, inf_ok: bool, margin_min: f64) -> (KneserVerdict, f64) {
    if !(sup.is_finite() && inf.is_finite()) {
        return (KneserVerdict::Inconclusive, f64::NAN);
    }
    let osc = KNESER_THRESHOLD - sup;
    let non = inf - KNESER_THRESHOLD;
    if osc > margin_min && sup_ok {
        (KneserVerdict::Oscillatory, osc)
    } else if non > margin_min && inf_ok {
        (KneserVerdict::Nonoscillatory, non)
    } else {
        (KneserVerdict::Inconclusive, osc.abs().min(non.abs()))
    }
}

fn averaged_series(input: &KneserInput<'_>, ell: f64) -> Vec<(f64, f64)> {
    match input {
        KneserInput::Function { f, grid } => {
            let opts = QuadOptions { rtol: 1e-9, atol: 1e-14, ..QuadOptions::default() };
            grid.iter()
                .filter_map(|&x| integrate(|t| f(t), x, x + ell, &opts).ok().map(|v| (x, v / ell)))
                .collect()
        }
        KneserInput::Samples(s) => {
            let xs: Vec<f64> = s.iter().map(|p| p.0).collect();
            let last = *xs.last().unwrap_or(&f64::NEG_INFINITY);
            s.iter()
                .filter(|(x, _)| x + ell <= last)
                .map(|&(x, _)| (x, linear_average(s, x, x + ell)))
                .collect()
        }
    }
}

/// Mean of the piecewise-linear interpolant of `s` over `[lo, hi]`.
fn linear_average(s: &[(f64, f64)], lo: f64, hi: f64) -> f64 {
    let interp = |x: f64| {
        let i = s.partition_point(|p| p.0 <= x).clamp(1, s.len() - 1);
        let (x0, y0) = s[i - 1];
        let (x1, y1) = s[i];
        y0 + (y1 - y0) * (x - x0) / (x1 - x0)
    };
    let mut nodes = vec![lo];
    nodes.extend(s.iter().map(|p| p.0).filter(|&x| x > lo && x < hi));
    nodes.push(hi);
    let total: f64 = nodes.windows(2).map(|w| 0.5 * (interp(w[0]) + interp(w[1])) * (w[1] - w[0])).sum();
    total / (hi - lo)
}

fn averaged_conditions(
    interval: &Interval,
    samples: &[(f64, f64)],
    rho: &dyn Fn(f64) -> f64,
    ell_grid: &[f64],
) -> AveragedConditions {
    let opts = QuadOptions { rtol: 1e-8, atol: 1e-300, ..QuadOptions::default() };
    let rho_samples: Vec<(f64, f64)> = samples.iter().map(|&(x, _)| (x, rho(x))).collect();
    let delta_bounded = analyze_bounded(interval, samples).bounded;
    let rho_bounded = analyze_bounded(interval, &rho_samples).bounded;
    let rho_vanishes = analyze_limit(interval, &rho_samples, Some(0.0)).trend.is_convergent();
    let rho_slowly_varying = ell_grid.iter().all(|&ell| {
        let ratio: Vec<(f64, f64)> = rho_samples
            .iter()
            .map(|&(x, r0)| {
                let var = integrate(|t| (rho(x + t) - r0).abs(), 0.0, ell, &opts).unwrap_or(f64::NAN);
                (x, var / (ell * r0))
            })
            .collect();
        analyze_limit(interval, &ratio, Some(0.0)).trend.is_convergent()
    });
    let pass = delta_bounded && rho_bounded && rho_vanishes && rho_slowly_varying;
    AveragedConditions { delta_bounded, rho_bounded, rho_vanishes, rho_slowly_varying, pass }
}

/// Compares tail extrema of the Kneser quantity against `-1/4`.
///
/// `Averaged` replaces the samples by window means `(1/l) int_x^{x+l}` and
/// uses `inf_l limsup` (resp. `sup_l liminf`) over `ell_grid`. When `rho` is
/// given, its regularity conditions are checked and failure forces
/// `Inconclusive`.
pub fn kneser_classify(
    input: &KneserInput<'_>,
    interval: &Interval,
    mode: KneserMode,
    margin_min: f64,
    ell_grid: &[f64],
    rho: Option<&dyn Fn(f64) -> f64>,
) -> KneserReport {
    let mut samples: Vec<(f64, f64)> = match input {
        KneserInput::Samples(s) => s.to_vec(),
        KneserInput::Function { f, grid } => grid.iter().map(|&x| (x, f(x))).collect(),
    };
    samples.sort_by(|a, b| a.0.total_cmp(&b.0));
    let windows = window_stats(interval, &samples);
    let inconclusive = |windows: Vec<WindowStat>, samples: Vec<(f64, f64)>, side| KneserReport {
        mode,
        samples,
        windows,
        sup_tail: f64::NAN,
        inf_tail: f64::NAN,
        margin: f64::NAN,
        margin_min,
        verdict: KneserVerdict::Inconclusive,
        per_ell: Vec::new(),
        side_conditions: side,
    };
    match mode {
        KneserMode::Pointwise => {
            let Some((sup, inf, sup_ok, inf_ok)) = tail_extrema(&windows, margin_min) else {
                return inconclusive(windows, samples, SideConditionRecord::NotRequired);
            };
            let (verdict, margin) = decide(sup, inf, sup_ok, inf_ok, margin_min);
            KneserReport {
                mode,
                samples,
                windows,
                sup_tail: sup,
                inf_tail: inf,
                margin,
                margin_min,
                verdict,
                per_ell: Vec::new(),
                side_conditions: SideConditionRecord::NotRequired,
            }
        }
        KneserMode::Averaged => {
            let side = match rho {
                Some(rho) => SideConditionRecord::Checked(averaged_conditions(interval, &samples, rho, ell_grid)),
                None => SideConditionRecord::NotChecked,
            };
            let mut per_ell = Vec::new();
            let mut best_sup = (f64::INFINITY, false);
            let mut best_inf = (f64::NEG_INFINITY, false);
            for &ell in ell_grid {
                let series = averaged_series(input, ell);
                let w = window_stats(interval, &series);
                let Some((sup, inf, sup_ok, inf_ok)) = tail_extrema(&w, margin_min) else {
                    continue;
                };
                per_ell.push(EllSummary { ell, limsup: sup, liminf: inf });
                if sup < best_sup.0 {
                    best_sup = (sup, sup_ok);
                }
                if inf > best_inf.0 {
                    best_inf = (inf, inf_ok);
                }
            }
            if per_ell.is_empty() {
                return inconclusive(windows, samples, side);
            }
            let (mut verdict, margin) = decide(best_sup.0, best_inf.0, best_sup.1, best_inf.1, margin_min);
            if let SideConditionRecord::Checked(c) = &side {
                if !c.pass {
                    verdict = KneserVerdict::Inconclusive;
                }
            }
            KneserReport {
                mode,
                samples,
                windows,
                sup_tail: best_sup.0,
                inf_tail: best_inf.0,
                margin,
                margin_min,
                verdict,
                per_ell,
                side_conditions: side,
            }
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct AventuraReport {
    pub n: u32,
    pub trend: LimitTrend,
    pub pass: bool,
}

/// Checks `L_n(x)^2 (p1(x) - p_inf) / x^2 -> 0`, which makes the correction
/// term of `delta_tilde` vanish in the limit.
pub fn aventura_check(c1: &CoefficientSet, n: u32, tail_grid: &[f64]) -> Result<AventuraReport> {
    c1.tail().ok_or(Error::MissingTail)?;
    let e_n = LogScale::e(n as i32);
    let mut samples = Vec::with_capacity(tail_grid.len());
    for &x in tail_grid {
        if !(x > e_n) {
            return Err(Error::Domain(format!("tail grid point {x} not above e_{n} = {e_n}")));
        }
        let dev = c1.deviation(x).ok_or(Error::MissingTail)?;
        let l = LogScale::big_l(n as i32, x);
        samples.push((x, l * l * dev.p / (x * x)));
    }
    let trend = analyze_limit(c1.interval(), &samples, Some(0.0));
    let pass = trend.trend.is_convergent();
    Ok(AventuraReport { n, trend, pass })
}
