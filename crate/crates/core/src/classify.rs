//! Oscillation verdicts from counts on geometric windows, plus the tail
//! hypotheses under which essential spectra of two expressions coincide.
//!
//! A finite run can only observe counts up to some `x_K`. A window verdict is
//! therefore backed, where possible, by a certificate: the position of
//! `lambda` relative to the essential spectrum `[q_inf/r_inf, inf)` or, at its
//! bottom, a Kneser test of `delta_tilde`. The certificate decides; the window
//! evidence is kept alongside and any disagreement is flagged.

use std::fmt::Write as _;
use std::sync::Arc;

use serde::{Deserialize, Serialize};

use crate::coeffs::{coefficient_difference, CoefficientSet, Interval, Tail};
use crate::error::{Error, Result};
use crate::kneser::{delta_tilde, kneser_classify, window_integrals, KneserInput, KneserMode, KneserVerdict, LogScale, DEFAULT_MARGIN};
use crate::pruefer::{count_zeros, integrate_pruefer, PrueferOptions};
use crate::quad::{integrate, QuadOptions};
use crate::relosc::{relative_count, RelativeTrace};
use crate::tail::{analyze_bounded, analyze_limit, classify_window_sums, geometric_tail_grid, BoundTrend, LimitTrend, SumTrend};

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct WindowPolicy {
    pub x0: f64,
    pub ratio: f64,
    /// Number of windows; counts are taken at `x_0, ..., x_K`.
    pub k: usize,
    pub k_stable: usize,
    pub k_grow: usize,
}

impl WindowPolicy {
    /// `x0 = a + 1` (midpoint of `(a, b)` when `b <= a + 1`), ratio 2, 12 windows.
    pub fn default_for(interval: &Interval) -> Self {
        let x0 = if interval.b > interval.a + 1.0 { interval.a + 1.0 } else { 0.5 * (interval.a + interval.b) };
        WindowPolicy { x0, ratio: 2.0, k: 12, k_stable: 4, k_grow: 4 }
    }

    /// Default policy with enough windows for `x_K >= x_max` (infinite `b`).
    pub fn reaching(interval: &Interval, x_max: f64) -> Self {
        let mut p = Self::default_for(interval);
        if interval.b.is_infinite() && x_max > p.x0 {
            p.k = ((x_max / p.x0).log(p.ratio) - 1e-9).ceil().max(p.k_stable.max(p.k_grow) as f64) as usize;
        }
        p
    }

    /// `x_k = x0 ratio^k` (or `b - (b - x0) ratio^-k` for finite `b`).
    pub fn points(&self, interval: &Interval) -> Vec<f64> {
        (0..=self.k)
            .map(|k| {
                let f = self.ratio.powi(k as i32);
                if interval.b.is_infinite() {
                    if self.x0 > 0.0 {
                        self.x0 * f
                    } else {
                        interval.a + (self.x0 - interval.a) * f
                    }
                } else {
                    interval.b - (interval.b - self.x0) / f
                }
            })
            .collect()
    }

    pub fn check(&self, interval: &Interval) -> Result<()> {
        if !(self.ratio > 1.0) || self.k < self.k_stable || self.k < self.k_grow || self.k_stable == 0 || self.k_grow == 0 {
            return Err(Error::Precondition(format!("invalid window policy {self:?}")));
        }
        let pts = self.points(interval);
        if pts.iter().any(|&x| !interval.contains_open(x) || !x.is_finite()) {
            return Err(Error::Precondition(format!("window points leave ({}, {})", interval.a, interval.b)));
        }
        Ok(())
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum OscKind {
    Nonoscillatory,
    Oscillatory,
    Inconclusive,
}

/// Theory-backed evidence that overrides the finite-window observation.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum Certificate {
    /// `lambda < q_inf / r_inf`: only finitely many eigenvalues below lambda.
    BelowEssentialSpectrum { bottom: f64 },
    /// `lambda > q_inf / r_inf`: essential spectrum below lambda.
    AboveEssentialSpectrum { bottom: f64 },
    /// `lambda = q_inf / r_inf`: Kneser test of `delta_tilde` on scale `n`.
    Kneser { n: u32, sup_tail: f64, inf_tail: f64, verdict: KneserVerdict },
    /// Both expressions classified; a nonoscillatory side decides the pair.
    Sides { side0: OscKind, side1: OscKind },
    /// As `Sides`, but at least one side only has a window verdict. Evidence,
    /// not proof: it carries the window rule's limits.
    SideWindows { side0: OscKind, side1: OscKind },
    /// Same expression, `lambda0 = lambda1`: the relative count is -1 or 0.
    SameEquation,
    /// Same expression, both spectral parameters inside the essential spectrum.
    InsideEssentialSpectrum { bottom: f64 },
}

impl Certificate {
    pub fn kind(&self) -> OscKind {
        match self {
            Certificate::BelowEssentialSpectrum { .. } | Certificate::SameEquation => OscKind::Nonoscillatory,
            Certificate::AboveEssentialSpectrum { .. } | Certificate::InsideEssentialSpectrum { .. } => OscKind::Oscillatory,
            Certificate::Kneser { verdict, .. } => match verdict {
                KneserVerdict::Oscillatory => OscKind::Oscillatory,
                KneserVerdict::Nonoscillatory => OscKind::Nonoscillatory,
                KneserVerdict::Inconclusive => OscKind::Inconclusive,
            },
            Certificate::Sides { side0, side1 } | Certificate::SideWindows { side0, side1 } => sides_kind(*side0, *side1),
        }
    }
}

fn sides_kind(side0: OscKind, side1: OscKind) -> OscKind {
    match (side0, side1) {
        (OscKind::Nonoscillatory, OscKind::Nonoscillatory) => OscKind::Nonoscillatory,
        (OscKind::Nonoscillatory, OscKind::Oscillatory) | (OscKind::Oscillatory, OscKind::Nonoscillatory) => OscKind::Oscillatory,
        _ => OscKind::Inconclusive,
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Basis {
    Windows,
    Certificate,
    None,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct OscVerdict {
    pub kind: OscKind,
    /// Stabilized count, when the windows show one.
    pub n_limit: Option<i64>,
    pub windows: Vec<(f64, i64)>,
    pub policy: WindowPolicy,
    /// Verdict of the window rule alone.
    pub window_kind: OscKind,
    pub certificate: Option<Certificate>,
    pub basis: Basis,
    /// A decisive window verdict disagrees with the certificate.
    pub conflict: bool,
}

impl OscVerdict {
    pub fn to_csv(&self) -> String {
        let mut out = String::from("x_k,n_k\n");
        for (x, n) in &self.windows {
            let _ = writeln!(out, "{x:e},{n}");
        }
        out
    }
}

/// Stable over the last `k_stable` windows, or strictly growing in `|N|` over
/// each of the last `k_grow`.
fn window_rule(counts: &[i64], policy: &WindowPolicy) -> OscKind {
    let k = counts.len() - 1;
    let stable = counts[k - policy.k_stable..].windows(2).all(|w| w[0] == w[1]);
    let grows = counts[k - policy.k_grow..].windows(2).all(|w| w[1].abs() > w[0].abs());
    if stable {
        OscKind::Nonoscillatory
    } else if grows {
        OscKind::Oscillatory
    } else {
        OscKind::Inconclusive
    }
}

fn combine(window_kind: OscKind, counts: &[i64], certificate: Option<Certificate>, policy: WindowPolicy, xs: &[f64]) -> OscVerdict {
    let cert_kind = certificate.as_ref().map(|c| c.kind()).unwrap_or(OscKind::Inconclusive);
    let (kind, basis) = if cert_kind != OscKind::Inconclusive {
        (cert_kind, Basis::Certificate)
    } else if window_kind != OscKind::Inconclusive {
        (window_kind, Basis::Windows)
    } else {
        (OscKind::Inconclusive, Basis::None)
    };
    let conflict = window_kind != OscKind::Inconclusive && cert_kind != OscKind::Inconclusive && window_kind != cert_kind;
    let n_limit = (window_kind == OscKind::Nonoscillatory && kind == OscKind::Nonoscillatory).then(|| counts[counts.len() - 1]);
    OscVerdict {
        kind,
        n_limit,
        windows: xs.iter().copied().zip(counts.iter().copied()).collect(),
        policy,
        window_kind,
        certificate,
        basis,
        conflict,
    }
}

/// The declared tail, if `b = inf` and the deviations from it visibly vanish.
pub fn certified_tail(c: &CoefficientSet) -> Option<Tail> {
    let tail = c.tail()?;
    let iv = c.interval();
    if iv.b.is_finite() {
        return None;
    }
    let grid = geometric_tail_grid(iv, iv.a.max(0.0) + 1.0, 40, 4);
    let mut dp = Vec::with_capacity(grid.len());
    let mut dq = Vec::with_capacity(grid.len());
    let mut dr = Vec::with_capacity(grid.len());
    for &x in &grid {
        let d = c.deviation(x)?;
        dp.push((x, d.p));
        dq.push((x, d.q));
        dr.push((x, d.r));
    }
    [dp, dq, dr]
        .iter()
        .all(|s| analyze_limit(iv, s, Some(0.0)).trend.is_convergent())
        .then_some(tail)
}

/// Kneser test at the bottom of the essential spectrum on scales `n = 0..=3`;
/// the first decisive scale wins.
pub fn kneser_certificate(c: &CoefficientSet) -> Option<Certificate> {
    certified_tail(c)?;
    let iv = c.interval();
    let mut last = None;
    for n in 0..=3u32 {
        let start = iv.a.max(LogScale::e(n as i32)).max(0.0) + 1.0;
        let grid = geometric_tail_grid(iv, start, 48, 8);
        let samples: Option<Vec<(f64, f64)>> = grid.iter().map(|&x| delta_tilde(c, n, x).ok().map(|v| (x, v))).collect();
        let samples = samples?;
        let rep = kneser_classify(&KneserInput::Samples(&samples), iv, KneserMode::Pointwise, DEFAULT_MARGIN, &[], None);
        let cert = Certificate::Kneser { n, sup_tail: rep.sup_tail, inf_tail: rep.inf_tail, verdict: rep.verdict };
        if rep.verdict != KneserVerdict::Inconclusive {
            return Some(cert);
        }
        last = Some(cert);
    }
    last
}

/// Classical (non)oscillation of `tau - lambda` certified from the tail.
pub fn oscillation_certificate(c: &CoefficientSet, lambda: f64) -> Option<Certificate> {
    let tail = certified_tail(c)?;
    let bottom = tail.essential_bottom();
    if lambda < bottom {
        Some(Certificate::BelowEssentialSpectrum { bottom })
    } else if lambda > bottom {
        Some(Certificate::AboveEssentialSpectrum { bottom })
    } else {
        kneser_certificate(c)
    }
}

/// Counts zeros of the Dirichlet solution (`theta(a) = 0`) at the window
/// points and applies the window rule.
pub fn classify_oscillation(c: &Arc<CoefficientSet>, lambda: f64, policy: &WindowPolicy, opts: &PrueferOptions) -> Result<OscVerdict> {
    let iv = *c.interval();
    policy.check(&iv)?;
    let xs = policy.points(&iv);
    let trace = integrate_pruefer(c.clone(), lambda, 0.0, xs[xs.len() - 1], opts)?;
    let counts: Vec<i64> = xs.iter().map(|&x| count_zeros(&trace, x)).collect::<Result<_>>()?;
    let window_kind = window_rule(&counts, policy);
    Ok(combine(window_kind, &counts, oscillation_certificate(c, lambda), *policy, &xs))
}

fn same_expression(c0: &CoefficientSet, c1: &CoefficientSet) -> bool {
    c0.document() == c1.document()
}

/// Certificate for the pair: classical verdicts of both sides (a
/// nonoscillatory side makes relative and classical finiteness equivalent),
/// refined for a single expression by the position of both parameters.
pub fn relative_certificate(c0: &CoefficientSet, lambda0: f64, c1: &CoefficientSet, lambda1: f64) -> Option<Certificate> {
    if same_expression(c0, c1) {
        if lambda0 == lambda1 {
            return Some(Certificate::SameEquation);
        }
        if let Some(tail) = certified_tail(c0) {
            let bottom = tail.essential_bottom();
            if lambda0.min(lambda1) > bottom {
                return Some(Certificate::InsideEssentialSpectrum { bottom });
            }
        }
    }
    let side0 = oscillation_certificate(c0, lambda0).map(|c| c.kind())?;
    let side1 = oscillation_certificate(c1, lambda1).map(|c| c.kind())?;
    let cert = Certificate::Sides { side0, side1 };
    (cert.kind() != OscKind::Inconclusive).then_some(cert)
}

/// Window rule applied to `N(u0, u1)(x_k)` for Dirichlet solutions.
///
/// Without a certificate, both sides are classified on their own; a
/// nonoscillatory side then decides the pair (`SideWindows`). The relative
/// count of two nonoscillatory equations may wander between neighbouring
/// values without any comparison condition, so its windows often stay
/// undecided where the sides do not.
pub fn classify_relative(
    c0: &Arc<CoefficientSet>,
    lambda0: f64,
    c1: &Arc<CoefficientSet>,
    lambda1: f64,
    policy: &WindowPolicy,
    opts: &PrueferOptions,
) -> Result<OscVerdict> {
    let iv0 = *c0.interval();
    let iv1 = *c1.interval();
    policy.check(&iv0)?;
    policy.check(&iv1)?;
    let xs = policy.points(&iv0);
    let x_end = xs[xs.len() - 1];
    let rt = RelativeTrace::integrate(c0.clone(), lambda0, 0.0, c1.clone(), lambda1, 0.0, x_end, opts)?;
    let counts: Vec<i64> = xs.iter().map(|&x| relative_count(&rt, x)).collect::<Result<_>>()?;
    let window_kind = window_rule(&counts, policy);
    let certificate = match relative_certificate(c0, lambda0, c1, lambda1) {
        Some(cert) => Some(cert),
        None => {
            let side0 = classify_oscillation(c0, lambda0, policy, opts)?.kind;
            let side1 = classify_oscillation(c1, lambda1, policy, opts)?.kind;
            (sides_kind(side0, side1) != OscKind::Inconclusive).then_some(Certificate::SideWindows { side0, side1 })
        }
    };
    Ok(combine(window_kind, &counts, certificate, *policy, &xs))
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct AlphaBetaReport {
    /// `r1/r0 - 1`
    pub weight_ratio: LimitTrend,
    /// `p1/p0 - 1`
    pub p_ratio: LimitTrend,
    /// `(q1 - q0)/r0`
    pub q_drift: LimitTrend,
    /// `|q0/r0|`
    pub q0_bound: BoundTrend,
    pub pass_alpha: bool,
    pub pass_beta: bool,
    /// The same conditions with the roles of the two expressions exchanged.
    pub pass_alpha_sym: bool,
    pub pass_beta_sym: bool,
    pub symmetric_agree: bool,
}

impl AlphaBetaReport {
    pub fn pass(&self) -> bool {
        self.pass_alpha && self.pass_beta
    }
}

fn alpha_beta_one_way(c0: &CoefficientSet, c1: &CoefficientSet, grid: &[f64]) -> (LimitTrend, LimitTrend, LimitTrend, BoundTrend) {
    let iv = c0.interval();
    let mut wr = Vec::with_capacity(grid.len());
    let mut pr = Vec::with_capacity(grid.len());
    let mut qd = Vec::with_capacity(grid.len());
    let mut qb = Vec::with_capacity(grid.len());
    for &x in grid {
        let d = coefficient_difference(c1, c0, x);
        let v0 = c0.eval(x);
        wr.push((x, d.r / v0.r));
        pr.push((x, d.p / v0.p));
        qd.push((x, d.q / v0.r));
        qb.push((x, (v0.q / v0.r).abs()));
    }
    (
        analyze_limit(iv, &wr, Some(0.0)),
        analyze_limit(iv, &pr, Some(0.0)),
        analyze_limit(iv, &qd, Some(0.0)),
        analyze_bounded(iv, &qb),
    )
}

pub const MIN_ALPHA_BETA_POINTS: usize = 32;

/// Tail checks of `r1/r0 -> 1`, `p1/p0 -> 1`, `(q1 - q0)/r0 -> 0` and
/// boundedness of `q0/r0`, in both directions.
pub fn check_alpha_beta(c0: &CoefficientSet, c1: &CoefficientSet, tail_grid: &[f64]) -> Result<AlphaBetaReport> {
    if tail_grid.len() < MIN_ALPHA_BETA_POINTS {
        return Err(Error::Precondition(format!(
            "tail grid needs at least {MIN_ALPHA_BETA_POINTS} points, got {}",
            tail_grid.len()
        )));
    }
    let (weight_ratio, p_ratio, q_drift, q0_bound) = alpha_beta_one_way(c0, c1, tail_grid);
    let (w_s, p_s, q_s, b_s) = alpha_beta_one_way(c1, c0, tail_grid);
    let pass_alpha = [&weight_ratio, &p_ratio, &q_drift].iter().all(|t| t.trend.is_convergent());
    let pass_beta = q0_bound.bounded;
    let pass_alpha_sym = [&w_s, &p_s, &q_s].iter().all(|t| t.trend.is_convergent());
    let pass_beta_sym = b_s.bounded;
    Ok(AlphaBetaReport {
        weight_ratio,
        p_ratio,
        q_drift,
        q0_bound,
        pass_alpha,
        pass_beta,
        pass_alpha_sym,
        pass_beta_sym,
        symmetric_agree: (pass_alpha && pass_beta) == (pass_alpha_sym && pass_beta_sym),
    })
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Invariance {
    Invariant,
    Unknown,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct InvarianceRecord {
    pub verdict: Invariance,
    pub identical: bool,
    pub report: AlphaBetaReport,
    /// `q_inf / r_inf` of the first expression, when declared.
    pub bottom: Option<f64>,
}

/// Claims equal essential spectra only for identical expressions or when
/// both tail hypotheses pass (in both directions).
pub fn essential_spectrum_invariance(c0: &CoefficientSet, c1: &CoefficientSet, tail_grid: &[f64]) -> Result<InvarianceRecord> {
    let report = check_alpha_beta(c0, c1, tail_grid)?;
    let identical = same_expression(c0, c1);
    let verdict = if identical || (report.pass() && report.symmetric_agree) {
        Invariance::Invariant
    } else {
        Invariance::Unknown
    };
    Ok(InvarianceRecord { verdict, identical, report, bottom: c0.tail().map(|t| t.essential_bottom()) })
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum EndpointKind {
    LimitPoint,
    LimitCircle,
    Inconclusive,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct LimitPointProbe {
    pub kind: EndpointKind,
    /// Window integrals of `r u^2`, `u(x) = int_c^x 1/p`.
    pub sums_u: Vec<f64>,
    /// Window integrals of `r` (the solution `v = 1`).
    pub sums_v: Vec<f64>,
    pub trend_u: SumTrend,
    pub trend_v: SumTrend,
}

/// Heuristic Weyl classification at `b`: square integrability (weight `r`)
/// of the fundamental system `u = int_c^x 1/p`, `v = 1` of `-(p y')' = 0`.
/// Requires `q/r` bounded near `b`.
pub fn limit_point_probe(c: &CoefficientSet, tail_grid: &[f64]) -> Result<LimitPointProbe> {
    let iv = c.interval();
    let ratio: Vec<(f64, f64)> = tail_grid.iter().map(|&x| (x, (c.q(x) / c.r(x)).abs())).collect();
    if !analyze_bounded(iv, &ratio).bounded {
        return Err(Error::Precondition("q/r is not bounded along the tail grid".into()));
    }
    let anchor = *tail_grid.first().ok_or_else(|| Error::Precondition("empty tail grid".into()))?;
    let opts = QuadOptions { rtol: 1e-8, ..QuadOptions::default() };
    let sums_v = window_integrals(iv, tail_grid, |t| c.r(t))?;
    // u is accumulated edge to edge; inside a window it is the edge value plus
    // an inner integral of 1/p.
    let samples: Vec<(f64, f64)> = tail_grid.iter().map(|&x| (x, 0.0)).collect();
    let windows = crate::tail::window_stats(iv, &samples);
    let mut edges: Vec<f64> = windows.iter().map(|w| w.lo).collect();
    if let Some(w) = windows.last() {
        if w.hi > w.lo {
            edges.push(w.hi);
        }
    }
    let mut u_edge = integrate(|t| 1.0 / c.p(t), anchor, edges[0], &opts)?;
    let mut sums_u = Vec::with_capacity(edges.len());
    for e in edges.windows(2) {
        let (lo, hi) = (e[0], e[1]);
        let base = u_edge;
        let mut inner_err = None;
        let s = integrate(
            |t| match integrate(|s| 1.0 / c.p(s), lo, t, &opts) {
                Ok(v) => {
                    let u = base + v;
                    c.r(t) * u * u
                }
                Err(err) => {
                    inner_err.get_or_insert(err);
                    0.0
                }
            },
            lo,
            hi,
            &opts,
        )?;
        if let Some(err) = inner_err {
            return Err(err);
        }
        sums_u.push(s);
        u_edge += integrate(|t| 1.0 / c.p(t), lo, hi, &opts)?;
    }
    let trend_u = classify_window_sums(&sums_u);
    let trend_v = classify_window_sums(&sums_v);
    let kind = if trend_u == SumTrend::Divergent || trend_v == SumTrend::Divergent {
        EndpointKind::LimitPoint
    } else if trend_u == SumTrend::Cauchy && trend_v == SumTrend::Cauchy {
        EndpointKind::LimitCircle
    } else {
        EndpointKind::Inconclusive
    };
    Ok(LimitPointProbe { kind, sums_u, sums_v, trend_u, trend_v })
}
