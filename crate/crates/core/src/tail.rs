//! Geometric tail grids and the window-based convergence policy used for
//! every "limit as x -> b" question in the crate.
//!
//! Windows have ratio 2 in the tail coordinate: `x / x_start` when `b = inf`,
//! `(b - x_start) / (b - x)` when `b` is finite. Only the last
//! [`TAIL_WINDOWS`] windows enter a verdict.

use serde::{Deserialize, Serialize};

use crate::coeffs::Interval;

pub const LIMIT_ATOL: f64 = 1e-8;
pub const LIMIT_RTOL: f64 = 1e-6;
pub const TAIL_WINDOWS: usize = 4;
/// Required shrink factor of the window deviation across the last windows.
pub const DECAY: f64 = 0.5;
/// Allowed relative growth of a running max across the last windows.
pub const BOUND_RTOL: f64 = 1e-3;

/// Samples `x_start * 2^(i / per_window)` (infinite `b`) or
/// `b - (b - x_start) * 2^(-i / per_window)` (finite `b`), `i = 0..=windows*per_window`.
pub fn geometric_tail_grid(interval: &Interval, x_start: f64, windows: usize, per_window: usize) -> Vec<f64> {
    let per_window = per_window.max(1);
    let n = windows * per_window;
    (0..=n)
        .map(|i| {
            let e = i as f64 / per_window as f64;
            if interval.b.is_infinite() {
                let origin = if x_start > 0.0 { x_start } else { 1.0 };
                let shift = if x_start > 0.0 { 0.0 } else { x_start - 1.0 };
                origin * e.exp2() + shift
            } else {
                interval.b - (interval.b - x_start) * (-e).exp2()
            }
        })
        .collect()
}

/// Tail coordinate relative to the first grid point; grows by 2 per window.
fn tail_coordinate(interval: &Interval, origin: f64, x: f64) -> f64 {
    if interval.b.is_infinite() {
        if origin > 0.0 {
            x / origin
        } else {
            x - origin + 1.0
        }
    } else {
        (interval.b - origin) / (interval.b - x)
    }
}

pub fn window_index(interval: &Interval, origin: f64, x: f64) -> i64 {
    (tail_coordinate(interval, origin, x).log2() + 1e-9).floor() as i64
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct WindowStat {
    pub index: i64,
    pub lo: f64,
    pub hi: f64,
    pub count: usize,
    pub mean: f64,
    pub min: f64,
    pub max: f64,
    /// Deviation used by the convergence policy (see [`analyze_limit`]).
    pub dev: f64,
}

/// Groups `(x, value)` samples into ratio-2 windows. Samples must be sorted in x.
pub fn window_stats(interval: &Interval, samples: &[(f64, f64)]) -> Vec<WindowStat> {
    let mut out: Vec<WindowStat> = Vec::new();
    let Some(&(origin, _)) = samples.first() else {
        return out;
    };
    let mut sum = 0.0;
    for &(x, v) in samples {
        let idx = window_index(interval, origin, x);
        match out.last_mut() {
            Some(w) if w.index == idx => {
                w.hi = x;
                w.count += 1;
                w.min = w.min.min(v);
                w.max = w.max.max(v);
                sum += v;
                w.mean = sum / w.count as f64;
            }
            _ => {
                sum = v;
                out.push(WindowStat { index: idx, lo: x, hi: x, count: 1, mean: v, min: v, max: v, dev: 0.0 });
            }
        }
    }
    out
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub enum Trend {
    /// Last-window deviation already below `LIMIT_ATOL + LIMIT_RTOL * |value|`.
    Converged,
    /// Deviations monotonically shrinking by at least [`DECAY`] over the last windows.
    Converging,
    NonConvergent,
}

impl Trend {
    pub fn is_convergent(self) -> bool {
        !matches!(self, Trend::NonConvergent)
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct LimitTrend {
    pub trend: Trend,
    pub estimate: f64,
    pub target: Option<f64>,
    pub windows: Vec<WindowStat>,
}

/// Decides whether sampled values approach `target` (or, when `None`, some
/// limit) as x -> b. Window deviation is `max |f - target|` with a target,
/// otherwise `max(max - min, |mean - previous mean|)`.
pub fn analyze_limit(interval: &Interval, samples: &[(f64, f64)], target: Option<f64>) -> LimitTrend {
    let mut windows = window_stats(interval, samples);
    let mut prev_mean: Option<f64> = None;
    for w in windows.iter_mut() {
        w.dev = match target {
            Some(t) => (w.max - t).abs().max((w.min - t).abs()),
            None => {
                let spread = w.max - w.min;
                match prev_mean {
                    Some(m) => spread.max((w.mean - m).abs()),
                    None => spread,
                }
            }
        };
        prev_mean = Some(w.mean);
    }
    let estimate = windows.last().map_or(f64::NAN, |w| w.mean);
    let trend = decide_trend(&windows, target.unwrap_or(estimate));
    LimitTrend { trend, estimate, target, windows }
}

fn decide_trend(windows: &[WindowStat], scale: f64) -> Trend {
    if windows.len() < TAIL_WINDOWS || windows.iter().any(|w| !w.dev.is_finite()) {
        return Trend::NonConvergent;
    }
    let tail = &windows[windows.len() - TAIL_WINDOWS..];
    let last = tail[TAIL_WINDOWS - 1].dev;
    if last <= LIMIT_ATOL + LIMIT_RTOL * scale.abs() {
        return Trend::Converged;
    }
    let monotone = tail.windows(2).all(|p| p[1].dev <= p[0].dev * (1.0 + 1e-9));
    if monotone && last <= DECAY * tail[0].dev {
        Trend::Converging
    } else {
        Trend::NonConvergent
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct BoundTrend {
    pub bounded: bool,
    /// Running max of |f| at the end of each window.
    pub running_max: Vec<f64>,
    pub bound: f64,
}

/// Boundedness evidence: the running max of |f| stops growing over the last windows.
pub fn analyze_bounded(interval: &Interval, samples: &[(f64, f64)]) -> BoundTrend {
    let windows = window_stats(interval, samples);
    let mut running = 0.0_f64;
    let running_max: Vec<f64> = windows
        .iter()
        .map(|w| {
            running = running.max(w.max.abs()).max(w.min.abs());
            running
        })
        .collect();
    let bound = running_max.last().copied().unwrap_or(f64::NAN);
    let bounded = running_max.len() >= TAIL_WINDOWS && bound.is_finite() && {
        let first = running_max[running_max.len() - TAIL_WINDOWS];
        bound - first <= BOUND_RTOL * bound.max(1.0)
    };
    BoundTrend { bounded, running_max, bound }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub enum SumTrend {
    /// Window contributions decay geometrically: partial sums are Cauchy.
    Cauchy,
    /// Window contributions do not decay: partial sums grow without bound.
    Divergent,
    Unclear,
}

pub const CAUCHY_RATIO: f64 = 0.8;
pub const DIVERGENT_RATIO: f64 = 0.95;

/// Classifies a sequence of non-negative window integrals.
pub fn classify_window_sums(sums: &[f64]) -> SumTrend {
    if sums.len() < TAIL_WINDOWS || sums.iter().any(|s| !s.is_finite()) {
        return SumTrend::Unclear;
    }
    let tail = &sums[sums.len() - TAIL_WINDOWS..];
    if tail.iter().all(|&s| s == 0.0) {
        return SumTrend::Cauchy;
    }
    let ratios: Vec<f64> = tail.windows(2).map(|p| p[1] / p[0]).collect();
    if ratios.iter().all(|&r| r <= CAUCHY_RATIO) {
        SumTrend::Cauchy
    } else if ratios.iter().all(|&r| r >= DIVERGENT_RATIO) {
        SumTrend::Divergent
    } else {
        SumTrend::Unclear
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn half_line() -> Interval {
        Interval::new(0.0, f64::INFINITY).unwrap()
    }

    fn sample(grid: &[f64], f: impl Fn(f64) -> f64) -> Vec<(f64, f64)> {
        grid.iter().map(|&x| (x, f(x))).collect()
    }

    #[test]
    fn grid_windows_have_ratio_two() {
        let iv = half_line();
        let g = geometric_tail_grid(&iv, 1.0, 10, 8);
        assert_eq!(g.len(), 81);
        assert!((g[80] - 1024.0).abs() < 1e-9);
        let w = window_stats(&iv, &sample(&g, |x| x));
        assert_eq!(w.len(), 11);
        assert_eq!(w[0].count, 8);
    }

    #[test]
    fn finite_endpoint_clusters() {
        let iv = Interval::new(0.0, 1.0).unwrap();
        let g = geometric_tail_grid(&iv, 0.0, 20, 4);
        assert!(g.windows(2).all(|p| p[1] > p[0] && p[1] < 1.0));
        let w = window_stats(&iv, &sample(&g, |x| x));
        assert_eq!(w.len(), 21);
    }

    #[test]
    fn limit_policy() {
        let iv = half_line();
        let g = geometric_tail_grid(&iv, 1.0, 14, 8);
        assert_eq!(analyze_limit(&iv, &sample(&g, |_| 3.0), None).trend, Trend::Converged);
        let t = analyze_limit(&iv, &sample(&g, |x| 1.0 + 1.0 / x), None);
        assert_eq!(t.trend, Trend::Converging);
        assert!((t.estimate - 1.0).abs() < 1e-3);
        assert_eq!(analyze_limit(&iv, &sample(&g, f64::sin), None).trend, Trend::NonConvergent);
        assert_eq!(analyze_limit(&iv, &sample(&g, |x| x), Some(0.0)).trend, Trend::NonConvergent);
        assert_eq!(analyze_limit(&iv, &sample(&g, |x| 0.5 + 1.0 / x), Some(0.0)).trend, Trend::NonConvergent);
    }

    #[test]
    fn bounded_policy() {
        let iv = half_line();
        let g = geometric_tail_grid(&iv, 1.0, 20, 64);
        assert!(analyze_bounded(&iv, &sample(&g, |x| x.ln().sin())).bounded);
        assert!(!analyze_bounded(&iv, &sample(&g, |x| x)).bounded);
        assert!(!analyze_bounded(&iv, &sample(&g, |x| x.ln())).bounded);
    }

    #[test]
    fn window_sum_policy() {
        assert_eq!(classify_window_sums(&[1.0, 0.5, 0.25, 0.125]), SumTrend::Cauchy);
        assert_eq!(classify_window_sums(&[1.0, 2.0, 4.0, 8.0]), SumTrend::Divergent);
        assert_eq!(classify_window_sums(&[1.0, 1.0, 1.0, 1.0]), SumTrend::Divergent);
        assert_eq!(classify_window_sums(&[1.0, 0.9, 0.5, 0.2]), SumTrend::Unclear);
        assert_eq!(classify_window_sums(&[1.0, 0.5]), SumTrend::Unclear);
    }
}
