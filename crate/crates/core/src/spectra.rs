//! Eigenvalue counts for regular truncations `(a, b_trunc)`.
//!
//! Two independent methods: Prüfer shooting (count of `pi`-multiples passed
//! by the angle at `b_trunc`) and the inertia of a three-point finite
//! difference pencil. Accumulation studies tabulate both over truncations and
//! spectral probes.

use std::f64::consts::{FRAC_PI_2, PI};
use std::fmt::Write as _;
use std::sync::Arc;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::classify::{classify_relative, OscKind, OscVerdict, WindowPolicy};
use crate::coeffs::CoefficientSet;
use crate::error::{Error, Result};
use crate::pruefer::{integrate_pruefer, PrueferOptions, Tolerances};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Bc {
    Dirichlet,
    Neumann,
}

impl Bc {
    /// Prüfer angle of the boundary condition.
    pub fn angle(self) -> f64 {
        match self {
            Bc::Dirichlet => 0.0,
            Bc::Neumann => FRAC_PI_2,
        }
    }
}

#[derive(Clone, Debug, Serialize)]
pub struct TruncatedProblem {
    #[serde(serialize_with = "serialize_doc")]
    pub coefficients: Arc<CoefficientSet>,
    pub b_trunc: f64,
    pub bc_left: Bc,
    pub bc_right: Bc,
}

fn serialize_doc<S: serde::Serializer>(c: &Arc<CoefficientSet>, s: S) -> std::result::Result<S::Ok, S::Error> {
    c.document().serialize(s)
}

impl TruncatedProblem {
    pub fn new(coefficients: Arc<CoefficientSet>, b_trunc: f64, bc_left: Bc, bc_right: Bc) -> Result<Self> {
        let iv = coefficients.interval();
        if !(b_trunc > iv.a && b_trunc < iv.b && b_trunc.is_finite()) {
            return Err(Error::Domain(format!("b_trunc = {b_trunc} not inside ({}, {})", iv.a, iv.b)));
        }
        Ok(TruncatedProblem { coefficients, b_trunc, bc_left, bc_right })
    }

    pub fn dirichlet(coefficients: Arc<CoefficientSet>, b_trunc: f64) -> Result<Self> {
        Self::new(coefficients, b_trunc, Bc::Dirichlet, Bc::Dirichlet)
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum CountMethod {
    PrueferShooting,
    FdInertia,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum GridMap {
    /// Uniform in x.
    Uniform,
    /// Uniform in `t = ln x` (requires `a > 0`); the problem is rewritten as
    /// `-(p e^-t w')' + q e^t w = lambda r e^t w`, which has the same spectrum.
    Logarithmic,
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum Resolution {
    Tolerance(Tolerances),
    Grid { n: usize, map: GridMap },
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct EigenCount {
    pub lambda: f64,
    /// Eigenvalues strictly below `lambda`.
    pub count: i64,
    pub method: CountMethod,
    pub resolution: Resolution,
    /// A zero pivot forced a retry at `lambda - 1e-12`.
    pub shifted: bool,
}

/// Eigenvalues below `lambda` by shooting: with `theta(a)` set by the left
/// condition, an eigenvalue sits wherever `theta(b_trunc)` equals
/// `beta + k pi` (`beta = pi` for Dirichlet, `pi/2` for Neumann), and
/// `theta(b_trunc)` increases with `lambda`.
pub fn count_below(tp: &TruncatedProblem, lambda: f64, opts: &PrueferOptions) -> Result<EigenCount> {
    let trace = integrate_pruefer(tp.coefficients.clone(), lambda, tp.bc_left.angle(), tp.b_trunc, opts)?;
    let theta_b = trace.states[trace.states.len() - 1].theta;
    let beta = match tp.bc_right {
        Bc::Dirichlet => PI,
        Bc::Neumann => FRAC_PI_2,
    };
    let count = (opts.snap.ceil_pi(theta_b - beta + PI) - 1).max(0);
    Ok(EigenCount {
        lambda,
        count,
        method: CountMethod::PrueferShooting,
        resolution: Resolution::Tolerance(opts.tol),
        shifted: false,
    })
}

/// Uniform-grid inertia count.
pub fn fd_inertia_count(tp: &TruncatedProblem, lambda: f64, grid_n: usize) -> Result<EigenCount> {
    fd_inertia_count_with(tp, lambda, grid_n, GridMap::Uniform)
}

/// Negative pivots of the symmetric tridiagonal `A - lambda B` from
/// `-(p u')' + q u` with midpoint `p`, nodal `q`, `r` (half cells at Neumann
/// ends). By Sylvester's law of inertia this is the number of discrete
/// eigenvalues below `lambda`.
pub fn fd_inertia_count_with(tp: &TruncatedProblem, lambda: f64, grid_n: usize, map: GridMap) -> Result<EigenCount> {
    if grid_n < 64 {
        return Err(Error::Precondition(format!("grid_n must be at least 64, got {grid_n}")));
    }
    let a = tp.coefficients.interval().a;
    if map == GridMap::Logarithmic && !(a > 0.0) {
        return Err(Error::Precondition("logarithmic grid needs a > 0".into()));
    }
    let resolution = Resolution::Grid { n: grid_n, map };
    match negative_pivots(tp, lambda, grid_n, map) {
        Some(count) => Ok(EigenCount { lambda, count, method: CountMethod::FdInertia, resolution, shifted: false }),
        None => {
            let shifted = lambda - 1e-12;
            let count = negative_pivots(tp, shifted, grid_n, map)
                .ok_or_else(|| Error::Precondition(format!("pivot breakdown at lambda = {lambda} and {shifted}")))?;
            Ok(EigenCount { lambda, count, method: CountMethod::FdInertia, resolution, shifted: true })
        }
    }
}

fn negative_pivots(tp: &TruncatedProblem, lambda: f64, n: usize, map: GridMap) -> Option<i64> {
    let c = &tp.coefficients;
    let a = c.interval().a;
    let b = tp.b_trunc;
    // Node i sits at s_i in the computational coordinate; x(s), dx/ds give the
    // transformed coefficients p / x' and (q - lambda r) x'.
    let (s0, s1) = match map {
        GridMap::Uniform => (a, b),
        GridMap::Logarithmic => (a.ln(), b.ln()),
    };
    let h = (s1 - s0) / n as f64;
    let to_x = |s: f64| match map {
        GridMap::Uniform => s,
        GridMap::Logarithmic => s.exp(),
    };
    let jac = |x: f64| match map {
        GridMap::Uniform => 1.0,
        GridMap::Logarithmic => x,
    };
    let node = |i: usize| if i == n { s1 } else { s0 + h * i as f64 };
    let p_mid = |i: usize| {
        let x = to_x(0.5 * (node(i) + node(i + 1)));
        c.p(x) / jac(x)
    };
    let first = if tp.bc_left == Bc::Neumann { 0 } else { 1 };
    let last = if tp.bc_right == Bc::Neumann { n } else { n - 1 };

    let mut negatives = 0i64;
    let mut prev_pivot = 0.0f64;
    let mut prev_off = 0.0f64;
    for i in first..=last {
        let x = if i == 0 { a } else if i == n { b } else { to_x(node(i)) };
        let left = if i > 0 { p_mid(i - 1) } else { 0.0 };
        let right = if i < n { p_mid(i) } else { 0.0 };
        let weight = if i == 0 || i == n { 0.5 } else { 1.0 };
        // Scaled by h: stiffness / h^2 plus the lumped potential.
        let diag = (left + right) / (h * h) + weight * c.shifted_potential(lambda, x) * jac(x);
        let pivot = if i == first { diag } else { diag - prev_off * prev_off / prev_pivot };
        if pivot == 0.0 || !pivot.is_finite() {
            return None;
        }
        if pivot < 0.0 {
            negatives += 1;
        }
        prev_pivot = pivot;
        prev_off = -right / (h * h);
    }
    Some(negatives)
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct GapVerdict {
    pub lambda: f64,
    pub mu: f64,
    /// Relative oscillation of `tau - mu` with respect to `tau - lambda`.
    pub relative: OscVerdict,
    /// `Some(true)`: finitely many eigenvalues in `(lambda, mu)`.
    pub finite: Option<bool>,
}

/// Finiteness of the spectrum in `(lambda, mu)` through relative
/// nonoscillation of `tau - mu` with respect to `tau - lambda`.
pub fn gap_finiteness(
    c: &Arc<CoefficientSet>,
    lambda: f64,
    mu: f64,
    policy: &WindowPolicy,
    opts: &PrueferOptions,
) -> Result<GapVerdict> {
    if !(lambda < mu) {
        return Err(Error::Precondition(format!("need lambda < mu, got {lambda} >= {mu}")));
    }
    let relative = classify_relative(c, lambda, c, mu, policy, opts)?;
    let finite = match relative.kind {
        OscKind::Nonoscillatory => Some(true),
        OscKind::Oscillatory => Some(false),
        OscKind::Inconclusive => None,
    };
    Ok(GapVerdict { lambda, mu, relative, finite })
}

/// `q_inf / r_inf`.
pub fn essential_bottom(c: &CoefficientSet) -> Result<f64> {
    c.tail().map(|t| t.essential_bottom()).ok_or(Error::MissingTail)
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct AccumulationOptions {
    pub grid_n: usize,
    /// `None` picks a logarithmic grid when `a > 0` and `b_trunc > 100 a`.
    pub map: Option<GridMap>,
    pub pruefer: PrueferOptions,
}

impl Default for AccumulationOptions {
    fn default() -> Self {
        AccumulationOptions { grid_n: 4000, map: None, pruefer: PrueferOptions::default() }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct AccumulationRow {
    pub b_trunc: f64,
    pub lambda: f64,
    pub count_shoot: i64,
    pub count_fd: i64,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ProbeTrend {
    pub lambda: f64,
    /// Shooting counts in truncation order.
    pub counts: Vec<i64>,
    pub nondecreasing: bool,
    /// Increase from the shortest to the longest truncation.
    pub growth: i64,
    /// Equal counts on the two longest truncations.
    pub stable: bool,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum AccumulationEvidence {
    /// Counts just below the essential spectrum keep growing with the truncation.
    Accumulation,
    /// Every probe's count has settled.
    Finite,
    Unclear,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct AccumulationTable {
    pub bottom: f64,
    pub truncations: Vec<f64>,
    pub probes: Vec<f64>,
    pub rows: Vec<AccumulationRow>,
    pub trends: Vec<ProbeTrend>,
    pub evidence: AccumulationEvidence,
    /// Largest `|count_shoot - count_fd|` in the table.
    pub max_disagreement: i64,
}

impl AccumulationTable {
    pub fn to_csv(&self) -> String {
        let mut out = String::from("b_trunc,lambda,count_shoot,count_fd\n");
        for r in &self.rows {
            let _ = writeln!(out, "{:e},{:e},{},{}", r.b_trunc, r.lambda, r.count_shoot, r.count_fd);
        }
        out
    }
}

/// Growth by at least 2 across the truncations at the probe nearest the
/// bottom is read as accumulation; counts settled at every probe, and equal
/// across the probes, as finiteness. Evidence only: truncated counts cannot prove either.
pub const ACCUMULATION_MIN_GROWTH: i64 = 2;

/// Every probe ends on the same count: moving towards the bottom no longer
/// adds eigenvalues. Without this, probes whose turning regions lie inside
/// every truncation look settled even when the eigenvalues do accumulate.
/// Conservative: a finite cluster between the probes also reads as unclear.
fn saturated_in_lambda(trends: &[ProbeTrend]) -> bool {
    let last: Vec<i64> = trends.iter().map(|t| t.counts[t.counts.len() - 1]).collect();
    last.windows(2).all(|w| w[0] == w[1])
}

pub fn accumulation_study(
    c: &Arc<CoefficientSet>,
    truncations: &[f64],
    probes: &[f64],
    opts: &AccumulationOptions,
) -> Result<AccumulationTable> {
    let bottom = essential_bottom(c)?;
    if let Some(&bad) = probes.iter().find(|&&l| !(l < bottom)) {
        return Err(Error::Precondition(format!("probe {bad} is not below the essential spectrum bottom {bottom}")));
    }
    if truncations.len() < 2 || probes.is_empty() {
        return Err(Error::Precondition("need at least two truncations and one probe".into()));
    }
    let a = c.interval().a;
    let problems: Vec<TruncatedProblem> =
        truncations.iter().map(|&b| TruncatedProblem::dirichlet(c.clone(), b)).collect::<Result<_>>()?;
    let jobs: Vec<(usize, usize)> = (0..problems.len()).flat_map(|i| (0..probes.len()).map(move |j| (i, j))).collect();
    let rows: Vec<AccumulationRow> = jobs
        .par_iter()
        .map(|&(i, j)| {
            let tp = &problems[i];
            let lambda = probes[j];
            let map = opts.map.unwrap_or(if a > 0.0 && tp.b_trunc > 100.0 * a { GridMap::Logarithmic } else { GridMap::Uniform });
            let shoot = count_below(tp, lambda, &opts.pruefer)?;
            let fd = fd_inertia_count_with(tp, lambda, opts.grid_n, map)?;
            Ok(AccumulationRow { b_trunc: tp.b_trunc, lambda, count_shoot: shoot.count, count_fd: fd.count })
        })
        .collect::<Result<_>>()?;

    let trends: Vec<ProbeTrend> = probes
        .iter()
        .enumerate()
        .map(|(j, &lambda)| {
            let counts: Vec<i64> = (0..truncations.len()).map(|i| rows[i * probes.len() + j].count_shoot).collect();
            let nondecreasing = counts.windows(2).all(|w| w[1] >= w[0]);
            let growth = counts[counts.len() - 1] - counts[0];
            let stable = counts[counts.len() - 1] == counts[counts.len() - 2];
            ProbeTrend { lambda, counts, nondecreasing, growth, stable }
        })
        .collect();
    let nearest = trends
        .iter()
        .max_by(|a, b| a.lambda.total_cmp(&b.lambda))
        .expect("at least one probe");
    let evidence = if nearest.nondecreasing && nearest.growth >= ACCUMULATION_MIN_GROWTH {
        AccumulationEvidence::Accumulation
    } else if trends.iter().all(|t| t.stable && t.growth < ACCUMULATION_MIN_GROWTH) && saturated_in_lambda(&trends) {
        AccumulationEvidence::Finite
    } else {
        AccumulationEvidence::Unclear
    };
    let max_disagreement = rows.iter().map(|r| (r.count_shoot - r.count_fd).abs()).max().unwrap_or(0);
    Ok(AccumulationTable {
        bottom,
        truncations: truncations.to_vec(),
        probes: probes.to_vec(),
        rows,
        trends,
        evidence,
        max_disagreement,
    })
}
