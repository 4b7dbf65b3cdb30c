//! Coefficient triples `(p, q, r)` for `(1/r)(-(p u')' + q u)` on `(a, b)`.
//!
//! Coefficients come from a closed catalogue of families plus piecewise-linear
//! tables, so positivity and tail behaviour can be checked on sample grids.

use serde::{Deserialize, Deserializer, Serialize, Serializer};

use crate::error::{Error, Result};
use crate::kneser::LogScale;
use crate::tail::{analyze_limit, LimitTrend};

/// Interval `(a, b)` with finite `a` and `b` finite or `+inf`.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct Interval {
    pub a: f64,
    #[serde(serialize_with = "ser_extended", deserialize_with = "de_extended")]
    pub b: f64,
}

fn ser_extended<S: Serializer>(v: &f64, s: S) -> std::result::Result<S::Ok, S::Error> {
    if v.is_infinite() && *v > 0.0 {
        s.serialize_str("inf")
    } else {
        s.serialize_f64(*v)
    }
}

fn de_extended<'de, D: Deserializer<'de>>(d: D) -> std::result::Result<f64, D::Error> {
    #[derive(Deserialize)]
    #[serde(untagged)]
    enum Ext {
        Num(f64),
        Text(String),
    }
    match Ext::deserialize(d)? {
        Ext::Num(v) => Ok(v),
        Ext::Text(t) => match t.to_ascii_lowercase().as_str() {
            "inf" | "+inf" | "infinity" | "+infinity" => Ok(f64::INFINITY),
            other => Err(serde::de::Error::custom(format!("expected a number or \"inf\", got \"{other}\""))),
        },
    }
}

impl Interval {
    pub fn new(a: f64, b: f64) -> Result<Self> {
        if !a.is_finite() {
            return Err(Error::Domain(format!("left endpoint must be finite, got {a}")));
        }
        if b.is_nan() || b <= a || b == f64::NEG_INFINITY {
            return Err(Error::Domain(format!("need a < b, got ({a}, {b})")));
        }
        Ok(Interval { a, b })
    }

    pub fn half_line(a: f64) -> Self {
        Interval { a, b: f64::INFINITY }
    }

    pub fn contains_open(&self, x: f64) -> bool {
        x > self.a && x < self.b
    }

    fn check(&self) -> Result<()> {
        Interval::new(self.a, self.b).map(|_| ())
    }
}

/// Limits `(p_inf, q_inf, r_inf)` of the coefficients as x -> b.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct Tail {
    pub p_inf: f64,
    pub q_inf: f64,
    pub r_inf: f64,
}

impl Tail {
    pub fn essential_bottom(&self) -> f64 {
        self.q_inf / self.r_inf
    }
}

/// One closed-form summand of a [`Profile`].
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum Term {
    Const { value: f64 },
    /// `coeff * x^exponent`
    Power { coeff: f64, exponent: f64 },
    /// `coeff * x^exponent * L_n(x)^log_exponent`
    LogPower { coeff: f64, exponent: f64, n: u32, log_exponent: f64 },
    /// `coeff * Q_n(x)`
    QScale { coeff: f64, n: u32 },
    /// `amp * sin(freq * x + phase)`
    Sin {
        amp: f64,
        freq: f64,
        #[serde(default)]
        phase: f64,
    },
    /// `amp * sin(freq * ln x)`
    SinLog { amp: f64, freq: f64 },
}

impl Term {
    fn eval(&self, x: f64) -> f64 {
        match *self {
            Term::Const { value } => value,
            Term::Power { coeff, exponent } => coeff * x.powf(exponent),
            Term::LogPower { coeff, exponent, n, log_exponent } => {
                coeff * x.powf(exponent) * LogScale::new(n).big_l_unchecked(x).powf(log_exponent)
            }
            Term::QScale { coeff, n } => coeff * LogScale::new(n).q_unchecked(x),
            Term::Sin { amp, freq, phase } => amp * (freq * x + phase).sin(),
            Term::SinLog { amp, freq } => amp * (freq * x.ln()).sin(),
        }
    }

    /// Points at or below this value are outside the term's domain.
    fn domain_floor(&self) -> f64 {
        match *self {
            Term::Const { .. } | Term::Sin { .. } => f64::NEG_INFINITY,
            Term::Power { exponent, .. } => {
                if exponent >= 0.0 && exponent.fract() == 0.0 {
                    f64::NEG_INFINITY
                } else {
                    0.0
                }
            }
            Term::LogPower { n, .. } => LogScale::e(n as i32),
            Term::QScale { n, .. } => LogScale::e(n as i32 - 1),
            Term::SinLog { .. } => 0.0,
        }
    }

    fn finite_params(&self) -> bool {
        match *self {
            Term::Const { value } => value.is_finite(),
            Term::Power { coeff, exponent } => coeff.is_finite() && exponent.is_finite(),
            Term::LogPower { coeff, exponent, log_exponent, .. } => {
                coeff.is_finite() && exponent.is_finite() && log_exponent.is_finite()
            }
            Term::QScale { coeff, .. } => coeff.is_finite(),
            Term::Sin { amp, freq, phase } => amp.is_finite() && freq.is_finite() && phase.is_finite(),
            Term::SinLog { amp, freq } => amp.is_finite() && freq.is_finite(),
        }
    }
}

/// Sum of closed-form terms.
#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
#[serde(transparent)]
pub struct Profile(pub Vec<Term>);

impl Profile {
    pub fn constant(value: f64) -> Self {
        Profile(vec![Term::Const { value }])
    }

    pub fn with(mut self, term: Term) -> Self {
        self.0.push(term);
        self
    }

    pub fn eval(&self, x: f64) -> f64 {
        self.constant_part() + self.variable_part(x)
    }

    fn constant_part(&self) -> f64 {
        self.0
            .iter()
            .filter_map(|t| match t {
                Term::Const { value } => Some(*value),
                _ => None,
            })
            .sum()
    }

    fn variable_part(&self, x: f64) -> f64 {
        self.0.iter().filter(|t| !matches!(t, Term::Const { .. })).map(|t| t.eval(x)).sum()
    }

    fn domain_floor(&self) -> f64 {
        self.0.iter().map(Term::domain_floor).fold(f64::NEG_INFINITY, f64::max)
    }
}

/// Closed-form coefficient families.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "family", content = "params", rename_all = "snake_case")]
pub enum FamilySpec {
    Constant { p: f64, q: f64, r: f64 },
    /// `p = p_inf`, `q = q_inf + c / x^2`, `r = r_inf`.
    InverseSquare {
        c: f64,
        #[serde(default)]
        q_inf: f64,
        #[serde(default = "one")]
        p_inf: f64,
        #[serde(default = "one")]
        r_inf: f64,
    },
    /// `p = p_inf`, `q = q_inf + p_inf Q_n(x) + gamma / L_n(x)^2`, `r = r_inf`; needs `a > e_n`.
    IteratedLog {
        n: u32,
        #[serde(default)]
        gamma: f64,
        #[serde(default)]
        q_inf: f64,
        #[serde(default = "one")]
        p_inf: f64,
        #[serde(default = "one")]
        r_inf: f64,
    },
    /// `p = p_inf`, `q = q_inf + gamma / x^2`, `r = r_inf + c x^(-s)` with `s > 0`.
    PerturbedWeight {
        #[serde(default = "one")]
        p_inf: f64,
        #[serde(default)]
        q_inf: f64,
        #[serde(default = "one")]
        r_inf: f64,
        c: f64,
        s: f64,
        #[serde(default)]
        gamma: f64,
    },
    /// Piecewise-linear tables on a shared grid; no declared tail.
    Tabulated { grid: Vec<f64>, p: Vec<f64>, q: Vec<f64>, r: Vec<f64> },
    /// Sums of catalogue terms with an optional declared tail.
    Composite {
        p: Profile,
        q: Profile,
        r: Profile,
        #[serde(default)]
        tail: Option<Tail>,
    },
}

fn one() -> f64 {
    1.0
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum FamilyTag {
    Constant,
    InverseSquare,
    IteratedLog,
    PerturbedWeight,
    Tabulated,
    Composite,
}

/// JSON document form: `{"family": ..., "params": {...}, "interval": {"a": .., "b": ..}}`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct FamilyDocument {
    #[serde(flatten)]
    pub spec: FamilySpec,
    pub interval: Interval,
}

impl FamilyDocument {
    pub fn build(&self) -> Result<CoefficientSet> {
        build_coefficients(self.spec.clone(), self.interval)
    }
}

/// Values of `(p, q, r)` at a point (or their deviation from the tail).
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct Coeffs {
    pub p: f64,
    pub q: f64,
    pub r: f64,
}

/// An immutable, validated coefficient triple.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct CoefficientSet {
    interval: Interval,
    spec: FamilySpec,
    tail: Option<Tail>,
    tag: FamilyTag,
}

fn lerp_table(grid: &[f64], values: &[f64], x: f64) -> f64 {
    let n = grid.len();
    if x <= grid[0] {
        return values[0];
    }
    if x >= grid[n - 1] {
        return values[n - 1];
    }
    let i = grid.partition_point(|&g| g <= x) - 1;
    let t = (x - grid[i]) / (grid[i + 1] - grid[i]);
    values[i] + t * (values[i + 1] - values[i])
}

pub fn build_coefficients(spec: FamilySpec, interval: Interval) -> Result<CoefficientSet> {
    interval.check()?;
    let positive = |name: &str, v: f64| -> Result<()> {
        if v.is_finite() && v > 0.0 {
            Ok(())
        } else {
            Err(Error::Spec(format!("{name} must be finite and positive, got {v}")))
        }
    };
    let finite = |name: &str, v: f64| -> Result<()> {
        if v.is_finite() {
            Ok(())
        } else {
            Err(Error::Spec(format!("{name} must be finite, got {v}")))
        }
    };
    let need_a_above = |floor: f64, why: &str| -> Result<()> {
        if interval.a > floor {
            Ok(())
        } else {
            Err(Error::Domain(format!("{why}: need a > {floor}, got a = {}", interval.a)))
        }
    };
    let (tag, tail) = match &spec {
        FamilySpec::Constant { p, q, r } => {
            positive("p", *p)?;
            positive("r", *r)?;
            finite("q", *q)?;
            (FamilyTag::Constant, Some(Tail { p_inf: *p, q_inf: *q, r_inf: *r }))
        }
        FamilySpec::InverseSquare { c, q_inf, p_inf, r_inf } => {
            positive("p_inf", *p_inf)?;
            positive("r_inf", *r_inf)?;
            finite("q_inf", *q_inf)?;
            finite("c", *c)?;
            if *c != 0.0 {
                need_a_above(0.0, "c/x^2 is singular at 0")?;
            }
            (FamilyTag::InverseSquare, Some(Tail { p_inf: *p_inf, q_inf: *q_inf, r_inf: *r_inf }))
        }
        FamilySpec::IteratedLog { n, gamma, q_inf, p_inf, r_inf } => {
            positive("p_inf", *p_inf)?;
            positive("r_inf", *r_inf)?;
            finite("q_inf", *q_inf)?;
            finite("gamma", *gamma)?;
            need_a_above(LogScale::e(*n as i32), "iterated logarithm family")?;
            (FamilyTag::IteratedLog, Some(Tail { p_inf: *p_inf, q_inf: *q_inf, r_inf: *r_inf }))
        }
        FamilySpec::PerturbedWeight { p_inf, q_inf, r_inf, c, s, gamma } => {
            positive("p_inf", *p_inf)?;
            positive("r_inf", *r_inf)?;
            positive("s", *s)?;
            finite("q_inf", *q_inf)?;
            finite("c", *c)?;
            finite("gamma", *gamma)?;
            need_a_above(0.0, "x^(-s) weight perturbation")?;
            (FamilyTag::PerturbedWeight, Some(Tail { p_inf: *p_inf, q_inf: *q_inf, r_inf: *r_inf }))
        }
        FamilySpec::Tabulated { grid, p, q, r } => {
            if grid.len() < 2 || p.len() != grid.len() || q.len() != grid.len() || r.len() != grid.len() {
                return Err(Error::Spec("tables need a grid of >= 2 points and equal-length columns".into()));
            }
            if grid.iter().chain(p).chain(q).chain(r).any(|v| !v.is_finite()) {
                return Err(Error::Spec("table entries must be finite".into()));
            }
            if grid.windows(2).any(|w| w[1] <= w[0]) {
                return Err(Error::Spec("table grid must be strictly increasing".into()));
            }
            if interval.a < grid[0] || interval.b > grid[grid.len() - 1] {
                return Err(Error::Domain(format!(
                    "interval ({}, {}) exceeds table range [{}, {}]",
                    interval.a,
                    interval.b,
                    grid[0],
                    grid[grid.len() - 1]
                )));
            }
            (FamilyTag::Tabulated, None)
        }
        FamilySpec::Composite { p, q, r, tail } => {
            for (name, prof) in [("p", p), ("q", q), ("r", r)] {
                if prof.0.is_empty() {
                    return Err(Error::Spec(format!("profile {name} has no terms")));
                }
                if prof.0.iter().any(|t| !t.finite_params()) {
                    return Err(Error::Spec(format!("profile {name} has non-finite parameters")));
                }
                let floor = prof.domain_floor();
                if floor > f64::NEG_INFINITY {
                    need_a_above(floor, &format!("profile {name}"))?;
                }
            }
            if let Some(t) = tail {
                positive("tail.p_inf", t.p_inf)?;
                positive("tail.r_inf", t.r_inf)?;
                finite("tail.q_inf", t.q_inf)?;
            }
            (FamilyTag::Composite, *tail)
        }
    };
    Ok(CoefficientSet { interval, spec, tail, tag })
}

impl CoefficientSet {
    pub fn interval(&self) -> &Interval {
        &self.interval
    }

    pub fn spec(&self) -> &FamilySpec {
        &self.spec
    }

    pub fn tail(&self) -> Option<Tail> {
        self.tail
    }

    pub fn family_tag(&self) -> FamilyTag {
        self.tag
    }

    pub fn document(&self) -> FamilyDocument {
        FamilyDocument { spec: self.spec.clone(), interval: self.interval }
    }

    pub fn p(&self, x: f64) -> f64 {
        self.eval(x).p
    }

    pub fn q(&self, x: f64) -> f64 {
        self.eval(x).q
    }

    pub fn r(&self, x: f64) -> f64 {
        self.eval(x).r
    }

    pub fn eval(&self, x: f64) -> Coeffs {
        match &self.spec {
            FamilySpec::Tabulated { grid, p, q, r } => Coeffs {
                p: lerp_table(grid, p, x),
                q: lerp_table(grid, q, x),
                r: lerp_table(grid, r, x),
            },
            FamilySpec::Composite { p, q, r, .. } => Coeffs { p: p.eval(x), q: q.eval(x), r: r.eval(x) },
            _ => {
                let t = self.tail.expect("closed-form families carry a tail");
                let d = self.deviation(x).expect("closed-form families carry a tail");
                Coeffs { p: t.p_inf + d.p, q: t.q_inf + d.q, r: t.r_inf + d.r }
            }
        }
    }

    /// `(p - p_inf, q - q_inf, r - r_inf)` evaluated from the non-constant
    /// terms directly, so small deviations keep full relative precision.
    pub fn deviation(&self, x: f64) -> Option<Coeffs> {
        let tail = self.tail?;
        Some(match &self.spec {
            FamilySpec::Constant { .. } => Coeffs { p: 0.0, q: 0.0, r: 0.0 },
            FamilySpec::InverseSquare { c, .. } => Coeffs { p: 0.0, q: c / (x * x), r: 0.0 },
            FamilySpec::IteratedLog { n, gamma, p_inf, .. } => {
                let ls = LogScale::new(*n);
                let l = ls.big_l_unchecked(x);
                Coeffs { p: 0.0, q: p_inf * ls.q_unchecked(x) + gamma / (l * l), r: 0.0 }
            }
            FamilySpec::PerturbedWeight { c, s, gamma, .. } => Coeffs {
                p: 0.0,
                q: gamma / (x * x),
                r: c * x.powf(-s),
            },
            FamilySpec::Tabulated { .. } => return None,
            FamilySpec::Composite { p, q, r, .. } => Coeffs {
                p: p.variable_part(x) + (p.constant_part() - tail.p_inf),
                q: q.variable_part(x) + (q.constant_part() - tail.q_inf),
                r: r.variable_part(x) + (r.constant_part() - tail.r_inf),
            },
        })
    }
}

impl CoefficientSet {
    /// `q(x) - lambda r(x)`. With a tail this is formed as
    /// `(q_inf - lambda r_inf) + (dq - lambda dr)`, which keeps precision when
    /// `lambda` sits close to `q_inf / r_inf` far out in the tail.
    pub fn shifted_potential(&self, lambda: f64, x: f64) -> f64 {
        match (self.tail, self.deviation(x)) {
            (Some(t), Some(d)) => (t.q_inf - lambda * t.r_inf) + (d.q - lambda * d.r),
            _ => {
                let c = self.eval(x);
                c.q - lambda * c.r
            }
        }
    }
}

/// `c1 - c0` at `x`. Components whose declared tail limits coincide are
/// differenced through their deviations, avoiding cancellation.
pub fn coefficient_difference(c1: &CoefficientSet, c0: &CoefficientSet, x: f64) -> Coeffs {
    let v1 = c1.eval(x);
    let v0 = c0.eval(x);
    let mut d = Coeffs { p: v1.p - v0.p, q: v1.q - v0.q, r: v1.r - v0.r };
    if let (Some(t1), Some(t0), Some(d1), Some(d0)) = (c1.tail, c0.tail, c1.deviation(x), c0.deviation(x)) {
        if t1.p_inf == t0.p_inf {
            d.p = d1.p - d0.p;
        }
        if t1.q_inf == t0.q_inf {
            d.q = d1.q - d0.q;
        }
        if t1.r_inf == t0.r_inf {
            d.r = d1.r - d0.r;
        }
    }
    d
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Coefficient {
    P,
    Q,
    R,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum Violation {
    NonPositive { x: f64, coefficient: Coefficient, value: f64 },
    NonFinite { x: f64, coefficient: Coefficient },
    OutsideInterval { x: f64 },
    NotIncreasing { index: usize },
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ValidationReport {
    pub samples: usize,
    pub violations: Vec<Violation>,
}

impl ValidationReport {
    pub fn passed(&self) -> bool {
        self.violations.is_empty()
    }
}

/// Checks `p > 0`, `r > 0` and finiteness at every grid point.
pub fn validate(c: &CoefficientSet, grid: &[f64]) -> ValidationReport {
    let mut violations = Vec::new();
    for (i, &x) in grid.iter().enumerate() {
        if i > 0 && x <= grid[i - 1] {
            violations.push(Violation::NotIncreasing { index: i });
        }
        if !c.interval.contains_open(x) {
            violations.push(Violation::OutsideInterval { x });
            continue;
        }
        let v = c.eval(x);
        for (coefficient, value, must_be_positive) in
            [(Coefficient::P, v.p, true), (Coefficient::Q, v.q, false), (Coefficient::R, v.r, true)]
        {
            if !value.is_finite() {
                violations.push(Violation::NonFinite { x, coefficient });
            } else if must_be_positive && value <= 0.0 {
                violations.push(Violation::NonPositive { x, coefficient, value });
            }
        }
    }
    ValidationReport { samples: grid.len(), violations }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum TailLimits {
    Declared { tail: Tail },
    Estimated { tail: Tail, converged: bool, p: LimitTrend, q: LimitTrend, r: LimitTrend },
}

impl TailLimits {
    pub fn tail(&self) -> Tail {
        match self {
            TailLimits::Declared { tail } | TailLimits::Estimated { tail, .. } => *tail,
        }
    }

    pub fn converged(&self) -> bool {
        match self {
            TailLimits::Declared { .. } => true,
            TailLimits::Estimated { converged, .. } => *converged,
        }
    }
}

pub const MIN_TAIL_POINTS: usize = 16;

/// Declared limits verbatim, otherwise last-window estimates with a convergence flag.
pub fn tail_limits(c: &CoefficientSet, tail_grid: &[f64]) -> Result<TailLimits> {
    if let Some(tail) = c.tail {
        return Ok(TailLimits::Declared { tail });
    }
    estimate_tail(c, tail_grid)
}

/// Window estimates regardless of any declared tail.
pub fn estimate_tail(c: &CoefficientSet, tail_grid: &[f64]) -> Result<TailLimits> {
    if tail_grid.len() < MIN_TAIL_POINTS {
        return Err(Error::Precondition(format!(
            "tail grid needs >= {MIN_TAIL_POINTS} points, got {}",
            tail_grid.len()
        )));
    }
    let vals: Vec<(f64, Coeffs)> = tail_grid.iter().map(|&x| (x, c.eval(x))).collect();
    let series = |f: fn(&Coeffs) -> f64| -> Vec<(f64, f64)> { vals.iter().map(|(x, v)| (*x, f(v))).collect() };
    let p = analyze_limit(&c.interval, &series(|v| v.p), None);
    let q = analyze_limit(&c.interval, &series(|v| v.q), None);
    let r = analyze_limit(&c.interval, &series(|v| v.r), None);
    let converged = p.trend.is_convergent() && q.trend.is_convergent() && r.trend.is_convergent();
    let tail = Tail { p_inf: p.estimate, q_inf: q.estimate, r_inf: r.estimate };
    Ok(TailLimits::Estimated { tail, converged, p, q, r })
}
