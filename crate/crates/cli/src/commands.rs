//! One function per analysis command.

use std::sync::Arc;

use rayon::prelude::*;
use serde_json::{json, Value};

use relosc::classify::{
    classify_oscillation, classify_relative, essential_spectrum_invariance, limit_point_probe, Invariance, OscKind, OscVerdict,
    WindowPolicy,
};
use relosc::coeffs::{coefficient_difference, CoefficientSet, FamilyDocument, Interval};
use relosc::kneser::{delta_tilde, kneser_classify, KneserInput, KneserVerdict, LogScale, DEFAULT_ELL_GRID};
use relosc::pruefer::{count_zeros, integrate_pruefer, zero_positions, PrueferOptions};
use relosc::relosc::{check_conditions, modified_wronskian, relative_count, sturm_comparison_check, wronskian_zero_count_dense, RelativeTrace};
use relosc::spectra::{
    accumulation_study, count_below, fd_inertia_count_with, gap_finiteness, AccumulationEvidence, AccumulationOptions, GridMap,
    TruncatedProblem,
};
use relosc::tail::geometric_tail_grid;

use crate::config::{
    ClassifyConfig, EigencountConfig, InvarianceConfig, KneserConfig, KneserSource, ReloscConfig, TailGrid, TraceConfig,
};
use crate::report::{Report, Status};
use crate::CliError;

/// Numeric settings after merging config and flags.
#[derive(Clone, Copy, Debug)]
pub struct Resolved {
    pub opts: PrueferOptions,
    pub margin: f64,
    pub policy: WindowPolicy,
}

fn build(doc: &FamilyDocument) -> Result<Arc<CoefficientSet>, CliError> {
    Ok(Arc::new(doc.build()?))
}

fn to_value<T: serde::Serialize>(v: &T) -> Value {
    serde_json::to_value(v).expect("report types serialize")
}

/// Start of a tail grid: explicit, or one unit inside the interval (and past `e_n`).
fn tail_start(interval: &Interval, tail: &TailGrid, floor: f64) -> f64 {
    tail.x_start.unwrap_or_else(|| interval.a.max(floor).max(0.0) + 1.0)
}

pub fn trace(cfg: &TraceConfig, r: &Resolved) -> Result<Report, CliError> {
    let c = build(&cfg.equation)?;
    let tr = integrate_pruefer(c, cfg.lambda, cfg.theta_a, cfg.x_end, &r.opts)?;
    let zeros = count_zeros(&tr, cfg.x_end)?;
    let last = tr.states[tr.states.len() - 1];
    let body = json!({
        "lambda": cfg.lambda,
        "theta_a": cfg.theta_a,
        "x_end": cfg.x_end,
        "zeros_before_x_end": zeros,
        "zero_positions": zero_positions(&tr),
        "theta_end": last.theta,
        "log_rho_end": last.log_rho,
        "error_estimate": tr.error_estimate,
        "accepted_steps": tr.states.len() - 1,
    });
    Ok(Report {
        status: Status::Ok,
        summary: format!("{zeros} zeros in (a, {})", cfg.x_end),
        body,
        csv: Some(tr.to_csv()),
    })
}

pub fn relosc(cfg: &ReloscConfig, r: &Resolved) -> Result<Report, CliError> {
    let c0 = build(&cfg.equation0)?;
    let c1 = build(&cfg.equation1)?;
    let rt = RelativeTrace::integrate(c0.clone(), cfg.lambda0, cfg.theta0, c1.clone(), cfg.lambda1, cfg.theta1, cfg.x_end, &r.opts)?;
    let a = rt.x_start();
    let grid: Vec<f64> = (1..=1000).map(|i| a + (cfg.x_end - a) * i as f64 / 1000.0).collect();
    let conditions = check_conditions(&c0, cfg.lambda0, &c1, cfg.lambda1, &grid);
    let sturm = if conditions.cond_strict { Some(to_value(&sturm_comparison_check(&rt)?)) } else { None };
    let samples = cfg
        .samples
        .iter()
        .map(|&x| {
            let dense = match cfg.dense_grid {
                Some(n) => Some(to_value(&wronskian_zero_count_dense(&rt, x, n)?)),
                None => None,
            };
            Ok(json!({
                "x": x,
                "relative_count": relative_count(&rt, x)?,
                "wronskian": modified_wronskian(&rt, x)?,
                "dense": dense,
            }))
        })
        .collect::<Result<Vec<Value>, CliError>>()?;
    let n_end = relative_count(&rt, cfg.x_end)?;
    // The grid is echoed in the CSV-sized trace already; keep the JSON compact.
    let mut cond = to_value(&conditions);
    cond.as_object_mut().expect("struct").remove("grid");
    let body = json!({
        "x_end": cfg.x_end,
        "relative_count_at_x_end": n_end,
        "degenerate": rt.degenerate,
        "conditions": cond,
        "condition_grid_points": grid.len(),
        "sturm": sturm,
        "samples": samples,
    });
    Ok(Report {
        status: Status::Ok,
        summary: format!("N(u0,u1)({}) = {n_end}", cfg.x_end),
        body,
        csv: Some(rt.to_csv()?),
    })
}

fn verdict_status(kind: OscKind) -> Status {
    if kind == OscKind::Inconclusive {
        Status::Inconclusive
    } else {
        Status::Ok
    }
}

pub fn classify(cfg: &ClassifyConfig, r: &Resolved) -> Result<Report, CliError> {
    let c = build(&cfg.equation)?;
    let verdict: OscVerdict = match &cfg.reference {
        Some(reference) => {
            let c0 = build(&reference.equation)?;
            classify_relative(&c0, reference.lambda, &c, cfg.lambda, &r.policy, &r.opts)?
        }
        None => classify_oscillation(&c, cfg.lambda, &r.policy, &r.opts)?,
    };
    let what = if cfg.reference.is_some() { "relative" } else { "classical" };
    Ok(Report {
        status: verdict_status(verdict.kind),
        summary: format!("{what} verdict {:?} (basis {:?})", verdict.kind, verdict.basis),
        body: json!({ "lambda": cfg.lambda, "relative": cfg.reference.is_some(), "verdict": verdict }),
        csv: Some(verdict.to_csv()),
    })
}

pub fn kneser(cfg: &KneserConfig, r: &Resolved) -> Result<Report, CliError> {
    let ell: Vec<f64> = cfg.ell_grid.clone().unwrap_or_else(|| DEFAULT_ELL_GRID.to_vec());
    let report = match &cfg.source {
        KneserSource::Equation { equation, n } => {
            let c = equation.build()?;
            let iv = *c.interval();
            let grid = geometric_tail_grid(&iv, tail_start(&iv, &cfg.tail, LogScale::e(*n as i32)), cfg.tail.windows, cfg.tail.per_window);
            // Validate every grid point up front so the closure below cannot fail.
            for &x in &grid {
                delta_tilde(&c, *n, x)?;
            }
            let f = |x: f64| delta_tilde(&c, *n, x).unwrap_or(f64::NAN);
            kneser_classify(&KneserInput::Function { f: &f, grid: &grid }, &iv, cfg.mode, r.margin, &ell, None)
        }
        KneserSource::Constant { value, interval } => {
            let iv = Interval::new(interval.a, interval.b)?;
            let grid = geometric_tail_grid(&iv, tail_start(&iv, &cfg.tail, f64::NEG_INFINITY), cfg.tail.windows, cfg.tail.per_window);
            let v = *value;
            let f = move |_: f64| v;
            kneser_classify(&KneserInput::Function { f: &f, grid: &grid }, &iv, cfg.mode, r.margin, &ell, None)
        }
        KneserSource::Samples { samples, interval } => {
            let iv = Interval::new(interval.a, interval.b)?;
            kneser_classify(&KneserInput::Samples(samples), &iv, cfg.mode, r.margin, &ell, None)
        }
    };
    let mut csv = String::from("x,value\n");
    for (x, v) in &report.samples {
        csv.push_str(&format!("{x:e},{v:e}\n"));
    }
    let status = if report.verdict == KneserVerdict::Inconclusive { Status::Inconclusive } else { Status::Ok };
    Ok(Report {
        status,
        summary: format!(
            "Kneser verdict {:?} (limsup {:.6}, liminf {:.6}, margin {:.3e})",
            report.verdict, report.sup_tail, report.inf_tail, report.margin
        ),
        body: to_value(&report),
        csv: Some(csv),
    })
}

pub fn eigencount(cfg: &EigencountConfig, r: &Resolved) -> Result<Report, CliError> {
    let c = build(&cfg.equation)?;
    if cfg.study {
        let opts = AccumulationOptions { grid_n: cfg.grid_n, map: cfg.map, pruefer: r.opts };
        let table = accumulation_study(&c, &cfg.truncations, &cfg.lambdas, &opts)?;
        let status = if table.evidence == AccumulationEvidence::Unclear { Status::Inconclusive } else { Status::Ok };
        return Ok(Report {
            status,
            summary: format!("accumulation evidence {:?}, max |shoot - fd| = {}", table.evidence, table.max_disagreement),
            csv: Some(table.to_csv()),
            body: to_value(&table),
        });
    }
    let a = c.interval().a;
    let problems: Vec<TruncatedProblem> = cfg
        .truncations
        .iter()
        .map(|&b| TruncatedProblem::new(c.clone(), b, cfg.bc_left, cfg.bc_right))
        .collect::<Result<_, _>>()?;
    let jobs: Vec<(usize, f64)> = (0..problems.len()).flat_map(|i| cfg.lambdas.iter().map(move |&l| (i, l))).collect();
    let rows = jobs
        .par_iter()
        .map(|&(i, lambda)| {
            let tp = &problems[i];
            let map = cfg.map.unwrap_or(if a > 0.0 && tp.b_trunc > 100.0 * a { GridMap::Logarithmic } else { GridMap::Uniform });
            let shoot = count_below(tp, lambda, &r.opts)?;
            let fd = fd_inertia_count_with(tp, lambda, cfg.grid_n, map)?;
            Ok((tp.b_trunc, shoot, fd))
        })
        .collect::<Result<Vec<_>, relosc::Error>>()?;
    let mut csv = String::from("b_trunc,lambda,count_shoot,count_fd\n");
    let mut body_rows = Vec::with_capacity(rows.len());
    let mut worst = 0;
    for (b, shoot, fd) in &rows {
        csv.push_str(&format!("{b:e},{:e},{},{}\n", shoot.lambda, shoot.count, fd.count));
        worst = worst.max((shoot.count - fd.count).abs());
        body_rows.push(json!({ "b_trunc": b, "shooting": shoot, "fd": fd }));
    }
    Ok(Report {
        status: Status::Ok,
        summary: format!("{} counts, max |shoot - fd| = {worst}", rows.len()),
        body: json!({ "bc_left": cfg.bc_left, "bc_right": cfg.bc_right, "grid_n": cfg.grid_n, "rows": body_rows, "max_disagreement": worst }),
        csv: Some(csv),
    })
}

pub fn invariance(cfg: &InvarianceConfig, r: &Resolved) -> Result<Report, CliError> {
    let c0 = build(&cfg.equation0)?;
    let c1 = build(&cfg.equation1)?;
    let iv = *c0.interval();
    let grid = geometric_tail_grid(&iv, tail_start(&iv, &cfg.tail, f64::NEG_INFINITY), cfg.tail.windows, cfg.tail.per_window);
    let record = essential_spectrum_invariance(&c0, &c1, &grid)?;
    let probe = |c: &CoefficientSet| match limit_point_probe(c, &grid) {
        Ok(p) => to_value(&p),
        Err(e) => json!({ "error": e.to_string() }),
    };
    let probes = json!([probe(&c0), probe(&c1)]);
    let gap = match (cfg.gap, record.bottom) {
        (Some(g), _) => Some(g),
        (None, Some(bottom)) => Some((bottom - 2.0, bottom - 1.0)),
        (None, None) => None,
    };
    let gaps = match gap {
        Some((lambda, mu)) => {
            let g0 = gap_finiteness(&c0, lambda, mu, &r.policy, &r.opts)?;
            let g1 = gap_finiteness(&c1, lambda, mu, &r.policy, &r.opts)?;
            Some(json!({ "lambda": lambda, "mu": mu, "finite0": g0.finite, "finite1": g1.finite, "agree": g0.finite == g1.finite }))
        }
        None => None,
    };
    let mut csv = String::from("x,weight_ratio,p_ratio,q_drift,q0_ratio\n");
    for &x in &grid {
        let d = coefficient_difference(&c1, &c0, x);
        let v0 = c0.eval(x);
        csv.push_str(&format!("{x:e},{:e},{:e},{:e},{:e}\n", d.r / v0.r, d.p / v0.p, d.q / v0.r, v0.q / v0.r));
    }
    let status = if record.verdict == Invariance::Unknown { Status::Inconclusive } else { Status::Ok };
    Ok(Report {
        status,
        summary: format!("essential spectrum {:?} (alpha {}, beta {})", record.verdict, record.report.pass_alpha, record.report.pass_beta),
        body: json!({ "invariance": record, "limit_point": probes, "gap": gaps, "tail_grid_points": grid.len() }),
        csv: Some(csv),
    })
}
