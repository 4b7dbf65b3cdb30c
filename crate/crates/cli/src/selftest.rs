//! Reduced-scale invariant suites for every module, driven by one seed.

use std::f64::consts::PI;
use std::panic::{catch_unwind, AssertUnwindSafe};
use std::sync::Arc;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::Serialize;
use serde_json::json;

use relosc::classify::{classify_oscillation, essential_spectrum_invariance, Invariance, OscKind, WindowPolicy};
use relosc::coeffs::{build_coefficients, CoefficientSet, FamilySpec, Interval};
use relosc::kneser::{delta, delta_tilde, kneser_classify, KneserInput, KneserMode, KneserVerdict, LogScale, PrincipalPair};
use relosc::pruefer::{count_zeros, integrate_pruefer, zero_positions, PrueferOptions};
use relosc::relosc::{relative_count, wronskian_zero_count_dense, RelativeTrace};
use relosc::spectra::{count_below, fd_inertia_count, TruncatedProblem};
use relosc::tail::geometric_tail_grid;

use crate::report::{Report, Status};

#[derive(Clone, Debug, Serialize)]
pub struct SuiteResult {
    pub suite: &'static str,
    pub pass: bool,
    pub detail: String,
    /// The random draws the suite used, for comparing runs across seeds.
    pub draws: Vec<f64>,
}

struct Ctx {
    opts: PrueferOptions,
    rng: ChaCha8Rng,
    draws: Vec<f64>,
}

impl Ctx {
    fn draw(&mut self, lo: f64, hi: f64) -> f64 {
        let v = self.rng.gen_range(lo..hi);
        self.draws.push(v);
        v
    }
}

type Outcome = Result<String, String>;

fn ensure(ok: bool, msg: impl FnOnce() -> String) -> Result<(), String> {
    if ok {
        Ok(())
    } else {
        Err(msg())
    }
}

fn err(e: relosc::Error) -> String {
    e.to_string()
}

fn fam(spec: FamilySpec, a: f64) -> Arc<CoefficientSet> {
    Arc::new(build_coefficients(spec, Interval::half_line(a)).expect("catalogue family"))
}

fn inverse_square(c: f64, a: f64) -> Arc<CoefficientSet> {
    fam(FamilySpec::InverseSquare { c, q_inf: 0.0, p_inf: 1.0, r_inf: 1.0 }, a)
}

fn counting(ctx: &mut Ctx) -> Outcome {
    let c = Arc::new(build_coefficients(FamilySpec::Constant { p: 1.0, q: 0.0, r: 1.0 }, Interval::new(0.0, 100.0 * PI).unwrap()).unwrap());
    let x = 100.0 * PI - 0.1;
    let tr = integrate_pruefer(c, 1.0, 0.0, x, &ctx.opts).map_err(err)?;
    let n = count_zeros(&tr, x).map_err(err)?;
    ensure(n == 99, || format!("free particle: {n} zeros, want 99"))?;
    let worst = zero_positions(&tr).iter().enumerate().map(|(k, z)| (z - (k + 1) as f64 * PI).abs()).fold(0.0, f64::max);
    ensure(worst <= 1e-8, || format!("zero positions off by {worst:e}"))?;
    // Angles a hair above k pi: the zero at the endpoint itself is not counted.
    for k in 1..=20 {
        let t = k as f64 * PI * (1.0 + ctx.draw(1e-13, 1e-11));
        let got = ctx.opts.snap.count(0.0, t);
        ensure(got == k - 1, || format!("angle {t} (k = {k}) counts {got}, want {}", k - 1))?;
    }
    Ok(format!("99 zeros, max offset {worst:.1e}; 20 snapped angles"))
}

fn pruefer(ctx: &mut Ctx) -> Outcome {
    for _ in 0..5 {
        let (p, q, r) = (ctx.draw(0.3, 3.0), ctx.draw(-1.0, 1.0), ctx.draw(0.3, 3.0));
        let lambda = q / r + ctx.draw(0.2, 4.0);
        let omega = ((lambda * r - q) / p).sqrt();
        let c = fam(FamilySpec::Constant { p, q, r }, 0.0);
        let tr = integrate_pruefer(c.clone(), lambda, 0.0, 25.0, &ctx.opts).map_err(err)?;
        for (k, z) in zero_positions(&tr).iter().enumerate() {
            let want = (k + 1) as f64 * PI / omega;
            ensure((z - want).abs() < 1e-9, || format!("(p,q,r) = ({p},{q},{r}): zero at {z}, want {want}"))?;
        }
        let fine = PrueferOptions { tol: ctx.opts.tol.scaled(0.5), ..ctx.opts };
        let tf = integrate_pruefer(c, lambda, 0.0, 25.0, &fine).map_err(err)?;
        let diff = (tr.theta_at(25.0).map_err(err)? - tf.theta_at(25.0).map_err(err)?).abs();
        ensure(diff < 10.0 * tr.error_estimate, || format!("halving tolerances moved theta by {diff:e}, estimate {:e}", tr.error_estimate))?;
    }
    Ok("5 constant-coefficient cases exact to 1e-9; tolerance halving consistent".into())
}

fn random_family(ctx: &mut Ctx) -> Arc<CoefficientSet> {
    let pick = ctx.draw(0.0, 3.0) as u32;
    let spec = match pick {
        0 => FamilySpec::Constant { p: ctx.draw(0.5, 2.0), q: ctx.draw(-1.0, 1.0), r: ctx.draw(0.5, 2.0) },
        1 => FamilySpec::InverseSquare { c: ctx.draw(-1.0, 1.0), q_inf: ctx.draw(-0.5, 0.5), p_inf: ctx.draw(0.5, 2.0), r_inf: 1.0 },
        _ => FamilySpec::PerturbedWeight {
            p_inf: 1.0,
            q_inf: ctx.draw(-0.5, 0.5),
            r_inf: ctx.draw(0.5, 2.0),
            c: ctx.draw(0.0, 1.0),
            s: ctx.draw(0.5, 3.0),
            gamma: ctx.draw(-1.0, 1.0),
        },
    };
    fam(spec, 1.0)
}

fn relative(ctx: &mut Ctx) -> Outcome {
    let opts = ctx.opts;
    let x_end = 21.0;
    for trial in 0..20 {
        let cs = [random_family(ctx), random_family(ctx), random_family(ctx)];
        let ls = [ctx.draw(-2.0, 5.0), ctx.draw(-2.0, 5.0), ctx.draw(-2.0, 5.0)];
        let ts = [ctx.draw(0.0, PI), ctx.draw(0.0, PI), ctx.draw(0.0, PI), ctx.draw(0.0, PI), ctx.draw(0.0, PI)];
        let tr = |k: usize, t: f64| integrate_pruefer(cs[k].clone(), ls[k], t, x_end, &opts).map(Arc::new).map_err(err);
        let u = [tr(0, ts[0])?, tr(1, ts[1])?, tr(2, ts[2])?];
        let (v0, v1) = (tr(0, ts[3])?, tr(1, ts[4])?);
        let rel = |a: &Arc<_>, b: &Arc<_>| RelativeTrace::new(Arc::clone(a), Arc::clone(b)).map_err(err);
        let (r01, r10, r12, r02, rv) = (rel(&u[0], &u[1])?, rel(&u[1], &u[0])?, rel(&u[1], &u[2])?, rel(&u[0], &u[2])?, rel(&v0, &v1)?);
        for i in 1..=20 {
            let x = 1.0 + 20.0 * i as f64 / 20.0 - 0.013;
            let n = |rt: &RelativeTrace| relative_count(rt, x).map_err(err);
            let (n01, n10, n12, n02, nv) = (n(&r01)?, n(&r10)?, n(&r12)?, n(&r02)?, n(&rv)?);
            let d = count_zeros(&u[1], x).map_err(err)? - count_zeros(&u[0], x).map_err(err)?;
            ensure(d - 3 <= n01 && n01 <= d + 1, || format!("trial {trial}, x = {x}: N = {n01} against N1 - N0 = {d}"))?;
            ensure(-n10 - 2 <= n01 && n01 <= -n10, || format!("trial {trial}, x = {x}: N01 = {n01}, N10 = {n10}"))?;
            ensure(n01 + n12 - 1 <= n02 && n02 <= n01 + n12 + 1, || format!("trial {trial}, x = {x}: chain {n01} + {n12} vs {n02}"))?;
            ensure(n01 - 4 <= nv && nv <= n01 + 2, || format!("trial {trial}, x = {x}: other solutions give {nv}, N = {n01}"))?;
        }
    }
    // Strict comparison: angle count equals the dense Wronskian count.
    for c in [fam(FamilySpec::Constant { p: 1.0, q: 0.0, r: 1.0 }, 0.0), inverse_square(-0.3, 1.0)] {
        let l0 = ctx.draw(-2.0, 2.0);
        let l1 = l0 + ctx.draw(0.1, 3.0);
        let a = c.interval().a;
        let rt = RelativeTrace::integrate(c.clone(), l0, 0.0, c, l1, 0.0, a + 20.0, &opts).map_err(err)?;
        for i in 1..=10 {
            let x = a + 2.0 * i as f64 - 0.37;
            let n = relative_count(&rt, x).map_err(err)?;
            let d = wronskian_zero_count_dense(&rt, x, 2000).map_err(err)?.count;
            ensure(n == d, || format!("lambda {l0} < {l1}, x = {x}: angle count {n}, dense {d}"))?;
        }
    }
    Ok("20 random triples x 20 points; 2 strict pairs x 10 points".into())
}

fn classify(ctx: &mut Ctx) -> Outcome {
    for (c, want) in [(-0.5, OscKind::Oscillatory), (-0.3, OscKind::Oscillatory), (-0.2, OscKind::Nonoscillatory), (0.0, OscKind::Nonoscillatory), (0.1, OscKind::Nonoscillatory)] {
        let cs = inverse_square(c, 1.0);
        let policy = WindowPolicy::reaching(cs.interval(), 2f64.powi(20));
        let v = classify_oscillation(&cs, 0.0, &policy, &ctx.opts).map_err(err)?;
        ensure(v.kind == want, || format!("q = {c}/x^2: {:?}, want {want:?}", v.kind))?;
    }
    // Below the bottom of [0, inf) the free particle's windows settle.
    let free = fam(FamilySpec::Constant { p: 1.0, q: 0.0, r: 1.0 }, 0.0);
    let lambda = ctx.draw(-3.0, -0.5);
    let v = classify_oscillation(&free, lambda, &WindowPolicy::default_for(free.interval()), &ctx.opts).map_err(err)?;
    ensure(v.window_kind == OscKind::Nonoscillatory, || format!("free particle at {lambda}: windows {:?}", v.window_kind))?;
    Ok("threshold at -1/4 reproduced; free particle below 0 settles".into())
}

fn kneser(ctx: &mut Ctx) -> Outcome {
    for _ in 0..30 {
        let n = ctx.draw(1.0, 4.0) as i32;
        let lo = LogScale::e(n) + 1.0;
        let x = lo * (1e6 / lo).powf(ctx.draw(0.0, 1.0));
        let h = 1e-3 * x;
        let fd = (LogScale::big_l(n, x + h) - LogScale::big_l(n, x - h)) / (2.0 * h);
        let exact = LogScale::big_l(n, x) * LogScale::recip_sum(n, x);
        ensure(((fd - exact) / exact).abs() < 1e-6, || format!("L_{n}' at {x}: {fd} vs {exact}"))?;
    }
    for n in [1u32, 2] {
        let c1 = fam(FamilySpec::PerturbedWeight { p_inf: 1.5, q_inf: 0.5, r_inf: 2.0, c: 0.8, s: 1.5, gamma: ctx.draw(-1.0, 1.0) }, 3.0);
        let c0 = fam(FamilySpec::IteratedLog { n, gamma: 0.0, q_inf: 0.5, p_inf: 1.5, r_inf: 2.0 }, 3.0);
        let pair = PrincipalPair::iterated_log(n, 1.5);
        for _ in 0..20 {
            let x = 4.0 * (1e6f64 / 4.0).powf(ctx.draw(0.0, 1.0));
            let d = delta(&c0, &c1, 0.25, &pair, x).map_err(err)?;
            let dt = delta_tilde(&c1, n, x).map_err(err)?;
            ensure((d - dt).abs() < 1e-8, || format!("n = {n}, x = {x}: delta {d} vs delta_tilde {dt}"))?;
        }
    }
    let iv = Interval::half_line(1.0);
    let grid = geometric_tail_grid(&iv, 2.0, 40, 4);
    let samples: Vec<(f64, f64)> = grid.iter().map(|&x| (x, -0.25)).collect();
    let rep = kneser_classify(&KneserInput::Samples(&samples), &iv, KneserMode::Pointwise, 0.01, &[], None);
    ensure(rep.verdict == KneserVerdict::Inconclusive, || format!("constant -1/4 gave {:?}", rep.verdict))?;
    Ok("log-scale derivative identity, delta = delta_tilde, margin rule".into())
}

fn spectra(ctx: &mut Ctx) -> Outcome {
    let families = [
        fam(FamilySpec::Constant { p: 1.0, q: 0.0, r: 1.0 }, 0.0),
        inverse_square(-0.3, 1.0),
        fam(FamilySpec::PerturbedWeight { p_inf: 1.0, q_inf: 1.0, r_inf: 1.0, c: 1.0, s: 2.0, gamma: 0.5 }, 1.0),
    ];
    let lambdas: Vec<f64> = (0..4).map(|_| ctx.draw(-0.5, 5.0)).collect();
    let opts = ctx.opts;
    let cases: Vec<(usize, f64)> = (0..families.len()).flat_map(|i| lambdas.iter().map(move |&l| (i, l))).collect();
    let diffs = cases
        .par_iter()
        .map(|&(i, lambda)| {
            let tp = TruncatedProblem::dirichlet(families[i].clone(), families[i].interval().a + 30.0).map_err(err)?;
            let s = count_below(&tp, lambda, &opts).map_err(err)?.count;
            let f = fd_inertia_count(&tp, lambda, 4000).map_err(err)?.count;
            Ok((s - f).abs())
        })
        .collect::<Result<Vec<i64>, String>>()?;
    let worst = diffs.iter().copied().max().unwrap_or(0);
    ensure(worst <= 1, || format!("shooting and FD counts differ by {worst}"))?;
    let tp = TruncatedProblem::dirichlet(families[1].clone(), 31.0).map_err(err)?;
    let mut prev = 0;
    for k in 0..10 {
        let n = count_below(&tp, -0.5 + 0.6 * k as f64, &opts).map_err(err)?.count;
        ensure(n >= prev, || format!("count fell from {prev} to {n}"))?;
        prev = n;
    }
    Ok(format!("{} cases, max |shoot - fd| = {worst}; monotone in lambda", diffs.len()))
}

fn coeffs(ctx: &mut Ctx) -> Outcome {
    for _ in 0..50 {
        let (c, q_inf, x) = (ctx.draw(-2.0, 2.0), ctx.draw(-1.0, 1.0), ctx.draw(1.0, 1e4));
        let cs = fam(FamilySpec::InverseSquare { c, q_inf, p_inf: 1.0, r_inf: 1.0 }, 0.5);
        let want = q_inf + c / x / x;
        ensure((cs.q(x) - want).abs() <= 1e-14 * (q_inf.abs() + (c / x / x).abs()), || format!("inverse square q({x}) = {} vs {want}", cs.q(x)))?;
        let n = ctx.draw(1.0, 3.0) as u32;
        let il = fam(FamilySpec::IteratedLog { n, gamma: 0.0, q_inf: 0.0, p_inf: 1.0, r_inf: 1.0 }, 3.0);
        let resid = il.q(x + 2.0) - LogScale::q_of(n as i32, x + 2.0);
        ensure(resid.abs() <= 4.0 * f64::EPSILON * LogScale::q_of(n as i32, x + 2.0).abs(), || format!("iterated log residual {resid:e}"))?;
    }
    Ok("50 closed-form evaluations".into())
}

fn invariance(ctx: &mut Ctx) -> Outcome {
    let a = 4.0;
    let grid = geometric_tail_grid(&Interval::half_line(a), a, 20, 8);
    let gamma = ctx.draw(-1.0, 1.0);
    let c0 = fam(FamilySpec::PerturbedWeight { p_inf: 1.0, q_inf: 1.0, r_inf: 1.0, c: 1.0, s: 2.0, gamma }, a);
    let c1 = fam(FamilySpec::Constant { p: 1.0, q: 1.0, r: 1.0 }, a);
    let rec = essential_spectrum_invariance(&c0, &c1, &grid).map_err(err)?;
    ensure(rec.verdict == Invariance::Invariant, || format!("vanishing perturbation: {:?}", rec.verdict))?;
    let c2 = fam(FamilySpec::Constant { p: 2.0, q: 1.0, r: 1.0 }, a);
    let rec = essential_spectrum_invariance(&c1, &c2, &grid).map_err(err)?;
    ensure(rec.verdict == Invariance::Unknown, || format!("p ratio 2: {:?}", rec.verdict))?;
    Ok("vanishing perturbation invariant; p ratio 2 unknown".into())
}

/// Runs every suite in a fixed order; each suite gets its own stream derived from `seed`.
pub fn run(seed: u64, opts: PrueferOptions) -> Vec<SuiteResult> {
    let suites: [(&'static str, fn(&mut Ctx) -> Outcome); 8] = [
        ("counting", counting),
        ("pruefer", pruefer),
        ("relosc", relative),
        ("classify", classify),
        ("kneser", kneser),
        ("spectra", spectra),
        ("coeffs", coeffs),
        ("invariance", invariance),
    ];
    suites
        .iter()
        .enumerate()
        .map(|(i, (name, suite))| {
            let mut ctx = Ctx { opts, rng: ChaCha8Rng::seed_from_u64(seed).clone(), draws: Vec::new() };
            ctx.rng.set_stream(i as u64);
            let outcome = catch_unwind(AssertUnwindSafe(|| suite(&mut ctx))).unwrap_or_else(|_| Err("suite panicked".into()));
            let (pass, detail) = match outcome {
                Ok(d) => (true, d),
                Err(e) => (false, e),
            };
            SuiteResult { suite: name, pass, detail, draws: ctx.draws }
        })
        .collect()
}

pub fn report(seed: u64, opts: PrueferOptions) -> Report {
    let results = run(seed, opts);
    let failed = results.iter().filter(|r| !r.pass).count();
    let mut csv = String::from("suite,status,detail\n");
    for r in &results {
        let detail = r.detail.replace('"', "'");
        csv.push_str(&format!("{},{},\"{detail}\"\n", r.suite, if r.pass { "pass" } else { "fail" }));
    }
    Report {
        status: if failed == 0 { Status::Ok } else { Status::Failed },
        summary: format!("{} of {} suites passed", results.len() - failed, results.len()),
        body: json!({ "seed": seed, "suites": results }),
        csv: Some(csv),
    }
}
