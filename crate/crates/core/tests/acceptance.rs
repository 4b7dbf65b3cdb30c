//! Acceptance run: one PASS/FAIL line per criterion, nonzero exit on any failure.

use std::f64::consts::PI;
use std::panic::{catch_unwind, AssertUnwindSafe};
use std::sync::Arc;
use std::time::{Duration, Instant};

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;

use relosc::classify::{
    classify_oscillation, essential_spectrum_invariance, limit_point_probe, EndpointKind, Invariance, OscKind, WindowPolicy,
};
use relosc::coeffs::{build_coefficients, CoefficientSet, FamilySpec, Interval, Profile, Tail, Term};
use relosc::kneser::{delta, delta_tilde, kneser_classify, KneserInput, KneserMode, KneserVerdict, LogScale, PrincipalPair, DEFAULT_ELL_GRID, DEFAULT_MARGIN};
use relosc::pruefer::{count_zeros, integrate_pruefer, zero_positions, PrueferOptions};
use relosc::relosc::{check_conditions, relative_count, wronskian_zero_count_dense, RelativeTrace};
use relosc::spectra::{accumulation_study, count_below, fd_inertia_count, gap_finiteness, AccumulationEvidence, AccumulationOptions, TruncatedProblem};
use relosc::tail::geometric_tail_grid;

type Outcome = Result<String, String>;

fn ensure(ok: bool, msg: impl FnOnce() -> String) -> Result<(), String> {
    if ok {
        Ok(())
    } else {
        Err(msg())
    }
}

fn fam(spec: FamilySpec, a: f64) -> Arc<CoefficientSet> {
    Arc::new(build_coefficients(spec, Interval::half_line(a)).expect("valid family"))
}

fn constant(p: f64, q: f64, r: f64, a: f64) -> Arc<CoefficientSet> {
    fam(FamilySpec::Constant { p, q, r }, a)
}

fn inverse_square(c: f64, a: f64) -> Arc<CoefficientSet> {
    fam(FamilySpec::InverseSquare { c, q_inf: 0.0, p_inf: 1.0, r_inf: 1.0 }, a)
}

fn perturbed(q_inf: f64, c: f64, s: f64, gamma: f64, a: f64) -> Arc<CoefficientSet> {
    fam(FamilySpec::PerturbedWeight { p_inf: 1.0, q_inf, r_inf: 1.0, c, s, gamma }, a)
}

fn pw(coeff: f64, exponent: f64) -> Term {
    Term::Power { coeff, exponent }
}

fn composite(p: Profile, q: Profile, r: Profile, tail: Option<(f64, f64, f64)>, a: f64) -> Arc<CoefficientSet> {
    let tail = tail.map(|(p_inf, q_inf, r_inf)| Tail { p_inf, q_inf, r_inf });
    fam(FamilySpec::Composite { p, q, r, tail }, a)
}

fn opts() -> PrueferOptions {
    PrueferOptions::default()
}

// 1. Zero counting for u'' + u = 0.
fn counting_exactness() -> Outcome {
    let c = Arc::new(build_coefficients(FamilySpec::Constant { p: 1.0, q: 0.0, r: 1.0 }, Interval::new(0.0, 100.0 * PI).unwrap()).unwrap());
    let x = 100.0 * PI - 0.1;
    let tr = integrate_pruefer(c, 1.0, 0.0, x, &opts()).map_err(|e| e.to_string())?;
    let n = count_zeros(&tr, x).map_err(|e| e.to_string())?;
    ensure(n == 99, || format!("count_zeros = {n}, want 99"))?;
    let zs = zero_positions(&tr);
    ensure(zs.len() == 99, || format!("{} zero positions", zs.len()))?;
    let worst = zs.iter().enumerate().map(|(k, z)| (z - (k + 1) as f64 * PI).abs()).fold(0.0, f64::max);
    ensure(worst <= 1e-8, || format!("max |x_k - k pi| = {worst:e}"))?;
    Ok(format!("N = 99, max |x_k - k pi| = {worst:.1e}"))
}

fn same_coefficient_families() -> Vec<(&'static str, Arc<CoefficientSet>)> {
    vec![
        ("free", constant(1.0, 0.0, 1.0, 0.0)),
        ("inverse_square(-0.3)", inverse_square(-0.3, 1.0)),
        ("inverse_square(0.5)", inverse_square(0.5, 1.0)),
        ("perturbed_weight", perturbed(1.0, 1.0, 2.0, 0.5, 1.0)),
        (
            "composite",
            composite(
                Profile::constant(1.5).with(pw(0.5, -1.0)),
                Profile::constant(0.0).with(pw(1.0, -1.0)),
                Profile::constant(1.0).with(pw(1.0, -2.0)),
                Some((1.5, 0.0, 1.0)),
                1.0,
            ),
        ),
    ]
}

struct Pair {
    label: String,
    c0: Arc<CoefficientSet>,
    lambda0: f64,
    c1: Arc<CoefficientSet>,
    lambda1: f64,
}

fn cross_pairs() -> Vec<Pair> {
    let mk = |label: &str, c0, lambda0, c1, lambda1| Pair { label: label.into(), c0, lambda0, c1, lambda1 };
    vec![
        mk("constant(2,1,1) vs free", constant(2.0, 1.0, 1.0, 1.0), 0.0, constant(1.0, 0.0, 1.0, 1.0), 2.0),
        mk(
            "inverse_square vs perturbed_weight",
            fam(FamilySpec::InverseSquare { c: 0.2, q_inf: 0.5, p_inf: 1.5, r_inf: 1.0 }, 1.0),
            0.0,
            fam(FamilySpec::PerturbedWeight { p_inf: 1.0, q_inf: 0.0, r_inf: 1.0, c: 1.0, s: 1.0, gamma: -0.1 }, 1.0),
            1.0,
        ),
        mk(
            "composite vs composite",
            composite(
                Profile::constant(1.5).with(pw(0.5, -1.0)),
                Profile::constant(0.0).with(pw(1.0, -1.0)),
                Profile::constant(1.0),
                Some((1.5, 0.0, 1.0)),
                1.0,
            ),
            0.5,
            composite(Profile::constant(1.0), Profile::constant(0.0), Profile::constant(1.0).with(pw(1.0, -2.0)), Some((1.0, 0.0, 1.0)), 1.0),
            1.5,
        ),
        mk("weights 1 vs 3", constant(1.0, 0.0, 1.0, 1.0), -1.0, constant(1.0, 0.0, 3.0, 1.0), 1.0),
        mk(
            "inverse_square r_inf 1 vs 2",
            inverse_square(-0.3, 1.0),
            0.0,
            fam(FamilySpec::InverseSquare { c: -0.3, q_inf: 0.0, p_inf: 1.0, r_inf: 2.0 }, 1.0),
            2.0,
        ),
    ]
}

// 2. Relative count against the dense Wronskian oracle.
fn oracle_equivalence() -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(2);
    let families = same_coefficient_families();
    let mut pairs = Vec::new();
    for i in 0..20 {
        let (name, c) = &families[i % families.len()];
        let mut l0: f64 = rng.gen_range(-2.0..5.0);
        let mut l1: f64 = rng.gen_range(-2.0..5.0);
        if l0 > l1 {
            std::mem::swap(&mut l0, &mut l1);
        }
        if l1 - l0 < 0.05 {
            l1 = (l0 + 0.05).min(5.0);
            l0 = l1 - 0.05;
        }
        pairs.push(Pair { label: format!("{name} {l0:.3} < {l1:.3}"), c0: c.clone(), lambda0: l0, c1: c.clone(), lambda1: l1 });
    }
    pairs.extend(cross_pairs());
    let span = 30.0;
    let xs_per_pair: Vec<Vec<f64>> = pairs
        .iter()
        .map(|p| {
            let a = p.c0.interval().a;
            let mut xs: Vec<f64> = (0..20).map(|_| a + rng.gen_range(0.05..span)).collect();
            xs.sort_by(f64::total_cmp);
            xs
        })
        .collect();
    let results: Vec<Result<usize, String>> = pairs
        .par_iter()
        .zip(xs_per_pair.par_iter())
        .map(|(p, xs)| {
            let a = p.c0.interval().a;
            let grid: Vec<f64> = (1..=400).map(|i| a + span * i as f64 / 400.0).collect();
            let cond = check_conditions(&p.c0, p.lambda0, &p.c1, p.lambda1, &grid);
            ensure(cond.cond_strict, || format!("{}: strict comparison fails at {:?}", p.label, cond.first_strict_violation))?;
            let rt = RelativeTrace::integrate(p.c0.clone(), p.lambda0, 0.0, p.c1.clone(), p.lambda1, 0.0, a + span, &opts())
                .map_err(|e| format!("{}: {e}", p.label))?;
            for &x in xs {
                let n = relative_count(&rt, x).map_err(|e| e.to_string())?;
                let d = wronskian_zero_count_dense(&rt, x, 2000).map_err(|e| e.to_string())?;
                ensure(n == d.count, || format!("{}: x = {x}: relative_count {n} vs dense {}", p.label, d.count))?;
            }
            Ok(xs.len())
        })
        .collect();
    let mut checked = 0;
    for r in results {
        checked += r?;
    }
    Ok(format!("{} pairs, {checked} points, all equal", pairs.len()))
}

fn random_family(rng: &mut ChaCha8Rng) -> Arc<CoefficientSet> {
    match rng.gen_range(0..5) {
        0 => constant(rng.gen_range(0.5..2.0), rng.gen_range(-1.0..1.0), rng.gen_range(0.5..2.0), 1.0),
        1 => fam(
            FamilySpec::InverseSquare {
                c: rng.gen_range(-1.0..1.0),
                q_inf: rng.gen_range(-0.5..0.5),
                p_inf: rng.gen_range(0.5..2.0),
                r_inf: rng.gen_range(0.5..2.0),
            },
            1.0,
        ),
        2 => fam(
            FamilySpec::PerturbedWeight {
                p_inf: rng.gen_range(0.5..2.0),
                q_inf: rng.gen_range(-0.5..0.5),
                r_inf: rng.gen_range(0.5..2.0),
                c: rng.gen_range(0.0..1.0),
                s: rng.gen_range(0.5..3.0),
                gamma: rng.gen_range(-1.0..1.0),
            },
            1.0,
        ),
        3 => fam(
            FamilySpec::IteratedLog {
                n: rng.gen_range(1..3),
                gamma: rng.gen_range(-0.5..0.5),
                q_inf: rng.gen_range(-0.5..0.5),
                p_inf: rng.gen_range(0.5..2.0),
                r_inf: rng.gen_range(0.5..2.0),
            },
            3.0,
        ),
        _ => composite(
            Profile::constant(rng.gen_range(0.5..2.0)).with(pw(rng.gen_range(0.0..1.0), -1.0)),
            Profile::constant(rng.gen_range(-0.5..0.5)).with(Term::Sin { amp: rng.gen_range(0.0..0.5), freq: rng.gen_range(0.5..3.0), phase: 0.0 }),
            Profile::constant(rng.gen_range(0.5..2.0)).with(pw(rng.gen_range(0.0..1.0), -1.5)),
            None,
            1.0,
        ),
    }
}

// 3. Inequalities between absolute and relative counts.
fn inequality_suites() -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(3);
    struct Trial {
        cs: [Arc<CoefficientSet>; 3],
        lambdas: [f64; 3],
        thetas: [f64; 3],
        alt: [f64; 2],
        xs: Vec<f64>,
    }
    let span = 20.0;
    let trials: Vec<Trial> = (0..200)
        .map(|_| {
            // Shared left endpoint: every family is built on (3, inf) here.
            let mut c = || {
                let f = random_family(&mut rng);
                fam(f.spec().clone(), 3.0)
            };
            let cs = [c(), c(), c()];
            let lambdas = [rng.gen_range(-2.0..5.0), rng.gen_range(-2.0..5.0), rng.gen_range(-2.0..5.0)];
            let thetas = [rng.gen_range(0.0..PI), rng.gen_range(0.0..PI), rng.gen_range(0.0..PI)];
            let alt = [rng.gen_range(0.0..PI), rng.gen_range(0.0..PI)];
            let xs = (0..50).map(|_| 3.0 + rng.gen_range(0.01..span)).collect();
            Trial { cs, lambdas, thetas, alt, xs }
        })
        .collect();
    let violations: Vec<String> = trials
        .par_iter()
        .enumerate()
        .map(|(i, t)| -> Result<Vec<String>, String> {
            let x_end = 3.0 + span;
            let tr = |k: usize, theta: f64| integrate_pruefer(t.cs[k].clone(), t.lambdas[k], theta, x_end, &opts()).map(Arc::new);
            let u: Vec<_> = (0..3).map(|k| tr(k, t.thetas[k])).collect::<Result<_, _>>().map_err(|e| e.to_string())?;
            let v0 = tr(0, t.alt[0]).map_err(|e| e.to_string())?;
            let v1 = tr(1, t.alt[1]).map_err(|e| e.to_string())?;
            let rel = |a: &Arc<_>, b: &Arc<_>| RelativeTrace::new(Arc::clone(a), Arc::clone(b)).map_err(|e| e.to_string());
            let r01 = rel(&u[0], &u[1])?;
            let r10 = rel(&u[1], &u[0])?;
            let r12 = rel(&u[1], &u[2])?;
            let r02 = rel(&u[0], &u[2])?;
            let rv = rel(&v0, &v1)?;
            let mut bad = Vec::new();
            for &x in &t.xs {
                let n = |rt: &RelativeTrace| relative_count(rt, x).map_err(|e| e.to_string());
                let z = |k: usize| count_zeros(&u[k], x).map_err(|e| e.to_string());
                let (n01, n10, n12, n02, nv) = (n(&r01)?, n(&r10)?, n(&r12)?, n(&r02)?, n(&rv)?);
                let (z0, z1) = (z(0)?, z(1)?);
                if !(z1 - z0 - 3 <= n01 && n01 <= z1 - z0 + 1) {
                    bad.push(format!("trial {i} x={x}: lady N={n01}, N1-N0={}", z1 - z0));
                }
                if !(-n10 - 2 <= n01 && n01 <= -n10) {
                    bad.push(format!("trial {i} x={x}: klotz N01={n01}, N10={n10}"));
                }
                if !(n01 + n12 - 1 <= n02 && n02 <= n01 + n12 + 1) {
                    bad.push(format!("trial {i} x={x}: gaga N01={n01}, N12={n12}, N02={n02}"));
                }
                if !(n01 - 4 <= nv && nv <= n01 + 2) {
                    bad.push(format!("trial {i} x={x}: band N={n01}, other pair {nv}"));
                }
            }
            Ok(bad)
        })
        .collect::<Result<Vec<_>, _>>()?
        .into_iter()
        .flatten()
        .collect();
    ensure(violations.is_empty(), || format!("{} violations, first: {}", violations.len(), violations[0]))?;
    Ok("200 trials x 50 points, 0 violations".into())
}

// 4. The -1/4 threshold for q = c/x^2.
fn kneser_threshold() -> Outcome {
    let cases = [(-0.5, OscKind::Oscillatory), (-0.3, OscKind::Oscillatory), (-0.2, OscKind::Nonoscillatory), (0.0, OscKind::Nonoscillatory), (0.1, OscKind::Nonoscillatory)];
    let mut summary = Vec::new();
    for (c, want) in cases {
        let cs = inverse_square(c, 1.0);
        let policy = WindowPolicy::reaching(cs.interval(), 2f64.powi(20));
        let v = classify_oscillation(&cs, 0.0, &policy, &opts()).map_err(|e| e.to_string())?;
        ensure(v.kind == want, || format!("c = {c}: {:?}, want {want:?}", v.kind))?;
        summary.push(format!("{c}:{:?} (basis {:?}, windows {:?}, conflict {})", v.kind, v.basis, v.window_kind, v.conflict));
    }
    Ok(summary.join(" "))
}

// 5. Weight perturbation: limit of delta_tilde, Kneser verdict vs accumulation evidence.
fn weight_perturbation() -> Outcome {
    let mut summary = Vec::new();
    for (gamma, want_kneser, want_evidence) in [(0.5, KneserVerdict::Oscillatory, AccumulationEvidence::Accumulation), (0.9, KneserVerdict::Nonoscillatory, AccumulationEvidence::Finite)] {
        let c = perturbed(1.0, 1.0, 2.0, gamma, 1.0);
        let iv = *c.interval();
        let grid = geometric_tail_grid(&iv, 2.0, 40, 8);
        let samples: Vec<(f64, f64)> = grid.iter().map(|&x| delta_tilde(&c, 0, x).map(|d| (x, d))).collect::<Result<_, _>>().map_err(|e| e.to_string())?;
        let worst = samples.iter().map(|(_, d)| (d - (gamma - 1.0)).abs()).fold(0.0, f64::max);
        ensure(worst < 1e-12, || format!("gamma {gamma}: max |delta_tilde - (gamma - 1)| = {worst:e}"))?;
        let report = kneser_classify(&KneserInput::Samples(&samples), &iv, KneserMode::Pointwise, DEFAULT_MARGIN, &DEFAULT_ELL_GRID, None);
        ensure(report.verdict == want_kneser, || format!("gamma {gamma}: Kneser {:?}", report.verdict))?;
        let truncations: Vec<f64> = (2..=10).map(|k| 10f64.powi(k)).collect();
        let probes = [0.99, 1.0 - 1e-6, 1.0 - 1e-10, 1.0 - 1e-14, 1.0 - 4.0 * f64::EPSILON];
        let table = accumulation_study(&c, &truncations, &probes, &AccumulationOptions::default()).map_err(|e| e.to_string())?;
        ensure(table.evidence == want_evidence, || format!("gamma {gamma}: evidence {:?}, trends {:?}", table.evidence, table.trends))?;
        ensure(table.max_disagreement <= 1, || format!("gamma {gamma}: shooting vs FD differ by {}", table.max_disagreement))?;
        let nearest = &table.trends[table.trends.len() - 1];
        summary.push(format!("gamma {gamma}: {:?}/{:?} counts {:?} dis {}", report.verdict, table.evidence, nearest.counts, table.max_disagreement));
    }
    Ok(summary.join("; "))
}

// 6. delta with the iterated-log principal pair equals delta_tilde.
fn delta_coincidence() -> Outcome {
    let mut worst: f64 = 0.0;
    for n in [1u32, 2] {
        let c1s = [
            composite(
                Profile::constant(2.0).with(pw(1.0, -1.0)),
                Profile::constant(3.0).with(pw(0.7, -2.0)),
                Profile::constant(1.5).with(pw(1.0, -1.5)),
                Some((2.0, 3.0, 1.5)),
                3.0,
            ),
            fam(FamilySpec::PerturbedWeight { p_inf: 1.5, q_inf: 0.5, r_inf: 2.0, c: 0.8, s: 1.5, gamma: 0.3 }, 3.0),
            fam(FamilySpec::IteratedLog { n, gamma: -0.4, q_inf: 1.0, p_inf: 0.7, r_inf: 1.3 }, 3.0),
        ];
        for c1 in c1s {
            let t = c1.tail().expect("declared tail");
            let c0 = fam(FamilySpec::IteratedLog { n, gamma: 0.0, q_inf: t.q_inf, p_inf: t.p_inf, r_inf: t.r_inf }, 3.0);
            let pair = PrincipalPair::iterated_log(n, t.p_inf);
            let lambda = t.essential_bottom();
            let lo = (LogScale::e(n as i32) + 1.0).max(3.5);
            for i in 0..100 {
                let x = lo * (1e6 / lo).powf(i as f64 / 99.0);
                let d = delta(&c0, &c1, lambda, &pair, x).map_err(|e| e.to_string())?;
                let dt = delta_tilde(&c1, n, x).map_err(|e| e.to_string())?;
                let err = (d - dt).abs();
                ensure(err < 1e-8, || format!("n = {n}, {:?}, x = {x}: delta {d} vs delta_tilde {dt}", c1.family_tag()))?;
                worst = worst.max(err);
            }
        }
    }
    Ok(format!("600 points, max |delta - delta_tilde| = {worst:.1e}"))
}

// 7. Shooting count vs FD inertia count.
fn oracle_cross_validation() -> Outcome {
    let families: Vec<(&str, Arc<CoefficientSet>)> = vec![
        ("free", constant(1.0, 0.0, 1.0, 0.0)),
        ("inverse_square(-0.3)", inverse_square(-0.3, 1.0)),
        ("perturbed_weight(0.5)", perturbed(1.0, 1.0, 2.0, 0.5, 1.0)),
        ("iterated_log(1)", fam(FamilySpec::IteratedLog { n: 1, gamma: 0.2, q_inf: 0.5, p_inf: 1.0, r_inf: 1.0 }, 2.0)),
        (
            "composite",
            composite(
                Profile::constant(2.0).with(pw(1.0, -1.0)),
                Profile::constant(1.0).with(Term::Sin { amp: 0.5, freq: 1.0, phase: 0.0 }),
                Profile::constant(1.5).with(pw(1.0, -1.5)),
                None,
                1.0,
            ),
        ),
    ];
    let mut cases = Vec::new();
    for (name, c) in &families {
        for len in [20.0, 60.0] {
            for lambda in [0.5, 2.0, 5.0] {
                cases.push((*name, c.clone(), c.interval().a + len, lambda));
            }
        }
    }
    let diffs: Vec<(i64, String)> = cases
        .par_iter()
        .map(|(name, c, b, lambda)| {
            let tp = TruncatedProblem::dirichlet(c.clone(), *b).map_err(|e| e.to_string())?;
            let s = count_below(&tp, *lambda, &opts()).map_err(|e| e.to_string())?.count;
            let f = fd_inertia_count(&tp, *lambda, 4000).map_err(|e| e.to_string())?.count;
            Ok(((s - f).abs(), format!("{name} b={b} lambda={lambda}: shoot {s} fd {f}")))
        })
        .collect::<Result<_, String>>()?;
    let (worst, label) = diffs.iter().max_by_key(|d| d.0).cloned().expect("cases");
    ensure(worst <= 1, || label.clone())?;
    let exact = diffs.iter().filter(|d| d.0 == 0).count();
    Ok(format!("{} cases, {exact} exact, max difference {worst}", diffs.len()))
}

/// Central difference with one Richardson step.
fn d1(f: impl Fn(f64) -> f64, x: f64, h: f64) -> f64 {
    let c = |h: f64| (f(x + h) - f(x - h)) / (2.0 * h);
    (4.0 * c(h / 2.0) - c(h)) / 3.0
}

fn d2(f: impl Fn(f64) -> f64, x: f64, h: f64) -> f64 {
    let c = |h: f64| (f(x + h) - 2.0 * f(x) + f(x - h)) / (h * h);
    (4.0 * c(h / 2.0) - c(h)) / 3.0
}

// 8. Log-scale identities by finite differences.
fn structural_identities() -> Outcome {
    let mut worst: f64 = 0.0;
    for n in 1..=3i32 {
        let lo = LogScale::e(n) + 1.0;
        for i in 0..400 {
            let x = lo * (1e6 / lo).powf(i as f64 / 399.0);
            let h = 1e-3 * x;
            let fd = d1(|t| LogScale::big_l(n, t), x, h);
            let exact = LogScale::big_l(n, x) * LogScale::recip_sum(n, x);
            let e1 = ((fd - exact) / exact).abs();
            ensure(e1 < 1e-6, || format!("n = {n}, x = {x}: L_n' rel error {e1:e}"))?;
            let u = |t: f64| LogScale::big_l(n - 1, t).sqrt();
            let qu = LogScale::q_of(n, x) * u(x);
            let resid = -d2(u, x, h) + qu;
            let e2 = (resid / qu).abs();
            ensure(e2 < 1e-6, || format!("n = {n}, x = {x}: -u0'' + Q_n u0 rel residual {e2:e}"))?;
            worst = worst.max(e1).max(e2);
        }
    }
    Ok(format!("n = 1..3, 1200 points, max relative error {worst:.1e}"))
}

// 9. Coherence of endpoint and gap verdicts under the tail hypotheses.
fn invariance_coherence() -> Outcome {
    let a = 4.0;
    let passing: Vec<(&str, Arc<CoefficientSet>, Arc<CoefficientSet>)> = vec![
        (
            "free vs q=1/x, r=1+1/x",
            constant(1.0, 0.0, 1.0, a),
            composite(Profile::constant(1.0), Profile::constant(0.0).with(pw(1.0, -1.0)), Profile::constant(1.0).with(pw(1.0, -1.0)), Some((1.0, 0.0, 1.0)), a),
        ),
        ("inverse_square -0.3 vs 0.5", inverse_square(-0.3, a), inverse_square(0.5, a)),
        ("perturbed_weight vs constant(1,1,1)", perturbed(1.0, 1.0, 2.0, 0.5, a), constant(1.0, 1.0, 1.0, a)),
        (
            "constant(2,1,3) vs composite",
            constant(2.0, 1.0, 3.0, a),
            composite(
                Profile::constant(2.0).with(pw(1.0, -1.0)),
                Profile::constant(1.0).with(pw(1.0, -2.0)),
                Profile::constant(3.0).with(pw(1.0, -1.5)),
                Some((2.0, 1.0, 3.0)),
                a,
            ),
        ),
        (
            "iterated_log vs perturbed_weight",
            fam(FamilySpec::IteratedLog { n: 1, gamma: 0.1, q_inf: 1.0, p_inf: 1.0, r_inf: 1.0 }, a),
            perturbed(1.0, 1.0, 2.0, 0.5, a),
        ),
    ];
    let failing: Vec<(&str, Arc<CoefficientSet>, Arc<CoefficientSet>)> = vec![
        ("q drift q=x", constant(1.0, 0.0, 1.0, a), composite(Profile::constant(1.0), Profile::constant(0.0).with(pw(1.0, 1.0)), Profile::constant(1.0), None, a)),
        ("p ratio 2", constant(1.0, 0.0, 1.0, a), constant(2.0, 0.0, 1.0, a)),
        ("r ratio 3", constant(1.0, 0.0, 1.0, a), constant(1.0, 0.0, 3.0, a)),
    ];
    let grid = geometric_tail_grid(&Interval::half_line(a), a, 20, 8);
    let mut lp = Vec::new();
    for (label, c0, c1) in &passing {
        let inv = essential_spectrum_invariance(c0, c1, &grid).map_err(|e| e.to_string())?;
        ensure(inv.report.pass(), || format!("{label}: expected to pass the tail hypotheses"))?;
        let k0 = limit_point_probe(c0, &grid).map_err(|e| e.to_string())?.kind;
        let k1 = limit_point_probe(c1, &grid).map_err(|e| e.to_string())?.kind;
        ensure(k0 == k1 && k0 != EndpointKind::Inconclusive, || format!("{label}: endpoint {k0:?} vs {k1:?}"))?;
        let bottom = c0.tail().expect("tail").essential_bottom();
        let policy = WindowPolicy::default_for(c0.interval());
        let g0 = gap_finiteness(c0, bottom - 2.0, bottom - 1.0, &policy, &opts()).map_err(|e| e.to_string())?;
        let g1 = gap_finiteness(c1, bottom - 2.0, bottom - 1.0, &policy, &opts()).map_err(|e| e.to_string())?;
        ensure(g0.finite == g1.finite && g0.finite.is_some(), || format!("{label}: gap {:?} vs {:?}", g0.finite, g1.finite))?;
        lp.push(format!("{k0:?}"));
    }
    for (label, c0, c1) in &failing {
        let inv = essential_spectrum_invariance(c0, c1, &grid).map_err(|e| e.to_string())?;
        ensure(!inv.report.pass_alpha, || format!("{label}: expected the ratio conditions to fail"))?;
        ensure(inv.verdict == Invariance::Unknown, || format!("{label}: {:?}", inv.verdict))?;
    }
    Ok(format!("5 coherent pairs ({}), 3 failing pairs Unknown", lp.join(",")))
}

fn main() {
    let criteria: [(&str, fn() -> Outcome, Duration); 9] = [
        ("counting exactness", counting_exactness, Duration::from_secs(1)),
        ("relative count = dense Wronskian count", oracle_equivalence, Duration::from_secs(30)),
        ("inequality suites and band", inequality_suites, Duration::from_secs(60)),
        ("Kneser threshold", kneser_threshold, Duration::from_secs(60)),
        ("weight perturbation", weight_perturbation, Duration::from_secs(300)),
        ("delta / delta_tilde coincidence", delta_coincidence, Duration::from_secs(10)),
        ("shooting vs FD counts", oracle_cross_validation, Duration::from_secs(120)),
        ("structural identities", structural_identities, Duration::from_secs(10)),
        ("invariance coherence", invariance_coherence, Duration::from_secs(120)),
    ];
    let only: Option<usize> = std::env::args().skip(1).find_map(|a| a.parse().ok());
    let mut failed = 0;
    for (i, (name, run, budget)) in criteria.iter().enumerate() {
        let k = i + 1;
        if only.is_some_and(|o| o != k) {
            continue;
        }
        let t = Instant::now();
        let outcome = catch_unwind(AssertUnwindSafe(run)).unwrap_or_else(|p| {
            let msg = p.downcast_ref::<String>().cloned().or_else(|| p.downcast_ref::<&str>().map(|s| s.to_string()));
            Err(format!("panicked: {}", msg.unwrap_or_default()))
        });
        let dt = t.elapsed();
        let outcome = match outcome {
            Ok(s) if dt > *budget => Err(format!("{s}; took {dt:.2?}, budget {budget:?}")),
            o => o,
        };
        match outcome {
            Ok(s) => println!("criterion {k}: PASS  {name} ({dt:.2?}) {s}"),
            Err(e) => {
                failed += 1;
                println!("criterion {k}: FAIL  {name} ({dt:.2?}) {e}");
            }
        }
    }
    if failed > 0 {
        std::process::exit(1);
    }
}
