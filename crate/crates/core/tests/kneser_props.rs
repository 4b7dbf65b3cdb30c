use proptest::prelude::*;

use relosc::coeffs::{build_coefficients, FamilySpec, Interval, Profile, Term, Tail};
use relosc::kneser::{aventura_check, delta_tilde_parts, LogScale};
use relosc::tail::geometric_tail_grid;

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn reciprocal_of_big_l_is_derivative_of_next_log(n in 0u32..3, t in 0.0..1.0f64) {
        let lo = LogScale::e(n as i32) + 1.0;
        let x = lo * (1e6 / lo).powf(t);
        let h = 1e-4;
        let fd = (LogScale::iter_log(n + 1, x + h) - LogScale::iter_log(n + 1, x - h)) / (2.0 * h);
        prop_assert!((1.0 / LogScale::big_l(n as i32, x) - fd).abs() <= h * h);
    }

    // With p1 - p_inf = k / x^s the correction term of delta_tilde fades along the tail.
    #[test]
    fn correction_term_vanishes_when_the_p_condition_holds(n in 1u32..3, k in 0.1..2.0f64, s in 0.5..2.0f64) {
        let c = build_coefficients(
            FamilySpec::Composite {
                p: Profile::constant(1.0).with(Term::Power { coeff: k, exponent: -s }),
                q: Profile::constant(0.0),
                r: Profile::constant(1.0),
                tail: Some(Tail { p_inf: 1.0, q_inf: 0.0, r_inf: 1.0 }),
            },
            Interval::half_line(3.0),
        ).unwrap();
        let grid = geometric_tail_grid(c.interval(), 4.0, 40, 4);
        prop_assert!(aventura_check(&c, n, &grid).unwrap().pass);
        let corr: Vec<f64> = grid.iter().map(|&x| delta_tilde_parts(&c, n, x).unwrap().correction.abs()).collect();
        let last = corr[corr.len() - 1];
        prop_assert!(last < corr[0] && last < 1e-2, "correction {} -> {}", corr[0], last);
    }
}
