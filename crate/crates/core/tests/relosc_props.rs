use std::f64::consts::PI;
use std::sync::Arc;

use proptest::prelude::*;

use relosc::coeffs::{build_coefficients, CoefficientSet, FamilySpec, Interval};
use relosc::pruefer::{count_zeros, integrate_pruefer, PrueferOptions};
use relosc::relosc::{check_conditions, relative_count, RelativeTrace};

fn family(kind: u8, k: f64) -> Arc<CoefficientSet> {
    let spec = match kind {
        0 => FamilySpec::Constant { p: 1.0 + k.abs(), q: k, r: 1.0 },
        1 => FamilySpec::InverseSquare { c: k, q_inf: 0.0, p_inf: 1.0, r_inf: 1.0 },
        _ => FamilySpec::PerturbedWeight { p_inf: 1.0, q_inf: 0.5, r_inf: 1.0, c: k.abs(), s: 2.0, gamma: k },
    };
    Arc::new(build_coefficients(spec, Interval::half_line(1.0)).unwrap())
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(48))]

    // Same expression with lambda0 <= lambda1 satisfies the weak comparison conditions.
    #[test]
    fn weak_conditions_give_monotone_counts(kind in 0u8..3, k in -0.8..0.8f64, l0 in -2.0..5.0f64, dl in 0.0..3.0f64) {
        let c = family(kind, k);
        let l1 = l0 + dl;
        let grid: Vec<f64> = (1..=300).map(|i| 1.0 + 30.0 * i as f64 / 300.0).collect();
        prop_assert!(check_conditions(&c, l0, &c, l1, &grid).cond_weak);
        let rt = RelativeTrace::integrate(c.clone(), l0, 0.0, c, l1, 0.0, 31.0, &PrueferOptions::default()).unwrap();
        let mut prev = -1;
        for &x in &grid {
            let n = relative_count(&rt, x).unwrap();
            prop_assert!(n >= prev, "N fell from {} to {} at x = {}", prev, n, x);
            prev = n;
        }
    }

    #[test]
    fn counting_inequalities(
        k0 in 0u8..3, k1 in 0u8..3, a0 in -0.8..0.8f64, a1 in -0.8..0.8f64,
        l0 in -2.0..5.0f64, l1 in -2.0..5.0f64, t0 in 0.0..PI, t1 in 0.0..PI, x in 1.1..30.0f64,
    ) {
        let o = PrueferOptions::default();
        let u0 = Arc::new(integrate_pruefer(family(k0, a0), l0, t0, 30.0, &o).unwrap());
        let u1 = Arc::new(integrate_pruefer(family(k1, a1), l1, t1, 30.0, &o).unwrap());
        let n01 = relative_count(&RelativeTrace::new(u0.clone(), u1.clone()).unwrap(), x).unwrap();
        let n10 = relative_count(&RelativeTrace::new(u1.clone(), u0.clone()).unwrap(), x).unwrap();
        let d = count_zeros(&u1, x).unwrap() - count_zeros(&u0, x).unwrap();
        prop_assert!(d - 3 <= n01 && n01 <= d + 1, "N = {}, N1 - N0 = {}", n01, d);
        prop_assert!(-n10 - 2 <= n01 && n01 <= -n10, "N01 = {}, N10 = {}", n01, n10);
    }
}
