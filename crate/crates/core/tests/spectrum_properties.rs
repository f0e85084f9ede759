mod common;

use fluorospec::spectrum::{self, linear_grid, QuadConfig};
use proptest::prelude::*;

const REGRESSION_MUS: [f64; 11] = [0.0, 0.25, -0.25, 0.5, -0.5, 1.0, -1.0, 2.0, -2.0, 4.0, -4.0];

#[test]
fn lorentzian_regression_on_figure_line() {
    let plain = common::fig3(0.0);
    let narrowed = common::fig3(0.45f64.sqrt() / 2.0);
    for mu in REGRESSION_MUS {
        let d0 = (spectrum::s_inel(&plain, mu).unwrap() - common::lorentzian_plain(&plain, mu)).abs();
        let d1 = (spectrum::s_inel(&narrowed, mu).unwrap() - common::lorentzian_narrowed(&narrowed, mu)).abs();
        assert!(d0 <= 1e-10, "c = 0, mu = {mu}: {d0:e}");
        assert!(d1 <= 1e-10, "c = |a1|/2, mu = {mu}: {d1:e}");
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn lorentzian_regression_along_line(
        gamma in 0.5..2.0f64,
        omega in 0.0..3.0f64,
        e1 in 0.0..0.9f64,
        frac in 0.0..1.0f64,
    ) {
        let e2 = frac * (1.0 - e1);
        let plain = common::narrowing(gamma, omega, e1, e2, 0.0);
        let narrowed = common::narrowing(gamma, omega, e1, e2, e1.sqrt() / 2.0);
        for mu in REGRESSION_MUS {
            let mu = mu * gamma;
            let d0 = (spectrum::s_inel(&plain, mu).unwrap() - common::lorentzian_plain(&plain, mu)).abs();
            let d1 = (spectrum::s_inel(&narrowed, mu).unwrap() - common::lorentzian_narrowed(&narrowed, mu)).abs();
            prop_assert!(d0 <= 1e-10 && d1 <= 1e-10, "{d0:e} {d1:e}");
        }
    }

    #[test]
    fn sweep_invariants(p in common::params()) {
        let grid = linear_grid(-4.0, 4.0, 41);
        for &mu in &grid {
            let s = spectrum::s_inel(&p, mu).unwrap();
            prop_assert!(s > 0.0, "s_inel({mu}) = {s}");
            prop_assert!(spectrum::heisenberg_product(&p, mu).unwrap() >= 1.0 - 1e-9);
        }
        let far = spectrum::s_inel(&p, 1e3 * p.gamma).unwrap();
        prop_assert!((far - 1.0).abs() <= 1e-4, "{far}");
    }

    #[test]
    fn silent_channel_is_white(p in common::params()) {
        let silent = fluorospec::PhysParams { alpha2_abs: 0.0, ..p };
        for mu in linear_grid(-4.0, 4.0, 17) {
            prop_assert!((spectrum::s_inel(&silent, mu).unwrap() - 1.0).abs() <= 1e-12);
        }
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(24))]

    #[test]
    fn closed_form_matches_autocorrelation_route(p in common::params()) {
        let quad = QuadConfig::default();
        for mu in [0.0, 0.5, 2.0] {
            let closed = spectrum::s_inel(&p, mu).unwrap();
            let via = spectrum::s_inel_via_autocorr(&p, mu, &quad).unwrap();
            prop_assert!((closed - via).abs() <= 1e-5, "mu = {mu}: {closed} vs {via}");
        }
    }
}
