mod common;

use fluorospec::model;
use fluorospec::qops::{commutator_map, dissipator, expm, rmap, BlochVec, Op2, State2, Superop, C64};
use proptest::prelude::*;

fn op() -> impl Strategy<Value = Op2> {
    prop::array::uniform8(-2.0..2.0f64).prop_map(|v| {
        Op2::new(
            C64::new(v[0], v[1]),
            C64::new(v[2], v[3]),
            C64::new(v[4], v[5]),
            C64::new(v[6], v[7]),
        )
    })
}

fn hermitian() -> impl Strategy<Value = Op2> {
    prop::array::uniform4(-2.0..2.0f64).prop_map(|[a, b, c, d]| {
        Op2::new(C64::new(a, 0.0), C64::new(b, c), C64::new(b, -c), C64::new(d, 0.0))
    })
}

fn state() -> impl Strategy<Value = State2> {
    (0.0..=1.0f64, -1.0..=1.0f64, 0.0..std::f64::consts::TAU).prop_map(|(r, cos_t, ph)| {
        let sin_t = (1.0 - cos_t * cos_t).sqrt();
        let b = BlochVec::new(r * sin_t * ph.cos(), r * sin_t * ph.sin(), r * cos_t);
        State2::from_bloch(b).unwrap()
    })
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(100))]

    #[test]
    fn generators_are_traceless(h in hermitian(), a in op(), rho in state()) {
        let ch = commutator_map(&h).unwrap().apply(rho.op()).trace();
        let da = dissipator(&a).apply(rho.op()).trace();
        prop_assert!(ch.norm() <= 1e-12, "{ch}");
        prop_assert!(da.norm() <= 1e-12, "{da}");
    }

    #[test]
    fn rmap_is_real_linear(a in op(), b in op(), lambda in -3.0..3.0f64, rho in state()) {
        let sum = rmap(&(a + b)).apply(rho.op());
        let parts = rmap(&a).apply(rho.op()) + rmap(&b).apply(rho.op());
        prop_assert!(sum.max_abs_diff(&parts) <= 1e-12);
        let scaled = rmap(&(a * lambda)).apply(rho.op());
        prop_assert!(scaled.max_abs_diff(&(rmap(&a).apply(rho.op()) * lambda)) <= 1e-12);
        let direct = a * *rho.op() + *rho.op() * a.adjoint();
        prop_assert!(rmap(&a).apply(rho.op()).max_abs_diff(&direct) <= 1e-12);
    }

    #[test]
    fn expm_semigroup(p in common::params(), s in 0.0..5.0f64, t in 0.0..5.0f64) {
        let g = model::feedback_liouvillian(&p).unwrap();
        let joint = expm(&g, s + t);
        let split = expm(&g, s).compose(&expm(&g, t));
        prop_assert!(joint.max_abs_diff(&split) <= 1e-10, "{}", joint.max_abs_diff(&split));
        prop_assert!(expm(&g, 0.0).max_abs_diff(&Superop::identity()) == 0.0);
    }
}
