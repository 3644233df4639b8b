mod common;

use common::*;
use nlbvp::assembly::{difference_bilinear, difference_form};
use nlbvp::operator::spmv;
use nlbvp::Domain;
use proptest::prelude::*;

fn unit_point() -> impl Strategy<Value = [f64; 2]> {
    (0.0..1.0f64).prop_map(|x| [x, 0.0])
}

fn disk_point() -> impl Strategy<Value = [f64; 2]> {
    (0.0..0.999f64, 0.0..std::f64::consts::TAU).prop_map(|(r, t)| [r * t.cos(), r * t.sin()])
}

fn nodal(n: usize) -> impl Strategy<Value = Vec<f64>> {
    prop::collection::vec(-1.0..1.0f64, n)
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(256))]

    #[test]
    fn kernel_is_symmetric_with_compact_support(x in unit_point(), y in unit_point()) {
        let k = &sweep()[1].inst.kernel;
        let (kxy, kyx) = (k.eval(x, y).unwrap(), k.eval(y, x).unwrap());
        prop_assert_eq!(kxy, kyx);
        prop_assert!(kxy >= 0.0);
        let hx = k.eta.eval(x).unwrap().value;
        let hy = k.eta.eval(y).unwrap().value;
        if (x[0] - y[0]).abs() >= hx.max(hy) {
            prop_assert_eq!(kxy, 0.0);
        }
    }

    #[test]
    fn horizon_never_reaches_the_boundary(x in disk_point()) {
        let inst = disk().instance(0.1).unwrap();
        let e = inst.kernel.eta.eval(x).unwrap();
        let d = Domain::unit_disk().dist_to_boundary(x).unwrap();
        prop_assert!(e.value > 0.0 && e.value <= d + 1e-15);
    }

    #[test]
    fn distance_gradient_is_unit_inward(x in disk_point()) {
        let dom = Domain::unit_disk();
        let info = dom.dist_info(x);
        prop_assume!(x[0].hypot(x[1]) > 1e-6);
        let g = info.grad;
        prop_assert!((g[0].hypot(g[1]) - 1.0).abs() < 1e-12);
        // stay on the same side of the center
        let t = 0.5 * info.dist.min(x[0].hypot(x[1]));
        let moved = dom.dist_to_boundary([x[0] + t * g[0], x[1] + t * g[1]]).unwrap();
        prop_assert!((moved - (info.dist + t)).abs() < 1e-12);
    }

    #[test]
    fn k_averages(u in nodal(sweep()[0].asm.n())) {
        let op = &sweep()[0].asm.op2;
        let (lo, hi) = u.iter().fold((f64::MAX, f64::MIN), |(a, b), &v| (a.min(v), b.max(v)));
        for v in op.apply_k(&u) {
            prop_assert!(v >= lo - 1e-12 && v <= hi + 1e-12);
        }
    }

    #[test]
    fn k_is_monotone(u in nodal(sweep()[0].asm.n()), bump in nodal(sweep()[0].asm.n())) {
        let op = &sweep()[0].asm.op2;
        let w: Vec<f64> = u.iter().zip(&bump).map(|(a, b)| a + b.abs()).collect();
        for (a, b) in op.apply_k(&u).iter().zip(op.apply_k(&w)) {
            prop_assert!(*a <= b + 1e-12);
        }
    }

    #[test]
    fn stiffness_is_psd_and_symmetric(u in nodal(sweep()[0].asm.n()), v in nodal(sweep()[0].asm.n())) {
        let a = &sweep()[0].asm.stiffness;
        prop_assert!(difference_form(a, &u) >= 0.0);
        let uv = difference_bilinear(a, &u, &v);
        let vu = difference_bilinear(a, &v, &u);
        prop_assert!((uv - vu).abs() <= 1e-12 * (1.0 + uv.abs()));
        let au: f64 = spmv(a, &u).iter().zip(&v).map(|(x, y)| x * y).sum();
        prop_assert!((au - uv).abs() <= 1e-9 * (1.0 + uv.abs()));
        // shifting by a constant changes nothing
        let shifted: Vec<f64> = u.iter().map(|x| x + 3.0).collect();
        let e = difference_form(a, &u);
        prop_assert!((difference_form(a, &shifted) - e).abs() <= 1e-12 * (1.0 + e));
    }
}
