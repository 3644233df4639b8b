use std::f64::consts::PI;

use approx::{assert_abs_diff_eq, assert_relative_eq};
use nlbvp::kernels::linear_mode_constant;
use nlbvp::{Domain, KernelProfile, LocalizationField, Mode, NlError, ProfileFamily, TwoPointKernel};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

/// Adaptive Simpson, independent of the library's quadrature.
fn simpson<F: Fn(f64) -> f64>(f: &F, a: f64, b: f64, tol: f64) -> f64 {
    fn rec<F: Fn(f64) -> f64>(
        f: &F,
        a: f64,
        b: f64,
        fa: f64,
        fm: f64,
        fb: f64,
        whole: f64,
        tol: f64,
        depth: u32,
    ) -> f64 {
        let m = 0.5 * (a + b);
        let (lm, rm) = (0.5 * (a + m), 0.5 * (m + b));
        let (flm, frm) = (f(lm), f(rm));
        let left = (m - a) / 6.0 * (fa + 4.0 * flm + fm);
        let right = (b - m) / 6.0 * (fm + 4.0 * frm + fb);
        if depth == 0 || (left + right - whole).abs() <= 15.0 * tol {
            return left + right + (left + right - whole) / 15.0;
        }
        rec(f, a, m, fa, flm, fm, left, 0.5 * tol, depth - 1) + rec(f, m, b, fm, frm, fb, right, 0.5 * tol, depth - 1)
    }
    let (fa, fm, fb) = (f(a), f(0.5 * (a + b)), f(b));
    rec(f, a, b, fa, fm, fb, (b - a) / 6.0 * (fa + 4.0 * fm + fb), tol, 40)
}

fn shape(r: f64) -> f64 {
    if r < 0.9 {
        (1.0 - (r / 0.9).powi(2)).powi(2)
    } else {
        0.0
    }
}

#[test]
fn normalization_constant_matches_oracle() {
    let prof = KernelProfile::default_for(1);
    let c = 1.0 / simpson(&|z: f64| z * z * shape(z.abs()), -0.9, 0.9, 1e-14);
    assert_relative_eq!(prof.c, c, max_relative = 1e-10);
    // closed form 105 / (16 R0³)
    assert_relative_eq!(c, 105.0 / (16.0 * 0.729), max_relative = 1e-12);
    let m2 = simpson(&|z: f64| z * z * prof.rho(z.abs()), -1.0, 1.0, 1e-14);
    assert_abs_diff_eq!(m2, 1.0, epsilon = 1e-8);
}

#[test]
fn two_dimensional_moments() {
    let prof = KernelProfile::default_for(2);
    assert_abs_diff_eq!(prof.second_moment().unwrap(), 2.0, epsilon = 1e-8);
    let m = prof.isotropy_matrix();
    assert_abs_diff_eq!(m[0][0], 1.0, epsilon = 1e-6);
    assert_abs_diff_eq!(m[1][1], 1.0, epsilon = 1e-6);
    assert_abs_diff_eq!(m[0][1], 0.0, epsilon = 1e-6);
    let rho_bar = 2.0 * PI * simpson(&|r: f64| r * prof.rho(r), 0.0, 0.9, 1e-14);
    assert_relative_eq!(prof.rho_bar().unwrap(), rho_bar, max_relative = 1e-9);
}

#[test]
fn support_and_floor() {
    for d in [1, 2] {
        let prof = KernelProfile::default_for(d);
        assert_eq!(prof.rho(prof.support), 0.0);
        assert_eq!(prof.rho(0.95), 0.0);
        assert_eq!(prof.floor_radius, 0.45);
        assert!(prof.floor_value > 0.0);
        assert!((0..=45).all(|k| prof.rho(k as f64 * 0.01) >= prof.floor_value));
    }
}

#[test]
fn underbar_profile_closed_form_and_finite_differences() {
    let prof = KernelProfile::default_for(1);
    let c = prof.c;
    for k in 1..30 {
        let r = 0.03 * k as f64;
        let closed = 4.0 * c / 0.81 * (1.0 - (r / 0.9).powi(2)).max(0.0);
        assert_relative_eq!(prof.rho_under(r), closed, max_relative = 1e-12, epsilon = 1e-14);
        let h = 1e-6;
        let fd = -(prof.rho(r + h) - prof.rho(r - h)) / (2.0 * h) / r;
        assert_abs_diff_eq!(prof.rho_under(r), fd, epsilon = 1e-6 * c);
    }
    assert_eq!(prof.rho_under(0.9), 0.0);
}

#[test]
fn underbar_constant_in_two_dimensions() {
    let prof = KernelProfile::default_for(2);
    assert_abs_diff_eq!(prof.rho_under_d().unwrap(), 2.0 * PI * prof.rho(0.0), epsilon = 1e-10);
}

#[test]
fn profile_recovered_from_underbar() {
    let prof = KernelProfile::default_for(1);
    for k in 0..20 {
        let r = 0.045 * k as f64;
        let v = simpson(&|s| s * prof.rho_under(s), r, 0.9, 1e-14);
        assert_abs_diff_eq!(v, prof.rho(r), epsilon = 1e-8);
    }
}

#[test]
fn invalid_profiles_rejected() {
    assert!(KernelProfile::new(ProfileFamily::PolyBump { p: 1.5 }, 0.9, 1).is_err());
    assert!(KernelProfile::new(ProfileFamily::PolyBump { p: 2.0 }, 0.99, 1).is_err());
    assert!(KernelProfile::new(ProfileFamily::PolyBump { p: 2.0 }, 0.9, 3).is_err());
}

#[test]
fn tabulated_profile_reproduces_poly_bump() {
    let base = KernelProfile::default_for(1);
    let r: Vec<f64> = (0..=60).map(|k| 0.9 * k as f64 / 60.0).collect();
    let rho: Vec<f64> = r.iter().map(|&x| shape(x)).collect();
    let drho: Vec<f64> = r.iter().map(|&x| -4.0 * x / 0.81 * (1.0 - (x / 0.9).powi(2))).collect();
    let tab = KernelProfile::new(ProfileFamily::Tabulated { r, rho, drho }, 0.9, 1).unwrap();
    assert_relative_eq!(tab.c, base.c, max_relative = 1e-6);
    for x in [0.0, 0.123, 0.4, 0.77] {
        assert_relative_eq!(tab.rho(x), base.rho(x), max_relative = 1e-5, epsilon = 1e-9);
    }
}

#[test]
fn linear_mode_constant_matches_oracle() {
    let prof = KernelProfile::default_for(1);
    let oracle = simpson(&|z: f64| z * ((1.0 + z) / (1.0 - z)).ln() * prof.rho(z), 0.0, 0.9, 1e-14);
    let c = linear_mode_constant(&prof).unwrap();
    assert_relative_eq!(c, oracle, max_relative = 1e-10);
    assert!(c > 1.0);
    assert!(linear_mode_constant(&KernelProfile::default_for(2)).unwrap() > 1.0);
}

#[test]
fn linear_mode_constant_ignores_input_scaling() {
    let prof = KernelProfile::default_for(1);
    let doubled = prof.scaled(2.0);
    assert_relative_eq!(doubled.c_rho_raw().unwrap(), 2.0 * prof.c_rho_raw().unwrap(), max_relative = 1e-12);
    assert_relative_eq!(
        linear_mode_constant(&doubled).unwrap(),
        linear_mode_constant(&prof).unwrap(),
        max_relative = 1e-12
    );
}

fn kernel(dom: Domain, delta: f64, mode: Mode, alpha: f64) -> TwoPointKernel {
    let d = dom.dim();
    let eta = LocalizationField::build(&dom, delta, 0.25, mode).unwrap();
    TwoPointKernel::new(KernelProfile::default_for(d), eta, alpha).unwrap()
}

#[test]
fn constant_mode_kernel_is_scaled_profile() {
    let k = kernel(Domain::unit_interval(), 0.05, Mode::Constant, 2.0);
    let (x, y) = ([0.5, 0.0], [0.52, 0.0]);
    let expect = 0.05f64.powi(-3) * k.profile.rho(0.02 / 0.05);
    assert_relative_eq!(k.eval(x, y).unwrap(), expect, max_relative = 1e-14);
}

#[test]
fn kernel_symmetry_support_and_boundary() {
    let k = kernel(Domain::unit_disk(), 0.05, Mode::Quadratic, 2.0);
    let (x, y) = ([0.9, 0.05], [0.91, 0.04]);
    assert_eq!(k.eval(x, y).unwrap(), k.eval(y, x).unwrap());
    assert_eq!(k.eval([0.0, 0.0], [0.2, 0.0]).unwrap(), 0.0);
    assert!(matches!(k.eval([1.0, 0.0], [0.99, 0.0]), Err(NlError::SingularHorizon { .. })));
}

#[test]
fn gradient_matches_finite_differences() {
    for dom in [Domain::unit_interval(), Domain::unit_disk()] {
        let d = dom.dim();
        let k = kernel(dom.clone(), 0.05, Mode::Quadratic, 2.0);
        let mut rng = ChaCha8Rng::seed_from_u64(5);
        let mut tested = 0;
        while tested < 100 {
            let x = if d == 1 {
                [rng.gen_range(0.02..0.98), 0.0]
            } else {
                [rng.gen_range(-0.7..0.7), rng.gen_range(-0.7..0.7)]
            };
            let ex = k.eta.eval(x).unwrap().value;
            let r = rng.gen_range(0.1..0.8) * 0.9 * ex;
            let th: f64 = rng.gen_range(0.0..std::f64::consts::TAU);
            let y =
                if d == 1 { [x[0] + r * th.cos().signum(), 0.0] } else { [x[0] + r * th.cos(), x[1] + r * th.sin()] };
            if !dom.contains(y) || dom.dist_to_boundary(y).unwrap() < 1e-3 {
                continue;
            }
            let g = k.grad_x(x, y).unwrap();
            let h = 1e-6 * ex;
            for c in 0..d {
                let (mut xp, mut xm) = (x, x);
                xp[c] += h;
                xm[c] -= h;
                let fd = (k.eval(xp, y).unwrap() - k.eval(xm, y).unwrap()) / (2.0 * h);
                let scale = g[0].abs().max(g[1].abs()).max(1e-300);
                assert!((g[c] - fd).abs() <= 1e-5 * scale, "x={x:?} y={y:?} analytic {} fd {fd}", g[c]);
            }
            tested += 1;
        }
    }
}

#[test]
fn gradient_special_cases() {
    let k = kernel(Domain::unit_disk(), 0.05, Mode::Quadratic, 2.0);
    assert_eq!(k.grad_x([0.1, 0.0], [0.1, 0.0]).unwrap(), [0.0, 0.0]);
    // in the collar only the ∇η term survives at y = x
    let x = [0.9, 0.0];
    let e = k.eta.eval(x).unwrap();
    let expect = -(4.0 / (2.0 * e.value)) * e.value.powi(-4) * k.profile.rho(0.0) * e.grad[0];
    assert_relative_eq!(k.grad_x(x, x).unwrap()[0], expect, max_relative = 1e-12);
    let kc = kernel(Domain::unit_disk(), 0.05, Mode::Constant, 2.0);
    let (x, y) = ([0.1, 0.2], [0.11, 0.23]);
    let g = kc.grad_x(x, y).unwrap();
    // parallel to y − x
    assert_abs_diff_eq!(g[0] * (y[1] - x[1]) - g[1] * (y[0] - x[0]), 0.0, epsilon = 1e-9 * g[0].abs());
}
