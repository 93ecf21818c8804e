use std::f64::consts::PI;

use domino::tension::*;
use proptest::prelude::*;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

const CATALAN: f64 = 0.915_965_594_177_219_015_054_603_514_932_384_110_774;

fn zeta_even(n: u32) -> f64 {
    let k = 2 * n as i32;
    let m = 2000;
    let head: f64 = (1..=m).map(|j| (j as f64).powi(-k)).sum();
    head + (m as f64 + 0.5).powi(1 - k) / (k - 1) as f64
}

/// Lobachevsky function from the Clausen series
/// `Cl₂(θ) = θ − θ log θ + Σ ζ(2n) θ^{2n+1} / (n (2n+1) (2π)^{2n})`,
/// with `L(z) = Cl₂(2z)/2` on `[0, π/2]` and `L(π − z) = −L(z)`.
fn lobachevsky_series(z: f64) -> f64 {
    if z > PI / 2.0 {
        return -lobachevsky_series(PI - z);
    }
    if z == 0.0 {
        return 0.0;
    }
    let th = 2.0 * z;
    let r = (th / (2.0 * PI)).powi(2);
    let mut sum = th - th * th.ln();
    let mut pow = th * r;
    for n in 1..=60u32 {
        sum += zeta_even(n) * pow / (n as f64 * (2 * n + 1) as f64);
        pow *= r;
    }
    0.5 * sum
}

fn slope(s: f64, t: f64) -> Slope {
    Slope::new(s, t).unwrap()
}

fn interior(rng: &mut ChaCha8Rng, margin: f64) -> Slope {
    loop {
        let (s, t) = (rng.gen_range(-2.0..2.0), rng.gen_range(-2.0..2.0));
        if f64::abs(s) + f64::abs(t) < 2.0 - margin {
            return slope(s, t);
        }
    }
}

#[test]
fn lobachevsky_matches_the_clausen_series() {
    for k in 0..=64 {
        let z = PI * k as f64 / 64.0;
        let (a, b) = (lobachevsky(z).unwrap(), lobachevsky_series(z));
        assert!((a - b).abs() < 1e-10, "L({z}) = {a}, series {b}");
    }
    assert!((lobachevsky(PI / 4.0).unwrap() - CATALAN / 2.0).abs() < 1e-12);
    assert!(lobachevsky(PI / 2.0).unwrap().abs() < 1e-12);
    assert!(lobachevsky(PI).unwrap().abs() < 1e-10);
    assert_eq!(lobachevsky(0.0).unwrap(), 0.0);
}

#[test]
fn lobachevsky_domain() {
    assert!(matches!(lobachevsky(-0.1), Err(TensionError::DomainError(_))));
    assert!(matches!(lobachevsky(3.2), Err(TensionError::DomainError(_))));
}

#[test]
fn quadrature_of_smooth_integrands() {
    assert!((integrate(f64::sin, 0.0, PI, 1e-13) - 2.0).abs() < 1e-12);
    assert!((integrate(|x| x.sqrt(), 0.0, 1.0, 1e-12) - 2.0 / 3.0).abs() < 1e-10);
}

#[test]
fn maximal_entropy_at_zero_slope() {
    let st = solve_slope_system(slope(0.0, 0.0)).unwrap();
    for p in st.p {
        assert!((p - 0.25).abs() < 1e-12);
    }
    let oracle = 4.0 / PI * lobachevsky_series(PI / 4.0);
    assert!((st.sigma - oracle).abs() < 1e-10);
    assert!((st.sigma - 2.0 * CATALAN / PI).abs() < 1e-10);
    assert_eq!(st.grad.map(|g| g.map(|x| x.abs() < 1e-12)), Some([true, true]));
}

#[test]
fn frozen_corner_and_edges() {
    let corner = solve_slope_system(slope(0.0, 2.0)).unwrap();
    assert_eq!(corner.p, [1.0, 0.0, 0.0, 0.0]);
    assert_eq!(corner.sigma, 0.0);
    assert!(corner.grad.is_none());
    for k in 0..=200 {
        let s = -2.0 + 4.0 * k as f64 / 200.0;
        let t = 2.0 - s.abs();
        for (a, b) in [(s, t), (s, -t)] {
            assert!(sigma(slope(a, b)).unwrap().abs() < 1e-8);
        }
    }
    assert!(matches!(Slope::new(1.5, 0.6), Err(TensionError::DomainError(_))));
}

#[test]
fn unit_slope_against_a_residual_scan() {
    let st = solve_slope_system(slope(1.0, 0.0)).unwrap();
    let [pa, pb, pc, pd] = st.p;
    assert!((pa - pb).abs() < 1e-12);
    assert!((pd - pc - 0.5).abs() < 1e-12);
    // p = (u, u, ½ − u − ¼, ½ − u + ¼) on u ∈ [0, ¼]
    let residual = |u: f64| (PI * u).sin().powi(2) - (PI * (0.25 - u)).sin() * (PI * (0.75 - u)).sin();
    let best = (1..250_000).map(|k| k as f64 * 1e-6).min_by(|a, b| residual(*a).abs().total_cmp(&residual(*b).abs())).unwrap();
    assert!((pa - best).abs() < 2e-6, "{pa} vs scan {best}");
}

#[test]
fn constraints_hold_on_the_interior_grid() {
    let n = 101;
    for i in 0..n {
        for j in 0..n {
            let (s, t) = (-2.0 + 4.0 * i as f64 / (n - 1) as f64, -2.0 + 4.0 * j as f64 / (n - 1) as f64);
            if s.abs() + t.abs() >= 2.0 {
                continue;
            }
            let [pa, pb, pc, pd] = solve_slope_system(slope(s, t)).unwrap().p;
            assert!((pa + pb + pc + pd - 1.0).abs() < 1e-10);
            assert!((2.0 * (pa - pb) - t).abs() < 1e-10);
            assert!((2.0 * (pd - pc) - s).abs() < 1e-10);
            let r = (PI * pa).sin() * (PI * pb).sin() - (PI * pc).sin() * (PI * pd).sin();
            assert!(r.abs() < 1e-10, "residual {r} at ({s}, {t})");
            assert!([pa, pb, pc, pd].iter().all(|p| (0.0..=1.0).contains(p)));
        }
    }
}

#[test]
fn zero_slope_is_the_grid_maximum() {
    let top = sigma(slope(0.0, 0.0)).unwrap();
    let n = 201;
    for i in 0..n {
        for j in 0..n {
            let (s, t) = (-2.0 + 4.0 * i as f64 / (n - 1) as f64, -2.0 + 4.0 * j as f64 / (n - 1) as f64);
            if s.abs() + t.abs() <= 2.0 {
                let v = sigma(slope(s, t)).unwrap();
                assert!(v <= top + 1e-15 && v >= -1e-12);
            }
        }
    }
}

#[test]
fn concavity_on_random_triples() {
    let mut rng = ChaCha8Rng::seed_from_u64(1);
    for _ in 0..10_000 {
        let (x, y) = (interior(&mut rng, 0.0), interior(&mut rng, 0.0));
        let (sx, sy) = (sigma(x).unwrap(), sigma(y).unwrap());
        for l in [0.25, 0.5, 0.75] {
            let m = slope(l * x.s + (1.0 - l) * y.s, l * x.t + (1.0 - l) * y.t);
            assert!(sigma(m).unwrap() >= l * sx + (1.0 - l) * sy - 1e-9);
        }
    }
}

#[test]
fn gradient_examples() {
    assert!(sigma_gradient(slope(0.5, 0.0)).unwrap()[0] < 0.0);
    let g = sigma_gradient(slope(0.0, 0.0)).unwrap();
    assert!(g[0].abs() < 1e-9 && g[1].abs() < 1e-9);
    assert!(matches!(sigma_gradient(slope(1.9995, 0.0)), Err(TensionError::BoundaryGradient(..))));
}

#[test]
fn analytic_derivatives_match_finite_differences() {
    let mut rng = ChaCha8Rng::seed_from_u64(2);
    for _ in 0..200 {
        let x = interior(&mut rng, 0.05);
        let d = sigma_derivatives(x).unwrap();
        let fd = sigma_gradient(x).unwrap();
        assert!((d.sigma - sigma(x).unwrap()).abs() < 1e-12);
        for k in 0..2 {
            assert!((d.grad[k] - fd[k]).abs() < 1e-5, "{x:?}: {:?} vs {fd:?}", d.grad);
        }
        let h = 1e-5;
        let gs = slope_derivatives(slope(x.s + h, x.t)).unwrap().0;
        let gt = slope_derivatives(slope(x.s, x.t + h)).unwrap().0;
        let gm = slope_derivatives(slope(x.s - h, x.t)).unwrap().0;
        let gn = slope_derivatives(slope(x.s, x.t - h)).unwrap().0;
        let hess = [[(gs[0] - gm[0]) / (2.0 * h), (gt[0] - gn[0]) / (2.0 * h)], [(gs[1] - gm[1]) / (2.0 * h), (gt[1] - gn[1]) / (2.0 * h)]];
        for (i, row) in hess.iter().enumerate() {
            for (j, &fd) in row.iter().enumerate() {
                assert!((d.hess[i][j] - fd).abs() < 1e-4 * (1.0 + fd.abs()), "{x:?}");
            }
        }
        assert!(d.hess[0][0] < 0.0 && d.hess[0][0] * d.hess[1][1] - d.hess[0][1] * d.hess[1][0] > 0.0);
    }
}

#[test]
fn directional_derivatives_match_secants() {
    let mut rng = ChaCha8Rng::seed_from_u64(3);
    for _ in 0..200 {
        let x = interior(&mut rng, 0.1);
        let g = sigma_gradient(x).unwrap();
        let (a, b) = (rng.gen_range(-1.0..1.0f64), rng.gen_range(-1.0..1.0f64));
        let norm = a.abs() + b.abs();
        let (u, v) = (a / norm, b / norm);
        let h = 1e-4;
        let secant = (sigma(slope(x.s + h * u, x.t + h * v)).unwrap() - sigma(slope(x.s - h * u, x.t - h * v)).unwrap()) / (2.0 * h);
        assert!((secant - g[0] * u - g[1] * v).abs() < 1e-4);
    }
}

proptest! {
    #[test]
    fn symmetries(s in -2.0..2.0f64, t in -2.0..2.0f64) {
        prop_assume!(s.abs() + t.abs() < 1.99);
        let v = sigma(slope(s, t)).unwrap();
        prop_assert!((sigma(slope(-s, -t)).unwrap() - v).abs() < 1e-12);
        prop_assert!((sigma(slope(t, s)).unwrap() - v).abs() < 1e-12);
        prop_assert!((sigma(slope(-s, t)).unwrap() - v).abs() < 1e-12);
        let (g, h) = (sigma_gradient(slope(s, t)).unwrap(), sigma_gradient(slope(-s, -t)).unwrap());
        prop_assert!((g[0] + h[0]).abs() < 1e-6 && (g[1] + h[1]).abs() < 1e-6);
    }

    #[test]
    fn sigma_is_nonnegative_and_bounded(s in -2.0..2.0f64, t in -2.0..2.0f64) {
        prop_assume!(s.abs() + t.abs() <= 2.0);
        let v = sigma(slope(s, t)).unwrap();
        prop_assert!((-1e-12..=2.0 * CATALAN / PI + 1e-12).contains(&v));
    }
}
