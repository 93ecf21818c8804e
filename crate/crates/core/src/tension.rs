//! Surface tension of the domino dimer model.
//!
//! For a slope `(s, t)` in the Newton polygon `|s| + |t| ≤ 2` the four
//! domino-type probabilities satisfy
//!
//! ```text
//! p_a + p_b + p_c + p_d = 1,   2(p_a − p_b) = t,   2(p_d − p_c) = s,
//! sin(π p_a) sin(π p_b) = sin(π p_c) sin(π p_d),
//! ```
//!
//! and `σ(s, t) = (1/π) Σ L(π p_k)` with the Lobachevsky function
//! `L(z) = −∫₀^z log|2 sin t| dt`.

use std::f64::consts::{FRAC_PI_2, PI};

use thiserror::Error;

#[derive(Debug, Error, Clone, Copy, PartialEq)]
pub enum TensionError {
    #[error("argument {0} outside the admissible range")]
    DomainError(f64),
    #[error("slope ({0}, {1}) is too close to the boundary of the Newton polygon")]
    BoundaryGradient(f64, f64),
    #[error("no root of the slope system at ({0}, {1})")]
    NoRoot(f64, f64),
}

/// Slopes within this `ℓ¹` distance of `∂𝒩` are treated as frozen.
pub const FROZEN_TOL: f64 = 1e-9;
/// Minimal distance to `∂𝒩` for the finite-difference gradient.
pub const EPS_BND: f64 = 1e-3;
/// Step of the finite-difference gradient.
pub const FD_STEP: f64 = 1e-6;

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Slope {
    pub s: f64,
    pub t: f64,
}

impl Slope {
    pub fn new(s: f64, t: f64) -> Result<Self, TensionError> {
        let slope = Slope { s, t };
        if !(s.is_finite() && t.is_finite()) || slope.l1() > 2.0 + 1e-12 {
            return Err(TensionError::DomainError(slope.l1()));
        }
        Ok(slope)
    }

    pub fn l1(&self) -> f64 {
        self.s.abs() + self.t.abs()
    }

    /// `ℓ¹` distance to the boundary of the Newton polygon.
    pub fn boundary_distance(&self) -> f64 {
        2.0 - self.l1()
    }
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct SlopeTension {
    pub slope: Slope,
    /// `(p_a, p_b, p_c, p_d)`.
    pub p: [f64; 4],
    pub sigma: f64,
    /// Absent on the frozen boundary.
    pub grad: Option<[f64; 2]>,
}

// 15-point Kronrod nodes and weights with the embedded 7-point Gauss rule.
const XK: [f64; 8] = [
    0.991_455_371_120_812_6,
    0.949_107_912_342_758_5,
    0.864_864_423_359_769_1,
    0.741_531_185_599_394_4,
    0.586_087_235_467_691_1,
    0.405_845_151_377_397_2,
    0.207_784_955_007_898_5,
    0.0,
];
const WK: [f64; 8] = [
    0.022_935_322_010_529_22,
    0.063_092_092_629_978_55,
    0.104_790_010_322_250_2,
    0.140_653_259_715_525_9,
    0.169_004_726_639_267_9,
    0.190_350_578_064_785_4,
    0.204_432_940_075_298_9,
    0.209_482_141_084_727_8,
];
const WG: [f64; 4] = [0.129_484_966_168_869_7, 0.279_705_391_489_276_7, 0.381_830_050_505_118_9, 0.417_959_183_673_469_4];

fn kronrod<F: Fn(f64) -> f64>(f: &F, a: f64, b: f64) -> (f64, f64) {
    let c = 0.5 * (a + b);
    let h = 0.5 * (b - a);
    let fc = f(c);
    let mut k = WK[7] * fc;
    let mut g = WG[3] * fc;
    for i in 0..7 {
        let x = h * XK[i];
        let pair = f(c - x) + f(c + x);
        k += WK[i] * pair;
        if i % 2 == 1 {
            g += WG[i / 2] * pair;
        }
    }
    (k * h, ((k - g) * h).abs())
}

/// Adaptive Gauss-Kronrod quadrature to absolute tolerance `tol`.
pub fn integrate<F: Fn(f64) -> f64>(f: F, a: f64, b: f64, tol: f64) -> f64 {
    let mut stack = vec![(a, b, tol, 0u32)];
    let mut total = 0.0;
    while let Some((a, b, tol, depth)) = stack.pop() {
        let (v, err) = kronrod(&f, a, b);
        if err <= tol || depth >= 40 {
            total += v;
        } else {
            let m = 0.5 * (a + b);
            stack.push((a, m, tol / 2.0, depth + 1));
            stack.push((m, b, tol / 2.0, depth + 1));
        }
    }
    total
}

/// `log(sin t / t)`, smooth on `[0, π/2]`.
fn log_sinc(t: f64) -> f64 {
    if t < 1e-4 {
        let t2 = t * t;
        -t2 / 6.0 - t2 * t2 / 180.0
    } else {
        (t.sin() / t).ln()
    }
}

/// `L(z) = −∫₀^z log|2 sin t| dt` for `z ∈ [0, π]`.
///
/// On `[0, π/2]` the singular part `log 2t` is integrated exactly and the
/// smooth remainder `log(sin t / t)` by quadrature; `L(π − z) = −L(z)`
/// covers the other half.
pub fn lobachevsky(z: f64) -> Result<f64, TensionError> {
    if !(-1e-12..=PI + 1e-12).contains(&z) {
        return Err(TensionError::DomainError(z));
    }
    let z = z.clamp(0.0, PI);
    if z > FRAC_PI_2 {
        return Ok(-lobachevsky_half(PI - z));
    }
    Ok(lobachevsky_half(z))
}

fn lobachevsky_half(z: f64) -> f64 {
    if z == 0.0 {
        return 0.0;
    }
    let singular = z * (2.0 * z).ln() - z;
    -(singular + integrate(log_sinc, 0.0, z, 1e-15))
}

/// Probabilities `(p_a, p_b, p_c, p_d)` as a function of the free parameter
/// `u`, with `p_a = u + t/4`, `p_b = u − t/4`, `p_c = ½ − u − s/4`,
/// `p_d = ½ − u + s/4`; the linear constraints then hold identically.
fn probabilities(s: f64, t: f64, u: f64) -> [f64; 4] {
    let v = 0.5 - u;
    [u + t / 4.0, u - t / 4.0, v - s / 4.0, v + s / 4.0]
}

fn residual(p: &[f64; 4]) -> f64 {
    (PI * p[0]).sin() * (PI * p[1]).sin() - (PI * p[2]).sin() * (PI * p[3]).sin()
}

/// Solves the slope system by bisection in `u`.
///
/// On the admissible interval `u ∈ [|t|/4, ½ − |s|/4]` the residual is
/// increasing, nonpositive at the left end and nonnegative at the right.
pub fn solve_slope_system(slope: Slope) -> Result<SlopeTension, TensionError> {
    let (s, t) = (slope.s, slope.t);
    let lo0 = t.abs() / 4.0;
    let hi0 = 0.5 - s.abs() / 4.0;
    if slope.boundary_distance() <= FROZEN_TOL {
        let u = (0.5 * (lo0 + hi0)).clamp(lo0.min(hi0), lo0.max(hi0));
        let p = probabilities(s, t, u).map(|x| x.clamp(0.0, 1.0));
        return Ok(SlopeTension { slope, p, sigma: 0.0, grad: None });
    }
    let p = interior_probabilities(s, t, lo0, hi0)?;
    let sigma = p.iter().map(|&x| lobachevsky(PI * x).unwrap()).sum::<f64>() / PI;
    let d = derivatives_at(s, t, &p);
    Ok(SlopeTension { slope, p, sigma, grad: Some(d.grad) })
}

fn interior_probabilities(s: f64, t: f64, lo0: f64, hi0: f64) -> Result<[f64; 4], TensionError> {
    let (mut lo, mut hi) = (lo0, hi0);
    if residual(&probabilities(s, t, lo)) > 0.0 || residual(&probabilities(s, t, hi)) < 0.0 {
        return Err(TensionError::NoRoot(s, t));
    }
    for _ in 0..200 {
        let mid = 0.5 * (lo + hi);
        if mid <= lo || mid >= hi {
            break;
        }
        if residual(&probabilities(s, t, mid)) < 0.0 {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    Ok(probabilities(s, t, 0.5 * (lo + hi)))
}

pub fn sigma(slope: Slope) -> Result<f64, TensionError> {
    Ok(solve_slope_system(slope)?.sigma)
}

/// Central finite differences of `σ` with step [`FD_STEP`].
pub fn sigma_gradient(slope: Slope) -> Result<[f64; 2], TensionError> {
    if slope.boundary_distance() < EPS_BND {
        return Err(TensionError::BoundaryGradient(slope.s, slope.t));
    }
    let f = |s: f64, t: f64| sigma(Slope { s, t });
    let h = FD_STEP;
    Ok([
        (f(slope.s + h, slope.t)? - f(slope.s - h, slope.t)?) / (2.0 * h),
        (f(slope.s, slope.t + h)? - f(slope.s, slope.t - h)?) / (2.0 * h),
    ])
}

/// Value, gradient and Hessian of `σ` at an interior slope.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct SigmaDerivatives {
    pub sigma: f64,
    pub grad: [f64; 2],
    /// `[[σ_ss, σ_st], [σ_st, σ_tt]]`.
    pub hess: [[f64; 2]; 2],
}

/// Analytic derivatives. Since the probabilities extremize the entropy
/// subject to the linear constraints, `∂σ/∂s = −¼ log(sin πp_d / sin πp_c)`
/// and `∂σ/∂t = −¼ log(sin πp_a / sin πp_b)`; the Hessian differentiates
/// these through `cos 2πu = sin²(πs/4) − sin²(πt/4)`.
pub fn sigma_derivatives(slope: Slope) -> Result<SigmaDerivatives, TensionError> {
    let st = solve_slope_system(slope)?;
    if st.grad.is_none() {
        return Err(TensionError::BoundaryGradient(slope.s, slope.t));
    }
    let mut d = derivatives_at(slope.s, slope.t, &st.p);
    d.sigma = st.sigma;
    Ok(d)
}

/// Gradient and Hessian of `σ` without evaluating `σ` itself.
pub fn slope_derivatives(slope: Slope) -> Result<([f64; 2], [[f64; 2]; 2]), TensionError> {
    if slope.boundary_distance() <= FROZEN_TOL {
        return Err(TensionError::BoundaryGradient(slope.s, slope.t));
    }
    let (s, t) = (slope.s, slope.t);
    let p = interior_probabilities(s, t, t.abs() / 4.0, 0.5 - s.abs() / 4.0)?;
    let d = derivatives_at(s, t, &p);
    Ok((d.grad, d.hess))
}

fn derivatives_at(s: f64, t: f64, p: &[f64; 4]) -> SigmaDerivatives {
    let sp = p.map(|x| (PI * x).sin());
    let cot = p.map(|x| 1.0 / (PI * x).tan());
    let grad = [-0.25 * (sp[3] / sp[2]).ln(), -0.25 * (sp[0] / sp[1]).ln()];
    let w = (PI * s / 4.0).sin().powi(2) - (PI * t / 4.0).sin().powi(2);
    let du_dw = -1.0 / (2.0 * PI * (1.0 - w * w).max(1e-300).sqrt());
    let u_s = du_dw * (PI / 4.0) * (PI * s / 2.0).sin();
    let u_t = -du_dw * (PI / 4.0) * (PI * t / 2.0).sin();
    let (dpa_t, dpb_t) = (u_t + 0.25, u_t - 0.25);
    let (dpc_s, dpd_s) = (-u_s - 0.25, 0.25 - u_s);
    let (dpc_t, dpd_t) = (-u_t, -u_t);
    let q = -0.25 * PI;
    let h_ss = q * (cot[3] * dpd_s - cot[2] * dpc_s);
    let h_st = q * (cot[3] * dpd_t - cot[2] * dpc_t);
    let h_tt = q * (cot[0] * dpa_t - cot[1] * dpb_t);
    SigmaDerivatives { sigma: f64::NAN, grad, hess: [[h_ss, h_st], [h_st, h_tt]] }
}
