//! Closed-form reference values on Ω = (−π/2, π/2).
//!
//! There φ₁ = cos x with λ₁ = 1, the enlarged interval (−π/2 − τ, π/2 + τ)
//! has φ^τ = cos(x/L) with L = 1 + 2τ/π and λ^τ = 1/L², and
//! u_{ε,τ} = min{cos(x/L), cos(x)/ε}. The H¹₀ norm of u_{ε,τ} is integrated
//! numerically from its piecewise derivative.

use std::f64::consts::PI;

use serde::Serialize;

use crate::numeric::bisect;

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Oracle1DReport {
    pub tau: f64,
    pub epsilon: f64,
    pub alpha: f64,
    pub l: f64,
    pub lambda1: f64,
    pub lambda_tau: f64,
    pub c_tau: f64,
    pub p_tilde: f64,
    pub norm_phi1_sq: f64,
    /// ‖αφ₁‖²
    pub norm_lower_sq: f64,
    /// Positive abscissa where cos(x/L) = cos(x)/ε; zero when ε = 1.
    pub kink_x: f64,
    pub norm_u_sq: f64,
}

pub fn half_width_ratio(tau: f64) -> f64 {
    1.0 + 2.0 * tau / PI
}

pub fn kink_x(l: f64, epsilon: f64) -> f64 {
    if epsilon >= 1.0 {
        return 0.0;
    }
    bisect(|x| x.cos() / epsilon - (x / l).cos(), 0.0, PI / 2.0, 1e-16, 1e-14)
}

/// ‖u_{ε,τ}‖²_H = 2∫₀^k sin²(x/L)/L² dx + (2/ε²)∫_k^{π/2} sin²x dx.
pub fn norm_u_sq(l: f64, epsilon: f64) -> f64 {
    let k = kink_x(l, epsilon);
    let inner = integrate(|x| ((x / l).sin() / l).powi(2), 0.0, k, 1e-13);
    let outer = integrate(|x| x.sin().powi(2), k, PI / 2.0, 1e-13);
    2.0 * inner + 2.0 * outer / (epsilon * epsilon)
}

pub fn oracle_report(tau: f64, epsilon: f64, alpha: f64) -> Oracle1DReport {
    assert!(tau > 0.0 && epsilon > 0.0 && epsilon <= 1.0 && alpha >= 1.0, "oracle preconditions");
    let l = half_width_ratio(tau);
    let norm_phi1_sq = 2.0 * integrate(|x| x.sin().powi(2), 0.0, PI / 2.0, 1e-13);
    Oracle1DReport {
        tau,
        epsilon,
        alpha,
        l,
        lambda1: 1.0,
        lambda_tau: 1.0 / (l * l),
        c_tau: 1.0,
        p_tilde: 0.0,
        norm_phi1_sq,
        norm_lower_sq: alpha * alpha * norm_phi1_sq,
        kink_x: kink_x(l, epsilon),
        norm_u_sq: norm_u_sq(l, epsilon),
    }
}

/// max of cos(x)/cos(x/L) over `n` equispaced interior samples.
pub fn max_ratio_on_sample(l: f64, n: usize) -> f64 {
    (1..n)
        .map(|i| -PI / 2.0 + PI * i as f64 / n as f64)
        .map(|x| x.cos() / (x / l).cos())
        .fold(f64::NEG_INFINITY, f64::max)
}

const GK_NODES: [f64; 8] = [
    0.991_455_371_120_812_6,
    0.949_107_912_342_758_5,
    0.864_864_423_359_769_1,
    0.741_531_185_599_394_4,
    0.586_087_235_467_691_1,
    0.405_845_151_377_397_2,
    0.207_784_955_007_898_5,
    0.0,
];
const GK_WEIGHTS: [f64; 8] = [
    0.022_935_322_010_529_22,
    0.063_092_092_629_978_55,
    0.104_790_010_322_250_2,
    0.140_653_259_715_525_9,
    0.169_004_726_639_267_9,
    0.190_350_578_064_785_4,
    0.204_432_940_075_298_9,
    0.209_482_141_084_727_8,
];
const G_WEIGHTS: [f64; 4] = [
    0.129_484_966_168_869_7,
    0.279_705_391_489_276_7,
    0.381_830_050_505_118_9,
    0.417_959_183_673_469_4,
];

/// 15-point Kronrod estimate and its difference from the embedded 7-point
/// Gauss rule.
fn gauss_kronrod(f: &impl Fn(f64) -> f64, a: f64, b: f64) -> (f64, f64) {
    let (c, r) = (0.5 * (a + b), 0.5 * (b - a));
    let fc = f(c);
    let mut kronrod = GK_WEIGHTS[7] * fc;
    let mut gauss = G_WEIGHTS[3] * fc;
    for i in 0..7 {
        let s = f(c - r * GK_NODES[i]) + f(c + r * GK_NODES[i]);
        kronrod += GK_WEIGHTS[i] * s;
        if i % 2 == 1 {
            gauss += G_WEIGHTS[i / 2] * s;
        }
    }
    (kronrod * r, ((kronrod - gauss) * r).abs())
}

/// Adaptive Gauss–Kronrod quadrature of a smooth integrand.
pub fn integrate(f: impl Fn(f64) -> f64, a: f64, b: f64, rel_tol: f64) -> f64 {
    if a == b {
        return 0.0;
    }
    fn recurse(f: &impl Fn(f64) -> f64, a: f64, b: f64, whole: (f64, f64), tol: f64, depth: u32) -> f64 {
        let (value, err) = whole;
        if err <= tol || depth == 0 {
            return value;
        }
        let m = 0.5 * (a + b);
        let left = gauss_kronrod(f, a, m);
        let right = gauss_kronrod(f, m, b);
        recurse(f, a, m, left, 0.5 * tol, depth - 1) + recurse(f, m, b, right, 0.5 * tol, depth - 1)
    }
    let whole = gauss_kronrod(&f, a, b);
    let tol = (rel_tol * whole.0.abs()).max(1e-300);
    recurse(&f, a, b, whole, tol, 40)
}
