//! Scalar functions shared by the rest of the crate: Lambert W0, the saddle
//! point xi(lambda), the drift F, the rate function J, the tail exponent h
//! and the characteristic function g.

use std::f64::consts::{E, PI};

use num_complex::Complex64;

use crate::error::{bail, Result};

const INV_E: f64 = 1.0 / E;
const BRANCH_SLACK: f64 = 1e-15;
const HALLEY_MAX_ITER: usize = 50;
const HALLEY_TOL: f64 = 1e-15;

/// Below this lambda the closed form through W0 sits too close to the
/// branch point to serve as an accurate cross-check.
const DUAL_CHECK_MIN_LAMBDA: f64 = 0.2;
const DUAL_CHECK_TOL: f64 = 1e-11;

/// Saddle point data attached to a ratio lambda = (m - l) / l.
///
/// `tau` is the real coefficient of `i theta^3` in the expansion of g at 0
/// and `gamma` the coefficient of `theta^4`, so that
/// `g(theta) = 1 - v theta^2 + i tau theta^3 + gamma theta^4 + O(theta^5)`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SaddleParams {
    pub lambda: f64,
    pub xi: f64,
    pub rho: f64,
    pub v: f64,
    pub tau: f64,
    pub gamma: f64,
    pub gamma_tilde: f64,
}

/// Principal branch of the Lambert W function.
pub fn lambert_w0(z: f64) -> Result<f64> {
    if z.is_nan() {
        bail!(Domain, "lambert_w0 of NaN");
    }
    if z < -INV_E {
        if z >= -INV_E - BRANCH_SLACK {
            return Ok(-1.0);
        }
        bail!(Domain, "lambert_w0 requires z >= -1/e, got {z}");
    }
    if z == 0.0 {
        return Ok(0.0);
    }
    if z == f64::INFINITY {
        return Ok(f64::INFINITY);
    }

    let mut w = initial_guess(z);
    if w <= -1.0 {
        return Ok(-1.0);
    }
    for _ in 0..HALLEY_MAX_ITER {
        let ew = w.exp();
        let f = w * ew - z;
        if f == 0.0 || f.abs() <= HALLEY_TOL * z.abs() {
            break;
        }
        let wp1 = w + 1.0;
        let denom = ew * wp1 - (w + 2.0) * f / (2.0 * wp1);
        let step = f / denom;
        let next = (w - step).max(-1.0);
        if (next - w).abs() <= 4.0 * f64::EPSILON * w.abs().max(1e-300) {
            w = next;
            break;
        }
        w = next;
    }
    Ok(w)
}

fn initial_guess(z: f64) -> f64 {
    if z < -0.25 {
        let p = (2.0 * (E * z + 1.0)).max(0.0).sqrt();
        -1.0 + p - p * p / 3.0 + 11.0 / 72.0 * p * p * p
    } else if z <= 3.0 {
        // Winitzki's approximation.
        let l = z.ln_1p();
        l * (1.0 - (1.0 + l).ln() / (2.0 + l))
    } else {
        let l1 = z.ln();
        let l2 = l1.ln();
        l1 - l2 + l2 / l1
    }
}

/// `(e^{-x} - 1 + x) / x^2`, accurate near zero.
fn s2(x: f64) -> f64 {
    if x.abs() < 0.5 {
        let mut term = 0.5;
        let mut sum = 0.0;
        let mut k = 2.0;
        for _ in 0..30 {
            sum += term;
            k += 1.0;
            term *= -x / k;
            if term.abs() < 1e-18 * sum.abs() {
                break;
            }
        }
        sum
    } else {
        ((-x).exp_m1() + x) / (x * x)
    }
}

/// `(1 - e^{-x}(1 + x)) / x^2`, the derivative of `x s2(x)`.
fn s2_deriv(x: f64) -> f64 {
    if x.abs() < 0.5 {
        let mut sum = 0.0;
        let mut fact = 2.0;
        let mut pow = 1.0;
        for j in 0..30 {
            let t = (j as f64 + 1.0) / fact * pow;
            sum += if j % 2 == 0 { t } else { -t };
            pow *= x;
            fact *= j as f64 + 3.0;
        }
        sum
    } else {
        (1.0 - (-x).exp() * (1.0 + x)) / (x * x)
    }
}

/// Positive root of `xi = (1 + lambda)(1 - e^{-xi})`, with `xi(0) = 0`.
///
/// The root is found by safeguarded Newton inside `[lambda, min(2 lambda,
/// 1 + lambda)]` and, where it is well conditioned, checked against the
/// closed form `1 + lambda + W0(-(1 + lambda) e^{-1-lambda})`.
pub fn xi_of_lambda(lambda: f64) -> Result<f64> {
    if lambda.is_nan() || lambda < 0.0 {
        bail!(Domain, "xi_of_lambda requires lambda >= 0, got {lambda}");
    }
    if lambda == 0.0 {
        return Ok(0.0);
    }
    if lambda.is_infinite() {
        return Ok(f64::INFINITY);
    }
    let xi = xi_newton(lambda);
    if lambda >= DUAL_CHECK_MIN_LAMBDA {
        let w = xi_lambert(lambda)?;
        if (w - xi).abs() > DUAL_CHECK_TOL * (1.0 + xi) {
            bail!(
                InvariantViolation,
                "xi({lambda}): Newton gives {xi}, Lambert W gives {w}"
            );
        }
    }
    Ok(xi)
}

fn xi_newton(lambda: f64) -> f64 {
    let a = 1.0 + lambda;
    // x s2(x) a = lambda is the root equation divided through by x, which
    // avoids the cancellation in x - a(1 - e^{-x}) when lambda is small.
    let phi = |x: f64| a * x * s2(x) - lambda;
    let mut lo = lambda;
    let mut hi = (2.0 * lambda).min(a);
    if phi(lo) >= 0.0 {
        return lo;
    }
    if phi(hi) <= 0.0 {
        return hi;
    }
    let mut x = 0.5 * (lo + hi);
    for _ in 0..200 {
        let f = phi(x);
        if f == 0.0 {
            return x;
        }
        if f < 0.0 {
            lo = x;
        } else {
            hi = x;
        }
        let d = a * s2_deriv(x);
        let mut next = x - f / d;
        if !(next > lo && next < hi) {
            next = 0.5 * (lo + hi);
        }
        if (next - x).abs() <= 2.0 * f64::EPSILON * x {
            return next;
        }
        x = next;
    }
    x
}

/// The closed form `1 + lambda + W0(-(1 + lambda) e^{-1-lambda})`.
pub fn xi_lambert(lambda: f64) -> Result<f64> {
    if lambda.is_nan() || lambda < 0.0 {
        bail!(Domain, "xi_lambert requires lambda >= 0, got {lambda}");
    }
    let a = 1.0 + lambda;
    let z = -a * (-a).exp();
    Ok(a + lambert_w0(z)?)
}

/// `rho(lambda) = e^{-xi(lambda)}`.
pub fn rho_of_lambda(lambda: f64) -> Result<f64> {
    Ok((-xi_of_lambda(lambda)?).exp())
}

/// The drift `F(x) = exp(-1 - x - W0(-(1 + x) e^{-1-x}))`, which equals
/// `rho(x)`.
pub fn f_drift(x: f64) -> Result<f64> {
    if x.is_nan() || x < 0.0 {
        bail!(Domain, "f_drift requires x >= 0, got {x}");
    }
    rho_of_lambda(x)
}

pub fn saddle_params(lambda: f64) -> Result<SaddleParams> {
    if lambda.is_nan() || lambda <= 0.0 || lambda.is_infinite() {
        bail!(Domain, "saddle_params requires finite lambda > 0, got {lambda}");
    }
    let xi = xi_of_lambda(lambda)?;
    Ok(saddle_params_from(lambda, xi))
}

pub(crate) fn saddle_params_from(lambda: f64, xi: f64) -> SaddleParams {
    let a = 1.0 + lambda;
    let rho = (-xi).exp();
    let one_m_rho = -(-xi).exp_m1();
    let v = a * (xi - lambda) / 2.0;

    // g is the characteristic function of a zero-truncated Poisson(xi)
    // centred at its mean a; b = a - xi is the offset from the Poisson mean.
    let b = a - xi;
    let e3 = xi - 3.0 * b * xi - b * b * b;
    let e4 = b.powi(4) + 6.0 * xi * b * b - 4.0 * xi * b + xi + 3.0 * xi * xi;
    let tau = -(e3 + rho * a.powi(3)) / (6.0 * one_m_rho);
    let gamma = (e4 - rho * a.powi(4)) / (24.0 * one_m_rho);
    SaddleParams {
        lambda,
        xi,
        rho,
        v,
        tau,
        gamma,
        gamma_tilde: gamma - v * v / 2.0,
    }
}

/// Large-deviation rate J(xi), in the stable form
/// `(1 - e^{-xi}) J = (xi - 1 + e^{-xi}) ln(1 - e^{-xi}) + xi e^{-xi}`.
pub fn rate_j(xi: f64) -> Result<f64> {
    if xi.is_nan() || xi <= 0.0 {
        bail!(Domain, "rate_j requires xi > 0, got {xi}");
    }
    if xi.is_infinite() {
        return Ok(0.0);
    }
    let q = (-xi).exp();
    let one_m_q = -(-xi).exp_m1();
    let ln_one_m_q = if xi > 1.0 { (-q).ln_1p() } else { one_m_q.ln() };
    let head = xi * xi * s2(xi);
    Ok((head * ln_one_m_q + xi * q) / one_m_q)
}

/// J(xi) exactly as displayed, without the stabilising rewrite. Kept for
/// cross-checking `rate_j`.
pub fn rate_j_direct(xi: f64) -> Result<f64> {
    if xi.is_nan() || xi <= 0.0 {
        bail!(Domain, "rate_j_direct requires xi > 0, got {xi}");
    }
    let l = xi.exp_m1().ln();
    Ok(xi / (-(-xi).exp_m1()) * (1.0 - xi + l) - l)
}

/// `h(x) = 2 x^2 / ((2 + x)(e^x - 1)) / pi^2`.
pub fn tail_h(x: f64) -> Result<f64> {
    if x.is_nan() || x <= 0.0 {
        bail!(Domain, "tail_h requires x > 0, got {x}");
    }
    if x > 700.0 {
        return Ok(0.0);
    }
    Ok(2.0 * x * x / ((2.0 + x) * x.exp_m1()) / (PI * PI))
}

fn check_g_args(lambda: f64, theta: f64) -> Result<()> {
    if lambda.is_nan() || lambda <= 0.0 || lambda.is_infinite() {
        bail!(Domain, "g requires finite lambda > 0, got {lambda}");
    }
    if theta.is_nan() || theta.abs() > PI {
        bail!(Domain, "g requires |theta| <= pi, got {theta}");
    }
    Ok(())
}

/// `g(theta) = e^{-i(1+lambda)theta} (Phi(theta) - e^{-xi}) / (1 - e^{-xi})`
/// with `Phi(theta) = exp(xi (e^{i theta} - 1))`.
pub fn g_theta(lambda: f64, theta: f64) -> Result<Complex64> {
    check_g_args(lambda, theta)?;
    let xi = xi_of_lambda(lambda)?;
    Ok(g_with_xi(lambda, xi, theta))
}

/// g evaluated with a precomputed xi; `theta` is not range checked.
pub fn g_with_xi(lambda: f64, xi: f64, theta: f64) -> Complex64 {
    let (s, c) = theta.sin_cos();
    let x = xi * c;
    let y = xi * s;
    // expm1 of x + iy, without cancellation for small |x + iy|.
    let half = (y / 2.0).sin();
    let em1 = Complex64::new(x.exp_m1() * y.cos() - 2.0 * half * half, x.exp() * y.sin());
    let rho = (-xi).exp();
    let one_m_rho = -(-xi).exp_m1();
    let phase = Complex64::from_polar(1.0, -(1.0 + lambda) * theta);
    phase * em1 * (rho / one_m_rho)
}

/// Fourth-order Taylor polynomial of g at 0.
pub fn g_taylor(p: &SaddleParams, theta: f64) -> Complex64 {
    let t2 = theta * theta;
    Complex64::new(1.0 - p.v * t2 + p.gamma * t2 * t2, p.tau * t2 * theta)
}

/// Constant in the remainder bound `|g - taylor| <= T |theta|^5`, valid for
/// `|theta| <= 0.1`.
pub fn taylor_remainder_constant(lambda: f64) -> f64 {
    46.0 * (1.0 + lambda).powi(6) / (120.0 * lambda)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::Error;
    use proptest::prelude::*;

    fn bisect(f: impl Fn(f64) -> f64, mut lo: f64, mut hi: f64) -> f64 {
        let flo = f(lo);
        for _ in 0..200 {
            let mid = 0.5 * (lo + hi);
            if (f(mid) < 0.0) == (flo < 0.0) {
                lo = mid;
            } else {
                hi = mid;
            }
        }
        0.5 * (lo + hi)
    }

    fn xi_oracle(lambda: f64) -> f64 {
        let a = 1.0 + lambda;
        bisect(|x| x - a * (1.0 - (-x).exp()), lambda, (2.0 * lambda).min(a))
    }

    // Values below were computed once with mpmath at 50 digits.
    const XI_1: f64 = 1.593_624_260_040_040_1;
    const RHO_1: f64 = 0.203_187_869_979_979_95;

    #[test]
    fn w0_trivial_points() {
        assert_eq!(lambert_w0(0.0).unwrap(), 0.0);
        assert!((lambert_w0(E).unwrap() - 1.0).abs() < 1e-15);
        assert!((lambert_w0(-INV_E).unwrap() + 1.0).abs() < 1e-7);
        assert_eq!(lambert_w0(-INV_E - 5e-16).unwrap(), -1.0);
        assert!(matches!(lambert_w0(-0.4), Err(Error::Domain(_))));
        assert!(lambert_w0(f64::NAN).is_err());
    }

    #[test]
    fn w0_residual_across_range() {
        let mut z = -INV_E + 1e-12;
        while z < 1e300 {
            let w = lambert_w0(z).unwrap();
            assert!(w >= -1.0);
            let back = w * w.exp();
            let rel = (back - z).abs() / z.abs();
            // Near the branch point z is only resolvable to a few ulps of 1/e.
            let tol = if z < -0.3 { 1e-13 / z.abs() * 4.0 } else { 1e-13 };
            assert!(rel < tol, "z={z} w={w} rel={rel}");
            z = if z < 0.0 { z * 0.7 + 1e-3 } else { z * 3.0 + 1e-3 };
        }
    }

    #[test]
    fn xi_matches_bisection() {
        assert!((xi_of_lambda(1.0).unwrap() - XI_1).abs() < 1e-15);
        assert!((xi_oracle(1.0) - XI_1).abs() < 1e-15);
        // mpmath at 40 digits; the naive bisection oracle cancels here.
        for &(l, x) in &[(1e-6, 1.999_999_333_333_777_8e-6), (0.01, 0.019_933_774_543_987_674)] {
            assert!((xi_of_lambda(l).unwrap() - x).abs() <= 1e-15 * x);
        }
        for &l in &[0.1, 0.1, 0.5, 1.0, 2.0, 5.0, 10.0, 20.0, 50.0] {
            let xi = xi_of_lambda(l).unwrap();
            let o = xi_oracle(l);
            assert!((xi - o).abs() <= 1e-13 * o, "lambda={l} {xi} vs {o}");
        }
    }

    #[test]
    fn xi_edge_cases() {
        assert_eq!(xi_of_lambda(0.0).unwrap(), 0.0);
        assert!(xi_of_lambda(-1e-9).is_err());
        let xi20 = xi_of_lambda(20.0).unwrap();
        assert!((xi20 - 21.0).abs() < 21.0 * (-20f64).exp() * 2.0);
        // tiny lambda: xi ~ 2 lambda / (1 + lambda) to leading order
        let l = 1e-10;
        assert!((xi_of_lambda(l).unwrap() / (2.0 * l) - 1.0).abs() < 1e-9);
    }

    #[test]
    fn lambert_and_newton_agree() {
        let mut l = 0.2;
        while l < 60.0 {
            let a = xi_of_lambda(l).unwrap();
            let b = xi_lambert(l).unwrap();
            assert!((a - b).abs() < 1e-11, "{l}");
            l *= 1.13;
        }
    }

    #[test]
    fn f_drift_values() {
        assert_eq!(f_drift(0.0).unwrap(), 1.0);
        assert!((f_drift(1.0).unwrap() - RHO_1).abs() < 1e-15);
        assert!((f_drift(1.0).unwrap() - (-xi_oracle(1.0)).exp()).abs() < 1e-14);
        for i in 1..=100 {
            let x = i as f64 / 10.0;
            let f = f_drift(x).unwrap();
            assert!((f - (-xi_of_lambda(x).unwrap()).exp()).abs() < 1e-12);
            assert!(f < 1.0 / (1.0 + x));
            assert!(f < f_drift(x - 0.05).unwrap());
        }
        assert!(f_drift(-0.5).is_err());
    }

    #[test]
    fn saddle_params_at_one() {
        let p = saddle_params(1.0).unwrap();
        let v_oracle = (xi_oracle(1.0) - 1.0) * 2.0 / 2.0;
        assert!((p.v - v_oracle).abs() < 1e-14);
        assert!(1.0 <= 2.0 * p.v && 2.0 * p.v <= 2.0);
        assert_eq!(p.gamma_tilde, p.gamma - p.v * p.v / 2.0);
        // g'''(0) = 6 i tau and g''''(0) = 24 gamma, from mpmath
        // differentiation of g at lambda = 1.
        assert!((6.0 * p.tau + 1.517_531_004_136_090_1).abs() < 1e-12, "{}", p.tau);
        assert!((24.0 * p.gamma - 6.246_644_868_250_847).abs() < 1e-12, "{}", p.gamma);
        assert!(saddle_params(0.0).is_err());
    }

    #[test]
    fn rate_j_values() {
        // mpmath, 60 digits, same closed form.
        assert!((rate_j(XI_1).unwrap() - 0.179_239_390_551_036_13).abs() < 1e-15);
        assert!((rate_j(1.59362).unwrap() - 0.179_240_111_420_956_15).abs() < 1e-15);
        assert!((rate_j(30.0).unwrap() - 9.357_622_968_827e-14).abs() < 1e-24);
        assert!(rate_j(30.0).unwrap() < 30.0 * (-30f64).exp() * 2.0);
        let (j1, j2, j4) = (rate_j(1.0).unwrap(), rate_j(2.0).unwrap(), rate_j(4.0).unwrap());
        assert!(j1 > j2 && j2 > j4);
        assert!(rate_j(0.0).is_err());
    }

    #[test]
    fn rate_j_two_forms() {
        let mut x = 0.05;
        while x <= 30.0 {
            let a = rate_j(x).unwrap();
            let b = rate_j_direct(x).unwrap();
            assert!((a - b).abs() < 1e-10, "{x}: {a} {b}");
            x += 0.01;
        }
    }

    #[test]
    fn tail_h_values() {
        let expect = 2.0 / (3.0 * (E - 1.0)) / (PI * PI);
        assert!((tail_h(1.0).unwrap() - expect).abs() < 1e-16);
        assert!((tail_h(1.0).unwrap() - 0.039_311_045_861_513_334).abs() < 1e-16);
        assert!(tail_h(1e-6).unwrap() < 2e-7);
        for i in 1..=100 {
            assert!(tail_h(i as f64 / 10.0).unwrap() > 0.0);
        }
        assert!(tail_h(0.0).is_err());
    }

    #[test]
    fn g_basic() {
        let g0 = g_theta(1.0, 0.0).unwrap();
        assert!((g0 - Complex64::new(1.0, 0.0)).norm() < 1e-15);
        assert!(g_theta(1.0, 4.0).is_err());
        let h = tail_h(XI_1).unwrap();
        for i in 0..1000 {
            let th = -PI + 2.0 * PI * i as f64 / 999.0;
            let g = g_theta(1.0, th).unwrap();
            assert!(g.norm() <= 1.0 + 1e-15);
            assert!(g.norm() <= (-h * th * th).exp() + 1e-12);
        }
    }

    /// Derivative of order `k` at 0 by central differences with a
    /// Neville/Richardson tableau in h^2.
    fn fd_derivative(f: impl Fn(f64) -> Complex64, k: usize) -> Complex64 {
        let stencil = |h: f64| -> Complex64 {
            match k {
                2 => (f(h) - f(0.0) * 2.0 + f(-h)) / (h * h),
                3 => (f(2.0 * h) - f(h) * 2.0 + f(-h) * 2.0 - f(-2.0 * h)) / (2.0 * h.powi(3)),
                4 => {
                    (f(2.0 * h) - f(h) * 4.0 + f(0.0) * 6.0 - f(-h) * 4.0 + f(-2.0 * h))
                        / h.powi(4)
                }
                _ => unreachable!(),
            }
        };
        let mut tab: Vec<Vec<Complex64>> = Vec::new();
        let mut h = 0.1;
        for i in 0..5 {
            let mut row = vec![stencil(h)];
            for j in 1..=i {
                let p = 4f64.powi(j as i32);
                let v = (row[j - 1] * p - tab[i - 1][j - 1]) / (p - 1.0);
                row.push(v);
            }
            tab.push(row);
            h /= 2.0;
        }
        tab[4][4]
    }

    #[test]
    fn finite_differences_reproduce_coefficients() {
        for &l in &[0.5, 1.0, 2.0] {
            let p = saddle_params(l).unwrap();
            let f = |t: f64| g_with_xi(l, p.xi, t);
            let d2 = fd_derivative(f, 2);
            let d3 = fd_derivative(f, 3);
            let d4 = fd_derivative(f, 4);
            assert!((d2.re + 2.0 * p.v).abs() < 1e-5 * 2.0 * p.v && d2.im.abs() < 1e-5);
            assert!((d3.im - 6.0 * p.tau).abs() < 1e-5 * (6.0 * p.tau).abs() && d3.re.abs() < 1e-5);
            assert!((d4.re - 24.0 * p.gamma).abs() < 1e-5 * (24.0 * p.gamma).abs());
        }
    }

    #[test]
    fn coefficient_bounds_on_grid() {
        let mut l = 0.01;
        while l < 20.0 {
            let p = saddle_params(l).unwrap();
            let a = 1.0 + l;
            assert!(p.tau.abs() <= a.powi(3));
            assert!(p.gamma.abs() <= 7.0 / 24.0 * a.powi(4));
            assert!(p.gamma_tilde.abs() <= 13.0 / 24.0 * a.powi(4));
            assert!(l <= 2.0 * p.v && 2.0 * p.v <= a);
            l *= 1.1;
        }
    }

    proptest! {
        #[test]
        fn xi_bracket(l in 1e-6f64..20.0) {
            let xi = xi_of_lambda(l).unwrap();
            prop_assert!(l <= xi && xi <= (2.0 * l).min(1.0 + l));
            let resid = (xi - (1.0 + l) * (1.0 - (-xi).exp())).abs();
            prop_assert!(resid <= 1e-12 * (1.0 + xi));
            let rho = (-xi).exp();
            prop_assert!(rho < 1.0 / (1.0 + l));
            prop_assert!(((1.0 + l) * rho - (1.0 + l - xi)).abs() < 1e-11);
        }

        #[test]
        fn xi_monotone_and_concave(l in 1e-3f64..19.0, d in 1e-3f64..1.0) {
            let x0 = xi_of_lambda(l).unwrap();
            let x1 = xi_of_lambda(l + d).unwrap();
            let x2 = xi_of_lambda(l + 2.0 * d).unwrap();
            prop_assert!(x0 < x1);
            prop_assert!(x0 - l < x1 - (l + d));
            prop_assert!(x2 - 2.0 * x1 + x0 <= 1e-13);
        }

        #[test]
        fn taylor_remainder(l in 0.05f64..10.0, th in -0.1f64..0.1) {
            let p = saddle_params(l).unwrap();
            let g = g_with_xi(l, p.xi, th);
            let err = (g - g_taylor(&p, th)).norm();
            prop_assert!(err <= taylor_remainder_constant(l) * th.abs().powi(5) + 1e-14);
        }

        #[test]
        fn g_modulus(l in 0.05f64..10.0, th in -PI..PI) {
            let g = g_theta(l, th).unwrap();
            prop_assert!(g.norm() <= 1.0 + 1e-14);
            let gm = g_theta(l, -th).unwrap();
            prop_assert!((gm - g.conj()).norm() < 1e-14);
        }

        #[test]
        fn rate_j_decreasing(a in 0.05f64..29.0, d in 1e-3f64..1.0) {
            prop_assert!(rate_j(a).unwrap() > rate_j(a + d).unwrap());
            prop_assert!(rate_j(a).unwrap() > 0.0);
        }
    }
}
