//! Numerical check of the saddle point representation
//! `S(m, l) = a_l * integral over [-pi, pi] of g(theta)^l`.

use std::f64::consts::PI;

use num_complex::Complex64;

use super::ln_factorial;
use crate::error::{bail, Result};
use crate::quadrature::{integrate, Tolerance};
use crate::specialfn::{g_with_xi, saddle_params, tail_h};

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SaddleReport {
    pub lambda: f64,
    pub l: u64,
    pub theta0: f64,
    /// Integral of `g^l` over `[-theta0, theta0]` (real by symmetry).
    pub central: f64,
    /// `sqrt(pi / (v l))`.
    pub central_gaussian: f64,
    pub central_rel_err: f64,
    /// Integral of `g^l` over `theta0 <= |theta| <= pi` (real by symmetry).
    pub tail: f64,
    /// Integral of `|g|^l` over the same set.
    pub tail_abs: f64,
    /// `2 pi l^(-h(xi) ln l)`.
    pub tail_bound: f64,
    /// `ln(a_l (central + tail))`, which is `ln S(m, l)` when
    /// `m = (1 + lambda) l` is an integer.
    pub ln_stirling: f64,
}

impl SaddleReport {
    pub fn central_ok(&self) -> bool {
        self.central_rel_err <= 10.0 / self.l as f64
    }

    pub fn tail_ok(&self) -> bool {
        self.tail.abs() <= self.tail_abs && self.tail_abs <= self.tail_bound
    }
}

pub fn saddle_diagnostics(lambda: f64, l: u64) -> Result<SaddleReport> {
    saddle_diagnostics_with(lambda, l, 1e-13)
}

/// As `saddle_diagnostics`, with the relative quadrature tolerance exposed.
pub fn saddle_diagnostics_with(lambda: f64, l: u64, rel_tol: f64) -> Result<SaddleReport> {
    if !(lambda > 0.0 && lambda.is_finite()) {
        bail!(Domain, "need lambda > 0, got {lambda}");
    }
    if l < 10 {
        bail!(Argument, "need l >= 10, got {l}");
    }
    let p = saddle_params(lambda)?;
    let lf = l as f64;
    let theta0 = lf.ln() / lf.sqrt();
    let li = l as i32;
    let g_pow = |t: f64| g_with_xi(lambda, p.xi, t).powi(li);

    let central_gaussian = (PI / (p.v * lf)).sqrt();
    let tol = Tolerance { abs: 1e-300, rel: rel_tol, max_intervals: 20_000 };
    let central = integrate(g_pow, -theta0, theta0, tol)?.value.re;
    let abs_floor = rel_tol * central.abs();
    let tail_tol = Tolerance { abs: abs_floor, rel: rel_tol, max_intervals: 20_000 };
    let tail = 2.0 * integrate(g_pow, theta0, PI, tail_tol)?.value.re;
    let tail_abs = 2.0
        * integrate(|t| Complex64::new(g_pow(t).norm(), 0.0), theta0, PI, tail_tol)?
            .value
            .re;

    let h = tail_h(p.xi)?;
    let tail_bound = 2.0 * PI * (-h * lf.ln() * lf.ln()).exp();
    let m = (1.0 + lambda) * lf;
    let ln_a = -(2.0 * PI).ln() + ln_gamma_real(m) - ln_factorial(l)
        + lf * (p.xi.exp_m1().ln() - (1.0 + lambda) * p.xi.ln());
    Ok(SaddleReport {
        lambda,
        l,
        theta0,
        central,
        central_gaussian,
        central_rel_err: (central / central_gaussian - 1.0).abs(),
        tail,
        tail_abs,
        tail_bound,
        ln_stirling: ln_a + (central + tail).ln(),
    })
}

fn ln_gamma_real(m: f64) -> f64 {
    if m.fract() == 0.0 {
        ln_factorial(m as u64)
    } else {
        statrs::function::gamma::ln_gamma(m + 1.0)
    }
}
