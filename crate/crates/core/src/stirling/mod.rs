//! Stirling numbers of the second kind: exact values, log-space values, the
//! transition ratio of the reversed collector chain and Good's saddle point
//! approximation with its error.

mod backend;
pub mod exact;
pub mod logdp;
mod saddle;

use num_bigint::BigUint;
use statrs::function::gamma::ln_gamma;

pub use backend::{
    ratio_r, BackendKind, StirlingBackend, TransitionTable, DEFAULT_SADDLE_DELTA,
    EXACT_AUTO_MAX_N, LOGDP_AUTO_MAX_N,
};
pub use exact::{big_ln, ExactTable, DEFAULT_M_CAP};
pub use saddle::{saddle_diagnostics, SaddleReport};

use crate::error::{bail, Result};
use crate::specialfn::{rho_of_lambda, saddle_params, xi_of_lambda};

/// `S(m, l)` with the default cap on `m`.
pub fn stirling_exact(m: u64, l: u64) -> Result<BigUint> {
    exact::stirling_exact_capped(m, l, DEFAULT_M_CAP)
}

/// `ln n!`.
pub fn ln_factorial(n: u64) -> f64 {
    if n < 2 {
        0.0
    } else {
        ln_gamma(n as f64 + 1.0)
    }
}

fn lambda_of(m: u64, l: u64) -> Result<f64> {
    if l < 1 || l >= m {
        bail!(Argument, "need 1 <= l < m, got m={m}, l={l}");
    }
    Ok((m - l) as f64 / l as f64)
}

/// The two displayed forms of `ln psi(m, l)`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PsiForms {
    /// `ln[(1/2pi)(m!/l!)((e^xi - 1)/xi^(1+lambda))^l sqrt(pi/(v l))]`
    pub a: f64,
    /// `ln[m! (e^xi - 1)^l / (l! xi^m sqrt(2 pi m (1 - (m/l) e^-xi)))]`
    pub b: f64,
}

pub fn psi_log_forms(m: u64, l: u64) -> Result<PsiForms> {
    let lambda = lambda_of(m, l)?;
    let p = saddle_params(lambda)?;
    let (mf, lf) = (m as f64, l as f64);
    let common = ln_factorial(m) - ln_factorial(l) + lf * p.xi.exp_m1().ln();
    let pi = std::f64::consts::PI;
    let a = common - lf * (1.0 + lambda) * p.xi.ln() - (2.0 * pi).ln()
        + 0.5 * (pi / (p.v * lf)).ln();
    let b = common - mf * p.xi.ln()
        - 0.5 * (2.0 * pi * mf * (1.0 - mf / lf * (-p.xi).exp())).ln();
    Ok(PsiForms { a, b })
}

/// `ln psi(m, l)`. Fails if the two forms disagree beyond `1e-9`.
pub fn psi_log(m: u64, l: u64) -> Result<f64> {
    let f = psi_log_forms(m, l)?;
    if (f.a - f.b).abs() > 1e-9 * f.a.abs().max(1.0) {
        bail!(InvariantViolation, "psi forms disagree at ({m}, {l}): {} vs {}", f.a, f.b);
    }
    Ok(f.a)
}

/// Relative error `(S - psi) / psi`, as `expm1(ln S - ln psi)`.
pub fn chi(m: u64, l: u64) -> Result<f64> {
    let psi = psi_log(m, l)?;
    let s = stirling_exact(m, l)?;
    Ok((big_ln(&s) - psi).exp_m1())
}

/// `|r(m, l) - rho(lambda(m, l))|` with exact `r`.
pub fn transition_error(m: u64, l: u64) -> Result<f64> {
    let lambda = lambda_of(m, l)?;
    let r = ratio_r(m, l, &StirlingBackend::exact())?;
    Ok((r - rho_of_lambda(lambda)?).abs())
}

/// Work budget `(N - n) * n` below which the exact path is used.
const EXACT_SURJECTION_WORK: u64 = 4_000_000;

/// `ln P(T_n <= N) = ln(n! S(N, n) / n^N)`.
pub fn surjection_log_probability(big_n: u64, n: u64) -> Result<f64> {
    if n < 1 || n > big_n {
        bail!(Argument, "need 1 <= n <= N, got N={big_n}, n={n}");
    }
    if n == 1 {
        return Ok(0.0);
    }
    if big_n <= DEFAULT_M_CAP && (big_n - n).saturating_mul(n) <= EXACT_SURJECTION_WORK {
        let s = stirling_exact(big_n, n)?;
        let mut fact = BigUint::from(1u32);
        for i in 2..=n {
            fact *= i;
        }
        let num = fact * s;
        let den = BigUint::from(n).pow(big_n as u32);
        return Ok(big_ln(&num) - big_ln(&den));
    }
    let s = logdp::stirling_ln(big_n, n)?;
    Ok(ln_factorial(n) + s - big_n as f64 * (n as f64).ln())
}

/// `-J(xi(nu))`, the limit of `(1/n) ln P(T_n <= (1 + nu) n)`.
pub fn ldp_limit(nu: f64) -> Result<f64> {
    if nu.is_nan() || nu <= 0.0 {
        bail!(Domain, "need nu > 0, got {nu}");
    }
    Ok(-crate::specialfn::rate_j(xi_of_lambda(nu)?)?)
}
