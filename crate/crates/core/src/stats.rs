//! Small statistical helpers for the Monte-Carlo checks.

use statrs::distribution::{Beta, ChiSquared, ContinuousCDF};

use crate::error::{bail, Result};

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ChiSquareTest {
    pub statistic: f64,
    pub dof: usize,
    pub p_value: f64,
}

fn chi_sf(stat: f64, dof: usize) -> Result<f64> {
    if dof == 0 {
        return Ok(1.0);
    }
    let d = ChiSquared::new(dof as f64).map_err(|e| crate::Error::Argument(e.to_string()))?;
    Ok(d.sf(stat))
}

/// Goodness of fit of `observed` counts to `probs`. Cells with expected
/// count below 5 are pooled into one cell.
pub fn chi_square_gof(observed: &[u64], probs: &[f64]) -> Result<ChiSquareTest> {
    if observed.len() != probs.len() || observed.is_empty() {
        bail!(Shape, "observed and probs must be non-empty and equal length");
    }
    let total: u64 = observed.iter().sum();
    if total == 0 {
        bail!(Argument, "no observations");
    }
    let psum: f64 = probs.iter().sum();
    if (psum - 1.0).abs() > 1e-9 {
        bail!(Argument, "probabilities sum to {psum}");
    }
    let t = total as f64;
    let mut cells = Vec::new();
    let (mut pool_o, mut pool_e) = (0.0, 0.0);
    for (&o, &p) in observed.iter().zip(probs) {
        let e = p * t;
        if e < 5.0 {
            pool_o += o as f64;
            pool_e += e;
        } else {
            cells.push((o as f64, e));
        }
    }
    if pool_e > 0.0 {
        cells.push((pool_o, pool_e));
    } else if pool_o > 0.0 {
        return Ok(ChiSquareTest { statistic: f64::INFINITY, dof: cells.len(), p_value: 0.0 });
    }
    let statistic: f64 = cells.iter().map(|&(o, e)| (o - e) * (o - e) / e).sum();
    let dof = cells.len().saturating_sub(1);
    Ok(ChiSquareTest { statistic, dof, p_value: chi_sf(statistic, dof)? })
}

/// Two-sample homogeneity test on a 2 x k table; empty columns are dropped.
pub fn chi_square_two_sample(a: &[u64], b: &[u64]) -> Result<ChiSquareTest> {
    if a.len() != b.len() {
        bail!(Shape, "histograms differ in length");
    }
    let na: u64 = a.iter().sum();
    let nb: u64 = b.iter().sum();
    if na == 0 || nb == 0 {
        bail!(Argument, "empty sample");
    }
    let n = (na + nb) as f64;
    let mut statistic = 0.0;
    let mut cols = 0;
    for (&x, &y) in a.iter().zip(b) {
        let c = (x + y) as f64;
        if c == 0.0 {
            continue;
        }
        cols += 1;
        let ea = c * na as f64 / n;
        let eb = c * nb as f64 / n;
        statistic += (x as f64 - ea).powi(2) / ea + (y as f64 - eb).powi(2) / eb;
    }
    let dof = cols.max(1) - 1;
    Ok(ChiSquareTest { statistic, dof, p_value: chi_sf(statistic, dof)? })
}

/// Linear-interpolation quantile of sorted data (type 7).
pub fn quantile_sorted(sorted: &[f64], p: f64) -> f64 {
    if sorted.is_empty() {
        return f64::NAN;
    }
    let h = (sorted.len() - 1) as f64 * p.clamp(0.0, 1.0);
    let lo = h.floor() as usize;
    let hi = h.ceil() as usize;
    sorted[lo] + (h - lo as f64) * (sorted[hi] - sorted[lo])
}

/// Binomial proportion with its normal-approximation standard error.
pub fn proportion(successes: u64, trials: u64) -> (f64, f64) {
    let p = successes as f64 / trials as f64;
    (p, (p * (1.0 - p) / trials as f64).sqrt())
}

/// Exact (Clopper-Pearson) two-sided interval at level `1 - alpha`.
pub fn clopper_pearson(successes: u64, trials: u64, alpha: f64) -> Result<(f64, f64)> {
    if trials == 0 || successes > trials || !(alpha > 0.0 && alpha < 1.0) {
        bail!(Argument, "bad Clopper-Pearson arguments");
    }
    let (k, n) = (successes as f64, trials as f64);
    let err = |e: statrs::distribution::BetaError| crate::Error::Argument(e.to_string());
    let lo = if successes == 0 {
        0.0
    } else {
        Beta::new(k, n - k + 1.0).map_err(err)?.inverse_cdf(alpha / 2.0)
    };
    let hi = if successes == trials {
        1.0
    } else {
        Beta::new(k + 1.0, n - k).map_err(err)?.inverse_cdf(1.0 - alpha / 2.0)
    };
    Ok((lo, hi))
}

pub fn mean_and_stderr(xs: &[f64]) -> (f64, f64) {
    let n = xs.len() as f64;
    let mean = xs.iter().sum::<f64>() / n;
    let var = xs.iter().map(|x| (x - mean).powi(2)).sum::<f64>() / (n - 1.0);
    (mean, (var / n).sqrt())
}
