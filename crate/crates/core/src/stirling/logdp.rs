//! Stirling numbers in log space.

use crate::error::{bail, Result};

#[inline]
pub(crate) fn softplus(t: f64) -> f64 {
    t.max(0.0) + (-t.abs()).exp().ln_1p()
}

#[inline]
pub(crate) fn sigmoid_neg(t: f64) -> f64 {
    // 1 / (1 + e^t)
    if t >= 0.0 {
        let e = (-t).exp();
        e / (1.0 + e)
    } else {
        1.0 / (1.0 + t.exp())
    }
}

/// Same walk as the exact sweep, on `L_d[j] = ln S(j + d, j)`.
///
/// The update `L_d[j] = L_d[j-1] + softplus(t)` with
/// `t = ln j + L_{d-1}[j] - L_d[j-1]` also yields `r(j + d, j) = 1 / (1 + e^t)`
/// without a subtraction of logs. `visit` sees `(d, L_d, r_d)`.
pub(crate) fn sweep_log_diagonals(
    width: usize,
    d_max: u64,
    mut visit: impl FnMut(u64, &[f64], &[f64]),
) {
    let ln_j: Vec<f64> = (0..=width).map(|j| (j as f64).ln()).collect();
    let mut row = vec![0.0f64; width + 1];
    let mut r = vec![1.0f64; width + 1];
    r[0] = f64::NAN;
    visit(0, &row, &r);
    for d in 1..=d_max {
        row[0] = f64::NEG_INFINITY;
        for j in 1..=width {
            let below = row[j - 1];
            if below == f64::NEG_INFINITY {
                row[j] += ln_j[j];
                r[j] = 0.0;
            } else {
                let t = ln_j[j] + row[j] - below;
                row[j] = below + softplus(t);
                r[j] = sigmoid_neg(t);
            }
        }
        visit(d, &row, &r);
    }
}

/// `ln S(m, l)`; `-inf` where the number is zero.
pub fn stirling_ln(m: u64, l: u64) -> Result<f64> {
    if l > m {
        bail!(Argument, "need l <= m, got m={m}, l={l}");
    }
    let mut out = 0.0;
    sweep_log_diagonals(l as usize, m - l, |d, row, _| {
        if d == m - l {
            out = row[l as usize];
        }
    });
    Ok(out)
}

/// `r(m, l)` in log space.
pub fn ratio_r_log(m: u64, l: u64) -> Result<f64> {
    if l == 0 || l > m {
        bail!(Argument, "need 1 <= l <= m, got m={m}, l={l}");
    }
    let mut out = 0.0;
    sweep_log_diagonals(l as usize, m - l, |d, _, r| {
        if d == m - l {
            out = r[l as usize];
        }
    });
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::stirling::exact::{big_ln, stirling_exact_capped, stirling_triple, ratio_to_f64};

    #[test]
    fn small_values() {
        assert_eq!(stirling_ln(5, 5).unwrap(), 0.0);
        assert_eq!(stirling_ln(5, 1).unwrap(), 0.0);
        assert_eq!(stirling_ln(5, 0).unwrap(), f64::NEG_INFINITY);
        assert_eq!(stirling_ln(0, 0).unwrap(), 0.0);
        assert!((stirling_ln(7, 3).unwrap() - 301f64.ln()).abs() < 1e-14);
        assert_eq!(ratio_r_log(4, 1).unwrap(), 0.0);
        assert_eq!(ratio_r_log(4, 4).unwrap(), 1.0);
        assert!((ratio_r_log(3, 2).unwrap() - 1.0 / 3.0).abs() < 1e-16);
    }

    #[test]
    fn agrees_with_exact() {
        for &(m, l) in &[(1000u64, 500u64), (1000, 10), (1000, 990), (600, 200), (900, 899)] {
            let exact = big_ln(&stirling_exact_capped(m, l, 5000).unwrap());
            let lg = stirling_ln(m, l).unwrap();
            assert!((lg - exact).abs() <= 1e-9 * exact.abs().max(1.0), "{m} {l}: {lg} {exact}");
            let (s, diag, _) = stirling_triple(m, l, 5000).unwrap();
            let r = ratio_to_f64(&diag, &s);
            assert!((ratio_r_log(m, l).unwrap() - r).abs() <= 1e-9 * r, "{m} {l}");
        }
    }
}
