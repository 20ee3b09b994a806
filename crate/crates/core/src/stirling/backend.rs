use serde::{Deserialize, Serialize};

use super::exact::{self, ratio_to_f64, sweep_diagonals};
use super::logdp::{ratio_r_log, sweep_log_diagonals};
use crate::error::{bail, Result};
use crate::specialfn::rho_of_lambda;

pub const DEFAULT_SADDLE_DELTA: f64 = 0.1;
pub const EXACT_AUTO_MAX_N: u64 = 300;
pub const LOGDP_AUTO_MAX_N: u64 = 5000;
pub const DEFAULT_TABLE_CAP_BYTES: usize = 1 << 30;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum BackendKind {
    Exact,
    #[serde(rename = "logdp")]
    LogDp,
    Saddle,
}

/// How Stirling ratios are evaluated.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum StirlingBackend {
    /// Big-integer arithmetic, refusing `m` above `m_cap`.
    Exact { m_cap: u64 },
    LogDp,
    /// `r(m, l) ~ rho(lambda)`, only for `lambda` in `[delta, 1/delta]`.
    Saddle { delta: f64 },
}

impl StirlingBackend {
    pub fn exact() -> Self {
        StirlingBackend::Exact { m_cap: exact::DEFAULT_M_CAP }
    }

    pub fn saddle() -> Self {
        StirlingBackend::Saddle { delta: DEFAULT_SADDLE_DELTA }
    }

    pub fn from_kind(kind: BackendKind) -> Self {
        match kind {
            BackendKind::Exact => Self::exact(),
            BackendKind::LogDp => StirlingBackend::LogDp,
            BackendKind::Saddle => Self::saddle(),
        }
    }

    pub fn kind(&self) -> BackendKind {
        match self {
            StirlingBackend::Exact { .. } => BackendKind::Exact,
            StirlingBackend::LogDp => BackendKind::LogDp,
            StirlingBackend::Saddle { .. } => BackendKind::Saddle,
        }
    }

    /// Exact up to `n = 300`, log-space up to `n = 5000`. The saddle
    /// backend is never chosen.
    pub fn auto(n: u64) -> Result<Self> {
        if n <= EXACT_AUTO_MAX_N {
            Ok(Self::exact())
        } else if n <= LOGDP_AUTO_MAX_N {
            Ok(StirlingBackend::LogDp)
        } else {
            bail!(Resource, "no backend handles n={n} (limit {LOGDP_AUTO_MAX_N})")
        }
    }

    pub(crate) fn check_window(&self, lambda: f64) -> Result<()> {
        if let StirlingBackend::Saddle { delta } = *self {
            if !(lambda >= delta && lambda <= 1.0 / delta) {
                bail!(
                    BackendWindow,
                    "saddle backend valid for lambda in [{delta}, {}], got {lambda}",
                    1.0 / delta
                );
            }
        }
        Ok(())
    }
}

/// `r(m, l) = S(m-1, l-1) / S(m, l)`.
pub fn ratio_r(m: u64, l: u64, backend: &StirlingBackend) -> Result<f64> {
    if l == 0 || l > m {
        bail!(Argument, "need 1 <= l <= m, got m={m}, l={l}");
    }
    match *backend {
        StirlingBackend::Exact { m_cap } => {
            let (s, diag, _) = exact::stirling_triple(m, l, m_cap)?;
            Ok(ratio_to_f64(&diag, &s))
        }
        StirlingBackend::LogDp => ratio_r_log(m, l),
        StirlingBackend::Saddle { .. } => {
            let lambda = (m - l) as f64 / l as f64;
            backend.check_window(lambda)?;
            rho_of_lambda(lambda)
        }
    }
}

/// `r(m, l)` on a window `l_lo <= l <= n`, `d_lo <= m - l <= N - n` of the
/// strip the reversed chain can visit from `(N, n)`. The full strip has
/// `l_lo = 1`, `d_lo = 0`.
#[derive(Debug, Clone)]
pub struct TransitionTable {
    big_n: u64,
    n: u64,
    d_lo: u64,
    l_lo: u64,
    kind: BackendKind,
    r: Vec<f64>,
}

impl TransitionTable {
    pub fn build(big_n: u64, n: u64, backend: &StirlingBackend) -> Result<Self> {
        Self::build_window(big_n, n, 0, 1, backend, DEFAULT_TABLE_CAP_BYTES)
    }

    pub fn build_capped(big_n: u64, n: u64, backend: &StirlingBackend, max_bytes: usize) -> Result<Self> {
        Self::build_window(big_n, n, 0, 1, backend, max_bytes)
    }

    pub fn build_window(
        big_n: u64,
        n: u64,
        d_lo: u64,
        l_lo: u64,
        backend: &StirlingBackend,
        max_bytes: usize,
    ) -> Result<Self> {
        if n == 0 || n > big_n {
            bail!(Argument, "need 1 <= n <= N, got N={big_n}, n={n}");
        }
        let depth = big_n - n;
        if d_lo > depth || l_lo == 0 || l_lo > n {
            bail!(Argument, "window d >= {d_lo}, l >= {l_lo} misses the strip of ({big_n}, {n})");
        }
        let width = (n - l_lo + 1) as usize;
        let rows = depth - d_lo + 1;
        let cells = rows.saturating_mul(width as u64);
        if cells.saturating_mul(8) > max_bytes as u64 {
            bail!(Resource, "transition table for N={big_n}, n={n} needs {} bytes", cells * 8);
        }
        let mut r = vec![0.0; cells as usize];
        let l0 = l_lo as usize;
        match *backend {
            StirlingBackend::Exact { m_cap } => {
                exact::check_args(big_n, n, m_cap)?;
                sweep_diagonals(n as usize, depth, |d, row| {
                    if d < d_lo {
                        return;
                    }
                    let base = (d - d_lo) as usize * width;
                    for l in l0..=n as usize {
                        r[base + l - l0] = ratio_to_f64(&row[l - 1], &row[l]);
                    }
                });
            }
            StirlingBackend::LogDp => {
                sweep_log_diagonals(n as usize, depth, |d, _, rd| {
                    if d < d_lo {
                        return;
                    }
                    let base = (d - d_lo) as usize * width;
                    r[base..base + width].copy_from_slice(&rd[l0..]);
                });
            }
            StirlingBackend::Saddle { .. } => {
                for d in [d_lo, depth] {
                    for l in [l_lo, n] {
                        backend.check_window(d as f64 / l as f64)?;
                    }
                }
                for d in d_lo..=depth {
                    for l in l_lo..=n {
                        let idx = (d - d_lo) as usize * width + (l - l_lo) as usize;
                        r[idx] = rho_of_lambda(d as f64 / l as f64)?;
                    }
                }
            }
        }
        Ok(TransitionTable { big_n, n, d_lo, l_lo, kind: backend.kind(), r })
    }

    pub fn dims(&self) -> (u64, u64) {
        (self.big_n, self.n)
    }

    pub fn kind(&self) -> BackendKind {
        self.kind
    }

    pub fn covers(&self, m: u64, l: u64) -> bool {
        l >= self.l_lo && l <= self.n && m >= l && m - l >= self.d_lo && m - l <= self.big_n - self.n
    }

    /// `r(m, l)` for a state inside the window.
    #[inline]
    pub fn get(&self, m: u64, l: u64) -> f64 {
        debug_assert!(self.covers(m, l), "({m}, {l}) outside table");
        let width = self.n - self.l_lo + 1;
        self.r[((m - l - self.d_lo) * width + l - self.l_lo) as usize]
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::Error;

    #[test]
    fn ratio_examples() {
        let ex = StirlingBackend::exact();
        assert_eq!(ratio_r(3, 2, &ex).unwrap(), 1.0 / 3.0);
        for m in 1..20 {
            assert_eq!(ratio_r(m, m, &ex).unwrap(), 1.0);
            assert_eq!(ratio_r(m, m, &StirlingBackend::LogDp).unwrap(), 1.0);
        }
        for m in 2..20 {
            assert_eq!(ratio_r(m, 1, &ex).unwrap(), 0.0);
        }
        assert!(matches!(ratio_r(3, 4, &ex), Err(Error::Argument(_))));
        assert!(matches!(ratio_r(3, 0, &ex), Err(Error::Argument(_))));
        assert!(matches!(
            ratio_r(6000, 10, &ex),
            Err(Error::Resource(_))
        ));
    }

    #[test]
    fn saddle_window() {
        let s = StirlingBackend::saddle();
        let r = ratio_r(200, 100, &s).unwrap();
        assert!((r - rho_of_lambda(1.0).unwrap()).abs() < 1e-15);
        assert!(matches!(ratio_r(100, 100, &s), Err(Error::BackendWindow(_))));
        assert!(matches!(ratio_r(2000, 100, &s), Err(Error::BackendWindow(_))));
        assert!(matches!(
            TransitionTable::build(20, 10, &s),
            Err(Error::BackendWindow(_))
        ));
    }

    #[test]
    fn auto_selection() {
        assert_eq!(StirlingBackend::auto(300).unwrap().kind(), BackendKind::Exact);
        assert_eq!(StirlingBackend::auto(301).unwrap().kind(), BackendKind::LogDp);
        assert_eq!(StirlingBackend::auto(5000).unwrap().kind(), BackendKind::LogDp);
        assert!(StirlingBackend::auto(5001).is_err());
    }

    #[test]
    fn tables_agree() {
        let e = TransitionTable::build(90, 40, &StirlingBackend::exact()).unwrap();
        let l = TransitionTable::build(90, 40, &StirlingBackend::LogDp).unwrap();
        let ex = StirlingBackend::exact();
        for m in 1..=90u64 {
            for ell in 1..=40u64.min(m) {
                if m - ell > 50 {
                    continue;
                }
                let a = e.get(m, ell);
                assert!((a - l.get(m, ell)).abs() <= 1e-9 * a.max(1e-300));
                if m % 7 == 0 {
                    assert_eq!(a, ratio_r(m, ell, &ex).unwrap());
                }
            }
        }
        assert!(matches!(
            TransitionTable::build_capped(100, 50, &StirlingBackend::LogDp, 100),
            Err(Error::Resource(_))
        ));
        let w = TransitionTable::build_window(90, 40, 45, 30, &StirlingBackend::exact(), 1 << 20)
            .unwrap();
        assert!(!w.covers(80, 29) && !w.covers(70, 40));
        for ell in 30..=40u64 {
            for d in 45..=50u64 {
                assert_eq!(w.get(ell + d, ell), e.get(ell + d, ell));
            }
        }
    }
}
