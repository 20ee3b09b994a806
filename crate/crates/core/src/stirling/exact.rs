//! Exact Stirling numbers of the second kind on big integers.

use std::io::{Read, Write};

use num_bigint::{BigInt, BigUint};
use num_rational::Ratio;
use num_traits::{ToPrimitive, Zero};

use crate::error::{bail, Error, Result};

pub const DEFAULT_M_CAP: u64 = 5000;
pub const DEFAULT_TABLE_BYTES: usize = 256 << 20;
const FORMAT_VERSION: u8 = 1;

pub(crate) fn check_args(m: u64, l: u64, cap: u64) -> Result<()> {
    if l > m {
        bail!(Argument, "need l <= m, got m={m}, l={l}");
    }
    if m > cap {
        bail!(Resource, "m={m} exceeds the exact-arithmetic cap {cap}");
    }
    Ok(())
}

/// Walks the diagonal `D_d[j] = S(j + d, j)` for `j <= width` from `d = 0` up
/// to `d_max`, handing each finished diagonal to `visit`.
///
/// `D_d[j] = j D_{d-1}[j] + D_d[j-1]`, with `D_0 = 1` and `D_d[0] = 0`
/// for `d >= 1`. This needs `(d_max + 1) * width` big-integer updates.
pub(crate) fn sweep_diagonals(width: usize, d_max: u64, mut visit: impl FnMut(u64, &[BigUint])) {
    let mut row = vec![BigUint::from(1u32); width + 1];
    visit(0, &row);
    for d in 1..=d_max {
        row[0].set_zero();
        for j in 1..=width {
            let (lo, hi) = row.split_at_mut(j);
            let cell = &mut hi[0];
            *cell *= j as u64;
            *cell += &lo[j - 1];
        }
        visit(d, &row);
    }
}

/// `S(m, l)` exactly, refusing `m` above `cap`.
pub fn stirling_exact_capped(m: u64, l: u64, cap: u64) -> Result<BigUint> {
    check_args(m, l, cap)?;
    let mut out = BigUint::zero();
    sweep_diagonals(l as usize, m - l, |d, row| {
        if d == m - l {
            out = row[l as usize].clone();
        }
    });
    Ok(out)
}

/// The values `S(m, l)`, `S(m - 1, l - 1)` and `S(m - 1, l)` from one sweep.
pub(crate) fn stirling_triple(m: u64, l: u64, cap: u64) -> Result<(BigUint, BigUint, BigUint)> {
    check_args(m, l, cap)?;
    if l == 0 {
        bail!(Argument, "need l >= 1");
    }
    let d_top = m - l;
    let mut prev_l = BigUint::zero();
    let mut out = (BigUint::zero(), BigUint::zero(), BigUint::zero());
    sweep_diagonals(l as usize, d_top, |d, row| {
        if d + 1 == d_top {
            prev_l = row[l as usize].clone();
        }
        if d == d_top {
            out = (row[l as usize].clone(), row[l as usize - 1].clone(), prev_l.clone());
        }
    });
    Ok(out)
}

/// Nearest double to `num / den`.
pub fn ratio_to_f64(num: &BigUint, den: &BigUint) -> f64 {
    if num.is_zero() {
        return 0.0;
    }
    Ratio::new_raw(BigInt::from(num.clone()), BigInt::from(den.clone()))
        .to_f64()
        .unwrap_or(f64::NAN)
}

/// Natural logarithm of a positive big integer.
pub fn big_ln(x: &BigUint) -> f64 {
    let bits = x.bits();
    if bits <= 1000 {
        return x.to_f64().unwrap_or(f64::INFINITY).ln();
    }
    let shift = bits - 64;
    let top = (x >> shift).to_f64().unwrap();
    top.ln() + shift as f64 * std::f64::consts::LN_2
}

/// Rows `m_lo..=m_hi` of the Stirling triangle, each row holding
/// `S(m, 0..=m)`.
#[derive(Debug, Clone, PartialEq)]
pub struct ExactTable {
    m_lo: u64,
    rows: Vec<Vec<BigUint>>,
}

impl ExactTable {
    pub fn build(m_hi: u64) -> Result<Self> {
        Self::build_range(0, m_hi, DEFAULT_TABLE_BYTES)
    }

    /// Builds the triangle up to `m_hi`, keeping rows from `m_lo`. Fails
    /// once the kept rows exceed `max_bytes` of limb storage.
    pub fn build_range(m_lo: u64, m_hi: u64, max_bytes: usize) -> Result<Self> {
        if m_lo > m_hi {
            bail!(Argument, "empty row range {m_lo}..={m_hi}");
        }
        let mut row = vec![BigUint::from(1u32)];
        let mut rows = Vec::new();
        let mut bytes = 0usize;
        for m in 0..=m_hi {
            if m > 0 {
                let mut next = Vec::with_capacity(m as usize + 1);
                next.push(BigUint::zero());
                for k in 1..=m as usize {
                    let mut v = if k < row.len() { &row[k] * k as u64 } else { BigUint::zero() };
                    v += &row[k - 1];
                    next.push(v);
                }
                row = next;
            }
            if m >= m_lo {
                bytes += row.iter().map(|v| (v.bits() as usize).div_ceil(8) + 24).sum::<usize>();
                if bytes > max_bytes {
                    bail!(Resource, "table rows up to m={m} need more than {max_bytes} bytes");
                }
                rows.push(row.clone());
            }
        }
        Ok(ExactTable { m_lo, rows })
    }

    pub fn m_range(&self) -> (u64, u64) {
        (self.m_lo, self.m_lo + self.rows.len() as u64 - 1)
    }

    pub fn get(&self, m: u64, l: u64) -> Option<&BigUint> {
        let i = m.checked_sub(self.m_lo)? as usize;
        self.rows.get(i)?.get(l as usize)
    }

    /// `r(m, l) = S(m-1, l-1) / S(m, l)` from cached rows.
    pub fn ratio_r(&self, m: u64, l: u64) -> Option<f64> {
        if l == 0 || l > m {
            return None;
        }
        Some(ratio_to_f64(self.get(m - 1, l - 1)?, self.get(m, l)?))
    }

    /// Re-checks `S(m, l) = l S(m-1, l) + S(m-1, l-1)` on every cached row
    /// that has its predecessor cached.
    pub fn verify_recurrence(&self) -> bool {
        self.rows.windows(2).all(|w| {
            let (prev, cur) = (&w[0], &w[1]);
            cur.iter().enumerate().all(|(l, s)| {
                let left = if l < prev.len() { &prev[l] * l as u64 } else { BigUint::zero() };
                let diag = if l >= 1 { prev[l - 1].clone() } else { BigUint::zero() };
                *s == left + diag
            })
        })
    }

    /// Writes the version byte, `m_lo` and `m_hi` as little-endian u32, then
    /// each row as an entry count followed by `(limb count, limbs)` pairs,
    /// all little-endian u32.
    pub fn write_to(&self, w: &mut impl Write) -> std::io::Result<()> {
        let (lo, hi) = self.m_range();
        w.write_all(&[FORMAT_VERSION])?;
        w.write_all(&(lo as u32).to_le_bytes())?;
        w.write_all(&(hi as u32).to_le_bytes())?;
        for row in &self.rows {
            w.write_all(&(row.len() as u32).to_le_bytes())?;
            for v in row {
                let limbs = v.to_u32_digits();
                w.write_all(&(limbs.len() as u32).to_le_bytes())?;
                for limb in limbs {
                    w.write_all(&limb.to_le_bytes())?;
                }
            }
        }
        Ok(())
    }

    pub fn read_from(r: &mut impl Read) -> Result<Self> {
        let io = |e: std::io::Error| Error::Shape(format!("truncated table: {e}"));
        let u32_at = |r: &mut dyn Read| -> Result<u32> {
            let mut b = [0u8; 4];
            r.read_exact(&mut b).map_err(io)?;
            Ok(u32::from_le_bytes(b))
        };
        let mut v = [0u8; 1];
        r.read_exact(&mut v).map_err(io)?;
        if v[0] != FORMAT_VERSION {
            bail!(Shape, "unsupported table version {}", v[0]);
        }
        let lo = u32_at(r)? as u64;
        let hi = u32_at(r)? as u64;
        if lo > hi {
            bail!(Shape, "bad row range {lo}..={hi}");
        }
        let mut rows = Vec::with_capacity((hi - lo + 1) as usize);
        for m in lo..=hi {
            let len = u32_at(r)? as u64;
            if len != m + 1 {
                bail!(Shape, "row {m} has {len} entries");
            }
            let mut row = Vec::with_capacity(len as usize);
            for _ in 0..len {
                let n = u32_at(r)?;
                let mut limbs = Vec::with_capacity(n as usize);
                for _ in 0..n {
                    limbs.push(u32_at(r)?);
                }
                row.push(BigUint::new(limbs));
            }
            rows.push(row);
        }
        Ok(ExactTable { m_lo: lo, rows })
    }
}
