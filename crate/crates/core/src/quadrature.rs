//! Globally adaptive Gauss-Kronrod (7/15) integration of complex-valued
//! functions on a finite interval.

use num_complex::Complex64;

use crate::error::{bail, Result};

const XGK: [f64; 8] = [
    0.991_455_371_120_812_639_206_854_697_526_329,
    0.949_107_912_342_758_524_526_189_684_047_851,
    0.864_864_423_359_769_072_789_712_788_640_926,
    0.741_531_185_599_394_439_863_864_773_280_788,
    0.586_087_235_467_691_130_294_144_845_693_013,
    0.405_845_151_377_397_166_906_606_412_076_961,
    0.207_784_955_007_898_467_600_689_403_773_245,
    0.0,
];
const WGK: [f64; 8] = [
    0.022_935_322_010_529_224_963_732_008_058_970,
    0.063_092_092_629_978_553_290_700_663_189_204,
    0.104_790_010_322_250_183_839_876_322_541_518,
    0.140_653_259_715_525_918_745_189_590_510_238,
    0.169_004_726_639_267_902_826_583_426_598_550,
    0.190_350_578_064_785_409_913_256_402_421_014,
    0.204_432_940_075_298_892_414_161_999_234_649,
    0.209_482_141_084_727_828_012_999_174_891_714,
];
const WG: [f64; 4] = [
    0.129_484_966_168_869_693_270_611_432_679_082,
    0.279_705_391_489_276_667_901_467_771_423_780,
    0.381_830_050_505_118_944_950_369_775_488_975,
    0.417_959_183_673_469_387_755_102_040_816_327,
];

#[derive(Debug, Clone, Copy)]
pub struct Tolerance {
    pub abs: f64,
    pub rel: f64,
    pub max_intervals: usize,
}

impl Default for Tolerance {
    fn default() -> Self {
        Tolerance { abs: 1e-14, rel: 1e-12, max_intervals: 4000 }
    }
}

#[derive(Debug, Clone, Copy)]
pub struct Integral {
    pub value: Complex64,
    pub error: f64,
    pub evaluations: usize,
}

struct Piece {
    a: f64,
    b: f64,
    value: Complex64,
    error: f64,
}

fn gk15(f: &impl Fn(f64) -> Complex64, a: f64, b: f64) -> Piece {
    let c = 0.5 * (a + b);
    let h = 0.5 * (b - a);
    let fc = f(c);
    let mut kron = fc * WGK[7];
    let mut gauss = fc * WG[3];
    for i in 0..7 {
        let x = h * XGK[i];
        let s = f(c - x) + f(c + x);
        kron += s * WGK[i];
        if i % 2 == 1 {
            gauss += s * WG[i / 2];
        }
    }
    let value = kron * h;
    let error = ((kron - gauss) * h).norm();
    Piece { a, b, value, error }
}

/// Integrates `f` over `[a, b]`, bisecting the piece with the largest error
/// estimate until the total estimate meets the tolerance.
pub fn integrate(f: impl Fn(f64) -> Complex64, a: f64, b: f64, tol: Tolerance) -> Result<Integral> {
    if !(a.is_finite() && b.is_finite()) {
        bail!(Domain, "integration limits must be finite, got [{a}, {b}]");
    }
    if a == b {
        return Ok(Integral { value: Complex64::new(0.0, 0.0), error: 0.0, evaluations: 0 });
    }
    let mut pieces = vec![gk15(&f, a, b)];
    let mut evaluations = 15;
    loop {
        let value: Complex64 = pieces.iter().map(|p| p.value).sum();
        let error: f64 = pieces.iter().map(|p| p.error).sum();
        if error <= tol.abs.max(tol.rel * value.norm()) {
            return Ok(Integral { value, error, evaluations });
        }
        if !error.is_finite() || !value.norm().is_finite() {
            bail!(Quadrature, "non-finite integrand on [{a}, {b}]");
        }
        if pieces.len() >= tol.max_intervals {
            bail!(
                Quadrature,
                "{} subintervals on [{a}, {b}], error estimate {error:e}",
                pieces.len()
            );
        }
        let worst = pieces
            .iter()
            .enumerate()
            .max_by(|x, y| x.1.error.total_cmp(&y.1.error))
            .map(|(i, _)| i)
            .unwrap();
        let p = pieces.swap_remove(worst);
        let mid = 0.5 * (p.a + p.b);
        if mid <= p.a || mid >= p.b {
            bail!(Quadrature, "interval collapsed near {mid}");
        }
        pieces.push(gk15(&f, p.a, mid));
        pieces.push(gk15(&f, mid, p.b));
        evaluations += 30;
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::f64::consts::PI;

    #[test]
    fn polynomial_exact() {
        let r = integrate(|x| Complex64::new(x.powi(5), 3.0 * x * x), -1.0, 2.0, Tolerance::default())
            .unwrap();
        assert!((r.value.re - (64.0 - 1.0) / 6.0).abs() < 1e-13);
        assert!((r.value.im - 9.0).abs() < 1e-13);
    }

    #[test]
    fn oscillatory_and_peaked() {
        let r = integrate(|x| Complex64::from_polar(1.0, 40.0 * x), 0.0, PI, Tolerance::default())
            .unwrap();
        // integral of e^{40ix} over [0, pi] is zero
        assert!(r.value.norm() < 1e-12);
        let r = integrate(|x| Complex64::new((-1e4 * x * x).exp(), 0.0), -1.0, 1.0, Tolerance::default())
            .unwrap();
        assert!((r.value.re - (PI / 1e4).sqrt()).abs() < 1e-13);
    }

    #[test]
    fn failure_reported() {
        let tol = Tolerance { abs: 0.0, rel: 0.0, max_intervals: 8 };
        let r = integrate(|x| Complex64::new(x.abs().sqrt(), 0.0), -1.0, 1.0, tol);
        assert!(matches!(r, Err(crate::Error::Quadrature(_))));
    }
}
