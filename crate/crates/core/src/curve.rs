//! Limiting completion curves. The patient collector fills up along
//! `1 - e^{-t}`; conditioned to finish by time `1 + nu` it follows the
//! solution of `y' = F((x - y) / y)`, `y(1 + nu) = 1`.

use std::io::Write;

use crate::error::{bail, Error, Result};
use crate::specialfn::f_drift;

pub const DEFAULT_STEP: f64 = 1e-3;
const ENVELOPE_SLACK: f64 = 1e-12;

pub fn patient_curve(t: f64) -> Result<f64> {
    if t.is_nan() || t < 0.0 {
        bail!(Domain, "patient_curve requires t >= 0, got {t}");
    }
    Ok(-(-t).exp_m1())
}

/// A solved completion curve, sampled from `x = 1 + nu` down to `x = a`.
#[derive(Debug, Clone, PartialEq)]
pub struct Curve {
    pub nu: f64,
    pub a: f64,
    pub step: f64,
    /// `(x, y)` with `x` strictly decreasing.
    pub points: Vec<(f64, f64)>,
    slopes: Vec<f64>,
    /// Largest change in `y` on the shared grid when the step is halved.
    pub richardson_deviation: f64,
}

fn slope(x: f64, y: f64) -> Result<f64> {
    f_drift((x - y) / y)
}

fn rk4(nu: f64, a: f64, step: f64) -> Result<Vec<(f64, f64)>> {
    let x0 = 1.0 + nu;
    let steps = ((x0 - a) / step).ceil() as usize;
    let mut pts = Vec::with_capacity(steps + 1);
    let (mut x, mut y) = (x0, 1.0);
    pts.push((x, y));
    for k in 1..=steps {
        let next_x = if k == steps { a } else { x0 - k as f64 * step };
        // integrate towards smaller x, so the step in x is negative
        let h = next_x - x;
        let k1 = slope(x, y)?;
        let k2 = slope(x + h / 2.0, y + h / 2.0 * k1)?;
        let k3 = slope(x + h / 2.0, y + h / 2.0 * k2)?;
        let k4 = slope(x + h, y + h * k3)?;
        y += h / 6.0 * (k1 + 2.0 * k2 + 2.0 * k3 + k4);
        x = next_x;
        if !(y > 0.0 && y < x) {
            bail!(InvariantViolation, "curve left 0 < y < x at x={x}, y={y}");
        }
        pts.push((x, y));
    }
    Ok(pts)
}

/// Lower and upper envelope of the curve through `(1 + nu, 1)` at `x`.
pub fn envelope(nu: f64, x: f64) -> (f64, f64) {
    let x0 = 1.0 + nu;
    let lo = x / (1.0 + x * (1.0 - 1.0 / x0));
    let hi = x * (1.0 - x / x0 * (1.0 - 1.0 / x0));
    (lo, hi)
}

/// Bracket for `lambda(x) = x / y(x) - 1` implied by the envelope.
pub fn lambda_bracket(nu: f64, x: f64) -> (f64, f64) {
    let x0 = 1.0 + nu;
    let c = 1.0 - 1.0 / x0;
    (-1.0 + 1.0 / (1.0 - x / x0 * c), x * c)
}

/// Solves the completion curve for `nu` on `[a, 1 + nu]` with fixed-step
/// RK4, integrating backwards from the anchor `(1 + nu, 1)`.
pub fn solve_completion_curve(nu: f64, a: f64, step: f64) -> Result<Curve> {
    if !(nu > 0.0 && nu.is_finite()) {
        bail!(Domain, "need nu > 0, got {nu}");
    }
    if !(a > 0.0 && a < 1.0 + nu) {
        bail!(Domain, "need 0 < a < 1 + nu = {}, got a={a}", 1.0 + nu);
    }
    if !(step > 0.0 && step <= 1.0 + nu - a) {
        bail!(Domain, "step must lie in (0, {}], got {step}", 1.0 + nu - a);
    }
    if (1.0 + nu - a) / step > 1e8 {
        bail!(Resource, "step {step} needs more than 1e8 steps");
    }
    let points = rk4(nu, a, step)?;
    let fine = rk4(nu, a, step / 2.0)?;
    let n = points.len();
    let mut dev: f64 = 0.0;
    for (k, p) in points.iter().enumerate() {
        let q = if k + 1 == n { fine[fine.len() - 1] } else { fine[2 * k] };
        debug_assert!((p.0 - q.0).abs() < 1e-12);
        dev = dev.max((p.1 - q.1).abs());
    }

    for &(x, y) in &points {
        let (lo, hi) = envelope(nu, x);
        if y < lo - ENVELOPE_SLACK || y > hi + ENVELOPE_SLACK {
            bail!(InvariantViolation, "y({x})={y} outside envelope [{lo}, {hi}]");
        }
    }
    let slopes = points.iter().map(|&(x, y)| slope(x, y)).collect::<Result<Vec<_>>>()?;
    if slopes.iter().any(|&s| !(s > 0.0 && s <= 1.0)) {
        bail!(InvariantViolation, "slope outside (0, 1]");
    }
    Ok(Curve { nu, a, step, points, slopes, richardson_deviation: dev })
}

impl Curve {
    pub fn contains(&self, x: f64) -> bool {
        x >= self.a - 1e-12 && x <= 1.0 + self.nu + 1e-12
    }

    /// `y(x)` by cubic Hermite interpolation between grid points.
    pub fn eval(&self, x: f64) -> Result<f64> {
        if !self.contains(x) {
            bail!(Domain, "x={x} outside [{}, {}]", self.a, 1.0 + self.nu);
        }
        let pts = &self.points;
        // points are sorted by decreasing x
        let i = pts.partition_point(|p| p.0 > x);
        if i == 0 {
            return Ok(pts[0].1);
        }
        if i >= pts.len() {
            return Ok(pts[pts.len() - 1].1);
        }
        let (x1, y1) = pts[i - 1];
        let (x0, y0) = pts[i];
        let h = x1 - x0;
        let t = (x - x0) / h;
        let (d0, d1) = (self.slopes[i], self.slopes[i - 1]);
        let t2 = t * t;
        let t3 = t2 * t;
        Ok((2.0 * t3 - 3.0 * t2 + 1.0) * y0
            + (t3 - 2.0 * t2 + t) * h * d0
            + (-2.0 * t3 + 3.0 * t2) * y1
            + (t3 - t2) * h * d1)
    }

    pub fn write_csv(&self, w: &mut impl Write) -> std::io::Result<()> {
        writeln!(w, "x,y,lambda")?;
        for &(x, y) in &self.points {
            writeln!(w, "{:.16e},{:.16e},{:.16e}", x, y, x / y - 1.0)?;
        }
        Ok(())
    }
}

/// `lambda(x) = x / y(x) - 1` along the curve.
pub fn lambda_along(curve: &Curve, x: f64) -> Result<f64> {
    if (x - (1.0 + curve.nu)).abs() <= 1e-15 {
        return Ok(curve.nu);
    }
    let y = curve.eval(x)?;
    Ok(x / y - 1.0)
}

/// Whether the curve for `nu = k - 1` clears the line `y = x / k` by `eps`
/// on `[2 k eps, k - 2 k^2 eps]`.
pub fn strip_clearance(k: u32, eps: f64) -> Result<bool> {
    if k < 2 {
        bail!(Argument, "need k >= 2, got {k}");
    }
    let kf = k as f64;
    let max_eps = 1.0 / (2.0 * (kf + 1.0));
    if !(eps > 0.0 && eps <= max_eps * (1.0 + 1e-12)) {
        return Err(Error::Domain(format!("need 0 < eps <= {max_eps}, got {eps}")));
    }
    let lo = 2.0 * kf * eps;
    let hi = (kf - 2.0 * kf * kf * eps).max(lo);
    let curve = solve_completion_curve(kf - 1.0, lo.min(kf - 1e-9), DEFAULT_STEP)?;
    const GRID: usize = 4000;
    for i in 0..=GRID {
        let x = lo + (hi - lo) * i as f64 / GRID as f64;
        if curve.eval(x)? - eps < x / kf {
            return Ok(false);
        }
    }
    Ok(true)
}
