//! Adaptive Simpson integration and the φ-weight profiles it averages over.

use std::f64::consts::FRAC_PI_2;

use serde::Serialize;

use crate::error::{Error, Result};

/// Absolute tolerance for every φ-average.
pub const PHI_ABS_TOL: f64 = 1e-9;

/// Recursion limit for [`adaptive_simpson`].
pub const MAX_DEPTH: u32 = 48;

/// Intervals narrower than this are treated as a single point.
pub const DEGENERATE_WIDTH: f64 = 1e-12;

/// Relative weight `w(φ)` of incidence angles across Bob's first lens.
#[derive(Debug, Clone, PartialEq, Serialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum WeightProfile {
    /// Uniform in φ.
    Flat,
    /// `sin²φ`.
    SinSquared,
    /// All weight at one angle (radians).
    PointMass { phi: f64 },
    /// Piecewise-linear through `(φ [rad], w)` knots, zero outside them.
    Tabulated { knots: Vec<(f64, f64)> },
}

impl WeightProfile {
    /// A profile whose mean of `sin φ` is `cos φ₀` (a point mass at 90° − φ₀).
    pub fn matching_cos_phi0(phi0: f64) -> Result<Self> {
        let phi = FRAC_PI_2 - phi0;
        if phi < phi0 {
            return Err(Error::domain(
                "a point mass at 90° − φ₀ lies inside [φ₀, 180° − φ₀] only for φ₀ ≤ 45°",
            ));
        }
        Ok(WeightProfile::PointMass { phi })
    }

    pub fn tabulated(mut knots: Vec<(f64, f64)>) -> Result<Self> {
        if knots.len() < 2 {
            return Err(Error::domain("a tabulated weight needs at least two knots"));
        }
        knots.sort_by(|a, b| a.0.total_cmp(&b.0));
        for w in knots.windows(2) {
            if w[0].0 == w[1].0 {
                return Err(Error::domain("tabulated weight has duplicate angles"));
            }
        }
        if knots.iter().any(|&(p, w)| !p.is_finite() || !w.is_finite() || w < 0.0) {
            return Err(Error::domain("tabulated weights must be finite and non-negative"));
        }
        Ok(WeightProfile::Tabulated { knots })
    }

    pub fn name(&self) -> String {
        match self {
            WeightProfile::Flat => "flat".into(),
            WeightProfile::SinSquared => "sin2".into(),
            WeightProfile::PointMass { phi } => format!("point:{}", phi.to_degrees()),
            WeightProfile::Tabulated { .. } => "table".into(),
        }
    }

    /// Density value; a point mass has no density and returns `None`.
    pub fn density(&self, phi: f64) -> Option<f64> {
        match self {
            WeightProfile::Flat => Some(1.0),
            WeightProfile::SinSquared => Some(phi.sin().powi(2)),
            WeightProfile::PointMass { .. } => None,
            WeightProfile::Tabulated { knots } => {
                let first = knots[0];
                let last = knots[knots.len() - 1];
                if phi < first.0 || phi > last.0 {
                    return Some(0.0);
                }
                let i = knots.partition_point(|k| k.0 <= phi).clamp(1, knots.len() - 1);
                let (p0, w0) = knots[i - 1];
                let (p1, w1) = knots[i];
                Some(w0 + (w1 - w0) * (phi - p0) / (p1 - p0))
            }
        }
    }

    /// Points inside `(lo, hi)` where the density has a kink.
    pub fn breakpoints(&self, lo: f64, hi: f64) -> Vec<f64> {
        let mut cuts = vec![lo];
        if let WeightProfile::Tabulated { knots } = self {
            cuts.extend(knots.iter().map(|k| k.0).filter(|&p| p > lo && p < hi));
        }
        cuts.push(hi);
        cuts
    }
}

fn simpson_recurse<F: Fn(f64) -> f64>(
    f: &F,
    (a, fa): (f64, f64),
    (m, fm): (f64, f64),
    (b, fb): (f64, f64),
    whole: f64,
    tol: f64,
    depth: u32,
) -> Result<f64> {
    let lm = 0.5 * (a + m);
    let rm = 0.5 * (m + b);
    let flm = f(lm);
    let frm = f(rm);
    let left = (m - a) / 6.0 * (fa + 4.0 * flm + fm);
    let right = (b - m) / 6.0 * (fm + 4.0 * frm + fb);
    let delta = left + right - whole;
    if delta.abs() <= 15.0 * tol {
        return Ok(left + right + delta / 15.0);
    }
    if depth == 0 {
        return Err(Error::Convergence(format!(
            "adaptive Simpson did not reach {tol:e} on [{a}, {b}]"
        )));
    }
    Ok(
        simpson_recurse(f, (a, fa), (lm, flm), (m, fm), left, 0.5 * tol, depth - 1)?
            + simpson_recurse(f, (m, fm), (rm, frm), (b, fb), right, 0.5 * tol, depth - 1)?,
    )
}

/// `∫_a^b f` to absolute tolerance `tol`, starting from eight panels.
pub fn adaptive_simpson<F: Fn(f64) -> f64>(f: F, a: f64, b: f64, tol: f64) -> Result<f64> {
    const PANELS: usize = 8;
    if b == a {
        return Ok(0.0);
    }
    let h = (b - a) / PANELS as f64;
    let mut total = 0.0;
    let mut x0 = a;
    let mut f0 = f(a);
    for i in 1..=PANELS {
        let x1 = if i == PANELS { b } else { a + h * i as f64 };
        let f1 = f(x1);
        let xm = 0.5 * (x0 + x1);
        let fm = f(xm);
        let whole = (x1 - x0) / 6.0 * (f0 + 4.0 * fm + f1);
        total += simpson_recurse(
            &f,
            (x0, f0),
            (xm, fm),
            (x1, f1),
            whole,
            tol / PANELS as f64,
            MAX_DEPTH,
        )?;
        x0 = x1;
        f0 = f1;
    }
    Ok(total)
}

/// Weighted mean of `f` over `[lo, hi]` under `weight`, by adaptive Simpson.
pub fn simpson_average<F: Fn(f64) -> f64>(
    f: F,
    weight: &WeightProfile,
    lo: f64,
    hi: f64,
) -> Result<f64> {
    if let WeightProfile::PointMass { phi } = weight {
        if *phi < lo - DEGENERATE_WIDTH || *phi > hi + DEGENERATE_WIDTH {
            return Err(Error::domain(format!(
                "point mass at {} deg lies outside the averaging interval",
                phi.to_degrees()
            )));
        }
        return Ok(f(*phi));
    }
    if hi - lo < DEGENERATE_WIDTH {
        return Ok(f(0.5 * (lo + hi)));
    }
    let cuts = weight.breakpoints(lo, hi);
    let density = |p: f64| weight.density(p).unwrap_or(0.0);
    let mut num = 0.0;
    let mut den = 0.0;
    let pieces = (cuts.len() - 1) as f64;
    for w in cuts.windows(2) {
        num += adaptive_simpson(|p| f(p) * density(p), w[0], w[1], PHI_ABS_TOL / pieces)?;
        den += adaptive_simpson(density, w[0], w[1], PHI_ABS_TOL / pieces)?;
    }
    if den <= 0.0 {
        return Err(Error::domain("weight profile integrates to zero on the interval"));
    }
    Ok(num / den)
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::f64::consts::PI;

    #[test]
    fn integrates_polynomials_and_trig() {
        let v = adaptive_simpson(|x| x * x * x, 0.0, 2.0, 1e-12).unwrap();
        assert!((v - 4.0).abs() < 1e-12);
        let v = adaptive_simpson(f64::sin, 0.0, PI, 1e-12).unwrap();
        assert!((v - 2.0).abs() < 1e-11);
        assert_eq!(adaptive_simpson(f64::sin, 1.0, 1.0, 1e-9).unwrap(), 0.0);
    }

    #[test]
    fn flat_average_of_sin() {
        let phi0 = PI / 6.0;
        let v = simpson_average(f64::sin, &WeightProfile::Flat, phi0, PI - phi0).unwrap();
        let exact = 2.0 * phi0.cos() / (PI - 2.0 * phi0);
        assert!((v - exact).abs() < 1e-10);
        assert!((v - 0.82699).abs() < 1e-5);
    }

    #[test]
    fn sin_squared_average_of_sin() {
        // ∫ sin³ / ∫ sin² over [φ₀, π−φ₀]
        let phi0: f64 = 0.4;
        let c = phi0.cos();
        let s3 = 2.0 * (c - c.powi(3) / 3.0);
        let s2 = (PI - 2.0 * phi0) / 2.0 + (2.0 * phi0).sin() / 2.0;
        let v = simpson_average(f64::sin, &WeightProfile::SinSquared, phi0, PI - phi0).unwrap();
        assert!((v - s3 / s2).abs() < 1e-10);
    }

    #[test]
    fn constant_and_degenerate_cases() {
        let v = simpson_average(|_| 3.25, &WeightProfile::SinSquared, 0.3, 2.0).unwrap();
        assert!((v - 3.25).abs() < 1e-12);
        let v = simpson_average(f64::cos, &WeightProfile::Flat, 1.0, 1.0).unwrap();
        assert_eq!(v, 1f64.cos());
    }

    #[test]
    fn point_mass_matches_cos_phi0() {
        let phi0 = PI / 6.0;
        let w = WeightProfile::matching_cos_phi0(phi0).unwrap();
        let v = simpson_average(f64::sin, &w, phi0, PI - phi0).unwrap();
        assert!((v - phi0.cos()).abs() < 1e-15);
        assert!(WeightProfile::matching_cos_phi0(1.0).is_err());
        let far = WeightProfile::PointMass { phi: 0.01 };
        assert!(simpson_average(f64::sin, &far, phi0, PI - phi0).is_err());
    }

    #[test]
    fn tabulated_profile() {
        let w = WeightProfile::tabulated(vec![(1.0, 0.0), (0.5, 1.0), (2.0, 2.0)]).unwrap();
        assert_eq!(w.density(0.5), Some(1.0));
        assert_eq!(w.density(0.75), Some(0.5));
        assert_eq!(w.density(1.5), Some(1.0));
        assert_eq!(w.density(3.0), Some(0.0));
        assert_eq!(w.breakpoints(0.6, 1.9), vec![0.6, 1.0, 1.9]);
        // a triangle on [1, 2] rising 0..2: mean of x is 5/3
        let tri = WeightProfile::tabulated(vec![(1.0, 0.0), (2.0, 2.0)]).unwrap();
        let v = simpson_average(|x| x, &tri, 0.5, 2.5).unwrap();
        assert!((v - 5.0 / 3.0).abs() < 1e-10);

        assert!(WeightProfile::tabulated(vec![(1.0, 1.0)]).is_err());
        assert!(WeightProfile::tabulated(vec![(1.0, 1.0), (2.0, -1.0)]).is_err());
        let zero = WeightProfile::tabulated(vec![(0.0, 1.0), (0.1, 1.0)]).unwrap();
        assert!(matches!(
            simpson_average(f64::sin, &zero, 0.5, 2.5),
            Err(Error::Domain(_))
        ));
    }
}
