//! Layout of the two arms, path lengths, incidence angles and regime checks.
//!
//! Coordinates are `(z, y)` pairs in meters. Both arms start at the source
//! plane `z = 0` with emission points `p = (0, +a)` and `q = (0, -a)`, where
//! `a` is the source half-separation.
//!
//! Bob's arm: the filter's first lens sits at `z = g`, the pinhole at
//! `z = 2g`, the second lens at `z = 3g`, and the double slit at `z = d`.
//! Slit `u` is at `y = -s/2` and slit `v` at `y = +s/2`, so the screen
//! coordinate `x` grows toward `v` and `ūx − v̄x` is odd and increasing in `x`.
//!
//! Alice's arm: her lens sits at `z = 2f`, its focal plane at `z = 3f` and the
//! image plane (unit magnification, inverted) at `z = 4f`.

use std::f64::consts::{FRAC_PI_2, PI};

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::mode_space::SourcePoint;

/// Speed of light in vacuum, m/s.
pub const SPEED_OF_LIGHT: f64 = 299_792_458.0;

/// Ratio at or below which a "≪" condition passes.
pub const MUCH_LESS_PASS: f64 = 0.1;
/// Ratio above which a "≪" condition fails outright.
pub const MUCH_LESS_FAIL: f64 = 0.3;

/// Map from geometric incidence angle to the diffraction angle φ.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum PhiProfile {
    /// φ is the incidence angle itself.
    #[default]
    Identity,
}

impl PhiProfile {
    pub fn apply(self, incidence: f64) -> f64 {
        match self {
            PhiProfile::Identity => incidence,
        }
    }
}

/// Raw layout parameters in SI units (angles in radians).
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LayoutSpec {
    /// Alice's lens focal length `f`.
    pub alice_focal_length: f64,
    /// Focal length `g` of the two filter lenses.
    pub filter_focal_length: f64,
    /// Radius `R` of the filter lenses.
    pub filter_lens_radius: f64,
    /// Pinhole diameter `h`.
    pub hole_diameter: f64,
    /// Slit separation `s`.
    pub slit_separation: f64,
    /// Source to double slit along Bob's arm, `d`.
    pub interferometer_distance: f64,
    /// Double slit to screen, `D`.
    pub screen_distance: f64,
    pub lambda_pump: f64,
    pub lambda_dc: f64,
    /// Half the transverse p–q separation, `a`.
    pub source_half_separation: f64,
    /// Minimum incidence angle φ₀ in radians.
    pub phi0: f64,
    /// Screen half-width; `None` means ±5 central fringe periods.
    pub screen_half_width: Option<f64>,
    #[serde(default)]
    pub phi_profile: PhiProfile,
}

impl Default for LayoutSpec {
    fn default() -> Self {
        let lambda_pump = 351.1e-9;
        Self {
            alice_focal_length: 0.5,
            filter_focal_length: 0.1,
            filter_lens_radius: 0.2,
            hole_diameter: 1e-6,
            slit_separation: 1e-4,
            interferometer_distance: 1.0,
            screen_distance: 1.0,
            lambda_pump,
            lambda_dc: 2.0 * lambda_pump,
            source_half_separation: 1e-3,
            phi0: 30f64.to_radians(),
            screen_half_width: None,
            phi_profile: PhiProfile::Identity,
        }
    }
}

/// A named point of the layout.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct Point {
    pub z: f64,
    pub y: f64,
}

impl Point {
    pub fn new(z: f64, y: f64) -> Self {
        Self { z, y }
    }

    pub fn distance(self, other: Point) -> f64 {
        (self.z - other.z).hypot(self.y - other.y)
    }
}

/// Every named point of both arms.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct LayoutPoints {
    pub p: Point,
    pub q: Point,
    /// Where `s_p0` meets Alice's lens.
    pub r: Point,
    /// Where `s_q0` meets Alice's lens.
    pub t: Point,
    /// Alice's focal point for horizontal rays.
    pub m: Point,
    /// Image of `p` on Alice's image plane.
    pub y: Point,
    /// Image of `q`.
    pub y_q: Point,
    pub hole: Point,
    /// Second filter lens, feeding slit `v`.
    pub k: Point,
    /// Second filter lens, feeding slit `u`.
    pub l: Point,
    pub n: Point,
    pub mm: Point,
    pub u: Point,
    pub v: Point,
}

/// A validated layout with its derived quantities.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ExperimentLayout {
    spec: LayoutSpec,
    d_prime: f64,
    central_minimum: f64,
    screen_half_width: f64,
}

impl ExperimentLayout {
    pub fn new(spec: LayoutSpec) -> Result<Self> {
        let lengths = [
            ("alice_focal_length", spec.alice_focal_length),
            ("filter_focal_length", spec.filter_focal_length),
            ("filter_lens_radius", spec.filter_lens_radius),
            ("hole_diameter", spec.hole_diameter),
            ("slit_separation", spec.slit_separation),
            ("interferometer_distance", spec.interferometer_distance),
            ("screen_distance", spec.screen_distance),
            ("lambda_pump", spec.lambda_pump),
            ("lambda_dc", spec.lambda_dc),
            ("source_half_separation", spec.source_half_separation),
        ];
        for (name, v) in lengths {
            if !(v.is_finite() && v > 0.0) {
                return Err(Error::domain(format!("{name} must be positive, got {v}")));
            }
        }
        if !(spec.phi0 > 0.0 && spec.phi0 < FRAC_PI_2) {
            return Err(Error::domain(format!(
                "phi0 must lie strictly between 0 and 90 degrees, got {} rad",
                spec.phi0
            )));
        }
        if spec.interferometer_distance <= 3.0 * spec.filter_focal_length {
            return Err(Error::domain(
                "interferometer_distance must exceed three filter focal lengths",
            ));
        }
        if spec.slit_separation <= 0.5 * spec.lambda_dc {
            return Err(Error::domain(
                "slit_separation must exceed half the downconverted wavelength",
            ));
        }

        let s = spec.slit_separation;
        let g = spec.filter_focal_length;
        let z_lens2 = 3.0 * g;
        let z_mid = 0.5 * (z_lens2 + spec.interferometer_distance);
        let kn = Point::new(z_lens2, 0.5 * s).distance(Point::new(z_mid, 0.5 * s));
        let nv = Point::new(z_mid, 0.5 * s).distance(Point::new(spec.interferometer_distance, 0.5 * s));
        let d_prime = 2.0 * g + kn + nv;

        let central_minimum = central_minimum_offset(s, spec.screen_distance, spec.lambda_dc);
        let screen_half_width = match spec.screen_half_width {
            Some(w) if !(w.is_finite() && w >= central_minimum) => {
                return Err(Error::domain(format!(
                    "screen_half_width {w} m does not cover the central fringe (needs >= {central_minimum} m)"
                )))
            }
            Some(w) => w,
            None => 10.0 * central_minimum,
        };

        Ok(Self {
            spec,
            d_prime,
            central_minimum,
            screen_half_width,
        })
    }

    pub fn spec(&self) -> &LayoutSpec {
        &self.spec
    }

    pub fn wavenumber(&self) -> f64 {
        2.0 * PI / self.spec.lambda_dc
    }

    /// Common path `2g + KN + Nv` from the first filter lens to the slits.
    pub fn d_prime(&self) -> f64 {
        self.d_prime
    }

    /// The same path summed along the `L–M–u` branch.
    pub fn d_prime_via_u(&self) -> f64 {
        let pts = self.points();
        2.0 * self.spec.filter_focal_length + pts.l.distance(pts.mm) + pts.mm.distance(pts.u)
    }

    /// Offset `x > 0` of the first dark fringe, where `k(ūx − v̄x) = π`.
    pub fn central_minimum(&self) -> f64 {
        self.central_minimum
    }

    /// Small-angle fringe period `λD/s`.
    pub fn fringe_spacing(&self) -> f64 {
        self.spec.lambda_dc * self.spec.screen_distance / self.spec.slit_separation
    }

    pub fn screen_half_width(&self) -> f64 {
        self.screen_half_width
    }

    /// Smallest incidence angle the first filter lens can accept, `atan(g/R)`.
    pub fn aperture_phi0(&self) -> f64 {
        self.spec.filter_focal_length.atan2(self.spec.filter_lens_radius)
    }

    pub fn phi_range(&self) -> (f64, f64) {
        (self.spec.phi0, PI - self.spec.phi0)
    }

    pub fn points(&self) -> LayoutPoints {
        let s = &self.spec;
        let a = s.source_half_separation;
        let f = s.alice_focal_length;
        let g = s.filter_focal_length;
        let z_lens2 = 3.0 * g;
        let z_mid = 0.5 * (z_lens2 + s.interferometer_distance);
        let half = 0.5 * s.slit_separation;
        LayoutPoints {
            p: Point::new(0.0, a),
            q: Point::new(0.0, -a),
            r: Point::new(2.0 * f, a),
            t: Point::new(2.0 * f, -a),
            m: Point::new(3.0 * f, 0.0),
            y: Point::new(4.0 * f, -a),
            y_q: Point::new(4.0 * f, a),
            hole: Point::new(2.0 * g, 0.0),
            k: Point::new(z_lens2, half),
            l: Point::new(z_lens2, -half),
            n: Point::new(z_mid, half),
            mm: Point::new(z_mid, -half),
            u: Point::new(s.interferometer_distance, -half),
            v: Point::new(s.interferometer_distance, half),
        }
    }

    /// Transverse height of a source point.
    pub fn source_height(&self, point: SourcePoint) -> f64 {
        match point {
            SourcePoint::P => self.spec.source_half_separation,
            SourcePoint::Q => -self.spec.source_half_separation,
        }
    }
}

/// `x` for which `√((x+s/2)²+D²) − √((x−s/2)²+D²) = λ/2`, from the hyperbola
/// with foci at the slits.
fn central_minimum_offset(s: f64, screen: f64, lambda: f64) -> f64 {
    let a = 0.25 * lambda;
    let b_sq = 0.25 * s * s - a * a;
    a * (1.0 + screen * screen / b_sq).sqrt()
}

/// Signed offset on Bob's screen.
#[derive(Debug, Clone, Copy, PartialEq, PartialOrd, Serialize)]
pub struct ScreenCoordinate(f64);

impl ScreenCoordinate {
    pub fn new(layout: &ExperimentLayout, x: f64) -> Result<Self> {
        let w = layout.screen_half_width();
        if !x.is_finite() || x.abs() > w * (1.0 + 1e-12) {
            return Err(Error::domain(format!(
                "screen coordinate {x} m lies outside the screen (half-width {w} m)"
            )));
        }
        Ok(Self(x))
    }

    pub fn value(self) -> f64 {
        self.0
    }
}

/// Slit-to-screen distances `(ūx, v̄x)`.
pub fn slit_path_lengths(layout: &ExperimentLayout, x: ScreenCoordinate) -> (f64, f64) {
    let half = 0.5 * layout.spec.slit_separation;
    let big_d = layout.spec.screen_distance;
    let x = x.value();
    ((x + half).hypot(big_d), (x - half).hypot(big_d))
}

/// `ūx − v̄x`, evaluated as `2xs / (ūx + v̄x)` to avoid cancellation.
pub fn path_difference(layout: &ExperimentLayout, x: ScreenCoordinate) -> f64 {
    let (ux, vx) = slit_path_lengths(layout, x);
    2.0 * x.value() * layout.spec.slit_separation / (ux + vx)
}

/// Incidence angle, measured from +y at the pinhole, of the horizontal ray
/// leaving the source at transverse height `height`.
pub fn incidence_angle_at_height(layout: &ExperimentLayout, height: f64) -> f64 {
    layout.spec.filter_focal_length.atan2(height)
}

/// φ for the horizontal ray from `point`; the q-ray angle is the supplement of
/// the p-ray angle.
pub fn incidence_angle_phi(layout: &ExperimentLayout, point: SourcePoint) -> Result<f64> {
    let phi_p = layout
        .spec
        .phi_profile
        .apply(incidence_angle_at_height(layout, layout.spec.source_half_separation));
    let phi = match point {
        SourcePoint::P => phi_p,
        SourcePoint::Q => PI - phi_p,
    };
    let (lo, hi) = layout.phi_range();
    if phi < lo || phi > hi {
        return Err(Error::regime(format!(
            "incidence angle {:.6} deg lies outside [{:.6}, {:.6}] deg",
            phi.to_degrees(),
            lo.to_degrees(),
            hi.to_degrees()
        )));
    }
    Ok(phi)
}

/// Outcome of a "much less than" check.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum RegimeStatus {
    Pass,
    Warn,
    Fail,
}

impl RegimeStatus {
    /// Classifies a ratio that should be ≪ 1.
    pub fn much_less(ratio: f64) -> Self {
        if ratio.is_nan() {
            RegimeStatus::Fail
        } else if ratio <= MUCH_LESS_PASS {
            RegimeStatus::Pass
        } else if ratio <= MUCH_LESS_FAIL {
            RegimeStatus::Warn
        } else {
            RegimeStatus::Fail
        }
    }

    /// Classifies a ratio that must *not* be ≪ 1.
    pub fn not_much_less(ratio: f64) -> Self {
        if ratio.is_nan() {
            RegimeStatus::Fail
        } else if ratio > MUCH_LESS_FAIL {
            RegimeStatus::Pass
        } else if ratio > MUCH_LESS_PASS {
            RegimeStatus::Warn
        } else {
            RegimeStatus::Fail
        }
    }

    pub fn passed(self) -> bool {
        self == RegimeStatus::Pass
    }
}

/// Result of a regime validator; never an error.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct RegimeDiagnostic {
    pub regime: &'static str,
    pub status: RegimeStatus,
    /// Named margin ratios in the order they were checked.
    pub ratios: Vec<(&'static str, f64)>,
}

impl RegimeDiagnostic {
    pub fn passed(&self) -> bool {
        self.status.passed()
    }

    pub fn ratio(&self, name: &str) -> Option<f64> {
        self.ratios.iter().find(|(n, _)| *n == name).map(|(_, v)| *v)
    }

    pub fn describe(&self) -> String {
        let parts: Vec<String> = self
            .ratios
            .iter()
            .map(|(n, v)| format!("{n} = {v:.4e}"))
            .collect();
        format!("{} regime {:?}: {}", self.regime, self.status, parts.join(", "))
    }
}

/// `h/g ≪ λ/s`, together with the pinhole being narrow enough to diffract
/// (`λ/h` not ≪ 1).
pub fn validate_small_hole_regime(layout: &ExperimentLayout) -> RegimeDiagnostic {
    let s = &layout.spec;
    let margin = (s.hole_diameter / s.filter_focal_length) / (s.lambda_dc / s.slit_separation);
    let narrowness = s.lambda_dc / s.hole_diameter;
    let status = RegimeStatus::much_less(margin).max(RegimeStatus::not_much_less(narrowness));
    RegimeDiagnostic {
        regime: "small_hole",
        status,
        ratios: vec![("hole_angle_over_fringe_angle", margin), ("lambda_over_hole", narrowness)],
    }
}

/// `1 ≪ h/λ ≪ g/s`.
pub fn validate_large_hole_regime(layout: &ExperimentLayout) -> RegimeDiagnostic {
    let s = &layout.spec;
    let lambda_over_hole = s.lambda_dc / s.hole_diameter;
    let upper = (s.hole_diameter / s.lambda_dc) / (s.filter_focal_length / s.slit_separation);
    let status = RegimeStatus::much_less(lambda_over_hole).max(RegimeStatus::much_less(upper));
    RegimeDiagnostic {
        regime: "large_hole",
        status,
        ratios: vec![("lambda_over_hole", lambda_over_hole), ("hole_over_lambda_over_g_over_s", upper)],
    }
}

/// Apparent speed of the choice-to-detection influence.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct EffectiveSpeed {
    /// m/s; `+inf` when the two instants coincide.
    pub meters_per_second: f64,
    pub multiple_of_c: f64,
}

/// `(d + 4f) / (t_b − t_a)`.
pub fn effective_signal_speed(layout: &ExperimentLayout, t_a: f64, t_b: f64) -> Result<EffectiveSpeed> {
    effective_speed_for_baseline(
        layout.spec.interferometer_distance + 4.0 * layout.spec.alice_focal_length,
        t_a,
        t_b,
    )
}

/// Same as [`effective_signal_speed`] for an explicit baseline `d + 4f`.
pub fn effective_speed_for_baseline(baseline: f64, t_a: f64, t_b: f64) -> Result<EffectiveSpeed> {
    if t_b < t_a {
        return Err(Error::CausalOrder { t_a, t_b });
    }
    let v = if t_b == t_a {
        f64::INFINITY
    } else {
        baseline / (t_b - t_a)
    };
    Ok(EffectiveSpeed {
        meters_per_second: v,
        multiple_of_c: v / SPEED_OF_LIGHT,
    })
}
