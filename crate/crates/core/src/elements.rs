//! Optical element transforms.

use std::f64::consts::PI;

use num_complex::Complex64;
use serde::Serialize;

use crate::error::{Error, Result};
use crate::mode_space::Projector;

/// Amplitudes with which a ray leaving the pinhole enters slits `u` and `v`.
///
/// The remaining weight `α² − |a_u|² − |a_v|²` lands on the opaque part of
/// the slit screen and never reaches Bob's detector.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct SlitAmplitudes {
    pub a_u: Complex64,
    pub a_v: Complex64,
}

impl SlitAmplitudes {
    pub fn weight(&self) -> f64 {
        self.a_u.norm_sqr() + self.a_v.norm_sqr()
    }

    pub fn swapped(self) -> Self {
        Self {
            a_u: self.a_v,
            a_v: self.a_u,
        }
    }
}

/// `α·(sin(φ/2), cos(φ/2))`.
pub fn pinhole_diffraction(phi: f64, alpha: f64) -> Result<SlitAmplitudes> {
    if !(alpha > 0.0 && alpha <= 1.0) {
        return Err(Error::domain(format!("alpha must lie in (0, 1], got {alpha}")));
    }
    if !(phi > 0.0 && phi < PI) {
        return Err(Error::domain(format!(
            "diffraction angle must lie strictly between 0 and 180 degrees, got {} deg",
            phi.to_degrees()
        )));
    }
    let (s, c) = (0.5 * phi).sin_cos();
    Ok(SlitAmplitudes {
        a_u: Complex64::new(alpha * s, 0.0),
        a_v: Complex64::new(alpha * c, 0.0),
    })
}

/// Bob's two-lens pinhole filter, passing only the horizontal idler modes.
pub fn direction_filter() -> Projector {
    Projector::horizontal_idler()
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum AlicePlane {
    Image,
    Focal,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum AlicePoint {
    YImageOfP,
    YImageOfQ,
    M,
}

/// What a click at a given detector position tells Alice about her photon.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct AliceOutcome {
    pub plane: AlicePlane,
    pub point: AlicePoint,
    pub projector: Projector,
}

pub fn alice_lens_outcome(plane: AlicePlane, point: AlicePoint) -> Result<AliceOutcome> {
    let projector = match (plane, point) {
        (AlicePlane::Image, AlicePoint::YImageOfP) => Projector::image_p(),
        (AlicePlane::Image, AlicePoint::YImageOfQ) => Projector::image_q(),
        (AlicePlane::Focal, AlicePoint::M) => Projector::focal_side(),
        _ => {
            return Err(Error::domain(format!(
                "detector point {point:?} does not lie on the {plane:?} plane"
            )))
        }
    };
    Ok(AliceOutcome {
        plane,
        point,
        projector,
    })
}

/// `exp(2πi·length/λ)`.
pub fn propagation_phase(length: f64, lambda_dc: f64) -> Complex64 {
    Complex64::from_polar(1.0, 2.0 * PI * length / lambda_dc)
}
