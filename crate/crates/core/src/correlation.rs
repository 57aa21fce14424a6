//! Field operators, coincidence probabilities and Bob's single-count patterns.
//!
//! Every coefficient is stored as a modulus and a phase measured from the
//! operator's `reference_phase`. The reference phases are large (`k·d′` is of
//! order 10⁷ rad) and cancel in every squared modulus, so keeping them apart
//! leaves the interference terms free of their rounding.

use std::f64::consts::PI;
use std::fmt::Write as _;
use std::path::Path;

use num_complex::Complex64;
use rayon::prelude::*;
use serde::{Serialize, Serializer};

use crate::elements::pinhole_diffraction;
use crate::error::{Error, Result};
use crate::geometry::{path_difference, ExperimentLayout, ScreenCoordinate};
use crate::mode_space::{Mode, Party, SourcePoint, TwoPhotonState};
use crate::quadrature::{simpson_average, WeightProfile, DEGENERATE_WIDTH};

/// Default number of screen samples.
pub const DEFAULT_GRID_POINTS: usize = 2001;

/// Slack on the φ range check.
const PHI_SLACK: f64 = 1e-12;

/// Samples with `|kΔ| ≤ π + PHASE_SLACK` form the central fringe period.
const PHASE_SLACK: f64 = 1e-9;

/// A coefficient `modulus · e^{i(reference + phase)}`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct Phasor {
    pub modulus: f64,
    pub phase: f64,
}

impl Phasor {
    pub fn new(modulus: f64, phase: f64) -> Self {
        Self { modulus, phase }
    }
}

/// Positive-frequency field at one detector point, a sum of annihilation
/// operators with path-phase coefficients.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct FieldOperator {
    party: Party,
    reference_phase: f64,
    terms: Vec<(Mode, Phasor)>,
}

impl FieldOperator {
    pub fn new(party: Party, reference_phase: f64, terms: Vec<(Mode, Phasor)>) -> Result<Self> {
        for (mode, c) in &terms {
            if mode.party() != party {
                return Err(Error::domain(format!(
                    "mode {mode} does not belong to the {party:?} party"
                )));
            }
            if !(c.modulus.is_finite() && c.phase.is_finite()) {
                return Err(Error::domain(format!("non-finite coefficient on {mode}")));
            }
        }
        if !reference_phase.is_finite() {
            return Err(Error::domain("non-finite reference phase"));
        }
        Ok(Self {
            party,
            reference_phase,
            terms,
        })
    }

    pub fn party(&self) -> Party {
        self.party
    }

    pub fn reference_phase(&self) -> f64 {
        self.reference_phase
    }

    pub fn terms(&self) -> &[(Mode, Phasor)] {
        &self.terms
    }

    /// Full complex coefficients, reference phase included.
    pub fn coefficients(&self) -> Vec<(Mode, Complex64)> {
        self.terms
            .iter()
            .map(|(m, c)| (*m, Complex64::from_polar(c.modulus, self.reference_phase + c.phase)))
            .collect()
    }

    /// Sum of the coefficients on `mode`, reference phase dropped.
    pub fn relative_coefficient(&self, mode: Mode) -> Complex64 {
        self.terms
            .iter()
            .filter(|(m, _)| *m == mode)
            .map(|(_, c)| Complex64::from_polar(c.modulus, c.phase))
            .sum()
    }
}

/// Phase offsets `k(ūx − r₀)` and `k(v̄x − r₀)` with `r₀ = √(x² + s²/4 + D²)`,
/// and the reference `k(d′ + r₀)`.
pub(crate) fn slit_phases(layout: &ExperimentLayout, x: ScreenCoordinate) -> (f64, f64, f64) {
    let spec = layout.spec();
    let k = layout.wavenumber();
    let s = spec.slit_separation;
    let big_d = spec.screen_distance;
    let x = x.value();
    let r0 = (x * x + 0.25 * s * s + big_d * big_d).sqrt();
    let ux = (x + 0.5 * s).hypot(big_d);
    let vx = (x - 0.5 * s).hypot(big_d);
    let du = x * s / (ux + r0);
    let dv = -x * s / (vx + r0);
    (k * du, k * dv, k * (layout.d_prime() + r0))
}

fn check_phi(layout: &ExperimentLayout, phi: f64) -> Result<()> {
    let (lo, hi) = layout.phi_range();
    if phi < lo - PHI_SLACK || phi > hi + PHI_SLACK {
        return Err(Error::regime(format!(
            "diffraction angle {} deg lies outside [{}, {}] deg",
            phi.to_degrees(),
            lo.to_degrees(),
            hi.to_degrees()
        )));
    }
    Ok(())
}

/// Bob's field at `x` behind the filter: `i_p0` arrives at the pinhole at `φ`
/// and `i_q0` at `180° − φ`, each splitting into both slits.
pub fn bob_field(
    layout: &ExperimentLayout,
    x: ScreenCoordinate,
    phi: f64,
    alpha: f64,
) -> Result<FieldOperator> {
    check_phi(layout, phi)?;
    let amp = pinhole_diffraction(phi, alpha)?;
    let (sin_half, cos_half) = (amp.a_u.re, amp.a_v.re);
    let (pu, pv, reference) = slit_phases(layout, x);
    FieldOperator::new(
        Party::Idler,
        reference,
        vec![
            (Mode::IdlerP0, Phasor::new(sin_half, pu)),
            (Mode::IdlerP0, Phasor::new(cos_half, pv)),
            (Mode::IdlerQ0, Phasor::new(cos_half, pu)),
            (Mode::IdlerQ0, Phasor::new(sin_half, pv)),
        ],
    )
}

/// Bob's field with no diffraction at the hole: `i_p0` reaches only slit `v`
/// and `i_q0` only slit `u`.
pub fn bob_field_geometric(layout: &ExperimentLayout, x: ScreenCoordinate) -> Result<FieldOperator> {
    let (pu, pv, reference) = slit_phases(layout, x);
    FieldOperator::new(
        Party::Idler,
        reference,
        vec![
            (Mode::IdlerP0, Phasor::new(1.0, pv)),
            (Mode::IdlerQ0, Phasor::new(1.0, pu)),
        ],
    )
}

/// Alice's detector at the image of `point`: the side ray through her lens
/// and the down ray through the lens center both arrive there.
pub fn alice_field_position(layout: &ExperimentLayout, point: SourcePoint) -> FieldOperator {
    let f = layout.spec().alice_focal_length;
    let a = layout.spec().source_half_separation;
    let k = layout.wavenumber();
    // side: source → lens (2f), lens → image (height change 2a over 2f)
    let side = 2.0 * f + (2.0 * f).hypot(2.0 * a);
    // down: through the lens center, both legs tilted by a over 2f
    let down = 2.0 * (2.0 * f).hypot(a);
    let (m_side, m_down) = match point {
        SourcePoint::P => (Mode::SignalP0, Mode::SignalPDown),
        SourcePoint::Q => (Mode::SignalQ0, Mode::SignalQDown),
    };
    FieldOperator::new(
        Party::Signal,
        k * side,
        vec![
            (m_side, Phasor::new(1.0, 0.0)),
            (m_down, Phasor::new(1.0, k * (down - side))),
        ],
    )
    .expect("signal modes with finite phases")
}

/// Alice's detector at the focal point `m`, reached by both side rays.
pub fn alice_field_momentum(layout: &ExperimentLayout) -> FieldOperator {
    let pts = layout.points();
    let f = layout.spec().alice_focal_length;
    let k = layout.wavenumber();
    let rm = pts.r.distance(pts.m);
    let tm = pts.t.distance(pts.m);
    let reference = k * (2.0 * f + rm);
    FieldOperator::new(
        Party::Signal,
        reference,
        vec![
            (Mode::SignalP0, Phasor::new(1.0, 0.0)),
            (Mode::SignalQ0, Phasor::new(1.0, k * (tm - rm))),
        ],
    )
    .expect("signal modes with finite phases")
}

/// `|⟨E⁺_A E⁺_B⟩|²` for the given two-photon state.
///
/// Each product term carries Alice's and Bob's relative phases separately;
/// the cross terms use their differences, so phases common to all of one
/// party's terms drop out before any rounding.
pub fn coincidence_probability(
    state: &TwoPhotonState,
    e_a: &FieldOperator,
    e_b: &FieldOperator,
) -> Result<f64> {
    if e_a.party() != Party::Signal || e_b.party() != Party::Idler {
        return Err(Error::domain(
            "coincidence needs a signal-party field for Alice and an idler-party field for Bob",
        ));
    }
    let mut products: Vec<(Complex64, f64, f64)> = Vec::new();
    for (ms, cs) in e_a.terms() {
        for (mi, ci) in e_b.terms() {
            let amp = state.amplitude(*ms, *mi);
            if amp == Complex64::new(0.0, 0.0) || cs.modulus == 0.0 || ci.modulus == 0.0 {
                continue;
            }
            products.push((amp * (cs.modulus * ci.modulus), cs.phase, ci.phase));
        }
    }
    let mut diag = 0.0;
    let mut cross = 0.0;
    for (i, (a, pa, pb)) in products.iter().enumerate() {
        diag += a.norm_sqr();
        for (b, qa, qb) in &products[i + 1..] {
            let rel = (pa - qa) + (pb - qb);
            cross += (a * b.conj() * Complex64::from_polar(1.0, rel)).re;
        }
    }
    Ok((diag + 2.0 * cross).max(0.0))
}

/// Which of Alice's measurements the pattern is conditioned on.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, serde::Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Protocol {
    Position,
    Momentum,
}

impl Protocol {
    pub fn name(self) -> &'static str {
        match self {
            Protocol::Position => "position",
            Protocol::Momentum => "momentum",
        }
    }
}

impl std::str::FromStr for Protocol {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "position" => Ok(Protocol::Position),
            "momentum" => Ok(Protocol::Momentum),
            other => Err(Error::domain(format!(
                "unknown protocol {other:?}, expected position or momentum"
            ))),
        }
    }
}

/// Uniform screen sampling with a whole number of steps per half fringe, so
/// `0` and both first dark fringes `±x_π` are grid points.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ScreenGrid {
    xs: Vec<f64>,
    step: f64,
    steps_per_half_fringe: usize,
}

impl ScreenGrid {
    pub fn new(layout: &ExperimentLayout, points: usize) -> Result<Self> {
        if points < 3 || points.is_multiple_of(2) {
            return Err(Error::domain(format!(
                "screen grid needs an odd number of points >= 3, got {points}"
            )));
        }
        let x_pi = layout.central_minimum();
        let half = (points - 1) / 2;
        let m = ((half as f64) * x_pi / layout.screen_half_width() - 1e-9).ceil().max(1.0) as usize;
        let step = x_pi / m as f64;
        let xs = (0..points)
            .map(|i| (i as f64 - half as f64) * step)
            .collect();
        Ok(Self {
            xs,
            step,
            steps_per_half_fringe: m,
        })
    }

    pub fn xs(&self) -> &[f64] {
        &self.xs
    }

    pub fn len(&self) -> usize {
        self.xs.len()
    }

    pub fn is_empty(&self) -> bool {
        self.xs.is_empty()
    }

    pub fn step(&self) -> f64 {
        self.step
    }

    pub fn steps_per_half_fringe(&self) -> usize {
        self.steps_per_half_fringe
    }
}

#[derive(Debug, Clone, PartialEq)]
pub enum PatternLabel {
    Position,
    Momentum,
    Custom(String),
}

impl PatternLabel {
    pub fn as_str(&self) -> &str {
        match self {
            PatternLabel::Position => "I_p",
            PatternLabel::Momentum => "I_m",
            PatternLabel::Custom(s) => s,
        }
    }
}

impl Serialize for PatternLabel {
    fn serialize<S: Serializer>(&self, s: S) -> std::result::Result<S::Ok, S::Error> {
        s.serialize_str(self.as_str())
    }
}

/// One screen sample; `phase` is `k(ūx − v̄x)`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct PatternSample {
    pub x: f64,
    pub phase: f64,
    pub intensity: f64,
}

/// Bob's sampled single-count intensity, in units of `scale`.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct IntensityPattern {
    pub label: PatternLabel,
    pub samples: Vec<PatternSample>,
    /// `None` when the pattern is identically zero or spans less than a fringe.
    pub visibility: Option<f64>,
    pub total_flux: f64,
    /// Absolute intensity of one pattern unit (`I₀ε²α²`).
    pub scale: f64,
}

impl IntensityPattern {
    pub fn from_samples(label: PatternLabel, samples: Vec<PatternSample>, scale: f64) -> Self {
        let mut pattern = Self {
            label,
            samples,
            visibility: None,
            total_flux: 0.0,
            scale,
        };
        pattern.total_flux = total_flux(&pattern.samples);
        pattern.visibility = fringe_visibility(&pattern).ok();
        pattern
    }

    pub fn xs(&self) -> Vec<f64> {
        self.samples.iter().map(|s| s.x).collect()
    }

    pub fn intensities(&self) -> Vec<f64> {
        self.samples.iter().map(|s| s.intensity).collect()
    }

    /// `x_m,intensity` rows with 17 significant digits.
    pub fn to_csv(&self) -> String {
        let mut out = String::from("x_m,intensity\n");
        for s in &self.samples {
            let _ = writeln!(out, "{:.16e},{:.16e}", s.x, s.intensity);
        }
        out
    }

    pub fn write_csv(&self, path: &Path) -> Result<()> {
        std::fs::write(path, self.to_csv())?;
        Ok(())
    }

    pub fn summary(&self) -> PatternSummary {
        PatternSummary {
            label: self.label.as_str().to_string(),
            visibility: self.visibility,
            total_flux: self.total_flux,
            scale: self.scale,
            grid_points: self.samples.len(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct PatternSummary {
    pub label: String,
    pub visibility: Option<f64>,
    pub total_flux: f64,
    pub scale: f64,
    pub grid_points: usize,
}

pub(crate) fn pairwise_sum(values: &[f64]) -> f64 {
    if values.len() <= 8 {
        return values.iter().sum();
    }
    let mid = values.len() / 2;
    pairwise_sum(&values[..mid]) + pairwise_sum(&values[mid..])
}

/// Trapezoid integral of intensity over `x`.
fn total_flux(samples: &[PatternSample]) -> f64 {
    let pieces: Vec<f64> = samples
        .windows(2)
        .map(|w| 0.5 * (w[1].x - w[0].x) * (w[0].intensity + w[1].intensity))
        .collect();
    pairwise_sum(&pieces)
}

/// `(I_max − I_min)/(I_max + I_min)` over the central period `|kΔ| ≤ π`.
pub fn fringe_visibility(pattern: &IntensityPattern) -> Result<f64> {
    let central: Vec<&PatternSample> = pattern
        .samples
        .iter()
        .filter(|s| s.phase.abs() <= PI + PHASE_SLACK)
        .collect();
    let lo = central.iter().map(|s| s.phase).fold(f64::INFINITY, f64::min);
    let hi = central.iter().map(|s| s.phase).fold(f64::NEG_INFINITY, f64::max);
    if central.len() < 3 || lo > -PI + 1e-6 || hi < PI - 1e-6 {
        return Err(Error::UndefinedVisibility(
            "pattern does not span a full fringe period around x = 0".into(),
        ));
    }
    let max = central.iter().map(|s| s.intensity).fold(f64::NEG_INFINITY, f64::max);
    let min = central.iter().map(|s| s.intensity).fold(f64::INFINITY, f64::min);
    if max + min <= 0.0 {
        return Err(Error::UndefinedVisibility("pattern is identically zero".into()));
    }
    Ok(((max - min) / (max + min)).clamp(0.0, 1.0))
}

/// Flux of `pattern_m` over flux of `pattern_p`.
pub fn intensity_ratio(pattern_m: &IntensityPattern, pattern_p: &IntensityPattern) -> Result<f64> {
    let same_grid = pattern_m.samples.len() == pattern_p.samples.len()
        && pattern_m
            .samples
            .iter()
            .zip(&pattern_p.samples)
            .all(|(a, b)| a.x == b.x);
    if !same_grid {
        return Err(Error::domain("patterns are sampled on different grids"));
    }
    if pattern_m.scale != pattern_p.scale {
        return Err(Error::domain("patterns are in different intensity units"));
    }
    if pattern_p.total_flux == 0.0 {
        return Err(Error::domain("denominator pattern carries no flux"));
    }
    Ok(pattern_m.total_flux / pattern_p.total_flux)
}

/// Source and filter scalars shared by every pattern computation.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, serde::Deserialize)]
pub struct BeamParameters {
    /// Downconversion amplitude `ε`.
    pub epsilon: f64,
    /// Pinhole transmission amplitude `α`.
    pub alpha: f64,
    /// Idler beam intensity `I₀`.
    pub i0: f64,
}

impl Default for BeamParameters {
    fn default() -> Self {
        Self {
            epsilon: 0.1,
            alpha: 0.5,
            i0: 1.0,
        }
    }
}

impl BeamParameters {
    pub fn validate(&self) -> Result<()> {
        if !(self.epsilon > 0.0 && self.epsilon < 1.0) {
            return Err(Error::domain(format!("epsilon must lie in (0, 1), got {}", self.epsilon)));
        }
        if !(self.alpha > 0.0 && self.alpha <= 1.0) {
            return Err(Error::domain(format!("alpha must lie in (0, 1], got {}", self.alpha)));
        }
        if !(self.i0.is_finite() && self.i0 > 0.0) {
            return Err(Error::domain(format!("I0 must be positive, got {}", self.i0)));
        }
        Ok(())
    }

    /// Absolute intensity of one pattern unit, `I₀ε²α²`.
    pub fn unit(&self) -> f64 {
        self.i0 * self.epsilon * self.epsilon * self.alpha * self.alpha
    }
}

/// Alice's detector fields for each outcome branch the protocol keeps, with
/// the branch weights of the ensemble.
fn alice_branches(layout: &ExperimentLayout, protocol: Protocol) -> Vec<(f64, FieldOperator)> {
    match protocol {
        Protocol::Position => vec![
            (0.5, alice_field_position(layout, SourcePoint::P)),
            (0.5, alice_field_position(layout, SourcePoint::Q)),
        ],
        // the M̂₂ branch meets no Bob mode behind the filter
        Protocol::Momentum => vec![(1.0, alice_field_momentum(layout))],
    }
}

/// φ-averaged single-count pattern on `grid`, in units of `I₀ε²α²`.
pub fn single_count_intensity(
    layout: &ExperimentLayout,
    protocol: Protocol,
    weight: &WeightProfile,
    beam: &BeamParameters,
    grid: &ScreenGrid,
) -> Result<IntensityPattern> {
    beam.validate()?;
    let state = TwoPhotonState::canonical(beam.epsilon)?;
    let branches = alice_branches(layout, protocol);
    let (lo, hi) = layout.phi_range();
    let norm = beam.epsilon * beam.epsilon * beam.alpha * beam.alpha;
    let k = layout.wavenumber();

    let samples: Vec<Result<PatternSample>> = grid
        .xs()
        .par_iter()
        .map(|&x| {
            let xc = ScreenCoordinate::new(layout, x)?;
            // a point mass or degenerate interval never touches a range edge
            let p_ab = |phi: f64| -> f64 {
                let e_b = match bob_field(layout, xc, phi.clamp(lo, hi), beam.alpha) {
                    Ok(e) => e,
                    Err(_) => return f64::NAN,
                };
                branches
                    .iter()
                    .map(|(w, e_a)| w * coincidence_probability(&state, e_a, &e_b).unwrap_or(f64::NAN))
                    .sum()
            };
            let mean = simpson_average(p_ab, weight, lo, hi)?;
            if mean.is_nan() {
                return Err(Error::regime("diffraction angle left the admissible range"));
            }
            Ok(PatternSample {
                x,
                phase: k * path_difference(layout, xc),
                intensity: (mean / norm).max(0.0),
            })
        })
        .collect();
    let samples = samples.into_iter().collect::<Result<Vec<_>>>()?;
    let label = match protocol {
        Protocol::Position => PatternLabel::Position,
        Protocol::Momentum => PatternLabel::Momentum,
    };
    Ok(IntensityPattern::from_samples(label, samples, beam.unit()))
}

/// Single-count pattern with no diffraction at the hole, in units of `I₀ε²`.
pub fn geometric_intensity(
    layout: &ExperimentLayout,
    protocol: Protocol,
    beam: &BeamParameters,
    grid: &ScreenGrid,
) -> Result<IntensityPattern> {
    beam.validate()?;
    let state = TwoPhotonState::canonical(beam.epsilon)?;
    let branches = alice_branches(layout, protocol);
    let norm = beam.epsilon * beam.epsilon;
    let k = layout.wavenumber();
    let samples = grid
        .xs()
        .iter()
        .map(|&x| {
            let xc = ScreenCoordinate::new(layout, x)?;
            let e_b = bob_field_geometric(layout, xc)?;
            let mut p = 0.0;
            for (w, e_a) in &branches {
                p += w * coincidence_probability(&state, e_a, &e_b)?;
            }
            Ok(PatternSample {
                x,
                phase: k * path_difference(layout, xc),
                intensity: p / norm,
            })
        })
        .collect::<Result<Vec<_>>>()?;
    let label = PatternLabel::Custom(format!("{}_geometric", protocol.name()));
    Ok(IntensityPattern::from_samples(label, samples, beam.i0 * norm))
}

/// Closed-form reference numbers reported next to the quadrature results.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct ReferenceForms {
    /// `cos φ₀`, the reference value for the position visibility.
    pub cos_phi0: f64,
    /// `2cos φ₀/(π − 2φ₀)`, the flat-weight mean of `sin φ`.
    pub flat_mean_sin: f64,
    /// Ratio of the prefactors `2(1 + cos φ₀)` and `(1 + cos φ₀)`.
    pub prefactor_ratio: f64,
    /// Minimum of `(1 + cos φ₀)·cos kΔ`, the position form read without its
    /// constant term; negative, so that reading cannot be an intensity.
    pub no_offset_reading_min: f64,
}

pub fn reference_forms(phi0: f64) -> ReferenceForms {
    let c = phi0.cos();
    let width = PI - 2.0 * phi0;
    ReferenceForms {
        cos_phi0: c,
        flat_mean_sin: if width < DEGENERATE_WIDTH { 1.0 } else { 2.0 * c / width },
        prefactor_ratio: 2.0 * (1.0 + c) / (1.0 + c),
        no_offset_reading_min: -(1.0 + c),
    }
}
