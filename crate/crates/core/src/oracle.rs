//! Independent checks: Gauss–Kronrod φ-averages and a many-mode continuum
//! model that marginalizes over every one of Alice's detector pixels.
//!
//! Nothing here calls the Simpson rule or the closed-form field operators of
//! [`crate::correlation`]; the two routes only meet in the tests and reports.

use std::f64::consts::PI;

use num_complex::Complex64;
use rayon::prelude::*;
use serde::Serialize;

use crate::correlation::{
    single_count_intensity, slit_phases, BeamParameters, IntensityPattern, PatternLabel,
    PatternSample, Protocol, ScreenGrid, DEFAULT_GRID_POINTS,
};
use crate::elements::pinhole_diffraction;
use crate::error::{Error, Result};
use crate::geometry::{path_difference, ExperimentLayout, ScreenCoordinate};
use crate::quadrature::{WeightProfile, DEGENERATE_WIDTH};

/// Absolute tolerance of [`quadrature_average`].
pub const GK_ABS_TOL: f64 = 1e-9;
const GK_MAX_DEPTH: u32 = 40;

/// Default cap on `n_source_points × n_alice_points × grid points`.
pub const DEFAULT_MAX_WORK: usize = 200_000_000;

const XGK: [f64; 8] = [
    0.991_455_371_120_812_6,
    0.949_107_912_342_758_5,
    0.864_864_423_359_769_1,
    0.741_531_185_599_394_4,
    0.586_087_235_467_691_1,
    0.405_845_151_377_397_2,
    0.207_784_955_007_898_5,
    0.0,
];
const WGK: [f64; 8] = [
    0.022_935_322_010_529_22,
    0.063_092_092_629_978_55,
    0.104_790_010_322_250_18,
    0.140_653_259_715_525_92,
    0.169_004_726_639_267_9,
    0.190_350_578_064_785_4,
    0.204_432_940_075_298_9,
    0.209_482_141_084_727_83,
];
// Gauss weights at XGK[1], XGK[3], XGK[5], XGK[7]
const WG: [f64; 4] = [
    0.129_484_966_168_869_7,
    0.279_705_391_489_276_7,
    0.381_830_050_505_118_9,
    0.417_959_183_673_469_4,
];

/// `(Kronrod, Gauss)` estimates on `[a, b]`.
fn gk15<F: Fn(f64) -> f64>(f: &F, a: f64, b: f64) -> (f64, f64) {
    let c = 0.5 * (a + b);
    let h = 0.5 * (b - a);
    let fc = f(c);
    let mut k = WGK[7] * fc;
    let mut g = WG[3] * fc;
    for i in 0..7 {
        let pair = f(c - h * XGK[i]) + f(c + h * XGK[i]);
        k += WGK[i] * pair;
        if i % 2 == 1 {
            g += WG[i / 2] * pair;
        }
    }
    (k * h, g * h)
}

fn gk_adaptive<F: Fn(f64) -> f64>(f: &F, a: f64, b: f64, tol: f64, depth: u32) -> Result<f64> {
    let (k, g) = gk15(f, a, b);
    if (k - g).abs() <= tol {
        return Ok(k);
    }
    if depth == 0 {
        return Err(Error::Convergence(format!(
            "Gauss-Kronrod did not reach {tol:e} on [{a}, {b}]"
        )));
    }
    let m = 0.5 * (a + b);
    Ok(gk_adaptive(f, a, m, 0.5 * tol, depth - 1)? + gk_adaptive(f, m, b, 0.5 * tol, depth - 1)?)
}

/// `∫_a^b f` by adaptive Gauss–Kronrod (7/15) to absolute tolerance `tol`.
pub fn gauss_kronrod<F: Fn(f64) -> f64>(f: F, a: f64, b: f64, tol: f64) -> Result<f64> {
    if a == b {
        return Ok(0.0);
    }
    gk_adaptive(&f, a, b, tol, GK_MAX_DEPTH)
}

/// Weighted mean of `integrand` over `[lo, hi]`.
pub fn quadrature_average<F: Fn(f64) -> f64>(
    integrand: F,
    weight: &WeightProfile,
    lo: f64,
    hi: f64,
) -> Result<f64> {
    if let WeightProfile::PointMass { phi } = weight {
        if *phi < lo - DEGENERATE_WIDTH || *phi > hi + DEGENERATE_WIDTH {
            return Err(Error::domain("point mass lies outside the averaging interval"));
        }
        return Ok(integrand(*phi));
    }
    if hi - lo < DEGENERATE_WIDTH {
        return Ok(integrand(0.5 * (lo + hi)));
    }
    let cuts = weight.breakpoints(lo, hi);
    let tol = GK_ABS_TOL / (cuts.len() - 1) as f64;
    let w = |p: f64| weight.density(p).unwrap_or(0.0);
    let (mut num, mut den) = (0.0, 0.0);
    for c in cuts.windows(2) {
        num += gauss_kronrod(|p| integrand(p) * w(p), c[0], c[1], tol)?;
        den += gauss_kronrod(w, c[0], c[1], tol)?;
    }
    if den <= 0.0 {
        return Err(Error::domain("weight profile integrates to zero on the interval"));
    }
    Ok(num / den)
}

/// How the pinhole routes a horizontal idler ray into the slits.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, serde::Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum BobOptics {
    /// Narrow hole: each ray splits into both slits by its incidence angle.
    Diffracting,
    /// Wide hole: the outermost rays reach one slit each, the rest are lost.
    Geometric,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, serde::Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Marginalization {
    /// Sum of probabilities over Alice's outcomes.
    Incoherent,
    /// Sum of amplitudes over Alice's outcomes. Not a physical marginal.
    CoherentNonPhysical,
}

/// Discretized source and detector for the brute-force marginal.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, serde::Deserialize)]
pub struct ContinuumModel {
    pub n_source_points: usize,
    /// Pixels per illuminated spot on Alice's detector.
    pub n_alice_points: usize,
    pub include_filter: bool,
    pub bob_optics: BobOptics,
    pub marginalization: Marginalization,
    pub alpha: f64,
    pub grid_points: usize,
    pub max_work: usize,
}

impl Default for ContinuumModel {
    fn default() -> Self {
        Self {
            n_source_points: 2,
            n_alice_points: 1,
            include_filter: true,
            bob_optics: BobOptics::Diffracting,
            marginalization: Marginalization::Incoherent,
            alpha: 0.5,
            grid_points: DEFAULT_GRID_POINTS,
            max_work: DEFAULT_MAX_WORK,
        }
    }
}

impl ContinuumModel {
    pub fn validate(&self) -> Result<()> {
        if self.n_source_points < 2 {
            return Err(Error::domain("n_source_points must be at least 2"));
        }
        if self.n_alice_points < 1 {
            return Err(Error::domain("n_alice_points must be at least 1"));
        }
        if !(self.alpha > 0.0 && self.alpha <= 1.0) {
            return Err(Error::domain(format!("alpha must lie in (0, 1], got {}", self.alpha)));
        }
        let work = self
            .n_source_points
            .saturating_mul(self.n_alice_points)
            .saturating_mul(self.grid_points);
        if work > self.max_work {
            return Err(Error::MemoryGuard(format!(
                "{} source points x {} detector points x {} screen points exceeds the cap of {}",
                self.n_source_points, self.n_alice_points, self.grid_points, self.max_work
            )));
        }
        Ok(())
    }

    /// Pixels per spot needed to resolve every mode reaching one spot.
    pub fn completeness_bound(&self) -> usize {
        self.n_source_points.max(2)
    }

    pub fn with_complete_alice(self) -> Self {
        Self {
            n_alice_points: self.n_alice_points.max(self.completeness_bound()),
            ..self
        }
    }
}

/// Amplitude into each slit, phases relative to the slit-plane reference.
#[derive(Debug, Clone, Copy)]
struct SlitInput {
    u: Complex64,
    v: Complex64,
}

impl SlitInput {
    const BLOCKED: SlitInput = SlitInput {
        u: Complex64::new(0.0, 0.0),
        v: Complex64::new(0.0, 0.0),
    };

    fn at(&self, eu: Complex64, ev: Complex64) -> Complex64 {
        self.u * eu + self.v * ev
    }
}

/// One signal mode landing on a spot: source index, side (vs. down) and its
/// path length to the spot.
#[derive(Debug, Clone, Copy)]
struct SpotMode {
    source: usize,
    side: bool,
    length: f64,
}

fn source_heights(layout: &ExperimentLayout, n: usize) -> Vec<f64> {
    let a = layout.spec().source_half_separation;
    (0..n)
        .map(|j| a - 2.0 * a * j as f64 / (n - 1) as f64)
        .collect()
}

/// Tilt shared by all down-going signal rays and, mirrored, by the up idlers.
fn oblique_tilt(layout: &ExperimentLayout) -> f64 {
    let s = layout.spec();
    (s.source_half_separation / (2.0 * s.alice_focal_length)).atan()
}

fn alice_spots(layout: &ExperimentLayout, ys: &[f64], setting: Protocol) -> Vec<Vec<SpotMode>> {
    let f = layout.spec().alice_focal_length;
    let a = layout.spec().source_half_separation;
    let down_leg = 2.0 * f / oblique_tilt(layout).cos();
    match setting {
        Protocol::Position => ys
            .iter()
            .enumerate()
            .map(|(j, &y)| {
                vec![
                    SpotMode {
                        source: j,
                        side: true,
                        length: 2.0 * f + (2.0 * f).hypot(2.0 * y),
                    },
                    SpotMode {
                        source: j,
                        side: false,
                        // lens crossing at y − a, image at −y
                        length: down_leg + (2.0 * f).hypot(2.0 * y - a),
                    },
                ]
            })
            .collect(),
        Protocol::Momentum => {
            let side = ys
                .iter()
                .enumerate()
                .map(|(j, &y)| SpotMode {
                    source: j,
                    side: true,
                    length: 2.0 * f + f.hypot(y),
                })
                .collect();
            let down = ys
                .iter()
                .enumerate()
                .map(|(j, &y)| SpotMode {
                    source: j,
                    side: false,
                    // focal point of the tilted bundle sits at −a/2
                    length: down_leg + f.hypot(y - 0.5 * a),
                })
                .collect();
            vec![side, down]
        }
    }
}

/// Slit inputs for the side and up idler of every source point.
fn bob_inputs(
    layout: &ExperimentLayout,
    model: &ContinuumModel,
    ys: &[f64],
) -> Result<Vec<(SlitInput, SlitInput)>> {
    let spec = layout.spec();
    let k = layout.wavenumber();
    let g = spec.filter_focal_length;
    let half = 0.5 * spec.slit_separation;
    let d = spec.interferometer_distance;
    let n = ys.len();
    let mut out = Vec::with_capacity(n);
    for (j, &y) in ys.iter().enumerate() {
        if model.include_filter {
            let side = match model.bob_optics {
                BobOptics::Diffracting => {
                    let phi = g.atan2(y);
                    let amp = pinhole_diffraction(phi, model.alpha)?;
                    // lens → hole leg beyond g; the rest of the path is common
                    let extra = y * y / (g.hypot(y) + g);
                    let e = Complex64::from_polar(1.0, k * extra);
                    SlitInput {
                        u: amp.a_u * e,
                        v: amp.a_v * e,
                    }
                }
                BobOptics::Geometric => {
                    let one = Complex64::new(1.0, 0.0);
                    let zero = Complex64::new(0.0, 0.0);
                    if j == 0 {
                        SlitInput { u: zero, v: one }
                    } else if j == n - 1 {
                        SlitInput { u: one, v: zero }
                    } else {
                        SlitInput::BLOCKED
                    }
                }
            };
            out.push((side, SlitInput::BLOCKED));
        } else {
            let h = std::f64::consts::FRAC_1_SQRT_2;
            let side = SlitInput {
                u: Complex64::new(h, 0.0),
                v: Complex64::new(h, 0.0),
            };
            let theta = oblique_tilt(layout);
            // k·n̂·(r_slit − r_source) − k·d, with n̂ tilted up by θ
            let base = -2.0 * d * (0.5 * theta).sin().powi(2);
            let up = SlitInput {
                u: Complex64::from_polar(h, k * (base + theta.sin() * (-half - y))),
                v: Complex64::from_polar(h, k * (base + theta.sin() * (half - y))),
            };
            out.push((side, up));
        }
    }
    Ok(out)
}

/// Bob's single-count pattern with Alice's detector pixels marginalized.
///
/// Pixel `t` of a spot receiving modes `r = 0..R` weights them by
/// `e^{ikL_r} e^{2πi rt/N}/√N`; for `N ≥ R` the pixels resolve the modes
/// completely. Intensities are in units of `I₀ε²`.
pub fn continuum_marginal_pattern(
    model: &ContinuumModel,
    layout: &ExperimentLayout,
    setting: Protocol,
) -> Result<IntensityPattern> {
    model.validate()?;
    let grid = ScreenGrid::new(layout, model.grid_points)?;
    let k = layout.wavenumber();
    let ys = source_heights(layout, model.n_source_points);
    let inputs = bob_inputs(layout, model, &ys)?;
    let spots = alice_spots(layout, &ys, setting);
    let n_px = model.n_alice_points;
    let norm = 1.0 / (n_px as f64).sqrt();

    // Alice pixel coefficients, independent of x
    let pixel_coeffs: Vec<Vec<Vec<Complex64>>> = spots
        .iter()
        .map(|modes| {
            let l0 = modes[0].length;
            (0..n_px)
                .map(|t| {
                    modes
                        .iter()
                        .enumerate()
                        .map(|(r, m)| {
                            let dft = 2.0 * PI * ((r * t) % n_px) as f64 / n_px as f64;
                            Complex64::from_polar(norm, k * (m.length - l0) + dft)
                        })
                        .collect()
                })
                .collect()
        })
        .collect();

    let samples = grid
        .xs()
        .par_iter()
        .map(|&x| -> Result<PatternSample> {
            let xc = ScreenCoordinate::new(layout, x)?;
            let (pu, pv, _) = slit_phases(layout, xc);
            let eu = Complex64::from_polar(1.0, pu);
            let ev = Complex64::from_polar(1.0, pv);
            let bob: Vec<(Complex64, Complex64)> = inputs
                .iter()
                .map(|(side, up)| (side.at(eu, ev), up.at(eu, ev)))
                .collect();
            let mut incoherent = 0.0;
            let mut coherent = Complex64::new(0.0, 0.0);
            for (modes, pixels) in spots.iter().zip(&pixel_coeffs) {
                for coeffs in pixels {
                    let amp: Complex64 = modes
                        .iter()
                        .zip(coeffs)
                        .map(|(m, c)| {
                            let (side, up) = bob[m.source];
                            c * if m.side { side } else { up }
                        })
                        .sum();
                    incoherent += amp.norm_sqr();
                    coherent += amp;
                }
            }
            let intensity = match model.marginalization {
                Marginalization::Incoherent => incoherent,
                Marginalization::CoherentNonPhysical => coherent.norm_sqr(),
            };
            Ok(PatternSample {
                x,
                phase: k * path_difference(layout, xc),
                intensity,
            })
        })
        .collect::<Result<Vec<_>>>()?;
    let label = PatternLabel::Custom(format!("continuum_{}", setting.name()));
    Ok(IntensityPattern::from_samples(label, samples, 1.0))
}

pub fn max_abs_diff(a: &IntensityPattern, b: &IntensityPattern) -> Result<f64> {
    if a.samples.len() != b.samples.len() {
        return Err(Error::domain("patterns have different lengths"));
    }
    Ok(a.samples
        .iter()
        .zip(&b.samples)
        .map(|(p, q)| (p.intensity - q.intensity).abs())
        .fold(0.0, f64::max))
}

/// The filtered four-mode configuration, where Alice's detector does not
/// resolve the modes reaching it.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct IncompleteReport {
    pub weight_profile: String,
    /// Position-setting visibility, `⟨sin φ⟩_w`.
    pub visibility_position: Option<f64>,
    pub visibility_momentum: Option<f64>,
    pub visibility_difference: Option<f64>,
    /// `1 − ⟨sin φ⟩_w` by Gauss–Kronrod.
    pub predicted_difference: f64,
    /// Continuum model with one pixel per spot and the filter in place.
    pub continuum_max_abs_diff: f64,
    pub continuum_visibility_position: Option<f64>,
    pub continuum_visibility_momentum: Option<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct NoSignalingReport {
    pub include_filter: bool,
    pub n_source_points: usize,
    pub requested_alice_points: usize,
    pub effective_alice_points: usize,
    pub marginalization: Marginalization,
    pub tolerance: f64,
    pub setting_a_pattern: IntensityPattern,
    pub setting_b_pattern: IntensityPattern,
    pub max_abs_diff: f64,
    pub visibility_a: Option<f64>,
    pub visibility_b: Option<f64>,
    pub pass: bool,
    pub incomplete_measurement: Option<IncompleteReport>,
    /// Failures met while building the report.
    pub errors: Vec<String>,
}

fn incomplete_report(
    layout: &ExperimentLayout,
    model: &ContinuumModel,
    weight: &WeightProfile,
) -> Result<IncompleteReport> {
    let beam = BeamParameters {
        alpha: model.alpha,
        ..BeamParameters::default()
    };
    let grid = ScreenGrid::new(layout, model.grid_points)?;
    let p = single_count_intensity(layout, Protocol::Position, weight, &beam, &grid)?;
    let m = single_count_intensity(layout, Protocol::Momentum, weight, &beam, &grid)?;
    let (lo, hi) = layout.phi_range();
    let mean_sin = quadrature_average(f64::sin, weight, lo, hi)?;

    let four_mode = ContinuumModel {
        n_source_points: 2,
        n_alice_points: 1,
        include_filter: true,
        marginalization: Marginalization::Incoherent,
        ..*model
    };
    let cp = continuum_marginal_pattern(&four_mode, layout, Protocol::Position)?;
    let cm = continuum_marginal_pattern(&four_mode, layout, Protocol::Momentum)?;
    Ok(IncompleteReport {
        weight_profile: weight.name(),
        visibility_position: p.visibility,
        visibility_momentum: m.visibility,
        visibility_difference: m.visibility.zip(p.visibility).map(|(a, b)| a - b),
        predicted_difference: 1.0 - mean_sin,
        continuum_max_abs_diff: max_abs_diff(&cp, &cm)?,
        continuum_visibility_position: cp.visibility,
        continuum_visibility_momentum: cm.visibility,
    })
}

/// Compare Bob's marginal patterns for the two settings with Alice's detector
/// made complete, then report the filtered incomplete configuration.
pub fn no_signaling_check(
    layout: &ExperimentLayout,
    model: &ContinuumModel,
    tolerance: f64,
    weight: &WeightProfile,
) -> NoSignalingReport {
    let complete = model.with_complete_alice();
    let mut errors = Vec::new();
    let empty = || IntensityPattern::from_samples(PatternLabel::Custom("unavailable".into()), vec![], 1.0);
    let mut run = |setting| match continuum_marginal_pattern(&complete, layout, setting) {
        Ok(p) => p,
        Err(e) => {
            errors.push(format!("{}: {e}", setting.name()));
            empty()
        }
    };
    let a = run(Protocol::Position);
    let b = run(Protocol::Momentum);
    let diff = max_abs_diff(&a, &b).unwrap_or(f64::INFINITY);
    let pass = errors.is_empty() && (diff < tolerance || tolerance >= 1.0);
    let incomplete = match incomplete_report(layout, model, weight) {
        Ok(r) => Some(r),
        Err(e) => {
            errors.push(format!("incomplete configuration: {e}"));
            None
        }
    };
    NoSignalingReport {
        include_filter: model.include_filter,
        n_source_points: model.n_source_points,
        requested_alice_points: model.n_alice_points,
        effective_alice_points: complete.n_alice_points,
        marginalization: model.marginalization,
        tolerance,
        visibility_a: a.visibility,
        visibility_b: b.visibility,
        setting_a_pattern: a,
        setting_b_pattern: b,
        max_abs_diff: diff,
        pass,
        incomplete_measurement: incomplete,
        errors,
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::geometry::LayoutSpec;

    fn layout() -> ExperimentLayout {
        ExperimentLayout::new(LayoutSpec::default()).unwrap()
    }

    fn small(model: ContinuumModel) -> ContinuumModel {
        ContinuumModel {
            grid_points: 401,
            ..model
        }
    }

    #[test]
    fn gk_examples() {
        let phi0 = PI / 6.0;
        let v = quadrature_average(f64::sin, &WeightProfile::Flat, phi0, PI - phi0).unwrap();
        assert!((v - 2.0 * phi0.cos() / (PI - 2.0 * phi0)).abs() < 1e-12);
        assert!((v - 0.82699).abs() < 1e-5);
        let c = quadrature_average(|_| -2.5, &WeightProfile::SinSquared, 0.2, 2.0).unwrap();
        assert!((c + 2.5).abs() < 1e-12);
        let d = quadrature_average(f64::sin, &WeightProfile::Flat, PI / 2.0, PI / 2.0).unwrap();
        assert_eq!(d, 1.0);
        let exp = gauss_kronrod(f64::exp, 0.0, 1.0, 1e-13).unwrap();
        assert!((exp - (1f64.exp() - 1.0)).abs() < 1e-13);
    }

    #[test]
    fn gk_reports_nonconvergence() {
        let r = gauss_kronrod(|x| if x > 0.3 { 1.0 / (x - 0.3).sqrt() } else { 0.0 }, 0.0, 1.0, 1e-15);
        assert!(matches!(r, Err(Error::Convergence(_))));
    }

    #[test]
    fn model_validation_and_guard() {
        assert!(ContinuumModel { n_source_points: 1, ..Default::default() }.validate().is_err());
        assert!(ContinuumModel { n_alice_points: 0, ..Default::default() }.validate().is_err());
        let huge = ContinuumModel {
            n_source_points: 1000,
            n_alice_points: 1000,
            ..Default::default()
        };
        assert!(matches!(huge.validate(), Err(Error::MemoryGuard(_))));
        let c = ContinuumModel { n_source_points: 5, ..Default::default() }.with_complete_alice();
        assert_eq!(c.n_alice_points, 5);
    }

    #[test]
    fn two_point_momentum_matches_closed_form_shape() {
        let l = layout();
        let model = small(ContinuumModel::default());
        let pat = continuum_marginal_pattern(&model, &l, Protocol::Momentum).unwrap();
        let phi_p = l.spec().filter_focal_length.atan2(l.spec().source_half_separation);
        let a2 = model.alpha * model.alpha;
        for s in &pat.samples {
            let want = 2.0 * a2 * (1.0 + phi_p.sin()) * (1.0 + s.phase.cos());
            assert!((s.intensity - want).abs() <= 1e-9 * want.max(1e-3));
        }
    }

    #[test]
    fn two_point_position_has_no_cross_term() {
        let l = layout();
        let model = small(ContinuumModel::default());
        let pat = continuum_marginal_pattern(&model, &l, Protocol::Position).unwrap();
        let phi_p = l.spec().filter_focal_length.atan2(l.spec().source_half_separation);
        let a2 = model.alpha * model.alpha;
        for s in &pat.samples {
            let want = 2.0 * a2 * (1.0 + phi_p.sin() * s.phase.cos());
            assert!((s.intensity - want).abs() < 1e-12);
        }
        let geo = ContinuumModel {
            bob_optics: BobOptics::Geometric,
            ..model
        };
        let flat = continuum_marginal_pattern(&geo, &l, Protocol::Position).unwrap();
        assert!(flat.samples.iter().all(|s| (s.intensity - 2.0).abs() < 1e-15));
        assert!(flat.visibility.unwrap() < 1e-15);
    }

    #[test]
    fn unfiltered_complete_marginals_agree() {
        let l = layout();
        for n in [2, 3, 5] {
            let model = small(ContinuumModel {
                n_source_points: n,
                include_filter: false,
                ..Default::default()
            })
            .with_complete_alice();
            let a = continuum_marginal_pattern(&model, &l, Protocol::Position).unwrap();
            let b = continuum_marginal_pattern(&model, &l, Protocol::Momentum).unwrap();
            assert!(max_abs_diff(&a, &b).unwrap() < 1e-12, "n = {n}");
        }
    }

    #[test]
    fn coherent_flag_is_distinct() {
        let l = layout();
        let model = small(ContinuumModel {
            include_filter: false,
            n_alice_points: 4,
            marginalization: Marginalization::CoherentNonPhysical,
            ..Default::default()
        });
        let a = continuum_marginal_pattern(&model, &l, Protocol::Position).unwrap();
        let b = continuum_marginal_pattern(&model, &l, Protocol::Momentum).unwrap();
        assert!(max_abs_diff(&a, &b).unwrap() > 1e-6);
    }

    #[test]
    fn report_on_defaults() {
        let l = layout();
        let model = small(ContinuumModel {
            include_filter: false,
            ..Default::default()
        });
        let r = no_signaling_check(&l, &model, 1e-12, &WeightProfile::Flat);
        assert!(r.pass, "{:?}", r.errors);
        assert_eq!(r.effective_alice_points, 2);
        let inc = r.incomplete_measurement.unwrap();
        let diff = inc.visibility_difference.unwrap();
        assert!((diff - inc.predicted_difference).abs() < 1e-8);
        assert!(diff > 0.1);
        assert!(inc.continuum_max_abs_diff > 0.1);

        let vacuous = no_signaling_check(&l, &model, 1.0, &WeightProfile::Flat);
        assert!(vacuous.pass);
    }
}
