//! End-to-end protocol runs, Bob's decision rule and photon-count sampling.

use std::f64::consts::PI;
use std::fmt::Write as _;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Binomial, Distribution, StandardNormal};
use serde::Serialize;

use crate::correlation::{
    geometric_intensity, single_count_intensity, BeamParameters, IntensityPattern, Protocol,
    ScreenGrid,
};
use crate::error::{Error, Result};
use crate::geometry::{
    validate_large_hole_regime, validate_small_hole_regime, ExperimentLayout, RegimeDiagnostic,
};
use crate::mode_space::{conditional_mixture, DensityOperator, Projector, TwoPhotonState};
use crate::quadrature::{simpson_average, WeightProfile};

/// Half-width of the indeterminate band around the midpoint.
pub const GUARD_HALF_WIDTH: f64 = 0.05;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum InferredBit {
    Position,
    Momentum,
    Indeterminate,
}

/// Visibility thresholds for Bob's decision.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct ThresholdPolicy {
    pub v_lo: f64,
    pub v_hi: f64,
}

impl ThresholdPolicy {
    /// Band of `±0.05` around the midpoint between `predicted_position` and 1.
    pub fn guard_band(predicted_position: f64) -> Self {
        let mid = 0.5 * (predicted_position + 1.0);
        Self {
            v_lo: mid - GUARD_HALF_WIDTH,
            v_hi: mid + GUARD_HALF_WIDTH,
        }
    }

    /// Guard band around the predicted position visibility `⟨sin φ⟩_w`.
    pub fn predicted(layout: &ExperimentLayout, weight: &WeightProfile) -> Result<Self> {
        let (lo, hi) = layout.phi_range();
        Ok(Self::guard_band(simpson_average(f64::sin, weight, lo, hi)?))
    }
}

/// Bob's verdict on which measurement Alice made.
pub fn infer_alice_bit(pattern: &IntensityPattern, policy: &ThresholdPolicy) -> InferredBit {
    match pattern.visibility {
        Some(v) if v > policy.v_hi => InferredBit::Momentum,
        Some(v) if v < policy.v_lo => InferredBit::Position,
        _ => InferredBit::Indeterminate,
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct CountRecord {
    pub n_events: u64,
    pub seed: u64,
    /// Bin edges on the screen, one more than the number of bins.
    pub bin_edges_x: Vec<f64>,
    pub per_bin_counts: Vec<u64>,
    pub estimated_visibility: f64,
    pub visibility_ci95: (f64, f64),
    pub resamples: usize,
}

impl CountRecord {
    /// `bin_lo_x_m,bin_hi_x_m,count` rows.
    pub fn to_csv(&self) -> String {
        let mut out = String::from("bin_lo_x_m,bin_hi_x_m,count\n");
        for (i, c) in self.per_bin_counts.iter().enumerate() {
            let _ = writeln!(
                out,
                "{:.16e},{:.16e},{}",
                self.bin_edges_x[i],
                self.bin_edges_x[i + 1],
                c
            );
        }
        out
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct MonteCarloOptions {
    pub bins_per_fringe: usize,
    pub resamples: usize,
}

impl Default for MonteCarloOptions {
    fn default() -> Self {
        Self {
            bins_per_fringe: 20,
            resamples: 1000,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ProtocolResult {
    pub alice_setting: Protocol,
    pub pattern: IntensityPattern,
    #[serde(skip)]
    pub conditional_bob_state: DensityOperator,
    pub inferred_bit: InferredBit,
    pub counts: Option<CountRecord>,
    pub policy: ThresholdPolicy,
    pub regime: RegimeDiagnostic,
}

/// Alice's outcome branches for each setting.
pub fn alice_projectors(setting: Protocol) -> [Projector; 2] {
    match setting {
        Protocol::Position => [Projector::image_p(), Projector::image_q()],
        Protocol::Momentum => [Projector::focal_side(), Projector::focal_down()],
    }
}

/// Two-photon state behind Bob's filter, conditioned on Alice's setting.
pub fn conditional_bob_state(setting: Protocol) -> Result<DensityOperator> {
    let psi = TwoPhotonState::canonical(0.5)?.normalized()?;
    conditional_mixture(&psi, &alice_projectors(setting), &Projector::horizontal_idler())
}

/// Full small-hole run: pattern, conditional state and Bob's verdict.
pub fn run_protocol(
    layout: &ExperimentLayout,
    setting: Protocol,
    weight: &WeightProfile,
    beam: &BeamParameters,
    grid: &ScreenGrid,
) -> Result<ProtocolResult> {
    let regime = validate_small_hole_regime(layout);
    if !regime.passed() {
        return Err(Error::Regime(regime.describe()));
    }
    let pattern = single_count_intensity(layout, setting, weight, beam, grid)?;
    let policy = ThresholdPolicy::predicted(layout, weight)?;
    Ok(ProtocolResult {
        alice_setting: setting,
        inferred_bit: infer_alice_bit(&pattern, &policy),
        conditional_bob_state: conditional_bob_state(setting)?,
        pattern,
        counts: None,
        policy,
        regime,
    })
}

/// Both settings with no diffraction at the hole: `(position, momentum)`.
pub fn large_hole_variant(
    layout: &ExperimentLayout,
    beam: &BeamParameters,
    grid: &ScreenGrid,
) -> Result<(ProtocolResult, ProtocolResult)> {
    let regime = validate_large_hole_regime(layout);
    if !regime.passed() {
        return Err(Error::Regime(regime.describe()));
    }
    let small = validate_small_hole_regime(layout);
    if small.passed() {
        return Err(Error::Regime(format!(
            "layout passes both hole regimes, which must be exclusive: {}",
            small.describe()
        )));
    }
    let policy = ThresholdPolicy::guard_band(0.0);
    let run = |setting| -> Result<ProtocolResult> {
        let pattern = geometric_intensity(layout, setting, beam, grid)?;
        Ok(ProtocolResult {
            alice_setting: setting,
            inferred_bit: infer_alice_bit(&pattern, &policy),
            conditional_bob_state: conditional_bob_state(setting)?,
            pattern,
            counts: None,
            policy,
            regime: regime.clone(),
        })
    };
    Ok((run(Protocol::Position)?, run(Protocol::Momentum)?))
}

/// Grid-cell sums that turn a sample mean of `cos(phase)` into a visibility
/// for patterns of the form `A(1 + V cos phase)` under cell-uniform sampling.
struct CosineMoments {
    c0: f64,
    c1_sample: f64,
    c1_mass: f64,
    c2: f64,
}

impl CosineMoments {
    fn new(pattern: &IntensityPattern) -> Self {
        let (mut c0, mut c1_sample, mut c1_mass, mut c2) = (0.0, 0.0, 0.0, 0.0);
        for w in pattern.samples.windows(2) {
            let dx = w[1].x - w[0].x;
            let dpsi = w[1].phase - w[0].phase;
            let kappa = if dpsi.abs() < 1e-12 {
                w[0].phase.cos()
            } else {
                (w[1].phase.sin() - w[0].phase.sin()) / dpsi
            };
            let cbar = 0.5 * (w[0].phase.cos() + w[1].phase.cos());
            c0 += dx;
            c1_sample += dx * kappa;
            c1_mass += dx * cbar;
            c2 += dx * kappa * cbar;
        }
        Self {
            c0,
            c1_sample,
            c1_mass,
            c2,
        }
    }

    fn visibility(&self, mean_cos: f64) -> f64 {
        let v = (mean_cos * self.c0 - self.c1_sample) / (self.c2 - mean_cos * self.c1_mass);
        if v.is_nan() {
            0.0
        } else {
            v.clamp(0.0, 1.0)
        }
    }
}

/// Sample `n_events` detections from `pattern`, bin them and estimate the
/// visibility with a percentile bootstrap.
pub fn monte_carlo_counts(
    pattern: &IntensityPattern,
    n_events: u64,
    seed: u64,
    options: &MonteCarloOptions,
) -> Result<CountRecord> {
    if n_events < 100 {
        return Err(Error::domain(format!("need at least 100 events, got {n_events}")));
    }
    if options.bins_per_fringe == 0 || options.resamples == 0 {
        return Err(Error::domain("bins per fringe and resamples must be positive"));
    }
    let samples = &pattern.samples;
    if samples.len() < 2 {
        return Err(Error::domain("pattern has fewer than two samples"));
    }
    let mut cumulative = Vec::with_capacity(samples.len());
    let mut total = 0.0;
    cumulative.push(0.0);
    for w in samples.windows(2) {
        total += 0.5 * (w[1].x - w[0].x) * (w[0].intensity + w[1].intensity);
        cumulative.push(total);
    }
    if !(total.is_finite() && total > 0.0) {
        return Err(Error::domain("pattern cannot be normalized"));
    }

    let psi_min = samples[0].phase;
    let psi_max = samples[samples.len() - 1].phase;
    let bin_phase = 2.0 * PI / options.bins_per_fringe as f64;
    let n_bins = (((psi_max - psi_min) / bin_phase) - 1e-9).ceil().max(1.0) as usize;
    let bin_edges_x = (0..=n_bins)
        .map(|j| phase_to_x(pattern, (psi_min + j as f64 * bin_phase).min(psi_max)))
        .collect();

    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut counts = vec![0u64; n_bins];
    let mut cos_sum = vec![0.0f64; n_bins];
    let mut cos_sq = vec![0.0f64; n_bins];
    for _ in 0..n_events {
        let u = rng.random::<f64>() * total;
        let cell = (cumulative.partition_point(|&c| c <= u).max(1) - 1).min(samples.len() - 2);
        let t: f64 = rng.random();
        let psi = samples[cell].phase + t * (samples[cell + 1].phase - samples[cell].phase);
        let bin = (((psi - psi_min) / bin_phase) as usize).min(n_bins - 1);
        let c = psi.cos();
        counts[bin] += 1;
        cos_sum[bin] += c;
        cos_sq[bin] += c * c;
    }

    let moments = CosineMoments::new(pattern);
    let n = n_events as f64;
    let estimated_visibility = moments.visibility(cos_sum.iter().sum::<f64>() / n);

    // Multinomial resampling of bin counts; within a bin, the resampled cos
    // sum is its mean times the count plus a normal term for the spread.
    let stats: Vec<(f64, f64, f64)> = counts
        .iter()
        .zip(&cos_sum)
        .zip(&cos_sq)
        .map(|((&k, &s), &q)| {
            if k == 0 {
                return (0.0, 0.0, 0.0);
            }
            let kf = k as f64;
            let mean = s / kf;
            let var = (q / kf - mean * mean).max(0.0);
            (kf / n, mean, var.sqrt())
        })
        .collect();
    let mut boot = Vec::with_capacity(options.resamples);
    for _ in 0..options.resamples {
        let mut remaining = n_events;
        let mut p_left = 1.0;
        let mut sum = 0.0;
        for &(p, mean, sd) in &stats {
            if remaining == 0 {
                break;
            }
            if p == 0.0 {
                continue;
            }
            let k = if p >= p_left {
                remaining
            } else {
                Binomial::new(remaining, (p / p_left).min(1.0))
                    .map_err(|e| Error::domain(e.to_string()))?
                    .sample(&mut rng)
            };
            remaining -= k;
            p_left -= p;
            if k > 0 {
                let z: f64 = StandardNormal.sample(&mut rng);
                sum += k as f64 * mean + (k as f64).sqrt() * sd * z;
            }
        }
        boot.push(moments.visibility(sum / n));
    }
    boot.sort_by(f64::total_cmp);
    let pick = |q: f64| boot[((q * boot.len() as f64).floor() as usize).min(boot.len() - 1)];
    Ok(CountRecord {
        n_events,
        seed,
        bin_edges_x,
        per_bin_counts: counts,
        estimated_visibility,
        visibility_ci95: (pick(0.025), pick(0.975)),
        resamples: options.resamples,
    })
}

/// Screen position at a given phase, by linear interpolation on the grid.
fn phase_to_x(pattern: &IntensityPattern, psi: f64) -> f64 {
    let s = &pattern.samples;
    let i = s.partition_point(|p| p.phase < psi).clamp(1, s.len() - 1);
    let (a, b) = (s[i - 1], s[i]);
    if b.phase == a.phase {
        return a.x;
    }
    a.x + (b.x - a.x) * (psi - a.phase) / (b.phase - a.phase)
}
