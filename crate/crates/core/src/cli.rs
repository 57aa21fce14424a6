//! The `run`, `oracle`, `sweep` and `validate` commands.

use std::fs;
use std::path::{Path, PathBuf};

use serde::Serialize;
use serde_json::json;

use crate::config::{ConfigFile, RunConfig};
use crate::correlation::{
    intensity_ratio, reference_forms, single_count_intensity, Protocol, ScreenGrid,
};
use crate::error::{Error, Result};
use crate::geometry::{validate_large_hole_regime, validate_small_hole_regime};
use crate::mode_space::{DensityOperator, Mode};
use crate::oracle::{no_signaling_check, quadrature_average};
use crate::scenarios::{monte_carlo_counts, run_protocol, MonteCarloOptions};

/// Command-line values that take precedence over the config file.
#[derive(Debug, Clone, Default)]
pub struct Overrides {
    pub protocol: Option<Protocol>,
    pub out: Option<PathBuf>,
    pub seed: Option<u64>,
    pub grid: Option<usize>,
}

/// Fold `overrides` into `config`, re-validating the result.
pub fn apply_overrides(config: &RunConfig, overrides: &Overrides) -> Result<RunConfig> {
    let mut file = config.resolved.clone();
    if let Some(p) = overrides.protocol {
        file.run.protocol = Some(p);
    }
    if let Some(o) = &overrides.out {
        file.run.output_dir = Some(o.clone());
    }
    if let Some(s) = overrides.seed {
        file.run.seed = Some(s);
    }
    if let Some(g) = overrides.grid {
        file.screen.grid = Some(g);
    }
    RunConfig::with_file(file)
}

fn write_resolved(config: &RunConfig, dir: &Path) -> Result<PathBuf> {
    let path = dir.join("resolved_config.toml");
    fs::write(&path, config.to_toml()?)?;
    Ok(path)
}

#[derive(Serialize)]
struct DensitySummary {
    basis: &'static str,
    trace: f64,
    single_mode_probability_i_p0: f64,
    single_mode_probability_i_q0: f64,
    /// Nonzero entries as `(row, col, re, im)` over the pair basis
    /// `4·signal + idler`.
    entries: Vec<(usize, usize, f64, f64)>,
}

fn density_summary(rho: &DensityOperator) -> Result<DensitySummary> {
    let idler = rho.partial_trace_signal()?;
    let m = rho.matrix();
    let mut entries = Vec::new();
    for r in 0..m.nrows() {
        for c in 0..m.ncols() {
            let z = m[(r, c)];
            if z.norm() > 0.0 {
                entries.push((r, c, z.re, z.im));
            }
        }
    }
    Ok(DensitySummary {
        basis: "signal_idler",
        trace: rho.trace(),
        single_mode_probability_i_p0: idler.single_mode_probability(Mode::IdlerP0)?,
        single_mode_probability_i_q0: idler.single_mode_probability(Mode::IdlerQ0)?,
        entries,
    })
}

/// Compute one protocol and write its pattern, result and resolved config.
pub fn command_run(config: &RunConfig) -> Result<Vec<PathBuf>> {
    let layout = config.experiment_layout()?;
    let grid = ScreenGrid::new(&layout, config.grid_points)?;
    let mut result = run_protocol(&layout, config.protocol, &config.weight, &config.beam, &grid)?;
    if config.monte_carlo_events > 0 {
        result.counts = Some(monte_carlo_counts(
            &result.pattern,
            config.monte_carlo_events,
            config.seed,
            &MonteCarloOptions::default(),
        )?);
    }

    let dir = &config.output_dir;
    fs::create_dir_all(dir)?;
    let name = config.protocol.name();
    let mut written = Vec::new();

    let csv = dir.join(format!("pattern_{name}.csv"));
    result.pattern.write_csv(&csv)?;
    written.push(csv);

    if let Some(counts) = &result.counts {
        let path = dir.join(format!("counts_{name}.csv"));
        fs::write(&path, counts.to_csv())?;
        written.push(path);
    }

    let summary = json!({
        "protocol": name,
        "config": &config.resolved,
        "pattern": result.pattern.summary(),
        "inferred_bit": result.inferred_bit,
        "policy": result.policy,
        "regime": result.regime,
        "reference_forms": reference_forms(config.layout.phi0),
        "weight_profile": config.weight.name(),
        "conditional_state": density_summary(&result.conditional_bob_state)?,
        "counts": result.counts,
    });
    let path = dir.join(format!("result_{name}.json"));
    fs::write(&path, serde_json::to_string_pretty(&summary)?)?;
    written.push(path);
    written.push(write_resolved(config, dir)?);
    Ok(written)
}

/// Run the no-signaling oracle and write its report.
pub fn command_oracle(config: &RunConfig) -> Result<(PathBuf, bool)> {
    let layout = config.experiment_layout()?;
    let report = no_signaling_check(
        &layout,
        &config.oracle.model,
        config.oracle.tolerance,
        &config.weight,
    );
    let dir = &config.output_dir;
    fs::create_dir_all(dir)?;
    let path = dir.join("no_signaling_report.json");
    fs::write(&path, serde_json::to_string_pretty(&report)?)?;
    write_resolved(config, dir)?;
    Ok((path, report.pass))
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum SweepParameter {
    Phi0Deg,
    Alpha,
    SlitSeparation,
    ScreenDistance,
    SourceHalfSeparation,
}

impl SweepParameter {
    pub const ALL: [SweepParameter; 5] = [
        SweepParameter::Phi0Deg,
        SweepParameter::Alpha,
        SweepParameter::SlitSeparation,
        SweepParameter::ScreenDistance,
        SweepParameter::SourceHalfSeparation,
    ];

    pub fn name(self) -> &'static str {
        match self {
            SweepParameter::Phi0Deg => "phi0_deg",
            SweepParameter::Alpha => "alpha",
            SweepParameter::SlitSeparation => "slit_separation",
            SweepParameter::ScreenDistance => "screen_distance",
            SweepParameter::SourceHalfSeparation => "source_half_separation",
        }
    }

    fn set(self, file: &mut ConfigFile, v: f64) {
        match self {
            SweepParameter::Phi0Deg => file.layout.phi0_deg = Some(v),
            SweepParameter::Alpha => file.beam.alpha = Some(v),
            SweepParameter::SlitSeparation => file.layout.slit_separation = Some(v),
            SweepParameter::ScreenDistance => file.layout.screen_distance = Some(v),
            SweepParameter::SourceHalfSeparation => file.layout.source_half_separation = Some(v),
        }
        // a fixed half-width may not fit the new geometry
        file.layout.screen_half_width = None;
    }
}

impl std::str::FromStr for SweepParameter {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        SweepParameter::ALL
            .into_iter()
            .find(|p| p.name() == s)
            .ok_or_else(|| Error::domain(format!("cannot sweep {s:?}")))
    }
}

/// `n` evenly spaced values from `from` to `to` inclusive.
pub fn sweep_values(from: f64, to: f64, n: usize) -> Result<Vec<f64>> {
    if n < 2 {
        return Err(Error::domain("a sweep needs at least two steps"));
    }
    Ok((0..n)
        .map(|i| from + (to - from) * i as f64 / (n - 1) as f64)
        .collect())
}

fn fmt_opt(v: Option<f64>) -> String {
    v.map_or_else(|| "nan".into(), |x| format!("{x:.16e}"))
}

/// Both patterns at each value of one parameter, as
/// `parameter,visibility_p,visibility_m,flux_ratio`.
pub fn command_sweep(config: &RunConfig, param: SweepParameter, values: &[f64]) -> Result<PathBuf> {
    let mut out = String::from("parameter,visibility_p,visibility_m,flux_ratio\n");
    for &v in values {
        let mut file = config.resolved.clone();
        param.set(&mut file, v);
        let c = RunConfig::with_file(file)?;
        let layout = c.experiment_layout()?;
        let grid = ScreenGrid::new(&layout, c.grid_points)?;
        let p = single_count_intensity(&layout, Protocol::Position, &c.weight, &c.beam, &grid)?;
        let m = single_count_intensity(&layout, Protocol::Momentum, &c.weight, &c.beam, &grid)?;
        let ratio = intensity_ratio(&m, &p).ok();
        out.push_str(&format!(
            "{v:.16e},{},{},{}\n",
            fmt_opt(p.visibility),
            fmt_opt(m.visibility),
            fmt_opt(ratio)
        ));
    }
    fs::create_dir_all(&config.output_dir)?;
    let path = config.output_dir.join(format!("sweep_{}.csv", param.name()));
    fs::write(&path, out)?;
    write_resolved(config, &config.output_dir)?;
    Ok(path)
}

/// Regime diagnostics for the configured layout; `passed` is the small-hole
/// verdict that gates `run`.
pub fn command_validate(config: &RunConfig) -> Result<(serde_json::Value, bool)> {
    let layout = config.experiment_layout()?;
    let small = validate_small_hole_regime(&layout);
    let large = validate_large_hole_regime(&layout);
    let (lo, hi) = layout.phi_range();
    let mean_sin = quadrature_average(f64::sin, &config.weight, lo, hi)?;
    let spec = layout.spec();
    let passed = small.passed();
    let value = json!({
        "small_hole": small,
        "large_hole": large,
        "phi0_deg": spec.phi0.to_degrees(),
        "aperture_phi0_deg": layout.aperture_phi0().to_degrees(),
        "central_minimum_m": layout.central_minimum(),
        "fringe_spacing_m": layout.fringe_spacing(),
        "screen_half_width_m": layout.screen_half_width(),
        "d_prime_m": layout.d_prime(),
        "signal_baseline_m": spec.interferometer_distance + 4.0 * spec.alice_focal_length,
        "weight_profile": config.weight.name(),
        "weight_mean_sin": mean_sin,
        "reference_forms": reference_forms(spec.phi0),
        "run_allowed": passed,
    });
    Ok((value, passed))
}

/// Machine-readable error for stderr.
pub fn error_json(e: &Error) -> serde_json::Value {
    let line = match e {
        Error::Config { line, .. } => *line,
        _ => None,
    };
    json!({
        "error": e.kind(),
        "message": e.to_string(),
        "line": line,
        "exit_code": e.exit_code(),
    })
}
