//! Run configuration: TOML with sections, SI units, angles in degrees.
//!
//! Only `[layout] lambda_pump` is required. Environment variables of the form
//! `DCSIM__SECTION__KEY=value` override file entries; values are read as TOML
//! literals, falling back to plain strings.

use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use crate::correlation::{BeamParameters, Protocol, DEFAULT_GRID_POINTS};
use crate::error::{Error, Result};
use crate::geometry::{ExperimentLayout, LayoutSpec};
use crate::oracle::{BobOptics, ContinuumModel, Marginalization, DEFAULT_MAX_WORK};
use crate::quadrature::WeightProfile;

pub const ENV_PREFIX: &str = "DCSIM__";

const DEFAULT_PHI0_DEG: f64 = 30.0;

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct LayoutSection {
    pub lambda_pump: Option<f64>,
    pub lambda_dc: Option<f64>,
    pub alice_focal_length: Option<f64>,
    pub filter_focal_length: Option<f64>,
    pub filter_lens_radius: Option<f64>,
    pub hole_diameter: Option<f64>,
    pub slit_separation: Option<f64>,
    pub interferometer_distance: Option<f64>,
    pub screen_distance: Option<f64>,
    pub source_half_separation: Option<f64>,
    pub phi0_deg: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub screen_half_width: Option<f64>,
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct BeamSection {
    pub epsilon: Option<f64>,
    pub alpha: Option<f64>,
    pub i0: Option<f64>,
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct WeightSection {
    /// `flat`, `sin2`, `point`, `cos_phi0` or `table`.
    pub profile: Option<String>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub point_deg: Option<f64>,
    /// CSV of `phi_deg,weight` rows.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub table: Option<PathBuf>,
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ScreenSection {
    pub grid: Option<usize>,
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RunSection {
    pub protocol: Option<Protocol>,
    pub seed: Option<u64>,
    /// Monte-Carlo detections per run; 0 disables sampling.
    pub monte_carlo_events: Option<u64>,
    pub output_dir: Option<PathBuf>,
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct OracleSection {
    pub n_source_points: Option<usize>,
    pub n_alice_points: Option<usize>,
    pub include_filter: Option<bool>,
    pub bob_optics: Option<BobOptics>,
    pub marginalization: Option<Marginalization>,
    pub tolerance: Option<f64>,
    pub max_work: Option<usize>,
}

/// The file as written, every field optional except where validated.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ConfigFile {
    #[serde(default)]
    pub layout: LayoutSection,
    #[serde(default)]
    pub beam: BeamSection,
    #[serde(default)]
    pub weight: WeightSection,
    #[serde(default)]
    pub screen: ScreenSection,
    #[serde(default)]
    pub run: RunSection,
    #[serde(default)]
    pub oracle: OracleSection,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct OracleSettings {
    pub model: ContinuumModel,
    pub tolerance: f64,
}

/// A fully validated configuration.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct RunConfig {
    pub layout: LayoutSpec,
    pub beam: BeamParameters,
    pub weight: WeightProfile,
    pub grid_points: usize,
    pub protocol: Protocol,
    pub seed: u64,
    pub monte_carlo_events: u64,
    pub output_dir: PathBuf,
    pub oracle: OracleSettings,
    /// The resolved file, every default written out.
    #[serde(skip)]
    pub resolved: ConfigFile,
}

/// 1-based line of `key = ...`, preferring a match inside `[section]`.
pub fn find_key_line(text: &str, section: Option<&str>, key: &str) -> Option<usize> {
    let mut current = String::new();
    let mut fallback = None;
    for (i, line) in text.lines().enumerate() {
        let t = line.trim();
        if let Some(name) = t.strip_prefix('[').and_then(|r| r.strip_suffix(']')) {
            current = name.trim().to_string();
            continue;
        }
        let Some((lhs, _)) = t.split_once('=') else {
            continue;
        };
        if lhs.trim().trim_matches('"') != key {
            continue;
        }
        match section {
            Some(s) if s == current => return Some(i + 1),
            _ => {
                fallback.get_or_insert(i + 1);
            }
        }
    }
    fallback
}

fn line_of_offset(text: &str, offset: usize) -> usize {
    text[..offset.min(text.len())].matches('\n').count() + 1
}

/// Key named in backticks by a serde message, e.g. "unknown field `lamda`".
fn quoted_key(message: &str) -> Option<&str> {
    let start = message.find('`')? + 1;
    let len = message[start..].find('`')?;
    Some(&message[start..start + len])
}

fn override_value(raw: &str) -> toml::Value {
    match format!("v = {raw}").parse::<toml::Table>() {
        Ok(mut t) => t.remove("v").unwrap_or_else(|| toml::Value::String(raw.into())),
        Err(_) => toml::Value::String(raw.into()),
    }
}

/// Apply `DCSIM__SECTION__KEY` pairs to a parsed table.
pub fn apply_overrides<I>(table: &mut toml::Table, vars: I) -> Result<()>
where
    I: IntoIterator<Item = (String, String)>,
{
    for (name, value) in vars {
        let Some(rest) = name.strip_prefix(ENV_PREFIX) else {
            continue;
        };
        let Some((section, key)) = rest.split_once("__") else {
            return Err(Error::config(
                None,
                format!("override {name} must have the form {ENV_PREFIX}SECTION__KEY"),
            ));
        };
        let (section, key) = (section.to_ascii_lowercase(), key.to_ascii_lowercase());
        let entry = table
            .entry(section.clone())
            .or_insert_with(|| toml::Value::Table(toml::Table::new()));
        let toml::Value::Table(sub) = entry else {
            return Err(Error::config(None, format!("[{section}] is not a table")));
        };
        sub.insert(key, override_value(&value));
    }
    Ok(())
}

/// Parse and validate a config file, applying process environment overrides.
pub fn parse_config(path: &Path) -> Result<RunConfig> {
    let text = std::fs::read_to_string(path)
        .map_err(|e| Error::config(None, format!("cannot read {}: {e}", path.display())))?;
    parse_config_str(&text, path.parent(), std::env::vars())
}

/// Parse config text; relative table paths resolve against `base_dir`.
pub fn parse_config_str<I>(text: &str, base_dir: Option<&Path>, env: I) -> Result<RunConfig>
where
    I: IntoIterator<Item = (String, String)>,
{
    let mut table: toml::Table = text.parse().map_err(|e: toml::de::Error| {
        let line = e.span().map(|s| line_of_offset(text, s.start));
        Error::config(line, e.message().to_string())
    })?;
    apply_overrides(&mut table, env)?;
    let file: ConfigFile = toml::Value::Table(table).try_into().map_err(|e: toml::de::Error| {
        let msg = e.message().to_string();
        let line = quoted_key(&msg).and_then(|k| find_key_line(text, None, k));
        Error::config(line, msg)
    })?;
    resolve(file, text, base_dir)
}

fn positive(text: &str, section: &str, key: &str, v: f64) -> Result<f64> {
    if v.is_finite() && v > 0.0 {
        Ok(v)
    } else {
        Err(Error::config(
            find_key_line(text, Some(section), key),
            format!("[{section}] {key} must be a positive number, got {v}"),
        ))
    }
}

fn read_table(path: &Path) -> Result<Vec<(f64, f64)>> {
    let body = std::fs::read_to_string(path)
        .map_err(|e| Error::config(None, format!("cannot read weight table {}: {e}", path.display())))?;
    let mut knots = Vec::new();
    for (i, line) in body.lines().enumerate() {
        let t = line.trim();
        if t.is_empty() || t.starts_with('#') || t.starts_with("phi") {
            continue;
        }
        let mut it = t.split(',').map(str::trim);
        let parsed = (it.next().map(str::parse::<f64>), it.next().map(str::parse::<f64>));
        match parsed {
            (Some(Ok(p)), Some(Ok(w))) => knots.push((p.to_radians(), w)),
            _ => {
                return Err(Error::config(
                    None,
                    format!("{} line {}: expected phi_deg,weight", path.display(), i + 1),
                ))
            }
        }
    }
    Ok(knots)
}

fn resolve(file: ConfigFile, text: &str, base_dir: Option<&Path>) -> Result<RunConfig> {
    let l = &file.layout;
    let d = LayoutSpec::default();
    let Some(lambda_pump) = l.lambda_pump else {
        return Err(Error::config(
            find_key_line(text, None, "layout"),
            "missing required key [layout] lambda_pump",
        ));
    };
    let lambda_pump = positive(text, "layout", "lambda_pump", lambda_pump)?;
    let get = |key: &str, v: Option<f64>, default: f64| positive(text, "layout", key, v.unwrap_or(default));
    let phi0_deg = l.phi0_deg.unwrap_or(DEFAULT_PHI0_DEG);
    if !(phi0_deg > 0.0 && phi0_deg < 90.0) {
        return Err(Error::config(
            find_key_line(text, Some("layout"), "phi0_deg"),
            format!("[layout] phi0_deg must lie strictly between 0 and 90, got {phi0_deg}"),
        ));
    }
    if let Some(w) = l.screen_half_width {
        positive(text, "layout", "screen_half_width", w)?;
    }
    let layout = LayoutSpec {
        lambda_pump,
        lambda_dc: get("lambda_dc", l.lambda_dc, 2.0 * lambda_pump)?,
        alice_focal_length: get("alice_focal_length", l.alice_focal_length, d.alice_focal_length)?,
        filter_focal_length: get("filter_focal_length", l.filter_focal_length, d.filter_focal_length)?,
        filter_lens_radius: get("filter_lens_radius", l.filter_lens_radius, d.filter_lens_radius)?,
        hole_diameter: get("hole_diameter", l.hole_diameter, d.hole_diameter)?,
        slit_separation: get("slit_separation", l.slit_separation, d.slit_separation)?,
        interferometer_distance: get(
            "interferometer_distance",
            l.interferometer_distance,
            d.interferometer_distance,
        )?,
        screen_distance: get("screen_distance", l.screen_distance, d.screen_distance)?,
        source_half_separation: get(
            "source_half_separation",
            l.source_half_separation,
            d.source_half_separation,
        )?,
        phi0: phi0_deg.to_radians(),
        screen_half_width: l.screen_half_width,
        phi_profile: d.phi_profile,
    };
    if let Err(e) = ExperimentLayout::new(layout.clone()) {
        let msg = e.to_string();
        let keys = [
            "interferometer_distance",
            "slit_separation",
            "screen_half_width",
            "phi0",
        ];
        let line = keys
            .iter()
            .find(|k| msg.contains(*k))
            .and_then(|k| {
                let key = if *k == "phi0" { "phi0_deg" } else { k };
                find_key_line(text, Some("layout"), key)
            });
        return Err(Error::config(line, msg));
    }

    let bd = BeamParameters::default();
    let beam = BeamParameters {
        epsilon: file.beam.epsilon.unwrap_or(bd.epsilon),
        alpha: file.beam.alpha.unwrap_or(bd.alpha),
        i0: file.beam.i0.unwrap_or(bd.i0),
    };
    if let Err(e) = beam.validate() {
        let msg = e.to_string();
        let key = ["epsilon", "alpha", "I0"]
            .into_iter()
            .find(|k| msg.contains(k))
            .map(|k| if k == "I0" { "i0" } else { k });
        return Err(Error::config(key.and_then(|k| find_key_line(text, Some("beam"), k)), msg));
    }

    let w = &file.weight;
    let profile = w.profile.clone().unwrap_or_else(|| "flat".into());
    let weight_line = || find_key_line(text, Some("weight"), "profile");
    let mut table_path = None;
    let weight = match profile.as_str() {
        "flat" => WeightProfile::Flat,
        "sin2" => WeightProfile::SinSquared,
        "point" => {
            let Some(p) = w.point_deg else {
                return Err(Error::config(weight_line(), "profile \"point\" needs point_deg"));
            };
            WeightProfile::PointMass { phi: p.to_radians() }
        }
        "cos_phi0" => WeightProfile::matching_cos_phi0(layout.phi0)
            .map_err(|e| Error::config(weight_line(), e.to_string()))?,
        "table" => {
            let Some(rel) = &w.table else {
                return Err(Error::config(weight_line(), "profile \"table\" needs a table path"));
            };
            let path = match base_dir {
                Some(b) if rel.is_relative() => b.join(rel),
                _ => rel.clone(),
            };
            let path = path.canonicalize().map_err(|e| {
                Error::config(
                    find_key_line(text, Some("weight"), "table"),
                    format!("weight table {}: {e}", path.display()),
                )
            })?;
            let knots = read_table(&path)?;
            table_path = Some(path);
            WeightProfile::tabulated(knots).map_err(|e| Error::config(None, e.to_string()))?
        }
        other => {
            return Err(Error::config(
                weight_line(),
                format!("unknown weight profile {other:?}; expected flat, sin2, point, cos_phi0 or table"),
            ))
        }
    };
    if let WeightProfile::PointMass { phi } = weight {
        if phi < layout.phi0 || phi > std::f64::consts::PI - layout.phi0 {
            return Err(Error::config(
                find_key_line(text, Some("weight"), "point_deg"),
                "point_deg must lie inside [phi0, 180 - phi0]",
            ));
        }
    }

    let grid_points = file.screen.grid.unwrap_or(DEFAULT_GRID_POINTS);
    if grid_points < 3 || grid_points.is_multiple_of(2) {
        return Err(Error::config(
            find_key_line(text, Some("screen"), "grid"),
            format!("[screen] grid must be odd and at least 3, got {grid_points}"),
        ));
    }

    let r = &file.run;
    let protocol = r.protocol.unwrap_or(Protocol::Position);
    let seed = r.seed.unwrap_or(0);
    let monte_carlo_events = r.monte_carlo_events.unwrap_or(0);
    if monte_carlo_events != 0 && monte_carlo_events < 100 {
        return Err(Error::config(
            find_key_line(text, Some("run"), "monte_carlo_events"),
            "monte_carlo_events must be 0 or at least 100",
        ));
    }
    let output_dir = r.output_dir.clone().unwrap_or_else(|| PathBuf::from("out"));

    let o = &file.oracle;
    let od = ContinuumModel::default();
    let model = ContinuumModel {
        n_source_points: o.n_source_points.unwrap_or(od.n_source_points),
        n_alice_points: o.n_alice_points.unwrap_or(od.n_alice_points),
        include_filter: o.include_filter.unwrap_or(false),
        bob_optics: o.bob_optics.unwrap_or(od.bob_optics),
        marginalization: o.marginalization.unwrap_or(od.marginalization),
        alpha: beam.alpha,
        grid_points,
        max_work: o.max_work.unwrap_or(DEFAULT_MAX_WORK),
    };
    if let Err(e) = model.validate() {
        let msg = e.to_string();
        let key = ["n_source_points", "n_alice_points"].into_iter().find(|k| msg.contains(k));
        return Err(Error::config(key.and_then(|k| find_key_line(text, Some("oracle"), k)), msg));
    }
    let tolerance = o.tolerance.unwrap_or(1e-12);
    if !(tolerance.is_finite() && tolerance > 0.0) {
        return Err(Error::config(
            find_key_line(text, Some("oracle"), "tolerance"),
            "[oracle] tolerance must be positive",
        ));
    }

    let resolved = ConfigFile {
        layout: LayoutSection {
            lambda_pump: Some(layout.lambda_pump),
            lambda_dc: Some(layout.lambda_dc),
            alice_focal_length: Some(layout.alice_focal_length),
            filter_focal_length: Some(layout.filter_focal_length),
            filter_lens_radius: Some(layout.filter_lens_radius),
            hole_diameter: Some(layout.hole_diameter),
            slit_separation: Some(layout.slit_separation),
            interferometer_distance: Some(layout.interferometer_distance),
            screen_distance: Some(layout.screen_distance),
            source_half_separation: Some(layout.source_half_separation),
            phi0_deg: Some(phi0_deg),
            screen_half_width: layout.screen_half_width,
        },
        beam: BeamSection {
            epsilon: Some(beam.epsilon),
            alpha: Some(beam.alpha),
            i0: Some(beam.i0),
        },
        weight: WeightSection {
            profile: Some(profile),
            point_deg: w.point_deg,
            table: table_path,
        },
        screen: ScreenSection {
            grid: Some(grid_points),
        },
        run: RunSection {
            protocol: Some(protocol),
            seed: Some(seed),
            monte_carlo_events: Some(monte_carlo_events),
            output_dir: Some(output_dir.clone()),
        },
        oracle: OracleSection {
            n_source_points: Some(model.n_source_points),
            n_alice_points: Some(model.n_alice_points),
            include_filter: Some(model.include_filter),
            bob_optics: Some(model.bob_optics),
            marginalization: Some(model.marginalization),
            tolerance: Some(tolerance),
            max_work: Some(model.max_work),
        },
    };

    Ok(RunConfig {
        layout,
        beam,
        weight,
        grid_points,
        protocol,
        seed,
        monte_carlo_events,
        output_dir,
        oracle: OracleSettings { model, tolerance },
        resolved,
    })
}

impl RunConfig {
    pub fn experiment_layout(&self) -> Result<ExperimentLayout> {
        ExperimentLayout::new(self.layout.clone())
    }

    /// The resolved configuration as TOML, parseable by [`parse_config_str`].
    pub fn to_toml(&self) -> Result<String> {
        toml::to_string(&self.resolved).map_err(|e| Error::config(None, e.to_string()))
    }

    /// Re-resolve after editing the file-level view (used for CLI overrides
    /// and sweeps), so the echo always matches what ran.
    pub fn with_file(file: ConfigFile) -> Result<Self> {
        let text = toml::to_string(&file).map_err(|e| Error::config(None, e.to_string()))?;
        resolve(file, &text, None)
    }
}
