use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use crate::analysis::{HeatmapSpec, SummaryOptions};
use crate::emission::{
    prefix_path, reference, DiameterSource, EmissionProfile, EmpiricalCdf, EventModel, KindMap,
    RespiratoryEventKind, ScheduledEvent, SpeedSource, WeightedSample, DEFAULT_PARTICLES_PER_EVENT,
    DEFAULT_SPEED_SCALE,
};
use crate::error::{Error, Result};
use crate::io::empirical::{load_empirical_csv, Unit};
use crate::scenario::{Agent, RunSettings, Scenario};
use crate::transport::{Environment, JetShape, WATER_DENSITY};
use crate::vec3::Vec3;

/// Where particle diameters come from.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "source", rename_all = "snake_case", deny_unknown_fields)]
pub enum DiameterConfig {
    /// The built-in reference cough table.
    Builtin,
    /// A `value,count` table; relative paths resolve against the config file.
    Csv { path: PathBuf, unit: Unit },
    Inline {
        values: Vec<f64>,
        counts: Vec<f64>,
        unit: Unit,
    },
    /// Log-normal with median in metres and log-space standard deviation.
    LogNormal { median: f64, sigma: f64 },
    /// Every particle has this diameter, m.
    Fixed { value: f64 },
}

/// Where initial particle speeds come from. Distance tables are converted to
/// speeds through the frictionless horizontal throw from `throw_height`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "source", rename_all = "snake_case", deny_unknown_fields)]
pub enum SpeedConfig {
    /// The built-in reference flight-distance table.
    Builtin,
    DistanceCsv {
        path: PathBuf,
        unit: Unit,
    },
    DistanceInline {
        values: Vec<f64>,
        counts: Vec<f64>,
        unit: Unit,
    },
    Bimodal {
        cloud_speed: f64,
        droplet_speed: f64,
        split_diameter: f64,
        relative_spread: f64,
    },
    /// Every particle leaves at this speed, m/s.
    Fixed {
        value: f64,
    },
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct EmissionConfig {
    pub diameters: DiameterConfig,
    pub speeds: SpeedConfig,
    /// Launch height assumed when converting flight distances to speeds, m.
    pub throw_height: f64,
    pub opening_angle_std_deg: f64,
    pub particles_per_event: KindMap<u64>,
    pub speed_scale: KindMap<f64>,
    pub min_diameter_cutoff: f64,
    pub mass_density: f64,
    pub jet_exit_speed: f64,
    pub jet: JetShape,
}

impl Default for EmissionConfig {
    fn default() -> Self {
        EmissionConfig {
            diameters: DiameterConfig::Builtin,
            speeds: SpeedConfig::Builtin,
            throw_height: reference::EMISSION_HEIGHT,
            opening_angle_std_deg: 6.25,
            particles_per_event: DEFAULT_PARTICLES_PER_EVENT,
            speed_scale: DEFAULT_SPEED_SCALE,
            min_diameter_cutoff: 50e-6,
            mass_density: WATER_DENSITY,
            jet_exit_speed: 8.0,
            jet: JetShape::default(),
        }
    }
}

/// Post-processing settings for the output bundle.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct AnalysisConfig {
    pub heatmap: HeatmapSpec,
    /// Radial band edges of the summary, m.
    pub band_edges: Vec<f64>,
}

impl Default for AnalysisConfig {
    fn default() -> Self {
        AnalysisConfig {
            heatmap: HeatmapSpec::default(),
            band_edges: SummaryOptions::default().band_edges,
        }
    }
}

impl AnalysisConfig {
    pub fn summary_options(&self) -> SummaryOptions {
        SummaryOptions {
            band_edges: self.band_edges.clone(),
        }
    }
}

/// Top-level JSON configuration. Every block is optional.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct Config {
    pub environment: Environment,
    pub agents: Vec<Agent>,
    pub emission: EmissionConfig,
    pub run: RunSettings,
    pub analysis: AnalysisConfig,
    /// Directory that relative data paths resolve against; set by
    /// [`load_config`], never serialized.
    #[serde(skip)]
    pub base_dir: PathBuf,
}

impl Default for Config {
    fn default() -> Self {
        Config {
            environment: Environment::default(),
            agents: vec![default_emitter()],
            emission: EmissionConfig::default(),
            run: RunSettings::default(),
            analysis: AnalysisConfig::default(),
            base_dir: PathBuf::new(),
        }
    }
}

/// An infected agent at the origin, facing +y, that coughs once at t = 0.
pub fn default_emitter() -> Agent {
    let mut a = Agent::new(0, Vec3::ZERO, Vec3::Y);
    a.infected = true;
    a.events = EventModel::scripted(vec![ScheduledEvent {
        t: 0.0,
        kind: RespiratoryEventKind::Cough,
    }]);
    a
}

fn weighted(values: &[f64], counts: &[f64], unit: Unit, path: &str) -> Result<WeightedSample> {
    if values.len() != counts.len() {
        return Err(Error::config(path, "values and counts differ in length"));
    }
    let sample = WeightedSample::new(
        values.iter().map(|v| unit.to_si(*v)).collect(),
        counts.to_vec(),
    )
    .map_err(|e| Error::config(path, e.to_string()))?;
    if !(sample.total_weight() > 0.0) {
        return Err(Error::config(path, "total count must be positive"));
    }
    Ok(sample)
}

fn check_positive(path: &str, v: f64) -> Result<()> {
    if v > 0.0 && v.is_finite() {
        Ok(())
    } else {
        Err(Error::config(path, format!("must be positive, got {v}")))
    }
}

impl Config {
    fn data_path(&self, p: &Path) -> PathBuf {
        if p.is_relative() {
            self.base_dir.join(p)
        } else {
            p.to_path_buf()
        }
    }

    fn diameter_source(&self) -> Result<DiameterSource> {
        let path = "emission.diameters";
        Ok(match &self.emission.diameters {
            DiameterConfig::Builtin => DiameterSource::Empirical(EmpiricalCdf::from_weighted(
                &reference::cough_diameters(),
            )?),
            DiameterConfig::Csv { path: p, unit } => DiameterSource::Empirical(
                EmpiricalCdf::from_weighted(&load_empirical_csv(&self.data_path(p), *unit)?)?,
            ),
            DiameterConfig::Inline {
                values,
                counts,
                unit,
            } => DiameterSource::Empirical(EmpiricalCdf::from_weighted(&weighted(
                values, counts, *unit, path,
            )?)?),
            DiameterConfig::LogNormal { median, sigma } => {
                check_positive("emission.diameters.median", *median)?;
                check_positive("emission.diameters.sigma", *sigma)?;
                DiameterSource::LogNormal {
                    median: *median,
                    sigma: *sigma,
                }
            }
            DiameterConfig::Fixed { value } => {
                check_positive("emission.diameters.value", *value)?;
                DiameterSource::Fixed(*value)
            }
        })
    }

    fn speed_source(&self) -> Result<SpeedSource> {
        let h0 = self.emission.throw_height;
        check_positive("emission.throw_height", h0)?;
        let g = self.environment.gravity;
        let from_distances = |s: &WeightedSample| {
            crate::emission::speed_cdf_from_distance_sample(s, h0, g)
                .map_err(|e| prefix_path(e, "emission.speeds"))
        };
        Ok(match &self.emission.speeds {
            SpeedConfig::Builtin => {
                SpeedSource::Empirical(from_distances(&reference::cough_distances())?)
            }
            SpeedConfig::DistanceCsv { path, unit } => SpeedSource::Empirical(from_distances(
                &load_empirical_csv(&self.data_path(path), *unit)?,
            )?),
            SpeedConfig::DistanceInline {
                values,
                counts,
                unit,
            } => SpeedSource::Empirical(from_distances(&weighted(
                values,
                counts,
                *unit,
                "emission.speeds",
            )?)?),
            SpeedConfig::Bimodal {
                cloud_speed,
                droplet_speed,
                split_diameter,
                relative_spread,
            } => SpeedSource::Bimodal {
                cloud_speed: *cloud_speed,
                droplet_speed: *droplet_speed,
                split_diameter: *split_diameter,
                relative_spread: *relative_spread,
            },
            SpeedConfig::Fixed { value } => SpeedSource::Fixed(*value),
        })
    }

    /// Builds and validates the runnable scenario, loading any data files.
    pub fn resolve(&self) -> Result<Scenario> {
        self.environment
            .validate()
            .map_err(|e| prefix_path(e, "environment"))?;
        let e = &self.emission;
        let profile = EmissionProfile {
            diameter: self.diameter_source()?,
            speed: self.speed_source()?,
            opening_angle_std_deg: e.opening_angle_std_deg,
            particles_per_event: e.particles_per_event,
            speed_scale: e.speed_scale,
            min_diameter_cutoff: e.min_diameter_cutoff,
            mass_density: e.mass_density,
            jet_exit_speed: e.jet_exit_speed,
            jet_shape: e.jet,
        };
        let scenario = Scenario {
            environment: self.environment.clone(),
            agents: self.agents.clone(),
            profile,
            run: self.run.clone(),
        };
        scenario.validate()?;
        self.analysis
            .heatmap
            .validate()
            .map_err(|e| prefix_path(e, "analysis.heatmap"))?;
        self.analysis
            .summary_options()
            .validate()
            .map_err(|e| prefix_path(e, "analysis"))?;
        Ok(scenario)
    }

    /// Full validation without running anything.
    pub fn validate(&self) -> Result<()> {
        self.resolve().map(|_| ())
    }

    pub fn to_json(&self) -> Result<String> {
        serde_json::to_string_pretty(self).map_err(|source| Error::Json {
            context: "serializing config".into(),
            source,
        })
    }
}

/// Parses config JSON; schema errors carry the offending field path.
pub fn parse_config(text: &str) -> Result<Config> {
    let de = &mut serde_json::Deserializer::from_str(text);
    serde_path_to_error::deserialize(de).map_err(|err| {
        let path = err.path().to_string();
        let inner = err.into_inner();
        if inner.is_syntax() || inner.is_eof() || inner.is_io() {
            Error::Json {
                context: "parsing config".into(),
                source: inner,
            }
        } else {
            Error::config(path, inner.to_string())
        }
    })
}

/// Reads, parses and validates a config file.
pub fn load_config(path: &Path) -> Result<Config> {
    let text = std::fs::read_to_string(path)
        .map_err(|e| Error::io(format!("reading {}", path.display()), e))?;
    let mut config = parse_config(&text)?;
    config.base_dir = path.parent().map(Path::to_path_buf).unwrap_or_default();
    config.validate()?;
    Ok(config)
}
