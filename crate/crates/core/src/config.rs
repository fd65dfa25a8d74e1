//! Run configuration: one TOML document with world, epidemic, scenario,
//! mobility, survey and output sections.

use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::dataset::{SurveyNoiseParams, TableFormat};
use crate::engine::EngineOptions;
use crate::epidemic::{DayRange, EpidemicParams};
use crate::error::{Error, Result};
use crate::mobility::MobilitySettings;
use crate::scenario::{ScenarioConfig, ScenarioKind};
use crate::world::WorldConfig;

pub const ENV_OUTPUT_DIR: &str = "WARDSIM_OUTPUT_DIR";
pub const ENV_WORKERS: &str = "WARDSIM_WORKERS";

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct OutputConfig {
    pub dir: PathBuf,
    pub format: TableFormat,
    pub overwrite: bool,
    /// Threads for exposure evaluation; output does not depend on it.
    pub workers: usize,
}

impl Default for OutputConfig {
    fn default() -> Self {
        Self {
            dir: PathBuf::from("dataset"),
            format: TableFormat::Wide,
            overwrite: false,
            workers: 1,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct SurveyConfig {
    /// Replace the adult information table with a noisy questionnaire.
    pub enabled: bool,
    pub noise: SurveyNoiseParams,
}

#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct StoryConfig {
    /// Alternative story template; the built-in one is used when unset.
    pub template: Option<PathBuf>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RunConfig {
    pub seed: u64,
    #[serde(default)]
    pub output: OutputConfig,
    #[serde(default)]
    pub world: WorldConfig,
    #[serde(default)]
    pub epidemic: EpidemicParams,
    #[serde(default)]
    pub scenario: ScenarioConfig,
    #[serde(default)]
    pub mobility: MobilitySettings,
    #[serde(default)]
    pub survey: SurveyConfig,
    #[serde(default)]
    pub story: StoryConfig,
}

/// Epidemic parameters that make each scenario's pattern visible at desk
/// scale. Values were chosen by sweeping seeds, not taken from data.
pub fn scenario_epidemic(kind: ScenarioKind) -> EpidemicParams {
    // Long courses spread the epidemic over the whole 200 days, so most
    // adults have weeks of pre-infection visits before they are infected.
    let base = EpidemicParams {
        p_asymptomatic: 0.5,
        p_minor: 0.45,
        p_severe: 0.05,
        p_death: 0.2,
        exposed_days: DayRange { min: 15, max: 25 },
        symptomatic_days: DayRange { min: 15, max: 25 },
        ..EpidemicParams::default()
    };
    match kind {
        ScenarioKind::Mediator => EpidemicParams {
            alpha_home: 0.01,
            alpha_work: 0.00004,
            alpha_school: 0.001,
            alpha_restaurant: 0.00005,
            ..base
        },
        ScenarioKind::Confounder => EpidemicParams {
            alpha_home: 0.03,
            alpha_work: 0.00005,
            alpha_school: 0.0005,
            alpha_restaurant: 0.0,
            ..base
        },
        ScenarioKind::Collider => EpidemicParams {
            alpha_home: 0.02,
            alpha_work: 0.0001,
            alpha_school: 0.0005,
            alpha_restaurant: 0.0001,
            ..base
        },
        ScenarioKind::Custom => EpidemicParams::default(),
    }
}

/// Seats per restaurant in the presets. At 50 (the library default) the
/// seats fill at nearly every meal and cap visits near once a week.
pub const PRESET_RESTAURANT_SEATS: u32 = 300;

impl RunConfig {
    /// Desk-scale defaults for `kind`.
    pub fn preset(kind: ScenarioKind, seed: u64) -> Self {
        Self {
            seed,
            output: OutputConfig::default(),
            world: WorldConfig {
                restaurant_seats: PRESET_RESTAURANT_SEATS,
                ..WorldConfig::desk_scale()
            },
            epidemic: scenario_epidemic(kind),
            scenario: ScenarioConfig::preset(kind),
            mobility: MobilitySettings::default(),
            survey: SurveyConfig::default(),
            story: StoryConfig::default(),
        }
    }

    pub fn from_toml(text: &str) -> Result<Self> {
        let cfg: RunConfig = toml::from_str(text).map_err(|e| {
            let field = e.span().map(|s| spanned_key(text, s)).unwrap_or_default();
            Error::config(&field, e.message().to_string())
        })?;
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        Self::from_toml(&text)
    }

    pub fn to_toml(&self) -> String {
        toml::to_string(self).expect("config serializes")
    }

    pub fn validate(&self) -> Result<()> {
        self.world.validate()?;
        self.epidemic.validate()?;
        self.scenario.validate()?;
        self.survey.noise.validate()?;
        if self.output.workers == 0 {
            return Err(Error::config("output.workers", "must be at least 1"));
        }
        Ok(())
    }

    /// Apply environment overrides for the output directory and worker
    /// count. `lookup` is usually `std::env::var`.
    pub fn apply_env(&mut self, lookup: impl Fn(&str) -> Option<String>) -> Result<()> {
        if let Some(dir) = lookup(ENV_OUTPUT_DIR) {
            self.output.dir = PathBuf::from(dir);
        }
        if let Some(w) = lookup(ENV_WORKERS) {
            self.output.workers = w
                .trim()
                .parse()
                .ok()
                .filter(|&n: &usize| n > 0)
                .ok_or_else(|| Error::config(ENV_WORKERS, format!("expected a positive integer, got {w:?}")))?;
        }
        Ok(())
    }

    /// Epidemic parameters after the scenario's overrides.
    pub fn effective_epidemic(&self) -> Result<EpidemicParams> {
        self.scenario.configure_params(&self.epidemic)
    }

    pub fn engine_options(&self) -> EngineOptions {
        EngineOptions {
            workers: self.output.workers,
            mobility: self.mobility,
        }
    }

    /// SHA-256 over everything that affects the generated data. Output
    /// location, overwrite flag and worker count are left out.
    pub fn content_hash(&self) -> String {
        let mut canonical = self.clone();
        canonical.output.dir = PathBuf::new();
        canonical.output.overwrite = false;
        canonical.output.workers = 1;
        let json = serde_json::to_vec(&canonical).expect("config serializes");
        hex::encode(Sha256::digest(&json))
    }
}

/// Best-effort dotted key for the line containing `span`.
fn spanned_key(text: &str, span: std::ops::Range<usize>) -> String {
    let start = span.start.min(text.len());
    let mut section = String::new();
    for line in text[..start].lines() {
        let t = line.trim();
        if t.starts_with('[') && t.ends_with(']') {
            section = t.trim_matches(|c| c == '[' || c == ']').trim().to_string();
        }
    }
    let line_start = text[..start].rfind('\n').map_or(0, |i| i + 1);
    let line = text[line_start..].lines().next().unwrap_or("");
    let key = line.split('=').next().unwrap_or("").trim();
    match (section.is_empty(), key.is_empty() || key.starts_with('[')) {
        (_, true) if !section.is_empty() => section,
        (true, _) => key.to_string(),
        (false, _) => format!("{section}.{key}"),
    }
}

fn comment_for(key: &str) -> Option<&'static str> {
    Some(match key {
        "seed" => "Master seed. Every random choice in the run is a pure function of it.",
        "output.dir" => "Dataset directory. Overridden by WARDSIM_OUTPUT_DIR.",
        "output.format" => "\"wide\" (one column per agent) or \"long\" (one row per agent observation).",
        "output.overwrite" => "Refuse to replace existing tables unless true.",
        "output.workers" => "Worker threads. Overridden by WARDSIM_WORKERS. Results do not depend on it.",
        "world.scale_factor" => "Invented default: 0.1 is desk scale; 1.0 reproduces the full ward counts below.",
        "world.min_adults_per_home" => "Invented default.",
        "world.restaurant_seats" => "Invented default: seats per restaurant.",
        "world.hospital_beds" => "Invented default: beds per hospital.",
        "world.facilities_file" => "Optional CSV of real hospitals and schools: name,latitude,longitude,kind[,beds].",
        "world.adult_age" => "Invented default: adult ages, inclusive.",
        "world.child_age" => "Invented default: child ages, inclusive.",
        "world.adult_body" => "Invented default: normal height (cm) and weight (kg) distributions.",
        "world.child_body" => "Invented default.",
        "world.bounding_box" => "Kanazawa-ku, Yokohama (approximate).",
        "world.counts" => "Entity counts at scale 1.0.",
        "epidemic.alpha_home" => "Invented default: hourly per-contact transmission probability at home.",
        "epidemic.alpha_work" => "Invented default.",
        "epidemic.alpha_school" => "Invented default.",
        "epidemic.alpha_restaurant" => "Invented default. Forced to 0 in the confounder scenario.",
        "epidemic.gamma" => "Age exponent. Forced to 0 for mediator and confounder; collider uses scenario.collider.gamma.",
        "epidemic.p_asymptomatic" => "Invented default: branch probabilities after the exposed state; must sum to 1.",
        "epidemic.p_minor" => "Invented default.",
        "epidemic.p_severe" => "Invented default.",
        "epidemic.p_death" => "Invented default: probability that a severe case dies.",
        "epidemic.exposed_days" => "Invented default: days spent exposed, inclusive range.",
        "epidemic.symptomatic_days" => "Invented default: days spent in the symptomatic or asymptomatic state.",
        "scenario.kind" => "mediator, confounder, collider or custom.",
        "scenario.hint_level" => "Story hints: 0 none, 1 weaker, 2 stronger.",
        "scenario.include_task_question" => "Append the scenario's task question to the story.",
        "scenario.vaccination_probability" => "Invented default: vaccination probability outside the collider scenario (0 keeps mediator and confounder runs unvaccinated).",
        "scenario.mediator" => "Invented defaults: restaurant-visit propensity falls linearly with age to a floor.",
        "scenario.confounder" => "Invented defaults: a grid of regions, each with an alertness level 0-2 driving both statuses.",
        "scenario.collider" => "Invented defaults: independent vaccination and an age exponent above 0.",
        "scenario.custom" => "Invented defaults: uniform statuses for hand-built scenarios.",
        "mobility.holiday_afternoon_at_work" => "Invented default: keep everyone home on holiday afternoons.",
        "survey.enabled" => "Write questionnaire.csv and withhold adult_information.csv.",
        "survey.noise.height_granularity_cm" => "Invented default: heights rounded to a multiple of this.",
        "survey.noise.weight_underreport_max" => "Invented default: weights shrunk by up to this fraction.",
        "survey.noise.symptom_day_error_max" => "Invented default: symptom days shifted by up to this many days.",
        "survey.noise.omission_probability" => "Invented default: chance each of height, weight, symptom days is left blank.",
        "story.template" => "Path to a custom story template (see the built-in one for the format).",
        _ => return None,
    })
}

/// Annotated config text for `kind`: the preset with a comment on each
/// setting saying where the value comes from.
pub fn annotated_template(kind: ScenarioKind, seed: u64) -> String {
    let body = RunConfig::preset(kind, seed).to_toml();
    let mut out = format!(
        "# wardsim run configuration ({} scenario).\n# Values marked \"invented default\" are modelling choices, not measurements.\n\n",
        kind.as_str()
    );
    let mut section = String::new();
    for line in body.lines() {
        let t = line.trim();
        let key = if t.starts_with('[') {
            section = t.trim_matches(|c| c == '[' || c == ']').to_string();
            Some(section.clone())
        } else if let Some((k, _)) = t.split_once('=') {
            let k = k.trim();
            Some(if section.is_empty() {
                k.to_string()
            } else {
                format!("{section}.{k}")
            })
        } else {
            None
        };
        if let Some(c) = key.as_deref().and_then(comment_for) {
            if t.starts_with('[') && !out.ends_with("\n\n") {
                out.push('\n');
            }
            out.push_str("# ");
            out.push_str(c);
            out.push('\n');
        }
        out.push_str(line);
        out.push('\n');
    }
    out
}
