//! Configuration in, dataset directory out.

use std::fs;
use std::path::{Path, PathBuf};

use crate::config::RunConfig;
use crate::dataset::{self, ExportOptions, Manifest, MANIFEST_SCHEMA_VERSION};
use crate::engine::{self, SimulationTrace};
use crate::error::{Error, Result};
use crate::rng::KeyedRng;
use crate::story::{self, StoryTemplate};
use crate::world::{build_world, World};

pub const STORY_FILE: &str = "story.md";

pub struct Outcome {
    pub world: World,
    pub trace: SimulationTrace,
    pub files: Vec<PathBuf>,
    pub manifest: Manifest,
}

/// Build the world and run the epidemic for `cfg`, without writing anything.
pub fn simulate(cfg: &RunConfig, on_day: impl FnMut(u32)) -> Result<(World, SimulationTrace)> {
    cfg.validate()?;
    let world = build_world(&cfg.world, &cfg.scenario, cfg.seed)?;
    let params = cfg.effective_epidemic()?;
    let trace = engine::run_with_progress(&world, &params, cfg.seed, cfg.engine_options(), on_day)?;
    Ok((world, trace))
}

pub fn render_story(cfg: &RunConfig) -> Result<String> {
    let template = match &cfg.story.template {
        Some(path) => StoryTemplate::load(path)?,
        None => StoryTemplate::builtin(),
    };
    story::render_with(
        &template,
        &story::builtin_rules(),
        cfg.scenario.kind,
        cfg.scenario.hint_level,
        cfg.scenario.include_task_question,
    )
}

/// Write tables, story and manifest for an existing run into `dir`.
pub fn write_outputs(cfg: &RunConfig, world: &World, trace: &SimulationTrace, dir: &Path) -> Result<(Vec<PathBuf>, Manifest)> {
    let overwrite = cfg.output.overwrite;
    let story_text = render_story(cfg)?;
    let options = ExportOptions {
        format: cfg.output.format,
        overwrite,
        questionnaire: cfg.survey.enabled.then(|| cfg.survey.noise.clone()),
    };
    let story_path = dir.join(STORY_FILE);
    if !overwrite && story_path.exists() {
        return Err(Error::io(
            &story_path,
            std::io::Error::new(std::io::ErrorKind::AlreadyExists, "refusing to overwrite"),
        ));
    }
    let mut files = dataset::export_bundle(trace, world, &options, dir, &KeyedRng::new(cfg.seed))?;
    fs::write(&story_path, story_text).map_err(|e| Error::io(&story_path, e))?;
    files.push(story_path);
    let manifest = Manifest {
        schema_version: MANIFEST_SCHEMA_VERSION,
        generator: format!("wardsim {}", env!("CARGO_PKG_VERSION")),
        seed: cfg.seed,
        scenario: cfg.scenario.kind.as_str().to_string(),
        config_hash: cfg.content_hash(),
        format: cfg.output.format,
        tables: files
            .iter()
            .filter_map(|p| p.file_name().map(|n| n.to_string_lossy().into_owned()))
            .collect(),
        questionnaire: cfg.survey.enabled,
    };
    files.push(manifest.write(dir, overwrite)?);
    Ok((files, manifest))
}

/// Simulate and write everything into `cfg.output.dir`.
pub fn simulate_to_dir(cfg: &RunConfig, on_day: impl FnMut(u32)) -> Result<Outcome> {
    let dir = cfg.output.dir.clone();
    if !cfg.output.overwrite {
        // Fail before spending time on the run.
        for name in dataset::TABLES.iter().chain([&dataset::MANIFEST, &STORY_FILE]) {
            let p = dir.join(name);
            if p.exists() {
                return Err(Error::io(
                    &p,
                    std::io::Error::new(std::io::ErrorKind::AlreadyExists, "refusing to overwrite"),
                ));
            }
        }
    }
    let (world, trace) = simulate(cfg, on_day)?;
    let (files, manifest) = write_outputs(cfg, &world, &trace, &dir)?;
    Ok(Outcome {
        world,
        trace,
        files,
        manifest,
    })
}
