use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Parser, Subcommand, ValueEnum};
use log::info;

use wardsim::analysis::{self, AdultFrame, Bundle, RateTable, Stratifier};
use wardsim::config::{self, RunConfig};
use wardsim::pipeline;
use wardsim::scenario::ScenarioKind;
use wardsim::story::{self, StoryTemplate};
use wardsim::verify;
use wardsim::Error;

const EXIT_CHECK_FAILED: u8 = 1;
const EXIT_CONFIG: u8 = 2;
const EXIT_IO: u8 = 3;

#[derive(Parser)]
#[command(name = "wardsim", version, about = "Generate synthetic epidemic datasets for causal-inference exercises")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Write an annotated default configuration.
    Init {
        path: PathBuf,
        #[arg(long, default_value = "mediator")]
        scenario: ScenarioKind,
        #[arg(long, default_value_t = 1)]
        seed: u64,
        /// Replace an existing file.
        #[arg(long)]
        force: bool,
    },
    /// Run the simulation and write the dataset, story and manifest.
    Simulate {
        config: PathBuf,
        #[arg(long, env = config::ENV_OUTPUT_DIR)]
        output_dir: Option<PathBuf>,
        #[arg(long, env = config::ENV_WORKERS)]
        workers: Option<usize>,
        /// Replace existing output files.
        #[arg(long)]
        overwrite: bool,
    },
    /// Compute rate tables from a dataset directory.
    Analyze {
        dataset: PathBuf,
        name: AnalysisName,
        /// Directory for the CSV and JSON tables [default: <dataset>/analysis].
        #[arg(long)]
        out: Option<PathBuf>,
        #[arg(long, default_value_t = 10)]
        age_bin: u32,
        /// Bin width for restaurant visits per week.
        #[arg(long, default_value_t = 1.0)]
        visit_bin: f64,
        /// Only count infected adults (implied by fig9).
        #[arg(long)]
        restrict_infected: bool,
        /// Use the restaurant nearest the workplace instead of home.
        #[arg(long)]
        near_workplace: bool,
        /// Outcome column for `stratified`: infected or vaccinated.
        #[arg(long, default_value = "infected")]
        outcome: String,
        /// Stratifier for `stratified`, as column or column:bin_width. Repeatable.
        #[arg(long = "by")]
        by: Vec<String>,
    },
    /// Render the story text.
    Story {
        #[arg(long, default_value = "mediator")]
        scenario: ScenarioKind,
        #[arg(long, default_value_t = 0)]
        level: u8,
        #[arg(long)]
        task_question: bool,
        #[arg(long)]
        template: Option<PathBuf>,
        /// Write to a file instead of standard output.
        #[arg(long, short)]
        output: Option<PathBuf>,
    },
    /// Simulate several seeds and check the scenario's expected pattern.
    Verify {
        config: PathBuf,
        #[arg(long, default_value_t = 5)]
        seeds: u64,
        /// First seed; defaults to the config's seed.
        #[arg(long)]
        first_seed: Option<u64>,
        #[arg(long, env = config::ENV_WORKERS)]
        workers: Option<usize>,
        /// Keep the generated datasets under this directory.
        #[arg(long)]
        keep: Option<PathBuf>,
    },
}

#[derive(Clone, Copy, ValueEnum)]
enum AnalysisName {
    /// Infection rate by age.
    Fig5,
    /// Infection rate by age and restaurant visits per week.
    Fig6,
    /// Infection rate by short-business-hours status.
    Fig7,
    /// Infection rate by short-business-hours and online-class status.
    Fig8,
    /// Vaccination rate by age among infected adults.
    Fig9,
    /// Vaccination rate by age.
    Fig10,
    /// Any outcome by any stratifiers (see --outcome and --by).
    Stratified,
}

impl AnalysisName {
    fn stem(self) -> &'static str {
        match self {
            AnalysisName::Fig5 => "fig5_rate_by_age",
            AnalysisName::Fig6 => "fig6_rate_by_age_and_visits",
            AnalysisName::Fig7 => "fig7_rate_by_short_hours",
            AnalysisName::Fig8 => "fig8_rate_by_short_hours_and_online",
            AnalysisName::Fig9 => "fig9_vaccination_by_age_infected",
            AnalysisName::Fig10 => "fig10_vaccination_by_age",
            AnalysisName::Stratified => "stratified",
        }
    }
}

enum Failure {
    Checks,
    Error(Error),
}

impl From<Error> for Failure {
    fn from(e: Error) -> Self {
        Failure::Error(e)
    }
}

fn exit_code(e: &Error) -> u8 {
    match e {
        Error::Config { .. } | Error::Template(_) => EXIT_CONFIG,
        _ => EXIT_IO,
    }
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("info"))
        .format_timestamp(None)
        .init();
    let cli = Cli::parse();
    match run(cli.command) {
        Ok(()) => ExitCode::SUCCESS,
        Err(Failure::Checks) => ExitCode::from(EXIT_CHECK_FAILED),
        Err(Failure::Error(e)) => {
            eprintln!("error: {e}");
            ExitCode::from(exit_code(&e))
        }
    }
}

fn run(command: Command) -> Result<(), Failure> {
    match command {
        Command::Init {
            path,
            scenario,
            seed,
            force,
        } => {
            if path.exists() && !force {
                return Err(Error::io(
                    &path,
                    std::io::Error::new(std::io::ErrorKind::AlreadyExists, "use --force to replace it"),
                )
                .into());
            }
            std::fs::write(&path, config::annotated_template(scenario, seed)).map_err(|e| Error::io(&path, e))?;
            info!("wrote {}", path.display());
        }
        Command::Simulate {
            config,
            output_dir,
            workers,
            overwrite,
        } => {
            let mut cfg = RunConfig::load(&config)?;
            if let Some(dir) = output_dir {
                cfg.output.dir = dir;
            }
            if let Some(w) = workers {
                cfg.output.workers = w;
            }
            cfg.output.overwrite |= overwrite;
            cfg.validate()?;
            info!(
                "simulating {} scenario, seed {}, into {}",
                cfg.scenario.kind,
                cfg.seed,
                cfg.output.dir.display()
            );
            let outcome = pipeline::simulate_to_dir(&cfg, |day| {
                if day % 20 == 0 {
                    info!("day {day}/200");
                }
            })?;
            info!("wrote {} files to {}", outcome.files.len(), cfg.output.dir.display());
        }
        Command::Analyze {
            dataset,
            name,
            out,
            age_bin,
            visit_bin,
            restrict_infected,
            near_workplace,
            outcome,
            by,
        } => {
            let bundle = Bundle::open(&dataset)?;
            let stratifiers: Vec<Stratifier> = by.iter().map(|s| Stratifier::parse(s)).collect::<Result<_, _>>()?;
            let needs_visits = matches!(name, AnalysisName::Fig6)
                || stratifiers.iter().any(|s| s.column == "visits_per_week");
            let frame = AdultFrame::load(&bundle, needs_visits)?;
            let table = analyze(
                &frame,
                name,
                age_bin,
                visit_bin,
                restrict_infected,
                near_workplace,
                &outcome,
                &stratifiers,
            )?;
            let out = out.unwrap_or_else(|| dataset.join("analysis"));
            for p in table.write(&out, name.stem())? {
                info!("wrote {}", p.display());
            }
            print!("{}", table.to_csv());
        }
        Command::Story {
            scenario,
            level,
            task_question,
            template,
            output,
        } => {
            let template = match template {
                Some(p) => StoryTemplate::load(&p)?,
                None => StoryTemplate::builtin(),
            };
            let text = story::render_with(&template, &story::builtin_rules(), scenario, level, task_question)?;
            match output {
                Some(p) => std::fs::write(&p, text).map_err(|e| Error::io(&p, e))?,
                None => print!("{text}"),
            }
        }
        Command::Verify {
            config,
            seeds,
            first_seed,
            workers,
            keep,
        } => {
            let mut cfg = RunConfig::load(&config)?;
            if let Some(w) = workers {
                cfg.output.workers = w;
            }
            cfg.validate()?;
            let first = first_seed.unwrap_or(cfg.seed);
            let scratch = tempfile::tempdir().map_err(|e| Error::io(Path::new("."), e))?;
            let mut reports = Vec::new();
            for seed in first..first + seeds {
                let dir = match &keep {
                    Some(k) => k.join(format!("seed-{seed}")),
                    None => scratch.path().join(format!("seed-{seed}")),
                };
                info!("seed {seed}: simulating into {}", dir.display());
                let report = verify::run_seed(&cfg, seed, &dir)?;
                info!("seed {seed}: {} agents ever infected", report.ever_infected);
                for c in &report.checks {
                    info!("seed {seed}: {} {}", if c.passed { "pass" } else { "FAIL" }, c.name);
                }
                if keep.is_none() {
                    let _ = std::fs::remove_dir_all(&dir);
                }
                reports.push(report);
            }
            let summary = verify::summarize(&reports);
            for c in &summary {
                println!("{}", serde_json::to_string(c).expect("check serializes"));
            }
            if summary.iter().any(|c| !c.passed) {
                return Err(Failure::Checks);
            }
        }
    }
    Ok(())
}

#[allow(clippy::too_many_arguments)]
fn analyze(
    frame: &AdultFrame,
    name: AnalysisName,
    age_bin: u32,
    visit_bin: f64,
    restrict_infected: bool,
    near_workplace: bool,
    outcome: &str,
    stratifiers: &[Stratifier],
) -> wardsim::Result<RateTable> {
    match name {
        AnalysisName::Fig5 => analysis::rate_by_age(frame, age_bin),
        AnalysisName::Fig6 => analysis::rate_by_age_and_visits(frame, age_bin, visit_bin),
        AnalysisName::Fig7 => analysis::rate_by_short_hours(frame, near_workplace),
        AnalysisName::Fig8 => analysis::rate_by_short_hours_and_online(frame, near_workplace),
        AnalysisName::Fig9 => analysis::vaccination_rate_by_age(frame, true, age_bin),
        AnalysisName::Fig10 => analysis::vaccination_rate_by_age(frame, restrict_infected, age_bin),
        AnalysisName::Stratified => analysis::stratified_rate(
            frame,
            outcome,
            restrict_infected.then_some("infected"),
            stratifiers,
        ),
    }
}
