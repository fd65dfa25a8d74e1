//! Learner-facing dataset export: eleven CSV tables, an optional noisy
//! hospital questionnaire, and a manifest.
//!
//! Place and status tables come in two shapes. `wide` has one row per
//! date (and hour) and one column per agent, in ascending agent order.
//! `long` has one row per agent observation.

use std::fs;
use std::io::Write;
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use crate::calendar::{self, HOURS_PER_DAY, SIM_DAYS};
use crate::engine::SimulationTrace;
use crate::epidemic::InfectionState;
use crate::error::{Error, Result};
use crate::place::{Place, PlaceCode};
use crate::rng::{KeyedRng, Stream};
use crate::world::World;

pub const ADULT_INFORMATION: &str = "adult_information.csv";
pub const CHILD_INFORMATION: &str = "child_information.csv";
pub const HOME_INFORMATION: &str = "home_information.csv";
pub const WORKPLACE_INFORMATION: &str = "workplace_information.csv";
pub const RESTAURANT_INFORMATION: &str = "restaurant_information.csv";
pub const SCHOOL_INFORMATION: &str = "school_information.csv";
pub const HOSPITAL_INFORMATION: &str = "hospital_information.csv";
pub const ADULT_STATUS: &str = "infection_status_of_adult.csv";
pub const CHILD_STATUS: &str = "infection_status_of_child.csv";
pub const ADULT_PLACE: &str = "adult_place.csv";
pub const CHILD_PLACE: &str = "child_place.csv";
pub const QUESTIONNAIRE: &str = "questionnaire.csv";
pub const MANIFEST: &str = "manifest.json";

pub const TABLES: [&str; 11] = [
    ADULT_INFORMATION,
    CHILD_INFORMATION,
    HOME_INFORMATION,
    WORKPLACE_INFORMATION,
    RESTAURANT_INFORMATION,
    SCHOOL_INFORMATION,
    HOSPITAL_INFORMATION,
    ADULT_STATUS,
    CHILD_STATUS,
    ADULT_PLACE,
    CHILD_PLACE,
];

pub const ADULT_COLUMNS: [&str; 11] = [
    "name",
    "home",
    "vaccination",
    "workplace",
    "nearest_restaurant_to_workplace",
    "second_nearest_restaurant_to_workplace",
    "third_nearest_restaurant_to_workplace",
    "age",
    "sex",
    "height",
    "weight",
];
pub const CHILD_COLUMNS: [&str; 7] = ["name", "home", "school", "age", "sex", "height", "weight"];
pub const HOME_COLUMNS: [&str; 9] = [
    "name",
    "latitude",
    "longitude",
    "nearest_hospital_to_home",
    "second_nearest_hospital_to_home",
    "third_nearest_hospital_to_home",
    "nearest_restaurant_to_home",
    "second_nearest_restaurant_to_home",
    "third_nearest_restaurant_to_home",
];
pub const WORKPLACE_COLUMNS: [&str; 4] = ["name", "latitude", "longitude", "number_of_employees"];
pub const RESTAURANT_COLUMNS: [&str; 5] = [
    "name",
    "latitude",
    "longitude",
    "number_of_seats",
    "short_business_hours_status",
];
pub const SCHOOL_COLUMNS: [&str; 4] = ["name", "latitude", "longitude", "online_class_status"];
pub const HOSPITAL_COLUMNS: [&str; 4] = ["name", "latitude", "longitude", "number_of_beds"];
pub const LONG_STATUS_COLUMNS: [&str; 3] = ["date", "agent", "status"];
pub const LONG_PLACE_COLUMNS: [&str; 4] = ["date", "hour", "agent", "place"];
pub const QUESTIONNAIRE_COLUMNS: [&str; 7] = ["name", "home", "age", "sex", "height", "weight", "symptom_days"];

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize, Default)]
#[serde(rename_all = "lowercase")]
pub enum TableFormat {
    #[default]
    Wide,
    Long,
}

impl TableFormat {
    pub fn as_str(self) -> &'static str {
        match self {
            TableFormat::Wide => "wide",
            TableFormat::Long => "long",
        }
    }
}

impl std::str::FromStr for TableFormat {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "wide" => Ok(TableFormat::Wide),
            "long" => Ok(TableFormat::Long),
            _ => Err(Error::config("output.format", format!("expected wide or long, got {s:?}"))),
        }
    }
}

/// How respondents distort the hospital questionnaire.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct SurveyNoiseParams {
    /// Heights are reported rounded to a multiple of this (cm); 0 disables.
    pub height_granularity_cm: f64,
    /// Reported weight is `weight * (1 - u * max)` with `u ~ U[0, 1)`.
    pub weight_underreport_max: f64,
    /// Symptom days are shifted by a uniform integer in `[-k, k]`.
    pub symptom_day_error_max: u32,
    /// Independent blanking probability for height, weight and symptom days.
    pub omission_probability: f64,
}

impl Default for SurveyNoiseParams {
    fn default() -> Self {
        Self {
            height_granularity_cm: 5.0,
            weight_underreport_max: 0.1,
            symptom_day_error_max: 2,
            omission_probability: 0.05,
        }
    }
}

impl SurveyNoiseParams {
    pub fn none() -> Self {
        Self {
            height_granularity_cm: 0.0,
            weight_underreport_max: 0.0,
            symptom_day_error_max: 0,
            omission_probability: 0.0,
        }
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.height_granularity_cm.is_finite() && self.height_granularity_cm >= 0.0) {
            return Err(Error::config("survey.noise.height_granularity_cm", "must be nonnegative"));
        }
        if !(0.0..=1.0).contains(&self.weight_underreport_max) {
            return Err(Error::config("survey.noise.weight_underreport_max", "must lie in [0, 1]"));
        }
        if !(0.0..=1.0).contains(&self.omission_probability) {
            return Err(Error::config("survey.noise.omission_probability", "must be a probability"));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq, Default)]
pub struct ExportOptions {
    pub format: TableFormat,
    pub overwrite: bool,
    /// When set, write the questionnaire and withhold the adult information table.
    pub questionnaire: Option<SurveyNoiseParams>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Manifest {
    pub schema_version: u32,
    pub generator: String,
    pub seed: u64,
    pub scenario: String,
    pub config_hash: String,
    pub format: TableFormat,
    pub tables: Vec<String>,
    pub questionnaire: bool,
}

pub const MANIFEST_SCHEMA_VERSION: u32 = 1;

impl Manifest {
    pub fn read(dir: &Path) -> Result<Manifest> {
        let path = dir.join(MANIFEST);
        let text = fs::read_to_string(&path).map_err(|e| Error::io(&path, e))?;
        serde_json::from_str(&text).map_err(|e| Error::Input(format!("{}: {e}", path.display())))
    }

    pub fn write(&self, dir: &Path, overwrite: bool) -> Result<PathBuf> {
        let path = dir.join(MANIFEST);
        refuse_existing(&path, overwrite)?;
        let mut text = serde_json::to_string_pretty(self).expect("manifest serializes");
        text.push('\n');
        fs::write(&path, text).map_err(|e| Error::io(&path, e))?;
        Ok(path)
    }
}

fn refuse_existing(path: &Path, overwrite: bool) -> Result<()> {
    if !overwrite && path.exists() {
        return Err(Error::io(
            path,
            std::io::Error::new(
                std::io::ErrorKind::AlreadyExists,
                "refusing to overwrite without the overwrite flag",
            ),
        ));
    }
    Ok(())
}

fn writer(path: &Path) -> Result<csv::Writer<std::io::BufWriter<fs::File>>> {
    let file = fs::File::create(path).map_err(|e| Error::io(path, e))?;
    Ok(csv::WriterBuilder::new().from_writer(std::io::BufWriter::with_capacity(1 << 20, file)))
}

struct Table {
    path: PathBuf,
    inner: csv::Writer<std::io::BufWriter<fs::File>>,
}

impl Table {
    fn create(path: PathBuf, header: &[&str]) -> Result<Self> {
        let mut inner = writer(&path)?;
        inner.write_record(header).map_err(|e| Error::csv(&path, e))?;
        Ok(Self { path, inner })
    }

    fn row<I, T>(&mut self, fields: I) -> Result<()>
    where
        I: IntoIterator<Item = T>,
        T: AsRef<[u8]>,
    {
        self.inner.write_record(fields).map_err(|e| Error::csv(&self.path, e))
    }

    fn finish(mut self) -> Result<PathBuf> {
        self.inner.flush().map_err(|e| Error::io(&self.path, e))?;
        let buf = self
            .inner
            .into_inner()
            .map_err(|e| Error::io(&self.path, std::io::Error::other(e.to_string())))?;
        buf.into_inner()
            .map_err(|e| Error::io(&self.path, e.into_error()))?
            .flush()
            .map_err(|e| Error::io(&self.path, e))?;
        Ok(self.path)
    }
}

fn coord(v: f64) -> String {
    format!("{v:.6}")
}

fn one_decimal(v: f64) -> String {
    format!("{v:.1}")
}

fn nth_name<'a, T>(ids: &[T], i: usize, name: impl Fn(&T) -> &'a str) -> &'a str {
    ids.get(i).map(name).unwrap_or("")
}

fn yes_no(b: bool) -> &'static str {
    if b {
        "yes"
    } else {
        "no"
    }
}

/// Write every table for `trace` into `out_dir`. Returns the files written.
pub fn export_bundle(
    trace: &SimulationTrace,
    world: &World,
    options: &ExportOptions,
    out_dir: &Path,
    rng: &KeyedRng,
) -> Result<Vec<PathBuf>> {
    if trace.n_adults() != world.adults.len() || trace.n_children() != world.children.len() {
        return Err(Error::Consistency("trace and world disagree on population".into()));
    }
    if trace.days_recorded() != SIM_DAYS as usize {
        return Err(Error::Consistency("trace is incomplete".into()));
    }
    if let Some(noise) = &options.questionnaire {
        noise.validate()?;
    }
    fs::create_dir_all(out_dir).map_err(|e| Error::io(out_dir, e))?;
    let mut planned: Vec<&str> = TABLES.to_vec();
    if options.questionnaire.is_some() {
        planned.retain(|t| *t != ADULT_INFORMATION);
        planned.push(QUESTIONNAIRE);
    }
    for name in &planned {
        refuse_existing(&out_dir.join(name), options.overwrite)?;
    }

    let mut written = Vec::new();
    if options.questionnaire.is_none() {
        written.push(write_adults(world, out_dir)?);
    }
    written.push(write_children(world, out_dir)?);
    written.push(write_homes(world, out_dir)?);
    written.push(write_workplaces(world, out_dir)?);
    written.push(write_restaurants(world, out_dir)?);
    written.push(write_schools(world, out_dir)?);
    written.push(write_hospitals(world, out_dir)?);

    let adult_names: Vec<&str> = world.adults.iter().map(|a| a.name.as_str()).collect();
    let child_names: Vec<&str> = world.children.iter().map(|c| c.name.as_str()).collect();
    let na = world.adults.len();
    let n = trace.n_agents();
    written.push(write_status(trace, &adult_names, 0..na, options.format, &out_dir.join(ADULT_STATUS))?);
    written.push(write_status(trace, &child_names, na..n, options.format, &out_dir.join(CHILD_STATUS))?);
    written.push(write_places(trace, world, &adult_names, 0..na, options.format, &out_dir.join(ADULT_PLACE))?);
    written.push(write_places(trace, world, &child_names, na..n, options.format, &out_dir.join(CHILD_PLACE))?);

    if let Some(noise) = &options.questionnaire {
        written.push(export_questionnaire(world, trace, noise, rng, &out_dir.join(QUESTIONNAIRE))?);
    }
    Ok(written)
}

fn write_adults(world: &World, dir: &Path) -> Result<PathBuf> {
    let mut t = Table::create(dir.join(ADULT_INFORMATION), &ADULT_COLUMNS)?;
    for a in &world.adults {
        let rest = |i| nth_name(&a.nearest_restaurants_work, i, |r| &world.restaurants[r.index()].name);
        t.row([
            a.name.as_str(),
            &world.homes[a.home.index()].name,
            yes_no(a.vaccinated),
            &world.workplaces[a.workplace.index()].name,
            rest(0),
            rest(1),
            rest(2),
            &a.age.to_string(),
            a.sex.as_str(),
            &one_decimal(a.height_cm),
            &one_decimal(a.weight_kg),
        ])?;
    }
    t.finish()
}

fn write_children(world: &World, dir: &Path) -> Result<PathBuf> {
    let mut t = Table::create(dir.join(CHILD_INFORMATION), &CHILD_COLUMNS)?;
    for c in &world.children {
        t.row([
            c.name.as_str(),
            &world.homes[c.home.index()].name,
            &world.schools[c.school.index()].name,
            &c.age.to_string(),
            c.sex.as_str(),
            &one_decimal(c.height_cm),
            &one_decimal(c.weight_kg),
        ])?;
    }
    t.finish()
}

fn write_homes(world: &World, dir: &Path) -> Result<PathBuf> {
    let mut t = Table::create(dir.join(HOME_INFORMATION), &HOME_COLUMNS)?;
    for h in &world.homes {
        let hosp = |i| nth_name(&h.nearest_hospitals, i, |x| &world.hospitals[x.index()].name);
        let rest = |i| nth_name(&h.nearest_restaurants, i, |x| &world.restaurants[x.index()].name);
        t.row([
            h.name.as_str(),
            &coord(h.location.latitude),
            &coord(h.location.longitude),
            hosp(0),
            hosp(1),
            hosp(2),
            rest(0),
            rest(1),
            rest(2),
        ])?;
    }
    t.finish()
}

fn write_workplaces(world: &World, dir: &Path) -> Result<PathBuf> {
    let mut t = Table::create(dir.join(WORKPLACE_INFORMATION), &WORKPLACE_COLUMNS)?;
    for w in &world.workplaces {
        t.row([
            w.name.clone(),
            coord(w.location.latitude),
            coord(w.location.longitude),
            w.employee_count.to_string(),
        ])?;
    }
    t.finish()
}

fn write_restaurants(world: &World, dir: &Path) -> Result<PathBuf> {
    let mut t = Table::create(dir.join(RESTAURANT_INFORMATION), &RESTAURANT_COLUMNS)?;
    for r in &world.restaurants {
        t.row([
            r.name.clone(),
            coord(r.location.latitude),
            coord(r.location.longitude),
            r.seats.to_string(),
            r.short_hours_status.as_str().to_string(),
        ])?;
    }
    t.finish()
}

fn write_schools(world: &World, dir: &Path) -> Result<PathBuf> {
    let mut t = Table::create(dir.join(SCHOOL_INFORMATION), &SCHOOL_COLUMNS)?;
    for s in &world.schools {
        t.row([
            s.name.clone(),
            coord(s.location.latitude),
            coord(s.location.longitude),
            s.online_class_status.as_str().to_string(),
        ])?;
    }
    t.finish()
}

fn write_hospitals(world: &World, dir: &Path) -> Result<PathBuf> {
    let mut t = Table::create(dir.join(HOSPITAL_INFORMATION), &HOSPITAL_COLUMNS)?;
    for h in &world.hospitals {
        t.row([
            h.name.clone(),
            coord(h.location.latitude),
            coord(h.location.longitude),
            h.beds.to_string(),
        ])?;
    }
    t.finish()
}

fn write_status(
    trace: &SimulationTrace,
    names: &[&str],
    agents: std::ops::Range<usize>,
    format: TableFormat,
    path: &Path,
) -> Result<PathBuf> {
    match format {
        TableFormat::Wide => {
            let header: Vec<&str> = std::iter::once("date").chain(names.iter().copied()).collect();
            let mut t = Table::create(path.to_path_buf(), &header)?;
            for day in 0..SIM_DAYS {
                let date = calendar::date_of(day).to_string();
                let states = &trace.states_on(day)[agents.clone()];
                t.row(std::iter::once(date.as_str()).chain(states.iter().map(|s| s.as_str())))?;
            }
            t.finish()
        }
        TableFormat::Long => {
            let mut t = Table::create(path.to_path_buf(), &LONG_STATUS_COLUMNS)?;
            for day in 0..SIM_DAYS {
                let date = calendar::date_of(day).to_string();
                let states = &trace.states_on(day)[agents.clone()];
                for (name, s) in names.iter().zip(states) {
                    t.row([date.as_str(), name, s.as_str()])?;
                }
            }
            t.finish()
        }
    }
}

fn write_places(
    trace: &SimulationTrace,
    world: &World,
    names: &[&str],
    agents: std::ops::Range<usize>,
    format: TableFormat,
    path: &Path,
) -> Result<PathBuf> {
    let name_of = |code: PlaceCode| Place::unpack(code).name(world);
    let mut t = match format {
        TableFormat::Wide => {
            let header: Vec<&str> = ["date", "hour"].into_iter().chain(names.iter().copied()).collect();
            Table::create(path.to_path_buf(), &header)?
        }
        TableFormat::Long => Table::create(path.to_path_buf(), &LONG_PLACE_COLUMNS)?,
    };
    let hours: Vec<String> = (0..HOURS_PER_DAY).map(|h| h.to_string()).collect();
    for day in 0..SIM_DAYS {
        let date = calendar::date_of(day).to_string();
        for hour in 0..HOURS_PER_DAY {
            let places = &trace.places_at_step(day * HOURS_PER_DAY + hour)[agents.clone()];
            let hour = hours[hour as usize].as_str();
            match format {
                TableFormat::Wide => {
                    t.row([date.as_str(), hour].into_iter().chain(places.iter().map(|&c| name_of(c))))?;
                }
                TableFormat::Long => {
                    for (name, &c) in names.iter().zip(places) {
                        t.row([date.as_str(), hour, name, name_of(c)])?;
                    }
                }
            }
        }
    }
    t.finish()
}

fn round_to_multiple(v: f64, granularity: f64) -> f64 {
    if granularity > 0.0 {
        (v / granularity).round() * granularity
    } else {
        v
    }
}

/// Hospital questionnaire: one row per adult who ever had symptoms, with
/// rounded heights, underreported weights, misreported symptom days and
/// random omissions.
pub fn export_questionnaire(
    world: &World,
    trace: &SimulationTrace,
    noise: &SurveyNoiseParams,
    rng: &KeyedRng,
    path: &Path,
) -> Result<PathBuf> {
    noise.validate()?;
    let na = world.adults.len();
    let mut symptom_days = vec![0u32; na];
    for day in 0..trace.days_recorded() as u32 {
        for (count, s) in symptom_days.iter_mut().zip(&trace.states_on(day)[..na]) {
            if s.is_symptomatic() {
                *count += 1;
            }
        }
    }
    let mut t = Table::create(path.to_path_buf(), &QUESTIONNAIRE_COLUMNS)?;
    for (i, a) in world.adults.iter().enumerate() {
        let days = symptom_days[i];
        if days == 0 {
            continue;
        }
        let key = [i as u64];
        let omit = |field: u64| rng.chance(Stream::SurveyOmission, &[i as u64, field], noise.omission_probability);
        let height = round_to_multiple(a.height_cm, noise.height_granularity_cm);
        let shrink = rng.uniform(Stream::SurveyWeight, &key) * noise.weight_underreport_max;
        let weight = a.weight_kg * (1.0 - shrink);
        let k = noise.symptom_day_error_max;
        let offset = rng.int_inclusive(Stream::SurveySymptomDays, &key, 0, 2 * k) as i64 - k as i64;
        let reported_days = (days as i64 + offset).max(0);
        let blank_or = |field, s: String| if omit(field) { String::new() } else { s };
        t.row([
            a.name.clone(),
            world.homes[a.home.index()].name.clone(),
            a.age.to_string(),
            a.sex.as_str().to_string(),
            blank_or(0, one_decimal(height)),
            blank_or(1, one_decimal(weight)),
            blank_or(2, reported_days.to_string()),
        ])?;
    }
    t.finish()
}

/// Shape of a per-agent table, for conversions.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum AgentTable {
    Status,
    Place,
}

impl AgentTable {
    fn key_columns(self) -> usize {
        match self {
            AgentTable::Status => 1,
            AgentTable::Place => 2,
        }
    }

    fn long_header(self) -> &'static [&'static str] {
        match self {
            AgentTable::Status => &LONG_STATUS_COLUMNS,
            AgentTable::Place => &LONG_PLACE_COLUMNS,
        }
    }
}

fn reader(path: &Path) -> Result<csv::Reader<fs::File>> {
    csv::ReaderBuilder::new()
        .has_headers(true)
        .from_path(path)
        .map_err(|e| Error::csv(path, e))
}

/// Rewrite a wide per-agent table as a long one.
pub fn wide_to_long(kind: AgentTable, wide: &Path, long: &Path) -> Result<()> {
    let mut r = reader(wide)?;
    let header = r.byte_headers().map_err(|e| Error::csv(wide, e))?.clone();
    let keys = kind.key_columns();
    let mut t = Table::create(long.to_path_buf(), kind.long_header())?;
    let mut rec = csv::ByteRecord::new();
    while r.read_byte_record(&mut rec).map_err(|e| Error::csv(wide, e))? {
        for (name, value) in header.iter().zip(rec.iter()).skip(keys) {
            let mut row: Vec<&[u8]> = rec.iter().take(keys).collect();
            row.push(name);
            row.push(value);
            t.row(row)?;
        }
    }
    t.finish()?;
    Ok(())
}

/// Rewrite a long per-agent table as a wide one. Agent columns keep their
/// order of first appearance. Rows are written as they complete, so only
/// one wide row is held in memory.
pub fn long_to_wide(kind: AgentTable, long: &Path, wide: &Path) -> Result<()> {
    let mut r = reader(long)?;
    let keys = kind.key_columns();
    let mut w = writer(wide)?;
    let mut agents: Vec<Vec<u8>> = Vec::new();
    let mut key: Option<Vec<Vec<u8>>> = None;
    let mut values: Vec<Vec<u8>> = Vec::new();
    let mut header_written = false;
    let mut flush = |key: &[Vec<u8>], values: &[Vec<u8>], agents: &[Vec<u8>], header_written: &mut bool| -> Result<()> {
        if !*header_written {
            let mut header: Vec<&[u8]> = kind.long_header()[..keys].iter().map(|s| s.as_bytes()).collect();
            header.extend(agents.iter().map(Vec::as_slice));
            w.write_record(&header).map_err(|e| Error::csv(wide, e))?;
            *header_written = true;
        }
        if values.len() != agents.len() {
            return Err(Error::Input(format!(
                "{}: a row lists {} agents, expected {}",
                long.display(),
                values.len(),
                agents.len()
            )));
        }
        w.write_record(key.iter().chain(values.iter())).map_err(|e| Error::csv(wide, e))
    };
    let mut rec = csv::ByteRecord::new();
    while r.read_byte_record(&mut rec).map_err(|e| Error::csv(long, e))? {
        let same = key
            .as_ref()
            .is_some_and(|k| k.iter().map(Vec::as_slice).eq(rec.iter().take(keys)));
        if !same {
            if let Some(k) = &key {
                flush(k, &values, &agents, &mut header_written)?;
            }
            key = Some(rec.iter().take(keys).map(<[u8]>::to_vec).collect());
            values.clear();
        }
        let agent = rec.get(keys).unwrap_or_default();
        let value = rec.get(keys + 1).unwrap_or_default().to_vec();
        if !header_written {
            agents.push(agent.to_vec());
        } else if agents.get(values.len()).map(Vec::as_slice) != Some(agent) {
            return Err(Error::Input(format!(
                "{}: agents are not listed in the same order for every row",
                long.display()
            )));
        }
        values.push(value);
    }
    if let Some(k) = &key {
        flush(k, &values, &agents, &mut header_written)?;
    }
    w.flush().map_err(|e| Error::io(wide, e))?;
    Ok(())
}

/// States parsed from a status token, for readers of the tables.
pub fn parse_status(token: &str) -> Option<InfectionState> {
    InfectionState::parse(token)
}

fn read_table(path: &Path) -> Result<(Vec<String>, Vec<csv::StringRecord>)> {
    let mut r = reader(path)?;
    let header = r
        .headers()
        .map_err(|e| Error::csv(path, e))?
        .iter()
        .map(str::to_string)
        .collect();
    let rows = r
        .records()
        .collect::<std::result::Result<Vec<_>, _>>()
        .map_err(|e| Error::csv(path, e))?;
    Ok((header, rows))
}

/// Problems found by [`check_references`], capped per table.
struct Problems {
    list: Vec<String>,
    per_table: usize,
}

impl Problems {
    const CAP: usize = 10;

    fn report(&mut self, what: String) {
        if self.per_table < Self::CAP {
            self.list.push(what);
        }
        self.per_table += 1;
    }

    fn next_table(&mut self) {
        self.per_table = 0;
    }
}

/// Cross-table consistency of an exported bundle in either shape: every
/// name a row refers to exists in the table that defines it, status and
/// place tables cover exactly the agents of the information tables, and
/// every status and place token is valid. Returns the problems found, at
/// most a few per table.
pub fn check_references(dir: &Path) -> Result<Vec<String>> {
    use std::collections::{HashMap, HashSet};

    let mut info = HashMap::new();
    for t in &TABLES[..7] {
        info.insert(*t, read_table(&dir.join(t))?);
    }
    let names = |t: &str| -> Vec<&str> { info[t].1.iter().map(|r| r.get(0).unwrap_or_default()).collect() };
    let set = |t: &str| -> HashSet<&str> { names(t).into_iter().collect() };
    let homes = set(HOME_INFORMATION);
    let workplaces = set(WORKPLACE_INFORMATION);
    let restaurants = set(RESTAURANT_INFORMATION);
    let schools = set(SCHOOL_INFORMATION);
    let hospitals = set(HOSPITAL_INFORMATION);

    let mut problems = Problems {
        list: Vec::new(),
        per_table: 0,
    };
    let references: [(&str, &[&str], &HashSet<&str>); 7] = [
        (ADULT_INFORMATION, &["home"], &homes),
        (ADULT_INFORMATION, &["workplace"], &workplaces),
        (ADULT_INFORMATION, &ADULT_COLUMNS[4..7], &restaurants),
        (CHILD_INFORMATION, &["home"], &homes),
        (CHILD_INFORMATION, &["school"], &schools),
        (HOME_INFORMATION, &HOME_COLUMNS[3..6], &hospitals),
        (HOME_INFORMATION, &HOME_COLUMNS[6..9], &restaurants),
    ];
    for (table, columns, targets) in references {
        problems.next_table();
        let (header, rows) = &info[table];
        for column in columns {
            let Some(i) = header.iter().position(|h| h == column) else {
                problems.report(format!("{table}: no column {column}"));
                continue;
            };
            // With fewer than k places the k-th nearest is left blank.
            let rank = if column.starts_with("second_") {
                2
            } else if column.starts_with("third_") {
                3
            } else {
                1
            };
            let blank_ok = targets.len() < rank;
            for r in rows {
                let v = r.get(i).unwrap_or_default();
                if !(targets.contains(v) || blank_ok && v.is_empty()) {
                    problems.report(format!(
                        "{table}: {column} {v:?} of {} is not defined",
                        r.get(0).unwrap_or_default()
                    ));
                }
            }
        }
    }

    let places: HashSet<&str> = homes
        .iter()
        .chain(&workplaces)
        .chain(&restaurants)
        .chain(&schools)
        .chain(&hospitals)
        .copied()
        .chain([crate::place::DEAD_TOKEN])
        .collect();
    let agent_tables = [
        (ADULT_STATUS, ADULT_INFORMATION, AgentTable::Status),
        (CHILD_STATUS, CHILD_INFORMATION, AgentTable::Status),
        (ADULT_PLACE, ADULT_INFORMATION, AgentTable::Place),
        (CHILD_PLACE, CHILD_INFORMATION, AgentTable::Place),
    ];
    for (table, info_table, kind) in agent_tables {
        problems.next_table();
        let agents = names(info_table);
        let path = dir.join(table);
        let mut r = reader(&path)?;
        let header = r.headers().map_err(|e| Error::csv(&path, e))?.clone();
        let keys = kind.key_columns();
        let long = header.iter().eq(kind.long_header().iter().copied());
        if !long && !header.iter().skip(keys).eq(agents.iter().copied()) {
            problems.report(format!("{table}: agent columns differ from {info_table}"));
        }
        let valid = |v: &str| match kind {
            AgentTable::Status => parse_status(v).is_some(),
            AgentTable::Place => places.contains(v),
        };
        let per_agent_rows = match kind {
            AgentTable::Status => SIM_DAYS as usize,
            AgentTable::Place => (SIM_DAYS * HOURS_PER_DAY) as usize,
        };
        let expected_rows = if long {
            per_agent_rows * agents.len()
        } else {
            per_agent_rows
        };
        let mut rows = 0usize;
        let mut rec = csv::StringRecord::new();
        while r.read_record(&mut rec).map_err(|e| Error::csv(&path, e))? {
            if long {
                let agent = rec.get(keys).unwrap_or_default();
                if agents.get(rows % agents.len().max(1)).copied() != Some(agent) {
                    problems.report(format!("{table}: row {} names agent {agent:?} out of order", rows + 1));
                }
                let v = rec.get(keys + 1).unwrap_or_default();
                if !valid(v) {
                    problems.report(format!("{table}: row {} has invalid value {v:?}", rows + 1));
                }
            } else {
                for v in rec.iter().skip(keys) {
                    if !valid(v) {
                        problems.report(format!("{table}: row {} has invalid value {v:?}", rows + 1));
                    }
                }
            }
            rows += 1;
        }
        if rows != expected_rows {
            problems.report(format!("{table}: {rows} rows, expected {expected_rows}"));
        }
    }
    Ok(problems.list)
}
