//! Stratified infection and vaccination rates computed from an exported
//! dataset directory. Nothing here touches simulation state; the tables on
//! disk are the only input.

use std::collections::HashMap;
use std::fs;
use std::io::Write;
use std::path::{Path, PathBuf};

use serde::Serialize;

use crate::dataset::{
    ADULT_INFORMATION, ADULT_PLACE, ADULT_STATUS, CHILD_INFORMATION, HOME_INFORMATION, LONG_PLACE_COLUMNS,
    LONG_STATUS_COLUMNS, RESTAURANT_INFORMATION, SCHOOL_INFORMATION,
};
use crate::epidemic::InfectionState;
use crate::error::{Error, Result};
use crate::world::PolicyStatus;

/// A dataset directory on disk.
#[derive(Debug, Clone)]
pub struct Bundle {
    dir: PathBuf,
}

impl Bundle {
    pub fn open(dir: impl Into<PathBuf>) -> Result<Self> {
        let dir = dir.into();
        if !dir.is_dir() {
            return Err(Error::Input(format!("{} is not a dataset directory", dir.display())));
        }
        Ok(Self { dir })
    }

    pub fn dir(&self) -> &Path {
        &self.dir
    }

    pub fn has(&self, table: &str) -> bool {
        self.dir.join(table).is_file()
    }

    pub fn table(&self, table: &str) -> Result<PathBuf> {
        let path = self.dir.join(table);
        if path.is_file() {
            Ok(path)
        } else {
            Err(Error::Input(format!("missing table {table} in {}", self.dir.display())))
        }
    }
}

fn open_csv(path: &Path) -> Result<csv::Reader<fs::File>> {
    csv::ReaderBuilder::new().from_path(path).map_err(|e| Error::csv(path, e))
}

fn column(header: &csv::StringRecord, name: &str, path: &Path) -> Result<usize> {
    header
        .iter()
        .position(|h| h == name)
        .ok_or_else(|| Error::Input(format!("{}: missing column {name}", path.display())))
}

/// Read selected columns of a small table into rows of strings.
fn read_columns(path: &Path, names: &[&str]) -> Result<Vec<Vec<String>>> {
    let mut r = open_csv(path)?;
    let header = r.headers().map_err(|e| Error::csv(path, e))?.clone();
    let idx: Vec<usize> = names.iter().map(|n| column(&header, n, path)).collect::<Result<_>>()?;
    let mut rows = Vec::new();
    for rec in r.records() {
        let rec = rec.map_err(|e| Error::csv(path, e))?;
        rows.push(idx.iter().map(|&i| rec.get(i).unwrap_or("").to_string()).collect());
    }
    Ok(rows)
}

/// Per-agent infection summary read from a status table.
#[derive(Debug, Clone, PartialEq)]
pub struct StatusSummary {
    pub names: Vec<String>,
    pub dates: Vec<String>,
    /// Index into `dates` of the first non-susceptible record.
    pub first_infected_day: Vec<Option<usize>>,
}

impl StatusSummary {
    /// Ever left susceptible during the run.
    pub fn infected_flags(&self) -> Vec<bool> {
        self.first_infected_day.iter().map(Option::is_some).collect()
    }
}

fn parse_state(token: &str, path: &Path) -> Result<InfectionState> {
    InfectionState::parse(token)
        .ok_or_else(|| Error::Input(format!("{}: unknown infection status {token:?}", path.display())))
}

pub fn read_status(path: &Path) -> Result<StatusSummary> {
    let mut r = open_csv(path)?;
    let header = r.headers().map_err(|e| Error::csv(path, e))?.clone();
    let long = header.iter().eq(LONG_STATUS_COLUMNS.iter().copied());
    let mut names: Vec<String> = Vec::new();
    let mut index: HashMap<String, usize> = HashMap::new();
    let mut dates: Vec<String> = Vec::new();
    let mut first: Vec<Option<usize>> = Vec::new();
    if !long {
        if header.get(0) != Some("date") {
            return Err(Error::Input(format!("{}: first column must be date", path.display())));
        }
        names = header.iter().skip(1).map(str::to_string).collect();
        first = vec![None; names.len()];
    }
    for rec in r.records() {
        let rec = rec.map_err(|e| Error::csv(path, e))?;
        let date = rec.get(0).unwrap_or("");
        if dates.last().map(String::as_str) != Some(date) {
            dates.push(date.to_string());
        }
        let day = dates.len() - 1;
        if long {
            let name = rec.get(1).unwrap_or("");
            let agent = match index.get(name) {
                Some(&i) => i,
                None => {
                    names.push(name.to_string());
                    first.push(None);
                    index.insert(name.to_string(), names.len() - 1);
                    names.len() - 1
                }
            };
            let state = parse_state(rec.get(2).unwrap_or(""), path)?;
            if state != InfectionState::Susceptible && first[agent].is_none() {
                first[agent] = Some(day);
            }
        } else {
            for (slot, token) in first.iter_mut().zip(rec.iter().skip(1)) {
                let state = parse_state(token, path)?;
                if state != InfectionState::Susceptible && slot.is_none() {
                    *slot = Some(day);
                }
            }
        }
    }
    Ok(StatusSummary {
        names,
        dates,
        first_infected_day: first,
    })
}

/// Restaurant visits per week for each agent in `status`, counting only
/// days up to and including the day the agent was first recorded as
/// infected. A visit is a maximal run of consecutive hours at one
/// restaurant.
pub fn visits_per_week(place_path: &Path, restaurants: &[String], status: &StatusSummary) -> Result<Vec<f64>> {
    let rest_index: HashMap<&[u8], u32> = restaurants
        .iter()
        .enumerate()
        .map(|(i, r)| (r.as_bytes(), i as u32))
        .collect();
    let day_index: HashMap<&[u8], usize> = status
        .dates
        .iter()
        .enumerate()
        .map(|(i, d)| (d.as_bytes(), i))
        .collect();
    let agent_index: HashMap<&[u8], usize> = status
        .names
        .iter()
        .enumerate()
        .map(|(i, n)| (n.as_bytes(), i))
        .collect();
    let n = status.names.len();
    let mut last: Vec<Option<(i64, u32)>> = vec![None; n];
    let mut visits = vec![0u32; n];

    let mut r = open_csv(place_path)?;
    let header = r.byte_headers().map_err(|e| Error::csv(place_path, e))?.clone();
    let long = header.iter().eq(LONG_PLACE_COLUMNS.iter().map(|s| s.as_bytes()));
    let wide_agents: Vec<usize> = if long {
        Vec::new()
    } else {
        header
            .iter()
            .skip(2)
            .map(|name| {
                agent_index.get(name).copied().ok_or_else(|| {
                    Error::Input(format!(
                        "{}: agent {} missing from the status table",
                        place_path.display(),
                        String::from_utf8_lossy(name)
                    ))
                })
            })
            .collect::<Result<_>>()?
    };

    let mut observe = |agent: usize, day: usize, step: i64, place: &[u8]| {
        if let Some(&r) = rest_index.get(place) {
            let counted = status.first_infected_day[agent].is_none_or(|d| day <= d);
            if counted && last[agent] != Some((step - 1, r)) {
                visits[agent] += 1;
            }
            last[agent] = Some((step, r));
        }
    };

    let mut rec = csv::ByteRecord::new();
    while r.read_byte_record(&mut rec).map_err(|e| Error::csv(place_path, e))? {
        let bad = || Error::Input(format!("{}: malformed row {:?}", place_path.display(), rec.position()));
        let day = *day_index.get(rec.get(0).unwrap_or_default()).ok_or_else(bad)?;
        let hour: i64 = std::str::from_utf8(rec.get(1).unwrap_or_default())
            .ok()
            .and_then(|h| h.parse().ok())
            .ok_or_else(bad)?;
        let step = day as i64 * 24 + hour;
        if long {
            let agent = *agent_index.get(rec.get(2).unwrap_or_default()).ok_or_else(bad)?;
            observe(agent, day, step, rec.get(3).unwrap_or_default());
        } else {
            for (&agent, place) in wide_agents.iter().zip(rec.iter().skip(2)) {
                observe(agent, day, step, place);
            }
        }
    }

    let total_days = status.dates.len();
    Ok(visits
        .iter()
        .zip(&status.first_infected_day)
        .map(|(&v, first)| {
            let days = first.map_or(total_days, |d| (d + 1).min(total_days));
            if days == 0 {
                0.0
            } else {
                v as f64 / (days as f64 / 7.0)
            }
        })
        .collect())
}

/// One row per adult with the joins every named analysis needs.
#[derive(Debug, Clone, PartialEq)]
pub struct AdultFrame {
    pub names: Vec<String>,
    pub home: Vec<String>,
    pub workplace: Vec<String>,
    pub age: Vec<u32>,
    pub sex: Vec<String>,
    pub vaccinated: Vec<bool>,
    pub height: Vec<f64>,
    pub weight: Vec<f64>,
    pub infected: Vec<bool>,
    /// Status of the nearest restaurant to home.
    pub short_hours: Option<Vec<String>>,
    /// Status of the nearest restaurant to the workplace.
    pub short_hours_work: Option<Vec<String>>,
    /// Modal online-class status among cohabiting children's schools.
    pub online: Option<Vec<Option<String>>>,
    pub visits_per_week: Option<Vec<f64>>,
}

fn parse_num<T: std::str::FromStr>(s: &str, what: &str, path: &Path) -> Result<T> {
    s.trim()
        .parse()
        .map_err(|_| Error::Input(format!("{}: bad {what} value {s:?}", path.display())))
}

fn parse_yes_no(s: &str, path: &Path) -> Result<bool> {
    match s {
        "yes" => Ok(true),
        "no" => Ok(false),
        _ => Err(Error::Input(format!("{}: bad vaccination value {s:?}", path.display()))),
    }
}

/// Most common status, ties going to the higher status.
pub fn modal_status(statuses: &[PolicyStatus]) -> Option<PolicyStatus> {
    let mut counts = [0usize; 3];
    for s in statuses {
        counts[s.level() as usize] += 1;
    }
    let best = *counts.iter().max()?;
    if best == 0 {
        return None;
    }
    let level = (0..3).rev().find(|&i| counts[i] == best)?;
    PolicyStatus::from_level(level as u8)
}

impl AdultFrame {
    pub fn load(bundle: &Bundle, with_visits: bool) -> Result<Self> {
        let info = bundle.table(ADULT_INFORMATION)?;
        let rows = read_columns(
            &info,
            &[
                "name",
                "home",
                "workplace",
                "age",
                "sex",
                "vaccination",
                "height",
                "weight",
                "nearest_restaurant_to_workplace",
            ],
        )?;
        let status_path = bundle.table(ADULT_STATUS)?;
        let status = read_status(&status_path)?;
        let by_name: HashMap<&str, usize> = status
            .names
            .iter()
            .enumerate()
            .map(|(i, n)| (n.as_str(), i))
            .collect();

        let mut frame = AdultFrame {
            names: Vec::with_capacity(rows.len()),
            home: Vec::with_capacity(rows.len()),
            workplace: Vec::with_capacity(rows.len()),
            age: Vec::with_capacity(rows.len()),
            sex: Vec::with_capacity(rows.len()),
            vaccinated: Vec::with_capacity(rows.len()),
            height: Vec::with_capacity(rows.len()),
            weight: Vec::with_capacity(rows.len()),
            infected: Vec::with_capacity(rows.len()),
            short_hours: None,
            short_hours_work: None,
            online: None,
            visits_per_week: None,
        };
        let mut status_row = Vec::with_capacity(rows.len());
        for row in &rows {
            let s = *by_name
                .get(row[0].as_str())
                .ok_or_else(|| Error::Input(format!("adult {} has no infection status column", row[0])))?;
            status_row.push(s);
            frame.names.push(row[0].clone());
            frame.home.push(row[1].clone());
            frame.workplace.push(row[2].clone());
            frame.age.push(parse_num(&row[3], "age", &info)?);
            frame.sex.push(row[4].clone());
            frame.vaccinated.push(parse_yes_no(&row[5], &info)?);
            frame.height.push(parse_num(&row[6], "height", &info)?);
            frame.weight.push(parse_num(&row[7], "weight", &info)?);
            frame.infected.push(status.first_infected_day[s].is_some());
        }

        let mut restaurant_names = Vec::new();
        if bundle.has(RESTAURANT_INFORMATION) {
            let path = bundle.table(RESTAURANT_INFORMATION)?;
            let rests = read_columns(&path, &["name", "short_business_hours_status"])?;
            let status_of: HashMap<&str, &str> = rests.iter().map(|r| (r[0].as_str(), r[1].as_str())).collect();
            let lookup = |r: &str| -> Result<String> {
                status_of
                    .get(r)
                    .map(|s| s.to_string())
                    .ok_or_else(|| Error::Input(format!("restaurant {r:?} missing from {RESTAURANT_INFORMATION}")))
            };
            frame.short_hours_work = Some(rows.iter().map(|row| lookup(&row[8])).collect::<Result<_>>()?);
            if bundle.has(HOME_INFORMATION) {
                let homes = read_columns(&bundle.table(HOME_INFORMATION)?, &["name", "nearest_restaurant_to_home"])?;
                let nearest: HashMap<&str, &str> = homes.iter().map(|h| (h[0].as_str(), h[1].as_str())).collect();
                frame.short_hours = Some(
                    frame
                        .home
                        .iter()
                        .map(|h| {
                            let r = nearest
                                .get(h.as_str())
                                .ok_or_else(|| Error::Input(format!("home {h:?} missing from {HOME_INFORMATION}")))?;
                            lookup(r)
                        })
                        .collect::<Result<_>>()?,
                );
            }
            restaurant_names = rests.into_iter().map(|mut r| r.swap_remove(0)).collect();
        }

        if bundle.has(CHILD_INFORMATION) && bundle.has(SCHOOL_INFORMATION) {
            let schools = read_columns(&bundle.table(SCHOOL_INFORMATION)?, &["name", "online_class_status"])?;
            let school_status: HashMap<&str, PolicyStatus> = schools
                .iter()
                .map(|s| {
                    PolicyStatus::parse(&s[1])
                        .map(|p| (s[0].as_str(), p))
                        .ok_or_else(|| Error::Input(format!("bad online class status {:?}", s[1])))
                })
                .collect::<Result<_>>()?;
            let children = read_columns(&bundle.table(CHILD_INFORMATION)?, &["home", "school"])?;
            let mut by_home: HashMap<&str, Vec<PolicyStatus>> = HashMap::new();
            for c in &children {
                let s = *school_status
                    .get(c[1].as_str())
                    .ok_or_else(|| Error::Input(format!("school {:?} missing from {SCHOOL_INFORMATION}", c[1])))?;
                by_home.entry(c[0].as_str()).or_default().push(s);
            }
            frame.online = Some(
                frame
                    .home
                    .iter()
                    .map(|h| {
                        by_home
                            .get(h.as_str())
                            .and_then(|v| modal_status(v))
                            .map(|s| s.as_str().to_string())
                    })
                    .collect(),
            );
        }

        if with_visits {
            let place = bundle.table(ADULT_PLACE)?;
            if restaurant_names.is_empty() {
                bundle.table(RESTAURANT_INFORMATION)?;
            }
            let per_status = visits_per_week(&place, &restaurant_names, &status)?;
            frame.visits_per_week = Some(status_row.iter().map(|&s| per_status[s]).collect());
        }
        Ok(frame)
    }

    pub fn len(&self) -> usize {
        self.names.len()
    }

    pub fn is_empty(&self) -> bool {
        self.names.is_empty()
    }

    fn value(&self, column: &str, i: usize) -> Result<Value> {
        let need = |what: &str| Error::Input(format!("column {column} unavailable: {what}"));
        Ok(match column {
            "name" => Value::Text(self.names[i].clone()),
            "home" => Value::Text(self.home[i].clone()),
            "workplace" => Value::Text(self.workplace[i].clone()),
            "age" => Value::Int(self.age[i] as i64),
            "sex" => Value::Text(self.sex[i].clone()),
            "vaccinated" => Value::Bool(self.vaccinated[i]),
            "height" => Value::Real(self.height[i]),
            "weight" => Value::Real(self.weight[i]),
            "infected" => Value::Bool(self.infected[i]),
            "short_hours" => Value::Text(
                self.short_hours
                    .as_ref()
                    .ok_or_else(|| need("requires home and restaurant information"))?[i]
                    .clone(),
            ),
            "short_hours_work" => Value::Text(
                self.short_hours_work
                    .as_ref()
                    .ok_or_else(|| need("requires restaurant information"))?[i]
                    .clone(),
            ),
            "online" => match &self.online.as_ref().ok_or_else(|| need("requires child and school information"))?[i] {
                Some(s) => Value::Text(s.clone()),
                None => Value::Missing,
            },
            "visits_per_week" => Value::Real(
                self.visits_per_week
                    .as_ref()
                    .ok_or_else(|| need("load the frame with visits"))?[i],
            ),
            _ => return Err(Error::Input(format!("unknown column {column}"))),
        })
    }
}

#[derive(Debug, Clone, PartialEq)]
enum Value {
    Bool(bool),
    Int(i64),
    Real(f64),
    Text(String),
    Missing,
}

#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord)]
enum Key {
    Num(i64),
    Text(String),
}

/// Grouping column, optionally binned into intervals of `width`.
#[derive(Debug, Clone, PartialEq)]
pub struct Stratifier {
    pub column: String,
    pub width: Option<f64>,
}

impl Stratifier {
    pub fn by(column: &str) -> Self {
        Self {
            column: column.to_string(),
            width: None,
        }
    }

    pub fn binned(column: &str, width: f64) -> Self {
        Self {
            column: column.to_string(),
            width: Some(width),
        }
    }

    /// Parse `column` or `column:width`.
    pub fn parse(spec: &str) -> Result<Self> {
        match spec.split_once(':') {
            None => Ok(Self::by(spec)),
            Some((c, w)) => {
                let width: f64 = w
                    .parse()
                    .map_err(|_| Error::Input(format!("bad bin width in stratifier {spec:?}")))?;
                if !(width > 0.0 && width.is_finite()) {
                    return Err(Error::Input(format!("bin width must be positive in {spec:?}")));
                }
                Ok(Self::binned(c, width))
            }
        }
    }

    fn key(&self, v: Value) -> Result<Option<(Key, String)>> {
        Ok(Some(match (v, self.width) {
            (Value::Missing, _) => return Ok(None),
            (Value::Bool(b), None) => (Key::Num(b as i64), if b { "yes" } else { "no" }.to_string()),
            (Value::Text(s), None) => (Key::Text(s.clone()), s),
            (Value::Int(n), None) => (Key::Num(n), n.to_string()),
            (Value::Real(x), None) => (Key::Text(format!("{x:020.6}")), trim(x)),
            (Value::Int(n), Some(w)) if w.fract() == 0.0 => {
                let w = w as i64;
                let lo = n.div_euclid(w) * w;
                (Key::Num(lo), format!("{lo}-{}", lo + w - 1))
            }
            (Value::Int(n), Some(w)) => real_bin(n as f64, w),
            (Value::Real(x), Some(w)) => real_bin(x, w),
            (_, Some(_)) => {
                return Err(Error::Input(format!("column {} cannot be binned", self.column)));
            }
        }))
    }
}

fn trim(x: f64) -> String {
    let s = format!("{x:.6}");
    let s = s.trim_end_matches('0').trim_end_matches('.');
    s.to_string()
}

fn real_bin(x: f64, w: f64) -> (Key, String) {
    let i = (x / w).floor() as i64;
    (Key::Num(i), format!("[{},{})", trim(i as f64 * w), trim((i + 1) as f64 * w)))
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct RateRow {
    pub labels: Vec<String>,
    pub numerator: u64,
    pub denominator: u64,
    pub rate: f64,
    pub se: f64,
}

impl RateRow {
    fn new(labels: Vec<String>, numerator: u64, denominator: u64) -> Self {
        let rate = if denominator > 0 {
            numerator as f64 / denominator as f64
        } else {
            0.0
        };
        let se = if denominator > 0 {
            (rate * (1.0 - rate) / denominator as f64).sqrt()
        } else {
            0.0
        };
        Self {
            labels,
            numerator,
            denominator,
            rate,
            se,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct RateTable {
    pub outcome: String,
    pub columns: Vec<String>,
    pub rows: Vec<RateRow>,
}

impl RateTable {
    pub fn row(&self, labels: &[&str]) -> Option<&RateRow> {
        self.rows.iter().find(|r| r.labels.iter().map(String::as_str).eq(labels.iter().copied()))
    }

    pub fn total_denominator(&self) -> u64 {
        self.rows.iter().map(|r| r.denominator).sum()
    }

    pub fn to_csv(&self) -> String {
        let mut w = csv::WriterBuilder::new().from_writer(Vec::new());
        let mut header = self.columns.clone();
        header.extend(["numerator", "denominator", "rate", "se"].map(String::from));
        w.write_record(&header).expect("in-memory write");
        for r in &self.rows {
            let mut rec = r.labels.clone();
            rec.push(r.numerator.to_string());
            rec.push(r.denominator.to_string());
            rec.push(format!("{:.6}", r.rate));
            rec.push(format!("{:.6}", r.se));
            w.write_record(&rec).expect("in-memory write");
        }
        String::from_utf8(w.into_inner().expect("in-memory flush")).expect("utf-8 labels")
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("rate table serializes")
    }

    pub fn write(&self, dir: &Path, stem: &str) -> Result<Vec<PathBuf>> {
        fs::create_dir_all(dir).map_err(|e| Error::io(dir, e))?;
        let mut out = Vec::new();
        for (ext, body) in [("csv", self.to_csv()), ("json", self.to_json() + "\n")] {
            let path = dir.join(format!("{stem}.{ext}"));
            let mut f = fs::File::create(&path).map_err(|e| Error::io(&path, e))?;
            f.write_all(body.as_bytes()).map_err(|e| Error::io(&path, e))?;
            out.push(path);
        }
        Ok(out)
    }
}

/// Proportion of rows with `outcome` true, grouped by `stratifiers`,
/// optionally restricted to rows where the boolean column `filter` holds.
/// Rows whose stratifier value is missing are left out.
pub fn stratified_rate(
    frame: &AdultFrame,
    outcome: &str,
    filter: Option<&str>,
    stratifiers: &[Stratifier],
) -> Result<RateTable> {
    let as_bool = |col: &str, i: usize| -> Result<bool> {
        match frame.value(col, i)? {
            Value::Bool(b) => Ok(b),
            _ => Err(Error::Input(format!("column {col} is not a yes/no column"))),
        }
    };
    let mut cells: std::collections::BTreeMap<Vec<Key>, (Vec<String>, u64, u64)> = Default::default();
    'rows: for i in 0..frame.len() {
        if let Some(f) = filter {
            if !as_bool(f, i)? {
                continue;
            }
        }
        let hit = as_bool(outcome, i)?;
        let mut keys = Vec::with_capacity(stratifiers.len());
        let mut labels = Vec::with_capacity(stratifiers.len());
        for s in stratifiers {
            match s.key(frame.value(&s.column, i)?)? {
                Some((k, l)) => {
                    keys.push(k);
                    labels.push(l);
                }
                None => continue 'rows,
            }
        }
        let cell = cells.entry(keys).or_insert_with(|| (labels, 0, 0));
        cell.1 += hit as u64;
        cell.2 += 1;
    }
    Ok(RateTable {
        outcome: outcome.to_string(),
        columns: stratifiers.iter().map(|s| s.column.clone()).collect(),
        rows: cells
            .into_values()
            .map(|(labels, num, den)| RateRow::new(labels, num, den))
            .collect(),
    })
}

pub fn rate_by_age(frame: &AdultFrame, width: u32) -> Result<RateTable> {
    stratified_rate(frame, "infected", None, &[Stratifier::binned("age", width as f64)])
}

pub fn rate_by_age_and_visits(frame: &AdultFrame, age_width: u32, visit_width: f64) -> Result<RateTable> {
    stratified_rate(
        frame,
        "infected",
        None,
        &[
            Stratifier::binned("visits_per_week", visit_width),
            Stratifier::binned("age", age_width as f64),
        ],
    )
}

fn short_hours_column(near_workplace: bool) -> &'static str {
    if near_workplace {
        "short_hours_work"
    } else {
        "short_hours"
    }
}

pub fn rate_by_short_hours(frame: &AdultFrame, near_workplace: bool) -> Result<RateTable> {
    stratified_rate(frame, "infected", None, &[Stratifier::by(short_hours_column(near_workplace))])
}

pub fn rate_by_short_hours_and_online(frame: &AdultFrame, near_workplace: bool) -> Result<RateTable> {
    stratified_rate(
        frame,
        "infected",
        None,
        &[Stratifier::by("online"), Stratifier::by(short_hours_column(near_workplace))],
    )
}

pub fn vaccination_rate_by_age(frame: &AdultFrame, restrict_to_infected: bool, width: u32) -> Result<RateTable> {
    stratified_rate(
        frame,
        "vaccinated",
        restrict_to_infected.then_some("infected"),
        &[Stratifier::binned("age", width as f64)],
    )
}
