//! Scenario checks: does a generated dataset show the pattern its scenario
//! is meant to teach? Every check reads the exported tables, except the
//! restaurant-transmission audit which needs the engine's own counter.

use std::path::Path;

use serde::Serialize;

use crate::analysis::{self, AdultFrame, Bundle, RateRow, RateTable};
use crate::audit;
use crate::config::RunConfig;
use crate::error::Result;
use crate::pipeline;
use crate::scenario::ScenarioKind;

/// Minimum cell size for the within-stratum flatness check on visits.
pub const MIN_STRATUM_DENOMINATOR: u64 = 50;
pub const AGE_BIN: u32 = 10;
pub const VISIT_BIN: f64 = 1.0;

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Check {
    pub name: String,
    pub passed: bool,
    pub detail: String,
}

impl Check {
    fn new(name: &str, passed: bool, detail: String) -> Self {
        Self {
            name: name.to_string(),
            passed,
            detail,
        }
    }
}

/// Pooled two-proportion standard error of `a.rate - b.rate`.
pub fn pooled_se(a: &RateRow, b: &RateRow) -> f64 {
    let n = (a.denominator + b.denominator) as f64;
    if a.denominator == 0 || b.denominator == 0 {
        return f64::INFINITY;
    }
    let p = (a.numerator + b.numerator) as f64 / n;
    (p * (1.0 - p) * (1.0 / a.denominator as f64 + 1.0 / b.denominator as f64)).sqrt()
}

/// `hi.rate - lo.rate` in pooled standard errors.
pub fn z_diff(hi: &RateRow, lo: &RateRow) -> f64 {
    let d = hi.rate - lo.rate;
    let se = pooled_se(hi, lo);
    if se == 0.0 {
        if d == 0.0 {
            0.0
        } else {
            d.signum() * f64::INFINITY
        }
    } else {
        d / se
    }
}

/// Largest minus smallest rate among `rows`, in pooled standard errors.
fn spread_z(rows: &[&RateRow]) -> Option<f64> {
    let max = rows.iter().max_by(|a, b| a.rate.total_cmp(&b.rate))?;
    let min = rows.iter().min_by(|a, b| a.rate.total_cmp(&b.rate))?;
    Some(z_diff(max, min))
}

fn rates(t: &RateTable) -> String {
    t.rows
        .iter()
        .map(|r| format!("{}={:.3}(n={})", r.labels.join("/"), r.rate, r.denominator))
        .collect::<Vec<_>>()
        .join(" ")
}

/// A flat stratified pattern says nothing when the epidemic died out, so
/// the flatness checks also require this many infected adults.
pub const MIN_OUTBREAK: usize = 50;

fn infected_adults(frame: &AdultFrame) -> usize {
    frame.infected.iter().filter(|&&i| i).count()
}

pub fn mediator_checks(frame: &AdultFrame) -> Result<Vec<Check>> {
    let pooled = analysis::rate_by_age(frame, AGE_BIN)?;
    let first = pooled.rows.first();
    let last = pooled.rows.last();
    let z = match (first, last) {
        (Some(y), Some(o)) if pooled.rows.len() > 1 => z_diff(y, o),
        _ => 0.0,
    };
    let decreasing = pooled.rows.windows(2).all(|w| w[1].rate <= w[0].rate);
    let mut out = vec![Check::new(
        "mediator.pooled_age_negative",
        z > 2.0 && decreasing,
        format!("youngest-oldest z={z:.2} weakly_decreasing={decreasing} {}", rates(&pooled)),
    )];

    let table = analysis::rate_by_age_and_visits(frame, AGE_BIN, VISIT_BIN)?;
    let mut worst = 0.0f64;
    let mut strata = 0;
    let mut groups: std::collections::BTreeMap<&str, Vec<&RateRow>> = Default::default();
    for r in &table.rows {
        if r.denominator >= MIN_STRATUM_DENOMINATOR {
            groups.entry(r.labels[0].as_str()).or_default().push(r);
        }
    }
    let mut worst_at = String::new();
    for (visits, rows) in &groups {
        if rows.len() < 2 {
            continue;
        }
        strata += 1;
        let z = spread_z(rows).unwrap_or(0.0);
        if z > worst {
            worst = z;
            worst_at = visits.to_string();
        }
    }
    let infected = infected_adults(frame);
    out.push(Check::new(
        "mediator.within_visits_flat",
        infected >= MIN_OUTBREAK && strata > 0 && worst <= 3.0,
        format!("infected_adults={infected} strata={strata} worst_spread_z={worst:.2} at visits {worst_at}"),
    ));
    Ok(out)
}

pub fn confounder_checks(frame: &AdultFrame) -> Result<Vec<Check>> {
    let pooled = analysis::rate_by_short_hours(frame, false)?;
    let by = |s: &str| pooled.row(&[s]).cloned();
    let (zero, one, two) = (by("ZERO"), by("ONE"), by("TWO"));
    let (passed, detail) = match (&zero, &one, &two) {
        (Some(a), Some(b), Some(c)) => {
            let z = z_diff(a, c);
            let strict = a.rate > b.rate && b.rate > c.rate;
            (strict && z > 2.0, format!("strictly_decreasing={strict} zero-two z={z:.2} {}", rates(&pooled)))
        }
        _ => (false, format!("missing a status: {}", rates(&pooled))),
    };
    let mut out = vec![Check::new("confounder.pooled_short_hours_decreasing", passed, detail)];

    let table = analysis::rate_by_short_hours_and_online(frame, false)?;
    let mut groups: std::collections::BTreeMap<&str, Vec<&RateRow>> = Default::default();
    for r in &table.rows {
        groups.entry(r.labels[0].as_str()).or_default().push(r);
    }
    let mut worst = 0.0f64;
    let mut worst_at = String::new();
    for (online, rows) in &groups {
        let z = spread_z(rows).unwrap_or(0.0);
        if z > worst {
            worst = z;
            worst_at = online.to_string();
        }
    }
    let infected = infected_adults(frame);
    out.push(Check::new(
        "confounder.within_online_flat",
        infected >= MIN_OUTBREAK && !groups.is_empty() && worst <= 3.0,
        format!(
            "infected_adults={infected} worst_spread_z={worst:.2} in online={worst_at} {}",
            rates(&table)
        ),
    ));
    Ok(out)
}

pub fn collider_checks(frame: &AdultFrame, vaccination_probability: f64) -> Result<Vec<Check>> {
    let infected = analysis::vaccination_rate_by_age(frame, true, AGE_BIN)?;
    let z = match (infected.rows.first(), infected.rows.last()) {
        (Some(y), Some(o)) if infected.rows.len() > 1 => z_diff(y, o),
        _ => 0.0,
    };
    let mut out = vec![Check::new(
        "collider.infected_vaccination_falls_with_age",
        z > 2.0,
        format!("youngest-oldest z={z:.2} {}", rates(&infected)),
    )];
    let all = analysis::vaccination_rate_by_age(frame, false, AGE_BIN)?;
    let p = vaccination_probability;
    let worst = all
        .rows
        .iter()
        .map(|r| {
            let se = (p * (1.0 - p) / r.denominator as f64).sqrt();
            if se == 0.0 {
                if r.rate == p {
                    0.0
                } else {
                    f64::INFINITY
                }
            } else {
                (r.rate - p).abs() / se
            }
        })
        .fold(0.0f64, f64::max);
    out.push(Check::new(
        "collider.all_adults_vaccination_flat",
        worst <= 3.0,
        format!("worst |rate-{p}|/se={worst:.2} {}", rates(&all)),
    ));
    Ok(out)
}

/// Checks for one generated dataset.
#[derive(Debug, Clone, Serialize)]
pub struct SeedReport {
    pub seed: u64,
    pub ever_infected: usize,
    pub restaurant_infections: u64,
    pub states: audit::StateAudit,
    pub places: audit::PlaceAudit,
    pub checks: Vec<Check>,
}

/// Simulate `cfg` with `seed`, export into `dir` and evaluate the scenario
/// checks from the exported files.
pub fn run_seed(cfg: &RunConfig, seed: u64, dir: &Path) -> Result<SeedReport> {
    let mut cfg = cfg.clone();
    cfg.seed = seed;
    cfg.output.dir = dir.to_path_buf();
    cfg.output.overwrite = true;
    cfg.survey.enabled = false;
    let (world, trace) = pipeline::simulate(&cfg, |_| {})?;
    pipeline::write_outputs(&cfg, &world, &trace, dir)?;

    let states = audit::audit_states(&trace);
    let places = audit::audit_places(&trace, &world);
    let ever_infected = trace.ever_infected().iter().filter(|e| **e).count();
    let restaurant_infections = trace.infections_by_place.restaurant;
    drop(trace);

    let mut checks = vec![Check::new(
        "trace_audit",
        states.is_clean() && places.is_clean(),
        format!(
            "transitions={} conservation={} capacity={} closed={} children={}",
            states.illegal_transitions.count + states.pre_exposed_not_advanced.count,
            states.conservation.count,
            places.restaurant_over_capacity.count + places.hospital_over_capacity.count,
            places.closed_restaurant_occupied.count,
            places.weekday_child_in_restaurant.count + places.unaccompanied_child_in_restaurant.count,
        ),
    )];

    let params = cfg.effective_epidemic()?;
    if [params.alpha_home, params.alpha_work, params.alpha_school, params.alpha_restaurant]
        .iter()
        .all(|a| *a == 0.0)
    {
        checks.push(Check::new(
            "zero_spread",
            ever_infected == 1,
            format!("ever_infected={ever_infected}"),
        ));
    }

    let bundle = Bundle::open(dir)?;
    let kind = cfg.scenario.kind;
    let frame = AdultFrame::load(&bundle, kind == ScenarioKind::Mediator)?;
    match kind {
        ScenarioKind::Mediator => checks.extend(mediator_checks(&frame)?),
        ScenarioKind::Confounder => {
            checks.extend(confounder_checks(&frame)?);
            checks.push(Check::new(
                "confounder.no_restaurant_transmission",
                restaurant_infections == 0,
                format!("restaurant_infections={restaurant_infections}"),
            ));
        }
        ScenarioKind::Collider => {
            checks.extend(collider_checks(&frame, cfg.scenario.collider.vaccination_probability)?)
        }
        ScenarioKind::Custom => {}
    }
    Ok(SeedReport {
        seed,
        ever_infected,
        restaurant_infections,
        states,
        places,
        checks,
    })
}

/// Checks that must hold in every seed rather than most.
fn required_everywhere(name: &str) -> bool {
    matches!(name, "trace_audit" | "zero_spread" | "confounder.no_restaurant_transmission")
}

/// Seeds needed for a majority check: four in five, rounded up.
pub fn majority(n: usize) -> usize {
    (4 * n).div_ceil(5)
}

/// Combine per-seed checks: most checks need a four-in-five majority of
/// seeds, audits need all of them.
pub fn summarize(reports: &[SeedReport]) -> Vec<Check> {
    let mut names: Vec<&str> = Vec::new();
    for r in reports {
        for c in &r.checks {
            if !names.contains(&c.name.as_str()) {
                names.push(&c.name);
            }
        }
    }
    names
        .into_iter()
        .map(|name| {
            let results: Vec<(u64, &Check)> = reports
                .iter()
                .filter_map(|r| r.checks.iter().find(|c| c.name == name).map(|c| (r.seed, c)))
                .collect();
            let passed = results.iter().filter(|(_, c)| c.passed).count();
            let need = if required_everywhere(name) {
                results.len()
            } else {
                majority(results.len())
            };
            let failed_seeds: Vec<String> = results
                .iter()
                .filter(|(_, c)| !c.passed)
                .map(|(s, c)| format!("seed {s}: {}", c.detail))
                .collect();
            Check::new(
                name,
                passed >= need,
                format!(
                    "{passed}/{} seeds (need {need}){}{}",
                    results.len(),
                    if failed_seeds.is_empty() { "" } else { "; " },
                    failed_seeds.join("; ")
                ),
            )
        })
        .collect()
}
