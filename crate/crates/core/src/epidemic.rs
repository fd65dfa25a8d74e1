//! Infection state machine, hourly transmission probability and disease
//! course sampling.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::place::PlaceKind;
use crate::rng::{KeyedRng, Stream};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum InfectionState {
    Susceptible,
    PreExposed,
    Exposed,
    Asymptomatic,
    MinorSymptoms,
    SevereSymptoms,
    Recovered,
    Dead,
}

impl InfectionState {
    pub const ALL: [InfectionState; 8] = [
        InfectionState::Susceptible,
        InfectionState::PreExposed,
        InfectionState::Exposed,
        InfectionState::Asymptomatic,
        InfectionState::MinorSymptoms,
        InfectionState::SevereSymptoms,
        InfectionState::Recovered,
        InfectionState::Dead,
    ];

    pub fn as_str(self) -> &'static str {
        match self {
            InfectionState::Susceptible => "susceptible",
            InfectionState::PreExposed => "pre_exposed",
            InfectionState::Exposed => "exposed",
            InfectionState::Asymptomatic => "asymptomatic",
            InfectionState::MinorSymptoms => "minor_symptoms",
            InfectionState::SevereSymptoms => "severe_symptoms",
            InfectionState::Recovered => "recovered",
            InfectionState::Dead => "dead",
        }
    }

    pub fn parse(s: &str) -> Option<Self> {
        Self::ALL.into_iter().find(|v| v.as_str() == s)
    }

    /// States that can pass the infection on.
    pub fn is_infectious(self) -> bool {
        matches!(
            self,
            InfectionState::Exposed
                | InfectionState::Asymptomatic
                | InfectionState::MinorSymptoms
                | InfectionState::SevereSymptoms
        )
    }

    pub fn is_symptomatic(self) -> bool {
        matches!(self, InfectionState::MinorSymptoms | InfectionState::SevereSymptoms)
    }

    /// Whether `self -> next` is an edge of the transition diagram.
    /// Staying in the same state is always allowed.
    pub fn can_transition_to(self, next: InfectionState) -> bool {
        use InfectionState::*;
        self == next
            || matches!(
                (self, next),
                (Susceptible, PreExposed)
                    | (PreExposed, Exposed)
                    | (Exposed, Asymptomatic)
                    | (Exposed, MinorSymptoms)
                    | (Exposed, SevereSymptoms)
                    | (Asymptomatic, Recovered)
                    | (MinorSymptoms, Recovered)
                    | (SevereSymptoms, Recovered)
                    | (SevereSymptoms, Dead)
            )
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum Branch {
    Asymptomatic,
    Minor,
    Severe,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum SevereOutcome {
    Dead,
    Recovered,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct DiseaseCourse {
    pub branch: Branch,
    pub exposed_days: u32,
    pub symptomatic_days: u32,
    /// Only meaningful when `branch == Severe`.
    pub severe_outcome: SevereOutcome,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct DayRange {
    pub min: u32,
    pub max: u32,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct EpidemicParams {
    pub alpha_home: f64,
    pub alpha_work: f64,
    pub alpha_school: f64,
    pub alpha_restaurant: f64,
    /// Age exponent: the age factor is `(age / 10)^(3 * gamma)`.
    pub gamma: f64,
    pub p_asymptomatic: f64,
    pub p_minor: f64,
    pub p_severe: f64,
    pub p_death: f64,
    pub exposed_days: DayRange,
    pub symptomatic_days: DayRange,
}

impl Default for EpidemicParams {
    fn default() -> Self {
        Self {
            alpha_home: 0.01,
            alpha_work: 0.0004,
            alpha_school: 0.001,
            alpha_restaurant: 0.004,
            gamma: 0.0,
            p_asymptomatic: 0.3,
            p_minor: 0.6,
            p_severe: 0.1,
            p_death: 0.2,
            exposed_days: DayRange { min: 2, max: 5 },
            symptomatic_days: DayRange { min: 3, max: 7 },
        }
    }
}

impl EpidemicParams {
    /// Per-place transmission probability. Hospitals have none.
    pub fn alpha(&self, kind: PlaceKind) -> Option<f64> {
        match kind {
            PlaceKind::Home => Some(self.alpha_home),
            PlaceKind::Workplace => Some(self.alpha_work),
            PlaceKind::School => Some(self.alpha_school),
            PlaceKind::Restaurant => Some(self.alpha_restaurant),
            PlaceKind::Hospital => None,
        }
    }

    pub fn validate(&self) -> Result<()> {
        let probs = [
            ("epidemic.alpha_home", self.alpha_home),
            ("epidemic.alpha_work", self.alpha_work),
            ("epidemic.alpha_school", self.alpha_school),
            ("epidemic.alpha_restaurant", self.alpha_restaurant),
            ("epidemic.p_asymptomatic", self.p_asymptomatic),
            ("epidemic.p_minor", self.p_minor),
            ("epidemic.p_severe", self.p_severe),
            ("epidemic.p_death", self.p_death),
        ];
        for (field, p) in probs {
            if !(0.0..=1.0).contains(&p) {
                return Err(Error::config(field, format!("{p} is not a probability")));
            }
        }
        let total = self.p_asymptomatic + self.p_minor + self.p_severe;
        if (total - 1.0).abs() > 1e-9 {
            return Err(Error::config(
                "epidemic.p_severe",
                format!("branch probabilities sum to {total}, expected 1"),
            ));
        }
        if !(self.gamma.is_finite() && self.gamma >= 0.0) {
            return Err(Error::config("epidemic.gamma", "must be a nonnegative number"));
        }
        for (field, r) in [
            ("epidemic.exposed_days", self.exposed_days),
            ("epidemic.symptomatic_days", self.symptomatic_days),
        ] {
            if r.min == 0 || r.min > r.max {
                return Err(Error::config(field, "need 1 <= min <= max"));
            }
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ExposureContext {
    pub place: PlaceKind,
    /// Co-located infectious agents.
    pub beta: u32,
    pub age: u32,
    pub vaccinated: bool,
}

/// Hourly infection probability before clamping:
/// `[1 - (1 - alpha)^beta] * (age / 10)^(3 gamma) / 10^delta`.
pub fn unclamped_probability(alpha: f64, beta: u32, age: u32, gamma: f64, vaccinated: bool) -> f64 {
    if beta == 0 {
        return 0.0;
    }
    let contact = 1.0 - (1.0 - alpha).powi(beta as i32);
    let age_factor = if gamma == 0.0 {
        1.0
    } else {
        (age as f64 / 10.0).powf(3.0 * gamma)
    };
    let p = contact * age_factor;
    if vaccinated {
        p / 10.0
    } else {
        p
    }
}

pub fn infection_probability(ctx: &ExposureContext, params: &EpidemicParams) -> f64 {
    let Some(alpha) = params.alpha(ctx.place) else {
        return 0.0;
    };
    unclamped_probability(alpha, ctx.beta, ctx.age, params.gamma, ctx.vaccinated).clamp(0.0, 1.0)
}

/// The single Bernoulli draw deciding whether `agent` is infected during
/// simulation hour `step`.
pub fn infection_draw(rng: &KeyedRng, step: u32, agent: u32, p: f64) -> bool {
    p > 0.0 && rng.chance(Stream::Infection, &[step as u64, agent as u64], p)
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Occupant {
    pub agent: u32,
    pub state: InfectionState,
    pub age: u32,
    pub vaccinated: bool,
}

/// Newly infected agents among the occupants of one place for one hour.
pub fn evaluate_place_exposures(
    place: PlaceKind,
    occupants: &[Occupant],
    params: &EpidemicParams,
    rng: &KeyedRng,
    step: u32,
) -> Vec<u32> {
    let beta = occupants.iter().filter(|o| o.state.is_infectious()).count() as u32;
    if beta == 0 {
        return Vec::new();
    }
    occupants
        .iter()
        .filter(|o| o.state == InfectionState::Susceptible)
        .filter(|o| {
            let ctx = ExposureContext {
                place,
                beta,
                age: o.age,
                vaccinated: o.vaccinated,
            };
            infection_draw(rng, step, o.agent, infection_probability(&ctx, params))
        })
        .map(|o| o.agent)
        .collect()
}

/// Disease course for `agent`, infected at simulation hour `step`.
pub fn sample_course(rng: &KeyedRng, params: &EpidemicParams, agent: u32, step: u32) -> DiseaseCourse {
    let key = [agent as u64, step as u64];
    let u = rng.uniform(Stream::CourseBranch, &key);
    let branch = if u < params.p_asymptomatic {
        Branch::Asymptomatic
    } else if u < params.p_asymptomatic + params.p_minor {
        Branch::Minor
    } else {
        Branch::Severe
    };
    let exposed_days = rng.int_inclusive(
        Stream::CourseExposedDays,
        &key,
        params.exposed_days.min,
        params.exposed_days.max,
    );
    let symptomatic_days = rng.int_inclusive(
        Stream::CourseSymptomDays,
        &key,
        params.symptomatic_days.min,
        params.symptomatic_days.max,
    );
    let severe_outcome = if rng.chance(Stream::CourseOutcome, &key, params.p_death) {
        SevereOutcome::Dead
    } else {
        SevereOutcome::Recovered
    };
    DiseaseCourse {
        branch,
        exposed_days,
        symptomatic_days,
        severe_outcome,
    }
}

/// Infection state of one agent plus the days left in that state.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct AgentHealth {
    pub state: InfectionState,
    pub days_left: u32,
    pub course: Option<DiseaseCourse>,
}

impl AgentHealth {
    pub fn susceptible() -> Self {
        Self {
            state: InfectionState::Susceptible,
            days_left: 0,
            course: None,
        }
    }

    /// Freshly infected: pre-exposed until the next midnight.
    pub fn infected(course: DiseaseCourse) -> Self {
        Self {
            state: InfectionState::PreExposed,
            days_left: 0,
            course: Some(course),
        }
    }

    /// Initial case of a run, placed directly in the exposed state.
    pub fn seeded_exposed(course: DiseaseCourse) -> Self {
        Self {
            state: InfectionState::Exposed,
            days_left: course.exposed_days,
            course: Some(course),
        }
    }
}

/// Apply one midnight to `health`.
pub fn advance_state_daily(health: AgentHealth) -> AgentHealth {
    use InfectionState::*;
    let Some(course) = health.course else {
        return health;
    };
    let mut next = health;
    match health.state {
        Susceptible | Recovered | Dead => {}
        PreExposed => {
            next.state = Exposed;
            next.days_left = course.exposed_days;
        }
        Exposed | Asymptomatic | MinorSymptoms | SevereSymptoms => {
            next.days_left = health.days_left.saturating_sub(1);
            if next.days_left == 0 {
                next.state = match (health.state, course.branch, course.severe_outcome) {
                    (Exposed, Branch::Asymptomatic, _) => Asymptomatic,
                    (Exposed, Branch::Minor, _) => MinorSymptoms,
                    (Exposed, Branch::Severe, _) => SevereSymptoms,
                    (SevereSymptoms, _, SevereOutcome::Dead) => Dead,
                    _ => Recovered,
                };
                if health.state == Exposed {
                    next.days_left = course.symptomatic_days;
                }
            }
        }
    }
    next
}
