//! Post-hoc checks of a finished trace against the model's rules: disease
//! transitions, population conservation, capacities and who may be where.

use serde::Serialize;

use crate::calendar::{self, DayKind, HOURS_PER_DAY};
use crate::engine::SimulationTrace;
use crate::epidemic::InfectionState;
use crate::mobility::{restaurant_open, Slot};
use crate::place::{Place, PlaceCode};
use crate::world::World;

const MAX_EXAMPLES: usize = 5;

#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize)]
pub struct Tally {
    pub count: u64,
    pub examples: Vec<String>,
}

impl Tally {
    fn record(&mut self, msg: impl FnOnce() -> String) {
        self.count += 1;
        if self.examples.len() < MAX_EXAMPLES {
            self.examples.push(msg());
        }
    }

    pub fn is_clean(&self) -> bool {
        self.count == 0
    }
}

#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize)]
pub struct StateAudit {
    /// Day-over-day changes that are not edges of the transition diagram.
    pub illegal_transitions: Tally,
    /// Pre-exposed agents not exposed on the following day.
    pub pre_exposed_not_advanced: Tally,
    /// Days whose state counts do not sum to the population.
    pub conservation: Tally,
    /// Days on which cumulative infections or deaths fell.
    pub monotonicity: Tally,
}

impl StateAudit {
    pub fn is_clean(&self) -> bool {
        self.illegal_transitions.is_clean()
            && self.pre_exposed_not_advanced.is_clean()
            && self.conservation.is_clean()
            && self.monotonicity.is_clean()
    }
}

#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize)]
pub struct PlaceAudit {
    pub restaurant_over_capacity: Tally,
    pub hospital_over_capacity: Tally,
    pub closed_restaurant_occupied: Tally,
    pub weekday_child_in_restaurant: Tally,
    pub unaccompanied_child_in_restaurant: Tally,
    /// Hospital occupants whose state that day is not severe.
    pub non_severe_in_hospital: Tally,
    /// Dead agents with a place, or living agents marked dead.
    pub dead_token_mismatch: Tally,
}

impl PlaceAudit {
    pub fn is_clean(&self) -> bool {
        [
            &self.restaurant_over_capacity,
            &self.hospital_over_capacity,
            &self.closed_restaurant_occupied,
            &self.weekday_child_in_restaurant,
            &self.unaccompanied_child_in_restaurant,
            &self.non_severe_in_hospital,
            &self.dead_token_mismatch,
        ]
        .iter()
        .all(|t| t.is_clean())
    }
}

pub fn audit_states(trace: &SimulationTrace) -> StateAudit {
    let mut out = StateAudit::default();
    let n = trace.n_agents();
    let days = trace.days_recorded() as u32;
    let mut prev_ever = 0usize;
    let mut prev_dead = 0usize;
    let mut ever = vec![false; n];
    for day in 0..days {
        let today = trace.states_on(day);
        let mut counts = [0usize; InfectionState::ALL.len()];
        for s in today {
            counts[*s as usize] += 1;
        }
        let total: usize = counts.iter().sum();
        if total != n {
            out.conservation.record(|| format!("day {day}: {total} agents of {n}"));
        }
        for (e, s) in ever.iter_mut().zip(today) {
            *e |= *s != InfectionState::Susceptible;
        }
        let ever_count = ever.iter().filter(|e| **e).count();
        let dead = counts[InfectionState::Dead as usize];
        if ever_count < prev_ever || dead < prev_dead {
            out.monotonicity.record(|| format!("day {day}"));
        }
        prev_ever = ever_count;
        prev_dead = dead;
        if day == 0 {
            continue;
        }
        let yesterday = trace.states_on(day - 1);
        for (agent, (a, b)) in yesterday.iter().zip(today).enumerate() {
            if !a.can_transition_to(*b) {
                out.illegal_transitions
                    .record(|| format!("agent {agent} day {day}: {} -> {}", a.as_str(), b.as_str()));
            }
            if *a == InfectionState::PreExposed && *b != InfectionState::Exposed {
                out.pre_exposed_not_advanced
                    .record(|| format!("agent {agent} day {day}: pre_exposed -> {}", b.as_str()));
            }
        }
    }
    out
}

pub fn audit_places(trace: &SimulationTrace, world: &World) -> PlaceAudit {
    let mut out = PlaceAudit::default();
    let na = world.adults.len();
    let mut rest_count = vec![0u32; world.restaurants.len()];
    let mut hosp_count = vec![0u32; world.hospitals.len()];
    for day in 0..trace.days_recorded() as u32 {
        let kind = calendar::day_kind_of(day);
        let states = trace.states_on(day);
        for hour in 0..HOURS_PER_DAY {
            let step = day * HOURS_PER_DAY + hour;
            let slot = Slot::of(kind, hour);
            let places = trace.places_at_step(step);
            rest_count.iter_mut().for_each(|c| *c = 0);
            hosp_count.iter_mut().for_each(|c| *c = 0);
            for (agent, &code) in places.iter().enumerate() {
                let dead = states[agent] == InfectionState::Dead;
                if dead != (code == PlaceCode::DEAD) {
                    out.dead_token_mismatch
                        .record(|| format!("agent {agent} step {step}: state {}", states[agent].as_str()));
                }
                match Place::unpack(code) {
                    Place::Restaurant(r) => {
                        rest_count[r.index()] += 1;
                        if agent >= na {
                            check_child_in_restaurant(trace, world, kind, step, agent, code, &mut out);
                        }
                    }
                    Place::Hospital(h) => {
                        hosp_count[h.index()] += 1;
                        if states[agent] != InfectionState::SevereSymptoms {
                            out.non_severe_in_hospital
                                .record(|| format!("agent {agent} step {step}: {}", states[agent].as_str()));
                        }
                    }
                    _ => {}
                }
            }
            for (r, &c) in rest_count.iter().enumerate() {
                let rest = &world.restaurants[r];
                if c > rest.seats {
                    out.restaurant_over_capacity
                        .record(|| format!("{} step {step}: {c} > {}", rest.name, rest.seats));
                }
                if c > 0 && !restaurant_open(rest.short_hours_status, slot) {
                    out.closed_restaurant_occupied
                        .record(|| format!("{} step {step}: {c} while closed", rest.name));
                }
            }
            for (h, &c) in hosp_count.iter().enumerate() {
                let hosp = &world.hospitals[h];
                if c > hosp.beds {
                    out.hospital_over_capacity
                        .record(|| format!("{} step {step}: {c} > {}", hosp.name, hosp.beds));
                }
            }
        }
    }
    out
}

fn check_child_in_restaurant(
    trace: &SimulationTrace,
    world: &World,
    kind: DayKind,
    step: u32,
    agent: usize,
    code: PlaceCode,
    out: &mut PlaceAudit,
) {
    if kind == DayKind::Weekday {
        out.weekday_child_in_restaurant
            .record(|| format!("child {agent} step {step}"));
        return;
    }
    let child = &world.children[agent - world.adults.len()];
    let places = trace.places_at_step(step);
    let accompanied = world
        .household(child.home)
        .adults
        .iter()
        .any(|a| places[a.index()] == code);
    if !accompanied {
        out.unaccompanied_child_in_restaurant
            .record(|| format!("child {agent} step {step}"));
    }
}
