//! The 4,800-hour simulation loop and its recorded trace.
//!
//! Within an hour, movement is resolved before exposures are evaluated. An
//! agent infected during hour `h` is pre-exposed (not infectious) from then
//! on. Disease states advance at midnight, after which beds are released and
//! new severe cases admitted in ascending agent order.

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::calendar::{SimClock, HOURS_PER_DAY, SIM_DAYS};
use crate::epidemic::{
    advance_state_daily, infection_draw, infection_probability, sample_course, AgentHealth, EpidemicParams,
    ExposureContext, InfectionState,
};
use crate::error::{Error, Result};
use crate::mobility::{
    admit_hospital, decide_restaurant_visits, discharge_hospital, scheduled_place, segment_of, AgentRef,
    Condition, MobilitySettings, Occupancy, RestaurantPlan, Slot, SEGMENTS_PER_DAY, SEGMENT_STARTS,
};
use crate::place::{Place, PlaceCode, PlaceKind};
use crate::rng::{KeyedRng, Stream};
use crate::world::{HospitalId, World};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct EngineOptions {
    /// Worker threads for exposure evaluation. Results do not depend on it.
    pub workers: usize,
    pub mobility: MobilitySettings,
}

impl Default for EngineOptions {
    fn default() -> Self {
        Self {
            workers: 1,
            mobility: MobilitySettings::default(),
        }
    }
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct DailyCounters {
    pub new_infections: u32,
    pub deaths: u32,
    /// Occupied beds across all hospitals at the end of the day.
    pub hospital_occupancy: u32,
}

/// Infections attributed to the kind of place where they happened.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct InfectionsByPlace {
    pub home: u64,
    pub workplace: u64,
    pub school: u64,
    pub restaurant: u64,
}

impl InfectionsByPlace {
    fn record(&mut self, kind: PlaceKind) {
        match kind {
            PlaceKind::Home => self.home += 1,
            PlaceKind::Workplace => self.workplace += 1,
            PlaceKind::School => self.school += 1,
            PlaceKind::Restaurant => self.restaurant += 1,
            PlaceKind::Hospital => {}
        }
    }

    pub fn total(&self) -> u64 {
        self.home + self.workplace + self.school + self.restaurant
    }
}

/// Full record of a run. Places are stored once per movement segment since
/// nobody moves inside one; `place_at` expands them to hours.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct SimulationTrace {
    n_adults: usize,
    n_children: usize,
    places: Vec<PlaceCode>,
    states: Vec<InfectionState>,
    pub daily: Vec<DailyCounters>,
    pub infections_by_place: InfectionsByPlace,
    pub seed_agent: u32,
}

impl SimulationTrace {
    fn new(n_adults: usize, n_children: usize, seed_agent: u32) -> Self {
        let n = n_adults + n_children;
        Self {
            n_adults,
            n_children,
            places: Vec::with_capacity(SIM_DAYS as usize * SEGMENTS_PER_DAY * n),
            states: Vec::with_capacity(SIM_DAYS as usize * n),
            daily: Vec::with_capacity(SIM_DAYS as usize),
            infections_by_place: InfectionsByPlace::default(),
            seed_agent,
        }
    }

    pub fn n_adults(&self) -> usize {
        self.n_adults
    }

    pub fn n_children(&self) -> usize {
        self.n_children
    }

    pub fn n_agents(&self) -> usize {
        self.n_adults + self.n_children
    }

    pub fn days_recorded(&self) -> usize {
        self.states.len() / self.n_agents().max(1)
    }

    /// Places of every agent during simulation hour `step`.
    pub fn places_at_step(&self, step: u32) -> &[PlaceCode] {
        let n = self.n_agents();
        let day = (step / HOURS_PER_DAY) as usize;
        let seg = segment_of(step % HOURS_PER_DAY);
        let start = (day * SEGMENTS_PER_DAY + seg) * n;
        &self.places[start..start + n]
    }

    pub fn place_at(&self, step: u32, agent: u32) -> Place {
        Place::unpack(self.places_at_step(step)[agent as usize])
    }

    /// End-of-day infection states of every agent on zero-based `day`.
    pub fn states_on(&self, day: u32) -> &[InfectionState] {
        let n = self.n_agents();
        &self.states[day as usize * n..(day as usize + 1) * n]
    }

    pub fn state_on(&self, day: u32, agent: u32) -> InfectionState {
        self.states_on(day)[agent as usize]
    }

    /// Agents that were ever anything but susceptible.
    pub fn ever_infected(&self) -> Vec<bool> {
        let n = self.n_agents();
        let mut out = vec![false; n];
        for day in self.states.chunks(n) {
            for (o, s) in out.iter_mut().zip(day) {
                *o |= *s != InfectionState::Susceptible;
            }
        }
        out
    }
}

/// Mutable state of a run in progress.
pub struct Simulation<'w> {
    world: &'w World,
    params: EpidemicParams,
    rng: KeyedRng,
    options: EngineOptions,
    pool: rayon::ThreadPool,
    health: Vec<AgentHealth>,
    hospital_of: Vec<Option<HospitalId>>,
    occupancy: Occupancy,
    plan: RestaurantPlan,
    places: Vec<PlaceCode>,
    /// Infectious agents per place, per place kind, for the current segment.
    infectious_at: [Vec<u32>; 4],
    ages: Vec<u32>,
    vaccinated: Vec<bool>,
    next: Option<SimClock>,
    today: DailyCounters,
    trace: SimulationTrace,
}

fn kind_slot(kind: PlaceKind) -> Option<usize> {
    match kind {
        PlaceKind::Home => Some(0),
        PlaceKind::Workplace => Some(1),
        PlaceKind::School => Some(2),
        PlaceKind::Restaurant => Some(3),
        PlaceKind::Hospital => None,
    }
}

fn place_index(p: Place) -> Option<(usize, usize)> {
    let (kind, idx) = match p {
        Place::Home(id) => (PlaceKind::Home, id.index()),
        Place::Workplace(id) => (PlaceKind::Workplace, id.index()),
        Place::School(id) => (PlaceKind::School, id.index()),
        Place::Restaurant(id) => (PlaceKind::Restaurant, id.index()),
        Place::Hospital(_) | Place::Dead => return None,
    };
    Some((kind_slot(kind)?, idx))
}

const SLOT_KINDS: [PlaceKind; 4] = [
    PlaceKind::Home,
    PlaceKind::Workplace,
    PlaceKind::School,
    PlaceKind::Restaurant,
];

impl<'w> Simulation<'w> {
    pub fn new(world: &'w World, params: &EpidemicParams, seed: u64, options: EngineOptions) -> Result<Self> {
        params.validate()?;
        if world.adults.is_empty() {
            return Err(Error::config("world.counts.adults", "at least one adult is needed to seed the run"));
        }
        let pool = rayon::ThreadPoolBuilder::new()
            .num_threads(options.workers.max(1))
            .build()
            .map_err(|e| Error::Consistency(format!("cannot start worker pool: {e}")))?;
        let rng = KeyedRng::new(seed);
        let n = world.agent_count();
        let mut health = vec![AgentHealth::susceptible(); n];
        let seed_agent = rng.int_inclusive(Stream::SeedCase, &[0], 0, world.adults.len() as u32 - 1);
        health[seed_agent as usize] = AgentHealth::seeded_exposed(sample_course(&rng, params, seed_agent, 0));

        let ages = world
            .adults
            .iter()
            .map(|a| a.age)
            .chain(world.children.iter().map(|c| c.age))
            .collect();
        let vaccinated = world
            .adults
            .iter()
            .map(|a| a.vaccinated)
            .chain(world.children.iter().map(|_| false))
            .collect();
        let mut trace = SimulationTrace::new(world.adults.len(), world.children.len(), seed_agent);
        trace.infections_by_place = InfectionsByPlace::default();
        Ok(Self {
            world,
            params: params.clone(),
            rng,
            options,
            pool,
            health,
            hospital_of: vec![None; n],
            occupancy: Occupancy::new(world),
            plan: RestaurantPlan::empty(Slot::Night, n),
            places: vec![PlaceCode::DEAD; n],
            infectious_at: [
                vec![0; world.homes.len()],
                vec![0; world.workplaces.len()],
                vec![0; world.schools.len()],
                vec![0; world.restaurants.len()],
            ],
            ages,
            vaccinated,
            next: Some(SimClock::start()),
            today: DailyCounters::default(),
            trace,
        })
    }

    pub fn clock(&self) -> Option<SimClock> {
        self.next
    }

    pub fn health(&self) -> &[AgentHealth] {
        &self.health
    }

    pub fn occupancy(&self) -> &Occupancy {
        &self.occupancy
    }

    pub fn current_places(&self) -> &[PlaceCode] {
        &self.places
    }

    pub fn restaurant_plan(&self) -> &RestaurantPlan {
        &self.plan
    }

    fn condition(&self, agent: usize) -> Condition {
        let h = &self.health[agent];
        if h.state == InfectionState::Dead {
            Condition::Dead
        } else if let Some(hosp) = self.hospital_of[agent] {
            Condition::Hospitalized(hosp)
        } else if h.state.is_symptomatic() {
            Condition::StaysHome
        } else {
            Condition::Circulating
        }
    }

    /// Re-resolve restaurant decisions (meal slots) and everybody's place.
    fn move_agents(&mut self, clock: SimClock) {
        let world = self.world;
        let day_kind = clock.day_kind();
        let slot = Slot::of(day_kind, clock.hour());
        let n = world.agent_count();
        let conditions: Vec<Condition> = (0..n).map(|i| self.condition(i)).collect();
        if slot.is_meal() {
            let eligible: Vec<bool> = conditions.iter().map(|c| *c == Condition::Circulating).collect();
            self.plan = decide_restaurant_visits(
                slot,
                clock.day_index(),
                day_kind,
                world,
                &eligible,
                &mut self.occupancy,
                &self.rng,
            );
        } else {
            self.occupancy.reset_restaurants();
            self.plan = RestaurantPlan::empty(slot, n);
        }
        for (i, cond) in conditions.into_iter().enumerate() {
            let agent = AgentRef::from_index(world, i as u32);
            let place = scheduled_place(agent, day_kind, clock.hour(), world, cond, &self.plan, &self.options.mobility);
            self.places[i] = place.pack();
        }
        self.trace.places.extend_from_slice(&self.places);
        self.refresh_infectious_counts();
    }

    fn refresh_infectious_counts(&mut self) {
        for v in &mut self.infectious_at {
            v.iter_mut().for_each(|c| *c = 0);
        }
        for (code, h) in self.places.iter().zip(&self.health) {
            if h.state.is_infectious() {
                if let Some((k, idx)) = place_index(Place::unpack(*code)) {
                    self.infectious_at[k][idx] += 1;
                }
            }
        }
    }

    /// Execute the next hour. Returns `false` once the run is complete.
    pub fn step_hour(&mut self) -> Result<bool> {
        let Some(clock) = self.next else {
            return Ok(false);
        };
        let hour = clock.hour();
        if SEGMENT_STARTS.contains(&hour) {
            self.move_agents(clock);
        }
        self.evaluate_exposures(clock.step_index());
        if hour == HOURS_PER_DAY - 1 {
            self.end_of_day()?;
        }
        self.next = clock.advance();
        Ok(self.next.is_some())
    }

    fn evaluate_exposures(&mut self, step: u32) {
        let places = &self.places;
        let health = &self.health;
        let counts = &self.infectious_at;
        let params = &self.params;
        let rng = &self.rng;
        let ages = &self.ages;
        let vaccinated = &self.vaccinated;
        let newly: Vec<(u32, usize)> = self.pool.install(|| {
            (0..places.len())
                .into_par_iter()
                .with_min_len(1024)
                .filter_map(|i| {
                    if health[i].state != InfectionState::Susceptible {
                        return None;
                    }
                    let (k, idx) = place_index(Place::unpack(places[i]))?;
                    let beta = counts[k][idx];
                    if beta == 0 {
                        return None;
                    }
                    let ctx = ExposureContext {
                        place: SLOT_KINDS[k],
                        beta,
                        age: ages[i],
                        vaccinated: vaccinated[i],
                    };
                    let p = infection_probability(&ctx, params);
                    infection_draw(rng, step, i as u32, p).then_some((i as u32, k))
                })
                .collect()
        });
        for (agent, k) in newly {
            let course = sample_course(&self.rng, &self.params, agent, step);
            self.health[agent as usize] = AgentHealth::infected(course);
            self.trace.infections_by_place.record(SLOT_KINDS[k]);
            self.today.new_infections += 1;
        }
    }

    fn end_of_day(&mut self) -> Result<()> {
        self.trace.states.extend(self.health.iter().map(|h| h.state));
        let is_last_day = self.trace.days_recorded() == SIM_DAYS as usize;

        // Midnight.
        let mut new_severe = Vec::new();
        for i in 0..self.health.len() {
            let before = self.health[i].state;
            let after = advance_state_daily(self.health[i]);
            if !before.can_transition_to(after.state) {
                return Err(Error::Consistency(format!(
                    "agent {i} moved {} -> {}",
                    before.as_str(),
                    after.state.as_str()
                )));
            }
            self.health[i] = after;
            if before == InfectionState::SevereSymptoms && after.state != InfectionState::SevereSymptoms {
                if let Some(h) = self.hospital_of[i].take() {
                    discharge_hospital(h, &mut self.occupancy);
                }
            }
            if after.state == InfectionState::Dead && before != InfectionState::Dead {
                self.today.deaths += 1;
            }
            if after.state == InfectionState::SevereSymptoms && before != InfectionState::SevereSymptoms {
                new_severe.push(i);
            }
        }
        for i in new_severe {
            let home = AgentRef::from_index(self.world, i as u32).home(self.world);
            self.hospital_of[i] = admit_hospital(home, self.world, &mut self.occupancy);
        }
        self.today.hospital_occupancy = self.occupancy.hospitals.iter().sum();
        self.trace.daily.push(std::mem::take(&mut self.today));
        if is_last_day {
            log::debug!("simulation complete");
        }
        Ok(())
    }

    pub fn finish(self) -> Result<SimulationTrace> {
        if self.next.is_some() {
            return Err(Error::Consistency("trace requested before the last hour".into()));
        }
        Ok(self.trace)
    }
}

/// Run the full 200 days. `on_day` is called with the number of completed days.
pub fn run_with_progress(
    world: &World,
    params: &EpidemicParams,
    seed: u64,
    options: EngineOptions,
    mut on_day: impl FnMut(u32),
) -> Result<SimulationTrace> {
    let mut sim = Simulation::new(world, params, seed, options)?;
    loop {
        let hour = sim.clock().map(|c| c.hour());
        let more = sim.step_hour()?;
        if hour == Some(HOURS_PER_DAY - 1) {
            on_day(sim.trace.daily.len() as u32);
        }
        if !more {
            break;
        }
    }
    sim.finish()
}

pub fn run(world: &World, params: &EpidemicParams, seed: u64, options: EngineOptions) -> Result<SimulationTrace> {
    run_with_progress(world, params, seed, options, |_| {})
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::scenario::{ScenarioConfig, ScenarioKind};
    use crate::world::{build_world, WorldConfig};

    fn small(kind: ScenarioKind, seed: u64) -> (World, EpidemicParams) {
        let cfg = WorldConfig {
            scale_factor: 0.02,
            ..WorldConfig::default()
        };
        let s = ScenarioConfig::preset(kind);
        let w = build_world(&cfg, &s, seed).unwrap();
        let p = s.configure_params(&EpidemicParams::default()).unwrap();
        (w, p)
    }

    #[test]
    fn trace_dimensions() {
        let (w, p) = small(ScenarioKind::Mediator, 1);
        let t = run(&w, &p, 1, EngineOptions::default()).unwrap();
        assert_eq!(t.days_recorded(), 200);
        assert_eq!(t.daily.len(), 200);
        assert_eq!(t.places.len(), 200 * SEGMENTS_PER_DAY * w.agent_count());
        assert_eq!(t.places_at_step(4_799).len(), w.agent_count());
    }

    #[test]
    fn zero_alpha_means_only_the_seed_case() {
        let (w, mut p) = small(ScenarioKind::Mediator, 2);
        p.alpha_home = 0.0;
        p.alpha_work = 0.0;
        p.alpha_school = 0.0;
        p.alpha_restaurant = 0.0;
        let t = run(&w, &p, 2, EngineOptions::default()).unwrap();
        let ever: Vec<usize> = t
            .ever_infected()
            .iter()
            .enumerate()
            .filter(|(_, e)| **e)
            .map(|(i, _)| i)
            .collect();
        assert_eq!(ever, vec![t.seed_agent as usize]);
        assert_eq!(t.infections_by_place.total(), 0);
        assert_eq!(t.state_on(0, t.seed_agent), InfectionState::Exposed);
    }

    #[test]
    fn first_shared_home_hour_infects_with_certainty() {
        // alpha_home = 1, gamma = 0, nobody vaccinated. Pick the first seed
        // whose index case shares a home.
        let (w, p, seed, mates) = (3..50)
            .find_map(|seed| {
                let (mut w, mut p) = small(ScenarioKind::Mediator, seed);
                for a in &mut w.adults {
                    a.vaccinated = false;
                }
                p.alpha_home = 1.0;
                p.alpha_work = 0.0;
                p.alpha_school = 0.0;
                p.alpha_restaurant = 0.0;
                let index = Simulation::new(&w, &p, seed, EngineOptions::default()).unwrap().trace.seed_agent as usize;
                let home = if index < w.adults.len() {
                    w.adults[index].home
                } else {
                    w.children[index - w.adults.len()].home
                };
                let mates: Vec<usize> = w
                    .household(home)
                    .adults
                    .iter()
                    .map(|a| a.index())
                    .chain(w.household(home).children.iter().map(|c| w.adults.len() + c.index()))
                    .filter(|&i| i != index)
                    .collect();
                (!mates.is_empty()).then_some((w, p, seed, mates))
            })
            .expect("some seed has a shared home");
        let mut sim = Simulation::new(&w, &p, seed, EngineOptions::default()).unwrap();
        // Hour 0 of day 0 is spent at home by everyone.
        sim.step_hour().unwrap();
        for &m in &mates {
            assert_eq!(sim.health()[m].state, InfectionState::PreExposed, "housemate {m}");
        }
        let t = {
            while sim.step_hour().unwrap() {}
            sim.finish().unwrap()
        };
        assert_eq!(t.infections_by_place.home as usize, mates.len());
    }

    #[test]
    fn worker_count_does_not_change_the_trace() {
        let (w, p) = small(ScenarioKind::Collider, 4);
        let one = run(&w, &p, 4, EngineOptions::default()).unwrap();
        let four = run(
            &w,
            &p,
            4,
            EngineOptions {
                workers: 4,
                ..EngineOptions::default()
            },
        )
        .unwrap();
        assert_eq!(one, four);
    }

    #[test]
    fn population_is_conserved_and_transitions_are_legal() {
        let (w, p) = small(ScenarioKind::Mediator, 5);
        let t = run(&w, &p, 5, EngineOptions::default()).unwrap();
        let n = w.agent_count();
        for day in 0..200 {
            assert_eq!(t.states_on(day).len(), n);
            if day > 0 {
                for (a, b) in t.states_on(day - 1).iter().zip(t.states_on(day)) {
                    assert!(a.can_transition_to(*b), "{a:?} -> {b:?}");
                }
            }
        }
        let total: u32 = t.daily.iter().map(|d| d.new_infections).sum();
        let ever = t.ever_infected().iter().filter(|e| **e).count() as u32;
        assert_eq!(total + 1, ever);
    }

    #[test]
    fn quiet_hours_do_not_change_states() {
        let (w, mut p) = small(ScenarioKind::Mediator, 6);
        p.alpha_home = 0.0;
        p.alpha_work = 0.0;
        p.alpha_school = 0.0;
        p.alpha_restaurant = 0.0;
        let mut sim = Simulation::new(&w, &p, 6, EngineOptions::default()).unwrap();
        let before: Vec<_> = sim.health().to_vec();
        for _ in 0..23 {
            sim.step_hour().unwrap();
        }
        assert_eq!(sim.health(), &before[..]);
    }

    #[test]
    fn occupancy_is_carried_within_a_slot_and_reset_at_boundaries() {
        let (w, p) = small(ScenarioKind::Mediator, 7);
        let mut sim = Simulation::new(&w, &p, 7, EngineOptions::default()).unwrap();
        // Day 0 is a weekday. Run to the end of hour 17 (evening starts).
        for _ in 0..18 {
            sim.step_hour().unwrap();
        }
        let evening = sim.occupancy().restaurants.clone();
        let seated: u32 = evening.iter().sum();
        assert_eq!(seated as usize, sim.restaurant_plan().assignment.iter().flatten().count());
        sim.step_hour().unwrap();
        assert_eq!(sim.occupancy().restaurants, evening);
        for _ in 19..21 {
            sim.step_hour().unwrap();
        }
        sim.step_hour().unwrap(); // hour 21: night
        assert!(sim.occupancy().restaurants.iter().all(|&c| c == 0));
    }
}
