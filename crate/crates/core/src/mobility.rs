//! Hourly whereabouts: weekday/holiday flow tables, health overrides, policy
//! statuses and capacity-limited restaurant and hospital choice.

use serde::{Deserialize, Serialize};

use crate::calendar::DayKind;
use crate::place::Place;
use crate::rng::{KeyedRng, Stream};
use crate::world::{AdultId, ChildId, HomeId, HospitalId, PolicyStatus, RestaurantId, World};

/// Schedule block of a day. Night covers 21:00–9:00 on weekdays and
/// 21:00–12:00 on holidays.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum Slot {
    Night,
    Morning,
    Lunch,
    Afternoon,
    Evening,
}

impl Slot {
    pub fn of(kind: DayKind, hour: u32) -> Slot {
        match (kind, hour) {
            (_, 12) => Slot::Lunch,
            (_, 13..=16) => Slot::Afternoon,
            (_, 17..=20) => Slot::Evening,
            (DayKind::Weekday, 9..=11) => Slot::Morning,
            _ => Slot::Night,
        }
    }

    pub fn is_meal(self) -> bool {
        matches!(self, Slot::Lunch | Slot::Evening)
    }

    pub fn index(self) -> u64 {
        self as u64
    }
}

/// First hour of each span within which nobody moves. Every slot boundary on
/// either kind of day is one of these.
pub const SEGMENT_STARTS: [u32; 6] = [0, 9, 12, 13, 17, 21];
pub const SEGMENTS_PER_DAY: usize = SEGMENT_STARTS.len();

pub fn segment_of(hour: u32) -> usize {
    SEGMENT_STARTS.iter().rposition(|&s| s <= hour).unwrap_or(0)
}

/// Whether a restaurant with `status` serves customers during `slot`.
pub fn restaurant_open(status: PolicyStatus, slot: Slot) -> bool {
    match status {
        PolicyStatus::Zero => true,
        PolicyStatus::One => slot == Slot::Lunch,
        PolicyStatus::Two => false,
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct MobilitySettings {
    /// Send adults to work and children to school on holiday afternoons, as
    /// the holiday flow table literally lists, instead of keeping them home.
    pub holiday_afternoon_at_work: bool,
}

/// Adult or child, by their own id.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum AgentRef {
    Adult(AdultId),
    Child(ChildId),
}

impl AgentRef {
    /// Agents are numbered adults first, then children.
    pub fn from_index(world: &World, index: u32) -> AgentRef {
        let na = world.adults.len() as u32;
        if index < na {
            AgentRef::Adult(AdultId(index))
        } else {
            AgentRef::Child(ChildId(index - na))
        }
    }

    pub fn index(self, world: &World) -> u32 {
        match self {
            AgentRef::Adult(a) => a.0,
            AgentRef::Child(c) => world.adults.len() as u32 + c.0,
        }
    }

    pub fn home(self, world: &World) -> HomeId {
        match self {
            AgentRef::Adult(a) => world.adults[a.index()].home,
            AgentRef::Child(c) => world.children[c.index()].home,
        }
    }
}

/// Health-driven override of the flow tables.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Condition {
    Circulating,
    /// Minor symptoms, or severe without a bed.
    StaysHome,
    Hospitalized(HospitalId),
    Dead,
}

/// Restaurant assignments for one meal slot, indexed by agent index.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct RestaurantPlan {
    pub slot: Slot,
    pub assignment: Vec<Option<RestaurantId>>,
}

impl RestaurantPlan {
    pub fn empty(slot: Slot, agents: usize) -> Self {
        Self {
            slot,
            assignment: vec![None; agents],
        }
    }

    pub fn restaurant_of(&self, agent_index: u32) -> Option<RestaurantId> {
        self.assignment.get(agent_index as usize).copied().flatten()
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Occupancy {
    pub restaurants: Vec<u32>,
    pub hospitals: Vec<u32>,
}

impl Occupancy {
    pub fn new(world: &World) -> Self {
        Self {
            restaurants: vec![0; world.restaurants.len()],
            hospitals: vec![0; world.hospitals.len()],
        }
    }

    pub fn reset_restaurants(&mut self) {
        self.restaurants.iter_mut().for_each(|c| *c = 0);
    }
}

/// Place of `agent` at `hour`, given health and this slot's restaurant plan.
pub fn scheduled_place(
    agent: AgentRef,
    day_kind: DayKind,
    hour: u32,
    world: &World,
    condition: Condition,
    plan: &RestaurantPlan,
    settings: &MobilitySettings,
) -> Place {
    let home = Place::Home(agent.home(world));
    match condition {
        Condition::Dead => return Place::Dead,
        Condition::Hospitalized(h) => return Place::Hospital(h),
        Condition::StaysHome => return home,
        Condition::Circulating => {}
    }
    let slot = Slot::of(day_kind, hour);
    if slot.is_meal() {
        if let Some(r) = plan.restaurant_of(agent.index(world)) {
            return Place::Restaurant(r);
        }
    }
    match agent {
        AgentRef::Adult(a) => {
            let work = Place::Workplace(world.adults[a.index()].workplace);
            match (day_kind, slot) {
                (DayKind::Weekday, Slot::Morning | Slot::Lunch | Slot::Afternoon) => work,
                (DayKind::Holiday, Slot::Afternoon) if settings.holiday_afternoon_at_work => work,
                _ => home,
            }
        }
        AgentRef::Child(c) => {
            let child = &world.children[c.index()];
            let in_class = match (day_kind, slot) {
                (DayKind::Weekday, Slot::Morning | Slot::Lunch | Slot::Afternoon) => true,
                (DayKind::Holiday, Slot::Afternoon) => settings.holiday_afternoon_at_work,
                _ => false,
            };
            if !in_class {
                return home;
            }
            match world.schools[child.school.index()].online_class_status {
                PolicyStatus::Zero => Place::School(child.school),
                PolicyStatus::One if hour < 12 => Place::School(child.school),
                _ => home,
            }
        }
    }
}

/// Resolve who eats where during a meal slot. `eligible[i]` says whether
/// agent `i` is out and about (not symptomatic, hospitalized or dead).
///
/// Adults decide to go with their visit propensity, then claim seats in a
/// keyed random priority order, trying their three nearest restaurants in
/// turn. On holidays the eligible children of the household come along and
/// the whole party must fit. Restaurant occupancy is reset first.
pub fn decide_restaurant_visits(
    slot: Slot,
    day_index: u32,
    day_kind: DayKind,
    world: &World,
    eligible: &[bool],
    occupancy: &mut Occupancy,
    rng: &KeyedRng,
) -> RestaurantPlan {
    let n_agents = world.agent_count();
    let mut plan = RestaurantPlan::empty(slot, n_agents);
    occupancy.reset_restaurants();
    if !slot.is_meal() {
        return plan;
    }
    let na = world.adults.len();
    let key = |a: usize| [day_index as u64, slot.index(), a as u64];

    let mut queue: Vec<(u64, usize)> = world
        .adults
        .iter()
        .enumerate()
        .filter(|(i, _)| eligible[*i])
        .filter(|(i, a)| rng.chance(Stream::RestaurantVisit, &key(*i), a.visit_propensity))
        .map(|(i, _)| (rng.bits(Stream::SeatPriority, &key(i)), i))
        .collect();
    queue.sort_unstable();

    let mut party: Vec<usize> = Vec::new();
    for (_, i) in queue {
        let adult = &world.adults[i];
        let candidates = match day_kind {
            DayKind::Weekday => &adult.nearest_restaurants_work,
            DayKind::Holiday => &world.homes[adult.home.index()].nearest_restaurants,
        };
        party.clear();
        party.push(i);
        if day_kind == DayKind::Holiday {
            party.extend(
                world
                    .household(adult.home)
                    .children
                    .iter()
                    .map(|c| na + c.index())
                    .filter(|&ci| eligible[ci] && plan.assignment[ci].is_none()),
            );
        }
        let size = party.len() as u32;
        let chosen = candidates.iter().copied().find(|r| {
            let rest = &world.restaurants[r.index()];
            restaurant_open(rest.short_hours_status, slot) && occupancy.restaurants[r.index()] + size <= rest.seats
        });
        if let Some(r) = chosen {
            occupancy.restaurants[r.index()] += size;
            for &member in &party {
                plan.assignment[member] = Some(r);
            }
        }
    }
    plan
}

/// Claim a bed at the nearest hospital to `home` that has one free.
pub fn admit_hospital(home: HomeId, world: &World, occupancy: &mut Occupancy) -> Option<HospitalId> {
    let h = world.homes[home.index()]
        .nearest_hospitals
        .iter()
        .copied()
        .find(|h| occupancy.hospitals[h.index()] < world.hospitals[h.index()].beds)?;
    occupancy.hospitals[h.index()] += 1;
    Some(h)
}

pub fn discharge_hospital(hospital: HospitalId, occupancy: &mut Occupancy) {
    let c = &mut occupancy.hospitals[hospital.index()];
    debug_assert!(*c > 0, "discharge from an empty hospital");
    *c = c.saturating_sub(1);
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::scenario::{ScenarioConfig, ScenarioKind};
    use crate::world::{build_world, WorldConfig};

    fn tiny_world() -> World {
        let cfg = WorldConfig {
            scale_factor: 0.04,
            ..WorldConfig::default()
        };
        build_world(&cfg, &ScenarioConfig::preset(ScenarioKind::Collider), 3).unwrap()
    }

    fn child_with_school(world: &World) -> ChildId {
        world.children[0].id
    }

    #[test]
    fn slots_partition_each_day() {
        for kind in [DayKind::Weekday, DayKind::Holiday] {
            let slots: Vec<Slot> = (0..24).map(|h| Slot::of(kind, h)).collect();
            assert_eq!(slots.iter().filter(|s| **s == Slot::Lunch).count(), 1);
            assert_eq!(slots.iter().filter(|s| **s == Slot::Afternoon).count(), 4);
            assert_eq!(slots.iter().filter(|s| **s == Slot::Evening).count(), 4);
            let morning = slots.iter().filter(|s| **s == Slot::Morning).count();
            assert_eq!(morning, if kind == DayKind::Weekday { 3 } else { 0 });
        }
        for h in 0..24 {
            let seg = segment_of(h);
            for kind in [DayKind::Weekday, DayKind::Holiday] {
                assert_eq!(Slot::of(kind, h), Slot::of(kind, SEGMENT_STARTS[seg]));
            }
        }
    }

    #[test]
    fn flow_table_examples() {
        let w = tiny_world();
        let s = MobilitySettings::default();
        let plan = RestaurantPlan::empty(Slot::Morning, w.agent_count());
        let a = AgentRef::Adult(AdultId(0));
        assert_eq!(
            scheduled_place(a, DayKind::Weekday, 10, &w, Condition::Circulating, &plan, &s),
            Place::Workplace(w.adults[0].workplace)
        );
        assert_eq!(
            scheduled_place(a, DayKind::Weekday, 10, &w, Condition::StaysHome, &plan, &s),
            Place::Home(w.adults[0].home)
        );
        assert_eq!(
            scheduled_place(a, DayKind::Weekday, 22, &w, Condition::Circulating, &plan, &s),
            Place::Home(w.adults[0].home)
        );
        assert_eq!(
            scheduled_place(a, DayKind::Holiday, 14, &w, Condition::Circulating, &plan, &s),
            Place::Home(w.adults[0].home)
        );
        let literal = MobilitySettings {
            holiday_afternoon_at_work: true,
        };
        assert_eq!(
            scheduled_place(a, DayKind::Holiday, 14, &w, Condition::Circulating, &plan, &literal),
            Place::Workplace(w.adults[0].workplace)
        );
        let c = AgentRef::Child(child_with_school(&w));
        let home = Place::Home(w.children[0].home);
        assert_eq!(
            scheduled_place(c, DayKind::Holiday, 10, &w, Condition::Circulating, &plan, &s),
            home
        );
        assert_eq!(
            scheduled_place(c, DayKind::Weekday, 10, &w, Condition::Circulating, &plan, &s),
            Place::School(w.children[0].school)
        );
        assert_eq!(scheduled_place(c, DayKind::Weekday, 10, &w, Condition::Dead, &plan, &s), Place::Dead);
        assert_eq!(
            scheduled_place(c, DayKind::Weekday, 10, &w, Condition::Hospitalized(HospitalId(2)), &plan, &s),
            Place::Hospital(HospitalId(2))
        );
    }

    #[test]
    fn online_class_statuses() {
        let mut w = tiny_world();
        let s = MobilitySettings::default();
        let plan = RestaurantPlan::empty(Slot::Afternoon, w.agent_count());
        let c = AgentRef::Child(child_with_school(&w));
        let school = w.children[0].school;
        let home = Place::Home(w.children[0].home);
        let at = |w: &World, h| scheduled_place(c, DayKind::Weekday, h, w, Condition::Circulating, &plan, &s);

        w.schools[school.index()].online_class_status = PolicyStatus::Two;
        assert_eq!(at(&w, 10), home);
        assert_eq!(at(&w, 14), home);

        w.schools[school.index()].online_class_status = PolicyStatus::One;
        assert_eq!(at(&w, 10), Place::School(school));
        assert_eq!(at(&w, 12), home);
        assert_eq!(at(&w, 14), home);
    }

    fn force_propensity(w: &mut World, p: f64) {
        for a in &mut w.adults {
            a.visit_propensity = p;
        }
    }

    #[test]
    fn zero_propensity_never_visits() {
        let mut w = tiny_world();
        force_propensity(&mut w, 0.0);
        let mut occ = Occupancy::new(&w);
        let eligible = vec![true; w.agent_count()];
        for day in 0..20 {
            let plan = decide_restaurant_visits(
                Slot::Lunch,
                day,
                DayKind::Weekday,
                &w,
                &eligible,
                &mut occ,
                &KeyedRng::new(1),
            );
            assert!(plan.assignment.iter().all(Option::is_none));
        }
    }

    /// World with one adult whose three workplace restaurants are `cands`.
    fn single_visitor(cands: [u32; 3]) -> (World, usize) {
        let mut w = tiny_world();
        force_propensity(&mut w, 0.0);
        w.adults[0].visit_propensity = 1.0;
        w.adults[0].nearest_restaurants_work = cands.iter().map(|&r| RestaurantId(r)).collect();
        for r in &mut w.restaurants {
            r.short_hours_status = PolicyStatus::Zero;
        }
        (w, 0)
    }

    #[test]
    fn full_nearest_falls_through_to_second() {
        let (mut w, i) = single_visitor([0, 1, 2]);
        let mut occ = Occupancy::new(&w);
        let eligible = vec![true; w.agent_count()];
        // Adult 1 wants only restaurant 0, which has one seat.
        w.restaurants[0].seats = 1;
        w.adults[1].visit_propensity = 1.0;
        w.adults[1].nearest_restaurants_work = vec![RestaurantId(0)];
        let rng = KeyedRng::new(4);
        // Find a day where adult 1 claims first.
        let day = (0..200)
            .find(|&d| {
                let k = |a: u64| rng.bits(Stream::SeatPriority, &[d as u64, Slot::Lunch.index(), a]);
                k(1) < k(0)
            })
            .unwrap();
        let plan = decide_restaurant_visits(Slot::Lunch, day, DayKind::Weekday, &w, &eligible, &mut occ, &rng);
        assert_eq!(plan.assignment[1], Some(RestaurantId(0)));
        assert_eq!(plan.assignment[i], Some(RestaurantId(1)));
    }

    #[test]
    fn closed_candidates_fall_back_to_workplace() {
        let (mut w, i) = single_visitor([0, 1, 2]);
        for r in 0..3 {
            w.restaurants[r].short_hours_status = PolicyStatus::Two;
        }
        let mut occ = Occupancy::new(&w);
        let eligible = vec![true; w.agent_count()];
        let plan = decide_restaurant_visits(
            Slot::Lunch,
            0,
            DayKind::Weekday,
            &w,
            &eligible,
            &mut occ,
            &KeyedRng::new(1),
        );
        assert_eq!(plan.assignment[i], None);
        let place = scheduled_place(
            AgentRef::Adult(AdultId(i as u32)),
            DayKind::Weekday,
            12,
            &w,
            Condition::Circulating,
            &plan,
            &MobilitySettings::default(),
        );
        assert_eq!(place, Place::Workplace(w.adults[i].workplace));
    }

    #[test]
    fn status_one_opens_only_for_lunch() {
        assert!(restaurant_open(PolicyStatus::One, Slot::Lunch));
        assert!(!restaurant_open(PolicyStatus::One, Slot::Evening));
        assert!(!restaurant_open(PolicyStatus::Two, Slot::Lunch));
        assert!(restaurant_open(PolicyStatus::Zero, Slot::Evening));
    }

    #[test]
    fn holiday_children_follow_household_adult() {
        let mut w = tiny_world();
        force_propensity(&mut w, 0.0);
        let child = &w.children[0];
        let adult = w.household(child.home).adults[0];
        w.adults[adult.index()].visit_propensity = 1.0;
        let mut occ = Occupancy::new(&w);
        let eligible = vec![true; w.agent_count()];
        let plan = decide_restaurant_visits(
            Slot::Evening,
            2,
            DayKind::Holiday,
            &w,
            &eligible,
            &mut occ,
            &KeyedRng::new(1),
        );
        let r = plan.assignment[adult.index()].expect("adult seated");
        let na = w.adults.len();
        for c in &w.household(child.home).children {
            assert_eq!(plan.assignment[na + c.index()], Some(r));
        }
        assert_eq!(occ.restaurants[r.index()], 1 + w.household(child.home).children.len() as u32);
        assert_eq!(
            r,
            w.homes[w.adults[adult.index()].home.index()].nearest_restaurants[0]
        );
    }

    #[test]
    fn capacity_never_exceeded() {
        let mut w = tiny_world();
        force_propensity(&mut w, 1.0);
        for r in &mut w.restaurants {
            r.seats = 3;
        }
        let mut occ = Occupancy::new(&w);
        let eligible = vec![true; w.agent_count()];
        for (day, kind) in [(0, DayKind::Weekday), (2, DayKind::Holiday)] {
            let plan = decide_restaurant_visits(Slot::Lunch, day, kind, &w, &eligible, &mut occ, &KeyedRng::new(9));
            let mut counts = vec![0u32; w.restaurants.len()];
            for r in plan.assignment.iter().flatten() {
                counts[r.index()] += 1;
            }
            assert_eq!(counts, occ.restaurants);
            assert!(counts.iter().all(|&c| c <= 3));
        }
    }

    #[test]
    fn hospital_admission_and_release() {
        let mut w = tiny_world();
        for h in &mut w.hospitals {
            h.beds = 1;
        }
        let home = w.homes[0].id;
        let nearest = w.homes[0].nearest_hospitals.clone();
        let mut occ = Occupancy::new(&w);
        assert_eq!(admit_hospital(home, &w, &mut occ), Some(nearest[0]));
        assert_eq!(admit_hospital(home, &w, &mut occ), Some(nearest[1]));
        assert_eq!(admit_hospital(home, &w, &mut occ), Some(nearest[2]));
        assert_eq!(admit_hospital(home, &w, &mut occ), None);
        discharge_hospital(nearest[1], &mut occ);
        assert_eq!(admit_hospital(home, &w, &mut occ), Some(nearest[1]));
        for (h, hosp) in w.hospitals.iter().enumerate() {
            assert!(occ.hospitals[h] <= hosp.beds);
        }
    }
}
