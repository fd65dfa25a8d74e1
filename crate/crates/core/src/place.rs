//! Where an agent is during one hour.

use serde::{Deserialize, Serialize};

use crate::world::{HomeId, HospitalId, RestaurantId, SchoolId, WorkplaceId, World};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub enum PlaceKind {
    Home,
    Workplace,
    School,
    Restaurant,
    Hospital,
}

impl PlaceKind {
    pub const ALL: [PlaceKind; 5] = [
        PlaceKind::Home,
        PlaceKind::Workplace,
        PlaceKind::School,
        PlaceKind::Restaurant,
        PlaceKind::Hospital,
    ];

    pub fn as_str(self) -> &'static str {
        match self {
            PlaceKind::Home => "home",
            PlaceKind::Workplace => "workplace",
            PlaceKind::School => "school",
            PlaceKind::Restaurant => "restaurant",
            PlaceKind::Hospital => "hospital",
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Place {
    Home(HomeId),
    Workplace(WorkplaceId),
    School(SchoolId),
    Restaurant(RestaurantId),
    Hospital(HospitalId),
    Dead,
}

/// Literal token written in place tables for agents who have died.
pub const DEAD_TOKEN: &str = "dead";

const KIND_SHIFT: u32 = 29;
const INDEX_MASK: u32 = (1 << KIND_SHIFT) - 1;

/// `Place` packed into 32 bits: kind tag in the top three bits.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct PlaceCode(u32);

impl PlaceCode {
    pub const DEAD: PlaceCode = PlaceCode(7 << KIND_SHIFT);

    pub fn raw(self) -> u32 {
        self.0
    }
}

impl Place {
    pub fn kind(self) -> Option<PlaceKind> {
        Some(match self {
            Place::Home(_) => PlaceKind::Home,
            Place::Workplace(_) => PlaceKind::Workplace,
            Place::School(_) => PlaceKind::School,
            Place::Restaurant(_) => PlaceKind::Restaurant,
            Place::Hospital(_) => PlaceKind::Hospital,
            Place::Dead => return None,
        })
    }

    pub fn pack(self) -> PlaceCode {
        let (tag, idx) = match self {
            Place::Home(id) => (0, id.0),
            Place::Workplace(id) => (1, id.0),
            Place::School(id) => (2, id.0),
            Place::Restaurant(id) => (3, id.0),
            Place::Hospital(id) => (4, id.0),
            Place::Dead => return PlaceCode::DEAD,
        };
        debug_assert!(idx <= INDEX_MASK);
        PlaceCode((tag << KIND_SHIFT) | idx)
    }

    pub fn unpack(code: PlaceCode) -> Place {
        let idx = code.0 & INDEX_MASK;
        match code.0 >> KIND_SHIFT {
            0 => Place::Home(HomeId(idx)),
            1 => Place::Workplace(WorkplaceId(idx)),
            2 => Place::School(SchoolId(idx)),
            3 => Place::Restaurant(RestaurantId(idx)),
            4 => Place::Hospital(HospitalId(idx)),
            _ => Place::Dead,
        }
    }

    /// Name of the place as written in the exported tables.
    pub fn name(self, world: &World) -> &str {
        match self {
            Place::Home(id) => &world.homes[id.index()].name,
            Place::Workplace(id) => &world.workplaces[id.index()].name,
            Place::School(id) => &world.schools[id.index()].name,
            Place::Restaurant(id) => &world.restaurants[id.index()].name,
            Place::Hospital(id) => &world.hospitals[id.index()].name,
            Place::Dead => DEAD_TOKEN,
        }
    }
}

impl From<Place> for PlaceCode {
    fn from(p: Place) -> Self {
        p.pack()
    }
}
