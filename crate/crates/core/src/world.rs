//! Static domain objects of the synthetic ward and their construction.

use std::path::{Path, PathBuf};

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Normal};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::scenario::ScenarioConfig;

/// Length of every precomputed nearest-place list.
pub const NEAREST_K: usize = 3;

macro_rules! id_type {
    ($($name:ident),* $(,)?) => {$(
        #[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
        pub struct $name(pub u32);

        impl $name {
            #[inline]
            pub fn index(self) -> usize {
                self.0 as usize
            }
        }
    )*};
}

id_type!(AdultId, ChildId, HomeId, WorkplaceId, SchoolId, RestaurantId, HospitalId);

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct GeoPoint {
    pub latitude: f64,
    pub longitude: f64,
}

const EARTH_RADIUS_KM: f64 = 6371.0;

impl GeoPoint {
    pub fn new(latitude: f64, longitude: f64) -> Self {
        Self { latitude, longitude }
    }

    /// Equirectangular distance in km, projected at `ref_lat` degrees.
    pub fn planar_km(&self, other: &GeoPoint, ref_lat: f64) -> f64 {
        let dx = (other.longitude - self.longitude).to_radians() * ref_lat.to_radians().cos();
        let dy = (other.latitude - self.latitude).to_radians();
        EARTH_RADIUS_KM * (dx * dx + dy * dy).sqrt()
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct BoundingBox {
    pub min_latitude: f64,
    pub max_latitude: f64,
    pub min_longitude: f64,
    pub max_longitude: f64,
}

impl BoundingBox {
    pub fn contains(&self, p: &GeoPoint) -> bool {
        (self.min_latitude..=self.max_latitude).contains(&p.latitude)
            && (self.min_longitude..=self.max_longitude).contains(&p.longitude)
    }

    pub fn center_latitude(&self) -> f64 {
        0.5 * (self.min_latitude + self.max_latitude)
    }

    fn sample<R: Rng>(&self, rng: &mut R) -> GeoPoint {
        GeoPoint {
            latitude: rng.random_range(self.min_latitude..self.max_latitude),
            longitude: rng.random_range(self.min_longitude..self.max_longitude),
        }
    }
}

/// Three-level policy enum used for both restaurant short business hours and
/// school online classes.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize, Default)]
#[serde(rename_all = "SCREAMING_SNAKE_CASE")]
pub enum PolicyStatus {
    #[default]
    Zero,
    One,
    Two,
}

impl PolicyStatus {
    pub const ALL: [PolicyStatus; 3] = [PolicyStatus::Zero, PolicyStatus::One, PolicyStatus::Two];

    pub fn from_level(level: u8) -> Option<Self> {
        Self::ALL.get(level as usize).copied()
    }

    pub fn level(self) -> u8 {
        self as u8
    }

    pub fn as_str(self) -> &'static str {
        match self {
            PolicyStatus::Zero => "ZERO",
            PolicyStatus::One => "ONE",
            PolicyStatus::Two => "TWO",
        }
    }

    pub fn parse(s: &str) -> Option<Self> {
        Self::ALL.into_iter().find(|v| v.as_str() == s)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Sex {
    Female,
    Male,
}

impl Sex {
    pub fn as_str(self) -> &'static str {
        match self {
            Sex::Female => "female",
            Sex::Male => "male",
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Home {
    pub id: HomeId,
    pub name: String,
    pub location: GeoPoint,
    pub nearest_hospitals: Vec<HospitalId>,
    pub nearest_restaurants: Vec<RestaurantId>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Workplace {
    pub id: WorkplaceId,
    pub name: String,
    pub location: GeoPoint,
    pub employee_count: u32,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct School {
    pub id: SchoolId,
    pub name: String,
    pub location: GeoPoint,
    pub online_class_status: PolicyStatus,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Restaurant {
    pub id: RestaurantId,
    pub name: String,
    pub location: GeoPoint,
    pub seats: u32,
    pub short_hours_status: PolicyStatus,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Hospital {
    pub id: HospitalId,
    pub name: String,
    pub location: GeoPoint,
    pub beds: u32,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Adult {
    pub id: AdultId,
    pub name: String,
    pub home: HomeId,
    pub workplace: WorkplaceId,
    pub age: u32,
    pub sex: Sex,
    pub height_cm: f64,
    pub weight_kg: f64,
    pub vaccinated: bool,
    /// Probability of going to a restaurant at each lunch/dinner opportunity.
    pub visit_propensity: f64,
    pub nearest_restaurants_work: Vec<RestaurantId>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Child {
    pub id: ChildId,
    pub name: String,
    pub home: HomeId,
    pub school: SchoolId,
    pub age: u32,
    pub sex: Sex,
    pub height_cm: f64,
    pub weight_kg: f64,
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct Household {
    pub adults: Vec<AdultId>,
    pub children: Vec<ChildId>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct EntityCounts {
    pub adults: u32,
    pub children: u32,
    pub homes: u32,
    pub workplaces: u32,
    pub restaurants: u32,
    pub hospitals: u32,
    pub schools: u32,
}

impl Default for EntityCounts {
    fn default() -> Self {
        Self {
            adults: 62_500,
            children: 10_000,
            homes: 50_000,
            workplaces: 500,
            restaurants: 100,
            hospitals: 7,
            schools: 22,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct AgeRange {
    pub min: u32,
    pub max: u32,
}

/// Normal distributions for height (cm) and weight (kg).
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct BodyDistribution {
    pub height_mean: f64,
    pub height_sd: f64,
    pub weight_mean: f64,
    pub weight_sd: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct WorldConfig {
    pub counts: EntityCounts,
    /// Multiplies adults, children, homes, workplaces and restaurants.
    pub scale_factor: f64,
    pub bounding_box: BoundingBox,
    pub adult_age: AgeRange,
    pub child_age: AgeRange,
    pub min_adults_per_home: u32,
    pub restaurant_seats: u32,
    pub hospital_beds: u32,
    pub adult_body: BodyDistribution,
    pub child_body: BodyDistribution,
    /// CSV of real hospitals and schools: `name,latitude,longitude,kind[,beds]`.
    pub facilities_file: Option<PathBuf>,
}

impl Default for WorldConfig {
    fn default() -> Self {
        Self {
            counts: EntityCounts::default(),
            scale_factor: 1.0,
            // Kanazawa-ku, Yokohama.
            bounding_box: BoundingBox {
                min_latitude: 35.305,
                max_latitude: 35.375,
                min_longitude: 139.585,
                max_longitude: 139.655,
            },
            adult_age: AgeRange { min: 20, max: 69 },
            child_age: AgeRange { min: 6, max: 15 },
            min_adults_per_home: 1,
            restaurant_seats: 50,
            hospital_beds: 100,
            adult_body: BodyDistribution {
                height_mean: 165.0,
                height_sd: 8.0,
                weight_mean: 62.0,
                weight_sd: 10.0,
            },
            child_body: BodyDistribution {
                height_mean: 138.0,
                height_sd: 12.0,
                weight_mean: 34.0,
                weight_sd: 8.0,
            },
            facilities_file: None,
        }
    }
}

impl WorldConfig {
    /// Desk-scale default: one tenth of the ward.
    pub fn desk_scale() -> Self {
        Self {
            scale_factor: 0.1,
            ..Self::default()
        }
    }

    /// Entity counts after applying the scale factor. Hospitals and schools
    /// are never scaled.
    pub fn scaled_counts(&self) -> Result<EntityCounts> {
        if !(self.scale_factor.is_finite() && self.scale_factor > 0.0) {
            return Err(Error::config("world.scale_factor", "must be a positive finite number"));
        }
        let scale = |n: u32, field: &str| -> Result<u32> {
            let v = (n as f64 * self.scale_factor).round();
            if v < 1.0 {
                return Err(Error::config(
                    format!("world.counts.{field}"),
                    format!("{n} scaled by {} leaves no entities", self.scale_factor),
                ));
            }
            Ok(v as u32)
        };
        let c = self.counts;
        let nonzero = |n: u32, field: &str| -> Result<u32> {
            if n == 0 {
                Err(Error::config(format!("world.counts.{field}"), "must be at least 1"))
            } else {
                Ok(n)
            }
        };
        Ok(EntityCounts {
            adults: scale(c.adults, "adults")?,
            children: scale(c.children, "children")?,
            homes: scale(c.homes, "homes")?,
            workplaces: scale(c.workplaces, "workplaces")?,
            restaurants: scale(c.restaurants, "restaurants")?,
            hospitals: nonzero(c.hospitals, "hospitals")?,
            schools: nonzero(c.schools, "schools")?,
        })
    }

    pub fn validate(&self) -> Result<EntityCounts> {
        let counts = self.scaled_counts()?;
        let b = &self.bounding_box;
        let finite = [b.min_latitude, b.max_latitude, b.min_longitude, b.max_longitude]
            .iter()
            .all(|v| v.is_finite());
        if !finite || b.min_latitude >= b.max_latitude {
            return Err(Error::config("world.bounding_box", "latitude range is empty"));
        }
        if b.min_longitude >= b.max_longitude {
            return Err(Error::config("world.bounding_box", "longitude range is empty"));
        }
        if self.adult_age.min > self.adult_age.max {
            return Err(Error::config("world.adult_age", "min exceeds max"));
        }
        if self.child_age.min > self.child_age.max {
            return Err(Error::config("world.child_age", "min exceeds max"));
        }
        if self.min_adults_per_home == 0 {
            return Err(Error::config("world.min_adults_per_home", "must be at least 1"));
        }
        if (counts.adults as u64) < counts.homes as u64 * self.min_adults_per_home as u64 {
            return Err(Error::config(
                "world.counts.adults",
                format!(
                    "{} adults cannot fill {} homes with {} adult(s) each",
                    counts.adults, counts.homes, self.min_adults_per_home
                ),
            ));
        }
        if self.restaurant_seats == 0 {
            return Err(Error::config("world.restaurant_seats", "must be at least 1"));
        }
        if self.hospital_beds == 0 {
            return Err(Error::config("world.hospital_beds", "must be at least 1"));
        }
        for (field, body) in [("world.adult_body", &self.adult_body), ("world.child_body", &self.child_body)] {
            if !(body.height_sd >= 0.0 && body.weight_sd >= 0.0) {
                return Err(Error::config(field, "standard deviations must be nonnegative"));
            }
        }
        Ok(counts)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct World {
    pub bounding_box: BoundingBox,
    pub adults: Vec<Adult>,
    pub children: Vec<Child>,
    pub homes: Vec<Home>,
    pub workplaces: Vec<Workplace>,
    pub schools: Vec<School>,
    pub restaurants: Vec<Restaurant>,
    pub hospitals: Vec<Hospital>,
    /// Indexed by home id.
    pub households: Vec<Household>,
}

impl World {
    pub fn agent_count(&self) -> usize {
        self.adults.len() + self.children.len()
    }

    pub fn ref_latitude(&self) -> f64 {
        self.bounding_box.center_latitude()
    }

    pub fn household(&self, home: HomeId) -> &Household {
        &self.households[home.index()]
    }

    pub fn counts(&self) -> EntityCounts {
        EntityCounts {
            adults: self.adults.len() as u32,
            children: self.children.len() as u32,
            homes: self.homes.len() as u32,
            workplaces: self.workplaces.len() as u32,
            restaurants: self.restaurants.len() as u32,
            hospitals: self.hospitals.len() as u32,
            schools: self.schools.len() as u32,
        }
    }
}

/// Ids (indices into `places`) of the `k` places nearest to `origin`,
/// ascending by planar distance, ties broken by ascending id.
pub fn nearest_k(origin: &GeoPoint, places: &[GeoPoint], k: usize, ref_lat: f64) -> Result<Vec<u32>> {
    if places.is_empty() {
        return Err(Error::Input("nearest_k over an empty place collection".into()));
    }
    if k == 0 {
        return Err(Error::Input("nearest_k requires k >= 1".into()));
    }
    let mut ranked: Vec<(f64, u32)> = places
        .iter()
        .enumerate()
        .map(|(i, p)| (origin.planar_km(p, ref_lat), i as u32))
        .collect();
    ranked.sort_by(|a, b| a.0.total_cmp(&b.0).then(a.1.cmp(&b.1)));
    Ok(ranked.into_iter().take(k).map(|(_, i)| i).collect())
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
enum FacilityKind {
    Hospital,
    School,
}

#[derive(Debug, Clone)]
struct Facility {
    name: String,
    location: GeoPoint,
    kind: FacilityKind,
    beds: Option<u32>,
}

fn load_facilities(path: &Path, bbox: &BoundingBox) -> Result<Vec<Facility>> {
    let field = "world.facilities_file";
    let mut reader = csv::ReaderBuilder::new()
        .flexible(true)
        .trim(csv::Trim::All)
        .from_path(path)
        .map_err(|e| Error::csv(path, e))?;
    let mut out = Vec::new();
    for (line, rec) in reader.records().enumerate() {
        let rec = rec.map_err(|e| Error::csv(path, e))?;
        let row = line + 2;
        let get = |i: usize| rec.get(i).unwrap_or("");
        let parse_f = |i: usize| -> Result<f64> {
            get(i)
                .parse()
                .map_err(|_| Error::config(field, format!("row {row}: bad coordinate {:?}", get(i))))
        };
        let location = GeoPoint::new(parse_f(1)?, parse_f(2)?);
        if !bbox.contains(&location) {
            return Err(Error::config(field, format!("row {row}: location outside the bounding box")));
        }
        let kind = match get(3) {
            "hospital" => FacilityKind::Hospital,
            "school" => FacilityKind::School,
            other => return Err(Error::config(field, format!("row {row}: unknown kind {other:?}"))),
        };
        let beds = match get(4) {
            "" => None,
            s => Some(
                s.parse::<u32>()
                    .ok()
                    .filter(|&b| b > 0)
                    .ok_or_else(|| Error::config(field, format!("row {row}: beds must be a positive integer")))?,
            ),
        };
        out.push(Facility {
            name: get(0).to_string(),
            location,
            kind,
            beds,
        });
    }
    Ok(out)
}

fn zero_padded(prefix: &str, i: usize, total: usize) -> String {
    let width = total.to_string().len().max(2);
    format!("{prefix}{:0width$}", i + 1)
}

fn sample_body<R: Rng>(rng: &mut R, body: &BodyDistribution) -> (f64, f64) {
    // Clamp away from absurd values; these columns never feed the dynamics.
    let h = Normal::new(body.height_mean, body.height_sd).expect("validated sd").sample(rng);
    let w = Normal::new(body.weight_mean, body.weight_sd).expect("validated sd").sample(rng);
    let round1 = |v: f64| (v * 10.0).round() / 10.0;
    (round1(h.max(50.0)), round1(w.max(10.0)))
}

fn sample_sex<R: Rng>(rng: &mut R) -> Sex {
    if rng.random_bool(0.5) {
        Sex::Female
    } else {
        Sex::Male
    }
}

/// Build the ward. Every placement and assignment is a pure function of
/// `(config, scenario, seed)`.
pub fn build_world(config: &WorldConfig, scenario: &ScenarioConfig, seed: u64) -> Result<World> {
    let counts = config.validate()?;
    scenario.validate()?;
    let bbox = config.bounding_box;
    let ref_lat = bbox.center_latitude();
    let mut rng = ChaCha8Rng::seed_from_u64(seed);

    let facilities = match &config.facilities_file {
        Some(path) => Some(load_facilities(path, &bbox)?),
        None => None,
    };

    let home_locs: Vec<GeoPoint> = (0..counts.homes).map(|_| bbox.sample(&mut rng)).collect();
    let work_locs: Vec<GeoPoint> = (0..counts.workplaces).map(|_| bbox.sample(&mut rng)).collect();
    let rest_locs: Vec<GeoPoint> = (0..counts.restaurants).map(|_| bbox.sample(&mut rng)).collect();

    let (hospitals, schools) = match facilities {
        Some(fs) => {
            let hospitals: Vec<Hospital> = fs
                .iter()
                .filter(|f| f.kind == FacilityKind::Hospital)
                .enumerate()
                .map(|(i, f)| Hospital {
                    id: HospitalId(i as u32),
                    name: f.name.clone(),
                    location: f.location,
                    beds: f.beds.unwrap_or(config.hospital_beds),
                })
                .collect();
            let schools: Vec<School> = fs
                .iter()
                .filter(|f| f.kind == FacilityKind::School)
                .enumerate()
                .map(|(i, f)| School {
                    id: SchoolId(i as u32),
                    name: f.name.clone(),
                    location: f.location,
                    online_class_status: PolicyStatus::Zero,
                })
                .collect();
            if hospitals.is_empty() {
                return Err(Error::config("world.facilities_file", "lists no hospitals"));
            }
            if schools.is_empty() {
                return Err(Error::config("world.facilities_file", "lists no schools"));
            }
            (hospitals, schools)
        }
        None => {
            let n_h = counts.hospitals as usize;
            let n_s = counts.schools as usize;
            let hospitals = (0..n_h)
                .map(|i| Hospital {
                    id: HospitalId(i as u32),
                    name: zero_padded("Hospital-", i, n_h),
                    location: bbox.sample(&mut rng),
                    beds: config.hospital_beds,
                })
                .collect();
            let schools = (0..n_s)
                .map(|i| School {
                    id: SchoolId(i as u32),
                    name: zero_padded("School-", i, n_s),
                    location: bbox.sample(&mut rng),
                    online_class_status: PolicyStatus::Zero,
                })
                .collect();
            (hospitals, schools)
        }
    };

    let hosp_locs: Vec<GeoPoint> = hospitals.iter().map(|h| h.location).collect();
    let school_locs: Vec<GeoPoint> = schools.iter().map(|s| s.location).collect();

    let n_homes = counts.homes as usize;
    let homes: Vec<Home> = home_locs
        .iter()
        .enumerate()
        .map(|(i, loc)| -> Result<Home> {
            Ok(Home {
                id: HomeId(i as u32),
                name: zero_padded("H", i, n_homes),
                location: *loc,
                nearest_hospitals: nearest_k(loc, &hosp_locs, NEAREST_K, ref_lat)?
                    .into_iter()
                    .map(HospitalId)
                    .collect(),
                nearest_restaurants: nearest_k(loc, &rest_locs, NEAREST_K, ref_lat)?
                    .into_iter()
                    .map(RestaurantId)
                    .collect(),
            })
        })
        .collect::<Result<_>>()?;

    let n_work = counts.workplaces as usize;
    let work_nearest: Vec<Vec<RestaurantId>> = work_locs
        .iter()
        .map(|loc| {
            nearest_k(loc, &rest_locs, NEAREST_K, ref_lat).map(|v| v.into_iter().map(RestaurantId).collect())
        })
        .collect::<Result<_>>()?;
    let mut workplaces: Vec<Workplace> = work_locs
        .iter()
        .enumerate()
        .map(|(i, loc)| Workplace {
            id: WorkplaceId(i as u32),
            name: zero_padded("W", i, n_work),
            location: *loc,
            employee_count: 0,
        })
        .collect();

    let n_rest = counts.restaurants as usize;
    let restaurants: Vec<Restaurant> = rest_locs
        .iter()
        .enumerate()
        .map(|(i, loc)| Restaurant {
            id: RestaurantId(i as u32),
            name: zero_padded("R", i, n_rest),
            location: *loc,
            seats: config.restaurant_seats,
            short_hours_status: PolicyStatus::Zero,
        })
        .collect();

    let mut households = vec![Household::default(); n_homes];
    let n_adults = counts.adults as usize;
    let mut adults = Vec::with_capacity(n_adults);
    for i in 0..n_adults {
        // Round-robin: every home gets an adult before any gets a second.
        let home = HomeId((i % n_homes) as u32);
        let workplace = WorkplaceId(rng.random_range(0..counts.workplaces));
        let age = rng.random_range(config.adult_age.min..=config.adult_age.max);
        let sex = sample_sex(&mut rng);
        let (height_cm, weight_kg) = sample_body(&mut rng, &config.adult_body);
        workplaces[workplace.index()].employee_count += 1;
        households[home.index()].adults.push(AdultId(i as u32));
        adults.push(Adult {
            id: AdultId(i as u32),
            name: zero_padded("A", i, n_adults),
            home,
            workplace,
            age,
            sex,
            height_cm,
            weight_kg,
            vaccinated: false,
            visit_propensity: 0.0,
            nearest_restaurants_work: work_nearest[workplace.index()].clone(),
        });
    }

    let n_children = counts.children as usize;
    let mut children = Vec::with_capacity(n_children);
    for i in 0..n_children {
        let home = HomeId(rng.random_range(0..counts.homes));
        let age = rng.random_range(config.child_age.min..=config.child_age.max);
        let sex = sample_sex(&mut rng);
        let (height_cm, weight_kg) = sample_body(&mut rng, &config.child_body);
        let school = SchoolId(nearest_k(&homes[home.index()].location, &school_locs, 1, ref_lat)?[0]);
        households[home.index()].children.push(ChildId(i as u32));
        children.push(Child {
            id: ChildId(i as u32),
            name: zero_padded("C", i, n_children),
            home,
            school,
            age,
            sex,
            height_cm,
            weight_kg,
        });
    }

    let mut world = World {
        bounding_box: bbox,
        adults,
        children,
        homes,
        workplaces,
        schools,
        restaurants,
        hospitals,
        households,
    };
    check_unique_names(&world)?;
    scenario.apply_to_world(&mut world, seed)?;
    Ok(world)
}

fn check_unique_names(world: &World) -> Result<()> {
    let mut seen = std::collections::HashSet::new();
    let names = world
        .homes
        .iter()
        .map(|x| &x.name)
        .chain(world.workplaces.iter().map(|x| &x.name))
        .chain(world.schools.iter().map(|x| &x.name))
        .chain(world.restaurants.iter().map(|x| &x.name))
        .chain(world.hospitals.iter().map(|x| &x.name))
        .chain(world.adults.iter().map(|x| &x.name))
        .chain(world.children.iter().map(|x| &x.name));
    for name in names {
        if name.is_empty() || name == "dead" || name.contains(',') {
            return Err(Error::config("world.facilities_file", format!("unusable name {name:?}")));
        }
        if !seen.insert(name.as_str()) {
            return Err(Error::config("world.facilities_file", format!("duplicate name {name:?}")));
        }
    }
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::scenario::{ScenarioConfig, ScenarioKind};
    use proptest::prelude::*;

    fn small_config() -> WorldConfig {
        WorldConfig {
            scale_factor: 0.02,
            ..WorldConfig::default()
        }
    }

    #[test]
    fn scaled_counts_match_examples() {
        let full = WorldConfig::default().scaled_counts().unwrap();
        assert_eq!(full, EntityCounts::default());
        assert_eq!(full.adults, 62_500);
        assert_eq!(full.children, 10_000);
        assert_eq!(full.homes, 50_000);
        assert_eq!((full.workplaces, full.restaurants, full.hospitals, full.schools), (500, 100, 7, 22));

        let desk = WorldConfig::desk_scale().scaled_counts().unwrap();
        assert_eq!(
            desk,
            EntityCounts {
                adults: 6_250,
                children: 1_000,
                homes: 5_000,
                workplaces: 50,
                restaurants: 10,
                hospitals: 7,
                schools: 22,
            }
        );
    }

    #[test]
    fn zero_after_scaling_names_the_field() {
        let cfg = WorldConfig {
            scale_factor: 0.001,
            ..WorldConfig::default()
        };
        match cfg.validate() {
            Err(Error::Config { field, .. }) => assert_eq!(field, "world.counts.restaurants"),
            other => panic!("unexpected {other:?}"),
        }
    }

    #[test]
    fn empty_bounding_box_is_rejected() {
        let mut cfg = WorldConfig::default();
        cfg.bounding_box.max_latitude = cfg.bounding_box.min_latitude;
        assert!(matches!(cfg.validate(), Err(Error::Config { field, .. }) if field == "world.bounding_box"));
    }

    #[test]
    fn too_few_adults_for_homes() {
        let mut cfg = WorldConfig::default();
        cfg.counts.adults = 100;
        cfg.counts.homes = 200;
        assert!(matches!(cfg.validate(), Err(Error::Config { field, .. }) if field == "world.counts.adults"));
    }

    #[test]
    fn nearest_k_fixture() {
        // Three places east of the origin along the reference latitude.
        let ref_lat = 35.34;
        let origin = GeoPoint::new(ref_lat, 139.60);
        let km_per_deg = EARTH_RADIUS_KM * 1f64.to_radians() * ref_lat.to_radians().cos();
        let at = |km: f64| GeoPoint::new(ref_lat, 139.60 + km / km_per_deg);
        let places = [at(3.0), at(1.0), at(2.0)];
        assert!((origin.planar_km(&places[1], ref_lat) - 1.0).abs() < 1e-9);
        assert_eq!(nearest_k(&origin, &places, 2, ref_lat).unwrap(), vec![1, 2]);
        assert_eq!(nearest_k(&places[0], &places, 1, ref_lat).unwrap(), vec![0]);
        assert_eq!(nearest_k(&origin, &places, 10, ref_lat).unwrap(), vec![1, 2, 0]);
    }

    #[test]
    fn nearest_k_ties_prefer_lower_id() {
        let origin = GeoPoint::new(35.34, 139.60);
        let places = [GeoPoint::new(35.35, 139.60), GeoPoint::new(35.33, 139.60)];
        assert_eq!(nearest_k(&origin, &places, 2, 35.34).unwrap(), vec![0, 1]);
    }

    #[test]
    fn nearest_k_errors() {
        let origin = GeoPoint::new(35.34, 139.60);
        assert!(nearest_k(&origin, &[], 1, 35.34).is_err());
        assert!(nearest_k(&origin, &[origin], 0, 35.34).is_err());
    }

    #[test]
    fn built_world_structure() {
        let cfg = small_config();
        let scenario = ScenarioConfig::preset(ScenarioKind::Mediator);
        let w = build_world(&cfg, &scenario, 11).unwrap();
        assert_eq!(w.counts(), cfg.scaled_counts().unwrap());

        let mut homes_of_adults = vec![0u32; w.homes.len()];
        for a in &w.adults {
            homes_of_adults[a.home.index()] += 1;
            assert!((cfg.adult_age.min..=cfg.adult_age.max).contains(&a.age));
            assert!((0.0..=1.0).contains(&a.visit_propensity));
            assert!(w.bounding_box.contains(&w.homes[a.home.index()].location));
            assert_eq!(a.nearest_restaurants_work.len(), NEAREST_K.min(w.restaurants.len()));
        }
        assert!(homes_of_adults.iter().all(|&n| n == 1 || n == 2));
        for c in &w.children {
            assert!((cfg.child_age.min..=cfg.child_age.max).contains(&c.age));
            assert!(!w.household(c.home).adults.is_empty());
            assert!(w.household(c.home).children.contains(&c.id));
            let expected = nearest_k(
                &w.homes[c.home.index()].location,
                &w.schools.iter().map(|s| s.location).collect::<Vec<_>>(),
                1,
                w.ref_latitude(),
            )
            .unwrap()[0];
            assert_eq!(c.school, SchoolId(expected));
        }
        for wp in &w.workplaces {
            let n = w.adults.iter().filter(|a| a.workplace == wp.id).count() as u32;
            assert_eq!(wp.employee_count, n);
        }
        let members: usize = w.households.iter().map(|h| h.adults.len() + h.children.len()).sum();
        assert_eq!(members, w.agent_count());
    }

    #[test]
    fn build_is_deterministic_and_seed_sensitive() {
        let cfg = small_config();
        let scenario = ScenarioConfig::preset(ScenarioKind::Collider);
        let a = build_world(&cfg, &scenario, 5).unwrap();
        let b = build_world(&cfg, &scenario, 5).unwrap();
        assert_eq!(a, b);
        let c = build_world(&cfg, &scenario, 6).unwrap();
        assert_ne!(a.homes[0].location, c.homes[0].location);
    }

    #[test]
    fn facilities_file_replaces_synthetic_hospitals_and_schools() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("facilities.csv");
        std::fs::write(
            &path,
            "name,latitude,longitude,kind,beds\n\
             Kanazawa General,35.33,139.62,hospital,40\n\
             Seaside Clinic,35.35,139.63,hospital\n\
             Hill School,35.34,139.60,school\n",
        )
        .unwrap();
        let cfg = WorldConfig {
            facilities_file: Some(path),
            ..small_config()
        };
        let w = build_world(&cfg, &ScenarioConfig::preset(ScenarioKind::Collider), 1).unwrap();
        assert_eq!(w.hospitals.len(), 2);
        assert_eq!(w.hospitals[0].beds, 40);
        assert_eq!(w.hospitals[1].beds, cfg.hospital_beds);
        assert_eq!(w.schools.len(), 1);
        assert_eq!(w.schools[0].name, "Hill School");
        assert!(w.homes.iter().all(|h| h.nearest_hospitals.len() == 2));
    }

    #[test]
    fn facilities_outside_bbox_rejected() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("facilities.csv");
        std::fs::write(&path, "name,latitude,longitude,kind\nFar,10.0,10.0,hospital\n").unwrap();
        let cfg = WorldConfig {
            facilities_file: Some(path),
            ..small_config()
        };
        let err = build_world(&cfg, &ScenarioConfig::preset(ScenarioKind::Collider), 1).unwrap_err();
        assert!(matches!(err, Error::Config { field, .. } if field == "world.facilities_file"));
    }

    proptest! {
        #![proptest_config(ProptestConfig::with_cases(64))]

        #[test]
        fn nearest_k_agrees_with_recomputation(
            pts in prop::collection::vec((35.30f64..35.38, 139.58f64..139.66), 1..40),
            origin in (35.30f64..35.38, 139.58f64..139.66),
            k in 1usize..6,
        ) {
            let places: Vec<GeoPoint> = pts.iter().map(|&(a, b)| GeoPoint::new(a, b)).collect();
            let o = GeoPoint::new(origin.0, origin.1);
            let got = nearest_k(&o, &places, k, 35.34).unwrap();
            prop_assert_eq!(got.len(), k.min(places.len()));
            let d = |i: u32| o.planar_km(&places[i as usize], 35.34);
            for w in got.windows(2) {
                prop_assert!(d(w[0]) < d(w[1]) || (d(w[0]) == d(w[1]) && w[0] < w[1]));
            }
            let worst = d(*got.last().unwrap());
            for i in 0..places.len() as u32 {
                if !got.contains(&i) {
                    prop_assert!(d(i) >= worst);
                }
            }
        }
    }
}
