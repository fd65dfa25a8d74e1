//! Scenario parameterizations: which causal structure a generated dataset
//! carries and the knobs that produce it.

use std::fmt;
use std::str::FromStr;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::epidemic::EpidemicParams;
use crate::error::{Error, Result};
use crate::world::{BoundingBox, GeoPoint, PolicyStatus, World};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum ScenarioKind {
    Mediator,
    Confounder,
    Collider,
    Custom,
}

impl ScenarioKind {
    pub const ALL: [ScenarioKind; 4] = [
        ScenarioKind::Mediator,
        ScenarioKind::Confounder,
        ScenarioKind::Collider,
        ScenarioKind::Custom,
    ];

    pub fn as_str(self) -> &'static str {
        match self {
            ScenarioKind::Mediator => "mediator",
            ScenarioKind::Confounder => "confounder",
            ScenarioKind::Collider => "collider",
            ScenarioKind::Custom => "custom",
        }
    }
}

impl fmt::Display for ScenarioKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for ScenarioKind {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        Self::ALL
            .into_iter()
            .find(|k| k.as_str() == s)
            .ok_or_else(|| Error::config("scenario.kind", format!("unknown scenario {s:?}")))
    }
}

/// Restaurant-visit propensity falling linearly with age, floored.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct MediatorSettings {
    pub base_propensity: f64,
    pub decrement_per_year: f64,
    pub floor: f64,
    /// Age at which the propensity equals `base_propensity`.
    pub reference_age: u32,
}

impl Default for MediatorSettings {
    fn default() -> Self {
        Self {
            base_propensity: 0.9,
            decrement_per_year: 0.018,
            floor: 0.02,
            reference_age: 20,
        }
    }
}

impl MediatorSettings {
    pub fn propensity(&self, age: u32) -> f64 {
        let years = age as f64 - self.reference_age as f64;
        (self.base_propensity - self.decrement_per_year * years)
            .max(self.floor)
            .clamp(0.0, 1.0)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ConfounderSettings {
    pub grid_rows: u32,
    pub grid_cols: u32,
    /// Alertness level (0, 1 or 2) per region, row-major from the
    /// south-west corner.
    pub alertness: Vec<u8>,
    /// Probability that a restaurant or school ignores its region's level
    /// and takes one of the other two levels instead.
    pub status_noise: f64,
    pub visit_propensity: f64,
}

impl Default for ConfounderSettings {
    fn default() -> Self {
        Self {
            grid_rows: 2,
            grid_cols: 2,
            alertness: vec![0, 1, 2, 1],
            status_noise: 0.1,
            visit_propensity: 0.05,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ColliderSettings {
    pub vaccination_probability: f64,
    pub gamma: f64,
    pub visit_propensity: f64,
}

impl Default for ColliderSettings {
    fn default() -> Self {
        Self {
            vaccination_probability: 0.5,
            gamma: 0.2,
            visit_propensity: 0.2,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct CustomSettings {
    pub visit_propensity: f64,
    pub vaccination_probability: f64,
    pub short_hours_status: PolicyStatus,
    pub online_class_status: PolicyStatus,
}

impl Default for CustomSettings {
    fn default() -> Self {
        Self {
            visit_propensity: 0.2,
            vaccination_probability: 0.5,
            short_hours_status: PolicyStatus::Zero,
            online_class_status: PolicyStatus::Zero,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ScenarioConfig {
    pub kind: ScenarioKind,
    /// Story difficulty knob: 0 = no hint, 2 = strongest hint.
    pub hint_level: u8,
    pub include_task_question: bool,
    /// Vaccination probability for the mediator and confounder scenarios.
    pub vaccination_probability: f64,
    pub mediator: MediatorSettings,
    pub confounder: ConfounderSettings,
    pub collider: ColliderSettings,
    pub custom: CustomSettings,
}

impl Default for ScenarioConfig {
    fn default() -> Self {
        Self::preset(ScenarioKind::Mediator)
    }
}

impl ScenarioConfig {
    pub fn preset(kind: ScenarioKind) -> Self {
        Self {
            kind,
            hint_level: 0,
            include_task_question: true,
            vaccination_probability: match kind {
                ScenarioKind::Mediator | ScenarioKind::Confounder => 0.0,
                _ => 0.5,
            },
            mediator: MediatorSettings::default(),
            confounder: ConfounderSettings::default(),
            collider: ColliderSettings::default(),
            custom: CustomSettings::default(),
        }
    }

    pub fn validate(&self) -> Result<()> {
        let prob = |field: &str, p: f64| -> Result<()> {
            if (0.0..=1.0).contains(&p) {
                Ok(())
            } else {
                Err(Error::config(field, format!("{p} is not a probability")))
            }
        };
        if self.hint_level > 2 {
            return Err(Error::config("scenario.hint_level", "must be 0, 1 or 2"));
        }
        prob("scenario.vaccination_probability", self.vaccination_probability)?;
        match self.kind {
            ScenarioKind::Mediator => {
                let m = &self.mediator;
                prob("scenario.mediator.base_propensity", m.base_propensity)?;
                prob("scenario.mediator.floor", m.floor)?;
                if !(m.decrement_per_year.is_finite() && m.decrement_per_year >= 0.0) {
                    return Err(Error::config(
                        "scenario.mediator.decrement_per_year",
                        "must be a nonnegative number",
                    ));
                }
            }
            ScenarioKind::Confounder => {
                let c = &self.confounder;
                if c.grid_rows == 0 || c.grid_cols == 0 {
                    return Err(Error::config("scenario.confounder.grid_rows", "grid needs at least one region"));
                }
                if c.alertness.len() != (c.grid_rows * c.grid_cols) as usize {
                    return Err(Error::config(
                        "scenario.confounder.alertness",
                        format!("expected {} levels, one per region", c.grid_rows * c.grid_cols),
                    ));
                }
                if c.alertness.iter().any(|&a| a > 2) {
                    return Err(Error::config("scenario.confounder.alertness", "levels must be 0, 1 or 2"));
                }
                prob("scenario.confounder.status_noise", c.status_noise)?;
                prob("scenario.confounder.visit_propensity", c.visit_propensity)?;
            }
            ScenarioKind::Collider => {
                let c = &self.collider;
                prob("scenario.collider.vaccination_probability", c.vaccination_probability)?;
                prob("scenario.collider.visit_propensity", c.visit_propensity)?;
                if !(c.gamma.is_finite() && c.gamma > 0.0) {
                    return Err(Error::config("scenario.collider.gamma", "must be greater than 0"));
                }
            }
            ScenarioKind::Custom => {
                prob("scenario.custom.visit_propensity", self.custom.visit_propensity)?;
                prob("scenario.custom.vaccination_probability", self.custom.vaccination_probability)?;
            }
        }
        Ok(())
    }

    pub fn region_partition(&self, bbox: BoundingBox) -> RegionPartition {
        RegionPartition {
            bbox,
            rows: self.confounder.grid_rows,
            cols: self.confounder.grid_cols,
            alertness: self
                .confounder
                .alertness
                .iter()
                .map(|&a| PolicyStatus::from_level(a).unwrap_or(PolicyStatus::Two))
                .collect(),
        }
    }

    /// Set the scenario-dependent agent and place attributes: visit
    /// propensity, vaccination, restaurant and school statuses.
    pub fn apply_to_world(&self, world: &mut World, seed: u64) -> Result<()> {
        self.validate()?;
        let mut rng = ChaCha8Rng::seed_from_u64(seed ^ 0x5CE7_A210_0D15_EA5E);
        let (vacc_p, propensity): (f64, Box<dyn Fn(u32) -> f64>) = match self.kind {
            ScenarioKind::Mediator => {
                let m = self.mediator.clone();
                (self.vaccination_probability, Box::new(move |age| m.propensity(age)))
            }
            ScenarioKind::Confounder => {
                let p = self.confounder.visit_propensity;
                (self.vaccination_probability, Box::new(move |_| p))
            }
            ScenarioKind::Collider => {
                let p = self.collider.visit_propensity;
                (self.collider.vaccination_probability, Box::new(move |_| p))
            }
            ScenarioKind::Custom => {
                let p = self.custom.visit_propensity;
                (self.custom.vaccination_probability, Box::new(move |_| p))
            }
        };
        for adult in &mut world.adults {
            adult.visit_propensity = propensity(adult.age);
            adult.vaccinated = rng.random_bool(vacc_p);
        }

        match self.kind {
            ScenarioKind::Confounder => {
                let partition = self.region_partition(world.bounding_box);
                let noise = self.confounder.status_noise;
                let mut draw = |base: PolicyStatus| {
                    if noise > 0.0 && rng.random_bool(noise) {
                        let others: Vec<PolicyStatus> =
                            PolicyStatus::ALL.into_iter().filter(|s| *s != base).collect();
                        others[rng.random_range(0..others.len())]
                    } else {
                        base
                    }
                };
                for r in &mut world.restaurants {
                    r.short_hours_status = draw(partition.alertness_at(&r.location));
                }
                for s in &mut world.schools {
                    s.online_class_status = draw(partition.alertness_at(&s.location));
                }
            }
            ScenarioKind::Custom => {
                for r in &mut world.restaurants {
                    r.short_hours_status = self.custom.short_hours_status;
                }
                for s in &mut world.schools {
                    s.online_class_status = self.custom.online_class_status;
                }
            }
            ScenarioKind::Mediator | ScenarioKind::Collider => {
                for r in &mut world.restaurants {
                    r.short_hours_status = PolicyStatus::Zero;
                }
                for s in &mut world.schools {
                    s.online_class_status = PolicyStatus::Zero;
                }
            }
        }
        Ok(())
    }

    /// Transmission parameters with the scenario's overrides applied.
    pub fn configure_params(&self, base: &EpidemicParams) -> Result<EpidemicParams> {
        self.validate()?;
        let mut p = base.clone();
        match self.kind {
            ScenarioKind::Mediator => p.gamma = 0.0,
            ScenarioKind::Confounder => {
                p.gamma = 0.0;
                p.alpha_restaurant = 0.0;
            }
            ScenarioKind::Collider => p.gamma = self.collider.gamma,
            ScenarioKind::Custom => {}
        }
        p.validate()?;
        Ok(p)
    }
}

/// Uniform grid over the bounding box, one alertness level per cell.
#[derive(Debug, Clone, PartialEq)]
pub struct RegionPartition {
    pub bbox: BoundingBox,
    pub rows: u32,
    pub cols: u32,
    pub alertness: Vec<PolicyStatus>,
}

impl RegionPartition {
    pub fn region_of(&self, p: &GeoPoint) -> usize {
        let b = &self.bbox;
        let cell = |v: f64, lo: f64, hi: f64, n: u32| -> u32 {
            let t = ((v - lo) / (hi - lo) * n as f64).floor();
            (t.max(0.0) as u32).min(n - 1)
        };
        let r = cell(p.latitude, b.min_latitude, b.max_latitude, self.rows);
        let c = cell(p.longitude, b.min_longitude, b.max_longitude, self.cols);
        (r * self.cols + c) as usize
    }

    pub fn alertness_at(&self, p: &GeoPoint) -> PolicyStatus {
        self.alertness[self.region_of(p)]
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::world::{build_world, WorldConfig};
    use proptest::prelude::*;

    fn world_for(scenario: &ScenarioConfig) -> World {
        let cfg = WorldConfig {
            scale_factor: 0.1,
            ..WorldConfig::default()
        };
        build_world(&cfg, scenario, 21).unwrap()
    }

    #[test]
    fn mediator_propensity_examples() {
        let m = MediatorSettings::default();
        assert!((m.propensity(20) - 0.9).abs() < 1e-12);
        assert!((m.propensity(60) - 0.18).abs() < 1e-12);
        assert!((m.propensity(200) - 0.02).abs() < 1e-12);
        let m = MediatorSettings {
            base_propensity: 0.6,
            decrement_per_year: 0.01,
            floor: 0.05,
            reference_age: 20,
        };
        assert!((m.propensity(20) - 0.6).abs() < 1e-12);
        assert!((m.propensity(60) - 0.2).abs() < 1e-12);
        assert!((m.propensity(90) - 0.05).abs() < 1e-12);
    }

    fn pearson(xs: &[f64], ys: &[f64]) -> f64 {
        let n = xs.len() as f64;
        let mx = xs.iter().sum::<f64>() / n;
        let my = ys.iter().sum::<f64>() / n;
        let cov: f64 = xs.iter().zip(ys).map(|(x, y)| (x - mx) * (y - my)).sum();
        let vx: f64 = xs.iter().map(|x| (x - mx).powi(2)).sum();
        let vy: f64 = ys.iter().map(|y| (y - my).powi(2)).sum();
        cov / (vx * vy).sqrt()
    }

    #[test]
    fn mediator_world_and_params() {
        let s = ScenarioConfig::preset(ScenarioKind::Mediator);
        let w = world_for(&s);
        let ages: Vec<f64> = w.adults.iter().map(|a| a.age as f64).collect();
        let props: Vec<f64> = w.adults.iter().map(|a| a.visit_propensity).collect();
        assert!(pearson(&ages, &props) < -0.9);
        assert!(w.restaurants.iter().all(|r| r.short_hours_status == PolicyStatus::Zero));
        assert!(w.schools.iter().all(|r| r.online_class_status == PolicyStatus::Zero));
        let base = EpidemicParams {
            gamma: 0.4,
            ..EpidemicParams::default()
        };
        assert_eq!(s.configure_params(&base).unwrap().gamma, 0.0);
    }

    #[test]
    fn confounder_statuses_follow_regions_without_noise() {
        let mut s = ScenarioConfig::preset(ScenarioKind::Confounder);
        s.confounder.status_noise = 0.0;
        let w = world_for(&s);
        let part = s.region_partition(w.bounding_box);
        for r in &w.restaurants {
            assert_eq!(r.short_hours_status, part.alertness_at(&r.location));
        }
        for sc in &w.schools {
            assert_eq!(sc.online_class_status, part.alertness_at(&sc.location));
        }
        let p = s.configure_params(&EpidemicParams::default()).unwrap();
        assert_eq!(p.alpha_restaurant, 0.0);
        assert_eq!(p.gamma, 0.0);
        let first = w.adults[0].visit_propensity;
        assert!(w.adults.iter().all(|a| a.visit_propensity == first));
    }

    #[test]
    fn confounder_high_alertness_region() {
        let mut s = ScenarioConfig::preset(ScenarioKind::Confounder);
        s.confounder = ConfounderSettings {
            grid_rows: 1,
            grid_cols: 1,
            alertness: vec![2],
            status_noise: 0.0,
            ..ConfounderSettings::default()
        };
        let w = world_for(&s);
        assert!(w.restaurants.iter().all(|r| r.short_hours_status == PolicyStatus::Two));
        assert!(w.schools.iter().all(|r| r.online_class_status == PolicyStatus::Two));
    }

    #[test]
    fn confounder_noise_flips_some_statuses() {
        let mut s = ScenarioConfig::preset(ScenarioKind::Confounder);
        s.confounder.status_noise = 1.0;
        let w = world_for(&s);
        let part = s.region_partition(w.bounding_box);
        assert!(w.schools.iter().all(|sc| sc.online_class_status != part.alertness_at(&sc.location)));
    }

    #[test]
    fn collider_vaccination_is_random_and_age_independent() {
        let s = ScenarioConfig::preset(ScenarioKind::Collider);
        let w = world_for(&s);
        let p = s.configure_params(&EpidemicParams::default()).unwrap();
        assert!(p.gamma > 0.0);
        let n = w.adults.len() as f64;
        let rate = w.adults.iter().filter(|a| a.vaccinated).count() as f64 / n;
        let se = (0.25 / n).sqrt();
        assert!((rate - 0.5).abs() < 3.0 * se, "rate {rate}");

        // Chi-squared test of independence, vaccination x 10-year age band.
        let mut table = [[0f64; 2]; 5];
        for a in &w.adults {
            table[((a.age - 20) / 10) as usize][a.vaccinated as usize] += 1.0;
        }
        let col: [f64; 2] = [0, 1].map(|j| table.iter().map(|r| r[j]).sum());
        let mut chi2 = 0.0;
        for row in &table {
            let rs: f64 = row.iter().sum();
            for j in 0..2 {
                let e = rs * col[j] / n;
                chi2 += (row[j] - e).powi(2) / e;
            }
        }
        // 4 degrees of freedom, 0.1% critical value.
        assert!(chi2 < 18.47, "chi2 {chi2}");
    }

    #[test]
    fn custom_applies_raw_values() {
        let mut s = ScenarioConfig::preset(ScenarioKind::Custom);
        s.custom.short_hours_status = PolicyStatus::One;
        s.custom.online_class_status = PolicyStatus::Two;
        s.custom.visit_propensity = 0.0;
        let w = world_for(&s);
        assert!(w.restaurants.iter().all(|r| r.short_hours_status == PolicyStatus::One));
        assert!(w.schools.iter().all(|r| r.online_class_status == PolicyStatus::Two));
        assert!(w.adults.iter().all(|a| a.visit_propensity == 0.0));
        let base = EpidemicParams {
            gamma: 0.3,
            ..EpidemicParams::default()
        };
        assert_eq!(s.configure_params(&base).unwrap(), base);
    }

    #[test]
    fn inconsistent_settings_are_config_errors() {
        let mut s = ScenarioConfig::preset(ScenarioKind::Custom);
        s.custom.visit_propensity = 1.5;
        assert!(matches!(s.validate(), Err(Error::Config { field, .. }) if field == "scenario.custom.visit_propensity"));
        let mut s = ScenarioConfig::preset(ScenarioKind::Confounder);
        s.confounder.alertness = vec![0, 1];
        assert!(s.validate().is_err());
        let mut s = ScenarioConfig::preset(ScenarioKind::Collider);
        s.collider.gamma = 0.0;
        assert!(s.validate().is_err());
        let mut s = ScenarioConfig::preset(ScenarioKind::Mediator);
        s.hint_level = 3;
        assert!(s.validate().is_err());
    }

    proptest! {
        #[test]
        fn every_point_has_one_region(lat in 35.305f64..=35.375, lon in 139.585f64..=139.655, rows in 1u32..5, cols in 1u32..5) {
            let bbox = WorldConfig::default().bounding_box;
            let part = RegionPartition { bbox, rows, cols, alertness: vec![PolicyStatus::Zero; (rows * cols) as usize] };
            prop_assert!(part.region_of(&GeoPoint::new(lat, lon)) < (rows * cols) as usize);
        }

        #[test]
        fn mediator_propensity_in_unit_interval(base in 0.0f64..=1.0, dec in 0.0f64..0.1, floor in 0.0f64..=1.0, age in 0u32..120) {
            let m = MediatorSettings { base_propensity: base, decrement_per_year: dec, floor, reference_age: 20 };
            let p = m.propensity(age);
            prop_assert!((0.0..=1.0).contains(&p));
        }
    }
}
