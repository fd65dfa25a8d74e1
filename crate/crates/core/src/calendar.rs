//! Simulation clock and weekday/holiday classification.
//!
//! The run covers 200 days starting 2022-07-07, one step per hour.

use std::collections::BTreeSet;
use std::sync::OnceLock;

use chrono::{Datelike, Duration, NaiveDate, Weekday};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

pub const SIM_DAYS: u32 = 200;
pub const HOURS_PER_DAY: u32 = 24;
pub const SIM_HOURS: u32 = SIM_DAYS * HOURS_PER_DAY;

/// Japanese national holidays inside the simulated range, `date,name`.
const HOLIDAYS_CSV: &str = include_str!("../data/jp_holidays_2022_2023.csv");

pub fn start_date() -> NaiveDate {
    NaiveDate::from_ymd_opt(2022, 7, 7).expect("valid start date")
}

pub fn end_date() -> NaiveDate {
    start_date() + Duration::days(SIM_DAYS as i64 - 1)
}

/// Date of the zero-based `day_index`.
pub fn date_of(day_index: u32) -> NaiveDate {
    start_date() + Duration::days(day_index as i64)
}

/// Zero-based index of `date`, or an error if outside the run.
pub fn day_index(date: NaiveDate) -> Result<u32> {
    let d = (date - start_date()).num_days();
    if (0..SIM_DAYS as i64).contains(&d) {
        Ok(d as u32)
    } else {
        Err(Error::DateOutOfRange(date))
    }
}

pub fn dates() -> impl Iterator<Item = NaiveDate> {
    (0..SIM_DAYS).map(date_of)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum DayKind {
    Weekday,
    Holiday,
}

fn holiday_table() -> &'static BTreeSet<NaiveDate> {
    static TABLE: OnceLock<BTreeSet<NaiveDate>> = OnceLock::new();
    TABLE.get_or_init(|| {
        HOLIDAYS_CSV
            .lines()
            .skip(1)
            .filter(|l| !l.trim().is_empty())
            .map(|l| {
                let date = l.split(',').next().unwrap_or_default();
                NaiveDate::parse_from_str(date, "%Y-%m-%d").expect("embedded holiday table is well formed")
            })
            .collect()
    })
}

/// National holidays in the run, ascending, with their names.
pub fn national_holidays() -> Vec<(NaiveDate, &'static str)> {
    HOLIDAYS_CSV
        .lines()
        .skip(1)
        .filter_map(|l| {
            let (d, name) = l.split_once(',')?;
            Some((NaiveDate::parse_from_str(d, "%Y-%m-%d").ok()?, name))
        })
        .collect()
}

pub fn day_kind(date: NaiveDate) -> Result<DayKind> {
    day_index(date)?;
    let weekend = matches!(date.weekday(), Weekday::Sat | Weekday::Sun);
    if weekend || holiday_table().contains(&date) {
        Ok(DayKind::Holiday)
    } else {
        Ok(DayKind::Weekday)
    }
}

/// Day kind by zero-based index. Panics if out of range.
pub fn day_kind_of(day_index: u32) -> DayKind {
    day_kind(date_of(day_index)).expect("day index within the run")
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub struct SimClock {
    date: NaiveDate,
    hour: u32,
    step_index: u32,
}

impl SimClock {
    pub fn start() -> Self {
        Self {
            date: start_date(),
            hour: 0,
            step_index: 0,
        }
    }

    pub fn at_step(step_index: u32) -> Option<Self> {
        (step_index < SIM_HOURS).then(|| Self {
            date: date_of(step_index / HOURS_PER_DAY),
            hour: step_index % HOURS_PER_DAY,
            step_index,
        })
    }

    pub fn date(&self) -> NaiveDate {
        self.date
    }

    pub fn hour(&self) -> u32 {
        self.hour
    }

    pub fn step_index(&self) -> u32 {
        self.step_index
    }

    pub fn day_index(&self) -> u32 {
        self.step_index / HOURS_PER_DAY
    }

    pub fn day_kind(&self) -> DayKind {
        day_kind_of(self.day_index())
    }

    /// Next hour, or `None` once the final step has been taken.
    pub fn advance(self) -> Option<Self> {
        if self.step_index + 1 >= SIM_HOURS {
            return None;
        }
        let (date, hour) = if self.hour + 1 == HOURS_PER_DAY {
            (self.date + Duration::days(1), 0)
        } else {
            (self.date, self.hour + 1)
        };
        Some(Self {
            date,
            hour,
            step_index: self.step_index + 1,
        })
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn d(y: i32, m: u32, day: u32) -> NaiveDate {
        NaiveDate::from_ymd_opt(y, m, day).unwrap()
    }

    #[test]
    fn worked_examples() {
        assert_eq!(day_kind(d(2022, 7, 7)).unwrap(), DayKind::Weekday);
        assert_eq!(day_kind(d(2022, 7, 9)).unwrap(), DayKind::Holiday);
        assert_eq!(day_kind(d(2023, 1, 1)).unwrap(), DayKind::Holiday);
        assert_eq!(day_kind(d(2022, 7, 18)).unwrap(), DayKind::Holiday);
        assert_eq!(day_kind(d(2023, 1, 2)).unwrap(), DayKind::Holiday);
        assert_eq!(day_kind(d(2023, 1, 3)).unwrap(), DayKind::Weekday);
    }

    #[test]
    fn out_of_range_dates_are_rejected() {
        assert!(day_kind(d(2022, 7, 6)).is_err());
        assert!(day_kind(d(2023, 1, 23)).is_err());
    }

    #[test]
    fn range_is_two_hundred_days() {
        assert_eq!(end_date(), d(2023, 1, 22));
        assert_eq!(dates().count(), 200);
        assert_eq!(dates().last(), Some(d(2023, 1, 22)));
        assert_eq!(day_index(d(2023, 1, 22)).unwrap(), 199);
    }

    #[test]
    fn weekends_are_always_holidays() {
        for date in dates() {
            if matches!(date.weekday(), Weekday::Sat | Weekday::Sun) {
                assert_eq!(day_kind(date).unwrap(), DayKind::Holiday);
            }
        }
    }

    #[test]
    fn embedded_holidays_fall_inside_the_run() {
        let hs = national_holidays();
        assert_eq!(hs.len(), 10);
        assert!(hs.iter().all(|(date, _)| day_index(*date).is_ok()));
    }

    #[test]
    fn advance_rolls_over_days() {
        let c = SimClock::at_step(23).unwrap();
        assert_eq!((c.date(), c.hour()), (d(2022, 7, 7), 23));
        let n = c.advance().unwrap();
        assert_eq!((n.date(), n.hour(), n.step_index()), (d(2022, 7, 8), 0, 24));

        let n = SimClock::start().advance().unwrap();
        assert_eq!((n.date(), n.hour()), (d(2022, 7, 7), 1));
    }

    #[test]
    fn advance_signals_end_after_last_step() {
        let last = SimClock::at_step(SIM_HOURS - 1).unwrap();
        assert_eq!(last.date(), d(2023, 1, 22));
        assert!(last.advance().is_none());

        let mut c = SimClock::start();
        let mut steps = 1;
        while let Some(n) = c.advance() {
            assert_eq!(n.step_index(), 24 * n.day_index() + n.hour());
            c = n;
            steps += 1;
        }
        assert_eq!(steps, 4_800);
    }
}
