use std::fs;
use std::path::Path;

use wardsim::analysis::{self, AdultFrame, Bundle};
use wardsim::dataset;

const ADULTS: &str = "\
name,home,vaccination,workplace,nearest_restaurant_to_workplace,second_nearest_restaurant_to_workplace,third_nearest_restaurant_to_workplace,age,sex,height,weight
A1,H1,yes,W1,R1,R1,R1,25,male,170.0,60.0
A2,H1,no,W1,R1,R1,R1,25,female,160.0,50.0
A3,H2,no,W1,R1,R1,R1,25,male,170.0,60.0
A4,H2,yes,W1,R1,R1,R1,25,female,160.0,50.0
A5,H3,yes,W1,R1,R1,R1,65,male,170.0,60.0
A6,H3,no,W1,R1,R1,R1,65,female,160.0,50.0
A7,H4,no,W1,R1,R1,R1,65,male,170.0,60.0
A8,H4,no,W1,R1,R1,R1,65,female,160.0,50.0
";

// A1, A2 and A5 are infected at some point; A5 recovers.
const STATUS: &str = "\
date,A1,A2,A3,A4,A5,A6,A7,A8
2022-07-07,susceptible,susceptible,susceptible,susceptible,exposed,susceptible,susceptible,susceptible
2022-07-08,pre_exposed,susceptible,susceptible,susceptible,asymptomatic,susceptible,susceptible,susceptible
2022-07-09,exposed,pre_exposed,susceptible,susceptible,recovered,susceptible,susceptible,susceptible
";

fn fixture(dir: &Path) {
    fs::write(dir.join(dataset::ADULT_INFORMATION), ADULTS).unwrap();
    fs::write(dir.join(dataset::ADULT_STATUS), STATUS).unwrap();
}

#[test]
fn rates_by_age_from_a_hand_made_bundle() {
    let tmp = tempfile::tempdir().unwrap();
    fixture(tmp.path());
    let frame = AdultFrame::load(&Bundle::open(tmp.path()).unwrap(), false).unwrap();
    let t = analysis::rate_by_age(&frame, 10).unwrap();
    assert_eq!(t.rows.len(), 2);
    let young = t.row(&["20-29"]).unwrap();
    let old = t.row(&["60-69"]).unwrap();
    assert_eq!((young.numerator, young.denominator), (2, 4));
    assert_eq!((old.numerator, old.denominator), (1, 4));
    assert_eq!(young.rate, 0.5);
    assert_eq!(old.rate, 0.25);
}

#[test]
fn vaccination_among_infected() {
    let tmp = tempfile::tempdir().unwrap();
    fixture(tmp.path());
    let frame = AdultFrame::load(&Bundle::open(tmp.path()).unwrap(), false).unwrap();
    let t = analysis::vaccination_rate_by_age(&frame, true, 10).unwrap();
    assert_eq!(t.row(&["20-29"]).unwrap().rate, 0.5);
    assert_eq!(t.row(&["60-69"]).unwrap().rate, 1.0);
    let all = analysis::vaccination_rate_by_age(&frame, false, 10).unwrap();
    assert_eq!(all.row(&["20-29"]).unwrap().rate, 0.5);
    assert_eq!(all.row(&["60-69"]).unwrap().rate, 0.25);
}

#[test]
fn long_status_table_gives_the_same_rates() {
    let tmp = tempfile::tempdir().unwrap();
    let (wide, long) = (tmp.path().join("w"), tmp.path().join("l"));
    fs::create_dir_all(&wide).unwrap();
    fs::create_dir_all(&long).unwrap();
    fixture(&wide);
    fs::write(long.join(dataset::ADULT_INFORMATION), ADULTS).unwrap();
    dataset::wide_to_long(
        dataset::AgentTable::Status,
        &wide.join(dataset::ADULT_STATUS),
        &long.join(dataset::ADULT_STATUS),
    )
    .unwrap();
    let rates = |d: &Path| {
        let f = AdultFrame::load(&Bundle::open(d).unwrap(), false).unwrap();
        analysis::rate_by_age(&f, 10).unwrap().to_csv()
    };
    assert_eq!(rates(&wide), rates(&long));
}

#[test]
fn missing_status_table_is_an_error() {
    let tmp = tempfile::tempdir().unwrap();
    fs::write(tmp.path().join(dataset::ADULT_INFORMATION), ADULTS).unwrap();
    let bundle = Bundle::open(tmp.path()).unwrap();
    assert!(AdultFrame::load(&bundle, false).is_err());
}
