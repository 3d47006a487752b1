use std::fs;
use std::path::Path;

use pedwait::io::{read_dataset, schema_sidecar, write_dataset};
use pedwait::CliError;
use pedwait_core::{CovariateEntry, CovariateSchema, Dataset, Instance};
use proptest::prelude::*;

fn schema() -> CovariateSchema {
    CovariateSchema::new(vec![
        CovariateEntry::continuous("speed").with_unit("km/h"),
        CovariateEntry::binary("female"),
        CovariateEntry::categorical("road", &["two_way", "one_way", "median"]),
    ])
    .unwrap()
}

fn write(dir: &Path, name: &str, body: &str) -> std::path::PathBuf {
    let p = dir.join(name);
    fs::write(&p, body).unwrap();
    p
}

fn line_of(err: CliError) -> u64 {
    match err {
        CliError::Row { line, .. } => line,
        other => panic!("expected a row error, got {other}"),
    }
}

#[test]
fn columns_may_come_in_any_order() {
    let dir = tempfile::tempdir().unwrap();
    let a = write(dir.path(), "a.csv", "speed,female,road,duration,event\n30,1,one_way,4.5,1\n50,0,two_way,9,0\n");
    let b = write(dir.path(), "b.csv", "event,road,duration,female,speed\n1,one_way,4.5,1,30\n0,two_way,9,0,50\n");
    let (da, db) = (read_dataset(&a, Some(&schema())).unwrap(), read_dataset(&b, Some(&schema())).unwrap());
    assert_eq!(da, db);
    assert_eq!(da.instances()[0].covariates, vec![30.0, 1.0, 1.0, 0.0]);
    assert!(!da.instances()[1].event);
}

#[test]
fn missing_extra_and_duplicate_columns_are_rejected() {
    let dir = tempfile::tempdir().unwrap();
    for (name, body) in [
        ("missing.csv", "speed,road,duration,event\n30,one_way,4,1\n"),
        ("extra.csv", "speed,female,road,shoe,duration,event\n30,1,one_way,9,4,1\n"),
        ("dup.csv", "speed,female,female,road,duration,event\n30,1,1,one_way,4,1\n"),
    ] {
        let p = write(dir.path(), name, body);
        assert!(matches!(read_dataset(&p, Some(&schema())), Err(CliError::Config(_))), "{name}");
    }
}

#[test]
fn bad_cells_report_their_line() {
    let dir = tempfile::tempdir().unwrap();
    let head = "speed,female,road,duration,event\n30,1,one_way,4,1\n";
    for (row, line) in [("40,0,two_way,-1,1\n", 3), ("40,0,two_way,2,2\n", 3), ("40,0,bridge,2,1\n", 3)] {
        let p = write(dir.path(), "bad.csv", &format!("{head}{row}"));
        assert_eq!(line_of(read_dataset(&p, Some(&schema())).unwrap_err()), line, "{row}");
    }
    let p = write(dir.path(), "later.csv", &format!("{head}40,0,two_way,2,1\n50,1,median,3,0\n60,0,median,x,1\n"));
    assert_eq!(line_of(read_dataset(&p, Some(&schema())).unwrap_err()), 5);
}

#[test]
fn missing_sidecar_is_a_config_error() {
    let dir = tempfile::tempdir().unwrap();
    let p = write(dir.path(), "x.csv", "speed,female,road,duration,event\n30,1,one_way,4,1\n");
    assert!(matches!(read_dataset(&p, None), Err(CliError::Config(_))));
}

#[test]
fn standardized_data_is_not_written() {
    let dir = tempfile::tempdir().unwrap();
    let ds = Dataset::new(
        schema(),
        (0..4).map(|i| Instance::new(vec![i as f64, (i % 2) as f64, 0.0, 0.0], 1.0 + i as f64, true)).collect(),
    )
    .unwrap();
    let s = ds.standardize(&[0, 1, 2, 3]).unwrap();
    assert!(write_dataset(&dir.path().join("s.csv"), &s).is_err());
}

fn arb_dataset() -> impl Strategy<Value = Dataset> {
    let row = (-1e6f64..1e6, any::<bool>(), 0usize..3, 0.0f64..1e4, any::<bool>());
    proptest::collection::vec(row, 1..30).prop_map(|rows| {
        let instances = rows
            .into_iter()
            .map(|(speed, female, road, t, e)| {
                let mut z = vec![speed, f64::from(u8::from(female)), 0.0, 0.0];
                if road > 0 {
                    z[1 + road] = 1.0;
                }
                Instance::new(z, t, e)
            })
            .collect();
        Dataset::new(schema(), instances).unwrap()
    })
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn write_then_read_is_identity(ds in arb_dataset()) {
        let dir = tempfile::tempdir().unwrap();
        let p = dir.path().join("d.csv");
        write_dataset(&p, &ds).unwrap();
        prop_assert!(schema_sidecar(&p).exists());
        let back = read_dataset(&p, None).unwrap();
        prop_assert_eq!(back, ds);
    }
}
