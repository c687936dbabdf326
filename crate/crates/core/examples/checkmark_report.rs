//! Compares check marks of the pipeline and a zero-shot baseline over the
//! same files, bucketed by LOC, complexity and task count.

use std::collections::BTreeMap;
use std::error::Error;

use vapu::eval::{build_comparison_report, CcGrade, CheckMarks, FileFeatures, LocBands, MethodRecord};

pub fn run_example() -> Result<(), Box<dyn Error>> {
    let files = [
        ("todo_cli", 90, CcGrade::A, 1),
        ("weather_app", 210, CcGrade::B, 2),
        ("ledger", 340, CcGrade::C, 3),
    ];
    let features: BTreeMap<String, FileFeatures> = files
        .iter()
        .map(|&(id, loc, cc, tasks)| (id.to_string(), FileFeatures { loc, cc, tasks }))
        .collect();

    let marks = |m: [bool; 3]| CheckMarks::new(m[0], m[1], m[2]);
    let rec = |file: &str, method: &str, m: [bool; 3]| MethodRecord {
        file_id: file.into(),
        model: "gpt-4o".into(),
        method: method.into(),
        marks: marks(m),
    };
    let vapu = vec![
        rec("todo_cli", "vapu", [true, true, true]),
        rec("weather_app", "vapu", [true, true, false]),
        rec("ledger", "vapu", [true, true, true]),
    ];
    let zsl = vec![
        rec("todo_cli", "zsl", [true, true, true]),
        rec("weather_app", "zsl", [true, true, false]),
        rec("ledger", "zsl", [true, false, false]),
    ];
    let report = build_comparison_report(&vapu, &zsl, &features, &LocBands::default())?;
    print!("{}", report.summary());
    println!("\n{}", report.to_csv());
    assert_eq!(report.delta(), 2);
    Ok(())
}

#[allow(dead_code)]
fn main() -> Result<(), Box<dyn Error>> {
    run_example()
}
