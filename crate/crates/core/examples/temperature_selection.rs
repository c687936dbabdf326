//! Aggregates repeated runs and picks the temperature with the best
//! AR - AE/2 score.

use std::error::Error;

use vapu::eval::{aggregate_runs, normalize_durations, select_temperature, TemperatureScore};

pub fn run_example() -> Result<(), Box<dyn Error>> {
    // Error totals of ten repetitions at each temperature.
    let hot = [2.0, 3.0, 1.0, 2.0, 2.0, 3.0, 1.0, 2.0, 2.0, 2.0];
    let cold = [2.0, 2.0, 1.0, 2.0, 3.0, 2.0, 2.0, 2.0, 2.0, 2.0];
    for (t, runs) in [(1.0, &hot), (0.0, &cold)] {
        let s = aggregate_runs(runs)?;
        println!("t={t}: mean errors {:.2}, sd {:.3}", s.mean, s.sd);
    }

    let scores = [TemperatureScore::new(1.0, 0.88, 2.02), TemperatureScore::new(0.0, 1.36, 2.04)];
    for s in &scores {
        println!("t={}: AR {:.2} AE {:.2} -> {:+.2}", s.temperature, s.ar, s.ae, s.score());
    }
    let picked = select_temperature(&scores)?;
    println!("preferred temperature: {picked}");
    assert_eq!(picked, 0.0);

    let z = normalize_durations(&[41.0, 38.5, 55.0, 47.5])?;
    println!("normalized durations: {z:.3?}");
    Ok(())
}

#[allow(dead_code)]
fn main() -> Result<(), Box<dyn Error>> {
    run_example()
}
