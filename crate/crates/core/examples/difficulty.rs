//! Difficulty points for candidate files and the 3 to 10 selection filter.

use std::error::Error;

use vapu::eval::{count_loc, score_difficulty, CcGrade, SELECTION_RANGE};

pub fn run_example() -> Result<(), Box<dyn Error>> {
    let candidates = [
        ("todo/cli.py", 100, 'A', 1),
        ("inventory/app.py", 250, 'C', 2),
        ("bank/core.py", 480, 'D', 3),
        ("engine/render.py", 900, 'F', 4),
    ];
    println!("selection range: {:?}", SELECTION_RANGE);
    for (file, loc, cc, tasks) in candidates {
        let d = score_difficulty(loc, CcGrade::from_letter(cc)?, tasks)?;
        println!(
            "{file:<18} loc {loc:>4} cc {cc} tasks {tasks}: {} + {} + {} = {:>2}  {}",
            d.loc_points,
            d.cc_points,
            d.task_points,
            d.total(),
            if d.within_selection_range() { "selected" } else { "out of range" }
        );
    }
    let source = "def main():\n\n    print('hi')\n";
    println!("count_loc of a 3-line snippet with one blank line: {}", count_loc(source));
    assert_eq!(score_difficulty(100, CcGrade::A, 1)?.total(), 3);
    Ok(())
}

#[allow(dead_code)]
fn main() -> Result<(), Box<dyn Error>> {
    run_example()
}
