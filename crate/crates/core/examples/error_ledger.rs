//! Counts the errors of one run: a mistake counts once however many times it
//! shows up, and syntax errors can be found automatically.

use std::error::Error;

use vapu::eval::{check_fatal, CheckerRegistry, ErrorCategory, Finding, FindingSource, RunErrorLedger};
use vapu::CodeDocument;

pub fn run_example() -> Result<(), Box<dyn Error>> {
    let code = CodeDocument::from_path(
        "views/variants/view.ctp",
        "<?php foreach ($variants as $v) { ?>\n<td><?= h($v->name) ?></td>\n",
    );
    let mut ledger = RunErrorLedger::new("views_variants_view-vapu-gpt-4o-t0-r1");
    for f in check_fatal(&code, &CheckerRegistry::with_defaults())? {
        println!("checker: {}", f.description());
        ledger.record(f);
    }

    let annotated = [
        (ErrorCategory::Runtime, "jQuery loaded from a dead URL"),
        (ErrorCategory::Runtime, "jquery loaded from a  dead url"),
        (ErrorCategory::MissingAdditional, "language filter removed"),
    ];
    for (category, cause) in annotated {
        let f = Finding::new(category, cause, cause, FindingSource::HumanAnnotation).ok_or("blank cause")?;
        let new = ledger.record(f);
        println!("{category:<18} {cause:<32} {}", if new { "recorded" } else { "duplicate" });
    }

    for c in ErrorCategory::ALL {
        println!("{c:<18} {}", ledger.count(c));
    }
    assert_eq!(ledger.len(), 3);
    Ok(())
}

#[allow(dead_code)]
fn main() -> Result<(), Box<dyn Error>> {
    run_example()
}
