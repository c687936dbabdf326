//! Runs the update pipeline on one file with canned model responses.
//!
//! The verifier rejects the second task once, so the finalizer runs once
//! before the verifier accepts.

use std::error::Error;
use std::sync::Arc;

use vapu::gateway::AgentRole::*;
use vapu::pipeline::RequirementKind;
use vapu::{run_update, CodeDocument, GatewayHandle, ModelRegistry, ReplayBackend, ReplayFixtureSet, RequirementSpec, UpdateSettings};

const PLAN: &str = "1. Use $this->Html instead of $html\n2. Print values with short echo tags";

pub fn run_example() -> Result<(), Box<dyn Error>> {
    let fixtures = ReplayFixtureSet::from_sequences([
        (Manager, vec![PLAN, PLAN]),
        (PromptMaker, vec!["Replace $html-> with $this->Html->.", "Replace <?php echo x; ?> with <?= x ?>."]),
        (Executor, vec![
            "```php\n<?php echo $this->Html->link('Home', '/'); ?>\n```",
            "```php\n<?= $this->Html->link('Home') ?>\n```",
        ]),
        (Verifier, vec!["ACCEPT", "REJECT:\n- the link lost its '/' target", "ACCEPT"]),
        (Finalizer, vec!["```php\n<?= $this->Html->link('Home', '/') ?>\n```"]),
    ]);
    let profile = ModelRegistry::default_registry().resolve("gpt-4o-mini")?.clone();
    let gateway = GatewayHandle::new(Arc::new(ReplayBackend::new(fixtures)), profile);

    let req = RequirementSpec::from_text("cake5", "Update the view to CakePHP 5.", RequirementKind::RequirementList)?;
    let code = CodeDocument::from_path("views/pages/home.ctp", "<?php echo $html->link('Home', '/'); ?>");
    let result = run_update(&req, &code, &gateway, &UpdateSettings::default())?;

    for o in &result.per_task_outcomes {
        println!("task {}: accepted={} finalizer iterations={}", o.task_index, o.accepted, o.finalizer_iterations);
    }
    println!("unverified: {}", result.unverified);
    println!("final code:\n{}", result.final_code.content());
    for ex in gateway.exchanges() {
        println!("  #{:<2} {:<12} {:.1} ms", ex.seq, ex.role, ex.duration_secs * 1e3);
    }
    assert_eq!(result.final_code.content(), "<?= $this->Html->link('Home', '/') ?>");
    assert!(!result.unverified);
    Ok(())
}

#[allow(dead_code)]
fn main() -> Result<(), Box<dyn Error>> {
    run_example()
}
