//! The bundled demo through the library API: a replayed update batch, a
//! zero-shot baseline, evaluation against annotations, and a replay check.

use std::error::Error;
use std::path::Path;

use vapu::eval::CheckerRegistry;
use vapu::pipeline::RequirementKind;
use vapu::workspace::{
    evaluate, load_annotations, load_codebase, replay_transcript, run_batch, Backend, BatchInputs, Method, RunConfig,
};
use vapu::{ModelRegistry, RequirementSpec, TemplateSet};

pub fn run_example() -> Result<(), Box<dyn Error>> {
    let demo = Path::new(env!("CARGO_MANIFEST_DIR")).join("demo");
    let out = tempfile::tempdir()?;

    let requirements = std::fs::read_to_string(demo.join("requirements.txt"))?;
    let files = load_codebase(&demo.join("project"), &["**/*.ctp".to_string()])?;
    for method in [Method::Vapu, Method::Zsl] {
        let mut config = RunConfig::new("gpt-4o-mini", method, Backend::Replay, out.path());
        config.fixtures_dir = Some(demo.join("fixtures"));
        config.repetitions = 1;
        let inputs = BatchInputs {
            config,
            registry: ModelRegistry::default_registry(),
            files: files.clone(),
            requirements: RequirementSpec::from_text("demo", &requirements, RequirementKind::RequirementList)?,
            templates: TemplateSet::default(),
            example: None,
            parallel: 1,
            force: false,
        };
        for run in run_batch(&inputs)? {
            println!("{} -> {} exchanges", run.run_id, run.exchanges);
            let replay = replay_transcript(&run.transcript)?;
            println!("  replay identical, {} bytes of code", replay.final_code_bytes);
        }
    }

    let annotations = load_annotations(&demo.join("annotations.jsonl"))?;
    for r in evaluate(out.path(), &annotations, &CheckerRegistry::with_defaults())? {
        println!(
            "{:<45} errors {} requirements {:?} check marks {:?}",
            r.run_id,
            r.errors.total(),
            r.requirements,
            r.checkmarks.map(|c| c.flags())
        );
    }
    Ok(())
}

#[allow(dead_code)]
fn main() -> Result<(), Box<dyn Error>> {
    run_example()
}
