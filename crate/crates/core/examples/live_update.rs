//! Updates one file against a real endpoint.
//!
//! Needs the profile's key variable, e.g. `VAPU_API_KEY_OPENAI`. Pass a file
//! and a requirements file; the bundled demo is used otherwise.
//!
//! ```text
//! cargo run --example live_update -- gpt-4o-mini path/to/view.ctp requirements.txt
//! ```

use std::error::Error;
use std::path::PathBuf;
use std::sync::Arc;

use vapu::gateway::LiveBackend;
use vapu::pipeline::RequirementKind;
use vapu::{run_update, CodeDocument, GatewayHandle, GenerationParams, ModelRegistry, RequirementSpec, UpdateSettings};

pub fn run_example() -> Result<(), Box<dyn Error>> {
    let demo = PathBuf::from(env!("CARGO_MANIFEST_DIR")).join("demo");
    let mut args = std::env::args().skip(1);
    let model = args.next().unwrap_or_else(|| "gpt-4o-mini".into());
    let file = args.next().map(PathBuf::from).unwrap_or(demo.join("project/views/variants/index.ctp"));
    let req_file = args.next().map(PathBuf::from).unwrap_or(demo.join("requirements.txt"));

    let profile = ModelRegistry::default_registry().resolve(&model)?.clone();
    if std::env::var(profile.api_key_variable()).is_err() {
        println!("set {} to run against {}", profile.api_key_variable(), profile.profile_id);
        return Ok(());
    }
    let gateway = GatewayHandle::new(Arc::new(LiveBackend::new()), profile);
    let code = CodeDocument::from_path(file.to_string_lossy(), std::fs::read_to_string(&file)?);
    let req = RequirementSpec::from_text("live", &std::fs::read_to_string(&req_file)?, RequirementKind::RequirementList)?;
    let settings = UpdateSettings {
        params: GenerationParams::new(0.0)?,
        ..UpdateSettings::default()
    };
    let result = run_update(&req, &code, &gateway, &settings)?;
    println!("{}", result.final_code.content());
    eprintln!(
        "{} tasks, unverified: {}, {} exchanges",
        result.per_task_outcomes.len(),
        result.unverified,
        gateway.exchanges().len()
    );
    Ok(())
}

#[allow(dead_code)]
fn main() -> Result<(), Box<dyn Error>> {
    run_example()
}
