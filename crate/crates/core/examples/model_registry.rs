//! Lists the bundled model profiles and loads a custom registry.

use std::error::Error;

use vapu::ModelRegistry;

const CUSTOM: &str = r#"
[[model]]
id = "local-coder"
company = "Local"
model = "Local Coder 7B"
context_length = 32768
size = "small"
provider = "local"
endpoint = "http://127.0.0.1:8080/v1/chat/completions"
"#;

pub fn run_example() -> Result<(), Box<dyn Error>> {
    let registry = ModelRegistry::default_registry();
    for p in registry.profiles() {
        println!(
            "{:<18} {:<10} {:<8} {:>7} tokens{}  key {}",
            p.profile_id,
            p.company,
            format!("{:?}", p.size_class),
            p.context_length,
            if p.context_length_placeholder { " (placeholder)" } else { "" },
            p.api_key_variable()
        );
    }
    let custom = ModelRegistry::from_toml_str(CUSTOM)?;
    let local = custom.resolve("local-coder")?;
    println!("custom: {} at {}", local.model_name, local.endpoint.as_deref().unwrap_or("-"));
    assert!(registry.resolve("no-such-model").is_err());
    Ok(())
}

#[allow(dead_code)]
fn main() -> Result<(), Box<dyn Error>> {
    run_example()
}
