//! Builds zero-shot and one-shot prompts and pulls code out of a reply.

use std::error::Error;

use vapu::prompt::{build_baseline_prompt, extract_code_detailed, BaselineMode, OneShotExample};
use vapu::{CodeDocument, TemplateSet};

pub fn run_example() -> Result<(), Box<dyn Error>> {
    let templates = TemplateSet::default();
    let code = CodeDocument::from_path("views/languages/index.ctp", "<h2><?php __('Languages');?></h2>");
    let request = "Update this CakePHP 1.2 view to CakePHP 5.";

    let zsl = build_baseline_prompt(&templates, &BaselineMode::ZeroShot, request, &code)?;
    println!("--- zero-shot ---\n{}\n", zsl.as_str());

    let example = OneShotExample::from_toml_str(include_str!("../demo/example.toml"))?;
    let osl = build_baseline_prompt(&templates, &BaselineMode::OneShot(example), request, &code)?;
    println!("--- one-shot ---\n{}\n", osl.as_str());
    assert!(osl.as_str().len() > zsl.as_str().len());

    let reply = "Sure:\n```php\n<h2><?= __('Languages') ?></h2>\n```\nand the helper:\n```php\n<?= $this->Html->css('base') ?>\n```";
    let extracted = extract_code_detailed(reply)?;
    println!("extracted (fenced={}):\n{}", extracted.fenced, extracted.code);
    assert_eq!(extracted.code, "<h2><?= __('Languages') ?></h2>\n\n<?= $this->Html->css('base') ?>");
    Ok(())
}

#[allow(dead_code)]
fn main() -> Result<(), Box<dyn Error>> {
    run_example()
}
