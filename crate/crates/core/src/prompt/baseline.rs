use serde::{Deserialize, Serialize};

use super::{ids, Bindings, Placeholder, PromptError, PromptText, TemplateSet};
use crate::pipeline::CodeDocument;

pub const EXAMPLE_SECTION_START: &str = "=== Example ===";
pub const EXAMPLE_SECTION_END: &str = "=== End of example ===";

/// A worked input/output pair for one-shot prompts.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct OneShotExample {
    pub input: String,
    pub output: String,
}

impl OneShotExample {
    pub fn from_toml_str(text: &str) -> Result<Self, toml::de::Error> {
        toml::from_str(text)
    }

    fn render(&self) -> String {
        format!(
            "{EXAMPLE_SECTION_START}\nInput:\n```\n{}\n```\nOutput:\n```\n{}\n```\n{EXAMPLE_SECTION_END}",
            self.input.trim_end(),
            self.output.trim_end()
        )
    }
}

/// Single-call comparison prompts: zero-shot, or one-shot with one example.
#[derive(Debug, Clone, PartialEq, Eq)]
pub enum BaselineMode {
    ZeroShot,
    OneShot(OneShotExample),
}

impl BaselineMode {
    /// Checks the mode/example pairing the way a config file states it.
    pub fn from_parts(one_shot: bool, example: Option<OneShotExample>) -> Result<Self, PromptError> {
        match (one_shot, example) {
            (false, None) => Ok(BaselineMode::ZeroShot),
            (false, Some(_)) => Err(PromptError::ExampleForbidden),
            (true, Some(ex)) => Ok(BaselineMode::OneShot(ex)),
            (true, None) => Err(PromptError::ExampleMissing),
        }
    }

    pub fn label(&self) -> &'static str {
        match self {
            BaselineMode::ZeroShot => "zsl",
            BaselineMode::OneShot(_) => "osl",
        }
    }
}

/// Update request, then (one-shot only) the delimited example, then the code.
pub fn build_baseline_prompt(
    templates: &TemplateSet,
    mode: &BaselineMode,
    update_request: &str,
    code: &CodeDocument,
) -> Result<PromptText, PromptError> {
    let bindings = Bindings::new()
        .with(Placeholder::Requirements, update_request.trim_end())
        .with(Placeholder::Code, code.content());
    match mode {
        BaselineMode::ZeroShot => templates.get(ids::BASELINE_ZSL)?.render(&bindings),
        BaselineMode::OneShot(example) => templates
            .get(ids::BASELINE_OSL)?
            .render(&bindings.with(Placeholder::Example, example.render())),
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn code() -> CodeDocument {
        CodeDocument::from_path("a.ctp", "<?php echo $html->link('x'); ?>")
    }

    fn example() -> OneShotExample {
        OneShotExample {
            input: "$html->link('a')".into(),
            output: "$this->Html->link('a')".into(),
        }
    }

    #[test]
    fn zero_shot_has_request_then_code_and_no_example() {
        let p = build_baseline_prompt(&TemplateSet::default(), &BaselineMode::ZeroShot, "update to CakePHP 4.5", &code())
            .unwrap();
        let text = p.as_str();
        let req = text.find("update to CakePHP 4.5").unwrap();
        let src = text.find("$html->link('x')").unwrap();
        assert!(req < src);
        assert!(!text.contains(EXAMPLE_SECTION_START));
        assert_eq!(p.origin(), ids::BASELINE_ZSL);
    }

    #[test]
    fn one_shot_has_exactly_one_example_section() {
        let p = build_baseline_prompt(
            &TemplateSet::default(),
            &BaselineMode::OneShot(example()),
            "update to CakePHP 4.5",
            &code(),
        )
        .unwrap();
        let text = p.as_str();
        assert_eq!(text.matches(EXAMPLE_SECTION_START).count(), 1);
        assert_eq!(text.matches(EXAMPLE_SECTION_END).count(), 1);
        let req = text.find("update to CakePHP").unwrap();
        let ex = text.find(EXAMPLE_SECTION_START).unwrap();
        let src = text.find("$html->link('x')").unwrap();
        assert!(req < ex && ex < src);
    }

    #[test]
    fn mode_invariants() {
        assert_eq!(BaselineMode::from_parts(false, Some(example())), Err(PromptError::ExampleForbidden));
        assert_eq!(BaselineMode::from_parts(true, None), Err(PromptError::ExampleMissing));
        assert_eq!(BaselineMode::from_parts(false, None), Ok(BaselineMode::ZeroShot));
    }

    #[test]
    fn example_file_format() {
        let ex = OneShotExample::from_toml_str("input = \"a\"\noutput = '''\nb\n'''\n").unwrap();
        assert_eq!(ex.input, "a");
        assert_eq!(ex.output, "b\n");
    }
}
