use std::collections::BTreeMap;
use std::fmt;
use std::path::Path;
use std::str::FromStr;

use indexmap::IndexMap;
use serde::{Deserialize, Serialize};

use super::PromptError;
use crate::gateway::AgentRole;

/// Slots a template body may contain, written `{{name}}`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum Placeholder {
    Requirements,
    Task,
    Tasks,
    Code,
    CodeBefore,
    CodeAfter,
    Changes,
    Example,
}

impl Placeholder {
    pub const ALL: [Placeholder; 8] = [
        Placeholder::Requirements,
        Placeholder::Task,
        Placeholder::Tasks,
        Placeholder::Code,
        Placeholder::CodeBefore,
        Placeholder::CodeAfter,
        Placeholder::Changes,
        Placeholder::Example,
    ];

    pub fn name(self) -> &'static str {
        match self {
            Placeholder::Requirements => "requirements",
            Placeholder::Task => "task",
            Placeholder::Tasks => "tasks",
            Placeholder::Code => "code",
            Placeholder::CodeBefore => "code_before",
            Placeholder::CodeAfter => "code_after",
            Placeholder::Changes => "changes",
            Placeholder::Example => "example",
        }
    }
}

impl fmt::Display for Placeholder {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for Placeholder {
    type Err = PromptError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        Placeholder::ALL
            .into_iter()
            .find(|p| p.name() == s)
            .ok_or_else(|| PromptError::UnknownPlaceholder(s.to_string()))
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
enum Segment {
    Literal(String),
    Slot(Placeholder),
}

/// A prompt body with `{{placeholder}}` slots, checked when constructed.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct PromptTemplate {
    template_id: String,
    role: AgentRole,
    body: String,
    segments: Vec<Segment>,
}

fn parse_segments(body: &str) -> Result<Vec<Segment>, PromptError> {
    let mut segments = Vec::new();
    let mut rest = body;
    while let Some(open) = rest.find("{{") {
        if open > 0 {
            segments.push(Segment::Literal(rest[..open].to_string()));
        }
        let after = &rest[open + 2..];
        let close = after
            .find("}}")
            .ok_or_else(|| PromptError::UnterminatedPlaceholder(body.len() - rest.len() + open))?;
        segments.push(Segment::Slot(after[..close].parse()?));
        rest = &after[close + 2..];
    }
    if !rest.is_empty() {
        segments.push(Segment::Literal(rest.to_string()));
    }
    Ok(segments)
}

impl PromptTemplate {
    pub fn new(template_id: impl Into<String>, role: AgentRole, body: impl Into<String>) -> Result<Self, PromptError> {
        let body = body.into();
        let segments = parse_segments(&body)?;
        Ok(Self {
            template_id: template_id.into(),
            role,
            body,
            segments,
        })
    }

    /// Parses the asset format: a header line `@template <id> <role>`, then
    /// the body.
    pub fn parse_asset(text: &str) -> Result<Self, PromptError> {
        let (header, body) = text.split_once('\n').unwrap_or((text, ""));
        let mut fields = header.trim_end_matches('\r').split_whitespace();
        let (Some("@template"), Some(id), Some(role), None) =
            (fields.next(), fields.next(), fields.next(), fields.next())
        else {
            return Err(PromptError::MalformedAsset(header.to_string()));
        };
        let role = role
            .parse::<AgentRole>()
            .map_err(|_| PromptError::MalformedAsset(header.to_string()))?;
        let body = body.strip_suffix('\n').unwrap_or(body);
        Self::new(id, role, body)
    }

    pub fn to_asset(&self) -> String {
        format!("@template {} {}\n{}\n", self.template_id, self.role, self.body)
    }

    pub fn template_id(&self) -> &str {
        &self.template_id
    }

    pub fn role(&self) -> AgentRole {
        self.role
    }

    pub fn body(&self) -> &str {
        &self.body
    }

    pub fn placeholders(&self) -> impl Iterator<Item = Placeholder> + '_ {
        self.segments.iter().filter_map(|s| match s {
            Segment::Slot(p) => Some(*p),
            Segment::Literal(_) => None,
        })
    }

    /// Substitutes every slot in one pass. Bound text is inserted verbatim and
    /// never expanded again, so code that happens to contain `{{task}}` stays
    /// as it is.
    pub fn render(&self, bindings: &Bindings) -> Result<PromptText, PromptError> {
        let mut text = String::with_capacity(self.body.len());
        for segment in &self.segments {
            match segment {
                Segment::Literal(lit) => text.push_str(lit),
                Segment::Slot(p) => text.push_str(
                    bindings
                        .get(*p)
                        .ok_or_else(|| PromptError::MissingBinding(p.name().to_string()))?,
                ),
            }
        }
        if text.trim().is_empty() {
            return Err(PromptError::EmptyRender(self.template_id.clone()));
        }
        Ok(PromptText {
            text,
            origin: self.template_id.clone(),
        })
    }
}

pub fn render_template(tpl: &PromptTemplate, bindings: &Bindings) -> Result<PromptText, PromptError> {
    tpl.render(bindings)
}

/// Placeholder values for one rendering.
#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct Bindings(BTreeMap<Placeholder, String>);

impl Bindings {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn with(mut self, placeholder: Placeholder, text: impl Into<String>) -> Self {
        self.0.insert(placeholder, text.into());
        self
    }

    /// Binds by placeholder name; unknown names are rejected.
    pub fn with_named(self, name: &str, text: impl Into<String>) -> Result<Self, PromptError> {
        Ok(self.with(name.parse()?, text))
    }

    pub fn get(&self, placeholder: Placeholder) -> Option<&str> {
        self.0.get(&placeholder).map(String::as_str)
    }
}

/// A fully rendered prompt.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct PromptText {
    text: String,
    origin: String,
}

impl PromptText {
    /// Wraps agent-written text (e.g. the prompt maker's instruction).
    pub fn new(text: impl Into<String>, origin: impl Into<String>) -> Result<Self, PromptError> {
        let text = text.into();
        if text.trim().is_empty() {
            return Err(PromptError::EmptyRender(origin.into()));
        }
        Ok(Self {
            text,
            origin: origin.into(),
        })
    }

    pub fn as_str(&self) -> &str {
        &self.text
    }

    pub fn origin(&self) -> &str {
        &self.origin
    }
}

impl fmt::Display for PromptText {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.text)
    }
}

/// Template ids the pipeline and baselines look up.
pub mod ids {
    pub const MANAGER_PLAN: &str = "manager.plan";
    pub const MANAGER_REFLECT: &str = "manager.reflect";
    pub const PROMPT_MAKER: &str = "prompt_maker";
    pub const EXECUTOR: &str = "executor";
    pub const VERIFIER: &str = "verifier";
    pub const FINALIZER: &str = "finalizer";
    pub const BASELINE_ZSL: &str = "baseline.zsl";
    pub const BASELINE_OSL: &str = "baseline.osl";

    pub const REQUIRED: [&str; 8] = [
        MANAGER_PLAN,
        MANAGER_REFLECT,
        PROMPT_MAKER,
        EXECUTOR,
        VERIFIER,
        FINALIZER,
        BASELINE_ZSL,
        BASELINE_OSL,
    ];
}

const DEFAULT_ASSETS: [&str; 8] = [
    include_str!("../../assets/templates/manager.plan.txt"),
    include_str!("../../assets/templates/manager.reflect.txt"),
    include_str!("../../assets/templates/prompt_maker.txt"),
    include_str!("../../assets/templates/executor.txt"),
    include_str!("../../assets/templates/verifier.txt"),
    include_str!("../../assets/templates/finalizer.txt"),
    include_str!("../../assets/templates/baseline.zsl.txt"),
    include_str!("../../assets/templates/baseline.osl.txt"),
];

/// Templates by id.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct TemplateSet {
    templates: IndexMap<String, PromptTemplate>,
}

impl Default for TemplateSet {
    fn default() -> Self {
        let mut set = Self {
            templates: IndexMap::new(),
        };
        for asset in DEFAULT_ASSETS {
            set.insert(PromptTemplate::parse_asset(asset).expect("bundled template is valid"))
                .expect("bundled template ids are unique");
        }
        set
    }
}

impl TemplateSet {
    pub fn empty() -> Self {
        Self {
            templates: IndexMap::new(),
        }
    }

    pub fn insert(&mut self, tpl: PromptTemplate) -> Result<(), PromptError> {
        if self.templates.contains_key(tpl.template_id()) {
            return Err(PromptError::DuplicateTemplate(tpl.template_id().to_string()));
        }
        self.templates.insert(tpl.template_id().to_string(), tpl);
        Ok(())
    }

    /// Replaces (or adds) a template by id.
    pub fn set(&mut self, tpl: PromptTemplate) {
        self.templates.insert(tpl.template_id().to_string(), tpl);
    }

    pub fn get(&self, id: &str) -> Result<&PromptTemplate, PromptError> {
        self.templates
            .get(id)
            .ok_or_else(|| PromptError::MissingTemplate(id.to_string()))
    }

    pub fn iter(&self) -> impl Iterator<Item = &PromptTemplate> {
        self.templates.values()
    }

    /// The defaults overridden by every `*.txt` asset in `dir`. Two files
    /// declaring the same id is an error.
    pub fn with_overrides_from(dir: &Path) -> Result<Self, PromptError> {
        let mut set = Self::default();
        let mut seen = Self::empty();
        let mut paths: Vec<_> = std::fs::read_dir(dir)?
            .filter_map(Result::ok)
            .map(|e| e.path())
            .filter(|p| p.is_file() && p.extension().is_some_and(|e| e == "txt"))
            .collect();
        paths.sort();
        for path in paths {
            let tpl = PromptTemplate::parse_asset(&std::fs::read_to_string(&path)?)?;
            seen.insert(tpl.clone())?;
            set.set(tpl);
        }
        Ok(set)
    }

    /// Writes every template as an editable asset file.
    pub fn write_dir(&self, dir: &Path) -> std::io::Result<()> {
        std::fs::create_dir_all(dir)?;
        for tpl in self.iter() {
            std::fs::write(dir.join(format!("{}.txt", tpl.template_id())), tpl.to_asset())?;
        }
        Ok(())
    }
}
