use std::fmt;
use std::path::Path;

use indexmap::IndexMap;
use serde::{Deserialize, Serialize};
use thiserror::Error;

const DEFAULT_REGISTRY: &str = include_str!("../../assets/registry.toml");

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum SizeClass {
    Small,
    Medium,
    Large,
}

impl fmt::Display for SizeClass {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            SizeClass::Small => "small",
            SizeClass::Medium => "medium",
            SizeClass::Large => "large",
        })
    }
}

/// A registry entry: who makes the model, what it is called, how much context
/// it takes and how big it is.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ModelProfile {
    #[serde(rename = "id")]
    pub profile_id: String,
    pub company: String,
    #[serde(rename = "model")]
    pub model_name: String,
    pub context_length: u32,
    #[serde(rename = "size")]
    pub size_class: SizeClass,
    /// Suffix of the `VAPU_API_KEY_<PROVIDER>` credential variable.
    pub provider: String,
    /// OpenAI-compatible chat completions URL.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub endpoint: Option<String>,
    /// Model name sent to the endpoint, when it differs from `profile_id`.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub api_model: Option<String>,
    #[serde(default)]
    pub context_length_placeholder: bool,
}

impl ModelProfile {
    pub fn api_key_variable(&self) -> String {
        let suffix: String = self
            .provider
            .chars()
            .map(|c| {
                if c.is_ascii_alphanumeric() {
                    c.to_ascii_uppercase()
                } else {
                    '_'
                }
            })
            .collect();
        format!("VAPU_API_KEY_{suffix}")
    }

    pub fn api_model(&self) -> &str {
        self.api_model.as_deref().unwrap_or(&self.profile_id)
    }
}

#[derive(Debug, Error)]
pub enum RegistryError {
    #[error("unknown model `{0}`")]
    UnknownModel(String),
    #[error("duplicate profile id `{0}`")]
    DuplicateProfile(String),
    #[error("profile `{0}` has a zero context length")]
    InvalidContextLength(String),
    #[error("cannot parse registry: {0}")]
    Parse(#[from] toml::de::Error),
    #[error("cannot read registry: {0}")]
    Io(#[from] std::io::Error),
}

#[derive(Deserialize)]
struct RegistryFile {
    #[serde(default)]
    model: Vec<ModelProfile>,
}

#[derive(Debug, Clone, PartialEq, Default)]
pub struct ModelRegistry {
    profiles: IndexMap<String, ModelProfile>,
}

impl ModelRegistry {
    /// The five models shipped with the crate.
    pub fn default_registry() -> Self {
        Self::from_toml_str(DEFAULT_REGISTRY).expect("bundled registry is valid")
    }

    pub fn from_toml_str(text: &str) -> Result<Self, RegistryError> {
        let file: RegistryFile = toml::from_str(text)?;
        Self::from_profiles(file.model)
    }

    pub fn load(path: &Path) -> Result<Self, RegistryError> {
        Self::from_toml_str(&std::fs::read_to_string(path)?)
    }

    pub fn from_profiles(
        profiles: impl IntoIterator<Item = ModelProfile>,
    ) -> Result<Self, RegistryError> {
        let mut map = IndexMap::new();
        for profile in profiles {
            if profile.context_length == 0 {
                return Err(RegistryError::InvalidContextLength(profile.profile_id));
            }
            if map.contains_key(&profile.profile_id) {
                return Err(RegistryError::DuplicateProfile(profile.profile_id));
            }
            map.insert(profile.profile_id.clone(), profile);
        }
        Ok(Self { profiles: map })
    }

    pub fn resolve(&self, profile_id: &str) -> Result<&ModelProfile, RegistryError> {
        self.profiles
            .get(profile_id)
            .ok_or_else(|| RegistryError::UnknownModel(profile_id.to_string()))
    }

    pub fn profiles(&self) -> impl Iterator<Item = &ModelProfile> {
        self.profiles.values()
    }

    pub fn len(&self) -> usize {
        self.profiles.len()
    }

    pub fn is_empty(&self) -> bool {
        self.profiles.is_empty()
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn default_registry_has_the_five_evaluated_models() {
        let reg = ModelRegistry::default_registry();
        let names: Vec<_> = reg.profiles().map(|p| p.model_name.as_str()).collect();
        assert_eq!(names.len(), 5);
        for expected in [
            "Claude 3.5 Sonnet",
            "DeepSeek-V3",
            "GPT-4o mini",
            "GPT-4o",
            "Nova Pro 1.0",
        ] {
            assert!(names.contains(&expected), "missing {expected}");
        }
    }

    #[test]
    fn resolves_known_profiles() {
        let reg = ModelRegistry::default_registry();
        let gpt = reg.resolve("gpt-4o").unwrap();
        assert_eq!(gpt.company, "OpenAI");
        assert_eq!(gpt.size_class, SizeClass::Large);
        assert_eq!(
            reg.resolve("nova-pro-1.0").unwrap().size_class,
            SizeClass::Medium
        );
        assert_eq!(
            reg.resolve("deepseek-v3").unwrap().size_class,
            SizeClass::Medium
        );
        assert_eq!(
            reg.resolve("gpt-4o-mini").unwrap().size_class,
            SizeClass::Small
        );
        assert_eq!(
            reg.resolve("claude-3.5-sonnet").unwrap().size_class,
            SizeClass::Large
        );
    }

    #[test]
    fn unknown_model() {
        let reg = ModelRegistry::default_registry();
        assert!(matches!(
            reg.resolve("gpt-5-unknown"),
            Err(RegistryError::UnknownModel(id)) if id == "gpt-5-unknown"
        ));
    }

    #[test]
    fn rejects_duplicates_and_zero_context() {
        let dup = r#"
[[model]]
id = "a"
company = "X"
model = "A"
context_length = 10
size = "small"
provider = "x"

[[model]]
id = "a"
company = "X"
model = "A2"
context_length = 10
size = "small"
provider = "x"
"#;
        assert!(matches!(
            ModelRegistry::from_toml_str(dup),
            Err(RegistryError::DuplicateProfile(_))
        ));
        let zero = dup.replacen("context_length = 10", "context_length = 0", 1);
        assert!(matches!(
            ModelRegistry::from_toml_str(&zero),
            Err(RegistryError::InvalidContextLength(_))
        ));
    }

    #[test]
    fn api_key_variable_is_per_provider() {
        let reg = ModelRegistry::default_registry();
        assert_eq!(
            reg.resolve("deepseek-v3").unwrap().api_key_variable(),
            "VAPU_API_KEY_DEEPSEEK"
        );
    }
}
