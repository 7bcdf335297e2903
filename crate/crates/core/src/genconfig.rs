//! Generation config: which values to personalize and how they bind to task
//! answers.
//!
//! ```yaml
//! exercise_id: hw01
//! variables:
//!   - { name: telnet_port, kind: port, min: 1500, max: 65000, exclusions: [2323] }
//!   - { name: telnet_user, kind: username, dictionary: usernames }
//! answers:
//!   A1: { var: telnet_port }
//!   S2: { literal: "PubkeyAuthentication no" }
//! ```

use std::collections::{BTreeMap, BTreeSet, HashSet};
use std::path::Path;

use indexmap::IndexMap;
use serde::{Deserialize, Serialize};

use crate::dictionary::WordList;
use crate::error::{Error, Result};
use crate::sampling::{allowed_count, Subnet};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum VariableKind {
    Port,
    NumericPin,
    Username,
    PasswordText,
    Sentence,
    Ipv4Address,
}

impl VariableKind {
    fn is_ranged(self) -> bool {
        matches!(self, VariableKind::Port | VariableKind::NumericPin)
    }

    fn uses_dictionary(self) -> bool {
        matches!(self, VariableKind::Username | VariableKind::Sentence)
    }

    fn default_dictionary(self) -> Option<&'static str> {
        match self {
            VariableKind::Username => Some("usernames"),
            VariableKind::Sentence => Some("words"),
            _ => None,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct VariableSpec {
    pub name: String,
    pub kind: VariableKind,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub min: Option<i64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub max: Option<i64>,
    #[serde(default, skip_serializing_if = "BTreeSet::is_empty")]
    pub exclusions: BTreeSet<i64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub length: Option<usize>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub word_count: Option<usize>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub dictionary: Option<String>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub subnet: Option<Subnet>,
}

impl VariableSpec {
    pub fn new(name: impl Into<String>, kind: VariableKind) -> Self {
        Self {
            name: name.into(),
            kind,
            min: None,
            max: None,
            exclusions: BTreeSet::new(),
            length: None,
            word_count: None,
            dictionary: None,
            subnet: None,
        }
    }

    pub fn range(mut self, min: i64, max: i64) -> Self {
        self.min = Some(min);
        self.max = Some(max);
        self
    }

    pub fn excluding(mut self, values: impl IntoIterator<Item = i64>) -> Self {
        self.exclusions.extend(values);
        self
    }

    /// Dictionary reference with the kind's default applied.
    pub fn dictionary_ref(&self) -> Option<&str> {
        self.dictionary
            .as_deref()
            .or(self.kind.default_dictionary())
    }

    fn problems(&self, out: &mut Vec<String>) {
        let name = &self.name;
        if !is_identifier(name) {
            out.push(format!(
                "variable `{name}`: name must match [A-Za-z_][A-Za-z0-9_]* and not be a YAML keyword"
            ));
        }
        let kind = self.kind;
        let mut irrelevant = |present: bool, field: &str| {
            if present {
                out.push(format!(
                    "variable `{name}`: `{field}` does not apply to kind {kind:?}"
                ));
            }
        };
        irrelevant(!kind.is_ranged() && self.min.is_some(), "min");
        irrelevant(!kind.is_ranged() && self.max.is_some(), "max");
        irrelevant(
            !kind.is_ranged() && !self.exclusions.is_empty(),
            "exclusions",
        );
        irrelevant(
            kind != VariableKind::PasswordText && self.length.is_some(),
            "length",
        );
        irrelevant(
            kind != VariableKind::Sentence && self.word_count.is_some(),
            "word_count",
        );
        irrelevant(
            !kind.uses_dictionary() && self.dictionary.is_some(),
            "dictionary",
        );
        irrelevant(
            kind != VariableKind::Ipv4Address && self.subnet.is_some(),
            "subnet",
        );

        match kind {
            VariableKind::Port | VariableKind::NumericPin => match (self.min, self.max) {
                (Some(min), Some(max)) => {
                    if min > max {
                        out.push(format!("variable `{name}`: min {min} exceeds max {max}"));
                    } else if allowed_count(min, max, &self.exclusions) == 0 {
                        out.push(format!(
                            "variable `{name}`: allowed set is empty ([{min}, {max}] minus exclusions)"
                        ));
                    }
                    if kind == VariableKind::Port && (min < 1 || max > 65535) {
                        out.push(format!(
                            "variable `{name}`: port range must lie within [1, 65535]"
                        ));
                    }
                    if kind == VariableKind::NumericPin && min < 0 {
                        out.push(format!(
                            "variable `{name}`: numeric_pin range must be non-negative"
                        ));
                    }
                }
                _ => out.push(format!(
                    "variable `{name}`: kind {kind:?} requires `min` and `max`"
                )),
            },
            VariableKind::PasswordText => match self.length {
                Some(0) | None => out.push(format!(
                    "variable `{name}`: password_text requires a positive `length`"
                )),
                Some(_) => {}
            },
            VariableKind::Sentence => match self.word_count {
                Some(0) | None => out.push(format!(
                    "variable `{name}`: sentence requires a positive `word_count`"
                )),
                Some(_) => {}
            },
            VariableKind::Ipv4Address => match self.subnet {
                None => out.push(format!("variable `{name}`: ipv4_address requires `subnet`")),
                Some(s) if s.prefix() > 30 => out.push(format!(
                    "variable `{name}`: subnet {s} has prefix longer than 30"
                )),
                Some(_) => {}
            },
            VariableKind::Username => {}
        }
    }
}

/// Plain identifiers only; YAML keywords would not survive as unquoted keys.
pub(crate) fn is_identifier(s: &str) -> bool {
    const RESERVED: &[&str] = &["true", "false", "null", "yes", "no", "on", "off", "y", "n"];
    if RESERVED.contains(&s.to_ascii_lowercase().as_str()) {
        return false;
    }
    let mut chars = s.chars();
    matches!(chars.next(), Some(c) if c.is_ascii_alphabetic() || c == '_')
        && chars.all(|c| c.is_ascii_alphanumeric() || c == '_')
}

/// How a task's expected answer is obtained: `{var: name}` or
/// `{literal: text}`.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(try_from = "RawBinding", into = "RawBinding")]
pub enum AnswerBinding {
    Var(String),
    Literal(String),
}

#[derive(Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct RawBinding {
    #[serde(default, skip_serializing_if = "Option::is_none")]
    var: Option<String>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    literal: Option<String>,
}

impl TryFrom<RawBinding> for AnswerBinding {
    type Error = String;

    fn try_from(raw: RawBinding) -> std::result::Result<Self, String> {
        match (raw.var, raw.literal) {
            (Some(v), None) => Ok(AnswerBinding::Var(v)),
            (None, Some(l)) => Ok(AnswerBinding::Literal(l)),
            _ => Err("answer binding needs exactly one of `var` or `literal`".into()),
        }
    }
}

impl From<AnswerBinding> for RawBinding {
    fn from(b: AnswerBinding) -> Self {
        match b {
            AnswerBinding::Var(v) => RawBinding {
                var: Some(v),
                literal: None,
            },
            AnswerBinding::Literal(l) => RawBinding {
                var: None,
                literal: Some(l),
            },
        }
    }
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
struct RawConfig {
    exercise_id: String,
    #[serde(default)]
    variables: Vec<VariableSpec>,
    #[serde(default)]
    answers: IndexMap<String, AnswerBinding>,
}

#[derive(Debug, Clone)]
pub struct GenerationConfig {
    pub exercise_id: String,
    pub variables: Vec<VariableSpec>,
    pub answer_bindings: IndexMap<String, AnswerBinding>,
    dictionaries: BTreeMap<String, WordList>,
}

impl GenerationConfig {
    /// Validates and resolves dictionary references. Relative dictionary
    /// paths are looked up under `base_dir`.
    pub fn new(
        exercise_id: impl Into<String>,
        variables: Vec<VariableSpec>,
        answer_bindings: IndexMap<String, AnswerBinding>,
        base_dir: Option<&Path>,
    ) -> Result<Self> {
        let mut config = Self {
            exercise_id: exercise_id.into(),
            variables,
            answer_bindings,
            dictionaries: BTreeMap::new(),
        };
        let mut problems = config.structural_problems();
        for spec in &config.variables {
            let Some(reference) = spec.dictionary_ref() else {
                continue;
            };
            if config.dictionaries.contains_key(reference) {
                continue;
            }
            match WordList::resolve(reference, base_dir) {
                Ok(list) => {
                    config.dictionaries.insert(reference.to_owned(), list);
                }
                Err(Error::Config(msgs)) => problems.extend(
                    msgs.into_iter()
                        .map(|m| format!("variable `{}`: {m}", spec.name)),
                ),
                Err(e) => problems.push(format!("variable `{}`: {e}", spec.name)),
            }
        }
        if problems.is_empty() {
            Ok(config)
        } else {
            Err(Error::Config(problems))
        }
    }

    pub fn from_yaml_str(text: &str, base_dir: Option<&Path>) -> Result<Self> {
        let raw: RawConfig = serde_yaml::from_str(text)?;
        Self::new(raw.exercise_id, raw.variables, raw.answers, base_dir)
    }

    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path)?;
        Self::from_yaml_str(&text, path.parent())
    }

    /// Every invariant violation that can be detected without touching the
    /// filesystem.
    pub fn structural_problems(&self) -> Vec<String> {
        let mut out = Vec::new();
        if self.exercise_id.trim().is_empty() {
            out.push("exercise_id must not be empty".to_owned());
        }
        let mut seen = HashSet::new();
        for spec in &self.variables {
            if !seen.insert(spec.name.as_str()) {
                out.push(format!(
                    "variable `{}` is declared more than once",
                    spec.name
                ));
            }
            spec.problems(&mut out);
        }
        for (task, binding) in &self.answer_bindings {
            if task.trim().is_empty() {
                out.push("answer binding with an empty task id".to_owned());
            }
            if let AnswerBinding::Var(var) = binding {
                if !seen.contains(var.as_str()) {
                    out.push(format!(
                        "answer binding `{task}` refers to undeclared variable `{var}`"
                    ));
                }
            }
        }
        out
    }

    pub fn dictionary(&self, reference: &str) -> Option<&WordList> {
        self.dictionaries.get(reference)
    }

    pub fn variable(&self, name: &str) -> Option<&VariableSpec> {
        self.variables.iter().find(|v| v.name == name)
    }

    /// Returns a copy without `name`; used to check substream isolation.
    pub fn without_variable(&self, name: &str) -> Self {
        let mut copy = self.clone();
        copy.variables.retain(|v| v.name != name);
        copy.answer_bindings
            .retain(|_, b| !matches!(b, AnswerBinding::Var(v) if v == name));
        copy
    }
}
