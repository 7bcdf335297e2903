use std::collections::BTreeMap;
use std::net::Ipv4Addr;

use indexmap::IndexMap;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::genconfig::{AnswerBinding, GenerationConfig, VariableKind, VariableSpec};
use crate::sampling::{self, PASSWORD_ALPHABET};
use crate::seed::Seed;
use crate::timefmt::{self, Timestamp};

/// Concrete values drawn for one student, plus the task answers they imply.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ValueAssignment {
    pub student_id: String,
    pub exercise_id: String,
    /// Rendered values in declaration order.
    pub values: IndexMap<String, String>,
    pub answers: BTreeMap<String, String>,
    #[serde(with = "timefmt::rfc3339")]
    pub generated_at: Timestamp,
}

pub fn generate_values(config: &GenerationConfig, seed: &Seed) -> Result<ValueAssignment> {
    generate_values_at(config, seed, timefmt::now())
}

/// Same as [`generate_values`] with an explicit generation time.
pub fn generate_values_at(
    config: &GenerationConfig,
    seed: &Seed,
    generated_at: Timestamp,
) -> Result<ValueAssignment> {
    let problems = config.structural_problems();
    if !problems.is_empty() {
        return Err(Error::Config(problems));
    }
    let mut values = IndexMap::with_capacity(config.variables.len());
    for spec in &config.variables {
        let value = draw(config, spec, seed).map_err(|e| match e {
            Error::Config(msgs) => Error::Config(
                msgs.into_iter()
                    .map(|m| format!("variable `{}`: {m}", spec.name))
                    .collect(),
            ),
            other => other,
        })?;
        values.insert(spec.name.clone(), value);
    }
    let answers = config
        .answer_bindings
        .iter()
        .map(|(task, binding)| {
            let answer = match binding {
                AnswerBinding::Var(name) => values[name.as_str()].clone(),
                AnswerBinding::Literal(text) => text.clone(),
            };
            (task.clone(), answer)
        })
        .collect();
    Ok(ValueAssignment {
        student_id: seed.source_identifier.clone(),
        exercise_id: config.exercise_id.clone(),
        values,
        answers,
        generated_at,
    })
}

fn draw(config: &GenerationConfig, spec: &VariableSpec, seed: &Seed) -> Result<String> {
    let mut rng = seed.substream(&spec.name);
    let dictionary = || {
        let reference = spec.dictionary_ref().unwrap_or_default();
        config
            .dictionary(reference)
            .ok_or_else(|| Error::config(format!("word list `{reference}` was not loaded")))
    };
    Ok(match spec.kind {
        VariableKind::Port | VariableKind::NumericPin => {
            let (min, max) = spec
                .min
                .zip(spec.max)
                .ok_or_else(|| Error::config("range requires min and max"))?;
            sampling::sample_in_range(&mut rng, min, max, &spec.exclusions)?.to_string()
        }
        VariableKind::Username => {
            sampling::pick_from_dictionary(&mut rng, dictionary()?)?.to_owned()
        }
        VariableKind::Sentence => {
            sampling::compose_sentence(&mut rng, dictionary()?, spec.word_count.unwrap_or(0))?
        }
        VariableKind::PasswordText => sampling::password_text(&mut rng, spec.length.unwrap_or(0))?,
        VariableKind::Ipv4Address => {
            let subnet = spec.subnet.ok_or_else(|| Error::config("missing subnet"))?;
            sampling::ipv4_in_subnet(&mut rng, &subnet)?.to_string()
        }
    })
}

/// Checks a rendered value against its spec by parsing it back, without
/// going through the sampler.
pub fn conforms(config: &GenerationConfig, spec: &VariableSpec, value: &str) -> bool {
    let in_dictionary = |word: &str| {
        spec.dictionary_ref()
            .and_then(|r| config.dictionary(r))
            .is_some_and(|d| d.contains(word))
    };
    match spec.kind {
        VariableKind::Port | VariableKind::NumericPin => {
            let Ok(n) = value.parse::<i64>() else {
                return false;
            };
            n.to_string() == value
                && spec.min.is_some_and(|m| n >= m)
                && spec.max.is_some_and(|m| n <= m)
                && !spec.exclusions.contains(&n)
        }
        VariableKind::Username => in_dictionary(value),
        VariableKind::Sentence => {
            let Some(body) = value.strip_suffix('.') else {
                return false;
            };
            let words: Vec<&str> = body.split(' ').collect();
            if Some(words.len()) != spec.word_count {
                return false;
            }
            words.iter().enumerate().all(|(i, w)| {
                if i == 0 {
                    let mut chars = w.chars();
                    let Some(first) = chars.next() else {
                        return false;
                    };
                    let lowered: String = first.to_lowercase().chain(chars).collect();
                    in_dictionary(&lowered) && first.to_uppercase().eq(std::iter::once(first))
                } else {
                    in_dictionary(w)
                }
            })
        }
        VariableKind::PasswordText => {
            Some(value.len()) == spec.length
                && value.bytes().all(|b| PASSWORD_ALPHABET.contains(&b))
        }
        VariableKind::Ipv4Address => {
            let (Some(subnet), Ok(ip)) = (spec.subnet, value.parse::<Ipv4Addr>()) else {
                return false;
            };
            subnet.contains_host(ip)
        }
    }
}

impl ValueAssignment {
    /// Names of variables whose rendered value breaks its spec.
    pub fn violations(&self, config: &GenerationConfig) -> Vec<String> {
        config
            .variables
            .iter()
            .filter(|spec| {
                self.values
                    .get(&spec.name)
                    .is_none_or(|v| !conforms(config, spec, v))
            })
            .map(|spec| spec.name.clone())
            .collect()
    }
}
