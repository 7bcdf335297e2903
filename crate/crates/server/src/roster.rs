use std::collections::{BTreeSet, HashMap};
use std::path::Path;

use labforge_core::{Error, Result};
use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Role {
    Student,
    Instructor,
    Generator,
}

#[derive(Debug, Clone, PartialEq, Eq, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Principal {
    pub id: String,
    pub role: Role,
    pub token: String,
}

#[derive(Deserialize)]
#[serde(deny_unknown_fields)]
struct RosterFile {
    principals: Vec<Principal>,
}

/// Bearer tokens and the principals they authenticate. Tokens are indexed
/// by their SHA-256 digest so lookups never compare raw secrets.
#[derive(Debug, Clone, Default)]
pub struct Roster {
    by_digest: HashMap<[u8; 32], Principal>,
    students: BTreeSet<String>,
}

fn digest(token: &str) -> [u8; 32] {
    Sha256::digest(token.as_bytes()).into()
}

impl Roster {
    pub fn new(principals: Vec<Principal>) -> Result<Self> {
        let mut problems = Vec::new();
        let mut roster = Roster::default();
        let mut ids = BTreeSet::new();
        for p in principals {
            if p.id.trim().is_empty() {
                problems.push("principal with empty id".to_owned());
                continue;
            }
            if p.token.len() < 8 {
                problems.push(format!("token for `{}` is shorter than 8 characters", p.id));
            }
            if !ids.insert((p.id.clone(), p.role)) {
                problems.push(format!("principal `{}` listed twice", p.id));
            }
            if p.role == Role::Student {
                roster.students.insert(p.id.clone());
            }
            let id = p.id.clone();
            if roster.by_digest.insert(digest(&p.token), p).is_some() {
                problems.push(format!("token for `{id}` is already in use"));
            }
        }
        if problems.is_empty() {
            Ok(roster)
        } else {
            Err(Error::Config(problems))
        }
    }

    pub fn from_yaml_str(text: &str) -> Result<Self> {
        let file: RosterFile = serde_yaml::from_str(text)?;
        Self::new(file.principals)
    }

    pub fn load(path: &Path) -> Result<Self> {
        Self::from_yaml_str(&std::fs::read_to_string(path)?)
    }

    pub fn authenticate(&self, token: &str) -> Option<&Principal> {
        self.by_digest.get(&digest(token))
    }

    pub fn is_student(&self, id: &str) -> bool {
        self.students.contains(id)
    }

    pub fn students(&self) -> impl Iterator<Item = &str> {
        self.students.iter().map(String::as_str)
    }
}
