//! Forensic analysis of a submission log.
//!
//! Three independent detectors, from most to least conclusive:
//!
//! * [`detect_shared_answers`]: a student submits, as a wrong answer, the
//!   value another student was generated for the same task. Submitting it
//!   before one's own environment ever existed is the strongest signal.
//! * [`detect_fast_chain`]: a chained task solved in about the minimal
//!   possible time after its prerequisite.
//! * [`detect_proximity`]: correct answers close in time, or from a shared
//!   IP address.
//!
//! Findings are leads for an instructor, not verdicts. Detectors only read
//! the log.

mod chain;
mod proximity;
mod report;
mod shared;

use std::collections::BTreeSet;
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::exercise::ExerciseDef;

pub use chain::{detect_fast_chain, solve_times, SolveTime, SolveTimes};
pub use proximity::detect_proximity;
pub use report::{run_report, DetectionReport};
pub use shared::detect_shared_answers;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct DetectionConfig {
    /// A chained solve is suspicious when it takes at most this multiple of
    /// the task's minimal possible solve time.
    pub chain_ratio_threshold: f64,
    pub time_proximity_window_seconds: i64,
    /// Shorter shared answers are ignored as keyboard noise.
    pub min_shared_answer_length: usize,
    /// Exempt in addition to tasks flagged `detection_exempt`.
    pub exempt_tasks: BTreeSet<String>,
}

impl Default for DetectionConfig {
    fn default() -> Self {
        Self {
            chain_ratio_threshold: 1.5,
            time_proximity_window_seconds: 15 * 60,
            min_shared_answer_length: 3,
            exempt_tasks: BTreeSet::new(),
        }
    }
}

impl DetectionConfig {
    pub fn validate(&self) -> Result<()> {
        let mut problems = Vec::new();
        if !self.chain_ratio_threshold.is_finite() || self.chain_ratio_threshold < 1.0 {
            problems.push(format!(
                "chain_ratio_threshold must be a finite number >= 1, got {}",
                self.chain_ratio_threshold
            ));
        }
        if self.time_proximity_window_seconds <= 0 {
            problems.push("time_proximity_window_seconds must be positive".to_owned());
        }
        if problems.is_empty() {
            Ok(())
        } else {
            Err(Error::Config(problems))
        }
    }

    pub fn from_yaml_str(text: &str) -> Result<Self> {
        let config: Self = if text.trim().is_empty() {
            Self::default()
        } else {
            serde_yaml::from_str(text)?
        };
        config.validate()?;
        Ok(config)
    }

    pub fn load(path: &Path) -> Result<Self> {
        Self::from_yaml_str(&std::fs::read_to_string(path)?)
    }

    /// Configured exemptions plus the exercise's own `detection_exempt` flags.
    pub fn exempt_set(&self, exercise: &ExerciseDef) -> BTreeSet<String> {
        exercise
            .tasks
            .values()
            .filter(|t| t.detection_exempt)
            .map(|t| t.task_id.clone())
            .chain(self.exempt_tasks.iter().cloned())
            .collect()
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "SCREAMING_SNAKE_CASE")]
pub enum FindingKind {
    SharedAnswer,
    PreGenerationSubmission,
    FastChain,
    TimeProximity,
    LocationProximity,
}

impl FindingKind {
    pub fn as_str(self) -> &'static str {
        match self {
            FindingKind::SharedAnswer => "SHARED_ANSWER",
            FindingKind::PreGenerationSubmission => "PRE_GENERATION_SUBMISSION",
            FindingKind::FastChain => "FAST_CHAIN",
            FindingKind::TimeProximity => "TIME_PROXIMITY",
            FindingKind::LocationProximity => "LOCATION_PROXIMITY",
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Severity {
    Low,
    Medium,
    High,
}

impl Severity {
    pub fn as_str(self) -> &'static str {
        match self {
            Severity::Low => "low",
            Severity::Medium => "medium",
            Severity::High => "high",
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct Evidence {
    pub text: String,
    /// Sequence numbers of the log records this item rests on.
    pub seqs: Vec<u64>,
}

#[derive(Debug, Clone, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct SuspicionFinding {
    pub kind: FindingKind,
    pub students: Vec<String>,
    pub tasks: Vec<String>,
    pub severity: Severity,
    pub evidence: Vec<Evidence>,
}

impl SuspicionFinding {
    pub fn seqs(&self) -> BTreeSet<u64> {
        self.evidence
            .iter()
            .flat_map(|e| e.seqs.iter().copied())
            .collect()
    }
}

fn fmt_secs(secs: i64) -> String {
    let abs = secs.abs();
    if abs < 120 {
        format!("{secs} s")
    } else if abs < 7200 {
        format!(
            "{}{} min {} s",
            if secs < 0 { "-" } else { "" },
            abs / 60,
            abs % 60
        )
    } else {
        format!(
            "{}{:.1} h",
            if secs < 0 { "-" } else { "" },
            abs as f64 / 3600.0
        )
    }
}
