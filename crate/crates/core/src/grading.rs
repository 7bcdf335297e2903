//! Answer checking, unlocking, attempt limits and scoring.
//!
//! Everything here is a pure state transition; the caller owns persistence
//! and ordering.

use std::collections::{BTreeMap, BTreeSet};

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::exercise::{AnswerMode, ExerciseDef, TaskDef};
use crate::timefmt::{self, Timestamp};

/// Expected answers for one student, as pushed by the generator.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct AnswerRegistration {
    pub student_id: String,
    pub exercise_id: String,
    pub answers: BTreeMap<String, String>,
    #[serde(with = "timefmt::rfc3339")]
    pub generated_at: Timestamp,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Verdict {
    Correct,
    Incorrect,
    RejectedAttemptLimit,
    RejectedLocked,
    RejectedClosed,
}

impl Verdict {
    pub fn as_str(self) -> &'static str {
        match self {
            Verdict::Correct => "correct",
            Verdict::Incorrect => "incorrect",
            Verdict::RejectedAttemptLimit => "rejected_attempt_limit",
            Verdict::RejectedLocked => "rejected_locked",
            Verdict::RejectedClosed => "rejected_closed",
        }
    }

    /// Whether the submission consumed an attempt.
    pub fn is_attempt(self) -> bool {
        matches!(self, Verdict::Correct | Verdict::Incorrect)
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct SubmissionRecord {
    pub student_id: String,
    pub task_id: String,
    pub raw_answer: String,
    #[serde(with = "timefmt::rfc3339")]
    pub timestamp: Timestamp,
    pub ip: String,
    pub verdict: Verdict,
}

#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct TaskProgress {
    pub attempts_used: u32,
    pub solved: bool,
    #[serde(default, skip_serializing_if = "Option::is_none", with = "opt_ts")]
    pub solved_at: Option<Timestamp>,
}

mod opt_ts {
    use super::Timestamp;
    use serde::{Deserialize, Deserializer, Serializer};

    pub fn serialize<S: Serializer>(ts: &Option<Timestamp>, s: S) -> Result<S::Ok, S::Error> {
        match ts {
            Some(t) => s.serialize_str(&crate::timefmt::format(t)),
            None => s.serialize_none(),
        }
    }

    pub fn deserialize<'de, D: Deserializer<'de>>(d: D) -> Result<Option<Timestamp>, D::Error> {
        Option::<String>::deserialize(d)?
            .map(|raw| crate::timefmt::parse(&raw).map_err(serde::de::Error::custom))
            .transpose()
    }
}

/// Per-student progress through one exercise. Tasks never attempted have
/// no entry.
#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct StudentState {
    pub student_id: String,
    pub tasks: BTreeMap<String, TaskProgress>,
}

impl StudentState {
    pub fn new(student_id: impl Into<String>) -> Self {
        Self {
            student_id: student_id.into(),
            tasks: BTreeMap::new(),
        }
    }

    pub fn progress(&self, task_id: &str) -> TaskProgress {
        self.tasks.get(task_id).cloned().unwrap_or_default()
    }

    pub fn is_solved(&self, task_id: &str) -> bool {
        self.tasks.get(task_id).is_some_and(|p| p.solved)
    }

    pub fn is_unlocked(&self, task: &TaskDef) -> bool {
        task.prerequisites.iter().all(|p| self.is_solved(p))
    }

    pub fn unlocked_tasks(&self, exercise: &ExerciseDef) -> BTreeSet<String> {
        unlocked_tasks(self, exercise)
    }

    pub fn score(&self, exercise: &ExerciseDef) -> u64 {
        score(self, exercise)
    }
}

/// A task is visible once all of its prerequisites are solved; entry tasks
/// have none and are always visible.
pub fn unlocked_tasks(state: &StudentState, exercise: &ExerciseDef) -> BTreeSet<String> {
    exercise
        .tasks
        .values()
        .filter(|t| state.is_unlocked(t))
        .map(|t| t.task_id.clone())
        .collect()
}

pub fn score(state: &StudentState, exercise: &ExerciseDef) -> u64 {
    exercise
        .tasks
        .values()
        .filter(|t| state.is_solved(&t.task_id))
        .map(|t| u64::from(t.points))
        .sum()
}

/// Trims surrounding whitespace; lowercases unless `case_sensitive`.
pub fn normalize_answer(raw: &str, case_sensitive: bool) -> String {
    let trimmed = raw.trim();
    if case_sensitive {
        trimmed.to_owned()
    } else {
        trimmed.to_lowercase()
    }
}

/// The expected answer for `task` from this student's point of view, or
/// `None` when a personalized task has no registration yet.
pub fn expected_answer<'a>(
    task: &'a TaskDef,
    registration: Option<&'a AnswerRegistration>,
) -> Option<&'a str> {
    match task.answer_mode {
        AnswerMode::Uniform => task.uniform_answer.as_deref(),
        AnswerMode::Personalized => registration
            .and_then(|r| r.answers.get(&task.task_id))
            .map(String::as_str),
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct SubmitOutcome {
    pub verdict: Verdict,
    pub state: StudentState,
    pub record: SubmissionRecord,
    /// Tasks that became visible because of this submission.
    pub newly_unlocked: Vec<String>,
}

/// Grades one submission.
///
/// Checks run in order: submission window, lock state, attempt budget (a
/// solved task also counts as exhausted), then the answer itself. Every
/// call yields a record, rejections included. A personalized task with no
/// registration can only be answered incorrectly.
#[allow(clippy::too_many_arguments)]
pub fn submit(
    state: &StudentState,
    exercise: &ExerciseDef,
    registration: Option<&AnswerRegistration>,
    task_id: &str,
    raw_answer: &str,
    timestamp: Timestamp,
    ip: &str,
) -> Result<SubmitOutcome> {
    let task = exercise.task(task_id)?;
    if let Some(reg) = registration {
        if reg.student_id != state.student_id {
            return Err(Error::validation(format!(
                "registration for `{}` used to grade `{}`",
                reg.student_id, state.student_id
            )));
        }
    }
    let progress = state.progress(task_id);
    let verdict = if !exercise.is_open(timestamp) {
        Verdict::RejectedClosed
    } else if !state.is_unlocked(task) {
        Verdict::RejectedLocked
    } else if progress.solved || progress.attempts_used >= task.max_attempts {
        Verdict::RejectedAttemptLimit
    } else {
        let given = normalize_answer(raw_answer, task.case_sensitive);
        match expected_answer(task, registration) {
            Some(expected) if normalize_answer(expected, task.case_sensitive) == given => {
                Verdict::Correct
            }
            _ => Verdict::Incorrect,
        }
    };

    let mut next = state.clone();
    let mut newly_unlocked = Vec::new();
    if verdict.is_attempt() {
        let entry = next.tasks.entry(task_id.to_owned()).or_default();
        entry.attempts_used += 1;
        if verdict == Verdict::Correct {
            entry.solved = true;
            entry.solved_at = Some(timestamp);
            let before = unlocked_tasks(state, exercise);
            newly_unlocked = unlocked_tasks(&next, exercise)
                .difference(&before)
                .cloned()
                .collect();
        }
    }
    let record = SubmissionRecord {
        student_id: state.student_id.clone(),
        task_id: task_id.to_owned(),
        raw_answer: raw_answer.to_owned(),
        timestamp,
        ip: ip.to_owned(),
        verdict,
    };
    Ok(SubmitOutcome {
        verdict,
        state: next,
        record,
        newly_unlocked,
    })
}
