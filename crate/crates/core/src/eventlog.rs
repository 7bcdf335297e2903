//! Append-only event log and the state folded from it.
//!
//! One log per exercise, stored as JSON lines. Each line is either
//!
//! ```text
//! {"seq":1,"kind":"registration","student":"b","answers":{"A1":"26569"},"generated_at":"2021-05-14T11:00:00Z"}
//! {"seq":2,"kind":"submission","student":"b","task":"A1","answer":"41247","ts":"2021-05-14T11:21:00Z","ip":"10.0.0.7","verdict":"incorrect"}
//! ```
//!
//! The live service and replay share [`ExerciseState::apply`], so a replayed
//! log reproduces exactly the state the service held when it wrote the log.

use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::exercise::{check_answer_coverage, ExerciseDef};
use crate::grading::{
    self, AnswerRegistration, StudentState, SubmissionRecord, SubmitOutcome, Verdict,
};
use crate::timefmt::{self, Timestamp};

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum Event {
    Registration(AnswerRegistration),
    Submission(SubmissionRecord),
}

impl Event {
    pub fn student_id(&self) -> &str {
        match self {
            Event::Registration(r) => &r.student_id,
            Event::Submission(s) => &s.student_id,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct LogEntry {
    pub seq: u64,
    pub event: Event,
}

#[derive(Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct RegistrationLine {
    seq: u64,
    kind: String,
    student: String,
    answers: BTreeMap<String, String>,
    #[serde(with = "timefmt::rfc3339")]
    generated_at: Timestamp,
}

#[derive(Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct SubmissionLine {
    seq: u64,
    kind: String,
    student: String,
    task: String,
    answer: String,
    #[serde(with = "timefmt::rfc3339")]
    ts: Timestamp,
    ip: String,
    verdict: Verdict,
}

impl LogEntry {
    pub fn to_json(&self) -> String {
        let line = match &self.event {
            Event::Registration(r) => serde_json::to_string(&RegistrationLine {
                seq: self.seq,
                kind: "registration".into(),
                student: r.student_id.clone(),
                answers: r.answers.clone(),
                generated_at: r.generated_at,
            }),
            Event::Submission(s) => serde_json::to_string(&SubmissionLine {
                seq: self.seq,
                kind: "submission".into(),
                student: s.student_id.clone(),
                task: s.task_id.clone(),
                answer: s.raw_answer.clone(),
                ts: s.timestamp,
                ip: s.ip.clone(),
                verdict: s.verdict,
            }),
        };
        line.expect("log lines always serialize")
    }

    pub fn from_json(exercise_id: &str, line: &str) -> std::result::Result<Self, String> {
        let value: serde_json::Value = serde_json::from_str(line).map_err(|e| e.to_string())?;
        match value.get("kind").and_then(|k| k.as_str()) {
            Some("registration") => {
                let r: RegistrationLine =
                    serde_json::from_value(value).map_err(|e| e.to_string())?;
                Ok(LogEntry {
                    seq: r.seq,
                    event: Event::Registration(AnswerRegistration {
                        student_id: r.student,
                        exercise_id: exercise_id.to_owned(),
                        answers: r.answers,
                        generated_at: r.generated_at,
                    }),
                })
            }
            Some("submission") => {
                let s: SubmissionLine = serde_json::from_value(value).map_err(|e| e.to_string())?;
                Ok(LogEntry {
                    seq: s.seq,
                    event: Event::Submission(SubmissionRecord {
                        student_id: s.student,
                        task_id: s.task,
                        raw_answer: s.answer,
                        timestamp: s.ts,
                        ip: s.ip,
                        verdict: s.verdict,
                    }),
                })
            }
            Some(other) => Err(format!("unknown event kind `{other}`")),
            None => Err("missing `kind`".into()),
        }
    }

    /// Time the event describes: submission time, or generation time for
    /// registrations.
    pub fn timestamp(&self) -> Timestamp {
        match &self.event {
            Event::Registration(r) => r.generated_at,
            Event::Submission(s) => s.timestamp,
        }
    }
}

#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct EventLog {
    pub exercise_id: String,
    entries: Vec<LogEntry>,
}

impl EventLog {
    pub fn new(exercise_id: impl Into<String>) -> Self {
        Self {
            exercise_id: exercise_id.into(),
            entries: Vec::new(),
        }
    }

    /// Parses JSON lines. Blank lines are ignored; anything else that fails
    /// to decode, or a sequence number that does not strictly increase, stops
    /// parsing with the 1-based line number.
    pub fn parse_jsonl(exercise_id: &str, text: &str) -> Result<Self> {
        let mut log = Self::new(exercise_id);
        for (idx, line) in text.lines().enumerate() {
            if line.trim().is_empty() {
                continue;
            }
            let entry = LogEntry::from_json(exercise_id, line).map_err(|reason| Error::Replay {
                line: idx + 1,
                reason,
            })?;
            log.push(entry).map_err(|e| Error::Replay {
                line: idx + 1,
                reason: e.to_string(),
            })?;
        }
        Ok(log)
    }

    pub fn to_jsonl(&self) -> String {
        self.entries.iter().map(|e| e.to_json() + "\n").collect()
    }

    pub fn last_seq(&self) -> u64 {
        self.entries.last().map_or(0, |e| e.seq)
    }

    /// Appends with the next sequence number.
    pub fn append(&mut self, event: Event) -> &LogEntry {
        let seq = self.last_seq() + 1;
        self.entries.push(LogEntry { seq, event });
        self.entries.last().expect("just pushed")
    }

    /// Appends an entry that already carries a sequence number.
    pub fn push(&mut self, entry: LogEntry) -> Result<()> {
        let last = self.last_seq();
        if entry.seq <= last {
            return Err(Error::validation(format!(
                "sequence number {} does not follow {last}",
                entry.seq
            )));
        }
        self.entries.push(entry);
        Ok(())
    }

    pub fn entries(&self) -> &[LogEntry] {
        &self.entries
    }

    pub fn len(&self) -> usize {
        self.entries.len()
    }

    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }

    pub fn get(&self, seq: u64) -> Option<&LogEntry> {
        self.entries
            .binary_search_by_key(&seq, |e| e.seq)
            .ok()
            .map(|i| &self.entries[i])
    }

    pub fn submissions(&self) -> impl Iterator<Item = (u64, &SubmissionRecord)> {
        self.entries.iter().filter_map(|e| match &e.event {
            Event::Submission(s) => Some((e.seq, s)),
            _ => None,
        })
    }

    pub fn registrations(&self) -> impl Iterator<Item = (u64, &AnswerRegistration)> {
        self.entries.iter().filter_map(|e| match &e.event {
            Event::Registration(r) => Some((e.seq, r)),
            _ => None,
        })
    }

    /// A copy keeping only entries accepted by `keep`.
    pub fn filtered(&self, mut keep: impl FnMut(&LogEntry) -> bool) -> Self {
        Self {
            exercise_id: self.exercise_id.clone(),
            entries: self.entries.iter().filter(|e| keep(e)).cloned().collect(),
        }
    }
}

/// Everything the service knows about one exercise, as a fold over its log.
#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct ExerciseState {
    pub exercise_id: String,
    /// Latest registration per student.
    pub registrations: BTreeMap<String, AnswerRegistration>,
    /// Earliest generation time ever registered per student.
    #[serde(with = "ts_map")]
    pub first_generated_at: BTreeMap<String, Timestamp>,
    pub students: BTreeMap<String, StudentState>,
    pub last_seq: u64,
}

mod ts_map {
    use std::collections::BTreeMap;

    use serde::{Deserialize, Deserializer, Serialize, Serializer};

    use super::Timestamp;

    pub fn serialize<S: Serializer>(
        m: &BTreeMap<String, Timestamp>,
        s: S,
    ) -> Result<S::Ok, S::Error> {
        m.iter()
            .map(|(k, v)| (k, crate::timefmt::format(v)))
            .collect::<BTreeMap<_, _>>()
            .serialize(s)
    }

    pub fn deserialize<'de, D: Deserializer<'de>>(
        d: D,
    ) -> Result<BTreeMap<String, Timestamp>, D::Error> {
        BTreeMap::<String, String>::deserialize(d)?
            .into_iter()
            .map(|(k, v)| {
                crate::timefmt::parse(&v)
                    .map(|t| (k, t))
                    .map_err(serde::de::Error::custom)
            })
            .collect()
    }
}

impl ExerciseState {
    pub fn new(exercise_id: impl Into<String>) -> Self {
        Self {
            exercise_id: exercise_id.into(),
            ..Self::default()
        }
    }

    pub fn student(&self, student_id: &str) -> StudentState {
        self.students
            .get(student_id)
            .cloned()
            .unwrap_or_else(|| StudentState::new(student_id))
    }

    /// Validates a registration against the exercise without applying it.
    pub fn check_registration(
        &self,
        exercise: &ExerciseDef,
        reg: &AnswerRegistration,
    ) -> Result<()> {
        if reg.exercise_id != exercise.exercise_id {
            return Err(Error::validation(format!(
                "registration targets exercise `{}`, not `{}`",
                reg.exercise_id, exercise.exercise_id
            )));
        }
        if reg.student_id.trim().is_empty() {
            return Err(Error::validation("registration without a student id"));
        }
        check_answer_coverage(exercise, reg.answers.keys())
    }

    /// Grades a submission against the current state without applying it.
    pub fn grade(
        &self,
        exercise: &ExerciseDef,
        student_id: &str,
        task_id: &str,
        raw_answer: &str,
        timestamp: Timestamp,
        ip: &str,
    ) -> Result<SubmitOutcome> {
        grading::submit(
            &self.student(student_id),
            exercise,
            self.registrations.get(student_id),
            task_id,
            raw_answer,
            timestamp,
            ip,
        )
    }

    /// Applies one logged event. Submissions are re-graded and must
    /// reproduce the logged verdict.
    pub fn apply(&mut self, exercise: &ExerciseDef, entry: &LogEntry) -> Result<()> {
        if entry.seq <= self.last_seq {
            return Err(Error::validation(format!(
                "sequence number {} does not follow {}",
                entry.seq, self.last_seq
            )));
        }
        match &entry.event {
            Event::Registration(reg) => {
                self.check_registration(exercise, reg)?;
                let first = self
                    .first_generated_at
                    .entry(reg.student_id.clone())
                    .or_insert(reg.generated_at);
                *first = (*first).min(reg.generated_at);
                self.registrations
                    .insert(reg.student_id.clone(), reg.clone());
            }
            Event::Submission(rec) => {
                let outcome = self.grade(
                    exercise,
                    &rec.student_id,
                    &rec.task_id,
                    &rec.raw_answer,
                    rec.timestamp,
                    &rec.ip,
                )?;
                if outcome.verdict != rec.verdict {
                    return Err(Error::validation(format!(
                        "logged verdict {} but grading gives {}",
                        rec.verdict.as_str(),
                        outcome.verdict.as_str()
                    )));
                }
                self.students.insert(rec.student_id.clone(), outcome.state);
            }
        }
        self.last_seq = entry.seq;
        Ok(())
    }

    /// Folds a whole log. Errors carry the 1-based position of the entry.
    pub fn replay(exercise: &ExerciseDef, log: &EventLog) -> Result<Self> {
        let mut state = Self::new(exercise.exercise_id.clone());
        state.replay_onto(exercise, log.entries())?;
        Ok(state)
    }

    /// Applies entries after this state's `last_seq`, e.g. on top of a snapshot.
    pub fn replay_onto(&mut self, exercise: &ExerciseDef, entries: &[LogEntry]) -> Result<()> {
        for (idx, entry) in entries.iter().enumerate() {
            self.apply(exercise, entry).map_err(|e| Error::Replay {
                line: idx + 1,
                reason: e.to_string(),
            })?;
        }
        Ok(())
    }
}
