#![allow(dead_code)]

pub mod checks;

use std::path::PathBuf;

use labforge_core::detect::DetectionConfig;
use labforge_core::{EventLog, ExerciseDef, GenerationConfig};

pub fn hw01_dir() -> PathBuf {
    PathBuf::from(env!("CARGO_MANIFEST_DIR")).join("../../exercises/hw01")
}

pub fn exercise() -> ExerciseDef {
    ExerciseDef::load(&hw01_dir().join("exercise.yaml")).unwrap()
}

pub fn generation() -> GenerationConfig {
    GenerationConfig::load(&hw01_dir().join("generation.yaml")).unwrap()
}

pub fn detect_config() -> DetectionConfig {
    DetectionConfig::load(&hw01_dir().join("detect.yaml")).unwrap()
}

pub fn cases_log() -> EventLog {
    let text = std::fs::read_to_string(hw01_dir().join("cases.events.jsonl")).unwrap();
    EventLog::parse_jsonl("hw01", &text).unwrap()
}

pub fn student(c: char) -> String {
    format!("student-{c}")
}

use labforge_core::eventlog::Event;
use labforge_core::timefmt;
use labforge_core::{AnswerRegistration, SubmissionRecord, Verdict};

/// Hand-built logs for focused detector tests. Verdicts are taken as given.
pub struct LogBuilder {
    pub log: EventLog,
}

impl LogBuilder {
    pub fn new() -> Self {
        Self {
            log: EventLog::new("hw01"),
        }
    }

    pub fn reg(&mut self, student: &str, answers: &[(&str, &str)], at: &str) -> u64 {
        self.log
            .append(Event::Registration(AnswerRegistration {
                student_id: student.into(),
                exercise_id: "hw01".into(),
                answers: answers
                    .iter()
                    .map(|(k, v)| (k.to_string(), v.to_string()))
                    .collect(),
                generated_at: timefmt::parse(at).unwrap(),
            }))
            .seq
    }

    pub fn sub(
        &mut self,
        student: &str,
        task: &str,
        answer: &str,
        at: &str,
        ip: &str,
        verdict: Verdict,
    ) -> u64 {
        self.log
            .append(Event::Submission(SubmissionRecord {
                student_id: student.into(),
                task_id: task.into(),
                raw_answer: answer.into(),
                timestamp: timefmt::parse(at).unwrap(),
                ip: ip.into(),
                verdict,
            }))
            .seq
    }

    pub fn ok(&mut self, student: &str, task: &str, at: &str, ip: &str) -> u64 {
        self.sub(student, task, "x", at, ip, Verdict::Correct)
    }
}

/// Personalized answers for every personalized hw01 task.
pub fn full_answers(a1: &str) -> Vec<(&str, &str)> {
    vec![
        ("A1", a1),
        ("A2", "1500"),
        ("A3", "Apple river."),
        ("A4", "root"),
        ("T2", "1500"),
    ]
}
