use std::collections::{BTreeMap, BTreeSet};

use crate::eventlog::EventLog;
use crate::exercise::ExerciseDef;
use crate::grading::Verdict;
use crate::timefmt::Timestamp;

use super::{fmt_secs, DetectionConfig, Evidence, FindingKind, Severity, SuspicionFinding};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct SolveTime {
    pub seconds: i64,
    /// Correct submission of the task itself.
    pub seq: u64,
    /// Latest correct prerequisite submission, where the clock starts.
    pub unlocked_by_seq: u64,
}

#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct SolveTimes {
    pub times: BTreeMap<(String, String), SolveTime>,
    /// Data-quality notes for solves that could not be timed.
    pub notes: Vec<String>,
}

/// Time from the moment a task unlocked (the last of its prerequisites was
/// solved) to its own correct submission. Entry tasks and unsolved tasks
/// have no solve time.
pub fn solve_times(log: &EventLog, exercise: &ExerciseDef) -> SolveTimes {
    let mut solved: BTreeMap<(&str, &str), (u64, Timestamp)> = BTreeMap::new();
    for (seq, rec) in log.submissions() {
        if rec.verdict == Verdict::Correct {
            solved
                .entry((rec.student_id.as_str(), rec.task_id.as_str()))
                .or_insert((seq, rec.timestamp));
        }
    }
    let mut out = SolveTimes::default();
    for (&(student, task_id), &(seq, at)) in &solved {
        let Some(task) = exercise.tasks.get(task_id) else {
            out.notes.push(format!(
                "{student}: solve of unknown task {task_id} ignored"
            ));
            continue;
        };
        if task.prerequisites.is_empty() {
            continue;
        }
        let mut start: Option<(u64, Timestamp)> = None;
        let mut missing = Vec::new();
        for pre in &task.prerequisites {
            match solved.get(&(student, pre.as_str())) {
                Some(&(pseq, pat)) => {
                    if start.is_none_or(|(_, s)| pat > s) {
                        start = Some((pseq, pat));
                    }
                }
                None => missing.push(pre.as_str()),
            }
        }
        match start {
            Some((unlocked_by_seq, from)) if missing.is_empty() => {
                out.times.insert(
                    (student.to_owned(), task_id.to_owned()),
                    SolveTime {
                        seconds: (at - from).num_seconds(),
                        seq,
                        unlocked_by_seq,
                    },
                );
            }
            _ => out.notes.push(format!(
                "{student}: {task_id} solved (seq {seq}) but no correct submission recorded for prerequisite {}; excluded from timing",
                missing.join(", ")
            )),
        }
    }
    out
}

/// Returns findings and warnings (tasks lacking a minimal solve time).
pub fn detect_fast_chain(
    log: &EventLog,
    exercise: &ExerciseDef,
    config: &DetectionConfig,
) -> (Vec<SuspicionFinding>, Vec<String>) {
    let exempt = config.exempt_set(exercise);
    let times = solve_times(log, exercise);
    let mut warned = BTreeSet::new();
    let mut warnings = Vec::new();
    let mut findings = Vec::new();
    for ((student, task_id), st) in &times.times {
        if exempt.contains(task_id) {
            continue;
        }
        let task = &exercise.tasks[task_id.as_str()];
        let Some(min) = task.min_solve_seconds else {
            if warned.insert(task_id.clone()) {
                warnings.push(format!(
                    "task {task_id} has no min_solve_seconds; chain timing skipped"
                ));
            }
            continue;
        };
        let limit = config.chain_ratio_threshold * f64::from(min);
        if st.seconds as f64 > limit {
            continue;
        }
        let severity = if st.seconds < i64::from(min) {
            Severity::High
        } else {
            Severity::Medium
        };
        let ratio = st.seconds as f64 / f64::from(min);
        findings.push(SuspicionFinding {
            kind: FindingKind::FastChain,
            students: vec![student.clone()],
            tasks: vec![task_id.clone()],
            severity,
            evidence: vec![Evidence {
                text: format!(
                    "{student} solved {task_id} {} after it unlocked; minimal possible solve time is {min} s (ratio {ratio:.2}, threshold {})",
                    fmt_secs(st.seconds),
                    config.chain_ratio_threshold
                ),
                seqs: vec![st.unlocked_by_seq, st.seq],
            }],
        });
    }
    warnings.extend(times.notes);
    (findings, warnings)
}
