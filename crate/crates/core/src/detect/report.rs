use std::collections::BTreeSet;
use std::fmt::Write as _;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::eventlog::EventLog;
use crate::exercise::ExerciseDef;
use crate::timefmt::{self, Timestamp};

use super::{
    detect_fast_chain, detect_proximity, detect_shared_answers, DetectionConfig, SuspicionFinding,
};

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct DetectionReport {
    pub exercise_id: String,
    pub findings: Vec<SuspicionFinding>,
    /// Warnings and data-quality notes gathered while running.
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub notes: Vec<String>,
}

fn check_inputs(log: &EventLog, exercise: &ExerciseDef) -> Result<()> {
    let mut problems = Vec::new();
    if log.exercise_id != exercise.exercise_id {
        problems.push(format!(
            "log belongs to exercise `{}` but the definition is `{}`",
            log.exercise_id, exercise.exercise_id
        ));
    }
    for (seq, reg) in log.registrations() {
        for task in reg.answers.keys() {
            if !exercise.tasks.contains_key(task) {
                problems.push(format!(
                    "seq {seq}: registration for {} names unknown task `{task}`",
                    reg.student_id
                ));
            }
        }
    }
    for (seq, rec) in log.submissions() {
        if !exercise.tasks.contains_key(&rec.task_id) {
            problems.push(format!(
                "seq {seq}: submission to unknown task `{}`",
                rec.task_id
            ));
        }
    }
    if problems.is_empty() {
        Ok(())
    } else {
        Err(Error::Validation(problems.join("; ")))
    }
}

/// All detectors over one log, de-duplicated and ordered by severity (high
/// first), then by the earliest record each finding cites.
pub fn run_report(
    log: &EventLog,
    exercise: &ExerciseDef,
    config: &DetectionConfig,
) -> Result<DetectionReport> {
    config.validate()?;
    check_inputs(log, exercise)?;

    let mut findings = detect_shared_answers(log, exercise, config);
    let (chain, notes) = detect_fast_chain(log, exercise, config);
    findings.extend(chain);
    findings.extend(detect_proximity(log, exercise, config));

    let mut seen = BTreeSet::new();
    findings.retain(|f| seen.insert(serde_json::to_string(f).expect("finding serializes")));

    let earliest = |f: &SuspicionFinding| -> Option<Timestamp> {
        f.seqs()
            .into_iter()
            .filter_map(|s| log.get(s))
            .map(|e| e.timestamp())
            .min()
    };
    let mut keyed: Vec<_> = findings.into_iter().map(|f| (earliest(&f), f)).collect();
    keyed.sort_by(|(ta, a), (tb, b)| {
        b.severity
            .cmp(&a.severity)
            .then(ta.cmp(tb))
            .then(a.kind.cmp(&b.kind))
            .then(a.students.cmp(&b.students))
            .then(a.tasks.cmp(&b.tasks))
    });
    Ok(DetectionReport {
        exercise_id: exercise.exercise_id.clone(),
        findings: keyed.into_iter().map(|(_, f)| f).collect(),
        notes,
    })
}

impl DetectionReport {
    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("report serializes")
    }

    pub fn render_table(&self) -> String {
        let rows: Vec<[String; 5]> = self
            .findings
            .iter()
            .map(|f| {
                [
                    f.severity.as_str().to_uppercase(),
                    f.kind.as_str().to_owned(),
                    f.students.join(","),
                    f.tasks.join(","),
                    f.evidence
                        .first()
                        .map(|e| e.text.clone())
                        .unwrap_or_default(),
                ]
            })
            .collect();
        let header = ["SEVERITY", "KIND", "STUDENTS", "TASKS", "EVIDENCE"];
        let mut widths = header.map(str::len);
        for row in &rows {
            for (w, cell) in widths.iter_mut().zip(row.iter()).take(4) {
                *w = (*w).max(cell.chars().count());
            }
        }
        let mut out = String::new();
        let line = |out: &mut String, cells: [&str; 5]| {
            for (i, cell) in cells.iter().enumerate() {
                if i < 4 {
                    let _ = write!(out, "{cell:<width$}  ", width = widths[i]);
                } else {
                    let _ = write!(out, "{cell}");
                }
            }
            out.push('\n');
        };
        line(&mut out, header);
        for (row, finding) in rows.iter().zip(&self.findings) {
            line(&mut out, [&row[0], &row[1], &row[2], &row[3], &row[4]]);
            for extra in finding.evidence.iter().skip(1) {
                let pad = widths.iter().take(4).map(|w| w + 2).sum::<usize>();
                let _ = writeln!(out, "{:pad$}{}", "", extra.text);
            }
        }
        if self.findings.is_empty() {
            out.push_str("(no findings)\n");
        }
        for note in &self.notes {
            let _ = writeln!(out, "note: {note}");
        }
        out
    }

    /// Finding timestamps are not stored; this helper formats the earliest
    /// one for display.
    pub fn earliest_evidence(&self, log: &EventLog, index: usize) -> Option<String> {
        let f = self.findings.get(index)?;
        f.seqs()
            .into_iter()
            .filter_map(|s| log.get(s))
            .map(|e| e.timestamp())
            .min()
            .map(|t| timefmt::format(&t))
    }
}
