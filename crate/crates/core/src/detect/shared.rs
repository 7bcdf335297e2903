use std::collections::{BTreeMap, BTreeSet};

use crate::eventlog::EventLog;
use crate::exercise::{AnswerMode, ExerciseDef};
use crate::grading::{normalize_answer, Verdict};
use crate::timefmt::{self, Timestamp};

use super::{fmt_secs, DetectionConfig, Evidence, FindingKind, Severity, SuspicionFinding};

struct Hit {
    submitter: String,
    owner: String,
    seq: u64,
    at: Timestamp,
    owner_reg_seq: u64,
    pre_generation: bool,
}

/// Incorrect submissions that equal another student's expected answer for
/// the same personalized task. One finding per unordered student pair and
/// task; it escalates to `PRE_GENERATION_SUBMISSION` when any matching
/// submission predates the submitter's first environment generation.
pub fn detect_shared_answers(
    log: &EventLog,
    exercise: &ExerciseDef,
    config: &DetectionConfig,
) -> Vec<SuspicionFinding> {
    let exempt = config.exempt_set(exercise);
    let in_scope = |task_id: &str| {
        exercise
            .tasks
            .get(task_id)
            .filter(|t| t.answer_mode == AnswerMode::Personalized && !exempt.contains(&t.task_id))
    };

    // (task, normalized answer) -> owners with the registration that assigned it
    let mut owners: BTreeMap<(String, String), BTreeMap<String, u64>> = BTreeMap::new();
    let mut first_generation: BTreeMap<&str, (Timestamp, u64)> = BTreeMap::new();
    for (seq, reg) in log.registrations() {
        let slot = first_generation
            .entry(reg.student_id.as_str())
            .or_insert((reg.generated_at, seq));
        if reg.generated_at < slot.0 {
            *slot = (reg.generated_at, seq);
        }
        for (task_id, answer) in &reg.answers {
            let Some(task) = in_scope(task_id) else {
                continue;
            };
            let key = (
                task_id.clone(),
                normalize_answer(answer, task.case_sensitive),
            );
            owners
                .entry(key)
                .or_default()
                .entry(reg.student_id.clone())
                .or_insert(seq);
        }
    }

    let mut correct: BTreeMap<(&str, &str), (u64, Timestamp)> = BTreeMap::new();
    for (seq, rec) in log.submissions() {
        if rec.verdict == Verdict::Correct {
            correct.insert(
                (rec.student_id.as_str(), rec.task_id.as_str()),
                (seq, rec.timestamp),
            );
        }
    }

    let mut groups: BTreeMap<(String, String, String), Vec<Hit>> = BTreeMap::new();
    for (seq, rec) in log.submissions() {
        if rec.verdict != Verdict::Incorrect {
            continue;
        }
        let Some(task) = in_scope(&rec.task_id) else {
            continue;
        };
        let answer = normalize_answer(&rec.raw_answer, task.case_sensitive);
        if answer.chars().count() < config.min_shared_answer_length {
            continue;
        }
        let Some(matching) = owners.get(&(rec.task_id.clone(), answer)) else {
            continue;
        };
        let pre_generation = first_generation
            .get(rec.student_id.as_str())
            .is_none_or(|(first, _)| rec.timestamp < *first);
        for (owner, &owner_reg_seq) in matching {
            if *owner == rec.student_id {
                continue;
            }
            let (a, b) = if rec.student_id < *owner {
                (rec.student_id.clone(), owner.clone())
            } else {
                (owner.clone(), rec.student_id.clone())
            };
            groups
                .entry((rec.task_id.clone(), a, b))
                .or_default()
                .push(Hit {
                    submitter: rec.student_id.clone(),
                    owner: owner.clone(),
                    seq,
                    at: rec.timestamp,
                    owner_reg_seq,
                    pre_generation,
                });
        }
    }

    groups
        .into_iter()
        .map(|((task_id, a, b), hits)| {
            let pre = hits.iter().any(|h| h.pre_generation);
            let submitters: BTreeSet<&str> = hits.iter().map(|h| h.submitter.as_str()).collect();
            let students = if submitters.len() == 1 {
                let s = hits[0].submitter.clone();
                let o = hits[0].owner.clone();
                vec![s, o]
            } else {
                vec![a, b]
            };
            let mut evidence = Vec::new();
            for h in &hits {
                let mut seqs = vec![h.seq, h.owner_reg_seq];
                let mut text = format!(
                    "{} submitted {}'s expected answer for {} at {} (incorrect for {})",
                    h.submitter,
                    h.owner,
                    task_id,
                    timefmt::format(&h.at),
                    h.submitter
                );
                match first_generation.get(h.submitter.as_str()) {
                    Some((first, first_seq)) if h.pre_generation => {
                        text.push_str(&format!(
                            "; {} first generated an environment at {}, {} later",
                            h.submitter,
                            timefmt::format(first),
                            fmt_secs((*first - h.at).num_seconds())
                        ));
                        seqs.push(*first_seq);
                    }
                    None => {
                        text.push_str(&format!("; {} never generated an environment", h.submitter))
                    }
                    _ => {}
                }
                if let Some((owner_seq, owner_at)) =
                    correct.get(&(h.owner.as_str(), task_id.as_str()))
                {
                    let delta = (*owner_at - h.at).num_seconds();
                    text.push_str(&format!(
                        "; {} submitted it correctly at {} ({} {})",
                        h.owner,
                        timefmt::format(owner_at),
                        fmt_secs(delta.abs()),
                        if delta >= 0 { "later" } else { "earlier" }
                    ));
                    seqs.push(*owner_seq);
                }
                seqs.sort_unstable();
                seqs.dedup();
                evidence.push(Evidence { text, seqs });
            }
            SuspicionFinding {
                kind: if pre {
                    FindingKind::PreGenerationSubmission
                } else {
                    FindingKind::SharedAnswer
                },
                students,
                tasks: vec![task_id],
                severity: if pre {
                    Severity::High
                } else {
                    Severity::Medium
                },
                evidence,
            }
        })
        .collect()
}
