use std::collections::{BTreeMap, BTreeSet};

use crate::eventlog::EventLog;
use crate::exercise::ExerciseDef;
use crate::grading::Verdict;
use crate::timefmt::Timestamp;

use super::{fmt_secs, DetectionConfig, Evidence, FindingKind, Severity, SuspicionFinding};

struct Solve<'a> {
    student: &'a str,
    seq: u64,
    at: Timestamp,
}

/// Correct submissions per non-exempt task, sorted by time.
fn solves_by_task<'a>(
    log: &'a EventLog,
    exempt: &BTreeSet<String>,
) -> BTreeMap<&'a str, Vec<Solve<'a>>> {
    let mut by_task: BTreeMap<&str, Vec<Solve<'_>>> = BTreeMap::new();
    for (seq, rec) in log.submissions() {
        if rec.verdict == Verdict::Correct && !exempt.contains(&rec.task_id) {
            by_task.entry(&rec.task_id).or_default().push(Solve {
                student: &rec.student_id,
                seq,
                at: rec.timestamp,
            });
        }
    }
    for solves in by_task.values_mut() {
        solves.sort_by_key(|s| (s.at, s.seq));
    }
    by_task
}

/// Pairs of distinct students whose solves of one task fall within the
/// window, keyed by ordered student pair.
fn close_pairs<'a>(solves: &[Solve<'a>], window: i64) -> Vec<(&'a str, &'a str, u64, u64, i64)> {
    let mut out = Vec::new();
    for (i, a) in solves.iter().enumerate() {
        for b in &solves[i + 1..] {
            let delta = (b.at - a.at).num_seconds();
            if delta > window {
                break;
            }
            if a.student == b.student {
                continue;
            }
            let (x, y, xs, ys) = if a.student < b.student {
                (a.student, b.student, a.seq, b.seq)
            } else {
                (b.student, a.student, b.seq, a.seq)
            };
            out.push((x, y, xs, ys, delta));
        }
    }
    out
}

struct Groups {
    parent: BTreeMap<String, String>,
}

impl Groups {
    fn find(&mut self, x: &str) -> String {
        let p = self
            .parent
            .entry(x.to_owned())
            .or_insert_with(|| x.to_owned())
            .clone();
        if p == x {
            return p;
        }
        let root = self.find(&p);
        self.parent.insert(x.to_owned(), root.clone());
        root
    }

    fn union(&mut self, a: &str, b: &str) {
        let (ra, rb) = (self.find(a), self.find(b));
        if ra != rb {
            // smaller id becomes the root so grouping is label-order stable
            let (keep, drop) = if ra < rb { (ra, rb) } else { (rb, ra) };
            self.parent.insert(drop, keep);
        }
    }
}

/// (task, seq of the first solve, seq of the second, seconds between).
type CloseSolve<'a> = (&'a str, u64, u64, i64);

/// `TIME_PROXIMITY` for every student pair solving the same task within the
/// window, and one `LOCATION_PROXIMITY` per group of students connected by
/// shared IP addresses. A location group is raised to medium when two of its
/// members also solved the same task within the window.
pub fn detect_proximity(
    log: &EventLog,
    exercise: &ExerciseDef,
    config: &DetectionConfig,
) -> Vec<SuspicionFinding> {
    let exempt = config.exempt_set(exercise);
    let window = config.time_proximity_window_seconds;
    let by_task = solves_by_task(log, &exempt);
    let mut findings = Vec::new();

    let mut pair_index: BTreeMap<(&str, &str), Vec<CloseSolve>> = BTreeMap::new();
    for (task, solves) in &by_task {
        for (a, b, sa, sb, delta) in close_pairs(solves, window) {
            pair_index
                .entry((a, b))
                .or_default()
                .push((task, sa, sb, delta));
            findings.push(SuspicionFinding {
                kind: FindingKind::TimeProximity,
                students: vec![a.to_owned(), b.to_owned()],
                tasks: vec![(*task).to_owned()],
                severity: Severity::Low,
                evidence: vec![Evidence {
                    text: format!("{a} and {b} solved {task} {} apart", fmt_secs(delta)),
                    seqs: vec![sa.min(sb), sa.max(sb)],
                }],
            });
        }
    }

    let mut ip_users: BTreeMap<&str, BTreeMap<&str, Vec<u64>>> = BTreeMap::new();
    for (seq, rec) in log.submissions() {
        if exempt.contains(&rec.task_id) || rec.ip.is_empty() {
            continue;
        }
        ip_users
            .entry(&rec.ip)
            .or_default()
            .entry(&rec.student_id)
            .or_default()
            .push(seq);
    }
    ip_users.retain(|_, users| users.len() >= 2);
    let mut groups = Groups {
        parent: BTreeMap::new(),
    };
    for users in ip_users.values() {
        let mut it = users.keys();
        if let Some(first) = it.next() {
            for other in it {
                groups.union(first, other);
            }
        }
    }
    let mut members: BTreeMap<String, BTreeSet<String>> = BTreeMap::new();
    let ids: Vec<String> = groups.parent.keys().cloned().collect();
    for id in ids {
        let root = groups.find(&id);
        members.entry(root).or_default().insert(id);
    }

    for group in members.values() {
        let mut evidence = Vec::new();
        for (ip, users) in &ip_users {
            if !users.keys().any(|u| group.contains(*u)) {
                continue;
            }
            let names: Vec<&str> = users.keys().copied().collect();
            let mut seqs: Vec<u64> = users.values().flatten().copied().collect();
            seqs.sort_unstable();
            evidence.push(Evidence {
                text: format!("{} submitted from {ip}", names.join(", ")),
                seqs,
            });
        }
        let mut tasks = BTreeSet::new();
        for (&(a, b), hits) in &pair_index {
            if !(group.contains(a) && group.contains(b)) {
                continue;
            }
            for &(task, sa, sb, delta) in hits {
                tasks.insert(task.to_owned());
                evidence.push(Evidence {
                    text: format!("{a} and {b} solved {task} {} apart", fmt_secs(delta)),
                    seqs: vec![sa.min(sb), sa.max(sb)],
                });
            }
        }
        findings.push(SuspicionFinding {
            kind: FindingKind::LocationProximity,
            students: group.iter().cloned().collect(),
            severity: if tasks.is_empty() {
                Severity::Low
            } else {
                Severity::Medium
            },
            tasks: tasks.into_iter().collect(),
            evidence,
        });
    }
    findings
}
