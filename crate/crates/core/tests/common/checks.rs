//! Criterion checks shared by the acceptance harness and the focused tests.
//! Each returns `Err(reason)` on the first violation.

use std::collections::{BTreeMap, BTreeSet};
use std::time::{Duration, Instant};

use chrono::Duration as Span;
use labforge_core::detect::{
    detect_fast_chain, run_report, DetectionConfig, FindingKind, Severity,
};
use labforge_core::eventlog::Event;
use labforge_core::grading::submit;
use labforge_core::provision::{emit_vars, value_digest};
use labforge_core::rng::SplitMix64;
use labforge_core::sampling::allowed_count;
use labforge_core::timefmt::{self, Timestamp};
use labforge_core::{
    derive_seed, generate_values_at, AnswerMode, AnswerRegistration, EventLog, ExerciseDef,
    ExerciseState, GenerationConfig, Seed, StudentState, Verdict,
};
use statrs::distribution::{ChiSquared, ContinuousCDF};

use super::*;

pub type Check = Result<(), String>;

macro_rules! ensure {
    ($cond:expr, $($fmt:tt)+) => {
        if !($cond) {
            return Err(format!($($fmt)+));
        }
    };
}

pub fn fixed_time() -> Timestamp {
    timefmt::parse("2021-05-04T12:00:00Z").unwrap()
}

pub fn identifier(i: usize) -> String {
    format!("student{i:05}@example.org")
}

pub fn constraint_compliance(n: usize, budget: Duration) -> Check {
    let config = generation();
    let started = Instant::now();
    for i in 0..n {
        let seed = derive_seed(&identifier(i), "hw01").map_err(|e| e.to_string())?;
        let values = generate_values_at(&config, &seed, fixed_time()).map_err(|e| e.to_string())?;
        let port: i64 = values.values["telnet_port"]
            .parse()
            .map_err(|_| "port not numeric")?;
        ensure!(
            (1500..=65000).contains(&port) && port != 2323,
            "port {port} for {}",
            identifier(i)
        );
        let pin: i64 = values.values["account_pin"]
            .parse()
            .map_err(|_| "pin not numeric")?;
        ensure!(
            (1300..=2000).contains(&pin) && pin != 1337 && pin != 1234,
            "pin {pin} for {}",
            identifier(i)
        );
        let violations = values.violations(&config);
        ensure!(violations.is_empty(), "{}: {violations:?}", identifier(i));
    }
    let elapsed = started.elapsed();
    ensure!(elapsed < budget, "took {elapsed:?}");
    Ok(())
}

/// Values pinned by the independent reference implementation.
pub fn determinism_goldens() -> Check {
    let vectors = [
        ("a@x.org", "hw01", 724948975800940698u64),
        ("a@x.org", "hw02", 11762311807452382952),
        ("student-a@example.org", "hw01", 9929091623650090783),
    ];
    for (id, ex, want) in vectors {
        let got = derive_seed(id, ex).unwrap().value;
        ensure!(got == want, "seed({id}, {ex}) = {got}, want {want}");
    }
    let streams: [(u64, &str, [u64; 3]); 3] = [
        (
            0,
            "x",
            [13523732715314835281, 29322785902246969, 6333452894657331947],
        ),
        (
            9929091623650090783,
            "port",
            [
                8281523689994462196,
                7790780526533305891,
                4369555672258460276,
            ],
        ),
        (
            9929091623650090783,
            "pin",
            [
                17078129075605299960,
                16500256236321803652,
                12159566360873302077,
            ],
        ),
    ];
    for (seed, name, want) in streams {
        let mut rng = Seed::from_value(seed).substream(name);
        let got = [rng.next_u64(), rng.next_u64(), rng.next_u64()];
        ensure!(got == want, "substream({seed}, {name}) = {got:?}");
    }
    let config = generation();
    let seed = derive_seed("student-a@example.org", "hw01").unwrap();
    let first = generate_values_at(&config, &seed, fixed_time()).unwrap();
    let second = generate_values_at(&config, &seed, fixed_time()).unwrap();
    ensure!(first == second, "two runs differ");
    let want = [
        ("telnet_port", "56063"),
        ("account_pin", "1853"),
        ("telnet_user", "nagios"),
        ("secret_sentence", "Hidden ocean kettle across paints."),
    ];
    let got: Vec<(&str, &str)> = first
        .values
        .iter()
        .map(|(k, v)| (k.as_str(), v.as_str()))
        .collect();
    ensure!(got == want, "assignment {got:?}");
    let answers: Vec<(&str, &str)> = first
        .answers
        .iter()
        .map(|(k, v)| (k.as_str(), v.as_str()))
        .collect();
    let want_answers = [
        ("A1", "56063"),
        ("A2", "1853"),
        ("A3", "Hidden ocean kettle across paints."),
        ("A4", "nagios"),
        ("T2", "1853"),
    ];
    ensure!(answers == want_answers, "answers {answers:?}");
    let digest = value_digest(&first.values);
    ensure!(
        digest == "57daa04f08880f2f98f52726170241afd9c9e5b97b3de19f4670082d1e1e4934",
        "digest {digest}"
    );
    ensure!(
        emit_vars(&first).render() == emit_vars(&second).render(),
        "vars files differ"
    );
    Ok(())
}

/// Pearson statistic and the critical value at `alpha` for counts that
/// should be uniform over `counts.len()` categories.
pub fn chi_square(counts: &[u64], alpha: f64) -> (f64, f64) {
    let total: u64 = counts.iter().sum();
    let expected = total as f64 / counts.len() as f64;
    let stat = counts
        .iter()
        .map(|&c| (c as f64 - expected).powi(2) / expected)
        .sum();
    let dist = ChiSquared::new((counts.len() - 1) as f64).unwrap();
    (stat, dist.inverse_cdf(1.0 - alpha))
}

pub fn pin_uniformity(n: usize, alpha: f64) -> Check {
    let config = generation();
    let spec = config.variable("account_pin").unwrap();
    let exclusions: BTreeSet<i64> = spec.exclusions.iter().copied().collect();
    let allowed: Vec<i64> = (1300..=2000).filter(|v| !exclusions.contains(v)).collect();
    ensure!(
        allowed.len() == 700,
        "allowed set has {} values",
        allowed.len()
    );
    ensure!(
        allowed_count(1300, 2000, &exclusions) == 700,
        "allowed_count disagrees"
    );
    let index: BTreeMap<i64, usize> = allowed.iter().enumerate().map(|(i, v)| (*v, i)).collect();
    let mut counts = vec![0u64; allowed.len()];
    for i in 0..n {
        let seed = derive_seed(&identifier(i), "hw01").unwrap();
        let values = generate_values_at(&config, &seed, fixed_time()).unwrap();
        let pin: i64 = values.values["account_pin"].parse().unwrap();
        let slot = index
            .get(&pin)
            .ok_or_else(|| format!("pin {pin} outside the allowed set"))?;
        counts[*slot] += 1;
    }
    let (stat, critical) = chi_square(&counts, alpha);
    ensure!(
        stat.partial_cmp(&critical).is_some_and(|o| o.is_le()),
        "chi-square {stat:.1} > {critical:.1}"
    );
    Ok(())
}

fn fresh() -> StudentState {
    StudentState::new("fresh")
}

fn solve(
    state: StudentState,
    exercise: &ExerciseDef,
    task: &str,
    at: Timestamp,
) -> Result<StudentState, String> {
    let answer = exercise.tasks[task]
        .uniform_answer
        .clone()
        .unwrap_or_else(|| "x".into());
    let reg = registration_for(exercise, "fresh", "x");
    let outcome =
        submit(&state, exercise, Some(&reg), task, &answer, at, "ip").map_err(|e| e.to_string())?;
    if outcome.verdict != Verdict::Correct {
        return Err(format!("{task}: {:?}", outcome.verdict));
    }
    Ok(outcome.state)
}

/// A registration giving every personalized task the same answer.
pub fn registration_for(exercise: &ExerciseDef, student: &str, answer: &str) -> AnswerRegistration {
    AnswerRegistration {
        student_id: student.into(),
        exercise_id: exercise.exercise_id.clone(),
        answers: exercise
            .personalized_tasks()
            .map(|t| (t.task_id.clone(), answer.to_owned()))
            .collect(),
        generated_at: fixed_time(),
    }
}

fn set(items: &[&str]) -> BTreeSet<String> {
    items.iter().map(|s| s.to_string()).collect()
}

pub fn chain_semantics() -> Check {
    let ex = exercise();
    let at = fixed_time();
    let mut state = fresh();
    ensure!(
        state.unlocked_tasks(&ex) == set(&["F"]),
        "fresh student sees {:?}",
        state.unlocked_tasks(&ex)
    );
    let reg = registration_for(&ex, "fresh", "x");
    for task in ["A1", "A2", "S1", "T1", "T2"] {
        let outcome = submit(&state, &ex, Some(&reg), task, "x", at, "ip").unwrap();
        ensure!(
            outcome.verdict == Verdict::RejectedLocked,
            "{task} before F: {:?}",
            outcome.verdict
        );
        ensure!(outcome.state == state, "locked submission changed state");
    }
    state = solve(state, &ex, "F", at)?;
    ensure!(
        state.unlocked_tasks(&ex) == set(&["F", "A1", "T1", "T2"]),
        "after F: {:?}",
        state.unlocked_tasks(&ex)
    );
    let chain = ["A1", "A2", "A3", "A4", "S1", "S2"];
    for (i, task) in chain.iter().enumerate() {
        for later in &chain[i + 1..] {
            ensure!(
                !state.unlocked_tasks(&ex).contains(*later),
                "{later} visible before {task}"
            );
            let outcome = submit(&state, &ex, Some(&reg), later, "x", at, "ip").unwrap();
            ensure!(
                outcome.verdict == Verdict::RejectedLocked,
                "{later} accepted before {task}"
            );
        }
        state = solve(state, &ex, task, at)?;
        if let Some(next) = chain.get(i + 1) {
            ensure!(
                state.unlocked_tasks(&ex).contains(*next),
                "{next} still locked after {task}"
            );
        }
    }
    ensure!(
        ex.tasks["S1"].prerequisites == set(&["A4"]),
        "S1 prerequisites"
    );
    ensure!(
        ex.tasks["S2"].prerequisites == set(&["S1"]),
        "S2 prerequisites"
    );
    Ok(())
}

pub fn attempt_limit() -> Check {
    let ex = exercise();
    let at = fixed_time();
    let reg = registration_for(&ex, "fresh", "right");
    let mut state = solve(fresh(), &ex, "F", at)?;
    let mut log = EventLog::new("hw01");
    log.append(Event::Registration(reg.clone()));
    for i in 1..=5 {
        let outcome = submit(&state, &ex, Some(&reg), "T2", "wrong", at, "ip").unwrap();
        ensure!(
            outcome.verdict == Verdict::Incorrect,
            "attempt {i}: {:?}",
            outcome.verdict
        );
        ensure!(
            outcome.state.progress("T2").attempts_used == i,
            "attempt counter"
        );
        state = outcome.state;
        log.append(Event::Submission(outcome.record));
    }
    let sixth = submit(&state, &ex, Some(&reg), "T2", "right", at, "ip").unwrap();
    ensure!(
        sixth.verdict == Verdict::RejectedAttemptLimit,
        "sixth: {:?}",
        sixth.verdict
    );
    ensure!(
        sixth.record.verdict == Verdict::RejectedAttemptLimit,
        "sixth record"
    );
    ensure!(sixth.state == state, "sixth changed state");
    log.append(Event::Submission(sixth.record));
    let logged = log
        .submissions()
        .filter(|(_, s)| s.task_id == "T2")
        .map(|(_, s)| s.verdict)
        .collect::<Vec<_>>();
    ensure!(
        logged.len() == 6 && logged[5] == Verdict::RejectedAttemptLimit,
        "log {logged:?}"
    );
    Ok(())
}

pub fn case_fixture(budget: Duration) -> Check {
    let started = Instant::now();
    let report =
        run_report(&cases_log(), &exercise(), &detect_config()).map_err(|e| e.to_string())?;
    let elapsed = started.elapsed();
    let of = |kind: FindingKind| report.findings.iter().filter(move |f| f.kind == kind);
    let pre: Vec<_> = of(FindingKind::PreGenerationSubmission).collect();
    ensure!(
        pre.len() == 1 && pre[0].severity == Severity::High,
        "pre-generation: {pre:?}"
    );
    ensure!(
        pre[0].students == [student('b'), student('a')],
        "pre-generation pair {:?}",
        pre[0].students
    );
    let shared: Vec<_> = of(FindingKind::SharedAnswer).collect();
    ensure!(
        shared.len() == 1 && shared[0].severity == Severity::Medium,
        "shared: {shared:?}"
    );
    let mut chains: Vec<(String, String)> = of(FindingKind::FastChain)
        .map(|f| (f.students[0].clone(), f.tasks[0].clone()))
        .collect();
    chains.sort();
    let want: Vec<(String, String)> = [('g', "A3"), ('h', "A3"), ('i', "A3"), ('j', "S2")]
        .iter()
        .map(|(c, t)| (student(*c), t.to_string()))
        .collect();
    ensure!(chains == want, "fast chains {chains:?}");
    let location: Vec<_> = of(FindingKind::LocationProximity).collect();
    ensure!(
        location.len() == 1 && location[0].severity == Severity::Medium,
        "location: {location:?}"
    );
    ensure!(
        location[0].students == [student('k'), student('l')],
        "location pair"
    );
    let time = of(FindingKind::TimeProximity).count();
    ensure!(time >= 1, "no time proximity");
    ensure!(
        of(FindingKind::TimeProximity).all(|f| f.severity == Severity::Low),
        "time severity"
    );
    for f in &report.findings {
        ensure!(
            !f.tasks.iter().any(|t| t == "F"),
            "familiarization finding {f:?}"
        );
        ensure!(
            !f.students.contains(&student('e')) || f.kind != FindingKind::SharedAnswer,
            "asd match {f:?}"
        );
    }
    ensure!(elapsed < budget, "took {elapsed:?}");
    Ok(())
}

/// A single student's solve sequence; `a3` and `s2` are the solve times of
/// those tasks in seconds.
pub fn chain_log(a3: i64, s2: i64) -> EventLog {
    let mut b = LogBuilder::new();
    let t0 = timefmt::parse("2021-05-05T09:00:00Z").unwrap();
    let mut t = 0;
    for (task, gap) in [
        ("F", 0),
        ("A1", 1800),
        ("A2", 1800),
        ("A3", a3),
        ("A4", 1800),
        ("S1", 1800),
        ("S2", s2),
    ] {
        t += gap;
        b.ok("s", task, &timefmt::format(&(t0 + Span::seconds(t))), "ip");
    }
    b.log
}

pub fn threshold_boundary() -> Check {
    let ex = exercise();
    let log = chain_log(58, 46);
    let flagged = |k: f64| {
        let cfg = DetectionConfig {
            chain_ratio_threshold: k,
            ..DetectionConfig::default()
        };
        let mut tasks: Vec<String> = detect_fast_chain(&log, &ex, &cfg)
            .0
            .into_iter()
            .map(|f| f.tasks[0].clone())
            .collect();
        tasks.sort();
        tasks
    };
    ensure!(flagged(1.0).is_empty(), "k=1.0 flagged {:?}", flagged(1.0));
    ensure!(
        flagged(1.5) == ["A3", "S2"],
        "k=1.5 flagged {:?}",
        flagged(1.5)
    );
    let fixture = |k: f64| {
        let cfg = DetectionConfig {
            chain_ratio_threshold: k,
            ..detect_config()
        };
        detect_fast_chain(&cases_log(), &ex, &cfg).0.len()
    };
    ensure!(fixture(1.0) == 0, "fixture k=1.0 gives {}", fixture(1.0));
    ensure!(fixture(1.5) == 4, "fixture k=1.5 gives {}", fixture(1.5));
    Ok(())
}

/// One randomized run of the live grading path plus everything needed to
/// check it afterwards.
pub struct Session {
    pub log: EventLog,
    pub roster: Vec<String>,
    pub live: BTreeMap<String, StudentState>,
    /// Unlocked sets after each submission, per student.
    pub unlock_history: BTreeMap<String, Vec<BTreeSet<String>>>,
    /// (submitter, task, verdict) for submissions of another student's
    /// personalized answer that differs from the submitter's own.
    pub foreign_submissions: Vec<(String, String, Verdict)>,
}

fn vary_case(rng: &mut SplitMix64, text: &str) -> String {
    match rng.below(4) {
        0 => text.to_uppercase(),
        1 => format!("  {text}\n"),
        _ => text.to_owned(),
    }
}

pub fn random_session(exercise: &ExerciseDef, config: &GenerationConfig, seed: u64) -> Session {
    let mut rng = SplitMix64::new(seed);
    let n = 2 + rng.below_usize(4);
    let roster: Vec<String> = (0..n).map(|i| format!("s{seed}-{i}@example.org")).collect();
    let tasks: Vec<String> = exercise.tasks.keys().cloned().collect();
    let mut log = EventLog::new(&exercise.exercise_id);
    let mut live: BTreeMap<String, StudentState> = BTreeMap::new();
    let mut regs: BTreeMap<String, AnswerRegistration> = BTreeMap::new();
    let mut unlock_history: BTreeMap<String, Vec<BTreeSet<String>>> = BTreeMap::new();
    let mut foreign_submissions = Vec::new();
    let mut now = timefmt::parse("2021-05-02T20:00:00Z").unwrap();
    let steps = 10 + rng.below_usize(60);
    for _ in 0..steps {
        now += Span::seconds(rng.below(4 * 3600) as i64);
        if rng.below(40) == 0 {
            now += Span::days(9);
        }
        let student = roster[rng.below_usize(n)].clone();
        if rng.below(6) == 0 {
            let s = derive_seed(&student, &exercise.exercise_id).unwrap();
            let values = generate_values_at(config, &s, now).unwrap();
            let reg = AnswerRegistration {
                student_id: student.clone(),
                exercise_id: exercise.exercise_id.clone(),
                answers: values.answers,
                generated_at: now,
            };
            log.append(Event::Registration(reg.clone()));
            regs.insert(student, reg);
            continue;
        }
        let state = live
            .get(&student)
            .cloned()
            .unwrap_or_else(|| StudentState::new(&student));
        let open: Vec<String> = state
            .unlocked_tasks(exercise)
            .into_iter()
            .filter(|t| !state.is_solved(t))
            .collect();
        let task = if !open.is_empty() && rng.below(10) < 7 {
            open[rng.below_usize(open.len())].clone()
        } else {
            tasks[rng.below_usize(tasks.len())].clone()
        };
        let def = &exercise.tasks[&task];
        let own = match def.answer_mode {
            AnswerMode::Uniform => def.uniform_answer.clone(),
            AnswerMode::Personalized => regs
                .get(&student)
                .and_then(|r| r.answers.get(&task).cloned()),
        };
        let others: Vec<&AnswerRegistration> =
            regs.values().filter(|r| r.student_id != student).collect();
        let mut foreign = false;
        let answer = match rng.below(10) {
            0..=3 if own.is_some() => vary_case(&mut rng, own.as_deref().unwrap()),
            4..=6 if !others.is_empty() && def.answer_mode == AnswerMode::Personalized => {
                let other = others[rng.below_usize(others.len())];
                let theirs = other.answers[&task].clone();
                foreign = own.as_deref() != Some(theirs.as_str());
                theirs
            }
            _ => format!("guess-{}", rng.below(1000)),
        };
        let ip = format!("10.0.0.{}", rng.below(4));
        let outcome = submit(
            &state,
            exercise,
            regs.get(&student),
            &task,
            &answer,
            now,
            &ip,
        )
        .unwrap();
        if foreign {
            foreign_submissions.push((student.clone(), task.clone(), outcome.verdict));
        }
        unlock_history
            .entry(student.clone())
            .or_default()
            .push(outcome.state.unlocked_tasks(exercise));
        live.insert(student, outcome.state);
        log.append(Event::Submission(outcome.record));
    }
    Session {
        log,
        roster,
        live,
        unlock_history,
        foreign_submissions,
    }
}

pub fn check_replay(exercise: &ExerciseDef, session: &Session) -> Check {
    let reparsed = EventLog::parse_jsonl(&exercise.exercise_id, &session.log.to_jsonl())
        .map_err(|e| e.to_string())?;
    ensure!(
        reparsed == session.log,
        "log does not survive JSONL round trip"
    );
    let replayed = ExerciseState::replay(exercise, &reparsed).map_err(|e| e.to_string())?;
    for student in &session.roster {
        let live = session
            .live
            .get(student)
            .cloned()
            .unwrap_or_else(|| StudentState::new(student));
        let again = replayed.student(student);
        ensure!(
            live == again,
            "{student}: live {live:?} != replayed {again:?}"
        );
    }
    let extra: Vec<_> = replayed
        .students
        .keys()
        .filter(|s| !session.roster.contains(s))
        .collect();
    ensure!(extra.is_empty(), "replay invented students {extra:?}");
    ensure!(replayed.last_seq == session.log.last_seq(), "last_seq");
    Ok(())
}

pub fn check_attempt_ceiling(exercise: &ExerciseDef, session: &Session) -> Check {
    let mut attempts: BTreeMap<(&str, &str), u32> = BTreeMap::new();
    for (_, s) in session.log.submissions() {
        if s.verdict.is_attempt() {
            *attempts.entry((&s.student_id, &s.task_id)).or_default() += 1;
        }
    }
    for ((student, task), n) in attempts {
        ensure!(
            n <= exercise.tasks[task].max_attempts,
            "{student} used {n} attempts on {task}"
        );
    }
    Ok(())
}

pub fn check_chain_soundness(exercise: &ExerciseDef, session: &Session) -> Check {
    let mut solved: BTreeSet<(&str, &str)> = BTreeSet::new();
    for (seq, s) in session.log.submissions() {
        if s.verdict == Verdict::Correct {
            for pre in &exercise.tasks[&s.task_id].prerequisites {
                ensure!(
                    solved.contains(&(s.student_id.as_str(), pre.as_str())),
                    "seq {seq}: {} solved {} before {pre}",
                    s.student_id,
                    s.task_id
                );
            }
            ensure!(
                !solved.contains(&(s.student_id.as_str(), s.task_id.as_str())),
                "seq {seq}: solved twice"
            );
            solved.insert((&s.student_id, &s.task_id));
        }
    }
    Ok(())
}

pub fn check_unlock_monotonic(session: &Session) -> Check {
    for (student, history) in &session.unlock_history {
        for pair in history.windows(2) {
            ensure!(
                pair[0].is_subset(&pair[1]),
                "{student}: {:?} -> {:?}",
                pair[0],
                pair[1]
            );
        }
    }
    Ok(())
}

pub fn check_isolation_in_session(session: &Session) -> Check {
    for (student, task, verdict) in &session.foreign_submissions {
        ensure!(
            *verdict != Verdict::Correct,
            "{student} solved {task} with a foreign answer"
        );
    }
    Ok(())
}

/// Every ordered pair of generated students, every personalized task: the
/// other student's expected answer, in any case, never grades correct.
pub fn answer_isolation(students: usize) -> Check {
    let ex = exercise();
    let config = generation();
    let regs: Vec<AnswerRegistration> = (0..students)
        .map(|i| {
            let id = identifier(i);
            let values =
                generate_values_at(&config, &derive_seed(&id, "hw01").unwrap(), fixed_time())
                    .unwrap();
            AnswerRegistration {
                student_id: id,
                exercise_id: "hw01".into(),
                answers: values.answers,
                generated_at: fixed_time(),
            }
        })
        .collect();
    let at = fixed_time();
    for me in &regs {
        // all tasks unlocked: every task counts as solved except the one probed
        let mut base = StudentState::new(&me.student_id);
        for t in ex.tasks.keys() {
            base.tasks.entry(t.clone()).or_default().solved = true;
        }
        for task in ex.personalized_tasks() {
            let mut state = base.clone();
            state.tasks.remove(&task.task_id);
            let own = &me.answers[&task.task_id];
            for other in &regs {
                let theirs = &other.answers[&task.task_id];
                if theirs == own {
                    continue;
                }
                for probe in [theirs.clone(), theirs.to_uppercase(), theirs.to_lowercase()] {
                    let outcome =
                        submit(&state, &ex, Some(me), &task.task_id, &probe, at, "ip").unwrap();
                    ensure!(
                        outcome.verdict != Verdict::Correct,
                        "{} solved {} with {}'s answer {probe:?}",
                        me.student_id,
                        task.task_id,
                        other.student_id
                    );
                }
            }
            let outcome = submit(&state, &ex, Some(me), &task.task_id, own, at, "ip").unwrap();
            ensure!(
                outcome.verdict == Verdict::Correct,
                "own answer rejected on {}",
                task.task_id
            );
        }
    }
    Ok(())
}

pub fn replay_equivalence(sequences: u64) -> Check {
    let ex = exercise();
    let config = generation();
    for seed in 0..sequences {
        let session = random_session(&ex, &config, seed);
        check_replay(&ex, &session).map_err(|e| format!("sequence {seed}: {e}"))?;
    }
    Ok(())
}
