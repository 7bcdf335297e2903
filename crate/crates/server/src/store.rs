//! Durable per-exercise state: an append-only `events.jsonl`, an in-memory
//! fold of it, and an occasional snapshot to shorten startup replay.

use std::fs::{self, File, OpenOptions};
use std::io::Write;
use std::path::{Path, PathBuf};
use std::sync::Arc;

use labforge_core::detect::{run_report, DetectionConfig, DetectionReport};
use labforge_core::eventlog::Event;
use labforge_core::grading::SubmitOutcome;
use labforge_core::timefmt::Timestamp;
use labforge_core::{
    AnswerRegistration, Error, EventLog, ExerciseDef, ExerciseState, LogEntry, Result,
};
use parking_lot::{Mutex, RwLock};

pub const LOG_FILE: &str = "events.jsonl";
pub const SNAPSHOT_FILE: &str = "snapshot.json";

/// Selection applied to an exported log. Task filters drop registrations,
/// which belong to no single task.
#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct LogFilter {
    pub student: Option<String>,
    pub task: Option<String>,
    pub from: Option<Timestamp>,
    pub to: Option<Timestamp>,
}

impl LogFilter {
    pub fn matches(&self, entry: &LogEntry) -> bool {
        if self
            .student
            .as_deref()
            .is_some_and(|s| s != entry.event.student_id())
        {
            return false;
        }
        if let Some(task) = &self.task {
            match &entry.event {
                Event::Submission(rec) if &rec.task_id == task => {}
                _ => return false,
            }
        }
        let ts = entry.timestamp();
        self.from.is_none_or(|from| ts >= from) && self.to.is_none_or(|to| ts <= to)
    }
}

struct Inner {
    log: EventLog,
    state: ExerciseState,
    file: File,
    since_snapshot: u64,
}

pub struct ExerciseStore {
    pub definition: ExerciseDef,
    pub detection: DetectionConfig,
    dir: PathBuf,
    snapshot_every: u64,
    inner: Mutex<Inner>,
    published: RwLock<Arc<ExerciseState>>,
}

fn load_snapshot(path: &Path, definition: &ExerciseDef) -> Option<ExerciseState> {
    let text = fs::read_to_string(path).ok()?;
    let state: ExerciseState = serde_json::from_str(&text).ok()?;
    (state.exercise_id == definition.exercise_id).then_some(state)
}

impl ExerciseStore {
    /// Opens (creating if needed) `dir` and rebuilds state from its log.
    /// A snapshot is used only when it is consistent with the log; a
    /// corrupt log line stops startup with its line number.
    pub fn open(
        definition: ExerciseDef,
        detection: DetectionConfig,
        dir: &Path,
        snapshot_every: u64,
    ) -> Result<Self> {
        fs::create_dir_all(dir)?;
        let log_path = dir.join(LOG_FILE);
        let text = match fs::read_to_string(&log_path) {
            Ok(text) => text,
            Err(e) if e.kind() == std::io::ErrorKind::NotFound => String::new(),
            Err(e) => return Err(e.into()),
        };
        let log = EventLog::parse_jsonl(&definition.exercise_id, &text)?;
        let state = match load_snapshot(&dir.join(SNAPSHOT_FILE), &definition) {
            Some(mut snap) if snap.last_seq <= log.last_seq() => {
                let offset = log.entries().partition_point(|e| e.seq <= snap.last_seq);
                snap.replay_onto(&definition, &log.entries()[offset..])
                    .map_err(|e| match e {
                        Error::Replay { line, reason } => Error::Replay {
                            line: line + offset,
                            reason,
                        },
                        other => other,
                    })?;
                snap
            }
            _ => ExerciseState::replay(&definition, &log)?,
        };
        let file = OpenOptions::new()
            .create(true)
            .append(true)
            .open(&log_path)?;
        let published = RwLock::new(Arc::new(state.clone()));
        Ok(Self {
            definition,
            detection,
            dir: dir.to_owned(),
            snapshot_every,
            inner: Mutex::new(Inner {
                log,
                state,
                file,
                since_snapshot: 0,
            }),
            published,
        })
    }

    pub fn exercise_id(&self) -> &str {
        &self.definition.exercise_id
    }

    /// Latest committed state. Cheap to call; never waits on a writer.
    pub fn state(&self) -> Arc<ExerciseState> {
        self.published.read().clone()
    }

    pub fn register(&self, registration: AnswerRegistration) -> Result<LogEntry> {
        let mut inner = self.inner.lock();
        inner
            .state
            .check_registration(&self.definition, &registration)?;
        let entry = LogEntry {
            seq: inner.log.last_seq() + 1,
            event: Event::Registration(registration),
        };
        self.commit(&mut inner, entry.clone())?;
        Ok(entry)
    }

    pub fn submit(
        &self,
        student: &str,
        task: &str,
        answer: &str,
        at: Timestamp,
        ip: &str,
    ) -> Result<SubmitOutcome> {
        let mut inner = self.inner.lock();
        let outcome = inner
            .state
            .grade(&self.definition, student, task, answer, at, ip)?;
        let entry = LogEntry {
            seq: inner.log.last_seq() + 1,
            event: Event::Submission(outcome.record.clone()),
        };
        self.commit(&mut inner, entry)?;
        Ok(outcome)
    }

    /// Append, fsync, then fold. Nothing becomes visible before the record
    /// is on disk.
    fn commit(&self, inner: &mut Inner, entry: LogEntry) -> Result<()> {
        let mut line = entry.to_json();
        line.push('\n');
        inner.file.write_all(line.as_bytes())?;
        inner.file.sync_data()?;
        inner.state.apply(&self.definition, &entry)?;
        inner.log.push(entry)?;
        *self.published.write() = Arc::new(inner.state.clone());
        inner.since_snapshot += 1;
        if self.snapshot_every > 0 && inner.since_snapshot >= self.snapshot_every {
            write_snapshot(&self.dir, &inner.state)?;
            inner.since_snapshot = 0;
        }
        Ok(())
    }

    pub fn snapshot(&self) -> Result<()> {
        let inner = self.inner.lock();
        write_snapshot(&self.dir, &inner.state)
    }

    pub fn export(&self, filter: &LogFilter) -> Vec<LogEntry> {
        let inner = self.inner.lock();
        inner
            .log
            .entries()
            .iter()
            .filter(|e| filter.matches(e))
            .cloned()
            .collect()
    }

    pub fn log(&self) -> EventLog {
        self.inner.lock().log.clone()
    }

    pub fn report(&self) -> Result<DetectionReport> {
        let log = self.log();
        run_report(&log, &self.definition, &self.detection)
    }
}

fn write_snapshot(dir: &Path, state: &ExerciseState) -> Result<()> {
    let tmp = dir.join(format!("{SNAPSHOT_FILE}.tmp"));
    let mut file = File::create(&tmp)?;
    file.write_all(serde_json::to_string(state)?.as_bytes())?;
    file.sync_all()?;
    fs::rename(&tmp, dir.join(SNAPSHOT_FILE))?;
    Ok(())
}
