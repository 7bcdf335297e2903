//! Python bindings: value generation, vars-file emission, grading with an
//! in-memory event log, replay, detection and demonstration sampling.

use std::collections::BTreeMap;
use std::path::{Path, PathBuf};

use pyo3::exceptions::{PyKeyError, PyOSError, PyValueError};
use pyo3::prelude::*;

use labforge_core::detect::{run_report, DetectionConfig};
use labforge_core::eventlog::Event;
use labforge_core::provision::{
    emit_vars, parse_vars as core_parse_vars, value_digest as core_value_digest,
};
use labforge_core::timefmt::{self, Timestamp};
use labforge_core::{AnswerRegistration, Error};

fn py_err(e: Error) -> PyErr {
    match e {
        Error::Io(io) => PyOSError::new_err(io.to_string()),
        Error::NotFound { .. } => PyKeyError::new_err(e.to_string()),
        other => PyValueError::new_err(other.to_string()),
    }
}

fn parse_time(text: Option<&str>) -> PyResult<Timestamp> {
    match text {
        Some(t) => timefmt::parse(t)
            .map_err(|e| PyValueError::new_err(format!("bad timestamp {t:?}: {e}"))),
        None => Ok(timefmt::now()),
    }
}

fn json_to_py<'py>(py: Python<'py>, text: &str) -> PyResult<Bound<'py, PyAny>> {
    py.import("json")?.call_method1("loads", (text,))
}

/// Seed value for an identifier and exercise.
#[pyfunction]
fn derive_seed(identifier: &str, exercise_id: &str) -> PyResult<u64> {
    labforge_core::derive_seed(identifier, exercise_id)
        .map(|s| s.value)
        .map_err(py_err)
}

/// SHA-256 over the sorted `key=value` lines of a variable mapping.
#[pyfunction]
fn value_digest(values: BTreeMap<String, String>) -> String {
    core_value_digest(&values)
}

/// Reads a vars file back into a dict.
#[pyfunction]
fn parse_vars(text: &str) -> PyResult<BTreeMap<String, String>> {
    core_parse_vars(text)
        .map(|m| m.into_iter().collect())
        .map_err(py_err)
}

/// Draws `k` distinct students for demonstration sessions.
#[pyfunction]
fn select_demonstration_sample(
    students: Vec<String>,
    k: usize,
    seed: u64,
) -> PyResult<Vec<String>> {
    labforge_core::audit::select_demonstration_sample(&students, k, seed).map_err(py_err)
}

#[pyclass(frozen, module = "labforge")]
struct GenerationConfig {
    inner: labforge_core::GenerationConfig,
}

#[pymethods]
impl GenerationConfig {
    #[staticmethod]
    fn load(path: PathBuf) -> PyResult<Self> {
        labforge_core::GenerationConfig::load(&path)
            .map(|inner| Self { inner })
            .map_err(py_err)
    }

    /// Parses YAML text; dictionary files are looked up relative to `base_dir`.
    #[staticmethod]
    #[pyo3(signature = (text, base_dir=None))]
    fn from_yaml(text: &str, base_dir: Option<PathBuf>) -> PyResult<Self> {
        labforge_core::GenerationConfig::from_yaml_str(text, base_dir.as_deref())
            .map(|inner| Self { inner })
            .map_err(py_err)
    }

    #[getter]
    fn exercise_id(&self) -> &str {
        &self.inner.exercise_id
    }

    #[getter]
    fn variables(&self) -> Vec<String> {
        self.inner
            .variables
            .iter()
            .map(|v| v.name.clone())
            .collect()
    }

    /// Generates the personalized values for one student.
    #[pyo3(signature = (identifier, generated_at=None))]
    fn generate(&self, identifier: &str, generated_at: Option<&str>) -> PyResult<ValueAssignment> {
        let seed =
            labforge_core::derive_seed(identifier, &self.inner.exercise_id).map_err(py_err)?;
        let at = parse_time(generated_at)?;
        labforge_core::generate_values_at(&self.inner, &seed, at)
            .map(|inner| ValueAssignment { inner })
            .map_err(py_err)
    }

    fn __repr__(&self) -> String {
        format!(
            "GenerationConfig(exercise_id={:?}, variables={})",
            self.inner.exercise_id,
            self.inner.variables.len()
        )
    }
}

#[pyclass(frozen, module = "labforge")]
struct ValueAssignment {
    inner: labforge_core::ValueAssignment,
}

#[pymethods]
impl ValueAssignment {
    #[getter]
    fn student_id(&self) -> &str {
        &self.inner.student_id
    }

    #[getter]
    fn exercise_id(&self) -> &str {
        &self.inner.exercise_id
    }

    /// Variable values in declaration order.
    #[getter]
    fn values(&self) -> Vec<(String, String)> {
        self.inner
            .values
            .iter()
            .map(|(k, v)| (k.clone(), v.clone()))
            .collect()
    }

    #[getter]
    fn answers(&self) -> BTreeMap<String, String> {
        self.inner.answers.clone()
    }

    #[getter]
    fn generated_at(&self) -> String {
        timefmt::format(&self.inner.generated_at)
    }

    fn digest(&self) -> String {
        core_value_digest(&self.inner.values)
    }

    /// The vars file consumed by provisioning.
    fn vars_file(&self) -> String {
        emit_vars(&self.inner).render()
    }

    fn __repr__(&self) -> String {
        format!(
            "ValueAssignment(student_id={:?}, exercise_id={:?})",
            self.inner.student_id, self.inner.exercise_id
        )
    }
}

#[pyclass(frozen, module = "labforge")]
struct Exercise {
    inner: labforge_core::ExerciseDef,
}

#[pymethods]
impl Exercise {
    #[staticmethod]
    fn load(path: PathBuf) -> PyResult<Self> {
        labforge_core::ExerciseDef::load(&path)
            .map(|inner| Self { inner })
            .map_err(py_err)
    }

    #[staticmethod]
    fn from_yaml(text: &str) -> PyResult<Self> {
        labforge_core::ExerciseDef::from_yaml_str(text)
            .map(|inner| Self { inner })
            .map_err(py_err)
    }

    #[getter]
    fn exercise_id(&self) -> &str {
        &self.inner.exercise_id
    }

    #[getter]
    fn tasks(&self) -> Vec<String> {
        self.inner.tasks.keys().cloned().collect()
    }

    #[getter]
    fn entry_tasks(&self) -> Vec<String> {
        self.inner.entry_tasks.iter().cloned().collect()
    }

    fn prerequisites(&self, task_id: &str) -> PyResult<Vec<String>> {
        let task = self.inner.task(task_id).map_err(py_err)?;
        Ok(task.prerequisites.iter().cloned().collect())
    }
}

/// One exercise's grading state backed by an in-memory event log.
#[pyclass(module = "labforge")]
struct Grader {
    exercise: labforge_core::ExerciseDef,
    log: labforge_core::EventLog,
    state: labforge_core::ExerciseState,
}

impl Grader {
    fn commit(&mut self, event: Event) -> PyResult<u64> {
        let entry = labforge_core::LogEntry {
            seq: self.log.last_seq() + 1,
            event,
        };
        self.state.apply(&self.exercise, &entry).map_err(py_err)?;
        let seq = entry.seq;
        self.log.push(entry).map_err(py_err)?;
        Ok(seq)
    }
}

#[pymethods]
impl Grader {
    #[new]
    fn new(exercise: &Exercise) -> Self {
        let ex = exercise.inner.clone();
        Self {
            log: labforge_core::EventLog::new(ex.exercise_id.clone()),
            state: labforge_core::ExerciseState::new(ex.exercise_id.clone()),
            exercise: ex,
        }
    }

    /// Rebuilds a grader from `events.jsonl` text.
    #[staticmethod]
    fn replay(exercise: &Exercise, jsonl: &str) -> PyResult<Self> {
        let ex = exercise.inner.clone();
        let log = labforge_core::EventLog::parse_jsonl(&ex.exercise_id, jsonl).map_err(py_err)?;
        let state = labforge_core::ExerciseState::replay(&ex, &log).map_err(py_err)?;
        Ok(Self {
            exercise: ex,
            log,
            state,
        })
    }

    /// Records a student's expected answers; returns the sequence number.
    #[pyo3(signature = (student, answers, generated_at=None))]
    fn register(
        &mut self,
        student: &str,
        answers: BTreeMap<String, String>,
        generated_at: Option<&str>,
    ) -> PyResult<u64> {
        let reg = AnswerRegistration {
            student_id: student.to_owned(),
            exercise_id: self.exercise.exercise_id.clone(),
            answers,
            generated_at: parse_time(generated_at)?,
        };
        self.commit(Event::Registration(reg))
    }

    /// Grades and logs one submission. Returns a dict with `verdict`,
    /// `attempts_used`, `solved` and `newly_unlocked`.
    #[pyo3(signature = (student, task, answer, at=None, ip="127.0.0.1"))]
    fn submit<'py>(
        &mut self,
        py: Python<'py>,
        student: &str,
        task: &str,
        answer: &str,
        at: Option<&str>,
        ip: &str,
    ) -> PyResult<Bound<'py, PyAny>> {
        let at = parse_time(at)?;
        let outcome = self
            .state
            .grade(&self.exercise, student, task, answer, at, ip)
            .map_err(py_err)?;
        let seq = self.commit(Event::Submission(outcome.record.clone()))?;
        let progress = outcome.state.progress(task);
        let body = serde_json::json!({
            "seq": seq,
            "verdict": outcome.verdict,
            "attempts_used": progress.attempts_used,
            "solved": progress.solved,
            "newly_unlocked": outcome.newly_unlocked,
        });
        json_to_py(py, &body.to_string())
    }

    fn unlocked(&self, student: &str) -> Vec<String> {
        let state = self.state.student(student);
        let unlocked = state.unlocked_tasks(&self.exercise);
        self.exercise
            .tasks
            .keys()
            .filter(|t| unlocked.contains(*t))
            .cloned()
            .collect()
    }

    fn score(&self, student: &str) -> u64 {
        self.state.student(student).score(&self.exercise)
    }

    fn attempts(&self, student: &str, task: &str) -> u32 {
        self.state.student(student).progress(task).attempts_used
    }

    #[getter]
    fn last_seq(&self) -> u64 {
        self.log.last_seq()
    }

    /// The log as `events.jsonl` text.
    fn to_jsonl(&self) -> String {
        self.log.to_jsonl()
    }

    /// Full state as plain Python data; equal states give equal values.
    fn state<'py>(&self, py: Python<'py>) -> PyResult<Bound<'py, PyAny>> {
        let text =
            serde_json::to_string(&self.state).map_err(|e| PyValueError::new_err(e.to_string()))?;
        json_to_py(py, &text)
    }
}

/// Runs every detector over `events.jsonl` text and returns the report as
/// a dict. `config` is detection YAML; defaults apply when omitted.
#[pyfunction]
#[pyo3(signature = (exercise, jsonl, config=None))]
fn detect<'py>(
    py: Python<'py>,
    exercise: &Exercise,
    jsonl: &str,
    config: Option<&str>,
) -> PyResult<Bound<'py, PyAny>> {
    let config = match config {
        Some(text) => DetectionConfig::from_yaml_str(text).map_err(py_err)?,
        None => DetectionConfig::default(),
    };
    let log =
        labforge_core::EventLog::parse_jsonl(&exercise.inner.exercise_id, jsonl).map_err(py_err)?;
    let report = run_report(&log, &exercise.inner, &config).map_err(py_err)?;
    json_to_py(py, &report.to_json())
}

/// Writes `vars.yml` for a value assignment into `directory`.
#[pyfunction]
fn write_vars(assignment: &ValueAssignment, directory: PathBuf) -> PyResult<PathBuf> {
    let path = Path::new(&directory).join("vars.yml");
    std::fs::create_dir_all(&directory).map_err(|e| PyOSError::new_err(e.to_string()))?;
    std::fs::write(&path, emit_vars(&assignment.inner).render())
        .map_err(|e| PyOSError::new_err(e.to_string()))?;
    Ok(path)
}

#[pymodule]
fn labforge(m: &Bound<'_, PyModule>) -> PyResult<()> {
    m.add("__version__", env!("CARGO_PKG_VERSION"))?;
    m.add_class::<GenerationConfig>()?;
    m.add_class::<ValueAssignment>()?;
    m.add_class::<Exercise>()?;
    m.add_class::<Grader>()?;
    m.add_function(wrap_pyfunction!(derive_seed, m)?)?;
    m.add_function(wrap_pyfunction!(value_digest, m)?)?;
    m.add_function(wrap_pyfunction!(parse_vars, m)?)?;
    m.add_function(wrap_pyfunction!(select_demonstration_sample, m)?)?;
    m.add_function(wrap_pyfunction!(detect, m)?)?;
    m.add_function(wrap_pyfunction!(write_vars, m)?)?;
    Ok(())
}
