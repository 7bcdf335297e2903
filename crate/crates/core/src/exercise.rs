//! Exercise definitions: tasks, points, and the prerequisite graph.

use std::collections::{BTreeMap, BTreeSet, HashSet};
use std::path::Path;

use indexmap::IndexMap;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::timefmt::{self, Timestamp};

pub const DEFAULT_MAX_ATTEMPTS: u32 = 5;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum AnswerMode {
    /// Expected answer comes from the student's registration.
    Personalized,
    /// Same expected answer for everyone, stored in the exercise.
    Uniform,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct TaskDef {
    pub task_id: String,
    pub title: String,
    pub assignment_text: String,
    pub points: u32,
    pub prerequisites: BTreeSet<String>,
    pub answer_mode: AnswerMode,
    pub uniform_answer: Option<String>,
    pub max_attempts: u32,
    /// Instructor estimate of the fastest possible honest solve.
    pub min_solve_seconds: Option<u32>,
    pub case_sensitive: bool,
    pub detection_exempt: bool,
    pub hints: Vec<String>,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ExerciseDef {
    pub exercise_id: String,
    pub tasks: IndexMap<String, TaskDef>,
    pub entry_tasks: BTreeSet<String>,
    #[serde(with = "timefmt::rfc3339")]
    pub opens_at: Timestamp,
    #[serde(with = "timefmt::rfc3339")]
    pub closes_at: Timestamp,
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
struct RawTask {
    id: String,
    #[serde(default)]
    title: String,
    #[serde(default)]
    text: String,
    #[serde(default = "one")]
    points: u32,
    #[serde(default)]
    requires: Vec<String>,
    #[serde(default = "personalized")]
    answer_mode: AnswerMode,
    #[serde(default)]
    uniform_answer: Option<String>,
    #[serde(default = "default_attempts")]
    max_attempts: u32,
    #[serde(default)]
    min_solve_seconds: Option<u32>,
    #[serde(default)]
    case_sensitive: Option<bool>,
    #[serde(default)]
    detection_exempt: Option<bool>,
    #[serde(default)]
    hints: Vec<String>,
}

fn one() -> u32 {
    1
}
fn personalized() -> AnswerMode {
    AnswerMode::Personalized
}
fn default_attempts() -> u32 {
    DEFAULT_MAX_ATTEMPTS
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
struct RawExercise {
    exercise_id: String,
    #[serde(with = "timefmt::rfc3339")]
    opens_at: Timestamp,
    #[serde(with = "timefmt::rfc3339")]
    closes_at: Timestamp,
    #[serde(default)]
    tasks: Vec<RawTask>,
}

impl TaskDef {
    fn from_raw(raw: RawTask) -> Self {
        let is_entry = raw.requires.is_empty();
        TaskDef {
            // Text answers typed by hand are compared leniently; generated
            // values must match exactly.
            case_sensitive: raw
                .case_sensitive
                .unwrap_or(raw.answer_mode == AnswerMode::Personalized),
            // An ungraded entry task is the familiarization question.
            detection_exempt: raw.detection_exempt.unwrap_or(is_entry && raw.points == 0),
            task_id: raw.id,
            title: raw.title,
            assignment_text: raw.text,
            points: raw.points,
            prerequisites: raw.requires.into_iter().collect(),
            answer_mode: raw.answer_mode,
            uniform_answer: raw.uniform_answer,
            max_attempts: raw.max_attempts,
            min_solve_seconds: raw.min_solve_seconds,
            hints: raw.hints,
        }
    }
}

impl ExerciseDef {
    /// Builds and validates an exercise; `entry_tasks` is computed here.
    pub fn new(
        exercise_id: impl Into<String>,
        tasks: impl IntoIterator<Item = TaskDef>,
        opens_at: Timestamp,
        closes_at: Timestamp,
    ) -> Result<Self> {
        let exercise_id = exercise_id.into();
        let mut problems = Vec::new();
        let mut map = IndexMap::new();
        for task in tasks {
            if map.contains_key(&task.task_id) {
                problems.push(format!("task `{}` is defined more than once", task.task_id));
                continue;
            }
            map.insert(task.task_id.clone(), task);
        }
        if exercise_id.trim().is_empty() {
            problems.push("exercise_id must not be empty".into());
        }
        if map.is_empty() {
            problems.push("exercise has no tasks".into());
        }
        if opens_at >= closes_at {
            problems.push(format!(
                "opens_at {} must be earlier than closes_at {}",
                timefmt::format(&opens_at),
                timefmt::format(&closes_at)
            ));
        }
        for task in map.values() {
            let id = &task.task_id;
            if id.trim().is_empty() {
                problems.push("task with an empty id".into());
            }
            for pre in &task.prerequisites {
                if !map.contains_key(pre) {
                    problems.push(format!("task `{id}` requires unknown task `{pre}`"));
                }
            }
            if task.max_attempts == 0 {
                problems.push(format!("task `{id}`: max_attempts must be positive"));
            }
            if task.min_solve_seconds == Some(0) {
                problems.push(format!("task `{id}`: min_solve_seconds must be positive"));
            }
            match (task.answer_mode, &task.uniform_answer) {
                (AnswerMode::Uniform, None) => {
                    problems.push(format!("task `{id}`: uniform task needs `uniform_answer`"))
                }
                (AnswerMode::Personalized, Some(_)) => problems.push(format!(
                    "task `{id}`: personalized task must not carry `uniform_answer`"
                )),
                _ => {}
            }
        }
        if problems.is_empty() {
            if let Some(cycle) = find_cycle(&map) {
                problems.push(format!("prerequisite cycle: {}", cycle.join(" -> ")));
            }
        }
        if !problems.is_empty() {
            return Err(Error::Config(problems));
        }
        let entry_tasks = map
            .values()
            .filter(|t| t.prerequisites.is_empty())
            .map(|t| t.task_id.clone())
            .collect();
        Ok(Self {
            exercise_id,
            tasks: map,
            entry_tasks,
            opens_at,
            closes_at,
        })
    }

    pub fn from_yaml_str(text: &str) -> Result<Self> {
        let raw: RawExercise = serde_yaml::from_str(text)?;
        Self::new(
            raw.exercise_id,
            raw.tasks.into_iter().map(TaskDef::from_raw),
            raw.opens_at,
            raw.closes_at,
        )
    }

    pub fn load(path: &Path) -> Result<Self> {
        Self::from_yaml_str(&std::fs::read_to_string(path)?)
    }

    pub fn task(&self, task_id: &str) -> Result<&TaskDef> {
        self.tasks.get(task_id).ok_or_else(|| Error::NotFound {
            kind: "task",
            id: task_id.to_owned(),
        })
    }

    pub fn personalized_tasks(&self) -> impl Iterator<Item = &TaskDef> {
        self.tasks
            .values()
            .filter(|t| t.answer_mode == AnswerMode::Personalized)
    }

    /// Tasks that list `task_id` as a prerequisite.
    pub fn dependents(&self, task_id: &str) -> Vec<&str> {
        self.tasks
            .values()
            .filter(|t| t.prerequisites.contains(task_id))
            .map(|t| t.task_id.as_str())
            .collect()
    }

    pub fn is_open(&self, at: Timestamp) -> bool {
        self.opens_at <= at && at <= self.closes_at
    }
}

/// Returns one cycle as a closed path (first node repeated at the end).
fn find_cycle(tasks: &IndexMap<String, TaskDef>) -> Option<Vec<String>> {
    #[derive(Clone, Copy, PartialEq)]
    enum Mark {
        Visiting,
        Done,
    }
    fn visit<'a>(
        id: &'a str,
        tasks: &'a IndexMap<String, TaskDef>,
        marks: &mut BTreeMap<&'a str, Mark>,
        stack: &mut Vec<&'a str>,
    ) -> Option<Vec<String>> {
        match marks.get(id) {
            Some(Mark::Done) => return None,
            Some(Mark::Visiting) => {
                let start = stack.iter().position(|s| *s == id).unwrap_or(0);
                let mut cycle: Vec<String> = stack[start..].iter().map(|s| s.to_string()).collect();
                cycle.push(id.to_owned());
                return Some(cycle);
            }
            None => {}
        }
        marks.insert(id, Mark::Visiting);
        stack.push(id);
        for pre in &tasks[id].prerequisites {
            if let Some(cycle) = visit(pre.as_str(), tasks, marks, stack) {
                return Some(cycle);
            }
        }
        stack.pop();
        marks.insert(id, Mark::Done);
        None
    }
    let mut marks = BTreeMap::new();
    for id in tasks.keys() {
        let mut stack = Vec::new();
        if let Some(cycle) = visit(id, tasks, &mut marks, &mut stack) {
            return Some(cycle);
        }
    }
    None
}

/// Checks that a set of answers covers every personalized task and names
/// no unknown task.
pub fn check_answer_coverage<'a>(
    exercise: &ExerciseDef,
    answered: impl IntoIterator<Item = &'a String>,
) -> Result<()> {
    let answered: HashSet<&str> = answered.into_iter().map(String::as_str).collect();
    let mut problems = Vec::new();
    for id in &answered {
        if !exercise.tasks.contains_key(*id) {
            problems.push(format!("answer given for unknown task `{id}`"));
        }
    }
    for task in exercise.personalized_tasks() {
        if !answered.contains(task.task_id.as_str()) {
            problems.push(format!(
                "missing answer for personalized task `{}`",
                task.task_id
            ));
        }
    }
    if problems.is_empty() {
        Ok(())
    } else {
        Err(Error::Validation(problems.join("; ")))
    }
}
