use std::fs;
use std::io::Write;
use std::net::SocketAddr;
use std::path::{Path, PathBuf};
use std::time::Duration;

use labforge_core::audit::select_demonstration_sample;
use labforge_core::detect::{run_report, DetectionConfig};
use labforge_core::exercise::check_answer_coverage;
use labforge_core::provision::{append_manifest, emit_vars, write_manifest};
use labforge_core::{
    derive_seed, generate_values, timefmt, AnswerMode, Error, EventLog, ExerciseDef,
    GenerationConfig,
};
use labforge_server::{AppState, Roster, ServiceConfig};
use serde_json::json;

use crate::failure::Failure;
use crate::Format;

pub const VARS_FILE: &str = "vars.yml";
pub const MANIFEST_FILE: &str = "manifests.jsonl";

fn read(path: &Path) -> Result<String, Failure> {
    fs::read_to_string(path).map_err(|e| Failure::Io(format!("{}: {e}", path.display())))
}

fn problems_of(e: Error) -> Vec<String> {
    match e {
        Error::Config(list) => list,
        other => vec![other.to_string()],
    }
}

#[derive(Clone, Copy, PartialEq, Eq)]
enum FileKind {
    Generation,
    Exercise,
    Detection,
    Service,
    Roster,
}

impl FileKind {
    fn name(self) -> &'static str {
        match self {
            FileKind::Generation => "generation",
            FileKind::Exercise => "exercise",
            FileKind::Detection => "detection",
            FileKind::Service => "service",
            FileKind::Roster => "roster",
        }
    }

    fn classify(text: &str) -> Option<Self> {
        let value: serde_yaml::Value = serde_yaml::from_str(text).ok()?;
        let map = match value {
            serde_yaml::Value::Null => return Some(FileKind::Detection),
            serde_yaml::Value::Mapping(m) => m,
            _ => return None,
        };
        let has = |k: &str| map.contains_key(k);
        if has("variables") {
            Some(FileKind::Generation)
        } else if has("tasks") {
            Some(FileKind::Exercise)
        } else if has("principals") {
            Some(FileKind::Roster)
        } else if has("data_dir") {
            Some(FileKind::Service)
        } else if map.is_empty()
            || [
                "chain_ratio_threshold",
                "time_proximity_window_seconds",
                "min_shared_answer_length",
                "exempt_tasks",
            ]
            .iter()
            .any(|k| has(k))
        {
            Some(FileKind::Detection)
        } else {
            None
        }
    }
}

struct Checked {
    path: PathBuf,
    kind: Option<FileKind>,
    problems: Vec<String>,
    generation: Option<GenerationConfig>,
    exercise: Option<ExerciseDef>,
}

fn check_file(path: &Path) -> Result<Checked, Failure> {
    let text = read(path)?;
    let kind = FileKind::classify(&text);
    let mut checked = Checked {
        path: path.to_owned(),
        kind,
        problems: Vec::new(),
        generation: None,
        exercise: None,
    };
    let base = path.parent();
    match kind {
        None => checked
            .problems
            .push("not a recognised labforge configuration file".into()),
        Some(FileKind::Generation) => match GenerationConfig::from_yaml_str(&text, base) {
            Ok(c) => checked.generation = Some(c),
            Err(e) => checked.problems = problems_of(e),
        },
        Some(FileKind::Exercise) => match ExerciseDef::from_yaml_str(&text) {
            Ok(e) => checked.exercise = Some(e),
            Err(e) => checked.problems = problems_of(e),
        },
        Some(FileKind::Detection) => {
            if let Err(e) = DetectionConfig::from_yaml_str(&text) {
                checked.problems = problems_of(e);
            }
        }
        Some(FileKind::Roster) => {
            if let Err(e) = Roster::from_yaml_str(&text) {
                checked.problems = problems_of(e);
            }
        }
        Some(FileKind::Service) => {
            match ServiceConfig::from_yaml_str(&text, base.unwrap_or(Path::new("."))) {
                Ok(service) => {
                    for entry in &service.exercises {
                        if let Err(e) = ExerciseDef::load(&entry.definition) {
                            let at = entry.definition.display();
                            checked
                                .problems
                                .extend(problems_of(e).into_iter().map(|p| format!("{at}: {p}")));
                        }
                        if let Some(d) = &entry.detection {
                            if let Err(e) = DetectionConfig::load(d) {
                                let at = d.display();
                                checked.problems.extend(
                                    problems_of(e).into_iter().map(|p| format!("{at}: {p}")),
                                );
                            }
                        }
                    }
                }
                Err(e) => checked.problems = problems_of(e),
            }
        }
    }
    Ok(checked)
}

/// Answer bindings must cover exactly the personalized tasks of the
/// exercise with the same id.
fn cross_check(generation: &GenerationConfig, exercise: &ExerciseDef) -> Vec<String> {
    let mut out = Vec::new();
    if let Err(e) = check_answer_coverage(exercise, generation.answer_bindings.keys()) {
        out.extend(
            e.to_string()
                .trim_start_matches("validation error: ")
                .split("; ")
                .map(str::to_owned),
        );
    }
    for task in generation.answer_bindings.keys() {
        if exercise
            .tasks
            .get(task)
            .is_some_and(|t| t.answer_mode == AnswerMode::Uniform)
        {
            out.push(format!("answer binding `{task}` targets a uniform task"));
        }
    }
    out
}

pub fn validate(paths: &[PathBuf], format: Format) -> Result<(), Failure> {
    let mut results = Vec::new();
    for path in paths {
        results.push(check_file(path)?);
    }
    let exercises: Vec<(usize, ExerciseDef)> = results
        .iter()
        .enumerate()
        .filter_map(|(i, c)| c.exercise.clone().map(|e| (i, e)))
        .collect();
    for checked in &mut results {
        let Some(generation) = &checked.generation else {
            continue;
        };
        for (_, exercise) in exercises
            .iter()
            .filter(|(_, e)| e.exercise_id == generation.exercise_id)
        {
            let extra = cross_check(generation, exercise);
            checked.problems.extend(extra);
        }
    }
    let ok = results.iter().all(|c| c.problems.is_empty());
    let mut stdout = std::io::stdout().lock();
    match format {
        Format::Json => {
            let files: Vec<_> = results
                .iter()
                .map(|c| {
                    json!({
                        "path": c.path.display().to_string(),
                        "kind": c.kind.map(FileKind::name),
                        "problems": c.problems,
                    })
                })
                .collect();
            writeln!(stdout, "{}", json!({ "ok": ok, "files": files }))?;
        }
        Format::Table => {
            for c in &results {
                let kind = c.kind.map(FileKind::name).unwrap_or("unknown");
                if c.problems.is_empty() {
                    writeln!(stdout, "{}: ok ({kind})", c.path.display())?;
                }
                for p in &c.problems {
                    writeln!(stdout, "{}: {p}", c.path.display())?;
                }
            }
        }
    }
    if ok {
        Ok(())
    } else {
        Err(Failure::Reported(1))
    }
}

fn write_atomically(path: &Path, contents: &str) -> Result<(), Failure> {
    let tmp = path.with_extension("tmp");
    fs::write(&tmp, contents)?;
    fs::rename(&tmp, path)?;
    Ok(())
}

enum PushError {
    Unreachable(String),
    Rejected(u16, String),
}

fn push_registration(
    server: &str,
    token: &str,
    exercise_id: &str,
    body: &serde_json::Value,
) -> Result<u64, PushError> {
    let agent = ureq::Agent::config_builder()
        .http_status_as_error(false)
        .timeout_global(Some(Duration::from_secs(15)))
        .build()
        .new_agent();
    let url = format!(
        "{}/api/exercises/{exercise_id}/registrations",
        server.trim_end_matches('/')
    );
    let mut resp = agent
        .post(&url)
        .header("Authorization", &format!("Bearer {token}"))
        .send_json(body)
        .map_err(|e| PushError::Unreachable(e.to_string()))?;
    let status = resp.status().as_u16();
    let text = resp
        .body_mut()
        .read_to_string()
        .map_err(|e| PushError::Unreachable(e.to_string()))?;
    let parsed: serde_json::Value = serde_json::from_str(&text).unwrap_or_default();
    if status == 201 {
        return Ok(parsed["seq"].as_u64().unwrap_or(0));
    }
    let message = parsed["error"].as_str().map(str::to_owned).unwrap_or(text);
    Err(PushError::Rejected(status, message))
}

pub fn generate(
    id: &str,
    config: &Path,
    out: &Path,
    server: Option<&str>,
    format: Format,
) -> Result<(), Failure> {
    let text = read(config)?;
    let config = GenerationConfig::from_yaml_str(&text, config.parent())?;
    let seed = derive_seed(id, &config.exercise_id)?;
    let values = generate_values(&config, &seed)?;
    fs::create_dir_all(out)?;
    let vars_path = out.join(VARS_FILE);
    let document = emit_vars(&values);
    write_atomically(&vars_path, &document.render())?;
    let manifest_path = out.join(MANIFEST_FILE);
    append_manifest(&manifest_path, &write_manifest(&values))?;

    let mut registered = None;
    if let Some(server) = server {
        let token = std::env::var("LABFORGE_TOKEN").map_err(|_| {
            Failure::Invalid(
                "LABFORGE_TOKEN must hold the generator token when --server is used".into(),
            )
        })?;
        let body = json!({
            "student": id,
            "answers": values.answers,
            "generated_at": timefmt::format(&values.generated_at),
        });
        match push_registration(server, &token, &config.exercise_id, &body) {
            Ok(seq) => registered = Some(seq),
            Err(PushError::Unreachable(e)) => {
                eprintln!(
                    "warning: {} was written but the answers were not registered ({e}); rerun generate once the server is reachable",
                    vars_path.display()
                );
                return Err(Failure::Io(format!("cannot reach {server}")));
            }
            Err(PushError::Rejected(status, message)) if status < 500 => {
                return Err(Failure::Invalid(format!(
                    "server rejected the registration ({status}): {message}"
                )));
            }
            Err(PushError::Rejected(status, message)) => {
                return Err(Failure::Io(format!("server error ({status}): {message}")));
            }
        }
    }

    let mut stdout = std::io::stdout().lock();
    match format {
        Format::Json => writeln!(
            stdout,
            "{}",
            json!({
                "exercise_id": config.exercise_id,
                "vars": vars_path.display().to_string(),
                "manifest": manifest_path.display().to_string(),
                "value_digest": document.value_digest,
                "registered": registered.is_some(),
                "seq": registered,
            })
        )?,
        Format::Table => {
            writeln!(
                stdout,
                "wrote {} ({} variables, digest {})",
                vars_path.display(),
                values.values.len(),
                document.value_digest
            )?;
            match registered {
                Some(seq) => writeln!(stdout, "registered answers with the server (seq {seq})")?,
                None => writeln!(stdout, "answers not registered (local only)")?,
            }
        }
    }
    Ok(())
}

pub fn serve(config: &Path, listen: &str, roster: &Path) -> Result<(), Failure> {
    let config = ServiceConfig::load(config)?;
    let roster = Roster::load(roster)?;
    let addr: SocketAddr = listen
        .parse()
        .map_err(|_| Failure::Invalid(format!("--listen expects host:port, got `{listen}`")))?;
    let app = AppState::open(&config, roster)?;
    let runtime = tokio::runtime::Builder::new_multi_thread()
        .enable_all()
        .build()?;
    runtime.block_on(async move {
        let listener = tokio::net::TcpListener::bind(addr).await?;
        eprintln!(
            "labforge: serving {} exercise(s) on {}",
            app.exercises.len(),
            listener.local_addr()?
        );
        labforge_server::serve(app, listener, async {
            let _ = tokio::signal::ctrl_c().await;
        })
        .await
    })?;
    Ok(())
}

pub fn detect(
    log: &Path,
    exercise: &Path,
    config: Option<&Path>,
    format: Format,
) -> Result<(), Failure> {
    let exercise = ExerciseDef::from_yaml_str(&read(exercise)?)?;
    let config = match config {
        Some(path) => DetectionConfig::from_yaml_str(&read(path)?)?,
        None => DetectionConfig::default(),
    };
    let log = EventLog::parse_jsonl(&exercise.exercise_id, &read(log)?)?;
    let report = run_report(&log, &exercise, &config)?;
    let mut stdout = std::io::stdout().lock();
    match format {
        Format::Json => writeln!(stdout, "{}", report.to_json())?,
        Format::Table => write!(stdout, "{}", report.render_table())?,
    }
    Ok(())
}

/// Student ids from a service roster file or a plain list.
fn roster_ids(text: &str) -> Result<Vec<String>, Failure> {
    if let Ok(serde_yaml::Value::Mapping(m)) = serde_yaml::from_str::<serde_yaml::Value>(text) {
        if m.contains_key("principals") {
            let roster = Roster::from_yaml_str(text)?;
            return Ok(roster.students().map(str::to_owned).collect());
        }
    }
    Ok(text
        .lines()
        .map(str::trim)
        .filter(|l| !l.is_empty() && !l.starts_with('#'))
        .map(str::to_owned)
        .collect())
}

pub fn sample(roster: &Path, k: usize, seed: u64, format: Format) -> Result<(), Failure> {
    let ids = roster_ids(&read(roster)?)?;
    let picked = select_demonstration_sample(&ids, k, seed)?;
    let mut stdout = std::io::stdout().lock();
    match format {
        Format::Json => writeln!(stdout, "{}", json!(picked))?,
        Format::Table => {
            for id in picked {
                writeln!(stdout, "{id}")?;
            }
        }
    }
    Ok(())
}
