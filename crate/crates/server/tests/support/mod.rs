#![allow(dead_code)]

use std::path::{Path, PathBuf};
use std::sync::atomic::{AtomicI64, Ordering};
use std::sync::Arc;
use std::thread::JoinHandle;

use labforge_core::timefmt;
use labforge_server::{AppState, Roster, ServiceConfig};
use serde_json::Value;
use tokio::sync::oneshot;

pub const STUDENT_A: &str = "student-a@example.org";
pub const STUDENT_B: &str = "student-b@example.org";
pub const TOKEN_A: &str = "tok-student-a";
pub const TOKEN_B: &str = "tok-student-b";
pub const TOKEN_INSTRUCTOR: &str = "tok-instructor";
pub const TOKEN_GENERATOR: &str = "tok-generator";

pub fn hw01_dir() -> PathBuf {
    PathBuf::from(env!("CARGO_MANIFEST_DIR")).join("../../exercises/hw01")
}

pub fn roster() -> Roster {
    Roster::from_yaml_str(&format!(
        "principals:
  - {{id: {STUDENT_A}, role: student, token: {TOKEN_A}}}
  - {{id: {STUDENT_B}, role: student, token: {TOKEN_B}}}
  - {{id: teacher, role: instructor, token: {TOKEN_INSTRUCTOR}}}
  - {{id: generator, role: generator, token: {TOKEN_GENERATOR}}}
"
    ))
    .unwrap()
}

pub fn config(data_dir: &Path, extra: &str) -> ServiceConfig {
    let hw = hw01_dir();
    let text = format!(
        "data_dir: {}\nexercises:\n  - definition: {}\n    detection: {}\n{extra}",
        data_dir.display(),
        hw.join("exercise.yaml").display(),
        hw.join("detect.yaml").display()
    );
    ServiceConfig::from_yaml_str(&text, Path::new("/")).unwrap()
}

/// A running server on an ephemeral port with a settable clock.
pub struct TestServer {
    pub base: String,
    pub clock: Arc<AtomicI64>,
    pub state: AppState,
    shutdown: Option<oneshot::Sender<()>>,
    thread: Option<JoinHandle<()>>,
}

impl TestServer {
    pub fn start(config: &ServiceConfig) -> Self {
        let clock = Arc::new(AtomicI64::new(
            timefmt::parse("2021-05-05T09:00:00Z").unwrap().timestamp(),
        ));
        let tick = clock.clone();
        let state = AppState::open(config, roster())
            .unwrap()
            .with_clock(Arc::new(move || {
                chrono::DateTime::from_timestamp(tick.load(Ordering::SeqCst), 0).unwrap()
            }));
        let (tx, rx) = oneshot::channel::<()>();
        let (addr_tx, addr_rx) = std::sync::mpsc::channel();
        let app = state.clone();
        let thread = std::thread::spawn(move || {
            let rt = tokio::runtime::Builder::new_multi_thread()
                .enable_all()
                .build()
                .unwrap();
            rt.block_on(async move {
                let listener = tokio::net::TcpListener::bind("127.0.0.1:0").await.unwrap();
                addr_tx.send(listener.local_addr().unwrap()).unwrap();
                labforge_server::serve(app, listener, async {
                    let _ = rx.await;
                })
                .await
                .unwrap();
            });
        });
        let addr = addr_rx.recv().unwrap();
        Self {
            base: format!("http://{addr}"),
            clock,
            state,
            shutdown: Some(tx),
            thread: Some(thread),
        }
    }

    pub fn advance(&self, seconds: i64) {
        self.clock.fetch_add(seconds, Ordering::SeqCst);
    }

    pub fn stop(mut self) {
        self.halt();
    }

    fn halt(&mut self) {
        if let Some(tx) = self.shutdown.take() {
            let _ = tx.send(());
        }
        if let Some(t) = self.thread.take() {
            t.join().unwrap();
        }
    }

    pub fn url(&self, path: &str) -> String {
        format!("{}{path}", self.base)
    }

    pub fn get(&self, path: &str, token: Option<&str>) -> (u16, String) {
        let mut req = agent().get(&self.url(path));
        if let Some(t) = token {
            req = req.header("Authorization", &format!("Bearer {t}"));
        }
        finish(req.call())
    }

    pub fn post(&self, path: &str, token: Option<&str>, body: &str) -> (u16, String) {
        self.post_with(path, token, body, &[])
    }

    pub fn post_with(
        &self,
        path: &str,
        token: Option<&str>,
        body: &str,
        headers: &[(&str, &str)],
    ) -> (u16, String) {
        let mut req = agent()
            .post(&self.url(path))
            .header("Content-Type", "application/json");
        if let Some(t) = token {
            req = req.header("Authorization", &format!("Bearer {t}"));
        }
        for (k, v) in headers {
            req = req.header(*k, *v);
        }
        finish(req.send(body))
    }

    pub fn submit(&self, token: &str, task: &str, answer: &str) -> Value {
        let body = serde_json::json!({ "answer": answer }).to_string();
        let (status, text) = self.post(
            &format!("/api/exercises/hw01/tasks/{task}/submissions"),
            Some(token),
            &body,
        );
        assert_eq!(status, 200, "{text}");
        serde_json::from_str(&text).unwrap()
    }

    pub fn register(
        &self,
        student: &str,
        answers: &[(&str, &str)],
        generated_at: &str,
    ) -> (u16, String) {
        let answers: serde_json::Map<String, Value> = answers
            .iter()
            .map(|(k, v)| (k.to_string(), Value::String(v.to_string())))
            .collect();
        let body = serde_json::json!({ "student": student, "answers": answers, "generated_at": generated_at });
        self.post(
            "/api/exercises/hw01/registrations",
            Some(TOKEN_GENERATOR),
            &body.to_string(),
        )
    }

    pub fn me(&self, token: &str) -> Value {
        let (status, text) = self.get("/api/exercises/hw01/me", Some(token));
        assert_eq!(status, 200, "{text}");
        serde_json::from_str(&text).unwrap()
    }

    pub fn visible(&self, token: &str) -> Vec<String> {
        self.me(token)["tasks"]
            .as_array()
            .unwrap()
            .iter()
            .map(|t| t["id"].as_str().unwrap().to_owned())
            .collect()
    }
}

impl Drop for TestServer {
    fn drop(&mut self) {
        self.halt();
    }
}

fn agent() -> ureq::Agent {
    ureq::Agent::config_builder()
        .http_status_as_error(false)
        .build()
        .new_agent()
}

fn finish(result: Result<ureq::http::Response<ureq::Body>, ureq::Error>) -> (u16, String) {
    let mut resp = result.unwrap();
    let status = resp.status().as_u16();
    (status, resp.body_mut().read_to_string().unwrap())
}

pub const A_ANSWERS: [(&str, &str); 5] = [
    ("A1", "41247"),
    ("A2", "1853"),
    ("A3", "Hidden ocean kettle across paints."),
    ("A4", "nagios"),
    ("T2", "1853"),
];

pub const B_ANSWERS: [(&str, &str); 5] = [
    ("A1", "16278"),
    ("A2", "1420"),
    ("A3", "Apple river lamp under stone."),
    ("A4", "oracle"),
    ("T2", "1420"),
];
