//! External-process predictor speaking a newline-delimited JSON protocol.
//!
//! Request per line on the child's stdin: `{"id":<int>,"x":[[row...],...]}`;
//! response per line on its stdout: `{"id":<same>,"y":[<number>,...]}`.
//! Categorical cells are transmitted as level strings. One request is in
//! flight at a time and responses must arrive in request order; any
//! violation (id mismatch, wrong length, non-numeric output, process death)
//! fails the prediction with the child's stderr attached.

use std::io::{BufRead, BufReader, Write};
use std::process::{Child, ChildStdin, ChildStdout, Command, Stdio};
use std::sync::{Arc, Mutex};

use bbfi_core::data::{FeatureKind, RowMatrix, Value};
use bbfi_core::models::Predictor;
use serde::Deserialize;

use crate::error::{Error, Result};

pub struct ExternalPredictor {
    inner: Mutex<Inner>,
    stderr_tail: Arc<Mutex<String>>,
    kinds: Vec<FeatureKind>,
    descriptor: String,
}

struct Inner {
    child: Child,
    stdin: ChildStdin,
    stdout: BufReader<ChildStdout>,
    next_id: u64,
}

#[derive(Deserialize)]
struct Response {
    id: u64,
    y: Vec<serde_json::Value>,
}

/// Spawns the predictor process. `command[0]` is the program, the rest its
/// arguments; `kinds` describe the columns so categorical level indices can
/// be transmitted as strings.
pub fn spawn_external(command: &[String], kinds: Vec<FeatureKind>) -> Result<ExternalPredictor> {
    if command.is_empty() {
        return Err(Error::Usage("external command is empty".into()));
    }
    let mut child = Command::new(&command[0])
        .args(&command[1..])
        .stdin(Stdio::piped())
        .stdout(Stdio::piped())
        .stderr(Stdio::piped())
        .spawn()
        .map_err(|e| Error::Protocol(format!("cannot spawn '{}': {e}", command[0])))?;
    let stdin = child.stdin.take().expect("piped stdin");
    let stdout = BufReader::new(child.stdout.take().expect("piped stdout"));
    let stderr = child.stderr.take().expect("piped stderr");

    // Drain stderr continuously so the child never blocks on a full pipe and
    // failures can report what it said.
    let stderr_tail = Arc::new(Mutex::new(String::new()));
    let sink = Arc::clone(&stderr_tail);
    std::thread::spawn(move || {
        let reader = BufReader::new(stderr);
        for line in reader.lines().map_while(std::io::Result::ok) {
            let mut tail = sink.lock().unwrap();
            tail.push_str(&line);
            tail.push('\n');
            // Keep only the last few KiB.
            let len = tail.len();
            if len > 4096 {
                let cut = len - 4096;
                tail.drain(..cut);
            }
        }
    });

    Ok(ExternalPredictor {
        inner: Mutex::new(Inner { child, stdin, stdout, next_id: 1 }),
        stderr_tail,
        kinds,
        descriptor: format!("external({})", command.join(" ")),
    })
}

impl ExternalPredictor {
    fn fail(&self, msg: String) -> bbfi_core::Error {
        // Give the drain thread a moment to pick up the child's last words.
        std::thread::sleep(std::time::Duration::from_millis(50));
        let tail = self.stderr_tail.lock().map(|t| t.trim().to_string()).unwrap_or_default();
        if tail.is_empty() {
            bbfi_core::Error::Predictor(msg)
        } else {
            bbfi_core::Error::Predictor(format!("{msg}; child stderr: {tail}"))
        }
    }

    fn cell_json(&self, v: Value, j: usize) -> serde_json::Value {
        match (v, &self.kinds[j]) {
            (Value::Num(x), _) => serde_json::json!(x),
            (Value::Cat(c), FeatureKind::Categorical { levels }) => {
                serde_json::json!(levels[c as usize])
            }
            (Value::Cat(c), FeatureKind::Numeric) => serde_json::json!(c),
        }
    }
}

impl Predictor for ExternalPredictor {
    fn predict(&self, rows: &RowMatrix) -> bbfi_core::Result<Vec<f64>> {
        let mut inner =
            self.inner.lock().map_err(|_| self.fail("predictor poisoned".into()))?;
        let id = inner.next_id;
        inner.next_id += 1;

        let x: Vec<Vec<serde_json::Value>> = rows
            .rows()
            .map(|row| {
                row.iter().enumerate().map(|(j, &v)| self.cell_json(v, j)).collect()
            })
            .collect();
        let request = serde_json::json!({ "id": id, "x": x });
        let mut line = request.to_string();
        line.push('\n');
        inner
            .stdin
            .write_all(line.as_bytes())
            .and_then(|_| inner.stdin.flush())
            .map_err(|e| self.fail(format!("cannot write request {id}: {e}")))?;

        let mut reply = String::new();
        let read = inner
            .stdout
            .read_line(&mut reply)
            .map_err(|e| self.fail(format!("cannot read response {id}: {e}")))?;
        if read == 0 {
            let status = inner
                .child
                .try_wait()
                .ok()
                .flatten()
                .map(|s| format!(" (exit status {s})"))
                .unwrap_or_default();
            return Err(self.fail(format!("process closed stdout{status}")));
        }
        let response: Response = serde_json::from_str(reply.trim_end()).map_err(|e| {
            self.fail(format!("malformed response line '{}': {e}", reply.trim_end()))
        })?;
        if response.id != id {
            return Err(self.fail(format!(
                "response id {} does not match request id {id}",
                response.id
            )));
        }
        if response.y.len() != rows.n_rows() {
            return Err(self.fail(format!(
                "response has {} predictions for {} rows",
                response.y.len(),
                rows.n_rows()
            )));
        }
        response
            .y
            .iter()
            .map(|v| {
                v.as_f64().ok_or_else(|| {
                    self.fail(format!("non-numeric prediction '{v}' in response {id}"))
                })
            })
            .collect()
    }

    fn kind(&self) -> &'static str {
        "external"
    }

    fn describe(&self) -> String {
        self.descriptor.clone()
    }
}

impl Drop for ExternalPredictor {
    fn drop(&mut self) {
        if let Ok(mut inner) = self.inner.lock() {
            let _ = inner.child.kill();
            let _ = inner.child.wait();
        }
    }
}
