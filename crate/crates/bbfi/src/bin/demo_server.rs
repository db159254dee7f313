//! Demo prediction server for the external-predictor line protocol.
//!
//! Reads one JSON request per stdin line (`{"id":N,"x":[[cell,...],...]}`),
//! answers one JSON response per stdout line (`{"id":N,"y":[num,...]}`).
//! The first argument picks the behaviour:
//!
//! * `first` (default) — predict the first cell of each row (strings: 0.0)
//! * `sum` — predict the sum of the numeric cells
//! * `wrong-id` — answer with `id - 1` (protocol-violation testing)
//! * `non-numeric` — answer with string predictions
//! * `short` — drop the last prediction of each batch
//! * `noisy-stderr` — like `first`, but logs each request to stderr

use std::io::{BufRead, Write};

use serde::Deserialize;

#[derive(Deserialize)]
struct Request {
    id: u64,
    x: Vec<Vec<serde_json::Value>>,
}

fn main() {
    let mode = std::env::args().nth(1).unwrap_or_else(|| "first".to_string());
    let stdin = std::io::stdin();
    let stdout = std::io::stdout();
    let mut out = stdout.lock();

    for line in stdin.lock().lines() {
        let line = match line {
            Ok(l) if !l.trim().is_empty() => l,
            Ok(_) => continue,
            Err(_) => break,
        };
        let req: Request = match serde_json::from_str(&line) {
            Ok(r) => r,
            Err(e) => {
                eprintln!("bad request: {e}");
                continue;
            }
        };
        if mode == "noisy-stderr" {
            eprintln!("request {} with {} rows", req.id, req.x.len());
        }
        let first = |row: &Vec<serde_json::Value>| row.first().and_then(|v| v.as_f64()).unwrap_or(0.0);
        let response = match mode.as_str() {
            "sum" => {
                let y: Vec<f64> = req
                    .x
                    .iter()
                    .map(|row| row.iter().filter_map(|v| v.as_f64()).sum())
                    .collect();
                serde_json::json!({ "id": req.id, "y": y })
            }
            "wrong-id" => {
                let y: Vec<f64> = req.x.iter().map(first).collect();
                serde_json::json!({ "id": req.id.wrapping_sub(1), "y": y })
            }
            "non-numeric" => {
                let y: Vec<String> = req.x.iter().map(|_| "oops".to_string()).collect();
                serde_json::json!({ "id": req.id, "y": y })
            }
            "short" => {
                let mut y: Vec<f64> = req.x.iter().map(first).collect();
                y.pop();
                serde_json::json!({ "id": req.id, "y": y })
            }
            _ => {
                let y: Vec<f64> = req.x.iter().map(first).collect();
                serde_json::json!({ "id": req.id, "y": y })
            }
        };
        if writeln!(out, "{response}").and_then(|_| out.flush()).is_err() {
            break;
        }
    }
}
