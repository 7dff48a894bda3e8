//! Client for the external model service.
//!
//! The wire format is UTF-8 JSON Lines: one request object per line, one
//! response object per line, matched by `id`. Responses may arrive out of
//! order; the client parks responses for other ids until they are asked for.

use std::collections::HashMap;
use std::io::{BufRead, BufReader, Write};
use std::net::TcpStream;
use std::process::{Child, Command, Stdio};
use std::sync::atomic::{AtomicU64, Ordering};
use std::sync::Mutex;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::candidates::ScoringMode;

/// Environment variable overriding the configured sidecar endpoint.
pub const ENDPOINT_ENV: &str = "EXPLICITATION_SIDECAR";

#[derive(Debug, Error)]
pub enum SidecarError {
    #[error("invalid sidecar endpoint `{0}` (expected tcp://host:port or exec:<command>)")]
    Endpoint(String),
    #[error("request {id}: transport failure: {source}")]
    Transport {
        id: u64,
        #[source]
        source: std::io::Error,
    },
    #[error("could not start sidecar: {0}")]
    Spawn(std::io::Error),
    #[error("request {id}: sidecar closed the connection")]
    Closed { id: u64 },
    #[error("request {id}: malformed response: {message}")]
    Protocol { id: u64, message: String },
    #[error("request {id}: sidecar error: {message}")]
    Remote { id: u64, message: String },
}

#[derive(Debug, Serialize)]
#[serde(tag = "op", rename_all = "lowercase")]
pub enum RequestBody<'a> {
    Score {
        mode: ScoringMode,
        parts: [&'a str; 2],
        connectives: &'a [String],
    },
    Classify {
        connective: &'a str,
        arg1: &'a str,
        arg2: &'a str,
        level: u8,
    },
}

#[derive(Debug, Serialize)]
struct Request<'a> {
    id: u64,
    #[serde(flatten)]
    body: RequestBody<'a>,
}

/// A decoded response line. `null` entries stand for values JSON cannot
/// carry (NaN, infinities).
#[derive(Clone, Debug, Default, PartialEq, Deserialize)]
pub struct Response {
    pub id: u64,
    #[serde(default)]
    pub log_scores: Option<Vec<Option<f64>>>,
    #[serde(default)]
    pub probs: Option<Vec<Option<f64>>>,
    #[serde(default)]
    pub error: Option<String>,
}

struct Connection {
    reader: Box<dyn BufRead + Send>,
    writer: Box<dyn Write + Send>,
    parked: HashMap<u64, Response>,
    child: Option<Child>,
}

impl Drop for Connection {
    fn drop(&mut self) {
        if let Some(child) = self.child.as_mut() {
            let _ = child.kill();
            let _ = child.wait();
        }
    }
}

pub struct SidecarClient {
    endpoint: String,
    conn: Mutex<Connection>,
    next_id: AtomicU64,
}

impl std::fmt::Debug for SidecarClient {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.debug_struct("SidecarClient").field("endpoint", &self.endpoint).finish()
    }
}

impl SidecarClient {
    /// Connects to `tcp://host:port` or spawns `exec:<program> [args..]`
    /// and talks to it over stdio.
    pub fn connect(endpoint: &str) -> Result<Self, SidecarError> {
        if let Some(addr) = endpoint.strip_prefix("tcp://") {
            let stream = TcpStream::connect(addr).map_err(|source| SidecarError::Transport { id: 0, source })?;
            let reader = stream
                .try_clone()
                .map_err(|source| SidecarError::Transport { id: 0, source })?;
            return Ok(SidecarClient::from_streams(endpoint, BufReader::new(reader), stream));
        }
        if let Some(cmd) = endpoint.strip_prefix("exec:") {
            let mut words = cmd.split_whitespace();
            let program = words.next().ok_or_else(|| SidecarError::Endpoint(endpoint.to_string()))?;
            let mut child = Command::new(program)
                .args(words)
                .stdin(Stdio::piped())
                .stdout(Stdio::piped())
                .stderr(Stdio::inherit())
                .spawn()
                .map_err(SidecarError::Spawn)?;
            let stdin = child.stdin.take().expect("piped stdin");
            let stdout = child.stdout.take().expect("piped stdout");
            let mut client = SidecarClient::from_streams(endpoint, BufReader::new(stdout), stdin);
            client.conn.get_mut().expect("fresh mutex").child = Some(child);
            return Ok(client);
        }
        Err(SidecarError::Endpoint(endpoint.to_string()))
    }

    pub fn from_streams<R, W>(endpoint: &str, reader: R, writer: W) -> Self
    where
        R: BufRead + Send + 'static,
        W: Write + Send + 'static,
    {
        SidecarClient {
            endpoint: endpoint.to_string(),
            conn: Mutex::new(Connection {
                reader: Box::new(reader),
                writer: Box::new(writer),
                parked: HashMap::new(),
                child: None,
            }),
            next_id: AtomicU64::new(1),
        }
    }

    pub fn endpoint(&self) -> &str {
        &self.endpoint
    }

    /// Sends one request and waits for the response carrying its id.
    /// Remote errors are turned into [`SidecarError::Remote`].
    pub fn call(&self, body: RequestBody<'_>) -> Result<Response, SidecarError> {
        let id = self.next_id.fetch_add(1, Ordering::Relaxed);
        let mut line = serde_json::to_string(&Request { id, body }).expect("requests serialize");
        line.push('\n');

        let mut conn = self.conn.lock().unwrap_or_else(|e| e.into_inner());
        let transport = |source| SidecarError::Transport { id, source };
        conn.writer.write_all(line.as_bytes()).map_err(transport)?;
        conn.writer.flush().map_err(transport)?;

        let response = loop {
            if let Some(resp) = conn.parked.remove(&id) {
                break resp;
            }
            let mut buf = String::new();
            let n = conn.reader.read_line(&mut buf).map_err(transport)?;
            if n == 0 {
                return Err(SidecarError::Closed { id });
            }
            if buf.trim().is_empty() {
                continue;
            }
            let resp: Response = serde_json::from_str(&buf).map_err(|e| SidecarError::Protocol {
                id,
                message: e.to_string(),
            })?;
            if resp.id == id {
                break resp;
            }
            conn.parked.insert(resp.id, resp);
        };
        drop(conn);

        if let Some(message) = response.error {
            return Err(SidecarError::Remote { id, message });
        }
        Ok(response)
    }

    /// Log-scores for each connective, aligned with `connectives`.
    pub fn score(
        &self,
        mode: ScoringMode,
        parts: [&str; 2],
        connectives: &[String],
    ) -> Result<(u64, Vec<Option<f64>>), SidecarError> {
        let resp = self.call(RequestBody::Score {
            mode,
            parts,
            connectives,
        })?;
        let id = resp.id;
        let scores = resp.log_scores.ok_or_else(|| SidecarError::Protocol {
            id,
            message: "response has no `log_scores`".into(),
        })?;
        Ok((id, scores))
    }

    /// Raw sense probabilities from the sidecar classifier.
    pub fn classify(
        &self,
        connective: &str,
        arg1: &str,
        arg2: &str,
        level: u8,
    ) -> Result<(u64, Vec<Option<f64>>), SidecarError> {
        let resp = self.call(RequestBody::Classify {
            connective,
            arg1,
            arg2,
            level,
        })?;
        let id = resp.id;
        let probs = resp.probs.ok_or_else(|| SidecarError::Protocol {
            id,
            message: "response has no `probs`".into(),
        })?;
        Ok((id, probs))
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn request_wire_shape() {
        let conns = vec!["and".to_string(), "but".to_string()];
        let req = Request {
            id: 7,
            body: RequestBody::Score {
                mode: ScoringMode::Masked,
                parts: ["It rained.", "we stayed in."],
                connectives: &conns,
            },
        };
        assert_eq!(
            serde_json::to_string(&req).unwrap(),
            r#"{"id":7,"op":"score","mode":"masked","parts":["It rained.","we stayed in."],"connectives":["and","but"]}"#
        );
        let req = Request {
            id: 8,
            body: RequestBody::Classify {
                connective: "but",
                arg1: "a",
                arg2: "b",
                level: 1,
            },
        };
        assert_eq!(
            serde_json::to_string(&req).unwrap(),
            r#"{"id":8,"op":"classify","connective":"but","arg1":"a","arg2":"b","level":1}"#
        );
    }

    #[test]
    fn bad_endpoint_rejected() {
        assert!(matches!(
            SidecarClient::connect("http://x"),
            Err(SidecarError::Endpoint(_))
        ));
    }

    #[test]
    fn out_of_order_responses_are_parked() {
        // Pre-recorded responses: id 2 arrives before id 1.
        let script = concat!(
            r#"{"id":2,"log_scores":[-2.0]}"#,
            "\n",
            r#"{"id":1,"log_scores":[-1.0]}"#,
            "\n"
        );
        let client = SidecarClient::from_streams("test", std::io::Cursor::new(script.as_bytes().to_vec()), std::io::sink());
        let conns = vec!["and".to_string()];
        let (id1, s1) = client.score(ScoringMode::Causal, ["a", "b"], &conns).unwrap();
        let (id2, s2) = client.score(ScoringMode::Causal, ["a", "b"], &conns).unwrap();
        assert_eq!((id1, s1), (1, vec![Some(-1.0)]));
        assert_eq!((id2, s2), (2, vec![Some(-2.0)]));
    }

    #[test]
    fn remote_error_and_eof() {
        let script = concat!(r#"{"id":1,"error":"unknown op"}"#, "\n");
        let client = SidecarClient::from_streams("test", std::io::Cursor::new(script.as_bytes().to_vec()), std::io::sink());
        let conns = vec!["and".to_string()];
        match client.score(ScoringMode::Causal, ["a", "b"], &conns) {
            Err(SidecarError::Remote { id: 1, message }) => assert_eq!(message, "unknown op"),
            other => panic!("{other:?}"),
        }
        assert!(matches!(
            client.score(ScoringMode::Causal, ["a", "b"], &conns),
            Err(SidecarError::Closed { id: 2 })
        ));
    }
}
