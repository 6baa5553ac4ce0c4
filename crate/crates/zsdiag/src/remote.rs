//! HTTP JSON text-embedding backend.
//!
//! Request: `POST {endpoint}` with `{"model": ..., "input": [texts]}` and an optional
//! bearer token read from an environment variable. Response:
//! `{"data": [{"embedding": [...], "index": i}, ...]}`.

use std::time::Duration;

use serde::{Deserialize, Serialize};
use zsdiag_core::embed::{EmbedError, TemDescriptor, TemKind, TextEmbedder};

pub const DEFAULT_TOKEN_ENV: &str = "ZSDIAG_TEM_TOKEN";

#[derive(Debug, Clone, PartialEq)]
pub struct RemoteConfig {
    pub endpoint: String,
    pub model: String,
    pub dim: usize,
    pub batch_size: usize,
    pub max_inflight: usize,
    pub max_retries: u32,
    pub initial_backoff: Duration,
    pub timeout: Duration,
    pub token_env: String,
}

impl Default for RemoteConfig {
    fn default() -> Self {
        Self {
            endpoint: String::new(),
            model: String::new(),
            dim: 0,
            batch_size: 64,
            max_inflight: 8,
            max_retries: 4,
            initial_backoff: Duration::from_millis(250),
            timeout: Duration::from_secs(60),
            token_env: DEFAULT_TOKEN_ENV.into(),
        }
    }
}

#[derive(Serialize)]
struct Request<'a> {
    model: &'a str,
    input: &'a [&'a str],
}

#[derive(Deserialize)]
struct Response {
    data: Vec<Item>,
}

#[derive(Deserialize)]
struct Item {
    embedding: Vec<f64>,
    index: Option<usize>,
}

pub struct RemoteEmbedder {
    config: RemoteConfig,
    descriptor: TemDescriptor,
    agent: ureq::Agent,
    token: Option<String>,
}

enum Attempt {
    Retry(String),
    Fatal(String),
}

impl RemoteEmbedder {
    pub fn new(config: RemoteConfig) -> Result<Self, EmbedError> {
        if config.endpoint.is_empty() || config.model.is_empty() {
            return Err(EmbedError::InvalidConfig("remote embedder needs endpoint and model".into()));
        }
        if config.dim == 0 || config.batch_size == 0 || config.max_inflight == 0 {
            return Err(EmbedError::InvalidConfig(
                "remote dim, batch size and max_inflight must be positive".into(),
            ));
        }
        let agent = ureq::Agent::config_builder()
            .timeout_global(Some(config.timeout))
            .http_status_as_error(false)
            .build()
            .into();
        let token = std::env::var(&config.token_env).ok().filter(|t| !t.is_empty());
        Ok(Self {
            descriptor: TemDescriptor {
                tem_id: format!("remote:{}:d{}", config.model, config.dim),
                dim: config.dim,
                kind: TemKind::Remote,
            },
            config,
            agent,
            token,
        })
    }

    pub fn config(&self) -> &RemoteConfig {
        &self.config
    }

    fn attempt(&self, texts: &[&str]) -> Result<Vec<Vec<f64>>, Attempt> {
        let mut req = self.agent.post(&self.config.endpoint);
        if let Some(t) = &self.token {
            req = req.header("Authorization", format!("Bearer {t}"));
        }
        let mut resp = req
            .send_json(Request {
                model: &self.config.model,
                input: texts,
            })
            .map_err(|e| Attempt::Retry(e.to_string()))?;
        let status = resp.status().as_u16();
        if status == 429 || status >= 500 {
            return Err(Attempt::Retry(format!("HTTP {status}")));
        }
        if status >= 400 {
            return Err(Attempt::Fatal(format!("HTTP {status}")));
        }
        let parsed: Response = resp
            .body_mut()
            .read_json()
            .map_err(|e| Attempt::Fatal(format!("bad response body: {e}")))?;
        if parsed.data.len() != texts.len() {
            return Err(Attempt::Fatal(format!(
                "{} embeddings for {} texts",
                parsed.data.len(),
                texts.len()
            )));
        }
        let mut out = vec![Vec::new(); texts.len()];
        for (pos, item) in parsed.data.into_iter().enumerate() {
            let slot = item.index.unwrap_or(pos);
            if slot >= out.len() || !out[slot].is_empty() {
                return Err(Attempt::Fatal(format!("bad embedding index {slot}")));
            }
            if item.embedding.len() != self.config.dim {
                return Err(Attempt::Fatal(format!(
                    "embedding of length {} (expected {})",
                    item.embedding.len(),
                    self.config.dim
                )));
            }
            if !item.embedding.iter().all(|v| v.is_finite()) {
                return Err(Attempt::Fatal("non-finite embedding".into()));
            }
            out[slot] = item.embedding;
        }
        Ok(out)
    }

    /// One request with bounded retries and exponential backoff.
    pub fn embed_batch(&self, texts: &[&str]) -> Result<Vec<Vec<f64>>, EmbedError> {
        let mut backoff = self.config.initial_backoff;
        let mut last = String::new();
        for attempt in 0..=self.config.max_retries {
            if attempt > 0 {
                std::thread::sleep(backoff);
                backoff *= 2;
            }
            match self.attempt(texts) {
                Ok(v) => return Ok(v),
                Err(Attempt::Fatal(m)) => return Err(EmbedError::BackendUnavailable(m)),
                Err(Attempt::Retry(m)) => {
                    log::warn!("embedding request failed (attempt {}): {m}", attempt + 1);
                    last = m;
                }
            }
        }
        Err(EmbedError::BackendUnavailable(format!(
            "gave up after {} attempts: {last}",
            self.config.max_retries + 1
        )))
    }

    /// Embeds `texts` in batches with at most `max_inflight` concurrent requests;
    /// results keep input order.
    pub fn embed_many(&self, texts: &[&str]) -> Result<Vec<Vec<f64>>, EmbedError> {
        let batches: Vec<&[&str]> = texts.chunks(self.config.batch_size).collect();
        let mut out = Vec::with_capacity(texts.len());
        for wave in batches.chunks(self.config.max_inflight) {
            let results: Vec<Result<Vec<Vec<f64>>, EmbedError>> = std::thread::scope(|s| {
                let handles: Vec<_> = wave.iter().map(|b| s.spawn(|| self.embed_batch(b))).collect();
                handles.into_iter().map(|h| h.join().expect("embedding worker panicked")).collect()
            });
            for r in results {
                out.extend(r?);
            }
        }
        Ok(out)
    }
}

impl TextEmbedder for RemoteEmbedder {
    fn descriptor(&self) -> &TemDescriptor {
        &self.descriptor
    }

    fn embed_raw(&self, text: &str) -> Result<Vec<f64>, EmbedError> {
        Ok(self.embed_batch(&[text])?.remove(0))
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::io::{BufRead, BufReader, Read, Write};
    use std::net::TcpListener;
    use std::sync::atomic::{AtomicUsize, Ordering};
    use std::sync::Arc;

    /// Serves `statuses` in turn (200 answers echo one 2-d embedding per input).
    fn server(statuses: Vec<u16>) -> (String, Arc<AtomicUsize>) {
        let listener = TcpListener::bind("127.0.0.1:0").unwrap();
        let url = format!("http://{}/embed", listener.local_addr().unwrap());
        let count = Arc::new(AtomicUsize::new(0));
        let seen = count.clone();
        std::thread::spawn(move || {
            for (i, stream) in listener.incoming().enumerate() {
                let Ok(mut stream) = stream else { return };
                let mut reader = BufReader::new(stream.try_clone().unwrap());
                let mut len = 0usize;
                loop {
                    let mut line = String::new();
                    reader.read_line(&mut line).unwrap();
                    if line == "\r\n" || line.is_empty() {
                        break;
                    }
                    if let Some(v) = line.to_ascii_lowercase().strip_prefix("content-length:") {
                        len = v.trim().parse().unwrap();
                    }
                }
                let mut body = vec![0; len];
                reader.read_exact(&mut body).unwrap();
                seen.fetch_add(1, Ordering::SeqCst);
                let status = statuses.get(i).copied().unwrap_or(200);
                let req: serde_json::Value = serde_json::from_slice(&body).unwrap();
                let n = req["input"].as_array().unwrap().len();
                let data: Vec<_> = (0..n)
                    .rev()
                    .map(|j| serde_json::json!({"embedding": [j as f64, 1.0], "index": j}))
                    .collect();
                let payload = serde_json::json!({ "data": data }).to_string();
                let payload = if status == 200 { payload } else { String::new() };
                write!(
                    stream,
                    "HTTP/1.1 {status} X\r\ncontent-type: application/json\r\ncontent-length: {}\r\nconnection: close\r\n\r\n{payload}",
                    payload.len()
                )
                .unwrap();
            }
        });
        (url, count)
    }

    fn config(endpoint: String) -> RemoteConfig {
        RemoteConfig {
            endpoint,
            model: "toy".into(),
            dim: 2,
            batch_size: 2,
            initial_backoff: Duration::from_millis(1),
            ..RemoteConfig::default()
        }
    }

    #[test]
    fn retries_server_errors_then_succeeds() {
        let (url, count) = server(vec![503, 500]);
        let e = RemoteEmbedder::new(config(url)).unwrap();
        assert_eq!(e.embed_batch(&["a", "b"]).unwrap(), vec![vec![0.0, 1.0], vec![1.0, 1.0]]);
        assert_eq!(count.load(Ordering::SeqCst), 3);
        assert_eq!(e.descriptor().tem_id, "remote:toy:d2");
    }

    #[test]
    fn client_errors_are_not_retried() {
        let (url, count) = server(vec![401]);
        let e = RemoteEmbedder::new(config(url)).unwrap();
        assert!(matches!(e.embed_raw("a"), Err(EmbedError::BackendUnavailable(_))));
        assert_eq!(count.load(Ordering::SeqCst), 1);
    }

    #[test]
    fn gives_up_after_bounded_retries() {
        let (url, count) = server(vec![503; 10]);
        let e = RemoteEmbedder::new(RemoteConfig {
            max_retries: 2,
            ..config(url)
        })
        .unwrap();
        assert!(matches!(e.embed_raw("a"), Err(EmbedError::BackendUnavailable(_))));
        assert_eq!(count.load(Ordering::SeqCst), 3);
    }

    #[test]
    fn many_keeps_order_across_batches() {
        let (url, _) = server(vec![]);
        let e = RemoteEmbedder::new(config(url)).unwrap();
        let out = e.embed_many(&["a", "b", "c", "d", "e"]).unwrap();
        let firsts: Vec<f64> = out.iter().map(|v| v[0]).collect();
        assert_eq!(firsts, vec![0.0, 1.0, 0.0, 1.0, 0.0]);
    }

    #[test]
    fn unreachable_backend_is_unavailable() {
        let listener = TcpListener::bind("127.0.0.1:0").unwrap();
        let url = format!("http://{}/embed", listener.local_addr().unwrap());
        drop(listener);
        let e = RemoteEmbedder::new(RemoteConfig {
            max_retries: 1,
            ..config(url)
        })
        .unwrap();
        assert!(matches!(e.embed_raw("a"), Err(EmbedError::BackendUnavailable(_))));
    }

    #[test]
    fn rejects_incomplete_config() {
        assert!(RemoteEmbedder::new(RemoteConfig::default()).is_err());
    }
}
