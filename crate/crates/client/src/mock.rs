//! Local HTTP server that executes jobs with [`SimulatedSampler`].
//!
//! Jobs are accepted as `pending` and computed on a blocking worker. Seeds
//! come from the `x-qalab-seed` header when present, otherwise from
//! `base_seed + submission index`.

use std::collections::HashMap;
use std::net::{SocketAddr, TcpListener};
use std::sync::{Arc, Mutex};
use std::thread::{self, JoinHandle};
use std::time::Duration;

use axum::extract::{Path, State};
use axum::http::{header, HeaderMap, StatusCode};
use axum::routing::{get, post};
use axum::{Json, Router};
use qalab_core::annealer::{AnnealJob, JobResult, Sampler, SamplerError, SimulatedSampler};
use tokio::sync::oneshot;

use crate::SEED_HEADER;

#[derive(Debug, Clone, Default)]
pub struct MockOptions {
    /// Required bearer token; `None` accepts any request.
    pub token: Option<String>,
    pub base_seed: u64,
    /// Minimum time a job stays pending.
    pub latency: Duration,
}

struct Shared {
    sampler: SimulatedSampler,
    opts: MockOptions,
    jobs: Mutex<HashMap<String, JobResult>>,
    submitted: Mutex<u64>,
}

type Reply = (StatusCode, String);

fn reply(status: StatusCode, body: impl Into<String>) -> Reply {
    (status, body.into())
}

fn authorized(shared: &Shared, headers: &HeaderMap) -> bool {
    match &shared.opts.token {
        None => true,
        Some(t) => headers
            .get(header::AUTHORIZATION)
            .and_then(|v| v.to_str().ok())
            .is_some_and(|v| v == format!("Bearer {t}")),
    }
}

fn to_json(result: &JobResult) -> String {
    serde_json::to_string(result).expect("job results always serialize")
}

async fn submit(State(shared): State<Arc<Shared>>, headers: HeaderMap, body: String) -> Reply {
    if !authorized(&shared, &headers) {
        return reply(StatusCode::UNAUTHORIZED, "missing or wrong bearer token");
    }
    let job = match AnnealJob::from_json(&body) {
        Ok(job) => job,
        Err(e) => return reply(StatusCode::BAD_REQUEST, e.to_string()),
    };
    let index = {
        let mut n = shared.submitted.lock().unwrap_or_else(|e| e.into_inner());
        *n += 1;
        *n - 1
    };
    let seed = match headers.get(SEED_HEADER).map(|v| v.to_str().map(str::parse::<u64>)) {
        None => shared.opts.base_seed.wrapping_add(index),
        Some(Ok(Ok(s))) => s,
        Some(_) => return reply(StatusCode::BAD_REQUEST, format!("{SEED_HEADER} must be an unsigned integer")),
    };
    let id = format!("job-{index:06}");
    let pending = JobResult::pending(id.clone());
    shared
        .jobs
        .lock()
        .unwrap_or_else(|e| e.into_inner())
        .insert(id.clone(), pending.clone());

    let worker = Arc::clone(&shared);
    tokio::spawn(async move {
        let latency = worker.opts.latency;
        let sampler = worker.sampler.clone();
        let run = tokio::task::spawn_blocking(move || sampler.sample(&job, seed));
        let (outcome, _) = tokio::join!(run, tokio::time::sleep(latency));
        let result = match outcome {
            Ok(Ok(mut r)) => {
                r.id = id.clone();
                r
            }
            Ok(Err(e)) => JobResult::failed(id.clone(), e.to_string()),
            Err(e) => JobResult::failed(id.clone(), format!("worker crashed: {e}")),
        };
        worker.jobs.lock().unwrap_or_else(|e| e.into_inner()).insert(id, result);
    });
    reply(StatusCode::ACCEPTED, to_json(&pending))
}

async fn status(State(shared): State<Arc<Shared>>, headers: HeaderMap, Path(id): Path<String>) -> Reply {
    if !authorized(&shared, &headers) {
        return reply(StatusCode::UNAUTHORIZED, "missing or wrong bearer token");
    }
    match shared.jobs.lock().unwrap_or_else(|e| e.into_inner()).get(&id) {
        Some(r) => reply(StatusCode::OK, to_json(r)),
        None => reply(StatusCode::NOT_FOUND, format!("no job {id}")),
    }
}

async fn health() -> Json<&'static str> {
    Json("ok")
}

/// A running mock server; stopped on drop.
pub struct MockServer {
    addr: SocketAddr,
    stop: Option<oneshot::Sender<()>>,
    thread: Option<JoinHandle<()>>,
}

impl MockServer {
    /// Binds an ephemeral localhost port and serves on a background thread.
    pub fn start(sampler: SimulatedSampler, opts: MockOptions) -> Result<Self, SamplerError> {
        Self::bind("127.0.0.1:0", sampler, opts)
    }

    pub fn bind(addr: &str, sampler: SimulatedSampler, opts: MockOptions) -> Result<Self, SamplerError> {
        let backend = |e: std::io::Error| SamplerError::Backend(e.to_string());
        let listener = TcpListener::bind(addr).map_err(backend)?;
        listener.set_nonblocking(true).map_err(backend)?;
        let addr = listener.local_addr().map_err(backend)?;
        let runtime = tokio::runtime::Builder::new_multi_thread()
            .worker_threads(2)
            .enable_all()
            .build()
            .map_err(backend)?;
        let shared = Arc::new(Shared {
            sampler,
            opts,
            jobs: Mutex::new(HashMap::new()),
            submitted: Mutex::new(0),
        });
        let app = Router::new()
            .route("/health", get(health))
            .route("/jobs", post(submit))
            .route("/jobs/{id}", get(status))
            .with_state(shared);
        let (stop, stopped) = oneshot::channel::<()>();
        let listener = runtime
            .block_on(async { tokio::net::TcpListener::from_std(listener) })
            .map_err(backend)?;
        let thread = thread::Builder::new()
            .name(format!("qalab-mock-{}", addr.port()))
            .spawn(move || {
                runtime.block_on(async move {
                    let _ = axum::serve(listener, app)
                        .with_graceful_shutdown(async {
                            let _ = stopped.await;
                        })
                        .await;
                });
            })
            .map_err(backend)?;
        Ok(Self {
            addr,
            stop: Some(stop),
            thread: Some(thread),
        })
    }

    pub fn addr(&self) -> SocketAddr {
        self.addr
    }

    pub fn url(&self) -> String {
        format!("http://{}", self.addr)
    }

    /// Blocks until the server thread exits.
    pub fn join(mut self) {
        if let Some(t) = self.thread.take() {
            let _ = t.join();
        }
    }
}

impl Drop for MockServer {
    fn drop(&mut self) {
        if let Some(stop) = self.stop.take() {
            let _ = stop.send(());
        }
        if let Some(t) = self.thread.take() {
            let _ = t.join();
        }
    }
}
