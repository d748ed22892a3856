//! Remote execution of reverse-anneal jobs over a small REST protocol, plus
//! an in-repo mock server backed by the simulated sampler.
//!
//! `POST /jobs` takes an [`AnnealJob`] and answers with a [`JobResult`]
//! (usually `pending`); `GET /jobs/{id}` returns the current [`JobResult`].
//! An optional `x-qalab-seed` header pins the sampling seed.

pub mod mock;

use std::sync::{Condvar, Mutex};
use std::thread;
use std::time::{Duration, Instant};

use qalab_core::annealer::{AnnealJob, JobResult, JobStatus, Sampler, SamplerError};
use reqwest::blocking::{Client, RequestBuilder, Response};
use reqwest::header::{AUTHORIZATION, CONTENT_TYPE};
use thiserror::Error;

pub const ENDPOINT_ENV: &str = "QALAB_ENDPOINT";
pub const TOKEN_ENV: &str = "QALAB_TOKEN";
pub const SEED_HEADER: &str = "x-qalab-seed";
pub const DEFAULT_MAX_IN_FLIGHT: usize = 4;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum ClientError {
    #[error("no endpoint configured (set {ENDPOINT_ENV})")]
    MissingEndpoint,
    #[error("transport failure: {0}")]
    Transport(String),
    #[error("HTTP {status}: {body}")]
    Http { status: u16, body: String },
    #[error("malformed response: {0}")]
    Malformed(String),
    #[error("job {id} still pending after {waited:?}")]
    Timeout { id: String, waited: Duration },
    #[error("job {id} failed: {message}")]
    JobFailed { id: String, message: String },
}

impl From<ClientError> for SamplerError {
    fn from(e: ClientError) -> Self {
        SamplerError::Backend(e.to_string())
    }
}

/// Bounded exponential backoff between polls.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Backoff {
    pub base: Duration,
    pub factor: f64,
    pub cap: Duration,
}

impl Default for Backoff {
    fn default() -> Self {
        Self {
            base: Duration::from_millis(200),
            factor: 2.0,
            cap: Duration::from_secs(5),
        }
    }
}

impl Backoff {
    /// Delay before poll number `attempt` (0-based).
    pub fn delay(&self, attempt: u32) -> Duration {
        let secs = self.base.as_secs_f64() * self.factor.powi(attempt.min(64) as i32);
        Duration::from_secs_f64(secs.min(self.cap.as_secs_f64()))
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct ClientConfig {
    /// Base URL, e.g. `http://localhost:8080`.
    pub endpoint: String,
    pub token: Option<String>,
    /// Per-request timeout.
    pub request_timeout: Duration,
    /// Total time to wait for a job to finish.
    pub poll_timeout: Duration,
    pub backoff: Backoff,
    pub max_in_flight: usize,
}

impl ClientConfig {
    pub fn new(endpoint: impl Into<String>) -> Self {
        Self {
            endpoint: endpoint.into().trim_end_matches('/').to_string(),
            token: None,
            request_timeout: Duration::from_secs(30),
            poll_timeout: Duration::from_secs(600),
            backoff: Backoff::default(),
            max_in_flight: DEFAULT_MAX_IN_FLIGHT,
        }
    }

    /// Reads `QALAB_ENDPOINT` and `QALAB_TOKEN`.
    pub fn from_env() -> Result<Self, ClientError> {
        let endpoint = std::env::var(ENDPOINT_ENV).map_err(|_| ClientError::MissingEndpoint)?;
        if endpoint.trim().is_empty() {
            return Err(ClientError::MissingEndpoint);
        }
        let mut cfg = Self::new(endpoint);
        cfg.token = std::env::var(TOKEN_ENV).ok().filter(|t| !t.is_empty());
        Ok(cfg)
    }
}

struct Semaphore {
    free: Mutex<usize>,
    cv: Condvar,
}

impl Semaphore {
    fn new(n: usize) -> Self {
        Self {
            free: Mutex::new(n.max(1)),
            cv: Condvar::new(),
        }
    }

    fn acquire(&self) -> Permit<'_> {
        let mut free = self.free.lock().unwrap_or_else(|e| e.into_inner());
        while *free == 0 {
            free = self.cv.wait(free).unwrap_or_else(|e| e.into_inner());
        }
        *free -= 1;
        Permit(self)
    }
}

struct Permit<'a>(&'a Semaphore);

impl Drop for Permit<'_> {
    fn drop(&mut self) {
        *self.0.free.lock().unwrap_or_else(|e| e.into_inner()) += 1;
        self.0.cv.notify_one();
    }
}

/// Blocking REST sampler; shareable across threads.
pub struct RemoteSampler {
    cfg: ClientConfig,
    http: Client,
    slots: Semaphore,
}

impl std::fmt::Debug for RemoteSampler {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.debug_struct("RemoteSampler")
            .field("endpoint", &self.cfg.endpoint)
            .field("max_in_flight", &self.cfg.max_in_flight)
            .finish()
    }
}

impl RemoteSampler {
    pub fn new(cfg: ClientConfig) -> Result<Self, ClientError> {
        if cfg.endpoint.is_empty() {
            return Err(ClientError::MissingEndpoint);
        }
        let http = Client::builder()
            .timeout(cfg.request_timeout)
            .build()
            .map_err(|e| ClientError::Transport(e.to_string()))?;
        let slots = Semaphore::new(cfg.max_in_flight);
        Ok(Self { cfg, http, slots })
    }

    pub fn from_env() -> Result<Self, ClientError> {
        Self::new(ClientConfig::from_env()?)
    }

    pub fn config(&self) -> &ClientConfig {
        &self.cfg
    }

    fn authorize(&self, req: RequestBuilder) -> RequestBuilder {
        match &self.cfg.token {
            Some(t) => req.header(AUTHORIZATION, format!("Bearer {t}")),
            None => req,
        }
    }

    fn read(resp: Result<Response, reqwest::Error>) -> Result<JobResult, ClientError> {
        let resp = resp.map_err(|e| ClientError::Transport(e.to_string()))?;
        let status = resp.status();
        let body = resp.text().map_err(|e| ClientError::Transport(e.to_string()))?;
        if !status.is_success() {
            return Err(ClientError::Http {
                status: status.as_u16(),
                body,
            });
        }
        serde_json::from_str(&body).map_err(|e| ClientError::Malformed(format!("{e}: {body}")))
    }

    /// Posts a job and returns the server-assigned id.
    pub fn submit(&self, job: &AnnealJob, seed: Option<u64>) -> Result<String, ClientError> {
        let mut req = self
            .http
            .post(format!("{}/jobs", self.cfg.endpoint))
            .header(CONTENT_TYPE, "application/json")
            .body(job.to_json());
        if let Some(s) = seed {
            req = req.header(SEED_HEADER, s.to_string());
        }
        let result = Self::read(self.authorize(req).send())?;
        if result.id.is_empty() {
            return Err(ClientError::Malformed("empty job id".into()));
        }
        Ok(result.id)
    }

    /// Current state of a job, without waiting.
    pub fn status(&self, id: &str) -> Result<JobResult, ClientError> {
        let req = self.http.get(format!("{}/jobs/{id}", self.cfg.endpoint));
        Self::read(self.authorize(req).send())
    }

    /// Polls until the job completes or fails, or `timeout` elapses.
    pub fn poll(&self, id: &str, timeout: Duration) -> Result<JobResult, ClientError> {
        let start = Instant::now();
        let mut attempt = 0;
        loop {
            let result = self.status(id)?;
            match result.status {
                JobStatus::Completed => return Ok(result),
                JobStatus::Failed => {
                    return Err(ClientError::JobFailed {
                        id: id.to_string(),
                        message: result.message.unwrap_or_default(),
                    })
                }
                JobStatus::Pending => {}
            }
            let waited = start.elapsed();
            if waited >= timeout {
                return Err(ClientError::Timeout {
                    id: id.to_string(),
                    waited,
                });
            }
            thread::sleep(self.cfg.backoff.delay(attempt).min(timeout - waited));
            attempt += 1;
        }
    }

    /// Submit and wait, holding one of the in-flight slots throughout.
    pub fn run(&self, job: &AnnealJob, seed: Option<u64>) -> Result<JobResult, ClientError> {
        let _permit = self.slots.acquire();
        let id = self.submit(job, seed)?;
        self.poll(&id, self.cfg.poll_timeout)
    }
}

impl Sampler for RemoteSampler {
    fn sample(&self, job: &AnnealJob, seed: u64) -> Result<JobResult, SamplerError> {
        Ok(self.run(job, Some(seed))?)
    }
}
