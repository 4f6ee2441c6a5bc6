//! Chat-completions adapter for remote vision-language and language models.
//!
//! Requests follow the common OpenAI-style `/chat/completions` shape. The
//! HTTP layer sits behind [`Transport`] so tests can stub it out. Replies to
//! the decision prompt must be a single JSON object
//! `{"chosen_id": <int>, "explanation": <string>}`; anything else is a
//! protocol error.

use std::io::Cursor;
use std::sync::mpsc;
use std::sync::Arc;
use std::time::Duration;

use base64::Engine;
use image::RgbImage;
use serde::{Deserialize, Serialize};
use serde_json::{json, Value};

use super::prompts;
use super::{compose_feedback_image, compose_panorama_grid};
use super::{Choice, DecisionProvider, DecisionRequest, DescriptionProvider, FeedbackRequest};
use crate::error::{Error, Result};
use crate::perception::Observation;
use crate::regulator::{Feedback, Verdict};
use crate::waypoint::{DecisionSpace, Waypoint};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct RemoteConfig {
    /// Full URL of the chat-completions endpoint.
    pub endpoint: String,
    pub model: String,
    /// Name of the environment variable holding the bearer token.
    pub token_env: String,
    pub timeout_secs: f64,
    /// Extra attempts after a transport failure. Protocol errors and
    /// timeouts are left to the regulator's own retry.
    pub max_retries: u32,
}

impl Default for RemoteConfig {
    fn default() -> Self {
        Self {
            endpoint: "https://api.openai.com/v1/chat/completions".into(),
            model: "gpt-4o".into(),
            token_env: "SKELNAV_API_KEY".into(),
            timeout_secs: 60.0,
            max_retries: 2,
        }
    }
}

impl RemoteConfig {
    pub fn validate(&self) -> Result<()> {
        if !(self.timeout_secs.is_finite() && self.timeout_secs > 0.0) {
            return Err(Error::input("remote timeout must be positive"));
        }
        if self.endpoint.is_empty() || self.model.is_empty() || self.token_env.is_empty() {
            return Err(Error::input("remote endpoint, model and token_env must be set"));
        }
        Ok(())
    }

    pub fn timeout(&self) -> Duration {
        Duration::from_secs_f64(self.timeout_secs)
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct HttpRequest {
    pub url: String,
    pub bearer: String,
    pub body: Value,
}

/// Sends one request and returns the raw response body.
pub trait Transport: Send + Sync {
    fn send(&self, request: &HttpRequest) -> Result<String>;
}

/// Blocking HTTP transport. One agent, so connections are pooled and
/// parallel episodes get parallel connections.
pub struct HttpTransport {
    agent: ureq::Agent,
}

impl HttpTransport {
    pub fn new(timeout: Duration) -> Self {
        let config = ureq::Agent::config_builder()
            .timeout_global(Some(timeout))
            .http_status_as_error(false)
            .build();
        Self {
            agent: config.into(),
        }
    }
}

impl Transport for HttpTransport {
    fn send(&self, request: &HttpRequest) -> Result<String> {
        let mut resp = self
            .agent
            .post(&request.url)
            .header("Authorization", &format!("Bearer {}", request.bearer))
            .send_json(&request.body)
            .map_err(|e| Error::Backend(format!("http: {e}")))?;
        let status = resp.status();
        let body = resp
            .body_mut()
            .read_to_string()
            .map_err(|e| Error::Backend(format!("http body: {e}")))?;
        if !status.is_success() {
            return Err(Error::Backend(format!("http status {status}: {body}")));
        }
        Ok(body)
    }
}

/// Content part of a chat message.
#[derive(Debug, Clone)]
pub enum Part {
    Text(String),
    Image(RgbImage),
}

fn png_data_url(img: &RgbImage) -> Result<String> {
    let mut buf = Cursor::new(Vec::new());
    img.write_to(&mut buf, image::ImageFormat::Png)
        .map_err(|e| Error::Backend(format!("png encode: {e}")))?;
    Ok(format!(
        "data:image/png;base64,{}",
        base64::engine::general_purpose::STANDARD.encode(buf.into_inner())
    ))
}

#[derive(Clone)]
pub struct RemoteClient {
    cfg: RemoteConfig,
    token: String,
    transport: Arc<dyn Transport>,
}

impl std::fmt::Debug for RemoteClient {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.debug_struct("RemoteClient").field("cfg", &self.cfg).finish_non_exhaustive()
    }
}

impl RemoteClient {
    /// Reads the bearer token from the configured environment variable.
    pub fn from_env(cfg: RemoteConfig, transport: Arc<dyn Transport>) -> Result<Self> {
        cfg.validate()?;
        let token = std::env::var(&cfg.token_env).map_err(|_| {
            Error::Backend(format!("auth token variable {} is not set", cfg.token_env))
        })?;
        Ok(Self::with_token(cfg, token, transport))
    }

    pub fn with_token(cfg: RemoteConfig, token: String, transport: Arc<dyn Transport>) -> Self {
        Self {
            cfg,
            token,
            transport,
        }
    }

    pub fn config(&self) -> &RemoteConfig {
        &self.cfg
    }

    pub fn request_body(&self, parts: &[Part]) -> Result<Value> {
        let content = parts
            .iter()
            .map(|p| {
                Ok(match p {
                    Part::Text(t) => json!({"type": "text", "text": t}),
                    Part::Image(img) => {
                        json!({"type": "image_url", "image_url": {"url": png_data_url(img)?}})
                    }
                })
            })
            .collect::<Result<Vec<_>>>()?;
        Ok(json!({
            "model": self.cfg.model,
            "temperature": 0,
            "messages": [{"role": "user", "content": content}],
        }))
    }

    fn send_once(&self, request: HttpRequest) -> Result<String> {
        let timeout = self.cfg.timeout();
        let transport = self.transport.clone();
        let (tx, rx) = mpsc::channel();
        std::thread::spawn(move || {
            let _ = tx.send(transport.send(&request));
        });
        match rx.recv_timeout(timeout) {
            Ok(r) => r,
            Err(mpsc::RecvTimeoutError::Timeout) => Err(Error::Timeout(timeout)),
            Err(mpsc::RecvTimeoutError::Disconnected) => {
                Err(Error::Backend("transport thread panicked".into()))
            }
        }
    }

    /// Sends one user message and returns the assistant's text.
    pub fn complete(&self, parts: &[Part]) -> Result<String> {
        let request = HttpRequest {
            url: self.cfg.endpoint.clone(),
            bearer: self.token.clone(),
            body: self.request_body(parts)?,
        };
        let mut attempt = 0;
        let raw = loop {
            match self.send_once(request.clone()) {
                Err(Error::Backend(_)) if attempt < self.cfg.max_retries => attempt += 1,
                other => break other?,
            }
        };
        let v: Value = serde_json::from_str(&raw)
            .map_err(|e| Error::Protocol(format!("response is not JSON: {e}")))?;
        v.pointer("/choices/0/message/content")
            .and_then(Value::as_str)
            .map(str::to_owned)
            .ok_or_else(|| Error::Protocol("response has no choices[0].message.content".into()))
    }
}

#[derive(Deserialize)]
#[serde(deny_unknown_fields)]
struct ChoiceReply {
    chosen_id: i64,
    explanation: String,
}

/// Parses a strict `{"chosen_id", "explanation"}` reply and checks the id
/// against the space.
pub fn parse_choice(reply: &str, space: &DecisionSpace) -> Result<Choice> {
    let r: ChoiceReply = serde_json::from_str(reply.trim())
        .map_err(|e| Error::Protocol(format!("reply is not the expected JSON object: {e}")))?;
    let id = usize::try_from(r.chosen_id)
        .ok()
        .filter(|id| space.get(*id).is_some())
        .ok_or_else(|| {
            Error::Protocol(format!("chosen_id {} is not in {:?}", r.chosen_id, space.ids()))
        })?;
    if r.explanation.trim().is_empty() {
        return Err(Error::Protocol("empty explanation".into()));
    }
    Ok(Choice {
        id,
        explanation: r.explanation,
    })
}

pub fn parse_subtasks(reply: &str) -> Result<Vec<String>> {
    let items: Vec<String> = serde_json::from_str(reply.trim())
        .map_err(|e| Error::Protocol(format!("subtask reply is not a JSON string array: {e}")))?;
    let items: Vec<String> = items
        .into_iter()
        .map(|s| s.trim().to_string())
        .filter(|s| !s.is_empty())
        .collect();
    if items.is_empty() {
        return Err(Error::Protocol("no subtasks returned".into()));
    }
    Ok(items)
}

#[derive(Debug, Clone)]
pub struct RemoteDecider {
    client: RemoteClient,
}

impl RemoteDecider {
    pub fn new(client: RemoteClient) -> Self {
        Self { client }
    }
}

impl DecisionProvider for RemoteDecider {
    fn decompose(&self, instruction: &str) -> Result<Vec<String>> {
        let reply = self.client.complete(&[Part::Text(prompts::decompose_prompt(instruction)?)])?;
        parse_subtasks(&reply)
    }

    fn choose(&self, req: &DecisionRequest<'_>) -> Result<Choice> {
        let prompt = prompts::decision_prompt(
            req.instruction,
            req.scene,
            req.feedback,
            req.history,
            req.space,
        )?;
        let reply = self.client.complete(&[Part::Text(prompt)])?;
        parse_choice(&reply, req.space)
    }
}

#[derive(Debug, Clone)]
pub struct RemoteDescriber {
    client: RemoteClient,
}

impl RemoteDescriber {
    pub fn new(client: RemoteClient) -> Self {
        Self { client }
    }
}

fn rgb_views(obs: &Observation) -> Result<&[RgbImage]> {
    obs.rgb
        .as_deref()
        .ok_or_else(|| Error::input("remote describer needs RGB views in the observation"))
}

fn view(obs: &Observation, i: usize) -> Result<&RgbImage> {
    rgb_views(obs)?
        .get(i)
        .ok_or_else(|| Error::input(format!("no RGB view {i}")))
}

impl DescriptionProvider for RemoteDescriber {
    fn describe_panorama(&self, obs: &Observation) -> Result<String> {
        let grid = compose_panorama_grid(rgb_views(obs)?, 4)?;
        self.client
            .complete(&[Part::Text(prompts::panorama_prompt()?), Part::Image(grid)])
    }

    fn describe_direction(&self, obs: &Observation, view_index: usize, w: &Waypoint) -> Result<String> {
        let img = view(obs, view_index)?.clone();
        self.client.complete(&[
            Part::Text(prompts::direction_prompt(w.heading, w.distance)?),
            Part::Image(img),
        ])
    }

    fn compare(&self, req: &FeedbackRequest<'_>) -> Result<Feedback> {
        let img = compose_feedback_image(view(req.before, req.before_view)?, view(req.after, req.after_view)?)?;
        let text = self.client.complete(&[
            Part::Text(prompts::feedback_prompt(&req.subtask.text)?),
            Part::Image(img),
        ])?;
        let subtask_complete = text.contains(prompts::COMPLETION_TOKEN);
        Ok(Feedback {
            text: text.trim().to_string(),
            subtask_index: req.subtask.index,
            verdict: Verdict::Unclear,
            subtask_complete,
        })
    }
}
