//! HTTP client for an external quality evaluator.
//!
//! Wire format: `POST base_url` with a JSON body `{"model": .., "prompt": ..}`
//! and an optional bearer token; the response body is free text whose last
//! number is the rating.

use std::time::Duration;

use serde::{Deserialize, Serialize};
use ugc_contract_core::quality::{build_prompt, parse_rating, PromptTemplate};
use ugc_contract_core::Error as CoreError;

use crate::error::{HarnessError, Result};

pub const ENV_URL: &str = "UGC_EVALUATOR_URL";
pub const ENV_KEY: &str = "UGC_EVALUATOR_KEY";
pub const ENV_MODEL: &str = "UGC_EVALUATOR_MODEL";

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct EndpointConfig {
    pub base_url: String,
    pub model: String,
    pub timeout_secs: f64,
    /// Extra attempts after the first one.
    pub retry_count: u32,
    pub rating_scale: (f64, f64),
    /// Never written back out; prefer the environment variable.
    #[serde(skip_serializing)]
    pub api_key: Option<String>,
}

impl Default for EndpointConfig {
    fn default() -> Self {
        Self {
            base_url: "http://127.0.0.1:8080/rate".to_string(),
            model: "default".to_string(),
            timeout_secs: 30.0,
            retry_count: 2,
            rating_scale: (0.0, 10.0),
            api_key: None,
        }
    }
}

impl EndpointConfig {
    pub fn validate(&self) -> ugc_contract_core::Result<()> {
        let bad = |m: &str| Err(CoreError::InvalidConfig(format!("oracle.endpoint: {m}")));
        if self.base_url.trim().is_empty() {
            return bad("base_url must be non-empty");
        }
        if !(self.timeout_secs > 0.0 && self.timeout_secs.is_finite()) {
            return bad("timeout_secs must be > 0");
        }
        let (lo, hi) = self.rating_scale;
        if !(lo < hi) {
            return bad("rating_scale min must be < max");
        }
        Ok(())
    }

    /// Applies `UGC_EVALUATOR_URL`, `UGC_EVALUATOR_KEY` and
    /// `UGC_EVALUATOR_MODEL` on top of `base` (or the defaults).
    /// Returns `None` when neither a base config nor a URL is available.
    pub fn from_env(base: Option<EndpointConfig>) -> Option<EndpointConfig> {
        let url = std::env::var(ENV_URL).ok().filter(|s| !s.is_empty());
        let mut cfg = match (base, &url) {
            (Some(cfg), _) => cfg,
            (None, Some(_)) => EndpointConfig::default(),
            (None, None) => return None,
        };
        if let Some(url) = url {
            cfg.base_url = url;
        }
        if let Ok(key) = std::env::var(ENV_KEY) {
            cfg.api_key = Some(key).filter(|k| !k.is_empty());
        }
        if let Ok(model) = std::env::var(ENV_MODEL) {
            if !model.is_empty() {
                cfg.model = model;
            }
        }
        Some(cfg)
    }
}

#[derive(Serialize)]
struct RateRequest<'a> {
    model: &'a str,
    prompt: &'a str,
}

fn request(agent: &ureq::Agent, endpoint: &EndpointConfig, prompt: &str) -> std::result::Result<String, String> {
    let body = serde_json::to_string(&RateRequest { model: &endpoint.model, prompt }).map_err(|e| e.to_string())?;
    let mut req = agent.post(&endpoint.base_url).set("Content-Type", "application/json");
    if let Some(key) = &endpoint.api_key {
        req = req.set("Authorization", &format!("Bearer {key}"));
    }
    match req.send_string(&body) {
        Ok(resp) => resp.into_string().map_err(|e| format!("reading response: {e}")),
        Err(ureq::Error::Status(code, resp)) => {
            let text = resp.into_string().unwrap_or_default();
            Err(format!("HTTP {code}: {}", text.trim()))
        }
        Err(e) => Err(e.to_string()),
    }
}

/// Builds the prompt, queries the evaluator and parses its rating.
///
/// Transport failures and unparseable replies are retried `retry_count`
/// times and then reported as [`HarnessError::EvaluatorUnavailable`]; with
/// no retries an unparseable reply is reported as such. An out-of-scale
/// rating is a definite answer and fails immediately.
pub fn evaluate_external(descriptor: &str, template: &PromptTemplate, endpoint: &EndpointConfig) -> Result<f64> {
    endpoint.validate()?;
    let prompt = build_prompt(descriptor, template)?;
    let agent = ureq::AgentBuilder::new()
        .timeout(Duration::from_secs_f64(endpoint.timeout_secs))
        .build();
    let attempts = endpoint.retry_count.saturating_add(1);
    let mut last = String::new();
    for _ in 0..attempts {
        match request(&agent, endpoint, &prompt) {
            Err(e) => last = e,
            Ok(text) => match parse_rating(&text, endpoint.rating_scale) {
                Ok(v) => return Ok(v),
                Err(e @ CoreError::UnparseableResponse(_)) if endpoint.retry_count == 0 => return Err(e.into()),
                Err(e @ CoreError::UnparseableResponse(_)) => last = e.to_string(),
                Err(e) => return Err(e.into()),
            },
        }
    }
    Err(HarnessError::EvaluatorUnavailable { attempts, cause: last })
}
