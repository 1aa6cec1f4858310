//! Provider transport and the budgeted generation loop.
//!
//! [`generate_synthetic`] is transport-agnostic: the live HTTP client, the
//! canned-transcript replayer, and anything test code injects all implement
//! [`Transport`]. The loop slices the row budget into per-call requests,
//! deduplicates across calls, and tolerates flaky calls up to a retry limit.

pub mod mock;

pub use mock::{mock_sample, MockSpec, NoiseRegion};

use std::collections::HashSet;
use std::collections::VecDeque;
use std::sync::Mutex;
use std::time::Duration;

use serde::{Deserialize, Serialize};

use crate::dataset::{Dataset, Role, Row};
use crate::error::{Error, Result};
use crate::promptgen::{parse_llm_output, ParseReport, PromptBundle};
use crate::schema::TabularSchema;

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ProviderConfig {
    pub endpoint_url: String,
    pub model_name: String,
    pub temperature: f64,
    /// Upper bound on rows requested in a single completion call.
    pub max_rows_per_call: usize,
    /// Consecutive unproductive calls tolerated before giving up.
    pub max_retries: usize,
    pub timeout_secs: u64,
    /// Name of the environment variable holding the API key. The key itself
    /// never appears in configs or reports.
    pub api_key_env: String,
    /// Completion calls issued at a time.
    pub concurrency: usize,
}

impl Default for ProviderConfig {
    fn default() -> Self {
        ProviderConfig {
            endpoint_url: "https://api.openai.com/v1/chat/completions".into(),
            model_name: "gpt-4o-mini".into(),
            temperature: 0.9,
            max_rows_per_call: 50,
            max_retries: 3,
            timeout_secs: 120,
            api_key_env: "LLM_API_KEY".into(),
            concurrency: 1,
        }
    }
}

impl ProviderConfig {
    pub fn validate(&self) -> Result<()> {
        if !(0.0..=2.0).contains(&self.temperature) {
            return Err(Error::InvalidConfig("temperature must lie in [0, 2]".into()));
        }
        if self.max_rows_per_call == 0 {
            return Err(Error::InvalidConfig("max_rows_per_call must be positive".into()));
        }
        if self.concurrency == 0 {
            return Err(Error::InvalidConfig("concurrency must be positive".into()));
        }
        if self.endpoint_url.trim().is_empty() || self.model_name.trim().is_empty() {
            return Err(Error::InvalidConfig("endpoint and model must be set".into()));
        }
        Ok(())
    }
}

pub trait Transport: Send + Sync {
    /// Sends one completion request and returns the raw text of the reply.
    fn complete(&self, system: &str, user: &str) -> Result<String>;
}

/// Chat-completions client over HTTPS. The API key is read from the
/// environment variable named in the config at construction time.
pub struct HttpTransport {
    client: reqwest::blocking::Client,
    endpoint_url: String,
    model_name: String,
    temperature: f64,
    api_key: String,
}

impl HttpTransport {
    pub fn from_env(config: &ProviderConfig) -> Result<HttpTransport> {
        config.validate()?;
        let api_key = std::env::var(&config.api_key_env)
            .ok()
            .filter(|k| !k.trim().is_empty())
            .ok_or_else(|| Error::MissingApiKey(config.api_key_env.clone()))?;
        let client = reqwest::blocking::Client::builder()
            .timeout(Duration::from_secs(config.timeout_secs))
            .build()
            .map_err(|e| Error::TransportError(e.to_string()))?;
        Ok(HttpTransport {
            client,
            endpoint_url: config.endpoint_url.clone(),
            model_name: config.model_name.clone(),
            temperature: config.temperature,
            api_key,
        })
    }
}

impl Transport for HttpTransport {
    fn complete(&self, system: &str, user: &str) -> Result<String> {
        let body = serde_json::json!({
            "model": self.model_name,
            "temperature": self.temperature,
            "messages": [
                {"role": "system", "content": system},
                {"role": "user", "content": user},
            ],
        });
        let response = self
            .client
            .post(&self.endpoint_url)
            .bearer_auth(&self.api_key)
            .json(&body)
            .send()
            .map_err(|e| Error::TransportError(e.to_string()))?;

        let status = response.status();
        if status.as_u16() == 401 || status.as_u16() == 403 {
            return Err(Error::AuthError);
        }
        if status.as_u16() == 429 {
            return Err(Error::RateLimited);
        }
        if !status.is_success() {
            return Err(Error::TransportError(format!("HTTP {status}")));
        }
        let payload: serde_json::Value = response
            .json()
            .map_err(|e| Error::TransportError(e.to_string()))?;
        payload["choices"][0]["message"]["content"]
            .as_str()
            .map(str::to_string)
            .ok_or_else(|| Error::TransportError("reply carried no message content".into()))
    }
}

/// Replays a fixed list of responses in order; used for offline runs and
/// tests. Records every user prompt it is asked to complete.
pub struct CannedTransport {
    responses: Mutex<VecDeque<String>>,
    prompts: Mutex<Vec<String>>,
}

impl CannedTransport {
    pub fn from_strings(responses: Vec<String>) -> CannedTransport {
        CannedTransport {
            responses: Mutex::new(responses.into()),
            prompts: Mutex::new(Vec::new()),
        }
    }

    /// Loads a transcript file: a JSON array of response strings.
    pub fn from_file(path: impl AsRef<std::path::Path>) -> Result<CannedTransport> {
        let text = std::fs::read_to_string(path)?;
        let responses: Vec<String> = serde_json::from_str(&text)?;
        Ok(CannedTransport::from_strings(responses))
    }

    pub fn prompts(&self) -> Vec<String> {
        self.prompts.lock().expect("prompt log poisoned").clone()
    }
}

impl Transport for CannedTransport {
    fn complete(&self, _system: &str, user: &str) -> Result<String> {
        self.prompts.lock().expect("prompt log poisoned").push(user.to_string());
        self.responses
            .lock()
            .expect("transcript poisoned")
            .pop_front()
            .ok_or_else(|| Error::TransportError("canned transcript exhausted".into()))
    }
}

/// Requests rows until `n_target` distinct ones are collected or the retry
/// budget runs out.
///
/// Rows are deduplicated exactly, both against the train split and across
/// calls. A call that contributes no new row counts as a failure; the run
/// stops after `max_retries + 1` consecutive failures. Collecting anything
/// at all is a success (the report says how far the run got); nothing at all
/// is [`Error::BudgetExhausted`], or the last transport error if no call ever
/// returned text. Auth and missing-key errors abort immediately.
pub fn generate_synthetic(
    transport: &dyn Transport,
    bundle: &PromptBundle,
    schema: &TabularSchema,
    train: &Dataset,
    provider: &ProviderConfig,
    n_target: usize,
) -> Result<(Dataset, ParseReport)> {
    provider.validate()?;
    if n_target == 0 {
        return Err(Error::InvalidConfig("n_target must be positive".into()));
    }

    let mut rows: Vec<Row> = Vec::new();
    let mut seen: HashSet<String> = HashSet::new();
    let mut report = ParseReport::default();
    let mut consecutive_failures = 0usize;
    let mut last_error: Option<Error> = None;
    let mut any_response = false;

    while rows.len() < n_target && consecutive_failures <= provider.max_retries {
        let remaining = n_target - rows.len();
        let n_calls = provider
            .concurrency
            .min(remaining.div_ceil(provider.max_rows_per_call))
            .max(1);
        let mut asks = Vec::with_capacity(n_calls);
        let mut left = remaining;
        for _ in 0..n_calls {
            let ask = left.min(provider.max_rows_per_call);
            if ask == 0 {
                break;
            }
            asks.push(ask);
            left -= ask;
        }

        let responses: Vec<Result<String>> = if asks.len() == 1 {
            let user = bundle.with_n_requested(asks[0]).render_user(None);
            vec![transport.complete(&bundle.system_text, &user)]
        } else {
            std::thread::scope(|scope| {
                let handles: Vec<_> = asks
                    .iter()
                    .map(|&ask| {
                        let user = bundle.with_n_requested(ask).render_user(None);
                        let system = bundle.system_text.clone();
                        scope.spawn(move || transport.complete(&system, &user))
                    })
                    .collect();
                handles
                    .into_iter()
                    .map(|h| {
                        h.join().unwrap_or_else(|_| {
                            Err(Error::TransportError("completion worker panicked".into()))
                        })
                    })
                    .collect()
            })
        };

        for response in responses {
            match response {
                Ok(text) => {
                    any_response = true;
                    let (batch, batch_report) = parse_llm_output(&text, schema, train);
                    report.merge(batch_report);
                    let mut new_rows = 0usize;
                    for row in batch {
                        if rows.len() >= n_target {
                            break;
                        }
                        if seen.insert(row.dedup_key()) {
                            rows.push(row);
                            new_rows += 1;
                        } else {
                            report.duplicates_of_synthetic += 1;
                        }
                    }
                    if new_rows > 0 {
                        consecutive_failures = 0;
                    } else {
                        consecutive_failures += 1;
                    }
                }
                Err(Error::AuthError) => return Err(Error::AuthError),
                Err(e @ Error::MissingApiKey(_)) => return Err(e),
                Err(e) => {
                    consecutive_failures += 1;
                    last_error = Some(e);
                }
            }
        }
    }

    if rows.is_empty() {
        return Err(if any_response {
            Error::BudgetExhausted { got: 0, wanted: n_target }
        } else {
            last_error.unwrap_or(Error::BudgetExhausted { got: 0, wanted: n_target })
        });
    }
    Ok((Dataset::new(schema.clone(), Role::Synthetic, rows)?, report))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::dataset::test_util::{mixed_row, mixed_schema};
    use crate::promptgen::build_prompt;

    fn train() -> Dataset {
        Dataset::new(
            mixed_schema(),
            Role::Train,
            vec![mixed_row(30.0, "red", "yes"), mixed_row(40.0, "blue", "no")],
        )
        .unwrap()
    }

    fn response(rows: &[(f64, &str, &str)]) -> String {
        let lines: Vec<String> = rows
            .iter()
            .map(|(age, color, outcome)| {
                format!(r#"{{"age": {age}, "color": "{color}", "outcome": "{outcome}"}}"#)
            })
            .collect();
        format!("```json\n{}\n```", lines.join("\n"))
    }

    fn provider() -> ProviderConfig {
        ProviderConfig { max_rows_per_call: 2, max_retries: 1, ..ProviderConfig::default() }
    }

    #[test]
    fn collects_until_target() {
        let train = train();
        let schema = mixed_schema();
        let bundle = build_prompt(&schema, &train, 4, true).unwrap();
        let transport = CannedTransport::from_strings(vec![
            response(&[(1.0, "red", "yes"), (2.0, "red", "no")]),
            response(&[(3.0, "blue", "yes"), (4.0, "green", "no")]),
        ]);
        let (data, report) =
            generate_synthetic(&transport, &bundle, &schema, &train, &provider(), 4).unwrap();
        assert_eq!(data.rows.len(), 4);
        assert_eq!(data.role, Role::Synthetic);
        assert_eq!(report.accepted, 4);
        assert!(report.rejected.is_empty());
        let prompts = transport.prompts();
        assert_eq!(prompts.len(), 2);
        assert!(prompts[0].contains("Generate 2 realistic"));
    }

    #[test]
    fn dedups_across_calls_and_returns_partial() {
        let train = train();
        let schema = mixed_schema();
        let bundle = build_prompt(&schema, &train, 6, true).unwrap();
        let same = response(&[(1.0, "red", "yes"), (2.0, "red", "no")]);
        let transport =
            CannedTransport::from_strings(vec![same.clone(), same.clone(), same]);
        let (data, report) =
            generate_synthetic(&transport, &bundle, &schema, &train, &provider(), 6).unwrap();
        assert_eq!(data.rows.len(), 2);
        assert_eq!(report.duplicates_of_synthetic, 4);
    }

    #[test]
    fn train_duplicates_never_emitted() {
        let train = train();
        let schema = mixed_schema();
        let bundle = build_prompt(&schema, &train, 2, true).unwrap();
        let transport = CannedTransport::from_strings(vec![response(&[
            (30.0, "red", "yes"),
            (5.0, "blue", "no"),
        ])]);
        let (data, report) =
            generate_synthetic(&transport, &bundle, &schema, &train, &provider(), 2).unwrap();
        assert_eq!(data.rows.len(), 1);
        assert_eq!(report.duplicates_of_train, 1);
    }

    #[test]
    fn garbage_only_exhausts_budget() {
        let train = train();
        let schema = mixed_schema();
        let bundle = build_prompt(&schema, &train, 4, true).unwrap();
        let transport = CannedTransport::from_strings(vec![
            "no rows here".into(),
            "still nothing".into(),
            "nope".into(),
            "nothing".into(),
        ]);
        let err =
            generate_synthetic(&transport, &bundle, &schema, &train, &provider(), 4).unwrap_err();
        assert!(matches!(err, Error::BudgetExhausted { got: 0, wanted: 4 }));
    }

    #[test]
    fn transport_failure_with_no_text_propagates() {
        let train = train();
        let schema = mixed_schema();
        let bundle = build_prompt(&schema, &train, 4, true).unwrap();
        let transport = CannedTransport::from_strings(vec![]);
        let err =
            generate_synthetic(&transport, &bundle, &schema, &train, &provider(), 4).unwrap_err();
        assert!(matches!(err, Error::TransportError(_)));
    }

    #[test]
    fn auth_error_aborts_immediately() {
        struct DenyAll;
        impl Transport for DenyAll {
            fn complete(&self, _: &str, _: &str) -> Result<String> {
                Err(Error::AuthError)
            }
        }
        let train = train();
        let schema = mixed_schema();
        let bundle = build_prompt(&schema, &train, 4, true).unwrap();
        let err =
            generate_synthetic(&DenyAll, &bundle, &schema, &train, &provider(), 4).unwrap_err();
        assert!(matches!(err, Error::AuthError));
    }

    #[test]
    fn overgeneration_truncated_to_target() {
        let train = train();
        let schema = mixed_schema();
        let bundle = build_prompt(&schema, &train, 2, true).unwrap();
        let transport = CannedTransport::from_strings(vec![response(&[
            (1.0, "red", "yes"),
            (2.0, "red", "no"),
            (3.0, "blue", "yes"),
        ])]);
        let config = ProviderConfig { max_rows_per_call: 5, ..provider() };
        let (data, _) =
            generate_synthetic(&transport, &bundle, &schema, &train, &config, 2).unwrap();
        assert_eq!(data.rows.len(), 2);
    }

    #[test]
    fn concurrency_splits_budget() {
        let train = train();
        let schema = mixed_schema();
        let bundle = build_prompt(&schema, &train, 5, true).unwrap();
        let transport = CannedTransport::from_strings(vec![
            response(&[(1.0, "red", "yes"), (2.0, "red", "no")]),
            response(&[(3.0, "blue", "yes"), (4.0, "green", "no")]),
            response(&[(5.0, "blue", "no")]),
        ]);
        let config = ProviderConfig { concurrency: 3, ..provider() };
        let (data, _) =
            generate_synthetic(&transport, &bundle, &schema, &train, &config, 5).unwrap();
        assert_eq!(data.rows.len(), 5);
        let mut asks: Vec<usize> = transport
            .prompts()
            .iter()
            .map(|p| {
                let tail = p.split("Generate ").nth(1).unwrap();
                tail.split(' ').next().unwrap().parse().unwrap()
            })
            .collect();
        asks.sort_unstable();
        assert_eq!(asks, vec![1, 2, 2]);
    }

    #[test]
    fn missing_key_reported_with_var_name() {
        let config = ProviderConfig {
            api_key_env: "TABAUG_TEST_SURELY_UNSET_KEY".into(),
            ..ProviderConfig::default()
        };
        let err = HttpTransport::from_env(&config).err().expect("construction must fail");
        match err {
            Error::MissingApiKey(var) => assert_eq!(var, "TABAUG_TEST_SURELY_UNSET_KEY"),
            other => panic!("expected missing-key error, got {other:?}"),
        }
    }

    #[test]
    fn provider_validation() {
        assert!(ProviderConfig::default().validate().is_ok());
        assert!(ProviderConfig { temperature: 2.5, ..ProviderConfig::default() }
            .validate()
            .is_err());
        assert!(ProviderConfig { max_rows_per_call: 0, ..ProviderConfig::default() }
            .validate()
            .is_err());
        assert!(ProviderConfig { concurrency: 0, ..ProviderConfig::default() }
            .validate()
            .is_err());
    }

    #[test]
    fn transcript_roundtrip_through_file() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("transcript.json");
        std::fs::write(&path, r#"["first reply", "second reply"]"#).unwrap();
        let transport = CannedTransport::from_file(&path).unwrap();
        assert_eq!(transport.complete("s", "u").unwrap(), "first reply");
        assert_eq!(transport.complete("s", "u").unwrap(), "second reply");
        assert!(transport.complete("s", "u").is_err());
    }
}
