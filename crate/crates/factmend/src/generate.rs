//! Pluggable text sources feeding the correction pipeline.
//!
//! Generation happens outside this artifact: the pipeline only ever sees
//! text. Three sources are supported — fixture files holding recorded
//! prompt/output pairs (the whole evaluation is reproducible offline),
//! a line-oriented input stream, and an external HTTP completion
//! endpoint speaking the common `/v1/completions` convention.

use std::collections::HashMap;
use std::io::BufRead;
use std::path::Path;
use std::time::Duration;

use thiserror::Error;

/// Environment variable naming the completion endpoint base URL.
pub const LLM_URL_ENV: &str = "FACTMEND_LLM_URL";

/// Where generated text comes from.
#[derive(Debug, Clone)]
pub enum GenerationSource {
    /// Recorded prompt/output pairs loaded from a fixture file.
    Fixture(std::path::PathBuf),
    /// Each generate call consumes the next line of an input stream.
    Stream,
    /// External completion endpoint.
    HttpEndpoint(HttpEndpoint),
}

#[derive(Debug, Clone)]
pub struct HttpEndpoint {
    pub url: String,
    pub model: String,
    pub timeout_ms: u64,
    pub max_tokens: u32,
}

impl HttpEndpoint {
    pub fn new(url: impl Into<String>) -> Self {
        HttpEndpoint {
            url: url.into(),
            model: "default".to_string(),
            timeout_ms: 10_000,
            max_tokens: 64,
        }
    }

    pub fn with_model(mut self, model: impl Into<String>) -> Self {
        self.model = model.into();
        self
    }

    pub fn with_timeout_ms(mut self, timeout_ms: u64) -> Self {
        self.timeout_ms = timeout_ms;
        self
    }

    pub fn with_max_tokens(mut self, max_tokens: u32) -> Self {
        self.max_tokens = max_tokens;
        self
    }

    /// Full completions URL: the configured value is treated as a base
    /// unless it already names the completions path.
    fn completions_url(&self) -> String {
        if self.url.ends_with("/v1/completions") {
            self.url.clone()
        } else {
            format!("{}/v1/completions", self.url.trim_end_matches('/'))
        }
    }
}

/// One evaluation case: the prompt, what the model produced, and (for
/// evaluation fixtures) what the corrected output should be.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct PromptCase {
    pub prompt: String,
    pub generated: String,
    pub expected_corrected: Option<String>,
}

#[derive(Debug, Error)]
pub enum GenerateError {
    #[error("no fixture for prompt `{0}`")]
    FixtureMiss(String),
    #[error("fixture line {line}: {message}")]
    FixtureParse { line: usize, message: String },
    #[error("duplicate prompt `{prompt}` (line {line})")]
    DuplicatePrompt { prompt: String, line: usize },
    #[error("failed to read fixture `{path}`: {source}")]
    Io {
        path: String,
        source: std::io::Error,
    },
    #[error("input stream is exhausted")]
    StreamExhausted,
    #[error("stream read failed: {0}")]
    StreamRead(std::io::Error),
    #[error("endpoint {endpoint} returned status {status}")]
    HttpStatus { endpoint: String, status: u16 },
    #[error("transport failure talking to {endpoint}: {message}")]
    HttpTransport { endpoint: String, message: String },
    #[error("malformed response from {endpoint}: {message}")]
    MalformedResponse { endpoint: String, message: String },
}

/// Parse the fixture document format: records separated by blank lines,
/// each `PROMPT:` then `GENERATED:` then optional `EXPECTED:`. `#`
/// comment lines are ignored. Prompts must be unique.
pub fn parse_fixture(text: &str) -> Result<Vec<PromptCase>, GenerateError> {
    let mut cases: Vec<PromptCase> = Vec::new();
    let mut seen: HashMap<String, usize> = HashMap::new();
    let mut current: Option<(usize, String, Option<String>, Option<String>)> = None;

    let mut finish = |current: &mut Option<(usize, String, Option<String>, Option<String>)>,
                      cases: &mut Vec<PromptCase>|
     -> Result<(), GenerateError> {
        if let Some((line, prompt, generated, expected)) = current.take() {
            let generated = generated.ok_or_else(|| GenerateError::FixtureParse {
                line,
                message: format!("record for `{prompt}` has no GENERATED line"),
            })?;
            cases.push(PromptCase {
                prompt,
                generated,
                expected_corrected: expected,
            });
        }
        Ok(())
    };

    for (idx, raw) in text.lines().enumerate() {
        let line_no = idx + 1;
        let line = raw.strip_suffix('\r').unwrap_or(raw);
        if line.trim_start().starts_with('#') {
            continue;
        }
        if line.trim().is_empty() {
            finish(&mut current, &mut cases)?;
            continue;
        }
        if let Some(prompt) = line.strip_prefix("PROMPT: ") {
            finish(&mut current, &mut cases)?;
            if prompt.is_empty() {
                return Err(GenerateError::FixtureParse {
                    line: line_no,
                    message: "prompt must not be empty".to_string(),
                });
            }
            if let Some(first) = seen.insert(prompt.to_string(), line_no) {
                return Err(GenerateError::DuplicatePrompt {
                    prompt: prompt.to_string(),
                    line: first.max(line_no),
                });
            }
            current = Some((line_no, prompt.to_string(), None, None));
        } else if let Some(generated) = line.strip_prefix("GENERATED: ") {
            match &mut current {
                Some((_, _, g @ None, _)) => *g = Some(generated.to_string()),
                Some(_) => {
                    return Err(GenerateError::FixtureParse {
                        line: line_no,
                        message: "record already has a GENERATED line".to_string(),
                    })
                }
                None => {
                    return Err(GenerateError::FixtureParse {
                        line: line_no,
                        message: "GENERATED line outside a record".to_string(),
                    })
                }
            }
        } else if let Some(expected) = line.strip_prefix("EXPECTED: ") {
            match &mut current {
                Some((_, _, _, e @ None)) => *e = Some(expected.to_string()),
                Some(_) => {
                    return Err(GenerateError::FixtureParse {
                        line: line_no,
                        message: "record already has an EXPECTED line".to_string(),
                    })
                }
                None => {
                    return Err(GenerateError::FixtureParse {
                        line: line_no,
                        message: "EXPECTED line outside a record".to_string(),
                    })
                }
            }
        } else {
            return Err(GenerateError::FixtureParse {
                line: line_no,
                message: format!("unrecognized line `{line}`"),
            });
        }
    }
    finish(&mut current, &mut cases)?;
    Ok(cases)
}

/// Load and parse a fixture file.
pub fn load_fixture(path: impl AsRef<Path>) -> Result<Vec<PromptCase>, GenerateError> {
    let path = path.as_ref();
    let text = std::fs::read_to_string(path).map_err(|source| GenerateError::Io {
        path: path.display().to_string(),
        source,
    })?;
    parse_fixture(&text)
}

/// A ready-to-call text source. Fixture lookups are by exact prompt;
/// the stream hands out one line per call; HTTP posts a completion
/// request per call.
pub enum Generator {
    Fixture(HashMap<String, String>),
    Stream(Box<dyn BufRead>),
    Http(HttpEndpoint),
}

impl Generator {
    /// Build a generator from a source description. `Stream` attaches to
    /// standard input; use [`Generator::from_reader`] to attach anything
    /// else.
    pub fn from_source(source: &GenerationSource) -> Result<Self, GenerateError> {
        match source {
            GenerationSource::Fixture(path) => {
                let cases = load_fixture(path)?;
                Ok(Generator::Fixture(
                    cases.into_iter().map(|c| (c.prompt, c.generated)).collect(),
                ))
            }
            GenerationSource::Stream => Ok(Generator::Stream(Box::new(std::io::stdin().lock()))),
            GenerationSource::HttpEndpoint(endpoint) => Ok(Generator::Http(endpoint.clone())),
        }
    }

    /// Stream generator over an arbitrary reader.
    pub fn from_reader(reader: impl BufRead + 'static) -> Self {
        Generator::Stream(Box::new(reader))
    }

    /// Produce the generated text for a prompt.
    pub fn generate(&mut self, prompt: &str) -> Result<String, GenerateError> {
        match self {
            Generator::Fixture(cases) => cases
                .get(prompt)
                .cloned()
                .ok_or_else(|| GenerateError::FixtureMiss(prompt.to_string())),
            Generator::Stream(reader) => {
                let mut line = String::new();
                let n = reader.read_line(&mut line).map_err(GenerateError::StreamRead)?;
                if n == 0 {
                    return Err(GenerateError::StreamExhausted);
                }
                Ok(line.trim_end_matches(['\n', '\r']).to_string())
            }
            Generator::Http(endpoint) => http_complete(endpoint, prompt),
        }
    }
}

fn http_complete(endpoint: &HttpEndpoint, prompt: &str) -> Result<String, GenerateError> {
    let url = endpoint.completions_url();
    let agent: ureq::Agent = ureq::Agent::config_builder()
        .timeout_global(Some(Duration::from_millis(endpoint.timeout_ms)))
        .http_status_as_error(false)
        .build()
        .into();
    let body = serde_json::json!({
        "model": endpoint.model,
        "prompt": prompt,
        "max_tokens": endpoint.max_tokens,
    });
    let mut response = agent
        .post(&url)
        .send_json(&body)
        .map_err(|e| GenerateError::HttpTransport {
            endpoint: url.clone(),
            message: e.to_string(),
        })?;
    let status = response.status().as_u16();
    if !(200..300).contains(&status) {
        return Err(GenerateError::HttpStatus {
            endpoint: url,
            status,
        });
    }
    let parsed: serde_json::Value =
        response
            .body_mut()
            .read_json()
            .map_err(|e| GenerateError::MalformedResponse {
                endpoint: url.clone(),
                message: e.to_string(),
            })?;
    let text = parsed
        .get("choices")
        .and_then(|c| c.get(0))
        .and_then(|c| c.get("text"))
        .and_then(|t| t.as_str())
        .ok_or_else(|| GenerateError::MalformedResponse {
            endpoint: url,
            message: "missing choices[0].text".to_string(),
        })?;
    Ok(text.trim().to_string())
}

#[cfg(test)]
mod tests {
    use super::*;

    const SAMPLE: &str = "\
# recorded outputs
PROMPT: The Eiffel Tower is located in
GENERATED: The Eiffel Tower is located in London.
EXPECTED: The Eiffel Tower is located in Paris.

PROMPT: Mount Everest is in
GENERATED: Mount Everest is in India.
";

    #[test]
    fn parses_records_and_comments() {
        let cases = parse_fixture(SAMPLE).unwrap();
        assert_eq!(cases.len(), 2);
        assert_eq!(cases[0].prompt, "The Eiffel Tower is located in");
        assert_eq!(
            cases[0].expected_corrected.as_deref(),
            Some("The Eiffel Tower is located in Paris.")
        );
        assert_eq!(cases[1].expected_corrected, None);
    }

    #[test]
    fn empty_fixture_is_empty_list() {
        assert!(parse_fixture("").unwrap().is_empty());
        assert!(parse_fixture("\n# nothing\n\n").unwrap().is_empty());
    }

    #[test]
    fn duplicate_prompt_is_named() {
        let text = "PROMPT: A\nGENERATED: a\n\nPROMPT: A\nGENERATED: b\n";
        match parse_fixture(text) {
            Err(GenerateError::DuplicatePrompt { prompt, line }) => {
                assert_eq!(prompt, "A");
                assert_eq!(line, 4);
            }
            other => panic!("expected duplicate error, got {other:?}"),
        }
    }

    #[test]
    fn record_without_generated_is_an_error() {
        let err = parse_fixture("PROMPT: A\n\n").unwrap_err();
        assert!(matches!(err, GenerateError::FixtureParse { line: 1, .. }));
    }

    #[test]
    fn unknown_line_reports_number() {
        let err = parse_fixture("PROMPT: A\nWHAT: x\n").unwrap_err();
        assert!(matches!(err, GenerateError::FixtureParse { line: 2, .. }));
    }

    #[test]
    fn fixture_generator_returns_stored_text() {
        let mut file = tempfile::NamedTempFile::new().unwrap();
        std::io::Write::write_all(&mut file, SAMPLE.as_bytes()).unwrap();
        let mut generator =
            Generator::from_source(&GenerationSource::Fixture(file.path().to_path_buf())).unwrap();
        assert_eq!(
            generator.generate("The Eiffel Tower is located in").unwrap(),
            "The Eiffel Tower is located in London."
        );
        // deterministic across calls
        assert_eq!(
            generator.generate("The Eiffel Tower is located in").unwrap(),
            "The Eiffel Tower is located in London."
        );
        assert!(matches!(
            generator.generate("unknown"),
            Err(GenerateError::FixtureMiss(_))
        ));
    }

    #[test]
    fn stream_generator_is_line_passthrough() {
        let mut generator = Generator::from_reader(std::io::Cursor::new("abc\ndef\n"));
        assert_eq!(generator.generate("ignored").unwrap(), "abc");
        assert_eq!(generator.generate("ignored").unwrap(), "def");
        assert!(matches!(
            generator.generate("ignored"),
            Err(GenerateError::StreamExhausted)
        ));
    }

    #[test]
    fn completions_url_is_derived_from_base() {
        assert_eq!(
            HttpEndpoint::new("http://localhost:8000").completions_url(),
            "http://localhost:8000/v1/completions"
        );
        assert_eq!(
            HttpEndpoint::new("http://localhost:8000/").completions_url(),
            "http://localhost:8000/v1/completions"
        );
        assert_eq!(
            HttpEndpoint::new("http://h/v1/completions").completions_url(),
            "http://h/v1/completions"
        );
    }
}
