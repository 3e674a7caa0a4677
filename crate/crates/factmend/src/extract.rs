//! Rule-based claim extraction: ordered surface patterns over naive
//! sentence splits, with byte-span provenance back into the source text.
//!
//! A pattern has the shape `{SUBJECT} <keyword> {OBJECT}`. Within each
//! sentence, templates are tried in priority order and the first match
//! wins, so a sentence yields at most one claim. The subject is the
//! whole prefix before the keyword; the object is the remainder minus
//! trailing sentence punctuation. That is the entire sophistication on
//! offer: no parser, no coreference, nothing clever.

use std::fmt;
use std::str::FromStr;

use thiserror::Error;

use crate::graph::{ObjectKind, ObjectValue, PredicateId};

/// Byte span into the source text. `start` inclusive, `end` exclusive;
/// both always fall on character boundaries.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct Span {
    pub start: usize,
    pub end: usize,
}

impl Span {
    pub fn new(start: usize, end: usize) -> Self {
        Span { start, end }
    }

    pub fn slice<'t>(&self, text: &'t str) -> &'t str {
        &text[self.start..self.end]
    }

    pub fn len(&self) -> usize {
        self.end - self.start
    }

    pub fn is_empty(&self) -> bool {
        self.start == self.end
    }
}

/// One surface pattern binding a keyword to a predicate.
#[derive(Debug, Clone)]
pub struct PatternTemplate {
    id: String,
    predicate: PredicateId,
    object_kind: ObjectKind,
    priority: i32,
    surface: String,
    keyword: String,
}

impl PatternTemplate {
    /// Build a template from its pattern text. The pattern must start
    /// with `{SUBJECT}`, end with `{OBJECT}`, and carry a non-blank
    /// keyword between the two slots.
    pub fn new(
        id: impl Into<String>,
        predicate: PredicateId,
        object_kind: ObjectKind,
        priority: i32,
        surface: impl Into<String>,
    ) -> Result<Self, TemplateError> {
        let id = id.into();
        let surface = surface.into();
        if surface.matches("{SUBJECT}").count() != 1 || surface.matches("{OBJECT}").count() != 1 {
            return Err(TemplateError::SlotCount(surface));
        }
        let keyword = surface
            .strip_prefix("{SUBJECT}")
            .and_then(|s| s.strip_suffix("{OBJECT}"))
            .ok_or_else(|| TemplateError::Shape(surface.clone()))?
            .to_string();
        if keyword.trim().is_empty() {
            return Err(TemplateError::BlankKeyword(surface));
        }
        Ok(PatternTemplate {
            id,
            predicate,
            object_kind,
            priority,
            surface,
            keyword,
        })
    }

    pub fn id(&self) -> &str {
        &self.id
    }

    pub fn predicate(&self) -> &PredicateId {
        &self.predicate
    }

    pub fn object_kind(&self) -> ObjectKind {
        self.object_kind
    }

    pub fn priority(&self) -> i32 {
        self.priority
    }

    pub fn surface(&self) -> &str {
        &self.surface
    }

    /// The literal text between the two slots, spaces included.
    pub fn keyword(&self) -> &str {
        &self.keyword
    }
}

#[derive(Debug, Error, PartialEq, Eq)]
pub enum TemplateError {
    #[error("pattern `{0}` must contain exactly one {{SUBJECT}} and one {{OBJECT}} slot")]
    SlotCount(String),
    #[error("pattern `{0}` must have the shape `{{SUBJECT}} <keyword> {{OBJECT}}`")]
    Shape(String),
    #[error("pattern `{0}` has a blank keyword")]
    BlankKeyword(String),
    #[error("template file line {line}: {message}")]
    File { line: usize, message: String },
    #[error("duplicate template priority {priority} (line {line})")]
    DuplicatePriority { priority: i32, line: usize },
}

/// An extracted assertion with byte-span provenance.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Claim {
    pub sentence_span: Span,
    pub subject_surface: String,
    pub subject_span: Span,
    pub object_surface: String,
    pub object_span: Span,
    pub predicate: PredicateId,
    pub template_id: String,
    pub object_kind: ObjectKind,
}

/// Failure to read a Year or Quantity literal out of an object surface.
#[derive(Debug, Error, PartialEq, Eq)]
pub enum LiteralError {
    #[error("`{0}` is not a 1-4 digit year")]
    BadYear(String),
    #[error("`{0}` is not a recognized Celsius quantity")]
    BadQuantity(String),
    #[error("object kind {0} is not a literal")]
    NotLiteral(ObjectKind),
}

/// Parse a Year or Quantity literal from an object surface form.
///
/// Years are 1-4 digit positive integers. Quantities accept
/// `<number> degrees Celsius` and the bare `<number>°C`, both mapping to
/// the `degC` unit.
pub fn parse_object_literal(surface: &str, kind: ObjectKind) -> Result<ObjectValue, LiteralError> {
    match kind {
        ObjectKind::Year => {
            if surface.is_empty()
                || surface.len() > 4
                || !surface.bytes().all(|b| b.is_ascii_digit())
            {
                return Err(LiteralError::BadYear(surface.to_string()));
            }
            let value: u16 = surface
                .parse()
                .map_err(|_| LiteralError::BadYear(surface.to_string()))?;
            ObjectValue::year(value).map_err(|_| LiteralError::BadYear(surface.to_string()))
        }
        ObjectKind::Quantity => {
            let number = surface
                .strip_suffix(" degrees Celsius")
                .or_else(|| surface.strip_suffix("°C"))
                .ok_or_else(|| LiteralError::BadQuantity(surface.to_string()))?;
            let value: f64 = number
                .parse()
                .map_err(|_| LiteralError::BadQuantity(surface.to_string()))?;
            ObjectValue::quantity(value, "degC")
                .map_err(|_| LiteralError::BadQuantity(surface.to_string()))
        }
        ObjectKind::Entity => Err(LiteralError::NotLiteral(kind)),
    }
}

/// The built-in template set: every relation the shipped graph speaks,
/// longer keywords outranking shorter ones so that the generic `is in`
/// never truncates a more specific match.
pub fn default_templates() -> Vec<PatternTemplate> {
    let template = |id: &str, pred: &str, kind, priority, surface: &str| {
        PatternTemplate::new(id, PredicateId::new(pred).unwrap(), kind, priority, surface)
            .expect("built-in template is well-formed")
    };
    vec![
        template(
            "discovered_gravity_in",
            "discoveryLocation",
            ObjectKind::Entity,
            80,
            "{SUBJECT} discovered gravity in {OBJECT}",
        ),
        template(
            "is_the_capital_of",
            "capitalOf",
            ObjectKind::Entity,
            70,
            "{SUBJECT} is the capital of {OBJECT}",
        ),
        template(
            "is_displayed_in",
            "displayedIn",
            ObjectKind::Entity,
            60,
            "{SUBJECT} is displayed in {OBJECT}",
        ),
        template(
            "is_located_in",
            "hasLocation",
            ObjectKind::Entity,
            50,
            "{SUBJECT} is located in {OBJECT}",
        ),
        template(
            "was_built_by",
            "builtBy",
            ObjectKind::Entity,
            40,
            "{SUBJECT} was built by {OBJECT}",
        ),
        template(
            "boils_at",
            "boilsAtCelsius",
            ObjectKind::Quantity,
            30,
            "{SUBJECT} boils at {OBJECT}",
        ),
        template(
            "ended_in",
            "endedInYear",
            ObjectKind::Year,
            20,
            "{SUBJECT} ended in {OBJECT}",
        ),
        template(
            "is_in",
            "isIn",
            ObjectKind::Entity,
            10,
            "{SUBJECT} is in {OBJECT}",
        ),
    ]
}

/// Load templates from the tab-separated file format:
/// `priority <tab> predicate <tab> object_kind <tab> pattern`, one per
/// line, `#` comments and blank lines ignored. Priorities must be unique.
pub fn load_templates(text: &str) -> Result<Vec<PatternTemplate>, TemplateError> {
    let mut templates: Vec<PatternTemplate> = Vec::new();
    for (idx, raw) in text.lines().enumerate() {
        let line_no = idx + 1;
        let line = raw.strip_suffix('\r').unwrap_or(raw);
        if line.trim().is_empty() || line.trim_start().starts_with('#') {
            continue;
        }
        let fields: Vec<&str> = line.split('\t').collect();
        if fields.len() != 4 {
            return Err(TemplateError::File {
                line: line_no,
                message: format!("expected 4 tab-separated fields, got {}", fields.len()),
            });
        }
        let priority: i32 = fields[0].parse().map_err(|_| TemplateError::File {
            line: line_no,
            message: format!("bad priority `{}`", fields[0]),
        })?;
        if templates.iter().any(|t| t.priority == priority) {
            return Err(TemplateError::DuplicatePriority {
                priority,
                line: line_no,
            });
        }
        let predicate = PredicateId::new(fields[1]).map_err(|e| TemplateError::File {
            line: line_no,
            message: e.to_string(),
        })?;
        let object_kind = ObjectKind::from_str(fields[2]).map_err(|message| TemplateError::File {
            line: line_no,
            message,
        })?;
        let pattern = fields[3];
        let id = pattern
            .trim_start_matches("{SUBJECT}")
            .trim_end_matches("{OBJECT}")
            .trim()
            .replace(' ', "_");
        templates.push(PatternTemplate::new(
            id, predicate, object_kind, priority, pattern,
        )?);
    }
    Ok(templates)
}

impl FromStr for ObjectKind {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "Entity" => Ok(ObjectKind::Entity),
            "Year" => Ok(ObjectKind::Year),
            "Quantity" => Ok(ObjectKind::Quantity),
            other => Err(format!(
                "unknown object kind `{other}` (expected Entity|Year|Quantity)"
            )),
        }
    }
}

/// Split text into sentences at `.`, `!`, or `?` followed by whitespace
/// or end of input. Returns byte spans with leading whitespace skipped.
pub fn split_sentences(text: &str) -> Vec<Span> {
    let bytes = text.as_bytes();
    let mut spans = Vec::new();
    let mut start = 0;
    let mut i = 0;
    while i < bytes.len() {
        let b = bytes[i];
        if matches!(b, b'.' | b'!' | b'?') {
            let at_end = i + 1 == bytes.len();
            let before_ws = !at_end && bytes[i + 1].is_ascii_whitespace();
            if at_end || before_ws {
                push_trimmed(text, start, i + 1, &mut spans);
                start = i + 1;
            }
        }
        i += 1;
    }
    if start < bytes.len() {
        push_trimmed(text, start, bytes.len(), &mut spans);
    }
    spans
}

fn push_trimmed(text: &str, start: usize, end: usize, spans: &mut Vec<Span>) {
    let slice = &text[start..end];
    let trimmed_front = slice.len() - slice.trim_start().len();
    let trimmed_back = slice.len() - slice.trim_end().len();
    let s = start + trimmed_front;
    let e = end - trimmed_back;
    if s < e {
        spans.push(Span::new(s, e));
    }
}

/// Extract at most one claim per sentence, trying `templates` in
/// priority order. Pure: identical inputs give identical claims.
pub fn extract_claims(text: &str, templates: &[PatternTemplate]) -> Vec<Claim> {
    let mut ordered: Vec<&PatternTemplate> = templates.iter().collect();
    ordered.sort_by_key(|t| std::cmp::Reverse(t.priority));
    let mut claims = Vec::new();
    for sentence in split_sentences(text) {
        if let Some(claim) = extract_from_sentence(text, sentence, &ordered) {
            claims.push(claim);
        }
    }
    claims
}

fn extract_from_sentence(
    text: &str,
    sentence: Span,
    ordered: &[&PatternTemplate],
) -> Option<Claim> {
    let body = sentence.slice(text);
    for template in ordered {
        let Some(keyword_at) = body.find(template.keyword()) else {
            continue;
        };
        // subject: the whole prefix before the keyword, whitespace-trimmed
        let prefix = &body[..keyword_at];
        let subject_lead = prefix.len() - prefix.trim_start().len();
        let subject_text = prefix.trim();
        if subject_text.is_empty() {
            continue;
        }
        let subject_span = Span::new(
            sentence.start + subject_lead,
            sentence.start + subject_lead + subject_text.len(),
        );
        // object: the remainder, minus trailing sentence punctuation
        let object_from = keyword_at + template.keyword().len();
        let tail = &body[object_from..];
        let object_lead = tail.len() - tail.trim_start().len();
        let object_text = tail
            .trim()
            .trim_end_matches(['.', '!', '?'])
            .trim_end();
        if object_text.is_empty() {
            continue;
        }
        let object_start = sentence.start + object_from + object_lead;
        let object_span = Span::new(object_start, object_start + object_text.len());
        // literal objects must actually parse or the sentence is abandoned
        if matches!(template.object_kind(), ObjectKind::Year | ObjectKind::Quantity)
            && parse_object_literal(object_text, template.object_kind()).is_err()
        {
            return None;
        }
        return Some(Claim {
            sentence_span: sentence,
            subject_surface: subject_text.to_string(),
            subject_span,
            object_surface: object_text.to_string(),
            object_span,
            predicate: template.predicate().clone(),
            template_id: template.id().to_string(),
            object_kind: template.object_kind(),
        });
    }
    None
}

impl fmt::Display for Claim {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(
            f,
            "({}, {}, {})",
            self.subject_surface, self.predicate, self.object_surface
        )
    }
}
