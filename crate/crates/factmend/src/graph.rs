//! RDF-style triple store: parse, index, query, and ablate.
//!
//! The on-disk format is a strict line-oriented subset of N-Triples plus
//! `@label` and `@alias` directives (see [`KnowledgeGraph::parse`]).
//! Malformed lines become [`Diagnostic`]s rather than hard errors: a
//! partially loaded graph is a normal operating condition, and the
//! corrector falls back gracefully wherever knowledge is missing.

use std::collections::{HashMap, HashSet};
use std::fmt;
use std::hash::{Hash, Hasher};
use std::path::Path;

use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use thiserror::Error;

/// Canonical entity identifier, e.g. `Eiffel_Tower`.
///
/// Never empty, never contains whitespace; underscores join words.
/// Comparison is exact byte equality.
#[derive(Debug, Clone, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct EntityId(String);

impl EntityId {
    pub fn new(id: impl Into<String>) -> Result<Self, IdError> {
        let id = id.into();
        if id.is_empty() {
            return Err(IdError::Empty);
        }
        if id.chars().any(char::is_whitespace) {
            return Err(IdError::Whitespace(id));
        }
        Ok(EntityId(id))
    }

    pub fn as_str(&self) -> &str {
        &self.0
    }

    /// Surface form synthesized from the identifier: underscores as spaces.
    pub fn default_label(&self) -> String {
        self.0.replace('_', " ")
    }
}

impl fmt::Display for EntityId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.0)
    }
}

/// Canonical predicate name, e.g. `hasLocation`, plus its functionality.
///
/// A functional predicate permits at most one object per subject, which is
/// what makes "the correct value" well-defined for the corrector. Identity
/// (equality, hashing, ordering) is the name alone; the flag is a property
/// of the vocabulary, not of the identity.
#[derive(Debug, Clone)]
pub struct PredicateId {
    id: String,
    functional: bool,
}

impl PredicateId {
    /// A functional predicate (the default vocabulary is all-functional).
    pub fn new(id: impl Into<String>) -> Result<Self, IdError> {
        let id = id.into();
        if id.is_empty() {
            return Err(IdError::Empty);
        }
        if id.chars().any(char::is_whitespace) {
            return Err(IdError::Whitespace(id));
        }
        Ok(PredicateId {
            id,
            functional: true,
        })
    }

    pub fn with_functional(mut self, functional: bool) -> Self {
        self.functional = functional;
        self
    }

    pub fn as_str(&self) -> &str {
        &self.id
    }

    pub fn is_functional(&self) -> bool {
        self.functional
    }
}

impl PartialEq for PredicateId {
    fn eq(&self, other: &Self) -> bool {
        self.id == other.id
    }
}

impl Eq for PredicateId {}

impl Hash for PredicateId {
    fn hash<H: Hasher>(&self, state: &mut H) {
        self.id.hash(state);
    }
}

impl PartialOrd for PredicateId {
    fn partial_cmp(&self, other: &Self) -> Option<std::cmp::Ordering> {
        Some(self.cmp(other))
    }
}

impl Ord for PredicateId {
    fn cmp(&self, other: &Self) -> std::cmp::Ordering {
        self.id.cmp(&other.id)
    }
}

impl fmt::Display for PredicateId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.id)
    }
}

/// The kind of value a predicate expects on its object side.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum ObjectKind {
    Entity,
    Year,
    Quantity,
}

impl fmt::Display for ObjectKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            ObjectKind::Entity => f.write_str("Entity"),
            ObjectKind::Year => f.write_str("Year"),
            ObjectKind::Quantity => f.write_str("Quantity"),
        }
    }
}

/// Typed object of a triple: an entity reference, a year, or a quantity
/// with a unit.
#[derive(Debug, Clone)]
pub enum ObjectValue {
    Entity(EntityId),
    /// Positive calendar year, at most 9999.
    Year(u16),
    /// Numeric value with a non-empty unit string, e.g. `degC`.
    Quantity { value: f64, unit: String },
}

impl ObjectValue {
    pub fn year(value: u16) -> Result<Self, IdError> {
        if value == 0 || value > 9999 {
            return Err(IdError::YearRange(value));
        }
        Ok(ObjectValue::Year(value))
    }

    pub fn quantity(value: f64, unit: impl Into<String>) -> Result<Self, IdError> {
        let unit = unit.into();
        if unit.is_empty() {
            return Err(IdError::EmptyUnit);
        }
        if !value.is_finite() {
            return Err(IdError::NonFiniteQuantity);
        }
        // normalize -0.0 so Eq/Hash agree with ==
        let value = if value == 0.0 { 0.0 } else { value };
        Ok(ObjectValue::Quantity { value, unit })
    }

    pub fn kind(&self) -> ObjectKind {
        match self {
            ObjectValue::Entity(_) => ObjectKind::Entity,
            ObjectValue::Year(_) => ObjectKind::Year,
            ObjectValue::Quantity { .. } => ObjectKind::Quantity,
        }
    }

    pub fn as_entity(&self) -> Option<&EntityId> {
        match self {
            ObjectValue::Entity(id) => Some(id),
            _ => None,
        }
    }

    /// Object token as it appears on a fact line.
    pub fn to_token(&self) -> String {
        match self {
            ObjectValue::Entity(id) => format!("<{id}>"),
            ObjectValue::Year(y) => format!("\"{y}\"^^year"),
            ObjectValue::Quantity { value, unit } => format!("\"{value} {unit}\"^^quantity"),
        }
    }
}

impl PartialEq for ObjectValue {
    fn eq(&self, other: &Self) -> bool {
        match (self, other) {
            (ObjectValue::Entity(a), ObjectValue::Entity(b)) => a == b,
            (ObjectValue::Year(a), ObjectValue::Year(b)) => a == b,
            (
                ObjectValue::Quantity { value: a, unit: ua },
                ObjectValue::Quantity { value: b, unit: ub },
            ) => a.to_bits() == b.to_bits() && ua == ub,
            _ => false,
        }
    }
}

impl Eq for ObjectValue {}

impl Hash for ObjectValue {
    fn hash<H: Hasher>(&self, state: &mut H) {
        match self {
            ObjectValue::Entity(id) => {
                0u8.hash(state);
                id.hash(state);
            }
            ObjectValue::Year(y) => {
                1u8.hash(state);
                y.hash(state);
            }
            ObjectValue::Quantity { value, unit } => {
                2u8.hash(state);
                value.to_bits().hash(state);
                unit.hash(state);
            }
        }
    }
}

/// One subject–predicate–object fact.
#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct Triple {
    pub subject: EntityId,
    pub predicate: PredicateId,
    pub object: ObjectValue,
}

impl Triple {
    pub fn new(
        subject: EntityId,
        predicate: PredicateId,
        object: ObjectValue,
    ) -> Result<Self, IdError> {
        if let ObjectValue::Entity(obj) = &object {
            if obj == &subject {
                return Err(IdError::ReflexiveTriple(subject.0));
            }
        }
        Ok(Triple {
            subject,
            predicate,
            object,
        })
    }

    /// The fact line for this triple, also the canonical sort key.
    pub fn to_line(&self) -> String {
        format!(
            "<{}> <{}> {} .",
            self.subject,
            self.predicate,
            self.object.to_token()
        )
    }
}

/// Construction error for identifiers, literals, and triples.
#[derive(Debug, Error, PartialEq, Eq)]
pub enum IdError {
    #[error("identifier must not be empty")]
    Empty,
    #[error("identifier `{0}` contains whitespace")]
    Whitespace(String),
    #[error("year {0} out of range (1..=9999)")]
    YearRange(u16),
    #[error("quantity unit must not be empty")]
    EmptyUnit,
    #[error("quantity value must be finite")]
    NonFiniteQuantity,
    #[error("reflexive triple on `{0}`")]
    ReflexiveTriple(String),
}

/// A skipped line during parsing, with its 1-based line number.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Diagnostic {
    pub line: usize,
    pub message: String,
}

impl fmt::Display for Diagnostic {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "line {}: {}", self.line, self.message)
    }
}

/// Graph-level failures. Parse problems on individual lines are
/// [`Diagnostic`]s, not errors; only invalid UTF-8 or I/O aborts a load.
#[derive(Debug, Error)]
pub enum GraphError {
    #[error("graph document is not valid UTF-8: {0}")]
    InvalidUtf8(#[from] std::str::Utf8Error),
    #[error("failed to read graph file `{path}`: {source}")]
    Io {
        path: String,
        source: std::io::Error,
    },
    #[error("graph integrity violated: {0}")]
    Integrity(String),
}

/// Indexed triple set plus label and alias tables.
///
/// Immutable after load by convention: the ablation operations return new
/// graph values and never touch the input, so any number of threads may
/// share a graph read-only.
#[derive(Debug, Clone, Default)]
pub struct KnowledgeGraph {
    triples: HashSet<Triple>,
    sp_index: HashMap<(EntityId, PredicateId), Vec<ObjectValue>>,
    labels: HashMap<EntityId, String>,
    aliases: HashMap<String, EntityId>,
}

impl KnowledgeGraph {
    pub fn new() -> Self {
        Self::default()
    }

    /// Parse a graph document. Returns the graph and one diagnostic per
    /// skipped line; fails only on invalid UTF-8.
    pub fn parse(bytes: &[u8]) -> Result<(Self, Vec<Diagnostic>), GraphError> {
        let text = std::str::from_utf8(bytes)?;
        Ok(Self::parse_str(text))
    }

    /// Parse an already-decoded graph document.
    pub fn parse_str(text: &str) -> (Self, Vec<Diagnostic>) {
        let mut graph = KnowledgeGraph::new();
        let mut diagnostics = Vec::new();
        for (idx, raw) in text.lines().enumerate() {
            let line_no = idx + 1;
            let line = raw.strip_suffix('\r').unwrap_or(raw);
            if line.trim().is_empty() || line.trim_start().starts_with('#') {
                continue;
            }
            let outcome = if let Some(rest) = line.strip_prefix("@label ") {
                parse_label_line(rest).map(|(id, surface)| {
                    graph.set_label(id, surface);
                })
            } else if let Some(rest) = line.strip_prefix("@alias ") {
                parse_alias_line(rest).and_then(|(surface, id)| graph.add_alias(surface, id))
            } else if line.starts_with('<') {
                parse_fact_line(line).and_then(|triple| graph.insert_triple(triple).map(|_| ()))
            } else {
                Err(format!(
                    "unrecognized line (expected fact, @label, @alias, comment, or blank)"
                ))
            };
            if let Err(message) = outcome {
                diagnostics.push(Diagnostic {
                    line: line_no,
                    message,
                });
            }
        }
        (graph, diagnostics)
    }

    /// Load and parse a graph file.
    pub fn load(path: impl AsRef<Path>) -> Result<(Self, Vec<Diagnostic>), GraphError> {
        let path = path.as_ref();
        let bytes = std::fs::read(path).map_err(|source| GraphError::Io {
            path: path.display().to_string(),
            source,
        })?;
        Self::parse(&bytes)
    }

    /// Insert a triple, keeping set semantics and the sp-index in step.
    ///
    /// Returns `Ok(false)` for an exact duplicate. A second, different
    /// object under a functional predicate is rejected.
    pub fn insert_triple(&mut self, triple: Triple) -> Result<bool, String> {
        if self.triples.contains(&triple) {
            return Ok(false);
        }
        let key = (triple.subject.clone(), triple.predicate.clone());
        let objects = self.sp_index.entry(key).or_default();
        if triple.predicate.is_functional() && !objects.is_empty() {
            return Err(format!(
                "functional predicate conflict: <{}> <{}> already maps to {}",
                triple.subject,
                triple.predicate,
                objects[0].to_token()
            ));
        }
        objects.push(triple.object.clone());
        self.ensure_label(&triple.subject);
        if let ObjectValue::Entity(obj) = &triple.object {
            self.ensure_label(obj);
        }
        self.triples.insert(triple);
        Ok(true)
    }

    /// Set (or override) the primary surface form for an entity.
    pub fn set_label(&mut self, id: EntityId, surface: String) {
        self.labels.insert(id, surface);
    }

    /// Register an alias surface form for an entity. A surface may map to
    /// only one entity; conflicting re-registration is rejected.
    pub fn add_alias(&mut self, surface: String, id: EntityId) -> Result<(), String> {
        if let Some(existing) = self.aliases.get(&surface) {
            if existing != &id {
                return Err(format!(
                    "alias \"{surface}\" already maps to <{existing}>, cannot remap to <{id}>"
                ));
            }
            return Ok(());
        }
        self.ensure_label(&id);
        self.aliases.insert(surface, id);
        Ok(())
    }

    fn ensure_label(&mut self, id: &EntityId) {
        if !self.labels.contains_key(id) {
            self.labels.insert(id.clone(), id.default_label());
        }
    }

    /// The stored object for `(subject, predicate)`, or `None` when no
    /// triple exists. A functional predicate with more than one object is
    /// a corrupted index and reported as an integrity error, never as
    /// "absent".
    pub fn lookup_object(
        &self,
        subject: &EntityId,
        predicate: &PredicateId,
    ) -> Result<Option<&ObjectValue>, GraphError> {
        let key = (subject.clone(), predicate.clone());
        match self.sp_index.get(&key) {
            None => Ok(None),
            Some(objects) if objects.is_empty() => Ok(None),
            Some(objects) if objects.len() == 1 => Ok(Some(&objects[0])),
            Some(objects) => Err(GraphError::Integrity(format!(
                "<{subject}> <{predicate}> has {} objects; expected at most one",
                objects.len()
            ))),
        }
    }

    /// Exact triple membership.
    pub fn contains(&self, triple: &Triple) -> bool {
        self.triples.contains(triple)
    }

    pub fn triple_count(&self) -> usize {
        self.triples.len()
    }

    pub fn label_count(&self) -> usize {
        self.labels.len()
    }

    pub fn alias_count(&self) -> usize {
        self.aliases.len()
    }

    pub fn triples(&self) -> impl Iterator<Item = &Triple> {
        self.triples.iter()
    }

    pub fn labels(&self) -> impl Iterator<Item = (&EntityId, &str)> {
        self.labels.iter().map(|(id, s)| (id, s.as_str()))
    }

    pub fn aliases(&self) -> impl Iterator<Item = (&str, &EntityId)> {
        self.aliases.iter().map(|(s, id)| (s.as_str(), id))
    }

    pub fn label_of(&self, id: &EntityId) -> Option<&str> {
        self.labels.get(id).map(String::as_str)
    }

    /// New graph with `⌊fraction × |triples|⌋` triples removed, chosen by a
    /// seeded shuffle of the triples in canonical text order. Labels and
    /// aliases are retained. Deterministic in `(graph, fraction, seed)`.
    pub fn remove_fraction(&self, fraction: f64, seed: u64) -> KnowledgeGraph {
        assert!(
            (0.0..=1.0).contains(&fraction),
            "fraction must be within [0, 1], got {fraction}"
        );
        let mut ordered: Vec<&Triple> = self.triples.iter().collect();
        ordered.sort_by_key(|t| t.to_line());
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        ordered.shuffle(&mut rng);
        let k = (fraction * self.triples.len() as f64).floor() as usize;
        let removed: HashSet<&Triple> = ordered.into_iter().take(k).collect();
        self.retain_triples(|t| !removed.contains(t))
    }

    /// New graph with every triple whose subject matches removed; labels
    /// and aliases (and everything else) unchanged.
    pub fn remove_entity_facts(&self, subject: &EntityId) -> KnowledgeGraph {
        self.retain_triples(|t| &t.subject != subject)
    }

    fn retain_triples(&self, keep: impl Fn(&Triple) -> bool) -> KnowledgeGraph {
        let mut out = KnowledgeGraph {
            triples: HashSet::new(),
            sp_index: HashMap::new(),
            labels: self.labels.clone(),
            aliases: self.aliases.clone(),
        };
        for triple in &self.triples {
            if keep(triple) {
                let key = (triple.subject.clone(), triple.predicate.clone());
                out.sp_index.entry(key).or_default().push(triple.object.clone());
                out.triples.insert(triple.clone());
            }
        }
        out
    }

    /// Check every structural invariant, returning one message per
    /// violation. An empty result means the graph is sound.
    pub fn verify_integrity(&self) -> Vec<String> {
        let mut problems = Vec::new();
        let mut rebuilt: HashMap<(EntityId, PredicateId), Vec<ObjectValue>> = HashMap::new();
        for t in &self.triples {
            rebuilt
                .entry((t.subject.clone(), t.predicate.clone()))
                .or_default()
                .push(t.object.clone());
            if self.labels.get(&t.subject).is_none() {
                problems.push(format!("subject <{}> has no label", t.subject));
            }
            if let ObjectValue::Entity(obj) = &t.object {
                if self.labels.get(obj).is_none() {
                    problems.push(format!("object <{obj}> has no label"));
                }
            }
        }
        for ((s, p), objects) in &rebuilt {
            if p.is_functional() && objects.len() > 1 {
                problems.push(format!(
                    "functional predicate <{p}> holds {} objects for <{s}>",
                    objects.len()
                ));
            }
            match self.sp_index.get(&(s.clone(), p.clone())) {
                None => problems.push(format!("sp_index missing entry for (<{s}>, <{p}>)")),
                Some(indexed) => {
                    let a: HashSet<&ObjectValue> = indexed.iter().collect();
                    let b: HashSet<&ObjectValue> = objects.iter().collect();
                    if a != b {
                        problems.push(format!("sp_index disagrees with triples for (<{s}>, <{p}>)"));
                    }
                }
            }
        }
        for ((s, p), indexed) in &self.sp_index {
            if !indexed.is_empty() && !rebuilt.contains_key(&(s.clone(), p.clone())) {
                problems.push(format!("sp_index has stale entry for (<{s}>, <{p}>)"));
            }
        }
        for (surface, id) in &self.aliases {
            if self.labels.get(id).is_none() {
                problems.push(format!("alias \"{surface}\" targets unlabeled entity <{id}>"));
            }
        }
        problems
    }

    /// Serialize to the document format this graph was parsed from.
    /// Deterministic: facts, labels, and aliases each in sorted order.
    pub fn serialize(&self) -> String {
        let mut out = String::new();
        let mut facts: Vec<String> = self.triples.iter().map(Triple::to_line).collect();
        facts.sort();
        for line in facts {
            out.push_str(&line);
            out.push('\n');
        }
        let mut labels: Vec<_> = self.labels.iter().collect();
        labels.sort_by_key(|(id, _)| id.as_str());
        for (id, surface) in labels {
            out.push_str(&format!("@label <{id}> \"{surface}\"\n"));
        }
        let mut aliases: Vec<_> = self.aliases.iter().collect();
        aliases.sort_by_key(|(surface, _)| surface.as_str());
        for (surface, id) in aliases {
            out.push_str(&format!("@alias \"{surface}\" <{id}>\n"));
        }
        out
    }
}

fn parse_angle_token(token: &str) -> Result<&str, String> {
    token
        .strip_prefix('<')
        .and_then(|t| t.strip_suffix('>'))
        .ok_or_else(|| format!("expected `<...>` token, got `{token}`"))
}

fn parse_quoted(token: &str) -> Result<&str, String> {
    let inner = token
        .strip_prefix('"')
        .and_then(|t| t.strip_suffix('"'))
        .ok_or_else(|| format!("expected `\"...\"` token, got `{token}`"))?;
    if inner.contains('"') {
        return Err(format!("embedded quote in `{token}`"));
    }
    Ok(inner)
}

fn parse_object_token(token: &str) -> Result<ObjectValue, String> {
    if token.starts_with('<') {
        let id = parse_angle_token(token)?;
        return Ok(ObjectValue::Entity(
            EntityId::new(id).map_err(|e| e.to_string())?,
        ));
    }
    if let Some(body) = token.strip_suffix("^^year") {
        let digits = parse_quoted(body)?;
        if digits.is_empty() || digits.len() > 4 || !digits.bytes().all(|b| b.is_ascii_digit()) {
            return Err(format!("year literal must be 1-4 digits, got `{digits}`"));
        }
        let value: u16 = digits.parse().map_err(|_| format!("bad year `{digits}`"))?;
        return ObjectValue::year(value).map_err(|e| e.to_string());
    }
    if let Some(body) = token.strip_suffix("^^quantity") {
        let inner = parse_quoted(body)?;
        let (num, unit) = inner
            .split_once(' ')
            .ok_or_else(|| format!("quantity literal must be `number unit`, got `{inner}`"))?;
        let value: f64 = num
            .parse()
            .map_err(|_| format!("bad quantity number `{num}`"))?;
        return ObjectValue::quantity(value, unit).map_err(|e| e.to_string());
    }
    Err(format!("unrecognized object token `{token}`"))
}

/// `<Subject> <predicate> <Object> .` with exactly one space between tokens.
fn parse_fact_line(line: &str) -> Result<Triple, String> {
    let body = line
        .strip_suffix(" .")
        .ok_or_else(|| "fact line must end with ` .`".to_string())?;
    let (subject_tok, rest) = body
        .split_once(' ')
        .ok_or_else(|| "fact line missing predicate and object".to_string())?;
    let (predicate_tok, object_tok) = rest
        .split_once(' ')
        .ok_or_else(|| "fact line missing object".to_string())?;
    if object_tok.is_empty() {
        return Err("fact line missing object".to_string());
    }
    // quantity literals contain one interior space; anything else means
    // the line has stray whitespace
    if object_tok.contains(' ') && !object_tok.ends_with("^^quantity") {
        return Err("fact line has extra tokens or double spaces".to_string());
    }
    let subject = EntityId::new(parse_angle_token(subject_tok)?).map_err(|e| e.to_string())?;
    let predicate =
        PredicateId::new(parse_angle_token(predicate_tok)?).map_err(|e| e.to_string())?;
    let object = parse_object_token(object_tok)?;
    Triple::new(subject, predicate, object).map_err(|e| e.to_string())
}

/// `<EntityId> "surface form"` (after the `@label ` prefix).
fn parse_label_line(rest: &str) -> Result<(EntityId, String), String> {
    let (id_tok, surface_tok) = rest
        .split_once(' ')
        .ok_or_else(|| "@label requires `<EntityId> \"surface\"`".to_string())?;
    let id = EntityId::new(parse_angle_token(id_tok)?).map_err(|e| e.to_string())?;
    let surface = parse_quoted(surface_tok)?;
    if surface.is_empty() {
        return Err("label surface form must not be empty".to_string());
    }
    Ok((id, surface.to_string()))
}

/// `"surface form" <EntityId>` (after the `@alias ` prefix).
fn parse_alias_line(rest: &str) -> Result<(String, EntityId), String> {
    let close = rest
        .strip_prefix('"')
        .and_then(|r| r.find('"'))
        .ok_or_else(|| "@alias requires `\"surface\" <EntityId>`".to_string())?;
    let surface = &rest[1..close + 1];
    let tail = &rest[close + 2..];
    let id_tok = tail
        .strip_prefix(' ')
        .ok_or_else(|| "@alias requires a space before the entity token".to_string())?;
    if surface.is_empty() {
        return Err("alias surface form must not be empty".to_string());
    }
    let id = EntityId::new(parse_angle_token(id_tok)?).map_err(|e| e.to_string())?;
    Ok((surface.to_string(), id))
}
