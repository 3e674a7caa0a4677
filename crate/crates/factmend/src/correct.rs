//! Claim validation and span-confined rewriting.
//!
//! A claim is validated by resolving its subject, looking up the stored
//! object for `(subject, predicate)`, and comparing. Corrections replace
//! only the erroneous object span; everything outside corrected spans is
//! byte-identical to the input. No triple, no touch: missing knowledge,
//! unresolved subjects, and fuzzy ties all fall back to the original text.

use std::time::Instant;

use thiserror::Error;

use crate::extract::{extract_claims, Claim, PatternTemplate};
use crate::graph::{GraphError, KnowledgeGraph, ObjectKind, ObjectValue, Triple};
use crate::resolve::{resolve, Resolution, ResolutionPolicy, ResolutionResult};

/// Per-claim outcome.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum VerdictStatus {
    /// The graph confirms the claim.
    Supported,
    /// The graph contradicts the claim; the object span was rewritten.
    Corrected,
    /// No triple for (subject, predicate): fall back, text untouched.
    NoKnowledge,
    /// The subject surface did not resolve to any entity: fall back.
    UnresolvedSubject,
    /// A fuzzy tie made resolution ambiguous: fall back, never guess.
    AmbiguousFuzzy,
}

impl VerdictStatus {
    pub fn as_str(self) -> &'static str {
        match self {
            VerdictStatus::Supported => "supported",
            VerdictStatus::Corrected => "corrected",
            VerdictStatus::NoKnowledge => "no_knowledge",
            VerdictStatus::UnresolvedSubject => "unresolved_subject",
            VerdictStatus::AmbiguousFuzzy => "ambiguous_fuzzy",
        }
    }
}

impl std::fmt::Display for VerdictStatus {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(self.as_str())
    }
}

/// One claim's verdict, with everything needed to audit it: the evidence
/// triple, both object values, the substituted text, and how the subject
/// resolved.
#[derive(Debug, Clone, PartialEq)]
pub struct Verdict {
    pub status: VerdictStatus,
    pub claim: Claim,
    /// Justifying triple; present exactly when the graph held one.
    pub evidence: Option<Triple>,
    /// The claim's own object, where it could be interpreted.
    pub original_object: Option<ObjectValue>,
    /// The stored object substituted into the text (Corrected only).
    pub corrected_object: Option<ObjectValue>,
    /// Rendered replacement text (Corrected only).
    pub replacement: Option<String>,
    /// How the subject surface resolved.
    pub resolution: Option<ResolutionResult>,
}

/// Full audit trace of one text's pass through the pipeline.
#[derive(Debug, Clone)]
pub struct CorrectionRecord {
    pub input_text: String,
    pub output_text: String,
    pub verdicts: Vec<Verdict>,
    /// Correction-pipeline wall time only (extraction + validation +
    /// substitution); generation is outside the measurement.
    pub elapsed_ms: f64,
    pub policy: ResolutionPolicy,
}

impl CorrectionRecord {
    pub fn corrected_count(&self) -> usize {
        self.verdicts
            .iter()
            .filter(|v| v.status == VerdictStatus::Corrected)
            .count()
    }
}

/// Span errors are contract violations, not recoverable conditions.
#[derive(Debug, Error)]
pub enum SpanError {
    #[error("object span {start}..{end} out of bounds for text of {len} bytes")]
    OutOfBounds { start: usize, end: usize, len: usize },
    #[error("object span {start}..{end} does not fall on character boundaries")]
    NotCharBoundary { start: usize, end: usize },
}

/// Validate one claim against the graph under the given policy.
pub fn validate_claim(
    claim: &Claim,
    graph: &KnowledgeGraph,
    policy: &ResolutionPolicy,
) -> Result<Verdict, GraphError> {
    let fallback = |status: VerdictStatus, resolution: Option<ResolutionResult>| Verdict {
        status,
        claim: claim.clone(),
        evidence: None,
        original_object: None,
        corrected_object: None,
        replacement: None,
        resolution,
    };

    let subject = match resolve(graph, &claim.subject_surface, policy) {
        Resolution::NotFound => return Ok(fallback(VerdictStatus::UnresolvedSubject, None)),
        Resolution::Ambiguous(_) => return Ok(fallback(VerdictStatus::AmbiguousFuzzy, None)),
        Resolution::Resolved(r) => r,
    };

    let stored = match graph.lookup_object(&subject.entity, &claim.predicate)? {
        None => return Ok(fallback(VerdictStatus::NoKnowledge, Some(subject))),
        Some(object) => object.clone(),
    };
    let evidence = Triple {
        subject: subject.entity.clone(),
        predicate: claim.predicate.clone(),
        object: stored.clone(),
    };

    // interpret the claim's object: entities via resolution under the
    // same policy, literals by value
    let original_object = match claim.object_kind {
        ObjectKind::Entity => match resolve(graph, &claim.object_surface, policy) {
            Resolution::Resolved(r) => Some(ObjectValue::Entity(r.entity)),
            Resolution::NotFound => None,
            Resolution::Ambiguous(_) => {
                return Ok(fallback(VerdictStatus::AmbiguousFuzzy, Some(subject)))
            }
        },
        ObjectKind::Year | ObjectKind::Quantity => {
            crate::extract::parse_object_literal(&claim.object_surface, claim.object_kind).ok()
        }
    };

    if original_object.as_ref() == Some(&stored) {
        return Ok(Verdict {
            status: VerdictStatus::Supported,
            claim: claim.clone(),
            evidence: Some(evidence),
            original_object,
            corrected_object: None,
            replacement: None,
            resolution: Some(subject),
        });
    }

    let replacement = render_object(&stored, graph, &claim.object_surface)?;
    Ok(Verdict {
        status: VerdictStatus::Corrected,
        claim: claim.clone(),
        evidence: Some(evidence),
        original_object,
        corrected_object: Some(stored),
        replacement: Some(replacement),
        resolution: Some(subject),
    })
}

/// Render a stored object as replacement text for the given context
/// surface (the text being replaced).
///
/// Entities render as their graph label; if the replaced surface began
/// with "the "/"The " and the label does not, the article is carried
/// over with its original casing. Quantities in `degC` follow the
/// context's spelling: `degrees Celsius` where the context used it,
/// bare `°C` otherwise.
pub fn render_object(
    value: &ObjectValue,
    graph: &KnowledgeGraph,
    context_surface: &str,
) -> Result<String, GraphError> {
    match value {
        ObjectValue::Entity(id) => {
            let label = graph.label_of(id).ok_or_else(|| {
                GraphError::Integrity(format!("entity <{id}> has no label to render"))
            })?;
            let label_has_article = label.starts_with("the ") || label.starts_with("The ");
            for article in ["the ", "The "] {
                if context_surface.starts_with(article) && !label_has_article {
                    return Ok(format!("{article}{label}"));
                }
            }
            Ok(label.to_string())
        }
        ObjectValue::Year(y) => Ok(y.to_string()),
        ObjectValue::Quantity { value, unit } => {
            if unit == "degC" {
                if context_surface.contains("degrees Celsius") {
                    Ok(format!("{value} degrees Celsius"))
                } else {
                    Ok(format!("{value}°C"))
                }
            } else {
                Ok(format!("{value} {unit}"))
            }
        }
    }
}

/// Replace exactly the claim's object span with `replacement`, leaving
/// every other byte unchanged.
pub fn apply_correction(text: &str, claim: &Claim, replacement: &str) -> Result<String, SpanError> {
    let span = claim.object_span;
    if span.start > span.end || span.end > text.len() {
        return Err(SpanError::OutOfBounds {
            start: span.start,
            end: span.end,
            len: text.len(),
        });
    }
    if !text.is_char_boundary(span.start) || !text.is_char_boundary(span.end) {
        return Err(SpanError::NotCharBoundary {
            start: span.start,
            end: span.end,
        });
    }
    let mut out = String::with_capacity(text.len() - span.len() + replacement.len());
    out.push_str(&text[..span.start]);
    out.push_str(replacement);
    out.push_str(&text[span.end..]);
    Ok(out)
}

/// The full pipeline over one text: extract claims, validate each,
/// rewrite corrected spans right-to-left so earlier offsets stay valid,
/// and time the whole pass.
pub fn correct_text(
    text: &str,
    graph: &KnowledgeGraph,
    templates: &[PatternTemplate],
    policy: &ResolutionPolicy,
) -> Result<CorrectionRecord, GraphError> {
    let started = Instant::now();
    let claims = extract_claims(text, templates);
    let mut verdicts = Vec::with_capacity(claims.len());
    for claim in &claims {
        verdicts.push(validate_claim(claim, graph, policy)?);
    }

    let mut to_apply: Vec<&Verdict> = verdicts
        .iter()
        .filter(|v| v.status == VerdictStatus::Corrected)
        .collect();
    to_apply.sort_by_key(|v| std::cmp::Reverse(v.claim.object_span.start));
    let mut output = text.to_string();
    for verdict in to_apply {
        let replacement = verdict
            .replacement
            .as_deref()
            .expect("corrected verdict carries its replacement");
        output = apply_correction(&output, &verdict.claim, replacement)
            .map_err(|e| GraphError::Integrity(e.to_string()))?;
    }

    Ok(CorrectionRecord {
        input_text: text.to_string(),
        output_text: output,
        verdicts,
        elapsed_ms: started.elapsed().as_secs_f64() * 1000.0,
        policy: policy.clone(),
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::extract::default_templates;
    use crate::graph::{EntityId, PredicateId};
    use crate::resolve::ResolutionMode;

    fn fixture_graph() -> KnowledgeGraph {
        let doc = b"<Eiffel_Tower> <hasLocation> <Paris> .\n\
                    <Mount_Everest> <isIn> <Nepal> .\n\
                    <World_War_II> <endedInYear> \"1945\"^^year .\n\
                    <Water> <boilsAtCelsius> \"100 degC\"^^quantity .\n\
                    <Mona_Lisa> <displayedIn> <Louvre_Museum> .\n\
                    <Taj_Mahal> <builtBy> <Shah_Jahan> .\n\
                    <Statue_of_Liberty> <isIn> <New_York_City> .\n\
                    @alias \"NYC\" <New_York_City>\n";
        let (graph, diags) = KnowledgeGraph::parse(doc).unwrap();
        assert!(diags.is_empty());
        graph
    }

    fn normalized() -> ResolutionPolicy {
        ResolutionPolicy::default()
    }

    fn claim_of(text: &str) -> Claim {
        let claims = extract_claims(text, &default_templates());
        assert_eq!(claims.len(), 1, "expected one claim in {text:?}");
        claims.into_iter().next().unwrap()
    }

    #[test]
    fn wrong_location_is_corrected_with_evidence() {
        let graph = fixture_graph();
        let claim = claim_of("The Eiffel Tower is located in London.");
        let verdict = validate_claim(&claim, &graph, &normalized()).unwrap();
        assert_eq!(verdict.status, VerdictStatus::Corrected);
        let evidence = verdict.evidence.expect("evidence triple");
        assert_eq!(evidence.subject, EntityId::new("Eiffel_Tower").unwrap());
        assert_eq!(
            evidence.object,
            ObjectValue::Entity(EntityId::new("Paris").unwrap())
        );
        assert!(graph.contains(&evidence));
        assert_eq!(verdict.replacement.as_deref(), Some("Paris"));
    }

    #[test]
    fn missing_facts_mean_no_knowledge() {
        let graph = fixture_graph().remove_entity_facts(&EntityId::new("Eiffel_Tower").unwrap());
        let claim = claim_of("The Eiffel Tower is located in London.");
        let verdict = validate_claim(&claim, &graph, &normalized()).unwrap();
        assert_eq!(verdict.status, VerdictStatus::NoKnowledge);
        assert!(verdict.evidence.is_none());
    }

    #[test]
    fn alias_policy_flips_the_nyc_false_positive() {
        let graph = fixture_graph();
        let claim = claim_of("Statue of Liberty is in NYC.");
        // strict string matching cannot see through the alias: the
        // correct sentence gets "corrected"
        let strict = ResolutionPolicy::new(ResolutionMode::Strict);
        let verdict = validate_claim(&claim, &graph, &strict).unwrap();
        assert_eq!(verdict.status, VerdictStatus::Corrected);
        assert_eq!(verdict.replacement.as_deref(), Some("New York City"));
        // alias-aware resolution recognizes the equivalent surface
        let alias = ResolutionPolicy::new(ResolutionMode::AliasAware);
        let verdict = validate_claim(&claim, &graph, &alias).unwrap();
        assert_eq!(verdict.status, VerdictStatus::Supported);
    }

    #[test]
    fn already_correct_text_is_supported() {
        let graph = fixture_graph();
        let claim = claim_of("The Eiffel Tower is located in Paris.");
        let verdict = validate_claim(&claim, &graph, &normalized()).unwrap();
        assert_eq!(verdict.status, VerdictStatus::Supported);
        assert!(verdict.evidence.is_some());
        assert!(verdict.corrected_object.is_none());
    }

    #[test]
    fn render_entity_year_quantity() {
        let graph = fixture_graph();
        let paris = ObjectValue::Entity(EntityId::new("Paris").unwrap());
        assert_eq!(render_object(&paris, &graph, "London").unwrap(), "Paris");
        assert_eq!(render_object(&ObjectValue::Year(1945), &graph, "1947").unwrap(), "1945");
        let boiling = ObjectValue::quantity(100.0, "degC").unwrap();
        assert_eq!(
            render_object(&boiling, &graph, "80 degrees Celsius").unwrap(),
            "100 degrees Celsius"
        );
        assert_eq!(render_object(&boiling, &graph, "80°C").unwrap(), "100°C");
    }

    #[test]
    fn render_carries_leading_article() {
        let graph = fixture_graph();
        let louvre = ObjectValue::Entity(EntityId::new("Louvre_Museum").unwrap());
        assert_eq!(
            render_object(&louvre, &graph, "the British Museum").unwrap(),
            "the Louvre Museum"
        );
        assert_eq!(
            render_object(&louvre, &graph, "The British Museum").unwrap(),
            "The Louvre Museum"
        );
        assert_eq!(
            render_object(&louvre, &graph, "British Museum").unwrap(),
            "Louvre Museum"
        );
    }

    #[test]
    fn render_missing_label_is_integrity_error() {
        let graph = KnowledgeGraph::new();
        let paris = ObjectValue::Entity(EntityId::new("Paris").unwrap());
        assert!(matches!(
            render_object(&paris, &graph, "London"),
            Err(GraphError::Integrity(_))
        ));
    }

    #[test]
    fn apply_correction_examples() {
        let text = "The Eiffel Tower is located in London.";
        let claim = claim_of(text);
        assert_eq!(
            apply_correction(text, &claim, "Paris").unwrap(),
            "The Eiffel Tower is located in Paris."
        );
        assert_eq!(apply_correction(text, &claim, "London").unwrap(), text);
        let text = "Mount Everest is in India.";
        let claim = claim_of(text);
        assert_eq!(
            apply_correction(text, &claim, "Nepal").unwrap(),
            "Mount Everest is in Nepal."
        );
    }

    #[test]
    fn apply_correction_rejects_bad_spans() {
        let text = "Mount Everest is in India.";
        let mut claim = claim_of(text);
        claim.object_span.end = text.len() + 10;
        assert!(matches!(
            apply_correction(text, &claim, "Nepal"),
            Err(SpanError::OutOfBounds { .. })
        ));
    }

    #[test]
    fn correct_text_rewrites_only_the_object() {
        let graph = fixture_graph();
        let record = correct_text(
            "The Taj Mahal was built by Akbar.",
            &graph,
            &default_templates(),
            &normalized(),
        )
        .unwrap();
        assert_eq!(record.output_text, "The Taj Mahal was built by Shah Jahan.");
        assert_eq!(record.corrected_count(), 1);
        assert!(record.elapsed_ms >= 0.0);
    }

    #[test]
    fn no_claims_means_no_change() {
        let graph = fixture_graph();
        let record = correct_text("Nothing factual here.", &graph, &default_templates(), &normalized())
            .unwrap();
        assert_eq!(record.output_text, "Nothing factual here.");
        assert!(record.verdicts.is_empty());
    }

    #[test]
    fn year_correction() {
        let graph = fixture_graph();
        let record = correct_text(
            "World War II ended in 1947.",
            &graph,
            &default_templates(),
            &normalized(),
        )
        .unwrap();
        assert_eq!(record.output_text, "World War II ended in 1945.");
    }

    #[test]
    fn multi_claim_text_applies_right_to_left() {
        let graph = fixture_graph();
        let record = correct_text(
            "The Eiffel Tower is located in London. Mount Everest is in India. Water boils at 80°C.",
            &graph,
            &default_templates(),
            &normalized(),
        )
        .unwrap();
        assert_eq!(
            record.output_text,
            "The Eiffel Tower is located in Paris. Mount Everest is in Nepal. Water boils at 100°C."
        );
        assert_eq!(record.corrected_count(), 3);
        // verdicts stay in claim order even though application is reversed
        assert_eq!(record.verdicts[0].claim.predicate.as_str(), "hasLocation");
        assert_eq!(record.verdicts[2].claim.predicate.as_str(), "boilsAtCelsius");
    }

    #[test]
    fn correcting_twice_changes_nothing_more() {
        let graph = fixture_graph();
        let templates = default_templates();
        for text in [
            "The Eiffel Tower is located in London.",
            "The Mona Lisa is displayed in the British Museum.",
            "Statue of Liberty is in NYC.",
        ] {
            let once = correct_text(text, &graph, &templates, &normalized()).unwrap();
            let twice = correct_text(&once.output_text, &graph, &templates, &normalized()).unwrap();
            assert_eq!(twice.output_text, once.output_text, "not idempotent for {text:?}");
            assert_eq!(twice.corrected_count(), 0);
        }
    }

    #[test]
    fn empty_graph_changes_nothing() {
        let graph = KnowledgeGraph::new();
        let record = correct_text(
            "The Eiffel Tower is located in London.",
            &graph,
            &default_templates(),
            &normalized(),
        )
        .unwrap();
        assert_eq!(record.output_text, record.input_text);
        assert!(record
            .verdicts
            .iter()
            .all(|v| matches!(
                v.status,
                VerdictStatus::NoKnowledge | VerdictStatus::UnresolvedSubject
            )));
    }

    #[test]
    fn unknown_predicate_for_known_subject_is_no_knowledge() {
        let graph = fixture_graph();
        let claim = claim_of("The Eiffel Tower was built by Caesar.");
        let verdict = validate_claim(&claim, &graph, &normalized()).unwrap();
        assert_eq!(verdict.status, VerdictStatus::NoKnowledge);
    }

    #[test]
    fn ambiguous_fuzzy_object_falls_back() {
        let doc = b"<Pot> <isIn> <Kitchen> .\n\
                    @label <Marsh> \"Mars\"\n@label <Marzh> \"Marz\"\n";
        let (graph, _) = KnowledgeGraph::parse(doc).unwrap();
        let policy = ResolutionPolicy::new(ResolutionMode::Fuzzy);
        let claim = claim_of("Pot is in Marx.");
        let verdict = validate_claim(&claim, &graph, &policy).unwrap();
        assert_eq!(verdict.status, VerdictStatus::AmbiguousFuzzy);
    }

    #[test]
    fn quantity_mismatch_uses_context_spelling() {
        let graph = fixture_graph();
        let record = correct_text(
            "Water boils at 80 degrees Celsius.",
            &graph,
            &default_templates(),
            &normalized(),
        )
        .unwrap();
        assert_eq!(record.output_text, "Water boils at 100 degrees Celsius.");
        let record = correct_text("Water boils at 80°C.", &graph, &default_templates(), &normalized())
            .unwrap();
        assert_eq!(record.output_text, "Water boils at 100°C.");
    }

    #[test]
    fn predicate_vocabulary_is_shared() {
        // a claim built by hand matches graph predicates by name
        let p1 = PredicateId::new("isIn").unwrap();
        let p2 = PredicateId::new("isIn").unwrap().with_functional(false);
        assert_eq!(p1, p2);
    }
}
