//! Spot choice and the recommendation rationale.
//!
//! The rationale cites the last favorably answered place-type question for
//! the recommended spot (if any) plus one favorable answer drawn uniformly
//! from the rest. Clause text only interpolates the authored question and the
//! authored key the user matched.

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::engine::{AnswerMemory, AnswerRecord};
use crate::places::questions_for_tags;
use crate::rng::SimRng;
use crate::scenario::{Estimator, NodeId, ScenarioDoc};

pub const GENERIC_CLAUSE: &str = "I think this place will suit you well.";

#[derive(Debug, Error, PartialEq, Eq)]
pub enum RecommendError {
    #[error("E_CHOICE_NOT_IN_PAIR: `{0}` is not one of the two spots")]
    ChoiceNotInPair(String),
}

/// A spot in the session with its resolved place-type question bank.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct SpotBank {
    pub id: String,
    pub display_name: String,
    pub description_node: NodeId,
    pub tags: Vec<String>,
    pub questions: Vec<NodeId>,
}

impl SpotBank {
    /// Resolve a spot from the document, optionally overriding its tags.
    pub fn resolve(doc: &ScenarioDoc, spot_id: &str, tags: Option<Vec<String>>) -> Option<SpotBank> {
        let spot = doc.spot(spot_id)?;
        let tags = tags.unwrap_or_else(|| spot.placetype_tags.clone());
        let questions = questions_for_tags(&tags, doc).questions;
        Some(SpotBank {
            id: spot.id.clone(),
            display_name: spot.display_name.clone(),
            description_node: spot.description_node.clone(),
            tags,
            questions,
        })
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct RationaleClause {
    /// `None` for the generic clause.
    pub question_id: Option<NodeId>,
    pub template_text: String,
    pub placetype: bool,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct RecommendationResult {
    pub spot_id: String,
    pub display_name: String,
    pub description_text: String,
    pub rationale: Vec<RationaleClause>,
    pub decisive_question_ids: Vec<NodeId>,
}

impl RecommendationResult {
    pub fn recommend_text(&self) -> String {
        recommend_text(&self.display_name, &self.description_text)
    }
}

pub fn recommend_text(display_name: &str, description: &str) -> String {
    format!("I recommend {display_name}. {description}")
}

pub fn clause_text(ask: &str, facet: &str) -> String {
    format!("Because when I asked \"{ask}\", you said \"{facet}\".")
}

/// Operator choice wins; otherwise the spot with more favorable place-type
/// answers, ties going to the first of the pair. Returns an index into `pair`.
pub fn choose_spot(
    pair: &[SpotBank; 2],
    operator_choice: Option<&str>,
    memory: &AnswerMemory,
) -> Result<usize, RecommendError> {
    if let Some(choice) = operator_choice {
        return pair
            .iter()
            .position(|s| s.id == choice)
            .ok_or_else(|| RecommendError::ChoiceNotInPair(choice.to_string()));
    }
    let score = |spot: &SpotBank| {
        memory
            .favorable()
            .filter(|r| spot.questions.contains(&r.question_id))
            .count()
    };
    Ok(if score(&pair[1]) > score(&pair[0]) { 1 } else { 0 })
}

fn clause_for(doc: &ScenarioDoc, record: &AnswerRecord, placetype: bool) -> RationaleClause {
    let ask = doc.node(&record.question_id).map(|n| n.text.as_str()).unwrap_or_default();
    let facet = record.matched_key.as_deref().unwrap_or(&record.raw);
    RationaleClause {
        question_id: Some(record.question_id.clone()),
        template_text: clause_text(ask, facet),
        placetype,
    }
}

pub fn build_rationale(
    memory: &AnswerMemory,
    spot: &SpotBank,
    doc: &ScenarioDoc,
    rng: &mut SimRng,
) -> RecommendationResult {
    let favorable: Vec<&AnswerRecord> = memory.favorable().collect();
    let placetype_pick = favorable
        .iter()
        .rposition(|r| spot.questions.contains(&r.question_id));

    let mut rationale = Vec::new();
    if let Some(i) = placetype_pick {
        rationale.push(clause_for(doc, favorable[i], true));
    }
    let others: Vec<&AnswerRecord> = favorable
        .iter()
        .enumerate()
        .filter(|(i, _)| Some(*i) != placetype_pick)
        .map(|(_, r)| *r)
        .collect();
    if !others.is_empty() {
        let k = rng.below(others.len() as u64) as usize;
        rationale.push(clause_for(doc, others[k], false));
    }
    let decisive_question_ids = rationale.iter().filter_map(|c| c.question_id.clone()).collect();
    if rationale.is_empty() {
        rationale.push(RationaleClause {
            question_id: None,
            template_text: GENERIC_CLAUSE.to_string(),
            placetype: false,
        });
    }
    let description_text = doc
        .node(&spot.description_node)
        .map(|n| n.text.clone())
        .unwrap_or_default();
    RecommendationResult {
        spot_id: spot.id.clone(),
        display_name: spot.display_name.clone(),
        description_text,
        rationale,
        decisive_question_ids,
    }
}

/// Upper bound on the speaking time of the recommendation phase for either
/// spot of the pair.
pub fn recommendation_bound(doc: &ScenarioDoc, pair: &[SpotBank; 2], est: &Estimator) -> f64 {
    let intro = pair
        .iter()
        .map(|s| {
            let desc = doc.node(&s.description_node).map(|n| n.text.as_str()).unwrap_or_default();
            est.speech(&recommend_text(&s.display_name, desc))
        })
        .fold(0.0, f64::max);
    let longest_clause = doc
        .nodes
        .values()
        .filter(|n| n.kind.is_question())
        .flat_map(|n| n.arcs.iter().filter(|a| a.favorable).map(move |a| (n, a)))
        .flat_map(|(n, a)| a.keys.iter().map(move |k| est.speech(&clause_text(&n.text, k))))
        .fold(0.0, f64::max);
    intro + f64::max(2.0 * longest_clause, est.speech(GENERIC_CLAUSE))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::scenario::parse_scenario;

    fn record(id: &str, favorable: bool) -> AnswerRecord {
        AnswerRecord {
            question_id: id.into(),
            question_tag: None,
            placetype: None,
            raw: format!("answer to {id}"),
            matched_arc: favorable.then_some(0),
            matched_key: favorable.then(|| "yes".to_string()),
            favorable,
            broken: false,
        }
    }

    fn fixture() -> (ScenarioDoc, [SpotBank; 2]) {
        let doc = parse_scenario(
            r#"flow "t" {
                monologue hi { say "hi" }
                monologue da { say "Park A is fun." }
                monologue db { say "Museum B is calm." }
                question qa1 { ask "Ride coasters?" on "yes" favorable -> hi on "no" -> hi fallback }
                question qa2 { ask "Like parades?" on "yes" favorable -> hi on "no" -> hi fallback }
                question qb1 { ask "Like art?" on "yes" favorable -> hi on "no" -> hi fallback }
                question q1 { ask "Photos?" on "yes" favorable -> hi on "no" -> hi fallback }
                question q2 { ask "Family?" on "yes" favorable -> hi on "no" -> hi fallback }
                placetype amusement_park { qa1, qa2 }
                placetype museum { qb1 }
                spot a "Park A" describe da tags amusement_park
                spot b "Museum B" describe db tags museum
                intro hi startpoints q1, q2 conclusion hi
            }"#,
        )
        .unwrap();
        let pair = [
            SpotBank::resolve(&doc, "a", None).unwrap(),
            SpotBank::resolve(&doc, "b", None).unwrap(),
        ];
        (doc, pair)
    }

    #[test]
    fn operator_choice_passes_through() {
        let (_, pair) = fixture();
        let mem = AnswerMemory::default();
        assert_eq!(choose_spot(&pair, Some("b"), &mem), Ok(1));
        assert_eq!(
            choose_spot(&pair, Some("zoo"), &mem),
            Err(RecommendError::ChoiceNotInPair("zoo".into()))
        );
    }

    #[test]
    fn heuristic_and_tie_break() {
        let (_, pair) = fixture();
        let mut mem = AnswerMemory::default();
        assert_eq!(choose_spot(&pair, None, &mem), Ok(0));
        mem.records.push(record("qb1", true));
        assert_eq!(choose_spot(&pair, None, &mem), Ok(1));
        mem.records.push(record("qa1", true));
        assert_eq!(choose_spot(&pair, None, &mem), Ok(0), "1-1 tie goes to the first spot");
        mem.records.push(record("qa2", true));
        assert_eq!(choose_spot(&pair, None, &mem), Ok(0));
    }

    #[test]
    fn placetype_plus_one_random() {
        let (doc, pair) = fixture();
        let mut mem = AnswerMemory::default();
        mem.records.push(record("q1", true));
        mem.records.push(record("qa1", true));
        mem.records.push(record("q2", true));
        let mut rng = SimRng::new(5);
        let r = build_rationale(&mem, &pair[0], &doc, &mut rng);
        assert_eq!(r.rationale.len(), 2);
        assert_eq!(r.rationale[0].question_id.as_deref(), Some("qa1"));
        assert!(r.rationale[0].placetype);
        // independent replay of the draw
        let mut replay = SimRng::new(5);
        let expected = ["q1", "q2"][replay.below(2) as usize];
        assert_eq!(r.rationale[1].question_id.as_deref(), Some(expected));
        assert_eq!(r.decisive_question_ids, vec!["qa1".to_string(), expected.to_string()]);
        assert_eq!(r.description_text, "Park A is fun.");
    }

    #[test]
    fn last_placetype_question_is_cited() {
        let (doc, pair) = fixture();
        let mut mem = AnswerMemory::default();
        mem.records.push(record("qa2", true));
        mem.records.push(record("qa1", true));
        let r = build_rationale(&mem, &pair[0], &doc, &mut SimRng::new(1));
        assert_eq!(r.rationale[0].question_id.as_deref(), Some("qa1"));
        assert_eq!(r.rationale[1].question_id.as_deref(), Some("qa2"));
    }

    #[test]
    fn empty_and_degenerate_cases() {
        let (doc, pair) = fixture();
        let mut mem = AnswerMemory::default();
        mem.records.push(record("q1", false));
        let r = build_rationale(&mem, &pair[0], &doc, &mut SimRng::new(1));
        assert_eq!(r.rationale.len(), 1);
        assert_eq!(r.rationale[0].template_text, GENERIC_CLAUSE);
        assert!(r.decisive_question_ids.is_empty());

        let mut mem = AnswerMemory::default();
        mem.records.push(record("qa1", true));
        let mut rng = SimRng::new(1);
        let before = rng.clone();
        let r = build_rationale(&mem, &pair[0], &doc, &mut rng);
        assert_eq!(r.rationale.len(), 1);
        assert!(r.rationale[0].placetype);
        assert_eq!(rng, before, "no draw when nothing else is favorable");
    }

    #[test]
    fn clause_interpolates_question_and_key() {
        let (doc, pair) = fixture();
        let mut mem = AnswerMemory::default();
        mem.records.push(record("qb1", true));
        let r = build_rationale(&mem, &pair[1], &doc, &mut SimRng::new(1));
        assert_eq!(r.rationale[0].template_text, "Because when I asked \"Like art?\", you said \"yes\".");
    }
}
