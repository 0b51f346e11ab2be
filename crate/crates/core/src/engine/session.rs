use std::collections::{HashSet, VecDeque};
use std::sync::Arc;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use super::matching::evaluate_answer;
use super::types::{
    AnswerMemory, AnswerRecord, Phase, SelectionPolicy, Speaker, TranscriptEntry, Utterance, UtteranceKind,
};
use crate::affect::{advance_stage, gestures_for, ExpressionTable};
use crate::recommend::{build_rationale, choose_spot, recommendation_bound, RecommendationResult, SpotBank};
use crate::rng::SimRng;
use crate::scenario::{has_errors, lint_scenario, Diagnostic, Estimator, NodeId, NodeKind, ScenarioDoc};

#[derive(Debug, Error, Clone, PartialEq)]
pub enum EngineError {
    #[error("E_UNKNOWN_SPOT: spot `{0}` is not defined")]
    UnknownSpot(String),
    #[error("E_UNKNOWN_SPOT: both spots are `{0}`")]
    DuplicateSpot(String),
    #[error("E_INVALID_DOC: the scenario has {} error(s)", .0.iter().filter(|d| d.is_error()).count())]
    InvalidDoc(Vec<Diagnostic>),
    #[error("E_CHOICE_NOT_IN_PAIR: `{0}` is not one of the two spots")]
    ChoiceNotInPair(String),
    #[error("E_AWAITING_INPUT: a question is waiting for an answer")]
    AwaitingInput,
    #[error("E_NOT_AWAITING: no question is waiting for an answer")]
    NotAwaiting,
    #[error("E_SESSION_FINISHED: the session has ended")]
    SessionFinished,
}

impl EngineError {
    pub fn code(&self) -> &'static str {
        match self {
            EngineError::UnknownSpot(_) | EngineError::DuplicateSpot(_) => "E_UNKNOWN_SPOT",
            EngineError::InvalidDoc(_) => "E_INVALID_DOC",
            EngineError::ChoiceNotInPair(_) => "E_CHOICE_NOT_IN_PAIR",
            EngineError::AwaitingInput => "E_AWAITING_INPUT",
            EngineError::NotAwaiting => "E_NOT_AWAITING",
            EngineError::SessionFinished => "E_SESSION_FINISHED",
        }
    }
}

#[derive(Debug, Clone)]
pub struct SessionConfig {
    pub id: String,
    pub spots: [String; 2],
    pub policy: SelectionPolicy,
    pub seed: u64,
    pub operator_choice: Option<String>,
    /// Per-spot tag overrides, e.g. from a places provider. `None` uses the
    /// tags declared in the document.
    pub spot_tags: [Option<Vec<String>>; 2],
    pub expressions: ExpressionTable,
}

impl SessionConfig {
    pub fn new(spot_a: impl Into<String>, spot_b: impl Into<String>, seed: u64) -> Self {
        SessionConfig {
            id: format!("session-{seed}"),
            spots: [spot_a.into(), spot_b.into()],
            policy: SelectionPolicy::Uniform,
            seed,
            operator_choice: None,
            spot_tags: [None, None],
            expressions: ExpressionTable::default(),
        }
    }

    pub fn with_policy(mut self, policy: SelectionPolicy) -> Self {
        self.policy = policy;
        self
    }

    pub fn with_choice(mut self, choice: impl Into<String>) -> Self {
        self.operator_choice = Some(choice.into());
        self
    }

    pub fn with_id(mut self, id: impl Into<String>) -> Self {
        self.id = id.into();
        self
    }
}

#[derive(Debug, Clone, PartialEq)]
pub enum Turn {
    Utterance(Utterance),
    Finished,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct AnswerOutcome {
    pub matched_arc: Option<usize>,
    pub matched_key: Option<String>,
    pub favorable: bool,
    pub broken: bool,
}

/// A question-tree root waiting in the selection pool.
#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct PoolEntry {
    pub id: NodeId,
    pub priority: u32,
    pub tag: Option<String>,
    /// Bank tag for place-type questions.
    pub placetype: Option<String>,
}

#[derive(Debug, Clone)]
struct Pending {
    text: String,
    kind: UtteranceKind,
    phase: Phase,
    node_id: Option<NodeId>,
    cost: f64,
}

#[derive(Debug, Clone)]
struct ActiveTree {
    entry: PoolEntry,
    estimate: f64,
}

/// One live conversation. Operations on a session must be serialized by
/// the caller; distinct sessions are independent.
#[derive(Debug, Clone)]
pub struct Session {
    id: String,
    doc: Arc<ScenarioDoc>,
    est: Estimator,
    policy: SelectionPolicy,
    seed: u64,
    operator_choice: Option<String>,
    expressions: ExpressionTable,
    pair: [SpotBank; 2],
    reserve_s: f64,

    phase: Phase,
    clock_s: f64,
    stage: u8,
    rng: SimRng,
    pool: Vec<PoolEntry>,
    queue: VecDeque<Pending>,
    cursor: Option<NodeId>,
    current_node: Option<NodeId>,
    awaiting_input: bool,
    tree: Option<ActiveTree>,
    asked: HashSet<NodeId>,
    drawn_individual: usize,
    drawn_task: usize,
    memory: AnswerMemory,
    transcript: Vec<TranscriptEntry>,
    recommendation: Option<RecommendationResult>,
    admitted: Vec<(NodeId, f64)>,
    fallbacks: usize,
    closed_asked: usize,
}

pub fn start_session(doc: Arc<ScenarioDoc>, cfg: SessionConfig) -> Result<Session, EngineError> {
    Session::start(doc, cfg)
}

fn monologue_chain(doc: &ScenarioDoc, root: &str) -> Vec<NodeId> {
    let mut out = Vec::new();
    let mut at = Some(root.to_string());
    while let Some(id) = at {
        let Some(node) = doc.node(&id) else { break };
        if out.contains(&id) {
            break;
        }
        out.push(id);
        at = node.next.clone();
    }
    out
}

impl Session {
    pub fn start(doc: Arc<ScenarioDoc>, cfg: SessionConfig) -> Result<Session, EngineError> {
        let diags = lint_scenario(&doc);
        if has_errors(&diags) {
            return Err(EngineError::InvalidDoc(diags));
        }
        let [a, b] = &cfg.spots;
        if a == b {
            return Err(EngineError::DuplicateSpot(a.clone()));
        }
        let [tags_a, tags_b] = cfg.spot_tags.clone();
        let bank_a = SpotBank::resolve(&doc, a, tags_a).ok_or_else(|| EngineError::UnknownSpot(a.clone()))?;
        let bank_b = SpotBank::resolve(&doc, b, tags_b).ok_or_else(|| EngineError::UnknownSpot(b.clone()))?;
        if let Some(choice) = &cfg.operator_choice {
            if choice != a && choice != b {
                return Err(EngineError::ChoiceNotInPair(choice.clone()));
            }
        }
        let pair = [bank_a, bank_b];
        let est = Estimator::for_doc(&doc);
        let reserve_s = est.part(&doc, &doc.conclusion) + recommendation_bound(&doc, &pair, &est);

        let mut pool: Vec<PoolEntry> = doc
            .startpoint_entries()
            .into_iter()
            .map(|s| PoolEntry {
                id: s.id,
                priority: s.priority,
                tag: s.tag,
                placetype: None,
            })
            .collect();
        for spot in &pair {
            for tag in &spot.tags {
                for qid in doc.placetype_banks.get(tag).into_iter().flatten() {
                    if pool.iter().any(|e| &e.id == qid) {
                        continue;
                    }
                    let node = doc.node(qid);
                    pool.push(PoolEntry {
                        id: qid.clone(),
                        priority: node.and_then(|n| n.priority).unwrap_or(1),
                        tag: Some(tag.clone()),
                        placetype: Some(tag.clone()),
                    });
                }
            }
        }

        let mut queue = VecDeque::new();
        for root in &doc.introduction {
            for id in monologue_chain(&doc, root) {
                let text = doc.nodes[&id].text.clone();
                queue.push_back(Pending {
                    cost: est.speech(&text),
                    text,
                    kind: UtteranceKind::Intro,
                    phase: Phase::Introduction,
                    node_id: Some(id),
                });
            }
        }
        for spot in &pair {
            for id in monologue_chain(&doc, &spot.description_node) {
                let text = doc.nodes[&id].text.clone();
                queue.push_back(Pending {
                    cost: est.speech(&text),
                    text,
                    kind: UtteranceKind::Describe,
                    phase: Phase::Introduction,
                    node_id: Some(id),
                });
            }
        }

        Ok(Session {
            id: cfg.id,
            est,
            policy: cfg.policy,
            seed: cfg.seed,
            operator_choice: cfg.operator_choice,
            expressions: cfg.expressions,
            pair,
            reserve_s,
            phase: Phase::Introduction,
            clock_s: 0.0,
            stage: advance_stage(0),
            rng: SimRng::new(cfg.seed),
            pool,
            queue,
            cursor: None,
            current_node: None,
            awaiting_input: false,
            tree: None,
            asked: HashSet::new(),
            drawn_individual: 0,
            drawn_task: 0,
            memory: AnswerMemory::default(),
            transcript: Vec::new(),
            recommendation: None,
            admitted: Vec::new(),
            fallbacks: 0,
            closed_asked: 0,
            doc,
        })
    }

    pub fn id(&self) -> &str {
        &self.id
    }
    pub fn doc(&self) -> &ScenarioDoc {
        &self.doc
    }
    pub fn seed(&self) -> u64 {
        self.seed
    }
    pub fn phase(&self) -> Phase {
        self.phase
    }
    pub fn clock_s(&self) -> f64 {
        self.clock_s
    }
    pub fn budget_s(&self) -> f64 {
        self.doc.budget_s
    }
    pub fn stage(&self) -> u8 {
        self.stage
    }
    pub fn awaiting_input(&self) -> bool {
        self.awaiting_input
    }
    pub fn is_finished(&self) -> bool {
        self.phase == Phase::Finished
    }
    pub fn current_node(&self) -> Option<&str> {
        self.current_node.as_deref()
    }
    pub fn rng_state(&self) -> u64 {
        self.rng.state()
    }
    pub fn memory(&self) -> &AnswerMemory {
        &self.memory
    }
    pub fn transcript(&self) -> &[TranscriptEntry] {
        &self.transcript
    }
    pub fn pool(&self) -> &[PoolEntry] {
        &self.pool
    }
    pub fn pair(&self) -> &[SpotBank; 2] {
        &self.pair
    }
    pub fn recommendation(&self) -> Option<&RecommendationResult> {
        self.recommendation.as_ref()
    }
    /// Seconds held back for the recommendation and conclusion.
    pub fn reserve_s(&self) -> f64 {
        self.reserve_s
    }
    /// Every admitted tree root with its estimate, in admission order.
    pub fn admitted_trees(&self) -> &[(NodeId, f64)] {
        &self.admitted
    }
    /// Estimate of the last admitted tree, 0 if none.
    pub fn last_tree_estimate(&self) -> f64 {
        self.admitted.last().map(|(_, e)| *e).unwrap_or(0.0)
    }
    pub fn closed_questions_asked(&self) -> usize {
        self.closed_asked
    }
    pub fn fallbacks_emitted(&self) -> usize {
        self.fallbacks
    }
    pub fn broken_count(&self) -> usize {
        self.memory.broken_count()
    }

    /// Advance the state machine by one robot utterance.
    pub fn next_utterance(&mut self) -> Result<Turn, EngineError> {
        if self.awaiting_input {
            return Err(EngineError::AwaitingInput);
        }
        loop {
            if let Some(p) = self.queue.pop_front() {
                return Ok(Turn::Utterance(self.emit(p, false)));
            }
            match self.phase {
                Phase::Finished => return Ok(Turn::Finished),
                Phase::Recommendation | Phase::Conclusion => {
                    self.phase = Phase::Finished;
                    self.current_node = None;
                    return Ok(Turn::Finished);
                }
                Phase::Introduction => self.phase = Phase::Questions,
                Phase::Questions => {
                    if let Some(id) = self.cursor.take() {
                        if let Some(u) = self.step_tree(id) {
                            return Ok(Turn::Utterance(u));
                        }
                        continue;
                    }
                    self.tree = None;
                    match self.select_next_question() {
                        Some(root) => self.cursor = Some(root),
                        None => self.enter_recommendation(),
                    }
                }
            }
        }
    }

    fn step_tree(&mut self, id: NodeId) -> Option<Utterance> {
        let doc = self.doc.clone();
        let node = doc.node(&id)?;
        match node.kind {
            NodeKind::Monologue => {
                self.cursor = node.next.clone();
                let p = Pending {
                    text: node.text.clone(),
                    kind: UtteranceKind::Reply,
                    phase: Phase::Questions,
                    node_id: Some(id),
                    cost: self.est.speech(&node.text),
                };
                Some(self.emit(p, false))
            }
            _ => {
                if !self.asked.insert(id.clone()) {
                    // a shared question already asked ends this tree
                    return None;
                }
                if node.kind == NodeKind::ClosedQuestion {
                    self.closed_asked += 1;
                }
                let p = Pending {
                    text: node.text.clone(),
                    kind: UtteranceKind::Ask,
                    phase: Phase::Questions,
                    node_id: Some(id),
                    cost: self.est.emission(node),
                };
                Some(self.emit(p, true))
            }
        }
    }

    fn emit(&mut self, p: Pending, awaiting: bool) -> Utterance {
        self.clock_s += p.cost;
        self.phase = p.phase;
        let (gesture_before, gesture_after) = match p.node_id.as_deref().and_then(|id| self.doc.node(id)) {
            Some(node) if p.kind != UtteranceKind::Reply || node.kind == NodeKind::Monologue => gestures_for(node),
            _ => (None, None),
        };
        self.current_node = p.node_id.clone();
        self.awaiting_input = awaiting;
        let u = Utterance {
            expression: self.expressions.expression_for(p.kind, self.stage),
            text: p.text,
            kind: p.kind,
            gesture_before,
            gesture_after,
            awaiting_input: awaiting,
            phase: p.phase,
            node_id: p.node_id,
            clock_s: self.clock_s,
        };
        self.transcript.push(TranscriptEntry {
            turn: self.transcript.len(),
            speaker: Speaker::Robot,
            kind: u.kind.as_str().to_string(),
            text: u.text.clone(),
            node_id: u.node_id.clone(),
            clock_s: self.clock_s,
            stage: self.stage,
            broken: false,
        });
        u
    }

    fn gate_open(&self) -> bool {
        let has = |tag: &str| self.pool.iter().any(|e| e.placetype.is_none() && e.tag.as_deref() == Some(tag));
        (self.drawn_individual > 0 || !has("individual")) && (self.drawn_task > 0 || !has("task"))
    }

    fn eligible(&self) -> Vec<usize> {
        let placetype: Vec<usize> = (0..self.pool.len()).filter(|&i| self.pool[i].placetype.is_some()).collect();
        if !placetype.is_empty() && self.gate_open() {
            return placetype;
        }
        (0..self.pool.len()).filter(|&i| self.pool[i].placetype.is_none()).collect()
    }

    /// Draw the next tree root, or `None` when the pool is exhausted or the
    /// remaining time cannot hold the reserve plus the cheapest eligible tree.
    pub fn select_next_question(&mut self) -> Option<NodeId> {
        if self.phase != Phase::Questions {
            return None;
        }
        let asked = &self.asked;
        self.pool.retain(|e| !asked.contains(&e.id));
        let eligible = self.eligible();
        if eligible.is_empty() {
            return None;
        }
        let estimates: Vec<f64> = eligible.iter().map(|&i| self.est.tree(&self.doc, &self.pool[i].id)).collect();
        let cheapest = estimates.iter().copied().fold(f64::INFINITY, f64::min);
        let remaining = self.doc.budget_s - self.clock_s;
        if remaining < self.reserve_s + cheapest {
            return None;
        }
        let k = match self.policy {
            SelectionPolicy::Uniform => self.rng.below(eligible.len() as u64) as usize,
            SelectionPolicy::Weighted => {
                let total: u64 = eligible.iter().map(|&i| u64::from(self.pool[i].priority)).sum();
                let mut r = self.rng.below(total);
                let mut pick = eligible.len() - 1;
                for (k, &i) in eligible.iter().enumerate() {
                    let w = u64::from(self.pool[i].priority);
                    if r < w {
                        pick = k;
                        break;
                    }
                    r -= w;
                }
                pick
            }
        };
        let entry = self.pool.remove(eligible[k]);
        if entry.placetype.is_none() {
            match entry.tag.as_deref() {
                Some("individual") => self.drawn_individual += 1,
                Some("task") => self.drawn_task += 1,
                _ => {}
            }
        }
        let estimate = estimates[k];
        self.admitted.push((entry.id.clone(), estimate));
        let id = entry.id.clone();
        self.tree = Some(ActiveTree { entry, estimate });
        Some(id)
    }

    fn enter_recommendation(&mut self) {
        let idx = choose_spot(&self.pair, self.operator_choice.as_deref(), &self.memory)
            .expect("operator choice checked at start");
        let result = build_rationale(&self.memory, &self.pair[idx], &self.doc, &mut self.rng);
        let text = result.recommend_text();
        self.queue.push_back(Pending {
            cost: self.est.speech(&text),
            text,
            kind: UtteranceKind::Recommend,
            phase: Phase::Recommendation,
            node_id: None,
        });
        for clause in &result.rationale {
            self.queue.push_back(Pending {
                cost: self.est.speech(&clause.template_text),
                text: clause.template_text.clone(),
                kind: UtteranceKind::Rationale,
                phase: Phase::Recommendation,
                node_id: clause.question_id.clone(),
            });
        }
        for root in &self.doc.conclusion {
            for id in monologue_chain(&self.doc, root) {
                let text = self.doc.nodes[&id].text.clone();
                self.queue.push_back(Pending {
                    cost: self.est.speech(&text),
                    text,
                    kind: UtteranceKind::Conclude,
                    phase: Phase::Conclusion,
                    node_id: Some(id),
                });
            }
        }
        self.recommendation = Some(result);
        self.phase = Phase::Recommendation;
    }

    /// Answer the pending question. Replies are queued for `next_utterance`.
    pub fn submit_answer(&mut self, text: &str) -> Result<AnswerOutcome, EngineError> {
        if self.phase == Phase::Finished {
            return Err(EngineError::SessionFinished);
        }
        if !self.awaiting_input {
            return Err(EngineError::NotAwaiting);
        }
        let qid = self.current_node.clone().expect("awaiting implies a current question");
        let doc = self.doc.clone();
        let node = &doc.nodes[&qid];
        let outcome = evaluate_answer(node, text);
        let arc = outcome.matched_arc.map(|i| &node.arcs[i]);
        let favorable = arc.is_some_and(|a| a.favorable);
        let broken = node.kind == NodeKind::ClosedQuestion && arc.is_none();

        let (reply, kind, next) = match (node.kind, arc) {
            (_, Some(a)) => (a.reply.clone(), UtteranceKind::Reply, Some(a.next.clone())),
            (NodeKind::ClosedQuestion, None) => {
                let fb = node.fallback.clone().unwrap_or_default();
                (Some(fb.reply), UtteranceKind::Fallback, fb.next)
            }
            _ => (None, UtteranceKind::Reply, node.next.clone()),
        };
        if let Some(slot) = &node.capture_slot {
            self.memory.slots.insert(slot.clone(), text.to_string());
        }
        let (question_tag, placetype) = match &self.tree {
            Some(t) => (
                t.entry.tag.clone(),
                t.entry.placetype.clone().filter(|_| t.entry.id == qid),
            ),
            None => (None, None),
        };
        self.memory.records.push(AnswerRecord {
            question_id: qid.clone(),
            question_tag,
            placetype,
            raw: text.to_string(),
            matched_arc: outcome.matched_arc,
            matched_key: outcome.matched_key.clone(),
            favorable,
            broken,
        });
        self.transcript.push(TranscriptEntry {
            turn: self.transcript.len(),
            speaker: Speaker::User,
            kind: "answer".to_string(),
            text: text.to_string(),
            node_id: Some(qid.clone()),
            clock_s: self.clock_s,
            stage: self.stage,
            broken,
        });
        self.stage = advance_stage(self.memory.records.len());
        if let Some(reply) = reply {
            if kind == UtteranceKind::Fallback {
                self.fallbacks += 1;
            }
            self.queue.push_back(Pending {
                cost: self.est.speech(&reply),
                text: reply,
                kind,
                phase: Phase::Questions,
                node_id: Some(qid),
            });
        }
        self.cursor = next;
        self.awaiting_input = false;
        Ok(AnswerOutcome {
            matched_arc: outcome.matched_arc,
            matched_key: outcome.matched_key,
            favorable,
            broken,
        })
    }

    /// Tree estimate currently in flight, if a tree is active.
    pub fn active_tree_estimate(&self) -> Option<f64> {
        self.tree.as_ref().map(|t| t.estimate)
    }
}
