use std::collections::BTreeMap;
use std::fmt;

use serde::{Deserialize, Serialize};

use crate::affect::{ExpressionSpec, GestureCue};
use crate::scenario::NodeId;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Phase {
    Introduction,
    Questions,
    Recommendation,
    Conclusion,
    Finished,
}

impl Phase {
    pub fn as_str(self) -> &'static str {
        match self {
            Phase::Introduction => "introduction",
            Phase::Questions => "questions",
            Phase::Recommendation => "recommendation",
            Phase::Conclusion => "conclusion",
            Phase::Finished => "finished",
        }
    }
}

impl fmt::Display for Phase {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum UtteranceKind {
    Intro,
    Ask,
    Reply,
    Fallback,
    Describe,
    Recommend,
    Rationale,
    Conclude,
}

impl UtteranceKind {
    pub const ALL: [UtteranceKind; 8] = [
        UtteranceKind::Intro,
        UtteranceKind::Ask,
        UtteranceKind::Reply,
        UtteranceKind::Fallback,
        UtteranceKind::Describe,
        UtteranceKind::Recommend,
        UtteranceKind::Rationale,
        UtteranceKind::Conclude,
    ];

    pub fn as_str(self) -> &'static str {
        match self {
            UtteranceKind::Intro => "intro",
            UtteranceKind::Ask => "ask",
            UtteranceKind::Reply => "reply",
            UtteranceKind::Fallback => "fallback",
            UtteranceKind::Describe => "describe",
            UtteranceKind::Recommend => "recommend",
            UtteranceKind::Rationale => "rationale",
            UtteranceKind::Conclude => "conclude",
        }
    }
}

/// One robot utterance with its non-verbal annotations.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Utterance {
    pub text: String,
    pub kind: UtteranceKind,
    pub expression: ExpressionSpec,
    pub gesture_before: Option<GestureCue>,
    pub gesture_after: Option<GestureCue>,
    pub awaiting_input: bool,
    pub phase: Phase,
    pub node_id: Option<NodeId>,
    pub clock_s: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Speaker {
    Robot,
    User,
}

/// One transcript line. Field order is the export key order.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TranscriptEntry {
    pub turn: usize,
    pub speaker: Speaker,
    /// An utterance kind for robot lines, `answer` for user lines.
    pub kind: String,
    pub text: String,
    pub node_id: Option<NodeId>,
    pub clock_s: f64,
    pub stage: u8,
    pub broken: bool,
}

/// Line-delimited JSON, one entry per line, keys in the order
/// `turn, speaker, kind, text, node_id, clock_s, stage, broken`.
pub fn transcript_jsonl(entries: &[TranscriptEntry]) -> String {
    let mut out = String::new();
    for e in entries {
        out.push_str(&serde_json::to_string(e).expect("transcript entries serialize"));
        out.push('\n');
    }
    out
}

/// Outcome of one answered question.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct AnswerRecord {
    pub question_id: NodeId,
    /// Startpoint tag (e.g. `individual`, `task`) or place-type bank tag of
    /// the tree the question belongs to.
    pub question_tag: Option<String>,
    /// Place-type bank tag when the question is a place-type tree root.
    pub placetype: Option<String>,
    pub raw: String,
    pub matched_arc: Option<usize>,
    pub matched_key: Option<String>,
    pub favorable: bool,
    pub broken: bool,
}

#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct AnswerMemory {
    pub records: Vec<AnswerRecord>,
    pub slots: BTreeMap<String, String>,
}

impl AnswerMemory {
    pub fn record_for(&self, question_id: &str) -> Option<&AnswerRecord> {
        self.records.iter().find(|r| r.question_id == question_id)
    }

    pub fn favorable(&self) -> impl Iterator<Item = &AnswerRecord> {
        self.records.iter().filter(|r| r.favorable)
    }

    pub fn broken_count(&self) -> usize {
        self.records.iter().filter(|r| r.broken).count()
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum SelectionPolicy {
    /// Uniform draw without replacement.
    #[default]
    Uniform,
    /// Draw without replacement, weighted by startpoint priority.
    Weighted,
}
