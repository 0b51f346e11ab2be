use indexmap::IndexMap;
use serde::Serialize;

use crate::affect::Gesture;

pub type NodeId = String;

pub const DEFAULT_BUDGET_S: f64 = 330.0;
pub const DEFAULT_RATE_CPS: f64 = 10.0;
pub const DEFAULT_FALLBACK_REPLY: &str = "I see.";

/// A parsed conversation-flow definition.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ScenarioDoc {
    pub name: String,
    pub budget_s: f64,
    pub speech_rate_cps: f64,
    pub introduction: Vec<NodeId>,
    pub startpoints: Vec<NodeId>,
    pub conclusion: Vec<NodeId>,
    pub nodes: IndexMap<NodeId, ContentNode>,
    pub placetype_banks: IndexMap<String, Vec<NodeId>>,
    pub spots: IndexMap<String, SpotDef>,
}

/// A registered question-tree root with its selection weight.
#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct Startpoint {
    pub id: NodeId,
    pub priority: u32,
    pub tag: Option<String>,
}

impl ScenarioDoc {
    pub fn node(&self, id: &str) -> Option<&ContentNode> {
        self.nodes.get(id)
    }

    /// Startpoints with their priorities, in registration order. Monologue
    /// roots carry the default priority of 1.
    pub fn startpoint_entries(&self) -> Vec<Startpoint> {
        self.startpoints
            .iter()
            .map(|id| {
                let node = self.nodes.get(id);
                Startpoint {
                    id: id.clone(),
                    priority: node.and_then(|n| n.priority).unwrap_or(1),
                    tag: node.and_then(|n| n.tag.clone()),
                }
            })
            .collect()
    }

    pub fn spot(&self, id: &str) -> Option<&SpotDef> {
        self.spots.get(id)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum NodeKind {
    Monologue,
    ClosedQuestion,
    OpenQuestion,
}

impl NodeKind {
    pub fn is_question(self) -> bool {
        !matches!(self, NodeKind::Monologue)
    }
}

/// One scripted utterance unit: a monologue or a question.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ContentNode {
    pub id: NodeId,
    pub kind: NodeKind,
    pub text: String,
    pub cue_before: Option<Gesture>,
    pub cue_after: Option<Gesture>,
    pub arcs: Vec<Arc>,
    pub fallback: Option<FallbackSpec>,
    pub capture_slot: Option<String>,
    pub next: Option<NodeId>,
    /// Selection weight when this node is a startpoint.
    pub priority: Option<u32>,
    pub tag: Option<String>,
}

impl ContentNode {
    pub fn monologue(id: impl Into<String>, text: impl Into<String>) -> Self {
        ContentNode {
            id: id.into(),
            kind: NodeKind::Monologue,
            text: text.into(),
            cue_before: None,
            cue_after: None,
            arcs: Vec::new(),
            fallback: None,
            capture_slot: None,
            next: None,
            priority: None,
            tag: None,
        }
    }

    pub fn closed_question(id: impl Into<String>, text: impl Into<String>, arcs: Vec<Arc>) -> Self {
        ContentNode {
            kind: NodeKind::ClosedQuestion,
            arcs,
            fallback: Some(FallbackSpec::default()),
            ..ContentNode::monologue(id, text)
        }
    }

    pub fn open_question(
        id: impl Into<String>,
        text: impl Into<String>,
        next: impl Into<String>,
    ) -> Self {
        ContentNode {
            kind: NodeKind::OpenQuestion,
            next: Some(next.into()),
            ..ContentNode::monologue(id, text)
        }
    }

    /// Every node id this node can continue to, in source order.
    pub fn successors(&self) -> Vec<&str> {
        let mut out: Vec<&str> = self.arcs.iter().map(|a| a.next.as_str()).collect();
        if let Some(next) = self.fallback.as_ref().and_then(|f| f.next.as_deref()) {
            out.push(next);
        }
        if let Some(next) = self.next.as_deref() {
            out.push(next);
        }
        out
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Arc {
    pub keys: Vec<String>,
    pub favorable: bool,
    pub reply: Option<String>,
    pub next: NodeId,
}

impl Arc {
    pub fn new(keys: &[&str], next: impl Into<String>) -> Self {
        Arc {
            keys: keys.iter().map(|k| k.to_string()).collect(),
            favorable: false,
            reply: None,
            next: next.into(),
        }
    }

    pub fn favorable(mut self) -> Self {
        self.favorable = true;
        self
    }

    pub fn reply(mut self, text: impl Into<String>) -> Self {
        self.reply = Some(text.into());
        self
    }
}

/// Response used when no arc key matches. `next` of `None` ends the tree.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct FallbackSpec {
    pub reply: String,
    pub next: Option<NodeId>,
}

impl Default for FallbackSpec {
    fn default() -> Self {
        FallbackSpec {
            reply: DEFAULT_FALLBACK_REPLY.to_string(),
            next: None,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct SpotDef {
    pub id: String,
    pub display_name: String,
    pub description_node: NodeId,
    pub placetype_tags: Vec<String>,
}
