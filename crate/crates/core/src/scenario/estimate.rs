use super::ast::{ContentNode, NodeKind, ScenarioDoc};

/// Fixed listening allowance charged once per question asked.
pub const DEFAULT_LISTEN_S: f64 = 5.0;

/// Speaking-time model: character count over speech rate, plus a constant
/// listening allowance for every question.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Estimator {
    pub rate_cps: f64,
    pub listen_s: f64,
}

impl Estimator {
    pub fn new(rate_cps: f64) -> Self {
        assert!(rate_cps > 0.0, "speech rate must be positive");
        Estimator {
            rate_cps,
            listen_s: DEFAULT_LISTEN_S,
        }
    }

    pub fn for_doc(doc: &ScenarioDoc) -> Self {
        Estimator::new(doc.speech_rate_cps)
    }

    pub fn speech(&self, text: &str) -> f64 {
        text.chars().count() as f64 / self.rate_cps
    }

    /// Cost charged when a node's own utterance is emitted.
    pub fn emission(&self, node: &ContentNode) -> f64 {
        match node.kind {
            NodeKind::Monologue => self.speech(&node.text),
            _ => self.speech(&node.text) + self.listen_s,
        }
    }

    /// Estimate for a single node: its utterance, the longest reply it may
    /// emit, and the listening allowance for questions.
    pub fn node(&self, node: &ContentNode) -> f64 {
        let longest_reply = node
            .arcs
            .iter()
            .filter_map(|a| a.reply.as_deref())
            .chain(node.fallback.as_ref().map(|f| f.reply.as_str()))
            .map(|r| r.chars().count())
            .max()
            .unwrap_or(0);
        match node.kind {
            NodeKind::Monologue => self.speech(&node.text),
            _ => (node.text.chars().count() + longest_reply) as f64 / self.rate_cps + self.listen_s,
        }
    }

    /// Longest path through the tree rooted at `root`. Unknown ids cost 0.
    pub fn tree(&self, doc: &ScenarioDoc, root: &str) -> f64 {
        self.tree_bounded(doc, root, doc.nodes.len() + 1)
    }

    fn tree_bounded(&self, doc: &ScenarioDoc, id: &str, fuel: usize) -> f64 {
        let Some(node) = doc.nodes.get(id) else {
            return 0.0;
        };
        if fuel == 0 {
            return 0.0;
        }
        let sub = |next: Option<&str>| next.map(|n| self.tree_bounded(doc, n, fuel - 1)).unwrap_or(0.0);
        let own = self.emission(node);
        let via_arcs = node
            .arcs
            .iter()
            .map(|a| a.reply.as_deref().map(|r| self.speech(r)).unwrap_or(0.0) + sub(Some(&a.next)));
        let rest = match node.kind {
            NodeKind::Monologue => sub(node.next.as_deref()),
            NodeKind::ClosedQuestion => {
                let fb = node
                    .fallback
                    .as_ref()
                    .map(|f| self.speech(&f.reply) + sub(f.next.as_deref()))
                    .unwrap_or(0.0);
                via_arcs.fold(fb, f64::max)
            }
            NodeKind::OpenQuestion => via_arcs.fold(sub(node.next.as_deref()), f64::max),
        };
        own + rest
    }

    /// Sum of tree estimates over a list of roots (a doc part).
    pub fn part(&self, doc: &ScenarioDoc, roots: &[String]) -> f64 {
        roots.iter().map(|r| self.tree(doc, r)).sum()
    }
}

/// Estimate one node at the given rate with the default listening allowance.
pub fn estimate_duration(node: &ContentNode, rate_cps: f64) -> f64 {
    Estimator::new(rate_cps).node(node)
}
