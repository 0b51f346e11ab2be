use unicode_normalization::UnicodeNormalization;

use crate::scenario::{ContentNode, NodeKind};

/// Case-fold, NFKC-normalize, trim, and collapse internal whitespace runs.
pub fn normalize_text(s: &str) -> String {
    let folded: String = s.nfkc().collect::<String>().to_lowercase();
    let mut out = String::with_capacity(folded.len());
    for word in folded.split_whitespace() {
        if !out.is_empty() {
            out.push(' ');
        }
        out.push_str(word);
    }
    out
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct MatchOutcome {
    pub matched_arc: Option<usize>,
    /// The key that matched, as authored.
    pub matched_key: Option<String>,
}

impl MatchOutcome {
    pub const NONE: MatchOutcome = MatchOutcome {
        matched_arc: None,
        matched_key: None,
    };
}

/// First arc, in source order, with a normalized key contained in the
/// normalized answer. Within an arc, keys are tried in source order.
pub fn evaluate_answer(question: &ContentNode, answer: &str) -> MatchOutcome {
    debug_assert!(question.kind != NodeKind::Monologue);
    let answer = normalize_text(answer);
    for (i, arc) in question.arcs.iter().enumerate() {
        for key in &arc.keys {
            let k = normalize_text(key);
            if !k.is_empty() && answer.contains(&k) {
                return MatchOutcome {
                    matched_arc: Some(i),
                    matched_key: Some(key.clone()),
                };
            }
        }
    }
    MatchOutcome::NONE
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::scenario::Arc;

    fn indoor_outdoor() -> ContentNode {
        ContentNode::closed_question(
            "q1",
            "Are you indoor or outdoor",
            vec![Arc::new(&["indoor"], "a"), Arc::new(&["outdoor"], "b")],
        )
    }

    #[test]
    fn normalization_examples() {
        assert_eq!(normalize_text("  InDoor "), "indoor");
        assert_eq!(normalize_text("ＡＢＣ１２３"), "abc123");
        assert_eq!(normalize_text(""), "");
        assert_eq!(normalize_text("a \t\n b"), "a b");
    }

    #[test]
    fn substring_match() {
        let q = indoor_outdoor();
        assert_eq!(evaluate_answer(&q, "definitely Indoor").matched_arc, Some(0));
        assert_eq!(evaluate_answer(&q, "OUTDOOR for sure").matched_arc, Some(1));
    }

    #[test]
    fn no_key_is_none() {
        assert_eq!(evaluate_answer(&indoor_outdoor(), "I like both the same"), MatchOutcome::NONE);
        assert_eq!(evaluate_answer(&indoor_outdoor(), ""), MatchOutcome::NONE);
    }

    #[test]
    fn source_order_tie_break() {
        let q = indoor_outdoor();
        assert_eq!(evaluate_answer(&q, "indoor but sometimes outdoor").matched_arc, Some(0));
        assert_eq!(evaluate_answer(&q, "outdoor but sometimes indoor").matched_arc, Some(0));
    }

    #[test]
    fn full_width_answer_matches_ascii_key() {
        let q = indoor_outdoor();
        let m = evaluate_answer(&q, "ＯＵＴＤＯＯＲ");
        assert_eq!(m.matched_arc, Some(1));
        assert_eq!(m.matched_key.as_deref(), Some("outdoor"));
    }
}
