use convflow::engine::{evaluate_answer, normalize_text};
use convflow::scenario::{Arc, ContentNode};
use proptest::prelude::*;
use unicode_normalization::UnicodeNormalization;

/// Separately written reference: NFKC, lowercase, split on whitespace, rejoin.
fn oracle_normalize(s: &str) -> String {
    let nfkc: String = s.nfkc().collect();
    nfkc.to_lowercase().split_whitespace().collect::<Vec<_>>().join(" ")
}

/// Collect every matching (arc, key) pair, then take the smallest position.
fn oracle_match(arcs: &[Vec<String>], answer: &str) -> Option<(usize, String)> {
    let a = oracle_normalize(answer);
    let mut hits = Vec::new();
    for (i, keys) in arcs.iter().enumerate() {
        for (j, k) in keys.iter().enumerate() {
            let k = oracle_normalize(k);
            if !k.is_empty() && a.contains(k.as_str()) {
                hits.push((i, j));
            }
        }
    }
    hits.into_iter().min().map(|(i, j)| (i, arcs[i][j].clone()))
}

fn fragment() -> impl Strategy<Value = String> {
    prop_oneof![
        Just("yes".to_string()),
        Just("No".to_string()),
        Just("INDOOR".to_string()),
        Just("out door".to_string()),
        Just("ｆａｍｉｌｙ".to_string()),
        Just("family".to_string()),
        Just("  ".to_string()),
        Just("ﬁne".to_string()),
        Just("は い".to_string()),
        "[a-c ]{1,4}",
    ]
}

fn arcs_strategy() -> impl Strategy<Value = Vec<Vec<String>>> {
    prop::collection::vec(prop::collection::vec(fragment(), 1..3), 2..5)
}

fn question(arcs: &[Vec<String>]) -> ContentNode {
    let arcs = arcs
        .iter()
        .map(|keys| {
            let refs: Vec<&str> = keys.iter().map(String::as_str).collect();
            Arc::new(&refs, "next")
        })
        .collect();
    ContentNode::closed_question("q", "?", arcs)
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(2000))]

    #[test]
    fn evaluate_matches_brute_force(arcs in arcs_strategy(), parts in prop::collection::vec(fragment(), 0..5)) {
        let answer = parts.join(" ");
        let got = evaluate_answer(&question(&arcs), &answer);
        let want = oracle_match(&arcs, &answer);
        prop_assert_eq!(got.matched_arc, want.as_ref().map(|w| w.0));
        prop_assert_eq!(got.matched_key, want.map(|w| w.1));
    }

    #[test]
    fn normalize_agrees_and_is_idempotent(s in "\\PC{0,24}") {
        let n = normalize_text(&s);
        prop_assert_eq!(&n, &oracle_normalize(&s));
        prop_assert_eq!(normalize_text(&n), n.clone());
        prop_assert!(!n.starts_with(' ') && !n.ends_with(' ') && !n.contains("  "));
    }
}

#[test]
fn normalize_examples() {
    assert_eq!(normalize_text("  InDoor "), "indoor");
    assert_eq!(normalize_text("ＡＢＣ１２３"), "abc123");
    assert_eq!(normalize_text(""), "");
}

#[test]
fn match_examples() {
    let q = question(&[vec!["indoor".into()], vec!["outdoor".into()]]);
    assert_eq!(evaluate_answer(&q, "definitely Indoor").matched_arc, Some(0));
    assert_eq!(evaluate_answer(&q, "I like both the same").matched_arc, None);
    assert_eq!(evaluate_answer(&q, "indoor but sometimes outdoor").matched_arc, Some(0));
    assert_eq!(evaluate_answer(&q, "").matched_arc, None);
}
