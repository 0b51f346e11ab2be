mod support;

use convflow::scenario::{check_source, has_errors, lint_scenario, parse_scenario, serialize_scenario, Code};
use proptest::prelude::*;
use support::gen_doc;

proptest! {
    #![proptest_config(ProptestConfig::with_cases(300))]

    #[test]
    fn generated_docs_are_lint_clean(seed in any::<u64>()) {
        let doc = gen_doc(seed);
        let diags = lint_scenario(&doc);
        prop_assert!(!has_errors(&diags), "{diags:?}");
    }

    #[test]
    fn serialize_then_parse_is_identity(seed in any::<u64>()) {
        let doc = gen_doc(seed);
        let text = serialize_scenario(&doc);
        let back = parse_scenario(&text).map_err(|d| TestCaseError::fail(format!("{d:?}\n{text}")))?;
        prop_assert_eq!(&back, &doc);
        prop_assert_eq!(serialize_scenario(&back), text);
    }

    #[test]
    fn parsing_is_deterministic(seed in any::<u64>(), cut in 0usize..400) {
        // truncated sources exercise the error paths as well
        let text = serialize_scenario(&gen_doc(seed));
        let cut = text.char_indices().map(|(i, _)| i).nth(cut).unwrap_or(text.len());
        let src = &text[..cut];
        prop_assert_eq!(parse_scenario(src), parse_scenario(src));
        prop_assert_eq!(check_source(src), check_source(src));
    }

    #[test]
    fn truncated_source_reports_a_located_error(seed in any::<u64>(), cut in 1usize..200) {
        let text = serialize_scenario(&gen_doc(seed));
        let end = text.char_indices().map(|(i, _)| i).nth(cut).unwrap_or(text.len() - 2);
        let diags = parse_scenario(&text[..end]).unwrap_err();
        prop_assert!(diags.iter().any(|d| d.is_error() && d.pos.is_some()), "{diags:?}");
    }
}

#[test]
fn arc_order_follows_source() {
    let doc = parse_scenario(
        r#"flow "t" {
            monologue a { say "a" }
            question q { ask "?" on "zeta" -> a on "alpha" -> a on "mid" -> a fallback }
            intro a startpoints q conclusion a
        }"#,
    )
    .unwrap();
    let keys: Vec<&str> = doc.nodes["q"].arcs.iter().map(|a| a.keys[0].as_str()).collect();
    assert_eq!(keys, ["zeta", "alpha", "mid"]);
}

#[test]
fn non_default_budget_survives() {
    let mut doc = gen_doc(1);
    doc.budget_s = 200.0;
    let text = serialize_scenario(&doc);
    assert!(text.contains("budget 200 s"));
    assert_eq!(parse_scenario(&text).unwrap().budget_s, 200.0);
}

#[test]
fn single_arc_in_source_is_arc_count() {
    let diags = check_source(
        r#"flow "t" { monologue a { say "a" } question q { ask "?" on "x" -> a fallback } intro a startpoints q conclusion a }"#,
    );
    assert!(diags.iter().any(|d| d.code == Code::ArcCount));
}
