mod support;

use std::collections::HashSet;
use std::sync::Arc;

use convflow::engine::{SessionConfig, Session, SelectionPolicy, Turn, UtteranceKind};
use convflow::recommend::recommendation_bound;
use convflow::rng::SimRng;
use convflow::scenario::{Estimator, NodeKind};
use proptest::prelude::*;
use support::gen_doc;

proptest! {
    #![proptest_config(ProptestConfig::with_cases(400))]

    #[test]
    fn every_session_finishes_within_bounds(doc_seed in any::<u64>(), seed in any::<u64>(), weighted in any::<bool>(), answer_seed in any::<u64>()) {
        let doc = Arc::new(gen_doc(doc_seed));
        let policy = if weighted { SelectionPolicy::Weighted } else { SelectionPolicy::Uniform };
        let mut s = Session::start(doc.clone(), SessionConfig::new("spot_a", "spot_b", seed).with_policy(policy)).unwrap();
        let mut answers = SimRng::new(answer_seed);
        let words = ["yes", "no", "family", "indoor", "", "zzz", "はい", "roller coaster"];
        let mut asked = HashSet::new();
        let mut last_clock = 0.0;
        let mut stages = Vec::new();
        let mut fallbacks = 0;
        let mut finished = false;
        for _ in 0..5_000 {
            match s.next_utterance().unwrap() {
                Turn::Finished => { finished = true; break; }
                Turn::Utterance(u) => {
                    prop_assert!(u.clock_s >= last_clock);
                    last_clock = u.clock_s;
                    prop_assert_eq!(u.awaiting_input, u.kind == UtteranceKind::Ask);
                    stages.push(s.stage());
                    if u.kind == UtteranceKind::Fallback { fallbacks += 1; }
                    if u.awaiting_input {
                        let id = u.node_id.clone().unwrap();
                        prop_assert!(asked.insert(id.clone()), "{} asked twice", id);
                        let w = words[answers.below(words.len() as u64) as usize];
                        prop_assert!(s.submit_answer(w).is_ok());
                    }
                }
            }
        }
        prop_assert!(finished);
        prop_assert!(stages.windows(2).all(|w| w[0] <= w[1]));
        prop_assert!(stages.iter().all(|&k| (1..=4).contains(&k)));
        prop_assert_eq!(fallbacks, s.broken_count());
        let transcript = s.transcript();
        prop_assert!(transcript.last().map(|e| e.kind == "conclude").unwrap_or(false));

        // fixed cost: introduction, both descriptions and the reserve
        let est = Estimator::for_doc(&doc);
        let descs: f64 = s.pair().iter().map(|p| est.part(&doc, std::slice::from_ref(&p.description_node))).sum();
        let fixed = est.part(&doc, &doc.introduction) + descs + est.part(&doc, &doc.conclusion)
            + recommendation_bound(&doc, s.pair(), &est);
        let bound = doc.budget_s.max(fixed) + s.last_tree_estimate() + 1e-9;
        prop_assert!(s.clock_s() <= bound, "clock {} bound {}", s.clock_s(), bound);

        for r in &s.memory().records {
            let node = &doc.nodes[&r.question_id];
            if r.broken { prop_assert!(r.matched_arc.is_none()); prop_assert_eq!(node.kind, NodeKind::ClosedQuestion); }
            if r.favorable { prop_assert!(node.arcs[r.matched_arc.unwrap()].favorable); }
        }
    }
}
