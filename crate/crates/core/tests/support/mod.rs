//! Seeded generators shared by the property and acceptance tests.
#![allow(dead_code)]

use convflow::affect::Gesture;
use convflow::rng::SimRng;
use convflow::scenario::{Arc, ContentNode, FallbackSpec, NodeKind, ScenarioDoc, SpotDef};
use indexmap::IndexMap;

const WORDS: [&str; 16] = [
    "yes", "no", "indoor", "outdoor", "family", "alone", "train", "car", "maybe", "often", "tea", "coffee", "はい",
    "Straße", "ＡＢＣ", "roller coaster",
];

const TEXTS: [&str; 8] = [
    "Hello there.",
    "Are you indoor or outdoor",
    "She said \"hi\" twice.",
    "A back\\slash path.",
    "こんにちは、元気ですか",
    "Who will attend with you",
    "",
    "Tabs\tand  spaces",
];

fn pick<'a>(rng: &mut SimRng, xs: &[&'a str]) -> &'a str {
    xs[rng.below(xs.len() as u64) as usize]
}

fn chance(rng: &mut SimRng, pct: u64) -> bool {
    rng.below(100) < pct
}

fn text(rng: &mut SimRng, i: usize) -> String {
    let t = pick(rng, &TEXTS);
    if t.is_empty() {
        format!("line {i}")
    } else {
        format!("{t} {i}")
    }
}

fn cue(rng: &mut SimRng) -> Option<Gesture> {
    chance(rng, 30).then(|| Gesture::ALL[rng.below(4) as usize])
}

/// A valid document with two spots, generated from `seed`. Nodes only point
/// forward (monologues to later monologues, questions to later questions or
/// any monologue), so the graph is acyclic by construction.
pub fn gen_doc(seed: u64) -> ScenarioDoc {
    let mut rng = SimRng::new(seed);
    let n_mono = 3 + rng.below(4) as usize;
    let n_q = 1 + rng.below(7) as usize;
    let mono = |i: usize| format!("m{i}");
    let q = |i: usize| format!("q{i}");
    let mut nodes = IndexMap::new();

    for i in 0..n_mono {
        let mut m = ContentNode::monologue(mono(i), text(&mut rng, i));
        m.cue_before = cue(&mut rng);
        m.cue_after = cue(&mut rng);
        if i + 1 < n_mono && chance(&mut rng, 30) {
            m.next = Some(mono(i + 1 + rng.below((n_mono - i - 1) as u64) as usize));
        }
        nodes.insert(m.id.clone(), m);
    }
    let mut targeted = vec![false; n_q];
    for i in 0..n_q {
        let target = |rng: &mut SimRng, targeted: &mut Vec<bool>| {
            if i + 1 < n_q && chance(rng, 30) {
                let j = i + 1 + rng.below((n_q - i - 1) as u64) as usize;
                targeted[j] = true;
                q(j)
            } else {
                mono(rng.below(n_mono as u64) as usize)
            }
        };
        let closed = chance(&mut rng, 70);
        let n_arcs = if closed { 2 + rng.below(2) } else { rng.below(3) } as usize;
        let mut arcs = Vec::new();
        for _ in 0..n_arcs {
            let n_keys = 1 + rng.below(2) as usize;
            let keys: Vec<String> = (0..n_keys).map(|_| pick(&mut rng, &WORDS).to_string()).collect();
            let next = target(&mut rng, &mut targeted);
            arcs.push(Arc {
                keys,
                favorable: chance(&mut rng, 50),
                reply: chance(&mut rng, 50).then(|| text(&mut rng, 100 + i)),
                next,
            });
        }
        let mut node = if closed {
            let mut n = ContentNode::closed_question(q(i), text(&mut rng, i), arcs);
            let reply = if chance(&mut rng, 50) { "I see.".to_string() } else { text(&mut rng, 200 + i) };
            let next = chance(&mut rng, 30).then(|| mono(rng.below(n_mono as u64) as usize));
            n.fallback = Some(FallbackSpec { reply, next });
            n
        } else {
            let next = target(&mut rng, &mut targeted);
            let mut n = ContentNode::open_question(q(i), text(&mut rng, i), next);
            n.arcs = arcs;
            if chance(&mut rng, 60) {
                n.capture_slot = Some(format!("slot{i}"));
            }
            n
        };
        node.cue_before = cue(&mut rng);
        node.cue_after = cue(&mut rng);
        if chance(&mut rng, 40) {
            node.priority = Some(1 + rng.below(4) as u32);
        }
        if chance(&mut rng, 60) {
            node.tag = Some(pick(&mut rng, &["individual", "task"]).to_string());
        }
        nodes.insert(node.id.clone(), node);
    }
    let mut startpoints: Vec<String> = (0..n_q).filter(|&i| !targeted[i]).map(q).collect();
    if startpoints.is_empty() {
        startpoints.push(q(0));
    }
    let mut banks = IndexMap::new();
    for tag in ["amusement_park", "museum"] {
        if chance(&mut rng, 60) {
            let ids: Vec<String> = (0..n_q).filter(|_| chance(&mut rng, 40)).map(q).collect();
            if !ids.is_empty() {
                banks.insert(tag.to_string(), ids);
            }
        }
    }
    let mut spots = IndexMap::new();
    for (id, name) in [("spot_a", "Spot \"A\""), ("spot_b", "Spot B")] {
        let mut tags = vec![pick(&mut rng, &["amusement_park", "museum", "establishment"]).to_string()];
        if chance(&mut rng, 40) {
            tags.push("establishment".to_string());
        }
        tags.dedup();
        spots.insert(
            id.to_string(),
            SpotDef {
                id: id.to_string(),
                display_name: name.to_string(),
                description_node: mono(rng.below(n_mono as u64) as usize),
                placetype_tags: tags,
            },
        );
    }
    let budget_s = match rng.below(3) {
        0 => 330.0,
        1 => 120.0 + rng.below(400) as f64,
        _ => 200.5,
    };
    ScenarioDoc {
        name: format!("gen_{seed}"),
        budget_s,
        speech_rate_cps: if chance(&mut rng, 80) { 10.0 } else { 8.5 },
        introduction: vec![mono(0)],
        startpoints,
        conclusion: vec![mono(n_mono - 1)],
        nodes,
        placetype_banks: banks,
        spots,
    }
}

pub fn closed_questions(doc: &ScenarioDoc) -> Vec<String> {
    doc.nodes
        .values()
        .filter(|n| n.kind == NodeKind::ClosedQuestion)
        .map(|n| n.id.clone())
        .collect()
}
