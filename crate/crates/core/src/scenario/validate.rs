use std::collections::HashMap;

use super::ast::{NodeKind, ScenarioDoc};
use super::diagnostic::{Code, Diagnostic, Pos};
use crate::engine::normalize_text;

/// Source positions recorded by the parser, kept outside the AST so that
/// documents compare equal regardless of layout.
#[derive(Debug, Default, Clone)]
pub struct SourceMap {
    pub node_pos: HashMap<String, Pos>,
    pub spot_pos: HashMap<String, Pos>,
    pub refs: Vec<RefSite>,
}

#[derive(Debug, Clone)]
pub struct RefSite {
    pub target: String,
    pub pos: Pos,
    pub context: &'static str,
}

/// Structural invariants of a document. Every finding is an error.
pub fn validate(doc: &ScenarioDoc, map: Option<&SourceMap>) -> Vec<Diagnostic> {
    let mut out = Vec::new();
    let node_pos = |id: &str| map.and_then(|m| m.node_pos.get(id).copied());

    if !(doc.budget_s > 0.0 && doc.budget_s.is_finite()) {
        out.push(Diagnostic::new(Code::Syntax, "budget must be positive"));
    }
    if !(doc.speech_rate_cps > 0.0 && doc.speech_rate_cps.is_finite()) {
        out.push(Diagnostic::new(Code::Syntax, "speech rate must be positive"));
    }
    for (part, ids) in [
        ("introduction", &doc.introduction),
        ("startpoints", &doc.startpoints),
        ("conclusion", &doc.conclusion),
    ] {
        if ids.is_empty() {
            out.push(Diagnostic::new(Code::Syntax, format!("{part} must not be empty")));
        }
    }

    for (id, node) in &doc.nodes {
        let at = node_pos(id);
        let err = |code, msg: String| Diagnostic::new(code, msg).at(at).on(id.clone());
        if node.priority == Some(0) {
            out.push(err(Code::Syntax, "priority must be at least 1".into()));
        }
        match node.kind {
            NodeKind::Monologue => {
                if !node.arcs.is_empty() || node.fallback.is_some() || node.capture_slot.is_some() {
                    out.push(err(Code::Kind, "a monologue cannot have arcs, fallback or capture".into()));
                }
            }
            NodeKind::ClosedQuestion => {
                if node.arcs.len() < 2 {
                    out.push(err(
                        Code::ArcCount,
                        format!("closed question needs at least 2 arcs, found {}", node.arcs.len()),
                    ));
                }
                if node.fallback.is_none() {
                    out.push(err(Code::NoFallback, "closed question has no fallback".into()));
                }
                if node.next.is_some() {
                    out.push(err(
                        Code::Kind,
                        "closed question continues through its arcs and fallback, not `->`".into(),
                    ));
                }
            }
            NodeKind::OpenQuestion => {
                if node.fallback.is_some() {
                    out.push(err(Code::Kind, "open question cannot declare a fallback".into()));
                }
                if node.next.is_none() {
                    out.push(err(Code::NoNext, "open question needs a `->` continuation".into()));
                }
            }
        }
        for (i, arc) in node.arcs.iter().enumerate() {
            if arc.keys.is_empty() || arc.keys.iter().any(|k| normalize_text(k).is_empty()) {
                out.push(err(Code::EmptyKey, format!("arc {i} has an empty match key")));
            }
        }
        if let Some(fb) = &node.fallback {
            if fb.reply.trim().is_empty() {
                out.push(err(Code::EmptyReply, "fallback reply is empty".into()));
            }
        }
    }

    // references
    match map {
        Some(m) => {
            for site in &m.refs {
                if !doc.nodes.contains_key(&site.target) {
                    out.push(
                        Diagnostic::new(
                            Code::DanglingRef,
                            format!("{} refers to unknown node `{}`", site.context, site.target),
                        )
                        .at(Some(site.pos)),
                    );
                }
            }
        }
        None => {
            for (context, target) in reference_sites(doc) {
                if !doc.nodes.contains_key(target) {
                    out.push(Diagnostic::new(
                        Code::DanglingRef,
                        format!("{context} refers to unknown node `{target}`"),
                    ));
                }
            }
        }
    }

    // unilateral parts
    let mut unilateral: Vec<(&str, &str)> = Vec::new();
    unilateral.extend(doc.introduction.iter().map(|r| ("introduction", r.as_str())));
    unilateral.extend(doc.conclusion.iter().map(|r| ("conclusion", r.as_str())));
    unilateral.extend(doc.spots.values().map(|s| ("spot description", s.description_node.as_str())));
    for (part, root) in unilateral {
        let mut cur = doc.nodes.get(root);
        let mut steps = 0;
        while let Some(node) = cur {
            if node.kind != NodeKind::Monologue {
                out.push(
                    Diagnostic::new(Code::Kind, format!("{part} `{root}` must contain only monologues"))
                        .at(node_pos(&node.id))
                        .on(node.id.clone()),
                );
                break;
            }
            steps += 1;
            if steps > doc.nodes.len() {
                break; // cycle; reported below
            }
            cur = node.next.as_deref().and_then(|n| doc.nodes.get(n));
        }
    }
    for (tag, ids) in &doc.placetype_banks {
        for id in ids {
            if let Some(node) = doc.nodes.get(id) {
                if !node.kind.is_question() {
                    out.push(
                        Diagnostic::new(Code::Kind, format!("placetype `{tag}` lists `{id}`, which is not a question"))
                            .at(node_pos(id))
                            .on(id.clone()),
                    );
                }
            }
        }
    }

    out.extend(find_cycles(doc).into_iter().map(|id| {
        Diagnostic::new(Code::Cycle, format!("node `{id}` is on a cycle; trees must be acyclic"))
            .at(node_pos(&id))
            .on(id)
    }));
    out
}

fn reference_sites(doc: &ScenarioDoc) -> Vec<(&'static str, &str)> {
    let mut out = Vec::new();
    for node in doc.nodes.values() {
        for succ in node.successors() {
            out.push(("continuation", succ));
        }
    }
    out.extend(doc.introduction.iter().map(|s| ("introduction", s.as_str())));
    out.extend(doc.startpoints.iter().map(|s| ("startpoints", s.as_str())));
    out.extend(doc.conclusion.iter().map(|s| ("conclusion", s.as_str())));
    for ids in doc.placetype_banks.values() {
        out.extend(ids.iter().map(|s| ("placetype bank", s.as_str())));
    }
    out.extend(doc.spots.values().map(|s| ("spot description", s.description_node.as_str())));
    out
}

/// One representative node per cycle, in document order.
fn find_cycles(doc: &ScenarioDoc) -> Vec<String> {
    #[derive(Clone, Copy, PartialEq)]
    enum Mark {
        New,
        Active,
        Done,
    }
    let index: HashMap<&str, usize> = doc.nodes.keys().enumerate().map(|(i, k)| (k.as_str(), i)).collect();
    let succ: Vec<Vec<usize>> = doc
        .nodes
        .values()
        .map(|n| n.successors().into_iter().filter_map(|s| index.get(s).copied()).collect())
        .collect();
    let mut mark = vec![Mark::New; succ.len()];
    let mut reported = Vec::new();

    for start in 0..succ.len() {
        if mark[start] != Mark::New {
            continue;
        }
        // iterative DFS: (node, next child index)
        let mut stack = vec![(start, 0usize)];
        mark[start] = Mark::Active;
        while let Some(&mut (v, ref mut child)) = stack.last_mut() {
            if *child < succ[v].len() {
                let w = succ[v][*child];
                *child += 1;
                match mark[w] {
                    Mark::New => {
                        mark[w] = Mark::Active;
                        stack.push((w, 0));
                    }
                    Mark::Active => {
                        if !reported.contains(&w) {
                            reported.push(w);
                        }
                    }
                    Mark::Done => {}
                }
            } else {
                mark[v] = Mark::Done;
                stack.pop();
            }
        }
    }
    reported.sort_unstable();
    let keys: Vec<&String> = doc.nodes.keys().collect();
    reported.into_iter().map(|i| keys[i].clone()).collect()
}
