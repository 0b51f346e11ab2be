use std::collections::{HashMap, HashSet};

use super::ast::{NodeKind, ScenarioDoc};
use super::diagnostic::{Code, Diagnostic};
use super::estimate::Estimator;
use super::parser::parse_scenario;
use super::validate::validate;

/// Design checks over a parsed document. Structural invariants are checked
/// again here so that documents built in code get the same treatment.
pub fn lint_scenario(doc: &ScenarioDoc) -> Vec<Diagnostic> {
    let mut out = validate(doc, None);
    if out.iter().any(Diagnostic::is_error) {
        return out;
    }
    let est = Estimator::for_doc(doc);

    let fixed = est.part(doc, &doc.introduction) + est.part(doc, &doc.conclusion);
    if fixed > doc.budget_s {
        out.push(Diagnostic::new(
            Code::BudgetInfeasible,
            format!(
                "introduction and conclusion alone take an estimated {fixed:.1} s, over the {} s budget",
                doc.budget_s
            ),
        ));
    }

    // reachability, counting how many roots reach each node
    let mut roots: Vec<&str> = Vec::new();
    roots.extend(doc.introduction.iter().map(String::as_str));
    roots.extend(doc.startpoints.iter().map(String::as_str));
    roots.extend(doc.conclusion.iter().map(String::as_str));
    for ids in doc.placetype_banks.values() {
        roots.extend(ids.iter().map(String::as_str));
    }
    roots.extend(doc.spots.values().map(|s| s.description_node.as_str()));
    let mut seen_roots = HashSet::new();
    let mut reach_count: HashMap<&str, usize> = HashMap::new();
    for root in roots {
        if !seen_roots.insert(root) {
            continue;
        }
        let mut visited = HashSet::new();
        let mut stack = vec![root];
        while let Some(id) = stack.pop() {
            if !visited.insert(id) {
                continue;
            }
            *reach_count.entry(id).or_default() += 1;
            if let Some(node) = doc.nodes.get(id) {
                stack.extend(node.successors());
            }
        }
    }
    for id in doc.nodes.keys() {
        match reach_count.get(id.as_str()).copied().unwrap_or(0) {
            0 => out.push(
                Diagnostic::new(Code::Unreachable, format!("node `{id}` is not reachable from any part"))
                    .on(id.clone()),
            ),
            1 => {}
            n => out.push(
                Diagnostic::new(
                    Code::SharedNode,
                    format!("node `{id}` is shared by {n} trees; each tree should own its nodes"),
                )
                .on(id.clone()),
            ),
        }
    }

    let any_favorable = doc
        .nodes
        .values()
        .filter(|n| n.kind.is_question())
        .flat_map(|n| &n.arcs)
        .any(|a| a.favorable);
    if !any_favorable {
        out.push(Diagnostic::new(
            Code::NoFavorable,
            "no arc is marked favorable; recommendations will have no rationale",
        ));
    }

    for spot in doc.spots.values() {
        let mut any = false;
        for tag in &spot.placetype_tags {
            if doc.placetype_banks.contains_key(tag) {
                any = true;
            } else {
                out.push(Diagnostic::new(
                    Code::TagNoBank,
                    format!("spot `{}` tag `{tag}` has no placetype bank", spot.id),
                ));
            }
        }
        if !any {
            out.push(Diagnostic::new(
                Code::SpotNoPlacetype,
                format!("spot `{}` has no matching placetype bank", spot.id),
            ));
        }
    }
    debug_assert!(doc.nodes.values().all(|n| n.kind != NodeKind::ClosedQuestion || n.fallback.is_some()));
    out
}

/// Parse then lint: every diagnostic a source file produces.
pub fn check_source(src: &str) -> Vec<Diagnostic> {
    match parse_scenario(src) {
        Ok(doc) => lint_scenario(&doc),
        Err(diags) => diags,
    }
}
