use std::fmt::Write;

use super::ast::{ContentNode, NodeKind, ScenarioDoc};

fn quote(s: &str) -> String {
    let mut out = String::with_capacity(s.len() + 2);
    out.push('"');
    for c in s.chars() {
        match c {
            '"' => out.push_str("\\\""),
            '\\' => out.push_str("\\\\"),
            c => out.push(c),
        }
    }
    out.push('"');
    out
}

/// Render a document in canonical DSL form. Parsing the output yields a
/// document equal to `doc`.
pub fn serialize_scenario(doc: &ScenarioDoc) -> String {
    let mut out = String::new();
    writeln!(out, "flow {} {{", quote(&doc.name)).unwrap();
    writeln!(out, "  budget {} s", doc.budget_s).unwrap();
    writeln!(out, "  rate {} cps", doc.speech_rate_cps).unwrap();

    for node in doc.nodes.values() {
        out.push('\n');
        write_node(&mut out, node);
    }
    if !doc.placetype_banks.is_empty() {
        out.push('\n');
    }
    for (tag, ids) in &doc.placetype_banks {
        writeln!(out, "  placetype {tag} {{ {} }}", ids.join(", ")).unwrap();
    }
    if !doc.spots.is_empty() {
        out.push('\n');
    }
    for spot in doc.spots.values() {
        writeln!(
            out,
            "  spot {} {} describe {} tags {}",
            spot.id,
            quote(&spot.display_name),
            spot.description_node,
            spot.placetype_tags.join(", ")
        )
        .unwrap();
    }
    out.push('\n');
    writeln!(out, "  intro {}", doc.introduction.join(", ")).unwrap();
    writeln!(out, "  startpoints {}", doc.startpoints.join(", ")).unwrap();
    writeln!(out, "  conclusion {}", doc.conclusion.join(", ")).unwrap();
    out.push_str("}\n");
    out
}

fn write_node(out: &mut String, node: &ContentNode) {
    let (kw, verb) = match node.kind {
        NodeKind::Monologue => ("monologue", "say"),
        NodeKind::ClosedQuestion => ("question", "ask"),
        NodeKind::OpenQuestion => ("openquestion", "ask"),
    };
    write!(out, "  {kw} {}", node.id).unwrap();
    if let Some(p) = node.priority {
        write!(out, " priority {p}").unwrap();
    }
    if let Some(t) = &node.tag {
        write!(out, " tag {t}").unwrap();
    }
    out.push_str(" {\n");
    writeln!(out, "    {verb} {}", quote(&node.text)).unwrap();
    if let Some(g) = node.cue_before {
        writeln!(out, "    before {}", g.name()).unwrap();
    }
    if let Some(g) = node.cue_after {
        writeln!(out, "    after {}", g.name()).unwrap();
    }
    for arc in &node.arcs {
        let keys: Vec<String> = arc.keys.iter().map(|k| quote(k)).collect();
        write!(out, "    on {}", keys.join(", ")).unwrap();
        if arc.favorable {
            out.push_str(" favorable");
        }
        if let Some(r) = &arc.reply {
            write!(out, " reply {}", quote(r)).unwrap();
        }
        writeln!(out, " -> {}", arc.next).unwrap();
    }
    if let Some(fb) = &node.fallback {
        write!(out, "    fallback reply {}", quote(&fb.reply)).unwrap();
        if let Some(n) = &fb.next {
            write!(out, " -> {n}").unwrap();
        }
        out.push('\n');
    }
    if let Some(slot) = &node.capture_slot {
        writeln!(out, "    capture {slot}").unwrap();
    }
    if let Some(n) = &node.next {
        writeln!(out, "    -> {n}").unwrap();
    }
    out.push_str("  }\n");
}
