//! Recursive-descent parser for the flow DSL.
//!
//! ```text
//! scenario   = "flow" STRING "{" param* item* parts "}" ;
//! param      = "budget" NUMBER "s" | "rate" NUMBER "cps" ;
//! item       = monologue | question | placetype | spot ;
//! monologue  = "monologue" ID "{" "say" STRING cue* ["->" ID] "}" ;
//! question   = ("question"|"openquestion") ID ["priority" NUMBER] ["tag" ID]
//!              "{" "ask" STRING cue* arc* [fallback] ["capture" ID] ["->" ID] "}" ;
//! arc        = "on" STRING {"," STRING} ["favorable"] ["reply" STRING] "->" ID ;
//! fallback   = "fallback" ["reply" STRING] ["->" ID] ;
//! placetype  = "placetype" ID "{" ID {"," ID} "}" ;
//! spot       = "spot" ID STRING "describe" ID "tags" ID {"," ID} ;
//! cue        = ("before"|"after") ID ;
//! parts      = "intro" idlist "startpoints" idlist "conclusion" idlist ;
//! idlist     = ID {"," ID} ;
//! ```
//!
//! Keywords are contextual, so any identifier may name a node. A syntax error
//! inside an item is reported and the parser resynchronizes at the next item
//! keyword of the flow body.

use indexmap::IndexMap;

use super::ast::{
    Arc, ContentNode, FallbackSpec, NodeKind, ScenarioDoc, SpotDef, DEFAULT_BUDGET_S,
    DEFAULT_FALLBACK_REPLY, DEFAULT_RATE_CPS,
};
use super::diagnostic::{has_errors, Code, Diagnostic, Pos};
use super::lexer::{tokenize, Tok, Token};
use super::validate::{validate, RefSite, SourceMap};
use crate::affect::Gesture;

const ITEM_KEYWORDS: [&str; 5] = ["monologue", "question", "openquestion", "placetype", "spot"];

/// Parse DSL source into a validated [`ScenarioDoc`].
///
/// All syntax and structural errors are collected; the result is `Err` when
/// any error was found. Diagnostics are ordered by discovery.
pub fn parse_scenario(src: &str) -> Result<ScenarioDoc, Vec<Diagnostic>> {
    let (tokens, mut diags) = tokenize(src);
    let mut p = Parser {
        toks: tokens,
        i: 0,
        depth: 0,
        diags: Vec::new(),
        map: SourceMap::default(),
    };
    let doc = p.scenario();
    diags.append(&mut p.diags);
    if has_errors(&diags) {
        return Err(diags);
    }
    let doc = doc.expect("no syntax errors implies a document");
    let structural = validate(&doc, Some(&p.map));
    if has_errors(&structural) {
        return Err(structural);
    }
    Ok(doc)
}

type PResult<T> = Result<T, ()>;

struct Parser {
    toks: Vec<Token>,
    i: usize,
    depth: i32,
    diags: Vec<Diagnostic>,
    map: SourceMap,
}

#[derive(Default)]
struct Builder {
    budget: Option<f64>,
    rate: Option<f64>,
    nodes: IndexMap<String, ContentNode>,
    banks: IndexMap<String, Vec<String>>,
    spots: IndexMap<String, SpotDef>,
}

impl Parser {
    fn peek(&self) -> &Tok {
        &self.toks[self.i].tok
    }

    fn pos(&self) -> Pos {
        self.toks[self.i].pos
    }

    fn bump(&mut self) -> Token {
        let t = self.toks[self.i].clone();
        match t.tok {
            Tok::LBrace => self.depth += 1,
            Tok::RBrace => self.depth -= 1,
            _ => {}
        }
        if !matches!(t.tok, Tok::Eof) {
            self.i += 1;
        }
        t
    }

    fn at_kw(&self, kw: &str) -> bool {
        matches!(self.peek(), Tok::Ident(s) if s == kw)
    }

    fn error<T>(&mut self, msg: impl Into<String>) -> PResult<T> {
        let d = Diagnostic::new(Code::Syntax, msg).at(Some(self.pos()));
        self.diags.push(d);
        Err(())
    }

    fn unexpected<T>(&mut self, expected: &str) -> PResult<T> {
        let found = self.peek().describe();
        self.error(format!("expected {expected}, found {found}"))
    }

    fn expect_kw(&mut self, kw: &str) -> PResult<Pos> {
        if self.at_kw(kw) {
            Ok(self.bump().pos)
        } else {
            self.unexpected(&format!("`{kw}`"))
        }
    }

    fn eat_kw(&mut self, kw: &str) -> bool {
        if self.at_kw(kw) {
            self.bump();
            true
        } else {
            false
        }
    }

    fn expect(&mut self, want: Tok) -> PResult<Pos> {
        if *self.peek() == want {
            Ok(self.bump().pos)
        } else {
            self.unexpected(&want.describe())
        }
    }

    fn expect_ident(&mut self, what: &str) -> PResult<(String, Pos)> {
        if let Tok::Ident(s) = self.peek() {
            let s = s.clone();
            let pos = self.bump().pos;
            Ok((s, pos))
        } else {
            self.unexpected(what)
        }
    }

    fn expect_str(&mut self, what: &str) -> PResult<String> {
        if let Tok::Str(s) = self.peek() {
            let s = s.clone();
            self.bump();
            Ok(s)
        } else {
            self.unexpected(what)
        }
    }

    fn expect_number(&mut self, what: &str) -> PResult<(f64, Pos)> {
        if let Tok::Number(n) = *self.peek() {
            let pos = self.bump().pos;
            Ok((n, pos))
        } else {
            self.unexpected(what)
        }
    }

    fn reference(&mut self, context: &'static str) -> PResult<String> {
        let (id, pos) = self.expect_ident("a node id")?;
        self.map.refs.push(RefSite {
            target: id.clone(),
            pos,
            context,
        });
        Ok(id)
    }

    fn id_list(&mut self, context: &'static str) -> PResult<Vec<String>> {
        let mut ids = vec![self.reference(context)?];
        while *self.peek() == Tok::Comma {
            self.bump();
            ids.push(self.reference(context)?);
        }
        Ok(ids)
    }

    fn ident_list(&mut self, what: &str) -> PResult<Vec<String>> {
        let mut ids = vec![self.expect_ident(what)?.0];
        while *self.peek() == Tok::Comma {
            self.bump();
            ids.push(self.expect_ident(what)?.0);
        }
        Ok(ids)
    }

    /// Skip to the next item keyword, `intro`, or the closing brace of the
    /// flow body.
    fn recover(&mut self, body_depth: i32) {
        loop {
            match self.peek() {
                Tok::Eof => return,
                Tok::RBrace if self.depth == body_depth => return,
                Tok::Ident(s)
                    if self.depth == body_depth
                        && (ITEM_KEYWORDS.contains(&s.as_str()) || s == "intro") =>
                {
                    return
                }
                _ => {
                    self.bump();
                }
            }
        }
    }

    fn scenario(&mut self) -> Option<ScenarioDoc> {
        if self.expect_kw("flow").is_err() {
            return None;
        }
        let name = self.expect_str("the flow name").ok()?;
        self.expect(Tok::LBrace).ok()?;
        let body_depth = self.depth;
        let mut b = Builder::default();

        while self.at_kw("budget") || self.at_kw("rate") {
            if self.param(&mut b).is_err() {
                self.recover(body_depth);
            }
        }

        let parts = loop {
            match self.peek().clone() {
                Tok::Ident(kw) if ITEM_KEYWORDS.contains(&kw.as_str()) => {
                    if self.item(&kw, &mut b).is_err() {
                        self.recover(body_depth);
                    }
                }
                Tok::Ident(kw) if kw == "intro" => break self.parts().ok(),
                Tok::Ident(kw) if kw == "budget" || kw == "rate" => {
                    let _ = self.error::<()>(format!(
                        "`{kw}` must appear before any monologue, question, placetype or spot"
                    ));
                    self.recover_param(body_depth);
                }
                Tok::RBrace | Tok::Eof => {
                    let _ = self.unexpected::<()>("`intro` (the intro/startpoints/conclusion parts)");
                    break None;
                }
                _ => {
                    let _ = self.unexpected::<()>(
                        "`monologue`, `question`, `openquestion`, `placetype`, `spot` or `intro`",
                    );
                    self.bump();
                    self.recover(body_depth);
                }
            }
        };

        let (introduction, startpoints, conclusion) = parts?;
        if self.expect(Tok::RBrace).is_ok() && *self.peek() != Tok::Eof {
            let _ = self.unexpected::<()>("end of input after the flow body");
        }
        Some(ScenarioDoc {
            name,
            budget_s: b.budget.unwrap_or(DEFAULT_BUDGET_S),
            speech_rate_cps: b.rate.unwrap_or(DEFAULT_RATE_CPS),
            introduction,
            startpoints,
            conclusion,
            nodes: b.nodes,
            placetype_banks: b.banks,
            spots: b.spots,
        })
    }

    fn recover_param(&mut self, body_depth: i32) {
        self.bump();
        self.recover(body_depth);
    }

    fn param(&mut self, b: &mut Builder) -> PResult<()> {
        let (kw, _) = self.expect_ident("a parameter")?;
        let (value, pos) = self.expect_number("a number")?;
        let (unit, slot) = if kw == "budget" {
            ("s", &mut b.budget)
        } else {
            ("cps", &mut b.rate)
        };
        self.expect_kw(unit)?;
        if value <= 0.0 {
            self.diags.push(
                Diagnostic::new(Code::Syntax, format!("`{kw}` must be positive")).at(Some(pos)),
            );
            return Err(());
        }
        if slot.is_some() {
            self.diags.push(
                Diagnostic::new(Code::Syntax, format!("duplicate `{kw}` parameter")).at(Some(pos)),
            );
            return Err(());
        }
        *slot = Some(value);
        Ok(())
    }

    fn item(&mut self, kw: &str, b: &mut Builder) -> PResult<()> {
        match kw {
            "monologue" => {
                let node = self.monologue()?;
                self.insert_node(b, node);
            }
            "question" | "openquestion" => {
                let node = self.question(kw == "openquestion")?;
                self.insert_node(b, node);
            }
            "placetype" => {
                self.bump();
                let (tag, pos) = self.expect_ident("a place-type tag")?;
                self.expect(Tok::LBrace)?;
                let ids = self.id_list("placetype bank")?;
                self.expect(Tok::RBrace)?;
                if b.banks.contains_key(&tag) {
                    self.diags.push(
                        Diagnostic::new(Code::DuplicateId, format!("placetype `{tag}` declared twice"))
                            .at(Some(pos)),
                    );
                } else {
                    b.banks.insert(tag, ids);
                }
            }
            _ => {
                self.bump();
                let (id, pos) = self.expect_ident("a spot id")?;
                let display_name = self.expect_str("the spot display name")?;
                self.expect_kw("describe")?;
                let description_node = self.reference("spot description")?;
                self.expect_kw("tags")?;
                let placetype_tags = self.ident_list("a place-type tag")?;
                if b.spots.contains_key(&id) {
                    self.diags.push(
                        Diagnostic::new(Code::DuplicateId, format!("spot `{id}` declared twice"))
                            .at(Some(pos)),
                    );
                } else {
                    self.map.spot_pos.insert(id.clone(), pos);
                    b.spots.insert(
                        id.clone(),
                        SpotDef {
                            id,
                            display_name,
                            description_node,
                            placetype_tags,
                        },
                    );
                }
            }
        }
        Ok(())
    }

    fn insert_node(&mut self, b: &mut Builder, node: (ContentNode, Pos)) {
        let (node, pos) = node;
        if b.nodes.contains_key(&node.id) {
            self.diags.push(
                Diagnostic::new(Code::DuplicateId, format!("node `{}` declared twice", node.id))
                    .at(Some(pos))
                    .on(node.id.clone()),
            );
            return;
        }
        self.map.node_pos.insert(node.id.clone(), pos);
        b.nodes.insert(node.id.clone(), node);
    }

    fn cues(&mut self, node: &mut ContentNode) -> PResult<()> {
        loop {
            let before = if self.at_kw("before") {
                true
            } else if self.at_kw("after") {
                false
            } else {
                return Ok(());
            };
            self.bump();
            let (name, pos) = self.expect_ident("a gesture id")?;
            let Some(gesture) = Gesture::from_name(&name) else {
                self.diags.push(
                    Diagnostic::new(
                        Code::UnknownGesture,
                        format!("unknown gesture `{name}` (known: {})", Gesture::names().join(", ")),
                    )
                    .at(Some(pos))
                    .on(node.id.clone()),
                );
                continue;
            };
            let slot = if before {
                &mut node.cue_before
            } else {
                &mut node.cue_after
            };
            if slot.is_some() {
                self.diags.push(
                    Diagnostic::new(Code::Syntax, "duplicate cue for the same timing")
                        .at(Some(pos))
                        .on(node.id.clone()),
                );
                return Err(());
            }
            *slot = Some(gesture);
        }
    }

    fn monologue(&mut self) -> PResult<(ContentNode, Pos)> {
        self.bump();
        let (id, pos) = self.expect_ident("a node id")?;
        self.expect(Tok::LBrace)?;
        self.expect_kw("say")?;
        let text = self.expect_str("the monologue text")?;
        let mut node = ContentNode::monologue(id, text);
        self.cues(&mut node)?;
        if *self.peek() == Tok::Arrow {
            self.bump();
            node.next = Some(self.reference("monologue continuation")?);
        }
        self.expect(Tok::RBrace)?;
        Ok((node, pos))
    }

    fn question(&mut self, open: bool) -> PResult<(ContentNode, Pos)> {
        self.bump();
        let (id, pos) = self.expect_ident("a node id")?;
        let mut node = ContentNode::monologue(id, String::new());
        node.kind = if open {
            NodeKind::OpenQuestion
        } else {
            NodeKind::ClosedQuestion
        };
        if self.eat_kw("priority") {
            let (n, npos) = self.expect_number("a priority")?;
            if n < 1.0 || n.fract() != 0.0 || n > u32::MAX as f64 {
                self.diags.push(
                    Diagnostic::new(Code::Syntax, "priority must be a positive integer")
                        .at(Some(npos))
                        .on(node.id.clone()),
                );
                return Err(());
            }
            node.priority = Some(n as u32);
        }
        if self.eat_kw("tag") {
            node.tag = Some(self.expect_ident("a tag label")?.0);
        }
        self.expect(Tok::LBrace)?;
        self.expect_kw("ask")?;
        node.text = self.expect_str("the question text")?;
        self.cues(&mut node)?;
        while self.at_kw("on") {
            let arc = self.arc()?;
            node.arcs.push(arc);
        }
        if self.eat_kw("fallback") {
            let mut fb = FallbackSpec {
                reply: DEFAULT_FALLBACK_REPLY.to_string(),
                next: None,
            };
            if self.eat_kw("reply") {
                fb.reply = self.expect_str("the fallback reply")?;
            }
            if *self.peek() == Tok::Arrow {
                self.bump();
                fb.next = Some(self.reference("fallback continuation")?);
            }
            node.fallback = Some(fb);
        }
        if self.eat_kw("capture") {
            node.capture_slot = Some(self.expect_ident("a memory slot name")?.0);
        }
        if *self.peek() == Tok::Arrow {
            self.bump();
            node.next = Some(self.reference("question continuation")?);
        }
        if *self.peek() != Tok::RBrace {
            return self.unexpected("`on`, `fallback`, `capture`, `->` or `}` in the question body");
        }
        self.bump();
        Ok((node, pos))
    }

    fn arc(&mut self) -> PResult<Arc> {
        self.expect_kw("on")?;
        let mut keys = vec![self.expect_str("a match key")?];
        while *self.peek() == Tok::Comma {
            self.bump();
            keys.push(self.expect_str("a match key")?);
        }
        let favorable = self.eat_kw("favorable");
        let reply = if self.eat_kw("reply") {
            Some(self.expect_str("the arc reply")?)
        } else {
            None
        };
        self.expect(Tok::Arrow)?;
        let next = self.reference("arc target")?;
        Ok(Arc {
            keys,
            favorable,
            reply,
            next,
        })
    }

    fn parts(&mut self) -> PResult<(Vec<String>, Vec<String>, Vec<String>)> {
        self.expect_kw("intro")?;
        let intro = self.id_list("introduction")?;
        self.expect_kw("startpoints")?;
        let starts = self.id_list("startpoints")?;
        self.expect_kw("conclusion")?;
        let concl = self.id_list("conclusion")?;
        Ok((intro, starts, concl))
    }
}
