//! Symbolic facial expressions and gestures attached to robot utterances.
//!
//! Three expressions are used: `mood_base` is the resting face, `full_smile`
//! accompanies self-introduction and questions, and `keep_smile` accompanies
//! sympathetic replies. `keep_smile` escalates through four stages as more
//! questions are answered.

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::engine::UtteranceKind;
use crate::scenario::ContentNode;

pub const MAX_STAGE: u8 = 4;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Gesture {
    Nod,
    Backchannel,
    Wave,
    LeanForward,
}

impl Gesture {
    pub const ALL: [Gesture; 4] = [Gesture::Nod, Gesture::Backchannel, Gesture::Wave, Gesture::LeanForward];

    pub fn name(self) -> &'static str {
        match self {
            Gesture::Nod => "nod",
            Gesture::Backchannel => "backchannel",
            Gesture::Wave => "wave",
            Gesture::LeanForward => "lean_forward",
        }
    }

    pub fn from_name(s: &str) -> Option<Gesture> {
        Gesture::ALL.into_iter().find(|g| g.name() == s)
    }

    pub fn names() -> Vec<&'static str> {
        Gesture::ALL.iter().map(|g| g.name()).collect()
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Timing {
    Before,
    After,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct GestureCue {
    pub id: Gesture,
    pub timing: Timing,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ExpressionName {
    MoodBase,
    KeepSmile,
    FullSmile,
}

impl ExpressionName {
    pub fn as_str(self) -> &'static str {
        match self {
            ExpressionName::MoodBase => "mood_base",
            ExpressionName::KeepSmile => "keep_smile",
            ExpressionName::FullSmile => "full_smile",
        }
    }
}

/// Face parameters, each in [-1, 1].
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct AffectParams {
    pub valence: f64,
    pub arousal: f64,
    pub dominance: f64,
    pub real_intention: f64,
}

impl AffectParams {
    pub const NEUTRAL: AffectParams = AffectParams::new(0.0, 0.0, 0.0, 0.0);

    pub const fn new(valence: f64, arousal: f64, dominance: f64, real_intention: f64) -> Self {
        AffectParams {
            valence,
            arousal,
            dominance,
            real_intention,
        }
    }

    fn values(&self) -> [f64; 4] {
        [self.valence, self.arousal, self.dominance, self.real_intention]
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ExpressionSpec {
    pub name: ExpressionName,
    /// Present only for `keep_smile`.
    pub stage: Option<u8>,
    pub params: AffectParams,
}

#[derive(Debug, Error, PartialEq)]
pub enum AffectError {
    #[error("parameter {field} = {value} is outside [-1, 1]")]
    OutOfRange { field: String, value: f64 },
    #[error("keep_smile valence must not decrease between stages")]
    NonMonotoneValence,
    #[error("invalid expression table: {0}")]
    Parse(String),
}

/// Parameter values per expression. The defaults are artifact choices and
/// can be replaced by loading a JSON table.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ExpressionTable {
    pub mood_base: AffectParams,
    pub full_smile: AffectParams,
    pub keep_smile: [AffectParams; 4],
}

impl Default for ExpressionTable {
    fn default() -> Self {
        ExpressionTable {
            mood_base: AffectParams::NEUTRAL,
            full_smile: AffectParams::new(1.0, 0.4, 0.0, 0.8),
            keep_smile: [
                AffectParams::new(0.2, 0.0, 0.0, 0.2),
                AffectParams::new(0.4, 0.0, 0.0, 0.4),
                AffectParams::new(0.6, 0.0, 0.0, 0.6),
                AffectParams::new(0.8, 0.0, 0.0, 0.8),
            ],
        }
    }
}

/// One row of the exported expression registry.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RegistryEntry {
    pub name: ExpressionName,
    pub stage: Option<u8>,
    pub valence: f64,
    pub arousal: f64,
    pub dominance: f64,
    pub real_intention: f64,
}

impl ExpressionTable {
    pub fn from_json(text: &str) -> Result<Self, AffectError> {
        let table: ExpressionTable = serde_json::from_str(text).map_err(|e| AffectError::Parse(e.to_string()))?;
        table.check()?;
        Ok(table)
    }

    pub fn check(&self) -> Result<(), AffectError> {
        let names = ["valence", "arousal", "dominance", "real_intention"];
        let all = std::iter::once(&self.mood_base)
            .chain(std::iter::once(&self.full_smile))
            .chain(self.keep_smile.iter());
        for p in all {
            for (field, value) in names.iter().zip(p.values()) {
                if !(-1.0..=1.0).contains(&value) {
                    return Err(AffectError::OutOfRange {
                        field: field.to_string(),
                        value,
                    });
                }
            }
        }
        if self.keep_smile.windows(2).any(|w| w[0].valence > w[1].valence) {
            return Err(AffectError::NonMonotoneValence);
        }
        Ok(())
    }

    pub fn spec(&self, name: ExpressionName, stage: u8) -> ExpressionSpec {
        match name {
            ExpressionName::MoodBase => ExpressionSpec {
                name,
                stage: None,
                params: self.mood_base,
            },
            ExpressionName::FullSmile => ExpressionSpec {
                name,
                stage: None,
                params: self.full_smile,
            },
            ExpressionName::KeepSmile => {
                let stage = stage.clamp(1, MAX_STAGE);
                ExpressionSpec {
                    name,
                    stage: Some(stage),
                    params: self.keep_smile[usize::from(stage - 1)],
                }
            }
        }
    }

    /// Pick the expression for an utterance kind at the given smile stage.
    pub fn expression_for(&self, kind: UtteranceKind, stage: u8) -> ExpressionSpec {
        let name = match kind {
            UtteranceKind::Intro | UtteranceKind::Ask => ExpressionName::FullSmile,
            UtteranceKind::Reply | UtteranceKind::Fallback => ExpressionName::KeepSmile,
            UtteranceKind::Describe
            | UtteranceKind::Recommend
            | UtteranceKind::Rationale
            | UtteranceKind::Conclude => ExpressionName::MoodBase,
        };
        self.spec(name, stage)
    }

    /// Flat registry for UI consumers: mood_base, full_smile, then the four
    /// keep_smile stages.
    pub fn registry(&self) -> Vec<RegistryEntry> {
        let row = |name, stage, p: &AffectParams| RegistryEntry {
            name,
            stage,
            valence: p.valence,
            arousal: p.arousal,
            dominance: p.dominance,
            real_intention: p.real_intention,
        };
        let mut out = vec![
            row(ExpressionName::MoodBase, None, &self.mood_base),
            row(ExpressionName::FullSmile, None, &self.full_smile),
        ];
        for (i, p) in self.keep_smile.iter().enumerate() {
            out.push(row(ExpressionName::KeepSmile, Some(i as u8 + 1), p));
        }
        out
    }
}

/// Expression under the default table.
pub fn expression_for(kind: UtteranceKind, stage: u8) -> ExpressionSpec {
    ExpressionTable::default().expression_for(kind, stage)
}

/// Smile stage after `answered_count` answered questions: one step every two
/// answers, capped at four.
pub fn advance_stage(answered_count: usize) -> u8 {
    (1 + answered_count / 2).min(usize::from(MAX_STAGE)) as u8
}

/// Declared cues of a node. Questions without an after-cue nod while
/// listening.
pub fn gestures_for(node: &ContentNode) -> (Option<GestureCue>, Option<GestureCue>) {
    let before = node.cue_before.map(|id| GestureCue {
        id,
        timing: Timing::Before,
    });
    let after = node
        .cue_after
        .or(node.kind.is_question().then_some(Gesture::Nod))
        .map(|id| GestureCue {
            id,
            timing: Timing::After,
        });
    (before, after)
}
