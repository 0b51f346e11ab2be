use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::engine::normalize_text;
use crate::rng::{derive_seed, SimRng};
use crate::scenario::ContentNode;

/// Answer given when a persona means not to match any key.
pub const NON_MATCH_TOKEN: &str = "hmm zqx";

/// Free text for open questions without arcs.
pub const OPEN_ANSWER: &str = "nothing special";

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case", tag = "mode", content = "value")]
pub enum AnswerPolicy {
    AlwaysFirstKey,
    NeverMatch,
    MatchWithProbability(f64),
    /// Answers used in order, cycling when exhausted.
    Scripted(Vec<String>),
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Persona {
    pub name: String,
    pub policy: AnswerPolicy,
    pub seed: u64,
}

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
#[error("invalid persona `{0}`")]
pub struct PersonaError(pub String);

impl Persona {
    pub fn new(policy: AnswerPolicy) -> Self {
        let name = match &policy {
            AnswerPolicy::AlwaysFirstKey => "always_first_key".to_string(),
            AnswerPolicy::NeverMatch => "never_match".to_string(),
            AnswerPolicy::MatchWithProbability(p) => format!("match:{p}"),
            AnswerPolicy::Scripted(_) => "scripted".to_string(),
        };
        Persona { name, policy, seed: 0 }
    }

    pub fn with_seed(mut self, seed: u64) -> Self {
        self.seed = seed;
        self
    }

    pub fn check(&self) -> Result<(), PersonaError> {
        match &self.policy {
            AnswerPolicy::MatchWithProbability(p) if !(0.0..=1.0).contains(p) => {
                Err(PersonaError(format!("probability {p} is outside [0, 1]")))
            }
            AnswerPolicy::Scripted(lines) if lines.is_empty() => Err(PersonaError("empty script".into())),
            _ => Ok(()),
        }
    }

    /// A fresh answering state for one session.
    pub fn responder(&self, session_seed: u64) -> Responder<'_> {
        Responder {
            persona: self,
            rng: SimRng::new(derive_seed(session_seed, self.seed)),
            cursor: 0,
        }
    }
}

impl FromStr for AnswerPolicy {
    type Err = PersonaError;

    /// `always_first_key`, `never_match` or `match:P`.
    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "always_first_key" => Ok(AnswerPolicy::AlwaysFirstKey),
            "never_match" => Ok(AnswerPolicy::NeverMatch),
            _ => {
                let p = s
                    .strip_prefix("match:")
                    .and_then(|p| p.parse::<f64>().ok())
                    .ok_or_else(|| PersonaError(s.to_string()))?;
                let policy = AnswerPolicy::MatchWithProbability(p);
                Persona::new(policy.clone()).check()?;
                Ok(policy)
            }
        }
    }
}

impl fmt::Display for Persona {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.name)
    }
}

pub struct Responder<'a> {
    persona: &'a Persona,
    rng: SimRng,
    cursor: usize,
}

fn first_key(question: &ContentNode) -> Option<&str> {
    question.arcs.first().and_then(|a| a.keys.first()).map(String::as_str)
}

/// A token guaranteed not to contain any normalized key of the question.
fn non_matching(question: &ContentNode) -> &'static str {
    let token = normalize_text(NON_MATCH_TOKEN);
    let hit = question
        .arcs
        .iter()
        .flat_map(|a| a.keys.iter())
        .any(|k| token.contains(&normalize_text(k)));
    if hit {
        ""
    } else {
        NON_MATCH_TOKEN
    }
}

impl Responder<'_> {
    pub fn answer(&mut self, question: &ContentNode) -> String {
        match &self.persona.policy {
            AnswerPolicy::AlwaysFirstKey => first_key(question).unwrap_or(OPEN_ANSWER).to_string(),
            AnswerPolicy::NeverMatch => non_matching(question).to_string(),
            AnswerPolicy::MatchWithProbability(p) => {
                // both draws happen on every question so that the stream of
                // uniforms is the same for every p
                let u = self.rng.unit();
                let k = if question.arcs.is_empty() {
                    0
                } else {
                    self.rng.below(question.arcs.len() as u64) as usize
                };
                if u < *p {
                    question
                        .arcs
                        .get(k)
                        .and_then(|a| a.keys.first())
                        .cloned()
                        .unwrap_or_else(|| OPEN_ANSWER.to_string())
                } else {
                    non_matching(question).to_string()
                }
            }
            AnswerPolicy::Scripted(lines) => {
                let line = lines[self.cursor % lines.len()].clone();
                self.cursor += 1;
                line
            }
        }
    }
}
