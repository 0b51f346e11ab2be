use std::collections::HashMap;
use std::io::Read;
use std::sync::Arc;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use super::metrics::{breakdown_rate, Mean, MetricsError};
use super::persona::{AnswerPolicy, Persona};
use super::survey::{summarize_surveys, SurveyRecord, SurveySummary};
use crate::engine::{AnswerMemory, EngineError, SelectionPolicy, Session, SessionConfig, TranscriptEntry, Turn};
use crate::recommend::RecommendationResult;
use crate::rng::derive_seed;
use crate::scenario::ScenarioDoc;

#[derive(Debug, Error)]
pub enum SimError {
    #[error(transparent)]
    Engine(#[from] EngineError),
    #[error(transparent)]
    Metrics(#[from] MetricsError),
    #[error("invalid persona: {0}")]
    Persona(String),
    #[error("cannot read report table: {0}")]
    Csv(#[from] csv::Error),
}

/// Per-session metrics. Field names double as table column names.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SimReport {
    pub session_id: String,
    pub seed: u64,
    pub persona: String,
    pub questions_asked: usize,
    pub closed_questions_asked: usize,
    pub broken: usize,
    pub breakdown_rate_pct: f64,
    pub clock_s: f64,
    pub budget_s: f64,
    /// Estimate of the last tree admitted before the cutover.
    pub last_tree_estimate_s: f64,
    pub transcript_path: Option<String>,
    pub recommendation: Option<RecommendationResult>,
}

impl SimReport {
    /// A report carrying only counts, as read back from a table.
    pub fn from_counts(session_id: impl Into<String>, closed_questions_asked: usize, broken: usize) -> Result<Self, MetricsError> {
        let rate = breakdown_rate(broken as i64, closed_questions_asked as i64)?;
        Ok(SimReport {
            session_id: session_id.into(),
            seed: 0,
            persona: String::new(),
            questions_asked: closed_questions_asked,
            closed_questions_asked,
            broken,
            breakdown_rate_pct: rate,
            clock_s: 0.0,
            budget_s: 0.0,
            last_tree_estimate_s: 0.0,
            transcript_path: None,
            recommendation: None,
        })
    }
}

/// A finished simulated session.
#[derive(Debug, Clone)]
pub struct SimRun {
    pub report: SimReport,
    pub transcript: Vec<TranscriptEntry>,
    pub memory: AnswerMemory,
}

/// Drive one session to the end, answering with `persona`.
pub fn run_simulation(doc: Arc<ScenarioDoc>, persona: &Persona, cfg: SessionConfig) -> Result<SimRun, SimError> {
    persona.check().map_err(|e| SimError::Persona(e.to_string()))?;
    let seed = cfg.seed;
    let mut session = Session::start(doc.clone(), cfg)?;
    let mut responder = persona.responder(seed);
    let mut asked = 0;
    loop {
        match session.next_utterance()? {
            Turn::Finished => break,
            Turn::Utterance(u) if u.awaiting_input => {
                let id = u.node_id.as_deref().expect("questions carry a node id");
                let answer = responder.answer(&doc.nodes[id]);
                session.submit_answer(&answer)?;
                asked += 1;
            }
            Turn::Utterance(_) => {}
        }
    }
    let closed = session.closed_questions_asked();
    let broken = session.broken_count();
    let report = SimReport {
        session_id: session.id().to_string(),
        seed,
        persona: persona.name.clone(),
        questions_asked: asked,
        closed_questions_asked: closed,
        broken,
        breakdown_rate_pct: breakdown_rate(broken as i64, closed as i64)?,
        clock_s: session.clock_s(),
        budget_s: session.budget_s(),
        last_tree_estimate_s: session.last_tree_estimate(),
        transcript_path: None,
        recommendation: session.recommendation().cloned(),
    };
    Ok(SimRun {
        report,
        transcript: session.transcript().to_vec(),
        memory: session.memory().clone(),
    })
}

/// Personas cycled through by a `mixed` batch.
pub fn mixed_personas() -> Vec<Persona> {
    [
        AnswerPolicy::AlwaysFirstKey,
        AnswerPolicy::MatchWithProbability(0.9),
        AnswerPolicy::MatchWithProbability(0.8),
        AnswerPolicy::MatchWithProbability(0.95),
    ]
    .into_iter()
    .enumerate()
    .map(|(i, p)| Persona::new(p).with_seed(i as u64))
    .collect()
}

#[derive(Debug, Clone)]
pub struct BatchSpec {
    pub spots: [String; 2],
    pub policy: SelectionPolicy,
    pub operator_choice: Option<String>,
    pub base_seed: u64,
    pub sessions: usize,
}

impl BatchSpec {
    pub fn new(spot_a: impl Into<String>, spot_b: impl Into<String>, base_seed: u64, sessions: usize) -> Self {
        BatchSpec {
            spots: [spot_a.into(), spot_b.into()],
            policy: SelectionPolicy::Uniform,
            operator_choice: None,
            base_seed,
            sessions,
        }
    }

    /// Session ids `s01`, `s02`, ... padded to the batch size.
    pub fn session_id(&self, index: usize) -> String {
        let width = self.sessions.to_string().len().max(2);
        format!("s{:0width$}", index + 1)
    }

    pub fn session_seed(&self, index: usize) -> u64 {
        derive_seed(self.base_seed, index as u64)
    }

    pub fn config(&self, index: usize) -> SessionConfig {
        let [a, b] = self.spots.clone();
        let mut cfg = SessionConfig::new(a, b, self.session_seed(index))
            .with_policy(self.policy)
            .with_id(self.session_id(index));
        cfg.operator_choice = self.operator_choice.clone();
        cfg
    }
}

/// Run a batch in parallel. Session `i` answers with `personas[i % len]`;
/// results are in index order and do not depend on the worker count.
pub fn run_batch(doc: Arc<ScenarioDoc>, personas: &[Persona], spec: &BatchSpec) -> Result<Vec<SimRun>, SimError> {
    if personas.is_empty() {
        return Err(SimError::Persona("no personas given".into()));
    }
    (0..spec.sessions)
        .into_par_iter()
        .map(|i| run_simulation(doc.clone(), &personas[i % personas.len()], spec.config(i)))
        .collect()
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ScatterRow {
    pub session_id: String,
    pub breakdown_rate_pct: f64,
    pub vas_delta: Option<i64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Aggregate {
    pub sessions: usize,
    pub sessions_with_breakdown: usize,
    pub mean_breakdown_rate_pct: f64,
    pub scatter: Vec<ScatterRow>,
    pub survey: Option<SurveySummary>,
}

/// Mean breakdown rate, one scatter row per report (VAS delta joined by
/// session id), and survey means when surveys are given.
pub fn aggregate_reports(reports: &[SimReport], surveys: Option<&[SurveyRecord]>) -> Result<Aggregate, MetricsError> {
    if reports.is_empty() {
        return Err(MetricsError::Empty);
    }
    let mean: Mean = reports.iter().map(|r| r.breakdown_rate_pct).collect();
    let by_id: HashMap<&str, &SurveyRecord> = surveys
        .unwrap_or_default()
        .iter()
        .map(|s| (s.session_id.as_str(), s))
        .collect();
    let scatter = reports
        .iter()
        .map(|r| ScatterRow {
            session_id: r.session_id.clone(),
            breakdown_rate_pct: r.breakdown_rate_pct,
            vas_delta: by_id.get(r.session_id.as_str()).map(|s| s.vas_delta()),
        })
        .collect();
    let survey = match surveys {
        Some(rows) if !rows.is_empty() => Some(summarize_surveys(rows)?),
        _ => None,
    };
    Ok(Aggregate {
        sessions: reports.len(),
        sessions_with_breakdown: reports.iter().filter(|r| r.broken > 0).count(),
        mean_breakdown_rate_pct: mean.value().unwrap_or_default(),
        scatter,
        survey,
    })
}

pub const SCATTER_COLUMNS: [&str; 3] = ["session_id", "breakdown_rate_pct", "vas_delta"];
pub const REPORT_COLUMNS: [&str; 3] = ["session_id", "closed_questions_asked", "broken"];

pub fn scatter_csv(rows: &[ScatterRow]) -> String {
    let mut w = csv::Writer::from_writer(Vec::new());
    w.write_record(SCATTER_COLUMNS).expect("in-memory write");
    for r in rows {
        let delta = r.vas_delta.map(|d| d.to_string()).unwrap_or_default();
        w.write_record([r.session_id.as_str(), &format!("{:.2}", r.breakdown_rate_pct), &delta])
            .expect("in-memory write");
    }
    String::from_utf8(w.into_inner().expect("in-memory flush")).expect("csv output is UTF-8")
}

/// Count table with columns `session_id,closed_questions_asked,broken`;
/// extra columns are ignored.
pub fn reports_csv(reports: &[SimReport]) -> String {
    let mut w = csv::Writer::from_writer(Vec::new());
    w.write_record(["session_id", "closed_questions_asked", "broken", "breakdown_rate_pct"])
        .expect("in-memory write");
    for r in reports {
        w.write_record([
            r.session_id.clone(),
            r.closed_questions_asked.to_string(),
            r.broken.to_string(),
            format!("{:.2}", r.breakdown_rate_pct),
        ])
        .expect("in-memory write");
    }
    String::from_utf8(w.into_inner().expect("in-memory flush")).expect("csv output is UTF-8")
}

#[derive(Deserialize)]
struct CountRow {
    session_id: String,
    closed_questions_asked: i64,
    broken: i64,
}

pub fn read_reports<R: Read>(input: R) -> Result<Vec<SimReport>, SimError> {
    let mut reader = csv::ReaderBuilder::new().trim(csv::Trim::All).from_reader(input);
    let mut out = Vec::new();
    for row in reader.deserialize::<CountRow>() {
        let row = row?;
        breakdown_rate(row.broken, row.closed_questions_asked)?;
        out.push(SimReport::from_counts(
            row.session_id,
            row.closed_questions_asked as usize,
            row.broken as usize,
        )?);
    }
    Ok(out)
}
