use serde::{Deserialize, Serialize};

use convflow::engine::{Session, TranscriptEntry};
use convflow::recommend::RecommendationResult;
use convflow::simulate::{breakdown_rate, SurveyRecord};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SessionStats {
    pub questions_asked: usize,
    pub closed_questions_asked: usize,
    pub broken: usize,
    pub breakdown_rate_pct: f64,
    pub clock_s: f64,
    pub budget_s: f64,
}

/// Everything recorded about a finished session.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct StoredReport {
    pub session_id: String,
    pub scenario_id: String,
    pub seed: u64,
    pub spots: [String; 2],
    pub stats: SessionStats,
    pub breakdown_rate_pct: f64,
    pub vas_delta: Option<i64>,
    pub recommendation: Option<RecommendationResult>,
    pub survey: Option<SurveyRecord>,
    pub transcript: Vec<TranscriptEntry>,
}

impl StoredReport {
    pub fn build(scenario_id: &str, session: &Session, survey: Option<&SurveyRecord>) -> Self {
        let closed = session.closed_questions_asked();
        let broken = session.broken_count();
        let rate = breakdown_rate(broken as i64, closed as i64).unwrap_or(0.0);
        let pair = session.pair();
        StoredReport {
            session_id: session.id().to_string(),
            scenario_id: scenario_id.to_string(),
            seed: session.seed(),
            spots: [pair[0].id.clone(), pair[1].id.clone()],
            stats: SessionStats {
                questions_asked: session.memory().records.len(),
                closed_questions_asked: closed,
                broken,
                breakdown_rate_pct: rate,
                clock_s: session.clock_s(),
                budget_s: session.budget_s(),
            },
            breakdown_rate_pct: rate,
            vas_delta: survey.map(|s| s.vas_delta()),
            recommendation: session.recommendation().cloned(),
            survey: survey.cloned(),
            transcript: session.transcript().to_vec(),
        }
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("reports serialize")
    }
}
