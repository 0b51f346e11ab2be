//! Scripted personas, batch simulation, breakdown metrics and survey
//! analysis.

mod metrics;
mod persona;
mod run;
mod survey;

pub use metrics::{breakdown_rate, round2, vas_delta, Mean, MetricsError, VAS_MAX};
pub use persona::{AnswerPolicy, Persona, PersonaError, Responder, NON_MATCH_TOKEN, OPEN_ANSWER};
pub use run::{
    aggregate_reports, mixed_personas, read_reports, reports_csv, run_batch, run_simulation, scatter_csv, Aggregate,
    BatchSpec, ScatterRow, SimError, SimReport, SimRun, REPORT_COLUMNS, SCATTER_COLUMNS,
};
pub use survey::{
    read_surveys, summarize_surveys, write_surveys, SurveyError, SurveyRecord, SurveySummary, ITEM_MAX, ITEM_MIN,
    SURVEY_COLUMNS, SURVEY_ITEMS,
};
