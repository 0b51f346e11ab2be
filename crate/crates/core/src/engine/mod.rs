//! Turn-based execution of a scenario: phases, question selection under a
//! time budget, answer matching, memory and the transcript.

mod matching;
mod session;
mod types;

pub use matching::{evaluate_answer, normalize_text, MatchOutcome};
pub use session::{start_session, AnswerOutcome, EngineError, PoolEntry, Session, SessionConfig, Turn};
pub use types::{
    transcript_jsonl, AnswerMemory, AnswerRecord, Phase, SelectionPolicy, Speaker, TranscriptEntry, Utterance,
    UtteranceKind,
};
