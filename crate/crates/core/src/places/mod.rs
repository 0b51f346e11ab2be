//! Place-type tags for spots and the question banks they select.
//!
//! Two providers sit behind [`PlacesClient`]: a fixture file read from disk
//! and a live HTTP search endpoint. Provider type strings are mapped to the
//! internal tag vocabulary through a shipped table.

mod client;
mod tags;

pub use client::{
    FixtureEntry, HttpTransport, PlacesClient, PlacesTransport, ProviderConfig, ProviderMode, ProviderPlace,
    API_KEY_ENV,
};
pub use tags::{normalize_tag, MappedTag, TagMap};

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::scenario::{NodeId, ScenarioDoc};

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct PlaceRecord {
    pub spot_id: String,
    pub display_name: String,
    /// Internal tags, lowercase snake_case.
    pub tags: Vec<String>,
    /// Provider strings the mapping table did not cover.
    #[serde(default)]
    pub unmapped: Vec<String>,
    /// Unix seconds.
    pub fetched_at: u64,
}

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum PlacesError {
    #[error("E_SPOT_UNKNOWN: no place data for `{0}`")]
    SpotUnknown(String),
    #[error("E_PROVIDER_UNAVAILABLE: {0}")]
    ProviderUnavailable(String),
    #[error("E_AUTH: the provider rejected the API key")]
    Auth,
    #[error("invalid provider configuration: {0}")]
    Config(String),
}

impl PlacesError {
    pub fn code(&self) -> &'static str {
        match self {
            PlacesError::SpotUnknown(_) => "E_SPOT_UNKNOWN",
            PlacesError::ProviderUnavailable(_) => "E_PROVIDER_UNAVAILABLE",
            PlacesError::Auth => "E_AUTH",
            PlacesError::Config(_) => "E_CONFIG",
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Default)]
pub struct TagQuestions {
    pub questions: Vec<NodeId>,
    /// Tags with no bank in the document.
    pub unknown_tags: usize,
}

/// Bank questions for each tag in order, de-duplicated, keeping the first
/// occurrence.
pub fn questions_for_tags<S: AsRef<str>>(tags: &[S], doc: &ScenarioDoc) -> TagQuestions {
    let mut out = TagQuestions::default();
    for tag in tags {
        match doc.placetype_banks.get(tag.as_ref()) {
            Some(bank) => {
                for id in bank {
                    if !out.questions.contains(id) {
                        out.questions.push(id.clone());
                    }
                }
            }
            None => out.unknown_tags += 1,
        }
    }
    out
}
