use std::collections::HashMap;
use std::path::{Path, PathBuf};
use std::sync::{Arc, Mutex};
use std::time::{Duration, Instant, SystemTime, UNIX_EPOCH};

use serde::Deserialize;

use super::tags::{normalize_tag, TagMap};
use super::{PlaceRecord, PlacesError};

/// Environment variable holding the live provider's API key.
pub const API_KEY_ENV: &str = "CONVFLOW_PLACES_API_KEY";

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ProviderMode {
    Fixture,
    Live,
}

#[derive(Debug, Clone)]
pub struct ProviderConfig {
    pub mode: ProviderMode,
    pub fixture_path: Option<PathBuf>,
    pub endpoint: Option<String>,
    pub api_key: Option<String>,
    pub cache_ttl_s: u64,
}

impl ProviderConfig {
    pub fn fixture(path: impl Into<PathBuf>) -> Self {
        ProviderConfig {
            mode: ProviderMode::Fixture,
            fixture_path: Some(path.into()),
            endpoint: None,
            api_key: None,
            cache_ttl_s: 0,
        }
    }

    pub fn live(endpoint: impl Into<String>, api_key: impl Into<String>, cache_ttl_s: u64) -> Self {
        ProviderConfig {
            mode: ProviderMode::Live,
            fixture_path: None,
            endpoint: Some(endpoint.into()),
            api_key: Some(api_key.into()),
            cache_ttl_s,
        }
    }

    /// Live configuration with the key taken from [`API_KEY_ENV`].
    pub fn live_from_env(endpoint: impl Into<String>, cache_ttl_s: u64) -> Result<Self, PlacesError> {
        let key = std::env::var(API_KEY_ENV)
            .map_err(|_| PlacesError::Config(format!("{API_KEY_ENV} is not set")))?;
        Ok(ProviderConfig::live(endpoint, key, cache_ttl_s))
    }

    pub fn check(&self) -> Result<(), PlacesError> {
        match self.mode {
            ProviderMode::Fixture => match &self.fixture_path {
                Some(p) if p.is_file() => Ok(()),
                Some(p) => Err(PlacesError::Config(format!("fixture `{}` is not readable", p.display()))),
                None => Err(PlacesError::Config("fixture mode needs a fixture path".into())),
            },
            ProviderMode::Live => {
                if self.endpoint.as_deref().unwrap_or("").is_empty() {
                    return Err(PlacesError::Config("live mode needs an endpoint".into()));
                }
                if self.api_key.as_deref().unwrap_or("").is_empty() {
                    return Err(PlacesError::Config("live mode needs an API key".into()));
                }
                Ok(())
            }
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Deserialize)]
pub struct FixtureEntry {
    pub display_name: String,
    pub tags: Vec<String>,
    #[serde(default)]
    pub fetched_at: u64,
}

/// A single provider search hit.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ProviderPlace {
    pub name: String,
    pub types: Vec<String>,
}

pub trait PlacesTransport: Send + Sync {
    fn search(&self, endpoint: &str, api_key: &str, query: &str) -> Result<ProviderPlace, PlacesError>;
}

/// Text-search over HTTP. Expects a JSON body of the form
/// `{"status": "...", "results": [{"name": "...", "types": [...]}]}`.
pub struct HttpTransport {
    agent: ureq::Agent,
}

impl Default for HttpTransport {
    fn default() -> Self {
        let agent = ureq::Agent::config_builder()
            .timeout_global(Some(Duration::from_secs(10)))
            .http_status_as_error(false)
            .build()
            .into();
        HttpTransport { agent }
    }
}

#[derive(Deserialize)]
struct SearchResponse {
    #[serde(default)]
    status: String,
    #[serde(default)]
    results: Vec<SearchHit>,
}

#[derive(Deserialize)]
struct SearchHit {
    name: String,
    #[serde(default)]
    types: Vec<String>,
}

impl PlacesTransport for HttpTransport {
    fn search(&self, endpoint: &str, api_key: &str, query: &str) -> Result<ProviderPlace, PlacesError> {
        let mut resp = self
            .agent
            .get(endpoint)
            .query("query", query)
            .query("key", api_key)
            .call()
            .map_err(|e| PlacesError::ProviderUnavailable(e.to_string()))?;
        match resp.status().as_u16() {
            401 | 403 => return Err(PlacesError::Auth),
            200..=299 => {}
            code => return Err(PlacesError::ProviderUnavailable(format!("HTTP {code}"))),
        }
        let body = resp
            .body_mut()
            .read_to_string()
            .map_err(|e| PlacesError::ProviderUnavailable(e.to_string()))?;
        let parsed: SearchResponse = serde_json::from_str(&body)
            .map_err(|e| PlacesError::ProviderUnavailable(format!("malformed response: {e}")))?;
        match parsed.status.as_str() {
            "REQUEST_DENIED" => return Err(PlacesError::Auth),
            "ZERO_RESULTS" => return Err(PlacesError::SpotUnknown(query.to_string())),
            _ => {}
        }
        let hit = parsed
            .results
            .into_iter()
            .next()
            .ok_or_else(|| PlacesError::SpotUnknown(query.to_string()))?;
        Ok(ProviderPlace {
            name: hit.name,
            types: hit.types,
        })
    }
}

struct CacheEntry {
    record: PlaceRecord,
    stored: Instant,
}

/// Shareable place-type resolver. The cache is internally synchronized and
/// at most one live request per spot is in flight.
pub struct PlacesClient {
    cfg: ProviderConfig,
    fixture: HashMap<String, FixtureEntry>,
    transport: Arc<dyn PlacesTransport>,
    mapping: TagMap,
    cache: Mutex<HashMap<String, CacheEntry>>,
    flights: Mutex<HashMap<String, Arc<Mutex<()>>>>,
}

impl PlacesClient {
    pub fn new(cfg: ProviderConfig) -> Result<Self, PlacesError> {
        Self::with_transport(cfg, Arc::new(HttpTransport::default()))
    }

    pub fn with_transport(cfg: ProviderConfig, transport: Arc<dyn PlacesTransport>) -> Result<Self, PlacesError> {
        cfg.check()?;
        let fixture = match (&cfg.mode, &cfg.fixture_path) {
            (ProviderMode::Fixture, Some(path)) => load_fixture(path)?,
            _ => HashMap::new(),
        };
        Ok(PlacesClient {
            cfg,
            fixture,
            transport,
            mapping: TagMap::default(),
            cache: Mutex::new(HashMap::new()),
            flights: Mutex::new(HashMap::new()),
        })
    }

    pub fn with_mapping(mut self, mapping: TagMap) -> Self {
        self.mapping = mapping;
        self
    }

    /// Resolve a spot id (or, in fixture mode, a display name) to its tags.
    pub fn get_place_types(&self, spot_ref: &str) -> Result<PlaceRecord, PlacesError> {
        match self.cfg.mode {
            ProviderMode::Fixture => self.lookup_fixture(spot_ref),
            ProviderMode::Live => self.lookup_live(spot_ref),
        }
    }

    fn lookup_fixture(&self, spot_ref: &str) -> Result<PlaceRecord, PlacesError> {
        let (id, entry) = match self.fixture.get_key_value(spot_ref) {
            Some(hit) => hit,
            None => self
                .fixture
                .iter()
                .filter(|(_, e)| e.display_name.eq_ignore_ascii_case(spot_ref.trim()))
                .min_by(|a, b| a.0.cmp(b.0))
                .ok_or_else(|| PlacesError::SpotUnknown(spot_ref.to_string()))?,
        };
        let mut tags: Vec<String> = Vec::new();
        for t in &entry.tags {
            let t = normalize_tag(t);
            if !t.is_empty() && !tags.contains(&t) {
                tags.push(t);
            }
        }
        Ok(PlaceRecord {
            spot_id: id.clone(),
            display_name: entry.display_name.clone(),
            tags,
            unmapped: Vec::new(),
            fetched_at: entry.fetched_at,
        })
    }

    fn cached(&self, spot: &str, fresh_only: bool) -> Option<PlaceRecord> {
        let cache = self.cache.lock().unwrap();
        let entry = cache.get(spot)?;
        let ttl = Duration::from_secs(self.cfg.cache_ttl_s);
        if fresh_only && entry.stored.elapsed() >= ttl {
            return None;
        }
        Some(entry.record.clone())
    }

    fn lookup_live(&self, spot_ref: &str) -> Result<PlaceRecord, PlacesError> {
        if let Some(hit) = self.cached(spot_ref, true) {
            return Ok(hit);
        }
        let gate = {
            let mut flights = self.flights.lock().unwrap();
            flights.entry(spot_ref.to_string()).or_default().clone()
        };
        let _guard = gate.lock().unwrap();
        // another caller may have filled the cache while we waited
        if let Some(hit) = self.cached(spot_ref, true) {
            return Ok(hit);
        }
        let endpoint = self.cfg.endpoint.as_deref().unwrap_or_default();
        let key = self.cfg.api_key.as_deref().unwrap_or_default();
        match self.transport.search(endpoint, key, spot_ref) {
            Ok(place) => {
                let (tags, unmapped) = self.mapping.map_all(&place.types);
                let record = PlaceRecord {
                    spot_id: spot_ref.to_string(),
                    display_name: place.name,
                    tags,
                    unmapped,
                    fetched_at: SystemTime::now().duration_since(UNIX_EPOCH).map(|d| d.as_secs()).unwrap_or(0),
                };
                self.cache.lock().unwrap().insert(
                    spot_ref.to_string(),
                    CacheEntry {
                        record: record.clone(),
                        stored: Instant::now(),
                    },
                );
                Ok(record)
            }
            Err(PlacesError::ProviderUnavailable(msg)) => {
                self.cached(spot_ref, false).ok_or(PlacesError::ProviderUnavailable(msg))
            }
            Err(other) => Err(other),
        }
    }
}

fn load_fixture(path: &Path) -> Result<HashMap<String, FixtureEntry>, PlacesError> {
    let text = std::fs::read_to_string(path)
        .map_err(|e| PlacesError::Config(format!("cannot read `{}`: {e}", path.display())))?;
    let entries: HashMap<String, FixtureEntry> = serde_json::from_str(&text)
        .map_err(|e| PlacesError::Config(format!("bad fixture `{}`: {e}", path.display())))?;
    if let Some((id, _)) = entries.iter().find(|(_, e)| e.display_name.trim().is_empty()) {
        return Err(PlacesError::Config(format!("fixture spot `{id}` has an empty display_name")));
    }
    Ok(entries)
}

#[cfg(test)]
mod tests {
    use std::sync::atomic::{AtomicUsize, Ordering};

    use super::*;

    struct Stub {
        calls: AtomicUsize,
        reply: Mutex<Result<ProviderPlace, PlacesError>>,
        delay: Duration,
    }

    impl Stub {
        fn new(reply: Result<ProviderPlace, PlacesError>) -> Arc<Self> {
            Arc::new(Stub {
                calls: AtomicUsize::new(0),
                reply: Mutex::new(reply),
                delay: Duration::ZERO,
            })
        }

        fn set(&self, reply: Result<ProviderPlace, PlacesError>) {
            *self.reply.lock().unwrap() = reply;
        }

        fn calls(&self) -> usize {
            self.calls.load(Ordering::SeqCst)
        }
    }

    impl PlacesTransport for Stub {
        fn search(&self, _: &str, _: &str, _: &str) -> Result<ProviderPlace, PlacesError> {
            self.calls.fetch_add(1, Ordering::SeqCst);
            std::thread::sleep(self.delay);
            self.reply.lock().unwrap().clone()
        }
    }

    fn park() -> ProviderPlace {
        ProviderPlace {
            name: "Park X".into(),
            types: vec!["amusement_park".into(), "establishment".into(), "volcano".into()],
        }
    }

    fn fixture_file() -> tempfile::NamedTempFile {
        let f = tempfile::NamedTempFile::new().unwrap();
        std::fs::write(
            f.path(),
            r#"{"park_x": {"display_name": "Park X", "tags": ["amusement_park"]},
                "museum_y": {"display_name": "Museum Y", "tags": ["Museum", "establishment"], "fetched_at": 7}}"#,
        )
        .unwrap();
        f
    }

    #[test]
    fn fixture_lookup_by_id_and_name() {
        let f = fixture_file();
        let stub = Stub::new(Ok(park()));
        let client = PlacesClient::with_transport(ProviderConfig::fixture(f.path()), stub.clone()).unwrap();
        let rec = client.get_place_types("park_x").unwrap();
        assert_eq!(rec.tags, vec!["amusement_park"]);
        assert_eq!(rec.display_name, "Park X");
        let rec = client.get_place_types("museum y").unwrap();
        assert_eq!(rec.spot_id, "museum_y");
        assert_eq!(rec.tags, vec!["museum", "establishment"]);
        assert_eq!(rec.fetched_at, 7);
        assert_eq!(client.get_place_types("park_x").unwrap(), client.get_place_types("park_x").unwrap());
        assert_eq!(stub.calls(), 0, "fixture mode never contacts the live provider");
    }

    #[test]
    fn fixture_miss() {
        let f = fixture_file();
        let client = PlacesClient::new(ProviderConfig::fixture(f.path())).unwrap();
        assert_eq!(client.get_place_types("nowhere"), Err(PlacesError::SpotUnknown("nowhere".into())));
    }

    #[test]
    fn config_validation() {
        assert!(matches!(
            PlacesClient::new(ProviderConfig::fixture("/no/such/file.json")),
            Err(PlacesError::Config(_))
        ));
        assert!(ProviderConfig::live("", "k", 60).check().is_err());
        assert!(ProviderConfig::live("http://x", "", 60).check().is_err());
        assert!(ProviderConfig::live("http://x", "k", 60).check().is_ok());
    }

    #[test]
    fn live_maps_types_and_caches() {
        let stub = Stub::new(Ok(park()));
        let client =
            PlacesClient::with_transport(ProviderConfig::live("http://stub", "k", 3600), stub.clone()).unwrap();
        let rec = client.get_place_types("Park X").unwrap();
        assert_eq!(rec.tags, vec!["amusement_park", "establishment"]);
        assert_eq!(rec.unmapped, vec!["volcano"]);
        client.get_place_types("Park X").unwrap();
        assert_eq!(stub.calls(), 1);
    }

    #[test]
    fn network_down_uses_warm_cache() {
        let stub = Stub::new(Ok(park()));
        // ttl 0: every call goes to the network
        let client = PlacesClient::with_transport(ProviderConfig::live("http://stub", "k", 0), stub.clone()).unwrap();
        let warm = client.get_place_types("Park X").unwrap();
        stub.set(Err(PlacesError::ProviderUnavailable("connection refused".into())));
        assert_eq!(client.get_place_types("Park X").unwrap(), warm);
        assert_eq!(stub.calls(), 2);
        assert!(matches!(client.get_place_types("Other"), Err(PlacesError::ProviderUnavailable(_))));
    }

    #[test]
    fn rejected_key() {
        let stub = Stub::new(Err(PlacesError::Auth));
        let client = PlacesClient::with_transport(ProviderConfig::live("http://stub", "bad", 60), stub).unwrap();
        assert_eq!(client.get_place_types("Park X"), Err(PlacesError::Auth));
    }

    #[test]
    fn concurrent_requests_coalesce() {
        let stub = Arc::new(Stub {
            calls: AtomicUsize::new(0),
            reply: Mutex::new(Ok(park())),
            delay: Duration::from_millis(50),
        });
        let client =
            Arc::new(PlacesClient::with_transport(ProviderConfig::live("http://stub", "k", 3600), stub.clone()).unwrap());
        let handles: Vec<_> = (0..8)
            .map(|_| {
                let c = client.clone();
                std::thread::spawn(move || c.get_place_types("Park X").unwrap())
            })
            .collect();
        for h in handles {
            assert_eq!(h.join().unwrap().display_name, "Park X");
        }
        assert_eq!(stub.calls(), 1);
    }

    #[test]
    fn http_transport_unreachable() {
        // port 9 on localhost: connection refused
        let t = HttpTransport::default();
        assert!(matches!(
            t.search("http://127.0.0.1:9/search", "k", "x"),
            Err(PlacesError::ProviderUnavailable(_))
        ));
    }
}
