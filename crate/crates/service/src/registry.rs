use std::collections::BTreeMap;
use std::path::Path;
use std::sync::Arc;

use serde::Serialize;

use convflow::scenario::{check_source, has_errors, parse_scenario, Diagnostic, ScenarioDoc};

/// Read-only set of loaded scenarios, keyed by file stem.
#[derive(Debug, Default, Clone)]
pub struct ScenarioRegistry {
    docs: BTreeMap<String, Arc<ScenarioDoc>>,
}

#[derive(Debug)]
pub enum LoadError {
    Io(std::io::Error),
    Invalid { file: String, diagnostics: Vec<Diagnostic> },
}

impl std::fmt::Display for LoadError {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            LoadError::Io(e) => write!(f, "cannot read scenarios: {e}"),
            LoadError::Invalid { file, diagnostics } => {
                write!(f, "{file}: {} error(s)", diagnostics.iter().filter(|d| d.is_error()).count())?;
                for d in diagnostics.iter().filter(|d| d.is_error()) {
                    write!(f, "\n  {} {}", d.code.as_str(), d.message)?;
                }
                Ok(())
            }
        }
    }
}

impl std::error::Error for LoadError {}

#[derive(Debug, Clone, Serialize)]
pub struct SpotSummary {
    pub id: String,
    pub display_name: String,
    pub tags: Vec<String>,
}

#[derive(Debug, Clone, Serialize)]
pub struct ScenarioSummary {
    pub id: String,
    pub name: String,
    pub budget_s: f64,
    pub spots: Vec<SpotSummary>,
}

impl ScenarioRegistry {
    /// Load every `*.flow` file in `dir`. Any file with errors fails the load.
    pub fn load_dir(dir: &Path) -> Result<Self, LoadError> {
        let mut reg = ScenarioRegistry::default();
        let mut paths: Vec<_> = std::fs::read_dir(dir)
            .map_err(LoadError::Io)?
            .filter_map(|e| e.ok().map(|e| e.path()))
            .filter(|p| p.extension().is_some_and(|x| x == "flow"))
            .collect();
        paths.sort();
        for path in paths {
            let src = std::fs::read_to_string(&path).map_err(LoadError::Io)?;
            let file = path.display().to_string();
            let diagnostics = check_source(&src);
            if has_errors(&diagnostics) {
                return Err(LoadError::Invalid { file, diagnostics });
            }
            let doc = parse_scenario(&src).map_err(|diagnostics| LoadError::Invalid {
                file: file.clone(),
                diagnostics,
            })?;
            let id = path.file_stem().unwrap_or_default().to_string_lossy().into_owned();
            log::info!("loaded scenario `{id}` from {file}");
            reg.docs.insert(id, Arc::new(doc));
        }
        Ok(reg)
    }

    pub fn insert(&mut self, id: impl Into<String>, doc: ScenarioDoc) {
        self.docs.insert(id.into(), Arc::new(doc));
    }

    pub fn get(&self, id: &str) -> Option<Arc<ScenarioDoc>> {
        self.docs.get(id).cloned()
    }

    pub fn is_empty(&self) -> bool {
        self.docs.is_empty()
    }

    pub fn summaries(&self) -> Vec<ScenarioSummary> {
        self.docs
            .iter()
            .map(|(id, doc)| ScenarioSummary {
                id: id.clone(),
                name: doc.name.clone(),
                budget_s: doc.budget_s,
                spots: doc
                    .spots
                    .values()
                    .map(|s| SpotSummary {
                        id: s.id.clone(),
                        display_name: s.display_name.clone(),
                        tags: s.placetype_tags.clone(),
                    })
                    .collect(),
            })
            .collect()
    }
}
