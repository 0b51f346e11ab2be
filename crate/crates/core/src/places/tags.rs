use std::collections::HashMap;

const SHIPPED_MAP: &str = include_str!("../../data/place_type_map.json");

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum MappedTag {
    Known(String),
    Unmapped(String),
}

/// Provider type string → internal tag.
#[derive(Debug, Clone)]
pub struct TagMap {
    table: HashMap<String, String>,
}

impl Default for TagMap {
    fn default() -> Self {
        TagMap::from_json(SHIPPED_MAP).expect("shipped place-type map is valid JSON")
    }
}

impl TagMap {
    pub fn from_json(text: &str) -> Result<Self, serde_json::Error> {
        let raw: HashMap<String, String> = serde_json::from_str(text)?;
        let table = raw
            .into_iter()
            .map(|(k, v)| (normalize_tag(&k), normalize_tag(&v)))
            .collect();
        Ok(TagMap { table })
    }

    pub fn map(&self, provider_type: &str) -> MappedTag {
        let key = normalize_tag(provider_type);
        match self.table.get(&key) {
            Some(tag) => MappedTag::Known(tag.clone()),
            None => MappedTag::Unmapped(provider_type.to_string()),
        }
    }

    /// Map a list, preserving first-seen order of internal tags.
    pub fn map_all<S: AsRef<str>>(&self, types: &[S]) -> (Vec<String>, Vec<String>) {
        let mut tags: Vec<String> = Vec::new();
        let mut unmapped = Vec::new();
        for t in types {
            match self.map(t.as_ref()) {
                MappedTag::Known(tag) => {
                    if !tags.contains(&tag) {
                        tags.push(tag);
                    }
                }
                MappedTag::Unmapped(raw) => {
                    log::warn!("unmapped place type `{raw}`");
                    unmapped.push(raw);
                }
            }
        }
        (tags, unmapped)
    }
}

/// Lowercase snake_case: runs of non-alphanumerics become one `_`.
pub fn normalize_tag(s: &str) -> String {
    let mut out = String::new();
    let mut pending_sep = false;
    for c in s.trim().chars() {
        if c.is_alphanumeric() {
            if pending_sep && !out.is_empty() {
                out.push('_');
            }
            pending_sep = false;
            out.extend(c.to_lowercase());
        } else {
            pending_sep = true;
        }
    }
    out
}
