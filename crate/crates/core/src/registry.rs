//! Knowledge-component registry.
//!
//! A registry is the parsed form of a course's KC list: a hierarchy of at most
//! three levels (domain, standard, behavior) addressed by dotted identifiers
//! such as `KC1.6.1`. Gap findings and class-wide reports only ever refer to
//! components by these identifiers, so the registry is the shared vocabulary
//! of the whole pipeline.

use std::collections::HashMap;
use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

/// Maximum number of integer segments in an identifier.
pub const MAX_DEPTH: usize = 3;

#[derive(Debug, thiserror::Error, Clone, PartialEq, Eq)]
pub enum RegistryError {
    #[error("malformed KC document: {0}")]
    MalformedDocument(String),
    #[error("invalid KC identifier {id:?}: {reason}")]
    InvalidId { id: String, reason: &'static str },
    #[error("duplicate KC identifier {0}")]
    DuplicateId(KcId),
    #[error("KC {id} has no parent {parent} in the list")]
    OrphanParent { id: KcId, parent: KcId },
    #[error("KC list declares no components")]
    EmptyRegistry,
    #[error("unknown KC identifier {0:?}")]
    NotFound(String),
}

impl RegistryError {
    /// Stable machine-readable name of the error kind.
    pub fn kind(&self) -> &'static str {
        match self {
            RegistryError::MalformedDocument(_) => "MalformedDocument",
            RegistryError::InvalidId { .. } => "InvalidId",
            RegistryError::DuplicateId(_) => "DuplicateId",
            RegistryError::OrphanParent { .. } => "OrphanParent",
            RegistryError::EmptyRegistry => "EmptyRegistry",
            RegistryError::NotFound(_) => "NotFound",
        }
    }
}

/// Dotted knowledge-component identifier: `KC<int>("." <int>){0,2}`.
///
/// Integers are unsigned decimal without leading zeros, so every component
/// has exactly one spelling. Ordering is lexicographic on the string form.
#[derive(Debug, Clone, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(try_from = "String", into = "String")]
pub struct KcId(String);

impl KcId {
    pub fn parse(raw: &str) -> Result<Self, RegistryError> {
        let invalid = |reason| RegistryError::InvalidId {
            id: raw.to_string(),
            reason,
        };
        let rest = raw.strip_prefix("KC").ok_or_else(|| invalid("must start with \"KC\""))?;
        let segments: Vec<&str> = rest.split('.').collect();
        if segments.len() > MAX_DEPTH {
            return Err(invalid("more than three segments"));
        }
        for seg in &segments {
            if seg.is_empty() {
                return Err(invalid("empty segment"));
            }
            if !seg.bytes().all(|b| b.is_ascii_digit()) {
                return Err(invalid("segments must be decimal integers"));
            }
            if seg.len() > 1 && seg.starts_with('0') {
                return Err(invalid("leading zero in segment"));
            }
            if seg.parse::<u32>().is_err() {
                return Err(invalid("segment out of range"));
            }
        }
        Ok(KcId(raw.to_string()))
    }

    pub fn as_str(&self) -> &str {
        &self.0
    }

    /// Number of integer segments (1..=3).
    pub fn depth(&self) -> usize {
        self.0.matches('.').count() + 1
    }

    pub fn segments(&self) -> impl Iterator<Item = u32> + '_ {
        self.0[2..].split('.').map(|s| s.parse().expect("validated at parse"))
    }

    /// The identifier with its last segment removed, or `None` at depth 1.
    pub fn parent(&self) -> Option<KcId> {
        self.0.rfind('.').map(|pos| KcId(self.0[..pos].to_string()))
    }
}

impl fmt::Display for KcId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.0)
    }
}

impl FromStr for KcId {
    type Err = RegistryError;
    fn from_str(s: &str) -> Result<Self, Self::Err> {
        KcId::parse(s)
    }
}

impl TryFrom<String> for KcId {
    type Error = RegistryError;
    fn try_from(value: String) -> Result<Self, Self::Error> {
        KcId::parse(&value)
    }
}

impl From<KcId> for String {
    fn from(id: KcId) -> String {
        id.0
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct KnowledgeComponent {
    pub id: KcId,
    pub title: String,
    pub detail: String,
    pub parent_id: Option<KcId>,
}

/// On-disk KC list: `{ "course_id": ..., "components": [ {id, title, detail} ] }`.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct KcListDocument {
    pub course_id: String,
    pub components: Vec<KcEntry>,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct KcEntry {
    pub id: String,
    pub title: String,
    #[serde(default)]
    pub detail: String,
}

/// Immutable, validated KC list. Cheap to share behind an `Arc`.
#[derive(Debug, Clone)]
pub struct KcRegistry {
    course_id: String,
    components: Vec<KnowledgeComponent>,
    index: HashMap<KcId, usize>,
    version: String,
}

impl PartialEq for KcRegistry {
    fn eq(&self, other: &Self) -> bool {
        self.course_id == other.course_id && self.components == other.components
    }
}

impl Eq for KcRegistry {}

/// Parse and validate a KC list JSON document.
pub fn parse_kc_list(document: &str) -> Result<KcRegistry, RegistryError> {
    let doc: KcListDocument = serde_json::from_str(document)
        .map_err(|e| RegistryError::MalformedDocument(e.to_string()))?;
    KcRegistry::from_document(doc)
}

impl KcRegistry {
    pub fn from_document(doc: KcListDocument) -> Result<Self, RegistryError> {
        if doc.course_id.trim().is_empty() {
            return Err(RegistryError::MalformedDocument("course_id is empty".into()));
        }
        if doc.components.is_empty() {
            return Err(RegistryError::EmptyRegistry);
        }

        let mut components = Vec::with_capacity(doc.components.len());
        let mut index = HashMap::with_capacity(doc.components.len());
        for entry in doc.components {
            let id = KcId::parse(&entry.id)?;
            if entry.title.trim().is_empty() {
                return Err(RegistryError::MalformedDocument(format!("{id} has an empty title")));
            }
            if index.insert(id.clone(), components.len()).is_some() {
                return Err(RegistryError::DuplicateId(id));
            }
            components.push(KnowledgeComponent {
                parent_id: id.parent(),
                id,
                title: entry.title,
                detail: entry.detail,
            });
        }

        // Parents may be declared after their children; check once all ids are known.
        for kc in &components {
            if let Some(parent) = &kc.parent_id {
                if !index.contains_key(parent) {
                    return Err(RegistryError::OrphanParent {
                        id: kc.id.clone(),
                        parent: parent.clone(),
                    });
                }
            }
        }

        let mut registry = KcRegistry {
            course_id: doc.course_id,
            components,
            index,
            version: String::new(),
        };
        registry.version = registry.compute_version();
        Ok(registry)
    }

    fn compute_version(&self) -> String {
        let canonical = serde_json::to_vec(&self.to_document()).expect("document serializes");
        hex::encode(Sha256::digest(&canonical))
    }

    pub fn course_id(&self) -> &str {
        &self.course_id
    }

    /// Content hash of the canonical serialization.
    pub fn version(&self) -> &str {
        &self.version
    }

    pub fn components(&self) -> &[KnowledgeComponent] {
        &self.components
    }

    pub fn len(&self) -> usize {
        self.components.len()
    }

    pub fn is_empty(&self) -> bool {
        self.components.is_empty()
    }

    pub fn contains(&self, id: &KcId) -> bool {
        self.index.contains_key(id)
    }

    pub fn lookup(&self, id: &str) -> Result<&KnowledgeComponent, RegistryError> {
        KcId::parse(id)
            .ok()
            .and_then(|kc| self.index.get(&kc))
            .map(|&i| &self.components[i])
            .ok_or_else(|| RegistryError::NotFound(id.to_string()))
    }

    pub fn to_document(&self) -> KcListDocument {
        KcListDocument {
            course_id: self.course_id.clone(),
            components: self
                .components
                .iter()
                .map(|kc| KcEntry {
                    id: kc.id.to_string(),
                    title: kc.title.clone(),
                    detail: kc.detail.clone(),
                })
                .collect(),
        }
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(&self.to_document()).expect("document serializes")
    }

    /// One line per component in document order, indented two spaces per
    /// level below the root. Details are folded onto the same line.
    pub fn render_for_prompt(&self) -> String {
        let mut out = String::new();
        for kc in &self.components {
            for _ in 1..kc.id.depth() {
                out.push_str("  ");
            }
            out.push_str(kc.id.as_str());
            out.push(' ');
            out.push_str(&collapse_whitespace(&kc.title));
            let detail = collapse_whitespace(&kc.detail);
            if !detail.is_empty() {
                out.push_str(" :: ");
                out.push_str(&detail);
            }
            out.push('\n');
        }
        out
    }
}

fn collapse_whitespace(text: &str) -> String {
    text.split_whitespace().collect::<Vec<_>>().join(" ")
}
