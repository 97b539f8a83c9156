//! Application Profile XML.
//!
//! An APXML document records the artifacts an application creates, changes,
//! modifies or removes, grouped by life-cycle phase. File system entries are
//! stored as DFXML-style `fileobject` elements and registry entries as
//! RegXML-style `cellobject` elements; each carries a single `delta:*`
//! annotation naming its difference state.
//!
//! ```xml
//! <apxml version="1.0.0" xmlns="https://github.com/thomaslaurenson/apxml_schema" ...>
//!   <metadata>...</metadata>
//!   <creator>...</creator>
//!   <install>
//!     <fileobject delta:new="1">...</fileobject>
//!     <cellobject delta:new="1">...</cellobject>
//!   </install>
//! </apxml>
//! ```
//!
//! [`emit`] is the normative writer. [`parse`] and [`validate`] share one
//! reader that checks every rule of the shipped schema ([`SCHEMA_XSD`]),
//! including the cross-field rules the XSD can only state as annotations.

mod emit;
mod read;

use std::fmt;

use thiserror::Error;

use crate::differ::{DeltaState, DiffResult};
use crate::model::{CanonicalPath, EntryKind, RegType, Sha1Digest};

pub use emit::{check_document, emit, emit_bytes, is_phase_name, Encoding};
pub use read::{
    parse, parse_bytes, parse_with, validate, validate_bytes, ParseOptions, Rule, ValidationReport, Violation,
};

pub const APXML_VERSION: &str = "1.0.0";
pub const NS_APXML: &str = "https://github.com/thomaslaurenson/apxml_schema";
pub const NS_DC: &str = "http://purl.org/dc/elements/1.1/";
pub const NS_XSI: &str = "http://www.w3.org/2001/XMLSchema-instance";
pub const NS_DELTA: &str = "http://www.forensicswiki.org/wiki/Forensic_Disk_Differencing";

/// The shipped XML schema.
pub const SCHEMA_XSD: &str = include_str!("../../schema/apxml.xsd");

/// Phase names every consumer understands. Other names are extensions.
pub const KNOWN_PHASES: [&str; 4] = ["install", "execute", "uninstall", "reboot"];

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum ApxmlError {
    #[error("document is not well-formed XML: {0}")]
    NotWellFormed(String),
    #[error("schema violation at {path}: {message} ({rule})")]
    SchemaViolation { path: String, rule: Rule, message: String },
    #[error("unknown phase {0:?}")]
    UnknownPhase(String),
    #[error("document invariant violated: {0}")]
    InvariantViolation(String),
}

#[derive(Debug, Clone, PartialEq, Eq, Default)]
pub struct ProfileMetadata {
    pub app_name: String,
    pub app_version: String,
}

/// Provenance of the tool that wrote the document.
#[derive(Debug, Clone, PartialEq, Eq, Default)]
pub struct CreatorRecord {
    pub program_name: String,
    pub program_version: String,
    /// Ordered name/value descriptors such as `os_sysname` or `host`.
    pub execution_environment: Vec<(String, String)>,
}

impl CreatorRecord {
    /// Describes this program and the platform it runs on.
    pub fn current() -> Self {
        let mut env = vec![
            ("os_sysname".to_owned(), std::env::consts::OS.to_owned()),
            ("arch".to_owned(), std::env::consts::ARCH.to_owned()),
        ];
        if let Some(host) = hostname() {
            env.push(("host".to_owned(), host));
        }
        env.push((
            "start_time".to_owned(),
            chrono::Utc::now().to_rfc3339_opts(chrono::SecondsFormat::Secs, true),
        ));
        CreatorRecord {
            program_name: env!("CARGO_PKG_NAME").to_owned(),
            program_version: env!("CARGO_PKG_VERSION").to_owned(),
            execution_environment: env,
        }
    }
}

fn hostname() -> Option<String> {
    std::env::var("HOSTNAME")
        .ok()
        .or_else(|| std::env::var("COMPUTERNAME").ok())
        .or_else(|| {
            std::fs::read_to_string("/etc/hostname")
                .ok()
                .map(|s| s.trim().to_owned())
        })
        .filter(|h| !h.is_empty())
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum MetaType {
    File = 1,
    Directory = 2,
}

impl MetaType {
    pub fn code(self) -> u8 {
        self as u8
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct FileObject {
    pub filename: CanonicalPath,
    pub meta_type: MetaType,
    pub sha1: Option<Sha1Digest>,
    pub alloc_name: bool,
    pub alloc_inode: bool,
    pub delta: DeltaState,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum NameType {
    Key,
    Value,
}

impl NameType {
    pub fn code(self) -> char {
        match self {
            NameType::Key => 'k',
            NameType::Value => 'v',
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct CellObject {
    pub cellpath: CanonicalPath,
    pub name_type: NameType,
    pub data_type: Option<RegType>,
    /// Raw value bytes. String types are rendered as text when possible,
    /// anything else as base64.
    pub data: Option<Vec<u8>>,
    pub alloc: bool,
    pub delta: DeltaState,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum ProfileObject {
    File(FileObject),
    Cell(CellObject),
}

impl ProfileObject {
    pub fn delta(&self) -> DeltaState {
        match self {
            ProfileObject::File(f) => f.delta,
            ProfileObject::Cell(c) => c.delta,
        }
    }

    /// Canonical position within a phase: file objects first, ordered by
    /// filename then meta_type; then cell objects by cellpath then name_type.
    fn sort_key(&self) -> (u8, String, u8) {
        match self {
            ProfileObject::File(f) => (0, f.filename.to_string(), f.meta_type.code()),
            ProfileObject::Cell(c) => (1, c.cellpath.to_string(), c.name_type as u8),
        }
    }

    pub fn path(&self) -> &CanonicalPath {
        match self {
            ProfileObject::File(f) => &f.filename,
            ProfileObject::Cell(c) => &c.cellpath,
        }
    }
}

/// Objects recorded for one life-cycle phase.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Phase {
    pub name: String,
    pub objects: Vec<ProfileObject>,
}

impl Phase {
    /// Builds a phase with its objects in canonical order.
    pub fn new(name: impl Into<String>, mut objects: Vec<ProfileObject>) -> Self {
        objects.sort_by_cached_key(ProfileObject::sort_key);
        Phase {
            name: name.into(),
            objects,
        }
    }

    pub fn from_diff(name: impl Into<String>, diff: &DiffResult) -> Self {
        Phase::new(name, objects_from_diff(diff))
    }

    pub fn is_sorted(&self) -> bool {
        self.objects.windows(2).all(|w| w[0].sort_key() <= w[1].sort_key())
    }

    pub fn file_objects(&self) -> impl Iterator<Item = &FileObject> {
        self.objects.iter().filter_map(|o| match o {
            ProfileObject::File(f) => Some(f),
            ProfileObject::Cell(_) => None,
        })
    }

    pub fn cell_objects(&self) -> impl Iterator<Item = &CellObject> {
        self.objects.iter().filter_map(|o| match o {
            ProfileObject::Cell(c) => Some(c),
            ProfileObject::File(_) => None,
        })
    }
}

/// An element from a foreign namespace kept verbatim at document level.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct XmlElement {
    pub namespace: String,
    pub name: String,
    pub attributes: Vec<XmlAttribute>,
    pub children: Vec<XmlNode>,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct XmlAttribute {
    pub namespace: Option<String>,
    pub name: String,
    pub value: String,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum XmlNode {
    Element(XmlElement),
    Text(String),
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ApxmlDocument {
    pub version: String,
    pub metadata: ProfileMetadata,
    pub creator: CreatorRecord,
    /// Foreign-namespace elements directly under the root, written after
    /// `creator`.
    pub extensions: Vec<XmlElement>,
    pub phases: Vec<Phase>,
}

impl ApxmlDocument {
    pub fn new(metadata: ProfileMetadata, creator: CreatorRecord) -> Self {
        ApxmlDocument {
            version: APXML_VERSION.to_owned(),
            metadata,
            creator,
            extensions: Vec::new(),
            phases: Vec::new(),
        }
    }

    pub fn phase(&self, name: &str) -> Option<&Phase> {
        self.phases.iter().find(|p| p.name == name)
    }

    /// Appends a phase, refusing duplicate names.
    pub fn push_phase(&mut self, phase: Phase) -> Result<(), ApxmlError> {
        if self.phase(&phase.name).is_some() {
            return Err(ApxmlError::InvariantViolation(format!(
                "duplicate phase {:?}",
                phase.name
            )));
        }
        self.phases.push(phase);
        Ok(())
    }

    pub fn object_count(&self) -> usize {
        self.phases.iter().map(|p| p.objects.len()).sum()
    }
}

impl fmt::Display for ApxmlDocument {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match emit(self) {
            Ok(text) => f.write_str(&text),
            Err(e) => write!(f, "<!-- {e} -->"),
        }
    }
}

/// Maps every delta to one profile object. Timestamps, sizes and
/// attributes are dropped; allocation flags follow the delta state.
pub fn objects_from_diff(d: &DiffResult) -> Vec<ProfileObject> {
    let mut out = Vec::with_capacity(d.len());
    for (entry, delta) in &d.file_deltas {
        let allocated = *delta != DeltaState::Deleted;
        let meta_type = match entry.kind {
            EntryKind::File => MetaType::File,
            EntryKind::Directory => MetaType::Directory,
        };
        out.push(ProfileObject::File(FileObject {
            filename: entry.path.clone(),
            meta_type,
            sha1: if meta_type == MetaType::File { entry.sha1 } else { None },
            alloc_name: allocated,
            alloc_inode: allocated,
            delta: *delta,
        }));
    }
    for (key, delta) in &d.key_deltas {
        out.push(ProfileObject::Cell(CellObject {
            cellpath: key.cellpath.clone(),
            name_type: NameType::Key,
            data_type: None,
            data: None,
            alloc: *delta != DeltaState::Deleted,
            delta: *delta,
        }));
    }
    for (value, delta) in &d.value_deltas {
        out.push(ProfileObject::Cell(CellObject {
            cellpath: value.cellpath.clone(),
            name_type: NameType::Value,
            data_type: Some(value.data_type),
            data: Some(value.data.clone()),
            alloc: *delta != DeltaState::Deleted,
            delta: *delta,
        }));
    }
    out
}
