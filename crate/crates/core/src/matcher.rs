//! Matching a profile against a target system.
//!
//! A [`TargetIndex`] is built once from a target tree (every file hashed)
//! and an optional hive; [`match_profile`] then reports, per phase, which
//! profile objects are present on the target and how each was matched.

use std::collections::{BTreeMap, BTreeSet};
use std::fmt::{self, Write as _};
use std::fs;
use std::path::Path;

use serde::Serialize;
use thiserror::Error;

use crate::apxml::{ApxmlDocument, CellObject, FileObject, MetaType, NameType, ProfileObject};
use crate::differ::DeltaState;
use crate::hashtrie::{selective_hash, PathTrie, Sha1Hasher};
use crate::model::{
    capture_fs_snapshot, load_hive, CapturePolicy, CasePolicy, EntryKind, RegType, Sha1Digest, Snapshot,
};

#[derive(Debug, Error)]
pub enum MatchError {
    #[error(transparent)]
    Capture(#[from] crate::model::CaptureError),
    #[error("hive {path}: {message}")]
    Hive { path: String, message: String },
}

#[derive(Debug, Clone, PartialEq, Eq)]
struct FileRecord {
    path: String,
    kind: EntryKind,
    sha1: Option<Sha1Digest>,
}

#[derive(Debug, Clone, PartialEq, Eq)]
struct CellRecord {
    data_type: Option<RegType>,
    data: Option<Vec<u8>>,
}

/// Lookup tables over one target state. Immutable once built.
#[derive(Debug, Clone)]
pub struct TargetIndex {
    policy: CasePolicy,
    files: BTreeMap<String, FileRecord>,
    by_sha1: BTreeMap<Sha1Digest, BTreeSet<String>>,
    /// Keys and values live in separate namespaces, so a cell is looked up
    /// by cellpath and name type together.
    cells: BTreeMap<(String, NameType), CellRecord>,
    pub warnings: Vec<String>,
}

impl TargetIndex {
    /// Indexes a snapshot as-is; files without a digest can only be found
    /// by path.
    pub fn from_snapshot(s: &Snapshot) -> Self {
        let policy = s.policy();
        let mut files = BTreeMap::new();
        let mut by_sha1: BTreeMap<Sha1Digest, BTreeSet<String>> = BTreeMap::new();
        for (key, e) in s.file_map() {
            if let Some(d) = e.sha1 {
                by_sha1.entry(d).or_default().insert(e.path.to_string());
            }
            files.insert(
                key.clone(),
                FileRecord {
                    path: e.path.to_string(),
                    kind: e.kind,
                    sha1: e.sha1,
                },
            );
        }
        let mut cells = BTreeMap::new();
        for key in s.key_map().keys() {
            cells.insert(
                (key.clone(), NameType::Key),
                CellRecord {
                    data_type: None,
                    data: None,
                },
            );
        }
        for (key, v) in s.value_map() {
            cells.insert(
                (key.clone(), NameType::Value),
                CellRecord {
                    data_type: Some(v.data_type),
                    data: Some(v.data.clone()),
                },
            );
        }
        TargetIndex {
            policy,
            files,
            by_sha1,
            cells,
            warnings: Vec::new(),
        }
    }

    pub fn file_count(&self) -> usize {
        self.files.len()
    }

    pub fn cell_count(&self) -> usize {
        self.cells.len()
    }

    pub fn digest_count(&self) -> usize {
        self.by_sha1.len()
    }

    /// Paths holding content with this digest.
    pub fn paths_with_digest(&self, d: &Sha1Digest) -> impl Iterator<Item = &str> {
        self.by_sha1.get(d).into_iter().flatten().map(String::as_str)
    }

    pub fn is_empty(&self) -> bool {
        self.files.is_empty() && self.cells.is_empty()
    }

    fn file(&self, f: &FileObject) -> Option<&FileRecord> {
        let wanted = match f.meta_type {
            MetaType::File => EntryKind::File,
            MetaType::Directory => EntryKind::Directory,
        };
        self.files
            .get(&self.policy.key(&f.filename))
            .filter(|r| r.kind == wanted)
    }

    fn cell(&self, c: &CellObject) -> Option<&CellRecord> {
        self.cells.get(&(self.policy.key(&c.cellpath), c.name_type))
    }
}

/// Captures and fully hashes `root`, optionally adding a serialized hive.
pub fn build_target_index(root: &Path, hive: Option<&Path>, policy: CasePolicy) -> Result<TargetIndex, MatchError> {
    let captured = capture_fs_snapshot(
        root,
        &CapturePolicy {
            case_policy: policy,
            ..CapturePolicy::default()
        },
    )?;
    let mut warnings: Vec<String> = captured.warnings.iter().map(ToString::to_string).collect();
    let hashed = selective_hash(&captured.snapshot, &PathTrie::new(policy), root, &Sha1Hasher);
    warnings.extend(hashed.warnings.iter().map(ToString::to_string));
    let mut index = TargetIndex::from_snapshot(&hashed.snapshot);
    if let Some(hive) = hive {
        let hive_err = |message: String| MatchError::Hive {
            path: hive.display().to_string(),
            message,
        };
        let text = fs::read_to_string(hive).map_err(|e| hive_err(e.to_string()))?;
        let reg = load_hive(&text, policy).map_err(|e| hive_err(e.to_string()))?;
        index.cells = TargetIndex::from_snapshot(&reg).cells;
    }
    index.warnings = warnings;
    Ok(index)
}

/// What to do with a file object whose digest is not found at its path.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum FileFallback {
    /// No match.
    #[default]
    None,
    /// Accept the digest anywhere on the target.
    HashOnly,
    /// Accept any file at the path.
    PathOnly,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub struct MatchPolicy {
    pub file_fallback: FileFallback,
    /// Values must also agree on data type and data.
    pub require_value_data: bool,
    /// Deleted objects count as matched when absent from the target.
    /// Otherwise they are skipped.
    pub absence_matching: bool,
}

impl Default for MatchPolicy {
    fn default() -> Self {
        MatchPolicy {
            file_fallback: FileFallback::None,
            require_value_data: true,
            absence_matching: false,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum MatchKind {
    PathHash,
    HashOnly,
    PathOnly,
    Cellpath,
    CellpathData,
    Absent,
}

impl MatchKind {
    pub fn as_str(self) -> &'static str {
        match self {
            MatchKind::PathHash => "path_hash",
            MatchKind::HashOnly => "hash_only",
            MatchKind::PathOnly => "path_only",
            MatchKind::Cellpath => "cellpath",
            MatchKind::CellpathData => "cellpath_data",
            MatchKind::Absent => "absent",
        }
    }
}

impl fmt::Display for MatchKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize)]
pub struct KindCounts {
    pub path_hash: usize,
    pub hash_only: usize,
    pub path_only: usize,
    pub cellpath: usize,
    pub cellpath_data: usize,
    pub absent: usize,
}

impl KindCounts {
    fn bump(&mut self, kind: MatchKind) {
        *match kind {
            MatchKind::PathHash => &mut self.path_hash,
            MatchKind::HashOnly => &mut self.hash_only,
            MatchKind::PathOnly => &mut self.path_only,
            MatchKind::Cellpath => &mut self.cellpath,
            MatchKind::CellpathData => &mut self.cellpath_data,
            MatchKind::Absent => &mut self.absent,
        } += 1;
    }

    pub fn get(&self, kind: MatchKind) -> usize {
        match kind {
            MatchKind::PathHash => self.path_hash,
            MatchKind::HashOnly => self.hash_only,
            MatchKind::PathOnly => self.path_only,
            MatchKind::Cellpath => self.cellpath,
            MatchKind::CellpathData => self.cellpath_data,
            MatchKind::Absent => self.absent,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct MatchedArtifact {
    /// `file`, `directory`, `key` or `value`.
    pub object: &'static str,
    pub path: String,
    pub delta: &'static str,
    pub kind: MatchKind,
    /// Where a hash-only match was found.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub target_path: Option<String>,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct PhaseReport {
    pub phase: String,
    pub total: usize,
    pub matched: usize,
    pub skipped: usize,
    pub by_kind: KindCounts,
    pub matches: Vec<MatchedArtifact>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize)]
pub struct Summary {
    pub total: usize,
    pub matched: usize,
    pub skipped: usize,
}

/// Per-phase match counts. Interpretation (is the application present?)
/// is left to the analyst.
#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct MatchReport {
    pub app_name: String,
    pub app_version: String,
    pub policy: MatchPolicy,
    pub phases: Vec<PhaseReport>,
    pub summary: Summary,
}

fn object_label(o: &ProfileObject) -> &'static str {
    match o {
        ProfileObject::File(f) if f.meta_type == MetaType::Directory => "directory",
        ProfileObject::File(_) => "file",
        ProfileObject::Cell(c) if c.name_type == NameType::Key => "key",
        ProfileObject::Cell(_) => "value",
    }
}

fn match_file(f: &FileObject, t: &TargetIndex, p: &MatchPolicy) -> Option<(MatchKind, Option<String>)> {
    let at_path = t.file(f);
    let Some(digest) = f.sha1 else {
        return at_path.map(|_| (MatchKind::PathOnly, None));
    };
    if at_path.is_some_and(|r| r.sha1 == Some(digest)) {
        return Some((MatchKind::PathHash, None));
    }
    match p.file_fallback {
        FileFallback::None => None,
        FileFallback::PathOnly => at_path.map(|_| (MatchKind::PathOnly, None)),
        FileFallback::HashOnly => t
            .paths_with_digest(&digest)
            .next()
            .map(|path| (MatchKind::HashOnly, Some(path.to_owned()))),
    }
}

fn match_cell(c: &CellObject, t: &TargetIndex, p: &MatchPolicy) -> Option<MatchKind> {
    let found = t.cell(c)?;
    match c.name_type {
        NameType::Key => Some(MatchKind::Cellpath),
        NameType::Value if !p.require_value_data => Some(MatchKind::Cellpath),
        NameType::Value => (found.data_type == c.data_type && found.data == c.data).then_some(MatchKind::CellpathData),
    }
}

fn present(o: &ProfileObject, t: &TargetIndex) -> bool {
    match o {
        ProfileObject::File(f) => t.file(f).is_some(),
        ProfileObject::Cell(c) => t.cell(c).is_some(),
    }
}

/// Correlates every profile object with the target.
pub fn match_profile(profile: &ApxmlDocument, target: &TargetIndex, policy: &MatchPolicy) -> MatchReport {
    let mut phases = Vec::with_capacity(profile.phases.len());
    let mut summary = Summary::default();
    for phase in &profile.phases {
        let mut r = PhaseReport {
            phase: phase.name.clone(),
            total: phase.objects.len(),
            matched: 0,
            skipped: 0,
            by_kind: KindCounts::default(),
            matches: Vec::new(),
        };
        for obj in &phase.objects {
            let result = if obj.delta() == DeltaState::Deleted {
                if !policy.absence_matching {
                    r.skipped += 1;
                    continue;
                }
                (!present(obj, target)).then_some((MatchKind::Absent, None))
            } else {
                match obj {
                    ProfileObject::File(f) => match_file(f, target, policy),
                    ProfileObject::Cell(c) => match_cell(c, target, policy).map(|k| (k, None)),
                }
            };
            if let Some((kind, target_path)) = result {
                r.matched += 1;
                r.by_kind.bump(kind);
                r.matches.push(MatchedArtifact {
                    object: object_label(obj),
                    path: obj.path().to_string(),
                    delta: obj.delta().as_str(),
                    kind,
                    target_path,
                });
            }
        }
        summary.total += r.total;
        summary.matched += r.matched;
        summary.skipped += r.skipped;
        phases.push(r);
    }
    MatchReport {
        app_name: profile.metadata.app_name.clone(),
        app_version: profile.metadata.app_version.clone(),
        policy: *policy,
        phases,
        summary,
    }
}

impl MatchReport {
    pub fn phase(&self, name: &str) -> Option<&PhaseReport> {
        self.phases.iter().find(|p| p.phase == name)
    }

    /// Structured form; field order is fixed by the type definitions.
    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("report serializes")
    }

    pub fn render_text(&self) -> String {
        let mut out = String::new();
        let _ = writeln!(out, "profile: {} {}", self.app_name, self.app_version);
        for p in &self.phases {
            let _ = writeln!(
                out,
                "phase {}: {}/{} matched, {} skipped",
                p.phase,
                p.matched,
                p.total - p.skipped,
                p.skipped
            );
            for kind in [
                MatchKind::PathHash,
                MatchKind::HashOnly,
                MatchKind::PathOnly,
                MatchKind::Cellpath,
                MatchKind::CellpathData,
                MatchKind::Absent,
            ] {
                let n = p.by_kind.get(kind);
                if n > 0 {
                    let _ = writeln!(out, "  {kind}: {n}");
                }
            }
            for m in &p.matches {
                let _ = write!(out, "  {}\t{}\t{}\t{}", m.kind, m.delta, m.object, m.path);
                if let Some(t) = &m.target_path {
                    let _ = write!(out, "\t-> {t}");
                }
                out.push('\n');
            }
        }
        let _ = writeln!(
            out,
            "total: {}/{} matched, {} skipped",
            self.summary.matched,
            self.summary.total - self.summary.skipped,
            self.summary.skipped
        );
        out
    }
}
