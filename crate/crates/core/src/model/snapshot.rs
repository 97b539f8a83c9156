use std::collections::BTreeMap;

use chrono::Utc;
use thiserror::Error;

use super::entry::{EntryKind, FileEntry, HiveKey, HiveValue, Timestamp};
use super::path::{CasePolicy, PathKind};

/// Hive roots accepted as the first segment of a cellpath.
pub const DEFAULT_HIVE_ROOTS: [&str; 2] = ["HKLM", "HKU"];

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum SnapshotError {
    #[error("duplicate entry {0}")]
    Duplicate(String),
    #[error("value {0} has no parent key")]
    OrphanValue(String),
    #[error("entry {entry} is missing ancestor directory {ancestor}")]
    MissingAncestor { entry: String, ancestor: String },
    #[error("invalid entry {path}: {reason}")]
    InvalidEntry { path: String, reason: &'static str },
    #[error("snapshot parts are not disjoint")]
    PartNotDisjoint,
    #[error("snapshot parts use different case policies")]
    PolicyMismatch,
}

/// A point-in-time capture of file system and hive state.
///
/// All three collections are keyed by the comparison form of the path under
/// the snapshot's [`CasePolicy`], so iteration order is the sorted
/// comparison order.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Snapshot {
    pub id: String,
    pub taken_at: Timestamp,
    policy: CasePolicy,
    files: BTreeMap<String, FileEntry>,
    keys: BTreeMap<String, HiveKey>,
    values: BTreeMap<String, HiveValue>,
}

impl Snapshot {
    pub fn new(id: impl Into<String>, taken_at: Timestamp, policy: CasePolicy) -> Self {
        Snapshot {
            id: id.into(),
            taken_at,
            policy,
            files: BTreeMap::new(),
            keys: BTreeMap::new(),
            values: BTreeMap::new(),
        }
    }

    pub fn empty(policy: CasePolicy) -> Self {
        Self::new("", Utc::now(), policy)
    }

    pub fn policy(&self) -> CasePolicy {
        self.policy
    }

    pub fn insert_file(&mut self, entry: FileEntry) -> Result<(), SnapshotError> {
        if entry.path.kind() != PathKind::Filesystem {
            return Err(invalid(&entry.path.to_string(), "not a file system path"));
        }
        if entry.kind == EntryKind::Directory {
            if entry.sha1.is_some() {
                return Err(invalid(&entry.path.to_string(), "directory carries a digest"));
            }
            if entry.size != 0 {
                return Err(invalid(&entry.path.to_string(), "directory size must be 0"));
            }
        }
        let key = self.policy.key(&entry.path);
        if self.files.contains_key(&key) {
            return Err(SnapshotError::Duplicate(entry.path.to_string()));
        }
        self.files.insert(key, entry);
        Ok(())
    }

    pub fn insert_key(&mut self, key: HiveKey) -> Result<(), SnapshotError> {
        check_cellpath(&key.cellpath, 1)?;
        let k = self.policy.key(&key.cellpath);
        if self.keys.contains_key(&k) {
            return Err(SnapshotError::Duplicate(key.cellpath.to_string()));
        }
        self.keys.insert(k, key);
        Ok(())
    }

    /// Parent-key existence is not checked here so that records may arrive
    /// in any order; see [`Snapshot::check_integrity`].
    pub fn insert_value(&mut self, value: HiveValue) -> Result<(), SnapshotError> {
        check_cellpath(&value.cellpath, 2)?;
        let k = self.policy.key(&value.cellpath);
        if self.values.contains_key(&k) {
            return Err(SnapshotError::Duplicate(value.cellpath.to_string()));
        }
        self.values.insert(k, value);
        Ok(())
    }

    /// Verifies the cross-record invariants: every value has a parent key
    /// and every file system entry has its ancestor directories.
    pub fn check_integrity(&self) -> Result<(), SnapshotError> {
        for value in self.values.values() {
            let parent = value.cellpath.parent().expect("checked on insert");
            if !self.keys.contains_key(&self.policy.key(&parent)) {
                return Err(SnapshotError::OrphanValue(value.cellpath.to_string()));
            }
        }
        for entry in self.files.values() {
            for ancestor in entry.path.ancestors() {
                match self.files.get(&self.policy.key(&ancestor)) {
                    Some(e) if e.is_dir() => {}
                    _ => {
                        return Err(SnapshotError::MissingAncestor {
                            entry: entry.path.to_string(),
                            ancestor: ancestor.to_string(),
                        })
                    }
                }
            }
        }
        Ok(())
    }

    pub fn files(&self) -> impl ExactSizeIterator<Item = &FileEntry> {
        self.files.values()
    }

    pub fn keys(&self) -> impl ExactSizeIterator<Item = &HiveKey> {
        self.keys.values()
    }

    pub fn values(&self) -> impl ExactSizeIterator<Item = &HiveValue> {
        self.values.values()
    }

    /// Files keyed by comparison form.
    pub fn file_map(&self) -> &BTreeMap<String, FileEntry> {
        &self.files
    }

    pub fn key_map(&self) -> &BTreeMap<String, HiveKey> {
        &self.keys
    }

    pub fn value_map(&self) -> &BTreeMap<String, HiveValue> {
        &self.values
    }

    pub(crate) fn files_keyed_mut(&mut self) -> impl Iterator<Item = (&String, &mut FileEntry)> {
        self.files.iter_mut()
    }

    pub fn file_count(&self) -> usize {
        self.files.len()
    }

    pub fn key_count(&self) -> usize {
        self.keys.len()
    }

    pub fn value_count(&self) -> usize {
        self.values.len()
    }

    pub fn has_registry(&self) -> bool {
        !self.keys.is_empty() || !self.values.is_empty()
    }

    pub fn is_empty(&self) -> bool {
        self.files.is_empty() && !self.has_registry()
    }

    /// True when both snapshots hold the same artifacts, ignoring id and
    /// capture time.
    pub fn same_content(&self, other: &Snapshot) -> bool {
        self.policy == other.policy
            && self.files == other.files
            && self.keys == other.keys
            && self.values == other.values
    }
}

fn invalid(path: &str, reason: &'static str) -> SnapshotError {
    SnapshotError::InvalidEntry {
        path: path.to_owned(),
        reason,
    }
}

fn check_cellpath(cellpath: &super::path::CanonicalPath, min_segments: usize) -> Result<(), SnapshotError> {
    let rendered = || cellpath.to_string();
    if cellpath.kind() != PathKind::Registry {
        return Err(invalid(&rendered(), "not a registry path"));
    }
    if cellpath.len() < min_segments {
        return Err(invalid(&rendered(), "value cellpath has no parent key"));
    }
    let root = &cellpath.segments()[0];
    if !DEFAULT_HIVE_ROOTS.iter().any(|r| r.eq_ignore_ascii_case(root)) {
        return Err(invalid(&rendered(), "unknown hive root"));
    }
    Ok(())
}

/// Combines a file-system-only snapshot with a registry-only snapshot.
/// Identity and capture time come from `fs`.
pub fn merge_snapshot_parts(fs: Snapshot, reg: Snapshot) -> Result<Snapshot, SnapshotError> {
    if fs.has_registry() || !reg.files.is_empty() {
        return Err(SnapshotError::PartNotDisjoint);
    }
    if fs.policy != reg.policy {
        return Err(SnapshotError::PolicyMismatch);
    }
    let merged = Snapshot {
        keys: reg.keys,
        values: reg.values,
        ..fs
    };
    merged.check_integrity()?;
    Ok(merged)
}
