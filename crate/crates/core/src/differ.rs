//! Snapshot comparison.
//!
//! Two snapshots are compared artifact by artifact and every difference is
//! classified as new, changed, modified or deleted. Entries are paired by
//! comparison-form path and kind; a paired entry whose properties are all
//! equal is matched and not reported.
//!
//! Classification of a paired file:
//!
//! * size differs, or both sides carry a digest and the digests differ:
//!   modified
//! * otherwise write time or attributes differ: changed
//!
//! Directories are changed when write time or attributes differ. Access
//! time is never compared, nor is directory size.

use std::collections::BTreeMap;
use std::fmt;
use std::fmt::Write as _;

use crate::model::{CasePolicy, EntryKind, FileEntry, HiveKey, HiveValue, Snapshot};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum DeltaState {
    New,
    Changed,
    Modified,
    Deleted,
}

impl DeltaState {
    pub const ALL: [DeltaState; 4] = [
        DeltaState::New,
        DeltaState::Changed,
        DeltaState::Modified,
        DeltaState::Deleted,
    ];

    pub fn as_str(self) -> &'static str {
        match self {
            DeltaState::New => "new",
            DeltaState::Changed => "changed",
            DeltaState::Modified => "modified",
            DeltaState::Deleted => "deleted",
        }
    }

    pub fn parse(s: &str) -> Option<Self> {
        DeltaState::ALL.into_iter().find(|d| d.as_str() == s)
    }
}

impl fmt::Display for DeltaState {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

/// Classified differences between two snapshots.
///
/// Deleted entries carry the first snapshot's record, all other states
/// carry the second snapshot's record. Each list is sorted by
/// comparison-form path; a path only repeats in `file_deltas` when an entry
/// changed kind (file replaced by a directory or the reverse), in which
/// case the old entry is reported deleted and the new one new.
#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct DiffResult {
    pub file_deltas: Vec<(FileEntry, DeltaState)>,
    pub key_deltas: Vec<(HiveKey, DeltaState)>,
    pub value_deltas: Vec<(HiveValue, DeltaState)>,
    pub warnings: Vec<String>,
}

impl DiffResult {
    pub fn is_empty(&self) -> bool {
        self.file_deltas.is_empty() && self.key_deltas.is_empty() && self.value_deltas.is_empty()
    }

    pub fn len(&self) -> usize {
        self.file_deltas.len() + self.key_deltas.len() + self.value_deltas.len()
    }

    pub fn count(&self, state: DeltaState) -> usize {
        self.file_deltas.iter().filter(|d| d.1 == state).count()
            + self.key_deltas.iter().filter(|d| d.1 == state).count()
            + self.value_deltas.iter().filter(|d| d.1 == state).count()
    }

    /// Stable line-per-delta rendering:
    /// `<state>\t<file|dir|key|value>\t<path>`.
    pub fn render_text(&self) -> String {
        let mut out = String::new();
        for (e, s) in &self.file_deltas {
            let kind = if e.is_dir() { "dir" } else { "file" };
            let _ = writeln!(out, "{s}\t{kind}\t{}", e.path);
        }
        for (k, s) in &self.key_deltas {
            let _ = writeln!(out, "{s}\tkey\t{}", k.cellpath);
        }
        for (v, s) in &self.value_deltas {
            let _ = writeln!(out, "{s}\tvalue\t{}", v.cellpath);
        }
        out
    }
}

enum Side<'a, T> {
    Left(&'a T),
    Right(&'a T),
    Both(&'a T, &'a T),
}

// Sorted merge of two maps with identical key ordering.
fn merge_join<'a, T>(
    left: &'a BTreeMap<String, T>,
    right: &'a BTreeMap<String, T>,
) -> impl Iterator<Item = Side<'a, T>> {
    let mut l = left.iter().peekable();
    let mut r = right.iter().peekable();
    std::iter::from_fn(move || match (l.peek(), r.peek()) {
        (None, None) => None,
        (Some(_), None) => l.next().map(|(_, v)| Side::Left(v)),
        (None, Some(_)) => r.next().map(|(_, v)| Side::Right(v)),
        (Some((lk, _)), Some((rk, _))) => match lk.cmp(rk) {
            std::cmp::Ordering::Less => l.next().map(|(_, v)| Side::Left(v)),
            std::cmp::Ordering::Greater => r.next().map(|(_, v)| Side::Right(v)),
            std::cmp::Ordering::Equal => {
                let (_, a) = l.next()?;
                let (_, b) = r.next()?;
                Some(Side::Both(a, b))
            }
        },
    })
}

// Brings the second snapshot's map into the first snapshot's comparison
// form when the two were captured under different case policies.
fn rekeyed<'a, T: Clone>(
    map: &'a BTreeMap<String, T>,
    from: CasePolicy,
    to: CasePolicy,
    path_of: impl Fn(&T) -> &crate::model::CanonicalPath,
    warnings: &mut Vec<String>,
) -> std::borrow::Cow<'a, BTreeMap<String, T>> {
    if from == to {
        return std::borrow::Cow::Borrowed(map);
    }
    let mut out = BTreeMap::new();
    for v in map.values() {
        let key = to.key(path_of(v));
        if out.insert(key, v.clone()).is_some() {
            warnings.push(format!(
                "{} collides with another entry under the {} case policy",
                path_of(v),
                to.as_str()
            ));
        }
    }
    std::borrow::Cow::Owned(out)
}

fn classify_file(old: &FileEntry, new: &FileEntry) -> Option<DeltaState> {
    if new.kind == EntryKind::File {
        let digest_differs = matches!((old.sha1, new.sha1), (Some(a), Some(b)) if a != b);
        if old.size != new.size || digest_differs {
            return Some(DeltaState::Modified);
        }
    }
    if old.write_time != new.write_time || old.attributes != new.attributes {
        return Some(DeltaState::Changed);
    }
    None
}

pub fn diff_files(s1: &Snapshot, s2: &Snapshot) -> DiffResult {
    let mut result = DiffResult::default();
    let right = rekeyed(
        s2.file_map(),
        s2.policy(),
        s1.policy(),
        |e: &FileEntry| &e.path,
        &mut result.warnings,
    );
    for side in merge_join(s1.file_map(), &right) {
        match side {
            Side::Left(old) => result.file_deltas.push((old.clone(), DeltaState::Deleted)),
            Side::Right(new) => result.file_deltas.push((new.clone(), DeltaState::New)),
            Side::Both(old, new) if old.kind != new.kind => {
                result.file_deltas.push((old.clone(), DeltaState::Deleted));
                result.file_deltas.push((new.clone(), DeltaState::New));
            }
            Side::Both(old, new) => {
                if let Some(state) = classify_file(old, new) {
                    result.file_deltas.push((new.clone(), state));
                }
            }
        }
    }
    result
}

pub fn diff_registry(s1: &Snapshot, s2: &Snapshot) -> DiffResult {
    let mut result = DiffResult::default();
    let keys = rekeyed(
        s2.key_map(),
        s2.policy(),
        s1.policy(),
        |k: &HiveKey| &k.cellpath,
        &mut result.warnings,
    );
    for side in merge_join(s1.key_map(), &keys) {
        match side {
            Side::Left(old) => result.key_deltas.push((old.clone(), DeltaState::Deleted)),
            Side::Right(new) => result.key_deltas.push((new.clone(), DeltaState::New)),
            Side::Both(old, new) => {
                if old.modified_time != new.modified_time {
                    result.key_deltas.push((new.clone(), DeltaState::Changed));
                }
            }
        }
    }

    // Values are keyed by full cellpath, so a key-by-key nested comparison
    // reduces to one merge over the value maps: a value whose parent key
    // is new or deleted can only appear on one side.
    let values = rekeyed(
        s2.value_map(),
        s2.policy(),
        s1.policy(),
        |v: &HiveValue| &v.cellpath,
        &mut result.warnings,
    );
    for side in merge_join(s1.value_map(), &values) {
        match side {
            Side::Left(old) => result.value_deltas.push((old.clone(), DeltaState::Deleted)),
            Side::Right(new) => result.value_deltas.push((new.clone(), DeltaState::New)),
            Side::Both(old, new) => {
                if old.data_type != new.data_type || old.data != new.data {
                    result.value_deltas.push((new.clone(), DeltaState::Modified));
                }
            }
        }
    }
    result
}

/// Full comparison of two snapshots. The first snapshot's case policy
/// governs pairing.
pub fn diff_snapshots(s1: &Snapshot, s2: &Snapshot) -> DiffResult {
    let mut files = diff_files(s1, s2);
    let registry = diff_registry(s1, s2);
    files.key_deltas = registry.key_deltas;
    files.value_deltas = registry.value_deltas;
    files.warnings.extend(registry.warnings);
    files
}
