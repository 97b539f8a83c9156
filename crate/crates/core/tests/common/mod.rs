//! Shared fixtures and independent oracles for the integration tests.
//!
//! Nothing here calls into the differ or the trie; the oracles are written
//! from the delta rules alone so that they can disagree with the library.

#![allow(dead_code)]

use std::collections::BTreeMap;
use std::fs;
use std::path::Path;

use chrono::{DateTime, Duration, TimeZone, Utc};
use rand::seq::IndexedRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use appdiff::differ::DiffResult;
use appdiff::model::{
    Attributes, CanonicalPath, CasePolicy, EntryKind, FileEntry, HiveKey, HiveValue, PathKind, RegType, Sha1Digest,
    Snapshot,
};

pub fn rng(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

/// Case-variant names so that insensitive pairing is exercised.
const NAMES: [&str; 12] = [
    "app",
    "App",
    "APP",
    "bin",
    "Bin",
    "lib.dll",
    "LIB.DLL",
    "readme.txt",
    "cfg",
    "data",
    "Straße",
    "ΣΑΣ",
];
const HIVE_ROOTS: [&str; 3] = ["HKLM", "HKU", "hklm"];

fn t0() -> DateTime<Utc> {
    Utc.with_ymd_and_hms(2015, 9, 10, 8, 0, 0).unwrap()
}

fn random_segments(r: &mut ChaCha8Rng, max_depth: usize) -> Vec<String> {
    let depth = r.random_range(1..=max_depth);
    (0..depth).map(|_| NAMES.choose(r).unwrap().to_string()).collect()
}

fn random_digest(r: &mut ChaCha8Rng) -> Sha1Digest {
    // A small digest space makes equal digests on both sides common.
    let mut b = [0u8; 20];
    b[0] = r.random_range(0..4);
    Sha1Digest::from_bytes(b)
}

fn random_time(r: &mut ChaCha8Rng) -> DateTime<Utc> {
    t0() + Duration::seconds(r.random_range(0..3))
}

fn random_file(r: &mut ChaCha8Rng) -> FileEntry {
    let path = CanonicalPath::new(PathKind::Filesystem, random_segments(r, 3)).unwrap();
    if r.random_bool(0.3) {
        FileEntry {
            path,
            kind: EntryKind::Directory,
            size: 0,
            write_time: random_time(r),
            access_time: random_time(r),
            attributes: Attributes(Attributes::DIRECTORY | r.random_range(0..2)),
            sha1: None,
        }
    } else {
        FileEntry {
            path,
            kind: EntryKind::File,
            size: r.random_range(0..3),
            write_time: random_time(r),
            access_time: random_time(r),
            attributes: Attributes(r.random_range(0..2)),
            sha1: r.random_bool(0.7).then(|| random_digest(r)),
        }
    }
}

fn random_cellpath(r: &mut ChaCha8Rng, min_len: usize) -> CanonicalPath {
    let mut segs = vec![HIVE_ROOTS.choose(r).unwrap().to_string()];
    let depth = r.random_range(min_len.max(1)..=3);
    segs.extend((0..depth).map(|_| NAMES.choose(r).unwrap().to_string()));
    CanonicalPath::new(PathKind::Registry, segs).unwrap()
}

fn random_value(r: &mut ChaCha8Rng) -> HiveValue {
    let data_type = *[RegType::Sz, RegType::Dword, RegType::Binary].choose(r).unwrap();
    HiveValue {
        cellpath: random_cellpath(r, 1),
        data_type,
        data: (0..r.random_range(0..3)).map(|_| r.random_range(0..2)).collect(),
    }
}

fn random_key(r: &mut ChaCha8Rng) -> HiveKey {
    HiveKey {
        cellpath: random_cellpath(r, 0),
        modified_time: random_time(r),
    }
}

/// Inserts, silently dropping artifacts whose comparison form collides.
fn add_file(s: &mut Snapshot, e: FileEntry) {
    let _ = s.insert_file(e);
}
fn add_key(s: &mut Snapshot, k: HiveKey) {
    let _ = s.insert_key(k);
}
fn add_value(s: &mut Snapshot, v: HiveValue) {
    let _ = s.insert_value(v);
}

pub fn random_policy(r: &mut ChaCha8Rng) -> CasePolicy {
    if r.random_bool(0.5) {
        CasePolicy::Insensitive
    } else {
        CasePolicy::Sensitive
    }
}

/// A snapshot of at most `max` artifacts across files, directories, keys
/// and values.
pub fn random_snapshot(r: &mut ChaCha8Rng, policy: CasePolicy, max: usize) -> Snapshot {
    let mut s = Snapshot::new("S", t0(), policy);
    let n = r.random_range(0..=max);
    for _ in 0..n {
        match r.random_range(0..10) {
            0..=5 => add_file(&mut s, random_file(r)),
            6..=7 => add_key(&mut s, random_key(r)),
            _ => add_value(&mut s, random_value(r)),
        }
    }
    s
}

fn mutate_file(r: &mut ChaCha8Rng, e: &FileEntry) -> FileEntry {
    let mut e = e.clone();
    match r.random_range(0..7) {
        0 if e.kind == EntryKind::File => e.size += 1,
        1 if e.kind == EntryKind::File => e.sha1 = Some(random_digest(r)),
        2 if e.kind == EntryKind::File => e.sha1 = None,
        3 => e.write_time += Duration::seconds(1),
        4 => e.attributes = Attributes(e.attributes.0 ^ Attributes::HIDDEN),
        5 => e.access_time += Duration::seconds(7),
        6 => {
            // Kind flip.
            if e.kind == EntryKind::File {
                e.kind = EntryKind::Directory;
                e.size = 0;
                e.sha1 = None;
            } else {
                e.kind = EntryKind::File;
            }
        }
        _ => {}
    }
    e
}

fn recase(r: &mut ChaCha8Rng, p: &CanonicalPath) -> CanonicalPath {
    let segs = p.segments().iter().map(|s| {
        if r.random_bool(0.2) {
            s.to_uppercase()
        } else {
            s.clone()
        }
    });
    CanonicalPath::new(p.kind(), segs).unwrap()
}

/// Derives a second snapshot from `s1`: artifacts are kept, altered, case
/// shifted or dropped, and fresh ones are added. The total stays within
/// `max`.
pub fn evolve(r: &mut ChaCha8Rng, s1: &Snapshot, max: usize) -> Snapshot {
    let mut s2 = Snapshot::new("S2", t0(), s1.policy());
    for e in s1.files() {
        if r.random_bool(0.15) {
            continue;
        }
        let mut e = if r.random_bool(0.4) {
            mutate_file(r, e)
        } else {
            e.clone()
        };
        if r.random_bool(0.1) {
            e.path = recase(r, &e.path);
        }
        add_file(&mut s2, e);
    }
    for k in s1.keys() {
        if r.random_bool(0.15) {
            continue;
        }
        let mut k = k.clone();
        if r.random_bool(0.3) {
            k.modified_time += Duration::seconds(1);
        }
        if r.random_bool(0.1) {
            k.cellpath = recase(r, &k.cellpath);
        }
        add_key(&mut s2, k);
    }
    for v in s1.values() {
        if r.random_bool(0.15) {
            continue;
        }
        let mut v = v.clone();
        match r.random_range(0..5) {
            0 => v.data.push(9),
            1 => v.data_type = RegType::ExpandSz,
            2 => v.cellpath = recase(r, &v.cellpath),
            _ => {}
        }
        add_value(&mut s2, v);
    }
    let used = s2.file_count() + s2.key_count() + s2.value_count();
    let extra = r.random_range(0..=max.saturating_sub(used).min(40));
    for _ in 0..extra {
        match r.random_range(0..10) {
            0..=5 => add_file(&mut s2, random_file(r)),
            6..=7 => add_key(&mut s2, random_key(r)),
            _ => add_value(&mut s2, random_value(r)),
        }
    }
    s2
}

/// One classified artifact in a form that compares across implementations.
#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord)]
pub struct Delta {
    pub class: &'static str,
    pub state: &'static str,
    pub record: String,
}

fn same_path(policy: CasePolicy, a: &CanonicalPath, b: &CanonicalPath) -> bool {
    a.len() == b.len()
        && a.segments().iter().zip(b.segments()).all(|(x, y)| match policy {
            CasePolicy::Sensitive => x == y,
            CasePolicy::Insensitive => x.to_lowercase() == y.to_lowercase(),
        })
}

fn delta<T: std::fmt::Debug>(class: &'static str, state: &'static str, record: &T) -> Delta {
    Delta {
        class,
        state,
        record: format!("{record:?}"),
    }
}

/// Brute-force classifier: every artifact of one side is compared with
/// every artifact of the other.
pub fn oracle_diff(s1: &Snapshot, s2: &Snapshot) -> Vec<Delta> {
    let p = s1.policy();
    let mut out = Vec::new();

    let f1: Vec<&FileEntry> = s1.files().collect();
    let f2: Vec<&FileEntry> = s2.files().collect();
    for a in &f1 {
        match f2.iter().find(|b| same_path(p, &a.path, &b.path)) {
            None => out.push(delta("file", "deleted", a)),
            Some(b) if a.kind != b.kind => {
                out.push(delta("file", "deleted", a));
                out.push(delta("file", "new", b));
            }
            Some(b) => {
                let content = b.kind == EntryKind::File
                    && (a.size != b.size || matches!((a.sha1, b.sha1), (Some(x), Some(y)) if x != y));
                if content {
                    out.push(delta("file", "modified", b));
                } else if a.write_time != b.write_time || a.attributes != b.attributes {
                    out.push(delta("file", "changed", b));
                }
            }
        }
    }
    for b in &f2 {
        if !f1.iter().any(|a| same_path(p, &a.path, &b.path)) {
            out.push(delta("file", "new", b));
        }
    }

    let k1: Vec<&HiveKey> = s1.keys().collect();
    let k2: Vec<&HiveKey> = s2.keys().collect();
    for a in &k1 {
        match k2.iter().find(|b| same_path(p, &a.cellpath, &b.cellpath)) {
            None => out.push(delta("key", "deleted", a)),
            Some(b) if a.modified_time != b.modified_time => out.push(delta("key", "changed", b)),
            Some(_) => {}
        }
    }
    for b in &k2 {
        if !k1.iter().any(|a| same_path(p, &a.cellpath, &b.cellpath)) {
            out.push(delta("key", "new", b));
        }
    }

    let v1: Vec<&HiveValue> = s1.values().collect();
    let v2: Vec<&HiveValue> = s2.values().collect();
    for a in &v1 {
        match v2.iter().find(|b| same_path(p, &a.cellpath, &b.cellpath)) {
            None => out.push(delta("value", "deleted", a)),
            Some(b) if a.data_type != b.data_type || a.data != b.data => out.push(delta("value", "modified", b)),
            Some(_) => {}
        }
    }
    for b in &v2 {
        if !v1.iter().any(|a| same_path(p, &a.cellpath, &b.cellpath)) {
            out.push(delta("value", "new", b));
        }
    }
    out.sort();
    out
}

pub fn flatten(d: &DiffResult) -> Vec<Delta> {
    let mut out: Vec<Delta> = d
        .file_deltas
        .iter()
        .map(|(e, s)| delta("file", s.as_str(), e))
        .chain(d.key_deltas.iter().map(|(k, s)| delta("key", s.as_str(), k)))
        .chain(d.value_deltas.iter().map(|(v, s)| delta("value", s.as_str(), v)))
        .collect();
    out.sort();
    out
}

/// Linear-scan path set.
pub struct ListSet {
    policy: CasePolicy,
    items: Vec<CanonicalPath>,
}

impl ListSet {
    pub fn new(policy: CasePolicy) -> Self {
        ListSet {
            policy,
            items: Vec::new(),
        }
    }

    pub fn insert(&mut self, p: &CanonicalPath) -> bool {
        if self.contains(p) {
            return false;
        }
        self.items.push(p.clone());
        true
    }

    pub fn contains(&self, p: &CanonicalPath) -> bool {
        self.items.iter().any(|q| same_path(self.policy, p, q))
    }

    pub fn len(&self) -> usize {
        self.items.len()
    }
}

pub fn random_path(r: &mut ChaCha8Rng) -> CanonicalPath {
    CanonicalPath::new(PathKind::Filesystem, random_segments(r, 4)).unwrap()
}

/// Reference SHA-1, independent of the library's hasher.
pub fn sha1_hex(bytes: &[u8]) -> String {
    sha1_smol::Sha1::from(bytes).digest().to_string()
}

/// Writes files below `root`; each key is a relative `/`-separated path.
pub fn write_tree(root: &Path, files: &BTreeMap<String, Vec<u8>>) {
    fs::create_dir_all(root).unwrap();
    for (rel, bytes) in files {
        let p = root.join(rel);
        fs::create_dir_all(p.parent().unwrap()).unwrap();
        fs::write(p, bytes).unwrap();
    }
}

/// A random file tree description. Directory and file names come from
/// disjoint pools so the same path is never a file in one tree and a
/// directory in another.
pub fn random_tree(r: &mut ChaCha8Rng, max_files: usize) -> BTreeMap<String, Vec<u8>> {
    let mut out = BTreeMap::new();
    for _ in 0..r.random_range(0..=max_files) {
        let depth = r.random_range(0..3);
        let mut parts: Vec<String> = (0..depth).map(|_| format!("d{}", r.random_range(0..3))).collect();
        parts.push(format!("f{}.bin", r.random_range(0..12)));
        let len = r.random_range(0..64);
        let bytes: Vec<u8> = (0..len).map(|_| r.random()).collect();
        out.insert(parts.join("/"), bytes);
    }
    out
}
