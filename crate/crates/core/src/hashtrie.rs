//! Known-file blacklist and selective hashing.
//!
//! The baseline snapshot's file paths are loaded into a segment-level
//! prefix tree. Later snapshots only hash files whose path is not in the
//! tree, so the cost of hashing is proportional to what the profiled
//! application added rather than to the size of the system.

use std::collections::BTreeMap;
use std::fs::{self, File};
use std::io::{self, Read};
use std::path::{Path, PathBuf};

use rayon::prelude::*;
use sha1::{Digest, Sha1};

use crate::model::{CanonicalPath, CaptureWarning, CasePolicy, EntryKind, Sha1Digest, Snapshot};

#[derive(Debug, Clone, Default)]
struct Node {
    children: BTreeMap<String, usize>,
    terminal: bool,
}

/// Prefix tree over path segments. Segments are stored in comparison form.
#[derive(Debug, Clone)]
pub struct PathTrie {
    nodes: Vec<Node>,
    count: usize,
    policy: CasePolicy,
}

impl PathTrie {
    pub fn new(policy: CasePolicy) -> Self {
        PathTrie {
            nodes: vec![Node::default()],
            count: 0,
            policy,
        }
    }

    pub fn policy(&self) -> CasePolicy {
        self.policy
    }

    /// Number of complete paths stored.
    pub fn len(&self) -> usize {
        self.count
    }

    pub fn is_empty(&self) -> bool {
        self.count == 0
    }

    /// Returns `false` if the path was already present.
    pub fn insert(&mut self, path: &CanonicalPath) -> bool {
        let mut cur = 0;
        for seg in path.segments() {
            let folded = self.policy.fold_segment(seg);
            cur = match self.nodes[cur].children.get(&folded) {
                Some(&next) => next,
                None => {
                    let next = self.nodes.len();
                    self.nodes.push(Node::default());
                    self.nodes[cur].children.insert(folded, next);
                    next
                }
            };
        }
        let node = &mut self.nodes[cur];
        if node.terminal {
            return false;
        }
        node.terminal = true;
        self.count += 1;
        true
    }

    /// True only for complete inserted paths; a bare prefix does not match.
    pub fn contains(&self, path: &CanonicalPath) -> bool {
        let mut cur = 0;
        for seg in path.segments() {
            let next = match self.policy {
                CasePolicy::Sensitive => self.nodes[cur].children.get(seg.as_str()),
                CasePolicy::Insensitive => self.nodes[cur].children.get(&seg.to_lowercase()),
            };
            match next {
                Some(&n) => cur = n,
                None => return false,
            }
        }
        cur != 0 && self.nodes[cur].terminal
    }

    /// Counts terminal nodes by walking the tree.
    pub fn count_terminals(&self) -> usize {
        self.nodes.iter().filter(|n| n.terminal).count()
    }
}

/// Builds the blacklist from every regular file in `baseline`. Directories
/// are not included.
pub fn build_blacklist(baseline: &Snapshot) -> PathTrie {
    let mut trie = PathTrie::new(baseline.policy());
    for entry in baseline.files().filter(|e| e.kind == EntryKind::File) {
        trie.insert(&entry.path);
    }
    trie
}

/// A digest function over file bytes.
pub trait FileHasher: Sync {
    fn digest(&self, reader: &mut dyn Read) -> io::Result<Sha1Digest>;
}

/// The SHA-1 hasher used in collection.
#[derive(Debug, Clone, Copy, Default)]
pub struct Sha1Hasher;

impl FileHasher for Sha1Hasher {
    fn digest(&self, reader: &mut dyn Read) -> io::Result<Sha1Digest> {
        let mut hasher = Sha1::new();
        let mut buf = vec![0u8; 64 * 1024];
        loop {
            let n = reader.read(&mut buf)?;
            if n == 0 {
                break;
            }
            hasher.update(&buf[..n]);
        }
        Ok(Sha1Digest::from_bytes(hasher.finalize().into()))
    }
}

pub fn sha1_bytes(bytes: &[u8]) -> Sha1Digest {
    Sha1Digest::from_bytes(Sha1::digest(bytes).into())
}

/// Outcome of [`selective_hash`].
#[derive(Debug, Clone)]
pub struct HashOutcome {
    pub snapshot: Snapshot,
    /// Number of hasher invocations.
    pub hashed: usize,
    pub warnings: Vec<CaptureWarning>,
}

pub fn disk_path(root: &Path, path: &CanonicalPath) -> PathBuf {
    let mut out = root.to_path_buf();
    out.extend(path.segments());
    out
}

// Symbolic links are never followed; their digest covers the link target
// text instead of the target's content.
fn hash_one(hasher: &dyn FileHasher, location: &Path) -> io::Result<Sha1Digest> {
    let md = fs::symlink_metadata(location)?;
    if md.file_type().is_symlink() {
        let target = fs::read_link(location)?;
        let text = target.to_string_lossy().into_owned();
        return hasher.digest(&mut text.as_bytes());
    }
    let mut file = File::open(location)?;
    hasher.digest(&mut file)
}

/// Hashes every file in `s` whose path is not in `blacklist`, reading file
/// content from below `root`. Blacklisted files keep whatever digest they
/// already had. Read failures leave the digest empty and add a warning.
pub fn selective_hash(s: &Snapshot, blacklist: &PathTrie, root: &Path, hasher: &dyn FileHasher) -> HashOutcome {
    let targets: Vec<(String, PathBuf)> = s
        .file_map()
        .iter()
        .filter(|(_, e)| e.kind == EntryKind::File && !blacklist.contains(&e.path))
        .map(|(k, e)| (k.clone(), disk_path(root, &e.path)))
        .collect();

    let results: Vec<(String, PathBuf, io::Result<Sha1Digest>)> = targets
        .into_par_iter()
        .map(|(key, location)| {
            let digest = hash_one(hasher, &location);
            (key, location, digest)
        })
        .collect();

    let hashed = results.len();
    let mut digests = BTreeMap::new();
    let mut warnings = Vec::new();
    for (key, location, digest) in results {
        let digest = match digest {
            Ok(d) => Some(d),
            Err(e) => {
                warnings.push(CaptureWarning {
                    path: location,
                    message: format!("hash failed: {e}"),
                });
                None
            }
        };
        digests.insert(key, digest);
    }

    let mut snapshot = s.clone();
    for (key, entry) in snapshot.files_keyed_mut() {
        if let Some(d) = digests.remove(key) {
            entry.sha1 = d;
        }
    }
    HashOutcome {
        snapshot,
        hashed,
        warnings,
    }
}
