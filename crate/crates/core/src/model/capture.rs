//! Live file system capture.

use std::fmt;
use std::fs::{self, File, Metadata};
use std::io;
use std::path::{Path, PathBuf};
use std::time::SystemTime;

use chrono::{DateTime, Utc};
use log::warn;
use thiserror::Error;
use walkdir::WalkDir;

use super::entry::{Attributes, EntryKind, FileEntry, Timestamp};
use super::path::{CanonicalPath, CasePolicy, PathKind};
use super::snapshot::Snapshot;

#[derive(Debug, Error)]
pub enum CaptureError {
    #[error("capture root {path} is unreadable: {source}")]
    RootUnreadable {
        path: PathBuf,
        #[source]
        source: io::Error,
    },
    #[error("capture root {0} is not a directory")]
    RootNotDirectory(PathBuf),
}

/// A skipped entry.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct CaptureWarning {
    pub path: PathBuf,
    pub message: String,
}

impl fmt::Display for CaptureWarning {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}: {}", self.path.display(), self.message)
    }
}

#[derive(Debug, Clone, Copy)]
pub struct CapturePolicy {
    pub case_policy: CasePolicy,
    /// Open every regular file once so that entries which could not be
    /// hashed later are skipped at capture time.
    pub probe_readable: bool,
}

impl Default for CapturePolicy {
    fn default() -> Self {
        CapturePolicy {
            case_policy: CasePolicy::Insensitive,
            probe_readable: true,
        }
    }
}

/// Result of a capture: the snapshot plus one warning per skipped entry.
#[derive(Debug, Clone)]
pub struct Captured {
    pub snapshot: Snapshot,
    pub warnings: Vec<CaptureWarning>,
}

pub(crate) fn system_time(t: io::Result<SystemTime>) -> Timestamp {
    t.map(DateTime::<Utc>::from).unwrap_or(DateTime::<Utc>::UNIX_EPOCH)
}

#[cfg(windows)]
fn attributes(md: &Metadata, _is_link: bool) -> Attributes {
    use std::os::windows::fs::MetadataExt;
    Attributes(md.file_attributes())
}

#[cfg(not(windows))]
fn attributes(md: &Metadata, is_link: bool) -> Attributes {
    let mut bits = 0;
    if is_link {
        bits |= Attributes::REPARSE_POINT;
    } else if md.permissions().readonly() {
        bits |= Attributes::READONLY;
    }
    Attributes(bits)
}

/// Walks `root` and records one [`FileEntry`] per file or directory below
/// it. Symbolic links are recorded as zero-sized files and never followed.
/// Digests are left empty.
pub fn capture_fs_snapshot(root: &Path, policy: &CapturePolicy) -> Result<Captured, CaptureError> {
    let md = fs::metadata(root).map_err(|source| CaptureError::RootUnreadable {
        path: root.to_owned(),
        source,
    })?;
    if !md.is_dir() {
        return Err(CaptureError::RootNotDirectory(root.to_owned()));
    }
    fs::read_dir(root).map_err(|source| CaptureError::RootUnreadable {
        path: root.to_owned(),
        source,
    })?;

    let taken_at = Utc::now();
    let mut snapshot = Snapshot::new(
        format!("fs:{}@{}", root.display(), taken_at.timestamp_nanos_opt().unwrap_or(0)),
        taken_at,
        policy.case_policy,
    );
    let mut warnings = Vec::new();
    let mut skip = |path: &Path, message: String| {
        warn!("skipping {}: {}", path.display(), message);
        warnings.push(CaptureWarning {
            path: path.to_owned(),
            message,
        });
    };

    let mut it = WalkDir::new(root)
        .min_depth(1)
        .follow_links(false)
        .sort_by_file_name()
        .into_iter();
    while let Some(next) = it.next() {
        let dent = match next {
            Ok(d) => d,
            Err(e) => {
                let path = e.path().unwrap_or(root).to_owned();
                skip(&path, e.to_string());
                continue;
            }
        };
        let ft = dent.file_type();
        let is_dir = ft.is_dir();
        let rel = dent.path().strip_prefix(root).unwrap_or(dent.path());
        let segments: Option<Vec<&str>> = rel.iter().map(|c| c.to_str()).collect();
        let Some(segments) = segments else {
            skip(dent.path(), "name is not valid UTF-8".into());
            if is_dir {
                it.skip_current_dir();
            }
            continue;
        };
        let path = match CanonicalPath::new(PathKind::Filesystem, segments) {
            Ok(p) => p,
            Err(e) => {
                skip(dent.path(), e.to_string());
                if is_dir {
                    it.skip_current_dir();
                }
                continue;
            }
        };
        let md = match dent.metadata() {
            Ok(md) => md,
            Err(e) => {
                skip(dent.path(), e.to_string());
                if is_dir {
                    it.skip_current_dir();
                }
                continue;
            }
        };

        let is_link = ft.is_symlink();
        let (kind, size) = if is_dir {
            (EntryKind::Directory, 0)
        } else if is_link {
            (EntryKind::File, 0)
        } else if ft.is_file() {
            if policy.probe_readable {
                if let Err(e) = File::open(dent.path()) {
                    skip(dent.path(), e.to_string());
                    continue;
                }
            }
            (EntryKind::File, md.len())
        } else {
            skip(dent.path(), "unsupported file type".into());
            continue;
        };

        let entry = FileEntry {
            path,
            kind,
            size,
            write_time: system_time(md.modified()),
            access_time: system_time(md.accessed()),
            attributes: attributes(&md, is_link),
            sha1: None,
        };
        if let Err(e) = snapshot.insert_file(entry) {
            // Only reachable when two names fold to the same comparison form.
            skip(dent.path(), e.to_string());
            if is_dir {
                it.skip_current_dir();
            }
        }
    }

    Ok(Captured { snapshot, warnings })
}
