//! In-memory representation of system state.
//!
//! A [`Snapshot`] holds file system entries and hive keys/values captured
//! at one point in time. File system state comes from a live directory walk
//! ([`capture_fs_snapshot`]); hive state comes from the portable serialized
//! hive format ([`load_hive`]).

mod capture;
mod entry;
mod hive;
mod path;
mod persist;
mod snapshot;

pub use capture::{capture_fs_snapshot, CaptureError, CapturePolicy, CaptureWarning, Captured};
pub use entry::{
    Attributes, DigestParseError, EntryKind, FileEntry, HiveKey, HiveValue, RegType, Sha1Digest, Timestamp,
    UnknownRegType,
};
pub use hive::{load_hive, write_hive, HiveError};
pub use path::{normalize_path, CanonicalPath, CasePolicy, PathError, PathKind, SEPARATOR};
pub use persist::{
    load_snapshot, load_snapshot_file, persist_snapshot, save_snapshot_file, PersistError, SNAPSHOT_HEADER,
};
pub use snapshot::{merge_snapshot_parts, Snapshot, SnapshotError, DEFAULT_HIVE_ROOTS};
