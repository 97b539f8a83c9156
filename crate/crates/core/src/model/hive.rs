//! Portable serialized hive format.
//!
//! One record per line, UTF-8, LF line endings:
//!
//! ```text
//! # comment
//! key|HKLM/Software/Vendor|2015-09-10T00:00:00Z
//! value|HKLM/Software/Vendor/InstallDir|REG_SZ|QzpcQXBw
//! ```
//!
//! The last field of a value record is the standard base64 encoding of the
//! raw data bytes. Cellpaths accept `\` as well as `/` separators.

use base64::engine::general_purpose::STANDARD as BASE64;
use base64::Engine;
use chrono::{DateTime, SecondsFormat, Utc};
use thiserror::Error;

use super::entry::{HiveKey, HiveValue, RegType};
use super::path::{normalize_path, CasePolicy, PathKind};
use super::snapshot::{Snapshot, SnapshotError};

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum HiveError {
    #[error("line {line}: {message}")]
    Syntax { line: usize, message: String },
    #[error("value {0} has no parent key")]
    OrphanValue(String),
    #[error("duplicate cell {0}")]
    DuplicateCell(String),
}

fn syntax(line: usize, message: impl Into<String>) -> HiveError {
    HiveError::Syntax {
        line,
        message: message.into(),
    }
}

fn entry_error(line: usize, e: SnapshotError) -> HiveError {
    match e {
        SnapshotError::Duplicate(p) => HiveError::DuplicateCell(p),
        other => syntax(line, other.to_string()),
    }
}

/// Parses a serialized hive into a registry-only [`Snapshot`].
pub fn load_hive(document: &str, policy: CasePolicy) -> Result<Snapshot, HiveError> {
    let mut snapshot = Snapshot::new("hive", Utc::now(), policy);
    for (idx, raw) in document.split('\n').enumerate() {
        let line_no = idx + 1;
        let line = raw.strip_suffix('\r').unwrap_or(raw);
        if line.trim().is_empty() || line.starts_with('#') {
            continue;
        }
        if let Some(rest) = line.strip_prefix("key|") {
            let (path, time) = rest
                .rsplit_once('|')
                .ok_or_else(|| syntax(line_no, "key record needs a cellpath and a timestamp"))?;
            let cellpath =
                normalize_path(path, PathKind::Registry, None).map_err(|e| syntax(line_no, e.to_string()))?;
            let modified_time = DateTime::parse_from_rfc3339(time)
                .map_err(|e| syntax(line_no, format!("bad timestamp {time:?}: {e}")))?
                .with_timezone(&Utc);
            snapshot
                .insert_key(HiveKey {
                    cellpath,
                    modified_time,
                })
                .map_err(|e| entry_error(line_no, e))?;
        } else if let Some(rest) = line.strip_prefix("value|") {
            let mut fields = rest.rsplitn(3, '|');
            let (Some(data), Some(tag), Some(path)) = (fields.next(), fields.next(), fields.next()) else {
                return Err(syntax(line_no, "value record needs a cellpath, a type and data"));
            };
            let cellpath =
                normalize_path(path, PathKind::Registry, None).map_err(|e| syntax(line_no, e.to_string()))?;
            let data_type: RegType = tag
                .parse()
                .map_err(|e: super::entry::UnknownRegType| syntax(line_no, e.to_string()))?;
            let data = BASE64
                .decode(data)
                .map_err(|e| syntax(line_no, format!("bad base64 data: {e}")))?;
            snapshot
                .insert_value(HiveValue {
                    cellpath,
                    data_type,
                    data,
                })
                .map_err(|e| entry_error(line_no, e))?;
        } else {
            return Err(syntax(line_no, "expected a key or value record"));
        }
    }
    match snapshot.check_integrity() {
        Ok(()) => Ok(snapshot),
        Err(SnapshotError::OrphanValue(p)) => Err(HiveError::OrphanValue(p)),
        Err(e) => Err(syntax(0, e.to_string())),
    }
}

/// Serializes the registry part of a snapshot. Keys come first, then
/// values, each in comparison order.
pub fn write_hive(snapshot: &Snapshot) -> String {
    let mut out = String::new();
    for key in snapshot.keys() {
        out.push_str(&format!(
            "key|{}|{}\n",
            key.cellpath,
            key.modified_time.to_rfc3339_opts(SecondsFormat::AutoSi, true)
        ));
    }
    for value in snapshot.values() {
        out.push_str(&format!(
            "value|{}|{}|{}\n",
            value.cellpath,
            value.data_type,
            BASE64.encode(&value.data)
        ));
    }
    out
}
