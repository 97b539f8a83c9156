//! Snapshot persistence.
//!
//! Text format, UTF-8, LF line endings. The first line is the version
//! header, followed by three header records and then one record per
//! artifact. Files, keys and values each appear in sorted comparison order.
//!
//! ```text
//! APPDIFF-SNAPSHOT v1
//! id|<id>
//! taken_at|<RFC 3339, nanoseconds, UTC>
//! case|<insensitive|sensitive>
//! file|<f|d>|<size>|<write_time>|<access_time>|<attributes, 8 hex digits>|<sha1 or ->|<path>
//! key|<modified_time>|<cellpath>
//! value|<data type tag>|<base64 data>|<cellpath>
//! ```
//!
//! The path is always the last field so it may contain `|`. In `id` and
//! path fields `%`, CR and LF are written as `%25`, `%0D` and `%0A`.

use std::fs::File;
use std::io::{self, BufRead, BufReader, BufWriter, Write};
use std::path::Path;

use base64::engine::general_purpose::STANDARD as BASE64;
use base64::Engine;
use chrono::{DateTime, SecondsFormat, Utc};
use thiserror::Error;

use super::entry::{Attributes, EntryKind, FileEntry, HiveKey, HiveValue, Timestamp};
use super::path::{CanonicalPath, CasePolicy, PathKind};
use super::snapshot::Snapshot;

pub const SNAPSHOT_HEADER: &str = "APPDIFF-SNAPSHOT v1";

#[derive(Debug, Error)]
pub enum PersistError {
    #[error("I/O failure: {0}")]
    Io(#[from] io::Error),
    #[error("unsupported snapshot format header {0:?}")]
    FormatVersionMismatch(String),
    #[error("line {line}: {message}")]
    Malformed { line: usize, message: String },
}

fn escape(s: &str) -> String {
    let mut out = String::with_capacity(s.len());
    for c in s.chars() {
        match c {
            '%' => out.push_str("%25"),
            '\n' => out.push_str("%0A"),
            '\r' => out.push_str("%0D"),
            c => out.push(c),
        }
    }
    out
}

fn unescape(s: &str) -> Option<String> {
    let mut out = String::with_capacity(s.len());
    let mut rest = s;
    while let Some(i) = rest.find('%') {
        out.push_str(&rest[..i]);
        let code = rest.get(i + 1..i + 3)?;
        out.push(match code {
            "25" => '%',
            "0A" => '\n',
            "0D" => '\r',
            _ => return None,
        });
        rest = &rest[i + 3..];
    }
    out.push_str(rest);
    Some(out)
}

fn time(t: &Timestamp) -> String {
    t.to_rfc3339_opts(SecondsFormat::Nanos, true)
}

pub fn persist_snapshot<W: Write>(s: &Snapshot, sink: W) -> Result<(), PersistError> {
    let mut w = BufWriter::new(sink);
    writeln!(w, "{SNAPSHOT_HEADER}")?;
    writeln!(w, "id|{}", escape(&s.id))?;
    writeln!(w, "taken_at|{}", time(&s.taken_at))?;
    writeln!(w, "case|{}", s.policy().as_str())?;
    for f in s.files() {
        writeln!(
            w,
            "file|{}|{}|{}|{}|{:08x}|{}|{}",
            match f.kind {
                EntryKind::File => 'f',
                EntryKind::Directory => 'd',
            },
            f.size,
            time(&f.write_time),
            time(&f.access_time),
            f.attributes.0,
            f.sha1.map(|d| d.to_string()).unwrap_or_else(|| "-".into()),
            escape(&f.path.to_string()),
        )?;
    }
    for k in s.keys() {
        writeln!(w, "key|{}|{}", time(&k.modified_time), escape(&k.cellpath.to_string()))?;
    }
    for v in s.values() {
        writeln!(
            w,
            "value|{}|{}|{}",
            v.data_type,
            BASE64.encode(&v.data),
            escape(&v.cellpath.to_string())
        )?;
    }
    w.flush()?;
    Ok(())
}

struct LineReader<R> {
    inner: R,
    line: usize,
    buf: String,
}

impl<R: BufRead> LineReader<R> {
    fn next(&mut self) -> Result<Option<String>, PersistError> {
        self.buf.clear();
        if self.inner.read_line(&mut self.buf)? == 0 {
            return Ok(None);
        }
        self.line += 1;
        let trimmed = self.buf.strip_suffix('\n').unwrap_or(&self.buf);
        Ok(Some(trimmed.to_owned()))
    }

    fn malformed(&self, message: impl Into<String>) -> PersistError {
        PersistError::Malformed {
            line: self.line,
            message: message.into(),
        }
    }
}

fn parse_time(s: &str) -> Option<Timestamp> {
    DateTime::parse_from_rfc3339(s).ok().map(|t| t.with_timezone(&Utc))
}

fn parse_path(kind: PathKind, s: &str) -> Option<CanonicalPath> {
    CanonicalPath::parse(kind, &unescape(s)?).ok()
}

pub fn load_snapshot<R: BufRead>(source: R) -> Result<Snapshot, PersistError> {
    let mut r = LineReader {
        inner: source,
        line: 0,
        buf: String::new(),
    };
    match r.next()?.as_deref() {
        Some(SNAPSHOT_HEADER) => {}
        Some(other) => return Err(PersistError::FormatVersionMismatch(other.to_owned())),
        None => return Err(PersistError::FormatVersionMismatch(String::new())),
    }

    let mut header = |name: &str| -> Result<String, PersistError> {
        let Some(line) = r.next()? else {
            return Err(r.malformed("truncated header"));
        };
        let value = line
            .strip_prefix(name)
            .and_then(|l| l.strip_prefix('|'))
            .map(str::to_owned);
        value.ok_or_else(|| r.malformed(format!("expected {name} record")))
    };
    let id = header("id")?;
    let taken_at = header("taken_at")?;
    let case = header("case")?;
    let id = unescape(&id).ok_or_else(|| r.malformed("bad escape in id"))?;
    let taken_at = parse_time(&taken_at).ok_or_else(|| r.malformed("bad taken_at"))?;
    let policy = CasePolicy::parse(&case).ok_or_else(|| r.malformed("bad case policy"))?;

    let mut snapshot = Snapshot::new(id, taken_at, policy);
    while let Some(line) = r.next()? {
        let (tag, rest) = line.split_once('|').unwrap_or((&line, ""));
        let inserted = match tag {
            "file" => {
                let f: Vec<&str> = rest.splitn(7, '|').collect();
                let entry = (|| {
                    if f.len() != 7 {
                        return None;
                    }
                    Some(FileEntry {
                        kind: match f[0] {
                            "f" => EntryKind::File,
                            "d" => EntryKind::Directory,
                            _ => return None,
                        },
                        size: f[1].parse().ok()?,
                        write_time: parse_time(f[2])?,
                        access_time: parse_time(f[3])?,
                        attributes: Attributes(u32::from_str_radix(f[4], 16).ok()?),
                        sha1: match f[5] {
                            "-" => None,
                            d => Some(d.parse().ok()?),
                        },
                        path: parse_path(PathKind::Filesystem, f[6])?,
                    })
                })()
                .ok_or_else(|| r.malformed("bad file record"))?;
                snapshot.insert_file(entry)
            }
            "key" => {
                let key = rest.split_once('|').and_then(|(t, p)| {
                    Some(HiveKey {
                        modified_time: parse_time(t)?,
                        cellpath: parse_path(PathKind::Registry, p)?,
                    })
                });
                snapshot.insert_key(key.ok_or_else(|| r.malformed("bad key record"))?)
            }
            "value" => {
                let f: Vec<&str> = rest.splitn(3, '|').collect();
                let value = (|| {
                    if f.len() != 3 {
                        return None;
                    }
                    Some(HiveValue {
                        data_type: f[0].parse().ok()?,
                        data: BASE64.decode(f[1]).ok()?,
                        cellpath: parse_path(PathKind::Registry, f[2])?,
                    })
                })();
                snapshot.insert_value(value.ok_or_else(|| r.malformed("bad value record"))?)
            }
            _ => return Err(r.malformed(format!("unknown record type {tag:?}"))),
        };
        inserted.map_err(|e| r.malformed(e.to_string()))?;
    }
    snapshot.check_integrity().map_err(|e| r.malformed(e.to_string()))?;
    Ok(snapshot)
}

pub fn save_snapshot_file(s: &Snapshot, path: &Path) -> Result<(), PersistError> {
    persist_snapshot(s, File::create(path)?)
}

pub fn load_snapshot_file(path: &Path) -> Result<Snapshot, PersistError> {
    load_snapshot(BufReader::new(File::open(path)?))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::entry::{RegType, Sha1Digest};
    use chrono::TimeZone;

    fn round_trip(s: &Snapshot) -> Snapshot {
        let mut buf = Vec::new();
        persist_snapshot(s, &mut buf).unwrap();
        load_snapshot(buf.as_slice()).unwrap()
    }

    #[test]
    fn empty_round_trip() {
        let s = Snapshot::new("", Utc::now(), CasePolicy::Insensitive);
        assert_eq!(round_trip(&s), s);
        let s = Snapshot::new("x", Utc::now(), CasePolicy::Sensitive);
        assert_eq!(round_trip(&s), s);
    }

    // 50 mixed entries: 10 directories, 25 files (every other one hashed),
    // 5 keys and 10 values, with awkward characters in a few names.
    fn mixed() -> Snapshot {
        let t0 = Utc.timestamp_opt(1_441_843_200, 123_456_789).unwrap();
        let mut s = Snapshot::new("mixed\nid%", t0, CasePolicy::Insensitive);
        for d in 0..10 {
            s.insert_file(FileEntry {
                path: CanonicalPath::new(PathKind::Filesystem, [format!("Dir {d}|x")]).unwrap(),
                kind: EntryKind::Directory,
                size: 0,
                write_time: t0,
                access_time: t0,
                attributes: Attributes(Attributes::DIRECTORY),
                sha1: None,
            })
            .unwrap();
        }
        for f in 0..25u32 {
            let mut digest = [0u8; 20];
            digest[0] = f as u8;
            s.insert_file(FileEntry {
                path: CanonicalPath::new(
                    PathKind::Filesystem,
                    [format!("Dir {}|x", f % 10), format!("f%{f}\r.bin")],
                )
                .unwrap(),
                kind: EntryKind::File,
                size: u64::from(f) * 1000,
                write_time: t0 + chrono::Duration::nanoseconds(i64::from(f)),
                access_time: t0 - chrono::Duration::days(i64::from(f)),
                attributes: Attributes(f),
                sha1: (f % 2 == 0).then(|| Sha1Digest::from_bytes(digest)),
            })
            .unwrap();
        }
        for k in 0..5 {
            s.insert_key(HiveKey {
                cellpath: CanonicalPath::new(PathKind::Registry, ["HKLM", "Software", &format!("K{k}")]).unwrap(),
                modified_time: t0,
            })
            .unwrap();
        }
        for v in 0..10u8 {
            s.insert_value(HiveValue {
                cellpath: CanonicalPath::new(
                    PathKind::Registry,
                    ["HKLM", "Software", &format!("K{}", v % 5), &format!("v|{v}")],
                )
                .unwrap(),
                data_type: RegType::ALL[usize::from(v)],
                data: vec![v; usize::from(v)],
            })
            .unwrap();
        }
        s
    }

    #[test]
    fn mixed_round_trip() {
        let s = mixed();
        assert_eq!(s.file_count() + s.key_count() + s.value_count(), 50);
        let back = round_trip(&s);
        // Field-for-field comparison, independent of the derived PartialEq.
        assert_eq!(back.id, s.id);
        assert_eq!(back.taken_at, s.taken_at);
        assert_eq!(back.policy(), s.policy());
        for (a, b) in s.files().zip(back.files()) {
            assert_eq!(
                (
                    &a.path,
                    a.kind,
                    a.size,
                    a.write_time,
                    a.access_time,
                    a.attributes,
                    a.sha1
                ),
                (
                    &b.path,
                    b.kind,
                    b.size,
                    b.write_time,
                    b.access_time,
                    b.attributes,
                    b.sha1
                )
            );
        }
        assert_eq!(s.files().len(), back.files().len());
        assert!(s.keys().eq(back.keys()));
        assert!(s.values().eq(back.values()));
        assert_eq!(back, s);
    }

    #[test]
    fn records_are_sorted() {
        let mut buf = Vec::new();
        persist_snapshot(&mixed(), &mut buf).unwrap();
        let text = String::from_utf8(buf).unwrap();
        let paths: Vec<String> = text
            .lines()
            .filter(|l| l.starts_with("file|"))
            .map(|l| unescape(l.splitn(8, '|').nth(7).unwrap()).unwrap().to_lowercase())
            .collect();
        let mut sorted = paths.clone();
        sorted.sort();
        assert_eq!(paths.len(), 35);
        assert_eq!(paths, sorted);
    }

    #[test]
    fn altered_header_rejected() {
        let mut buf = Vec::new();
        persist_snapshot(&mixed(), &mut buf).unwrap();
        buf[0] = b'X';
        assert!(matches!(
            load_snapshot(buf.as_slice()),
            Err(PersistError::FormatVersionMismatch(_))
        ));
        let text = String::from_utf8(buf)
            .unwrap()
            .replacen("XPPDIFF-SNAPSHOT v1", "APPDIFF-SNAPSHOT v2", 1);
        assert!(matches!(
            load_snapshot(text.as_bytes()),
            Err(PersistError::FormatVersionMismatch(_))
        ));
        assert!(matches!(
            load_snapshot(&b""[..]),
            Err(PersistError::FormatVersionMismatch(_))
        ));
    }

    #[test]
    fn malformed_records() {
        let base = "APPDIFF-SNAPSHOT v1\nid|x\ntaken_at|2015-09-10T00:00:00Z\ncase|insensitive\n";
        for bad in [
            "file|f|1|x|y|0|-|a\n",
            "file|z|0|2015-09-10T00:00:00Z|2015-09-10T00:00:00Z|00000000|-|a\n",
            "key|2015-09-10T00:00:00Z|HKCR/a\n",
            "value|REG_SZ|!!|HKLM/a/b\n",
            "blob|1\n",
        ] {
            let doc = format!("{base}{bad}");
            assert!(
                matches!(
                    load_snapshot(doc.as_bytes()),
                    Err(PersistError::Malformed { line: 5, .. })
                ),
                "{bad}"
            );
        }
    }
}
