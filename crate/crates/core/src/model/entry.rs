//! Per-artifact records: files, directories, hive keys and hive values.

use std::fmt;
use std::str::FromStr;

use chrono::{DateTime, Utc};
use thiserror::Error;

use super::path::CanonicalPath;

/// UTC timestamp with nanosecond resolution.
pub type Timestamp = DateTime<Utc>;

#[derive(Debug, Error, Clone, PartialEq, Eq)]
#[error("invalid SHA-1 digest {0:?}: expected 40 lowercase hex digits")]
pub struct DigestParseError(pub String);

/// A SHA-1 digest, rendered as 40 lowercase hex digits.
#[derive(Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct Sha1Digest([u8; 20]);

impl Sha1Digest {
    pub fn from_bytes(bytes: [u8; 20]) -> Self {
        Sha1Digest(bytes)
    }

    pub fn as_bytes(&self) -> &[u8; 20] {
        &self.0
    }
}

impl fmt::Display for Sha1Digest {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        for b in self.0 {
            write!(f, "{b:02x}")?;
        }
        Ok(())
    }
}

impl fmt::Debug for Sha1Digest {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "Sha1Digest({self})")
    }
}

impl FromStr for Sha1Digest {
    type Err = DigestParseError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        let bytes = s.as_bytes();
        if bytes.len() != 40 || !bytes.iter().all(|b| matches!(b, b'0'..=b'9' | b'a'..=b'f')) {
            return Err(DigestParseError(s.to_owned()));
        }
        let mut out = [0u8; 20];
        for (i, pair) in bytes.chunks_exact(2).enumerate() {
            let hi = (pair[0] as char).to_digit(16).unwrap_or(0) as u8;
            let lo = (pair[1] as char).to_digit(16).unwrap_or(0) as u8;
            out[i] = (hi << 4) | lo;
        }
        Ok(Sha1Digest(out))
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum EntryKind {
    File,
    Directory,
}

/// Raw 32-bit attribute flags. Bit values follow the Windows
/// `FILE_ATTRIBUTE_*` constants.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Default)]
pub struct Attributes(pub u32);

impl Attributes {
    pub const READONLY: u32 = 0x0000_0001;
    pub const HIDDEN: u32 = 0x0000_0002;
    pub const SYSTEM: u32 = 0x0000_0004;
    pub const DIRECTORY: u32 = 0x0000_0010;
    pub const ARCHIVE: u32 = 0x0000_0020;
    /// Set on symbolic links, which are recorded but never followed.
    pub const REPARSE_POINT: u32 = 0x0000_0400;

    pub fn contains(self, flag: u32) -> bool {
        self.0 & flag == flag
    }
}

/// A file system entry (FILECONTENT).
#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct FileEntry {
    pub path: CanonicalPath,
    pub kind: EntryKind,
    /// Always 0 for directories.
    pub size: u64,
    pub write_time: Timestamp,
    pub access_time: Timestamp,
    pub attributes: Attributes,
    /// Only ever present on files.
    pub sha1: Option<Sha1Digest>,
}

impl FileEntry {
    pub fn is_dir(&self) -> bool {
        self.kind == EntryKind::Directory
    }
}

/// A registry key (KEYCONTENT).
#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct HiveKey {
    pub cellpath: CanonicalPath,
    pub modified_time: Timestamp,
}

#[derive(Debug, Error, Clone, PartialEq, Eq)]
#[error("unknown registry data type {0:?}")]
pub struct UnknownRegType(pub String);

/// Registry value data type tag.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum RegType {
    None,
    Sz,
    ExpandSz,
    Binary,
    Dword,
    DwordBigEndian,
    Link,
    MultiSz,
    ResourceList,
    FullResourceDescriptor,
    ResourceRequirementsList,
    Qword,
}

impl RegType {
    pub const ALL: [RegType; 12] = [
        RegType::None,
        RegType::Sz,
        RegType::ExpandSz,
        RegType::Binary,
        RegType::Dword,
        RegType::DwordBigEndian,
        RegType::Link,
        RegType::MultiSz,
        RegType::ResourceList,
        RegType::FullResourceDescriptor,
        RegType::ResourceRequirementsList,
        RegType::Qword,
    ];

    pub fn as_str(self) -> &'static str {
        match self {
            RegType::None => "REG_NONE",
            RegType::Sz => "REG_SZ",
            RegType::ExpandSz => "REG_EXPAND_SZ",
            RegType::Binary => "REG_BINARY",
            RegType::Dword => "REG_DWORD",
            RegType::DwordBigEndian => "REG_DWORD_BIG_ENDIAN",
            RegType::Link => "REG_LINK",
            RegType::MultiSz => "REG_MULTI_SZ",
            RegType::ResourceList => "REG_RESOURCE_LIST",
            RegType::FullResourceDescriptor => "REG_FULL_RESOURCE_DESCRIPTOR",
            RegType::ResourceRequirementsList => "REG_RESOURCE_REQUIREMENTS_LIST",
            RegType::Qword => "REG_QWORD",
        }
    }

    /// Whether values of this type hold a single string.
    pub fn is_string(self) -> bool {
        matches!(self, RegType::Sz | RegType::ExpandSz)
    }
}

impl fmt::Display for RegType {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for RegType {
    type Err = UnknownRegType;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        RegType::ALL
            .into_iter()
            .find(|t| t.as_str() == s)
            .ok_or_else(|| UnknownRegType(s.to_owned()))
    }
}

/// A registry value (VALUECONTENT). The last cellpath segment is the value
/// name; the rest identifies the parent key.
#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct HiveValue {
    pub cellpath: CanonicalPath,
    pub data_type: RegType,
    pub data: Vec<u8>,
}

impl HiveValue {
    pub fn data_size(&self) -> usize {
        self.data.len()
    }

    pub fn name(&self) -> &str {
        self.cellpath.file_name()
    }
}
