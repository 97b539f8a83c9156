//! Canonical artifact paths.
//!
//! File system and registry locations are held as an ordered list of
//! segments and rendered with `/` as the separator, independent of the
//! platform the snapshot was taken on. A [`CasePolicy`] decides the
//! comparison form used for keying and lookups; the original spelling is
//! always kept for display and output.

use std::fmt;

use thiserror::Error;

pub const SEPARATOR: char = '/';

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum PathError {
    #[error("path is empty after normalization")]
    EmptyAfterNormalization,
    #[error("illegal path segment {0:?}")]
    IllegalSegment(String),
    #[error("path {path:?} does not start with root {root:?}")]
    RootMismatch { path: String, root: String },
}

/// Which namespace a path lives in.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum PathKind {
    Filesystem,
    Registry,
}

/// Comparison semantics for paths.
///
/// `Insensitive` mirrors Windows behaviour and is the default.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Default)]
pub enum CasePolicy {
    #[default]
    Insensitive,
    Sensitive,
}

impl CasePolicy {
    /// Comparison form of a single segment.
    pub fn fold_segment(self, segment: &str) -> String {
        match self {
            CasePolicy::Insensitive => segment.to_lowercase(),
            CasePolicy::Sensitive => segment.to_owned(),
        }
    }

    /// Comparison form of a whole path; used as the key of every keyed
    /// collection in a snapshot.
    pub fn key(self, path: &CanonicalPath) -> String {
        let mut out = String::with_capacity(path.rendered_len());
        for (i, seg) in path.segments.iter().enumerate() {
            if i > 0 {
                out.push(SEPARATOR);
            }
            match self {
                CasePolicy::Insensitive => out.push_str(&seg.to_lowercase()),
                CasePolicy::Sensitive => out.push_str(seg),
            }
        }
        out
    }

    pub fn as_str(self) -> &'static str {
        match self {
            CasePolicy::Insensitive => "insensitive",
            CasePolicy::Sensitive => "sensitive",
        }
    }

    pub fn parse(s: &str) -> Option<Self> {
        match s {
            "insensitive" => Some(CasePolicy::Insensitive),
            "sensitive" => Some(CasePolicy::Sensitive),
            _ => None,
        }
    }
}

/// A validated, separator-free list of path segments.
#[derive(Debug, Clone, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct CanonicalPath {
    kind: PathKind,
    segments: Vec<String>,
}

fn check_segment(seg: &str) -> Result<(), PathError> {
    if seg.is_empty() || seg == "." || seg == ".." || seg.contains(SEPARATOR) || seg.contains('\\') {
        return Err(PathError::IllegalSegment(seg.to_owned()));
    }
    Ok(())
}

impl CanonicalPath {
    pub fn new<I, S>(kind: PathKind, segments: I) -> Result<Self, PathError>
    where
        I: IntoIterator<Item = S>,
        S: Into<String>,
    {
        let segments: Vec<String> = segments.into_iter().map(Into::into).collect();
        if segments.is_empty() {
            return Err(PathError::EmptyAfterNormalization);
        }
        for seg in &segments {
            check_segment(seg)?;
        }
        Ok(CanonicalPath { kind, segments })
    }

    /// Strict parse of an already rendered path. Unlike [`normalize_path`]
    /// this rejects empty segments instead of collapsing them.
    pub fn parse(kind: PathKind, rendered: &str) -> Result<Self, PathError> {
        if rendered.is_empty() {
            return Err(PathError::EmptyAfterNormalization);
        }
        Self::new(kind, rendered.split(SEPARATOR))
    }

    pub fn kind(&self) -> PathKind {
        self.kind
    }

    pub fn segments(&self) -> &[String] {
        &self.segments
    }

    pub fn len(&self) -> usize {
        self.segments.len()
    }

    pub fn is_empty(&self) -> bool {
        self.segments.is_empty()
    }

    pub fn file_name(&self) -> &str {
        self.segments.last().map(String::as_str).unwrap_or_default()
    }

    /// The path minus its last segment, or `None` for a single-segment path.
    pub fn parent(&self) -> Option<CanonicalPath> {
        if self.segments.len() < 2 {
            return None;
        }
        Some(CanonicalPath {
            kind: self.kind,
            segments: self.segments[..self.segments.len() - 1].to_vec(),
        })
    }

    /// Proper ancestors, nearest first.
    pub fn ancestors(&self) -> impl Iterator<Item = CanonicalPath> + '_ {
        (1..self.segments.len()).rev().map(move |n| CanonicalPath {
            kind: self.kind,
            segments: self.segments[..n].to_vec(),
        })
    }

    pub fn join(&self, segment: &str) -> Result<CanonicalPath, PathError> {
        check_segment(segment)?;
        let mut segments = self.segments.clone();
        segments.push(segment.to_owned());
        Ok(CanonicalPath {
            kind: self.kind,
            segments,
        })
    }

    fn rendered_len(&self) -> usize {
        self.segments.iter().map(String::len).sum::<usize>() + self.segments.len().saturating_sub(1)
    }

    pub fn render(&self) -> String {
        self.segments.join("/")
    }
}

impl fmt::Display for CanonicalPath {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        for (i, seg) in self.segments.iter().enumerate() {
            if i > 0 {
                f.write_str("/")?;
            }
            f.write_str(seg)?;
        }
        Ok(())
    }
}

fn split_platform(raw: &str) -> impl Iterator<Item = &str> {
    raw.split(['/', '\\']).filter(|s| !s.is_empty())
}

/// Converts a platform path string into a [`CanonicalPath`].
///
/// Both `\` and `/` are treated as separators, empty segments are dropped
/// and `root` (when given) is stripped segment-wise from the front.
pub fn normalize_path(raw: &str, kind: PathKind, root: Option<&str>) -> Result<CanonicalPath, PathError> {
    let mut segments: Vec<&str> = split_platform(raw).collect();
    if let Some(root) = root {
        let root_segments: Vec<&str> = split_platform(root).collect();
        if segments.len() < root_segments.len() || segments[..root_segments.len()] != root_segments[..] {
            return Err(PathError::RootMismatch {
                path: raw.to_owned(),
                root: root.to_owned(),
            });
        }
        segments.drain(..root_segments.len());
    }
    if segments.is_empty() {
        return Err(PathError::EmptyAfterNormalization);
    }
    CanonicalPath::new(kind, segments)
}
