//! Reading and validating APXML text.
//!
//! One tree walk both builds the [`ApxmlDocument`] and records every
//! schema violation it meets, so [`parse`] and [`validate`] can never
//! disagree about what a valid document is.

use std::collections::HashSet;
use std::fmt;

use base64::engine::general_purpose::STANDARD as BASE64;
use base64::Engine;
use roxmltree::Node;

use super::emit::is_phase_name;
use super::{
    ApxmlDocument, ApxmlError, CellObject, CreatorRecord, FileObject, MetaType, NameType, Phase, ProfileMetadata,
    ProfileObject, XmlAttribute, XmlElement, XmlNode, APXML_VERSION, KNOWN_PHASES, NS_APXML, NS_DELTA, NS_XSI,
};
use crate::differ::DeltaState;
use crate::model::{CanonicalPath, PathKind, RegType, DEFAULT_HIVE_ROOTS};

/// Schema rule classes.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum Rule {
    WellFormed,
    RootElement,
    Version,
    Sequence,
    RequiredElement,
    UnexpectedElement,
    UnexpectedAttribute,
    UnexpectedText,
    Enumeration,
    Pattern,
    MinLength,
    DeltaAnnotation,
    Allocation,
    DirectoryDigest,
    KeyData,
    Unique,
    Encoding,
}

impl Rule {
    pub fn as_str(self) -> &'static str {
        match self {
            Rule::WellFormed => "well-formed",
            Rule::RootElement => "root-element",
            Rule::Version => "version",
            Rule::Sequence => "sequence",
            Rule::RequiredElement => "required-element",
            Rule::UnexpectedElement => "unexpected-element",
            Rule::UnexpectedAttribute => "unexpected-attribute",
            Rule::UnexpectedText => "unexpected-text",
            Rule::Enumeration => "enumeration",
            Rule::Pattern => "pattern",
            Rule::MinLength => "min-length",
            Rule::DeltaAnnotation => "delta-annotation",
            Rule::Allocation => "allocation",
            Rule::DirectoryDigest => "directory-digest",
            Rule::KeyData => "key-data",
            Rule::Unique => "unique",
            Rule::Encoding => "encoding",
        }
    }
}

impl fmt::Display for Rule {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Violation {
    /// Element path such as `/apxml/install/fileobject[2]/meta_type`.
    pub path: String,
    pub rule: Rule,
    pub message: String,
}

impl fmt::Display for Violation {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}: [{}] {}", self.path, self.rule, self.message)
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Default)]
pub struct ValidationReport {
    pub violations: Vec<Violation>,
}

impl ValidationReport {
    pub fn is_ok(&self) -> bool {
        self.violations.is_empty()
    }

    pub fn has_rule(&self, rule: Rule) -> bool {
        self.violations.iter().any(|v| v.rule == rule)
    }
}

impl fmt::Display for ValidationReport {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.is_ok() {
            return writeln!(f, "ok");
        }
        for v in &self.violations {
            writeln!(f, "{v}")?;
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, Default)]
pub struct ParseOptions {
    /// Reject phase names outside [`KNOWN_PHASES`] and foreign-namespace
    /// extension elements instead of keeping them.
    pub strict: bool,
}

struct Reader {
    strict: bool,
    violations: Vec<Violation>,
    strict_errors: Vec<ApxmlError>,
}

fn local<'a>(n: &Node<'a, '_>) -> &'a str {
    n.tag_name().name()
}

fn in_apxml(n: &Node) -> bool {
    n.tag_name().namespace() == Some(NS_APXML)
}

fn is_named(n: &Node, name: &str) -> bool {
    in_apxml(n) && local(n) == name
}

fn child_path(parent: &str, siblings: &[Node], node: &Node) -> String {
    let name = local(node);
    let same: Vec<_> = siblings.iter().filter(|s| local(s) == name).collect();
    if same.len() > 1 {
        let idx = same.iter().position(|s| *s == node).unwrap_or(0) + 1;
        format!("{parent}/{name}[{idx}]")
    } else {
        format!("{parent}/{name}")
    }
}

impl Reader {
    fn violate(&mut self, path: &str, rule: Rule, message: impl Into<String>) {
        self.violations.push(Violation {
            path: path.to_owned(),
            rule,
            message: message.into(),
        });
    }

    /// Element children; non-blank text is a violation.
    fn elements<'a, 'i>(&mut self, node: Node<'a, 'i>, path: &str) -> Vec<Node<'a, 'i>> {
        let mut out = Vec::new();
        for c in node.children() {
            if c.is_element() {
                out.push(c);
            } else if c.is_text() && !c.text().unwrap_or("").trim().is_empty() {
                self.violate(path, Rule::UnexpectedText, "text is not allowed here");
            }
        }
        out
    }

    fn text(&mut self, node: Node, path: &str) -> String {
        let mut out = String::new();
        for c in node.children() {
            if c.is_element() {
                self.violate(
                    path,
                    Rule::UnexpectedElement,
                    format!("<{}> is not allowed here", local(&c)),
                );
            } else if c.is_text() {
                out.push_str(c.text().unwrap_or(""));
            }
        }
        out
    }

    fn no_attributes(&mut self, node: Node, path: &str) {
        for a in node.attributes() {
            self.violate(
                path,
                Rule::UnexpectedAttribute,
                format!("attribute {} is not allowed", a.name()),
            );
        }
    }

    fn leaf(&mut self, node: Node, path: &str) -> String {
        self.no_attributes(node, path);
        self.text(node, path)
    }

    /// Matches children against an ordered list of (name, required).
    fn sequence<'a, 'i>(
        &mut self,
        path: &str,
        children: &[Node<'a, 'i>],
        layout: &[(&'static str, bool)],
    ) -> Vec<Option<(Node<'a, 'i>, String)>> {
        let mut idx = 0;
        let mut found = Vec::with_capacity(layout.len());
        for &(name, required) in layout {
            if idx < children.len() && is_named(&children[idx], name) {
                let p = child_path(path, children, &children[idx]);
                found.push(Some((children[idx], p)));
                idx += 1;
            } else {
                if required {
                    self.violate(path, Rule::RequiredElement, format!("missing <{name}>"));
                }
                found.push(None);
            }
        }
        for extra in &children[idx..] {
            let p = child_path(path, children, extra);
            if in_apxml(extra) && layout.iter().any(|(n, _)| *n == local(extra)) {
                self.violate(
                    &p,
                    Rule::Sequence,
                    format!("<{}> is out of order or repeated", local(extra)),
                );
            } else {
                self.violate(
                    &p,
                    Rule::UnexpectedElement,
                    format!("<{}> is not allowed here", local(extra)),
                );
            }
        }
        found
    }

    fn flag(&mut self, slot: &Option<(Node, String)>) -> Option<bool> {
        let (node, path) = slot.as_ref()?;
        match self.leaf(*node, path).as_str() {
            "1" => Some(true),
            "0" => Some(false),
            other => {
                self.violate(path, Rule::Enumeration, format!("expected 0 or 1, found {other:?}"));
                None
            }
        }
    }

    fn delta(&mut self, node: Node, path: &str) -> DeltaState {
        let mut states = Vec::new();
        for a in node.attributes() {
            if a.namespace() == Some(NS_DELTA) {
                match DeltaState::parse(a.name()) {
                    Some(s) if a.value() == "1" => states.push(s),
                    Some(_) => self.violate(
                        path,
                        Rule::DeltaAnnotation,
                        format!("delta:{} must have the value \"1\"", a.name()),
                    ),
                    None => self.violate(
                        path,
                        Rule::DeltaAnnotation,
                        format!("unknown delta annotation delta:{}", a.name()),
                    ),
                }
            } else {
                self.violate(
                    path,
                    Rule::UnexpectedAttribute,
                    format!("attribute {} is not allowed", a.name()),
                );
            }
        }
        if states.len() != 1 {
            self.violate(
                path,
                Rule::DeltaAnnotation,
                format!("expected exactly one delta annotation, found {}", states.len()),
            );
        }
        states.first().copied().unwrap_or(DeltaState::New)
    }

    fn allocation(&mut self, path: &str, delta: DeltaState, flags: &[Option<bool>]) {
        let expected = delta != DeltaState::Deleted;
        if flags.iter().flatten().any(|f| *f != expected) {
            self.violate(
                path,
                Rule::Allocation,
                format!("delta {delta} requires allocation {}", if expected { 1 } else { 0 }),
            );
        }
    }

    fn path_of(&mut self, slot: &Option<(Node, String)>, kind: PathKind) -> Option<CanonicalPath> {
        let (node, path) = slot.as_ref()?;
        let text = self.leaf(*node, path);
        match CanonicalPath::parse(kind, &text) {
            Ok(p) => Some(p),
            Err(e) => {
                self.violate(path, Rule::Pattern, format!("{text:?} is not a canonical path: {e}"));
                None
            }
        }
    }

    fn file_object(&mut self, node: Node, path: &str) -> Option<FileObject> {
        let delta = self.delta(node, path);
        let children = self.elements(node, path);
        let s = self.sequence(
            path,
            &children,
            &[
                ("filename", true),
                ("meta_type", true),
                ("hashdigest", false),
                ("alloc_name", true),
                ("alloc_inode", true),
            ],
        );
        let filename = self.path_of(&s[0], PathKind::Filesystem);
        let meta_type = s[1].as_ref().and_then(|(n, p)| match self.leaf(*n, p).as_str() {
            "1" => Some(MetaType::File),
            "2" => Some(MetaType::Directory),
            other => {
                self.violate(
                    p,
                    Rule::Enumeration,
                    format!("meta_type must be 1 or 2, found {other:?}"),
                );
                None
            }
        });
        let sha1 = s[2].as_ref().and_then(|(n, p)| {
            let mut typed = false;
            for a in n.attributes() {
                if a.namespace().is_none() && a.name() == "type" {
                    typed = true;
                    if a.value() != "sha1" {
                        self.violate(
                            p,
                            Rule::Enumeration,
                            format!("hash type must be sha1, found {:?}", a.value()),
                        );
                    }
                } else {
                    self.violate(
                        p,
                        Rule::UnexpectedAttribute,
                        format!("attribute {} is not allowed", a.name()),
                    );
                }
            }
            if !typed {
                self.violate(p, Rule::Enumeration, "hashdigest requires type=\"sha1\"");
            }
            let text = self.text(*n, p);
            match text.parse() {
                Ok(d) => Some(d),
                Err(_) => {
                    self.violate(p, Rule::Pattern, format!("{text:?} is not 40 lowercase hex digits"));
                    None
                }
            }
        });
        if meta_type == Some(MetaType::Directory) && s[2].is_some() {
            self.violate(path, Rule::DirectoryDigest, "directories must not carry a hashdigest");
        }
        let alloc_name = self.flag(&s[3]);
        let alloc_inode = self.flag(&s[4]);
        self.allocation(path, delta, &[alloc_name, alloc_inode]);
        Some(FileObject {
            filename: filename?,
            meta_type: meta_type?,
            sha1,
            alloc_name: alloc_name?,
            alloc_inode: alloc_inode?,
            delta,
        })
    }

    fn cell_object(&mut self, node: Node, path: &str) -> Option<CellObject> {
        let delta = self.delta(node, path);
        let children = self.elements(node, path);
        let s = self.sequence(
            path,
            &children,
            &[
                ("cellpath", true),
                ("name_type", true),
                ("data_type", false),
                ("data", false),
                ("alloc", true),
            ],
        );
        let cellpath = self.path_of(&s[0], PathKind::Registry);
        if let (Some(cp), Some((_, p))) = (&cellpath, &s[0]) {
            let root = &cp.segments()[0];
            if !DEFAULT_HIVE_ROOTS.iter().any(|r| r.eq_ignore_ascii_case(root)) {
                self.violate(p, Rule::Pattern, format!("unknown hive root {root:?}"));
            }
        }
        let name_type = s[1].as_ref().and_then(|(n, p)| match self.leaf(*n, p).as_str() {
            "k" => Some(NameType::Key),
            "v" => Some(NameType::Value),
            other => {
                self.violate(
                    p,
                    Rule::Enumeration,
                    format!("name_type must be k or v, found {other:?}"),
                );
                None
            }
        });
        match name_type {
            Some(NameType::Key) if s[2].is_some() || s[3].is_some() => {
                self.violate(path, Rule::KeyData, "keys must not carry data_type or data");
            }
            Some(NameType::Value) => {
                if s[2].is_none() {
                    self.violate(path, Rule::RequiredElement, "values require <data_type>");
                }
                if s[3].is_none() {
                    self.violate(path, Rule::RequiredElement, "values require <data>");
                }
                if let (Some(cp), Some((_, p))) = (&cellpath, &s[0]) {
                    if cp.len() < 2 {
                        self.violate(p, Rule::Pattern, "value cellpath needs a parent key");
                    }
                }
            }
            _ => {}
        }
        let data_type = s[2].as_ref().and_then(|(n, p)| {
            let text = self.leaf(*n, p);
            match text.parse::<RegType>() {
                Ok(t) => Some(t),
                Err(e) => {
                    self.violate(p, Rule::Enumeration, e.to_string());
                    None
                }
            }
        });
        let data = s[3].as_ref().and_then(|(n, p)| {
            let mut base64 = false;
            for a in n.attributes() {
                if a.namespace().is_none() && a.name() == "encoding" {
                    if a.value() == "base64" {
                        base64 = true;
                    } else {
                        self.violate(p, Rule::Enumeration, format!("unknown data encoding {:?}", a.value()));
                    }
                } else {
                    self.violate(
                        p,
                        Rule::UnexpectedAttribute,
                        format!("attribute {} is not allowed", a.name()),
                    );
                }
            }
            let text = self.text(*n, p);
            if base64 {
                match BASE64.decode(text.trim()) {
                    Ok(bytes) => Some(bytes),
                    Err(e) => {
                        self.violate(p, Rule::Encoding, format!("invalid base64: {e}"));
                        None
                    }
                }
            } else {
                Some(text.into_bytes())
            }
        });
        let alloc = self.flag(&s[4]);
        self.allocation(path, delta, &[alloc]);
        let name_type = name_type?;
        if name_type == NameType::Value && (data_type.is_none() || data.is_none()) {
            return None;
        }
        Some(CellObject {
            cellpath: cellpath?,
            name_type,
            data_type: if name_type == NameType::Value { data_type } else { None },
            data: if name_type == NameType::Value { data } else { None },
            alloc: alloc?,
            delta,
        })
    }

    fn phase(&mut self, node: Node, path: &str) -> Phase {
        let name = local(&node).to_owned();
        self.no_attributes(node, path);
        if !is_phase_name(&name) {
            self.violate(path, Rule::Pattern, format!("invalid phase name {name:?}"));
        }
        if self.strict && !KNOWN_PHASES.contains(&name.as_str()) {
            self.strict_errors.push(ApxmlError::UnknownPhase(name.clone()));
        }
        let children = self.elements(node, path);
        let mut objects = Vec::new();
        let mut seen_cell = false;
        let mut ids = HashSet::new();
        for c in &children {
            let p = child_path(path, &children, c);
            if is_named(c, "fileobject") {
                if seen_cell {
                    self.violate(&p, Rule::Sequence, "file objects must precede cell objects");
                }
                if let Some(f) = self.file_object(*c, &p) {
                    if !ids.insert(('f', f.filename.to_string(), f.meta_type as u8)) {
                        self.violate(&p, Rule::Unique, format!("{} appears twice in this phase", f.filename));
                    }
                    objects.push(ProfileObject::File(f));
                }
            } else if is_named(c, "cellobject") {
                seen_cell = true;
                if let Some(cell) = self.cell_object(*c, &p) {
                    if !ids.insert(('c', cell.cellpath.to_string(), cell.name_type as u8)) {
                        self.violate(
                            &p,
                            Rule::Unique,
                            format!("{} appears twice in this phase", cell.cellpath),
                        );
                    }
                    objects.push(ProfileObject::Cell(cell));
                }
            } else {
                self.violate(
                    &p,
                    Rule::UnexpectedElement,
                    format!("<{}> is not allowed in a phase", local(c)),
                );
            }
        }
        Phase::new(name, objects)
    }

    fn metadata(&mut self, node: Node, path: &str) -> ProfileMetadata {
        self.no_attributes(node, path);
        let children = self.elements(node, path);
        let s = self.sequence(path, &children, &[("app_name", true), ("app_version", true)]);
        let mut get = |slot: &Option<(Node, String)>, what: &str| {
            let (n, p) = slot.as_ref()?;
            let text = self.leaf(*n, p);
            if text.is_empty() {
                self.violate(p, Rule::MinLength, format!("{what} must not be empty"));
            }
            Some(text)
        };
        ProfileMetadata {
            app_name: get(&s[0], "application name").unwrap_or_default(),
            app_version: get(&s[1], "application version").unwrap_or_default(),
        }
    }

    fn creator(&mut self, node: Node, path: &str) -> CreatorRecord {
        self.no_attributes(node, path);
        let children = self.elements(node, path);
        let s = self.sequence(
            path,
            &children,
            &[("program", true), ("version", true), ("execution_environment", true)],
        );
        let program_name = match &s[0] {
            Some((n, p)) => {
                let t = self.leaf(*n, p);
                if t.is_empty() {
                    self.violate(p, Rule::MinLength, "program name must not be empty");
                }
                t
            }
            None => String::new(),
        };
        let program_version = match &s[1] {
            Some((n, p)) => self.leaf(*n, p),
            None => String::new(),
        };
        let mut execution_environment = Vec::new();
        if let Some((n, p)) = &s[2] {
            self.no_attributes(*n, p);
            let items = self.elements(*n, p);
            for item in &items {
                let ip = child_path(p, &items, item);
                if !in_apxml(item) {
                    self.violate(&ip, Rule::UnexpectedElement, "descriptors must use the APXML namespace");
                    continue;
                }
                let value = self.leaf(*item, &ip);
                execution_environment.push((local(item).to_owned(), value));
            }
        }
        CreatorRecord {
            program_name,
            program_version,
            execution_environment,
        }
    }

    fn document(&mut self, root: Node) -> ApxmlDocument {
        let mut doc = ApxmlDocument::new(ProfileMetadata::default(), CreatorRecord::default());
        if !is_named(&root, "apxml") {
            self.violate(
                &format!("/{}", local(&root)),
                Rule::RootElement,
                "root element must be apxml in the APXML namespace",
            );
            return doc;
        }
        let path = "/apxml";
        let mut version = None;
        for a in root.attributes() {
            match (a.namespace(), a.name()) {
                (None, "version") => version = Some(a.value()),
                (Some(NS_XSI), _) => {}
                _ => self.violate(
                    path,
                    Rule::UnexpectedAttribute,
                    format!("attribute {} is not allowed", a.name()),
                ),
            }
        }
        match version {
            None => self.violate(path, Rule::Version, "missing version attribute"),
            Some(v) => {
                let v = v.strip_prefix('\'').and_then(|v| v.strip_suffix('\'')).unwrap_or(v);
                if v != APXML_VERSION {
                    self.violate(path, Rule::Version, format!("unsupported version {v:?}"));
                }
                doc.version = v.to_owned();
            }
        }

        let children = self.elements(root, path);
        match children.first() {
            Some(c) if is_named(c, "metadata") => doc.metadata = self.metadata(*c, "/apxml/metadata"),
            _ => self.violate(path, Rule::RequiredElement, "<metadata> must be the first child"),
        }
        match children.get(1) {
            Some(c) if is_named(c, "creator") => doc.creator = self.creator(*c, "/apxml/creator"),
            _ => self.violate(path, Rule::RequiredElement, "<creator> must be the second child"),
        }
        let mut names = HashSet::new();
        for (i, c) in children.iter().enumerate() {
            if (i == 0 && is_named(c, "metadata")) || (i == 1 && is_named(c, "creator")) {
                continue;
            }
            let p = child_path(path, &children, c);
            match c.tag_name().namespace() {
                Some(NS_APXML) if matches!(local(c), "metadata" | "creator") => {
                    self.violate(
                        &p,
                        Rule::Sequence,
                        format!("<{}> is out of order or repeated", local(c)),
                    );
                }
                Some(NS_APXML) => {
                    if !names.insert(local(c).to_owned()) {
                        self.violate(&p, Rule::Unique, format!("phase {} appears twice", local(c)));
                        continue;
                    }
                    let phase = self.phase(*c, &p);
                    doc.phases.push(phase);
                }
                Some(_) => {
                    if self.strict {
                        self.strict_errors.push(ApxmlError::SchemaViolation {
                            path: p.clone(),
                            rule: Rule::UnexpectedElement,
                            message: "extension elements are rejected in strict mode".into(),
                        });
                    }
                    doc.extensions.push(extension(*c));
                }
                None => self.violate(&p, Rule::UnexpectedElement, format!("<{}> has no namespace", local(c))),
            }
        }
        doc
    }
}

fn extension(node: Node) -> XmlElement {
    let mut children: Vec<XmlNode> = Vec::new();
    for c in node.children() {
        if c.is_element() {
            children.push(XmlNode::Element(extension(c)));
        } else if c.is_text() {
            let t = c.text().unwrap_or("");
            if t.trim().is_empty() {
                continue;
            }
            match children.last_mut() {
                Some(XmlNode::Text(prev)) => prev.push_str(t),
                _ => children.push(XmlNode::Text(t.to_owned())),
            }
        }
    }
    XmlElement {
        namespace: node.tag_name().namespace().unwrap_or("").to_owned(),
        name: local(&node).to_owned(),
        attributes: node
            .attributes()
            .map(|a| XmlAttribute {
                namespace: a.namespace().map(str::to_owned),
                name: a.name().to_owned(),
                value: a.value().to_owned(),
            })
            .collect(),
        children,
    }
}

fn read(text: &str, options: ParseOptions) -> Result<(ApxmlDocument, Reader), ApxmlError> {
    let tree = roxmltree::Document::parse(text).map_err(|e| ApxmlError::NotWellFormed(e.to_string()))?;
    let mut reader = Reader {
        strict: options.strict,
        violations: Vec::new(),
        strict_errors: Vec::new(),
    };
    let doc = reader.document(tree.root_element());
    Ok((doc, reader))
}

pub fn parse_with(text: &str, options: ParseOptions) -> Result<ApxmlDocument, ApxmlError> {
    let (doc, reader) = read(text, options)?;
    if let Some(v) = reader.violations.into_iter().next() {
        return Err(ApxmlError::SchemaViolation {
            path: v.path,
            rule: v.rule,
            message: v.message,
        });
    }
    if let Some(e) = reader.strict_errors.into_iter().next() {
        return Err(e);
    }
    Ok(doc)
}

/// Lenient parse: extension phases and foreign elements are kept.
pub fn parse(text: &str) -> Result<ApxmlDocument, ApxmlError> {
    parse_with(text, ParseOptions::default())
}

/// Decodes UTF-8 or UTF-16 (either byte order, detected from the byte
/// order mark or the leading `<`) and parses.
pub fn parse_bytes(bytes: &[u8], options: ParseOptions) -> Result<ApxmlDocument, ApxmlError> {
    parse_with(&decode(bytes)?, options)
}

pub(crate) fn decode(bytes: &[u8]) -> Result<String, ApxmlError> {
    let utf16 = |body: &[u8], le: bool| -> Result<String, ApxmlError> {
        if !body.len().is_multiple_of(2) {
            return Err(ApxmlError::NotWellFormed("truncated UTF-16 text".into()));
        }
        let units = body.chunks_exact(2).map(|c| {
            if le {
                u16::from_le_bytes([c[0], c[1]])
            } else {
                u16::from_be_bytes([c[0], c[1]])
            }
        });
        char::decode_utf16(units)
            .collect::<Result<String, _>>()
            .map_err(|e| ApxmlError::NotWellFormed(e.to_string()))
    };
    match bytes {
        [0xFF, 0xFE, rest @ ..] => utf16(rest, true),
        [0xFE, 0xFF, rest @ ..] => utf16(rest, false),
        [b'<', 0, ..] => utf16(bytes, true),
        [0, b'<', ..] => utf16(bytes, false),
        _ => {
            let body = bytes.strip_prefix(&[0xEF, 0xBB, 0xBF]).unwrap_or(bytes);
            String::from_utf8(body.to_vec()).map_err(|e| ApxmlError::NotWellFormed(e.to_string()))
        }
    }
}

/// Checks a document against the schema. Problems are reported as data;
/// text that is not well-formed XML yields a single violation.
pub fn validate(text: &str) -> ValidationReport {
    match read(text, ParseOptions::default()) {
        Ok((_, reader)) => ValidationReport {
            violations: reader.violations,
        },
        Err(e) => ValidationReport {
            violations: vec![Violation {
                path: "/".into(),
                rule: Rule::WellFormed,
                message: e.to_string(),
            }],
        },
    }
}

/// [`validate`] over raw bytes in either supported encoding.
pub fn validate_bytes(bytes: &[u8]) -> ValidationReport {
    match decode(bytes) {
        Ok(text) => validate(&text),
        Err(e) => ValidationReport {
            violations: vec![Violation {
                path: "/".into(),
                rule: Rule::WellFormed,
                message: e.to_string(),
            }],
        },
    }
}
