use std::collections::HashSet;
use std::fmt::Write as _;

use base64::engine::general_purpose::STANDARD as BASE64;
use base64::Engine;

use super::{
    ApxmlDocument, ApxmlError, CellObject, FileObject, MetaType, NameType, Phase, ProfileObject, XmlElement, XmlNode,
    APXML_VERSION, NS_APXML, NS_DC, NS_DELTA, NS_XSI,
};
use crate::differ::DeltaState;

pub(crate) const NS_XML: &str = "http://www.w3.org/XML/1998/namespace";

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum Encoding {
    #[default]
    Utf8,
    /// Little-endian with a byte order mark.
    Utf16,
}

pub(crate) fn is_xml_char(c: char) -> bool {
    matches!(c, '\t' | '\n' | '\r' | ' '..='\u{D7FF}' | '\u{E000}'..='\u{FFFD}' | '\u{10000}'..)
}

pub fn is_phase_name(name: &str) -> bool {
    let mut chars = name.chars();
    matches!(chars.next(), Some('a'..='z'))
        && chars.all(|c| matches!(c, 'a'..='z' | '0'..='9' | '_' | '-'))
        && name != "metadata"
        && name != "creator"
}

pub(crate) fn is_ncname(name: &str) -> bool {
    let mut chars = name.chars();
    matches!(chars.next(), Some('A'..='Z' | 'a'..='z' | '_'))
        && chars.all(|c| matches!(c, 'A'..='Z' | 'a'..='z' | '0'..='9' | '_' | '.' | '-'))
}

/// Whether value data can be written as element text and read back
/// byte-for-byte.
pub(crate) fn renders_as_text(obj: &CellObject, data: &[u8]) -> bool {
    obj.data_type.is_some_and(|t| t.is_string()) && std::str::from_utf8(data).is_ok_and(|s| s.chars().all(is_xml_char))
}

fn invariant(msg: impl Into<String>) -> ApxmlError {
    ApxmlError::InvariantViolation(msg.into())
}

fn check_text(what: &str, s: &str) -> Result<(), ApxmlError> {
    match s.chars().find(|c| !is_xml_char(*c)) {
        Some(c) => Err(invariant(format!(
            "{what} contains character U+{:04X} which XML cannot represent",
            c as u32
        ))),
        None => Ok(()),
    }
}

fn check_file(f: &FileObject) -> Result<(), ApxmlError> {
    check_text("filename", &f.filename.to_string())?;
    if f.meta_type == MetaType::Directory && f.sha1.is_some() {
        return Err(invariant(format!("directory {} carries a digest", f.filename)));
    }
    let allocated = f.delta != DeltaState::Deleted;
    if f.alloc_name != allocated || f.alloc_inode != allocated {
        return Err(invariant(format!(
            "allocation flags of {} disagree with delta {}",
            f.filename, f.delta
        )));
    }
    Ok(())
}

fn check_cell(c: &CellObject) -> Result<(), ApxmlError> {
    check_text("cellpath", &c.cellpath.to_string())?;
    match c.name_type {
        NameType::Key if c.data_type.is_some() || c.data.is_some() => {
            return Err(invariant(format!("key {} carries value data", c.cellpath)))
        }
        NameType::Value if c.data_type.is_none() || c.data.is_none() => {
            return Err(invariant(format!("value {} lacks data", c.cellpath)))
        }
        _ => {}
    }
    if c.alloc != (c.delta != DeltaState::Deleted) {
        return Err(invariant(format!(
            "allocation flag of {} disagrees with delta {}",
            c.cellpath, c.delta
        )));
    }
    Ok(())
}

fn check_extension(e: &XmlElement) -> Result<(), ApxmlError> {
    if e.namespace.is_empty() || e.namespace == NS_APXML {
        return Err(invariant(format!(
            "extension element {} must use a foreign namespace",
            e.name
        )));
    }
    if !is_ncname(&e.name) {
        return Err(invariant(format!("invalid extension element name {:?}", e.name)));
    }
    let mut seen = HashSet::new();
    for a in &e.attributes {
        if !is_ncname(&a.name) || a.namespace.as_deref() == Some("") {
            return Err(invariant(format!("invalid attribute name {:?}", a.name)));
        }
        if !seen.insert((a.namespace.as_deref(), a.name.as_str())) {
            return Err(invariant(format!("duplicate attribute {:?}", a.name)));
        }
        check_text("attribute value", &a.value)?;
    }
    let mut previous_text = false;
    for child in &e.children {
        match child {
            XmlNode::Element(c) => {
                previous_text = false;
                check_extension(c)?;
            }
            XmlNode::Text(t) => {
                if previous_text || t.trim().is_empty() {
                    return Err(invariant(
                        "extension text must be non-blank and not adjacent to other text",
                    ));
                }
                previous_text = true;
                check_text("extension text", t)?;
            }
        }
    }
    Ok(())
}

/// Checks every document invariant that [`emit`] relies on.
pub fn check_document(doc: &ApxmlDocument) -> Result<(), ApxmlError> {
    if doc.version != APXML_VERSION {
        return Err(invariant(format!("unsupported version {:?}", doc.version)));
    }
    if doc.metadata.app_name.is_empty() || doc.metadata.app_version.is_empty() {
        return Err(invariant("application name and version must be non-empty"));
    }
    check_text("application name", &doc.metadata.app_name)?;
    check_text("application version", &doc.metadata.app_version)?;
    if doc.creator.program_name.is_empty() {
        return Err(invariant("creator program name must be non-empty"));
    }
    check_text("program name", &doc.creator.program_name)?;
    check_text("program version", &doc.creator.program_version)?;
    for (name, value) in &doc.creator.execution_environment {
        if !is_ncname(name) {
            return Err(invariant(format!("invalid environment descriptor name {name:?}")));
        }
        check_text("environment descriptor", value)?;
    }
    for e in &doc.extensions {
        check_extension(e)?;
    }
    let mut names = HashSet::new();
    for phase in &doc.phases {
        if !is_phase_name(&phase.name) {
            return Err(invariant(format!("invalid phase name {:?}", phase.name)));
        }
        if !names.insert(phase.name.as_str()) {
            return Err(invariant(format!("duplicate phase {:?}", phase.name)));
        }
        if !phase.is_sorted() {
            return Err(invariant(format!("objects of phase {} are not sorted", phase.name)));
        }
        let mut ids = HashSet::new();
        for obj in &phase.objects {
            match obj {
                ProfileObject::File(f) => check_file(f)?,
                ProfileObject::Cell(c) => check_cell(c)?,
            }
            let (tag, path, sub) = match obj {
                ProfileObject::File(f) => ('f', f.filename.to_string(), f.meta_type as u8),
                ProfileObject::Cell(c) => ('c', c.cellpath.to_string(), c.name_type as u8),
            };
            if !ids.insert((tag, path.clone(), sub)) {
                return Err(invariant(format!("{path} appears twice in phase {}", phase.name)));
            }
        }
    }
    Ok(())
}

fn escape_text(out: &mut String, s: &str) {
    for c in s.chars() {
        match c {
            '&' => out.push_str("&amp;"),
            '<' => out.push_str("&lt;"),
            '>' => out.push_str("&gt;"),
            '\r' => out.push_str("&#13;"),
            c => out.push(c),
        }
    }
}

fn escape_attr(out: &mut String, s: &str) {
    for c in s.chars() {
        match c {
            '&' => out.push_str("&amp;"),
            '<' => out.push_str("&lt;"),
            '>' => out.push_str("&gt;"),
            '"' => out.push_str("&quot;"),
            '\t' => out.push_str("&#9;"),
            '\n' => out.push_str("&#10;"),
            '\r' => out.push_str("&#13;"),
            c => out.push(c),
        }
    }
}

fn leaf(out: &mut String, indent: usize, name: &str, text: &str) {
    let _ = write!(out, "{:indent$}<{name}>", "");
    escape_text(out, text);
    let _ = writeln!(out, "</{name}>");
}

fn write_file(out: &mut String, f: &FileObject) {
    let _ = writeln!(out, "    <fileobject delta:{}=\"1\">", f.delta);
    leaf(out, 6, "filename", &f.filename.to_string());
    leaf(out, 6, "meta_type", &f.meta_type.code().to_string());
    if let Some(d) = f.sha1 {
        let _ = writeln!(out, "      <hashdigest type=\"sha1\">{d}</hashdigest>");
    }
    leaf(out, 6, "alloc_name", if f.alloc_name { "1" } else { "0" });
    leaf(out, 6, "alloc_inode", if f.alloc_inode { "1" } else { "0" });
    out.push_str("    </fileobject>\n");
}

fn write_cell(out: &mut String, c: &CellObject) {
    let _ = writeln!(out, "    <cellobject delta:{}=\"1\">", c.delta);
    leaf(out, 6, "cellpath", &c.cellpath.to_string());
    leaf(out, 6, "name_type", &c.name_type.code().to_string());
    if let Some(t) = c.data_type {
        leaf(out, 6, "data_type", t.as_str());
    }
    if let Some(data) = &c.data {
        if renders_as_text(c, data) {
            leaf(out, 6, "data", std::str::from_utf8(data).unwrap_or_default());
        } else {
            let _ = writeln!(out, "      <data encoding=\"base64\">{}</data>", BASE64.encode(data));
        }
    }
    leaf(out, 6, "alloc", if c.alloc { "1" } else { "0" });
    out.push_str("    </cellobject>\n");
}

fn write_phase(out: &mut String, p: &Phase) {
    if p.objects.is_empty() {
        let _ = writeln!(out, "  <{}/>", p.name);
        return;
    }
    let _ = writeln!(out, "  <{}>", p.name);
    for obj in &p.objects {
        match obj {
            ProfileObject::File(f) => write_file(out, f),
            ProfileObject::Cell(c) => write_cell(out, c),
        }
    }
    let _ = writeln!(out, "  </{}>", p.name);
}

struct Prefixes {
    extra: Vec<String>,
}

impl Prefixes {
    fn of(&mut self, ns: &str) -> String {
        match ns {
            NS_DC => "dc".into(),
            NS_XSI => "xsi".into(),
            NS_DELTA => "delta".into(),
            NS_XML => "xml".into(),
            _ => {
                let idx = match self.extra.iter().position(|n| n == ns) {
                    Some(i) => i,
                    None => {
                        self.extra.push(ns.to_owned());
                        self.extra.len() - 1
                    }
                };
                format!("x{idx}")
            }
        }
    }

    fn collect(&mut self, e: &XmlElement) {
        self.of(&e.namespace);
        for a in &e.attributes {
            if let Some(ns) = &a.namespace {
                self.of(ns);
            }
        }
        for c in &e.children {
            if let XmlNode::Element(c) = c {
                self.collect(c);
            }
        }
    }
}

fn write_element(out: &mut String, e: &XmlElement, prefixes: &mut Prefixes, top: bool) {
    let _ = write!(out, "<{}:{}", prefixes.of(&e.namespace), e.name);
    if top {
        for (i, ns) in prefixes.extra.clone().iter().enumerate() {
            let _ = write!(out, " xmlns:x{i}=\"");
            escape_attr(out, ns);
            out.push('"');
        }
    }
    for a in &e.attributes {
        match &a.namespace {
            Some(ns) => {
                let _ = write!(out, " {}:{}=\"", prefixes.of(ns), a.name);
            }
            None => {
                let _ = write!(out, " {}=\"", a.name);
            }
        }
        escape_attr(out, &a.value);
        out.push('"');
    }
    if e.children.is_empty() {
        out.push_str("/>");
        return;
    }
    out.push('>');
    for c in &e.children {
        match c {
            XmlNode::Element(c) => write_element(out, c, prefixes, false),
            XmlNode::Text(t) => escape_text(out, t),
        }
    }
    let _ = write!(out, "</{}:{}>", prefixes.of(&e.namespace), e.name);
}

fn render(doc: &ApxmlDocument, encoding_label: &str) -> Result<String, ApxmlError> {
    check_document(doc)?;
    let mut out = String::new();
    let _ = writeln!(out, "<?xml version=\"1.0\" encoding=\"{encoding_label}\"?>");
    let _ = writeln!(
        out,
        "<apxml version=\"{}\" xmlns=\"{NS_APXML}\" xmlns:dc=\"{NS_DC}\" xmlns:xsi=\"{NS_XSI}\" xmlns:delta=\"{NS_DELTA}\">",
        doc.version
    );
    out.push_str("  <metadata>\n");
    leaf(&mut out, 4, "app_name", &doc.metadata.app_name);
    leaf(&mut out, 4, "app_version", &doc.metadata.app_version);
    out.push_str("  </metadata>\n");
    out.push_str("  <creator>\n");
    leaf(&mut out, 4, "program", &doc.creator.program_name);
    leaf(&mut out, 4, "version", &doc.creator.program_version);
    if doc.creator.execution_environment.is_empty() {
        out.push_str("    <execution_environment/>\n");
    } else {
        out.push_str("    <execution_environment>\n");
        for (name, value) in &doc.creator.execution_environment {
            leaf(&mut out, 6, name, value);
        }
        out.push_str("    </execution_environment>\n");
    }
    out.push_str("  </creator>\n");
    for e in &doc.extensions {
        let mut prefixes = Prefixes { extra: Vec::new() };
        prefixes.collect(e);
        out.push_str("  ");
        write_element(&mut out, e, &mut prefixes, true);
        out.push('\n');
    }
    for phase in &doc.phases {
        write_phase(&mut out, phase);
    }
    out.push_str("</apxml>\n");
    Ok(out)
}

/// Writes the canonical UTF-8 text of a document. Identical documents
/// always produce identical text.
pub fn emit(doc: &ApxmlDocument) -> Result<String, ApxmlError> {
    render(doc, "UTF-8")
}

pub fn emit_bytes(doc: &ApxmlDocument, encoding: Encoding) -> Result<Vec<u8>, ApxmlError> {
    match encoding {
        Encoding::Utf8 => Ok(render(doc, "UTF-8")?.into_bytes()),
        Encoding::Utf16 => {
            let text = render(doc, "UTF-16")?;
            let mut out = Vec::with_capacity(2 + text.len() * 2);
            out.extend_from_slice(&[0xFF, 0xFE]);
            for unit in text.encode_utf16() {
                out.extend_from_slice(&unit.to_le_bytes());
            }
            Ok(out)
        }
    }
}
