//! The data-collection session.
//!
//! A session takes a baseline snapshot, then repeatedly asks for a
//! life-cycle phase, waits while the user performs it, takes a second
//! snapshot and records the differences under that phase. The second
//! snapshot becomes the first snapshot of the next phase, so a session with
//! `n` phases captures `n + 1` snapshots.
//!
//! Prompts (stable, so scripts can rely on them):
//!
//! 1. [`PROMPT_BASELINE`], answered with any line
//! 2. [`PROMPT_PHASE`], answered with a phase name, or `done`, an empty
//!    line or end of input to finish
//! 3. [`PROMPT_SNAPSHOT2`] (with the phase name substituted), answered
//!    with any line once the phase has been performed; end of input
//!    abandons the phase and finishes

mod console;

use std::fs;
use std::io;
use std::path::{Path, PathBuf};

use thiserror::Error;

pub use console::{terminal, Console, LineConsole, ScriptedConsole};

use crate::apxml::{
    self, emit_bytes, ApxmlDocument, ApxmlError, CreatorRecord, Encoding, Phase, ProfileMetadata, KNOWN_PHASES,
};
use crate::differ::{diff_snapshots, DiffResult};
use crate::hashtrie::{build_blacklist, selective_hash, PathTrie, Sha1Hasher};
use crate::model::{
    capture_fs_snapshot, load_hive, merge_snapshot_parts, save_snapshot_file, CapturePolicy, CasePolicy, Snapshot,
};

pub const PROMPT_BASELINE: &str = "Press enter to collect the baseline snapshot";
pub const PROMPT_PHASE: &str = "Enter the life cycle phase (blank or 'done' to finish)";
pub const PROMPT_SNAPSHOT2: &str = "Perform the {phase} phase, then press enter to collect Snapshot2";

#[derive(Debug, Error)]
pub enum SessionError {
    #[error("invalid session configuration: {0}")]
    InvalidConfig(String),
    #[error("capture failed: {0}")]
    CaptureFailure(String),
    #[error("console failed: {0}")]
    Console(#[source] io::Error),
    #[error("could not write {path}: {source}{}", recovery_note(.recovery))]
    OutputWriteFailure {
        path: PathBuf,
        recovery: Option<PathBuf>,
        #[source]
        source: io::Error,
    },
    #[error(transparent)]
    Document(#[from] ApxmlError),
}

fn recovery_note(recovery: &Option<PathBuf>) -> String {
    match recovery {
        Some(p) => format!(" (document saved to {})", p.display()),
        None => " (no recovery copy could be written)".to_owned(),
    }
}

#[derive(Debug, Clone)]
pub struct SessionConfig {
    pub app_name: String,
    pub app_version: String,
    pub target_root: PathBuf,
    /// Serialized hive captured alongside the file system, if any.
    pub hive_source: Option<PathBuf>,
    pub output_path: PathBuf,
    pub case_policy: CasePolicy,
    /// Accepted phase names.
    pub phase_names: Vec<String>,
    /// When set, every snapshot is persisted here as `snapshot-<n>.txt`.
    pub snapshot_dir: Option<PathBuf>,
    pub encoding: Encoding,
    /// Overrides the creator record derived from the running platform.
    pub creator: Option<CreatorRecord>,
}

impl SessionConfig {
    pub fn new(
        app_name: impl Into<String>,
        app_version: impl Into<String>,
        target_root: impl Into<PathBuf>,
        output_path: impl Into<PathBuf>,
    ) -> Self {
        SessionConfig {
            app_name: app_name.into(),
            app_version: app_version.into(),
            target_root: target_root.into(),
            hive_source: None,
            output_path: output_path.into(),
            case_policy: CasePolicy::default(),
            phase_names: KNOWN_PHASES.iter().map(|s| s.to_string()).collect(),
            snapshot_dir: None,
            encoding: Encoding::Utf8,
            creator: None,
        }
    }

    pub fn check(&self) -> Result<(), SessionError> {
        let bad = |m: String| Err(SessionError::InvalidConfig(m));
        if self.app_name.trim().is_empty() || self.app_version.trim().is_empty() {
            return bad("application name and version must not be empty".into());
        }
        if let Some(name) = self.phase_names.iter().find(|n| !apxml::is_phase_name(n)) {
            return bad(format!("{name:?} is not a valid phase name"));
        }
        let parent = match self.output_path.parent() {
            Some(p) if !p.as_os_str().is_empty() => p,
            _ => Path::new("."),
        };
        if !parent.is_dir() {
            return bad(format!("output directory {} does not exist", parent.display()));
        }
        if self.output_path.is_dir() {
            return bad(format!("output path {} is a directory", self.output_path.display()));
        }
        Ok(())
    }
}

/// Produces snapshots of the system under study.
pub trait SnapshotSource {
    /// Takes a snapshot, returning it with any per-entry warnings.
    fn capture(&mut self, id: &str) -> Result<(Snapshot, Vec<String>), SessionError>;

    /// Selectively hashes `s`, skipping blacklisted files.
    fn hash(&self, s: &Snapshot, blacklist: &PathTrie) -> (Snapshot, Vec<String>);
}

/// Captures a directory tree plus an optional serialized hive.
pub struct FsSource {
    pub root: PathBuf,
    pub hive: Option<PathBuf>,
    pub policy: CapturePolicy,
}

impl FsSource {
    pub fn from_config(config: &SessionConfig) -> Self {
        FsSource {
            root: config.target_root.clone(),
            hive: config.hive_source.clone(),
            policy: CapturePolicy {
                case_policy: config.case_policy,
                ..CapturePolicy::default()
            },
        }
    }
}

impl SnapshotSource for FsSource {
    fn capture(&mut self, id: &str) -> Result<(Snapshot, Vec<String>), SessionError> {
        let fail = |e: String| SessionError::CaptureFailure(e);
        let captured = capture_fs_snapshot(&self.root, &self.policy).map_err(|e| fail(e.to_string()))?;
        let mut snapshot = captured.snapshot;
        snapshot.id = id.to_owned();
        if let Some(hive) = &self.hive {
            let text = fs::read_to_string(hive).map_err(|e| fail(format!("hive {}: {e}", hive.display())))?;
            let reg =
                load_hive(&text, self.policy.case_policy).map_err(|e| fail(format!("hive {}: {e}", hive.display())))?;
            snapshot = merge_snapshot_parts(snapshot, reg).map_err(|e| fail(e.to_string()))?;
        }
        Ok((snapshot, captured.warnings.iter().map(ToString::to_string).collect()))
    }

    fn hash(&self, s: &Snapshot, blacklist: &PathTrie) -> (Snapshot, Vec<String>) {
        let out = selective_hash(s, blacklist, &self.root, &Sha1Hasher);
        (out.snapshot, out.warnings.iter().map(ToString::to_string).collect())
    }
}

/// State carried between phases.
#[derive(Debug, Clone)]
pub struct SessionState {
    pub baseline_blacklist: PathTrie,
    pub current_snapshot1: Snapshot,
    pub completed_phases: Vec<(String, DiffResult)>,
}

/// Makes `snapshot2` the first snapshot of the next phase, discarding the
/// previous one.
pub fn rotate_snapshots(state: SessionState, snapshot2: Snapshot) -> SessionState {
    SessionState {
        current_snapshot1: snapshot2,
        ..state
    }
}

#[derive(Debug)]
pub struct SessionOutcome {
    pub document: ApxmlDocument,
    pub output_path: PathBuf,
    /// Number of snapshots taken.
    pub captures: usize,
    /// Snapshot files written, in capture order.
    pub snapshot_files: Vec<PathBuf>,
    pub completed_phases: Vec<(String, DiffResult)>,
    pub warnings: Vec<String>,
}

struct Run<'a> {
    config: &'a SessionConfig,
    console: &'a mut dyn Console,
    source: &'a mut dyn SnapshotSource,
    captures: usize,
    snapshot_files: Vec<PathBuf>,
    warnings: Vec<String>,
}

impl Run<'_> {
    fn ask(&mut self, prompt: &str) -> Result<Option<String>, SessionError> {
        self.console.prompt(prompt).map_err(SessionError::Console)
    }

    fn warn(&mut self, lines: Vec<String>) {
        for w in lines {
            self.console.info(&format!("warning: {w}"));
            self.warnings.push(w);
        }
    }

    /// Captures, hashes and (optionally) persists one snapshot.
    fn snapshot(&mut self, blacklist: Option<&PathTrie>) -> Result<Snapshot, SessionError> {
        let id = format!("S{}", self.captures);
        self.captures += 1;
        let (mut s, warnings) = self.source.capture(&id)?;
        self.warn(warnings);
        if let Some(blacklist) = blacklist {
            let (hashed, warnings) = self.source.hash(&s, blacklist);
            s = hashed;
            self.warn(warnings);
        }
        if let Some(dir) = &self.config.snapshot_dir {
            let path = dir.join(format!("snapshot-{}.txt", self.captures - 1));
            save_snapshot_file(&s, &path).map_err(|e| SessionError::OutputWriteFailure {
                path: path.clone(),
                recovery: None,
                source: io::Error::other(e.to_string()),
            })?;
            self.snapshot_files.push(path);
        }
        self.console.info(&format!(
            "{id}: {} files, {} keys, {} values",
            s.file_count(),
            s.key_count(),
            s.value_count()
        ));
        Ok(s)
    }

    fn next_phase_name(&mut self, done: &[(String, DiffResult)]) -> Result<Option<String>, SessionError> {
        loop {
            let Some(answer) = self.ask(PROMPT_PHASE)? else {
                return Ok(None);
            };
            let name = answer.trim();
            if name.is_empty() || name == "done" {
                return Ok(None);
            }
            if !self.config.phase_names.iter().any(|p| p == name) {
                self.console.info(&format!(
                    "unknown phase {name:?}; expected one of: {}",
                    self.config.phase_names.join(", ")
                ));
            } else if done.iter().any(|(p, _)| p == name) {
                self.console.info(&format!("phase {name} has already been recorded"));
            } else {
                return Ok(Some(name.to_owned()));
            }
        }
    }
}

/// Runs a collection session and writes the resulting document to
/// `config.output_path`.
pub fn run_session(config: &SessionConfig, console: &mut dyn Console) -> Result<SessionOutcome, SessionError> {
    let mut source = FsSource::from_config(config);
    run_session_with(config, console, &mut source)
}

/// [`run_session`] with an explicit snapshot source.
pub fn run_session_with(
    config: &SessionConfig,
    console: &mut dyn Console,
    source: &mut dyn SnapshotSource,
) -> Result<SessionOutcome, SessionError> {
    config.check()?;
    let creator = config.creator.clone().unwrap_or_else(CreatorRecord::current);
    let mut run = Run {
        config,
        console,
        source,
        captures: 0,
        snapshot_files: Vec::new(),
        warnings: Vec::new(),
    };

    let mut state = match run.ask(PROMPT_BASELINE)? {
        None => None,
        Some(_) => {
            let s0 = run.snapshot(None)?;
            Some(SessionState {
                baseline_blacklist: build_blacklist(&s0),
                current_snapshot1: s0,
                completed_phases: Vec::new(),
            })
        }
    };

    while let Some(st) = state.as_mut() {
        let Some(phase) = run.next_phase_name(&st.completed_phases)? else {
            break;
        };
        let prompt = PROMPT_SNAPSHOT2.replace("{phase}", &phase);
        if run.ask(&prompt)?.is_none() {
            run.console.info(&format!("input ended; phase {phase} abandoned"));
            break;
        }
        let s2 = match run.snapshot(Some(&st.baseline_blacklist)) {
            Ok(s) => s,
            Err(e @ SessionError::CaptureFailure(_)) => {
                run.console.info(&format!("{e}; phase {phase} aborted"));
                run.warnings.push(e.to_string());
                continue;
            }
            Err(e) => return Err(e),
        };
        let diff = diff_snapshots(&st.current_snapshot1, &s2);
        run.warn(diff.warnings.clone());
        run.console.info(&format!("{phase}: {} differences", diff.len()));
        let mut next = rotate_snapshots(state.take().expect("loop guard"), s2);
        next.completed_phases.push((phase, diff));
        state = Some(next);
    }

    let completed = state.map(|s| s.completed_phases).unwrap_or_default();
    let mut document = ApxmlDocument::new(
        ProfileMetadata {
            app_name: config.app_name.clone(),
            app_version: config.app_version.clone(),
        },
        creator,
    );
    for (name, diff) in &completed {
        document.push_phase(Phase::from_diff(name.clone(), diff))?;
    }
    let bytes = emit_bytes(&document, config.encoding)?;
    let report = apxml::validate_bytes(&bytes);
    if !report.is_ok() {
        return Err(ApxmlError::InvariantViolation(format!("emitted document failed validation: {report}")).into());
    }
    write_output(&config.output_path, &bytes)?;
    run.console
        .info(&format!("profile written to {}", config.output_path.display()));

    Ok(SessionOutcome {
        document,
        output_path: config.output_path.clone(),
        captures: run.captures,
        snapshot_files: run.snapshot_files,
        completed_phases: completed,
        warnings: run.warnings,
    })
}

/// Where a document goes when the output path cannot be written.
pub fn recovery_path(output: &Path) -> PathBuf {
    let mut name = output.file_name().unwrap_or_default().to_os_string();
    name.push(".recovery");
    output.with_file_name(name)
}

fn write_output(path: &Path, bytes: &[u8]) -> Result<(), SessionError> {
    let Err(source) = fs::write(path, bytes) else {
        return Ok(());
    };
    let file_name = recovery_path(path).file_name().map(PathBuf::from).unwrap_or_default();
    let candidates = [recovery_path(path), std::env::temp_dir().join(file_name)];
    let recovery = candidates.into_iter().find(|p| fs::write(p, bytes).is_ok());
    Err(SessionError::OutputWriteFailure {
        path: path.to_owned(),
        recovery,
        source,
    })
}

#[cfg(test)]
mod tests;
