use std::fs;
use std::path::{Path, PathBuf};
use std::sync::{Arc, Mutex};

use tempfile::TempDir;

use super::*;
use crate::apxml::{parse_bytes, FileObject, MetaType, ParseOptions, ProfileObject};
use crate::differ::{diff_snapshots, DeltaState};
use crate::model::{CanonicalPath, PathKind};

fn creator() -> CreatorRecord {
    CreatorRecord {
        program_name: "appdiff".into(),
        program_version: "test".into(),
        execution_environment: vec![],
    }
}

struct Fixture {
    _dir: TempDir,
    root: PathBuf,
    out: PathBuf,
}

fn fixture() -> Fixture {
    let dir = TempDir::new().unwrap();
    let root = dir.path().join("root");
    fs::create_dir(&root).unwrap();
    fs::write(root.join("preexisting.txt"), b"baseline").unwrap();
    let out = dir.path().join("profile.apxml");
    Fixture { root, out, _dir: dir }
}

fn config(f: &Fixture) -> SessionConfig {
    let mut c = SessionConfig::new("App", "1.0", &f.root, &f.out);
    c.creator = Some(creator());
    c
}

/// Wraps the real source, keeping every snapshot it returns and optionally
/// failing one capture.
struct Probe {
    inner: FsSource,
    taken: Arc<Mutex<Vec<Snapshot>>>,
    hashed: Arc<Mutex<Vec<Snapshot>>>,
    fail_on: Option<usize>,
    calls: usize,
}

impl Probe {
    fn new(config: &SessionConfig) -> Self {
        Probe {
            inner: FsSource::from_config(config),
            taken: Default::default(),
            hashed: Default::default(),
            fail_on: None,
            calls: 0,
        }
    }
}

impl SnapshotSource for Probe {
    fn capture(&mut self, id: &str) -> Result<(Snapshot, Vec<String>), SessionError> {
        self.calls += 1;
        if self.fail_on == Some(self.calls) {
            return Err(SessionError::CaptureFailure("injected".into()));
        }
        let out = self.inner.capture(id)?;
        self.taken.lock().unwrap().push(out.0.clone());
        Ok(out)
    }

    fn hash(&self, s: &Snapshot, blacklist: &PathTrie) -> (Snapshot, Vec<String>) {
        let out = self.inner.hash(s, blacklist);
        self.hashed.lock().unwrap().push(out.0.clone());
        out
    }
}

fn write(path: PathBuf, bytes: &'static [u8]) -> impl FnOnce() + Send {
    move || fs::write(path, bytes).unwrap()
}

#[test]
fn zero_phases_gives_bare_document() {
    let f = fixture();
    let mut console = ScriptedConsole::new().reply("").reply("");
    let out = run_session(&config(&f), &mut console).unwrap();
    assert!(out.document.phases.is_empty());
    assert_eq!(out.captures, 1);
    let bytes = fs::read(&f.out).unwrap();
    assert!(crate::apxml::validate_bytes(&bytes).is_ok());
    let doc = parse_bytes(&bytes, ParseOptions::default()).unwrap();
    assert_eq!(doc.metadata.app_name, "App");
}

#[test]
fn one_install_phase_with_one_new_file() {
    let f = fixture();
    let mut console = ScriptedConsole::new()
        .reply("")
        .reply("install")
        .act(write(f.root.join("app.exe"), b"MZ payload"))
        .reply("")
        .reply("done");
    let out = run_session(&config(&f), &mut console).unwrap();

    let expected = Phase::new(
        "install",
        vec![ProfileObject::File(FileObject {
            filename: CanonicalPath::parse(PathKind::Filesystem, "app.exe").unwrap(),
            meta_type: MetaType::File,
            sha1: Some(
                sha1_smol::Sha1::from(b"MZ payload")
                    .digest()
                    .to_string()
                    .parse()
                    .unwrap(),
            ),
            alloc_name: true,
            alloc_inode: true,
            delta: DeltaState::New,
        })],
    );
    assert_eq!(out.document.phases, vec![expected]);
    assert_eq!(out.captures, 2);
    let on_disk = parse_bytes(&fs::read(&f.out).unwrap(), ParseOptions::default()).unwrap();
    assert_eq!(on_disk, out.document);
}

#[test]
fn rotation_equivalence_and_capture_count() {
    let f = fixture();
    let cfg = config(&f);
    let mut probe = Probe::new(&cfg);
    let hashed = probe.hashed.clone();
    let taken = probe.taken.clone();
    let root = f.root.clone();
    let mut console = ScriptedConsole::new()
        .reply("")
        .reply("install")
        .act(write(f.root.join("app.exe"), b"v1"))
        .act(write(f.root.join("app.cfg"), b"cfg"))
        .reply("")
        .reply("execute")
        .act(write(f.root.join("app.cfg"), b"cfg, longer now"))
        .reply("")
        .reply("uninstall")
        .act(move || {
            fs::remove_file(root.join("app.exe")).unwrap();
            fs::remove_file(root.join("app.cfg")).unwrap();
        })
        .reply("");
    let out = run_session_with(&cfg, &mut console, &mut probe).unwrap();
    assert_eq!(out.captures, 4);
    assert_eq!(probe.calls, 4);
    assert_eq!(taken.lock().unwrap().len(), 4);

    // Offline: S0 as captured, then S1..S3 after selective hashing. Hashing
    // only fills in digests.
    let taken = taken.lock().unwrap().clone();
    let hashed = hashed.lock().unwrap().clone();
    assert_eq!(hashed.len(), 3);
    for (raw, h) in taken[1..].iter().zip(&hashed) {
        let strip = |s: &Snapshot| {
            s.files()
                .map(|e| (e.path.clone(), e.size, e.write_time))
                .collect::<Vec<_>>()
        };
        assert_eq!(strip(raw), strip(h));
    }
    let mut states = vec![taken[0].clone()];
    states.extend(hashed);
    let names = ["install", "execute", "uninstall"];
    for (i, name) in names.iter().enumerate() {
        let offline = Phase::from_diff(*name, &diff_snapshots(&states[i], &states[i + 1]));
        assert_eq!(out.document.phases[i], offline, "phase {name}");
    }
    let execute = &out.document.phases[1];
    assert_eq!(execute.objects.len(), 1);
    assert_eq!(execute.objects[0].delta(), DeltaState::Modified);
    assert!(out.document.phases[2]
        .objects
        .iter()
        .all(|o| o.delta() == DeltaState::Deleted));
}

#[test]
fn rotated_snapshot_rediffs_empty_and_keeps_digests() {
    let f = fixture();
    let mut cfg = config(&f);
    let snaps = f._dir.path().join("snaps");
    fs::create_dir(&snaps).unwrap();
    cfg.snapshot_dir = Some(snaps);
    let mut console = ScriptedConsole::new()
        .reply("")
        .reply("install")
        .act(write(f.root.join("new.bin"), b"abc"))
        .reply("");
    let out = run_session(&cfg, &mut console).unwrap();
    assert_eq!(out.snapshot_files.len(), 2);
    let s1 = crate::model::load_snapshot_file(&out.snapshot_files[1]).unwrap();
    let entry = s1.files().find(|e| e.path.file_name() == "new.bin").unwrap();
    assert_eq!(
        entry.sha1.unwrap().to_string(),
        "a9993e364706816aba3e25717850c26c9cd0d89d"
    );
    // The baseline file is blacklisted and never hashed.
    let pre = s1.files().find(|e| e.path.file_name() == "preexisting.txt").unwrap();
    assert_eq!(pre.sha1, None);

    let state = SessionState {
        baseline_blacklist: PathTrie::new(CasePolicy::Insensitive),
        current_snapshot1: Snapshot::empty(CasePolicy::Insensitive),
        completed_phases: vec![],
    };
    let rotated = rotate_snapshots(state, s1.clone());
    assert_eq!(rotated.current_snapshot1, s1);
    assert!(diff_snapshots(&rotated.current_snapshot1, &s1).is_empty());
}

#[test]
fn quiescent_target_gives_empty_phases() {
    let f = fixture();
    let mut console = ScriptedConsole::new()
        .reply("")
        .reply("install")
        .reply("")
        .reply("execute")
        .reply("");
    let out = run_session(&config(&f), &mut console).unwrap();
    assert_eq!(out.document.phases.len(), 2);
    assert!(out.document.phases.iter().all(|p| p.objects.is_empty()));
}

#[test]
fn bad_and_repeated_phase_names_reprompt() {
    let f = fixture();
    let mut console = ScriptedConsole::new()
        .reply("")
        .reply("Install")
        .reply("install")
        .reply("")
        .reply("install")
        .reply("reboot")
        .reply("");
    let out = run_session(&config(&f), &mut console).unwrap();
    let names: Vec<_> = out.document.phases.iter().map(|p| p.name.as_str()).collect();
    assert_eq!(names, ["install", "reboot"]);
    assert!(console
        .transcript
        .iter()
        .any(|l| l.starts_with("unknown phase \"Install\"")));
    assert!(console.transcript.iter().any(|l| l.contains("already been recorded")));
}

#[test]
fn capture_failure_aborts_only_that_phase() {
    let f = fixture();
    let cfg = config(&f);
    let mut probe = Probe::new(&cfg);
    probe.fail_on = Some(3);
    let mut console = ScriptedConsole::new()
        .reply("")
        .reply("install")
        .act(write(f.root.join("a"), b"1"))
        .reply("")
        .reply("execute")
        .reply("")
        .reply("uninstall")
        .act(write(f.root.join("b"), b"2"))
        .reply("");
    let out = run_session_with(&cfg, &mut console, &mut probe).unwrap();
    let names: Vec<_> = out.document.phases.iter().map(|p| p.name.as_str()).collect();
    assert_eq!(names, ["install", "uninstall"]);
    // The uninstall phase diffs against the install snapshot.
    let uninstall = &out.document.phases[1];
    assert_eq!(uninstall.objects.len(), 1);
    assert_eq!(uninstall.objects[0].path().to_string(), "b");
    assert!(out.warnings.iter().any(|w| w.contains("injected")));
}

#[test]
fn baseline_capture_failure_is_an_error() {
    let f = fixture();
    let mut cfg = config(&f);
    cfg.target_root = f.root.join("missing");
    let mut console = ScriptedConsole::new().reply("");
    assert!(matches!(
        run_session(&cfg, &mut console),
        Err(SessionError::CaptureFailure(_))
    ));
}

#[test]
fn write_failure_leaves_recovery_copy() {
    let dir = TempDir::new().unwrap();
    let root = dir.path().join("root");
    fs::create_dir(&root).unwrap();
    let outdir = dir.path().join("out");
    fs::create_dir(&outdir).unwrap();
    let unique = format!("profile-{}.apxml", std::process::id());
    let mut cfg = SessionConfig::new("App", "1.0", &root, outdir.join(&unique));
    cfg.creator = Some(creator());
    let gone = outdir.clone();
    let mut console = ScriptedConsole::new()
        .reply("")
        .reply("install")
        .act(write(root.join("x"), b"x"))
        .act(move || fs::remove_dir_all(gone).unwrap())
        .reply("");
    let err = run_session(&cfg, &mut console).unwrap_err();
    let SessionError::OutputWriteFailure {
        recovery: Some(recovery),
        ..
    } = err
    else {
        panic!("expected a recovery copy, got {err:?}");
    };
    let doc = parse_bytes(&fs::read(&recovery).unwrap(), ParseOptions::default()).unwrap();
    fs::remove_file(&recovery).unwrap();
    assert_eq!(doc.phases.len(), 1);
    assert_eq!(doc.phases[0].objects.len(), 1);
}

#[test]
fn recovery_path_appends_suffix() {
    assert_eq!(
        recovery_path(Path::new("/tmp/p.apxml")),
        Path::new("/tmp/p.apxml.recovery")
    );
}

#[test]
fn invalid_config_rejected() {
    let f = fixture();
    let mut c = config(&f);
    c.app_name = " ".into();
    assert!(matches!(c.check(), Err(SessionError::InvalidConfig(_))));
    let mut c = config(&f);
    c.phase_names.push("Bad".into());
    assert!(c.check().is_err());
    let mut c = config(&f);
    c.output_path = f.root.join("nope/out.apxml");
    assert!(c.check().is_err());
}

#[test]
fn scripted_sessions_are_deterministic() {
    let run = || {
        let f = fixture();
        let mut cfg = config(&f);
        cfg.encoding = Encoding::Utf16;
        let mut console = ScriptedConsole::new()
            .reply("")
            .reply("install")
            .act(write(f.root.join("app.exe"), b"same"))
            .reply("");
        run_session(&cfg, &mut console).unwrap();
        fs::read(&f.out).unwrap()
    };
    let a = run();
    assert_eq!(&a[..2], &[0xFF, 0xFE]);
    assert_eq!(a, run());
}

#[test]
fn hive_changes_are_recorded() {
    let f = fixture();
    let hive = f._dir.path().join("system.hive");
    fs::write(&hive, "key|HKLM/Software|2020-01-01T00:00:00Z\n").unwrap();
    let mut cfg = config(&f);
    cfg.hive_source = Some(hive.clone());
    let mut console = ScriptedConsole::new()
        .reply("")
        .reply("install")
        .act(write(
            hive,
            b"key|HKLM/Software|2020-01-01T00:00:00Z\nkey|HKLM/Software/App|2020-01-02T00:00:00Z\nvalue|HKLM/Software/App/Path|REG_SZ|QzpcQXBw\n",
        ))
        .reply("");
    let out = run_session(&cfg, &mut console).unwrap();
    let cells: Vec<_> = out.document.phases[0].cell_objects().collect();
    assert_eq!(cells.len(), 2);
    assert_eq!(cells[1].data.as_deref(), Some(&br"C:\App"[..]));
}
