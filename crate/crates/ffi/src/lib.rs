//! C ABI for appdiff.
//!
//! Every object crosses the boundary as an opaque handle created by an
//! `appdiff_*` constructor and released with the matching `*_free`
//! function. Functions return an [`AppdiffStatus`]; on failure a message
//! for the calling thread is available from [`appdiff_last_error`].
//! Strings returned through `char **` out-parameters are owned by the
//! caller and must be released with [`appdiff_string_free`].
//!
//! All handles are immutable after construction except an
//! [`AppdiffProfile`] being built with [`appdiff_profile_add_phase`], so
//! shared read-only use from several threads is safe.

use std::cell::RefCell;
use std::ffi::{c_char, CStr, CString};
use std::fs;
use std::panic::{catch_unwind, AssertUnwindSafe};
use std::path::Path;
use std::ptr;

use appdiff::apxml::{self, ApxmlDocument, CreatorRecord, Encoding, ParseOptions, Phase, ProfileMetadata};
use appdiff::differ::{diff_snapshots, DeltaState, DiffResult};
use appdiff::hashtrie::{selective_hash, PathTrie, Sha1Hasher};
use appdiff::matcher::{build_target_index, match_profile, FileFallback, MatchPolicy, TargetIndex};
use appdiff::model::{
    capture_fs_snapshot, load_hive, load_snapshot_file, merge_snapshot_parts, save_snapshot_file, CapturePolicy,
    CasePolicy, Snapshot,
};

/// Result codes.
#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum AppdiffStatus {
    Ok = 0,
    /// A required pointer argument was null.
    NullArgument = 1,
    /// A string argument was not valid UTF-8.
    InvalidUtf8 = 2,
    InvalidArgument = 3,
    Io = 4,
    Capture = 5,
    /// Text is not well-formed XML or not a snapshot file.
    Parse = 6,
    /// A profile violates the APXML schema.
    Schema = 7,
    /// An internal error was caught at the boundary.
    Panic = 8,
}

#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum AppdiffDeltaState {
    New = 0,
    Changed = 1,
    Modified = 2,
    Deleted = 3,
}

#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum AppdiffFileFallback {
    None = 0,
    HashOnly = 1,
    PathOnly = 2,
}

#[repr(C)]
#[derive(Debug, Clone, Copy)]
pub struct AppdiffMatchPolicy {
    pub file_fallback: AppdiffFileFallback,
    pub require_value_data: bool,
    pub absence_matching: bool,
}

pub struct AppdiffSnapshot(Snapshot);
pub struct AppdiffDiff(DiffResult);
pub struct AppdiffProfile(ApxmlDocument);
pub struct AppdiffTarget(TargetIndex);

thread_local! {
    static LAST_ERROR: RefCell<Option<CString>> = const { RefCell::new(None) };
}

type Failure = (AppdiffStatus, String);

fn set_error(message: &str) {
    let c = CString::new(message.replace('\0', "\\0")).unwrap_or_default();
    LAST_ERROR.with(|e| *e.borrow_mut() = Some(c));
}

fn guard(f: impl FnOnce() -> Result<(), Failure>) -> AppdiffStatus {
    match catch_unwind(AssertUnwindSafe(f)) {
        Ok(Ok(())) => {
            LAST_ERROR.with(|e| *e.borrow_mut() = None);
            AppdiffStatus::Ok
        }
        Ok(Err((status, message))) => {
            set_error(&message);
            status
        }
        Err(_) => {
            set_error("internal error");
            AppdiffStatus::Panic
        }
    }
}

fn err(status: AppdiffStatus, message: impl std::fmt::Display) -> Failure {
    (status, message.to_string())
}

unsafe fn text<'a>(p: *const c_char, what: &str) -> Result<&'a str, Failure> {
    if p.is_null() {
        return Err(err(AppdiffStatus::NullArgument, format!("{what} is null")));
    }
    CStr::from_ptr(p)
        .to_str()
        .map_err(|_| err(AppdiffStatus::InvalidUtf8, format!("{what} is not UTF-8")))
}

unsafe fn opt_text<'a>(p: *const c_char, what: &str) -> Result<Option<&'a str>, Failure> {
    if p.is_null() {
        Ok(None)
    } else {
        text(p, what).map(Some)
    }
}

unsafe fn handle<'a, T>(p: *const T, what: &str) -> Result<&'a T, Failure> {
    p.as_ref()
        .ok_or_else(|| err(AppdiffStatus::NullArgument, format!("{what} is null")))
}

unsafe fn put<T>(out: *mut *mut T, value: T) -> Result<(), Failure> {
    if out.is_null() {
        return Err(err(AppdiffStatus::NullArgument, "output pointer is null"));
    }
    *out = Box::into_raw(Box::new(value));
    Ok(())
}

unsafe fn put_string(out: *mut *mut c_char, s: String) -> Result<(), Failure> {
    if out.is_null() {
        return Err(err(AppdiffStatus::NullArgument, "output pointer is null"));
    }
    let c = CString::new(s).map_err(|_| err(AppdiffStatus::InvalidArgument, "result contains a NUL byte"))?;
    *out = c.into_raw();
    Ok(())
}

unsafe fn check_out<T>(out: *mut *mut T) -> Result<(), Failure> {
    if out.is_null() {
        return Err(err(AppdiffStatus::NullArgument, "output pointer is null"));
    }
    *out = ptr::null_mut();
    Ok(())
}

fn case_policy(sensitive: bool) -> CasePolicy {
    if sensitive {
        CasePolicy::Sensitive
    } else {
        CasePolicy::Insensitive
    }
}

/// Message for the last failed call on this thread, or null. The pointer
/// stays valid until the next `appdiff_*` call on the same thread.
#[no_mangle]
pub extern "C" fn appdiff_last_error() -> *const c_char {
    LAST_ERROR.with(|e| e.borrow().as_ref().map_or(ptr::null(), |c| c.as_ptr()))
}

/// Library version as a static string.
#[no_mangle]
pub extern "C" fn appdiff_version() -> *const c_char {
    concat!(env!("CARGO_PKG_VERSION"), "\0").as_ptr().cast()
}

/// Releases a string returned by this library. Null is ignored.
///
/// # Safety
/// `s` must come from an `appdiff_*` out-parameter and not be freed twice.
#[no_mangle]
pub unsafe extern "C" fn appdiff_string_free(s: *mut c_char) {
    if !s.is_null() {
        drop(CString::from_raw(s));
    }
}

/// Captures `root` (and the serialized hive at `hive`, which may be null).
/// With `hash` set every file is hashed.
///
/// # Safety
/// String arguments must be null or NUL-terminated; `out` must be writable.
#[no_mangle]
pub unsafe extern "C" fn appdiff_snapshot_capture(
    root: *const c_char,
    hive: *const c_char,
    case_sensitive: bool,
    hash: bool,
    out: *mut *mut AppdiffSnapshot,
) -> AppdiffStatus {
    guard(|| {
        check_out(out)?;
        let root = Path::new(text(root, "root")?);
        let hive = opt_text(hive, "hive")?;
        let policy = case_policy(case_sensitive);
        let captured = capture_fs_snapshot(
            root,
            &CapturePolicy {
                case_policy: policy,
                ..CapturePolicy::default()
            },
        )
        .map_err(|e| err(AppdiffStatus::Capture, e))?;
        let mut s = captured.snapshot;
        if hash {
            s = selective_hash(&s, &PathTrie::new(policy), root, &Sha1Hasher).snapshot;
        }
        if let Some(hive) = hive {
            let doc = fs::read_to_string(hive).map_err(|e| err(AppdiffStatus::Io, format!("{hive}: {e}")))?;
            let reg = load_hive(&doc, policy).map_err(|e| err(AppdiffStatus::Parse, format!("{hive}: {e}")))?;
            s = merge_snapshot_parts(s, reg).map_err(|e| err(AppdiffStatus::Capture, e))?;
        }
        put(out, AppdiffSnapshot(s))
    })
}

/// # Safety
/// `path` must be NUL-terminated; `out` must be writable.
#[no_mangle]
pub unsafe extern "C" fn appdiff_snapshot_load(path: *const c_char, out: *mut *mut AppdiffSnapshot) -> AppdiffStatus {
    guard(|| {
        check_out(out)?;
        let path = text(path, "path")?;
        let s = load_snapshot_file(Path::new(path)).map_err(|e| match e {
            appdiff::model::PersistError::Io(e) => err(AppdiffStatus::Io, format!("{path}: {e}")),
            other => err(AppdiffStatus::Parse, format!("{path}: {other}")),
        })?;
        put(out, AppdiffSnapshot(s))
    })
}

/// # Safety
/// `snapshot` must be a live handle; `path` must be NUL-terminated.
#[no_mangle]
pub unsafe extern "C" fn appdiff_snapshot_save(snapshot: *const AppdiffSnapshot, path: *const c_char) -> AppdiffStatus {
    guard(|| {
        let s = handle(snapshot, "snapshot")?;
        let path = text(path, "path")?;
        save_snapshot_file(&s.0, Path::new(path)).map_err(|e| err(AppdiffStatus::Io, format!("{path}: {e}")))
    })
}

/// Entry counts; any output pointer may be null.
///
/// # Safety
/// `snapshot` must be a live handle; non-null outputs must be writable.
#[no_mangle]
pub unsafe extern "C" fn appdiff_snapshot_counts(
    snapshot: *const AppdiffSnapshot,
    files: *mut usize,
    keys: *mut usize,
    values: *mut usize,
) -> AppdiffStatus {
    guard(|| {
        let s = &handle(snapshot, "snapshot")?.0;
        for (p, n) in [
            (files, s.file_count()),
            (keys, s.key_count()),
            (values, s.value_count()),
        ] {
            if !p.is_null() {
                *p = n;
            }
        }
        Ok(())
    })
}

/// # Safety
/// `snapshot` must be null or a handle not yet freed.
#[no_mangle]
pub unsafe extern "C" fn appdiff_snapshot_free(snapshot: *mut AppdiffSnapshot) {
    if !snapshot.is_null() {
        drop(Box::from_raw(snapshot));
    }
}

/// Compares two snapshots.
///
/// # Safety
/// Both snapshots must be live handles; `out` must be writable.
#[no_mangle]
pub unsafe extern "C" fn appdiff_diff(
    before: *const AppdiffSnapshot,
    after: *const AppdiffSnapshot,
    out: *mut *mut AppdiffDiff,
) -> AppdiffStatus {
    guard(|| {
        check_out(out)?;
        let a = handle(before, "before")?;
        let b = handle(after, "after")?;
        put(out, AppdiffDiff(diff_snapshots(&a.0, &b.0)))
    })
}

/// Number of deltas in a given state, or 0 for a null handle.
///
/// # Safety
/// `diff` must be null or a live handle.
#[no_mangle]
pub unsafe extern "C" fn appdiff_diff_count(diff: *const AppdiffDiff, state: AppdiffDeltaState) -> usize {
    let Some(d) = diff.as_ref() else { return 0 };
    d.0.count(match state {
        AppdiffDeltaState::New => DeltaState::New,
        AppdiffDeltaState::Changed => DeltaState::Changed,
        AppdiffDeltaState::Modified => DeltaState::Modified,
        AppdiffDeltaState::Deleted => DeltaState::Deleted,
    })
}

/// Total number of deltas, or 0 for a null handle.
///
/// # Safety
/// `diff` must be null or a live handle.
#[no_mangle]
pub unsafe extern "C" fn appdiff_diff_len(diff: *const AppdiffDiff) -> usize {
    diff.as_ref().map_or(0, |d| d.0.len())
}

/// One line per delta: `state<TAB>kind<TAB>path`.
///
/// # Safety
/// `diff` must be a live handle; `out` must be writable.
#[no_mangle]
pub unsafe extern "C" fn appdiff_diff_render(diff: *const AppdiffDiff, out: *mut *mut c_char) -> AppdiffStatus {
    guard(|| {
        check_out(out)?;
        put_string(out, handle(diff, "diff")?.0.render_text())
    })
}

/// # Safety
/// `diff` must be null or a handle not yet freed.
#[no_mangle]
pub unsafe extern "C" fn appdiff_diff_free(diff: *mut AppdiffDiff) {
    if !diff.is_null() {
        drop(Box::from_raw(diff));
    }
}

/// Starts an empty profile whose creator describes the running platform.
///
/// # Safety
/// Strings must be NUL-terminated; `out` must be writable.
#[no_mangle]
pub unsafe extern "C" fn appdiff_profile_new(
    app_name: *const c_char,
    app_version: *const c_char,
    out: *mut *mut AppdiffProfile,
) -> AppdiffStatus {
    guard(|| {
        check_out(out)?;
        let metadata = ProfileMetadata {
            app_name: text(app_name, "app_name")?.to_owned(),
            app_version: text(app_version, "app_version")?.to_owned(),
        };
        if metadata.app_name.is_empty() || metadata.app_version.is_empty() {
            return Err(err(
                AppdiffStatus::InvalidArgument,
                "name and version must not be empty",
            ));
        }
        put(
            out,
            AppdiffProfile(ApxmlDocument::new(metadata, CreatorRecord::current())),
        )
    })
}

/// Appends the objects of `diff` under a new phase.
///
/// # Safety
/// `profile` and `diff` must be live handles; `phase` must be
/// NUL-terminated. The profile must not be used concurrently.
#[no_mangle]
pub unsafe extern "C" fn appdiff_profile_add_phase(
    profile: *mut AppdiffProfile,
    phase: *const c_char,
    diff: *const AppdiffDiff,
) -> AppdiffStatus {
    guard(|| {
        let p = profile
            .as_mut()
            .ok_or_else(|| err(AppdiffStatus::NullArgument, "profile is null"))?;
        let name = text(phase, "phase")?;
        let d = handle(diff, "diff")?;
        if !apxml::is_phase_name(name) {
            return Err(err(
                AppdiffStatus::InvalidArgument,
                format!("invalid phase name {name:?}"),
            ));
        }
        p.0.push_phase(Phase::from_diff(name, &d.0))
            .map_err(|e| err(AppdiffStatus::InvalidArgument, e))
    })
}

/// Emits canonical UTF-8 APXML text.
///
/// # Safety
/// `profile` must be a live handle; `out` must be writable.
#[no_mangle]
pub unsafe extern "C" fn appdiff_profile_emit(profile: *const AppdiffProfile, out: *mut *mut c_char) -> AppdiffStatus {
    guard(|| {
        check_out(out)?;
        let text = apxml::emit(&handle(profile, "profile")?.0).map_err(|e| err(AppdiffStatus::Schema, e))?;
        put_string(out, text)
    })
}

/// Writes the profile to `path`, as UTF-16 with a byte order mark when
/// `utf16` is set.
///
/// # Safety
/// `profile` must be a live handle; `path` must be NUL-terminated.
#[no_mangle]
pub unsafe extern "C" fn appdiff_profile_save(
    profile: *const AppdiffProfile,
    path: *const c_char,
    utf16: bool,
) -> AppdiffStatus {
    guard(|| {
        let p = handle(profile, "profile")?;
        let path = text(path, "path")?;
        let encoding = if utf16 { Encoding::Utf16 } else { Encoding::Utf8 };
        let bytes = apxml::emit_bytes(&p.0, encoding).map_err(|e| err(AppdiffStatus::Schema, e))?;
        fs::write(path, bytes).map_err(|e| err(AppdiffStatus::Io, format!("{path}: {e}")))
    })
}

fn parse_failure(e: apxml::ApxmlError) -> Failure {
    match e {
        apxml::ApxmlError::NotWellFormed(_) => err(AppdiffStatus::Parse, e),
        _ => err(AppdiffStatus::Schema, e),
    }
}

/// Parses APXML text. In strict mode unknown phases and extension
/// elements are rejected.
///
/// # Safety
/// `text_in` must be NUL-terminated; `out` must be writable.
#[no_mangle]
pub unsafe extern "C" fn appdiff_profile_parse(
    text_in: *const c_char,
    strict: bool,
    out: *mut *mut AppdiffProfile,
) -> AppdiffStatus {
    guard(|| {
        check_out(out)?;
        let doc = apxml::parse_with(text(text_in, "text")?, ParseOptions { strict }).map_err(parse_failure)?;
        put(out, AppdiffProfile(doc))
    })
}

/// Reads a profile file in UTF-8 or UTF-16.
///
/// # Safety
/// `path` must be NUL-terminated; `out` must be writable.
#[no_mangle]
pub unsafe extern "C" fn appdiff_profile_load(path: *const c_char, out: *mut *mut AppdiffProfile) -> AppdiffStatus {
    guard(|| {
        check_out(out)?;
        let path = text(path, "path")?;
        let bytes = fs::read(path).map_err(|e| err(AppdiffStatus::Io, format!("{path}: {e}")))?;
        let doc = apxml::parse_bytes(&bytes, ParseOptions::default()).map_err(parse_failure)?;
        put(out, AppdiffProfile(doc))
    })
}

/// Number of phases, or 0 for a null handle.
///
/// # Safety
/// `profile` must be null or a live handle.
#[no_mangle]
pub unsafe extern "C" fn appdiff_profile_phase_count(profile: *const AppdiffProfile) -> usize {
    profile.as_ref().map_or(0, |p| p.0.phases.len())
}

/// Number of objects across all phases, or 0 for a null handle.
///
/// # Safety
/// `profile` must be null or a live handle.
#[no_mangle]
pub unsafe extern "C" fn appdiff_profile_object_count(profile: *const AppdiffProfile) -> usize {
    profile.as_ref().map_or(0, |p| p.0.object_count())
}

/// # Safety
/// `profile` must be null or a handle not yet freed.
#[no_mangle]
pub unsafe extern "C" fn appdiff_profile_free(profile: *mut AppdiffProfile) {
    if !profile.is_null() {
        drop(Box::from_raw(profile));
    }
}

/// Validates APXML text. Returns `Ok` or `Schema`; when `report` is not
/// null it receives one line per violation (`ok` when valid).
///
/// # Safety
/// `text_in` must be NUL-terminated; `report` must be null or writable.
#[no_mangle]
pub unsafe extern "C" fn appdiff_validate(text_in: *const c_char, report: *mut *mut c_char) -> AppdiffStatus {
    guard(|| {
        let r = apxml::validate(text(text_in, "text")?);
        if !report.is_null() {
            put_string(report, r.to_string())?;
        }
        if r.is_ok() {
            Ok(())
        } else {
            Err(err(
                AppdiffStatus::Schema,
                format!("{} violation(s)", r.violations.len()),
            ))
        }
    })
}

/// Captures and fully hashes a target tree for matching.
///
/// # Safety
/// String arguments must be null (hive only) or NUL-terminated; `out`
/// must be writable.
#[no_mangle]
pub unsafe extern "C" fn appdiff_target_build(
    root: *const c_char,
    hive: *const c_char,
    case_sensitive: bool,
    out: *mut *mut AppdiffTarget,
) -> AppdiffStatus {
    guard(|| {
        check_out(out)?;
        let root = text(root, "root")?;
        let hive = opt_text(hive, "hive")?;
        let index = build_target_index(Path::new(root), hive.map(Path::new), case_policy(case_sensitive))
            .map_err(|e| err(AppdiffStatus::Capture, e))?;
        put(out, AppdiffTarget(index))
    })
}

/// # Safety
/// `target` must be null or a handle not yet freed.
#[no_mangle]
pub unsafe extern "C" fn appdiff_target_free(target: *mut AppdiffTarget) {
    if !target.is_null() {
        drop(Box::from_raw(target));
    }
}

/// The default policy: path and digest for files, exact data for values,
/// deleted objects skipped.
#[no_mangle]
pub extern "C" fn appdiff_match_policy_default() -> AppdiffMatchPolicy {
    let p = MatchPolicy::default();
    AppdiffMatchPolicy {
        file_fallback: AppdiffFileFallback::None,
        require_value_data: p.require_value_data,
        absence_matching: p.absence_matching,
    }
}

/// Matches a profile against a target and renders the report as text, or
/// as JSON when `json` is set. A null `policy` selects the default.
///
/// # Safety
/// Handles must be live; `policy` must be null or valid; `report` must be
/// writable.
#[no_mangle]
pub unsafe extern "C" fn appdiff_match(
    profile: *const AppdiffProfile,
    target: *const AppdiffTarget,
    policy: *const AppdiffMatchPolicy,
    json: bool,
    report: *mut *mut c_char,
) -> AppdiffStatus {
    guard(|| {
        check_out(report)?;
        let p = handle(profile, "profile")?;
        let t = handle(target, "target")?;
        let policy = policy
            .as_ref()
            .copied()
            .unwrap_or_else(|| appdiff_match_policy_default());
        let policy = MatchPolicy {
            file_fallback: match policy.file_fallback {
                AppdiffFileFallback::None => FileFallback::None,
                AppdiffFileFallback::HashOnly => FileFallback::HashOnly,
                AppdiffFileFallback::PathOnly => FileFallback::PathOnly,
            },
            require_value_data: policy.require_value_data,
            absence_matching: policy.absence_matching,
        };
        let r = match_profile(&p.0, &t.0, &policy);
        put_string(report, if json { r.to_json() } else { r.render_text() })
    })
}
