use std::fs;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Parser, Subcommand, ValueEnum};
use log::warn;

use appdiff::apxml::{self, Encoding, ParseOptions};
use appdiff::differ::diff_snapshots;
use appdiff::hashtrie::{selective_hash, PathTrie, Sha1Hasher};
use appdiff::matcher::{build_target_index, match_profile, FileFallback, MatchPolicy};
use appdiff::model::{
    capture_fs_snapshot, load_hive, load_snapshot_file, merge_snapshot_parts, save_snapshot_file, CapturePolicy,
    CasePolicy,
};
use appdiff::profiler::{self, SessionConfig, SessionError};

const EXIT_USAGE: u8 = 1;
const EXIT_INVALID: u8 = 2;
const EXIT_IO: u8 = 3;

/// Application profiling by differential analysis.
#[derive(Parser)]
#[command(name = "appdiff", version)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Run an interactive collection session and write an APXML profile.
    Profile {
        #[arg(long)]
        app: String,
        #[arg(long)]
        app_version: String,
        /// Directory tree to profile.
        #[arg(long)]
        root: PathBuf,
        /// Serialized hive captured with every snapshot.
        #[arg(long)]
        hive: Option<PathBuf>,
        #[arg(long)]
        out: PathBuf,
        #[arg(long)]
        case_sensitive: bool,
        /// Write UTF-16 instead of UTF-8.
        #[arg(long)]
        utf16: bool,
        /// Keep every snapshot in this directory.
        #[arg(long)]
        snapshot_dir: Option<PathBuf>,
    },
    /// Check a profile against the APXML schema.
    Validate { file: PathBuf },
    /// Compare two snapshot files.
    Diff { snap1: PathBuf, snap2: PathBuf },
    /// Capture a snapshot to a file.
    Snapshot {
        #[arg(long)]
        root: PathBuf,
        #[arg(long)]
        out: PathBuf,
        #[arg(long)]
        hive: Option<PathBuf>,
        #[arg(long)]
        case_sensitive: bool,
        /// Hash every file.
        #[arg(long)]
        hash: bool,
    },
    /// Match a profile against a target tree.
    Match {
        profile: PathBuf,
        #[arg(long)]
        root: PathBuf,
        #[arg(long)]
        hive: Option<PathBuf>,
        /// Write the report here instead of standard output.
        #[arg(long)]
        out: Option<PathBuf>,
        #[arg(long, value_enum, default_value_t = Format::Text)]
        format: Format,
        /// How to treat file objects whose digest is not at their path.
        #[arg(long, value_enum, default_value_t = Fallback::None)]
        fallback: Fallback,
        /// Match values by cellpath alone.
        #[arg(long)]
        ignore_value_data: bool,
        /// Count deleted objects as matched when absent.
        #[arg(long)]
        absence: bool,
        #[arg(long)]
        case_sensitive: bool,
    },
}

#[derive(Clone, Copy, ValueEnum)]
enum Format {
    Text,
    Json,
}

#[derive(Clone, Copy, ValueEnum)]
enum Fallback {
    None,
    HashOnly,
    PathOnly,
}

struct Failure {
    code: u8,
    message: String,
}

fn fail(code: u8, message: impl std::fmt::Display) -> Failure {
    Failure {
        code,
        message: message.to_string(),
    }
}

fn case_policy(sensitive: bool) -> CasePolicy {
    if sensitive {
        CasePolicy::Sensitive
    } else {
        CasePolicy::Insensitive
    }
}

fn profile(config: SessionConfig) -> Result<(), Failure> {
    let mut console = profiler::terminal();
    match profiler::run_session(&config, &mut console) {
        Ok(outcome) => {
            for w in &outcome.warnings {
                warn!("{w}");
            }
            Ok(())
        }
        Err(e @ SessionError::InvalidConfig(_)) => Err(fail(EXIT_USAGE, e)),
        Err(e @ SessionError::Document(_)) => Err(fail(EXIT_INVALID, e)),
        Err(e) => Err(fail(EXIT_IO, e)),
    }
}

fn validate(file: &Path) -> Result<(), Failure> {
    let bytes = fs::read(file).map_err(|e| fail(EXIT_IO, format!("{}: {e}", file.display())))?;
    let report = apxml::validate_bytes(&bytes);
    print!("{report}");
    if report.is_ok() {
        Ok(())
    } else {
        Err(fail(
            EXIT_INVALID,
            format!("{}: {} violation(s)", file.display(), report.violations.len()),
        ))
    }
}

fn diff(snap1: &Path, snap2: &Path) -> Result<(), Failure> {
    let load = |p: &Path| load_snapshot_file(p).map_err(|e| fail(EXIT_IO, format!("{}: {e}", p.display())));
    let d = diff_snapshots(&load(snap1)?, &load(snap2)?);
    for w in &d.warnings {
        warn!("{w}");
    }
    print!("{}", d.render_text());
    Ok(())
}

fn snapshot(root: &Path, out: &Path, hive: Option<&Path>, policy: CasePolicy, hash: bool) -> Result<(), Failure> {
    let captured = capture_fs_snapshot(
        root,
        &CapturePolicy {
            case_policy: policy,
            ..CapturePolicy::default()
        },
    )
    .map_err(|e| fail(EXIT_IO, e))?;
    for w in &captured.warnings {
        warn!("{w}");
    }
    let mut s = captured.snapshot;
    s.id = out.file_stem().unwrap_or_default().to_string_lossy().into_owned();
    if hash {
        let outcome = selective_hash(&s, &PathTrie::new(policy), root, &Sha1Hasher);
        for w in &outcome.warnings {
            warn!("{w}");
        }
        s = outcome.snapshot;
    }
    if let Some(hive) = hive {
        let text = fs::read_to_string(hive).map_err(|e| fail(EXIT_IO, format!("{}: {e}", hive.display())))?;
        let reg = load_hive(&text, policy).map_err(|e| fail(EXIT_IO, format!("{}: {e}", hive.display())))?;
        s = merge_snapshot_parts(s, reg).map_err(|e| fail(EXIT_IO, e))?;
    }
    save_snapshot_file(&s, out).map_err(|e| fail(EXIT_IO, format!("{}: {e}", out.display())))?;
    eprintln!(
        "{}: {} files, {} keys, {} values",
        out.display(),
        s.file_count(),
        s.key_count(),
        s.value_count()
    );
    Ok(())
}

fn run(cli: Cli) -> Result<(), Failure> {
    match cli.command {
        Command::Profile {
            app,
            app_version,
            root,
            hive,
            out,
            case_sensitive,
            utf16,
            snapshot_dir,
        } => {
            let mut config = SessionConfig::new(app, app_version, root, out);
            config.hive_source = hive;
            config.case_policy = case_policy(case_sensitive);
            config.snapshot_dir = snapshot_dir;
            config.encoding = if utf16 { Encoding::Utf16 } else { Encoding::Utf8 };
            profile(config)
        }
        Command::Validate { file } => validate(&file),
        Command::Diff { snap1, snap2 } => diff(&snap1, &snap2),
        Command::Snapshot {
            root,
            out,
            hive,
            case_sensitive,
            hash,
        } => snapshot(&root, &out, hive.as_deref(), case_policy(case_sensitive), hash),
        Command::Match {
            profile,
            root,
            hive,
            out,
            format,
            fallback,
            ignore_value_data,
            absence,
            case_sensitive,
        } => {
            let bytes = fs::read(&profile).map_err(|e| fail(EXIT_IO, format!("{}: {e}", profile.display())))?;
            let doc = apxml::parse_bytes(&bytes, ParseOptions::default())
                .map_err(|e| fail(EXIT_INVALID, format!("{}: {e}", profile.display())))?;
            let index = build_target_index(&root, hive.as_deref(), case_policy(case_sensitive))
                .map_err(|e| fail(EXIT_IO, e))?;
            for w in &index.warnings {
                warn!("{w}");
            }
            let policy = MatchPolicy {
                file_fallback: match fallback {
                    Fallback::None => FileFallback::None,
                    Fallback::HashOnly => FileFallback::HashOnly,
                    Fallback::PathOnly => FileFallback::PathOnly,
                },
                require_value_data: !ignore_value_data,
                absence_matching: absence,
            };
            let report = match_profile(&doc, &index, &policy);
            let text = match format {
                Format::Text => report.render_text(),
                Format::Json => report.to_json() + "\n",
            };
            match out {
                Some(path) => fs::write(&path, text).map_err(|e| fail(EXIT_IO, format!("{}: {e}", path.display()))),
                None => {
                    print!("{text}");
                    Ok(())
                }
            }
        }
    }
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("warn")).init();
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let _ = e.print();
            return if e.use_stderr() {
                ExitCode::from(EXIT_USAGE)
            } else {
                ExitCode::SUCCESS
            };
        }
    };
    match run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(f) => {
            eprintln!("appdiff: {}", f.message);
            ExitCode::from(f.code)
        }
    }
}
