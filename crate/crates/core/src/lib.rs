//! Application profiling by differential analysis.
//!
//! The crate captures before/after snapshots of a file system tree and a
//! registry-style hive, classifies the differences, and stores them per
//! application life-cycle phase in an Application Profile XML (APXML)
//! document. Profiles can then be matched against a target system.
//!
//! * [`model`] - snapshots, capture, hive loading, persistence
//! * [`hashtrie`] - known-file blacklist and selective SHA-1 hashing
//! * [`differ`] - snapshot comparison
//! * [`apxml`] - profile document model, emitter, parser, validator
//! * [`profiler`] - the interactive collection session
//! * [`matcher`] - profile-to-target correlation

pub mod apxml;
pub mod differ;
pub mod hashtrie;
pub mod matcher;
pub mod model;
pub mod profiler;
