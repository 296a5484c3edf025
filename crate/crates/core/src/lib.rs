//! Semver breakage checking over normalized API snapshots.
//!
//! A check loads two [`snapshot::ApiSnapshot`]s, runs every lint of the
//! [`lints`] catalog over the pair through [`adapter::SnapshotPairAdapter`],
//! and compares what the findings require with the actual version bump.

pub mod adapter;
pub mod attribute;
pub mod checker;
pub mod crater;
pub mod features;
pub mod lints;
pub mod manifest;
pub mod producer;
pub mod registry;
pub mod report;
pub mod snapshot;
pub mod version;
pub mod witness;
