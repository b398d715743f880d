//! Acceptance suite for `fluxmech-core`; see `tests/acceptance.rs`.
//!
//! Run with `cargo test -p fluxmech-validation --test acceptance`.
