//! Knowledge bases shipped with the crate, usable directly or as templates.

/// Two-entity meeting/moving definitions over activity events and
/// distance/orientation evidence.
pub const MEETING_MOVING: &str = include_str!("../assets/meeting_moving.mlnec");

/// Minimal single-fluent base: `flag(X)` starts on `start(X)` and stops on
/// `stop(X)`. Handy for studying persistence behaviour in isolation.
pub const FLAG: &str = include_str!("../assets/flag.mlnec");
