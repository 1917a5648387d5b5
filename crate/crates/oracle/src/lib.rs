//! Reference model of presence fusion.
//!
//! Shares only data types with the engine. Facts are read off the raw
//! evidence with plain millisecond arithmetic, then matched against a
//! declarative rule table. [`cases`] enumerates and samples evidence stores
//! and [`check`] compares any fusion function against the table.

pub mod cases;
pub mod check;
mod table;

pub use table::{ablate, expected_state, facts, licensing_kinds, Facts, RULE_TABLE};
