//! Core of a checker for the type theory CaTT, whose contexts, terms and
//! substitutions present weak ω-categories.
//!
//! The crate is organized as a pipeline:
//!
//! * [`syntax`] — the object language: identifiers, types, terms, contexts,
//!   substitutions, canonical renaming, pretty-printing;
//! * [`calculus`] — the raw substitution calculus: free variables, dimensions,
//!   action and composition of substitutions, depth and coherence depth;
//! * [`pasting`] — recognition of pasting-scheme contexts, their boundaries and
//!   locally maximal variables, and the ◁ order on globular sets;
//! * [`kernel`] — the trusted checker for all judgments, including the two
//!   coherence rules with their variable side conditions;
//! * [`frontend`] — lexer, parser and elaborator for `.catt` source,
//!   reconstructing implicit arguments.
//!
//! Everything is pure and allocation-only; the crate builds without `std`.
//! All values are immutable once constructed and freely shareable across
//! threads.

#![cfg_attr(not(test), no_std)]

extern crate alloc;

pub mod calculus;
pub mod frontend;
pub mod kernel;
pub mod pasting;
pub mod syntax;

pub use kernel::Environment;
pub use syntax::{CohKind, Context, Ident, RawTerm, RawType, Substitution};
