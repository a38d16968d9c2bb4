//! Composite event recognition over event calculus definitions with
//! Markov logic semantics.
//!
//! The pipeline: parse a knowledge base of weighted initiation and
//! termination rules ([`kb`]), compile it by predicate completion into
//! effect and persistence formulas ([`compile`]), ground those against a
//! narrative of observed events into a Markov network over `holdsAt` atoms
//! ([`grounding`]), then query marginals or MAP states ([`infer`]), learn
//! weights from annotated narratives ([`learn`]), and score recognition
//! output ([`eval`]).

pub mod bundled;
pub mod compile;
pub mod eval;
pub mod grounding;
pub mod infer;
pub mod kb;
pub mod learn;
pub mod logic;
pub mod synth;
