//! The syntactic model: a strongly normalizing inductive-recursive target,
//! generation of its prelude, translation of cast-calculus terms, untyped
//! evaluation, back-translation of values, and the simulation checker.

pub mod check;
pub mod emit;
pub mod eval;
pub mod back;
pub mod prelude;
pub mod sim;
pub mod term;
pub mod translate;
