//! Kernel for a gradual dependently typed language with inductive families.
//!
//! The pipeline: a gradual surface language (with the unknown term `?`)
//! elaborates into an explicit cast calculus; the cast calculus is checked
//! bidirectionally, normalized with a terminating approximate evaluator for
//! type-level computation, and run with exact semantics. Index constraints of
//! inductive families are enforced through evidence-carrying propositional
//! consistency. A translation into a strongly normalizing inductive-recursive
//! target validates the dynamic semantics (simulation + back-translation).

pub mod classify;
pub mod context;
pub mod germ;
pub mod normalize;
pub mod pretty;
pub mod relations;
pub mod sig;
pub mod static_ref;
pub mod subst;
pub mod term;
pub mod elaborate;
pub mod surface;
pub mod typing;

pub use context::Context;
pub use sig::{CtorSig, Env, InductiveSig};
pub use term::{Level, Name, Term, Tag, TypeTag};
pub mod stir;
