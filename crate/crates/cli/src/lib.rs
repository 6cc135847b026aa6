//! Front end for the gradual dependently typed language: lexer, parser,
//! command driver, diagnostics, and core-dump serialization.

pub mod diag;
pub mod driver;
pub mod json;
pub mod lexer;
pub mod parser;
