//! Bounded model checking for a statically typed subset of Python.

pub mod ast;
pub mod types;
pub mod unit;
pub mod symtab;
pub mod bv;
pub mod term;
pub mod goto;
pub mod symex;
pub mod vc;
pub mod report;
pub mod pipeline;
