//! Generalized constraint satisfaction problems for geometric resolution.

pub mod backend;
pub mod backtrack;
pub mod bench;
pub mod cli;
pub mod filter;
pub mod format;
pub mod gen;
pub mod geometric;
pub mod lemma;
pub mod optimal;
pub mod oracle;
pub mod refine;
pub mod sat;
pub mod solver;
pub mod stacks;
pub mod translate;
pub mod types;
