pub mod json;
pub mod logic;
pub mod eval;
pub mod script;
pub mod process;
pub mod ctl;
pub mod semantics;
pub mod tableau;
pub mod prover;
pub mod spec;
pub mod cli;
