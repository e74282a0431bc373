//! Script language and check suites for the `superforms` engine.

pub mod emit;
pub mod run;
pub mod suites;
pub mod syntax;

pub use emit::{emit_all, Format};
pub use run::{run, Options, Outcome};
pub use suites::{run_suite, SuiteReport};
