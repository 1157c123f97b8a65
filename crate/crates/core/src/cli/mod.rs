//! Problem files and the command runner behind the `phimod` binary.

pub mod format;
pub mod run;

pub use format::{parse, parse_with, serialize, Body, MatrixBlock, Options, Overrides, ProblemFile, FORMAT_VERSION};
pub use run::{graph_file, run, OutputFormat, Report, COMMANDS};
