//! Std companion to `melm-core`: CSV/libsvm readers, the JSON model file,
//! a rayon-backed executor and the `melm` command-line tool.

pub mod cli;
pub mod exec;
pub mod io;
pub mod model;

pub use exec::RayonExecutor;
pub use io::{load_csv, load_libsvm, Format, LabelColumn};
pub use model::ModelFile;
