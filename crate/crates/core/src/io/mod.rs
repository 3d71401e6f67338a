//! Persistence and experiment configuration.

pub mod binary;
pub mod manifest;
pub mod run;

pub use binary::{load_noise, load_path, read_noise, read_path, save_path, save_path_with_noise, write_noise, write_path};
pub use manifest::{ExperimentManifest, Scale, Task, TaskParams};
pub use run::{run, thread_count, RunReport, THREADS_ENV};
