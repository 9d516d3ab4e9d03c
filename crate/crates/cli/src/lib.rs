//! Runner for end-to-end synthetic experiments: simulate cities, build
//! per-building datasets, train, predict, evaluate and report.

pub mod config;
pub mod failure;
pub mod layout;
pub mod stages;

pub use config::{load, RunConfig};
pub use failure::{classify, error_line, Failure};
pub use layout::{Layout, Run};
pub use stages::Stage;
