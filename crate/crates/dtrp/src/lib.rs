//! File formats, parallel evaluation, domain generation and benchmarking on
//! top of `dtrp-core`.

pub mod bench;
pub mod bundled;
pub mod format;
pub mod generate;
pub mod parallel;
pub mod result;
pub mod syntax;

pub use dtrp_core as core;
pub use format::{parse_domain, serialize_domain, FormatError};
