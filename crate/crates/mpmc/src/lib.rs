//! File formats, run orchestration and reporting for `mpmc-core`.

pub mod props;
pub mod report;
pub mod run;

pub use props::{parse_properties, Property, Sweep};
pub use report::{emit_report, Format, RunReport};
pub use run::{run, RunOptions};
