//! Error metrics stratified by reference height, report tables and CSV
//! exports for scatter and height-density plots.

mod export;
mod metrics;
mod table;

pub use export::{
    export_height_density, export_scatter, height_density, read_metrics_csv, read_scatter,
    write_metrics_csv, DensityBin, ScatterRow,
};
pub use metrics::{mae, rmse, stratified_report, BucketMetrics, ErrorAccumulator, EvalPair, MetricsReport};
pub use table::{format_table, parse_table, TableRow};

/// Reference height separating the low and high buckets.
pub const DEFAULT_THRESHOLD_M: f64 = 40.0;
