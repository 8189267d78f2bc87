//! Seeded evaluation of any policy against the simulator, CCDF tables of
//! the per-step network metrics, side-by-side comparisons, and CSV / JSON /
//! SVG export.
//!
//! Every policy in one comparison is evaluated on the same episode seeds
//! (common random numbers), so differences between rows come from the
//! policies and not from the traffic draws.

pub mod ccdf;
pub mod compare;
pub mod eval;
pub mod export;
pub mod policy;

pub use ccdf::{ccdf, CcdfTable};
pub use compare::{compare, Comparison, ComparisonRow, COMPARISON_SCHEMA};
pub use eval::{collect_visited, run_eval, CcdfSet, EvalConfig, EvalReport, EvalSummary, MeanStd, REPORT_SCHEMA};
pub use export::{
    ccdf_svg, export_comparison, read_ccdf_csv, read_comparison_csv, read_report_json, report_to_json, slug,
    write_ccdf_csv, write_comparison_csv, Metric,
};
pub use policy::{ElBaseline, ExpressionPolicy, NeuralPolicy, Policy};
