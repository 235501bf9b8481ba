//! Frame decoding, multi-frame sessions, metrics and the benchmark harness.

mod bench;
mod frame;
mod metrics;
mod session;

pub use bench::{
    occlude_random, random_window, report_csv, report_summary, run_benchmark, run_session, BenchModes, BenchRow,
    CSV_HEADER,
};
pub use frame::{
    assemble_payload, decode_frame, detect_layer_count, fit_geometry, BlockOutcome, DecodeOptions, FrameResult, FrameStatus,
    GeometryMode, GroundTruth,
};
pub use metrics::{compute_metrics, expected_predictions_per_frame, Metrics};
pub use session::{ScanSession, SymbolIdentity};

#[cfg(test)]
mod tests;
