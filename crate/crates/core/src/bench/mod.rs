//! Benchmark sweeps: specifications, execution and CSV / plot output.

pub mod config;
pub mod experiment;
pub mod output;

pub use self::config::{
    ExperimentId, ExperimentSpec, InitialDatum, KernelFamily, Method, Scale, CONFIG_KEYS,
};
pub use self::experiment::{
    initial_field, read_reference, reference_path, run_experiment, run_point, write_reference,
    RunPoint,
};
pub use self::output::{emit_csv, emit_plot_data, read_csv, CsvRow, CSV_COLUMNS, FAILED};
