//! Configuration, file formats and the command implementations of the
//! `nudge-lab` binary.

mod checkpoint;
mod commands;
mod config;
mod streamfile;
mod wire;

pub use checkpoint::{Checkpoint, CHECKPOINT_MAGIC, CHECKPOINT_VERSION};
pub use commands::{
    analyze_series, cmd_analyze, cmd_assimilate, cmd_check_condition, cmd_simulate, cmd_sweep,
    configure_threads, exit_code, AccumulatorCheck, AnalysisReport, ChannelFit, CommandOutput,
    ENERGY_TOLERANCE, THREADS_ENV,
};
pub use config::{ExperimentConfig, MuPolicy, Sweep, SweepParam, DEFAULT_BOX, KEYS};
pub use streamfile::{
    decode_records, encode_records, read_stream, sidecar_path, stream_from_parts, write_stream,
    GridSpec, StreamSidecar, STREAM_MAGIC, STREAM_VERSION,
};
