//! Experiment orchestration: configs, the game loop, transcripts and sweeps.

pub mod config;
pub mod game;
pub mod seeds;
pub mod sweep;
pub mod transcript;

pub use config::{EtaSpec, ExperimentConfig, LearnerSpec, ReductionKind, Resolved};
pub use game::{run_game, Game, GameOutput, LearnerRuntime, RoundRecord, Summary};
pub use seeds::{labeled_rng, stream_rng, Stream};
pub use sweep::{mean_se, sweep, CellSummary, Grid, SweepConfig, SweepResult};
pub use transcript::{
    read_rows, read_transcript, recompute_regret, write_rows, write_table, write_transcript, Format,
};
