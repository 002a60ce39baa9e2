//! Benchmark games, exploration schedules, annealing, batches and QRE grids.

pub mod anneal;
pub mod batch;
pub mod generators;
pub mod grid;
pub mod schedule;

pub use anneal::{anneal_select, AnnealOutcome, SELECTION_TOL};
pub use batch::{batch_run, run_seed, BatchConfig, BatchSummary, PlayerSummary, Stats};
pub use generators::{
    make_amps, make_match_mismatch, make_rps, printed_amps, random_weighted_zero_sum, RandomGameSpec, AMPS_NASH,
};
pub use grid::{qre_grid, GridAxis, GridNode};
pub use schedule::{ExplorationSchedule, ScheduleShape};
