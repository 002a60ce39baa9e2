//! Smooth (Boltzmann) Q-learning on weighted zero-sum polymatrix games.
//!
//! - [`game`]: polymatrix games, strategy profiles, zero-sum validation.
//! - [`dynamics`]: the continuous-time learning dynamics, integrators, and
//!   the discrete Q-learning and EWA updates.
//! - [`qre`]: quantal response equilibria.
//! - [`lyapunov`]: KL-divergence certificates along trajectories.
//! - [`analytic`]: closed forms for 2x2 games with one exploring player.
//! - [`experiments`]: benchmark games, annealing, batches and grids.
//! - [`surface`]: two-dimensional slices of the KL-divergence to the QRE.
//! - [`io`] and [`cli`]: file formats and the command line.

pub mod analytic;
pub mod cli;
pub mod dynamics;
pub mod error;
pub mod experiments;
pub mod game;
pub mod io;
pub mod lyapunov;
pub mod qre;
pub mod surface;

pub use error::{Error, Result};
pub use game::{Matrix, Player, PolymatrixGame, StrategyProfile, ValidatedGame};
