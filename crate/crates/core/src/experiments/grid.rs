use rayon::prelude::*;
use serde::Serialize;

use crate::error::{Error, Result};
use crate::game::{PolymatrixGame, StrategyProfile};
use crate::qre::solve_qre;

/// Temperatures swept for one player.
#[derive(Debug, Clone, PartialEq)]
pub struct GridAxis {
    pub player: usize,
    pub values: Vec<f64>,
}

#[derive(Debug, Clone, Serialize)]
pub struct GridNode {
    pub t1: f64,
    pub t2: Option<f64>,
    #[serde(serialize_with = "crate::io::serialize_optional_profile")]
    pub profile: Option<StrategyProfile>,
    pub residual: Option<f64>,
    pub converged: bool,
    /// Why the node has no profile or did not converge.
    pub flag: Option<String>,
}

/// Solves for the QRE at every node of a one- or two-axis temperature grid.
/// Players off the axes keep the game's rates.
///
/// Nodes where some rate is zero are flagged and skipped; nodes that fail
/// to converge keep their best iterate and are flagged.
pub fn qre_grid(
    game: &PolymatrixGame,
    axis1: &GridAxis,
    axis2: Option<&GridAxis>,
    tol: f64,
    max_iters: usize,
) -> Result<Vec<GridNode>> {
    for axis in std::iter::once(axis1).chain(axis2) {
        if axis.player >= game.num_players() {
            return Err(Error::Config(format!("grid axis player {} out of range", axis.player)));
        }
        if axis.values.is_empty() || axis.values.iter().any(|t| !(*t >= 0.0 && t.is_finite())) {
            return Err(Error::Config("grid temperatures must be finite and nonnegative".into()));
        }
    }
    if axis2.is_some_and(|a| a.player == axis1.player) {
        return Err(Error::Config("the two grid axes must sweep different players".into()));
    }
    let nodes: Vec<(f64, Option<f64>)> = match axis2 {
        None => axis1.values.iter().map(|&t| (t, None)).collect(),
        Some(a2) => axis1
            .values
            .iter()
            .flat_map(|&t1| a2.values.iter().map(move |&t2| (t1, Some(t2))))
            .collect(),
    };
    let counts = game.action_counts();
    nodes
        .into_par_iter()
        .map(|(t1, t2)| {
            let mut temps = game.temperatures();
            temps[axis1.player] = t1;
            if let (Some(a2), Some(t2)) = (axis2, t2) {
                temps[a2.player] = t2;
            }
            if let Some(k) = (0..temps.len()).find(|&k| temps[k] == 0.0 && counts[k] > 1) {
                return Ok(GridNode {
                    t1,
                    t2,
                    profile: None,
                    residual: None,
                    converged: false,
                    flag: Some(format!("player {k} has zero exploration rate; node skipped")),
                });
            }
            let sol = solve_qre(&game.with_temperatures(&temps)?, tol, max_iters)?;
            let flag = (!sol.converged).then(|| format!("did not converge (residual {:e})", sol.residual));
            Ok(GridNode { t1, t2, profile: Some(sol.profile), residual: Some(sol.residual), converged: sol.converged, flag })
        })
        .collect()
}
