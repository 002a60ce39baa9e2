//! Weighted zero-sum structure: certification, rescaling and weight recovery.
//!
//! A game is weighted zero-sum when `Σ_k w_k u_k(x) = 0` for every profile.
//! Utilities are multilinear, so checking every pure profile is a complete
//! certificate; sampling pure profiles is the fallback for large games.

use std::ops::Deref;

use nalgebra::{DMatrix, DVector};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::Serialize;

use super::{Edge, PolymatrixGame};
use crate::error::{Error, Result};

/// Maximum number of pure profiles visited by exhaustive validation.
pub const EXHAUSTIVE_LIMIT: f64 = 1e7;

/// Number of samples used when a game is too large for exhaustive checks.
pub const DEFAULT_SAMPLES: usize = 10_000;

const ZERO_SUM_TOL: f64 = 1e-9;
const INFER_RESIDUAL_TOL: f64 = 1e-6;
const INFER_EXHAUSTIVE_LIMIT: f64 = 1e5;

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum ZeroSumMode {
    Exhaustive,
    Sampled { count: usize, seed: u64 },
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ZeroSumReport {
    pub passed: bool,
    pub max_residual: f64,
    pub tolerance: f64,
    pub profiles_checked: usize,
    pub exhaustive: bool,
}

/// Evaluates `Σ_k w_k u_k(s)` over pure profiles `s`.
pub fn validate_weighted_zero_sum(game: &PolymatrixGame, mode: ZeroSumMode) -> Result<ZeroSumReport> {
    let counts = game.action_counts();
    let weights = game.weights();
    let tolerance = ZERO_SUM_TOL * (1.0 + game.max_abs_payoff());
    let weighted_sum = |s: &[usize]| -> f64 {
        game.edges()
            .iter()
            .map(|e: &Edge| weights[e.from] * e.payoff.get(s[e.from], s[e.to]))
            .sum()
    };

    let mut max_residual: f64 = 0.0;
    let mut profiles_checked = 0usize;
    let exhaustive = matches!(mode, ZeroSumMode::Exhaustive);
    match mode {
        ZeroSumMode::Exhaustive => {
            let total = profile_count(&counts);
            if total > EXHAUSTIVE_LIMIT {
                return Err(Error::TooManyProfiles { count: total, limit: EXHAUSTIVE_LIMIT });
            }
            for_each_pure_profile(&counts, |s| {
                max_residual = max_residual.max(weighted_sum(s).abs());
                profiles_checked += 1;
            });
        }
        ZeroSumMode::Sampled { count, seed } => {
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            let mut s = vec![0; counts.len()];
            for _ in 0..count {
                for (sk, &m) in s.iter_mut().zip(&counts) {
                    *sk = rng.random_range(0..m);
                }
                max_residual = max_residual.max(weighted_sum(&s).abs());
                profiles_checked += 1;
            }
        }
    }
    Ok(ZeroSumReport {
        passed: max_residual <= tolerance,
        max_residual,
        tolerance,
        profiles_checked,
        exhaustive,
    })
}

/// Exhaustive validation when feasible, otherwise [`DEFAULT_SAMPLES`] samples.
pub(crate) fn validate_auto(game: &PolymatrixGame) -> Result<ZeroSumReport> {
    let mode = if profile_count(&game.action_counts()) <= EXHAUSTIVE_LIMIT {
        ZeroSumMode::Exhaustive
    } else {
        ZeroSumMode::Sampled { count: DEFAULT_SAMPLES, seed: 0 }
    };
    validate_weighted_zero_sum(game, mode)
}

/// Quick pass/fail check: exhaustive up to 10⁵ profiles, else 10³ samples.
pub(crate) fn validate_auto_cheap(game: &PolymatrixGame) -> bool {
    let mode = if profile_count(&game.action_counts()) <= 1e5 {
        ZeroSumMode::Exhaustive
    } else {
        ZeroSumMode::Sampled { count: 1_000, seed: 0 }
    };
    validate_weighted_zero_sum(game, mode).is_ok_and(|r| r.passed)
}

fn profile_count(counts: &[usize]) -> f64 {
    counts.iter().map(|&m| m as f64).product()
}

/// Odometer enumeration of all pure profiles.
fn for_each_pure_profile(counts: &[usize], mut f: impl FnMut(&[usize])) {
    let mut s = vec![0; counts.len()];
    loop {
        f(&s);
        let mut k = 0;
        loop {
            if k == s.len() {
                return;
            }
            s[k] += 1;
            if s[k] < counts[k] {
                break;
            }
            s[k] = 0;
            k += 1;
        }
    }
}

/// A game that passed weighted zero-sum validation.
#[derive(Debug, Clone)]
pub struct ValidatedGame {
    game: PolymatrixGame,
    report: ZeroSumReport,
}

impl ValidatedGame {
    /// Validates exhaustively when the profile count allows, by sampling
    /// otherwise. Refuses games that fail.
    pub fn new(game: PolymatrixGame) -> Result<Self> {
        let report = validate_auto(&game)?;
        if !report.passed {
            return Err(Error::NotZeroSum { residual: report.max_residual });
        }
        Ok(Self { game, report })
    }

    pub fn report(&self) -> &ZeroSumReport {
        &self.report
    }

    pub fn game(&self) -> &PolymatrixGame {
        &self.game
    }

    pub fn into_inner(self) -> PolymatrixGame {
        self.game
    }

    /// Same payoffs and weights, new exploration rates. Temperatures do not
    /// enter the zero-sum property, so the certificate carries over.
    pub fn with_temperatures(&self, temperatures: &[f64]) -> Result<Self> {
        Ok(Self { game: self.game.with_temperatures(temperatures)?, report: self.report.clone() })
    }
}

impl Deref for ValidatedGame {
    type Target = PolymatrixGame;

    fn deref(&self) -> &PolymatrixGame {
        &self.game
    }
}

/// Returns the game with payoffs `B_kl = w_k A_kl` and unit weights.
pub fn rescale_to_unweighted(game: &PolymatrixGame) -> Result<PolymatrixGame> {
    let report = validate_auto(game)?;
    if !report.passed {
        return Err(Error::NotZeroSum { residual: report.max_residual });
    }
    let mut scaled = game.clone();
    for e in scaled.edges.iter_mut() {
        e.payoff = e.payoff.scaled(game.players[e.from].weight);
    }
    for p in scaled.players.iter_mut() {
        p.weight = 1.0;
    }
    Ok(scaled)
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct WeightInference {
    /// Recovered weights with the first player of each connected component
    /// fixed to 1, or `None` when no positive solution fits.
    pub weights: Option<Vec<f64>>,
    pub residual: f64,
    /// All payoffs are zero; every weight vector works.
    pub degenerate: bool,
}

/// Finds positive weights making the game weighted zero-sum, if any exist.
///
/// Solves `Σ_k w_k u_k(s) = 0` over pure profiles by least squares, one
/// connected component at a time (components are independent up to scale).
pub fn infer_weights(game: &PolymatrixGame) -> Result<WeightInference> {
    let n = game.num_players();
    if game.max_abs_payoff() == 0.0 {
        return Ok(WeightInference { weights: Some(vec![1.0; n]), residual: 0.0, degenerate: true });
    }

    let counts = game.action_counts();
    let mut rows: Vec<Vec<f64>> = Vec::new();
    let push_row = |s: &[usize], rows: &mut Vec<Vec<f64>>| {
        rows.push((0..n).map(|k| game.pure_utility(k, s)).collect());
    };
    if profile_count(&counts) <= INFER_EXHAUSTIVE_LIMIT {
        for_each_pure_profile(&counts, |s| push_row(s, &mut rows));
    } else {
        let mut rng = ChaCha8Rng::seed_from_u64(0);
        let mut s = vec![0; n];
        for _ in 0..DEFAULT_SAMPLES {
            for (sk, &m) in s.iter_mut().zip(&counts) {
                *sk = rng.random_range(0..m);
            }
            push_row(&s, &mut rows);
        }
    }

    let mut weights = vec![1.0; n];
    for component in components(game) {
        if component.len() < 2 {
            continue;
        }
        let anchor = component[0];
        let rest = &component[1..];
        let a = DMatrix::from_fn(rows.len(), rest.len(), |i, j| rows[i][rest[j]]);
        let b = DVector::from_iterator(rows.len(), rows.iter().map(|r| -r[anchor]));
        let solution = a
            .svd(true, true)
            .solve(&b, 1e-12)
            .map_err(|e| Error::Domain(format!("least-squares solve failed: {e}")))?;
        for (j, &k) in rest.iter().enumerate() {
            weights[k] = solution[j];
        }
    }

    let scale = 1.0 + game.max_abs_payoff();
    let residual = rows
        .iter()
        .map(|r| r.iter().zip(&weights).map(|(u, w)| u * w).sum::<f64>().abs())
        .fold(0.0, f64::max)
        / scale;
    let ok = residual <= INFER_RESIDUAL_TOL && weights.iter().all(|&w| w > 0.0);
    Ok(WeightInference { weights: ok.then_some(weights), residual, degenerate: false })
}

/// Connected components of the player graph, each sorted ascending.
fn components(game: &PolymatrixGame) -> Vec<Vec<usize>> {
    let n = game.num_players();
    let mut label = vec![usize::MAX; n];
    let mut out = Vec::new();
    for start in 0..n {
        if label[start] != usize::MAX {
            continue;
        }
        let id = out.len();
        let mut stack = vec![start];
        let mut members = Vec::new();
        label[start] = id;
        while let Some(k) = stack.pop() {
            members.push(k);
            for e in game.edges_from(k) {
                if label[e.to] == usize::MAX {
                    label[e.to] = id;
                    stack.push(e.to);
                }
            }
        }
        members.sort_unstable();
        out.push(members);
    }
    out
}
