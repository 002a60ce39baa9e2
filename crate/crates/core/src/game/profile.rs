use rand::Rng;
use rand_distr::{Distribution, Exp1};

use crate::error::{Error, Result};

/// Tolerance on `|Σ_i x_ki − 1|` for a valid mixed strategy.
pub const SIMPLEX_TOL: f64 = 1e-12;

/// One mixed strategy per player, stored contiguously.
///
/// `offsets[k]..offsets[k + 1]` is the slice holding player `k`'s strategy.
#[derive(Debug, Clone, PartialEq)]
pub struct StrategyProfile {
    offsets: Vec<usize>,
    data: Vec<f64>,
}

impl StrategyProfile {
    /// Builds a profile from per-player vectors, checking every simplex.
    pub fn new(strategies: Vec<Vec<f64>>) -> Result<Self> {
        let mut offsets = Vec::with_capacity(strategies.len() + 1);
        offsets.push(0);
        let mut data = Vec::new();
        for (k, s) in strategies.iter().enumerate() {
            check_simplex(k, s)?;
            data.extend_from_slice(s);
            offsets.push(data.len());
        }
        Ok(Self { offsets, data })
    }

    pub fn uniform(action_counts: &[usize]) -> Self {
        let strategies = action_counts
            .iter()
            .map(|&m| vec![1.0 / m as f64; m])
            .collect();
        Self::from_parts(strategies)
    }

    /// The pure profile in which player `k` plays `actions[k]`.
    pub fn pure(action_counts: &[usize], actions: &[usize]) -> Result<Self> {
        if action_counts.len() != actions.len() {
            return Err(Error::Shape(format!(
                "{} players but {} actions given",
                action_counts.len(),
                actions.len()
            )));
        }
        let mut strategies = Vec::with_capacity(actions.len());
        for (k, (&m, &a)) in action_counts.iter().zip(actions).enumerate() {
            if a >= m {
                return Err(Error::Shape(format!("player {k} has {m} actions, got action {a}")));
            }
            let mut s = vec![0.0; m];
            s[a] = 1.0;
            strategies.push(s);
        }
        Ok(Self::from_parts(strategies))
    }

    /// Draws every player's strategy from the flat Dirichlet(1, …, 1) law.
    pub fn random_dirichlet<R: Rng + ?Sized>(action_counts: &[usize], rng: &mut R) -> Self {
        let strategies = action_counts
            .iter()
            .map(|&m| {
                let mut s: Vec<f64> = (0..m).map(|_| Exp1.sample(rng)).collect();
                let total: f64 = s.iter().sum();
                s.iter_mut().for_each(|v| *v /= total);
                s
            })
            .collect();
        Self::from_parts(strategies)
    }

    pub(crate) fn from_parts(strategies: Vec<Vec<f64>>) -> Self {
        let mut offsets = vec![0];
        let mut data = Vec::new();
        for s in strategies {
            data.extend(s);
            offsets.push(data.len());
        }
        Self { offsets, data }
    }

    /// Same layout as `self`, new entries. Entries are not checked.
    pub(crate) fn with_data(&self, data: Vec<f64>) -> Self {
        debug_assert_eq!(data.len(), self.data.len());
        Self { offsets: self.offsets.clone(), data }
    }

    pub fn num_players(&self) -> usize {
        self.offsets.len() - 1
    }

    pub fn action_counts(&self) -> Vec<usize> {
        self.offsets.windows(2).map(|w| w[1] - w[0]).collect()
    }

    #[inline]
    pub fn player(&self, k: usize) -> &[f64] {
        &self.data[self.offsets[k]..self.offsets[k + 1]]
    }

    #[inline]
    pub(crate) fn player_mut(&mut self, k: usize) -> &mut [f64] {
        &mut self.data[self.offsets[k]..self.offsets[k + 1]]
    }

    pub fn players(&self) -> impl Iterator<Item = &[f64]> + '_ {
        self.offsets.windows(2).map(move |w| &self.data[w[0]..w[1]])
    }

    pub fn to_vecs(&self) -> Vec<Vec<f64>> {
        self.players().map(<[f64]>::to_vec).collect()
    }

    pub fn as_slice(&self) -> &[f64] {
        &self.data
    }

    pub(crate) fn as_mut_slice(&mut self) -> &mut [f64] {
        &mut self.data
    }

    pub(crate) fn offsets(&self) -> &[usize] {
        &self.offsets
    }

    /// Every entry strictly inside (0, 1). Single-action players are always
    /// interior (their only entry is 1 and they have no boundary).
    pub fn is_interior(&self) -> bool {
        self.players()
            .all(|s| s.len() == 1 || s.iter().all(|&v| v > 0.0 && v < 1.0))
    }

    /// Returns the first entry that violates interiority, if any.
    pub fn first_boundary_entry(&self) -> Option<(usize, usize, f64)> {
        for (k, s) in self.players().enumerate() {
            if s.len() == 1 {
                continue;
            }
            if let Some((i, &v)) = s.iter().enumerate().find(|(_, &v)| v <= 0.0 || v >= 1.0) {
                return Some((k, i, v));
            }
        }
        None
    }

    pub fn require_interior(&self) -> Result<()> {
        match self.first_boundary_entry() {
            Some((player, action, value)) => Err(Error::NotInterior { player, action, value }),
            None => Ok(()),
        }
    }

    pub fn same_layout(&self, other: &Self) -> bool {
        self.offsets == other.offsets
    }

    /// Sup-norm distance; profiles must share a layout.
    pub fn sup_distance(&self, other: &Self) -> f64 {
        debug_assert!(self.same_layout(other));
        self.data
            .iter()
            .zip(&other.data)
            .fold(0.0, |m, (a, b)| m.max((a - b).abs()))
    }

    /// Checks every player's simplex within [`SIMPLEX_TOL`].
    pub fn validate(&self) -> Result<()> {
        for (k, s) in self.players().enumerate() {
            check_simplex(k, s)?;
        }
        Ok(())
    }

    pub(crate) fn renormalize(&mut self) {
        for k in 0..self.num_players() {
            let s = self.player_mut(k);
            let total: f64 = s.iter().sum();
            s.iter_mut().for_each(|v| *v /= total);
        }
    }
}

fn check_simplex(k: usize, s: &[f64]) -> Result<()> {
    if s.is_empty() {
        return Err(Error::InvalidProfile(format!("player {k} has an empty strategy")));
    }
    if let Some((i, v)) = s.iter().enumerate().find(|(_, v)| !v.is_finite() || **v < 0.0) {
        return Err(Error::InvalidProfile(format!(
            "player {k} action {i} has probability {v}"
        )));
    }
    let total: f64 = s.iter().sum();
    if (total - 1.0).abs() > SIMPLEX_TOL {
        return Err(Error::InvalidProfile(format!(
            "player {k} strategy sums to {total}, expected 1"
        )));
    }
    Ok(())
}
