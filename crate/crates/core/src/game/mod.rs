//! Polymatrix games: players on a graph, one bimatrix game per edge.
//!
//! Each undirected edge `[k, l]` stores two independent directed payoff
//! matrices, `A_kl` (shape `|S_k| × |S_l|`, paid to `k`) and `A_lk`. A player
//! uses the same mixed strategy in every incident game, so the reward of pure
//! action `i` of player `k` is `r_ki(x_-k) = Σ_l (A_kl x_l)_i`.

mod matrix;
mod profile;
mod zero_sum;

pub use matrix::Matrix;
pub use profile::{StrategyProfile, SIMPLEX_TOL};
pub(crate) use zero_sum::validate_auto_cheap;
pub use zero_sum::{
    infer_weights, rescale_to_unweighted, validate_weighted_zero_sum, ValidatedGame,
    WeightInference, ZeroSumMode, ZeroSumReport, DEFAULT_SAMPLES, EXHAUSTIVE_LIMIT,
};

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Player {
    pub id: String,
    pub actions: Vec<String>,
    /// Positive zero-sum weight `w_k`.
    pub weight: f64,
    /// Exploration rate `T_k ≥ 0`.
    pub temperature: f64,
}

impl Player {
    pub fn new(id: impl Into<String>, actions: usize) -> Self {
        Self {
            id: id.into(),
            actions: (0..actions).map(|i| format!("a{i}")).collect(),
            weight: 1.0,
            temperature: 0.0,
        }
    }

    pub fn with_action_names<S: Into<String>>(mut self, names: impl IntoIterator<Item = S>) -> Self {
        self.actions = names.into_iter().map(Into::into).collect();
        self
    }

    pub fn with_weight(mut self, weight: f64) -> Self {
        self.weight = weight;
        self
    }

    pub fn with_temperature(mut self, temperature: f64) -> Self {
        self.temperature = temperature;
        self
    }

    pub fn num_actions(&self) -> usize {
        self.actions.len()
    }
}

/// Directed edge: `payoff` is paid to `from` when playing against `to`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Edge {
    pub from: usize,
    pub to: usize,
    pub payoff: Matrix,
}

/// An immutable polymatrix game.
#[derive(Debug, Clone, PartialEq)]
pub struct PolymatrixGame {
    name: String,
    players: Vec<Player>,
    edges: Vec<Edge>,
    outgoing: Vec<Vec<usize>>,
    notes: Vec<String>,
}

impl PolymatrixGame {
    pub fn builder() -> GameBuilder {
        GameBuilder::default()
    }

    pub fn name(&self) -> &str {
        &self.name
    }

    pub fn notes(&self) -> &[String] {
        &self.notes
    }

    pub fn num_players(&self) -> usize {
        self.players.len()
    }

    pub fn players(&self) -> &[Player] {
        &self.players
    }

    pub fn player(&self, k: usize) -> &Player {
        &self.players[k]
    }

    pub fn player_index(&self, id: &str) -> Option<usize> {
        self.players.iter().position(|p| p.id == id)
    }

    /// All directed edges.
    pub fn edges(&self) -> &[Edge] {
        &self.edges
    }

    /// Directed edges leaving player `k`.
    pub fn edges_from(&self, k: usize) -> impl Iterator<Item = &Edge> + '_ {
        self.outgoing[k].iter().map(move |&e| &self.edges[e])
    }

    pub fn action_counts(&self) -> Vec<usize> {
        self.players.iter().map(Player::num_actions).collect()
    }

    pub fn weights(&self) -> Vec<f64> {
        self.players.iter().map(|p| p.weight).collect()
    }

    pub fn temperatures(&self) -> Vec<f64> {
        self.players.iter().map(|p| p.temperature).collect()
    }

    /// True iff every player with a choice to make has a positive
    /// exploration rate.
    pub fn fully_exploratory(&self) -> bool {
        self.players.iter().all(|p| p.num_actions() == 1 || p.temperature > 0.0)
    }

    /// Smallest exploration rate among players with at least two actions.
    pub fn min_exploration(&self) -> f64 {
        self.players
            .iter()
            .filter(|p| p.num_actions() > 1)
            .map(|p| p.temperature)
            .fold(f64::INFINITY, f64::min)
    }

    pub fn max_abs_payoff(&self) -> f64 {
        self.edges.iter().fold(0.0, |m, e| m.max(e.payoff.max_abs()))
    }

    /// Copy of the game with new exploration rates.
    pub fn with_temperatures(&self, temperatures: &[f64]) -> Result<Self> {
        check_len("temperatures", temperatures.len(), self.num_players())?;
        check_temperatures(temperatures)?;
        let mut game = self.clone();
        for (p, &t) in game.players.iter_mut().zip(temperatures) {
            p.temperature = t;
        }
        Ok(game)
    }

    /// Copy of the game with new zero-sum weights.
    pub fn with_weights(&self, weights: &[f64]) -> Result<Self> {
        check_len("weights", weights.len(), self.num_players())?;
        check_weights(weights)?;
        let mut game = self.clone();
        for (p, &w) in game.players.iter_mut().zip(weights) {
            p.weight = w;
        }
        Ok(game)
    }

    pub fn uniform_profile(&self) -> StrategyProfile {
        StrategyProfile::uniform(&self.action_counts())
    }

    /// Checks that `x` has one strategy of the right length per player.
    pub fn check_profile(&self, x: &StrategyProfile) -> Result<()> {
        if x.action_counts() != self.action_counts() {
            return Err(Error::Shape(format!(
                "profile layout {:?} does not match game action counts {:?}",
                x.action_counts(),
                self.action_counts()
            )));
        }
        Ok(())
    }

    /// Pure-action reward vector `r_k(x_-k)`. Player `k`'s own entry of `x`
    /// is ignored.
    pub fn reward_vector(&self, k: usize, x: &StrategyProfile) -> Result<Vec<f64>> {
        self.check_player(k)?;
        self.check_profile(x)?;
        let mut r = vec![0.0; self.players[k].num_actions()];
        self.rewards_into(k, x, &mut r);
        Ok(r)
    }

    /// Writes `r_k(x_-k)` into `out` without shape checks.
    #[inline]
    pub(crate) fn rewards_into(&self, k: usize, x: &StrategyProfile, out: &mut [f64]) {
        out.iter_mut().for_each(|v| *v = 0.0);
        for e in self.edges_from(k) {
            e.payoff.mul_vec_add(x.player(e.to), out);
        }
    }

    /// Expected utility `u_k(x) = x_kᵀ r_k(x_-k)`.
    pub fn utility(&self, x: &StrategyProfile, k: usize) -> Result<f64> {
        let r = self.reward_vector(k, x)?;
        Ok(dot(x.player(k), &r))
    }

    /// Utilities of every player.
    pub fn utilities(&self, x: &StrategyProfile) -> Result<Vec<f64>> {
        self.check_profile(x)?;
        let mut r = Vec::new();
        Ok((0..self.num_players())
            .map(|k| {
                r.resize(self.players[k].num_actions(), 0.0);
                self.rewards_into(k, x, &mut r);
                dot(x.player(k), &r)
            })
            .collect())
    }

    /// Utility of player `k` at the pure profile `s`.
    pub fn pure_utility(&self, k: usize, s: &[usize]) -> f64 {
        self.edges_from(k).map(|e| e.payoff.get(s[k], s[e.to])).sum()
    }

    fn check_player(&self, k: usize) -> Result<()> {
        if k >= self.num_players() {
            return Err(Error::Shape(format!(
                "player index {k} out of range for {} players",
                self.num_players()
            )));
        }
        Ok(())
    }
}

#[inline]
pub(crate) fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

fn check_len(what: &str, got: usize, expected: usize) -> Result<()> {
    if got != expected {
        return Err(Error::Shape(format!("expected {expected} {what}, got {got}")));
    }
    Ok(())
}

fn check_weights(weights: &[f64]) -> Result<()> {
    if let Some((k, w)) = weights.iter().enumerate().find(|(_, w)| !(**w > 0.0 && w.is_finite())) {
        return Err(Error::InvalidGame(format!("weight of player {k} must be positive, got {w}")));
    }
    Ok(())
}

fn check_temperatures(temps: &[f64]) -> Result<()> {
    if let Some((k, t)) = temps.iter().enumerate().find(|(_, t)| !(**t >= 0.0 && t.is_finite())) {
        return Err(Error::InvalidGame(format!(
            "temperature of player {k} must be nonnegative, got {t}"
        )));
    }
    Ok(())
}

/// Incremental constructor for [`PolymatrixGame`].
#[derive(Debug, Default, Clone)]
pub struct GameBuilder {
    name: String,
    players: Vec<Player>,
    edges: Vec<Edge>,
    notes: Vec<String>,
}

impl GameBuilder {
    pub fn name(mut self, name: impl Into<String>) -> Self {
        self.name = name.into();
        self
    }

    pub fn note(mut self, note: impl Into<String>) -> Self {
        self.notes.push(note.into());
        self
    }

    pub fn player(mut self, player: Player) -> Self {
        self.players.push(player);
        self
    }

    /// Adds the undirected edge `[k, l]` with `a_kl` paid to `k` and `a_lk`
    /// paid to `l`.
    pub fn edge(mut self, k: usize, l: usize, a_kl: Matrix, a_lk: Matrix) -> Self {
        self.edges.push(Edge { from: k, to: l, payoff: a_kl });
        self.edges.push(Edge { from: l, to: k, payoff: a_lk });
        self
    }

    /// Adds a single directed edge; [`build`](Self::build) requires its
    /// reverse to be present as well.
    pub fn directed_edge(mut self, from: usize, to: usize, payoff: Matrix) -> Self {
        self.edges.push(Edge { from, to, payoff });
        self
    }

    pub fn build(self) -> Result<PolymatrixGame> {
        let n = self.players.len();
        if n == 0 {
            return Err(Error::InvalidGame("a game needs at least one player".into()));
        }
        for (k, p) in self.players.iter().enumerate() {
            if p.actions.is_empty() {
                return Err(Error::InvalidGame(format!("player {} ({k}) has no actions", p.id)));
            }
            if self.players[..k].iter().any(|q| q.id == p.id) {
                return Err(Error::InvalidGame(format!("duplicate player id {}", p.id)));
            }
        }
        check_weights(&self.players.iter().map(|p| p.weight).collect::<Vec<_>>())?;
        check_temperatures(&self.players.iter().map(|p| p.temperature).collect::<Vec<_>>())?;

        let mut outgoing = vec![Vec::new(); n];
        for (idx, e) in self.edges.iter().enumerate() {
            if e.from >= n || e.to >= n {
                return Err(Error::InvalidGame(format!(
                    "edge {} -> {} references a missing player",
                    e.from, e.to
                )));
            }
            if e.from == e.to {
                return Err(Error::InvalidGame(format!("self-loop on player {}", e.from)));
            }
            let (rows, cols) = (self.players[e.from].num_actions(), self.players[e.to].num_actions());
            if e.payoff.rows() != rows || e.payoff.cols() != cols {
                return Err(Error::Shape(format!(
                    "edge {} -> {}: matrix is {}x{}, expected {rows}x{cols}",
                    self.players[e.from].id,
                    self.players[e.to].id,
                    e.payoff.rows(),
                    e.payoff.cols()
                )));
            }
            if self.edges[..idx].iter().any(|f| f.from == e.from && f.to == e.to) {
                return Err(Error::InvalidGame(format!(
                    "duplicate edge {} -> {}",
                    self.players[e.from].id, self.players[e.to].id
                )));
            }
            outgoing[e.from].push(idx);
        }
        for e in &self.edges {
            if !self.edges.iter().any(|f| f.from == e.to && f.to == e.from) {
                return Err(Error::InvalidGame(format!(
                    "edge {} -> {} has no reverse matrix",
                    self.players[e.from].id, self.players[e.to].id
                )));
            }
        }
        Ok(PolymatrixGame {
            name: self.name,
            players: self.players,
            edges: self.edges,
            outgoing,
            notes: self.notes,
        })
    }
}
