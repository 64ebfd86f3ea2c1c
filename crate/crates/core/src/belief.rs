//! Finite belief models: states, the strategy each player chooses at each state,
//! and possibility correspondences.
//!
//! At state `ω` player `i` believes an event `E` iff `P_i(ω) ⊆ E`. Possibility
//! sets may be empty, in which case every event is believed there.

use alloc::collections::BTreeSet;
use alloc::string::String;
use alloc::vec::Vec;

use thiserror::Error;

use crate::game::{Game, Profile, Restriction};

/// Largest number of states a model may have.
pub const MAX_STATES: usize = 64;

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum BeliefError {
    #[error("Ω must be non-empty")]
    NoStates,
    #[error("{0} states given, at most {MAX_STATES} are supported")]
    TooManyStates(usize),
    #[error("duplicate state `{0}`")]
    DuplicateState(String),
    #[error("unknown state `{0}`")]
    UnknownState(String),
    #[error("player {player} has no strategy `{name}`")]
    UnknownStrategy { player: usize, name: String },
    #[error("expected data for {expected} players, found {found}")]
    PlayerCount { expected: usize, found: usize },
    #[error("player {player}: expected an entry for each of the {expected} states, found {found}")]
    StateCount { player: usize, expected: usize, found: usize },
    #[error("player {player} at state `{state}` refers to states outside Ω")]
    PossibilityOutOfRange { player: usize, state: String },
}

/// A set of states, as a bitmask over the model's state order.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Default)]
pub struct Event(u64);

impl Event {
    pub const EMPTY: Event = Event(0);

    pub fn from_bits(bits: u64) -> Self {
        Event(bits)
    }

    pub fn full(states: usize) -> Self {
        if states >= 64 {
            Event(u64::MAX)
        } else {
            Event((1u64 << states) - 1)
        }
    }

    pub fn singleton(state: usize) -> Self {
        Event(1 << state)
    }

    pub fn from_states(states: impl IntoIterator<Item = usize>) -> Self {
        Event(states.into_iter().fold(0, |acc, s| acc | (1 << s)))
    }

    pub fn bits(&self) -> u64 {
        self.0
    }

    pub fn contains(&self, state: usize) -> bool {
        state < 64 && self.0 & (1 << state) != 0
    }

    pub fn is_empty(&self) -> bool {
        self.0 == 0
    }

    pub fn len(&self) -> usize {
        self.0.count_ones() as usize
    }

    pub fn is_subset(&self, other: Event) -> bool {
        self.0 & !other.0 == 0
    }

    pub fn intersection(self, other: Event) -> Event {
        Event(self.0 & other.0)
    }

    pub fn union(self, other: Event) -> Event {
        Event(self.0 | other.0)
    }

    /// Complement relative to the first `states` states.
    pub fn complement(self, states: usize) -> Event {
        Event(!self.0 & Event::full(states).0)
    }

    pub fn states(&self) -> impl Iterator<Item = usize> {
        let bits = self.0;
        (0..64).filter(move |s| bits & (1 << s) != 0)
    }
}

/// `(Ω, s̄_1, …, s̄_n, P_1, …, P_n)` over a game.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct BeliefModel<'g> {
    game: &'g Game,
    states: Vec<String>,
    // strategy_of[player][state]
    strategy_of: Vec<Vec<usize>>,
    // possible[player][state]
    possible: Vec<Vec<Event>>,
}

/// The chain `B_1(E), B_2(E), …` of distinct values and `CB(E)`, the intersection of all of them.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct CommonBelief {
    pub cb: Event,
    pub chain: Vec<Event>,
}

impl<'g> BeliefModel<'g> {
    pub fn new(
        game: &'g Game,
        states: Vec<String>,
        strategy_of: Vec<Vec<usize>>,
        possible: Vec<Vec<Event>>,
    ) -> Result<Self, BeliefError> {
        let k = states.len();
        if k == 0 {
            return Err(BeliefError::NoStates);
        }
        if k > MAX_STATES {
            return Err(BeliefError::TooManyStates(k));
        }
        for (w, name) in states.iter().enumerate() {
            if states[..w].contains(name) {
                return Err(BeliefError::DuplicateState(name.clone()));
            }
        }
        let n = game.players();
        for table in [strategy_of.len(), possible.len()] {
            if table != n {
                return Err(BeliefError::PlayerCount { expected: n, found: table });
            }
        }
        let omega = Event::full(k);
        for i in 0..n {
            for len in [strategy_of[i].len(), possible[i].len()] {
                if len != k {
                    return Err(BeliefError::StateCount { player: i + 1, expected: k, found: len });
                }
            }
            for w in 0..k {
                let s = strategy_of[i][w];
                if s >= game.strategy_count(i) {
                    return Err(BeliefError::UnknownStrategy { player: i + 1, name: alloc::format!("#{s}") });
                }
                if !possible[i][w].is_subset(omega) {
                    return Err(BeliefError::PossibilityOutOfRange {
                        player: i + 1,
                        state: states[w].clone(),
                    });
                }
            }
        }
        Ok(BeliefModel { game, states, strategy_of, possible })
    }

    /// A model with states named `w1, w2, …`.
    pub fn with_default_names(
        game: &'g Game,
        strategy_of: Vec<Vec<usize>>,
        possible: Vec<Vec<Event>>,
    ) -> Result<Self, BeliefError> {
        let k = strategy_of.first().map_or(0, Vec::len);
        let states = (1..=k).map(|w| alloc::format!("w{w}")).collect();
        Self::new(game, states, strategy_of, possible)
    }

    pub fn game(&self) -> &'g Game {
        self.game
    }

    pub fn state_count(&self) -> usize {
        self.states.len()
    }

    pub fn state_names(&self) -> &[String] {
        &self.states
    }

    pub fn state_name(&self, state: usize) -> &str {
        &self.states[state]
    }

    pub fn state_index(&self, name: &str) -> Option<usize> {
        self.states.iter().position(|s| s == name)
    }

    /// `Ω` as an event.
    pub fn omega(&self) -> Event {
        Event::full(self.states.len())
    }

    /// `s̄_i(ω)`.
    pub fn strategy_of(&self, player: usize, state: usize) -> usize {
        self.strategy_of[player][state]
    }

    /// `P_i(ω)`.
    pub fn possible(&self, player: usize, state: usize) -> Event {
        self.possible[player][state]
    }

    /// The profile actually played at `state`.
    pub fn profile_at(&self, state: usize) -> Profile {
        Profile::new((0..self.game.players()).map(|i| self.strategy_of[i][state]).collect())
    }

    pub fn complement(&self, e: Event) -> Event {
        e.complement(self.states.len())
    }

    /// `G_E`: for each player, the strategies chosen somewhere in `E`.
    pub fn game_of_event(&self, e: Event) -> Restriction {
        let mut r = self.game.empty_restriction();
        for w in e.states().take_while(|&w| w < self.states.len()) {
            for i in 0..self.game.players() {
                r.part_mut(i).insert(self.strategy_of[i][w]);
            }
        }
        r
    }

    /// `{ω | P_i(ω) ⊆ E}`.
    pub fn believes(&self, player: usize, e: Event) -> Event {
        Event::from_states((0..self.states.len()).filter(|&w| self.possible[player][w].is_subset(e)))
    }

    /// `B_1(E)`: the event that every player believes `E`.
    pub fn everyone_believes(&self, e: Event) -> Event {
        (0..self.game.players()).fold(self.omega(), |acc, i| acc.intersection(self.believes(i, e)))
    }

    /// `CB(E) = ∩_{m>0} B_m(E)` with `B_{m+1}(E) = B_1(B_m(E))`.
    ///
    /// The sequence `B_m(E)` lives in a finite set, so it eventually revisits a
    /// value; from then on it cycles and contributes no new events to the
    /// intersection.
    pub fn common_belief_iterative(&self, e: Event) -> CommonBelief {
        let mut chain = Vec::new();
        let mut seen = BTreeSet::new();
        let mut cur = self.everyone_believes(e);
        let mut cb = self.omega();
        while seen.insert(cur) {
            chain.push(cur);
            cb = cb.intersection(cur);
            cur = self.everyone_believes(cur);
        }
        CommonBelief { cb, chain }
    }

    /// Whether `ω ∈ P_i(ω)` for every player and state (knowledge rather than belief).
    pub fn is_truthful(&self) -> bool {
        (0..self.game.players()).all(|i| (0..self.states.len()).all(|w| self.possible[i][w].contains(w)))
    }
}
