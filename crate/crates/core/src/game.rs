//! Finite strategic games, strategy profiles and the lattice of restrictions.

use alloc::format;
use alloc::string::{String, ToString};
use alloc::vec::Vec;
use core::cmp::Ordering;
use core::fmt;

use num_rational::Ratio;
use thiserror::Error;

/// Exact payoff value.
pub type Payoff = Ratio<i64>;

/// Largest number of strategies a single player may have.
pub const MAX_STRATEGIES: usize = 64;

/// Largest number of strategy profiles a game may have.
pub const MAX_PROFILES: usize = 1 << 20;

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum GameError {
    #[error("a game needs at least one player")]
    NoPlayers,
    #[error("{declared} players declared but {found} strategy lists given")]
    StrategyListCount { declared: usize, found: usize },
    #[error("{} player {player} has no strategies", at(*.line))]
    EmptyStrategySet { player: usize, line: Option<usize> },
    #[error("{} duplicate strategy `{name}` for player {player}", at(*.line))]
    DuplicateStrategy { player: usize, name: String, line: Option<usize> },
    #[error("player {player} has {count} strategies, at most {MAX_STRATEGIES} are supported")]
    TooManyStrategies { player: usize, count: usize },
    #[error("game has more than {MAX_PROFILES} strategy profiles")]
    TooManyProfiles,
    #[error("{} unknown strategy `{name}` for player {player}", at(*.line))]
    UnknownStrategy { player: usize, name: String, line: Option<usize> },
    #[error("{} expected {expected} entries, found {found}", at(*.line))]
    Arity { expected: usize, found: usize, line: Option<usize> },
    #[error("{} duplicate payoff entry for profile {profile}", at(*.line))]
    DuplicatePayoff { profile: String, line: Option<usize> },
    #[error("missing payoff for profile {profile}")]
    MissingPayoff { profile: String },
    #[error("player index {player} out of range (game has {players} players)")]
    PlayerOutOfRange { player: usize, players: usize },
    #[error("restrictions belong to games of different shapes")]
    ShapeMismatch,
}

fn at(line: Option<usize>) -> String {
    match line {
        Some(l) => format!("line {l}:"),
        None => "game:".to_string(),
    }
}

/// The strategies declared for one player, with the source line if known.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct StrategyDecl {
    pub names: Vec<String>,
    pub line: Option<usize>,
}

/// One `payoff` entry: strategy names for every player and one value per player.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct PayoffEntry {
    pub profile: Vec<String>,
    pub values: Vec<Payoff>,
    pub line: Option<usize>,
}

/// A parsed but unvalidated game description.
#[derive(Debug, Clone, PartialEq, Eq, Default)]
pub struct GameSpec {
    pub players: usize,
    pub strategies: Vec<StrategyDecl>,
    pub payoffs: Vec<PayoffEntry>,
}

/// A strategy profile: one strategy index per player.
#[derive(Debug, Clone, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct Profile(Vec<usize>);

impl Profile {
    pub fn new(strategies: Vec<usize>) -> Self {
        Profile(strategies)
    }

    pub fn as_slice(&self) -> &[usize] {
        &self.0
    }

    pub fn component(&self, player: usize) -> usize {
        self.0[player]
    }

    pub fn players(&self) -> usize {
        self.0.len()
    }

    /// `(s_i, t_{-i})`: this profile with player `player` switched to `strategy`.
    pub fn with(&self, player: usize, strategy: usize) -> Profile {
        let mut v = self.0.clone();
        v[player] = strategy;
        Profile(v)
    }
}

/// A subset of one player's strategies, as a bitmask over the player's strategy indices.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub struct StrategySet {
    bits: u64,
    universe: u8,
}

impl StrategySet {
    pub fn empty(universe: usize) -> Self {
        assert!(universe <= MAX_STRATEGIES);
        StrategySet { bits: 0, universe: universe as u8 }
    }

    pub fn full(universe: usize) -> Self {
        assert!(universe <= MAX_STRATEGIES);
        let bits = if universe == 64 { u64::MAX } else { (1u64 << universe) - 1 };
        StrategySet { bits, universe: universe as u8 }
    }

    pub fn from_indices(universe: usize, indices: impl IntoIterator<Item = usize>) -> Self {
        let mut s = StrategySet::empty(universe);
        for i in indices {
            s.insert(i);
        }
        s
    }

    pub(crate) fn from_bits(universe: usize, bits: u64) -> Self {
        StrategySet { bits: bits & StrategySet::full(universe).bits, universe: universe as u8 }
    }

    pub fn bits(&self) -> u64 {
        self.bits
    }

    pub fn universe(&self) -> usize {
        self.universe as usize
    }

    pub fn insert(&mut self, strategy: usize) {
        assert!(strategy < self.universe(), "strategy index out of range");
        self.bits |= 1 << strategy;
    }

    pub fn remove(&mut self, strategy: usize) {
        if strategy < self.universe() {
            self.bits &= !(1 << strategy);
        }
    }

    pub fn contains(&self, strategy: usize) -> bool {
        strategy < self.universe() && self.bits & (1 << strategy) != 0
    }

    pub fn len(&self) -> usize {
        self.bits.count_ones() as usize
    }

    pub fn is_empty(&self) -> bool {
        self.bits == 0
    }

    pub fn is_subset(&self, other: &StrategySet) -> bool {
        self.bits & !other.bits == 0
    }

    pub fn intersection(&self, other: &StrategySet) -> StrategySet {
        StrategySet { bits: self.bits & other.bits, universe: self.universe }
    }

    pub fn union(&self, other: &StrategySet) -> StrategySet {
        StrategySet { bits: self.bits | other.bits, universe: self.universe }
    }

    pub fn iter(&self) -> impl Iterator<Item = usize> + '_ {
        (0..self.universe()).filter(move |&s| self.contains(s))
    }
}

/// A restriction `(S_1, …, S_n)` with `S_i ⊆ T_i`; components may be empty.
///
/// Restrictions are partially ordered by component-wise inclusion; `partial_cmp`
/// returns `None` for incomparable restrictions and for restrictions of games
/// with different shapes.
#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct Restriction {
    parts: Vec<StrategySet>,
}

/// Result of [`lattice_ops`].
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct LatticeOps {
    pub leq: bool,
    pub meet: Restriction,
    pub join: Restriction,
}

impl Restriction {
    pub fn new(parts: Vec<StrategySet>) -> Self {
        Restriction { parts }
    }

    pub fn full(shape: &[usize]) -> Self {
        Restriction { parts: shape.iter().map(|&n| StrategySet::full(n)).collect() }
    }

    pub fn empty(shape: &[usize]) -> Self {
        Restriction { parts: shape.iter().map(|&n| StrategySet::empty(n)).collect() }
    }

    pub fn players(&self) -> usize {
        self.parts.len()
    }

    pub fn part(&self, player: usize) -> &StrategySet {
        &self.parts[player]
    }

    pub fn part_mut(&mut self, player: usize) -> &mut StrategySet {
        &mut self.parts[player]
    }

    pub fn parts(&self) -> &[StrategySet] {
        &self.parts
    }

    pub fn shape(&self) -> Vec<usize> {
        self.parts.iter().map(StrategySet::universe).collect()
    }

    pub fn same_shape(&self, other: &Restriction) -> bool {
        self.parts.len() == other.parts.len()
            && self.parts.iter().zip(&other.parts).all(|(a, b)| a.universe == b.universe)
    }

    /// Whether every component of `profile` lies in the matching component.
    pub fn contains_profile(&self, profile: &Profile) -> bool {
        self.parts.iter().zip(profile.as_slice()).all(|(s, &x)| s.contains(x))
    }

    pub fn leq(&self, other: &Restriction) -> Result<bool, GameError> {
        if !self.same_shape(other) {
            return Err(GameError::ShapeMismatch);
        }
        Ok(self.subset_unchecked(other))
    }

    pub fn meet(&self, other: &Restriction) -> Result<Restriction, GameError> {
        if !self.same_shape(other) {
            return Err(GameError::ShapeMismatch);
        }
        Ok(self.zip_with(other, StrategySet::intersection))
    }

    pub fn join(&self, other: &Restriction) -> Result<Restriction, GameError> {
        if !self.same_shape(other) {
            return Err(GameError::ShapeMismatch);
        }
        Ok(self.zip_with(other, StrategySet::union))
    }

    pub(crate) fn subset_unchecked(&self, other: &Restriction) -> bool {
        self.parts.iter().zip(&other.parts).all(|(a, b)| a.is_subset(b))
    }

    pub(crate) fn meet_unchecked(&self, other: &Restriction) -> Restriction {
        self.zip_with(other, StrategySet::intersection)
    }

    fn zip_with(
        &self,
        other: &Restriction,
        f: impl Fn(&StrategySet, &StrategySet) -> StrategySet,
    ) -> Restriction {
        Restriction { parts: self.parts.iter().zip(&other.parts).map(|(a, b)| f(a, b)).collect() }
    }
}

impl PartialOrd for Restriction {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        if !self.same_shape(other) {
            return None;
        }
        match (self.subset_unchecked(other), other.subset_unchecked(self)) {
            (true, true) => Some(Ordering::Equal),
            (true, false) => Some(Ordering::Less),
            (false, true) => Some(Ordering::Greater),
            (false, false) => None,
        }
    }
}

/// `leq`, `meet` and `join` of two restrictions of the same game.
pub fn lattice_ops(a: &Restriction, b: &Restriction) -> Result<LatticeOps, GameError> {
    Ok(LatticeOps { leq: a.leq(b)?, meet: a.meet(b)?, join: a.join(b)? })
}

/// The complete lattice of restrictions of a game shape, with a dense encoding.
///
/// A restriction is encoded as the concatenation of its component bitmasks,
/// player 1 in the low bits.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct RestrictionLattice {
    shape: Vec<usize>,
    offsets: Vec<u32>,
    bits: u32,
}

impl RestrictionLattice {
    pub fn new(shape: &[usize]) -> Self {
        let mut offsets = Vec::with_capacity(shape.len());
        let mut acc = 0u32;
        for &n in shape {
            offsets.push(acc);
            acc += n as u32;
        }
        RestrictionLattice { shape: shape.to_vec(), offsets, bits: acc }
    }

    pub fn shape(&self) -> &[usize] {
        &self.shape
    }

    /// Total number of strategies, i.e. the height of the lattice.
    pub fn height(&self) -> usize {
        self.bits as usize
    }

    /// Number of elements, or `None` if it does not fit in a `u64`.
    pub fn size(&self) -> Option<u64> {
        1u64.checked_shl(self.bits)
    }

    pub fn top(&self) -> Restriction {
        Restriction::full(&self.shape)
    }

    pub fn bottom(&self) -> Restriction {
        Restriction::empty(&self.shape)
    }

    pub fn encode(&self, r: &Restriction) -> u64 {
        r.parts.iter().zip(&self.offsets).fold(0, |acc, (s, &off)| acc | (s.bits << off))
    }

    pub fn decode(&self, code: u64) -> Restriction {
        Restriction {
            parts: self
                .shape
                .iter()
                .zip(&self.offsets)
                .map(|(&n, &off)| StrategySet::from_bits(n, code >> off))
                .collect(),
        }
    }

    /// All elements in encoding order. Panics if the lattice is not enumerable.
    pub fn iter(&self) -> impl Iterator<Item = Restriction> + '_ {
        let size = self.size().expect("lattice too large to enumerate");
        (0..size).map(move |c| self.decode(c))
    }

    /// Restrictions covering `r` from above: `r` plus one more strategy.
    pub fn upper_covers<'a>(&'a self, r: &'a Restriction) -> impl Iterator<Item = Restriction> + 'a {
        (0..self.shape.len()).flat_map(move |i| {
            (0..self.shape[i]).filter(move |&s| !r.parts[i].contains(s)).map(move |s| {
                let mut up = r.clone();
                up.parts[i].insert(s);
                up
            })
        })
    }
}

/// A validated finite strategic game with exact payoffs.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Game {
    names: Vec<Vec<String>>,
    strides: Vec<usize>,
    profiles: usize,
    // payoffs[profile * players + player]
    payoffs: Vec<Payoff>,
}

impl Game {
    /// Validates a parsed description. Strategies keep their listed order.
    pub fn build(spec: &GameSpec) -> Result<Game, GameError> {
        if spec.players == 0 {
            return Err(GameError::NoPlayers);
        }
        if spec.strategies.len() != spec.players {
            return Err(GameError::StrategyListCount {
                declared: spec.players,
                found: spec.strategies.len(),
            });
        }
        let n = spec.players;
        for (i, decl) in spec.strategies.iter().enumerate() {
            if decl.names.is_empty() {
                return Err(GameError::EmptyStrategySet { player: i + 1, line: decl.line });
            }
            if decl.names.len() > MAX_STRATEGIES {
                return Err(GameError::TooManyStrategies { player: i + 1, count: decl.names.len() });
            }
            for (k, name) in decl.names.iter().enumerate() {
                if decl.names[..k].contains(name) {
                    return Err(GameError::DuplicateStrategy {
                        player: i + 1,
                        name: name.clone(),
                        line: decl.line,
                    });
                }
            }
        }
        let names: Vec<Vec<String>> = spec.strategies.iter().map(|d| d.names.clone()).collect();
        let mut strides = alloc::vec![1usize; n];
        let mut profiles = 1usize;
        for i in (0..n).rev() {
            strides[i] = profiles;
            profiles = profiles
                .checked_mul(names[i].len())
                .filter(|&p| p <= MAX_PROFILES)
                .ok_or(GameError::TooManyProfiles)?;
        }
        let mut table: Vec<Option<Payoff>> = alloc::vec![None; profiles * n];
        for entry in &spec.payoffs {
            if entry.profile.len() != n {
                return Err(GameError::Arity { expected: n, found: entry.profile.len(), line: entry.line });
            }
            if entry.values.len() != n {
                return Err(GameError::Arity { expected: n, found: entry.values.len(), line: entry.line });
            }
            let mut index = 0;
            for (i, name) in entry.profile.iter().enumerate() {
                let s = names[i].iter().position(|t| t == name).ok_or_else(|| {
                    GameError::UnknownStrategy { player: i + 1, name: name.clone(), line: entry.line }
                })?;
                index += s * strides[i];
            }
            if table[index * n].is_some() {
                return Err(GameError::DuplicatePayoff {
                    profile: format!("({})", entry.profile.join(", ")),
                    line: entry.line,
                });
            }
            for (i, v) in entry.values.iter().enumerate() {
                table[index * n + i] = Some(*v);
            }
        }
        let mut payoffs = Vec::with_capacity(table.len());
        for (k, v) in table.into_iter().enumerate() {
            match v {
                Some(v) => payoffs.push(v),
                None => {
                    let profile = k / n;
                    let labels: Vec<&str> =
                        (0..n).map(|i| names[i][(profile / strides[i]) % names[i].len()].as_str()).collect();
                    return Err(GameError::MissingPayoff { profile: format!("({})", labels.join(", ")) });
                }
            }
        }
        Ok(Game { names, strides, profiles, payoffs })
    }

    /// Builds a game from integer payoffs listed in row-major profile order
    /// (the last player's strategy varies fastest).
    pub fn from_integers(strategies: &[&[&str]], payoffs: &[&[i64]]) -> Result<Game, GameError> {
        let n = strategies.len();
        let shape: Vec<usize> = strategies.iter().map(|s| s.len()).collect();
        let mut spec = GameSpec {
            players: n,
            strategies: strategies
                .iter()
                .map(|s| StrategyDecl { names: s.iter().map(|x| x.to_string()).collect(), line: None })
                .collect(),
            payoffs: Vec::new(),
        };
        let mut idx = alloc::vec![0usize; n];
        for row in payoffs {
            spec.payoffs.push(PayoffEntry {
                profile: (0..n).map(|i| strategies[i][idx[i]].to_string()).collect(),
                values: row.iter().map(|&v| Payoff::from_integer(v)).collect(),
                line: None,
            });
            // odometer, last player fastest
            for i in (0..n).rev() {
                idx[i] += 1;
                if idx[i] < shape[i] {
                    break;
                }
                idx[i] = 0;
            }
        }
        Game::build(&spec)
    }

    pub fn players(&self) -> usize {
        self.names.len()
    }

    pub fn shape(&self) -> Vec<usize> {
        self.names.iter().map(Vec::len).collect()
    }

    pub fn strategies(&self, player: usize) -> &[String] {
        &self.names[player]
    }

    pub fn strategy_count(&self, player: usize) -> usize {
        self.names[player].len()
    }

    pub fn strategy_index(&self, player: usize, name: &str) -> Option<usize> {
        self.names.get(player)?.iter().position(|s| s == name)
    }

    pub fn strategy_name(&self, player: usize, strategy: usize) -> &str {
        &self.names[player][strategy]
    }

    pub fn total_strategies(&self) -> usize {
        self.names.iter().map(Vec::len).sum()
    }

    pub fn profile_count(&self) -> usize {
        self.profiles
    }

    pub fn lattice(&self) -> RestrictionLattice {
        RestrictionLattice::new(&self.shape())
    }

    /// The top element `(T_1, …, T_n)`.
    pub fn full_restriction(&self) -> Restriction {
        Restriction::full(&self.shape())
    }

    pub fn empty_restriction(&self) -> Restriction {
        Restriction::empty(&self.shape())
    }

    /// Builds a restriction from strategy names, one list per player.
    pub fn restriction(&self, parts: &[&[&str]]) -> Result<Restriction, GameError> {
        if parts.len() != self.players() {
            return Err(GameError::Arity { expected: self.players(), found: parts.len(), line: None });
        }
        let mut r = self.empty_restriction();
        for (i, names) in parts.iter().enumerate() {
            for name in names.iter() {
                let s = self.strategy_index(i, name).ok_or_else(|| GameError::UnknownStrategy {
                    player: i + 1,
                    name: name.to_string(),
                    line: None,
                })?;
                r.part_mut(i).insert(s);
            }
        }
        Ok(r)
    }

    pub fn profile(&self, names: &[&str]) -> Result<Profile, GameError> {
        if names.len() != self.players() {
            return Err(GameError::Arity { expected: self.players(), found: names.len(), line: None });
        }
        names
            .iter()
            .enumerate()
            .map(|(i, name)| {
                self.strategy_index(i, name).ok_or_else(|| GameError::UnknownStrategy {
                    player: i + 1,
                    name: name.to_string(),
                    line: None,
                })
            })
            .collect::<Result<Vec<_>, _>>()
            .map(Profile)
    }

    pub fn profile_index(&self, profile: &Profile) -> usize {
        profile.as_slice().iter().zip(&self.strides).map(|(s, k)| s * k).sum()
    }

    pub fn profile_at(&self, index: usize) -> Profile {
        Profile((0..self.players()).map(|i| self.component_at(index, i)).collect())
    }

    pub fn profiles(&self) -> impl Iterator<Item = Profile> + '_ {
        (0..self.profiles).map(|k| self.profile_at(k))
    }

    #[inline]
    pub fn component_at(&self, index: usize, player: usize) -> usize {
        (index / self.strides[player]) % self.names[player].len()
    }

    /// Index of the profile obtained from `index` by switching `player` to `strategy`.
    #[inline]
    pub fn deviate_at(&self, index: usize, player: usize, strategy: usize) -> usize {
        let cur = self.component_at(index, player);
        index - cur * self.strides[player] + strategy * self.strides[player]
    }

    #[inline]
    pub fn payoff_at(&self, player: usize, index: usize) -> Payoff {
        self.payoffs[index * self.players() + player]
    }

    pub fn payoff(&self, player: usize, profile: &Profile) -> Payoff {
        self.payoff_at(player, self.profile_index(profile))
    }

    /// `s ≥_i t` in the total preorder induced by player `i`'s payoffs.
    pub fn prefers_weakly(&self, player: usize, s: &Profile, t: &Profile) -> bool {
        self.payoff(player, s) >= self.payoff(player, t)
    }

    pub fn check_player(&self, player: usize) -> Result<(), GameError> {
        if player < self.players() {
            Ok(())
        } else {
            Err(GameError::PlayerOutOfRange { player: player + 1, players: self.players() })
        }
    }

    /// Renders a restriction as `({U, D}, {L})`.
    pub fn show_restriction(&self, r: &Restriction) -> String {
        let parts: Vec<String> = (0..self.players())
            .map(|i| {
                let names: Vec<&str> = r.part(i).iter().map(|s| self.strategy_name(i, s)).collect();
                format!("{{{}}}", names.join(", "))
            })
            .collect();
        format!("({})", parts.join(", "))
    }

    pub fn show_profile(&self, p: &Profile) -> String {
        let names: Vec<&str> = (0..self.players()).map(|i| self.strategy_name(i, p.component(i))).collect();
        format!("({})", names.join(", "))
    }

    pub fn to_spec(&self) -> GameSpec {
        GameSpec {
            players: self.players(),
            strategies: self.names.iter().map(|n| StrategyDecl { names: n.clone(), line: None }).collect(),
            payoffs: (0..self.profiles)
                .map(|k| PayoffEntry {
                    profile: (0..self.players())
                        .map(|i| self.names[i][self.component_at(k, i)].clone())
                        .collect(),
                    values: (0..self.players()).map(|i| self.payoff_at(i, k)).collect(),
                    line: None,
                })
                .collect(),
        }
    }
}

impl fmt::Display for Restriction {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str("(")?;
        for (i, p) in self.parts.iter().enumerate() {
            if i > 0 {
                f.write_str(", ")?;
            }
            f.write_str("{")?;
            for (k, s) in p.iter().enumerate() {
                if k > 0 {
                    f.write_str(", ")?;
                }
                write!(f, "{s}")?;
            }
            f.write_str("}")?;
        }
        f.write_str(")")
    }
}
