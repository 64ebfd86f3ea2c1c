//! Test corpus, belief-model enumeration and brute-force reference
//! implementations.
//!
//! The `naive_*` functions deliberately avoid the evaluator in [`crate::lo`] and
//! the operators module: they work on plain profile vectors and maps so that a
//! disagreement points at one side.

use alloc::collections::BTreeMap;
use alloc::string::{String, ToString};
use alloc::vec;
use alloc::vec::Vec;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use thiserror::Error;

use crate::belief::{BeliefModel, Event, MAX_STATES};
use crate::game::{Game, Profile, Restriction};
use crate::lo::{FormulaO, Term};

/// Most models an exhaustive enumeration will produce.
pub const ENUMERATION_LIMIT: u128 = 1 << 22;

/// Seed for the generated part of [`standard_corpus`].
pub const CORPUS_SEED: u64 = 0x5eed_0001;

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum OracleError {
    #[error("at least one state is required")]
    NoStates,
    #[error("{requested} states exceed the maximum of {MAX_STATES}")]
    TooManyStates { requested: usize },
    #[error("enumerating models with up to {max_states} states would visit {} models (limit {ENUMERATION_LIMIT})", display_count(.count))]
    TooManyModels { max_states: usize, count: Option<u128> },
}

fn display_count(count: &Option<u128>) -> String {
    match count {
        Some(c) => c.to_string(),
        None => "more than 2^128".to_string(),
    }
}

/// Coordination game: `L`/`R` for both players, `1,1` on the diagonal.
pub fn fig1_left() -> Game {
    Game::from_integers(&[&["L", "R"], &["L", "R"]], &[&[1, 1], &[0, 0], &[0, 0], &[1, 1]])
        .expect("valid game")
}

pub fn fig1_right() -> Game {
    Game::from_integers(&[&["U", "D"], &["L", "R"]], &[&[1, 1], &[1, 0], &[0, 0], &[0, 1]])
        .expect("valid game")
}

/// The game `H` separating local from global dominance.
pub fn fig2() -> Game {
    Game::from_integers(
        &[&["U", "M", "D"], &["L", "R"]],
        &[&[2, 1], &[0, 0], &[0, 1], &[2, 0], &[1, 0], &[1, 2]],
    )
    .expect("valid game")
}

pub fn bundled_games() -> Vec<(String, Game)> {
    vec![
        ("fig1_left".to_string(), fig1_left()),
        ("fig1_right".to_string(), fig1_right()),
        ("fig2".to_string(), fig2()),
    ]
}

/// A two-player game with the given shape and payoffs drawn from `0..=3`.
pub fn random_game(rows: usize, cols: usize, rng: &mut impl Rng) -> Game {
    let names =
        |prefix: char, k: usize| -> Vec<String> { (1..=k).map(|j| alloc::format!("{prefix}{j}")).collect() };
    let (r, c) = (names('r', rows), names('c', cols));
    let r: Vec<&str> = r.iter().map(String::as_str).collect();
    let c: Vec<&str> = c.iter().map(String::as_str).collect();
    let payoffs: Vec<[i64; 2]> =
        (0..rows * cols).map(|_| [rng.gen_range(0..=3), rng.gen_range(0..=3)]).collect();
    let rows_ref: Vec<&[i64]> = payoffs.iter().map(|p| &p[..]).collect();
    Game::from_integers(&[&r, &c], &rows_ref).expect("valid game")
}

/// One seeded game for every shape from 1×1 to 3×3.
pub fn generated_games(seed: u64) -> Vec<(String, Game)> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut out = Vec::new();
    for rows in 1..=3 {
        for cols in 1..=3 {
            out.push((alloc::format!("gen_{rows}x{cols}"), random_game(rows, cols, &mut rng)));
        }
    }
    out
}

/// The bundled games followed by [`generated_games`] with [`CORPUS_SEED`].
pub fn standard_corpus() -> Vec<(String, Game)> {
    let mut games = bundled_games();
    games.extend(generated_games(CORPUS_SEED));
    games
}

/// `|T|^k · 2^(k·k·n)`: strategy assignments times possibility maps.
pub fn belief_model_count(g: &Game, states: usize) -> Option<u128> {
    let profiles = (g.profile_count() as u128).checked_pow(states as u32)?;
    let bits = states.checked_mul(states)?.checked_mul(g.players())?;
    let maps = 1u128.checked_shl(u32::try_from(bits).ok()?)?;
    profiles.checked_mul(maps)
}

fn check_states(max_states: usize) -> Result<(), OracleError> {
    if max_states == 0 {
        return Err(OracleError::NoStates);
    }
    if max_states > MAX_STATES {
        return Err(OracleError::TooManyStates { requested: max_states });
    }
    Ok(())
}

/// Every belief model for `g` with `1..=max_states` states, in a fixed order.
pub fn enumerate_belief_models(g: &Game, max_states: usize) -> Result<BeliefModels<'_>, OracleError> {
    check_states(max_states)?;
    let mut total: Option<u128> = Some(0);
    for k in 1..=max_states {
        total = total.and_then(|t| t.checked_add(belief_model_count(g, k)?));
    }
    match total {
        Some(t) if t <= ENUMERATION_LIMIT => {}
        count => return Err(OracleError::TooManyModels { max_states, count }),
    }
    Ok(BeliefModels { game: g, max_states, states: 1, index: 0 })
}

/// Iterator returned by [`enumerate_belief_models`].
#[derive(Debug, Clone)]
pub struct BeliefModels<'g> {
    game: &'g Game,
    max_states: usize,
    states: usize,
    index: u128,
}

impl<'g> Iterator for BeliefModels<'g> {
    type Item = BeliefModel<'g>;

    fn next(&mut self) -> Option<Self::Item> {
        let g = self.game;
        loop {
            if self.states > self.max_states {
                return None;
            }
            let count = belief_model_count(g, self.states)?;
            if self.index < count {
                break;
            }
            self.states += 1;
            self.index = 0;
        }
        let k = self.states;
        let n = g.players();
        let maps = 1u128 << (k * k * n);
        let (mut assignment, mut possibility) = (self.index / maps, self.index % maps);
        self.index += 1;

        let mut strategy_of = vec![vec![0; k]; n];
        for w in 0..k {
            let profile = g.profile_at((assignment % g.profile_count() as u128) as usize);
            assignment /= g.profile_count() as u128;
            for (i, row) in strategy_of.iter_mut().enumerate() {
                row[w] = profile.component(i);
            }
        }
        let mask = (1u128 << k) - 1;
        let mut possible = vec![vec![Event::EMPTY; k]; n];
        for row in possible.iter_mut() {
            for cell in row.iter_mut() {
                *cell = Event::from_bits((possibility & mask) as u64);
                possibility >>= k;
            }
        }
        Some(BeliefModel::with_default_names(g, strategy_of, possible).expect("enumerated models are valid"))
    }
}

/// A uniformly drawn model with exactly `states` states.
pub fn random_belief_model<'g>(g: &'g Game, states: usize, rng: &mut impl Rng) -> BeliefModel<'g> {
    let n = g.players();
    let strategy_of =
        (0..n).map(|i| (0..states).map(|_| rng.gen_range(0..g.strategy_count(i))).collect()).collect();
    let full = Event::full(states).bits();
    let possible =
        (0..n).map(|_| (0..states).map(|_| Event::from_bits(rng.gen::<u64>() & full)).collect()).collect();
    BeliefModel::with_default_names(g, strategy_of, possible).expect("sampled models are valid")
}

/// `samples` seeded draws; the state count is uniform in `1..=max_states`.
pub fn sample_belief_models(
    g: &Game,
    max_states: usize,
    samples: usize,
    seed: u64,
) -> Result<impl Iterator<Item = BeliefModel<'_>>, OracleError> {
    check_states(max_states)?;
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    Ok((0..samples).map(move |_| {
        let k = rng.gen_range(1..=max_states);
        random_belief_model(g, k, &mut rng)
    }))
}

/// Every `(context, focus)` pair for `g`: the optimality models over it.
pub fn optimality_models(g: &Game) -> impl Iterator<Item = (Restriction, Profile)> + '_ {
    let lattice = g.lattice();
    let contexts: Vec<Restriction> = lattice.iter().collect();
    contexts.into_iter().flat_map(move |c| g.profiles().map(move |p| (c.clone(), p)))
}

// Mixed-radix successor on a profile vector; false after the last profile.
fn advance(profile: &mut [usize], shape: &[usize]) -> bool {
    for i in (0..profile.len()).rev() {
        profile[i] += 1;
        if profile[i] < shape[i] {
            return true;
        }
        profile[i] = 0;
    }
    false
}

fn all_profiles(shape: &[usize]) -> Vec<Vec<usize>> {
    let mut out = Vec::new();
    let mut p = vec![0; shape.len()];
    loop {
        out.push(p.clone());
        if !advance(&mut p, shape) {
            return out;
        }
    }
}

/// Reference evaluation of a closed condition, straight from the clauses.
pub fn naive_holds(g: &Game, context: &Restriction, focus: &Profile, owner: usize, phi: &FormulaO) -> bool {
    struct Naive<'a> {
        g: &'a Game,
        context: &'a Restriction,
        owner: usize,
        profiles: Vec<Vec<usize>>,
    }
    impl Naive<'_> {
        fn value<'b>(&self, t: &Term, env: &'b BTreeMap<String, Vec<usize>>) -> &'b [usize] {
            let key = match t {
                Term::Focus => "o",
                Term::Var(x) => x.as_str(),
            };
            &env[key]
        }
        fn eval(&self, phi: &FormulaO, env: &mut BTreeMap<String, Vec<usize>>) -> bool {
            match phi {
                FormulaO::InContext(t) => {
                    let v = self.value(t, env);
                    v.iter().enumerate().all(|(i, &s)| self.context.part(i).contains(s))
                }
                FormulaO::Geq { left, right, at } => {
                    let mut a = self.value(at, env).to_vec();
                    let mut b = a.clone();
                    a[self.owner] = self.value(left, env)[self.owner];
                    b[self.owner] = self.value(right, env)[self.owner];
                    self.g.payoff(self.owner, &Profile::new(a)) >= self.g.payoff(self.owner, &Profile::new(b))
                }
                FormulaO::Not(f) => !self.eval(f, env),
                FormulaO::And(f, h) => self.eval(f, env) && self.eval(h, env),
                FormulaO::Exists(x, body) => {
                    let saved = env.get(x).cloned();
                    let mut found = false;
                    for p in &self.profiles {
                        env.insert(x.clone(), p.clone());
                        if self.eval(body, env) {
                            found = true;
                            break;
                        }
                    }
                    match saved {
                        Some(v) => env.insert(x.clone(), v),
                        None => env.remove(x),
                    };
                    found
                }
            }
        }
    }
    let mut env = BTreeMap::new();
    env.insert("o".to_string(), focus.as_slice().to_vec());
    Naive { g, context, owner, profiles: all_profiles(&g.shape()) }.eval(phi, &mut env)
}

/// `rounds` steps of simultaneous elimination, player `i` filtered by `conditions[i]`.
pub fn naive_eliminate(g: &Game, conditions: &[FormulaO], rounds: usize) -> Restriction {
    let mut current = g.full_restriction();
    for _ in 0..rounds {
        let mut next = g.empty_restriction();
        for (i, phi) in conditions.iter().enumerate() {
            for s in current.part(i).iter() {
                let mut focus = vec![0; g.players()];
                focus[i] = s;
                if naive_holds(g, &current, &Profile::new(focus), i, phi) {
                    next.part_mut(i).insert(s);
                }
            }
        }
        current = next;
    }
    current
}

/// Runs [`naive_eliminate`] until two rounds agree.
pub fn naive_outcome(g: &Game, conditions: &[FormulaO]) -> Restriction {
    let mut rounds = 0;
    loop {
        let a = naive_eliminate(g, conditions, rounds);
        let b = naive_eliminate(g, conditions, rounds + 1);
        if a == b {
            return a;
        }
        rounds += 1;
    }
}

/// `∩_{m=1}^{N} B_m(E)` with `N = 2^|Ω|`, enough for every value of the
/// sequence to appear. Only meant for small models.
pub fn naive_common_belief(m: &BeliefModel<'_>, e: Event) -> Event {
    let k = m.state_count();
    let n = m.game().players();
    let everyone = |set: &[bool]| -> Vec<bool> {
        (0..k).map(|w| (0..n).all(|i| (0..k).all(|v| !m.possible(i, w).contains(v) || set[v]))).collect()
    };
    let mut b: Vec<bool> = (0..k).map(|w| e.contains(w)).collect();
    let mut cb = vec![true; k];
    for _ in 0..(1usize << k) {
        b = everyone(&b);
        for w in 0..k {
            cb[w] &= b[w];
        }
    }
    Event::from_states((0..k).filter(|&w| cb[w]))
}
