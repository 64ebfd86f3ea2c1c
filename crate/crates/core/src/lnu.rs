//! The modal fixpoint language over belief models.
//!
//! ```text
//! ψ ::= rat(c_i) | ψ ∧ ψ | ¬ψ | □_i ψ | O(c_i) ψ | νX.ψ | X | ∀X.ψ
//! ```
//!
//! `c` names a condition from a [`ConditionRegistry`]. Operators without a
//! player index stand for the conjunction over all players. There is a single
//! set variable `X`; `nu` and `forall` rebind it.
//!
//! Concrete syntax: `rat(c)`, `rat(c, i)`, `box ψ`, `[i] ψ`, `O(c) ψ`,
//! `O(c, i) ψ`, `nu X . ψ`, `forall X . ψ`, `X`, `CB ψ`, plus `not`, `and`,
//! `or`, `->` and parentheses. Players are numbered from 1. `CB ψ` abbreviates
//! `nu X . box (X and ψ)`.

use alloc::boxed::Box;
use alloc::collections::BTreeMap;
use alloc::string::{String, ToString};
use alloc::vec::Vec;
use core::fmt;

use thiserror::Error;

use crate::belief::{BeliefModel, Event};
use crate::game::Game;
use crate::lex::{Cursor, ParseError, Tok};
use crate::lo::{self, analyze, Analysis, FormulaO};
use crate::oracle::{self, OracleError};

/// Largest state space for which events are enumerated (`2^|Ω|` of them).
pub const ENUMERATION_STATES: usize = 20;

#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub enum FormulaNu {
    /// `rat(c_i)`, or the conjunction over all players when `player` is `None`.
    Rat {
        cond: String,
        player: Option<usize>,
    },
    Not(Box<FormulaNu>),
    And(Box<FormulaNu>, Box<FormulaNu>),
    /// `□_i ψ`, or `□ψ` for every player.
    Believes {
        player: Option<usize>,
        body: Box<FormulaNu>,
    },
    /// `O_{c_i} ψ`, or the conjunction over all players.
    Optimal {
        cond: String,
        player: Option<usize>,
        body: Box<FormulaNu>,
    },
    Var,
    Nu(Box<FormulaNu>),
    ForallX(Box<FormulaNu>),
}

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum LnuError {
    #[error(transparent)]
    Parse(#[from] ParseError),
    #[error("unknown condition `{0}`")]
    UnknownCondition(String),
    #[error("condition `{name}` has free variables: {free}")]
    NotClosed { name: String, free: String },
    #[error("condition `{0}` is already defined")]
    DuplicateCondition(String),
    #[error("condition `{0}` is not context-safe; it cannot be evaluated from a single strategy")]
    NotContextSafe(String),
    #[error("player {player} does not exist (the game has {players} players)")]
    PlayerOutOfRange { player: usize, players: usize },
    #[error("`forall X` is only available in second-order evaluation")]
    SecondOrder,
    #[error("formula is not positive in X")]
    NotPositive,
    #[error("{states} states exceed the enumeration limit of {limit}")]
    TooManyStates { states: usize, limit: usize },
    #[error(transparent)]
    Enumeration(#[from] OracleError),
}

impl FormulaNu {
    pub fn rat(cond: &str) -> Self {
        FormulaNu::Rat { cond: cond.to_string(), player: None }
    }

    pub fn rat_of(cond: &str, player: usize) -> Self {
        FormulaNu::Rat { cond: cond.to_string(), player: Some(player) }
    }

    pub fn negate(self) -> Self {
        FormulaNu::Not(Box::new(self))
    }

    pub fn and(self, other: FormulaNu) -> Self {
        FormulaNu::And(Box::new(self), Box::new(other))
    }

    /// `¬(¬a ∧ ¬b)`
    pub fn or(self, other: FormulaNu) -> Self {
        self.negate().and(other.negate()).negate()
    }

    /// `¬(a ∧ ¬b)`
    pub fn implies(self, other: FormulaNu) -> Self {
        self.and(other.negate()).negate()
    }

    pub fn believed(self) -> Self {
        FormulaNu::Believes { player: None, body: Box::new(self) }
    }

    pub fn believed_by(self, player: usize) -> Self {
        FormulaNu::Believes { player: Some(player), body: Box::new(self) }
    }

    pub fn optimal(cond: &str, body: FormulaNu) -> Self {
        FormulaNu::Optimal { cond: cond.to_string(), player: None, body: Box::new(body) }
    }

    pub fn optimal_for(cond: &str, player: usize, body: FormulaNu) -> Self {
        FormulaNu::Optimal { cond: cond.to_string(), player: Some(player), body: Box::new(body) }
    }

    pub fn nu(body: FormulaNu) -> Self {
        FormulaNu::Nu(Box::new(body))
    }

    pub fn forall_x(body: FormulaNu) -> Self {
        FormulaNu::ForallX(Box::new(body))
    }

    /// `νX.□(X ∧ ψ)`
    pub fn common_belief(psi: FormulaNu) -> Self {
        FormulaNu::nu(FormulaNu::Var.and(psi).believed())
    }

    /// Splits `¬(a ∧ ¬b)` into `(a, b)`.
    pub fn as_implication(&self) -> Option<(&FormulaNu, &FormulaNu)> {
        match self {
            FormulaNu::Not(inner) => match &**inner {
                FormulaNu::And(a, nb) => match &**nb {
                    FormulaNu::Not(b) => Some((a, b)),
                    _ => None,
                },
                _ => None,
            },
            _ => None,
        }
    }

    fn as_disjunction(&self) -> Option<(&FormulaNu, &FormulaNu)> {
        match self.as_implication()? {
            (FormulaNu::Not(a), b) => Some((a, b)),
            _ => None,
        }
    }

    fn as_common_belief(&self) -> Option<&FormulaNu> {
        match self {
            FormulaNu::Nu(body) => match &**body {
                FormulaNu::Believes { player: None, body } => match &**body {
                    FormulaNu::And(x, psi) if **x == FormulaNu::Var => Some(psi),
                    _ => None,
                },
                _ => None,
            },
            _ => None,
        }
    }

    fn children(&self) -> Vec<&FormulaNu> {
        match self {
            FormulaNu::Rat { .. } | FormulaNu::Var => Vec::new(),
            FormulaNu::Not(a)
            | FormulaNu::Believes { body: a, .. }
            | FormulaNu::Optimal { body: a, .. }
            | FormulaNu::Nu(a)
            | FormulaNu::ForallX(a) => alloc::vec![&**a],
            FormulaNu::And(a, b) => alloc::vec![&**a, &**b],
        }
    }

    fn any(&self, pred: &dyn Fn(&FormulaNu) -> bool) -> bool {
        pred(self) || self.children().into_iter().any(|c| c.any(pred))
    }

    pub fn is_nu_free(&self) -> bool {
        !self.any(&|f| matches!(f, FormulaNu::Nu(_)))
    }

    pub fn is_first_order(&self) -> bool {
        !self.any(&|f| matches!(f, FormulaNu::ForallX(_)))
    }

    pub fn has_free_x(&self) -> bool {
        match self {
            FormulaNu::Var => true,
            FormulaNu::Nu(_) | FormulaNu::ForallX(_) | FormulaNu::Rat { .. } => false,
            _ => self.children().into_iter().any(FormulaNu::has_free_x),
        }
    }

    /// `ψ[X ↦ χ]`: replaces the free occurrences of `X`.
    pub fn substitute(&self, chi: &FormulaNu) -> FormulaNu {
        let sub = |f: &FormulaNu| Box::new(f.substitute(chi));
        match self {
            FormulaNu::Var => chi.clone(),
            FormulaNu::Rat { .. } | FormulaNu::Nu(_) | FormulaNu::ForallX(_) => self.clone(),
            FormulaNu::Not(a) => FormulaNu::Not(sub(a)),
            FormulaNu::And(a, b) => FormulaNu::And(sub(a), sub(b)),
            FormulaNu::Believes { player, body } => FormulaNu::Believes { player: *player, body: sub(body) },
            FormulaNu::Optimal { cond, player, body } => {
                FormulaNu::Optimal { cond: cond.clone(), player: *player, body: sub(body) }
            }
        }
    }

    /// Every `(condition, player)` pair mentioned.
    pub fn conditions(&self) -> Vec<(&str, Option<usize>)> {
        let mut out = Vec::new();
        fn walk<'a>(f: &'a FormulaNu, out: &mut Vec<(&'a str, Option<usize>)>) {
            match f {
                FormulaNu::Rat { cond, player } | FormulaNu::Optimal { cond, player, .. } => {
                    out.push((cond.as_str(), *player))
                }
                _ => {}
            }
            for c in f.children() {
                walk(c, out);
            }
        }
        walk(self, &mut out);
        out
    }
}

// Precedence levels used by the printer, loosest first.
const IMPLIES: u8 = 0;
const OR: u8 = 1;
const AND: u8 = 2;
const UNARY: u8 = 3;

struct Prec<'a>(&'a FormulaNu, u8);

impl fmt::Display for Prec<'_> {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let Prec(phi, level) = *self;
        let open = |f: &mut fmt::Formatter<'_>, need: bool| {
            if need {
                f.write_str("(")
            } else {
                Ok(())
            }
        };
        let close = |f: &mut fmt::Formatter<'_>, need: bool| {
            if need {
                f.write_str(")")
            } else {
                Ok(())
            }
        };
        let player_suffix = |p: &Option<usize>| match p {
            Some(i) => alloc::format!(", {}", i + 1),
            None => String::new(),
        };
        if let Some((a, b)) = phi.as_disjunction() {
            let need = level > OR;
            open(f, need)?;
            write!(f, "{} or {}", Prec(a, OR), Prec(b, AND))?;
            return close(f, need);
        }
        if let Some((a, b)) = phi.as_implication() {
            let need = level > IMPLIES;
            open(f, need)?;
            write!(f, "{} -> {}", Prec(a, OR), Prec(b, IMPLIES))?;
            return close(f, need);
        }
        if let Some(psi) = phi.as_common_belief() {
            return write!(f, "CB {}", Prec(psi, UNARY));
        }
        match phi {
            FormulaNu::Rat { cond, player } => write!(f, "rat({cond}{})", player_suffix(player)),
            FormulaNu::Var => f.write_str("X"),
            FormulaNu::Not(a) => write!(f, "not {}", Prec(a, UNARY)),
            FormulaNu::And(a, b) => {
                let need = level > AND;
                open(f, need)?;
                write!(f, "{} and {}", Prec(a, AND), Prec(b, UNARY))?;
                close(f, need)
            }
            FormulaNu::Believes { player: None, body } => write!(f, "box {}", Prec(body, UNARY)),
            FormulaNu::Believes { player: Some(i), body } => write!(f, "[{}] {}", i + 1, Prec(body, UNARY)),
            FormulaNu::Optimal { cond, player, body } => {
                write!(f, "O({cond}{}) {}", player_suffix(player), Prec(body, UNARY))
            }
            FormulaNu::Nu(body) | FormulaNu::ForallX(body) => {
                let need = level > IMPLIES;
                let binder = if matches!(phi, FormulaNu::Nu(_)) { "nu" } else { "forall" };
                open(f, need)?;
                write!(f, "{binder} X . {}", Prec(body, IMPLIES))?;
                close(f, need)
            }
        }
    }
}

impl fmt::Display for FormulaNu {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        Prec(self, IMPLIES).fmt(f)
    }
}

pub fn parse_nu(text: &str) -> Result<FormulaNu, ParseError> {
    let mut cur = Cursor::new(text)?;
    let f = implication(&mut cur)?;
    cur.finish()?;
    Ok(f)
}

fn implication(cur: &mut Cursor) -> Result<FormulaNu, ParseError> {
    let lhs = disjunction(cur)?;
    if cur.eat(&Tok::Arrow) {
        Ok(lhs.implies(implication(cur)?))
    } else {
        Ok(lhs)
    }
}

fn disjunction(cur: &mut Cursor) -> Result<FormulaNu, ParseError> {
    let mut f = conjunction(cur)?;
    while cur.eat_keyword("or") {
        f = f.or(conjunction(cur)?);
    }
    Ok(f)
}

fn conjunction(cur: &mut Cursor) -> Result<FormulaNu, ParseError> {
    let mut f = unary(cur)?;
    while cur.eat_keyword("and") {
        f = f.and(unary(cur)?);
    }
    Ok(f)
}

fn binder_body(cur: &mut Cursor) -> Result<FormulaNu, ParseError> {
    cur.expect_keyword("X")?;
    cur.expect(&Tok::Dot)?;
    implication(cur)
}

fn unary(cur: &mut Cursor) -> Result<FormulaNu, ParseError> {
    if cur.eat_keyword("not") {
        return Ok(unary(cur)?.negate());
    }
    if cur.eat(&Tok::LBracket) {
        let i = player(cur)?;
        cur.expect(&Tok::RBracket)?;
        return Ok(unary(cur)?.believed_by(i));
    }
    if cur.eat_keyword("box") {
        return Ok(unary(cur)?.believed());
    }
    if cur.is_keyword("O") && *cur.peek_at(1) == Tok::LParen {
        cur.next();
        let (cond, player) = condition_args(cur)?;
        let body = Box::new(unary(cur)?);
        return Ok(FormulaNu::Optimal { cond, player, body });
    }
    if cur.eat_keyword("CB") {
        return Ok(FormulaNu::common_belief(unary(cur)?));
    }
    if cur.eat_keyword("nu") {
        return Ok(FormulaNu::nu(binder_body(cur)?));
    }
    if cur.eat_keyword("forall") {
        return Ok(FormulaNu::forall_x(binder_body(cur)?));
    }
    atom(cur)
}

fn atom(cur: &mut Cursor) -> Result<FormulaNu, ParseError> {
    if cur.is_keyword("rat") && *cur.peek_at(1) == Tok::LParen {
        cur.next();
        let (cond, player) = condition_args(cur)?;
        return Ok(FormulaNu::Rat { cond, player });
    }
    if cur.eat_keyword("X") {
        return Ok(FormulaNu::Var);
    }
    if cur.eat(&Tok::LParen) {
        let f = implication(cur)?;
        cur.expect(&Tok::RParen)?;
        return Ok(f);
    }
    Err(cur.error(alloc::format!("expected a formula, found {}", cur.peek())))
}

fn player(cur: &mut Cursor) -> Result<usize, ParseError> {
    if *cur.peek() == Tok::Number(0) {
        return Err(cur.error("players are numbered from 1".to_string()));
    }
    Ok(cur.number()? - 1)
}

fn condition_args(cur: &mut Cursor) -> Result<(String, Option<usize>), ParseError> {
    cur.expect(&Tok::LParen)?;
    let name = cur.ident()?;
    let who = if cur.eat(&Tok::Comma) { Some(player(cur)?) } else { None };
    cur.expect(&Tok::RParen)?;
    Ok((name, who))
}

/// A registered optimality condition with its syntactic analysis.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Condition {
    pub formula: FormulaO,
    pub analysis: Analysis,
}

/// Named optimality conditions. Every entry is closed.
#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct ConditionRegistry {
    entries: BTreeMap<String, Condition>,
}

impl ConditionRegistry {
    pub fn new() -> Self {
        Self::default()
    }

    /// `lsd`, `gsd` and `gbr`.
    pub fn with_builtins() -> Self {
        let mut r = Self::new();
        for name in lo::BUILTIN_NAMES {
            let f = lo::builtin(name).expect("builtin names resolve");
            r.register(name, f).expect("builtins are closed and distinct");
        }
        r
    }

    pub fn register(&mut self, name: &str, formula: FormulaO) -> Result<&Condition, LnuError> {
        if self.entries.contains_key(name) {
            return Err(LnuError::DuplicateCondition(name.to_string()));
        }
        let analysis = analyze(&formula);
        if !analysis.closed {
            let free: Vec<_> = formula.free_variables().into_iter().collect();
            return Err(LnuError::NotClosed { name: name.to_string(), free: free.join(", ") });
        }
        Ok(self.entries.entry(name.to_string()).or_insert(Condition { formula, analysis }))
    }

    pub fn get(&self, name: &str) -> Option<&Condition> {
        self.entries.get(name)
    }

    pub fn lookup(&self, name: &str) -> Result<&Condition, LnuError> {
        self.get(name).ok_or_else(|| LnuError::UnknownCondition(name.to_string()))
    }

    pub fn names(&self) -> impl Iterator<Item = &str> {
        self.entries.keys().map(String::as_str)
    }
}

/// Every occurrence of a free `X` sits under an even number of negations and
/// only under `O(c)` operators whose condition `c` is positive.
pub fn positive_in_x(psi: &FormulaNu, registry: &ConditionRegistry) -> Result<bool, LnuError> {
    for (cond, _) in psi.conditions() {
        registry.lookup(cond)?;
    }
    fn walk(f: &FormulaNu, negations: usize, registry: &ConditionRegistry) -> bool {
        match f {
            FormulaNu::Var => negations.is_multiple_of(2),
            FormulaNu::Rat { .. } | FormulaNu::Nu(_) | FormulaNu::ForallX(_) => true,
            FormulaNu::Not(a) => walk(a, negations + 1, registry),
            FormulaNu::And(a, b) => walk(a, negations, registry) && walk(b, negations, registry),
            FormulaNu::Believes { body, .. } => walk(body, negations, registry),
            FormulaNu::Optimal { cond, body, .. } => {
                if !body.has_free_x() {
                    return true;
                }
                registry.get(cond).is_some_and(|c| c.analysis.positive) && walk(body, negations, registry)
            }
        }
    }
    Ok(walk(psi, 0, registry))
}

/// Checks that `psi` can be evaluated over `game`.
pub fn check_formula(
    psi: &FormulaNu,
    registry: &ConditionRegistry,
    game: &Game,
    second_order: bool,
) -> Result<(), LnuError> {
    for (cond, player) in psi.conditions() {
        let c = registry.lookup(cond)?;
        if !c.analysis.context_safe {
            return Err(LnuError::NotContextSafe(cond.to_string()));
        }
        if let Some(i) = player {
            if i >= game.players() {
                return Err(LnuError::PlayerOutOfRange { player: i + 1, players: game.players() });
            }
        }
    }
    if !second_order && !psi.is_first_order() {
        return Err(LnuError::SecondOrder);
    }
    Ok(())
}

/// `[[ψ]](E)` for a formula without `forall X`.
pub fn interpret(
    m: &BeliefModel<'_>,
    registry: &ConditionRegistry,
    psi: &FormulaNu,
    env: Event,
) -> Result<Event, LnuError> {
    check_formula(psi, registry, m.game(), false)?;
    Ok(Semantics::new(m, registry).eval(psi, env))
}

/// `[[ψ]](E)` where `[[∀X.φ]](E) = {ω | ω ∈ [[φ]](F) for every F ⊆ Ω}`.
pub fn interpret_so(
    m: &BeliefModel<'_>,
    registry: &ConditionRegistry,
    psi: &FormulaNu,
    env: Event,
) -> Result<Event, LnuError> {
    check_formula(psi, registry, m.game(), true)?;
    check_states(m.state_count())?;
    Ok(Semantics::new(m, registry).eval(psi, env))
}

/// `∪{E ⊆ Ω | E ⊆ [[ψ]](E)}`, the greatest fixpoint of `[[ψ]]` for positive `ψ`.
pub fn nu_via_postfixpoints(
    m: &BeliefModel<'_>,
    registry: &ConditionRegistry,
    psi: &FormulaNu,
) -> Result<Event, LnuError> {
    check_formula(psi, registry, m.game(), false)?;
    if !positive_in_x(psi, registry)? {
        return Err(LnuError::NotPositive);
    }
    check_states(m.state_count())?;
    let sem = Semantics::new(m, registry);
    let mut union = Event::EMPTY;
    for bits in 0..(1u64 << m.state_count()) {
        let e = Event::from_bits(bits);
        if e.is_subset(sem.eval(psi, e)) {
            union = union.union(e);
        }
    }
    Ok(union)
}

fn check_states(states: usize) -> Result<(), LnuError> {
    if states > ENUMERATION_STATES {
        Err(LnuError::TooManyStates { states, limit: ENUMERATION_STATES })
    } else {
        Ok(())
    }
}

/// Evaluator over one model; callers have validated the formula.
pub(crate) struct Semantics<'a, 'g> {
    model: &'a BeliefModel<'g>,
    registry: &'a ConditionRegistry,
    // profile index played at each state
    played: Vec<usize>,
}

impl<'a, 'g> Semantics<'a, 'g> {
    pub(crate) fn new(model: &'a BeliefModel<'g>, registry: &'a ConditionRegistry) -> Self {
        let game = model.game();
        let played = (0..model.state_count()).map(|w| game.profile_index(&model.profile_at(w))).collect();
        Semantics { model, registry, played }
    }

    fn owners(&self, player: Option<usize>) -> core::ops::Range<usize> {
        match player {
            Some(i) => i..i + 1,
            None => 0..self.model.game().players(),
        }
    }

    pub(crate) fn eval(&self, f: &FormulaNu, env: Event) -> Event {
        let m = self.model;
        let game = m.game();
        let omega = m.omega();
        match f {
            FormulaNu::Rat { cond, player } => {
                let phi = &self.registry.entries[cond].formula;
                Event::from_states((0..m.state_count()).filter(|&w| {
                    self.owners(*player).all(|i| {
                        let context = m.game_of_event(m.possible(i, w));
                        lo::holds(game, &context, self.played[w], i, phi)
                    })
                }))
            }
            FormulaNu::Not(a) => m.complement(self.eval(a, env)),
            FormulaNu::And(a, b) => self.eval(a, env).intersection(self.eval(b, env)),
            FormulaNu::Believes { player, body } => {
                let e = self.eval(body, env);
                self.owners(*player).fold(omega, |acc, i| acc.intersection(m.believes(i, e)))
            }
            FormulaNu::Optimal { cond, player, body } => {
                let phi = &self.registry.entries[cond].formula;
                let context = m.game_of_event(self.eval(body, env));
                Event::from_states((0..m.state_count()).filter(|&w| {
                    self.owners(*player).all(|i| lo::holds(game, &context, self.played[w], i, phi))
                }))
            }
            FormulaNu::Var => env,
            FormulaNu::Nu(body) => {
                // E ↦ [[ψ ∧ X]](E) is contracting, so the chain from Ω
                // strictly shrinks until it stops.
                let mut current = omega;
                loop {
                    let next = self.eval(body, current).intersection(current);
                    if next == current {
                        return current;
                    }
                    current = next;
                }
            }
            FormulaNu::ForallX(body) => (0..(1u64 << m.state_count()))
                .fold(omega, |acc, bits| acc.intersection(self.eval(body, Event::from_bits(bits)))),
        }
    }
}

/// How many belief models a validity check visits.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Budget {
    /// Every model with `1..=max_states` states.
    Exhaustive { max_states: usize },
    /// Seeded uniform draws with `1..=max_states` states.
    Random { samples: usize, max_states: usize, seed: u64 },
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Countermodel<'g> {
    pub model: BeliefModel<'g>,
    /// The value of `X`; `Ω` unless the formula has `X` free.
    pub environment: Event,
    /// `[[ψ]](E)`, a proper subset of `Ω`.
    pub satisfied: Event,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ValidityReport<'g> {
    pub valid_on_corpus: bool,
    pub models_checked: u64,
    pub countermodel: Option<Countermodel<'g>>,
}

/// Searches the models of `game` within `budget` for one where `psi` is not
/// everywhere true. Formulas with `X` free are checked under every value of `X`.
pub fn check_validity<'g>(
    game: &'g Game,
    registry: &ConditionRegistry,
    psi: &FormulaNu,
    budget: Budget,
) -> Result<ValidityReport<'g>, LnuError> {
    let second_order = !psi.is_first_order();
    check_formula(psi, registry, game, second_order)?;
    let max_states = match budget {
        Budget::Exhaustive { max_states } | Budget::Random { max_states, .. } => max_states,
    };
    if second_order || psi.has_free_x() {
        check_states(max_states)?;
    }
    let models: Box<dyn Iterator<Item = BeliefModel<'g>>> = match budget {
        Budget::Exhaustive { max_states } => Box::new(oracle::enumerate_belief_models(game, max_states)?),
        Budget::Random { samples, max_states, seed } => {
            Box::new(oracle::sample_belief_models(game, max_states, samples, seed)?)
        }
    };
    let mut checked = 0;
    for model in models {
        checked += 1;
        let sem = Semantics::new(&model, registry);
        let omega = model.omega();
        let environments = if psi.has_free_x() { 1u64 << model.state_count() } else { 1 };
        for k in 0..environments {
            let env = if psi.has_free_x() { Event::from_bits(k) } else { omega };
            let satisfied = sem.eval(psi, env);
            if satisfied != omega {
                return Ok(ValidityReport {
                    valid_on_corpus: false,
                    models_checked: checked,
                    countermodel: Some(Countermodel { model, environment: env, satisfied }),
                });
            }
        }
    }
    Ok(ValidityReport { valid_on_corpus: true, models_checked: checked, countermodel: None })
}

#[cfg(test)]
mod tests {
    use super::*;
    use alloc::vec;

    fn fig1_right() -> Game {
        Game::from_integers(&[&["U", "D"], &["L", "R"]], &[&[1, 1], &[1, 0], &[0, 0], &[0, 1]]).unwrap()
    }

    fn p(text: &str) -> FormulaNu {
        parse_nu(text).unwrap()
    }

    // one state playing (D, L), each player considering only that state possible
    fn single_dl(g: &Game) -> BeliefModel<'_> {
        BeliefModel::with_default_names(g, vec![vec![1], vec![0]], vec![vec![Event::singleton(0)]; 2])
            .unwrap()
    }

    #[test]
    fn parse_sugar() {
        assert_eq!(p("CB rat(gbr)"), FormulaNu::nu(FormulaNu::Var.and(FormulaNu::rat("gbr")).believed()));
        assert_eq!(p("rat(lsd, 2)"), FormulaNu::rat_of("lsd", 1));
        assert_eq!(
            p("[1] X -> O(gbr, 1) X"),
            FormulaNu::Var.believed_by(0).implies(FormulaNu::optimal_for("gbr", 0, FormulaNu::Var))
        );
        assert_eq!(
            p("nu X . O(gbr) X and X"),
            FormulaNu::nu(FormulaNu::optimal("gbr", FormulaNu::Var).and(FormulaNu::Var))
        );
    }

    #[test]
    fn parse_errors() {
        let e = parse_nu("rat(gbr, 0)").unwrap_err();
        assert_eq!((e.line, e.column), (1, 10));
        assert!(parse_nu("nu Y . X").is_err());
        assert!(parse_nu("rat(gbr) and").is_err());
        assert!(parse_nu("O gbr X").is_err());
    }

    #[test]
    fn printer_round_trips() {
        for text in [
            "(rat(gbr) and CB rat(gbr)) -> (nu X . O(gbr) X)",
            "not (rat(lsd) or [2] X) -> box (X and rat(gsd, 1))",
            "forall X . [1] X -> O(gbr, 1) X",
            "(X -> X) -> X and (X or X)",
        ] {
            let f = p(text);
            assert_eq!(p(&f.to_string()), f, "{text} printed as {f}");
        }
        assert_eq!(
            p("rat(gbr) and CB rat(gbr) -> nu X . O(gbr) X").to_string(),
            "rat(gbr) and CB rat(gbr) -> nu X . O(gbr) X"
        );
    }

    #[test]
    fn rat_examples() {
        let g = fig1_right();
        let m = single_dl(&g);
        let reg = ConditionRegistry::with_builtins();
        let omega = m.omega();
        assert_eq!(interpret(&m, &reg, &p("rat(gsd, 1)"), omega).unwrap(), Event::EMPTY);
        assert_eq!(interpret(&m, &reg, &p("rat(lsd, 1)"), omega).unwrap(), omega);
    }

    #[test]
    fn tautologous_common_belief_is_everything() {
        let g = fig1_right();
        let m = BeliefModel::with_default_names(
            &g,
            vec![vec![0, 1], vec![1, 0]],
            vec![
                vec![Event::from_bits(0b10), Event::EMPTY],
                vec![Event::from_bits(0b11), Event::from_bits(0b01)],
            ],
        )
        .unwrap();
        let reg = ConditionRegistry::with_builtins();
        let f = p("CB (rat(gbr) or not rat(gbr))");
        assert_eq!(interpret(&m, &reg, &f, Event::EMPTY).unwrap(), m.omega());
    }

    #[test]
    fn positivity_examples() {
        let reg = ConditionRegistry::with_builtins();
        assert!(positive_in_x(&p("O(gbr) X"), &reg).unwrap());
        assert!(!positive_in_x(&p("O(lsd) X"), &reg).unwrap());
        assert!(positive_in_x(&p("not not X"), &reg).unwrap());
        assert!(!positive_in_x(&p("not X"), &reg).unwrap());
        // bound occurrences do not count
        assert!(positive_in_x(&p("nu X . not X"), &reg).unwrap());
        assert!(positive_in_x(&p("O(lsd) rat(gbr)"), &reg).unwrap());
        assert_eq!(positive_in_x(&p("O(nope) X"), &reg), Err(LnuError::UnknownCondition("nope".into())));
    }

    #[test]
    fn substitution_is_capture_free() {
        let chi = p("rat(gbr)");
        assert_eq!(p("X and nu X . box X").substitute(&chi), p("rat(gbr) and nu X . box X"));
    }

    #[test]
    fn postfixpoint_examples() {
        let g = fig1_right();
        let m = BeliefModel::with_default_names(
            &g,
            vec![vec![0, 1], vec![0, 1]],
            vec![vec![Event::from_bits(0b11); 2]; 2],
        )
        .unwrap();
        let reg = ConditionRegistry::with_builtins();
        assert_eq!(nu_via_postfixpoints(&m, &reg, &FormulaNu::Var).unwrap(), m.omega());
        let body = p("O(gbr) X");
        assert_eq!(
            nu_via_postfixpoints(&m, &reg, &body).unwrap(),
            interpret(&m, &reg, &FormulaNu::nu(body), m.omega()).unwrap()
        );
        assert_eq!(nu_via_postfixpoints(&m, &reg, &p("O(lsd) X")), Err(LnuError::NotPositive));
    }

    #[test]
    fn second_order_examples() {
        let g = fig1_right();
        let m = single_dl(&g);
        let reg = ConditionRegistry::with_builtins();
        let all = p("forall X . X");
        assert_eq!(interpret_so(&m, &reg, &all, m.omega()).unwrap(), Event::EMPTY);
        assert_eq!(interpret(&m, &reg, &all, m.omega()), Err(LnuError::SecondOrder));
    }

    #[test]
    fn unsafe_and_unknown_conditions_are_rejected() {
        let g = fig1_right();
        let m = single_dl(&g);
        let mut reg = ConditionRegistry::with_builtins();
        reg.register("odd", lo::parse_lo("C(o)").unwrap()).unwrap();
        assert_eq!(
            interpret(&m, &reg, &p("rat(odd)"), m.omega()),
            Err(LnuError::NotContextSafe("odd".into()))
        );
        assert!(matches!(
            interpret(&m, &reg, &p("rat(gbr, 3)"), m.omega()),
            Err(LnuError::PlayerOutOfRange { player: 3, players: 2 })
        ));
        assert!(matches!(
            reg.register("open", lo::parse_lo("C(x)").unwrap()),
            Err(LnuError::NotClosed { .. })
        ));
        assert!(matches!(
            reg.register("gbr", lo::builtin("gbr").unwrap()),
            Err(LnuError::DuplicateCondition(_))
        ));
    }

    #[test]
    fn validity_examples() {
        let g = fig1_right();
        let reg = ConditionRegistry::with_builtins();
        let report = check_validity(&g, &reg, &p("rat(lsd)"), Budget::Exhaustive { max_states: 2 }).unwrap();
        assert!(!report.valid_on_corpus);
        let cm = report.countermodel.unwrap();
        assert_ne!(cm.satisfied, cm.model.omega());

        let taut = p("X or not X");
        let report = check_validity(&g, &reg, &taut, Budget::Exhaustive { max_states: 2 }).unwrap();
        assert!(report.valid_on_corpus);
        assert!(
            !check_validity(&g, &reg, &FormulaNu::Var, Budget::Exhaustive { max_states: 1 })
                .unwrap()
                .valid_on_corpus
        );
    }
}
