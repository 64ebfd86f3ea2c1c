//! The first-order language of optimality conditions.
//!
//! Core grammar:
//!
//! ```text
//! φ ::= C(a) | a ≥_c b | ¬φ | φ ∧ φ | ∃x φ        a, b, c ∈ variables ∪ {o}
//! ```
//!
//! `C` is the context restriction and `o` the focus profile. The player index on
//! `≥` is implicit: a condition is always evaluated for an *owner* supplied by the
//! caller, so every atom compares payoffs of that single player.
//!
//! Concrete syntax accepted by [`parse_lo`]:
//!
//! ```text
//! C(t)   t >= t @ t   t > t @ t   not φ   φ and φ   φ or φ   φ -> φ
//! exists v . φ   forall v . φ   exists v in C . φ   forall v in C . φ
//! ```
//!
//! Abbreviations are expanded while parsing, so a [`FormulaO`] is always in core
//! syntax.

use alloc::boxed::Box;
use alloc::collections::{BTreeMap, BTreeSet};
use alloc::format;
use alloc::string::{String, ToString};
use alloc::vec::Vec;
use core::fmt;

use thiserror::Error;

use crate::game::{Game, GameError, Profile, Restriction};
use crate::lex::{Cursor, ParseError, Tok};

#[derive(Debug, Clone, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum Term {
    /// The constant `o`.
    Focus,
    Var(String),
}

#[derive(Debug, Clone, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum FormulaO {
    /// `C(a)`: every component of `a` lies in the context.
    InContext(Term),
    /// `left ≥_at right`: the owner weakly prefers `left_i` to `right_i` against `at_{-i}`.
    Geq {
        left: Term,
        right: Term,
        at: Term,
    },
    Not(Box<FormulaO>),
    And(Box<FormulaO>, Box<FormulaO>),
    Exists(String, Box<FormulaO>),
}

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum LoError {
    #[error(transparent)]
    Parse(#[from] ParseError),
    #[error("unbound variable `{0}`")]
    UnboundVariable(String),
    #[error("unknown condition `{0}`")]
    UnknownCondition(String),
    #[error("condition is not closed (free variables: {0})")]
    NotClosed(String),
    #[error("condition uses `o` in a context position and cannot be evaluated from a strategy alone")]
    NotContextSafe,
    #[error(transparent)]
    Game(#[from] GameError),
}

impl Term {
    pub fn var(name: &str) -> Term {
        Term::Var(name.to_string())
    }
}

impl fmt::Display for Term {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Term::Focus => f.write_str("o"),
            Term::Var(x) => f.write_str(x),
        }
    }
}

impl FormulaO {
    pub fn in_context(t: Term) -> Self {
        FormulaO::InContext(t)
    }

    pub fn geq(left: Term, right: Term, at: Term) -> Self {
        FormulaO::Geq { left, right, at }
    }

    /// `left > right @ at`, i.e. `¬(right ≥_at left)`.
    pub fn gt(left: Term, right: Term, at: Term) -> Self {
        FormulaO::geq(right, left, at).negate()
    }

    pub fn negate(self) -> Self {
        FormulaO::Not(Box::new(self))
    }

    pub fn and(self, other: FormulaO) -> Self {
        FormulaO::And(Box::new(self), Box::new(other))
    }

    pub fn or(self, other: FormulaO) -> Self {
        self.negate().and(other.negate()).negate()
    }

    pub fn implies(self, other: FormulaO) -> Self {
        self.and(other.negate()).negate()
    }

    pub fn exists(x: &str, body: FormulaO) -> Self {
        FormulaO::Exists(x.to_string(), Box::new(body))
    }

    pub fn forall(x: &str, body: FormulaO) -> Self {
        FormulaO::exists(x, body.negate()).negate()
    }

    /// `∃x ∈ C φ` := `∃x (C(x) ∧ φ)`.
    pub fn exists_in(x: &str, body: FormulaO) -> Self {
        FormulaO::exists(x, FormulaO::in_context(Term::var(x)).and(body))
    }

    /// `∀x ∈ C φ` := `¬∃x (C(x) ∧ ¬φ)`.
    pub fn forall_in(x: &str, body: FormulaO) -> Self {
        FormulaO::exists(x, FormulaO::in_context(Term::var(x)).and(body.negate())).negate()
    }

    pub fn free_variables(&self) -> BTreeSet<String> {
        let mut out = BTreeSet::new();
        let mut bound = Vec::new();
        self.collect_free(&mut bound, &mut out);
        out
    }

    fn collect_free<'a>(&'a self, bound: &mut Vec<&'a str>, out: &mut BTreeSet<String>) {
        let mut term = |t: &Term, bound: &Vec<&str>| {
            if let Term::Var(x) = t {
                if !bound.contains(&x.as_str()) {
                    out.insert(x.clone());
                }
            }
        };
        match self {
            FormulaO::InContext(t) => term(t, bound),
            FormulaO::Geq { left, right, at } => {
                term(left, bound);
                term(right, bound);
                term(at, bound);
            }
            FormulaO::Not(f) => f.collect_free(bound, out),
            FormulaO::And(a, b) => {
                a.collect_free(bound, out);
                b.collect_free(bound, out);
            }
            FormulaO::Exists(x, body) => {
                bound.push(x);
                body.collect_free(bound, out);
                bound.pop();
            }
        }
    }
}

/// Core-syntax printer; the output parses back to the same formula.
impl fmt::Display for FormulaO {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            FormulaO::InContext(t) => write!(f, "C({t})"),
            FormulaO::Geq { left, right, at } => write!(f, "{left} >= {right} @ {at}"),
            FormulaO::Not(g) => write!(f, "not {g}"),
            FormulaO::And(a, b) => write!(f, "({a} and {b})"),
            FormulaO::Exists(x, body) => write!(f, "(exists {x} . {body})"),
        }
    }
}

const RESERVED: &[&str] = &["not", "and", "or", "exists", "forall", "in", "C", "o"];

/// Parses a condition in concrete syntax and expands all abbreviations.
pub fn parse_lo(text: &str) -> Result<FormulaO, ParseError> {
    let mut cur = Cursor::new(text)?;
    let f = implication(&mut cur)?;
    cur.finish()?;
    Ok(f)
}

fn implication(cur: &mut Cursor) -> Result<FormulaO, ParseError> {
    let lhs = disjunction(cur)?;
    if cur.eat(&Tok::Arrow) {
        let rhs = implication(cur)?;
        Ok(lhs.implies(rhs))
    } else {
        Ok(lhs)
    }
}

fn disjunction(cur: &mut Cursor) -> Result<FormulaO, ParseError> {
    let mut f = conjunction(cur)?;
    while cur.eat_keyword("or") {
        f = f.or(conjunction(cur)?);
    }
    Ok(f)
}

fn conjunction(cur: &mut Cursor) -> Result<FormulaO, ParseError> {
    let mut f = unary(cur)?;
    while cur.eat_keyword("and") {
        f = f.and(unary(cur)?);
    }
    Ok(f)
}

fn unary(cur: &mut Cursor) -> Result<FormulaO, ParseError> {
    if cur.eat_keyword("not") {
        return Ok(unary(cur)?.negate());
    }
    let universal = cur.is_keyword("forall");
    if universal || cur.is_keyword("exists") {
        cur.next();
        let x = variable(cur)?;
        let mut in_context = false;
        if cur.eat_keyword("in") {
            let set = cur.ident()?;
            if set != "C" {
                return Err(
                    cur.error(format!("unknown set `{set}` in bounded quantifier, only `C` is available"))
                );
            }
            in_context = true;
        }
        cur.expect(&Tok::Dot)?;
        let body = implication(cur)?;
        return Ok(match (universal, in_context) {
            (false, false) => FormulaO::exists(&x, body),
            (true, false) => FormulaO::forall(&x, body),
            (false, true) => FormulaO::exists_in(&x, body),
            (true, true) => FormulaO::forall_in(&x, body),
        });
    }
    atom(cur)
}

fn atom(cur: &mut Cursor) -> Result<FormulaO, ParseError> {
    if cur.eat(&Tok::LParen) {
        let f = implication(cur)?;
        cur.expect(&Tok::RParen)?;
        return Ok(f);
    }
    if cur.is_keyword("C") && cur.peek_at(1) == &Tok::LParen {
        cur.next();
        cur.next();
        let t = term(cur)?;
        cur.expect(&Tok::RParen)?;
        return Ok(FormulaO::in_context(t));
    }
    let left = term(cur)?;
    let strict = match cur.next() {
        Tok::Geq => false,
        Tok::Gt => true,
        _ => {
            return Err(cur.error("expected `>=` or `>` after term".to_string()));
        }
    };
    let right = term(cur)?;
    cur.expect(&Tok::At)?;
    let at = term(cur)?;
    Ok(if strict { FormulaO::gt(left, right, at) } else { FormulaO::geq(left, right, at) })
}

fn term(cur: &mut Cursor) -> Result<Term, ParseError> {
    if cur.eat_keyword("o") {
        return Ok(Term::Focus);
    }
    Ok(Term::Var(variable(cur)?))
}

fn variable(cur: &mut Cursor) -> Result<String, ParseError> {
    match cur.peek() {
        Tok::Ident(s) if RESERVED.contains(&s.as_str()) => {
            Err(cur.error(format!("`{s}` is reserved and cannot be used as a variable")))
        }
        _ => cur.ident(),
    }
}

/// Syntactic properties of a condition.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct Analysis {
    pub closed: bool,
    /// Every `C(·)` occurs under an even number of negations.
    pub positive: bool,
    /// `o` occurs only as the first two arguments of `≥`, so truth depends on
    /// the owner's component of the focus alone.
    pub context_safe: bool,
}

pub fn analyze(f: &FormulaO) -> Analysis {
    fn walk(f: &FormulaO, negations: usize, positive: &mut bool, safe: &mut bool) {
        match f {
            FormulaO::InContext(t) => {
                if negations % 2 == 1 {
                    *positive = false;
                }
                if *t == Term::Focus {
                    *safe = false;
                }
            }
            FormulaO::Geq { at, .. } => {
                if *at == Term::Focus {
                    *safe = false;
                }
            }
            FormulaO::Not(g) => walk(g, negations + 1, positive, safe),
            FormulaO::And(a, b) => {
                walk(a, negations, positive, safe);
                walk(b, negations, positive, safe);
            }
            FormulaO::Exists(_, body) => walk(body, negations, positive, safe),
        }
    }
    let mut positive = true;
    let mut context_safe = true;
    walk(f, 0, &mut positive, &mut context_safe);
    Analysis { closed: f.free_variables().is_empty(), positive, context_safe }
}

pub const BUILTIN_NAMES: [&str; 3] = ["lsd", "gsd", "gbr"];

/// The named conditions `lsd` (not locally strictly dominated), `gsd` (not
/// globally strictly dominated) and `gbr` (globally a best response).
pub fn builtin(name: &str) -> Result<FormulaO, LoError> {
    let o_beats_y_at_z = || FormulaO::geq(Term::Focus, Term::var("y"), Term::var("z"));
    match name {
        // ∀y ∈ C ∃z ∈ C  o ≥_z y
        "lsd" => Ok(FormulaO::forall_in("y", FormulaO::exists_in("z", o_beats_y_at_z()))),
        // ∀y ∃z ∈ C  o ≥_z y
        "gsd" => Ok(FormulaO::forall("y", FormulaO::exists_in("z", o_beats_y_at_z()))),
        // ∃z ∈ C ∀y  o ≥_z y
        "gbr" => Ok(FormulaO::exists_in("z", FormulaO::forall("y", o_beats_y_at_z()))),
        other => Err(LoError::UnknownCondition(other.to_string())),
    }
}

/// `(G, G', s)`: a game, a context restriction interpreting `C` and a focus profile interpreting `o`.
#[derive(Debug, Clone)]
pub struct OptimalityModel<'g> {
    pub game: &'g Game,
    pub context: Restriction,
    pub focus: Profile,
}

impl<'g> OptimalityModel<'g> {
    pub fn new(game: &'g Game, context: Restriction, focus: Profile) -> Result<Self, LoError> {
        if !context.same_shape(&game.full_restriction()) {
            return Err(GameError::ShapeMismatch.into());
        }
        if focus.players() != game.players()
            || (0..game.players()).any(|i| focus.component(i) >= game.strategy_count(i))
        {
            return Err(GameError::ShapeMismatch.into());
        }
        Ok(OptimalityModel { game, context, focus })
    }
}

/// Variable bindings into the full profile set `T`; `o` is bound by the model.
#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct Assignment {
    bindings: BTreeMap<String, Profile>,
}

impl Assignment {
    pub fn empty() -> Self {
        Self::default()
    }

    pub fn bind(mut self, var: &str, profile: Profile) -> Self {
        self.bindings.insert(var.to_string(), profile);
        self
    }

    pub fn get(&self, var: &str) -> Option<&Profile> {
        self.bindings.get(var)
    }
}

/// `(G, G', s) ⊨_α φ` for the given owner.
pub fn satisfies(
    m: &OptimalityModel<'_>,
    owner: usize,
    alpha: &Assignment,
    phi: &FormulaO,
) -> Result<bool, LoError> {
    m.game.check_player(owner)?;
    if let Some(x) = phi.free_variables().into_iter().find(|x| alpha.get(x).is_none()) {
        return Err(LoError::UnboundVariable(x));
    }
    let mut env: Vec<(&str, usize)> = Vec::new();
    for (x, p) in &alpha.bindings {
        if p.players() != m.game.players()
            || (0..p.players()).any(|i| p.component(i) >= m.game.strategy_count(i))
        {
            return Err(GameError::ShapeMismatch.into());
        }
        env.push((x.as_str(), m.game.profile_index(p)));
    }
    let ctx = Evaluation { game: m.game, context: &m.context, focus: m.game.profile_index(&m.focus), owner };
    Ok(ctx.eval(phi, &mut env))
}

/// Closed-formula shorthand for [`satisfies`] with the empty assignment.
pub fn models(m: &OptimalityModel<'_>, owner: usize, phi: &FormulaO) -> Result<bool, LoError> {
    satisfies(m, owner, &Assignment::empty(), phi)
}

/// Evaluates a closed condition against a context, with the focus given as a
/// profile index. Callers guarantee closedness and matching shapes.
pub(crate) fn holds(game: &Game, context: &Restriction, focus: usize, owner: usize, phi: &FormulaO) -> bool {
    Evaluation { game, context, focus, owner }.eval(phi, &mut Vec::new())
}

struct Evaluation<'a> {
    game: &'a Game,
    context: &'a Restriction,
    focus: usize,
    owner: usize,
}

impl<'a> Evaluation<'a> {
    fn lookup(&self, t: &Term, env: &[(&str, usize)]) -> usize {
        match t {
            Term::Focus => self.focus,
            Term::Var(x) => env
                .iter()
                .rev()
                .find(|(y, _)| *y == x.as_str())
                .map(|&(_, p)| p)
                .expect("free variables are checked before evaluation"),
        }
    }

    fn eval<'f>(&self, phi: &'f FormulaO, env: &mut Vec<(&'f str, usize)>) -> bool {
        let g = self.game;
        match phi {
            FormulaO::InContext(t) => {
                let p = self.lookup(t, env);
                (0..g.players()).all(|i| self.context.part(i).contains(g.component_at(p, i)))
            }
            FormulaO::Geq { left, right, at } => {
                let i = self.owner;
                let z = self.lookup(at, env);
                let x = g.component_at(self.lookup(left, env), i);
                let y = g.component_at(self.lookup(right, env), i);
                g.payoff_at(i, g.deviate_at(z, i, x)) >= g.payoff_at(i, g.deviate_at(z, i, y))
            }
            FormulaO::Not(f) => !self.eval(f, env),
            FormulaO::And(a, b) => self.eval(a, env) && self.eval(b, env),
            FormulaO::Exists(x, body) => (0..g.profile_count()).any(|p| {
                env.push((x.as_str(), p));
                let r = self.eval(body, env);
                env.pop();
                r
            }),
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn game_h() -> Game {
        Game::from_integers(
            &[&["U", "M", "D"], &["L", "R"]],
            &[&[2, 1], &[0, 0], &[0, 1], &[2, 0], &[1, 0], &[1, 2]],
        )
        .unwrap()
    }

    fn model<'g>(g: &'g Game, ctx: &[&[&str]], focus: &[&str]) -> OptimalityModel<'g> {
        OptimalityModel::new(g, g.restriction(ctx).unwrap(), g.profile(focus).unwrap()).unwrap()
    }

    #[test]
    fn parses_the_builtins() {
        assert_eq!(parse_lo("exists z in C. forall y. o >= y @ z").unwrap(), builtin("gbr").unwrap());
        assert_eq!(parse_lo("forall y in C. exists z in C. o >= y @ z").unwrap(), builtin("lsd").unwrap());
        assert_eq!(parse_lo("forall y . exists z in C . o >= y @ z").unwrap(), builtin("gsd").unwrap());
    }

    #[test]
    fn parse_error_position() {
        let err = parse_lo("C(o").unwrap_err();
        assert_eq!((err.line, err.column), (1, 4));
        let err = parse_lo("exists x in D . C(x)").unwrap_err();
        assert!(err.message.contains("unknown set"));
        assert!(parse_lo("exists o . C(o)").is_err());
        assert!(parse_lo("C(x) C(y)").is_err());
    }

    #[test]
    fn strict_preference_expands_to_negated_geq() {
        assert_eq!(
            parse_lo("x > y @ z").unwrap(),
            FormulaO::geq(Term::var("y"), Term::var("x"), Term::var("z")).negate()
        );
    }

    #[test]
    fn connective_precedence() {
        let f = parse_lo("C(x) and C(y) or C(z) -> C(o)").unwrap();
        let c = |v: &str| FormulaO::in_context(Term::var(v));
        let expected = c("x").and(c("y")).or(c("z")).implies(FormulaO::in_context(Term::Focus));
        assert_eq!(f, expected);
    }

    #[test]
    fn figure_two_satisfaction_facts() {
        let h = game_h();
        let full = model(&h, &[&["U", "M", "D"], &["L", "R"]], &["D", "R"]);
        assert!(models(&full, 0, &builtin("gsd").unwrap()).unwrap());
        assert!(!models(&full, 0, &builtin("gbr").unwrap()).unwrap());
        let narrow = model(&h, &[&["U", "M"], &["R"]], &["U", "R"]);
        assert!(models(&narrow, 1, &builtin("lsd").unwrap()).unwrap());
        assert!(!models(&narrow, 1, &builtin("gsd").unwrap()).unwrap());
    }

    #[test]
    fn unbound_variable_is_reported() {
        let h = game_h();
        let m = model(&h, &[&["U"], &["L"]], &["U", "L"]);
        let phi = parse_lo("C(x)").unwrap();
        assert_eq!(models(&m, 0, &phi), Err(LoError::UnboundVariable("x".into())));
        let alpha = Assignment::empty().bind("x", h.profile(&["U", "L"]).unwrap());
        assert_eq!(satisfies(&m, 0, &alpha, &phi), Ok(true));
    }

    #[test]
    fn shadowing_rebinds_innermost() {
        let h = game_h();
        let m = model(&h, &[&["U"], &["L"]], &["U", "L"]);
        // the inner x ranges over all of T, so some binding falls outside C
        let phi = parse_lo("exists x in C . exists x . not C(x)").unwrap();
        assert!(models(&m, 0, &phi).unwrap());
    }

    #[test]
    fn analysis_of_builtins() {
        let gbr = analyze(&builtin("gbr").unwrap());
        let gsd = analyze(&builtin("gsd").unwrap());
        let lsd = analyze(&builtin("lsd").unwrap());
        assert!(gbr.positive && gsd.positive && !lsd.positive);
        assert!(lsd.closed && lsd.context_safe);
        let f = analyze(&parse_lo("exists x. C(x)").unwrap());
        assert!(f.closed && f.positive);
        assert!(!analyze(&parse_lo("C(y)").unwrap()).closed);
        assert!(!analyze(&parse_lo("exists y . y >= y @ o").unwrap()).context_safe);
        assert!(!analyze(&parse_lo("C(o)").unwrap()).context_safe);
        assert!(matches!(builtin("nash"), Err(LoError::UnknownCondition(_))));
    }

    #[test]
    fn empty_context_falsifies_global_conditions() {
        let h = game_h();
        let m = OptimalityModel::new(&h, h.empty_restriction(), h.profile(&["U", "L"]).unwrap()).unwrap();
        assert!(!models(&m, 0, &builtin("gbr").unwrap()).unwrap());
        assert!(!models(&m, 0, &builtin("gsd").unwrap()).unwrap());
        // vacuous: no alternative in C
        assert!(models(&m, 0, &builtin("lsd").unwrap()).unwrap());
    }

    #[test]
    fn printer_roundtrips_builtins() {
        for name in BUILTIN_NAMES {
            let f = builtin(name).unwrap();
            assert_eq!(parse_lo(&f.to_string()).unwrap(), f);
        }
    }
}
