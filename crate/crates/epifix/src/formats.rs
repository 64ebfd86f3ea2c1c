//! Text formats for games, belief models, condition definitions and proof scripts.
//!
//! All formats are line based, and `#` starts a comment that runs to the end of the line.

use std::collections::BTreeMap;
use std::fmt::Write as _;

use epifix_core::belief::BeliefError;
use epifix_core::game::{GameSpec, PayoffEntry, StrategyDecl};
use epifix_core::lnu::{parse_nu, ConditionRegistry, LnuError};
use epifix_core::lo::parse_lo;
use epifix_core::proof::{Justification, LemmaDecl, ProofLine};
use epifix_core::{BeliefModel, Event, FormulaO, Game, GameError, ParseError, Payoff, ProofScript};
use thiserror::Error;

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum FormatError {
    #[error("line {line}: {message}")]
    Syntax { line: usize, message: String },
    #[error("{0}")]
    Missing(String),
    #[error(transparent)]
    Game(#[from] GameError),
    #[error(transparent)]
    Model(#[from] BeliefError),
    #[error("line {line}, column {column}: {message}")]
    Formula { line: usize, column: usize, message: String },
    #[error("line {line}: {source}")]
    Condition { line: usize, source: LnuError },
}

fn syntax(line: usize, message: impl Into<String>) -> FormatError {
    FormatError::Syntax { line, message: message.into() }
}

/// Non-empty lines with comments removed, paired with 1-based line numbers
/// and the byte offset of the kept text within the original line.
fn content_lines(text: &str) -> impl Iterator<Item = (usize, usize, &str)> {
    text.lines().enumerate().filter_map(|(k, raw)| {
        let body = raw.split('#').next().unwrap_or("");
        let trimmed = body.trim_start();
        let offset = body.len() - trimmed.len();
        let trimmed = trimmed.trim_end();
        (!trimmed.is_empty()).then_some((k + 1, offset, trimmed))
    })
}

/// Splits `keyword <i>: rest` and returns `(i, rest)`.
fn indexed<'a>(line: usize, body: &'a str, keyword: &str) -> Result<(usize, &'a str), FormatError> {
    let rest = &body[keyword.len()..];
    let (index, rest) =
        rest.split_once(':').ok_or_else(|| syntax(line, format!("expected `{keyword} <player>: ...`")))?;
    let player: usize = index
        .trim()
        .parse()
        .map_err(|_| syntax(line, format!("`{}` is not a player number", index.trim())))?;
    if player == 0 {
        return Err(syntax(line, "players are numbered from 1"));
    }
    Ok((player, rest))
}

fn starts_with_word(body: &str, word: &str) -> bool {
    body.strip_prefix(word).is_some_and(|rest| rest.starts_with(|c: char| c.is_whitespace() || c == ':'))
}

fn parse_payoff(line: usize, text: &str) -> Result<Payoff, FormatError> {
    text.parse::<Payoff>().map_err(|_| syntax(line, format!("`{text}` is not a number or fraction")))
}

/// Parses the game format:
///
/// ```text
/// players: 2
/// strategies 1: U D
/// strategies 2: L R
/// payoff U L : 1 1
/// ```
pub fn parse_game(text: &str) -> Result<Game, FormatError> {
    let mut players: Option<usize> = None;
    let mut strategies: BTreeMap<usize, StrategyDecl> = BTreeMap::new();
    let mut payoffs = Vec::new();
    for (line, _, body) in content_lines(text) {
        if let Some(rest) = body.strip_prefix("players:") {
            if players.is_some() {
                return Err(syntax(line, "`players:` given twice"));
            }
            let n = rest
                .trim()
                .parse()
                .map_err(|_| syntax(line, format!("`{}` is not a player count", rest.trim())))?;
            players = Some(n);
        } else if starts_with_word(body, "strategies") {
            let (player, rest) = indexed(line, body, "strategies")?;
            let decl = StrategyDecl {
                names: rest.split_whitespace().map(str::to_string).collect(),
                line: Some(line),
            };
            if strategies.insert(player, decl).is_some() {
                return Err(syntax(line, format!("strategies for player {player} given twice")));
            }
        } else if starts_with_word(body, "payoff") {
            let (names, values) = body["payoff".len()..]
                .split_once(':')
                .ok_or_else(|| syntax(line, "expected `payoff <strategies> : <values>`"))?;
            payoffs.push(PayoffEntry {
                profile: names.split_whitespace().map(str::to_string).collect(),
                values: values.split_whitespace().map(|v| parse_payoff(line, v)).collect::<Result<_, _>>()?,
                line: Some(line),
            });
        } else {
            return Err(syntax(line, format!("unrecognised line `{body}`")));
        }
    }
    let players = players.ok_or_else(|| FormatError::Missing("missing `players:` header".into()))?;
    if let Some((&i, decl)) = strategies.iter().find(|(&i, _)| i > players) {
        return Err(syntax(
            decl.line.unwrap_or(0),
            format!("player {i} is out of range (the game has {players} players)"),
        ));
    }
    let mut decls = Vec::with_capacity(players);
    for i in 1..=players {
        decls.push(
            strategies
                .remove(&i)
                .ok_or_else(|| FormatError::Missing(format!("no strategies declared for player {i}")))?,
        );
    }
    Ok(Game::build(&GameSpec { players, strategies: decls, payoffs })?)
}

/// Writes a game in the format read by [`parse_game`], payoffs in profile order.
pub fn write_game(g: &Game) -> String {
    let spec = g.to_spec();
    let mut out = format!("players: {}\n", spec.players);
    for (i, decl) in spec.strategies.iter().enumerate() {
        let _ = writeln!(out, "strategies {}: {}", i + 1, decl.names.join(" "));
    }
    for entry in &spec.payoffs {
        let values: Vec<String> = entry.values.iter().map(|v| v.to_string()).collect();
        let _ = writeln!(out, "payoff {} : {}", entry.profile.join(" "), values.join(" "));
    }
    out
}

// `name=value` pairs where a value is a word or a `{a,b,…}` set; whitespace is free.
enum Value {
    Word(String),
    Set(Vec<String>),
}

fn assignments(line: usize, text: &str) -> Result<Vec<(String, Value)>, FormatError> {
    let mut out = Vec::new();
    let mut chars = text.chars().peekable();
    let word = |chars: &mut std::iter::Peekable<std::str::Chars<'_>>| {
        while chars.peek().is_some_and(|c| c.is_whitespace()) {
            chars.next();
        }
        let mut w = String::new();
        while let Some(&c) = chars.peek() {
            if c.is_whitespace() || "={},".contains(c) {
                break;
            }
            w.push(c);
            chars.next();
        }
        while chars.peek().is_some_and(|c| c.is_whitespace()) {
            chars.next();
        }
        w
    };
    loop {
        let name = word(&mut chars);
        if name.is_empty() {
            if chars.peek().is_none() {
                return Ok(out);
            }
            return Err(syntax(line, "expected `state=value`"));
        }
        if chars.next() != Some('=') {
            return Err(syntax(line, format!("expected `=` after `{name}`")));
        }
        let first = word(&mut chars);
        if !first.is_empty() {
            out.push((name, Value::Word(first)));
            continue;
        }
        if chars.next() != Some('{') {
            return Err(syntax(line, format!("expected a strategy or a set after `{name}=`")));
        }
        let mut set = Vec::new();
        loop {
            let member = word(&mut chars);
            match chars.next() {
                Some('}') => {
                    if !member.is_empty() {
                        set.push(member);
                    } else if !set.is_empty() {
                        return Err(syntax(line, "empty set member"));
                    }
                    break;
                }
                Some(',') if !member.is_empty() => set.push(member),
                _ => return Err(syntax(line, format!("malformed set after `{name}=`"))),
            }
        }
        out.push((name, Value::Set(set)));
    }
}

/// Parses the belief-model format against `g`:
///
/// ```text
/// states: w1 w2
/// plays 1: w1=U w2=D
/// possible 1: w1={w1,w2} w2={w2}
/// ```
pub fn parse_model<'g>(text: &str, g: &'g Game) -> Result<BeliefModel<'g>, FormatError> {
    let n = g.players();
    let mut states: Option<Vec<String>> = None;
    let mut plays: Vec<BTreeMap<String, (usize, String)>> = vec![BTreeMap::new(); n];
    let mut possible: Vec<BTreeMap<String, (usize, Vec<String>)>> = vec![BTreeMap::new(); n];
    let check_player = |line: usize, i: usize| {
        if i > n {
            Err(syntax(line, format!("player {i} is out of range (the game has {n} players)")))
        } else {
            Ok(i - 1)
        }
    };
    for (line, _, body) in content_lines(text) {
        if let Some(rest) = body.strip_prefix("states:") {
            if states.is_some() {
                return Err(syntax(line, "`states:` given twice"));
            }
            states = Some(rest.split_whitespace().map(str::to_string).collect());
        } else if starts_with_word(body, "plays") {
            let (i, rest) = indexed(line, body, "plays")?;
            let i = check_player(line, i)?;
            for (state, value) in assignments(line, rest)? {
                let Value::Word(s) = value else {
                    return Err(syntax(line, format!("`{state}` must be assigned a strategy")));
                };
                if plays[i].insert(state.clone(), (line, s)).is_some() {
                    return Err(syntax(line, format!("state `{state}` assigned twice")));
                }
            }
        } else if starts_with_word(body, "possible") {
            let (i, rest) = indexed(line, body, "possible")?;
            let i = check_player(line, i)?;
            for (state, value) in assignments(line, rest)? {
                let Value::Set(set) = value else {
                    return Err(syntax(line, format!("`{state}` must be assigned a set of states")));
                };
                if possible[i].insert(state.clone(), (line, set)).is_some() {
                    return Err(syntax(line, format!("state `{state}` assigned twice")));
                }
            }
        } else {
            return Err(syntax(line, format!("unrecognised line `{body}`")));
        }
    }
    let states = states.ok_or_else(|| FormatError::Missing("missing `states:` line".into()))?;
    if states.is_empty() {
        return Err(BeliefError::NoStates.into());
    }
    let index = |line: usize, name: &str| {
        states
            .iter()
            .position(|s| s == name)
            .ok_or_else(|| syntax(line, BeliefError::UnknownState(name.to_string()).to_string()))
    };
    let mut strategy_of = vec![vec![0; states.len()]; n];
    let mut events = vec![vec![Event::EMPTY; states.len()]; n];
    for i in 0..n {
        for (state, (line, s)) in &plays[i] {
            let w = index(*line, state)?;
            strategy_of[i][w] = g.strategy_index(i, s).ok_or_else(|| {
                syntax(*line, BeliefError::UnknownStrategy { player: i + 1, name: s.clone() }.to_string())
            })?;
        }
        for (state, (line, set)) in &possible[i] {
            let w = index(*line, state)?;
            let members = set.iter().map(|v| index(*line, v)).collect::<Result<Vec<_>, _>>()?;
            events[i][w] = Event::from_states(members);
        }
        for state in &states {
            if !plays[i].contains_key(state) {
                return Err(FormatError::Missing(format!(
                    "player {} has no strategy at state `{state}`",
                    i + 1
                )));
            }
            if !possible[i].contains_key(state) {
                return Err(FormatError::Missing(format!(
                    "player {} has no possibility set at state `{state}`",
                    i + 1
                )));
            }
        }
    }
    Ok(BeliefModel::new(g, states, strategy_of, events)?)
}

/// Renders an event as `{w1, w2}`.
pub fn show_event(m: &BeliefModel<'_>, e: Event) -> String {
    let names: Vec<&str> = e.states().map(|w| m.state_name(w)).collect();
    format!("{{{}}}", names.join(", "))
}

/// Writes a model in the format read by [`parse_model`].
pub fn write_model(m: &BeliefModel<'_>) -> String {
    let g = m.game();
    let k = m.state_count();
    let mut out = format!("states: {}\n", m.state_names().join(" "));
    for i in 0..g.players() {
        let cells: Vec<String> = (0..k)
            .map(|w| format!("{}={}", m.state_name(w), g.strategy_name(i, m.strategy_of(i, w))))
            .collect();
        let _ = writeln!(out, "plays {}: {}", i + 1, cells.join(" "));
    }
    for i in 0..g.players() {
        let cells: Vec<String> = (0..k)
            .map(|w| {
                let members: Vec<&str> = m.possible(i, w).states().map(|v| m.state_name(v)).collect();
                format!("{}={{{}}}", m.state_name(w), members.join(","))
            })
            .collect();
        let _ = writeln!(out, "possible {}: {}", i + 1, cells.join(" "));
    }
    out
}

fn shift(line: usize, offset: usize, e: ParseError) -> FormatError {
    FormatError::Formula { line, column: offset + e.column, message: e.message }
}

/// Parses `condition <name>: <formula>` lines.
pub fn parse_conditions(text: &str) -> Result<Vec<(usize, String, FormulaO)>, FormatError> {
    let mut out = Vec::new();
    for (line, offset, body) in content_lines(text) {
        if !starts_with_word(body, "condition") {
            return Err(syntax(line, "expected `condition <name>: <formula>`"));
        }
        let rest = &body["condition".len()..];
        let (name, formula) =
            rest.split_once(':').ok_or_else(|| syntax(line, "expected `condition <name>: <formula>`"))?;
        let name = name.trim();
        if name.is_empty() || !name.chars().all(|c| c.is_ascii_alphanumeric() || c == '_') {
            return Err(syntax(line, format!("`{name}` is not a valid condition name")));
        }
        let formula_offset = offset + body.len() - formula.len();
        let phi = parse_lo(formula).map_err(|e| shift(line, formula_offset, e))?;
        out.push((line, name.to_string(), phi));
    }
    Ok(out)
}

/// Adds every condition of a condition file to `registry`.
pub fn load_conditions(text: &str, registry: &mut ConditionRegistry) -> Result<Vec<String>, FormatError> {
    let mut names = Vec::new();
    for (line, name, phi) in parse_conditions(text)? {
        registry.register(&name, phi).map_err(|source| FormatError::Condition { line, source })?;
        names.push(name);
    }
    Ok(names)
}

fn parse_justification(line: usize, text: &str) -> Result<Justification, FormatError> {
    let words: Vec<&str> = text.split_whitespace().collect();
    let number =
        |w: &str| w.parse::<usize>().map_err(|_| syntax(line, format!("`{w}` is not a line number")));
    match words.as_slice() {
        ["ratDis"] => Ok(Justification::RatDis),
        ["nuDis"] => Ok(Justification::NuDis),
        ["taut"] => Ok(Justification::Taut),
        ["mp", j, k] => Ok(Justification::Mp(number(j)?, number(k)?)),
        ["nuInd", j] => Ok(Justification::NuInd(number(j)?)),
        ["incl", j] => Ok(Justification::Incl(number(j)?)),
        ["link", rest @ ..] if !rest.is_empty() => {
            let names: Vec<String> = rest.join("").split(',').map(str::to_string).collect();
            if names.iter().any(String::is_empty) {
                return Err(syntax(line, "empty lemma name in `link`"));
            }
            Ok(Justification::Link(names))
        }
        _ => Err(syntax(line, format!("unknown justification `{}`", text.trim()))),
    }
}

/// Parses a proof script: `lemma <name>: <c1> -> <c2>` directives and
/// `<n>. <formula> ; <justification>` lines.
pub fn parse_proof(text: &str) -> Result<ProofScript, FormatError> {
    let mut script = ProofScript::default();
    for (line, offset, body) in content_lines(text) {
        if starts_with_word(body, "lemma") {
            let rest = &body["lemma".len()..];
            let parsed = rest.split_once(':').and_then(|(name, imp)| {
                let (a, b) = imp.split_once("->")?;
                let (name, a, b) = (name.trim(), a.trim(), b.trim());
                let word =
                    |s: &str| !s.is_empty() && s.chars().all(|c| c.is_ascii_alphanumeric() || c == '_');
                (word(name) && word(a) && word(b)).then(|| LemmaDecl {
                    name: name.to_string(),
                    premise: a.to_string(),
                    conclusion: b.to_string(),
                })
            });
            script.lemmas.push(
                parsed.ok_or_else(|| syntax(line, "expected `lemma <name>: <condition> -> <condition>`"))?,
            );
            continue;
        }
        let (number, rest) = body
            .split_once('.')
            .ok_or_else(|| syntax(line, "expected `<n>. <formula> ; <justification>`"))?;
        let number: usize = number
            .trim()
            .parse()
            .map_err(|_| syntax(line, format!("`{}` is not a line number", number.trim())))?;
        let (formula, justification) =
            rest.rsplit_once(';').ok_or_else(|| syntax(line, "missing `; <justification>`"))?;
        let formula_offset = offset + body.len() - rest.len();
        let formula = parse_nu(formula).map_err(|e| shift(line, formula_offset, e))?;
        script.lines.push(ProofLine {
            number,
            formula,
            justification: parse_justification(line, justification)?,
        });
    }
    Ok(script)
}

/// Writes a script in the format read by [`parse_proof`].
pub fn write_proof(script: &ProofScript) -> String {
    let mut out = String::new();
    for l in &script.lemmas {
        let _ = writeln!(out, "lemma {}: {} -> {}", l.name, l.premise, l.conclusion);
    }
    for l in &script.lines {
        let _ = writeln!(out, "{}. {} ; {}", l.number, l.formula, l.justification);
    }
    out
}
