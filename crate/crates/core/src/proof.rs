//! Proof checking for the fixpoint language.
//!
//! Axiom schemata:
//!
//! ```text
//! ratDis   rat(c) -> (box χ -> O(c) χ)          c positive
//! nuDis    (nu X . ψ) -> ψ[X ↦ nu X . ψ]        ψ positive in X
//! ```
//!
//! Rules:
//!
//! ```text
//! nuInd j  from χ -> ψ[X ↦ χ]  infer  χ -> nu X . ψ      ψ positive in X
//! incl j   from χ -> ψ         infer  (nu X . χ) -> (nu X . ψ)
//!                                     χ positive in X, ψ ν-free with X free
//! link n   from a lemma c1 → c2 infer  O(c1) X -> O(c2) X
//! mp j k   from a and a -> b   infer  b
//! taut     propositional tautology over the maximal non-boolean subformulas
//! ```
//!
//! Lemmas relate two optimality conditions and are admitted only after a
//! sweep over every optimality model of a finite game corpus finds no
//! counterexample.

use alloc::collections::BTreeMap;
use alloc::string::{String, ToString};
use alloc::vec::Vec;
use core::fmt;

use thiserror::Error;

use crate::game::{Game, Profile, Restriction};
use crate::lnu::{positive_in_x, ConditionRegistry, FormulaNu, LnuError};
use crate::lo::{self, FormulaO};
use crate::oracle;

/// Most distinct atoms a `taut` line may have.
pub const MAX_ATOMS: usize = 16;

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum Justification {
    RatDis,
    NuDis,
    Taut,
    Mp(usize, usize),
    NuInd(usize),
    Incl(usize),
    Link(Vec<String>),
}

impl fmt::Display for Justification {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Justification::RatDis => f.write_str("ratDis"),
            Justification::NuDis => f.write_str("nuDis"),
            Justification::Taut => f.write_str("taut"),
            Justification::Mp(j, k) => write!(f, "mp {j} {k}"),
            Justification::NuInd(j) => write!(f, "nuInd {j}"),
            Justification::Incl(j) => write!(f, "incl {j}"),
            Justification::Link(names) => write!(f, "link {}", names.join(",")),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ProofLine {
    pub number: usize,
    pub formula: FormulaNu,
    pub justification: Justification,
}

/// A lemma a script expects to be registered: `premise → conclusion`.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct LemmaDecl {
    pub name: String,
    pub premise: String,
    pub conclusion: String,
}

#[derive(Debug, Clone, PartialEq, Eq, Default)]
pub struct ProofScript {
    pub lemmas: Vec<LemmaDecl>,
    pub lines: Vec<ProofLine>,
}

impl ProofScript {
    /// The formula on the last line.
    pub fn theorem(&self) -> Option<&FormulaNu> {
        self.lines.last().map(|l| &l.formula)
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum ProofFailure {
    #[error("script has no lines")]
    Empty,
    #[error("line number {found} does not follow {previous}")]
    Numbering { previous: usize, found: usize },
    #[error("line {0} is not an earlier line")]
    Dangling(usize),
    #[error(transparent)]
    Formula(#[from] LnuError),
    #[error("not an instance of ratDis")]
    NotRatDis,
    #[error("not an instance of nuDis")]
    NotNuDis,
    #[error("not a propositional tautology")]
    NotTautology,
    #[error("{0} atoms exceed the truth-table limit of {MAX_ATOMS}")]
    TooManyAtoms(usize),
    #[error("line {major} is not `(line {minor}) -> (this line)`")]
    ModusPonens { minor: usize, major: usize },
    #[error("nuInd: this line must read `χ -> nu X . ψ` and line {0} `χ -> ψ[X ↦ χ]`")]
    NuIndShape(usize),
    #[error("incl: this line must read `(nu X . χ) -> (nu X . ψ)` and line {0} `χ -> ψ`")]
    InclShape(usize),
    #[error("{0} is not positive in X")]
    NotPositive(String),
    #[error("incl: {0} must be ν-free")]
    NotNuFree(String),
    #[error("incl: X must occur free in {0}")]
    NoFreeX(String),
    #[error("link: this line must read `O(c1) X -> O(c2) X`")]
    LinkShape,
    #[error("link: lemma `{0}` is not registered")]
    UnknownLemma(String),
    #[error("link: no cited lemma proves {premise} → {conclusion}")]
    LinkUnsupported { premise: String, conclusion: String },
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct LineFailure {
    /// The failing line's number, or 0 for script-level failures.
    pub line: usize,
    pub reason: ProofFailure,
}

impl fmt::Display for LineFailure {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "line {}: {}", self.line, self.reason)
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ProofReport {
    pub ok: bool,
    pub first_failure: Option<LineFailure>,
}

/// What a schema instance was built from.
#[derive(Debug, Clone, PartialEq, Eq)]
pub enum Instantiation {
    RatDis { cond: String, player: Option<usize>, chi: FormulaNu },
    NuDis { psi: FormulaNu },
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct AxiomMatch {
    pub rat_dis: bool,
    pub nu_dis: bool,
    pub instantiation: Option<Instantiation>,
}

fn positive(psi: &FormulaNu, conditions: &ConditionRegistry) -> bool {
    positive_in_x(psi, conditions).unwrap_or(false)
}

fn match_rat_dis(f: &FormulaNu, conditions: &ConditionRegistry) -> Option<Instantiation> {
    let (rat, rest) = f.as_implication()?;
    let (boxed, opt) = rest.as_implication()?;
    let FormulaNu::Rat { cond, player } = rat else {
        return None;
    };
    let FormulaNu::Believes { player: p2, body: chi } = boxed else {
        return None;
    };
    let FormulaNu::Optimal { cond: c3, player: p3, body } = opt else {
        return None;
    };
    let same = cond == c3 && player == p2 && player == p3 && chi == body;
    let monotone = conditions.get(cond).is_some_and(|c| c.analysis.positive);
    (same && monotone).then(|| Instantiation::RatDis {
        cond: cond.clone(),
        player: *player,
        chi: (**chi).clone(),
    })
}

fn match_nu_dis(f: &FormulaNu, conditions: &ConditionRegistry) -> Option<Instantiation> {
    let (lhs, rhs) = f.as_implication()?;
    let FormulaNu::Nu(psi) = lhs else {
        return None;
    };
    (*rhs == psi.substitute(lhs) && positive(psi, conditions))
        .then(|| Instantiation::NuDis { psi: (**psi).clone() })
}

/// Whether `f` instantiates one of the axiom schemata.
pub fn check_axiom(f: &FormulaNu, conditions: &ConditionRegistry) -> AxiomMatch {
    let rat = match_rat_dis(f, conditions);
    let nu = match_nu_dis(f, conditions);
    AxiomMatch { rat_dis: rat.is_some(), nu_dis: nu.is_some(), instantiation: rat.or(nu) }
}

/// Truth-table check with every maximal subformula that is neither `not`
/// nor `and` treated as an atom.
pub fn is_tautology(f: &FormulaNu) -> Result<bool, ProofFailure> {
    fn collect<'a>(f: &'a FormulaNu, atoms: &mut Vec<&'a FormulaNu>) {
        match f {
            FormulaNu::Not(a) => collect(a, atoms),
            FormulaNu::And(a, b) => {
                collect(a, atoms);
                collect(b, atoms);
            }
            other => {
                if !atoms.contains(&other) {
                    atoms.push(other);
                }
            }
        }
    }
    fn value(f: &FormulaNu, atoms: &[&FormulaNu], row: u32) -> bool {
        match f {
            FormulaNu::Not(a) => !value(a, atoms, row),
            FormulaNu::And(a, b) => value(a, atoms, row) && value(b, atoms, row),
            other => {
                let k = atoms.iter().position(|a| *a == other).expect("atom collected");
                row & (1 << k) != 0
            }
        }
    }
    let mut atoms = Vec::new();
    collect(f, &mut atoms);
    if atoms.len() > MAX_ATOMS {
        return Err(ProofFailure::TooManyAtoms(atoms.len()));
    }
    Ok((0..(1u32 << atoms.len())).all(|row| value(f, &atoms, row)))
}

/// Checks one line against the lines before it.
pub fn check_rule(
    line: &ProofLine,
    earlier: &[ProofLine],
    conditions: &ConditionRegistry,
    lemmas: &LemmaRegistry,
) -> Result<(), ProofFailure> {
    let f = &line.formula;
    for (cond, _) in f.conditions() {
        conditions.lookup(cond)?;
    }
    if !f.is_first_order() {
        return Err(LnuError::SecondOrder.into());
    }
    let get = |j: usize| {
        earlier.iter().find(|l| l.number == j).map(|l| &l.formula).ok_or(ProofFailure::Dangling(j))
    };
    match &line.justification {
        Justification::RatDis => match_rat_dis(f, conditions).map(|_| ()).ok_or(ProofFailure::NotRatDis),
        Justification::NuDis => match_nu_dis(f, conditions).map(|_| ()).ok_or(ProofFailure::NotNuDis),
        Justification::Taut => {
            if is_tautology(f)? {
                Ok(())
            } else {
                Err(ProofFailure::NotTautology)
            }
        }
        Justification::Mp(j, k) => {
            let (minor, major) = (get(*j)?, get(*k)?);
            match major.as_implication() {
                Some((a, b)) if a == minor && b == f => Ok(()),
                _ => Err(ProofFailure::ModusPonens { minor: *j, major: *k }),
            }
        }
        Justification::NuInd(j) => {
            let premise = get(*j)?;
            let shape = ProofFailure::NuIndShape(*j);
            let (chi, nu) = f.as_implication().ok_or(shape.clone())?;
            let FormulaNu::Nu(psi) = nu else {
                return Err(shape);
            };
            if *premise != chi.clone().implies(psi.substitute(chi)) {
                return Err(shape);
            }
            if !positive(psi, conditions) {
                return Err(ProofFailure::NotPositive(psi.to_string()));
            }
            Ok(())
        }
        Justification::Incl(j) => {
            let premise = get(*j)?;
            let shape = ProofFailure::InclShape(*j);
            let (lhs, rhs) = f.as_implication().ok_or(shape.clone())?;
            let (FormulaNu::Nu(chi), FormulaNu::Nu(psi)) = (lhs, rhs) else {
                return Err(shape);
            };
            if *premise != (**chi).clone().implies((**psi).clone()) {
                return Err(shape);
            }
            if !positive(chi, conditions) {
                return Err(ProofFailure::NotPositive(chi.to_string()));
            }
            if !psi.is_nu_free() {
                return Err(ProofFailure::NotNuFree(psi.to_string()));
            }
            if !psi.has_free_x() {
                return Err(ProofFailure::NoFreeX(psi.to_string()));
            }
            Ok(())
        }
        Justification::Link(names) => {
            let (lhs, rhs) = f.as_implication().ok_or(ProofFailure::LinkShape)?;
            let (
                FormulaNu::Optimal { cond: c1, player: p1, body: b1 },
                FormulaNu::Optimal { cond: c2, player: p2, body: b2 },
            ) = (lhs, rhs)
            else {
                return Err(ProofFailure::LinkShape);
            };
            if p1 != p2 || **b1 != FormulaNu::Var || **b2 != FormulaNu::Var {
                return Err(ProofFailure::LinkShape);
            }
            let mut supported = false;
            for name in names {
                let lemma = lemmas.get(name).ok_or_else(|| ProofFailure::UnknownLemma(name.clone()))?;
                supported |= lemma.premise == *c1
                    && lemma.conclusion == *c2
                    && conditions.get(c1).map(|c| &c.formula) == Some(&lemma.premise_formula)
                    && conditions.get(c2).map(|c| &c.formula) == Some(&lemma.conclusion_formula);
            }
            if supported {
                Ok(())
            } else {
                Err(ProofFailure::LinkUnsupported { premise: c1.clone(), conclusion: c2.clone() })
            }
        }
    }
}

/// Checks every line in order and stops at the first failure.
pub fn check_proof(
    script: &ProofScript,
    conditions: &ConditionRegistry,
    lemmas: &LemmaRegistry,
) -> ProofReport {
    let fail = |line, reason| ProofReport { ok: false, first_failure: Some(LineFailure { line, reason }) };
    if script.lines.is_empty() {
        return fail(0, ProofFailure::Empty);
    }
    let mut previous = 0;
    for (k, line) in script.lines.iter().enumerate() {
        if line.number <= previous {
            return fail(line.number, ProofFailure::Numbering { previous, found: line.number });
        }
        previous = line.number;
        if let Err(reason) = check_rule(line, &script.lines[..k], conditions, lemmas) {
            return fail(line.number, reason);
        }
    }
    ProofReport { ok: true, first_failure: None }
}

/// A counterexample to a lemma: the premise holds and the conclusion does not.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Witness {
    pub game: String,
    pub context: Restriction,
    pub focus: Profile,
    /// 0-based.
    pub owner: usize,
    /// Human-readable form using strategy names.
    pub description: String,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct SweepEvidence {
    pub games: Vec<String>,
    /// `(context, focus, owner)` triples examined.
    pub models_checked: u64,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Lemma {
    pub premise: String,
    pub conclusion: String,
    pub premise_formula: FormulaO,
    pub conclusion_formula: FormulaO,
    pub evidence: SweepEvidence,
}

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum LemmaError {
    #[error(transparent)]
    Condition(#[from] LnuError),
    #[error("lemma `{0}` is already registered")]
    Duplicate(String),
    #[error("{premise} → {conclusion} fails in {} optimality models, e.g. {}", witnesses.len(), witnesses[0].description)]
    Refused { premise: String, conclusion: String, witnesses: Vec<Witness> },
}

/// Lemmas `c1 → c2` between named conditions, each backed by a sweep.
#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct LemmaRegistry {
    entries: BTreeMap<String, Lemma>,
}

impl LemmaRegistry {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn get(&self, name: &str) -> Option<&Lemma> {
        self.entries.get(name)
    }

    pub fn names(&self) -> impl Iterator<Item = &str> {
        self.entries.keys().map(String::as_str)
    }

    /// Sweeps every context, focus profile and owner of every corpus game and
    /// registers `premise → conclusion` only if no counterexample turns up.
    pub fn register_lemma(
        &mut self,
        name: &str,
        premise: &str,
        conclusion: &str,
        conditions: &ConditionRegistry,
        corpus: &[(String, Game)],
    ) -> Result<&Lemma, LemmaError> {
        if self.entries.contains_key(name) {
            return Err(LemmaError::Duplicate(name.to_string()));
        }
        let p = conditions.lookup(premise)?.formula.clone();
        let c = conditions.lookup(conclusion)?.formula.clone();
        let (witnesses, evidence) = sweep(&p, &c, corpus);
        if !witnesses.is_empty() {
            return Err(LemmaError::Refused {
                premise: premise.to_string(),
                conclusion: conclusion.to_string(),
                witnesses,
            });
        }
        Ok(self.entries.entry(name.to_string()).or_insert(Lemma {
            premise: premise.to_string(),
            conclusion: conclusion.to_string(),
            premise_formula: p,
            conclusion_formula: c,
            evidence,
        }))
    }
}

fn sweep(
    premise: &FormulaO,
    conclusion: &FormulaO,
    corpus: &[(String, Game)],
) -> (Vec<Witness>, SweepEvidence) {
    let mut witnesses = Vec::new();
    let mut checked = 0;
    for (name, g) in corpus {
        for (context, focus) in oracle::optimality_models(g) {
            let index = g.profile_index(&focus);
            for owner in 0..g.players() {
                checked += 1;
                if lo::holds(g, &context, index, owner, premise)
                    && !lo::holds(g, &context, index, owner, conclusion)
                {
                    witnesses.push(Witness {
                        description: alloc::format!(
                            "{name}: context {}, focus {}, player {}",
                            g.show_restriction(&context),
                            g.show_profile(&focus),
                            owner + 1
                        ),
                        game: name.clone(),
                        context: context.clone(),
                        focus: focus.clone(),
                        owner,
                    });
                }
            }
        }
    }
    let evidence =
        SweepEvidence { games: corpus.iter().map(|(n, _)| n.clone()).collect(), models_checked: checked };
    (witnesses, evidence)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::lnu::parse_nu;
    use alloc::vec;

    fn p(text: &str) -> FormulaNu {
        parse_nu(text).unwrap()
    }

    fn line(number: usize, text: &str, justification: Justification) -> ProofLine {
        ProofLine { number, formula: p(text), justification }
    }

    fn reg() -> ConditionRegistry {
        ConditionRegistry::with_builtins()
    }

    #[test]
    fn axiom_examples() {
        let r = reg();
        let rat = p("rat(gbr) -> (box (CB rat(gbr) and rat(gbr)) -> O(gbr) (CB rat(gbr) and rat(gbr)))");
        let m = check_axiom(&rat, &r);
        assert!(m.rat_dis && !m.nu_dis);
        let nu = p("CB rat(gbr) -> box (CB rat(gbr) and rat(gbr))");
        let m = check_axiom(&nu, &r);
        assert!(m.nu_dis && !m.rat_dis);
        assert_eq!(m.instantiation, Some(Instantiation::NuDis { psi: p("box (X and rat(gbr))") }));
        let lsd = p("rat(lsd) -> (box rat(gbr) -> O(lsd) rat(gbr))");
        assert!(!check_axiom(&lsd, &r).rat_dis);
        let mixed = p("rat(gbr) -> (box rat(gbr) -> O(gsd) rat(gbr))");
        assert!(!check_axiom(&mixed, &r).rat_dis);
    }

    #[test]
    fn tautologies() {
        assert!(is_tautology(&p("rat(gbr) or not rat(gbr)")).unwrap());
        assert!(is_tautology(&p("(X -> rat(gbr)) -> ((rat(gbr) -> X) -> (X -> X))")).unwrap());
        assert!(!is_tautology(&p("X -> rat(gbr)")).unwrap());
        // box distributes semantically but the checker treats box X and box (X and X) as unrelated atoms
        assert!(!is_tautology(&p("box X -> box (X and X)")).unwrap());
    }

    #[test]
    fn too_many_atoms() {
        let mut f = FormulaNu::rat_of("gbr", 0);
        for i in 0..17 {
            f = f.and(FormulaNu::Var.believed_by(i));
        }
        assert_eq!(is_tautology(&f), Err(ProofFailure::TooManyAtoms(18)));
    }

    #[test]
    fn nu_ind_example() {
        let r = reg();
        let chi = "(CB rat(gbr) and rat(gbr))";
        let premise = line(1, &alloc::format!("{chi} -> O(gbr) {chi}"), Justification::Taut);
        let conclusion = line(2, &alloc::format!("{chi} -> nu X . O(gbr) X"), Justification::NuInd(1));
        assert_eq!(
            check_rule(&conclusion, core::slice::from_ref(&premise), &r, &LemmaRegistry::new()),
            Ok(())
        );
        let bad = line(2, &alloc::format!("{chi} -> nu X . O(lsd) X"), Justification::NuInd(1));
        assert!(check_rule(&bad, &[premise], &r, &LemmaRegistry::new()).is_err());
    }

    #[test]
    fn modus_ponens_mismatch() {
        let r = reg();
        let lines = vec![
            line(1, "rat(gbr)", Justification::Taut),
            line(2, "rat(gsd) -> rat(lsd)", Justification::Taut),
        ];
        let next = line(3, "rat(lsd)", Justification::Mp(1, 2));
        assert_eq!(
            check_rule(&next, &lines, &r, &LemmaRegistry::new()),
            Err(ProofFailure::ModusPonens { minor: 1, major: 2 })
        );
        let dangling = line(3, "rat(lsd)", Justification::Mp(1, 7));
        assert_eq!(check_rule(&dangling, &lines, &r, &LemmaRegistry::new()), Err(ProofFailure::Dangling(7)));
    }

    #[test]
    fn lemma_sweeps() {
        let r = reg();
        let corpus = oracle::standard_corpus();
        let mut lemmas = LemmaRegistry::new();
        lemmas.register_lemma("gbr_lsd", "gbr", "lsd", &r, &corpus).unwrap();
        lemmas.register_lemma("gbr_gsd", "gbr", "gsd", &r, &corpus).unwrap();
        let Err(LemmaError::Refused { witnesses, .. }) =
            lemmas.register_lemma("lsd_gsd", "lsd", "gsd", &r, &corpus)
        else {
            panic!("lsd → gsd must be refused");
        };
        let h = oracle::fig2();
        let context = h.restriction(&[&["U", "M"], &["R"]]).unwrap();
        let focus = h.profile(&["U", "R"]).unwrap();
        assert!(witnesses
            .iter()
            .any(|w| w.game == "fig2" && w.context == context && w.focus == focus && w.owner == 1));
    }

    #[test]
    fn link_needs_registered_lemma() {
        let r = reg();
        let corpus = oracle::bundled_games();
        let mut lemmas = LemmaRegistry::new();
        let f = line(1, "O(gbr) X -> O(lsd) X", Justification::Link(vec!["g".into()]));
        assert_eq!(check_rule(&f, &[], &r, &lemmas), Err(ProofFailure::UnknownLemma("g".into())));
        lemmas.register_lemma("g", "gbr", "lsd", &r, &corpus).unwrap();
        assert_eq!(check_rule(&f, &[], &r, &lemmas), Ok(()));
        let backwards = line(1, "O(lsd) X -> O(gbr) X", Justification::Link(vec!["g".into()]));
        assert!(matches!(
            check_rule(&backwards, &[], &r, &lemmas),
            Err(ProofFailure::LinkUnsupported { .. })
        ));
    }

    #[test]
    fn script_level_checks() {
        let r = reg();
        let l = LemmaRegistry::new();
        let empty = ProofScript::default();
        assert_eq!(check_proof(&empty, &r, &l).first_failure.unwrap().reason, ProofFailure::Empty);
        let script = ProofScript {
            lemmas: vec![],
            lines: vec![
                line(1, "X or not X", Justification::Taut),
                line(1, "X or not X", Justification::Taut),
            ],
        };
        let report = check_proof(&script, &r, &l);
        assert!(!report.ok);
        assert!(matches!(report.first_failure.unwrap().reason, ProofFailure::Numbering { .. }));
    }
}
