//! Operators on the restriction lattice and their iteration.
//!
//! An optimality condition `φ_i` per player induces the operator
//!
//! ```text
//! O_φ(S) = ∏_i { s_i ∈ S_i | φ_i(s_i, S) }
//! ```
//!
//! which is contracting by construction. Iterating it from the top element
//! `O^0 = ⊤`, `O^{k+1} = O(O^k)` computes iterated elimination of
//! non-`φ`-optimal strategies. Finite games only need finitely many steps, so
//! no limit stages are ever formed.
//!
//! Table operators store an arbitrary image per lattice element and are used to
//! exercise the generic fixpoint facts (contraction, greatest fixpoints,
//! the inclusion lemma) on operators that need not be contracting or monotone.

use alloc::vec::Vec;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use thiserror::Error;

use crate::game::{Game, Restriction, RestrictionLattice};
use crate::lo::{self, analyze, FormulaO, LoError};

/// Largest lattice that exhaustive checks will enumerate.
pub const EXHAUSTIVE_LIMIT: u64 = 1 << 16;

/// Largest lattice a table operator may be defined on.
pub const TABLE_LIMIT: u64 = 1 << 20;

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum OperatorError {
    #[error("condition for player {player}: {source}")]
    Condition { player: usize, source: LoError },
    #[error("expected one condition per player ({expected}), got {found}")]
    ConditionCount { expected: usize, found: usize },
    #[error("restriction does not match the operator's game")]
    ShapeMismatch,
    #[error("table has {found} entries but the lattice has {expected} elements")]
    TableSize { expected: u64, found: usize },
    #[error("lattice with {0:?} elements is too large for this operation")]
    LatticeTooLarge(Option<u64>),
    #[error("operator is neither contracting nor monotone along the iteration")]
    NotContractingOrMonotone,
    #[error("no fixpoint reached after {0} steps")]
    NoFixpoint(usize),
}

#[derive(Debug, Clone)]
enum Kind<'g> {
    Condition { game: &'g Game, conditions: Vec<FormulaO>, positive: bool },
    Table { lattice: RestrictionLattice, images: Vec<u64> },
}

/// An operator on the restriction lattice of one game shape.
#[derive(Debug, Clone)]
pub struct Operator<'g> {
    kind: Kind<'g>,
    contracting_wrapped: bool,
}

/// The iteration `O^0 = start, O^{k+1} = O(O^k)` up to the first repeat.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct IterationTrace {
    /// All stages, ending with two equal entries.
    pub stages: Vec<Restriction>,
    /// Least `k` with `O^{k+1} = O^k`.
    pub closure_ordinal: usize,
    pub outcome: Restriction,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum MonotoneMode {
    Exhaustive,
    Sampled { samples: usize, seed: u64 },
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct MonotoneReport {
    pub monotone: bool,
    /// `(S, S')` with `S ⊆ S'` but `O(S) ⊄ O(S')`.
    pub witness: Option<(Restriction, Restriction)>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct InclusionCheck {
    /// `O_1(S) ⊆ O_2(S)` for all `S` and `O_1` monotone.
    pub premises_hold: bool,
    /// `O_1^∞ ⊆ (Ō_2)^∞`; false as well when `O_1` has no outcome.
    pub conclusion_holds: bool,
}

impl<'g> Operator<'g> {
    /// `O_φ` with one condition per player. Each must be closed and context-safe.
    pub fn from_conditions(game: &'g Game, conditions: Vec<FormulaO>) -> Result<Self, OperatorError> {
        if conditions.len() != game.players() {
            return Err(OperatorError::ConditionCount { expected: game.players(), found: conditions.len() });
        }
        let mut positive = true;
        for (i, phi) in conditions.iter().enumerate() {
            let a = analyze(phi);
            let fail = |source| OperatorError::Condition { player: i + 1, source };
            if !a.closed {
                let free: Vec<_> = phi.free_variables().into_iter().collect();
                return Err(fail(LoError::NotClosed(free.join(", "))));
            }
            if !a.context_safe {
                return Err(fail(LoError::NotContextSafe));
            }
            positive &= a.positive;
        }
        Ok(Operator { kind: Kind::Condition { game, conditions, positive }, contracting_wrapped: false })
    }

    /// `O_φ` using the same condition for every player.
    pub fn uniform(game: &'g Game, condition: &FormulaO) -> Result<Self, OperatorError> {
        Self::from_conditions(game, alloc::vec![condition.clone(); game.players()])
    }

    /// A table operator; `images[k]` is the image of `lattice.decode(k)`.
    pub fn table(shape: &[usize], images: Vec<Restriction>) -> Result<Operator<'static>, OperatorError> {
        let lattice = RestrictionLattice::new(shape);
        let size = lattice.size().filter(|&s| s <= TABLE_LIMIT);
        let Some(size) = size else {
            return Err(OperatorError::LatticeTooLarge(lattice.size()));
        };
        if images.len() as u64 != size {
            return Err(OperatorError::TableSize { expected: size, found: images.len() });
        }
        let top = lattice.top();
        if images.iter().any(|r| !r.same_shape(&top)) {
            return Err(OperatorError::ShapeMismatch);
        }
        let images = images.iter().map(|r| lattice.encode(r)).collect();
        Ok(Operator { kind: Kind::Table { lattice, images }, contracting_wrapped: false })
    }

    /// A table operator built by evaluating `f` on every lattice element.
    pub fn tabulate(
        shape: &[usize],
        f: impl Fn(&Restriction) -> Restriction,
    ) -> Result<Operator<'static>, OperatorError> {
        let lattice = RestrictionLattice::new(shape);
        match lattice.size() {
            Some(s) if s <= TABLE_LIMIT => {}
            other => return Err(OperatorError::LatticeTooLarge(other)),
        }
        let images = lattice.iter().map(|r| f(&r)).collect();
        Operator::table(shape, images)
    }

    /// Table operator from raw lattice codes.
    pub fn from_codes(shape: &[usize], codes: Vec<u64>) -> Result<Operator<'static>, OperatorError> {
        let lattice = RestrictionLattice::new(shape);
        let images = codes.iter().map(|&c| lattice.decode(c)).collect();
        Operator::table(shape, images)
    }

    pub fn lattice(&self) -> RestrictionLattice {
        match &self.kind {
            Kind::Condition { game, .. } => game.lattice(),
            Kind::Table { lattice, .. } => lattice.clone(),
        }
    }

    pub fn is_contracting_wrapped(&self) -> bool {
        self.contracting_wrapped
    }

    /// Contracting without inspection: condition operators and wrapped operators.
    pub fn contracting_by_construction(&self) -> bool {
        self.contracting_wrapped || matches!(self.kind, Kind::Condition { .. })
    }

    /// Syntactic monotonicity certificate: a condition operator whose conditions
    /// are all positive.
    pub fn certified_monotone(&self) -> bool {
        matches!(self.kind, Kind::Condition { positive: true, .. })
    }

    /// `Ō(S) = O(S) ∩ S`.
    pub fn contract(&self) -> Operator<'g> {
        Operator { kind: self.kind.clone(), contracting_wrapped: true }
    }

    pub fn apply(&self, s: &Restriction) -> Result<Restriction, OperatorError> {
        if !s.same_shape(&self.lattice().top()) {
            return Err(OperatorError::ShapeMismatch);
        }
        Ok(self.apply_unchecked(s))
    }

    fn apply_unchecked(&self, s: &Restriction) -> Restriction {
        let image = match &self.kind {
            Kind::Condition { game, conditions, .. } => {
                let mut out = s.clone();
                for (i, phi) in conditions.iter().enumerate() {
                    for strategy in s.part(i).iter() {
                        // context safety makes the other focus components irrelevant
                        let focus = game.deviate_at(0, i, strategy);
                        if !lo::holds(game, s, focus, i, phi) {
                            out.part_mut(i).remove(strategy);
                        }
                    }
                }
                out
            }
            Kind::Table { lattice, images } => lattice.decode(images[lattice.encode(s) as usize]),
        };
        if self.contracting_wrapped {
            image.meet_unchecked(s)
        } else {
            image
        }
    }

    /// Iterates from `start` until two consecutive stages agree.
    ///
    /// A step that is not decreasing is accepted only if the operator is
    /// certified or verified monotone; a revisited stage is reported as
    /// [`OperatorError::NoFixpoint`].
    pub fn iterate(&self, start: &Restriction) -> Result<IterationTrace, OperatorError> {
        if !start.same_shape(&self.lattice().top()) {
            return Err(OperatorError::ShapeMismatch);
        }
        let lattice = self.lattice();
        let bound = lattice.size().map_or(usize::MAX, |s| usize::try_from(s).unwrap_or(usize::MAX));
        let mut monotone_checked = self.certified_monotone();
        let mut stages = alloc::vec![start.clone()];
        loop {
            let cur = stages.last().unwrap();
            let next = self.apply_unchecked(cur);
            if next == *cur {
                stages.push(next.clone());
                let closure_ordinal = stages.len() - 2;
                return Ok(IterationTrace { stages, closure_ordinal, outcome: next });
            }
            if !next.subset_unchecked(cur) && !monotone_checked {
                if !self.check_monotone(MonotoneMode::Exhaustive)?.monotone {
                    return Err(OperatorError::NotContractingOrMonotone);
                }
                monotone_checked = true;
            }
            if stages.contains(&next) || stages.len() > bound {
                return Err(OperatorError::NoFixpoint(stages.len()));
            }
            stages.push(next);
        }
    }

    /// Iterates from the top element.
    pub fn iterate_from_top(&self) -> Result<IterationTrace, OperatorError> {
        self.iterate(&self.lattice().top())
    }

    pub fn check_monotone(&self, mode: MonotoneMode) -> Result<MonotoneReport, OperatorError> {
        let lattice = self.lattice();
        let mut witness = None;
        match mode {
            MonotoneMode::Exhaustive => {
                let size = lattice
                    .size()
                    .filter(|&s| s <= EXHAUSTIVE_LIMIT)
                    .ok_or(OperatorError::LatticeTooLarge(lattice.size()))?;
                let images: Vec<Restriction> = lattice.iter().map(|s| self.apply_unchecked(&s)).collect();
                // monotone on covering pairs implies monotone everywhere
                'outer: for code in 0..size {
                    let s = lattice.decode(code);
                    for up in lattice.upper_covers(&s) {
                        let up_img = &images[lattice.encode(&up) as usize];
                        if !images[code as usize].subset_unchecked(up_img) {
                            witness = Some((s.clone(), up));
                            break 'outer;
                        }
                    }
                }
            }
            MonotoneMode::Sampled { samples, seed } => {
                let mut rng = ChaCha8Rng::seed_from_u64(seed);
                let bits = lattice.height() as u32;
                let mask = if bits >= 64 { u64::MAX } else { (1u64 << bits) - 1 };
                for _ in 0..samples {
                    let small = rng.gen::<u64>() & mask;
                    let large = small | (rng.gen::<u64>() & mask);
                    let (s, t) = (lattice.decode(small), lattice.decode(large));
                    if !self.apply_unchecked(&s).subset_unchecked(&self.apply_unchecked(&t)) {
                        witness = Some((s, t));
                        break;
                    }
                }
            }
        }
        Ok(MonotoneReport { monotone: witness.is_none(), witness })
    }
}

/// Checks the inclusion lemma for a pair of operators on the same lattice:
/// if `O_1 ⊆ O_2` pointwise and `O_1` is monotone then `O_1^∞ ⊆ (Ō_2)^∞`.
pub fn lemma_inclusion_check(o1: &Operator<'_>, o2: &Operator<'_>) -> Result<InclusionCheck, OperatorError> {
    let lattice = o1.lattice();
    if lattice.shape() != o2.lattice().shape() {
        return Err(OperatorError::ShapeMismatch);
    }
    if !lattice.size().is_some_and(|s| s <= EXHAUSTIVE_LIMIT) {
        return Err(OperatorError::LatticeTooLarge(lattice.size()));
    }
    let pointwise = lattice.iter().all(|s| o1.apply_unchecked(&s).subset_unchecked(&o2.apply_unchecked(&s)));
    let monotone = o1.check_monotone(MonotoneMode::Exhaustive)?.monotone;
    let conclusion_holds = match o1.iterate_from_top() {
        Ok(t1) => {
            let t2 = o2.contract().iterate_from_top()?;
            t1.outcome.subset_unchecked(&t2.outcome)
        }
        Err(_) => false,
    };
    Ok(InclusionCheck { premises_hold: pointwise && monotone, conclusion_holds })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::lo::{builtin, parse_lo};

    fn fig1_right() -> Game {
        Game::from_integers(&[&["U", "D"], &["L", "R"]], &[&[1, 1], &[1, 0], &[0, 0], &[0, 1]]).unwrap()
    }

    #[test]
    fn lsd_steps_on_fig1_right() {
        let g = fig1_right();
        let op = Operator::uniform(&g, &builtin("lsd").unwrap()).unwrap();
        let s1 = op.apply(&g.full_restriction()).unwrap();
        assert_eq!(s1, g.restriction(&[&["U"], &["L", "R"]]).unwrap());
        let s2 = op.apply(&s1).unwrap();
        assert_eq!(s2, g.restriction(&[&["U"], &["L"]]).unwrap());
        assert_eq!(op.apply(&g.empty_restriction()).unwrap(), g.empty_restriction());
    }

    #[test]
    fn trace_shape() {
        let g = fig1_right();
        let op = Operator::uniform(&g, &builtin("lsd").unwrap()).unwrap();
        let t = op.iterate_from_top().unwrap();
        assert_eq!(t.closure_ordinal, 2);
        assert_eq!(t.stages.len(), 4);
        assert_eq!(t.stages[2], t.stages[3]);
        assert_eq!(t.outcome, g.restriction(&[&["U"], &["L"]]).unwrap());
    }

    #[test]
    fn rejects_open_or_unsafe_conditions() {
        let g = fig1_right();
        let open = parse_lo("C(x)").unwrap();
        assert!(matches!(
            Operator::uniform(&g, &open),
            Err(OperatorError::Condition { source: LoError::NotClosed(_), .. })
        ));
        let unsafe_ = parse_lo("forall y . y >= o @ o").unwrap();
        assert!(matches!(
            Operator::uniform(&g, &unsafe_),
            Err(OperatorError::Condition { source: LoError::NotContextSafe, .. })
        ));
        assert!(matches!(
            Operator::from_conditions(&g, alloc::vec![builtin("gbr").unwrap()]),
            Err(OperatorError::ConditionCount { .. })
        ));
    }

    #[test]
    fn contract_of_constant_top_is_identity() {
        let shape = [2, 2];
        let top = Restriction::full(&shape);
        let op = Operator::tabulate(&shape, |_| top.clone()).unwrap().contract();
        for s in RestrictionLattice::new(&shape).iter() {
            assert_eq!(op.apply(&s).unwrap(), s);
        }
    }

    #[test]
    fn swapping_table_has_no_fixpoint_from_a_cycle() {
        // a monotone operator that swaps two incomparable elements
        let shape = [1, 1];
        let lat = RestrictionLattice::new(&shape);
        let codes = alloc::vec![0, 2, 1, 3];
        let op = Operator::from_codes(&shape, codes).unwrap();
        assert!(op.check_monotone(MonotoneMode::Exhaustive).unwrap().monotone);
        assert_eq!(op.iterate(&lat.decode(1)), Err(OperatorError::NoFixpoint(2)));
        assert_eq!(op.iterate_from_top().unwrap().closure_ordinal, 0);
    }

    #[test]
    fn non_monotone_growing_table_is_refused() {
        let shape = [1, 1];
        // 0 -> 1, others -> 0: growing step from bottom, not monotone
        let op = Operator::from_codes(&shape, alloc::vec![1, 0, 0, 0]).unwrap();
        assert_eq!(
            op.iterate(&RestrictionLattice::new(&shape).bottom()),
            Err(OperatorError::NotContractingOrMonotone)
        );
    }

    #[test]
    fn exhaustive_monotonicity_has_a_size_limit() {
        let g = Game::from_integers(&[&["a"], &["x"]], &[&[0, 0]]).unwrap();
        let op = Operator::uniform(&g, &builtin("gbr").unwrap()).unwrap();
        assert!(op.check_monotone(MonotoneMode::Exhaustive).unwrap().monotone);
        let names: Vec<alloc::string::String> = (0..17).map(|k| alloc::format!("s{k}")).collect();
        let refs: Vec<&str> = names.iter().map(|s| s.as_str()).collect();
        let rows: Vec<[i64; 1]> = (0..17).map(|_| [0]).collect();
        let rows_ref: Vec<&[i64]> = rows.iter().map(|r| &r[..]).collect();
        let big = Game::from_integers(&[&refs], &rows_ref).unwrap();
        let op = Operator::uniform(&big, &builtin("gbr").unwrap()).unwrap();
        assert!(matches!(
            op.check_monotone(MonotoneMode::Exhaustive),
            Err(OperatorError::LatticeTooLarge(_))
        ));
        assert!(op.check_monotone(MonotoneMode::Sampled { samples: 200, seed: 7 }).unwrap().monotone);
    }

    #[test]
    fn lemma_check_trivial_cases() {
        let shape = [2, 2];
        let id = Operator::tabulate(&shape, |s| s.clone()).unwrap();
        let top = Operator::tabulate(&shape, |_| Restriction::full(&shape)).unwrap();
        let r = lemma_inclusion_check(&id, &top).unwrap();
        assert!(r.premises_hold && r.conclusion_holds);
    }
}
