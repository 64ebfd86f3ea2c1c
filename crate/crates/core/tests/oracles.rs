use epifix_core::lnu::{interpret, interpret_so, parse_nu, ConditionRegistry};
use epifix_core::lo::{analyze, builtin, models, parse_lo, OptimalityModel, BUILTIN_NAMES};
use epifix_core::operators::Operator;
use epifix_core::oracle::{self, enumerate_belief_models, naive_holds, naive_outcome, optimality_models};
use epifix_core::Game;

#[test]
fn model_checker_agrees_with_naive_holds() {
    let extra = [
        "exists y . (C(y) and not (o >= y @ y))",
        "forall y . forall z . (C(z) -> o >= y @ z)",
        "exists z . (C(z) and forall y . (C(y) -> (o >= y @ z and not (y >= o @ z))))",
    ];
    let mut conditions: Vec<_> = BUILTIN_NAMES.iter().map(|n| builtin(n).unwrap()).collect();
    conditions.extend(extra.iter().map(|t| parse_lo(t).unwrap()));
    for (name, g) in oracle::standard_corpus() {
        for (context, focus) in optimality_models(&g) {
            let m = OptimalityModel::new(&g, context.clone(), focus.clone()).unwrap();
            for owner in 0..g.players() {
                for phi in &conditions {
                    assert_eq!(
                        models(&m, owner, phi).unwrap(),
                        naive_holds(&g, &context, &focus, owner, phi),
                        "{name} {} {} owner {owner} {phi}",
                        g.show_restriction(&context),
                        g.show_profile(&focus)
                    );
                }
            }
        }
    }
}

#[test]
fn elimination_agrees_with_naive_rounds() {
    for (name, g) in oracle::standard_corpus() {
        for cond in BUILTIN_NAMES {
            let phi = builtin(cond).unwrap();
            let op = Operator::uniform(&g, &phi).unwrap();
            assert_eq!(
                op.iterate_from_top().unwrap().outcome,
                naive_outcome(&g, &vec![phi.clone(); g.players()]),
                "{name} {cond}"
            );
        }
    }
}

#[test]
fn builtin_positivity() {
    let positive: Vec<bool> = BUILTIN_NAMES.iter().map(|n| analyze(&builtin(n).unwrap()).positive).collect();
    assert_eq!(positive, [false, true, true]);
}

/// Models where `rat(c,i)` and `forall X . ([i] X -> O(c,i) X)` differ; the
/// second always implies the first.
fn definition_gaps(g: &Game, cond: &str) -> usize {
    let reg = ConditionRegistry::with_builtins();
    let mut gaps = 0;
    for player in 1..=g.players() {
        let primitive = parse_nu(&format!("rat({cond},{player})")).unwrap();
        let defined = parse_nu(&format!("forall X . ([{player}] X -> O({cond},{player}) X)")).unwrap();
        for m in enumerate_belief_models(g, 2).unwrap() {
            let p = interpret(&m, &reg, &primitive, m.omega()).unwrap();
            let d = interpret_so(&m, &reg, &defined, m.omega()).unwrap();
            assert!(d.is_subset(p), "{cond} player {player}");
            gaps += usize::from(p != d);
        }
    }
    gaps
}

#[test]
fn rationality_is_second_order_definable_for_positive_conditions() {
    for g in [oracle::fig1_left(), oracle::fig1_right()] {
        assert_eq!(definition_gaps(&g, "gbr"), 0);
        assert_eq!(definition_gaps(&g, "gsd"), 0);
    }
}

#[test]
fn local_dominance_escapes_the_second_order_definition() {
    // D survives in ({D}, {L}) but U dominates it once U is back in the context
    assert!(definition_gaps(&oracle::fig1_right(), "lsd") > 0);
}
