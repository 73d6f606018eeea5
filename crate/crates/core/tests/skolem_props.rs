use proptest::prelude::*;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use powsat::fuzz::{skolem_instance, Limits};
use powsat::skolem::{eval_skolem, skolem_oracle, skolem_sat, SkolemResult};
use powsat::syntax::{parse_problem, Problem};

fn verdicts(f: &powsat::skolem::SkolemFormula) -> (SkolemResult, bool) {
    (skolem_sat(f), skolem_oracle(f, 64).unwrap().is_sat())
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(200))]

    #[test]
    fn agrees_with_enumeration(seed in any::<u64>()) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let Problem::Skolem { formula, .. } = skolem_instance(&mut rng, &Limits::default()) else { unreachable!() };
        let (solver, reference) = verdicts(&formula);
        match solver {
            SkolemResult::Sat { witness, .. } => prop_assert_eq!(eval_skolem(&formula, &witness), Some(true)),
            SkolemResult::Unsat => prop_assert!(!reference, "{}", formula),
            SkolemResult::Unknown(why) => prop_assert!(false, "unknown: {}", why),
        }
    }
}

/// Positive parts that force every coordinate to grow, or pin them to one.
#[test]
fn growth_forcing_instances() {
    let cases = [
        ("(and (= x (* y y)) (= y (* x x)))", true),
        ("(and (= x (* y y)) (not (= x y)))", true),
        ("(and (= (* x x) x) (not (= x y)) (| x y))", true),
        ("(and (= (* x y) x) (not (= y (* y y))))", false),
        ("(and (| x y) (| y x) (not (= x y)))", false),
        ("(and (= (* x x) (* y y)) (not (= x y)))", false),
    ];
    for (body, expected) in cases {
        let text = format!("(set-logic SKOLEM)(declare-const x Nat)(declare-const y Nat)(assert {body})");
        let Problem::Skolem { formula, .. } = parse_problem(&text).unwrap() else { unreachable!() };
        let (solver, reference) = verdicts(&formula);
        assert_eq!(reference, expected, "{body}");
        assert_eq!(solver.is_sat(), expected, "{body}");
        if let SkolemResult::Sat { witness, .. } = solver {
            assert_eq!(eval_skolem(&formula, &witness), Some(true), "{body}");
        }
    }
}
