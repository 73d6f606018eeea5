use proptest::prelude::*;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use powsat::cal::{solve_cal, store_read_counts, translate, CalOptions, TranslateOptions};
use powsat::fuzz::{cal_instance, Limits};
use powsat::oracle::FiniteOracle;
use powsat::qfbapa::{BapaAtom, PATerm, SetExpr};
use powsat::syntax::{parse_problem, Component, Problem};

fn singleton_constraints(skeleton: &powsat::qfbapa::QFBAPAFormula, set: &str) -> usize {
    let mut count = 0;
    skeleton.for_each_atom(&mut |a| {
        if let BapaAtom::IntEq(PATerm::Card(SetExpr::Var(s)), PATerm::Const(1)) = a {
            count += usize::from(s == set);
        }
    });
    count
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(300))]

    #[test]
    fn translation_shape(seed in any::<u64>()) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let Problem::Cal { formula, .. } = cal_instance(&mut rng, &Limits::default()) else { unreachable!() };
        let (stores, reads) = store_read_counts(&formula);
        let t = translate(&formula, TranslateOptions::default()).unwrap();
        prop_assert!(t.rounds <= stores + reads);
        prop_assert!(t.store_abstractions.len() <= stores);
        for set in t.singletons.values() {
            prop_assert_eq!(singleton_constraints(&t.skeleton, set), 1, "{}", set);
        }
    }

    #[test]
    fn deduplication_keeps_the_verdict(seed in any::<u64>()) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let Problem::Cal { component: Component::Finite(s), index_card, formula, .. } =
            cal_instance(&mut rng, &Limits::default())
        else {
            unreachable!()
        };
        let oracle = FiniteOracle::new(s);
        let shared = solve_cal(&formula, &oracle, index_card, CalOptions::default());
        let mut opts = CalOptions::default();
        opts.translate.dedup = false;
        let separate = solve_cal(&formula, &oracle, index_card, opts);
        prop_assert_eq!(shared.is_sat(), separate.is_sat());
    }
}

#[test]
fn read_over_write_identities() {
    for body in ["(= (select (store a i v) i) v)", "(= (select (store (store a i v) i w) i) w)"] {
        for n in 1..=3 {
            let text = format!(
                "(set-logic CAL)(declare-structure (carrier 3))(declare-index-card {n})(declare-array a)\
                 (declare-const i Index)(declare-const v Elem)(declare-const w Elem)(assert (not {body}))"
            );
            let Problem::Cal { component: Component::Finite(s), index_card, formula, .. } =
                parse_problem(&text).unwrap()
            else {
                unreachable!()
            };
            let oracle = FiniteOracle::new(s);
            let r = solve_cal(&formula, &oracle, index_card, CalOptions::default());
            assert!(matches!(r, powsat::cal::CalResult::Unsat), "{body} at {n}");
        }
    }
}
