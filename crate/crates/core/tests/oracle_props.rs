use proptest::prelude::*;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use powsat::formula::{Atom, Formula, QFFormula, Term};
use powsat::fuzz::{power_instance, Limits};
use powsat::oracle::{lia_oracle, ComponentOracle, Decision, FiniteOracle};
use powsat::structures::FiniteStructure;
use powsat::syntax::{Component, Problem};

const VARS: [&str; 3] = ["x", "y", "z"];

fn lia_term(rng: &mut ChaCha8Rng) -> Term {
    if rng.gen_bool(0.3) {
        Term::cst(rng.gen_range(0..=2).to_string())
    } else {
        Term::var(VARS[rng.gen_range(0..VARS.len())])
    }
}

/// Order constraints over `0..=2`, readable both as linear arithmetic and
/// in the three-element chain.
fn chain_formula(rng: &mut ChaCha8Rng) -> QFFormula {
    let lits = (0..rng.gen_range(1..=5)).map(|_| {
        let rel = if rng.gen_bool(0.5) { "<=" } else { "=" };
        let a = Formula::Atom(Atom::new(rel, vec![lia_term(rng), lia_term(rng)]));
        if rng.gen_bool(0.4) {
            Formula::not(a)
        } else {
            a
        }
    });
    let lits: Vec<_> = lits.collect();
    if rng.gen_bool(0.5) {
        Formula::and(lits)
    } else {
        Formula::or(lits)
    }
}

fn chain3() -> FiniteStructure {
    let mut s = FiniteStructure::new(3).with_relation("<=", 2, |t| t[0] <= t[1]).unwrap();
    for k in 0..3 {
        s = s.with_constant(&k.to_string(), k).unwrap();
    }
    s
}

fn bounded(f: &QFFormula) -> QFFormula {
    let bounds = VARS.iter().flat_map(|v| {
        [
            Formula::Atom(Atom::new("<=", vec![Term::cst("0"), Term::var(*v)])),
            Formula::Atom(Atom::new("<=", vec![Term::var(*v), Term::cst("2")])),
        ]
    });
    Formula::and(bounds.chain([f.clone()]))
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(400))]

    #[test]
    fn sat_models_check(seed in any::<u64>()) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let Problem::Power { component: Component::Finite(s), formula, .. } =
            power_instance(&mut rng, &Limits::default())
        else {
            unreachable!()
        };
        let finite = FiniteOracle::new(s);
        if let Decision::Sat(m) = finite.decide(&formula) {
            prop_assert!(finite.model_check(&formula, &m));
        }
        let g = chain_formula(&mut rng);
        for o in [lia_oracle(false), lia_oracle(true)] {
            if let Decision::Sat(m) = o.decide(&g) {
                prop_assert!(o.model_check(&g, &m));
            }
        }
    }

    #[test]
    fn finite_chain_matches_bounded_arithmetic(seed in any::<u64>()) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let f = chain_formula(&mut rng);
        let finite = FiniteOracle::new(chain3()).decide(&f).is_sat();
        let lia = lia_oracle(false).decide(&bounded(&f)).is_sat();
        prop_assert_eq!(finite, lia, "{}", f);
    }
}
