use proptest::prelude::*;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use powsat::formula::{Formula, QFFormula};
use powsat::fuzz::{power_instance, Limits};
use powsat::oracle::FiniteOracle;
use powsat::power::{check_certificate, solve_power, PowerProblem};
use powsat::structures::{tuples, FiniteStructure, IndexCard, Model, PowerPoint};
use powsat::syntax::{Component, Problem};

fn instance(seed: u64) -> (FiniteStructure, Vec<String>, QFFormula) {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let Problem::Power { component: Component::Finite(s), vars, formula, .. } =
        power_instance(&mut rng, &Limits::default())
    else {
        unreachable!()
    };
    (s, vars, formula)
}

fn random_point(rng: &mut ChaCha8Rng, s: &FiniteStructure, vars: &[String], n: usize) -> PowerPoint {
    vars.iter().map(|v| (v.clone(), (0..n).map(|_| rng.gen_range(0..s.size()) as i64).collect())).collect()
}

fn column(point: &PowerPoint, i: usize) -> Model {
    point.iter().map(|(k, v)| (k.clone(), v[i])).collect()
}

fn sat_at(s: &FiniteStructure, f: &QFFormula, n: usize) -> bool {
    s.brute_force_power_sat(IndexCard::finite(n), f, 1 << 24).unwrap().is_sat()
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(400))]

    #[test]
    fn one_index_is_the_component(seed in any::<u64>()) {
        let (s, vars, f) = instance(seed);
        for t in tuples(s.size(), vars.len()) {
            let m: Model = vars.iter().cloned().zip(t.iter().map(|&v| v as i64)).collect();
            let point: PowerPoint = m.iter().map(|(k, &v)| (k.clone(), vec![v])).collect();
            prop_assert_eq!(s.power_holds(1, &f, &point).unwrap(), s.holds(&f, &m).unwrap());
        }
    }

    #[test]
    fn literals_hold_pointwise(seed in any::<u64>(), n in 1usize..=3) {
        let (s, vars, f) = instance(seed);
        let mut rng = ChaCha8Rng::seed_from_u64(seed ^ 0x5eed);
        let point = random_point(&mut rng, &s, &vars, n);
        for a in f.atoms() {
            let everywhere = (0..n).all(|i| s.holds(&Formula::Atom(a.clone()), &column(&point, i)).unwrap());
            let pos = Formula::Atom(a.clone());
            prop_assert_eq!(s.power_holds(n, &pos, &point).unwrap(), everywhere);
            prop_assert_eq!(s.power_holds(n, &Formula::not(pos), &point).unwrap(), !everywhere);
        }
    }

    #[test]
    fn satisfiability_grows_with_the_index_set(seed in any::<u64>()) {
        let (s, _, f) = instance(seed);
        for n in 1..3 {
            if sat_at(&s, &f, n) {
                prop_assert!(sat_at(&s, &f, n + 1), "{} sat at {} not at {}", f, n, n + 1);
            }
        }
        let oracle = FiniteOracle::new(s.clone());
        for n in 1..=3 {
            let at_n = solve_power(&PowerProblem::new(&oracle, IndexCard::finite(n), f.clone())).is_sat();
            if at_n {
                prop_assert!(solve_power(&PowerProblem::new(&oracle, IndexCard::finite(n + 1), f.clone())).is_sat());
                prop_assert!(solve_power(&PowerProblem::new(&oracle, IndexCard::Unbounded, f.clone())).is_sat());
            }
        }
    }

    #[test]
    fn accepted_certificates_mean_satisfiable(seed in any::<u64>(), n in 1usize..=3) {
        let (s, _, f) = instance(seed);
        let oracle = FiniteOracle::new(s.clone());
        let p = PowerProblem::new(&oracle, IndexCard::finite(n), f.clone());
        if let powsat::power::PowerResult::Sat { certificate, .. } = solve_power(&p) {
            prop_assert!(check_certificate(&p, &certificate).is_ok());
            prop_assert!(sat_at(&s, &f, n));
        }
    }
}
