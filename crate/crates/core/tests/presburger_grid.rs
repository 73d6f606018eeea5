use powsat::formula::Formula;
use powsat::presburger::{lia_sat, lia_sat_formula, AtomKind, IntModel, LIAProblem, LiaFormula, LiaResult, LinExpr, LinearAtom};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

const NAMES: [&str; 4] = ["w", "x", "y", "z"];

fn random_atom(rng: &mut ChaCha8Rng, vars: usize, coeff: i64) -> LinearAtom {
    let mut e = LinExpr::constant(rng.gen_range(-coeff..=coeff));
    for v in NAMES.iter().take(vars) {
        if rng.gen_bool(0.7) {
            e = e.plus(&LinExpr::term(rng.gen_range(-coeff..=coeff), *v));
        }
    }
    match rng.gen_range(0..5) {
        0 => e.eq0(),
        1 => e.dvd(rng.gen_range(1..=4)),
        _ => e.le0(),
    }
}

fn random_formula(rng: &mut ChaCha8Rng, atoms: usize, vars: usize, coeff: i64) -> LiaFormula {
    let leaves: Vec<LiaFormula> = (0..atoms)
        .map(|_| {
            let a = Formula::Atom(random_atom(rng, vars, coeff));
            if rng.gen_bool(0.3) {
                Formula::not(a)
            } else {
                a
            }
        })
        .collect();
    let mut it = leaves.into_iter();
    let mut f = it.next().unwrap();
    for g in it {
        f = if rng.gen_bool(0.5) { Formula::and([f, g]) } else { Formula::or([f, g]) };
    }
    f
}

fn box_constraints(vars: usize, r: i64) -> LIAProblem {
    let mut atoms = Vec::new();
    for v in NAMES.iter().take(vars) {
        atoms.push(LinExpr::le(LinExpr::constant(-r), &LinExpr::var(*v)));
        atoms.push(LinExpr::le(LinExpr::var(*v), &LinExpr::constant(r)));
    }
    LIAProblem::new(atoms)
}

fn eval(f: &LiaFormula, m: &IntModel) -> bool {
    f.eval_with::<()>(&mut |a| Ok(a.eval(m))).unwrap()
}

fn grid_sat(f: &LiaFormula, vars: usize, r: i64) -> Option<IntModel> {
    let side = (2 * r + 1) as usize;
    let total = side.pow(vars as u32);
    for code in 0..total {
        let mut c = code;
        let mut m = IntModel::new();
        for v in NAMES.iter().take(vars) {
            m.insert(v.to_string(), (c % side) as i64 - r);
            c /= side;
        }
        if eval(f, &m) {
            return Some(m);
        }
    }
    None
}

#[test]
fn three_atom_formulas_match_grid() {
    let mut rng = ChaCha8Rng::seed_from_u64(7);
    let base = box_constraints(2, 5);
    for trial in 0..1000 {
        let f = random_formula(&mut rng, 3, 2, 6);
        let expected = grid_sat(&f, 2, 5);
        match lia_sat_formula(&f, &base) {
            LiaResult::Sat(m) => {
                assert!(expected.is_some(), "trial {trial}: solver SAT, grid UNSAT: {f}");
                assert!(eval(&f, &m) && base.holds(&m), "trial {trial}: bad model {m:?} for {f}");
            }
            LiaResult::Unsat => assert!(expected.is_none(), "trial {trial}: solver UNSAT, grid {expected:?}: {f}"),
            LiaResult::Unknown(why) => panic!("trial {trial}: unknown ({why}) on {f}"),
        }
    }
}

#[test]
fn four_variable_conjunctions_match_grid() {
    let mut rng = ChaCha8Rng::seed_from_u64(11);
    for trial in 0..300 {
        let vars = rng.gen_range(1..=4);
        let mut p = box_constraints(vars, 3);
        let n = rng.gen_range(1..=4);
        let extra: Vec<LinearAtom> = (0..n).map(|_| random_atom(&mut rng, vars, 8)).collect();
        p.atoms.extend(extra.iter().cloned());
        let f = Formula::and(p.atoms.iter().cloned().map(Formula::Atom));
        let expected = grid_sat(&f, vars, 3);
        match lia_sat(&p) {
            LiaResult::Sat(m) => {
                assert!(expected.is_some(), "trial {trial}: solver SAT, grid UNSAT: {f}");
                assert!(p.holds(&m));
            }
            LiaResult::Unsat => assert!(expected.is_none(), "trial {trial}: grid found {expected:?} for {f}"),
            LiaResult::Unknown(why) => panic!("trial {trial}: unknown ({why})"),
        }
    }
}

#[test]
fn divisibility_matches_quotient_encoding() {
    let mut rng = ChaCha8Rng::seed_from_u64(3);
    for _ in 0..300 {
        let mut p = box_constraints(2, 6);
        let mut q = p.clone();
        for i in 0..rng.gen_range(1..=3) {
            let a = random_atom(&mut rng, 2, 5);
            let m = rng.gen_range(2..=5u64);
            let e = LinExpr { coeffs: a.coeffs.clone(), constant: a.constant };
            p.atoms.push(e.clone().dvd(m));
            let quotient = format!("q{i}");
            q.atoms.push(e.minus(&LinExpr::term(m as i64, quotient)).eq0());
        }
        assert_eq!(lia_sat(&p).is_sat(), lia_sat(&q).is_sat(), "{:?}", p.atoms);
    }
}

#[test]
fn unbounded_directions_still_decided() {
    // x - y >= 1 and y - x >= -1, mixing an unbounded line with a parity cut.
    let p = LIAProblem::new(vec![
        LinExpr::le(LinExpr::constant(1), &LinExpr::term(2, "x").minus(&LinExpr::term(2, "y"))),
        LinExpr::le(LinExpr::term(2, "x").minus(&LinExpr::term(2, "y")), &LinExpr::constant(1)),
    ]);
    assert_eq!(lia_sat(&p), LiaResult::Unsat);
    let p = LIAProblem::new(vec![LinearAtom {
        coeffs: [("x".to_string(), 3), ("y".to_string(), -7)].into_iter().collect(),
        constant: 1,
        kind: AtomKind::Eq,
    }]);
    let LiaResult::Sat(m) = lia_sat(&p) else { panic!() };
    assert_eq!(3 * m["x"] - 7 * m["y"] + 1, 0);
}
