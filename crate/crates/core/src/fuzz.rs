//! Seeded random instance generators and the solver-versus-oracle harness.
//!
//! Every instance is drawn from its own ChaCha stream, seeded by the
//! `index`-th output of a stream seeded with the run seed, so a run is a
//! pure function of `(logic, count, seed, limits)` and instances can be
//! checked on several threads.

use std::path::{Path, PathBuf};

use rand::seq::SliceRandom;
use rand::{Rng, RngCore, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::cal::{store_read_counts, ArrayTerm, CALFormula, CalAtom, CardTerm, PointAtom, ValueTerm};
use crate::driver::{check, oracle, solve, Verdict};
use crate::formula::{Atom, Formula, QFFormula, Term};
use crate::qfbapa::{BapaAtom, Maxc, PATerm, QFBAPAFormula, SetExpr};
use crate::skolem::{Monomial, SkolemAtom, SkolemFormula};
use crate::structures::{FiniteStructure, IndexCard};
use crate::syntax::{Component, Logic, Problem};

/// Size limits of the generators.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct Limits {
    pub carrier: usize,
    pub index_card: usize,
    /// Atom occurrences per formula.
    pub literals: usize,
    /// Component variables (array variables for QFBAPAI and CAL).
    pub vars: usize,
    pub sets: usize,
    pub maxc: usize,
    /// Integer variables range over `[-grid, grid]`.
    pub grid: i64,
    pub defined: usize,
    pub stores: usize,
    pub reads: usize,
    pub skolem_atoms: usize,
    /// Oracle bound for Skolem instances.
    pub skolem_bound: u64,
}

impl Default for Limits {
    fn default() -> Self {
        Limits {
            carrier: 3,
            index_card: 3,
            literals: 6,
            vars: 3,
            sets: 3,
            maxc: 4,
            grid: 6,
            defined: 2,
            stores: 2,
            reads: 2,
            skolem_atoms: 4,
            skolem_bound: 64,
        }
    }
}

/// Branching probabilities shared by all generators.
#[derive(Debug, Clone, Copy)]
pub struct Weights {
    pub negate: f64,
    pub conjunction: f64,
    pub wrap_not: f64,
    pub ternary: f64,
    pub function_term: f64,
    pub constant_term: f64,
    pub shared_constant: f64,
    pub free_set: f64,
    pub int_var: f64,
}

pub const WEIGHTS: Weights = Weights {
    negate: 0.4,
    conjunction: 0.5,
    wrap_not: 0.15,
    ternary: 0.2,
    function_term: 0.25,
    constant_term: 0.2,
    shared_constant: 0.5,
    free_set: 0.25,
    int_var: 0.5,
};

const ELEM_VARS: [&str; 3] = ["x", "y", "z"];
const SET_VARS: [&str; 3] = ["A", "B", "C"];
const INT_VARS: [&str; 2] = ["k", "m"];

/// Combines leaves into a random and/or tree, negating some subtrees.
fn combine<A: Clone + Ord>(rng: &mut ChaCha8Rng, mut parts: Vec<Formula<A>>) -> Formula<A> {
    if parts.is_empty() {
        return Formula::tt();
    }
    while parts.len() > 1 {
        let n = if parts.len() >= 3 && rng.gen_bool(WEIGHTS.ternary) { 3 } else { 2 };
        let take: Vec<_> = (0..n).map(|_| parts.remove(rng.gen_range(0..parts.len()))).collect();
        let mut node = if rng.gen_bool(WEIGHTS.conjunction) { Formula::And(take) } else { Formula::Or(take) };
        if rng.gen_bool(WEIGHTS.wrap_not) {
            node = Formula::Not(Box::new(node));
        }
        parts.push(node);
    }
    parts.pop().unwrap()
}

fn literal<A>(rng: &mut ChaCha8Rng, a: A) -> Formula<A> {
    if rng.gen_bool(WEIGHTS.negate) {
        Formula::Not(Box::new(Formula::Atom(a)))
    } else {
        Formula::Atom(a)
    }
}

/// A structure with constant `c`, unary function `f`, unary `P` and
/// binary `R`, all tables uniformly random.
pub fn random_structure(rng: &mut ChaCha8Rng, size: usize) -> FiniteStructure {
    let f: Vec<usize> = (0..size).map(|_| rng.gen_range(0..size)).collect();
    let p: Vec<bool> = (0..size).map(|_| rng.gen_bool(0.5)).collect();
    let r: Vec<bool> = (0..size * size).map(|_| rng.gen_bool(0.5)).collect();
    FiniteStructure::new(size)
        .with_constant("c", rng.gen_range(0..size))
        .and_then(|s| s.with_function("f", 1, |a| f[a[0]]))
        .and_then(|s| s.with_relation("P", 1, |a| p[a[0]]))
        .and_then(|s| s.with_relation("R", 2, |a| r[a[0] * size + a[1]]))
        .expect("well-formed random structure")
}

fn component_term(rng: &mut ChaCha8Rng, vars: &[String], constants: &[String]) -> Term {
    let x = Term::var(vars.choose(rng).unwrap().clone());
    if rng.gen_bool(WEIGHTS.constant_term) {
        let shared = rng.gen_range(0..=constants.len());
        return match constants.get(shared) {
            Some(d) => Term::var(d.clone()),
            None => Term::cst("c"),
        };
    }
    if rng.gen_bool(WEIGHTS.function_term) {
        return Term::app("f", vec![x]);
    }
    x
}

fn component_atom(rng: &mut ChaCha8Rng, vars: &[String], constants: &[String]) -> Atom {
    let kind = rng.gen_range(0..3);
    let mut t = || component_term(rng, vars, constants);
    match kind {
        0 => Atom::new("P", vec![t()]),
        1 => {
            let a = t();
            Atom::new("R", vec![a, t()])
        }
        _ => {
            let a = t();
            Atom::eq(a, t())
        }
    }
}

/// Shared constants are variables common to all tuples; `c` is the
/// structure's constant.
fn component_formula(rng: &mut ChaCha8Rng, literals: usize, vars: &[String], constants: &[String]) -> QFFormula {
    let n = rng.gen_range(1..=literals);
    let parts = (0..n).map(|_| {
        let a = component_atom(rng, vars, constants);
        literal(rng, a)
    });
    let parts: Vec<_> = parts.collect();
    combine(rng, parts)
}

fn pick_vars(rng: &mut ChaCha8Rng, names: &[&str], at_most: usize) -> Vec<String> {
    let n = rng.gen_range(1..=at_most.min(names.len()));
    names[..n].iter().map(|s| s.to_string()).collect()
}

pub fn power_instance(rng: &mut ChaCha8Rng, l: &Limits) -> Problem {
    let size = rng.gen_range(1..=l.carrier);
    let structure = random_structure(rng, size);
    let index_card = IndexCard::finite(rng.gen_range(1..=l.index_card));
    let vars = pick_vars(rng, &ELEM_VARS, l.vars);
    let formula = component_formula(rng, l.literals, &vars, &[]);
    Problem::Power { component: Component::Finite(structure), index_card, vars, formula }
}

fn sized_atom(rng: &mut ChaCha8Rng, size: usize) -> Atom {
    let x = || Term::var(ELEM_VARS[0]);
    let y = || Term::var(ELEM_VARS[1]);
    match (size, rng.gen_range(0..3)) {
        (2, _) => Atom::new("P", vec![if rng.gen_bool(0.5) { x() } else { y() }]),
        (_, 0) => Atom::new("R", vec![x(), y()]),
        (_, 1) => Atom::eq(x(), y()),
        _ => Atom::new("P", vec![Term::app("f", vec![x()])]),
    }
}

/// A formula of exactly `size` symbols, built from raw connectives so that
/// no flattening changes the count. `size` must be at least 2.
pub fn sized_formula(rng: &mut ChaCha8Rng, size: usize) -> QFFormula {
    assert!(size >= 2, "no formula has fewer than two symbols");
    let mut options = Vec::new();
    if size <= 3 {
        options.push(0);
    }
    if size >= 3 {
        options.push(1);
    }
    if size >= 5 {
        options.push(2);
    }
    if size >= 8 {
        options.push(3);
    }
    match *options.choose(rng).unwrap() {
        0 => Formula::Atom(sized_atom(rng, size)),
        1 => Formula::Not(Box::new(sized_formula(rng, size - 1))),
        arity => {
            let body = size - (arity - 1);
            let mut cuts = vec![body];
            while cuts.len() < arity {
                let last = cuts.pop().unwrap();
                let left = rng.gen_range(2..=last - 2 * (arity - cuts.len() - 1));
                cuts.push(left);
                cuts.push(last - left);
            }
            let children = cuts.into_iter().map(|s| sized_formula(rng, s)).collect();
            if rng.gen_bool(0.5) {
                Formula::And(children)
            } else {
                Formula::Or(children)
            }
        }
    }
}

fn set_expr(rng: &mut ChaCha8Rng, sets: &[String], depth: usize) -> SetExpr {
    let leaf = depth == 0 || rng.gen_bool(0.4);
    if leaf {
        return match rng.gen_range(0..10) {
            0 => SetExpr::Empty,
            1 => SetExpr::Universe,
            _ => SetExpr::var(sets.choose(rng).unwrap().clone()),
        };
    }
    match rng.gen_range(0..3) {
        0 => SetExpr::union(set_expr(rng, sets, depth - 1), set_expr(rng, sets, depth - 1)),
        1 => SetExpr::inter(set_expr(rng, sets, depth - 1), set_expr(rng, sets, depth - 1)),
        _ => SetExpr::compl(set_expr(rng, sets, depth - 1)),
    }
}

fn pa_summand(rng: &mut ChaCha8Rng, sets: &[String], ints: &[String]) -> PATerm {
    let base = match rng.gen_range(0..6) {
        0 if !ints.is_empty() => PATerm::var(ints.choose(rng).unwrap().clone()),
        1 => PATerm::MaxC,
        _ => PATerm::card(set_expr(rng, sets, 2)),
    };
    match rng.gen_range(0..6) {
        0 => PATerm::scale(2, base),
        1 => PATerm::scale(-1, base),
        _ => base,
    }
}

fn pa_term(rng: &mut ChaCha8Rng, sets: &[String], ints: &[String]) -> PATerm {
    let mut t = pa_summand(rng, sets, ints);
    if rng.gen_bool(0.35) {
        t = PATerm::plus(t, pa_summand(rng, sets, ints));
    }
    if rng.gen_bool(0.3) {
        t = PATerm::plus(t, PATerm::Const(rng.gen_range(-3..=3)));
    }
    t
}

fn bapa_atom(rng: &mut ChaCha8Rng, sets: &[String], ints: &[String]) -> BapaAtom {
    match rng.gen_range(0..9) {
        0 | 1 => BapaAtom::SetEq(set_expr(rng, sets, 1), set_expr(rng, sets, 2)),
        2 | 3 => BapaAtom::Subset(set_expr(rng, sets, 1), set_expr(rng, sets, 2)),
        4 | 5 => BapaAtom::IntEq(pa_term(rng, sets, ints), pa_term(rng, sets, ints)),
        6 | 7 => BapaAtom::IntLe(pa_term(rng, sets, ints), pa_term(rng, sets, ints)),
        _ => BapaAtom::Dvd(rng.gen_range(2..=3), pa_term(rng, sets, ints)),
    }
}

fn grid(ints: &[String], g: i64) -> Vec<QFBAPAFormula> {
    ints.iter()
        .flat_map(|v| {
            [
                Formula::Atom(BapaAtom::IntLe(PATerm::Const(-g), PATerm::var(v.clone()))),
                Formula::Atom(BapaAtom::IntLe(PATerm::var(v.clone()), PATerm::Const(g))),
            ]
        })
        .collect()
}

/// A set formula over `sets`, with every integer variable confined to the
/// grid by top-level conjuncts.
fn bapa_formula(rng: &mut ChaCha8Rng, l: &Limits, sets: &[String], ints: &[String]) -> QFBAPAFormula {
    let n = rng.gen_range(1..=l.literals.min(5));
    let parts: Vec<_> = (0..n)
        .map(|_| {
            let a = bapa_atom(rng, sets, ints);
            literal(rng, a)
        })
        .collect();
    let body = combine(rng, parts);
    if ints.is_empty() {
        return body;
    }
    let mut conj = vec![body];
    conj.extend(grid(ints, l.grid));
    Formula::And(conj)
}

fn int_vars(rng: &mut ChaCha8Rng) -> Vec<String> {
    if rng.gen_bool(WEIGHTS.int_var) {
        pick_vars(rng, &INT_VARS, INT_VARS.len())
    } else {
        Vec::new()
    }
}

pub fn qfbapa_instance(rng: &mut ChaCha8Rng, l: &Limits) -> Problem {
    let sets = pick_vars(rng, &SET_VARS, l.sets);
    let ints = int_vars(rng);
    let maxc = Maxc::Fixed(rng.gen_range(0..=l.maxc));
    let formula = bapa_formula(rng, l, &sets, &ints);
    Problem::Qfbapa { maxc, sets, ints, formula }
}

pub fn qfbapai_instance(rng: &mut ChaCha8Rng, l: &Limits) -> Problem {
    let size = rng.gen_range(1..=l.carrier);
    let structure = random_structure(rng, size);
    let index_card = IndexCard::finite(rng.gen_range(1..=l.index_card));
    let arrays = pick_vars(rng, &ELEM_VARS, l.vars.min(2));
    let constants = if rng.gen_bool(WEIGHTS.shared_constant) { vec!["d".to_string()] } else { Vec::new() };
    let k = rng.gen_range(1..=l.defined);
    let defined: Vec<(String, QFFormula)> = (0..k)
        .map(|i| (format!("S{i}"), component_formula(rng, 3, &arrays, &constants)))
        .collect();
    let free_sets = if rng.gen_bool(WEIGHTS.free_set) { vec!["F".to_string()] } else { Vec::new() };
    let mut sets: Vec<String> = defined.iter().map(|(s, _)| s.clone()).collect();
    sets.extend(free_sets.iter().cloned());
    let ints = if rng.gen_bool(WEIGHTS.int_var / 2.0) { vec![INT_VARS[0].to_string()] } else { Vec::new() };
    let tight = Limits { literals: 3, ..*l };
    let skeleton = bapa_formula(rng, &tight, &sets, &ints);
    Problem::Qfbapai {
        component: Component::Finite(structure),
        index_card,
        arrays,
        constants,
        free_sets,
        ints,
        defined,
        skeleton,
    }
}

const CAL_ARRAYS: [&str; 2] = ["a", "b"];
const CAL_INDICES: [&str; 2] = ["i", "j"];
const CAL_VALUES: [&str; 1] = ["v"];

fn cal_array(rng: &mut ChaCha8Rng, depth: usize) -> ArrayTerm {
    let leaf = depth == 0 || rng.gen_bool(0.55);
    if leaf {
        return if rng.gen_bool(0.15) {
            ArrayTerm::Const("c".into())
        } else {
            ArrayTerm::var(*CAL_ARRAYS.choose(rng).unwrap())
        };
    }
    if rng.gen_bool(0.7) {
        let a = cal_array(rng, depth - 1);
        let v = cal_value(rng, depth - 1);
        ArrayTerm::store(a, *CAL_INDICES.choose(rng).unwrap(), v)
    } else {
        ArrayTerm::App("f".into(), vec![cal_array(rng, depth - 1)])
    }
}

fn cal_value(rng: &mut ChaCha8Rng, depth: usize) -> ValueTerm {
    match rng.gen_range(0..6) {
        0 | 1 | 2 => cal_array(rng, depth).read(*CAL_INDICES.choose(rng).unwrap()),
        3 => ValueTerm::cst("c"),
        4 if depth > 0 => ValueTerm::App("f".into(), vec![cal_value(rng, depth - 1)]),
        _ => ValueTerm::var(CAL_VALUES[0]),
    }
}

fn point_atom(rng: &mut ChaCha8Rng) -> PointAtom {
    if rng.gen_bool(0.5) {
        PointAtom::new("P", vec![cal_array(rng, 1)])
    } else {
        PointAtom::new("=", vec![cal_array(rng, 1), cal_array(rng, 1)])
    }
}

fn card_term(rng: &mut ChaCha8Rng) -> CardTerm {
    match rng.gen_range(0..6) {
        0 => CardTerm::Const(rng.gen_range(0..=3)),
        1 => CardTerm::Size,
        _ => {
            let n = rng.gen_range(1..=2);
            let parts: Vec<_> = (0..n)
                .map(|_| {
                    let a = point_atom(rng);
                    literal(rng, a)
                })
                .collect();
            CardTerm::card(combine(rng, parts))
        }
    }
}

fn cal_atom(rng: &mut ChaCha8Rng) -> CalAtom {
    match rng.gen_range(0..10) {
        0 | 1 => CalAtom::Value("=".into(), vec![cal_value(rng, 1), cal_value(rng, 1)]),
        2 => CalAtom::Value("P".into(), vec![cal_value(rng, 1)]),
        3 | 4 => CalAtom::Array(PointAtom::new("=", vec![cal_array(rng, 2), cal_array(rng, 2)])),
        5 => CalAtom::Array(PointAtom::new("P", vec![cal_array(rng, 2)])),
        6 => CalAtom::IndexEq(CAL_INDICES[0].into(), CAL_INDICES[1].into()),
        7 => CalAtom::CardLe(card_term(rng), card_term(rng)),
        _ => CalAtom::CardEq(card_term(rng), card_term(rng)),
    }
}

/// Rejection-samples until the store and read budgets hold.
pub fn cal_formula(rng: &mut ChaCha8Rng, l: &Limits) -> CALFormula {
    loop {
        let n = rng.gen_range(1..=l.literals.min(4));
        let parts: Vec<_> = (0..n)
            .map(|_| {
                let a = cal_atom(rng);
                literal(rng, a)
            })
            .collect();
        let f = combine(rng, parts);
        let (stores, reads) = store_read_counts(&f);
        if stores <= l.stores && reads <= l.reads {
            return f;
        }
    }
}

pub fn cal_instance(rng: &mut ChaCha8Rng, l: &Limits) -> Problem {
    let size = rng.gen_range(1..=l.carrier);
    let structure = random_structure(rng, size);
    let index_card = IndexCard::finite(rng.gen_range(1..=l.index_card));
    let formula = cal_formula(rng, l);
    let vars = crate::cal::CalVars::of(&formula);
    Problem::Cal {
        component: Component::Finite(structure),
        index_card,
        arrays: vars.arrays.into_iter().collect(),
        indices: vars.indices.into_iter().collect(),
        values: vars.values.into_iter().collect(),
        formula,
    }
}

fn monomial(rng: &mut ChaCha8Rng, vars: &[String]) -> Monomial {
    let n = rng.gen_range(1..=2);
    let factors: Vec<&String> = (0..n).map(|_| vars.choose(rng).unwrap()).collect();
    Monomial::of(&factors)
}

pub fn skolem_formula(rng: &mut ChaCha8Rng, l: &Limits, vars: &[String]) -> SkolemFormula {
    let n = rng.gen_range(1..=l.skolem_atoms);
    let parts: Vec<_> = (0..n)
        .map(|_| {
            let (a, b) = (monomial(rng, vars), monomial(rng, vars));
            let atom = if rng.gen_bool(0.5) { SkolemAtom::eq(a, b) } else { SkolemAtom::divides(a, b) };
            literal(rng, atom)
        })
        .collect();
    combine(rng, parts)
}

pub fn skolem_instance(rng: &mut ChaCha8Rng, l: &Limits) -> Problem {
    let vars = pick_vars(rng, &ELEM_VARS, l.vars);
    let formula = skolem_formula(rng, l, &vars);
    Problem::Skolem { vars, formula }
}

pub fn instance(logic: Logic, seed: u64, l: &Limits) -> Problem {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    match logic {
        Logic::Power => power_instance(&mut rng, l),
        Logic::Qfbapa => qfbapa_instance(&mut rng, l),
        Logic::Qfbapai => qfbapai_instance(&mut rng, l),
        Logic::Cal => cal_instance(&mut rng, l),
        Logic::Skolem => skolem_instance(&mut rng, l),
    }
}

/// Per-instance seeds of a run.
pub fn instance_seeds(seed: u64, count: usize) -> Vec<u64> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    (0..count).map(|_| rng.next_u64()).collect()
}

#[derive(Debug, Clone, Default)]
pub struct FuzzOptions {
    pub limits: Limits,
    /// Flips every conclusive solver verdict, to exercise the reporting.
    pub inject_bug: bool,
    pub threads: Option<usize>,
    /// Where reproduction scripts are written; `None` writes nothing.
    pub repro_dir: Option<PathBuf>,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Disagreement {
    pub index: usize,
    pub seed: u64,
    pub solver: Verdict,
    pub oracle: Verdict,
    pub detail: String,
    pub script: String,
}

#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct FuzzReport {
    pub count: usize,
    pub agreements: usize,
    pub sat: usize,
    /// Solver or oracle gave up, or the oracle only covered a bounded range.
    pub inconclusive: usize,
    pub disagreements: Vec<Disagreement>,
    pub repro_files: Vec<PathBuf>,
}

enum Check {
    Agree { sat: bool },
    Inconclusive,
    Disagree(Verdict, Verdict, String),
}

fn compare(p: &Problem, l: &Limits, inject_bug: bool) -> Check {
    let mut answer = solve(p);
    if inject_bug {
        answer.verdict = match answer.verdict {
            Verdict::Sat => Verdict::Unsat,
            Verdict::Unsat => Verdict::Sat,
            Verdict::Unknown => Verdict::Unknown,
        };
    }
    let bound = (p.logic() == Logic::Skolem).then_some(l.skolem_bound);
    let reference = oracle(p, bound.or(Some(l.grid as u64)));
    if answer.verdict == Verdict::Unknown || reference.verdict == Verdict::Unknown {
        return Check::Inconclusive;
    }
    if answer.verdict == Verdict::Sat && !inject_bug {
        if let Some(cert) = &answer.certificate {
            if let Err(e) = check(p, cert) {
                return Check::Disagree(answer.verdict, reference.verdict, format!("certificate rejected: {e}"));
            }
        }
    }
    // Skolem enumeration is bounded, so only its SAT answers are final.
    let bounded_unsat = p.logic() == Logic::Skolem && reference.verdict == Verdict::Unsat;
    if answer.verdict == reference.verdict {
        Check::Agree { sat: answer.verdict == Verdict::Sat }
    } else if bounded_unsat && answer.verdict == Verdict::Sat {
        Check::Inconclusive
    } else {
        Check::Disagree(answer.verdict, reference.verdict, "verdicts differ".into())
    }
}

fn write_repro(dir: &Path, logic: Logic, seed: u64, d: &Disagreement) -> std::io::Result<PathBuf> {
    std::fs::create_dir_all(dir)?;
    let path = dir.join(format!("{}-{seed}-{}.smt", logic.name().to_lowercase(), d.index));
    let text = format!(
        "; instance {} (instance seed {}) of run seed {seed}\n; solver {} oracle {}: {}\n{}",
        d.index,
        d.seed,
        d.solver.name(),
        d.oracle.name(),
        d.detail,
        d.script
    );
    std::fs::write(&path, text)?;
    Ok(path)
}

pub fn fuzz(logic: Logic, count: usize, seed: u64, opts: &FuzzOptions) -> std::io::Result<FuzzReport> {
    let seeds = instance_seeds(seed, count);
    let threads = opts
        .threads
        .unwrap_or_else(|| std::thread::available_parallelism().map_or(1, |n| n.get()))
        .clamp(1, count.max(1));
    let chunk = count.div_ceil(threads).max(1);
    let limits = opts.limits;
    let results: Vec<(usize, Check)> = std::thread::scope(|scope| {
        let handles: Vec<_> = seeds
            .chunks(chunk)
            .enumerate()
            .map(|(c, part)| {
                scope.spawn(move || {
                    part.iter()
                        .enumerate()
                        .map(|(j, &s)| {
                            let p = instance(logic, s, &limits);
                            (c * chunk + j, compare(&p, &limits, opts.inject_bug))
                        })
                        .collect::<Vec<_>>()
                })
            })
            .collect();
        handles.into_iter().flat_map(|h| h.join().expect("fuzz worker panicked")).collect()
    });
    let mut report = FuzzReport { count, ..FuzzReport::default() };
    for (index, outcome) in results {
        match outcome {
            Check::Agree { sat } => {
                report.agreements += 1;
                report.sat += usize::from(sat);
            }
            Check::Inconclusive => report.inconclusive += 1,
            Check::Disagree(solver, oracle, detail) => {
                let s = seeds[index];
                let d = Disagreement {
                    index,
                    seed: s,
                    solver,
                    oracle,
                    detail,
                    script: instance(logic, s, &limits).to_text(),
                };
                if let Some(dir) = &opts.repro_dir {
                    report.repro_files.push(write_repro(dir, logic, seed, &d)?);
                }
                report.disagreements.push(d);
            }
        }
    }
    Ok(report)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::formula::symbol_size;

    #[test]
    fn sized_formulas_hit_their_size() {
        let mut rng = ChaCha8Rng::seed_from_u64(7);
        for size in 2..60 {
            for _ in 0..20 {
                assert_eq!(symbol_size(&sized_formula(&mut rng, size)), size);
            }
        }
    }

    #[test]
    fn same_seed_same_instances() {
        let l = Limits::default();
        for logic in Logic::ALL {
            let a: Vec<_> = instance_seeds(42, 20).into_iter().map(|s| instance(logic, s, &l)).collect();
            let b: Vec<_> = instance_seeds(42, 20).into_iter().map(|s| instance(logic, s, &l)).collect();
            assert_eq!(a, b);
        }
    }

    #[test]
    fn cal_budget_respected() {
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        let l = Limits::default();
        for _ in 0..200 {
            let (s, r) = store_read_counts(&cal_formula(&mut rng, &l));
            assert!(s <= 2 && r <= 2);
        }
    }

    #[test]
    fn injected_bug_is_reported() {
        let opts = FuzzOptions { inject_bug: true, threads: Some(2), ..FuzzOptions::default() };
        let report = fuzz(Logic::Power, 30, 1, &opts).unwrap();
        assert!(!report.disagreements.is_empty());
        let clean = fuzz(Logic::Power, 30, 1, &FuzzOptions::default()).unwrap();
        assert!(clean.disagreements.is_empty(), "{:?}", clean.disagreements);
    }
}
