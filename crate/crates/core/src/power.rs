//! Satisfiability in power structures `M^I`.
//!
//! A DNF clause `P ∧ ¬N₁ ∧ … ∧ ¬N_k` holds in the power iff the positive
//! part `P` holds at every index and each `N_j` fails at some index. Such a
//! point exists iff `P` is satisfiable in `M` and the negatives can be split
//! into at most `|I|` groups, each jointly refutable together with `P`:
//! group `d` is realized at its own index and every other index repeats a
//! model of `P`.

use std::collections::{BTreeMap, BTreeSet, HashMap};

use crate::formula::{to_dnf, Atom, Clause, Formula, Literal, QFFormula};
use crate::oracle::{complete_model, ComponentOracle, Decision};
use crate::structures::{IndexCard, Model, Value};

pub struct PowerProblem<'a> {
    pub oracle: &'a dyn ComponentOracle,
    pub index_card: IndexCard,
    pub formula: QFFormula,
    /// Require the default column to be the all-default assignment (the weak
    /// power, where all but finitely many coordinates are zero).
    pub zero_default: bool,
}

impl<'a> PowerProblem<'a> {
    pub fn new(oracle: &'a dyn ComponentOracle, index_card: IndexCard, formula: QFFormula) -> Self {
        PowerProblem { oracle, index_card, formula, zero_default: false }
    }

    pub fn weak(mut self) -> Self {
        self.zero_default = true;
        self
    }

    fn zero_model(&self) -> Model {
        complete_model(self.oracle, &Model::new(), &self.formula.free_vars())
    }
}

/// Witness of satisfiability: a DNF clause of the input, a partition of the
/// clause's negative literals (by position among them), a model of the
/// positive part, and one model per part.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct PartitionCertificate {
    pub clause: Clause<Atom>,
    pub partition: Vec<Vec<usize>>,
    pub default_model: Model,
    pub part_models: Vec<Model>,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct SparseVec {
    pub default: Value,
    pub at: BTreeMap<usize, Value>,
}

impl SparseVec {
    pub fn get(&self, i: usize) -> Value {
        *self.at.get(&i).unwrap_or(&self.default)
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum PowerModel {
    Finite(BTreeMap<String, Vec<Value>>),
    Sparse(BTreeMap<String, SparseVec>),
}

impl PowerModel {
    /// The component assignment at index `i`.
    pub fn column(&self, i: usize) -> Model {
        match self {
            PowerModel::Finite(m) => m.iter().map(|(k, v)| (k.clone(), v[i])).collect(),
            PowerModel::Sparse(m) => m.iter().map(|(k, v)| (k.clone(), v.get(i))).collect(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum PowerResult {
    Sat { model: PowerModel, certificate: PartitionCertificate },
    Unsat,
    Unknown(String),
}

impl PowerResult {
    pub fn is_sat(&self) -> bool {
        matches!(self, PowerResult::Sat { .. })
    }
}

fn conj(lits: impl IntoIterator<Item = Literal<Atom>>) -> QFFormula {
    Formula::and(lits.into_iter().map(|l| l.to_formula()))
}

/// The positive part of a clause.
pub fn positive_part(clause: &Clause<Atom>) -> QFFormula {
    conj(clause.positives().cloned())
}

/// Positive part together with the negated literals at `part`.
pub fn part_formula(clause: &Clause<Atom>, part: &[usize]) -> QFFormula {
    let negatives: Vec<&Literal<Atom>> = clause.negatives().collect();
    conj(clause.positives().cloned().chain(part.iter().map(|&j| negatives[j].clone())))
}

/// Puts the model of part `d` at index `d` and the positive-part model
/// everywhere else.
pub fn assemble_model(
    default_model: &Model,
    part_models: &[Model],
    index_card: IndexCard,
) -> PowerModel {
    let vars: BTreeSet<&String> = default_model.keys().chain(part_models.iter().flat_map(|m| m.keys())).collect();
    let value = |m: &Model, v: &String| *m.get(v).or_else(|| default_model.get(v)).unwrap_or(&0);
    match index_card {
        IndexCard::Finite(n) => {
            assert!(part_models.len() <= n, "more parts than indices");
            let mut out = BTreeMap::new();
            for v in vars {
                let mut column = vec![value(default_model, v); n];
                for (d, m) in part_models.iter().enumerate() {
                    column[d] = value(m, v);
                }
                out.insert(v.clone(), column);
            }
            PowerModel::Finite(out)
        }
        IndexCard::Unbounded => {
            let mut out = BTreeMap::new();
            for v in vars {
                let default = value(default_model, v);
                let at = part_models
                    .iter()
                    .enumerate()
                    .map(|(d, m)| (d, value(m, v)))
                    .filter(|(_, x)| *x != default)
                    .collect();
                out.insert(v.clone(), SparseVec { default, at });
            }
            PowerModel::Sparse(out)
        }
    }
}

enum Attempt {
    Found(PartitionCertificate),
    Refuted,
    Unknown(String),
}

struct PartSearch<'p, 'a> {
    problem: &'p PowerProblem<'a>,
    clause: &'p Clause<Atom>,
    vars: BTreeSet<String>,
    memo: HashMap<u64, Decision>,
    unknown: Option<String>,
}

impl PartSearch<'_, '_> {
    fn decide(&mut self, mask: u64) -> Decision {
        if let Some(d) = self.memo.get(&mask) {
            return d.clone();
        }
        let part: Vec<usize> = (0..64).filter(|j| mask >> j & 1 == 1).collect();
        let d = match self.problem.oracle.decide(&part_formula(self.clause, &part)) {
            Decision::Sat(m) => Decision::Sat(complete_model(self.problem.oracle, &m, &self.vars)),
            other => other,
        };
        if let Decision::Unknown(why) = &d {
            self.unknown.get_or_insert(why.clone());
        }
        self.memo.insert(mask, d.clone());
        d
    }

    /// Assigns negatives `next..k` to at most `max_parts` parts; a part is
    /// abandoned as soon as its conjunction is not known to be satisfiable.
    fn extend(&mut self, parts: &mut Vec<u64>, next: usize, k: usize, max_parts: usize) -> bool {
        if next == k {
            return true;
        }
        for p in 0..parts.len() {
            parts[p] |= 1 << next;
            if self.decide(parts[p]).is_sat() && self.extend(parts, next + 1, k, max_parts) {
                return true;
            }
            parts[p] &= !(1 << next);
        }
        if parts.len() < max_parts {
            parts.push(1 << next);
            if self.decide(1 << next).is_sat() && self.extend(parts, next + 1, k, max_parts) {
                return true;
            }
            parts.pop();
        }
        false
    }
}

fn try_clause(p: &PowerProblem<'_>, clause: &Clause<Atom>, vars: &BTreeSet<String>) -> Attempt {
    let positives = positive_part(clause);
    let default_model = if p.zero_default {
        let zero = p.zero_model();
        if !p.oracle.model_check(&positives, &zero) {
            return Attempt::Refuted;
        }
        zero
    } else {
        match p.oracle.decide(&positives) {
            Decision::Sat(m) => complete_model(p.oracle, &m, vars),
            Decision::Unsat => return Attempt::Refuted,
            Decision::Unknown(why) => return Attempt::Unknown(why),
        }
    };
    let k = clause.negatives().count();
    if k > 64 {
        return Attempt::Unknown(format!("clause has {k} negative literals"));
    }
    let mut search = PartSearch { problem: p, clause, vars: vars.clone(), memo: HashMap::new(), unknown: None };
    let finish = |search: &mut PartSearch<'_, '_>, parts: Vec<u64>| {
        let partition: Vec<Vec<usize>> = parts.iter().map(|m| (0..k).filter(|j| m >> j & 1 == 1).collect()).collect();
        let part_models = parts
            .iter()
            .map(|m| match search.decide(*m) {
                Decision::Sat(model) => model,
                _ => unreachable!("parts are satisfiable"),
            })
            .collect();
        Attempt::Found(PartitionCertificate { clause: clause.clone(), partition, default_model: default_model.clone(), part_models })
    };
    // Singletons first: each negative literal at its own index.
    let mut all_singletons = true;
    for j in 0..k {
        match search.decide(1 << j) {
            Decision::Sat(_) => {}
            // A literal that cannot fail alongside the positives cannot fail
            // in any larger part either.
            Decision::Unsat => return Attempt::Refuted,
            Decision::Unknown(_) => all_singletons = false,
        }
    }
    if all_singletons && p.index_card.admits(k) {
        return finish(&mut search, (0..k).map(|j| 1u64 << j).collect());
    }
    let limit = match p.index_card {
        IndexCard::Finite(n) => n.min(k),
        IndexCard::Unbounded => k,
    };
    for max_parts in 1..=limit {
        let mut parts = Vec::new();
        if search.extend(&mut parts, 0, k, max_parts) {
            return finish(&mut search, parts);
        }
    }
    match search.unknown {
        Some(why) => Attempt::Unknown(why),
        None => Attempt::Refuted,
    }
}

/// Decides the formula of `p` in the power structure.
pub fn solve_power(p: &PowerProblem<'_>) -> PowerResult {
    let vars = p.formula.free_vars();
    let mut unknown = None;
    for clause in to_dnf(&p.formula) {
        match try_clause(p, &clause, &vars) {
            Attempt::Found(certificate) => {
                let model = assemble_model(&certificate.default_model, &certificate.part_models, p.index_card);
                return PowerResult::Sat { model, certificate };
            }
            Attempt::Refuted => {}
            Attempt::Unknown(why) => unknown = Some(why),
        }
    }
    match unknown {
        Some(why) => PowerResult::Unknown(why),
        None => PowerResult::Unsat,
    }
}

/// Validates a certificate against `p` without calling the decision
/// procedure: only DNF membership, partition shape and model checks.
pub fn check_certificate(p: &PowerProblem<'_>, cert: &PartitionCertificate) -> Result<(), String> {
    let k = cert.clause.negatives().count();
    let mut seen = BTreeSet::new();
    for part in &cert.partition {
        if part.is_empty() {
            return Err("empty part".into());
        }
        for &j in part {
            if j >= k {
                return Err(format!("part refers to negative literal {j}, clause has {k}"));
            }
            if !seen.insert(j) {
                return Err(format!("negative literal {j} appears in two parts"));
            }
        }
    }
    if seen.len() != k {
        return Err("partition does not cover every negative literal".into());
    }
    log::debug!("partition gate: reject when the number of parts exceeds |I|");
    if !p.index_card.admits(cert.partition.len()) {
        return Err(format!("{} parts exceed index cardinality {}", cert.partition.len(), p.index_card));
    }
    if cert.part_models.len() != cert.partition.len() {
        return Err("one model per part required".into());
    }
    if !to_dnf(&p.formula).any(|c| c == cert.clause) {
        return Err("clause is not a disjunct of the formula".into());
    }
    let vars = p.formula.free_vars();
    for m in std::iter::once(&cert.default_model).chain(&cert.part_models) {
        if let Some(v) = vars.iter().find(|v| !m.contains_key(*v)) {
            return Err(format!("model leaves {v} unassigned"));
        }
        if m.values().any(|x| !p.oracle.in_carrier(*x)) {
            return Err("model value outside the carrier".into());
        }
    }
    if p.zero_default && cert.default_model != p.zero_model() {
        return Err("default column is not the zero assignment".into());
    }
    if !p.oracle.model_check(&positive_part(&cert.clause), &cert.default_model) {
        return Err("default model violates the positive literals".into());
    }
    for (d, (part, m)) in cert.partition.iter().zip(&cert.part_models).enumerate() {
        if !p.oracle.model_check(&part_formula(&cert.clause, part), m) {
            return Err(format!("model of part {d} violates its literals"));
        }
    }
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::formula::Term;
    use crate::oracle::{finite_oracle, lia_oracle};
    use crate::structures::{BruteResult, FiniteStructure, PowerPoint};

    fn rel(r: &str, a: Term, b: Term) -> QFFormula {
        Formula::atom(Atom::new(r, vec![a, b]))
    }

    fn x() -> Term {
        Term::var("x")
    }

    fn y() -> Term {
        Term::var("y")
    }

    fn n(k: i64) -> Term {
        Term::cst(k.to_string())
    }

    fn between_zero_and_one() -> QFFormula {
        Formula::and([
            rel("<=", n(0), x()),
            Formula::not(rel("<=", x(), n(0))),
            Formula::not(rel("<=", n(1), x())),
        ])
    }

    #[test]
    fn strict_order_single_index() {
        let o = lia_oracle(false);
        let f = Formula::and([rel("<=", x(), y()), Formula::not(rel("=", x(), y()))]);
        let p = PowerProblem::new(&o, IndexCard::finite(1), f);
        let PowerResult::Sat { model, certificate } = solve_power(&p) else { panic!() };
        let c = model.column(0);
        assert!(c["x"] < c["y"]);
        assert_eq!(check_certificate(&p, &certificate), Ok(()));
    }

    #[test]
    fn two_part_partition_needs_two_indices() {
        let o = lia_oracle(false);
        let p1 = PowerProblem::new(&o, IndexCard::finite(1), between_zero_and_one());
        assert_eq!(solve_power(&p1), PowerResult::Unsat);
        let p2 = PowerProblem::new(&o, IndexCard::finite(2), between_zero_and_one());
        let PowerResult::Sat { model, certificate } = solve_power(&p2) else { panic!() };
        assert_eq!(certificate.partition.len(), 2);
        let PowerModel::Finite(m) = &model else { panic!() };
        let xs = &m["x"];
        assert!(xs.iter().all(|v| *v >= 0) && xs.contains(&0) && xs.iter().any(|v| *v >= 1));
        assert_eq!(check_certificate(&p2, &certificate), Ok(()));
        let pu = PowerProblem::new(&o, IndexCard::Unbounded, between_zero_and_one());
        let PowerResult::Sat { model: PowerModel::Sparse(s), .. } = solve_power(&pu) else { panic!() };
        assert!(s["x"].at.len() <= 2);
    }

    #[test]
    fn unsat_positive_part() {
        let o = lia_oracle(false);
        let f = Formula::and([rel("<=", x(), n(0)), rel("<=", n(1), x()), Formula::not(rel("=", x(), y()))]);
        let p = PowerProblem::new(&o, IndexCard::finite(3), f);
        assert_eq!(solve_power(&p), PowerResult::Unsat);
    }

    #[test]
    fn certificate_rejections() {
        let o = lia_oracle(false);
        let p2 = PowerProblem::new(&o, IndexCard::finite(2), between_zero_and_one());
        let PowerResult::Sat { certificate, .. } = solve_power(&p2) else { panic!() };
        let mut bad = certificate.clone();
        bad.part_models[0].insert("x".into(), 5);
        bad.part_models[1].insert("x".into(), 5);
        assert!(check_certificate(&p2, &bad).is_err());
        let p1 = PowerProblem::new(&o, IndexCard::finite(1), between_zero_and_one());
        let err = check_certificate(&p1, &certificate).unwrap_err();
        assert!(err.contains("exceed"), "{err}");
        let mut overlap = certificate.clone();
        let first = overlap.partition[0][0];
        overlap.partition[1].push(first);
        assert!(check_certificate(&p2, &overlap).is_err());
        let mut foreign = certificate;
        foreign.clause = Clause::new(vec![Literal::pos(Atom::eq(x(), x()))]);
        foreign.partition.clear();
        foreign.part_models.clear();
        assert!(check_certificate(&p2, &foreign).unwrap_err().contains("disjunct"));
    }

    #[test]
    fn assembly_shapes() {
        let zero: Model = [("x".to_string(), 0)].into_iter().collect();
        let one: Model = [("x".to_string(), 1)].into_iter().collect();
        let PowerModel::Finite(m) = assemble_model(&zero, &[], IndexCard::finite(3)) else { panic!() };
        assert_eq!(m["x"], vec![0, 0, 0]);
        let PowerModel::Finite(m) = assemble_model(&zero, &[one.clone()], IndexCard::finite(3)) else { panic!() };
        assert_eq!(m["x"], vec![1, 0, 0]);
        let PowerModel::Sparse(m) = assemble_model(&zero, &[one], IndexCard::Unbounded) else { panic!() };
        assert_eq!(m["x"].default, 0);
        assert_eq!(m["x"].at.len(), 1);
    }

    #[test]
    fn assembled_model_passes_power_semantics() {
        let s = FiniteStructure::new(2).with_relation("<=", 2, |t: &[usize]| t[0] <= t[1]).unwrap();
        let s = s.with_constant("zero", 0).unwrap().with_constant("one", 1).unwrap();
        let f = Formula::and([
            rel("<=", Term::cst("zero"), x()),
            Formula::not(rel("<=", x(), Term::cst("zero"))),
            Formula::not(rel("<=", Term::cst("one"), x())),
        ]);
        let o = finite_oracle(s.clone());
        for n in 1..=3 {
            let p = PowerProblem::new(&o, IndexCard::finite(n), f.clone());
            let brute = s.brute_force_power_sat(IndexCard::finite(n), &f, 1_000_000).unwrap();
            match solve_power(&p) {
                PowerResult::Sat { model: PowerModel::Finite(m), .. } => {
                    let point: PowerPoint = m;
                    assert!(s.power_holds(n, &f, &point).unwrap());
                    assert!(brute.is_sat());
                }
                PowerResult::Unsat => assert_eq!(brute, BruteResult::Unsat),
                other => panic!("{other:?}"),
            }
        }
    }

    #[test]
    fn weak_power_requires_zero_default() {
        // x = 1 cannot hold at every index of a weak power over ℕ.
        let o = lia_oracle(true);
        let f = rel("=", x(), n(1));
        assert!(solve_power(&PowerProblem::new(&o, IndexCard::Unbounded, f.clone())).is_sat());
        assert_eq!(solve_power(&PowerProblem::new(&o, IndexCard::Unbounded, f).weak()), PowerResult::Unsat);
        let g = Formula::not(rel("=", x(), n(0)));
        let PowerResult::Sat { model: PowerModel::Sparse(m), .. } =
            solve_power(&PowerProblem::new(&o, IndexCard::Unbounded, g).weak())
        else {
            panic!()
        };
        assert_eq!(m["x"].default, 0);
    }
}
