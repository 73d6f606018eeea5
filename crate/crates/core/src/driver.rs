//! Solver dispatch, model printing and certificate exchange for scripts.

use std::collections::BTreeSet;
use std::fmt::Write as _;
use std::sync::mpsc;
use std::time::Duration;

use crate::cal::{brute_force_cal, solve_cal, translate, CalOptions, CalState, Integers, TranslateOptions};
use crate::formula::{Clause, Formula, Literal};
use crate::oracle::lia_oracle;
use crate::power::{check_certificate, solve_power, PartitionCertificate, PowerModel, PowerProblem, PowerResult};
use crate::qfbapa::{brute_force_qfbapa, eval_formula, qfbapa_sat, set_vars, BapaResult, Maxc, SetModel};
use crate::qfbapai::{
    brute_force_qfbapai, check_certificate_qfbapai, solve_qfbapai, ArrayWitness, QFBAPAIProblem, QfbapaiResult,
    SupportCertificate,
};
use crate::skolem::{power_problem, skolem_oracle, skolem_sat, skolem_vars, SkolemResult};
use crate::structures::{capacity, BruteResult, IndexCard, Model, Value};
use crate::syntax::{parse_component_formula, read, Component, Logic, ParseError, Pos, Problem, Sexp};

/// Process exit code for parse, sort and I/O errors.
pub const EXIT_ERROR: i32 = 3;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Verdict {
    Sat,
    Unsat,
    Unknown,
}

impl Verdict {
    pub fn exit_code(self) -> i32 {
        match self {
            Verdict::Sat => 0,
            Verdict::Unsat => 1,
            Verdict::Unknown => 2,
        }
    }

    pub fn name(self) -> &'static str {
        match self {
            Verdict::Sat => "sat",
            Verdict::Unsat => "unsat",
            Verdict::Unknown => "unknown",
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum Certificate {
    Power(PartitionCertificate),
    Qfbapa(SetModel),
    Qfbapai(SupportCertificate),
    Cal(SupportCertificate),
    Skolem(PartitionCertificate),
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Outcome {
    pub verdict: Verdict,
    pub reason: Option<String>,
    /// The `(model ...)` line of a satisfiable answer.
    pub model: Option<String>,
    pub certificate: Option<Certificate>,
}

impl Outcome {
    fn sat(model: String, certificate: Option<Certificate>) -> Self {
        Outcome { verdict: Verdict::Sat, reason: None, model: Some(model), certificate }
    }

    fn unsat(reason: Option<String>) -> Self {
        Outcome { verdict: Verdict::Unsat, reason, model: None, certificate: None }
    }

    fn unknown(reason: impl Into<String>) -> Self {
        Outcome { verdict: Verdict::Unknown, reason: Some(reason.into()), model: None, certificate: None }
    }

    /// Verdict line, then the model or a `;` comment with the reason.
    pub fn render(&self) -> String {
        let mut out = format!("{}\n", self.verdict.name());
        if let Some(m) = &self.model {
            out.push_str(m);
            out.push('\n');
        }
        if let Some(r) = &self.reason {
            let _ = writeln!(out, "; {r}");
        }
        out
    }
}

fn list(items: impl IntoIterator<Item = String>) -> String {
    items.into_iter().collect::<Vec<_>>().join(" ")
}

fn vec_text(v: &[Value]) -> String {
    format!("(vec {})", list(v.iter().map(Value::to_string))).replace("(vec )", "(vec)")
}

fn set_text(s: &BTreeSet<usize>) -> String {
    format!("({})", list(s.iter().map(usize::to_string)))
}

fn model_line(entries: Vec<(String, String)>) -> String {
    let body = list(entries.into_iter().map(|(k, v)| format!("({k} {v})")));
    if body.is_empty() {
        "(model)".into()
    } else {
        format!("(model {body})")
    }
}

fn power_model_line(vars: &[String], model: &PowerModel, default: Value) -> String {
    let entries = vars
        .iter()
        .map(|v| {
            let text = match model {
                PowerModel::Finite(cols) => match cols.get(v) {
                    Some(col) => vec_text(col),
                    None => {
                        let n = cols.values().next().map_or(0, Vec::len);
                        vec_text(&vec![default; n])
                    }
                },
                PowerModel::Sparse(cols) => match cols.get(v) {
                    Some(col) => {
                        let at = col.at.iter().map(|(i, x)| format!(" (at {i} {x})")).collect::<String>();
                        format!("(default {}{at})", col.default)
                    }
                    None => format!("(default {default})"),
                },
            };
            (v.clone(), text)
        })
        .collect();
    model_line(entries)
}

fn set_model_entries(m: &SetModel, sets: &[String], ints: &[String]) -> Vec<(String, String)> {
    let mut entries: Vec<(String, String)> = sets.iter().map(|s| (s.clone(), set_text(&m.set(s)))).collect();
    entries.extend(ints.iter().map(|v| (v.clone(), m.ints.get(v).copied().unwrap_or(0).to_string())));
    entries
}

fn witness_line(w: &ArrayWitness, arrays: &[String], constants: &[String], free_sets: &[String], ints: &[String]) -> String {
    let mut entries = Vec::new();
    for a in arrays {
        entries.push((a.clone(), w.arrays.get(a).map_or_else(|| "(vec)".into(), |v| vec_text(v))));
    }
    for c in constants {
        entries.push((c.clone(), w.constants.get(c).copied().unwrap_or(0).to_string()));
    }
    for s in free_sets {
        entries.push((s.clone(), w.free_sets.get(s).map_or_else(|| "()".into(), set_text)));
    }
    for v in ints {
        entries.push((v.clone(), w.ints.get(v).copied().unwrap_or(0).to_string()));
    }
    model_line(entries)
}

fn cal_line(st: &CalState, arrays: &[String], indices: &[String], values: &[String], default: Value) -> String {
    let mut entries = Vec::new();
    for a in arrays {
        entries.push((a.clone(), st.arrays.get(a).map_or_else(|| "(vec)".into(), |v| vec_text(v))));
    }
    for i in indices {
        entries.push((i.clone(), st.indices.get(i).copied().unwrap_or(0).to_string()));
    }
    for v in values {
        entries.push((v.clone(), st.values.get(v).copied().unwrap_or(default).to_string()));
    }
    model_line(entries)
}

/// The QFBAPAI problem of a QFBAPAI script, bound to `oracle`.
pub fn qfbapai_problem<'a>(p: &Problem, oracle: &'a dyn crate::oracle::ComponentOracle) -> Option<QFBAPAIProblem<'a>> {
    let Problem::Qfbapai { index_card, arrays, constants, defined, skeleton, .. } = p else { return None };
    Some(QFBAPAIProblem {
        oracle,
        index_card: *index_card,
        skeleton: skeleton.clone(),
        defined: defined.clone(),
        array_vars: arrays.clone(),
        constants: constants.clone(),
    })
}

/// Runs the decision procedure of the script's logic.
pub fn solve(problem: &Problem) -> Outcome {
    match problem {
        Problem::Power { component, index_card, vars, formula } => {
            let oracle = component.oracle();
            let p = PowerProblem::new(&*oracle, *index_card, formula.clone());
            match solve_power(&p) {
                PowerResult::Sat { model, certificate } => Outcome::sat(
                    power_model_line(vars, &model, oracle.default_value()),
                    Some(Certificate::Power(certificate)),
                ),
                PowerResult::Unsat => Outcome::unsat(None),
                PowerResult::Unknown(why) => Outcome::unknown(why),
            }
        }
        Problem::Qfbapa { maxc, sets, ints, formula } => match qfbapa_sat(formula, *maxc) {
            BapaResult::Sat(m) => {
                let mut entries = vec![("maxc".to_string(), m.maxc.to_string())];
                entries.extend(set_model_entries(&m, sets, ints));
                Outcome::sat(model_line(entries), Some(Certificate::Qfbapa(m)))
            }
            BapaResult::Unsat => Outcome::unsat(None),
            BapaResult::Unknown(why) => Outcome::unknown(why),
        },
        Problem::Qfbapai { component, arrays, constants, free_sets, ints, .. } => {
            let oracle = component.oracle();
            let p = qfbapai_problem(problem, &*oracle).unwrap();
            match solve_qfbapai(&p) {
                QfbapaiResult::Sat { witness, certificate } => Outcome::sat(
                    witness_line(&witness, arrays, constants, free_sets, ints),
                    Some(Certificate::Qfbapai(certificate)),
                ),
                QfbapaiResult::Unsat => Outcome::unsat(None),
                QfbapaiResult::Unknown(why) => Outcome::unknown(why),
            }
        }
        Problem::Cal { component, index_card, arrays, indices, values, formula } => {
            let oracle = component.oracle();
            match solve_cal(formula, &*oracle, *index_card, CalOptions::default()) {
                crate::cal::CalResult::Sat { state, certificate, .. } => Outcome::sat(
                    cal_line(&state, arrays, indices, values, oracle.default_value()),
                    Some(Certificate::Cal(certificate)),
                ),
                crate::cal::CalResult::Unsat => Outcome::unsat(None),
                crate::cal::CalResult::Unknown(why) => Outcome::unknown(why),
            }
        }
        Problem::Skolem { vars, formula } => match skolem_sat(formula) {
            SkolemResult::Sat { witness, certificate } => {
                let entries = vars
                    .iter()
                    .map(|v| (v.clone(), witness.get(v).map_or_else(|| "1".into(), ToString::to_string)))
                    .collect();
                Outcome::sat(model_line(entries), Some(Certificate::Skolem(certificate)))
            }
            SkolemResult::Unsat => Outcome::unsat(None),
            SkolemResult::Unknown(why) => Outcome::unknown(why),
        },
    }
}

/// [`solve`] on a worker thread; gives up with `unknown` after `timeout`.
pub fn solve_with_timeout(problem: &Problem, timeout: Option<Duration>) -> Outcome {
    let Some(limit) = timeout else { return solve(problem) };
    let (tx, rx) = mpsc::channel();
    let owned = problem.clone();
    std::thread::spawn(move || {
        let _ = tx.send(solve(&owned));
    });
    match rx.recv_timeout(limit) {
        Ok(outcome) => outcome,
        Err(_) => Outcome::unknown(format!("timeout after {} ms", limit.as_millis())),
    }
}

fn brute_domain(component: &Component, bound: i64) -> Vec<Value> {
    match component {
        Component::Finite(s) => (0..s.size() as Value).collect(),
        Component::Integers => (-bound..=bound).collect(),
        Component::Naturals => (0..=bound).collect(),
    }
}

/// Exhaustive reference answer. `bound` limits integer and universe ranges
/// that are otherwise infinite.
pub fn oracle(problem: &Problem, bound: Option<u64>) -> Outcome {
    let cap = capacity();
    let within = |b: u64| Some(format!("exhaustive within bound {b}"));
    match problem {
        Problem::Power { component: Component::Finite(s), index_card: card @ IndexCard::Finite(_), vars, formula } => {
            match s.brute_force_power_sat(*card, formula, cap) {
                Ok(BruteResult::Sat(point)) => {
                    let model = PowerModel::Finite(point);
                    Outcome::sat(power_model_line(vars, &model, 0), None)
                }
                Ok(BruteResult::Unsat) => Outcome::unsat(None),
                Err(e) => Outcome::unknown(e.to_string()),
            }
        }
        Problem::Power { .. } => Outcome::unknown("no exhaustive oracle for infinite carriers or index sets"),
        Problem::Qfbapa { maxc, sets, ints, formula } => {
            let b = bound.unwrap_or(6);
            let universes = match maxc {
                Maxc::Fixed(n) => *n..=*n,
                Maxc::Free => 0..=(b as usize).min(6),
            };
            let exact = matches!(maxc, Maxc::Fixed(_)) && ints.is_empty();
            match brute_force_qfbapa(formula, universes, -(b as i64)..=b as i64, cap) {
                Ok(BruteResult::Sat(m)) => {
                    let mut entries = vec![("maxc".to_string(), m.maxc.to_string())];
                    entries.extend(set_model_entries(&m, sets, ints));
                    Outcome::sat(model_line(entries), None)
                }
                Ok(BruteResult::Unsat) => Outcome::unsat(if exact { None } else { within(b) }),
                Err(e) => Outcome::unknown(e),
            }
        }
        Problem::Qfbapai { component, arrays, constants, free_sets, ints, .. } => {
            let o = component.oracle();
            let p = qfbapai_problem(problem, &*o).unwrap();
            let b = bound.unwrap_or(6);
            let domain = brute_domain(component, b as i64);
            let exact = matches!(component, Component::Finite(_)) && ints.is_empty();
            match brute_force_qfbapai(&p, &domain, -(b as i64)..=b as i64, cap) {
                Ok(BruteResult::Sat(w)) => Outcome::sat(witness_line(&w, arrays, constants, free_sets, ints), None),
                Ok(BruteResult::Unsat) => Outcome::unsat(if exact { None } else { within(b) }),
                Err(e) => Outcome::unknown(e),
            }
        }
        Problem::Cal { component, index_card, arrays, indices, values, formula } => {
            let Some(n) = index_card.as_finite() else { return Outcome::unknown("unbounded index set") };
            let b = bound.unwrap_or(3);
            let domain = brute_domain(component, b as i64);
            let result = match component {
                Component::Finite(s) => brute_force_cal(s, &domain, n, formula, cap),
                _ => brute_force_cal(&Integers, &domain, n, formula, cap),
            };
            let exact = matches!(component, Component::Finite(_));
            match result {
                Ok(BruteResult::Sat(st)) => Outcome::sat(cal_line(&st, arrays, indices, values, 0), None),
                Ok(BruteResult::Unsat) => Outcome::unsat(if exact { None } else { within(b) }),
                Err(e) => Outcome::unknown(e),
            }
        }
        Problem::Skolem { vars, formula } => {
            let b = bound.unwrap_or(64);
            match skolem_oracle(formula, b) {
                Ok(BruteResult::Sat(w)) => {
                    let entries =
                        vars.iter().map(|v| (v.clone(), w.get(v).copied().unwrap_or(1).to_string())).collect();
                    Outcome::sat(model_line(entries), None)
                }
                Ok(BruteResult::Unsat) => Outcome::unsat(within(b)),
                Err(e) => Outcome::unknown(e),
            }
        }
    }
}

/// The QFBAPAI script a CAL script translates to.
pub fn translate_cal(problem: &Problem) -> Result<Problem, String> {
    let Problem::Cal { component, index_card, formula, .. } = problem else {
        return Err("translate expects a CAL script".into());
    };
    let t = translate(formula, TranslateOptions::default())?;
    Ok(Problem::Qfbapai {
        component: component.clone(),
        index_card: *index_card,
        arrays: t.array_vars.clone(),
        constants: t.constants.clone(),
        free_sets: t.singletons.values().cloned().collect(),
        ints: Vec::new(),
        defined: t.defined.clone(),
        skeleton: t.skeleton.clone(),
    })
}

fn model_text(m: &Model) -> String {
    list(m.iter().map(|(k, v)| format!("({k} {v})")))
}

fn power_cert_text(logic: Logic, c: &PartitionCertificate) -> String {
    let lits = list(c.clause.literals.iter().map(|l| {
        let tag = if l.positive { "pos" } else { "neg" };
        format!("({tag} {})", l.atom)
    }));
    let parts = list(c.partition.iter().map(|p| format!("({})", list(p.iter().map(usize::to_string)))));
    let models = list(c.part_models.iter().map(|m| format!("(part {})", model_text(m))));
    format!(
        "(certificate {logic}\n (clause {lits})\n (partition {parts})\n (default {})\n {models})\n",
        model_text(&c.default_model)
    )
}

fn sets_text(m: &SetModel) -> String {
    let sets = list(m.sets.iter().map(|(k, s)| format!("({k} {})", set_text(s))));
    let ints = list(m.ints.iter().map(|(k, v)| format!("({k} {v})")));
    format!("(universe {})\n (sets {sets})\n (ints {ints})", m.maxc)
}

fn support_cert_text(logic: Logic, c: &SupportCertificate) -> String {
    let regions =
        list(c.regions.iter().map(|b| format!("({})", list(b.iter().map(|&x| if x { "1" } else { "0" }.to_string())))));
    format!(
        "(certificate {logic}\n (cover {})\n (regions {regions})\n (component {})\n {})\n",
        c.cover,
        model_text(&c.component_model),
        sets_text(&c.set_model)
    )
}

pub fn certificate_text(c: &Certificate) -> String {
    match c {
        Certificate::Power(p) => power_cert_text(Logic::Power, p),
        Certificate::Skolem(p) => power_cert_text(Logic::Skolem, p),
        Certificate::Qfbapa(m) => format!("(certificate {}\n {})\n", Logic::Qfbapa, sets_text(m)),
        Certificate::Qfbapai(s) => support_cert_text(Logic::Qfbapai, s),
        Certificate::Cal(s) => support_cert_text(Logic::Cal, s),
    }
}

fn bad<T>(x: &Sexp, message: impl Into<String>) -> Result<T, ParseError> {
    let Pos { line, col } = x.pos();
    Err(ParseError { line, col, message: message.into() })
}

fn items(x: &Sexp) -> Result<&[Sexp], ParseError> {
    match x {
        Sexp::List(xs, _) => Ok(xs),
        _ => bad(x, "expected a list"),
    }
}

fn sym(x: &Sexp) -> Result<&str, ParseError> {
    match x {
        Sexp::Sym(s, _) => Ok(s),
        _ => bad(x, "expected a symbol"),
    }
}

fn num<T: std::str::FromStr>(x: &Sexp) -> Result<T, ParseError> {
    sym(x)?.parse().or_else(|_| bad(x, "expected a numeral"))
}

/// A `(tag ...)` field; returns the arguments after the tag.
fn field<'a>(x: &'a Sexp, tag: &str) -> Result<&'a [Sexp], ParseError> {
    let xs = items(x)?;
    match xs.first() {
        Some(Sexp::Sym(s, _)) if s == tag => Ok(&xs[1..]),
        _ => bad(x, format!("expected ({tag} ...)")),
    }
}

fn parse_model(entries: &[Sexp]) -> Result<Model, ParseError> {
    let mut m = Model::new();
    for e in entries {
        let [k, v] = items(e)? else { return bad(e, "expected (NAME VALUE)") };
        m.insert(sym(k)?.to_string(), num(v)?);
    }
    Ok(m)
}

fn parse_index_list(x: &Sexp) -> Result<Vec<usize>, ParseError> {
    items(x)?.iter().map(num).collect()
}

fn parse_sets(fields: &[Sexp]) -> Result<SetModel, ParseError> {
    let [u, sets, ints] = fields else {
        return bad(fields.first().unwrap_or(&Sexp::sym("")), "expected universe, sets and ints");
    };
    let maxc = match field(u, "universe")? {
        [n] => num(n)?,
        _ => return bad(u, "expected (universe N)"),
    };
    let mut m = SetModel { maxc, ..SetModel::default() };
    for e in field(sets, "sets")? {
        let [k, v] = items(e)? else { return bad(e, "expected (NAME (ELEMENTS..))") };
        m.sets.insert(sym(k)?.to_string(), parse_index_list(v)?.into_iter().collect());
    }
    m.ints = parse_model(field(ints, "ints")?)?.into_iter().collect();
    Ok(m)
}

fn parse_support(fields: &[Sexp]) -> Result<SupportCertificate, ParseError> {
    let [cover, regions, component, rest @ ..] = fields else {
        return bad(fields.first().unwrap_or(&Sexp::sym("")), "incomplete support certificate");
    };
    let cover = match field(cover, "cover")? {
        [b] => match sym(b)? {
            "true" => true,
            "false" => false,
            _ => return bad(b, "expected true or false"),
        },
        _ => return bad(cover, "expected (cover BOOL)"),
    };
    let regions = field(regions, "regions")?
        .iter()
        .map(|r| {
            items(r)?
                .iter()
                .map(|b| match sym(b)? {
                    "0" => Ok(false),
                    "1" => Ok(true),
                    _ => bad(b, "region bits are 0 or 1"),
                })
                .collect()
        })
        .collect::<Result<_, _>>()?;
    let component_model = parse_model(field(component, "component")?)?;
    Ok(SupportCertificate { regions, cover, component_model, set_model: parse_sets(rest)? })
}

fn parse_partition_cert(
    fields: &[Sexp],
    component: &Component,
    vars: &BTreeSet<String>,
) -> Result<PartitionCertificate, ParseError> {
    let [clause, partition, default, parts @ ..] = fields else {
        return bad(fields.first().unwrap_or(&Sexp::sym("")), "incomplete partition certificate");
    };
    let mut literals = Vec::new();
    for l in field(clause, "clause")? {
        let [tag, atom] = items(l)? else { return bad(l, "expected (pos ATOM) or (neg ATOM)") };
        let positive = match sym(tag)? {
            "pos" => true,
            "neg" => false,
            _ => return bad(tag, "expected pos or neg"),
        };
        let Formula::Atom(a) = parse_component_formula(component, vars, atom)? else {
            return bad(atom, "expected an atom");
        };
        literals.push(Literal { atom: a, positive });
    }
    let partition = field(partition, "partition")?.iter().map(parse_index_list).collect::<Result<_, _>>()?;
    let default_model = parse_model(field(default, "default")?)?;
    let part_models = parts.iter().map(|p| parse_model(field(p, "part")?)).collect::<Result<_, _>>()?;
    Ok(PartitionCertificate { clause: Clause { literals }, partition, default_model, part_models })
}

/// Reads a certificate for `problem`.
pub fn parse_certificate(problem: &Problem, text: &str) -> Result<Certificate, ParseError> {
    let forms = read(text)?;
    let [form] = &forms[..] else {
        return Err(ParseError { line: 1, col: 1, message: "expected one (certificate ...) form".into() });
    };
    let fields = field(form, "certificate")?;
    let Some((logic, rest)) = fields.split_first() else { return bad(form, "missing logic") };
    let logic_name = sym(logic)?;
    if Logic::from_name(logic_name) != Some(problem.logic()) {
        return bad(logic, format!("certificate is for {logic_name}, script is {}", problem.logic()));
    }
    Ok(match problem {
        Problem::Power { component, formula, .. } => {
            Certificate::Power(parse_partition_cert(rest, component, &formula.free_vars())?)
        }
        Problem::Skolem { formula, .. } => {
            Certificate::Skolem(parse_partition_cert(rest, &Component::Naturals, &skolem_vars(formula))?)
        }
        Problem::Qfbapa { .. } => Certificate::Qfbapa(parse_sets(rest)?),
        Problem::Qfbapai { .. } => Certificate::Qfbapai(parse_support(rest)?),
        Problem::Cal { .. } => Certificate::Cal(parse_support(rest)?),
    })
}

fn check_set_model(problem: &Problem, m: &SetModel) -> Result<(), String> {
    let Problem::Qfbapa { maxc, formula, .. } = problem else { unreachable!() };
    if let Maxc::Fixed(n) = maxc {
        if m.maxc != *n {
            return Err(format!("universe {} differs from the declared {n}", m.maxc));
        }
    }
    if m.sets.values().flatten().any(|&e| e >= m.maxc) {
        return Err("set element outside the universe".into());
    }
    let mut full = m.clone();
    for v in set_vars(formula) {
        full.sets.entry(v).or_default();
    }
    if eval_formula(formula, &full) {
        Ok(())
    } else {
        Err("set model does not satisfy the formula".into())
    }
}

/// Validates `cert` against `problem` with the matching module checker.
pub fn check(problem: &Problem, cert: &Certificate) -> Result<(), String> {
    match (problem, cert) {
        (Problem::Power { component, index_card, formula, .. }, Certificate::Power(c)) => {
            let oracle = component.oracle();
            check_certificate(&PowerProblem::new(&*oracle, *index_card, formula.clone()), c)
        }
        (Problem::Skolem { formula, .. }, Certificate::Skolem(c)) => {
            let oracle = lia_oracle(true);
            check_certificate(&power_problem(formula, &oracle), c)
        }
        (Problem::Qfbapa { .. }, Certificate::Qfbapa(m)) => check_set_model(problem, m),
        (Problem::Qfbapai { component, .. }, Certificate::Qfbapai(c)) => {
            let oracle = component.oracle();
            check_certificate_qfbapai(&qfbapai_problem(problem, &*oracle).unwrap(), c)
        }
        (Problem::Cal { component, index_card, formula, .. }, Certificate::Cal(c)) => {
            let oracle = component.oracle();
            let t = translate(formula, TranslateOptions::default())?;
            check_certificate_qfbapai(&t.problem(&*oracle, *index_card), c)
        }
        _ => Err("certificate kind does not match the script's logic".into()),
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::syntax::parse_problem;

    const POWER: &str = "(set-logic POWER)\n(declare-structure (carrier 2) (rel P 1 (1)))\n\
                         (declare-index-card 2)\n(declare-const x Elem)\n\
                         (assert (and (not (P x)) (not (not (P x)))))\n(check-sat)\n";

    #[test]
    fn exit_codes() {
        assert_eq!(Verdict::Sat.exit_code(), 0);
        assert_eq!(Verdict::Unsat.exit_code(), 1);
        assert_eq!(Verdict::Unknown.exit_code(), 2);
        let p = parse_problem(POWER).unwrap();
        assert_eq!(solve(&p).verdict, Verdict::Unsat);
        let q = parse_problem(&POWER.replace("(not (not (P x)))", "true")).unwrap();
        let out = solve(&q);
        assert_eq!(out.verdict, Verdict::Sat);
        assert!(out.model.unwrap().starts_with("(model (x (vec"));
    }

    #[test]
    fn certificates_round_trip_and_check() {
        let scripts = [
            POWER.replace("(and (not (P x)) (not (not (P x))))", "(and (not (P x)) (not (= x x)))").replace(
                "(not (= x x))",
                "(or (P x) (not (P x)))",
            ),
            "(set-logic QFBAPA)(declare-const A Set)(declare-const B Set)(assert (and (subset A B) (< (card A) (card B))))"
                .to_string(),
            "(set-logic QFBAPAI)(declare-structure (carrier 2) (const one 1))(declare-index-card 3)(declare-array x)\
             (define-set S (lambda (x) (= x one)))(assert (= (card S) 2))"
                .to_string(),
            "(set-logic CAL)(declare-structure (carrier 2) (const one 1))(declare-index-card 2)(declare-array a)\
             (declare-const i Index)(assert (not (= a (store a i one))))"
                .to_string(),
            "(set-logic SKOLEM)(declare-const x Nat)(declare-const y Nat)(assert (and (| x y) (not (= x y))))"
                .to_string(),
        ];
        for s in &scripts {
            let p = parse_problem(s).unwrap();
            let out = solve(&p);
            assert_eq!(out.verdict, Verdict::Sat, "{s}");
            let cert = out.certificate.unwrap();
            let text = certificate_text(&cert);
            let back = parse_certificate(&p, &text).unwrap_or_else(|e| panic!("{e}\n{text}"));
            assert_eq!(back, cert);
            check(&p, &back).unwrap();
        }
    }

    #[test]
    fn translation_reparses() {
        let p = parse_problem(
            "(set-logic CAL)(declare-structure (carrier 2) (const one 1))(declare-index-card 2)(declare-array a)\
             (declare-const i Index)(declare-const v Elem)(assert (not (= (select (store a i v) i) v)))",
        )
        .unwrap();
        let q = translate_cal(&p).unwrap();
        let text = q.to_text();
        let again = parse_problem(&text).unwrap_or_else(|e| panic!("{e}\n{text}"));
        assert_eq!(again, q);
        assert_eq!(solve(&again).verdict, Verdict::Unsat);
    }

    #[test]
    fn oracle_agrees_on_examples() {
        let p = parse_problem(POWER).unwrap();
        assert_eq!(oracle(&p, None).verdict, Verdict::Unsat);
        let s = parse_problem("(set-logic SKOLEM)(declare-const x Nat)(assert (= x x))").unwrap();
        assert_eq!(oracle(&s, Some(1)).verdict, Verdict::Sat);
    }
}
