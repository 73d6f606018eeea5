//! Component-theory oracles.
//!
//! Every decision procedure over arrays or index sets talks to the element
//! theory only through [`ComponentOracle`]: a satisfiability check that may
//! give up, and a model checker that never does.

use std::collections::BTreeSet;
use std::fmt;

use crate::formula::{Atom, Formula, QFFormula, Signature, Term};
use crate::presburger::{lia_sat_formula, LIAProblem, LiaFormula, LiaResult, LinExpr};
use crate::structures::{capacity, BruteResult, FiniteStructure, Model, Value};

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum Decision {
    Sat(Model),
    Unsat,
    Unknown(String),
}

impl Decision {
    pub fn is_sat(&self) -> bool {
        matches!(self, Decision::Sat(_))
    }
}

pub trait ComponentOracle: Send + Sync {
    fn signature(&self) -> &Signature;

    /// Decides `f`; a SAT model assigns every free variable of `f`.
    fn decide(&self, f: &QFFormula) -> Decision;

    /// Whether `m` satisfies `f`. Missing variables or out-of-range values
    /// make the check fail.
    fn model_check(&self, f: &QFFormula, m: &Model) -> bool;

    /// A value every carrier contains, used to pad partial models.
    fn default_value(&self) -> Value {
        0
    }

    /// Whether `v` is an element of the carrier.
    fn in_carrier(&self, v: Value) -> bool;

    fn describe(&self) -> String;
}

/// Extends `m` with the default value for every name in `vars` it lacks.
pub fn complete_model(oracle: &dyn ComponentOracle, m: &Model, vars: &BTreeSet<String>) -> Model {
    let mut out = m.clone();
    for v in vars {
        out.entry(v.clone()).or_insert_with(|| oracle.default_value());
    }
    out
}

/// Oracle over an explicit finite structure, decided by exhaustive search.
#[derive(Debug, Clone)]
pub struct FiniteOracle {
    structure: FiniteStructure,
    cap: u64,
}

impl FiniteOracle {
    pub fn new(structure: FiniteStructure) -> Self {
        FiniteOracle { structure, cap: capacity() }
    }

    pub fn with_cap(structure: FiniteStructure, cap: u64) -> Self {
        FiniteOracle { structure, cap }
    }

    pub fn structure(&self) -> &FiniteStructure {
        &self.structure
    }
}

pub fn finite_oracle(s: FiniteStructure) -> FiniteOracle {
    FiniteOracle::new(s)
}

impl ComponentOracle for FiniteOracle {
    fn signature(&self) -> &Signature {
        self.structure.signature()
    }

    fn decide(&self, f: &QFFormula) -> Decision {
        match self.structure.search_sat(f, self.cap) {
            Ok(BruteResult::Sat(m)) => Decision::Sat(m),
            Ok(BruteResult::Unsat) => Decision::Unsat,
            Err(e) => Decision::Unknown(e.to_string()),
        }
    }

    fn model_check(&self, f: &QFFormula, m: &Model) -> bool {
        self.structure.holds(f, m).unwrap_or(false)
    }

    fn in_carrier(&self, v: Value) -> bool {
        v >= 0 && (v as usize) < self.structure.size()
    }

    fn describe(&self) -> String {
        format!("finite structure of size {}", self.structure.size())
    }
}

/// Linear integer arithmetic over `ℤ`, or over `ℕ` when `naturals` is set.
///
/// Terms are built from numerals, `+`, binary `-` and `*` with at least
/// one numeral operand; relations are `=`, `<=` and `<`.
#[derive(Debug, Clone)]
pub struct LiaOracle {
    naturals: bool,
    signature: Signature,
}

impl LiaOracle {
    pub fn new(naturals: bool) -> Self {
        let signature = Signature {
            integer_literals: true,
            ..Signature::new()
                .with_function("+", 2)
                .with_function("-", 2)
                .with_function("*", 2)
                .with_relation("<=", 2)
                .with_relation("<", 2)
        };
        LiaOracle { naturals, signature }
    }

    pub fn naturals(&self) -> bool {
        self.naturals
    }
}

pub fn lia_oracle(naturals: bool) -> LiaOracle {
    LiaOracle::new(naturals)
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct NonLinear(pub String);

impl fmt::Display for NonLinear {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "not a linear term: {}", self.0)
    }
}

fn linearize_term(t: &Term) -> Result<LinExpr, NonLinear> {
    match t {
        Term::Var(v) => Ok(LinExpr::var(v.clone())),
        Term::Const(c) => c.parse::<i64>().map(LinExpr::constant).map_err(|_| NonLinear(t.to_string())),
        Term::App(f, args) if args.len() == 2 => {
            let l = linearize_term(&args[0])?;
            let r = linearize_term(&args[1])?;
            match f.as_str() {
                "+" => Ok(l.plus(&r)),
                "-" => Ok(l.minus(&r)),
                "*" if l.coeffs.is_empty() => Ok(r.scale(l.constant)),
                "*" if r.coeffs.is_empty() => Ok(l.scale(r.constant)),
                _ => Err(NonLinear(t.to_string())),
            }
        }
        _ => Err(NonLinear(t.to_string())),
    }
}

fn linearize_atom(a: &Atom) -> Result<LiaFormula, NonLinear> {
    if a.args.len() != 2 {
        return Err(NonLinear(a.to_string()));
    }
    let l = linearize_term(&a.args[0])?;
    let r = linearize_term(&a.args[1])?;
    let atom = match a.rel.as_str() {
        "=" => LinExpr::equal(l, &r),
        "<=" => LinExpr::le(l, &r),
        "<" => LinExpr::le(l.add_const(1), &r),
        _ => return Err(NonLinear(a.to_string())),
    };
    Ok(Formula::Atom(atom))
}

/// Translates a formula over the LIA signature into linear atoms.
pub fn linearize(f: &QFFormula) -> Result<LiaFormula, NonLinear> {
    let mut err = None;
    let out = f.map_atoms(&mut |a| match linearize_atom(a) {
        Ok(g) => g,
        Err(e) => {
            err.get_or_insert(e);
            Formula::tt()
        }
    });
    match err {
        Some(e) => Err(e),
        None => Ok(out),
    }
}

fn eval_int(t: &Term, m: &Model) -> Option<i128> {
    match t {
        Term::Var(v) => m.get(v).map(|x| *x as i128),
        Term::Const(c) => c.parse::<i128>().ok(),
        Term::App(f, args) if args.len() == 2 => {
            let l = eval_int(&args[0], m)?;
            let r = eval_int(&args[1], m)?;
            match f.as_str() {
                "+" => l.checked_add(r),
                "-" => l.checked_sub(r),
                "*" => l.checked_mul(r),
                _ => None,
            }
        }
        _ => None,
    }
}

impl ComponentOracle for LiaOracle {
    fn signature(&self) -> &Signature {
        &self.signature
    }

    fn decide(&self, f: &QFFormula) -> Decision {
        let g = match linearize(f) {
            Ok(g) => g,
            Err(e) => return Decision::Unknown(e.to_string()),
        };
        let vars = f.free_vars();
        let mut base = LIAProblem::default();
        if self.naturals {
            base.nonneg = vars.clone();
        }
        match lia_sat_formula(&g, &base) {
            LiaResult::Sat(m) => Decision::Sat(complete_model(self, &m, &vars)),
            LiaResult::Unsat => Decision::Unsat,
            LiaResult::Unknown(why) => Decision::Unknown(why),
        }
    }

    fn model_check(&self, f: &QFFormula, m: &Model) -> bool {
        if f.free_vars().iter().any(|v| !m.get(v).is_some_and(|x| self.in_carrier(*x))) {
            return false;
        }
        f.eval_with(&mut |a: &Atom| {
            if a.args.len() != 2 {
                return Err(());
            }
            let l = eval_int(&a.args[0], m).ok_or(())?;
            let r = eval_int(&a.args[1], m).ok_or(())?;
            match a.rel.as_str() {
                "=" => Ok(l == r),
                "<=" => Ok(l <= r),
                "<" => Ok(l < r),
                _ => Err(()),
            }
        })
        .unwrap_or(false)
    }

    fn in_carrier(&self, v: Value) -> bool {
        !self.naturals || v >= 0
    }

    fn describe(&self) -> String {
        if self.naturals { "linear arithmetic over the naturals" } else { "linear arithmetic over the integers" }.into()
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn v(n: &str) -> Term {
        Term::var(n)
    }

    fn n(k: i64) -> Term {
        Term::cst(k.to_string())
    }

    fn rel(r: &str, a: Term, b: Term) -> QFFormula {
        Formula::atom(Atom::new(r, vec![a, b]))
    }

    fn chain2() -> FiniteStructure {
        FiniteStructure::new(2).with_relation("<=", 2, |t: &[usize]| t[0] <= t[1]).unwrap()
    }

    #[test]
    fn finite_decide_and_check() {
        let o = finite_oracle(chain2());
        let f = Formula::and([rel("<=", v("x"), v("y")), Formula::not(rel("<=", v("y"), v("x")))]);
        let Decision::Sat(m) = o.decide(&f) else { panic!() };
        assert!(o.model_check(&f, &m));
        assert_eq!(o.decide(&Formula::not(rel("=", v("x"), v("x")))), Decision::Unsat);
    }

    #[test]
    fn finite_capacity_is_unknown() {
        let o = FiniteOracle::with_cap(chain2(), 2);
        let f = Formula::and((0..6).map(|i| rel("<=", v(&format!("a{i}")), v(&format!("a{}", i + 1)))));
        let f = Formula::and([f, Formula::not(rel("=", v("a0"), v("a0")))]);
        assert!(matches!(o.decide(&f), Decision::Unknown(_)));
    }

    #[test]
    fn lia_examples() {
        let o = lia_oracle(false);
        let f = Formula::and([
            rel("=", Term::app("+", vec![v("x"), v("y")]), v("z")),
            Formula::not(rel("=", v("x"), v("z"))),
        ]);
        let Decision::Sat(m) = o.decide(&f) else { panic!() };
        assert!(o.model_check(&f, &m));
        assert_ne!(m["y"], 0);
        let g = Formula::and([rel("<=", v("x"), n(0)), rel("<=", n(1), v("x"))]);
        assert_eq!(o.decide(&g), Decision::Unsat);
    }

    #[test]
    fn naturals_mode() {
        let nat = lia_oracle(true);
        let f = rel("=", Term::app("+", vec![v("x"), n(1)]), n(0));
        assert_eq!(nat.decide(&f), Decision::Unsat);
        assert!(lia_oracle(false).decide(&f).is_sat());
        let m: Model = [("x".to_string(), -1)].into_iter().collect();
        assert!(!nat.model_check(&f, &m));
    }

    #[test]
    fn nonlinear_terms_are_unknown() {
        let o = lia_oracle(false);
        let f = rel("=", Term::app("*", vec![v("x"), v("x")]), n(4));
        assert!(matches!(o.decide(&f), Decision::Unknown(_)));
        let g = rel("<", Term::app("*", vec![n(2), v("x")]), n(3));
        let Decision::Sat(m) = o.decide(&g) else { panic!() };
        assert!(2 * m["x"] < 3);
    }

    #[test]
    fn oracles_agree_on_bounded_formulas() {
        // Bounds force models into {0,1}, where the two theories coincide.
        let fin = finite_oracle(chain2());
        let lia = lia_oracle(false);
        let bound = |x: &str| Formula::and([rel("<=", n(0), v(x)), rel("<=", v(x), n(1))]);
        let cases = [
            Formula::and([rel("<=", v("x"), v("y")), Formula::not(rel("=", v("x"), v("y")))]),
            Formula::and([Formula::not(rel("<=", v("x"), v("y"))), Formula::not(rel("<=", v("y"), v("x")))]),
            Formula::or([rel("=", v("x"), v("y")), Formula::not(rel("<=", v("x"), v("y")))]),
        ];
        for f in cases {
            let bounded = Formula::and([f.clone(), bound("x"), bound("y")]);
            assert_eq!(fin.decide(&f).is_sat(), lia.decide(&bounded).is_sat(), "{f}");
        }
    }
}
