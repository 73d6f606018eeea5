//! Signatures, terms and quantifier-free formulas.
//!
//! Formulas are generic over their atom type so that the same boolean
//! machinery (negation normal form, lazy DNF, size measure) serves the
//! first-order component formulas, linear integer atoms and QFBAPA atoms.
//!
//! # Size convention
//!
//! [`SymbolSize`] counts one unit per occurrence of a relation, function,
//! constant or variable name and one unit per connective. An n-ary
//! conjunction or disjunction with `n >= 1` children contributes `n - 1`
//! connectives (the binary reading); the empty conjunction `true` and empty
//! disjunction `false` count as one symbol each. A negation is one symbol.
//! Under this convention `|R(x)| = 2`.

use std::collections::BTreeSet;
use std::fmt;
use std::iter;
use std::rc::Rc;

/// Built-in equality relation, available in every signature.
pub const EQ: &str = "=";

/// A one-sorted first-order signature.
#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct Signature {
    pub constants: Vec<String>,
    pub functions: Vec<(String, usize)>,
    pub relations: Vec<(String, usize)>,
    /// When set, every integer numeral is an additional constant symbol.
    pub integer_literals: bool,
}

impl Signature {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn with_constant(mut self, name: impl Into<String>) -> Self {
        self.constants.push(name.into());
        self
    }

    pub fn with_function(mut self, name: impl Into<String>, arity: usize) -> Self {
        self.functions.push((name.into(), arity));
        self
    }

    pub fn with_relation(mut self, name: impl Into<String>, arity: usize) -> Self {
        self.relations.push((name.into(), arity));
        self
    }

    pub fn has_constant(&self, name: &str) -> bool {
        self.constants.iter().any(|c| c == name)
            || (self.integer_literals && name.parse::<i64>().is_ok())
    }

    pub fn function_arity(&self, name: &str) -> Option<usize> {
        self.functions.iter().find(|(f, _)| f == name).map(|(_, a)| *a)
    }

    pub fn relation_arity(&self, name: &str) -> Option<usize> {
        if name == EQ {
            return Some(2);
        }
        self.relations.iter().find(|(r, _)| r == name).map(|(_, a)| *a)
    }

    /// Checks that names are unique within each kind.
    pub fn validate(&self) -> Result<(), SignatureError> {
        let mut seen = BTreeSet::new();
        for c in &self.constants {
            if !seen.insert(c.as_str()) {
                return Err(SignatureError::Duplicate(c.clone()));
            }
        }
        let mut seen = BTreeSet::new();
        for (f, _) in &self.functions {
            if !seen.insert(f.as_str()) {
                return Err(SignatureError::Duplicate(f.clone()));
            }
        }
        let mut seen = BTreeSet::new();
        for (r, _) in &self.relations {
            if r == EQ || !seen.insert(r.as_str()) {
                return Err(SignatureError::Duplicate(r.clone()));
            }
        }
        Ok(())
    }

    /// Checks that every symbol in `f` is declared with the right arity.
    pub fn check_formula(&self, f: &QFFormula) -> Result<(), SignatureError> {
        let mut result = Ok(());
        f.for_each_atom(&mut |a: &Atom| {
            if result.is_err() {
                return;
            }
            result = self.check_atom(a);
        });
        result
    }

    pub fn check_atom(&self, a: &Atom) -> Result<(), SignatureError> {
        match self.relation_arity(&a.rel) {
            None => return Err(SignatureError::Unknown(a.rel.clone())),
            Some(n) if n != a.args.len() => {
                return Err(SignatureError::Arity {
                    symbol: a.rel.clone(),
                    expected: n,
                    found: a.args.len(),
                })
            }
            _ => {}
        }
        a.args.iter().try_for_each(|t| self.check_term(t))
    }

    pub fn check_term(&self, t: &Term) -> Result<(), SignatureError> {
        match t {
            Term::Var(_) => Ok(()),
            Term::Const(c) if self.has_constant(c) => Ok(()),
            Term::Const(c) => Err(SignatureError::Unknown(c.clone())),
            Term::App(f, args) => match self.function_arity(f) {
                None => Err(SignatureError::Unknown(f.clone())),
                Some(n) if n != args.len() => Err(SignatureError::Arity {
                    symbol: f.clone(),
                    expected: n,
                    found: args.len(),
                }),
                Some(_) => args.iter().try_for_each(|a| self.check_term(a)),
            },
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
pub enum SignatureError {
    #[error("symbol `{0}` declared twice")]
    Duplicate(String),
    #[error("unknown symbol `{0}`")]
    Unknown(String),
    #[error("`{symbol}` expects {expected} arguments, found {found}")]
    Arity {
        symbol: String,
        expected: usize,
        found: usize,
    },
}

#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum Term {
    Var(String),
    Const(String),
    App(String, Vec<Term>),
}

impl Term {
    pub fn var(name: impl Into<String>) -> Self {
        Term::Var(name.into())
    }

    pub fn cst(name: impl Into<String>) -> Self {
        Term::Const(name.into())
    }

    pub fn app(f: impl Into<String>, args: Vec<Term>) -> Self {
        Term::App(f.into(), args)
    }

    pub fn collect_vars(&self, out: &mut BTreeSet<String>) {
        match self {
            Term::Var(v) => {
                out.insert(v.clone());
            }
            Term::Const(_) => {}
            Term::App(_, args) => args.iter().for_each(|a| a.collect_vars(out)),
        }
    }

    /// Replaces variables according to `f`; variables mapped to `None` stay.
    pub fn rename(&self, f: &dyn Fn(&str) -> Option<Term>) -> Term {
        match self {
            Term::Var(v) => f(v).unwrap_or_else(|| self.clone()),
            Term::Const(_) => self.clone(),
            Term::App(g, args) => Term::App(g.clone(), args.iter().map(|a| a.rename(f)).collect()),
        }
    }
}

impl fmt::Display for Term {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Term::Var(v) | Term::Const(v) => write!(f, "{v}"),
            Term::App(g, args) => {
                write!(f, "({g}")?;
                for a in args {
                    write!(f, " {a}")?;
                }
                write!(f, ")")
            }
        }
    }
}

/// A relation applied to terms.
#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct Atom {
    pub rel: String,
    pub args: Vec<Term>,
}

impl Atom {
    pub fn new(rel: impl Into<String>, args: Vec<Term>) -> Self {
        Atom { rel: rel.into(), args }
    }

    pub fn eq(l: Term, r: Term) -> Self {
        Atom::new(EQ, vec![l, r])
    }

    pub fn rename(&self, f: &dyn Fn(&str) -> Option<Term>) -> Atom {
        Atom { rel: self.rel.clone(), args: self.args.iter().map(|t| t.rename(f)).collect() }
    }
}

impl fmt::Display for Atom {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "({}", self.rel)?;
        for a in &self.args {
            write!(f, " {a}")?;
        }
        write!(f, ")")
    }
}

/// A quantifier-free formula over atoms of type `A`.
///
/// `And(vec![])` is `true` and `Or(vec![])` is `false`. The smart
/// constructors [`Formula::and`] and [`Formula::or`] flatten nested
/// connectives and sort children into a canonical order.
#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum Formula<A> {
    Atom(A),
    Not(Box<Formula<A>>),
    And(Vec<Formula<A>>),
    Or(Vec<Formula<A>>),
}

pub type QFFormula = Formula<Atom>;

impl<A: Clone + Ord> Formula<A> {
    pub fn atom(a: A) -> Self {
        Formula::Atom(a)
    }

    pub fn tt() -> Self {
        Formula::And(vec![])
    }

    pub fn ff() -> Self {
        Formula::Or(vec![])
    }

    #[allow(clippy::should_implement_trait)]
    pub fn not(f: Formula<A>) -> Self {
        Formula::Not(Box::new(f))
    }

    pub fn and(children: impl IntoIterator<Item = Formula<A>>) -> Self {
        let mut flat = Vec::new();
        for c in children {
            match c {
                Formula::And(grand) => flat.extend(grand),
                other => flat.push(other),
            }
        }
        flat.sort();
        flat.dedup();
        if flat.len() == 1 {
            flat.pop().unwrap()
        } else {
            Formula::And(flat)
        }
    }

    pub fn or(children: impl IntoIterator<Item = Formula<A>>) -> Self {
        let mut flat = Vec::new();
        for c in children {
            match c {
                Formula::Or(grand) => flat.extend(grand),
                other => flat.push(other),
            }
        }
        flat.sort();
        flat.dedup();
        if flat.len() == 1 {
            flat.pop().unwrap()
        } else {
            Formula::Or(flat)
        }
    }

    pub fn for_each_atom(&self, visit: &mut dyn FnMut(&A)) {
        match self {
            Formula::Atom(a) => visit(a),
            Formula::Not(g) => g.for_each_atom(visit),
            Formula::And(cs) | Formula::Or(cs) => cs.iter().for_each(|c| c.for_each_atom(visit)),
        }
    }

    /// Rebuilds the formula with every atom replaced by a formula.
    pub fn map_atoms<B: Clone + Ord>(&self, f: &mut dyn FnMut(&A) -> Formula<B>) -> Formula<B> {
        match self {
            Formula::Atom(a) => f(a),
            Formula::Not(g) => Formula::Not(Box::new(g.map_atoms(f))),
            Formula::And(cs) => Formula::And(cs.iter().map(|c| c.map_atoms(f)).collect()),
            Formula::Or(cs) => Formula::Or(cs.iter().map(|c| c.map_atoms(f)).collect()),
        }
    }

    /// Evaluates the boolean structure given a truth value for each atom.
    pub fn eval_with<E>(&self, atom: &mut dyn FnMut(&A) -> Result<bool, E>) -> Result<bool, E> {
        Ok(match self {
            Formula::Atom(a) => atom(a)?,
            Formula::Not(g) => !g.eval_with(atom)?,
            Formula::And(cs) => {
                for c in cs {
                    if !c.eval_with(atom)? {
                        return Ok(false);
                    }
                }
                true
            }
            Formula::Or(cs) => {
                for c in cs {
                    if c.eval_with(atom)? {
                        return Ok(true);
                    }
                }
                false
            }
        })
    }

    pub fn atoms(&self) -> Vec<A> {
        let mut out = Vec::new();
        self.for_each_atom(&mut |a| out.push(a.clone()));
        out
    }
}

impl QFFormula {
    pub fn free_vars(&self) -> BTreeSet<String> {
        let mut out = BTreeSet::new();
        self.for_each_atom(&mut |a: &Atom| a.args.iter().for_each(|t| t.collect_vars(&mut out)));
        out
    }

    pub fn rename(&self, f: &dyn Fn(&str) -> Option<Term>) -> QFFormula {
        self.map_atoms(&mut |a: &Atom| Formula::Atom(a.rename(f)))
    }
}

impl<A: fmt::Display> fmt::Display for Formula<A> {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Formula::Atom(a) => write!(f, "{a}"),
            Formula::Not(g) => write!(f, "(not {g})"),
            Formula::And(cs) if cs.is_empty() => write!(f, "true"),
            Formula::Or(cs) if cs.is_empty() => write!(f, "false"),
            Formula::And(cs) | Formula::Or(cs) => {
                let op = if matches!(self, Formula::And(_)) { "and" } else { "or" };
                write!(f, "({op}")?;
                for c in cs {
                    write!(f, " {c}")?;
                }
                write!(f, ")")
            }
        }
    }
}

/// An atom together with its polarity.
#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct Literal<A> {
    pub atom: A,
    pub positive: bool,
}

impl<A: Clone + Ord> Literal<A> {
    pub fn pos(atom: A) -> Self {
        Literal { atom, positive: true }
    }

    pub fn neg(atom: A) -> Self {
        Literal { atom, positive: false }
    }

    pub fn to_formula(&self) -> Formula<A> {
        if self.positive {
            Formula::Atom(self.atom.clone())
        } else {
            Formula::not(Formula::Atom(self.atom.clone()))
        }
    }

    pub fn negated(&self) -> Self {
        Literal { atom: self.atom.clone(), positive: !self.positive }
    }
}

/// A conjunction of literals, kept sorted and free of duplicates.
#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct Clause<A> {
    pub literals: Vec<Literal<A>>,
}

impl<A: Clone + Ord> Clause<A> {
    pub fn new(mut literals: Vec<Literal<A>>) -> Self {
        literals.sort();
        literals.dedup();
        Clause { literals }
    }

    pub fn positives(&self) -> impl Iterator<Item = &Literal<A>> {
        self.literals.iter().filter(|l| l.positive)
    }

    pub fn negatives(&self) -> impl Iterator<Item = &Literal<A>> {
        self.literals.iter().filter(|l| !l.positive)
    }

    pub fn to_formula(&self) -> Formula<A> {
        Formula::And(self.literals.iter().map(Literal::to_formula).collect())
    }
}

/// Pushes negations down to the atoms.
pub fn to_nnf<A: Clone + Ord>(f: &Formula<A>) -> Formula<A> {
    nnf(f, true)
}

fn nnf<A: Clone + Ord>(f: &Formula<A>, positive: bool) -> Formula<A> {
    match (f, positive) {
        (Formula::Atom(_), true) => f.clone(),
        (Formula::Atom(_), false) => Formula::not(f.clone()),
        (Formula::Not(g), p) => nnf(g, !p),
        (Formula::And(cs), true) | (Formula::Or(cs), false) => {
            Formula::and(cs.iter().map(|c| nnf(c, positive)))
        }
        (Formula::Or(cs), true) | (Formula::And(cs), false) => {
            Formula::or(cs.iter().map(|c| nnf(c, positive)))
        }
    }
}

enum Nnf<A> {
    Lit(Literal<A>),
    And(Vec<Rc<Nnf<A>>>),
    Or(Vec<Rc<Nnf<A>>>),
}

fn nnf_tree<A: Clone + Ord>(f: &Formula<A>, positive: bool) -> Rc<Nnf<A>> {
    Rc::new(match (f, positive) {
        (Formula::Atom(a), p) => Nnf::Lit(Literal { atom: a.clone(), positive: p }),
        (Formula::Not(g), p) => return nnf_tree(g, !p),
        (Formula::And(cs), true) | (Formula::Or(cs), false) => {
            Nnf::And(cs.iter().map(|c| nnf_tree(c, positive)).collect())
        }
        (Formula::Or(cs), true) | (Formula::And(cs), false) => {
            Nnf::Or(cs.iter().map(|c| nnf_tree(c, positive)).collect())
        }
    })
}

type ClauseIter<A> = Box<dyn Iterator<Item = Vec<Literal<A>>>>;

fn clauses_of<A: Clone + Ord + 'static>(node: Rc<Nnf<A>>) -> ClauseIter<A> {
    match &*node {
        Nnf::Lit(l) => Box::new(iter::once(vec![l.clone()])),
        Nnf::Or(children) => {
            let children = children.clone();
            Box::new((0..children.len()).flat_map(move |i| clauses_of(children[i].clone())))
        }
        Nnf::And(children) => {
            let mut acc: ClauseIter<A> = Box::new(iter::once(Vec::new()));
            for child in children.iter().cloned() {
                acc = Box::new(acc.flat_map(move |prefix| {
                    clauses_of(child.clone()).map(move |mut tail| {
                        let mut c = prefix.clone();
                        c.append(&mut tail);
                        c
                    })
                }));
            }
            acc
        }
    }
}

/// Lazily enumerates the disjuncts of the disjunctive normal form of `f`.
///
/// Clauses are produced one at a time by distributing conjunctions over
/// disjunctions on demand; the full DNF is never materialized.
pub fn to_dnf<A: Clone + Ord + 'static>(f: &Formula<A>) -> impl Iterator<Item = Clause<A>> {
    clauses_of(nnf_tree(f, true)).map(Clause::new)
}

/// Size measure used by the DNF and translation size checks.
pub trait SymbolSize {
    fn symbol_size(&self) -> usize;
}

impl SymbolSize for Term {
    fn symbol_size(&self) -> usize {
        match self {
            Term::Var(_) | Term::Const(_) => 1,
            Term::App(_, args) => 1 + args.iter().map(Term::symbol_size).sum::<usize>(),
        }
    }
}

impl SymbolSize for Atom {
    fn symbol_size(&self) -> usize {
        1 + self.args.iter().map(Term::symbol_size).sum::<usize>()
    }
}

impl<A: SymbolSize> SymbolSize for Formula<A> {
    fn symbol_size(&self) -> usize {
        match self {
            Formula::Atom(a) => a.symbol_size(),
            Formula::Not(g) => 1 + g.symbol_size(),
            Formula::And(cs) | Formula::Or(cs) if cs.is_empty() => 1,
            Formula::And(cs) | Formula::Or(cs) => {
                cs.len() - 1 + cs.iter().map(SymbolSize::symbol_size).sum::<usize>()
            }
        }
    }
}

impl<A: SymbolSize> SymbolSize for Literal<A> {
    fn symbol_size(&self) -> usize {
        self.atom.symbol_size() + usize::from(!self.positive)
    }
}

impl<A: SymbolSize> SymbolSize for Clause<A> {
    fn symbol_size(&self) -> usize {
        if self.literals.is_empty() {
            return 1;
        }
        self.literals.len() - 1 + self.literals.iter().map(SymbolSize::symbol_size).sum::<usize>()
    }
}

pub fn symbol_size<T: SymbolSize>(x: &T) -> usize {
    x.symbol_size()
}

#[cfg(test)]
mod tests {
    use super::*;

    fn p(r: &str, v: &str) -> QFFormula {
        Formula::Atom(Atom::new(r, vec![Term::var(v)]))
    }

    #[test]
    fn de_morgan_and() {
        let f = Formula::not(Formula::and([p("A", "x"), p("B", "x")]));
        assert_eq!(to_nnf(&f), Formula::or([Formula::not(p("A", "x")), Formula::not(p("B", "x"))]));
    }

    #[test]
    fn double_negation() {
        let f = Formula::not(Formula::not(p("A", "x")));
        assert_eq!(to_nnf(&f), p("A", "x"));
    }

    #[test]
    fn de_morgan_nested_or() {
        let f = Formula::or([p("A", "x"), Formula::not(Formula::or([p("B", "x"), p("C", "x")]))]);
        let expected = Formula::or([
            p("A", "x"),
            Formula::and([Formula::not(p("B", "x")), Formula::not(p("C", "x"))]),
        ]);
        assert_eq!(to_nnf(&f), expected);
    }

    #[test]
    fn dnf_distributes() {
        let f = Formula::and([p("R", "x"), Formula::or([p("S", "y"), Formula::not(p("T", "z"))])]);
        let clauses: Vec<_> = to_dnf(&f).collect();
        let lit = |r: &str, v: &str, pos| Literal {
            atom: Atom::new(r, vec![Term::var(v)]),
            positive: pos,
        };
        assert_eq!(
            clauses,
            vec![
                Clause::new(vec![lit("R", "x", true), lit("S", "y", true)]),
                Clause::new(vec![lit("R", "x", true), lit("T", "z", false)]),
            ]
        );
    }

    #[test]
    fn dnf_of_atom_is_itself() {
        let clauses: Vec<_> = to_dnf(&p("R", "x")).collect();
        assert_eq!(clauses.len(), 1);
        assert_eq!(clauses[0].literals.len(), 1);
    }

    #[test]
    fn dnf_of_false_and_true() {
        assert_eq!(to_dnf(&QFFormula::ff()).count(), 0);
        let t: Vec<_> = to_dnf(&QFFormula::tt()).collect();
        assert_eq!(t, vec![Clause::new(vec![])]);
    }

    #[test]
    fn dnf_is_lazy() {
        // 2^40 clauses: only the first few may ever be built.
        let f = Formula::and((0..40).map(|i| {
            Formula::or([p("A", &format!("x{i}")), p("B", &format!("x{i}"))])
        }));
        assert_eq!(to_dnf(&f).take(3).count(), 3);
    }

    #[test]
    fn size_convention() {
        assert_eq!(symbol_size(&p("R", "x")), 2);
        assert_eq!(symbol_size(&Formula::not(p("R", "x"))), 3);
        let a = p("A", "x");
        let ab = Formula::And(vec![a.clone(), p("B", "y")]);
        assert!(symbol_size(&ab) > symbol_size(&a));
        assert_eq!(symbol_size(&ab), 5);
        let t = Term::app("f", vec![Term::var("x"), Term::cst("c")]);
        assert_eq!(symbol_size(&Atom::eq(t, Term::var("y"))), 5);
    }

    #[test]
    fn signature_checks() {
        let sig = Signature::new().with_relation("<=", 2).with_function("s", 1);
        let ok = Formula::Atom(Atom::new("<=", vec![Term::app("s", vec![Term::var("x")]), Term::var("y")]));
        assert!(sig.check_formula(&ok).is_ok());
        let bad = Formula::Atom(Atom::new("<=", vec![Term::var("x")]));
        assert!(matches!(sig.check_formula(&bad), Err(SignatureError::Arity { .. })));
        let unknown = Formula::Atom(Atom::new("R", vec![]));
        assert!(matches!(sig.check_formula(&unknown), Err(SignatureError::Unknown(_))));
        let dup = Signature::new().with_relation("R", 1).with_relation("R", 2);
        assert!(dup.validate().is_err());
    }
}
