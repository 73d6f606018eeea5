//! Combinatory array logic with cardinality constraints.
//!
//! Arrays are functions from an uninterpreted non-empty index set into the
//! carrier of a component theory. Terms are built from array variables,
//! constant arrays, `store`, reads `a[i]` and pointwise function
//! applications. The translation abstracts reads and stores into fresh
//! constants and arrays and produces a [`QFBAPAIProblem`]; index variables
//! become singleton sets.

use std::collections::{BTreeMap, BTreeSet};
use std::fmt;

use crate::formula::{to_nnf, Atom, Formula, QFFormula, SymbolSize, Term};
use crate::oracle::ComponentOracle;
use crate::qfbapa::{BapaAtom, PATerm, QFBAPAFormula, SetExpr};
use crate::qfbapai::{
    solve_qfbapai_with, ArrayWitness, QFBAPAIProblem, QfbapaiOptions, QfbapaiResult, SupportCertificate,
};
use crate::structures::{BruteResult, FiniteStructure, IndexCard, Value};

/// Constant of the reported size bound `c·|ψ|²·log₂(|ψ|+2)`.
pub const SIZE_CONSTANT: f64 = 64.0;

#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum ArrayTerm {
    Var(String),
    /// The constant array of a component constant.
    Const(String),
    Store(Box<ArrayTerm>, String, Box<ValueTerm>),
    /// Pointwise application of a component function.
    App(String, Vec<ArrayTerm>),
}

#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum ValueTerm {
    Read(Box<ArrayTerm>, String),
    Var(String),
    Const(String),
    App(String, Vec<ValueTerm>),
}

impl ArrayTerm {
    pub fn var(n: impl Into<String>) -> Self {
        ArrayTerm::Var(n.into())
    }

    pub fn store(a: ArrayTerm, i: impl Into<String>, v: ValueTerm) -> Self {
        ArrayTerm::Store(Box::new(a), i.into(), Box::new(v))
    }

    pub fn read(self, i: impl Into<String>) -> ValueTerm {
        ValueTerm::Read(Box::new(self), i.into())
    }

    fn store_depth(&self) -> usize {
        match self {
            ArrayTerm::Var(_) | ArrayTerm::Const(_) => 0,
            ArrayTerm::Store(a, _, v) => 1 + a.store_depth().max(v.store_depth()),
            ArrayTerm::App(_, args) => args.iter().map(ArrayTerm::store_depth).max().unwrap_or(0),
        }
    }

    fn collect(&self, vars: &mut CalVars) {
        match self {
            ArrayTerm::Var(a) => {
                vars.arrays.insert(a.clone());
            }
            ArrayTerm::Const(_) => {}
            ArrayTerm::Store(a, i, v) => {
                a.collect(vars);
                vars.indices.insert(i.clone());
                v.collect(vars);
            }
            ArrayTerm::App(_, args) => args.iter().for_each(|a| a.collect(vars)),
        }
    }
}

impl ValueTerm {
    pub fn var(n: impl Into<String>) -> Self {
        ValueTerm::Var(n.into())
    }

    pub fn cst(n: impl Into<String>) -> Self {
        ValueTerm::Const(n.into())
    }

    fn store_depth(&self) -> usize {
        match self {
            ValueTerm::Read(a, _) => a.store_depth(),
            ValueTerm::Var(_) | ValueTerm::Const(_) => 0,
            ValueTerm::App(_, args) => args.iter().map(ValueTerm::store_depth).max().unwrap_or(0),
        }
    }

    fn read_count(&self) -> usize {
        match self {
            ValueTerm::Read(a, _) => 1 + a.read_count(),
            ValueTerm::Var(_) | ValueTerm::Const(_) => 0,
            ValueTerm::App(_, args) => args.iter().map(ValueTerm::read_count).sum(),
        }
    }

    fn collect(&self, vars: &mut CalVars) {
        match self {
            ValueTerm::Read(a, i) => {
                a.collect(vars);
                vars.indices.insert(i.clone());
            }
            ValueTerm::Var(v) => {
                vars.values.insert(v.clone());
            }
            ValueTerm::Const(_) => {}
            ValueTerm::App(_, args) => args.iter().for_each(|a| a.collect(vars)),
        }
    }
}

impl ArrayTerm {
    fn read_count(&self) -> usize {
        match self {
            ArrayTerm::Var(_) | ArrayTerm::Const(_) => 0,
            ArrayTerm::Store(a, _, v) => a.read_count() + v.read_count(),
            ArrayTerm::App(_, args) => args.iter().map(ArrayTerm::read_count).sum(),
        }
    }
}

impl fmt::Display for ArrayTerm {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            ArrayTerm::Var(a) => write!(f, "{a}"),
            ArrayTerm::Const(c) => write!(f, "(const {c})"),
            ArrayTerm::Store(a, i, v) => write!(f, "(store {a} {i} {v})"),
            ArrayTerm::App(g, args) => write_app(f, g, args),
        }
    }
}

impl fmt::Display for ValueTerm {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            ValueTerm::Read(a, i) => write!(f, "(select {a} {i})"),
            ValueTerm::Var(v) | ValueTerm::Const(v) => write!(f, "{v}"),
            ValueTerm::App(g, args) => write_app(f, g, args),
        }
    }
}

fn write_app<T: fmt::Display>(f: &mut fmt::Formatter<'_>, head: &str, args: &[T]) -> fmt::Result {
    write!(f, "({head}")?;
    for a in args {
        write!(f, " {a}")?;
    }
    write!(f, ")")
}

impl SymbolSize for ArrayTerm {
    fn symbol_size(&self) -> usize {
        match self {
            ArrayTerm::Var(_) | ArrayTerm::Const(_) => 1,
            ArrayTerm::Store(a, _, v) => 2 + a.symbol_size() + v.symbol_size(),
            ArrayTerm::App(_, args) => 1 + args.iter().map(SymbolSize::symbol_size).sum::<usize>(),
        }
    }
}

impl SymbolSize for ValueTerm {
    fn symbol_size(&self) -> usize {
        match self {
            ValueTerm::Read(a, _) => 2 + a.symbol_size(),
            ValueTerm::Var(_) | ValueTerm::Const(_) => 1,
            ValueTerm::App(_, args) => 1 + args.iter().map(SymbolSize::symbol_size).sum::<usize>(),
        }
    }
}

/// A relation applied pointwise to array terms.
#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct PointAtom {
    pub rel: String,
    pub args: Vec<ArrayTerm>,
}

impl PointAtom {
    pub fn new(rel: impl Into<String>, args: Vec<ArrayTerm>) -> Self {
        PointAtom { rel: rel.into(), args }
    }
}

impl fmt::Display for PointAtom {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write_app(f, &self.rel, &self.args)
    }
}

impl SymbolSize for PointAtom {
    fn symbol_size(&self) -> usize {
        1 + self.args.iter().map(SymbolSize::symbol_size).sum::<usize>()
    }
}

/// Presburger terms over cardinalities of index sets.
#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum CardTerm {
    Const(i64),
    /// `|I|`
    Size,
    Plus(Box<CardTerm>, Box<CardTerm>),
    Scale(i64, Box<CardTerm>),
    /// `|{l : ψ(l)}|`
    Card(Formula<PointAtom>),
}

impl CardTerm {
    pub fn card(f: Formula<PointAtom>) -> Self {
        CardTerm::Card(f)
    }

    pub fn plus(a: CardTerm, b: CardTerm) -> Self {
        CardTerm::Plus(Box::new(a), Box::new(b))
    }

    fn collect(&self, vars: &mut CalVars) {
        match self {
            CardTerm::Const(_) | CardTerm::Size => {}
            CardTerm::Plus(a, b) => {
                a.collect(vars);
                b.collect(vars);
            }
            CardTerm::Scale(_, t) => t.collect(vars),
            CardTerm::Card(f) => f.for_each_atom(&mut |a| a.args.iter().for_each(|t| t.collect(vars))),
        }
    }
}

impl fmt::Display for CardTerm {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            CardTerm::Const(c) => write!(f, "{c}"),
            CardTerm::Size => write!(f, "maxc"),
            CardTerm::Plus(a, b) => write!(f, "(+ {a} {b})"),
            CardTerm::Scale(k, t) => write!(f, "(* {k} {t})"),
            CardTerm::Card(p) => write!(f, "(card {p})"),
        }
    }
}

impl SymbolSize for CardTerm {
    fn symbol_size(&self) -> usize {
        match self {
            CardTerm::Const(_) | CardTerm::Size => 1,
            CardTerm::Plus(a, b) => 1 + a.symbol_size() + b.symbol_size(),
            CardTerm::Scale(_, t) => 2 + t.symbol_size(),
            CardTerm::Card(p) => 1 + p.symbol_size(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum CalAtom {
    /// A component relation on values.
    Value(String, Vec<ValueTerm>),
    /// A component relation holding at every index.
    Array(PointAtom),
    IndexEq(String, String),
    CardEq(CardTerm, CardTerm),
    CardLe(CardTerm, CardTerm),
}

impl fmt::Display for CalAtom {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            CalAtom::Value(r, args) => write_app(f, r, args),
            CalAtom::Array(p) => write!(f, "{p}"),
            CalAtom::IndexEq(i, j) => write!(f, "(= {i} {j})"),
            CalAtom::CardEq(a, b) => write!(f, "(= {a} {b})"),
            CalAtom::CardLe(a, b) => write!(f, "(<= {a} {b})"),
        }
    }
}

impl SymbolSize for CalAtom {
    fn symbol_size(&self) -> usize {
        match self {
            CalAtom::Value(_, args) => 1 + args.iter().map(SymbolSize::symbol_size).sum::<usize>(),
            CalAtom::Array(p) => p.symbol_size(),
            CalAtom::IndexEq(_, _) => 3,
            CalAtom::CardEq(a, b) | CalAtom::CardLe(a, b) => 1 + a.symbol_size() + b.symbol_size(),
        }
    }
}

pub type CALFormula = Formula<CalAtom>;

/// Free variables of a CAL formula by sort.
#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct CalVars {
    pub arrays: BTreeSet<String>,
    pub indices: BTreeSet<String>,
    pub values: BTreeSet<String>,
}

impl CalVars {
    pub fn of(f: &CALFormula) -> CalVars {
        let mut vars = CalVars::default();
        f.for_each_atom(&mut |a| match a {
            CalAtom::Value(_, args) => args.iter().for_each(|t| t.collect(&mut vars)),
            CalAtom::Array(p) => p.args.iter().for_each(|t| t.collect(&mut vars)),
            CalAtom::IndexEq(i, j) => {
                vars.indices.insert(i.clone());
                vars.indices.insert(j.clone());
            }
            CalAtom::CardEq(a, b) | CalAtom::CardLe(a, b) => {
                a.collect(&mut vars);
                b.collect(&mut vars);
            }
        });
        vars
    }

    fn clash(&self) -> Option<&String> {
        self.arrays
            .intersection(&self.indices)
            .chain(self.arrays.intersection(&self.values))
            .chain(self.indices.intersection(&self.values))
            .next()
    }
}

/// Number of stores and reads occurring in `f`.
pub fn store_read_counts(f: &CALFormula) -> (usize, usize) {
    fn stores(t: &ArrayTerm) -> usize {
        match t {
            ArrayTerm::Var(_) | ArrayTerm::Const(_) => 0,
            ArrayTerm::Store(a, _, v) => 1 + stores(a) + vstores(v),
            ArrayTerm::App(_, args) => args.iter().map(stores).sum(),
        }
    }
    fn vstores(t: &ValueTerm) -> usize {
        match t {
            ValueTerm::Read(a, _) => stores(a),
            ValueTerm::Var(_) | ValueTerm::Const(_) => 0,
            ValueTerm::App(_, args) => args.iter().map(vstores).sum(),
        }
    }
    let (mut s, mut r) = (0, 0);
    let card = |t: &CardTerm, s: &mut usize, r: &mut usize| {
        let mut stack = vec![t];
        while let Some(t) = stack.pop() {
            match t {
                CardTerm::Plus(a, b) => stack.extend([&**a, &**b]),
                CardTerm::Scale(_, t) => stack.push(t),
                CardTerm::Card(p) => p.for_each_atom(&mut |a| {
                    for t in &a.args {
                        *s += stores(t);
                        *r += t.read_count();
                    }
                }),
                _ => {}
            }
        }
    };
    f.for_each_atom(&mut |a| match a {
        CalAtom::Value(_, args) => {
            for t in args {
                s += vstores(t);
                r += t.read_count();
            }
        }
        CalAtom::Array(p) => {
            for t in &p.args {
                s += stores(t);
                r += t.read_count();
            }
        }
        CalAtom::IndexEq(..) => {}
        CalAtom::CardEq(a, b) | CalAtom::CardLe(a, b) => {
            card(a, &mut s, &mut r);
            card(b, &mut s, &mut r);
        }
    });
    (s, r)
}

/// Output of [`translate`] before it is bound to a component oracle.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct CalTranslation {
    pub skeleton: QFBAPAFormula,
    pub defined: Vec<(String, QFFormula)>,
    pub array_vars: Vec<String>,
    pub constants: Vec<String>,
    /// Index variable to its singleton set.
    pub singletons: BTreeMap<String, String>,
    /// Fresh constant per abstracted read, keyed by (array, index).
    pub read_abstractions: Vec<((String, String), String)>,
    /// Fresh array per abstracted store.
    pub store_abstractions: Vec<String>,
    /// Rounds of store elimination needed (innermost first).
    pub rounds: usize,
}

impl CalTranslation {
    pub fn problem<'a>(&self, oracle: &'a dyn ComponentOracle, index_card: IndexCard) -> QFBAPAIProblem<'a> {
        QFBAPAIProblem {
            oracle,
            index_card,
            skeleton: self.skeleton.clone(),
            defined: self.defined.clone(),
            array_vars: self.array_vars.clone(),
            constants: self.constants.clone(),
        }
    }

    /// Output size: skeleton plus one symbol per set name and its definition.
    pub fn size(&self) -> usize {
        self.skeleton.symbol_size() + self.defined.iter().map(|(_, phi)| 1 + phi.symbol_size()).sum::<usize>()
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct TranslateOptions {
    /// Share abstractions and defined sets with identical keys.
    pub dedup: bool,
}

impl Default for TranslateOptions {
    fn default() -> Self {
        TranslateOptions { dedup: true }
    }
}

struct Translator {
    dedup: bool,
    used: BTreeSet<String>,
    reads: BTreeMap<(String, String), String>,
    read_log: Vec<((String, String), String)>,
    stores: BTreeMap<(Term, String, Term), String>,
    store_log: Vec<String>,
    defined: Vec<(String, QFFormula)>,
    by_formula: BTreeMap<QFFormula, String>,
    singletons: BTreeMap<String, String>,
    side: Vec<QFBAPAFormula>,
}

impl Translator {
    fn fresh(&mut self, base: &str) -> String {
        let mut name = base.to_string();
        let mut n = 1;
        while self.used.contains(&name) {
            name = format!("{base}.{n}");
            n += 1;
        }
        self.used.insert(name.clone());
        name
    }

    fn singleton(&mut self, i: &str) -> SetExpr {
        if let Some(s) = self.singletons.get(i) {
            return SetExpr::var(s.clone());
        }
        let s = self.fresh(&format!("idx.{i}"));
        self.singletons.insert(i.to_string(), s.clone());
        self.side
            .push(Formula::Atom(BapaAtom::IntEq(PATerm::card(SetExpr::var(s.clone())), PATerm::Const(1))));
        SetExpr::var(s)
    }

    fn define(&mut self, phi: QFFormula) -> SetExpr {
        if self.dedup {
            if let Some(s) = self.by_formula.get(&phi) {
                return SetExpr::var(s.clone());
            }
        }
        let s = self.fresh(&format!("D.{}", self.defined.len()));
        self.by_formula.entry(phi.clone()).or_insert_with(|| s.clone());
        self.defined.push((s.clone(), phi));
        SetExpr::var(s)
    }

    fn include(&mut self, a: SetExpr, b: SetExpr) {
        self.side.push(Formula::Atom(BapaAtom::Subset(a, b)));
    }

    /// The component term for the `l`-th entry of a store-free version of `t`.
    fn array_term(&mut self, t: &ArrayTerm) -> Term {
        match t {
            ArrayTerm::Var(a) => Term::var(a.clone()),
            ArrayTerm::Const(c) => Term::cst(c.clone()),
            ArrayTerm::App(g, args) => Term::app(g.clone(), args.iter().map(|a| self.array_term(a)).collect()),
            ArrayTerm::Store(base, i, v) => {
                let base = self.array_term(base);
                let value = self.value_term(v, &mut None);
                let key = (base.clone(), i.clone(), value.clone());
                if self.dedup {
                    if let Some(st) = self.stores.get(&key) {
                        return Term::var(st.clone());
                    }
                }
                let st = self.fresh(&format!("st.{i}.{}", self.store_log.len()));
                self.stores.entry(key).or_insert_with(|| st.clone());
                self.store_log.push(st.clone());
                let single = self.singleton(i);
                let at = self.define(Formula::Atom(Atom::eq(Term::var(st.clone()), value)));
                let elsewhere = self.define(Formula::Atom(Atom::eq(Term::var(st.clone()), base)));
                self.include(single.clone(), at);
                self.include(SetExpr::compl(single), elsewhere);
                Term::var(st)
            }
        }
    }

    /// Rewrites a value term. With `keep = Some(None)` the first read of an
    /// array variable survives as that variable's `l`-th entry and is recorded;
    /// every other read becomes a fresh constant.
    fn value_term(&mut self, t: &ValueTerm, keep: &mut Option<Option<(String, String)>>) -> Term {
        match t {
            ValueTerm::Var(v) => Term::var(v.clone()),
            ValueTerm::Const(c) => Term::cst(c.clone()),
            ValueTerm::App(g, args) => Term::app(g.clone(), args.iter().map(|a| self.value_term(a, keep)).collect()),
            ValueTerm::Read(a, i) => self.read(a, i, keep),
        }
    }

    fn read(&mut self, a: &ArrayTerm, i: &str, keep: &mut Option<Option<(String, String)>>) -> Term {
        match a {
            ArrayTerm::Const(c) => Term::cst(c.clone()),
            ArrayTerm::App(g, args) => Term::app(g.clone(), args.iter().map(|x| self.read(x, i, keep)).collect()),
            ArrayTerm::Var(_) | ArrayTerm::Store(..) => {
                let Term::Var(x) = self.array_term(a) else { unreachable!("stores abstract to variables") };
                if let Some(slot @ None) = keep {
                    *slot = Some((x.clone(), i.to_string()));
                    return Term::var(x);
                }
                let key = (x.clone(), i.to_string());
                if self.dedup {
                    if let Some(c) = self.reads.get(&key) {
                        return Term::var(c.clone());
                    }
                }
                let c = self.fresh(&format!("rd.{x}.{i}"));
                self.reads.entry(key.clone()).or_insert_with(|| c.clone());
                self.read_log.push((key, c.clone()));
                let single = self.singleton(i);
                let agree = self.define(Formula::Atom(Atom::eq(Term::var(x), Term::var(c.clone()))));
                self.include(single, agree);
                Term::var(c)
            }
        }
    }

    fn point_set(&mut self, p: &PointAtom) -> SetExpr {
        let args = p.args.iter().map(|t| self.array_term(t)).collect();
        self.define(Formula::Atom(Atom::new(p.rel.clone(), args)))
    }

    fn set_formula(&mut self, f: &Formula<PointAtom>) -> SetExpr {
        match f {
            Formula::Atom(p) => self.point_set(p),
            Formula::Not(g) => SetExpr::compl(self.set_formula(g)),
            Formula::And(cs) => {
                let parts: Vec<SetExpr> = cs.iter().map(|c| self.set_formula(c)).collect();
                SetExpr::inter_all(parts)
            }
            Formula::Or(cs) => {
                let parts: Vec<SetExpr> = cs.iter().map(|c| self.set_formula(c)).collect();
                SetExpr::union_all(parts)
            }
        }
    }

    fn card_term(&mut self, t: &CardTerm) -> PATerm {
        match t {
            CardTerm::Const(c) => PATerm::Const(*c),
            CardTerm::Size => PATerm::MaxC,
            CardTerm::Plus(a, b) => {
                let a = self.card_term(a);
                PATerm::plus(a, self.card_term(b))
            }
            CardTerm::Scale(k, t) => PATerm::scale(*k, self.card_term(t)),
            CardTerm::Card(f) => PATerm::card(self.set_formula(f)),
        }
    }

    fn atom(&mut self, a: &CalAtom) -> QFBAPAFormula {
        let atom = match a {
            CalAtom::Value(r, args) => {
                let mut keep = Some(None);
                let terms = args.iter().map(|t| self.value_term(t, &mut keep)).collect();
                let d = self.define(Formula::Atom(Atom::new(r.clone(), terms)));
                match keep.flatten() {
                    Some((_, i)) => BapaAtom::Subset(self.singleton(&i), d),
                    None => BapaAtom::SetEq(d, SetExpr::Universe),
                }
            }
            CalAtom::Array(p) => BapaAtom::SetEq(self.point_set(p), SetExpr::Universe),
            CalAtom::IndexEq(i, j) => {
                let si = self.singleton(i);
                BapaAtom::SetEq(si, self.singleton(j))
            }
            CalAtom::CardEq(l, r) => {
                let l = self.card_term(l);
                BapaAtom::IntEq(l, self.card_term(r))
            }
            CalAtom::CardLe(l, r) => {
                let l = self.card_term(l);
                BapaAtom::IntLe(l, self.card_term(r))
            }
        };
        Formula::Atom(atom)
    }
}

fn rounds(f: &CALFormula) -> usize {
    let mut depth = 0;
    let card = |t: &CardTerm, depth: &mut usize| {
        let mut stack = vec![t];
        while let Some(t) = stack.pop() {
            match t {
                CardTerm::Plus(a, b) => stack.extend([&**a, &**b]),
                CardTerm::Scale(_, t) => stack.push(t),
                CardTerm::Card(p) => p.for_each_atom(&mut |a| {
                    *depth = a.args.iter().map(ArrayTerm::store_depth).fold(*depth, usize::max)
                }),
                _ => {}
            }
        }
    };
    f.for_each_atom(&mut |a| match a {
        CalAtom::Value(_, args) => depth = args.iter().map(ValueTerm::store_depth).fold(depth, usize::max),
        CalAtom::Array(p) => depth = p.args.iter().map(ArrayTerm::store_depth).fold(depth, usize::max),
        CalAtom::IndexEq(..) => {}
        CalAtom::CardEq(a, b) | CalAtom::CardLe(a, b) => {
            card(a, &mut depth);
            card(b, &mut depth);
        }
    });
    depth
}

/// Translates `f` into an equisatisfiable QFBAPAI problem.
///
/// Stores are eliminated innermost first; value atoms keep one read, array
/// atoms and stored values keep none. Abstraction side conditions are
/// conjoined at the top level since they only constrain fresh symbols.
pub fn translate(f: &CALFormula, opts: TranslateOptions) -> Result<CalTranslation, String> {
    let vars = CalVars::of(f);
    if let Some(v) = vars.clash() {
        return Err(format!("{v} is used with two sorts"));
    }
    let used: BTreeSet<String> =
        vars.arrays.iter().chain(&vars.indices).chain(&vars.values).cloned().collect();
    let mut tr = Translator {
        dedup: opts.dedup,
        used,
        reads: BTreeMap::new(),
        read_log: Vec::new(),
        stores: BTreeMap::new(),
        store_log: Vec::new(),
        defined: Vec::new(),
        by_formula: BTreeMap::new(),
        singletons: BTreeMap::new(),
        side: Vec::new(),
    };
    for i in &vars.indices {
        tr.singleton(i);
    }
    let body = to_nnf(f).map_atoms(&mut |a| tr.atom(a));
    let skeleton = Formula::and(std::iter::once(body).chain(tr.side.drain(..)));
    let array_vars = vars.arrays.iter().cloned().chain(tr.store_log.iter().cloned()).collect();
    let constants = vars.values.iter().cloned().chain(tr.read_log.iter().map(|(_, c)| c.clone())).collect();
    Ok(CalTranslation {
        skeleton,
        defined: tr.defined,
        array_vars,
        constants,
        singletons: tr.singletons,
        read_abstractions: tr.read_log,
        store_abstractions: tr.store_log,
        rounds: rounds(f),
    })
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SizeReport {
    pub input: usize,
    pub output: usize,
    pub bound: f64,
}

impl SizeReport {
    pub fn within_bound(&self) -> bool {
        self.output as f64 <= self.bound
    }

    /// Smallest constant for which this instance meets the bound.
    pub fn empirical_constant(&self) -> f64 {
        let n = self.input as f64;
        self.output as f64 / (n * n * (n + 2.0).log2())
    }
}

pub fn size_report(input: &CALFormula, output: &CalTranslation) -> SizeReport {
    let n = input.symbol_size();
    let nf = n as f64;
    SizeReport { input: n, output: output.size(), bound: SIZE_CONSTANT * nf * nf * (nf + 2.0).log2() }
}

/// Interpretation of the component symbols used by the direct evaluator.
pub trait ValueAlgebra {
    fn constant(&self, c: &str) -> Result<Value, String>;
    fn apply(&self, f: &str, args: &[Value]) -> Result<Value, String>;
    fn holds(&self, r: &str, args: &[Value]) -> Result<bool, String>;
}

fn elements(args: &[Value]) -> Result<Vec<usize>, String> {
    args.iter().map(|&v| usize::try_from(v).map_err(|_| format!("{v} is outside the carrier"))).collect()
}

impl ValueAlgebra for FiniteStructure {
    fn constant(&self, c: &str) -> Result<Value, String> {
        self.constant_value(c).map(|v| v as Value).ok_or_else(|| format!("unknown constant {c}"))
    }

    fn apply(&self, f: &str, args: &[Value]) -> Result<Value, String> {
        FiniteStructure::apply(self, f, &elements(args)?).map(|v| v as Value).map_err(|e| e.to_string())
    }

    fn holds(&self, r: &str, args: &[Value]) -> Result<bool, String> {
        self.relation_holds(r, &elements(args)?).map_err(|e| e.to_string())
    }
}

/// The integers with numerals, `+`, `-`, `*`, `<=` and `<`.
#[derive(Debug, Clone, Copy, Default)]
pub struct Integers;

impl ValueAlgebra for Integers {
    fn constant(&self, c: &str) -> Result<Value, String> {
        c.parse().map_err(|_| format!("{c} is not a numeral"))
    }

    fn apply(&self, f: &str, args: &[Value]) -> Result<Value, String> {
        let [a, b] = args else { return Err(format!("{f} expects two arguments")) };
        match f {
            "+" => a.checked_add(*b),
            "-" => a.checked_sub(*b),
            "*" => a.checked_mul(*b),
            _ => return Err(format!("unknown function {f}")),
        }
        .ok_or_else(|| "integer overflow".to_string())
    }

    fn holds(&self, r: &str, args: &[Value]) -> Result<bool, String> {
        let [a, b] = args else { return Err(format!("{r} expects two arguments")) };
        match r {
            "=" => Ok(a == b),
            "<=" => Ok(a <= b),
            "<" => Ok(a < b),
            _ => Err(format!("unknown relation {r}")),
        }
    }
}

/// An assignment to the free variables of a CAL formula.
#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct CalState {
    pub arrays: BTreeMap<String, Vec<Value>>,
    pub indices: BTreeMap<String, usize>,
    pub values: BTreeMap<String, Value>,
}

struct Evaluator<'a> {
    alg: &'a dyn ValueAlgebra,
    n: usize,
    st: &'a CalState,
}

impl Evaluator<'_> {
    fn index(&self, i: &str) -> Result<usize, String> {
        let &l = self.st.indices.get(i).ok_or_else(|| format!("unbound index {i}"))?;
        if l >= self.n {
            return Err(format!("index {i} = {l} is out of range"));
        }
        Ok(l)
    }

    fn array_at(&self, t: &ArrayTerm, l: usize) -> Result<Value, String> {
        match t {
            ArrayTerm::Var(a) => {
                let v = self.st.arrays.get(a).ok_or_else(|| format!("unbound array {a}"))?;
                v.get(l).copied().ok_or_else(|| format!("array {a} has no entry {l}"))
            }
            ArrayTerm::Const(c) => self.alg.constant(c),
            ArrayTerm::App(f, args) => {
                let vals = args.iter().map(|a| self.array_at(a, l)).collect::<Result<Vec<_>, _>>()?;
                self.alg.apply(f, &vals)
            }
            ArrayTerm::Store(a, i, v) => {
                if self.index(i)? == l {
                    self.value(v)
                } else {
                    self.array_at(a, l)
                }
            }
        }
    }

    fn value(&self, t: &ValueTerm) -> Result<Value, String> {
        match t {
            ValueTerm::Read(a, i) => self.array_at(a, self.index(i)?),
            ValueTerm::Var(v) => self.st.values.get(v).copied().ok_or_else(|| format!("unbound value {v}")),
            ValueTerm::Const(c) => self.alg.constant(c),
            ValueTerm::App(f, args) => {
                let vals = args.iter().map(|a| self.value(a)).collect::<Result<Vec<_>, _>>()?;
                self.alg.apply(f, &vals)
            }
        }
    }

    fn point(&self, p: &PointAtom, l: usize) -> Result<bool, String> {
        let vals = p.args.iter().map(|a| self.array_at(a, l)).collect::<Result<Vec<_>, _>>()?;
        self.alg.holds(&p.rel, &vals)
    }

    fn card(&self, t: &CardTerm) -> Result<i128, String> {
        Ok(match t {
            CardTerm::Const(c) => *c as i128,
            CardTerm::Size => self.n as i128,
            CardTerm::Plus(a, b) => self.card(a)? + self.card(b)?,
            CardTerm::Scale(k, t) => *k as i128 * self.card(t)?,
            CardTerm::Card(f) => {
                let mut count = 0;
                for l in 0..self.n {
                    if f.eval_with(&mut |p| self.point(p, l))? {
                        count += 1;
                    }
                }
                count
            }
        })
    }

    fn atom(&self, a: &CalAtom) -> Result<bool, String> {
        match a {
            CalAtom::Value(r, args) => {
                let vals = args.iter().map(|t| self.value(t)).collect::<Result<Vec<_>, _>>()?;
                self.alg.holds(r, &vals)
            }
            CalAtom::Array(p) => {
                for l in 0..self.n {
                    if !self.point(p, l)? {
                        return Ok(false);
                    }
                }
                Ok(true)
            }
            CalAtom::IndexEq(i, j) => Ok(self.index(i)? == self.index(j)?),
            CalAtom::CardEq(l, r) => Ok(self.card(l)? == self.card(r)?),
            CalAtom::CardLe(l, r) => Ok(self.card(l)? <= self.card(r)?),
        }
    }
}

/// Evaluates `f` directly on explicit arrays of length `n`.
pub fn eval_cal(alg: &dyn ValueAlgebra, n: usize, f: &CALFormula, st: &CalState) -> Result<bool, String> {
    let ev = Evaluator { alg, n, st };
    f.eval_with(&mut |a| ev.atom(a))
}

/// Enumerates every assignment with entries and values drawn from `domain`
/// and `n` indices, in lexicographic order of the variable names by sort
/// (arrays, then indices, then values).
pub fn brute_force_cal(
    alg: &dyn ValueAlgebra,
    domain: &[Value],
    n: usize,
    f: &CALFormula,
    cap: u64,
) -> Result<BruteResult<CalState>, String> {
    if n == 0 || domain.is_empty() {
        return Err("index set and value domain must be non-empty".into());
    }
    let vars = CalVars::of(f);
    let mut radices = Vec::new();
    radices.extend(std::iter::repeat(domain.len()).take(vars.arrays.len() * n));
    radices.extend(std::iter::repeat(n).take(vars.indices.len()));
    radices.extend(std::iter::repeat(domain.len()).take(vars.values.len()));
    let total = radices.iter().try_fold(1u64, |acc, &r| acc.checked_mul(r as u64));
    match total {
        Some(t) if t <= cap => {}
        _ => return Err(format!("capacity: search space exceeds {cap}")),
    }
    let mut digits = vec![0usize; radices.len()];
    loop {
        let mut st = CalState::default();
        let mut pos = 0;
        for a in &vars.arrays {
            st.arrays.insert(a.clone(), digits[pos..pos + n].iter().map(|&d| domain[d]).collect());
            pos += n;
        }
        for i in &vars.indices {
            st.indices.insert(i.clone(), digits[pos]);
            pos += 1;
        }
        for v in &vars.values {
            st.values.insert(v.clone(), domain[digits[pos]]);
            pos += 1;
        }
        if eval_cal(alg, n, f, &st)? {
            return Ok(BruteResult::Sat(st));
        }
        // Last digit varies fastest.
        let mut k = digits.len();
        loop {
            if k == 0 {
                return Ok(BruteResult::Unsat);
            }
            k -= 1;
            digits[k] += 1;
            if digits[k] < radices[k] {
                break;
            }
            digits[k] = 0;
        }
    }
}

/// Reads a CAL assignment off a QFBAPAI witness.
pub fn extract_state(
    f: &CALFormula,
    t: &CalTranslation,
    w: &ArrayWitness,
    default: Value,
) -> Result<CalState, String> {
    let vars = CalVars::of(f);
    let mut st = CalState::default();
    for a in &vars.arrays {
        let v = w.arrays.get(a).ok_or_else(|| format!("witness lacks array {a}"))?;
        st.arrays.insert(a.clone(), v.clone());
    }
    for i in &vars.indices {
        let set = &t.singletons[i];
        let members = w.free_sets.get(set).ok_or_else(|| format!("witness lacks set {set}"))?;
        match members.iter().next() {
            Some(&l) if members.len() == 1 => st.indices.insert(i.clone(), l),
            _ => return Err(format!("set {set} for index {i} is not a singleton")),
        };
    }
    for v in &vars.values {
        st.values.insert(v.clone(), w.constants.get(v).copied().unwrap_or(default));
    }
    Ok(st)
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum CalResult {
    Sat { state: CalState, witness: ArrayWitness, certificate: SupportCertificate },
    Unsat,
    Unknown(String),
}

impl CalResult {
    pub fn is_sat(&self) -> bool {
        matches!(self, CalResult::Sat { .. })
    }
}

#[derive(Debug, Clone, Copy)]
pub struct CalOptions {
    pub translate: TranslateOptions,
    pub qfbapai: QfbapaiOptions,
}

impl Default for CalOptions {
    fn default() -> Self {
        CalOptions {
            translate: TranslateOptions::default(),
            qfbapai: QfbapaiOptions { max_defined: 48, ..QfbapaiOptions::default() },
        }
    }
}

/// Translates and solves; satisfiable answers carry the decoded assignment.
pub fn solve_cal(
    f: &CALFormula,
    oracle: &dyn ComponentOracle,
    index_card: IndexCard,
    opts: CalOptions,
) -> CalResult {
    let t = match translate(f, opts.translate) {
        Ok(t) => t,
        Err(e) => return CalResult::Unknown(e),
    };
    let p = t.problem(oracle, index_card);
    match solve_qfbapai_with(&p, opts.qfbapai) {
        QfbapaiResult::Sat { witness, certificate } => match extract_state(f, &t, &witness, oracle.default_value()) {
            Ok(state) => CalResult::Sat { state, witness, certificate },
            Err(e) => CalResult::Unknown(e),
        },
        QfbapaiResult::Unsat => CalResult::Unsat,
        QfbapaiResult::Unknown(why) => CalResult::Unknown(why),
    }
}
