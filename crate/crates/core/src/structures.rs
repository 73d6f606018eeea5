//! Explicit finite structures, power-structure satisfaction and the
//! exhaustive satisfiability oracles used for differential testing.
//!
//! Elements of a structure of size `n` are the naturals `0..n`. In a power
//! structure `M^I` a positive relation holds iff it holds at every index,
//! so a negated relation holds iff the relation fails at some index.

use std::collections::BTreeMap;

use crate::formula::{Atom, Formula, QFFormula, Signature, Term, EQ};

/// Component values. Finite structures use `0..size`.
pub type Value = i64;

/// An assignment of component values to variables.
pub type Model = BTreeMap<String, Value>;

/// A point of a finite power structure: one vector per variable.
pub type PowerPoint = BTreeMap<String, Vec<Value>>;

/// Default bound on the size of an enumeration space.
pub const DEFAULT_CAPACITY: u64 = 10_000_000;

/// Enumeration cap, overridable through `POWSAT_CAPACITY`.
pub fn capacity() -> u64 {
    std::env::var("POWSAT_CAPACITY")
        .ok()
        .and_then(|s| s.trim().parse().ok())
        .unwrap_or(DEFAULT_CAPACITY)
}

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
pub enum StructureError {
    #[error("unknown symbol `{0}`")]
    UnknownSymbol(String),
    #[error("`{symbol}` expects {expected} arguments, found {found}")]
    Arity {
        symbol: String,
        expected: usize,
        found: usize,
    },
    #[error("variable `{0}` is not assigned")]
    Unbound(String),
    #[error("value {0} is outside the carrier")]
    OutOfCarrier(Value),
    #[error("vector for `{var}` has length {found}, expected {expected}")]
    LengthMismatch {
        var: String,
        expected: usize,
        found: usize,
    },
    #[error("function table for `{0}` is not total")]
    PartialFunction(String),
    #[error("search space of {needed} points exceeds the capacity {cap}")]
    Capacity { needed: String, cap: u64 },
    #[error("the index set is unbounded and cannot be enumerated")]
    Unbounded,
}

/// Number of indices of a power structure.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum IndexCard {
    Finite(usize),
    Unbounded,
}

impl IndexCard {
    pub fn finite(n: usize) -> Self {
        assert!(n >= 1, "index sets are non-empty");
        IndexCard::Finite(n)
    }

    /// Whether `t` distinct indices can be chosen.
    pub fn admits(&self, t: usize) -> bool {
        match self {
            IndexCard::Finite(n) => t <= *n,
            IndexCard::Unbounded => true,
        }
    }

    pub fn as_finite(&self) -> Option<usize> {
        match self {
            IndexCard::Finite(n) => Some(*n),
            IndexCard::Unbounded => None,
        }
    }
}

impl std::fmt::Display for IndexCard {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            IndexCard::Finite(n) => write!(f, "{n}"),
            IndexCard::Unbounded => write!(f, "inf"),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
struct Table {
    arity: usize,
    // Indexed by the mixed-radix encoding of the argument tuple.
    entries: Vec<usize>,
}

/// Outcome of an exhaustive search.
#[derive(Debug, Clone, PartialEq, Eq)]
pub enum BruteResult<W> {
    Sat(W),
    Unsat,
}

impl<W> BruteResult<W> {
    pub fn is_sat(&self) -> bool {
        matches!(self, BruteResult::Sat(_))
    }
}

/// A finite one-sorted structure with carrier `0..size`.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct FiniteStructure {
    signature: Signature,
    size: usize,
    constants: BTreeMap<String, usize>,
    function_index: BTreeMap<String, usize>,
    functions: Vec<Table>,
    relation_index: BTreeMap<String, usize>,
    relations: Vec<Table>,
}

impl FiniteStructure {
    pub fn new(size: usize) -> Self {
        assert!(size >= 1, "carriers are non-empty");
        FiniteStructure {
            signature: Signature::new(),
            size,
            constants: BTreeMap::new(),
            function_index: BTreeMap::new(),
            functions: Vec::new(),
            relation_index: BTreeMap::new(),
            relations: Vec::new(),
        }
    }

    pub fn size(&self) -> usize {
        self.size
    }

    pub fn signature(&self) -> &Signature {
        &self.signature
    }

    pub fn constant_value(&self, name: &str) -> Option<usize> {
        self.constants.get(name).copied()
    }

    pub fn with_constant(mut self, name: &str, value: usize) -> Result<Self, StructureError> {
        if value >= self.size {
            return Err(StructureError::OutOfCarrier(value as Value));
        }
        if self.constants.insert(name.to_string(), value).is_none() {
            self.signature.constants.push(name.to_string());
        }
        Ok(self)
    }

    pub fn with_function(
        mut self,
        name: &str,
        arity: usize,
        f: impl Fn(&[usize]) -> usize,
    ) -> Result<Self, StructureError> {
        let mut entries = Vec::new();
        for tuple in tuples(self.size, arity) {
            let v = f(&tuple);
            if v >= self.size {
                return Err(StructureError::OutOfCarrier(v as Value));
            }
            entries.push(v);
        }
        self.add_function(name, Table { arity, entries });
        Ok(self)
    }

    /// Builds a function from an explicit list of `(arguments, value)` rows,
    /// which must cover every tuple.
    pub fn with_function_rows(
        self,
        name: &str,
        arity: usize,
        rows: &[(Vec<usize>, usize)],
    ) -> Result<Self, StructureError> {
        let size = self.size;
        let mut entries = vec![None; size.pow(arity as u32)];
        for (args, v) in rows {
            if args.len() != arity {
                return Err(StructureError::Arity {
                    symbol: name.to_string(),
                    expected: arity,
                    found: args.len(),
                });
            }
            if let Some(bad) = args.iter().chain(std::iter::once(v)).find(|&&a| a >= size) {
                return Err(StructureError::OutOfCarrier(*bad as Value));
            }
            entries[encode(size, args)] = Some(*v);
        }
        let entries: Option<Vec<usize>> = entries.into_iter().collect();
        let entries = entries.ok_or_else(|| StructureError::PartialFunction(name.to_string()))?;
        let mut s = self;
        s.add_function(name, Table { arity, entries });
        Ok(s)
    }

    pub fn with_relation(
        mut self,
        name: &str,
        arity: usize,
        r: impl Fn(&[usize]) -> bool,
    ) -> Result<Self, StructureError> {
        if name == EQ {
            return Err(StructureError::UnknownSymbol(name.to_string()));
        }
        let entries = tuples(self.size, arity).map(|t| usize::from(r(&t))).collect();
        self.add_relation(name, Table { arity, entries });
        Ok(self)
    }

    pub fn with_relation_rows(
        self,
        name: &str,
        arity: usize,
        rows: &[Vec<usize>],
    ) -> Result<Self, StructureError> {
        let size = self.size;
        for row in rows {
            if row.len() != arity {
                return Err(StructureError::Arity {
                    symbol: name.to_string(),
                    expected: arity,
                    found: row.len(),
                });
            }
            if let Some(bad) = row.iter().find(|&&a| a >= size) {
                return Err(StructureError::OutOfCarrier(*bad as Value));
            }
        }
        self.with_relation(name, arity, |t| rows.iter().any(|r| r.as_slice() == t))
    }

    fn add_function(&mut self, name: &str, table: Table) {
        let arity = table.arity;
        if let Some(&i) = self.function_index.get(name) {
            self.functions[i] = table;
            self.signature.functions.retain(|(f, _)| f != name);
        } else {
            self.function_index.insert(name.to_string(), self.functions.len());
            self.functions.push(table);
        }
        self.signature.functions.push((name.to_string(), arity));
    }

    fn add_relation(&mut self, name: &str, table: Table) {
        let arity = table.arity;
        if let Some(&i) = self.relation_index.get(name) {
            self.relations[i] = table;
            self.signature.relations.retain(|(r, _)| r != name);
        } else {
            self.relation_index.insert(name.to_string(), self.relations.len());
            self.relations.push(table);
        }
        self.signature.relations.push((name.to_string(), arity));
    }

    /// Lists the rows of a function table in argument order.
    pub fn function_rows(&self, name: &str) -> Option<(usize, Vec<(Vec<usize>, usize)>)> {
        let t = &self.functions[*self.function_index.get(name)?];
        let rows = tuples(self.size, t.arity).zip(t.entries.iter().copied()).collect();
        Some((t.arity, rows))
    }

    /// Lists the tuples of a relation in lexicographic order.
    pub fn relation_rows(&self, name: &str) -> Option<(usize, Vec<Vec<usize>>)> {
        let t = &self.relations[*self.relation_index.get(name)?];
        let rows = tuples(self.size, t.arity)
            .zip(t.entries.iter())
            .filter(|(_, &e)| e == 1)
            .map(|(tup, _)| tup)
            .collect();
        Some((t.arity, rows))
    }

    pub fn function_names(&self) -> impl Iterator<Item = &String> {
        self.function_index.keys()
    }

    pub fn relation_names(&self) -> impl Iterator<Item = &String> {
        self.relation_index.keys()
    }

    pub fn constants(&self) -> &BTreeMap<String, usize> {
        &self.constants
    }

    /// Direct table lookup for a function symbol.
    pub fn apply(&self, name: &str, args: &[usize]) -> Result<usize, StructureError> {
        let i = *self
            .function_index
            .get(name)
            .ok_or_else(|| StructureError::UnknownSymbol(name.to_string()))?;
        let t = &self.functions[i];
        self.check_row(name, t.arity, args)?;
        Ok(t.entries[encode(self.size, args)])
    }

    /// Direct table lookup for a relation symbol; `=` is the identity.
    pub fn relation_holds(&self, name: &str, args: &[usize]) -> Result<bool, StructureError> {
        if name == EQ {
            self.check_row(name, 2, args)?;
            return Ok(args[0] == args[1]);
        }
        let i = *self
            .relation_index
            .get(name)
            .ok_or_else(|| StructureError::UnknownSymbol(name.to_string()))?;
        let t = &self.relations[i];
        self.check_row(name, t.arity, args)?;
        Ok(t.entries[encode(self.size, args)] == 1)
    }

    fn check_row(&self, name: &str, arity: usize, args: &[usize]) -> Result<(), StructureError> {
        if args.len() != arity {
            return Err(StructureError::Arity { symbol: name.to_string(), expected: arity, found: args.len() });
        }
        match args.iter().find(|&&a| a >= self.size) {
            Some(&bad) => Err(StructureError::OutOfCarrier(bad as Value)),
            None => Ok(()),
        }
    }

    fn element(&self, v: Value) -> Result<usize, StructureError> {
        if v < 0 || v as usize >= self.size {
            Err(StructureError::OutOfCarrier(v))
        } else {
            Ok(v as usize)
        }
    }

    /// Value of `t` under `env`.
    pub fn eval_term(&self, t: &Term, env: &Model) -> Result<Value, StructureError> {
        let compiled = Compiler::new(self).term(t)?;
        let mut slots = Vec::new();
        for v in compiled.1 {
            let val = env.get(&v).ok_or_else(|| StructureError::Unbound(v.clone()))?;
            slots.push(self.element(*val)?);
        }
        Ok(self.term_value(&compiled.0, &|i| Some(slots[i])).unwrap() as Value)
    }

    /// Ordinary satisfaction of `f` under `env`.
    pub fn holds(&self, f: &QFFormula, env: &Model) -> Result<bool, StructureError> {
        let c = Compiled::new(self, f)?;
        let slots = c.bind(self, env)?;
        Ok(self.node_value(&c.root, &|i| Some(slots[i])).unwrap())
    }

    /// Satisfaction of `f` in the power structure with `n` indices.
    pub fn power_holds(&self, n: usize, f: &QFFormula, point: &PowerPoint) -> Result<bool, StructureError> {
        let c = Compiled::new(self, f)?;
        let mut flat = Vec::with_capacity(c.vars.len() * n);
        for v in &c.vars {
            let vec = point.get(v).ok_or_else(|| StructureError::Unbound(v.clone()))?;
            if vec.len() != n {
                return Err(StructureError::LengthMismatch {
                    var: v.clone(),
                    expected: n,
                    found: vec.len(),
                });
            }
            for &x in vec {
                flat.push(self.element(x)?);
            }
        }
        Ok(self.power_node_value(&c.root, n, &flat))
    }

    /// Exhaustive search for a satisfying assignment in lexicographic order
    /// (first variable most significant, carrier order within a variable).
    pub fn brute_force_sat(&self, f: &QFFormula, cap: u64) -> Result<BruteResult<Model>, StructureError> {
        let c = Compiled::new(self, f)?;
        check_space(self.size as u128, c.vars.len(), cap)?;
        let nvars = c.vars.len();
        let mut slots = vec![0usize; nvars];
        loop {
            if self.node_value(&c.root, &|i| Some(slots[i])).unwrap() {
                return Ok(BruteResult::Sat(c.model(&slots)));
            }
            if !odometer(&mut slots, self.size) {
                return Ok(BruteResult::Unsat);
            }
        }
    }

    /// Exhaustive search over all points of the `n`-fold power.
    pub fn brute_force_power_sat(
        &self,
        n: IndexCard,
        f: &QFFormula,
        cap: u64,
    ) -> Result<BruteResult<PowerPoint>, StructureError> {
        let n = n.as_finite().ok_or(StructureError::Unbounded)?;
        let c = Compiled::new(self, f)?;
        let columns = (self.size as u128).checked_pow(n as u32).unwrap_or(u128::MAX);
        check_space(columns, c.vars.len(), cap)?;
        // Variable-major layout: flat[v * n + i] is variable v at index i.
        let mut flat = vec![0usize; c.vars.len() * n];
        loop {
            if self.power_node_value(&c.root, n, &flat) {
                let point = c
                    .vars
                    .iter()
                    .enumerate()
                    .map(|(v, name)| {
                        (name.clone(), flat[v * n..(v + 1) * n].iter().map(|&x| x as Value).collect())
                    })
                    .collect();
                return Ok(BruteResult::Sat(point));
            }
            if !odometer(&mut flat, self.size) {
                return Ok(BruteResult::Unsat);
            }
        }
    }

    /// Lexicographic depth-first search with three-valued pruning.
    ///
    /// Returns the same verdict and witness as [`Self::brute_force_sat`] but
    /// abandons a prefix as soon as the formula is already false on it. `cap`
    /// bounds the number of visited search nodes.
    pub fn search_sat(&self, f: &QFFormula, cap: u64) -> Result<BruteResult<Model>, StructureError> {
        let c = Compiled::new(self, f)?;
        let nvars = c.vars.len();
        let mut slots: Vec<Option<usize>> = vec![None; nvars];
        let mut visited = 0u64;
        let mut depth = 0usize;
        // Iterative DFS: slots[..depth] assigned.
        loop {
            let verdict = self.node_value(&c.root, &|i| slots[i]);
            let descend = match verdict {
                Some(false) => false,
                Some(true) => {
                    let full: Vec<usize> = slots.iter().map(|s| s.unwrap_or(0)).collect();
                    return Ok(BruteResult::Sat(c.model(&full)));
                }
                None => depth < nvars,
            };
            visited += 1;
            if visited > cap {
                return Err(StructureError::Capacity { needed: format!(">{cap} nodes"), cap });
            }
            if descend {
                slots[depth] = Some(0);
                depth += 1;
                continue;
            }
            // Advance to the next sibling, backtracking as needed.
            loop {
                if depth == 0 {
                    return Ok(BruteResult::Unsat);
                }
                let cur = slots[depth - 1].unwrap();
                if cur + 1 < self.size {
                    slots[depth - 1] = Some(cur + 1);
                    break;
                }
                slots[depth - 1] = None;
                depth -= 1;
            }
        }
    }

    fn term_value(&self, t: &CTerm, env: &impl Fn(usize) -> Option<usize>) -> Option<usize> {
        match t {
            CTerm::Var(i) => env(*i),
            CTerm::Val(v) => Some(*v),
            CTerm::App(fi, args) => {
                let table = &self.functions[*fi];
                let mut idx = 0usize;
                for a in args {
                    idx = idx * self.size + self.term_value(a, env)?;
                }
                Some(table.entries[idx])
            }
        }
    }

    fn atom_value(&self, a: &CAtom, env: &impl Fn(usize) -> Option<usize>) -> Option<bool> {
        match a.rel {
            None => {
                let l = self.term_value(&a.args[0], env)?;
                let r = self.term_value(&a.args[1], env)?;
                Some(l == r)
            }
            Some(ri) => {
                let mut idx = 0usize;
                for t in &a.args {
                    idx = idx * self.size + self.term_value(t, env)?;
                }
                Some(self.relations[ri].entries[idx] == 1)
            }
        }
    }

    // Kleene three-valued evaluation; `None` when undetermined.
    fn node_value(&self, n: &CNode, env: &impl Fn(usize) -> Option<usize>) -> Option<bool> {
        match n {
            CNode::Atom(a) => self.atom_value(a, env),
            CNode::Not(g) => self.node_value(g, env).map(|b| !b),
            CNode::And(cs) => {
                let mut unknown = false;
                for c in cs {
                    match self.node_value(c, env) {
                        Some(false) => return Some(false),
                        None => unknown = true,
                        Some(true) => {}
                    }
                }
                if unknown {
                    None
                } else {
                    Some(true)
                }
            }
            CNode::Or(cs) => {
                let mut unknown = false;
                for c in cs {
                    match self.node_value(c, env) {
                        Some(true) => return Some(true),
                        None => unknown = true,
                        Some(false) => {}
                    }
                }
                if unknown {
                    None
                } else {
                    Some(false)
                }
            }
        }
    }

    fn power_node_value(&self, node: &CNode, n: usize, flat: &[usize]) -> bool {
        match node {
            CNode::Atom(a) => (0..n).all(|i| self.atom_value(a, &|v| Some(flat[v * n + i])).unwrap()),
            CNode::Not(g) => !self.power_node_value(g, n, flat),
            CNode::And(cs) => cs.iter().all(|c| self.power_node_value(c, n, flat)),
            CNode::Or(cs) => cs.iter().any(|c| self.power_node_value(c, n, flat)),
        }
    }
}

fn check_space(base: u128, vars: usize, cap: u64) -> Result<(), StructureError> {
    let mut total: u128 = 1;
    for _ in 0..vars {
        total = total.saturating_mul(base);
    }
    if total > cap as u128 {
        return Err(StructureError::Capacity { needed: total.to_string(), cap });
    }
    Ok(())
}

/// Increments a mixed-radix counter whose last digit is least significant.
fn odometer(digits: &mut [usize], base: usize) -> bool {
    for d in digits.iter_mut().rev() {
        *d += 1;
        if *d < base {
            return true;
        }
        *d = 0;
    }
    false
}

fn encode(size: usize, args: &[usize]) -> usize {
    args.iter().fold(0, |acc, &a| acc * size + a)
}

/// All tuples of the given arity over `0..size`, in lexicographic order.
pub fn tuples(size: usize, arity: usize) -> impl Iterator<Item = Vec<usize>> {
    let mut cur = Some(vec![0usize; arity]);
    std::iter::from_fn(move || {
        let out = cur.clone()?;
        let mut next = out.clone();
        cur = if odometer(&mut next, size) { Some(next) } else { None };
        Some(out)
    })
}

enum CTerm {
    Var(usize),
    Val(usize),
    App(usize, Vec<CTerm>),
}

struct CAtom {
    rel: Option<usize>,
    args: Vec<CTerm>,
}

enum CNode {
    Atom(CAtom),
    Not(Box<CNode>),
    And(Vec<CNode>),
    Or(Vec<CNode>),
}

struct Compiler<'s> {
    s: &'s FiniteStructure,
    vars: BTreeMap<String, usize>,
}

impl<'s> Compiler<'s> {
    fn new(s: &'s FiniteStructure) -> Self {
        Compiler { s, vars: BTreeMap::new() }
    }

    // Returns the compiled term and its variables in slot order.
    fn term(mut self, t: &Term) -> Result<(CTerm, Vec<String>), StructureError> {
        let mut names = std::collections::BTreeSet::new();
        t.collect_vars(&mut names);
        self.vars = names.iter().enumerate().map(|(i, v)| (v.clone(), i)).collect();
        Ok((self.compile_term(t)?, names.into_iter().collect()))
    }

    fn compile_term(&self, t: &Term) -> Result<CTerm, StructureError> {
        Ok(match t {
            Term::Var(v) => CTerm::Var(self.vars[v]),
            Term::Const(c) => CTerm::Val(
                self.s.constants.get(c).copied().ok_or_else(|| StructureError::UnknownSymbol(c.clone()))?,
            ),
            Term::App(f, args) => {
                let fi = *self.s.function_index.get(f).ok_or_else(|| StructureError::UnknownSymbol(f.clone()))?;
                let arity = self.s.functions[fi].arity;
                if arity != args.len() {
                    return Err(StructureError::Arity { symbol: f.clone(), expected: arity, found: args.len() });
                }
                CTerm::App(fi, args.iter().map(|a| self.compile_term(a)).collect::<Result<_, _>>()?)
            }
        })
    }

    fn atom(&self, a: &Atom) -> Result<CAtom, StructureError> {
        let (rel, arity) = if a.rel == EQ {
            (None, 2)
        } else {
            let ri = *self.s.relation_index.get(&a.rel).ok_or_else(|| StructureError::UnknownSymbol(a.rel.clone()))?;
            (Some(ri), self.s.relations[ri].arity)
        };
        if arity != a.args.len() {
            return Err(StructureError::Arity { symbol: a.rel.clone(), expected: arity, found: a.args.len() });
        }
        Ok(CAtom { rel, args: a.args.iter().map(|t| self.compile_term(t)).collect::<Result<_, _>>()? })
    }

    fn node(&self, f: &QFFormula) -> Result<CNode, StructureError> {
        Ok(match f {
            Formula::Atom(a) => CNode::Atom(self.atom(a)?),
            Formula::Not(g) => CNode::Not(Box::new(self.node(g)?)),
            Formula::And(cs) => CNode::And(cs.iter().map(|c| self.node(c)).collect::<Result<_, _>>()?),
            Formula::Or(cs) => CNode::Or(cs.iter().map(|c| self.node(c)).collect::<Result<_, _>>()?),
        })
    }
}

struct Compiled {
    vars: Vec<String>,
    root: CNode,
}

impl Compiled {
    fn new(s: &FiniteStructure, f: &QFFormula) -> Result<Self, StructureError> {
        let names = f.free_vars();
        let mut compiler = Compiler::new(s);
        compiler.vars = names.iter().enumerate().map(|(i, v)| (v.clone(), i)).collect();
        let root = compiler.node(f)?;
        Ok(Compiled { vars: names.into_iter().collect(), root })
    }

    fn bind(&self, s: &FiniteStructure, env: &Model) -> Result<Vec<usize>, StructureError> {
        self.vars
            .iter()
            .map(|v| s.element(*env.get(v).ok_or_else(|| StructureError::Unbound(v.clone()))?))
            .collect()
    }

    fn model(&self, slots: &[usize]) -> Model {
        self.vars.iter().cloned().zip(slots.iter().map(|&x| x as Value)).collect()
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::formula::Formula;

    fn chain(n: usize) -> FiniteStructure {
        FiniteStructure::new(n).with_relation("<=", 2, |t| t[0] <= t[1]).unwrap()
    }

    fn chain2() -> FiniteStructure {
        chain(2)
    }

    fn le(a: Term, b: Term) -> QFFormula {
        Formula::Atom(Atom::new("<=", vec![a, b]))
    }

    fn x() -> Term {
        Term::var("x")
    }

    fn y() -> Term {
        Term::var("y")
    }

    fn env(pairs: &[(&str, Value)]) -> Model {
        pairs.iter().map(|(k, v)| (k.to_string(), *v)).collect()
    }

    #[test]
    fn eval_max_table() {
        let s = FiniteStructure::new(2).with_function("max", 2, |t| t[0].max(t[1])).unwrap();
        let t = Term::app("max", vec![x(), y()]);
        assert_eq!(s.eval_term(&t, &env(&[("x", 0), ("y", 1)])).unwrap(), 1);
    }

    #[test]
    fn eval_constant_and_nested() {
        let s = FiniteStructure::new(2)
            .with_constant("c", 1)
            .unwrap()
            .with_function("f", 1, |t| (t[0] + 1) % 2)
            .unwrap();
        assert_eq!(s.eval_term(&Term::cst("c"), &Model::new()).unwrap(), 1);
        let ffx = Term::app("f", vec![Term::app("f", vec![x()])]);
        assert_eq!(s.eval_term(&ffx, &env(&[("x", 0)])).unwrap(), 0);
    }

    #[test]
    fn eval_errors() {
        let s = chain2();
        assert!(matches!(s.eval_term(&Term::cst("nope"), &Model::new()), Err(StructureError::UnknownSymbol(_))));
        assert!(matches!(s.holds(&le(x(), y()), &env(&[("x", 0)])), Err(StructureError::Unbound(_))));
    }

    #[test]
    fn holds_examples() {
        let s = chain2();
        let f = Formula::and([le(x(), y()), Formula::not(le(y(), x()))]);
        assert!(s.holds(&f, &env(&[("x", 0), ("y", 1)])).unwrap());
        let a = le(x(), y());
        let taut = Formula::or([a.clone(), Formula::not(a)]);
        for (vx, vy) in [(0, 0), (0, 1), (1, 0), (1, 1)] {
            assert!(s.holds(&taut, &env(&[("x", vx), ("y", vy)])).unwrap());
        }
        let eq = Formula::Atom(Atom::eq(x(), y()));
        assert!(s.holds(&eq, &env(&[("x", 0), ("y", 0)])).unwrap());
        assert!(!s.holds(&eq, &env(&[("x", 0), ("y", 1)])).unwrap());
    }

    #[test]
    fn power_examples() {
        let s = chain2();
        let pt = |a: Vec<Value>, b: Vec<Value>| -> PowerPoint {
            [("x".to_string(), a), ("y".to_string(), b)].into_iter().collect()
        };
        assert!(s.power_holds(2, &le(x(), y()), &pt(vec![0, 1], vec![1, 1])).unwrap());
        assert!(!s.power_holds(2, &le(x(), y()), &pt(vec![0, 1], vec![0, 0])).unwrap());
        let neq = Formula::not(Formula::Atom(Atom::eq(x(), y())));
        assert!(s.power_holds(2, &neq, &pt(vec![0, 1], vec![1, 1])).unwrap());
        assert!(matches!(
            s.power_holds(2, &le(x(), y()), &pt(vec![0], vec![1, 1])),
            Err(StructureError::LengthMismatch { .. })
        ));
    }

    #[test]
    fn brute_force_examples() {
        let s = chain2();
        let f = Formula::and([le(x(), y()), Formula::not(le(y(), x()))]);
        assert_eq!(s.brute_force_sat(&f, DEFAULT_CAPACITY).unwrap(), BruteResult::Sat(env(&[("x", 0), ("y", 1)])));
        let irreflexive = Formula::not(Formula::Atom(Atom::eq(x(), x())));
        assert_eq!(s.brute_force_sat(&irreflexive, DEFAULT_CAPACITY).unwrap(), BruteResult::Unsat);
        assert!(matches!(s.brute_force_sat(&f, 3), Err(StructureError::Capacity { .. })));
    }

    #[test]
    fn three_variable_enumeration() {
        // x < y < z over {0,1,2}: exactly one of the 27 assignments.
        let s = chain(3);
        let z = Term::var("z");
        let lt = |a: Term, b: Term| Formula::and([le(a.clone(), b.clone()), Formula::not(Formula::Atom(Atom::eq(a, b)))]);
        let f = Formula::and([lt(x(), y()), lt(y(), z.clone())]);
        let mut count = 0;
        for vx in 0..3 {
            for vy in 0..3 {
                for vz in 0..3 {
                    if s.holds(&f, &env(&[("x", vx), ("y", vy), ("z", vz)])).unwrap() {
                        count += 1;
                    }
                }
            }
        }
        assert_eq!(count, 1);
        assert_eq!(
            s.brute_force_sat(&f, DEFAULT_CAPACITY).unwrap(),
            BruteResult::Sat(env(&[("x", 0), ("y", 1), ("z", 2)]))
        );
        let g = Formula::and([lt(x(), y()), lt(y(), z.clone()), lt(z, x())]);
        assert_eq!(s.brute_force_sat(&g, DEFAULT_CAPACITY).unwrap(), BruteResult::Unsat);
    }

    #[test]
    fn power_brute_force_examples() {
        let s = chain2();
        let f = Formula::and([le(x(), y()), Formula::not(Formula::Atom(Atom::eq(x(), y())))]);
        let r = s.brute_force_power_sat(IndexCard::Finite(1), &f, DEFAULT_CAPACITY).unwrap();
        let expected: PowerPoint = [("x".to_string(), vec![0]), ("y".to_string(), vec![1])].into_iter().collect();
        assert_eq!(r, BruteResult::Sat(expected));

        // x > 0 somewhere and x < 1 somewhere.
        let s = s.with_constant("zero", 0).unwrap().with_constant("one", 1).unwrap();
        let g = Formula::and([
            le(Term::cst("zero"), x()),
            Formula::not(le(x(), Term::cst("zero"))),
            Formula::not(le(Term::cst("one"), x())),
        ]);
        assert_eq!(s.brute_force_power_sat(IndexCard::Finite(1), &g, DEFAULT_CAPACITY).unwrap(), BruteResult::Unsat);
        assert!(s.brute_force_power_sat(IndexCard::Finite(2), &g, DEFAULT_CAPACITY).unwrap().is_sat());
        assert_eq!(
            s.brute_force_power_sat(IndexCard::Unbounded, &g, DEFAULT_CAPACITY),
            Err(StructureError::Unbounded)
        );
    }

    #[test]
    fn search_matches_enumeration() {
        let s = chain(3);
        let z = Term::var("z");
        let fs = vec![
            Formula::and([le(x(), y()), Formula::not(le(y(), z.clone()))]),
            Formula::or([Formula::not(le(x(), x())), le(z.clone(), x())]),
            Formula::and([Formula::not(Formula::Atom(Atom::eq(x(), y()))), le(y(), x()), le(x(), y())]),
        ];
        for f in fs {
            assert_eq!(s.search_sat(&f, DEFAULT_CAPACITY).unwrap(), s.brute_force_sat(&f, DEFAULT_CAPACITY).unwrap());
        }
    }

    #[test]
    fn partial_function_rows_rejected() {
        let r = FiniteStructure::new(2).with_function_rows("f", 1, &[(vec![0], 1)]);
        assert!(matches!(r, Err(StructureError::PartialFunction(_))));
    }
}
