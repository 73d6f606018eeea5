//! Satisfiability of quantifier-free linear integer arithmetic.
//!
//! A conjunction is decided in three stages:
//!
//! 1. divisibility atoms `m | e` become equalities `e = m*q` over a fresh
//!    quotient `q`;
//! 2. equalities are eliminated by unimodular integer substitution: a
//!    variable with a unit coefficient is solved for directly, otherwise a
//!    Euclid step `x := x' - q*y` shrinks the coefficients until one becomes
//!    a unit (a gcd that does not divide the constant proves unsatisfiability);
//! 3. the remaining inequalities are tightened by their coefficient gcd and
//!    decided by branch and bound over an exact rational simplex. Every
//!    integer variable is boxed by the classical small-solution bound, so the
//!    search tree is finite; a node budget turns very deep searches into
//!    `Unknown`.
//!
//! Boolean structure is handled by streaming DNF clauses through the
//! conjunction solver.

use std::collections::{BTreeMap, BTreeSet};
use std::fmt;

use num_bigint::BigInt;
use num_integer::Integer;
use num_rational::BigRational;
use num_traits::{One, Signed, ToPrimitive, Zero};

use crate::formula::{to_dnf, to_nnf, Formula, SymbolSize};

/// Largest coefficient magnitude accepted by the solver.
pub const MAX_COEFFICIENT: i64 = 1 << 31;

/// Default branch-and-bound node budget.
pub const DEFAULT_NODE_LIMIT: usize = 20_000;

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum AtomKind {
    /// `expr = 0`
    Eq,
    /// `expr <= 0`
    Le,
    /// `modulus | expr`
    Dvd(u64),
}

/// `Σ coeffs[v]·v + constant`, compared against zero according to `kind`.
#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct LinearAtom {
    pub coeffs: BTreeMap<String, i64>,
    pub constant: i64,
    pub kind: AtomKind,
}

impl LinearAtom {
    pub fn eval(&self, model: &BTreeMap<String, i64>) -> bool {
        let mut total = BigInt::from(self.constant);
        for (v, a) in &self.coeffs {
            total += BigInt::from(*a) * BigInt::from(*model.get(v).unwrap_or(&0));
        }
        match self.kind {
            AtomKind::Eq => total.is_zero(),
            AtomKind::Le => !total.is_positive(),
            AtomKind::Dvd(m) => (total % BigInt::from(m)).is_zero(),
        }
    }

    pub fn vars(&self) -> impl Iterator<Item = &String> {
        self.coeffs.keys()
    }
}

impl fmt::Display for LinearAtom {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let op = match self.kind {
            AtomKind::Eq => "=".to_string(),
            AtomKind::Le => "<=".to_string(),
            AtomKind::Dvd(m) => format!("dvd {m}"),
        };
        write!(f, "({op} (+")?;
        for (v, a) in &self.coeffs {
            write!(f, " (* {a} {v})")?;
        }
        write!(f, " {}) 0)", self.constant)
    }
}

impl SymbolSize for LinearAtom {
    fn symbol_size(&self) -> usize {
        // relation + one product per variable (coefficient, variable) + constant
        1 + 3 * self.coeffs.len() + 1
    }
}

/// A linear expression with integer coefficients, used to build atoms.
#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct LinExpr {
    pub coeffs: BTreeMap<String, i64>,
    pub constant: i64,
}

impl LinExpr {
    pub fn constant(c: i64) -> Self {
        LinExpr { coeffs: BTreeMap::new(), constant: c }
    }

    pub fn var(v: impl Into<String>) -> Self {
        LinExpr { coeffs: [(v.into(), 1)].into_iter().collect(), constant: 0 }
    }

    pub fn term(a: i64, v: impl Into<String>) -> Self {
        LinExpr::var(v).scale(a)
    }

    pub fn plus(mut self, other: &LinExpr) -> Self {
        for (v, a) in &other.coeffs {
            let e = self.coeffs.entry(v.clone()).or_insert(0);
            *e += a;
            if *e == 0 {
                self.coeffs.remove(v);
            }
        }
        self.constant += other.constant;
        self
    }

    pub fn minus(self, other: &LinExpr) -> Self {
        self.plus(&other.clone().scale(-1))
    }

    pub fn scale(mut self, k: i64) -> Self {
        if k == 0 {
            return LinExpr::default();
        }
        self.coeffs.values_mut().for_each(|a| *a *= k);
        self.constant *= k;
        self
    }

    pub fn add_const(mut self, c: i64) -> Self {
        self.constant += c;
        self
    }

    fn atom(self, kind: AtomKind) -> LinearAtom {
        LinearAtom { coeffs: self.coeffs, constant: self.constant, kind }
    }

    /// `self = 0`
    pub fn eq0(self) -> LinearAtom {
        self.atom(AtomKind::Eq)
    }

    /// `self <= 0`
    pub fn le0(self) -> LinearAtom {
        self.atom(AtomKind::Le)
    }

    /// `modulus | self`
    pub fn dvd(self, modulus: u64) -> LinearAtom {
        assert!(modulus >= 1);
        self.atom(AtomKind::Dvd(modulus))
    }

    /// `l <= r`
    pub fn le(l: LinExpr, r: &LinExpr) -> LinearAtom {
        l.minus(r).le0()
    }

    /// `l = r`
    pub fn equal(l: LinExpr, r: &LinExpr) -> LinearAtom {
        l.minus(r).eq0()
    }
}

pub type LiaFormula = Formula<LinearAtom>;

pub type IntModel = BTreeMap<String, i64>;

/// A conjunction of linear atoms plus non-negativity constraints.
#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct LIAProblem {
    pub atoms: Vec<LinearAtom>,
    pub nonneg: BTreeSet<String>,
}

impl LIAProblem {
    pub fn new(atoms: Vec<LinearAtom>) -> Self {
        LIAProblem { atoms, nonneg: BTreeSet::new() }
    }

    pub fn vars(&self) -> BTreeSet<String> {
        let mut out: BTreeSet<String> = self.nonneg.clone();
        for a in &self.atoms {
            out.extend(a.vars().cloned());
        }
        out
    }

    pub fn holds(&self, m: &IntModel) -> bool {
        self.atoms.iter().all(|a| a.eval(m)) && self.nonneg.iter().all(|v| *m.get(v).unwrap_or(&0) >= 0)
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum LiaResult {
    Sat(IntModel),
    Unsat,
    Unknown(String),
}

impl LiaResult {
    pub fn is_sat(&self) -> bool {
        matches!(self, LiaResult::Sat(_))
    }
}

#[derive(Debug, Clone, Copy)]
pub struct LiaLimits {
    pub node_limit: usize,
}

impl Default for LiaLimits {
    fn default() -> Self {
        LiaLimits { node_limit: DEFAULT_NODE_LIMIT }
    }
}

/// Decides a conjunction of linear atoms over the integers.
pub fn lia_sat(p: &LIAProblem) -> LiaResult {
    lia_sat_with(p, LiaLimits::default())
}

pub fn lia_sat_with(p: &LIAProblem, limits: LiaLimits) -> LiaResult {
    for a in &p.atoms {
        let too_big = |x: i64| x.unsigned_abs() > MAX_COEFFICIENT as u64;
        if a.coeffs.values().any(|&c| too_big(c)) || too_big(a.constant) {
            return LiaResult::Unknown(format!("coefficient out of range in {a}"));
        }
    }
    match Conjunction::build(p).solve(limits) {
        Outcome::Sat(values) => {
            let names: Vec<String> = p.vars().into_iter().collect();
            let mut model = IntModel::new();
            for (name, v) in names.iter().zip(values) {
                match v.to_i64() {
                    Some(x) => {
                        model.insert(name.clone(), x);
                    }
                    None => return LiaResult::Unknown(format!("value of {name} exceeds 64 bits")),
                }
            }
            if !p.holds(&model) {
                log::error!("integer model failed re-evaluation");
                return LiaResult::Unknown("model re-check failed".into());
            }
            LiaResult::Sat(model)
        }
        Outcome::Unsat => LiaResult::Unsat,
        Outcome::Unknown(why) => LiaResult::Unknown(why),
    }
}

/// Rewrites negated atoms into positive ones.
///
/// `¬(e <= 0)` becomes `1 - e <= 0`, `¬(e = 0)` the split `e + 1 <= 0 ∨
/// 1 - e <= 0`, and `¬(m | e)` the bounded remainder `1 <= e - m·q <= m - 1`
/// over a fresh quotient named `dvd!N`.
pub fn positive_form(f: &LiaFormula) -> LiaFormula {
    let mut fresh = 0usize;
    rewrite_negations(&to_nnf(f), &mut fresh)
}

fn rewrite_negations(f: &LiaFormula, fresh: &mut usize) -> LiaFormula {
    match f {
        Formula::Atom(_) => f.clone(),
        Formula::Not(g) => match &**g {
            Formula::Atom(a) => negate_atom(a, fresh),
            _ => unreachable!("input is in negation normal form"),
        },
        Formula::And(cs) => Formula::and(cs.iter().map(|c| rewrite_negations(c, fresh))),
        Formula::Or(cs) => Formula::or(cs.iter().map(|c| rewrite_negations(c, fresh))),
    }
}

fn negate_atom(a: &LinearAtom, fresh: &mut usize) -> LiaFormula {
    let e = LinExpr { coeffs: a.coeffs.clone(), constant: a.constant };
    match a.kind {
        AtomKind::Le => Formula::Atom(e.scale(-1).add_const(1).le0()),
        AtomKind::Eq => Formula::or([
            Formula::Atom(e.clone().add_const(1).le0()),
            Formula::Atom(e.scale(-1).add_const(1).le0()),
        ]),
        AtomKind::Dvd(1) => Formula::ff(),
        AtomKind::Dvd(m) => {
            let q = format!("dvd!{}", *fresh);
            *fresh += 1;
            let r = e.minus(&LinExpr::term(m as i64, q));
            Formula::and([
                Formula::Atom(r.clone().scale(-1).add_const(1).le0()),
                Formula::Atom(r.add_const(1 - m as i64).le0()),
            ])
        }
    }
}

/// Decides `base ∧ f` by streaming the DNF of `f`.
pub fn lia_sat_formula(f: &LiaFormula, base: &LIAProblem) -> LiaResult {
    lia_sat_formula_with(f, base, LiaLimits::default())
}

pub fn lia_sat_formula_with(f: &LiaFormula, base: &LIAProblem, limits: LiaLimits) -> LiaResult {
    let mut unknown = None;
    for clause in to_dnf(&positive_form(f)) {
        let mut p = base.clone();
        p.atoms.extend(clause.literals.into_iter().map(|l| l.atom));
        match lia_sat_with(&p, limits) {
            LiaResult::Sat(mut m) => {
                m.retain(|k, _| !k.contains('!'));
                return LiaResult::Sat(m);
            }
            LiaResult::Unsat => {}
            LiaResult::Unknown(why) => unknown = Some(why),
        }
    }
    match unknown {
        Some(why) => LiaResult::Unknown(why),
        None => LiaResult::Unsat,
    }
}

// ---------------------------------------------------------------------------
// Conjunction solver

type Int = BigInt;
type Rat = BigRational;

/// `Σ coeffs[v]·v + constant` over variable ids.
#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord)]
struct Lin {
    coeffs: BTreeMap<usize, Int>,
    constant: Int,
}

impl Lin {
    fn var(v: usize) -> Self {
        Lin { coeffs: [(v, Int::one())].into_iter().collect(), constant: Int::zero() }
    }

    fn add_scaled(&mut self, k: &Int, other: &Lin) {
        for (v, a) in &other.coeffs {
            let e = self.coeffs.entry(*v).or_insert_with(Int::zero);
            *e += k * a;
            if e.is_zero() {
                self.coeffs.remove(v);
            }
        }
        self.constant += k * &other.constant;
    }

    fn substitute(&mut self, v: usize, by: &Lin) {
        if let Some(k) = self.coeffs.remove(&v) {
            self.add_scaled(&k, by);
        }
    }

    fn gcd(&self) -> Int {
        self.coeffs.values().fold(Int::zero(), |g, a| g.gcd(a))
    }

    fn eval(&self, values: &[Int]) -> Int {
        let mut total = self.constant.clone();
        for (v, a) in &self.coeffs {
            total += a * &values[*v];
        }
        total
    }
}

enum Outcome {
    Sat(Vec<Int>),
    Unsat,
    Unknown(String),
}

struct Conjunction {
    originals: usize,
    next_var: usize,
    eqs: Vec<Lin>,
    // Each entry means `lin <= 0`.
    les: Vec<Lin>,
    defs: Vec<Lin>,
}

impl Conjunction {
    fn build(p: &LIAProblem) -> Self {
        let names: Vec<String> = p.vars().into_iter().collect();
        let id: BTreeMap<&str, usize> = names.iter().enumerate().map(|(i, n)| (n.as_str(), i)).collect();
        let mut c = Conjunction {
            originals: names.len(),
            next_var: names.len(),
            eqs: Vec::new(),
            les: Vec::new(),
            defs: (0..names.len()).map(Lin::var).collect(),
        };
        for a in &p.atoms {
            let lin = Lin {
                coeffs: a
                    .coeffs
                    .iter()
                    .filter(|(_, k)| **k != 0)
                    .map(|(v, k)| (id[v.as_str()], Int::from(*k)))
                    .collect(),
                constant: Int::from(a.constant),
            };
            match a.kind {
                AtomKind::Eq => c.eqs.push(lin),
                AtomKind::Le => c.les.push(lin),
                AtomKind::Dvd(1) => {}
                AtomKind::Dvd(m) => {
                    let q = c.fresh();
                    let mut lin = lin;
                    lin.coeffs.insert(q, -Int::from(m));
                    c.eqs.push(lin);
                }
            }
        }
        for v in &p.nonneg {
            let mut lin = Lin::var(id[v.as_str()]);
            lin.coeffs.insert(id[v.as_str()], -Int::one());
            c.les.push(lin);
        }
        c
    }

    fn fresh(&mut self) -> usize {
        self.next_var += 1;
        self.next_var - 1
    }

    fn substitute(&mut self, v: usize, by: &Lin) {
        for l in self.eqs.iter_mut().chain(self.les.iter_mut()).chain(self.defs.iter_mut()) {
            l.substitute(v, by);
        }
    }

    fn eliminate_equalities(&mut self) -> bool {
        while let Some(mut e) = self.eqs.pop() {
            if e.coeffs.is_empty() {
                if !e.constant.is_zero() {
                    return false;
                }
                continue;
            }
            let g = e.gcd();
            if !(&e.constant % &g).is_zero() {
                return false;
            }
            if !g.is_one() {
                e.coeffs.values_mut().for_each(|a| *a /= &g);
                e.constant /= &g;
            }
            if let Some((&v, a)) = e.coeffs.iter().find(|(_, a)| a.abs().is_one()) {
                // v = -(e - a·v) / a
                let a = a.clone();
                let mut by = e.clone();
                by.coeffs.remove(&v);
                let k = -a; // a = ±1, so 1/a = a and -1/a = -a
                let by = Lin {
                    coeffs: by.coeffs.into_iter().map(|(w, c)| (w, c * &k)).collect(),
                    constant: by.constant * &k,
                };
                self.substitute(v, &by);
                continue;
            }
            // Euclid step on the smallest coefficient and another variable.
            let (&vi, ai) = e.coeffs.iter().min_by(|x, y| x.1.abs().cmp(&y.1.abs()).then(x.0.cmp(y.0))).unwrap();
            let ai = ai.clone();
            let (&vj, aj) = e.coeffs.iter().find(|(v, _)| **v != vi).unwrap();
            let q = aj.div_floor(&ai);
            let fresh = self.fresh();
            // vi := fresh - q·vj
            let mut by = Lin::var(fresh);
            by.coeffs.insert(vj, -q);
            self.substitute(vi, &by);
            e.substitute(vi, &by);
            self.eqs.push(e);
        }
        true
    }

    fn solve(mut self, limits: LiaLimits) -> Outcome {
        if !self.eliminate_equalities() {
            return Outcome::Unsat;
        }
        // Tighten inequalities: Σ a·x + c <= 0 with g = gcd(a) becomes
        // Σ (a/g)·x + ceil(c/g) <= 0.
        let mut les = BTreeSet::new();
        for mut l in std::mem::take(&mut self.les) {
            if l.coeffs.is_empty() {
                if l.constant.is_positive() {
                    return Outcome::Unsat;
                }
                continue;
            }
            let g = l.gcd();
            if !g.is_one() {
                l.coeffs.values_mut().for_each(|a| *a /= &g);
                l.constant = l.constant.div_ceil(&g);
            }
            les.insert(l);
        }
        let vars: BTreeSet<usize> = les.iter().flat_map(|l| l.coeffs.keys().copied()).collect();
        let mut values = vec![Int::zero(); self.next_var];
        if !vars.is_empty() {
            let les: Vec<Lin> = les.into_iter().collect();
            match branch_and_bound(&vars.iter().copied().collect::<Vec<_>>(), &les, limits) {
                Outcome::Sat(vals) => {
                    for (v, x) in vars.iter().zip(vals) {
                        values[*v] = x;
                    }
                }
                other => return other,
            }
        }
        Outcome::Sat(self.defs[..self.originals].iter().map(|d| d.eval(&values)).collect())
    }
}

/// Classical bound on the magnitude of a minimal integer solution of a
/// system with `m` rows over `n` variables whose entries are bounded by `a`:
/// `n·(m·a)^(2m+1)`, evaluated on the standard-form system obtained by
/// splitting free variables and adding slacks.
fn small_solution_bound(n: usize, les: &[Lin]) -> Int {
    let mut a = Int::one();
    for l in les {
        for c in l.coeffs.values().chain(std::iter::once(&l.constant)) {
            if c.abs() > a {
                a = c.abs();
            }
        }
    }
    let m = les.len().max(1);
    let cols = 2 * n + m;
    let base = Int::from(m) * a;
    Int::from(cols) * num_traits::pow(base, 2 * m + 1)
}

fn branch_and_bound(vars: &[usize], les: &[Lin], limits: LiaLimits) -> Outcome {
    let pos: BTreeMap<usize, usize> = vars.iter().enumerate().map(|(i, v)| (*v, i)).collect();
    let n = vars.len();
    let bound = Rat::from_integer(small_solution_bound(n, les));
    let mut root = Simplex::new(n);
    for j in 0..n {
        root.lower[j] = Some(-bound.clone());
        root.upper[j] = Some(bound.clone());
    }
    for l in les {
        if l.coeffs.len() == 1 {
            // a·x + c <= 0 is a bound on x.
            let (v, a) = l.coeffs.iter().next().unwrap();
            let j = pos[v];
            let rhs = -&l.constant;
            if a.is_positive() {
                root.tighten_upper(j, Rat::from_integer(rhs.div_floor(a)));
            } else {
                root.tighten_lower(j, Rat::from_integer(rhs.div_ceil(a)));
            }
            continue;
        }
        let row: Vec<(usize, Rat)> = l.coeffs.iter().map(|(v, a)| (pos[v], Rat::from_integer(a.clone()))).collect();
        root.add_row(&row, None, Some(Rat::from_integer(-&l.constant)));
    }
    for j in 0..n {
        if root.infeasible_bounds(j) {
            return Outcome::Unsat;
        }
    }
    root.fix_nonbasic();

    let mut stack = vec![root];
    let mut nodes = 0usize;
    while let Some(mut s) = stack.pop() {
        nodes += 1;
        if nodes > limits.node_limit {
            return Outcome::Unknown(format!("branch and bound exceeded {} nodes", limits.node_limit));
        }
        if !s.check() {
            continue;
        }
        // Most fractional structural variable; ties broken by id.
        let half = Rat::new(Int::one(), Int::from(2));
        let mut best: Option<(usize, Rat)> = None;
        for j in 0..n {
            let v = &s.value[j];
            if v.is_integer() {
                continue;
            }
            let frac = v - v.floor();
            let dist = (&frac - &half).abs();
            if best.as_ref().map_or(true, |(_, d)| dist < *d) {
                best = Some((j, dist));
            }
        }
        match best {
            None => return Outcome::Sat(s.value[..n].iter().map(|v| v.to_integer()).collect()),
            Some((j, _)) => {
                let v = s.value[j].clone();
                let mut up = s.clone();
                up.tighten_lower(j, v.ceil());
                s.tighten_upper(j, v.floor());
                // Explore the floor branch first.
                if !up.infeasible_bounds(j) {
                    up.fix_nonbasic();
                    stack.push(up);
                }
                if !s.infeasible_bounds(j) {
                    s.fix_nonbasic();
                    stack.push(s);
                }
            }
        }
    }
    Outcome::Unsat
}

/// Bounded-variable simplex in the style used by SMT solvers: every row
/// defines a basic variable as a combination of non-basic ones, and bounds
/// live on variables.
#[derive(Clone)]
struct Simplex {
    // row -> (basic variable, dense coefficients over all variables)
    rows: Vec<(usize, Vec<Rat>)>,
    row_of: Vec<Option<usize>>,
    lower: Vec<Option<Rat>>,
    upper: Vec<Option<Rat>>,
    value: Vec<Rat>,
}

impl Simplex {
    fn new(structural: usize) -> Self {
        Simplex {
            rows: Vec::new(),
            row_of: vec![None; structural],
            lower: vec![None; structural],
            upper: vec![None; structural],
            value: vec![Rat::zero(); structural],
        }
    }

    fn add_row(&mut self, coeffs: &[(usize, Rat)], lower: Option<Rat>, upper: Option<Rat>) {
        let slack = self.value.len();
        for (_, row) in &mut self.rows {
            row.push(Rat::zero());
        }
        self.row_of.push(Some(self.rows.len()));
        self.lower.push(lower);
        self.upper.push(upper);
        let width = slack + 1;
        let mut row = vec![Rat::zero(); width];
        let mut value = Rat::zero();
        for (j, a) in coeffs {
            row[*j] = a.clone();
            value += a * &self.value[*j];
        }
        self.value.push(value);
        self.rows.push((slack, row));
    }

    fn tighten_lower(&mut self, j: usize, b: Rat) {
        if self.lower[j].as_ref().map_or(true, |l| b > *l) {
            self.lower[j] = Some(b);
        }
    }

    fn tighten_upper(&mut self, j: usize, b: Rat) {
        if self.upper[j].as_ref().map_or(true, |u| b < *u) {
            self.upper[j] = Some(b);
        }
    }

    fn infeasible_bounds(&self, j: usize) -> bool {
        matches!((&self.lower[j], &self.upper[j]), (Some(l), Some(u)) if l > u)
    }

    /// Moves non-basic variables back inside their bounds.
    fn fix_nonbasic(&mut self) {
        for j in 0..self.value.len() {
            if self.row_of[j].is_some() {
                continue;
            }
            if let Some(l) = self.lower[j].clone() {
                if self.value[j] < l {
                    self.update(j, l);
                    continue;
                }
            }
            if let Some(u) = self.upper[j].clone() {
                if self.value[j] > u {
                    self.update(j, u);
                }
            }
        }
    }

    fn update(&mut self, j: usize, v: Rat) {
        let delta = &v - &self.value[j];
        for (b, row) in &self.rows {
            if !row[j].is_zero() {
                self.value[*b] += &row[j] * &delta;
            }
        }
        self.value[j] = v;
    }

    fn pivot(&mut self, r: usize, j: usize) {
        let (b, row) = self.rows[r].clone();
        let a = row[j].clone();
        // b = a·j + rest  =>  j = (b - rest) / a
        let mut new_row: Vec<Rat> = row.iter().map(|c| -c / &a).collect();
        new_row[j] = Rat::zero();
        new_row[b] = Rat::one() / &a;
        for (k, (_, other)) in self.rows.iter_mut().enumerate() {
            if k == r || other[j].is_zero() {
                continue;
            }
            let c = std::mem::take(&mut other[j]);
            for (x, y) in other.iter_mut().zip(new_row.iter()) {
                if !y.is_zero() {
                    *x += &c * y;
                }
            }
        }
        self.rows[r] = (j, new_row);
        self.row_of[b] = None;
        self.row_of[j] = Some(r);
    }

    fn pivot_and_update(&mut self, r: usize, j: usize, v: Rat) {
        let b = self.rows[r].0;
        let theta = (&v - &self.value[b]) / &self.rows[r].1[j];
        self.value[b] = v;
        self.value[j] += &theta;
        for (k, (bk, row)) in self.rows.iter().enumerate() {
            if k != r && !row[j].is_zero() {
                self.value[*bk] += &row[j] * &theta;
            }
        }
        self.pivot(r, j);
    }

    /// Restores feasibility of basic variables using Bland's rule.
    fn check(&mut self) -> bool {
        loop {
            let mut violated: Option<(usize, usize, bool)> = None;
            for (r, (b, _)) in self.rows.iter().enumerate() {
                let low = self.lower[*b].as_ref().map_or(false, |l| self.value[*b] < *l);
                let high = self.upper[*b].as_ref().map_or(false, |u| self.value[*b] > *u);
                if (low || high) && violated.map_or(true, |(_, vb, _)| *b < vb) {
                    violated = Some((r, *b, low));
                }
            }
            let Some((r, b, low)) = violated else { return true };
            let row = &self.rows[r].1;
            let mut entering = None;
            for (j, a) in row.iter().enumerate() {
                if a.is_zero() || self.row_of[j].is_some() {
                    continue;
                }
                let can_increase = self.upper[j].as_ref().map_or(true, |u| self.value[j] < *u);
                let can_decrease = self.lower[j].as_ref().map_or(true, |l| self.value[j] > *l);
                let ok = if low {
                    (a.is_positive() && can_increase) || (a.is_negative() && can_decrease)
                } else {
                    (a.is_negative() && can_increase) || (a.is_positive() && can_decrease)
                };
                if ok {
                    entering = Some(j);
                    break;
                }
            }
            let Some(j) = entering else { return false };
            let target = if low { self.lower[b].clone().unwrap() } else { self.upper[b].clone().unwrap() };
            self.pivot_and_update(r, j, target);
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn le(l: LinExpr, r: LinExpr) -> LinearAtom {
        LinExpr::le(l, &r)
    }

    fn x() -> LinExpr {
        LinExpr::var("x")
    }

    fn y() -> LinExpr {
        LinExpr::var("y")
    }

    fn k(c: i64) -> LinExpr {
        LinExpr::constant(c)
    }

    #[test]
    fn parity_unsat() {
        let p = LIAProblem::new(vec![LinExpr::equal(x().scale(2), &k(3))]);
        assert_eq!(lia_sat(&p), LiaResult::Unsat);
    }

    #[test]
    fn sum_bound_unsat() {
        let p = LIAProblem::new(vec![
            LinExpr::equal(x().plus(&y()), &k(5)),
            le(k(3), x()),
            le(k(3), y()),
        ]);
        assert_eq!(lia_sat(&p), LiaResult::Unsat);
    }

    #[test]
    fn divisibility_in_range() {
        // 3 | x + 1 with 0 <= x <= 4: only x = 2.
        let p = LIAProblem::new(vec![x().add_const(1).dvd(3), le(k(0), x()), le(x(), k(4))]);
        let expected: IntModel = [("x".to_string(), 2)].into_iter().collect();
        assert_eq!(lia_sat(&p), LiaResult::Sat(expected));
    }

    #[test]
    fn euclid_elimination() {
        // 6x + 10y = 8 has integer solutions; 6x + 10y = 7 does not.
        let p = LIAProblem::new(vec![LinExpr::equal(x().scale(6).plus(&y().scale(10)), &k(8))]);
        assert!(lia_sat(&p).is_sat());
        let q = LIAProblem::new(vec![LinExpr::equal(x().scale(6).plus(&y().scale(10)), &k(7))]);
        assert_eq!(lia_sat(&q), LiaResult::Unsat);
        let r = LIAProblem::new(vec![
            LinExpr::equal(x().scale(5).plus(&y().scale(7)), &k(3)),
            le(k(0), x()),
            le(k(0), y()),
        ]);
        // 5x + 7y = 3 has no non-negative solution.
        assert_eq!(lia_sat(&r), LiaResult::Unsat);
    }

    #[test]
    fn integer_gap_between_rationals() {
        // 1 <= 3x - 3y <= 2 has rational but no integer solutions.
        let e = x().scale(3).minus(&y().scale(3));
        let p = LIAProblem::new(vec![le(k(1), e.clone()), le(e, k(2))]);
        assert_eq!(lia_sat(&p), LiaResult::Unsat);
        // 2x + 2y + 4z, etc.: branch and bound needed.
        let z = LinExpr::var("z");
        let p = LIAProblem::new(vec![
            le(k(3), x().scale(2).plus(&y().scale(3))),
            le(x().scale(2).plus(&y().scale(3)), k(3)),
            le(k(1), z.clone().scale(4).minus(&x())),
            le(z.scale(4).minus(&x()), k(2)),
        ]);
        let r = lia_sat(&p);
        assert!(r.is_sat(), "{r:?}");
    }

    #[test]
    fn nonneg_variables() {
        let mut p = LIAProblem::new(vec![LinExpr::equal(x().add_const(1), &k(0))]);
        assert!(lia_sat(&p).is_sat());
        p.nonneg.insert("x".into());
        assert_eq!(lia_sat(&p), LiaResult::Unsat);
    }

    #[test]
    fn formula_examples() {
        let f = Formula::and([
            Formula::or([Formula::Atom(le(k(1), x())), Formula::Atom(le(x(), k(-1)))]),
            Formula::Atom(LinExpr::equal(x(), &k(0))),
        ]);
        assert_eq!(lia_sat_formula(&f, &LIAProblem::default()), LiaResult::Unsat);
        let g = Formula::and([
            Formula::not(Formula::Atom(LinExpr::equal(x(), &k(0)))),
            Formula::Atom(le(k(0), x())),
            Formula::Atom(le(x(), k(1))),
        ]);
        let expected: IntModel = [("x".to_string(), 1)].into_iter().collect();
        assert_eq!(lia_sat_formula(&g, &LIAProblem::default()), LiaResult::Sat(expected));
    }

    #[test]
    fn negated_divisibility() {
        // ¬(2 | x) ∧ 0 <= x <= 1  =>  x = 1
        let f = Formula::and([
            Formula::not(Formula::Atom(x().dvd(2))),
            Formula::Atom(le(k(0), x())),
            Formula::Atom(le(x(), k(1))),
        ]);
        let expected: IntModel = [("x".to_string(), 1)].into_iter().collect();
        assert_eq!(lia_sat_formula(&f, &LIAProblem::default()), LiaResult::Sat(expected));
        let never = Formula::not(Formula::Atom(x().dvd(1)));
        assert_eq!(lia_sat_formula(&never, &LIAProblem::default()), LiaResult::Unsat);
    }

    #[test]
    fn coefficient_bound() {
        let p = LIAProblem::new(vec![LinExpr::term(1 << 40, "x").eq0()]);
        assert!(matches!(lia_sat(&p), LiaResult::Unknown(_)));
    }
}
