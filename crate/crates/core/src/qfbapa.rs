//! Boolean algebra of finite sets with linear cardinality constraints.
//!
//! Set atoms are first reduced to cardinality atoms (`A ⊆ B` becomes
//! `|A ∩ Bᶜ| = 0`), every distinct cardinality term gets an integer
//! variable, and each such variable is tied to the sum of the Venn regions
//! inside its set expression. The resulting integer problem is solved per
//! DNF clause. Before solving a clause, cardinality variables it forces to
//! zero remove whole families of regions, and regions that no remaining
//! cardinality can tell apart share one counter.

use std::collections::{BTreeMap, BTreeSet};
use std::fmt;

use crate::formula::{to_dnf, Formula, SymbolSize};
use crate::presburger::{
    lia_sat_formula_with, lia_sat_with, positive_form, AtomKind, LIAProblem, LiaFormula, LiaLimits, LiaResult,
    LinExpr, LinearAtom,
};
use crate::structures::capacity;

/// Name of the universe-cardinality variable.
pub const MAXC_VAR: &str = "maxc!";

pub const DEFAULT_MAX_SETS: usize = 16;

#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum SetExpr {
    Var(String),
    Empty,
    Universe,
    Union(Box<SetExpr>, Box<SetExpr>),
    Inter(Box<SetExpr>, Box<SetExpr>),
    Complement(Box<SetExpr>),
}

impl SetExpr {
    pub fn var(n: impl Into<String>) -> Self {
        SetExpr::Var(n.into())
    }

    pub fn union(a: SetExpr, b: SetExpr) -> Self {
        SetExpr::Union(Box::new(a), Box::new(b))
    }

    pub fn inter(a: SetExpr, b: SetExpr) -> Self {
        SetExpr::Inter(Box::new(a), Box::new(b))
    }

    pub fn compl(a: SetExpr) -> Self {
        SetExpr::Complement(Box::new(a))
    }

    /// Union of all `parts`; empty for no parts.
    pub fn union_all(parts: impl IntoIterator<Item = SetExpr>) -> Self {
        parts.into_iter().reduce(SetExpr::union).unwrap_or(SetExpr::Empty)
    }

    /// Intersection of all `parts`; the universe for no parts.
    pub fn inter_all(parts: impl IntoIterator<Item = SetExpr>) -> Self {
        parts.into_iter().reduce(SetExpr::inter).unwrap_or(SetExpr::Universe)
    }

    pub fn collect_vars(&self, out: &mut BTreeSet<String>) {
        match self {
            SetExpr::Var(v) => {
                out.insert(v.clone());
            }
            SetExpr::Empty | SetExpr::Universe => {}
            SetExpr::Union(a, b) | SetExpr::Inter(a, b) => {
                a.collect_vars(out);
                b.collect_vars(out);
            }
            SetExpr::Complement(a) => a.collect_vars(out),
        }
    }

    /// Membership of a point whose membership in each variable is given by
    /// `bit`; `None` means undetermined (three-valued).
    pub fn member(&self, bit: &dyn Fn(&str) -> Option<bool>) -> Option<bool> {
        match self {
            SetExpr::Var(v) => bit(v),
            SetExpr::Empty => Some(false),
            SetExpr::Universe => Some(true),
            SetExpr::Union(a, b) => match (a.member(bit), b.member(bit)) {
                (Some(true), _) | (_, Some(true)) => Some(true),
                (Some(false), Some(false)) => Some(false),
                _ => None,
            },
            SetExpr::Inter(a, b) => match (a.member(bit), b.member(bit)) {
                (Some(false), _) | (_, Some(false)) => Some(false),
                (Some(true), Some(true)) => Some(true),
                _ => None,
            },
            SetExpr::Complement(a) => a.member(bit).map(|x| !x),
        }
    }

    /// Direct evaluation over the universe `0..universe`.
    pub fn eval(&self, universe: usize, sets: &BTreeMap<String, BTreeSet<usize>>) -> BTreeSet<usize> {
        match self {
            SetExpr::Var(v) => sets.get(v).cloned().unwrap_or_default(),
            SetExpr::Empty => BTreeSet::new(),
            SetExpr::Universe => (0..universe).collect(),
            SetExpr::Union(a, b) => a.eval(universe, sets).union(&b.eval(universe, sets)).copied().collect(),
            SetExpr::Inter(a, b) => a.eval(universe, sets).intersection(&b.eval(universe, sets)).copied().collect(),
            SetExpr::Complement(a) => {
                let inner = a.eval(universe, sets);
                (0..universe).filter(|i| !inner.contains(i)).collect()
            }
        }
    }
}

impl fmt::Display for SetExpr {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            SetExpr::Var(v) => write!(f, "{v}"),
            SetExpr::Empty => write!(f, "empty"),
            SetExpr::Universe => write!(f, "univ"),
            SetExpr::Union(a, b) => write!(f, "(union {a} {b})"),
            SetExpr::Inter(a, b) => write!(f, "(inter {a} {b})"),
            SetExpr::Complement(a) => write!(f, "(compl {a})"),
        }
    }
}

impl SymbolSize for SetExpr {
    fn symbol_size(&self) -> usize {
        match self {
            SetExpr::Var(_) | SetExpr::Empty | SetExpr::Universe => 1,
            SetExpr::Union(a, b) | SetExpr::Inter(a, b) => 1 + a.symbol_size() + b.symbol_size(),
            SetExpr::Complement(a) => 1 + a.symbol_size(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum PATerm {
    IntVar(String),
    Const(i64),
    MaxC,
    Plus(Box<PATerm>, Box<PATerm>),
    Scale(i64, Box<PATerm>),
    Card(SetExpr),
}

impl PATerm {
    pub fn var(n: impl Into<String>) -> Self {
        PATerm::IntVar(n.into())
    }

    pub fn card(s: SetExpr) -> Self {
        PATerm::Card(s)
    }

    pub fn plus(a: PATerm, b: PATerm) -> Self {
        PATerm::Plus(Box::new(a), Box::new(b))
    }

    pub fn scale(k: i64, t: PATerm) -> Self {
        PATerm::Scale(k, Box::new(t))
    }

    fn int_vars(&self, out: &mut BTreeSet<String>) {
        match self {
            PATerm::IntVar(v) => {
                out.insert(v.clone());
            }
            PATerm::Plus(a, b) => {
                a.int_vars(out);
                b.int_vars(out);
            }
            PATerm::Scale(_, t) => t.int_vars(out),
            _ => {}
        }
    }

    fn set_exprs<'a>(&'a self, out: &mut Vec<&'a SetExpr>) {
        match self {
            PATerm::Card(s) => out.push(s),
            PATerm::Plus(a, b) => {
                a.set_exprs(out);
                b.set_exprs(out);
            }
            PATerm::Scale(_, t) => t.set_exprs(out),
            _ => {}
        }
    }

    fn eval(&self, m: &SetModel) -> Option<i128> {
        match self {
            PATerm::IntVar(v) => Some(*m.ints.get(v)? as i128),
            PATerm::Const(c) => Some(*c as i128),
            PATerm::MaxC => Some(m.maxc as i128),
            PATerm::Plus(a, b) => a.eval(m)?.checked_add(b.eval(m)?),
            PATerm::Scale(k, t) => (*k as i128).checked_mul(t.eval(m)?),
            PATerm::Card(s) => Some(s.eval(m.maxc, &m.sets).len() as i128),
        }
    }
}

impl fmt::Display for PATerm {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            PATerm::IntVar(v) => write!(f, "{v}"),
            PATerm::Const(c) => write!(f, "{c}"),
            PATerm::MaxC => write!(f, "maxc"),
            PATerm::Plus(a, b) => write!(f, "(+ {a} {b})"),
            PATerm::Scale(k, t) => write!(f, "(* {k} {t})"),
            PATerm::Card(s) => write!(f, "(card {s})"),
        }
    }
}

impl SymbolSize for PATerm {
    fn symbol_size(&self) -> usize {
        match self {
            PATerm::IntVar(_) | PATerm::Const(_) | PATerm::MaxC => 1,
            PATerm::Plus(a, b) => 1 + a.symbol_size() + b.symbol_size(),
            PATerm::Scale(_, t) => 2 + t.symbol_size(),
            PATerm::Card(s) => 1 + s.symbol_size(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum BapaAtom {
    SetEq(SetExpr, SetExpr),
    Subset(SetExpr, SetExpr),
    IntEq(PATerm, PATerm),
    IntLe(PATerm, PATerm),
    Dvd(u64, PATerm),
}

impl BapaAtom {
    fn set_vars(&self, out: &mut BTreeSet<String>) {
        match self {
            BapaAtom::SetEq(a, b) | BapaAtom::Subset(a, b) => {
                a.collect_vars(out);
                b.collect_vars(out);
            }
            BapaAtom::IntEq(a, b) | BapaAtom::IntLe(a, b) => {
                let mut exprs = Vec::new();
                a.set_exprs(&mut exprs);
                b.set_exprs(&mut exprs);
                exprs.iter().for_each(|s| s.collect_vars(out));
            }
            BapaAtom::Dvd(_, t) => {
                let mut exprs = Vec::new();
                t.set_exprs(&mut exprs);
                exprs.iter().for_each(|s| s.collect_vars(out));
            }
        }
    }

    fn int_vars(&self, out: &mut BTreeSet<String>) {
        match self {
            BapaAtom::IntEq(a, b) | BapaAtom::IntLe(a, b) => {
                a.int_vars(out);
                b.int_vars(out);
            }
            BapaAtom::Dvd(_, t) => t.int_vars(out),
            _ => {}
        }
    }

    /// Direct set-theoretic evaluation.
    pub fn eval(&self, m: &SetModel) -> Option<bool> {
        let u = m.maxc;
        Some(match self {
            BapaAtom::SetEq(a, b) => a.eval(u, &m.sets) == b.eval(u, &m.sets),
            BapaAtom::Subset(a, b) => a.eval(u, &m.sets).is_subset(&b.eval(u, &m.sets)),
            BapaAtom::IntEq(a, b) => a.eval(m)? == b.eval(m)?,
            BapaAtom::IntLe(a, b) => a.eval(m)? <= b.eval(m)?,
            BapaAtom::Dvd(k, t) => t.eval(m)? % (*k as i128) == 0,
        })
    }
}

impl fmt::Display for BapaAtom {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            BapaAtom::SetEq(a, b) => write!(f, "(= {a} {b})"),
            BapaAtom::Subset(a, b) => write!(f, "(subset {a} {b})"),
            BapaAtom::IntEq(a, b) => write!(f, "(= {a} {b})"),
            BapaAtom::IntLe(a, b) => write!(f, "(<= {a} {b})"),
            BapaAtom::Dvd(k, t) => write!(f, "(dvd {k} {t})"),
        }
    }
}

impl SymbolSize for BapaAtom {
    fn symbol_size(&self) -> usize {
        match self {
            BapaAtom::SetEq(a, b) | BapaAtom::Subset(a, b) => 1 + a.symbol_size() + b.symbol_size(),
            BapaAtom::IntEq(a, b) | BapaAtom::IntLe(a, b) => 1 + a.symbol_size() + b.symbol_size(),
            BapaAtom::Dvd(_, t) => 2 + t.symbol_size(),
        }
    }
}

pub type QFBAPAFormula = Formula<BapaAtom>;

pub fn set_vars(f: &QFBAPAFormula) -> BTreeSet<String> {
    let mut out = BTreeSet::new();
    f.for_each_atom(&mut |a| a.set_vars(&mut out));
    out
}

pub fn int_vars(f: &QFBAPAFormula) -> BTreeSet<String> {
    let mut out = BTreeSet::new();
    f.for_each_atom(&mut |a| a.int_vars(&mut out));
    out
}

#[derive(Debug, Clone, PartialEq, Eq, Default)]
pub struct SetModel {
    pub maxc: usize,
    pub sets: BTreeMap<String, BTreeSet<usize>>,
    pub ints: BTreeMap<String, i64>,
}

impl SetModel {
    pub fn set(&self, name: &str) -> BTreeSet<usize> {
        self.sets.get(name).cloned().unwrap_or_default()
    }
}

/// Evaluates `f` under `m` by direct set semantics. Missing integer
/// variables make the evaluation fail.
pub fn eval_formula(f: &QFBAPAFormula, m: &SetModel) -> bool {
    f.eval_with(&mut |a: &BapaAtom| a.eval(m).ok_or(())).unwrap_or(false)
}

/// The universe cardinality: fixed, or solved for.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Maxc {
    Fixed(usize),
    Free,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum BapaResult {
    Sat(SetModel),
    Unsat,
    Unknown(String),
}

impl BapaResult {
    pub fn is_sat(&self) -> bool {
        matches!(self, BapaResult::Sat(_))
    }
}

#[derive(Debug, Clone, Copy)]
pub struct QfbapaOptions {
    /// Largest number of distinct set variables accepted.
    pub max_sets: usize,
    pub lia: LiaLimits,
}

impl Default for QfbapaOptions {
    fn default() -> Self {
        QfbapaOptions { max_sets: DEFAULT_MAX_SETS, lia: LiaLimits::default() }
    }
}

/// Replaces set equalities and inclusions by cardinality atoms.
pub fn normalize(f: &QFBAPAFormula) -> QFBAPAFormula {
    let empty_diff = |a: &SetExpr, b: &SetExpr| {
        Formula::Atom(BapaAtom::IntEq(
            PATerm::Card(SetExpr::inter(a.clone(), SetExpr::compl(b.clone()))),
            PATerm::Const(0),
        ))
    };
    f.map_atoms(&mut |a| match a {
        BapaAtom::SetEq(l, r) => Formula::and([empty_diff(l, r), empty_diff(r, l)]),
        BapaAtom::Subset(l, r) => empty_diff(l, r),
        other => Formula::Atom(other.clone()),
    })
}

/// A cardinality variable and the set expression it measures.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct CardDef {
    pub set: SetExpr,
    pub var: String,
}

fn card_var_name(i: usize) -> String {
    format!("card!{i}")
}

struct CardNamer {
    defs: Vec<CardDef>,
    index: BTreeMap<SetExpr, String>,
}

impl CardNamer {
    fn name(&mut self, s: &SetExpr) -> String {
        if *s == SetExpr::Universe {
            return MAXC_VAR.to_string();
        }
        if let Some(v) = self.index.get(s) {
            return v.clone();
        }
        let v = card_var_name(self.defs.len());
        self.index.insert(s.clone(), v.clone());
        self.defs.push(CardDef { set: s.clone(), var: v.clone() });
        v
    }

    fn term(&mut self, t: &PATerm) -> LinExpr {
        match t {
            PATerm::IntVar(v) => LinExpr::var(v.clone()),
            PATerm::Const(c) => LinExpr::constant(*c),
            PATerm::MaxC => LinExpr::var(MAXC_VAR),
            PATerm::Plus(a, b) => {
                let l = self.term(a);
                l.plus(&self.term(b))
            }
            PATerm::Scale(k, t) => self.term(t).scale(*k),
            PATerm::Card(s) => LinExpr::var(self.name(s)),
        }
    }
}

/// Replaces each distinct cardinality term by an integer variable. `|U|`
/// and `MAXC` share [`MAXC_VAR`], which is not listed among the
/// definitions.
pub fn introduce_card_vars(f: &QFBAPAFormula) -> (LiaFormula, Vec<CardDef>) {
    let mut namer = CardNamer { defs: Vec::new(), index: BTreeMap::new() };
    let g = f.map_atoms(&mut |a| {
        Formula::Atom(match a {
            BapaAtom::IntEq(l, r) => {
                let l = namer.term(l);
                LinExpr::equal(l, &namer.term(r))
            }
            BapaAtom::IntLe(l, r) => {
                let l = namer.term(l);
                LinExpr::le(l, &namer.term(r))
            }
            BapaAtom::Dvd(k, t) => namer.term(t).dvd(*k),
            BapaAtom::SetEq(..) | BapaAtom::Subset(..) => panic!("normalize before introducing cardinality variables"),
        })
    });
    (g, namer.defs)
}

pub fn region_var(r: usize) -> String {
    format!("region!{r}")
}

/// Bit of variable `i` (of `e`) in region `r`: variable 0 is the most
/// significant bit.
pub fn region_bit(r: usize, i: usize, e: usize) -> bool {
    r >> (e - 1 - i) & 1 == 1
}

fn region_contains(s: &SetExpr, r: usize, order: &BTreeMap<&str, usize>, e: usize) -> bool {
    s.member(&|v| Some(order.get(v).is_some_and(|&i| region_bit(r, i, e)))).unwrap()
}

/// The full Venn encoding: one non-negative counter per region, each
/// cardinality variable equal to the sum of the regions in its set, and
/// the counters summing to `MAXC`.
#[derive(Debug, Clone)]
pub struct VennSystem {
    pub formula: LiaFormula,
    pub base: LIAProblem,
    pub set_order: Vec<String>,
    pub regions: usize,
}

pub fn venn_expand(g: &LiaFormula, defs: &[CardDef], sets: &[String], maxc: Maxc) -> Result<VennSystem, String> {
    let e = sets.len();
    if e > DEFAULT_MAX_SETS {
        return Err(format!("{e} set variables exceed the cap of {DEFAULT_MAX_SETS}"));
    }
    let order: BTreeMap<&str, usize> = sets.iter().enumerate().map(|(i, s)| (s.as_str(), i)).collect();
    let regions = 1usize << e;
    let mut base = LIAProblem::default();
    for def in defs {
        let mut sum = LinExpr::var(def.var.clone());
        for r in 0..regions {
            if region_contains(&def.set, r, &order, e) {
                sum = sum.minus(&LinExpr::var(region_var(r)));
            }
        }
        base.atoms.push(sum.eq0());
    }
    let mut total = LinExpr::var(MAXC_VAR);
    for r in 0..regions {
        total = total.minus(&LinExpr::var(region_var(r)));
        base.nonneg.insert(region_var(r));
    }
    base.atoms.push(total.eq0());
    match maxc {
        Maxc::Fixed(n) => base.atoms.push(LinExpr::var(MAXC_VAR).add_const(-(n as i64)).eq0()),
        Maxc::Free => {
            base.nonneg.insert(MAXC_VAR.to_string());
        }
    }
    Ok(VennSystem { formula: g.clone(), base, set_order: sets.to_vec(), regions })
}

/// Solves the Venn system with every region outside `support` empty.
pub fn sparse_solve(sys: &VennSystem, support: &[usize]) -> LiaResult {
    let inside: BTreeSet<usize> = support.iter().copied().collect();
    let mut base = sys.base.clone();
    for r in 0..sys.regions {
        if !inside.contains(&r) {
            base.atoms.push(LinExpr::var(region_var(r)).eq0());
        }
    }
    lia_sat_formula_with(&sys.formula, &base, LiaLimits::default())
}

/// Solves the unrestricted Venn system.
pub fn venn_solve(sys: &VennSystem) -> LiaResult {
    lia_sat_formula_with(&sys.formula, &sys.base, LiaLimits::default())
}

/// Smallest support (by size, then lexicographically) admitting a
/// solution, found by iterative deepening.
pub fn minimal_support(sys: &VennSystem) -> Option<Vec<usize>> {
    for size in 0..=sys.regions {
        let mut combo: Vec<usize> = (0..size).collect();
        loop {
            if sparse_solve(sys, &combo).is_sat() {
                return Some(combo);
            }
            // next combination in lexicographic order
            let mut i = size;
            loop {
                if i == 0 {
                    break;
                }
                i -= 1;
                if combo[i] < sys.regions - size + i {
                    combo[i] += 1;
                    for j in i + 1..size {
                        combo[j] = combo[j - 1] + 1;
                    }
                    break;
                }
                if i == 0 {
                    i = usize::MAX;
                    break;
                }
            }
            if i == usize::MAX || size == 0 {
                break;
            }
        }
    }
    None
}

/// Decides `f` with the universe cardinality `maxc`.
pub fn qfbapa_sat(f: &QFBAPAFormula, maxc: Maxc) -> BapaResult {
    qfbapa_sat_with(f, maxc, &QfbapaOptions::default())
}

pub fn qfbapa_sat_with(f: &QFBAPAFormula, maxc: Maxc, opts: &QfbapaOptions) -> BapaResult {
    let sets: Vec<String> = set_vars(f).into_iter().collect();
    if sets.len() > opts.max_sets {
        return BapaResult::Unknown(format!("{} set variables exceed the cap of {}", sets.len(), opts.max_sets));
    }
    let ints = int_vars(f);
    let (g, defs) = introduce_card_vars(&normalize(f));
    let mut unknown = None;
    for clause in to_dnf(&positive_form(&g)) {
        let atoms: Vec<LinearAtom> = clause.literals.into_iter().map(|l| l.atom).collect();
        match solve_clause(atoms, &defs, &sets, maxc, opts) {
            BapaResult::Sat(mut m) => {
                for v in &ints {
                    m.ints.entry(v.clone()).or_insert(0);
                }
                m.ints.retain(|k, _| ints.contains(k));
                for s in &sets {
                    m.sets.entry(s.clone()).or_default();
                }
                if !eval_formula(f, &m) {
                    log::error!("set model failed re-evaluation");
                    return BapaResult::Unknown("model re-check failed".into());
                }
                return BapaResult::Sat(m);
            }
            BapaResult::Unsat => {}
            BapaResult::Unknown(why) => unknown = Some(why),
        }
    }
    match unknown {
        Some(why) => BapaResult::Unknown(why),
        None => BapaResult::Unsat,
    }
}

/// Cardinality variables a conjunction forces to zero, given that every
/// cardinality is non-negative.
fn forced_zero(atoms: &[LinearAtom]) -> BTreeSet<String> {
    let mut out = BTreeSet::new();
    for a in atoms {
        if a.coeffs.len() != 1 {
            continue;
        }
        let (v, &k) = a.coeffs.iter().next().unwrap();
        if !(v.starts_with("card!") || v == MAXC_VAR) {
            continue;
        }
        let zero = match a.kind {
            AtomKind::Eq => a.constant == 0,
            AtomKind::Le => k > 0 && a.constant >= 0,
            AtomKind::Dvd(_) => false,
        };
        if zero {
            out.insert(v.clone());
        }
    }
    out
}

fn solve_clause(atoms: Vec<LinearAtom>, defs: &[CardDef], sets: &[String], maxc: Maxc, opts: &QfbapaOptions) -> BapaResult {
    let mentioned: BTreeSet<&String> = atoms.iter().flat_map(|a| a.coeffs.keys()).collect();
    let live: Vec<&CardDef> = defs.iter().filter(|d| mentioned.contains(&d.var)).collect();
    let zero = forced_zero(&atoms);
    if zero.contains(MAXC_VAR) && matches!(maxc, Maxc::Fixed(n) if n > 0) {
        return BapaResult::Unsat;
    }
    // Region variables: only sets measured by a live cardinality matter.
    let mut relevant = BTreeSet::new();
    live.iter().for_each(|d| d.set.collect_vars(&mut relevant));
    let order: Vec<&String> = sets.iter().filter(|s| relevant.contains(*s)).collect();
    let zero_sets: Vec<&SetExpr> = live.iter().filter(|d| zero.contains(&d.var)).map(|d| &d.set).collect();
    let counted: Vec<&CardDef> = live.iter().copied().filter(|d| !zero.contains(&d.var)).collect();

    // Enumerate regions outside every forced-empty set, depth first.
    let limit = capacity();
    let mut columns: BTreeMap<Vec<bool>, usize> = BTreeMap::new();
    let mut visited = 0u64;
    let mut bits: Vec<Option<bool>> = vec![None; order.len()];
    let pos: BTreeMap<&str, usize> = order.iter().enumerate().map(|(i, s)| (s.as_str(), i)).collect();
    #[allow(clippy::too_many_arguments)]
    fn walk(
        depth: usize,
        bits: &mut Vec<Option<bool>>,
        pos: &BTreeMap<&str, usize>,
        zero_sets: &[&SetExpr],
        counted: &[&CardDef],
        columns: &mut BTreeMap<Vec<bool>, usize>,
        visited: &mut u64,
        limit: u64,
    ) -> bool {
        *visited += 1;
        if *visited > limit {
            return false;
        }
        let lookup = |v: &str| match pos.get(v) {
            Some(&i) => bits[i],
            None => Some(false),
        };
        if zero_sets.iter().any(|s| s.member(&lookup) == Some(true)) {
            return true;
        }
        if depth == bits.len() {
            let code = bits.iter().fold(0usize, |acc, b| acc << 1 | usize::from(b.unwrap()));
            let key: Vec<bool> = counted.iter().map(|d| d.set.member(&lookup).unwrap()).collect();
            columns.entry(key).or_insert(code);
            return true;
        }
        for b in [false, true] {
            bits[depth] = Some(b);
            if !walk(depth + 1, bits, pos, zero_sets, counted, columns, visited, limit) {
                return false;
            }
        }
        bits[depth] = None;
        true
    }
    if !walk(0, &mut bits, &pos, &zero_sets, &counted, &mut columns, &mut visited, limit) {
        return BapaResult::Unknown(format!("region enumeration exceeded {limit} nodes"));
    }

    let column_var = |j: usize| format!("column!{j}");
    let mut p = LIAProblem::new(atoms);
    let cols: Vec<(&Vec<bool>, &usize)> = columns.iter().collect();
    for (i, d) in counted.iter().enumerate() {
        let mut sum = LinExpr::var(d.var.clone());
        for (j, (key, _)) in cols.iter().enumerate() {
            if key[i] {
                sum = sum.minus(&LinExpr::var(column_var(j)));
            }
        }
        p.atoms.push(sum.eq0());
    }
    for d in live.iter().filter(|d| zero.contains(&d.var)) {
        p.atoms.push(LinExpr::var(d.var.clone()).eq0());
    }
    let mut total = LinExpr::var(MAXC_VAR);
    for j in 0..cols.len() {
        total = total.minus(&LinExpr::var(column_var(j)));
        p.nonneg.insert(column_var(j));
    }
    p.atoms.push(total.eq0());
    match maxc {
        Maxc::Fixed(n) => p.atoms.push(LinExpr::var(MAXC_VAR).add_const(-(n as i64)).eq0()),
        Maxc::Free => {
            p.nonneg.insert(MAXC_VAR.to_string());
        }
    }
    match lia_sat_with(&p, opts.lia) {
        LiaResult::Sat(m) => {
            let universe = m[MAXC_VAR];
            if universe as u64 > capacity() {
                return BapaResult::Unknown(format!("universe of size {universe} too large to materialize"));
            }
            let counts: Vec<(usize, usize)> =
                cols.iter().enumerate().map(|(j, (_, &code))| (code, m[&column_var(j)] as usize)).collect();
            BapaResult::Sat(materialize(&order, &counts, universe as usize, m))
        }
        LiaResult::Unsat => BapaResult::Unsat,
        LiaResult::Unknown(why) => BapaResult::Unknown(why),
    }
}

/// Lays regions out as consecutive index blocks in increasing region code
/// (over `order`, first variable most significant).
fn materialize(order: &[&String], counts: &[(usize, usize)], universe: usize, ints: BTreeMap<String, i64>) -> SetModel {
    let e = order.len();
    let mut sorted: Vec<(usize, usize)> = counts.to_vec();
    sorted.sort();
    let mut sets: BTreeMap<String, BTreeSet<usize>> = order.iter().map(|s| ((*s).clone(), BTreeSet::new())).collect();
    let mut next = 0usize;
    for (code, count) in sorted {
        for i in 0..e {
            if region_bit(code, i, e) {
                sets.get_mut(order[i]).unwrap().extend(next..next + count);
            }
        }
        next += count;
    }
    debug_assert_eq!(next, universe);
    SetModel { maxc: universe, sets, ints }
}

/// Exhaustive search: every universe size in `universes`, every subset
/// assignment of the set variables and every integer assignment in
/// `int_range`. `cap` bounds the number of evaluated models.
pub fn brute_force_qfbapa(
    f: &QFBAPAFormula,
    universes: std::ops::RangeInclusive<usize>,
    int_range: std::ops::RangeInclusive<i64>,
    cap: u64,
) -> Result<crate::structures::BruteResult<SetModel>, String> {
    let sets: Vec<String> = set_vars(f).into_iter().collect();
    let ints: Vec<String> = int_vars(f).into_iter().collect();
    let width = (int_range.end() - int_range.start() + 1).max(0) as u64;
    let mut budget = cap;
    for m in universes {
        if m >= 64 {
            return Err(format!("universe {m} too large to enumerate"));
        }
        let per_set = 1u64 << m;
        let total = per_set
            .checked_pow(sets.len() as u32)
            .and_then(|s| s.checked_mul(width.checked_pow(ints.len() as u32)?))
            .ok_or("search space overflows")?;
        if total > budget {
            return Err(format!("capacity: search space exceeds {cap}"));
        }
        budget -= total;
        let mut masks = vec![0u64; sets.len()];
        let mut offs = vec![0u64; ints.len()];
        loop {
            let model = SetModel {
                maxc: m,
                sets: sets
                    .iter()
                    .zip(&masks)
                    .map(|(s, &mask)| (s.clone(), (0..m).filter(|&e| mask >> e & 1 == 1).collect()))
                    .collect(),
                ints: ints.iter().zip(&offs).map(|(v, &o)| (v.clone(), int_range.start() + o as i64)).collect(),
            };
            if eval_formula(f, &model) {
                return Ok(crate::structures::BruteResult::Sat(model));
            }
            if !advance(&mut masks, per_set) && !advance(&mut offs, width) {
                break;
            }
        }
    }
    Ok(crate::structures::BruteResult::Unsat)
}

// Odometer step; returns false after wrapping around to all zeros.
fn advance(digits: &mut [u64], radix: u64) -> bool {
    for d in digits.iter_mut().rev() {
        *d += 1;
        if *d < radix {
            return true;
        }
        *d = 0;
    }
    false
}

#[cfg(test)]
mod tests {
    use super::*;

    fn a() -> SetExpr {
        SetExpr::var("A")
    }

    fn b() -> SetExpr {
        SetExpr::var("B")
    }

    fn card(s: SetExpr) -> PATerm {
        PATerm::Card(s)
    }

    fn at(x: BapaAtom) -> QFBAPAFormula {
        Formula::Atom(x)
    }

    #[test]
    fn normalize_shapes() {
        let f = at(BapaAtom::SetEq(a(), b()));
        let expected = Formula::and([
            at(BapaAtom::IntEq(card(SetExpr::inter(a(), SetExpr::compl(b()))), PATerm::Const(0))),
            at(BapaAtom::IntEq(card(SetExpr::inter(b(), SetExpr::compl(a()))), PATerm::Const(0))),
        ]);
        assert_eq!(normalize(&f), expected);
        let g = at(BapaAtom::Subset(a(), a()));
        assert_eq!(
            normalize(&g),
            at(BapaAtom::IntEq(card(SetExpr::inter(a(), SetExpr::compl(a()))), PATerm::Const(0)))
        );
        assert!(qfbapa_sat(&g, Maxc::Fixed(3)).is_sat());
        let h = at(BapaAtom::IntLe(PATerm::Const(1), card(a())));
        assert_eq!(normalize(&h), h);
    }

    #[test]
    fn card_vars_are_shared() {
        let f = at(BapaAtom::IntLe(PATerm::Const(1), card(a())));
        let (g, defs) = introduce_card_vars(&f);
        assert_eq!(defs, vec![CardDef { set: a(), var: "card!0".into() }]);
        assert_eq!(g, Formula::Atom(LinExpr::le(LinExpr::constant(1), &LinExpr::var("card!0"))));
        let f = at(BapaAtom::IntEq(PATerm::plus(card(a()), card(a())), PATerm::Const(2)));
        let (_, defs) = introduce_card_vars(&f);
        assert_eq!(defs.len(), 1);
        let f = at(BapaAtom::IntEq(PATerm::MaxC, card(SetExpr::Universe)));
        let (g, defs) = introduce_card_vars(&f);
        assert!(defs.is_empty());
        assert_eq!(g, Formula::Atom(LinExpr::equal(LinExpr::var(MAXC_VAR), &LinExpr::var(MAXC_VAR))));
    }

    #[test]
    fn venn_indicators() {
        let defs = vec![CardDef { set: a(), var: "k".into() }];
        let sys = venn_expand(&Formula::tt(), &defs, &["A".into()], Maxc::Free).unwrap();
        assert_eq!(sys.regions, 2);
        assert!(sys.base.atoms.contains(&LinExpr::var("k").minus(&LinExpr::var("region!1")).eq0()));
        let defs = vec![CardDef { set: SetExpr::inter(a(), b()), var: "k".into() }];
        let sys = venn_expand(&Formula::tt(), &defs, &["A".into(), "B".into()], Maxc::Free).unwrap();
        assert!(sys.base.atoms.contains(&LinExpr::var("k").minus(&LinExpr::var("region!3")).eq0()));
    }

    #[test]
    fn spec_examples() {
        let incl_excl = Formula::and([
            at(BapaAtom::IntEq(PATerm::plus(card(a()), card(b())), card(SetExpr::union(a(), b())))),
            at(BapaAtom::IntLe(PATerm::Const(1), card(SetExpr::inter(a(), b())))),
        ]);
        assert_eq!(qfbapa_sat(&incl_excl, Maxc::Free), BapaResult::Unsat);
        let half = at(BapaAtom::IntEq(card(a()), card(SetExpr::compl(a()))));
        assert_eq!(qfbapa_sat(&half, Maxc::Fixed(3)), BapaResult::Unsat);
        let BapaResult::Sat(m) = qfbapa_sat(&half, Maxc::Fixed(4)) else { panic!() };
        assert_eq!(m.set("A").len(), 2);
        let mono = Formula::and([
            at(BapaAtom::Subset(a(), b())),
            at(BapaAtom::IntEq(card(a()), PATerm::Const(2))),
            at(BapaAtom::IntEq(card(b()), PATerm::Const(1))),
        ]);
        assert_eq!(qfbapa_sat(&mono, Maxc::Free), BapaResult::Unsat);
    }

    #[test]
    fn sparse_support_examples() {
        let f = Formula::and([
            at(BapaAtom::IntLe(PATerm::Const(1), card(a()))),
            at(BapaAtom::IntLe(PATerm::Const(2), card(SetExpr::compl(b())))),
        ]);
        let (g, defs) = introduce_card_vars(&normalize(&f));
        let sys = venn_expand(&g, &defs, &["A".into(), "B".into()], Maxc::Fixed(4)).unwrap();
        assert_eq!(sparse_solve(&sys, &[0, 1, 2, 3]).is_sat(), venn_solve(&sys).is_sat());
        assert_eq!(sparse_solve(&sys, &[]), LiaResult::Unsat);
        // A ∩ Bᶜ alone can carry both demands.
        assert_eq!(minimal_support(&sys), Some(vec![2]));
    }

    #[test]
    fn materialization_is_block_ordered() {
        let f = Formula::and([
            at(BapaAtom::IntEq(card(a()), PATerm::Const(2))),
            at(BapaAtom::IntEq(card(SetExpr::inter(a(), b())), PATerm::Const(1))),
            at(BapaAtom::IntEq(card(b()), PATerm::Const(1))),
        ]);
        let BapaResult::Sat(m) = qfbapa_sat(&f, Maxc::Fixed(3)) else { panic!() };
        assert_eq!(m.set("A"), [1, 2].into_iter().collect());
        assert_eq!(m.set("B"), [2].into_iter().collect());
    }

    #[test]
    fn negated_set_atoms() {
        let f = Formula::and([Formula::not(at(BapaAtom::Subset(a(), b()))), at(BapaAtom::Subset(a(), SetExpr::Empty))]);
        assert_eq!(qfbapa_sat(&f, Maxc::Fixed(2)), BapaResult::Unsat);
        let g = Formula::not(at(BapaAtom::SetEq(a(), b())));
        assert_eq!(qfbapa_sat(&g, Maxc::Fixed(0)), BapaResult::Unsat);
        assert!(qfbapa_sat(&g, Maxc::Fixed(1)).is_sat());
    }

    #[test]
    fn free_universe_and_divisibility() {
        let f = Formula::and([
            at(BapaAtom::Dvd(3, card(a()))),
            at(BapaAtom::IntLe(PATerm::Const(1), card(a()))),
            at(BapaAtom::IntEq(PATerm::MaxC, PATerm::plus(card(a()), PATerm::Const(1)))),
        ]);
        let BapaResult::Sat(m) = qfbapa_sat(&f, Maxc::Free) else { panic!() };
        assert_eq!(m.set("A").len() % 3, 0);
        assert_eq!(m.maxc, m.set("A").len() + 1);
    }
}
