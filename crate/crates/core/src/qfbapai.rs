//! QFBAPA over index sets defined by component formulas.
//!
//! A problem is a set skeleton `F(S₁,…,S_k, T…)` where each defined set is
//! `S_i = {r ∈ I | φ_i(x̄(r), c̄)}` over array variables `x̄` and shared
//! constants `c̄`; the remaining set variables `T` are unconstrained.
//!
//! A solution is witnessed by a support of region patterns over `φ₁..φ_k`:
//! the component theory must realize every chosen pattern simultaneously
//! (sharing `c̄`), and the set skeleton must be satisfiable with exactly
//! those regions nonempty. With the cover bit set, the chosen regions
//! cover `I`; otherwise one extra tuple `x̄₀` with an unchosen pattern
//! `β₀` fills the remaining indices, and the set side must then place
//! every index in a chosen region or in `β₀`.

use std::collections::{BTreeMap, BTreeSet};

use crate::formula::{Formula, QFFormula, Term};
use crate::oracle::{complete_model, ComponentOracle, Decision};
use crate::qfbapa::{
    eval_formula, int_vars, qfbapa_sat_with, set_vars, BapaAtom, BapaResult, Maxc, PATerm, QFBAPAFormula, QfbapaOptions, SetExpr,
    SetModel,
};
use crate::structures::{BruteResult, IndexCard, Model, Value};

/// Default cap on the number of defined sets.
pub const DEFAULT_MAX_DEFINED: usize = 12;

/// Polarity vector over the defining formulas; `true` means `φ_i` holds.
pub type RegionPattern = Vec<bool>;

#[derive(Clone)]
pub struct QFBAPAIProblem<'a> {
    pub oracle: &'a dyn ComponentOracle,
    pub index_card: IndexCard,
    pub skeleton: QFBAPAFormula,
    /// `(S_i, φ_i)`
    pub defined: Vec<(String, QFFormula)>,
    /// Variables of the `φ_i` read per index.
    pub array_vars: Vec<String>,
    /// Variables of the `φ_i` shared by all indices.
    pub constants: Vec<String>,
}

impl QFBAPAIProblem<'_> {
    pub fn k(&self) -> usize {
        self.defined.len()
    }

    pub fn free_sets(&self) -> BTreeSet<String> {
        let defined: BTreeSet<&String> = self.defined.iter().map(|(s, _)| s).collect();
        set_vars(&self.skeleton).into_iter().filter(|s| !defined.contains(s)).collect()
    }

    pub fn validate(&self) -> Result<(), String> {
        let arrays: BTreeSet<&String> = self.array_vars.iter().collect();
        let consts: BTreeSet<&String> = self.constants.iter().collect();
        if let Some(v) = arrays.intersection(&consts).next() {
            return Err(format!("{v} is both an array and a constant"));
        }
        let mut names = BTreeSet::new();
        for (s, phi) in &self.defined {
            if !names.insert(s) {
                return Err(format!("set {s} defined twice"));
            }
            for v in phi.free_vars() {
                if !arrays.contains(&v) && !consts.contains(&v) {
                    return Err(format!("undeclared variable {v} in the definition of {s}"));
                }
            }
            self.oracle.signature().check_formula(phi).map_err(|e| e.to_string())?;
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct SupportCertificate {
    pub regions: Vec<RegionPattern>,
    pub cover: bool,
    /// Values of the constants and of every renamed tuple `x#j`.
    pub component_model: Model,
    pub set_model: SetModel,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ArrayWitness {
    pub arrays: BTreeMap<String, Vec<Value>>,
    pub constants: Model,
    pub free_sets: BTreeMap<String, BTreeSet<usize>>,
    pub ints: BTreeMap<String, i64>,
}

impl ArrayWitness {
    pub fn column(&self, r: usize) -> Model {
        let mut m = self.constants.clone();
        for (a, v) in &self.arrays {
            m.insert(a.clone(), v[r]);
        }
        m
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum QfbapaiResult {
    Sat { witness: ArrayWitness, certificate: SupportCertificate },
    Unsat,
    Unknown(String),
}

impl QfbapaiResult {
    pub fn is_sat(&self) -> bool {
        matches!(self, QfbapaiResult::Sat { .. })
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Strategy {
    /// Iterative deepening over support size, then cover bit, then
    /// supports in lexicographic order.
    Enumerate,
    /// Solve the set skeleton first, read the support off its model and
    /// check it against the component theory; refuted supports are
    /// blocked by a minimal core.
    Lazy,
    /// `Enumerate` for at most three defined sets, `Lazy` otherwise.
    Auto,
}

#[derive(Debug, Clone, Copy)]
pub struct QfbapaiOptions {
    pub strategy: Strategy,
    pub max_defined: usize,
    pub bapa: QfbapaOptions,
}

impl Default for QfbapaiOptions {
    fn default() -> Self {
        QfbapaiOptions {
            strategy: Strategy::Auto,
            max_defined: DEFAULT_MAX_DEFINED,
            bapa: QfbapaOptions { max_sets: 64, ..QfbapaOptions::default() },
        }
    }
}

/// Name of array variable `x` in tuple `j`.
pub fn tuple_var(x: &str, j: usize) -> String {
    format!("{x}#{j}")
}

fn rename_tuple(phi: &QFFormula, arrays: &BTreeSet<String>, j: usize) -> QFFormula {
    phi.rename(&|v| arrays.contains(v).then(|| Term::var(tuple_var(v, j))))
}

fn pattern_formula(p: &QFBAPAIProblem<'_>, beta: &[bool], j: usize) -> QFFormula {
    let arrays: BTreeSet<String> = p.array_vars.iter().cloned().collect();
    Formula::and(p.defined.iter().zip(beta).map(|((_, phi), &pos)| {
        let f = rename_tuple(phi, &arrays, j);
        if pos {
            f
        } else {
            Formula::not(f)
        }
    }))
}

/// The component query: tuple `j` (from 1) realizes region `j`, all tuples
/// share the constants, and without cover tuple 0 realizes none of them.
pub fn build_component_query(p: &QFBAPAIProblem<'_>, regions: &[RegionPattern], cover: bool) -> QFFormula {
    let mut parts: Vec<QFFormula> = regions.iter().enumerate().map(|(j, beta)| pattern_formula(p, beta, j + 1)).collect();
    if !cover {
        parts.push(Formula::not(Formula::or(regions.iter().map(|beta| pattern_formula(p, beta, 0)))));
    }
    Formula::and(parts)
}

/// The set expression of region `beta` over the defined sets.
pub fn region_expr(p: &QFBAPAIProblem<'_>, beta: &[bool]) -> SetExpr {
    SetExpr::inter_all(p.defined.iter().zip(beta).map(|((s, _), &pos)| {
        let v = SetExpr::var(s.clone());
        if pos {
            v
        } else {
            SetExpr::compl(v)
        }
    }))
}

/// The set query: the skeleton, every chosen region nonempty, and the
/// chosen regions (plus `default_region` when given) covering `I`.
pub fn build_qfbapa_query(
    p: &QFBAPAIProblem<'_>,
    regions: &[RegionPattern],
    cover: bool,
    default_region: Option<&[bool]>,
) -> QFBAPAFormula {
    let mut parts = vec![p.skeleton.clone()];
    for beta in regions {
        parts.push(Formula::Atom(BapaAtom::IntLe(PATerm::Const(1), PATerm::Card(region_expr(p, beta)))));
    }
    let covering: Option<Vec<&[bool]>> = if cover {
        Some(regions.iter().map(|b| b.as_slice()).collect())
    } else {
        default_region.map(|d| regions.iter().map(|b| b.as_slice()).chain(std::iter::once(d)).collect())
    };
    if let Some(cs) = covering {
        let union = SetExpr::union_all(cs.into_iter().map(|b| region_expr(p, b)));
        parts.push(Formula::Atom(BapaAtom::SetEq(union, SetExpr::Universe)));
    }
    Formula::and(parts)
}

/// Pattern realized by tuple `j` of a component model.
fn tuple_pattern(p: &QFBAPAIProblem<'_>, m: &Model, j: usize) -> Option<RegionPattern> {
    let arrays: BTreeSet<String> = p.array_vars.iter().cloned().collect();
    p.defined
        .iter()
        .map(|(_, phi)| {
            let f = rename_tuple(phi, &arrays, j);
            let vars = f.free_vars();
            if vars.iter().any(|v| !m.contains_key(v)) {
                return None;
            }
            Some(p.oracle.model_check(&f, m))
        })
        .collect()
}

fn set_pattern(p: &QFBAPAIProblem<'_>, m: &SetModel, r: usize) -> RegionPattern {
    p.defined.iter().map(|(s, _)| m.sets.get(s).is_some_and(|x| x.contains(&r))).collect()
}

/// Builds arrays from a component model and a set model: index `r` takes
/// the tuple of the chosen region it lies in, or tuple 0.
pub fn assemble_arrays(
    p: &QFBAPAIProblem<'_>,
    regions: &[RegionPattern],
    component_model: &Model,
    set_model: &SetModel,
) -> ArrayWitness {
    let n = set_model.maxc;
    let mut arrays: BTreeMap<String, Vec<Value>> = p.array_vars.iter().map(|a| (a.clone(), Vec::with_capacity(n))).collect();
    for r in 0..n {
        let beta = set_pattern(p, set_model, r);
        let j = regions.iter().position(|b| *b == beta).map_or(0, |j| j + 1);
        for (a, col) in arrays.iter_mut() {
            let v = component_model.get(&tuple_var(a, j)).copied().unwrap_or_else(|| p.oracle.default_value());
            col.push(v);
        }
    }
    let constants = p
        .constants
        .iter()
        .map(|c| (c.clone(), component_model.get(c).copied().unwrap_or_else(|| p.oracle.default_value())))
        .collect();
    let free_sets = p.free_sets().into_iter().map(|s| (s.clone(), set_model.set(&s))).collect();
    ArrayWitness { arrays, constants, free_sets, ints: set_model.ints.clone() }
}

/// Re-evaluates a witness from scratch: induces the defined sets through
/// the oracle's model checker and evaluates the skeleton by set semantics.
pub fn check_witness(p: &QFBAPAIProblem<'_>, w: &ArrayWitness) -> bool {
    let Some(n) = p.index_card.as_finite() else { return false };
    if w.arrays.values().any(|v| v.len() != n) || p.array_vars.iter().any(|a| !w.arrays.contains_key(a)) {
        return false;
    }
    let mut sets = w.free_sets.clone();
    for (s, phi) in &p.defined {
        let members = (0..n).filter(|&r| p.oracle.model_check(phi, &w.column(r))).collect();
        sets.insert(s.clone(), members);
    }
    eval_formula(&p.skeleton, &SetModel { maxc: n, sets, ints: w.ints.clone() })
}

fn component_vars(p: &QFBAPAIProblem<'_>, tuples: impl Iterator<Item = usize>) -> BTreeSet<String> {
    let mut vars: BTreeSet<String> = p.constants.iter().cloned().collect();
    for j in tuples {
        vars.extend(p.array_vars.iter().map(|a| tuple_var(a, j)));
    }
    vars
}

fn all_patterns(k: usize) -> Vec<RegionPattern> {
    (0..1usize << k).map(|code| (0..k).map(|i| code >> (k - 1 - i) & 1 == 1).collect()).collect()
}

enum Step {
    Found(ArrayWitness, SupportCertificate),
    Refuted,
    Unknown(String),
}

struct Solver<'p, 'a> {
    p: &'p QFBAPAIProblem<'a>,
    n: usize,
    opts: QfbapaiOptions,
    unknown: Option<String>,
}

impl Solver<'_, '_> {
    fn decide_component(&mut self, regions: &[RegionPattern], cover: bool) -> Option<Model> {
        let y = build_component_query(self.p, regions, cover);
        let tuples = (1..=regions.len()).chain((!cover).then_some(0));
        let vars = component_vars(self.p, tuples);
        match self.p.oracle.decide(&y) {
            Decision::Sat(m) => Some(complete_model(self.p.oracle, &m, &vars)),
            Decision::Unsat => None,
            Decision::Unknown(why) => {
                self.unknown.get_or_insert(why);
                None
            }
        }
    }

    fn decide_sets(&mut self, f: &QFBAPAFormula) -> Option<SetModel> {
        match qfbapa_sat_with(f, Maxc::Fixed(self.n), &self.opts.bapa) {
            BapaResult::Sat(m) => Some(m),
            BapaResult::Unsat => None,
            BapaResult::Unknown(why) => {
                self.unknown.get_or_insert(why);
                None
            }
        }
    }

    fn finish(&self, regions: Vec<RegionPattern>, cover: bool, component_model: Model, set_model: SetModel) -> Step {
        let witness = assemble_arrays(self.p, &regions, &component_model, &set_model);
        let certificate = SupportCertificate { regions, cover, component_model, set_model };
        Step::Found(witness, certificate)
    }

    fn try_support(&mut self, regions: &[RegionPattern], cover: bool) -> Step {
        let Some(m) = self.decide_component(regions, cover) else { return Step::Refuted };
        let default = if cover {
            None
        } else {
            match tuple_pattern(self.p, &m, 0) {
                Some(b) => Some(b),
                None => return Step::Unknown("default tuple pattern undetermined".into()),
            }
        };
        let y2 = build_qfbapa_query(self.p, regions, cover, default.as_deref());
        match self.decide_sets(&y2) {
            Some(sm) => self.finish(regions.to_vec(), cover, m, sm),
            None => Step::Refuted,
        }
    }

    fn enumerate(&mut self) -> Step {
        let k = self.p.k();
        let mut viable = Vec::new();
        for beta in all_patterns(k) {
            // A pattern unrealizable on its own cannot be part of any support.
            let alone = pattern_formula(self.p, &beta, 1);
            match self.p.oracle.decide(&alone) {
                Decision::Unsat => {}
                Decision::Sat(_) => viable.push(beta),
                Decision::Unknown(why) => {
                    self.unknown.get_or_insert(why);
                    viable.push(beta);
                }
            }
        }
        let max_n = viable.len().min(self.n);
        for size in 0..=max_n {
            for cover in [true, false] {
                let mut found = None;
                for_each_combination(viable.len(), size, &mut |idx| {
                    let support: Vec<RegionPattern> = idx.iter().map(|&i| viable[i].clone()).collect();
                    match self.try_support(&support, cover) {
                        Step::Refuted => true,
                        Step::Unknown(why) => {
                            self.unknown.get_or_insert(why);
                            true
                        }
                        step => {
                            found = Some(step);
                            false
                        }
                    }
                });
                if let Some(step) = found {
                    return step;
                }
            }
        }
        Step::Refuted
    }

    fn lazy(&mut self) -> Step {
        let mut blocks: Vec<QFBAPAFormula> = Vec::new();
        loop {
            let f = Formula::and(std::iter::once(self.p.skeleton.clone()).chain(blocks.iter().cloned()));
            let Some(sm) = self.decide_sets(&f) else { return Step::Refuted };
            let support: Vec<RegionPattern> =
                (0..self.n).map(|r| set_pattern(self.p, &sm, r)).collect::<BTreeSet<_>>().into_iter().collect();
            if let Some(m) = self.decide_component(&support, true) {
                return self.finish(support, true, m, sm);
            }
            if self.unknown.is_some() {
                return Step::Unknown(self.unknown.clone().unwrap());
            }
            // Shrink to a minimal jointly unrealizable subset.
            let mut core = support;
            let mut i = 0;
            while i < core.len() {
                let mut smaller = core.clone();
                smaller.remove(i);
                if self.decide_component(&smaller, true).is_none() && self.unknown.is_none() {
                    core = smaller;
                } else {
                    i += 1;
                }
            }
            self.unknown = None;
            let partial = self.generalize(&core);
            let empty_one = Formula::or(partial.iter().map(|beta| {
                Formula::Atom(BapaAtom::IntEq(PATerm::Card(partial_region_expr(self.p, beta)), PATerm::Const(0)))
            }));
            blocks.push(empty_one);
        }
    }
}

/// Region pattern with unconstrained positions.
type PartialPattern = Vec<Option<bool>>;

fn partial_formula(p: &QFBAPAIProblem<'_>, beta: &[Option<bool>], j: usize) -> QFFormula {
    let arrays: BTreeSet<String> = p.array_vars.iter().cloned().collect();
    Formula::and(p.defined.iter().zip(beta).filter_map(|((_, phi), pos)| {
        let f = rename_tuple(phi, &arrays, j);
        pos.map(|pos| if pos { f } else { Formula::not(f) })
    }))
}

fn partial_region_expr(p: &QFBAPAIProblem<'_>, beta: &[Option<bool>]) -> SetExpr {
    SetExpr::inter_all(p.defined.iter().zip(beta).filter_map(|((s, _), pos)| {
        let v = SetExpr::var(s.clone());
        pos.map(|pos| if pos { v } else { SetExpr::compl(v) })
    }))
}

impl Solver<'_, '_> {
    /// Drops every pattern position the refutation of `core` does not need.
    /// If nonempty regions matching all the partial patterns existed, one
    /// index from each would realize the partial query, so blocking them
    /// keeps every solution.
    fn generalize(&mut self, core: &[RegionPattern]) -> Vec<PartialPattern> {
        let mut partial: Vec<PartialPattern> = core.iter().map(|b| b.iter().map(|&x| Some(x)).collect()).collect();
        for j in 0..partial.len() {
            for i in 0..self.p.k() {
                let saved = partial[j][i].take();
                let y = Formula::and(partial.iter().enumerate().map(|(t, b)| partial_formula(self.p, b, t + 1)));
                if !matches!(self.p.oracle.decide(&y), Decision::Unsat) {
                    partial[j][i] = saved;
                }
            }
        }
        partial
    }
}

/// Calls `visit` with each `size`-subset of `0..n` in lexicographic order
/// until it returns `false`.
fn for_each_combination(n: usize, size: usize, visit: &mut dyn FnMut(&[usize]) -> bool) {
    if size > n {
        return;
    }
    let mut combo: Vec<usize> = (0..size).collect();
    loop {
        if !visit(&combo) {
            return;
        }
        let Some(i) = (0..size).rev().find(|&i| combo[i] < n - size + i) else { return };
        combo[i] += 1;
        for j in i + 1..size {
            combo[j] = combo[j - 1] + 1;
        }
    }
}

pub fn solve_qfbapai(p: &QFBAPAIProblem<'_>) -> QfbapaiResult {
    solve_qfbapai_with(p, QfbapaiOptions::default())
}

pub fn solve_qfbapai_with(p: &QFBAPAIProblem<'_>, opts: QfbapaiOptions) -> QfbapaiResult {
    if let Err(e) = p.validate() {
        return QfbapaiResult::Unknown(format!("malformed problem: {e}"));
    }
    if p.k() > opts.max_defined {
        return QfbapaiResult::Unknown(format!("{} defined sets exceed the cap of {}", p.k(), opts.max_defined));
    }
    let Some(n) = p.index_card.as_finite() else {
        return QfbapaiResult::Unknown("capacity: unbounded index sets are not supported".into());
    };
    let strategy = match opts.strategy {
        Strategy::Auto if p.k() <= 3 => Strategy::Enumerate,
        Strategy::Auto => Strategy::Lazy,
        s => s,
    };
    let mut solver = Solver { p, n, opts, unknown: None };
    let step = match strategy {
        Strategy::Enumerate => solver.enumerate(),
        _ => solver.lazy(),
    };
    match step {
        Step::Found(witness, certificate) => {
            if !check_witness(p, &witness) {
                log::error!("array witness failed re-evaluation");
                return QfbapaiResult::Unknown("witness re-check failed".into());
            }
            QfbapaiResult::Sat { witness, certificate }
        }
        Step::Refuted => match solver.unknown {
            Some(why) => QfbapaiResult::Unknown(why),
            None => QfbapaiResult::Unsat,
        },
        Step::Unknown(why) => QfbapaiResult::Unknown(why),
    }
}

/// Validates a support certificate with model checks only.
pub fn check_certificate_qfbapai(p: &QFBAPAIProblem<'_>, cert: &SupportCertificate) -> Result<(), String> {
    p.validate()?;
    let Some(n) = p.index_card.as_finite() else { return Err("unbounded index set".into()) };
    let k = p.k();
    if cert.regions.iter().any(|b| b.len() != k) {
        return Err(format!("region patterns must have length {k}"));
    }
    let distinct: BTreeSet<&RegionPattern> = cert.regions.iter().collect();
    if distinct.len() != cert.regions.len() {
        return Err("repeated region".into());
    }
    if cert.regions.len() > n {
        return Err(format!("{} regions cannot all be nonempty in {n} indices", cert.regions.len()));
    }
    let tuples = (1..=cert.regions.len()).chain((!cert.cover).then_some(0));
    let vars = component_vars(p, tuples);
    if let Some(v) = vars.iter().find(|v| !cert.component_model.contains_key(*v)) {
        return Err(format!("component model leaves {v} unassigned"));
    }
    if cert.component_model.values().any(|x| !p.oracle.in_carrier(*x)) {
        return Err("component model value outside the carrier".into());
    }
    let y = build_component_query(p, &cert.regions, cert.cover);
    if !p.oracle.model_check(&y, &cert.component_model) {
        return Err("component model violates the region query".into());
    }
    let default = if cert.cover {
        None
    } else {
        Some(tuple_pattern(p, &cert.component_model, 0).ok_or("default tuple incomplete")?)
    };
    if cert.set_model.maxc != n {
        return Err(format!("set model universe {} differs from |I| = {n}", cert.set_model.maxc));
    }
    if cert.set_model.sets.values().flatten().any(|&r| r >= n) {
        return Err("set model element outside the universe".into());
    }
    let y2 = build_qfbapa_query(p, &cert.regions, cert.cover, default.as_deref());
    let mut sm = cert.set_model.clone();
    for v in set_vars(&y2) {
        sm.sets.entry(v).or_default();
    }
    if !eval_formula(&y2, &sm) {
        return Err("set model violates the set query".into());
    }
    Ok(())
}

/// Exhaustive search over explicit arrays with entries and constants drawn
/// from `domain`, all subsets for the free sets and integers in `int_range`.
pub fn brute_force_qfbapai(
    p: &QFBAPAIProblem<'_>,
    domain: &[Value],
    int_range: std::ops::RangeInclusive<i64>,
    cap: u64,
) -> Result<BruteResult<ArrayWitness>, String> {
    p.validate()?;
    let n = p.index_card.as_finite().ok_or("brute force needs a finite index set")?;
    if domain.is_empty() || n >= 64 {
        return Err("empty domain or index set too large".into());
    }
    let d = domain.len() as u64;
    let free: Vec<String> = p.free_sets().into_iter().collect();
    let ints: Vec<String> = int_vars(&p.skeleton).into_iter().collect();
    let width = (int_range.end() - int_range.start() + 1).max(0) as u64;
    let tuples = d.checked_pow(p.array_vars.len() as u32).ok_or("search space overflows")?;
    let total = [
        d.checked_pow(p.constants.len() as u32),
        tuples.checked_pow(n as u32),
        (1u64 << n).checked_pow(free.len() as u32),
        width.checked_pow(ints.len() as u32),
    ]
    .into_iter()
    .try_fold(1u64, |acc, x| acc.checked_mul(x?));
    match total {
        Some(t) if t <= cap => {}
        _ => return Err(format!("capacity: search space exceeds {cap}")),
    }
    let decode = |code: u64, len: usize| -> Vec<Value> {
        let mut c = code;
        let mut out = vec![0; len];
        for slot in out.iter_mut().rev() {
            *slot = domain[(c % d) as usize];
            c /= d;
        }
        out
    };
    let const_count = d.pow(p.constants.len() as u32);
    for cc in 0..const_count {
        let constants: Model = p.constants.iter().cloned().zip(decode(cc, p.constants.len())).collect();
        // Membership of each tuple code in each defined set.
        let mut member = Vec::with_capacity(tuples as usize);
        for t in 0..tuples {
            let mut m = constants.clone();
            m.extend(p.array_vars.iter().cloned().zip(decode(t, p.array_vars.len())));
            member.push(p.defined.iter().map(|(_, phi)| p.oracle.model_check(phi, &m)).collect::<Vec<bool>>());
        }
        let mut cols = vec![0u64; n];
        loop {
            let mut sets: BTreeMap<String, BTreeSet<usize>> = BTreeMap::new();
            for (i, (s, _)) in p.defined.iter().enumerate() {
                sets.insert(s.clone(), (0..n).filter(|&r| member[cols[r] as usize][i]).collect());
            }
            let mut masks = vec![0u64; free.len()];
            let mut offs = vec![0u64; ints.len()];
            loop {
                let mut all = sets.clone();
                for (s, &mask) in free.iter().zip(&masks) {
                    all.insert(s.clone(), (0..n).filter(|&e| mask >> e & 1 == 1).collect());
                }
                let ints_m: BTreeMap<String, i64> =
                    ints.iter().zip(&offs).map(|(v, &o)| (v.clone(), int_range.start() + o as i64)).collect();
                if eval_formula(&p.skeleton, &SetModel { maxc: n, sets: all.clone(), ints: ints_m.clone() }) {
                    let mut arrays: BTreeMap<String, Vec<Value>> =
                        p.array_vars.iter().map(|a| (a.clone(), Vec::with_capacity(n))).collect();
                    for &c in &cols {
                        for (a, v) in p.array_vars.iter().zip(decode(c, p.array_vars.len())) {
                            arrays.get_mut(a).unwrap().push(v);
                        }
                    }
                    let free_sets = free.iter().map(|s| (s.clone(), all[s].clone())).collect();
                    return Ok(BruteResult::Sat(ArrayWitness { arrays, constants, free_sets, ints: ints_m }));
                }
                if !odometer(&mut masks, 1 << n) && !odometer(&mut offs, width) {
                    break;
                }
            }
            if !odometer(&mut cols, tuples) {
                break;
            }
        }
    }
    Ok(BruteResult::Unsat)
}

fn odometer(digits: &mut [u64], radix: u64) -> bool {
    for x in digits.iter_mut().rev() {
        *x += 1;
        if *x < radix {
            return true;
        }
        *x = 0;
    }
    false
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::formula::Atom;
    use crate::oracle::lia_oracle;

    fn rel(r: &str, a: Term, b: Term) -> QFFormula {
        Formula::atom(Atom::new(r, vec![a, b]))
    }

    fn x() -> Term {
        Term::var("x")
    }

    fn n(k: i64) -> Term {
        Term::cst(k.to_string())
    }

    fn s(i: usize) -> SetExpr {
        SetExpr::var(format!("S{i}"))
    }

    fn problem<'a>(
        oracle: &'a dyn ComponentOracle,
        card: usize,
        skeleton: QFBAPAFormula,
        defs: Vec<QFFormula>,
    ) -> QFBAPAIProblem<'a> {
        QFBAPAIProblem {
            oracle,
            index_card: IndexCard::finite(card),
            skeleton,
            defined: defs.into_iter().enumerate().map(|(i, f)| (format!("S{}", i + 1), f)).collect(),
            array_vars: vec!["x".into()],
            constants: vec!["c".into()],
        }
    }

    #[test]
    fn component_query_shapes() {
        let o = lia_oracle(false);
        let phi = rel("<=", n(0), x());
        let p = problem(&o, 3, Formula::tt(), vec![phi.clone()]);
        let x1 = rel("<=", n(0), Term::var("x#1"));
        assert_eq!(build_component_query(&p, &[vec![true]], true), x1);
        let x0 = rel("<=", n(0), Term::var("x#0"));
        assert_eq!(build_component_query(&p, &[vec![true]], false), Formula::and([x1, Formula::not(x0)]));
        let p2 = problem(&o, 3, Formula::tt(), vec![phi, rel("<=", x(), n(-1))]);
        let q = build_component_query(&p2, &[vec![true, false]], false);
        let x0_region = Formula::and([
            rel("<=", n(0), Term::var("x#0")),
            Formula::not(rel("<=", Term::var("x#0"), n(-1))),
        ]);
        assert!(matches!(&q, Formula::And(cs) if cs.contains(&Formula::not(x0_region))));
    }

    #[test]
    fn set_query_shapes() {
        let o = lia_oracle(false);
        let f = Formula::Atom(BapaAtom::IntLe(PATerm::Const(1), PATerm::Card(s(1))));
        let p = problem(&o, 3, f.clone(), vec![rel("<=", n(0), x())]);
        let q = build_qfbapa_query(&p, &[vec![true]], false, None);
        assert_eq!(q, f);
        let cover = build_qfbapa_query(&p, &[vec![true], vec![false]], true, None);
        assert!(qfbapa_sat_with(&cover, Maxc::Fixed(3), &QfbapaOptions::default()).is_sat());
        let single = build_qfbapa_query(&p, &[vec![true]], true, None);
        let BapaResult::Sat(m) = qfbapa_sat_with(&single, Maxc::Fixed(3), &QfbapaOptions::default()) else { panic!() };
        assert_eq!(m.set("S1").len(), 3);
    }

    #[test]
    fn odd_universe_cannot_split_evenly() {
        let o = lia_oracle(false);
        let f = Formula::Atom(BapaAtom::IntEq(PATerm::Card(s(1)), PATerm::Card(s(2))));
        let p = problem(&o, 3, f, vec![rel("<=", n(0), x()), rel("<=", x(), n(-1))]);
        assert_eq!(solve_qfbapai(&p), QfbapaiResult::Unsat);
        let p4 = QFBAPAIProblem { index_card: IndexCard::finite(4), ..p };
        assert!(solve_qfbapai(&p4).is_sat());
    }

    #[test]
    fn valid_definition_forces_full_set() {
        let o = lia_oracle(false);
        let f = Formula::Atom(BapaAtom::SetEq(s(1), SetExpr::Empty));
        let p = problem(&o, 2, f, vec![rel("=", x(), x())]);
        assert_eq!(solve_qfbapai(&p), QfbapaiResult::Unsat);
        let lazy = QfbapaiOptions { strategy: Strategy::Lazy, ..QfbapaiOptions::default() };
        assert_eq!(solve_qfbapai_with(&p, lazy), QfbapaiResult::Unsat);
    }

    #[test]
    fn full_set_sat_and_certificates() {
        let o = lia_oracle(false);
        let f = Formula::Atom(BapaAtom::IntEq(PATerm::Card(s(1)), PATerm::MaxC));
        let p = problem(&o, 3, f, vec![rel("<=", n(0), x())]);
        let QfbapaiResult::Sat { witness, certificate } = solve_qfbapai(&p) else { panic!() };
        assert!(witness.arrays["x"].iter().all(|v| *v >= 0));
        assert!(check_witness(&p, &witness));
        assert_eq!(check_certificate_qfbapai(&p, &certificate), Ok(()));
        let mut flipped = certificate.clone();
        flipped.cover = !flipped.cover;
        assert!(check_certificate_qfbapai(&p, &flipped).is_err());
        let mut bad = certificate;
        for (v, val) in bad.component_model.iter_mut() {
            if v.starts_with("x#") {
                *val = -5;
            }
        }
        assert!(check_certificate_qfbapai(&p, &bad).is_err());
    }

    #[test]
    fn shared_constant_couples_regions() {
        // S1 = {x >= c}, S2 = {x < c}: S1 and S2 partition I whatever c is.
        let o = lia_oracle(false);
        let c = Term::var("c");
        let defs = vec![rel("<=", c.clone(), x()), rel("<", x(), c)];
        let both = Formula::and([
            Formula::Atom(BapaAtom::IntLe(PATerm::Const(1), PATerm::Card(s(1)))),
            Formula::Atom(BapaAtom::IntLe(PATerm::Const(1), PATerm::Card(s(2)))),
        ]);
        let p = problem(&o, 2, both, defs.clone());
        assert!(solve_qfbapai(&p).is_sat());
        let overlap = Formula::Atom(BapaAtom::IntLe(PATerm::Const(1), PATerm::Card(SetExpr::inter(s(1), s(2)))));
        assert_eq!(solve_qfbapai(&problem(&o, 3, overlap, defs.clone())), QfbapaiResult::Unsat);
        let gap = Formula::Atom(BapaAtom::IntLe(
            PATerm::Const(1),
            PATerm::Card(SetExpr::inter(SetExpr::compl(s(1)), SetExpr::compl(s(2)))),
        ));
        assert_eq!(solve_qfbapai(&problem(&o, 3, gap, defs)), QfbapaiResult::Unsat);
    }

    #[test]
    fn leftover_indices_take_the_default_tuple() {
        let o = lia_oracle(false);
        let skeleton = Formula::Atom(BapaAtom::IntEq(PATerm::Card(s(1)), PATerm::Const(1)));
        let p = problem(&o, 3, skeleton, vec![rel("=", x(), n(7))]);
        let QfbapaiResult::Sat { witness, .. } = solve_qfbapai(&p) else { panic!() };
        assert_eq!(witness.arrays["x"].iter().filter(|v| **v == 7).count(), 1);
        let empty_support = SupportCertificate {
            regions: vec![],
            cover: false,
            component_model: [("x#0".to_string(), 0), ("c".to_string(), 0)].into_iter().collect(),
            set_model: SetModel { maxc: 3, ..SetModel::default() },
        };
        let w = assemble_arrays(&p, &[], &empty_support.component_model, &empty_support.set_model);
        assert_eq!(w.arrays["x"], vec![0, 0, 0]);
    }

    #[test]
    fn free_sets_are_solved_by_the_set_side() {
        let o = lia_oracle(false);
        let t = SetExpr::var("T");
        let skeleton = Formula::and([
            Formula::Atom(BapaAtom::IntEq(PATerm::Card(t.clone()), PATerm::Const(1))),
            Formula::Atom(BapaAtom::Subset(t, s(1))),
        ]);
        let p = problem(&o, 2, skeleton, vec![rel("=", x(), n(3))]);
        let QfbapaiResult::Sat { witness, .. } = solve_qfbapai(&p) else { panic!() };
        let r = *witness.free_sets["T"].iter().next().unwrap();
        assert_eq!(witness.arrays["x"][r], 3);
    }
}
