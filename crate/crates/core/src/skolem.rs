//! Quantifier-free Skolem arithmetic `⟨ℕ∖{0}, ·, =, |⟩`.
//!
//! Factoring every number into prime exponents identifies the structure with
//! the weak direct power of `⟨ℕ, +, ≤⟩` over the primes: products become
//! sums of exponent vectors and divisibility becomes the pointwise order.
//! Satisfiability is decided by the power solver over the naturals with an
//! unbounded index set and an all-zero default column.

use std::collections::{BTreeMap, BTreeSet};
use std::fmt;

use num_bigint::BigUint;
use num_traits::{One, Zero};

use crate::formula::{Atom, Formula, QFFormula, SymbolSize, Term};
use crate::oracle::lia_oracle;
use crate::power::{solve_power, PartitionCertificate, PowerModel, PowerProblem, PowerResult};
use crate::structures::{BruteResult, IndexCard};

/// Largest exponent materialized when reconstructing a witness.
pub const MAX_WITNESS_EXPONENT: i64 = 4096;

/// Product of variables with multiplicities.
#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct Monomial(pub BTreeMap<String, u32>);

impl Monomial {
    pub fn of<S: AsRef<str>>(vars: &[S]) -> Self {
        let mut m = BTreeMap::new();
        for v in vars {
            *m.entry(v.as_ref().to_string()).or_insert(0) += 1;
        }
        Monomial(m)
    }

    pub fn degree(&self) -> u32 {
        self.0.values().sum()
    }

    fn value(&self, w: &BTreeMap<String, BigUint>) -> Option<BigUint> {
        let mut p = BigUint::one();
        for (v, &k) in &self.0 {
            p *= w.get(v)?.pow(k);
        }
        Some(p)
    }

    fn value_u128(&self, w: &BTreeMap<&str, u64>) -> Option<u128> {
        let mut p: u128 = 1;
        for (v, &k) in &self.0 {
            let x = *w.get(v.as_str())? as u128;
            for _ in 0..k {
                p = p.checked_mul(x)?;
            }
        }
        Some(p)
    }

    fn exponent_sum(&self) -> Term {
        let mut parts = self.0.iter().map(|(v, &k)| {
            if k == 1 {
                Term::var(v.clone())
            } else {
                Term::app("*", vec![Term::cst(k.to_string()), Term::var(v.clone())])
            }
        });
        let first = parts.next().unwrap_or_else(|| Term::cst("0"));
        parts.fold(first, |acc, t| Term::app("+", vec![acc, t]))
    }
}

impl fmt::Display for Monomial {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let vars: Vec<&str> = self.0.iter().flat_map(|(v, &k)| std::iter::repeat(v.as_str()).take(k as usize)).collect();
        match vars.as_slice() {
            [v] => write!(f, "{v}"),
            _ => write!(f, "(* {})", vars.join(" ")),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum SkolemKind {
    Eq,
    /// `left | right`
    Divides,
}

#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct SkolemAtom {
    pub left: Monomial,
    pub right: Monomial,
    pub kind: SkolemKind,
}

impl SkolemAtom {
    pub fn eq(left: Monomial, right: Monomial) -> Self {
        SkolemAtom { left, right, kind: SkolemKind::Eq }
    }

    pub fn divides(left: Monomial, right: Monomial) -> Self {
        SkolemAtom { left, right, kind: SkolemKind::Divides }
    }
}

impl fmt::Display for SkolemAtom {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let op = match self.kind {
            SkolemKind::Eq => "=",
            SkolemKind::Divides => "|",
        };
        write!(f, "({op} {} {})", self.left, self.right)
    }
}

impl SymbolSize for SkolemAtom {
    fn symbol_size(&self) -> usize {
        let mono = |m: &Monomial| if m.degree() == 1 { 1 } else { 1 + m.degree() as usize };
        1 + mono(&self.left) + mono(&self.right)
    }
}

pub type SkolemFormula = Formula<SkolemAtom>;

pub fn skolem_vars(f: &SkolemFormula) -> BTreeSet<String> {
    let mut out = BTreeSet::new();
    f.for_each_atom(&mut |a| out.extend(a.left.0.keys().chain(a.right.0.keys()).cloned()));
    out
}

/// The exponent-vector formula over `⟨ℕ, +, ≤⟩`.
pub fn to_additive(f: &SkolemFormula) -> QFFormula {
    f.map_atoms(&mut |a| {
        let rel = match a.kind {
            SkolemKind::Eq => "=",
            SkolemKind::Divides => "<=",
        };
        Formula::Atom(Atom::new(rel, vec![a.left.exponent_sum(), a.right.exponent_sum()]))
    })
}

/// Exact evaluation on positive integers.
pub fn eval_skolem(f: &SkolemFormula, w: &BTreeMap<String, BigUint>) -> Option<bool> {
    if w.values().any(Zero::is_zero) {
        return None;
    }
    f.eval_with(&mut |a| {
        let l = a.left.value(w).ok_or(())?;
        let r = a.right.value(w).ok_or(())?;
        Ok::<bool, ()>(match a.kind {
            SkolemKind::Eq => l == r,
            SkolemKind::Divides => (&r % &l).is_zero(),
        })
    })
    .ok()
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum SkolemResult {
    Sat { witness: BTreeMap<String, BigUint>, certificate: PartitionCertificate },
    Unsat,
    Unknown(String),
}

impl SkolemResult {
    pub fn is_sat(&self) -> bool {
        matches!(self, SkolemResult::Sat { .. })
    }
}

/// The first `n` primes.
pub fn primes(n: usize) -> Vec<u64> {
    let mut out: Vec<u64> = Vec::with_capacity(n);
    let mut c = 2u64;
    while out.len() < n {
        if out.iter().take_while(|&&p| p * p <= c).all(|&p| c % p != 0) {
            out.push(c);
        }
        c += 1;
    }
    out
}

/// Maps exception index `d` to the `d`-th prime; default coordinates are zero.
pub fn witness_from_power(model: &PowerModel, vars: &BTreeSet<String>) -> Result<BTreeMap<String, BigUint>, String> {
    let PowerModel::Sparse(cols) = model else { return Err("expected a finitely supported model".into()) };
    let support = cols.values().flat_map(|c| c.at.keys()).max().map_or(0, |&d| d + 1);
    let ps = primes(support);
    let mut w = BTreeMap::new();
    for v in vars {
        let mut x = BigUint::one();
        if let Some(col) = cols.get(v) {
            if col.default != 0 {
                return Err(format!("{v} has a nonzero default exponent"));
            }
            for (&d, &e) in &col.at {
                if !(0..=MAX_WITNESS_EXPONENT).contains(&e) {
                    return Err(format!("exponent {e} of {v} is out of range"));
                }
                x *= BigUint::from(ps[d]).pow(e as u32);
            }
        }
        w.insert(v.clone(), x);
    }
    Ok(w)
}

/// The power problem solved by [`skolem_sat`].
pub fn power_problem<'a>(f: &SkolemFormula, oracle: &'a crate::oracle::LiaOracle) -> PowerProblem<'a> {
    PowerProblem::new(oracle, IndexCard::Unbounded, to_additive(f)).weak()
}

pub fn skolem_sat(f: &SkolemFormula) -> SkolemResult {
    let oracle = lia_oracle(true);
    let p = power_problem(f, &oracle);
    match solve_power(&p) {
        PowerResult::Sat { model, certificate } => {
            let vars = skolem_vars(f);
            match witness_from_power(&model, &vars) {
                Ok(witness) if eval_skolem(f, &witness) == Some(true) => SkolemResult::Sat { witness, certificate },
                Ok(_) => SkolemResult::Unknown("reconstructed witness failed to verify".into()),
                Err(e) => SkolemResult::Unknown(e),
            }
        }
        PowerResult::Unsat => SkolemResult::Unsat,
        PowerResult::Unknown(why) => SkolemResult::Unknown(why),
    }
}

/// Searches `[1, bound]^vars` in lexicographic order.
pub fn skolem_oracle(f: &SkolemFormula, bound: u64) -> Result<BruteResult<BTreeMap<String, u64>>, String> {
    let vars: Vec<String> = skolem_vars(f).into_iter().collect();
    if bound == 0 {
        return Err("bound must be positive".into());
    }
    let total = (bound as u128).checked_pow(vars.len() as u32).unwrap_or(u128::MAX);
    let cap = crate::structures::capacity() as u128;
    if total > cap {
        return Err(format!("capacity: {total} assignments exceed {cap}"));
    }
    let mut digits = vec![1u64; vars.len()];
    loop {
        let w: BTreeMap<&str, u64> = vars.iter().map(String::as_str).zip(digits.iter().copied()).collect();
        let verdict = f.eval_with(&mut |a| {
            let (Some(l), Some(r)) = (a.left.value_u128(&w), a.right.value_u128(&w)) else {
                return Err("overflow while evaluating".to_string());
            };
            Ok(match a.kind {
                SkolemKind::Eq => l == r,
                SkolemKind::Divides => r % l == 0,
            })
        })?;
        if verdict {
            return Ok(BruteResult::Sat(w.into_iter().map(|(k, v)| (k.to_string(), v)).collect()));
        }
        let mut k = digits.len();
        loop {
            if k == 0 {
                return Ok(BruteResult::Unsat);
            }
            k -= 1;
            digits[k] += 1;
            if digits[k] <= bound {
                break;
            }
            digits[k] = 1;
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn atom(a: SkolemAtom) -> SkolemFormula {
        Formula::Atom(a)
    }

    #[test]
    fn square_differs_from_root() {
        let f = Formula::and([
            atom(SkolemAtom::eq(Monomial::of(&["x", "x"]), Monomial::of(&["y"]))),
            Formula::not(atom(SkolemAtom::eq(Monomial::of(&["x"]), Monomial::of(&["y"])))),
        ]);
        let SkolemResult::Sat { witness, .. } = skolem_sat(&f) else { panic!() };
        assert_eq!(&witness["x"] * &witness["x"], witness["y"]);
        assert!(skolem_oracle(&f, 16).unwrap().is_sat());
    }

    #[test]
    fn cancellation_and_antisymmetry() {
        let f = Formula::and([
            atom(SkolemAtom::eq(Monomial::of(&["x", "y"]), Monomial::of(&["x"]))),
            Formula::not(atom(SkolemAtom::eq(Monomial::of(&["y", "y"]), Monomial::of(&["y"])))),
        ]);
        assert_eq!(skolem_sat(&f), SkolemResult::Unsat);
        let g = Formula::and([
            atom(SkolemAtom::divides(Monomial::of(&["x"]), Monomial::of(&["y"]))),
            atom(SkolemAtom::divides(Monomial::of(&["y"]), Monomial::of(&["x"]))),
            Formula::not(atom(SkolemAtom::eq(Monomial::of(&["x"]), Monomial::of(&["y"])))),
        ]);
        assert_eq!(skolem_sat(&g), SkolemResult::Unsat);
        assert_eq!(skolem_oracle(&g, 64).unwrap(), BruteResult::Unsat);
    }

    #[test]
    fn trivial_identity_at_bound_one() {
        let f = atom(SkolemAtom::eq(Monomial::of(&["x"]), Monomial::of(&["x"])));
        assert!(skolem_oracle(&f, 1).unwrap().is_sat());
        assert!(skolem_sat(&f).is_sat());
    }

    #[test]
    fn growth_forces_one() {
        // x = y² and y = x² leave only x = y = 1, so x ≠ y is unsatisfiable
        // while x = y is satisfied by the zero exponents.
        let base = [
            atom(SkolemAtom::eq(Monomial::of(&["x"]), Monomial::of(&["y", "y"]))),
            atom(SkolemAtom::eq(Monomial::of(&["y"]), Monomial::of(&["x", "x"]))),
        ];
        let differ = Formula::not(atom(SkolemAtom::eq(Monomial::of(&["x"]), Monomial::of(&["y"]))));
        let f = Formula::and(base.iter().cloned().chain([differ]));
        assert_eq!(skolem_sat(&f), SkolemResult::Unsat);
        assert_eq!(skolem_oracle(&f, 64).unwrap(), BruteResult::Unsat);
        assert!(skolem_sat(&Formula::and(base)).is_sat());
    }

    #[test]
    fn several_primes() {
        // x and y incomparable under divisibility.
        let f = Formula::and([
            Formula::not(atom(SkolemAtom::divides(Monomial::of(&["x"]), Monomial::of(&["y"])))),
            Formula::not(atom(SkolemAtom::divides(Monomial::of(&["y"]), Monomial::of(&["x"])))),
        ]);
        let SkolemResult::Sat { witness, .. } = skolem_sat(&f) else { panic!() };
        assert_eq!(eval_skolem(&f, &witness), Some(true));
        assert_eq!(primes(5), vec![2, 3, 5, 7, 11]);
    }
}
