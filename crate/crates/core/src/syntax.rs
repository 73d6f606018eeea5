//! Surface syntax shared by all logics.
//!
//! A script is a sequence of s-expression forms:
//!
//! ```text
//! (set-logic POWER | QFBAPA | QFBAPAI | CAL | SKOLEM)
//! (declare-structure (carrier N) (const c V) (fun f ARITY (ARGS.. V) ..) (rel R ARITY (ARGS..) ..))
//! (declare-structure int) | (declare-structure nat)
//! (declare-index-card N) | (declare-index-card inf)
//! (declare-const NAME SORT)        ; SORT is Elem, Set, Int, Index or Nat
//! (declare-array NAME)
//! (define-set NAME (lambda (ARRAYS..) FORMULA))
//! (assert FORMULA)
//! (check-sat)
//! ```
//!
//! Comments run from `;` to the end of the line. Identifiers may not contain
//! `!` or `#`; those are kept for names the solvers introduce.

use std::collections::{BTreeMap, BTreeSet};
use std::fmt;

use crate::cal::{ArrayTerm, CALFormula, CalAtom, CardTerm, PointAtom, ValueTerm};
use crate::formula::{Atom, Formula, QFFormula, Term};
use crate::oracle::{lia_oracle, ComponentOracle, FiniteOracle};
use crate::qfbapa::{BapaAtom, Maxc, PATerm, QFBAPAFormula, SetExpr};
use crate::skolem::{Monomial, SkolemAtom, SkolemFormula, SkolemKind};
use crate::structures::{FiniteStructure, IndexCard};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub struct Pos {
    pub line: usize,
    pub col: usize,
}

impl fmt::Display for Pos {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}:{}", self.line, self.col)
    }
}

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
#[error("{line}:{col}: {message}")]
pub struct ParseError {
    pub line: usize,
    pub col: usize,
    pub message: String,
}

fn err<T>(pos: Pos, message: impl Into<String>) -> Result<T, ParseError> {
    Err(ParseError { line: pos.line, col: pos.col, message: message.into() })
}

/// An s-expression. Equality ignores positions.
#[derive(Debug, Clone)]
pub enum Sexp {
    Sym(String, Pos),
    List(Vec<Sexp>, Pos),
}

impl PartialEq for Sexp {
    fn eq(&self, other: &Self) -> bool {
        match (self, other) {
            (Sexp::Sym(a, _), Sexp::Sym(b, _)) => a == b,
            (Sexp::List(a, _), Sexp::List(b, _)) => a == b,
            _ => false,
        }
    }
}

impl Eq for Sexp {}

impl Sexp {
    pub fn pos(&self) -> Pos {
        match self {
            Sexp::Sym(_, p) | Sexp::List(_, p) => *p,
        }
    }

    pub fn sym(s: impl Into<String>) -> Sexp {
        Sexp::Sym(s.into(), Pos::default())
    }

    pub fn list(items: Vec<Sexp>) -> Sexp {
        Sexp::List(items, Pos::default())
    }

    fn as_sym(&self) -> Option<&str> {
        match self {
            Sexp::Sym(s, _) => Some(s),
            Sexp::List(..) => None,
        }
    }
}

impl fmt::Display for Sexp {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Sexp::Sym(s, _) => write!(f, "{s}"),
            Sexp::List(items, _) => {
                write!(f, "(")?;
                for (i, x) in items.iter().enumerate() {
                    if i > 0 {
                        write!(f, " ")?;
                    }
                    write!(f, "{x}")?;
                }
                write!(f, ")")
            }
        }
    }
}

/// Reads every top-level s-expression in `text`.
pub fn read(text: &str) -> Result<Vec<Sexp>, ParseError> {
    let mut stack: Vec<(Vec<Sexp>, Pos)> = vec![(Vec::new(), Pos::default())];
    let (mut line, mut col) = (1usize, 0usize);
    let mut chars = text.chars().peekable();
    let mut token = String::new();
    let mut token_pos = Pos::default();
    let flush = |token: &mut String, pos: Pos, stack: &mut Vec<(Vec<Sexp>, Pos)>| {
        if !token.is_empty() {
            stack.last_mut().unwrap().0.push(Sexp::Sym(std::mem::take(token), pos));
        }
    };
    while let Some(c) = chars.next() {
        if c == '\n' {
            line += 1;
            col = 0;
        } else {
            col += 1;
        }
        let here = Pos { line, col };
        match c {
            ';' => {
                flush(&mut token, token_pos, &mut stack);
                while let Some(&d) = chars.peek() {
                    if d == '\n' {
                        break;
                    }
                    chars.next();
                    col += 1;
                }
            }
            '(' => {
                flush(&mut token, token_pos, &mut stack);
                stack.push((Vec::new(), here));
            }
            ')' => {
                flush(&mut token, token_pos, &mut stack);
                if stack.len() == 1 {
                    return err(here, "unbalanced ')'");
                }
                let (items, pos) = stack.pop().unwrap();
                stack.last_mut().unwrap().0.push(Sexp::List(items, pos));
            }
            c if c.is_whitespace() => flush(&mut token, token_pos, &mut stack),
            c => {
                if token.is_empty() {
                    token_pos = here;
                }
                token.push(c);
            }
        }
    }
    flush(&mut token, token_pos, &mut stack);
    if stack.len() > 1 {
        let (_, pos) = stack.pop().unwrap();
        return err(pos, "unbalanced '(': list is never closed");
    }
    Ok(stack.pop().unwrap().0)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord)]
pub enum Logic {
    Power,
    Qfbapa,
    Qfbapai,
    Cal,
    Skolem,
}

impl Logic {
    pub const ALL: [Logic; 5] = [Logic::Power, Logic::Qfbapa, Logic::Qfbapai, Logic::Cal, Logic::Skolem];

    pub fn name(self) -> &'static str {
        match self {
            Logic::Power => "POWER",
            Logic::Qfbapa => "QFBAPA",
            Logic::Qfbapai => "QFBAPAI",
            Logic::Cal => "CAL",
            Logic::Skolem => "SKOLEM",
        }
    }

    pub fn from_name(s: &str) -> Option<Logic> {
        Logic::ALL.into_iter().find(|l| l.name().eq_ignore_ascii_case(s))
    }
}

impl fmt::Display for Logic {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord)]
pub enum Sort {
    Elem,
    Set,
    Int,
    Index,
    Nat,
}

impl Sort {
    fn parse(s: &str) -> Option<Sort> {
        Some(match s {
            "Elem" => Sort::Elem,
            "Set" => Sort::Set,
            "Int" => Sort::Int,
            "Index" => Sort::Index,
            "Nat" => Sort::Nat,
            _ => return None,
        })
    }
}

impl fmt::Display for Sort {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Sort::Elem => "Elem",
            Sort::Set => "Set",
            Sort::Int => "Int",
            Sort::Index => "Index",
            Sort::Nat => "Nat",
        })
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum StructureDecl {
    Finite {
        size: usize,
        constants: Vec<(String, usize)>,
        functions: Vec<(String, usize, Vec<(Vec<usize>, usize)>)>,
        relations: Vec<(String, usize, Vec<Vec<usize>>)>,
    },
    Integers,
    Naturals,
}

impl StructureDecl {
    pub fn of_structure(s: &FiniteStructure) -> StructureDecl {
        StructureDecl::Finite {
            size: s.size(),
            constants: s.constants().iter().map(|(c, &v)| (c.clone(), v)).collect(),
            functions: s
                .function_names()
                .map(|f| {
                    let (arity, rows) = s.function_rows(f).unwrap();
                    (f.clone(), arity, rows)
                })
                .collect(),
            relations: s
                .relation_names()
                .map(|r| {
                    let (arity, rows) = s.relation_rows(r).unwrap();
                    (r.clone(), arity, rows)
                })
                .collect(),
        }
    }
}

impl fmt::Display for StructureDecl {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            StructureDecl::Integers => write!(f, "(declare-structure int)"),
            StructureDecl::Naturals => write!(f, "(declare-structure nat)"),
            StructureDecl::Finite { size, constants, functions, relations } => {
                write!(f, "(declare-structure (carrier {size})")?;
                for (c, v) in constants {
                    write!(f, " (const {c} {v})")?;
                }
                let join = |xs: &[usize]| xs.iter().map(usize::to_string).collect::<Vec<_>>().join(" ");
                for (name, arity, rows) in functions {
                    write!(f, " (fun {name} {arity}")?;
                    for (args, v) in rows {
                        let mut all = args.clone();
                        all.push(*v);
                        write!(f, " ({})", join(&all))?;
                    }
                    write!(f, ")")?;
                }
                for (name, arity, rows) in relations {
                    write!(f, " (rel {name} {arity}")?;
                    for row in rows {
                        write!(f, " ({})", join(row))?;
                    }
                    write!(f, ")")?;
                }
                write!(f, ")")
            }
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum Command {
    DeclareStructure(StructureDecl),
    DeclareIndexCard(IndexCard),
    DeclareConst(String, Sort),
    DeclareArray(String),
    DefineSet(String, Vec<String>, Sexp),
    Assert(Sexp),
    CheckSat,
}

impl fmt::Display for Command {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Command::DeclareStructure(s) => write!(f, "{s}"),
            Command::DeclareIndexCard(c) => write!(f, "(declare-index-card {c})"),
            Command::DeclareConst(n, s) => write!(f, "(declare-const {n} {s})"),
            Command::DeclareArray(n) => write!(f, "(declare-array {n})"),
            Command::DefineSet(n, vars, body) => write!(f, "(define-set {n} (lambda ({}) {body}))", vars.join(" ")),
            Command::Assert(b) => write!(f, "(assert {b})"),
            Command::CheckSat => write!(f, "(check-sat)"),
        }
    }
}

/// A parsed script. Equality ignores source positions.
#[derive(Debug, Clone)]
pub struct Script {
    pub logic: Logic,
    pub commands: Vec<Command>,
    /// Source position of each command.
    pub positions: Vec<Pos>,
}

impl PartialEq for Script {
    fn eq(&self, other: &Self) -> bool {
        self.logic == other.logic && self.commands == other.commands
    }
}

impl fmt::Display for Script {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        writeln!(f, "(set-logic {})", self.logic)?;
        for c in &self.commands {
            writeln!(f, "{c}")?;
        }
        Ok(())
    }
}

const KEYWORDS: [&str; 29] = [
    "and", "or", "not", "true", "false", "=", "<=", "<", "+", "-", "*", "|", "card", "union", "inter", "compl",
    "store", "select", "const", "dvd", "subset", "empty", "univ", "maxc", "lambda", "inf", "int", "nat", "carrier",
];

fn identifier(x: &Sexp) -> Result<String, ParseError> {
    let Sexp::Sym(s, pos) = x else { return err(x.pos(), "expected an identifier") };
    if s.contains('!') || s.contains('#') {
        return err(*pos, format!("identifier {s} uses a reserved character ('!' and '#' are reserved)"));
    }
    if KEYWORDS.contains(&s.as_str()) || s.parse::<i64>().is_ok() || Logic::from_name(s).is_some() {
        return err(*pos, format!("{s} cannot be used as a name"));
    }
    Ok(s.clone())
}

fn numeral<T: std::str::FromStr>(x: &Sexp) -> Result<T, ParseError> {
    match x {
        Sexp::Sym(s, pos) => s.parse().or_else(|_| err(*pos, format!("expected a numeral, found {s}"))),
        Sexp::List(_, pos) => err(*pos, "expected a numeral"),
    }
}

fn parse_structure(items: &[Sexp], pos: Pos) -> Result<StructureDecl, ParseError> {
    match items {
        [Sexp::Sym(s, _)] if s == "int" => return Ok(StructureDecl::Integers),
        [Sexp::Sym(s, _)] if s == "nat" => return Ok(StructureDecl::Naturals),
        _ => {}
    }
    let mut size = None;
    let mut constants = Vec::new();
    let mut functions = Vec::new();
    let mut relations = Vec::new();
    for item in items {
        let Sexp::List(parts, ppos) = item else { return err(item.pos(), "expected a structure component") };
        let head = parts.first().and_then(Sexp::as_sym).unwrap_or("");
        match (head, &parts[..]) {
            ("carrier", [_, n]) => size = Some(numeral::<usize>(n)?),
            ("const", [_, c, v]) => constants.push((identifier(c)?, numeral(v)?)),
            ("fun", [_, name, arity, rows @ ..]) => {
                let arity: usize = numeral(arity)?;
                let mut table = Vec::new();
                for row in rows {
                    let Sexp::List(cells, rpos) = row else { return err(row.pos(), "expected a table row") };
                    if cells.len() != arity + 1 {
                        return err(*rpos, format!("row needs {} entries", arity + 1));
                    }
                    let cells: Vec<usize> = cells.iter().map(numeral).collect::<Result<_, _>>()?;
                    table.push((cells[..arity].to_vec(), cells[arity]));
                }
                functions.push((identifier(name)?, arity, table));
            }
            ("rel", [_, _, arity, rows @ ..]) => {
                let arity: usize = numeral(arity)?;
                let mut table = Vec::new();
                for row in rows {
                    let Sexp::List(cells, rpos) = row else { return err(row.pos(), "expected a table row") };
                    if cells.len() != arity {
                        return err(*rpos, format!("row needs {arity} entries"));
                    }
                    table.push(cells.iter().map(numeral).collect::<Result<Vec<usize>, _>>()?);
                }
                let name = match &parts[1] {
                    Sexp::Sym(s, _) if s == "<=" || s == "<" => s.clone(),
                    other => identifier(other)?,
                };
                relations.push((name, arity, table));
            }
            _ => return err(*ppos, format!("unknown structure component {head}")),
        }
    }
    let Some(size) = size else { return err(pos, "structure needs (carrier N)") };
    Ok(StructureDecl::Finite { size, constants, functions, relations })
}

fn parse_command(x: &Sexp) -> Result<Option<Result<Logic, Command>>, ParseError> {
    let Sexp::List(items, pos) = x else { return err(x.pos(), "expected a command") };
    let Some(head) = items.first().and_then(Sexp::as_sym) else { return err(*pos, "expected a command name") };
    let args = &items[1..];
    let command = match (head, args) {
        ("set-logic", [Sexp::Sym(name, lpos)]) => match Logic::from_name(name) {
            Some(l) => return Ok(Some(Ok(l))),
            None => {
                let valid: Vec<&str> = Logic::ALL.iter().map(|l| l.name()).collect();
                return err(*lpos, format!("unknown logic {name}; valid logics are {}", valid.join(", ")));
            }
        },
        ("declare-structure", parts) => Command::DeclareStructure(parse_structure(parts, *pos)?),
        ("declare-index-card", [Sexp::Sym(s, _)]) if s == "inf" => Command::DeclareIndexCard(IndexCard::Unbounded),
        ("declare-index-card", [n]) => {
            Command::DeclareIndexCard(IndexCard::Finite(numeral(n)?))
        }
        ("declare-const", [name, Sexp::Sym(sort, spos)]) => {
            let Some(sort) = Sort::parse(sort) else {
                return err(*spos, format!("unknown sort {sort}; valid sorts are Elem, Set, Int, Index, Nat"));
            };
            Command::DeclareConst(identifier(name)?, sort)
        }
        ("declare-array", [name]) => Command::DeclareArray(identifier(name)?),
        ("define-set", [name, Sexp::List(lam, lpos)]) => match &lam[..] {
            [Sexp::Sym(l, _), Sexp::List(vars, _), body] if l == "lambda" => {
                let vars = vars.iter().map(identifier).collect::<Result<_, _>>()?;
                Command::DefineSet(identifier(name)?, vars, body.clone())
            }
            _ => return err(*lpos, "expected (lambda (ARRAYS..) FORMULA)"),
        },
        ("assert", [body]) => Command::Assert(body.clone()),
        ("check-sat", []) => Command::CheckSat,
        _ => return err(*pos, format!("malformed or unknown command {head}")),
    };
    Ok(Some(Err(command)))
}

pub fn parse(text: &str) -> Result<Script, ParseError> {
    let forms = read(text)?;
    let mut logic = None;
    let mut commands = Vec::new();
    let mut positions = Vec::new();
    for form in &forms {
        match parse_command(form)? {
            Some(Ok(l)) => {
                if logic.is_some() {
                    return err(form.pos(), "the logic is already set");
                }
                if !commands.is_empty() {
                    return err(form.pos(), "set-logic must come first");
                }
                logic = Some(l);
            }
            Some(Err(c)) => {
                if logic.is_none() {
                    return err(form.pos(), "set-logic must come first");
                }
                commands.push(c);
                positions.push(form.pos());
            }
            None => {}
        }
    }
    match logic {
        Some(logic) => Ok(Script { logic, commands, positions }),
        None => err(Pos { line: 1, col: 1 }, "missing (set-logic ...)"),
    }
}

/// The component theory of a script.
#[derive(Debug, Clone, PartialEq, Eq)]
pub enum Component {
    Finite(FiniteStructure),
    Integers,
    Naturals,
}

impl Component {
    pub fn oracle(&self) -> Box<dyn ComponentOracle> {
        match self {
            Component::Finite(s) => Box::new(FiniteOracle::new(s.clone())),
            Component::Integers => Box::new(lia_oracle(false)),
            Component::Naturals => Box::new(lia_oracle(true)),
        }
    }

    pub fn decl(&self) -> StructureDecl {
        match self {
            Component::Finite(s) => StructureDecl::of_structure(s),
            Component::Integers => StructureDecl::Integers,
            Component::Naturals => StructureDecl::Naturals,
        }
    }

    fn numerals(&self) -> bool {
        !matches!(self, Component::Finite(_))
    }

    fn has_constant(&self, c: &str) -> bool {
        match self {
            Component::Finite(s) => s.constant_value(c).is_some(),
            _ => c.parse::<i64>().is_ok(),
        }
    }

    fn function_arity(&self, f: &str) -> Option<usize> {
        match self {
            Component::Finite(s) => s.signature().function_arity(f),
            _ => matches!(f, "+" | "-" | "*").then_some(2),
        }
    }

    fn relation_arity(&self, r: &str) -> Option<usize> {
        match self {
            Component::Finite(s) => s.signature().relation_arity(r),
            _ => matches!(r, "=" | "<=" | "<").then_some(2),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum Problem {
    Power {
        component: Component,
        index_card: IndexCard,
        vars: Vec<String>,
        formula: QFFormula,
    },
    Qfbapa {
        maxc: Maxc,
        sets: Vec<String>,
        ints: Vec<String>,
        formula: QFBAPAFormula,
    },
    Qfbapai {
        component: Component,
        index_card: IndexCard,
        arrays: Vec<String>,
        constants: Vec<String>,
        free_sets: Vec<String>,
        ints: Vec<String>,
        defined: Vec<(String, QFFormula)>,
        skeleton: QFBAPAFormula,
    },
    Cal {
        component: Component,
        index_card: IndexCard,
        arrays: Vec<String>,
        indices: Vec<String>,
        values: Vec<String>,
        formula: CALFormula,
    },
    Skolem {
        vars: Vec<String>,
        formula: SkolemFormula,
    },
}

impl Problem {
    pub fn logic(&self) -> Logic {
        match self {
            Problem::Power { .. } => Logic::Power,
            Problem::Qfbapa { .. } => Logic::Qfbapa,
            Problem::Qfbapai { .. } => Logic::Qfbapai,
            Problem::Cal { .. } => Logic::Cal,
            Problem::Skolem { .. } => Logic::Skolem,
        }
    }

    /// Script text that elaborates back to this problem.
    pub fn to_text(&self) -> String {
        let mut out = format!("(set-logic {})\n", self.logic());
        let mut line = |s: String| {
            out.push_str(&s);
            out.push('\n');
        };
        match self {
            Problem::Power { component, index_card, vars, formula } => {
                line(component.decl().to_string());
                line(format!("(declare-index-card {index_card})"));
                vars.iter().for_each(|v| line(format!("(declare-const {v} Elem)")));
                line(format!("(assert {formula})"));
            }
            Problem::Qfbapa { maxc, sets, ints, formula } => {
                if let Maxc::Fixed(n) = maxc {
                    line(format!("(declare-index-card {n})"));
                }
                sets.iter().for_each(|v| line(format!("(declare-const {v} Set)")));
                ints.iter().for_each(|v| line(format!("(declare-const {v} Int)")));
                line(format!("(assert {formula})"));
            }
            Problem::Qfbapai { component, index_card, arrays, constants, free_sets, ints, defined, skeleton } => {
                line(component.decl().to_string());
                line(format!("(declare-index-card {index_card})"));
                arrays.iter().for_each(|v| line(format!("(declare-array {v})")));
                constants.iter().for_each(|v| line(format!("(declare-const {v} Elem)")));
                free_sets.iter().for_each(|v| line(format!("(declare-const {v} Set)")));
                ints.iter().for_each(|v| line(format!("(declare-const {v} Int)")));
                let array_set: BTreeSet<&String> = arrays.iter().collect();
                for (s, phi) in defined {
                    let params: Vec<String> = phi.free_vars().into_iter().filter(|v| array_set.contains(v)).collect();
                    line(format!("(define-set {s} (lambda ({}) {phi}))", params.join(" ")));
                }
                line(format!("(assert {skeleton})"));
            }
            Problem::Cal { component, index_card, arrays, indices, values, formula } => {
                line(component.decl().to_string());
                line(format!("(declare-index-card {index_card})"));
                arrays.iter().for_each(|v| line(format!("(declare-array {v})")));
                indices.iter().for_each(|v| line(format!("(declare-const {v} Index)")));
                values.iter().for_each(|v| line(format!("(declare-const {v} Elem)")));
                line(format!("(assert {formula})"));
            }
            Problem::Skolem { vars, formula } => {
                vars.iter().for_each(|v| line(format!("(declare-const {v} Nat)")));
                line(format!("(assert {formula})"));
            }
        }
        out.push_str("(check-sat)\n");
        out
    }
}

fn build_structure(decl: &StructureDecl, pos: Pos) -> Result<Component, ParseError> {
    match decl {
        StructureDecl::Integers => Ok(Component::Integers),
        StructureDecl::Naturals => Ok(Component::Naturals),
        StructureDecl::Finite { size, constants, functions, relations } => {
            if *size == 0 {
                return err(pos, "the carrier is non-empty");
            }
            let fail = |e: crate::structures::StructureError| ParseError {
                line: pos.line,
                col: pos.col,
                message: e.to_string(),
            };
            let mut s = FiniteStructure::new(*size);
            for (c, v) in constants {
                s = s.with_constant(c, *v).map_err(fail)?;
            }
            for (f, arity, rows) in functions {
                s = s.with_function_rows(f, *arity, rows).map_err(fail)?;
            }
            for (r, arity, rows) in relations {
                s = s.with_relation_rows(r, *arity, rows).map_err(fail)?;
            }
            Ok(Component::Finite(s))
        }
    }
}

struct Env {
    logic: Logic,
    component: Option<Component>,
    index_card: Option<IndexCard>,
    sorts: BTreeMap<String, Sort>,
    order: Vec<(String, Sort)>,
    arrays: Vec<String>,
    defined: Vec<(String, QFFormula)>,
    asserts: Vec<Sexp>,
}

impl Env {
    fn declare(&mut self, name: &str, sort: Option<Sort>, pos: Pos) -> Result<(), ParseError> {
        if self.sorts.contains_key(name) || self.arrays.iter().any(|a| a == name) {
            return err(pos, format!("{name} is declared twice"));
        }
        if self.component.as_ref().is_some_and(|c| c.has_constant(name) || c.function_arity(name).is_some()) {
            return err(pos, format!("{name} clashes with a structure symbol"));
        }
        match sort {
            Some(s) => {
                self.sorts.insert(name.to_string(), s);
                self.order.push((name.to_string(), s));
            }
            None => self.arrays.push(name.to_string()),
        }
        Ok(())
    }

    fn component(&self, pos: Pos) -> Result<&Component, ParseError> {
        self.component.as_ref().map_or_else(|| err(pos, "declare-structure must come first"), Ok)
    }

    fn vars_of(&self, sort: Sort) -> Vec<String> {
        self.order.iter().filter(|(_, s)| *s == sort).map(|(n, _)| n.clone()).collect()
    }

    fn is_array(&self, n: &str) -> bool {
        self.arrays.iter().any(|a| a == n)
    }
}

fn list_head(x: &Sexp) -> Option<(&str, &[Sexp], Pos)> {
    match x {
        Sexp::List(items, pos) => Some((items.first()?.as_sym()?, &items[1..], *pos)),
        Sexp::Sym(..) => None,
    }
}

/// Boolean structure shared by every logic.
fn formula<A: Clone + Ord>(
    x: &Sexp,
    atom: &mut dyn FnMut(&Sexp) -> Result<Formula<A>, ParseError>,
) -> Result<Formula<A>, ParseError> {
    match x {
        Sexp::Sym(s, _) if s == "true" => return Ok(Formula::tt()),
        Sexp::Sym(s, _) if s == "false" => return Ok(Formula::ff()),
        _ => {}
    }
    if let Some((head, args, pos)) = list_head(x) {
        match head {
            "and" | "or" => {
                let cs = args.iter().map(|a| formula(a, atom)).collect::<Result<Vec<_>, _>>()?;
                return Ok(if head == "and" { Formula::And(cs) } else { Formula::Or(cs) });
            }
            "not" => {
                let [a] = args else { return err(pos, "not takes one argument") };
                return Ok(Formula::not(formula(a, atom)?));
            }
            _ => {}
        }
    }
    atom(x)
}

fn component_term(c: &Component, vars: &dyn Fn(&str) -> bool, x: &Sexp) -> Result<Term, ParseError> {
    match x {
        Sexp::Sym(s, pos) => {
            if vars(s) {
                Ok(Term::var(s.clone()))
            } else if c.has_constant(s) {
                Ok(Term::cst(s.clone()))
            } else {
                err(*pos, format!("unknown symbol {s}"))
            }
        }
        Sexp::List(items, pos) => {
            let Some(f) = items.first().and_then(Sexp::as_sym) else { return err(*pos, "expected a function") };
            let Some(arity) = c.function_arity(f) else { return err(*pos, format!("unknown function {f}")) };
            if items.len() - 1 != arity {
                return err(*pos, format!("{f} takes {arity} arguments"));
            }
            let args = items[1..].iter().map(|a| component_term(c, vars, a)).collect::<Result<_, _>>()?;
            Ok(Term::app(f, args))
        }
    }
}

fn component_formula(c: &Component, vars: &dyn Fn(&str) -> bool, x: &Sexp) -> Result<QFFormula, ParseError> {
    formula(x, &mut |a| {
        let Some((rel, args, pos)) = list_head(a) else { return err(a.pos(), "expected an atom") };
        let Some(arity) = c.relation_arity(rel) else { return err(pos, format!("unknown relation {rel}")) };
        if args.len() != arity {
            return err(pos, format!("{rel} takes {arity} arguments"));
        }
        let terms = args.iter().map(|t| component_term(c, vars, t)).collect::<Result<_, _>>()?;
        Ok(Formula::Atom(Atom::new(rel, terms)))
    })
}

fn set_expr(env: &Env, x: &Sexp) -> Result<SetExpr, ParseError> {
    match x {
        Sexp::Sym(s, _) if s == "empty" => Ok(SetExpr::Empty),
        Sexp::Sym(s, _) if s == "univ" => Ok(SetExpr::Universe),
        Sexp::Sym(s, pos) => match env.sorts.get(s) {
            Some(Sort::Set) => Ok(SetExpr::var(s.clone())),
            _ if env.defined.iter().any(|(d, _)| d == s) => Ok(SetExpr::var(s.clone())),
            _ => err(*pos, format!("{s} is not a set")),
        },
        Sexp::List(..) => {
            let (head, args, pos) = list_head(x).ok_or_else(|| ParseError {
                line: x.pos().line,
                col: x.pos().col,
                message: "expected a set expression".into(),
            })?;
            let parts = || args.iter().map(|a| set_expr(env, a)).collect::<Result<Vec<_>, _>>();
            match head {
                "union" if !args.is_empty() => Ok(SetExpr::union_all(parts()?)),
                "inter" if !args.is_empty() => Ok(SetExpr::inter_all(parts()?)),
                "compl" if args.len() == 1 => Ok(SetExpr::compl(parts()?.pop().unwrap())),
                _ => err(pos, format!("malformed set expression {x}")),
            }
        }
    }
}

fn is_set_term(env: &Env, x: &Sexp) -> bool {
    match x {
        Sexp::Sym(s, _) => {
            s == "empty" || s == "univ" || env.sorts.get(s) == Some(&Sort::Set) || env.defined.iter().any(|(d, _)| d == s)
        }
        Sexp::List(..) => matches!(list_head(x), Some(("union" | "inter" | "compl", _, _))),
    }
}

fn pa_term(env: &Env, x: &Sexp) -> Result<PATerm, ParseError> {
    match x {
        Sexp::Sym(s, _) if s == "maxc" => Ok(PATerm::MaxC),
        Sexp::Sym(s, pos) => {
            if let Ok(k) = s.parse::<i64>() {
                Ok(PATerm::Const(k))
            } else if env.sorts.get(s) == Some(&Sort::Int) {
                Ok(PATerm::var(s.clone()))
            } else {
                err(*pos, format!("{s} is not an integer"))
            }
        }
        Sexp::List(..) => {
            let Some((head, args, pos)) = list_head(x) else { return err(x.pos(), "expected an integer term") };
            match (head, args) {
                ("card", [s]) => Ok(PATerm::card(set_expr(env, s)?)),
                ("+", [first, rest @ ..]) if !rest.is_empty() => {
                    let mut t = pa_term(env, first)?;
                    for r in rest {
                        t = PATerm::plus(t, pa_term(env, r)?);
                    }
                    Ok(t)
                }
                ("-", [a, b]) => Ok(PATerm::plus(pa_term(env, a)?, PATerm::scale(-1, pa_term(env, b)?))),
                ("*", [k, t]) | ("*", [t, k]) if k.as_sym().is_some_and(|s| s.parse::<i64>().is_ok()) => {
                    Ok(PATerm::scale(numeral(k)?, pa_term(env, t)?))
                }
                _ => err(pos, format!("malformed integer term {x}")),
            }
        }
    }
}

fn bapa_formula(env: &Env, x: &Sexp) -> Result<QFBAPAFormula, ParseError> {
    formula(x, &mut |a| {
        let Some((head, args, pos)) = list_head(a) else { return err(a.pos(), "expected an atom") };
        let atom = match (head, args) {
            ("=", [l, r]) if is_set_term(env, l) || is_set_term(env, r) => {
                BapaAtom::SetEq(set_expr(env, l)?, set_expr(env, r)?)
            }
            ("=", [l, r]) => BapaAtom::IntEq(pa_term(env, l)?, pa_term(env, r)?),
            ("subset", [l, r]) => BapaAtom::Subset(set_expr(env, l)?, set_expr(env, r)?),
            ("<=", [l, r]) => BapaAtom::IntLe(pa_term(env, l)?, pa_term(env, r)?),
            ("<", [l, r]) => BapaAtom::IntLe(PATerm::plus(pa_term(env, l)?, PATerm::Const(1)), pa_term(env, r)?),
            ("dvd", [k, t]) => {
                let k: u64 = numeral(k)?;
                if k == 0 {
                    return err(pos, "divisor must be positive");
                }
                BapaAtom::Dvd(k, pa_term(env, t)?)
            }
            _ => return err(pos, format!("malformed atom {a}")),
        };
        Ok(Formula::Atom(atom))
    })
}

enum CalSorted {
    Array(ArrayTerm),
    Value(ValueTerm),
    Index(String),
    Int(CardTerm),
    Numeral(i64),
}

fn cal_term(env: &Env, c: &Component, x: &Sexp) -> Result<CalSorted, ParseError> {
    match x {
        Sexp::Sym(s, _) if s == "maxc" => Ok(CalSorted::Int(CardTerm::Size)),
        Sexp::Sym(s, pos) => {
            if let Ok(k) = s.parse::<i64>() {
                return Ok(CalSorted::Numeral(k));
            }
            if env.is_array(s) {
                return Ok(CalSorted::Array(ArrayTerm::var(s.clone())));
            }
            match env.sorts.get(s) {
                Some(Sort::Index) => Ok(CalSorted::Index(s.clone())),
                Some(Sort::Elem) => Ok(CalSorted::Value(ValueTerm::var(s.clone()))),
                _ if c.has_constant(s) => Ok(CalSorted::Value(ValueTerm::cst(s.clone()))),
                _ => err(*pos, format!("unknown symbol {s}")),
            }
        }
        Sexp::List(..) => {
            let Some((head, args, pos)) = list_head(x) else { return err(x.pos(), "expected a term") };
            match (head, args) {
                ("const", [k]) => {
                    let k = k.as_sym().unwrap_or("");
                    if !c.has_constant(k) {
                        return err(pos, format!("{k} is not a structure constant"));
                    }
                    Ok(CalSorted::Array(ArrayTerm::Const(k.to_string())))
                }
                ("store", [a, i, v]) => {
                    let a = cal_array(env, c, a)?;
                    let i = cal_index(env, c, i)?;
                    let v = cal_value(env, c, v)?;
                    Ok(CalSorted::Array(ArrayTerm::store(a, i, v)))
                }
                ("select", [a, i]) => {
                    let a = cal_array(env, c, a)?;
                    Ok(CalSorted::Value(a.read(cal_index(env, c, i)?)))
                }
                ("card", [phi]) => Ok(CalSorted::Int(CardTerm::card(point_formula(env, c, phi)?))),
                _ => {
                    let parts = args.iter().map(|a| cal_term(env, c, a)).collect::<Result<Vec<_>, _>>()?;
                    let int_context = parts.iter().any(|p| matches!(p, CalSorted::Int(_)))
                        || (!c.numerals() && parts.iter().all(|p| matches!(p, CalSorted::Numeral(_))));
                    if int_context && matches!(head, "+" | "*" | "-") {
                        return card_arith(head, parts, pos, x);
                    }
                    let Some(arity) = c.function_arity(head) else {
                        return err(pos, format!("unknown function {head}"));
                    };
                    if parts.len() != arity {
                        return err(pos, format!("{head} takes {arity} arguments"));
                    }
                    if parts.iter().any(|p| matches!(p, CalSorted::Array(_))) {
                        let arrays = parts.into_iter().map(|p| lift(p, c, pos)).collect::<Result<_, _>>()?;
                        Ok(CalSorted::Array(ArrayTerm::App(head.to_string(), arrays)))
                    } else {
                        let values = parts.into_iter().map(|p| as_value(p, c, pos)).collect::<Result<_, _>>()?;
                        Ok(CalSorted::Value(ValueTerm::App(head.to_string(), values)))
                    }
                }
            }
        }
    }
}

fn card_arith(head: &str, parts: Vec<CalSorted>, pos: Pos, x: &Sexp) -> Result<CalSorted, ParseError> {
    let as_int = |p: CalSorted| match p {
        CalSorted::Int(t) => Ok(t),
        CalSorted::Numeral(k) => Ok(CardTerm::Const(k)),
        _ => err(pos, format!("mixed sorts in {x}")),
    };
    let mut it = parts.into_iter();
    match (head, it.len()) {
        ("+", n) if n >= 2 => {
            let first = as_int(it.next().unwrap())?;
            it.try_fold(first, |acc, p| Ok(CardTerm::plus(acc, as_int(p)?))).map(CalSorted::Int)
        }
        ("-", 2) => {
            let a = as_int(it.next().unwrap())?;
            let b = as_int(it.next().unwrap())?;
            Ok(CalSorted::Int(CardTerm::plus(a, CardTerm::Scale(-1, Box::new(b)))))
        }
        ("*", 2) => match (it.next().unwrap(), it.next().unwrap()) {
            (CalSorted::Numeral(k), t) | (t, CalSorted::Numeral(k)) => {
                Ok(CalSorted::Int(CardTerm::Scale(k, Box::new(as_int(t)?))))
            }
            _ => err(pos, format!("nonlinear cardinality term {x}")),
        },
        _ => err(pos, format!("malformed cardinality term {x}")),
    }
}

fn lift(p: CalSorted, c: &Component, pos: Pos) -> Result<ArrayTerm, ParseError> {
    match p {
        CalSorted::Array(a) => Ok(a),
        CalSorted::Value(ValueTerm::Const(k)) => Ok(ArrayTerm::Const(k)),
        CalSorted::Numeral(k) if c.numerals() => Ok(ArrayTerm::Const(k.to_string())),
        _ => err(pos, "expected an array term"),
    }
}

fn as_value(p: CalSorted, c: &Component, pos: Pos) -> Result<ValueTerm, ParseError> {
    match p {
        CalSorted::Value(v) => Ok(v),
        CalSorted::Numeral(k) if c.numerals() => Ok(ValueTerm::cst(k.to_string())),
        _ => err(pos, "expected a value term"),
    }
}

fn cal_array(env: &Env, c: &Component, x: &Sexp) -> Result<ArrayTerm, ParseError> {
    let t = cal_term(env, c, x)?;
    match t {
        CalSorted::Array(a) => Ok(a),
        _ => err(x.pos(), format!("{x} is not an array")),
    }
}

fn cal_value(env: &Env, c: &Component, x: &Sexp) -> Result<ValueTerm, ParseError> {
    as_value(cal_term(env, c, x)?, c, x.pos())
}

fn cal_index(env: &Env, c: &Component, x: &Sexp) -> Result<String, ParseError> {
    match cal_term(env, c, x)? {
        CalSorted::Index(i) => Ok(i),
        _ => err(x.pos(), format!("{x} is not an index")),
    }
}

fn point_formula(env: &Env, c: &Component, x: &Sexp) -> Result<Formula<PointAtom>, ParseError> {
    formula(x, &mut |a| {
        let Some((rel, args, pos)) = list_head(a) else { return err(a.pos(), "expected a pointwise atom") };
        let Some(arity) = c.relation_arity(rel) else { return err(pos, format!("unknown relation {rel}")) };
        if args.len() != arity {
            return err(pos, format!("{rel} takes {arity} arguments"));
        }
        let mut terms = Vec::new();
        for t in args {
            terms.push(lift(cal_term(env, c, t)?, c, t.pos())?);
        }
        Ok(Formula::Atom(PointAtom::new(rel, terms)))
    })
}

fn cal_formula(env: &Env, c: &Component, x: &Sexp) -> Result<CALFormula, ParseError> {
    formula(x, &mut |a| {
        let Some((rel, args, pos)) = list_head(a) else { return err(a.pos(), "expected an atom") };
        let parts = args.iter().map(|t| cal_term(env, c, t)).collect::<Result<Vec<_>, _>>()?;
        let any = |f: fn(&CalSorted) -> bool| parts.iter().any(f);
        let int_context = any(|p| matches!(p, CalSorted::Int(_)))
            || (!c.numerals() && !parts.is_empty() && parts.iter().all(|p| matches!(p, CalSorted::Numeral(_))));
        if int_context {
            let as_int = |p: CalSorted| match p {
                CalSorted::Int(t) => Ok(t),
                CalSorted::Numeral(k) => Ok(CardTerm::Const(k)),
                _ => err(pos, format!("mixed sorts in {a}")),
            };
            let mut it = parts.into_iter();
            let (Some(l), Some(r), None) = (it.next(), it.next(), it.next()) else {
                return err(pos, format!("{rel} on cardinalities takes two arguments"));
            };
            let (l, r) = (as_int(l)?, as_int(r)?);
            let atom = match rel {
                "=" => CalAtom::CardEq(l, r),
                "<=" => CalAtom::CardLe(l, r),
                "<" => CalAtom::CardLe(CardTerm::plus(l, CardTerm::Const(1)), r),
                _ => return err(pos, format!("{rel} does not apply to cardinalities")),
            };
            return Ok(Formula::Atom(atom));
        }
        if any(|p| matches!(p, CalSorted::Index(_))) {
            return match (rel, &parts[..]) {
                ("=", [CalSorted::Index(i), CalSorted::Index(j)]) => {
                    Ok(Formula::Atom(CalAtom::IndexEq(i.clone(), j.clone())))
                }
                _ => err(pos, format!("indices only support equality: {a}")),
            };
        }
        let Some(arity) = c.relation_arity(rel) else { return err(pos, format!("unknown relation {rel}")) };
        if parts.len() != arity {
            return err(pos, format!("{rel} takes {arity} arguments"));
        }
        if any(|p| matches!(p, CalSorted::Array(_))) {
            let terms = parts.into_iter().map(|p| lift(p, c, pos)).collect::<Result<_, _>>()?;
            Ok(Formula::Atom(CalAtom::Array(PointAtom::new(rel, terms))))
        } else {
            let terms = parts.into_iter().map(|p| as_value(p, c, pos)).collect::<Result<_, _>>()?;
            Ok(Formula::Atom(CalAtom::Value(rel.to_string(), terms)))
        }
    })
}

fn monomial(env: &Env, x: &Sexp) -> Result<Monomial, ParseError> {
    let var = |s: &Sexp| -> Result<String, ParseError> {
        match s {
            Sexp::Sym(v, _) if env.sorts.get(v) == Some(&Sort::Nat) => Ok(v.clone()),
            _ => err(s.pos(), format!("{s} is not a Nat variable")),
        }
    };
    match list_head(x) {
        Some(("*", args, pos)) => {
            if args.is_empty() {
                return err(pos, "empty product");
            }
            let vars = args.iter().map(var).collect::<Result<Vec<_>, _>>()?;
            Ok(Monomial::of(&vars))
        }
        _ => Ok(Monomial::of(&[var(x)?])),
    }
}

fn skolem_formula(env: &Env, x: &Sexp) -> Result<SkolemFormula, ParseError> {
    formula(x, &mut |a| {
        let Some((rel, args, pos)) = list_head(a) else { return err(a.pos(), "expected an atom") };
        let kind = match rel {
            "=" => SkolemKind::Eq,
            "|" => SkolemKind::Divides,
            _ => return err(pos, format!("unknown relation {rel}; Skolem arithmetic has = and |")),
        };
        let [l, r] = args else { return err(pos, format!("{rel} takes two arguments")) };
        Ok(Formula::Atom(SkolemAtom { left: monomial(env, l)?, right: monomial(env, r)?, kind }))
    })
}

fn allowed_sorts(logic: Logic) -> &'static [Sort] {
    match logic {
        Logic::Power => &[Sort::Elem],
        Logic::Qfbapa => &[Sort::Set, Sort::Int],
        Logic::Qfbapai => &[Sort::Elem, Sort::Set, Sort::Int],
        Logic::Cal => &[Sort::Elem, Sort::Index],
        Logic::Skolem => &[Sort::Nat],
    }
}

/// Checks sorts and declarations and builds the typed problem.
pub fn elaborate(script: &Script) -> Result<Problem, ParseError> {
    let logic = script.logic;
    let mut env = Env {
        logic,
        component: None,
        index_card: None,
        sorts: BTreeMap::new(),
        order: Vec::new(),
        arrays: Vec::new(),
        defined: Vec::new(),
        asserts: Vec::new(),
    };
    let needs_structure = matches!(logic, Logic::Power | Logic::Qfbapai | Logic::Cal);
    let mut asserted: Vec<Sexp> = Vec::new();
    for (cmd, &pos) in script.commands.iter().zip(&script.positions) {
        match cmd {
            Command::DeclareStructure(d) => {
                if !needs_structure {
                    return err(pos, format!("{logic} has no component structure"));
                }
                if env.component.is_some() || !env.sorts.is_empty() || !env.arrays.is_empty() {
                    return err(pos, "declare-structure must come first and only once");
                }
                env.component = Some(build_structure(d, pos)?);
            }
            Command::DeclareIndexCard(c) => {
                if env.index_card.is_some() {
                    return err(pos, "index cardinality declared twice");
                }
                if logic == Logic::Skolem {
                    return err(pos, "SKOLEM has a fixed index set");
                }
                if matches!(logic, Logic::Qfbapa | Logic::Qfbapai | Logic::Cal) && *c == IndexCard::Unbounded {
                    return err(pos, format!("{logic} needs a finite index set"));
                }
                // A QFBAPA universe may be empty; an index set may not.
                if *c == IndexCard::Finite(0) && logic != Logic::Qfbapa {
                    return err(pos, "the index set is non-empty");
                }
                env.index_card = Some(*c);
            }
            Command::DeclareConst(n, s) => {
                if !allowed_sorts(logic).contains(s) {
                    return err(pos, format!("sort {s} is not available in {logic}"));
                }
                if needs_structure {
                    env.component(pos)?;
                }
                env.declare(n, Some(*s), pos)?;
            }
            Command::DeclareArray(n) => {
                if !matches!(logic, Logic::Qfbapai | Logic::Cal) {
                    return err(pos, format!("{logic} has no arrays"));
                }
                env.component(pos)?;
                env.declare(n, None, pos)?;
            }
            Command::DefineSet(n, params, body) => {
                if logic != Logic::Qfbapai {
                    return err(pos, "define-set is only available in QFBAPAI");
                }
                for p in params {
                    if !env.is_array(p) {
                        return err(body.pos(), format!("lambda parameter {p} is not a declared array"));
                    }
                }
                let c = env.component(pos)?.clone();
                let consts: BTreeSet<String> = env.vars_of(Sort::Elem).into_iter().collect();
                let bound: BTreeSet<&String> = params.iter().collect();
                let phi = component_formula(&c, &|v| bound.contains(&v.to_string()) || consts.contains(v), body)?;
                if env.sorts.contains_key(n) || env.defined.iter().any(|(d, _)| d == n) || env.is_array(n) {
                    return err(pos, format!("{n} is declared twice"));
                }
                env.defined.push((n.clone(), phi));
            }
            Command::Assert(body) => asserted.push(body.clone()),
            Command::CheckSat => {}
        }
    }
    env.asserts = asserted;
    let first = script.positions.first().copied().unwrap_or(Pos { line: 1, col: 1 });
    if needs_structure && env.component.is_none() {
        return err(first, format!("{logic} needs (declare-structure ...)"));
    }
    if needs_structure && env.index_card.is_none() {
        return err(first, format!("{logic} needs (declare-index-card ...)"));
    }
    let problem = match env.logic {
        Logic::Power => {
            let c = env.component.clone().unwrap();
            let vars: BTreeSet<String> = env.vars_of(Sort::Elem).into_iter().collect();
            let parts =
                env.asserts.iter().map(|a| component_formula(&c, &|v| vars.contains(v), a)).collect::<Result<_, _>>()?;
            Problem::Power {
                component: c,
                index_card: env.index_card.unwrap(),
                vars: env.vars_of(Sort::Elem),
                formula: conj_single(Formula::And(parts)),
            }
        }
        Logic::Qfbapa => {
            let parts = env.asserts.iter().map(|a| bapa_formula(&env, a)).collect::<Result<_, _>>()?;
            Problem::Qfbapa {
                maxc: env.index_card.and_then(|c| c.as_finite()).map_or(Maxc::Free, Maxc::Fixed),
                sets: env.vars_of(Sort::Set),
                ints: env.vars_of(Sort::Int),
                formula: conj_single(Formula::And(parts)),
            }
        }
        Logic::Qfbapai => {
            let parts = env.asserts.iter().map(|a| bapa_formula(&env, a)).collect::<Result<_, _>>()?;
            Problem::Qfbapai {
                component: env.component.clone().unwrap(),
                index_card: env.index_card.unwrap(),
                arrays: env.arrays.clone(),
                constants: env.vars_of(Sort::Elem),
                free_sets: env.vars_of(Sort::Set),
                ints: env.vars_of(Sort::Int),
                defined: env.defined.clone(),
                skeleton: conj_single(Formula::And(parts)),
            }
        }
        Logic::Cal => {
            let c = env.component.clone().unwrap();
            let parts = env.asserts.iter().map(|a| cal_formula(&env, &c, a)).collect::<Result<_, _>>()?;
            Problem::Cal {
                component: c,
                index_card: env.index_card.unwrap(),
                arrays: env.arrays.clone(),
                indices: env.vars_of(Sort::Index),
                values: env.vars_of(Sort::Elem),
                formula: conj_single(Formula::And(parts)),
            }
        }
        Logic::Skolem => {
            let parts = env.asserts.iter().map(|a| skolem_formula(&env, a)).collect::<Result<_, _>>()?;
            Problem::Skolem { vars: env.vars_of(Sort::Nat), formula: conj_single(Formula::And(parts)) }
        }
    };
    Ok(problem)
}

// A single assertion stays as written.
fn conj_single<A>(f: Formula<A>) -> Formula<A> {
    match f {
        Formula::And(mut cs) if cs.len() == 1 => cs.pop().unwrap(),
        other => other,
    }
}

/// Parses a component formula whose variables are exactly `vars`.
pub fn parse_component_formula(c: &Component, vars: &BTreeSet<String>, x: &Sexp) -> Result<QFFormula, ParseError> {
    component_formula(c, &|v| vars.contains(v), x)
}

pub fn parse_problem(text: &str) -> Result<Problem, ParseError> {
    elaborate(&parse(text)?)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn reads_nested_lists_with_positions() {
        let xs = read("(a (b c)) ; comment\n d").unwrap();
        assert_eq!(xs.len(), 2);
        assert_eq!(xs[1].pos(), Pos { line: 2, col: 2 });
        let e = read("(a (b c)").unwrap_err();
        assert_eq!((e.line, e.col), (1, 1));
        let e = read("a)").unwrap_err();
        assert_eq!((e.line, e.col), (1, 2));
    }

    #[test]
    fn qfbapa_script() {
        let p = parse_problem(
            "(set-logic QFBAPA)(declare-const A Set)(declare-const B Set)(assert (= (card A) (card B)))(check-sat)",
        )
        .unwrap();
        let Problem::Qfbapa { maxc: Maxc::Free, formula, .. } = p else { panic!() };
        assert_eq!(formula.to_string(), "(= (card A) (card B))");
    }

    #[test]
    fn unknown_logic_lists_valid_ones() {
        let e = parse("(set-logic FOO)").unwrap_err();
        assert!(e.message.contains("POWER") && e.message.contains("SKOLEM"), "{e}");
        assert_eq!((e.line, e.col), (1, 12));
    }

    #[test]
    fn reserved_characters_rejected() {
        for name in ["x#1", "card!0"] {
            let text = format!("(set-logic SKOLEM)(declare-const {name} Nat)");
            assert!(parse(&text).unwrap_err().message.contains("reserved"));
        }
    }

    #[test]
    fn sort_errors() {
        let base = "(set-logic CAL)(declare-structure (carrier 2) (const z 0))(declare-index-card 2)\
                    (declare-array a)(declare-const i Index)";
        assert!(parse_problem(&format!("{base}(assert (= (select a i) z))")).is_ok());
        assert!(parse_problem(&format!("{base}(assert (= (select i a) z))")).is_err());
        assert!(parse_problem(&format!("{base}(assert (= i z))")).is_err());
        assert!(parse_problem(&format!("{base}(assert (= (card (= a z)) 1))")).is_ok());
    }

    #[test]
    fn problems_print_and_reparse() {
        let texts = [
            "(set-logic POWER)\n(declare-structure (carrier 2) (const z 0) (fun f 1 (0 1) (1 0)) (rel P 1 (1)))\n\
             (declare-index-card inf)\n(declare-const x Elem)\n(assert (and (P (f x)) (not (= x z))))\n(check-sat)\n",
            "(set-logic QFBAPAI)\n(declare-structure int)\n(declare-index-card 3)\n(declare-array x)\n\
             (declare-const c Elem)\n(define-set S (lambda (x) (<= x c)))\n(assert (= (card S) 2))\n(check-sat)\n",
            "(set-logic SKOLEM)\n(declare-const x Nat)\n(declare-const y Nat)\n(assert (| (* x x) y))\n(check-sat)\n",
        ];
        for t in texts {
            let p = parse_problem(t).unwrap();
            assert_eq!(parse_problem(&p.to_text()).unwrap(), p);
            let s = parse(t).unwrap();
            assert_eq!(parse(&s.to_string()).unwrap(), s);
        }
    }
}
