//! Constrained Horn clauses: syntax tree, parser and printer.

use std::collections::{BTreeMap, BTreeSet};
use std::fmt;

use crate::linconstr::{Constraint, Var};

mod parse;
mod print;

pub use parse::{parse_constraints, parse_program, ParseError};

/// Dimension annotation of an indexed predicate.
#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum DimIndex {
    /// `p(d)`: trees of dimension exactly `d`.
    Exactly(u32),
    /// `p[d]`: trees of dimension at most `d`.
    AtMost(u32),
}

impl DimIndex {
    pub fn level(self) -> u32 {
        match self {
            DimIndex::Exactly(d) | DimIndex::AtMost(d) => d,
        }
    }
}

/// A predicate symbol, possibly carrying a dimension index.
#[derive(Clone, Debug, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct Pred {
    pub name: String,
    pub index: Option<DimIndex>,
}

pub const FALSE: &str = "false";

impl Pred {
    pub fn plain(name: impl Into<String>) -> Self {
        Pred {
            name: name.into(),
            index: None,
        }
    }

    pub fn exactly(name: impl Into<String>, d: u32) -> Self {
        Pred {
            name: name.into(),
            index: Some(DimIndex::Exactly(d)),
        }
    }

    pub fn at_most(name: impl Into<String>, d: u32) -> Self {
        Pred {
            name: name.into(),
            index: Some(DimIndex::AtMost(d)),
        }
    }

    pub fn base(&self) -> Pred {
        Pred::plain(self.name.clone())
    }

    pub fn with_index(&self, index: DimIndex) -> Pred {
        Pred {
            name: self.name.clone(),
            index: Some(index),
        }
    }

    /// `false` or one of its indexed variants.
    pub fn is_false_variant(&self) -> bool {
        self.name == FALSE
    }
}

#[derive(Clone, Debug, PartialEq, Eq, Hash)]
pub struct Atom {
    pub pred: Pred,
    pub args: Vec<Var>,
}

impl Atom {
    pub fn new(pred: Pred, args: Vec<Var>) -> Self {
        Atom { pred, args }
    }
}

#[derive(Clone, Debug, PartialEq, Eq, Hash)]
pub enum Head {
    /// The reserved plain `false` of integrity constraints.
    False,
    Atom(Atom),
}

impl Head {
    pub fn atom(&self) -> Option<&Atom> {
        match self {
            Head::False => None,
            Head::Atom(a) => Some(a),
        }
    }

    /// `None` for the plain `false` head.
    pub fn pred(&self) -> Option<&Pred> {
        self.atom().map(|a| &a.pred)
    }
}

#[derive(Clone, Debug, PartialEq, Eq, Hash)]
pub struct Clause {
    pub id: usize,
    pub head: Head,
    pub constraints: Vec<Constraint>,
    pub body: Vec<Atom>,
}

impl Clause {
    pub fn is_linear(&self) -> bool {
        self.body.len() <= 1
    }

    pub fn vars(&self) -> BTreeSet<Var> {
        let mut vs: BTreeSet<Var> = crate::linconstr::vars_of(&self.constraints);
        if let Some(a) = self.head.atom() {
            vs.extend(a.args.iter().cloned());
        }
        for a in &self.body {
            vs.extend(a.args.iter().cloned());
        }
        vs
    }

    pub fn head_args(&self) -> &[Var] {
        self.head.atom().map(|a| a.args.as_slice()).unwrap_or(&[])
    }
}

#[derive(Debug, thiserror::Error, Clone, PartialEq, Eq)]
pub enum ProgramError {
    #[error("predicate {pred} used with arity {found}, previously {expected}")]
    ArityMismatch {
        pred: String,
        expected: usize,
        found: usize,
    },
}

/// An ordered set of clauses with consistent predicate arities.
#[derive(Clone, Debug, Default, PartialEq, Eq)]
pub struct Program {
    clauses: Vec<Clause>,
    signatures: BTreeMap<Pred, usize>,
}

impl Program {
    pub fn new(clauses: Vec<Clause>) -> Result<Self, ProgramError> {
        let mut p = Program::default();
        for c in clauses {
            p.push(c)?;
        }
        Ok(p)
    }

    /// Appends a clause, renumbering it to its position.
    pub fn push(&mut self, mut clause: Clause) -> Result<(), ProgramError> {
        let atoms = clause.head.atom().into_iter().chain(clause.body.iter());
        for a in atoms {
            match self.signatures.get(&a.pred) {
                Some(&n) if n != a.args.len() => {
                    return Err(ProgramError::ArityMismatch {
                        pred: a.pred.to_string(),
                        expected: n,
                        found: a.args.len(),
                    })
                }
                _ => {
                    self.signatures.insert(a.pred.clone(), a.args.len());
                }
            }
        }
        clause.id = self.clauses.len();
        self.clauses.push(clause);
        Ok(())
    }

    pub fn clauses(&self) -> &[Clause] {
        &self.clauses
    }

    pub fn signatures(&self) -> &BTreeMap<Pred, usize> {
        &self.signatures
    }

    pub fn arity(&self, pred: &Pred) -> Option<usize> {
        self.signatures.get(pred).copied()
    }

    /// Predicates of the program, including `false` when some clause has a
    /// `false` head.
    pub fn predicates(&self) -> BTreeSet<Pred> {
        let mut ps: BTreeSet<Pred> = self.signatures.keys().cloned().collect();
        if self.clauses.iter().any(|c| c.head == Head::False) {
            ps.insert(Pred::plain(FALSE));
        }
        ps
    }

    pub fn is_linear(&self) -> bool {
        self.clauses.iter().all(Clause::is_linear)
    }

    pub fn has_indexed_predicates(&self) -> bool {
        self.signatures.keys().any(|p| p.index.is_some())
    }

    pub fn clauses_for<'a>(&'a self, pred: &'a Pred) -> impl Iterator<Item = &'a Clause> + 'a {
        self.clauses.iter().filter(move |c| match &c.head {
            Head::False => pred.name == FALSE && pred.index.is_none(),
            Head::Atom(a) => &a.pred == pred,
        })
    }
}

impl fmt::Display for Program {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        for c in &self.clauses {
            writeln!(f, "{}", c)?;
        }
        Ok(())
    }
}

/// Canonical variable names `A`, `B`, ..., `Z`, `A1`, `B1`, ...
pub fn param_name(i: usize) -> Var {
    let letter = (b'A' + (i % 26) as u8) as char;
    match i / 26 {
        0 => Var::new(letter.to_string()),
        n => Var::new(format!("{}{}", letter, n)),
    }
}

pub fn params(n: usize) -> Vec<Var> {
    (0..n).map(param_name).collect()
}

/// First canonical name not in `used`; records it.
pub(crate) fn fresh_var(used: &mut BTreeSet<Var>) -> Var {
    let v = (0..)
        .map(param_name)
        .find(|v| !used.contains(v))
        .expect("unbounded names");
    used.insert(v.clone());
    v
}
