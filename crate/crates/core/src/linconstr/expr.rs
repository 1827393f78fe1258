//! Linear expressions and atomic constraints over exact rationals.

use std::collections::{BTreeMap, BTreeSet};
use std::fmt;

use num_bigint::BigInt;
use num_integer::Integer;
use num_rational::BigRational;
use num_traits::{One, Signed, Zero};

pub type Rat = BigRational;

pub fn rat(n: i64) -> Rat {
    Rat::from_integer(BigInt::from(n))
}

/// A variable name. Program variables start with an uppercase letter; names
/// starting with `#` are reserved for engine-internal scratch variables.
#[derive(Clone, Debug, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct Var(pub String);

impl Var {
    pub fn new(name: impl Into<String>) -> Self {
        Var(name.into())
    }

    pub fn as_str(&self) -> &str {
        &self.0
    }
}

impl fmt::Display for Var {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.0)
    }
}

impl From<&str> for Var {
    fn from(s: &str) -> Self {
        Var(s.to_string())
    }
}

/// `sum(coeff * var) + constant`. Zero coefficients are never stored.
#[derive(Clone, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct LinExpr {
    terms: BTreeMap<Var, Rat>,
    constant: Rat,
}

impl Default for LinExpr {
    fn default() -> Self {
        LinExpr {
            terms: BTreeMap::new(),
            constant: Rat::zero(),
        }
    }
}

impl LinExpr {
    pub fn zero() -> Self {
        Self::default()
    }

    pub fn constant(c: Rat) -> Self {
        LinExpr {
            terms: BTreeMap::new(),
            constant: c,
        }
    }

    pub fn var(v: Var) -> Self {
        Self::term(v, Rat::one())
    }

    pub fn term(v: Var, c: Rat) -> Self {
        let mut e = Self::zero();
        e.add_term(v, c);
        e
    }

    pub fn terms(&self) -> &BTreeMap<Var, Rat> {
        &self.terms
    }

    pub fn constant_term(&self) -> &Rat {
        &self.constant
    }

    pub fn coeff(&self, v: &Var) -> Rat {
        self.terms.get(v).cloned().unwrap_or_else(Rat::zero)
    }

    pub fn is_constant(&self) -> bool {
        self.terms.is_empty()
    }

    pub fn vars(&self) -> impl Iterator<Item = &Var> {
        self.terms.keys()
    }

    pub fn add_term(&mut self, v: Var, c: Rat) {
        if c.is_zero() {
            return;
        }
        let entry = self.terms.entry(v).or_insert_with(Rat::zero);
        *entry += c;
        if entry.is_zero() {
            self.terms.retain(|_, c| !c.is_zero());
        }
    }

    pub fn add_constant(&mut self, c: &Rat) {
        self.constant += c;
    }

    pub fn add(&self, other: &LinExpr) -> LinExpr {
        let mut out = self.clone();
        for (v, c) in &other.terms {
            out.add_term(v.clone(), c.clone());
        }
        out.constant += &other.constant;
        out
    }

    pub fn sub(&self, other: &LinExpr) -> LinExpr {
        self.add(&other.scale(&-Rat::one()))
    }

    pub fn scale(&self, k: &Rat) -> LinExpr {
        if k.is_zero() {
            return LinExpr::zero();
        }
        LinExpr {
            terms: self.terms.iter().map(|(v, c)| (v.clone(), c * k)).collect(),
            constant: &self.constant * k,
        }
    }

    pub fn neg(&self) -> LinExpr {
        self.scale(&-Rat::one())
    }

    /// Replaces `v` by `by`.
    pub fn substitute(&self, v: &Var, by: &LinExpr) -> LinExpr {
        match self.terms.get(v) {
            None => self.clone(),
            Some(c) => {
                let mut rest = self.clone();
                rest.terms.remove(v);
                rest.add(&by.scale(c))
            }
        }
    }

    /// Simultaneous renaming; variables missing from `map` are kept.
    pub fn rename(&self, map: &BTreeMap<Var, Var>) -> LinExpr {
        let mut out = LinExpr::constant(self.constant.clone());
        for (v, c) in &self.terms {
            let nv = map.get(v).cloned().unwrap_or_else(|| v.clone());
            out.add_term(nv, c.clone());
        }
        out
    }

    pub fn eval(&self, point: &BTreeMap<Var, Rat>) -> Option<Rat> {
        let mut acc = self.constant.clone();
        for (v, c) in &self.terms {
            acc += c * point.get(v)?;
        }
        Some(acc)
    }

    /// Multiplies by the positive lcm of all denominators, yielding integer
    /// coefficients and constant.
    fn clear_denominators(&self) -> LinExpr {
        let mut l = BigInt::one();
        for c in self.terms.values().chain(std::iter::once(&self.constant)) {
            l = l.lcm(c.denom());
        }
        self.scale(&Rat::from_integer(l))
    }

    fn gcd_of_coeffs(&self) -> BigInt {
        self.terms
            .values()
            .fold(BigInt::zero(), |g, c| g.gcd(c.numer()))
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum Rel {
    /// `e = 0`
    Eq,
    /// `e <= 0`
    Le,
    /// `e < 0`
    Lt,
}

/// An atomic constraint `expr rel 0`.
#[derive(Clone, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct Constraint {
    pub rel: Rel,
    pub expr: LinExpr,
}

pub enum Triviality {
    True,
    False,
    NonTrivial,
}

impl Constraint {
    pub fn new(expr: LinExpr, rel: Rel) -> Self {
        Constraint { rel, expr }.normalized()
    }

    pub fn eq(lhs: &LinExpr, rhs: &LinExpr) -> Self {
        Self::new(lhs.sub(rhs), Rel::Eq)
    }

    pub fn le(lhs: &LinExpr, rhs: &LinExpr) -> Self {
        Self::new(lhs.sub(rhs), Rel::Le)
    }

    pub fn lt(lhs: &LinExpr, rhs: &LinExpr) -> Self {
        Self::new(lhs.sub(rhs), Rel::Lt)
    }

    pub fn ge(lhs: &LinExpr, rhs: &LinExpr) -> Self {
        Self::le(rhs, lhs)
    }

    pub fn gt(lhs: &LinExpr, rhs: &LinExpr) -> Self {
        Self::lt(rhs, lhs)
    }

    pub fn vars(&self) -> impl Iterator<Item = &Var> {
        self.expr.vars()
    }

    pub fn mentions(&self, v: &Var) -> bool {
        self.expr.terms.contains_key(v)
    }

    /// Integer coefficients, gcd-reduced over coefficients and constant;
    /// equalities additionally get a positive leading coefficient.
    pub fn normalized(mut self) -> Self {
        if self.expr.is_constant() {
            let c = self.expr.constant.signum();
            self.expr.constant = c;
            return self;
        }
        let mut e = self.expr.clear_denominators();
        let g = e.gcd_of_coeffs().gcd(e.constant.numer());
        if !g.is_zero() && !g.is_one() {
            e = e.scale(&Rat::new(BigInt::one(), g));
        }
        if self.rel == Rel::Eq {
            let lead_negative = e.terms.values().next().is_some_and(|c| c.is_negative());
            if lead_negative {
                e = e.neg();
            }
        }
        self.expr = e;
        self
    }

    /// Integer tightening, sound when every variable ranges over the
    /// integers: `a.x + c < 0` becomes `a.x + c + 1 <= 0`, then the
    /// coefficient gcd `g` gives `a/g.x + ceil(c/g) <= 0`. An equality whose
    /// coefficient gcd does not divide the constant becomes `1 <= 0`.
    pub fn tightened(&self) -> Constraint {
        if self.expr.is_constant() {
            return self.clone();
        }
        let mut e = self.expr.clear_denominators();
        let mut rel = self.rel;
        if rel == Rel::Lt {
            e.constant += Rat::one();
            rel = Rel::Le;
        }
        let g = e.gcd_of_coeffs();
        let g_rat = Rat::from_integer(g.clone());
        match rel {
            Rel::Eq => {
                if !e.constant.numer().is_multiple_of(&g) {
                    return Constraint::contradiction();
                }
            }
            _ => {
                let c = (&e.constant / &g_rat).ceil();
                e = LinExpr {
                    terms: e
                        .terms
                        .iter()
                        .map(|(v, k)| (v.clone(), k / &g_rat))
                        .collect(),
                    constant: c,
                };
            }
        }
        Constraint::new(e, rel)
    }

    pub fn contradiction() -> Constraint {
        Constraint {
            rel: Rel::Le,
            expr: LinExpr::constant(Rat::one()),
        }
    }

    pub fn triviality(&self) -> Triviality {
        if !self.expr.is_constant() {
            return Triviality::NonTrivial;
        }
        let c = &self.expr.constant;
        let holds = match self.rel {
            Rel::Eq => c.is_zero(),
            Rel::Le => !c.is_positive(),
            Rel::Lt => c.is_negative(),
        };
        if holds {
            Triviality::True
        } else {
            Triviality::False
        }
    }

    /// Rational negation (one constraint per disjunct; equalities split).
    pub fn negations(&self) -> Vec<Constraint> {
        match self.rel {
            Rel::Le => vec![Constraint::new(self.expr.neg(), Rel::Lt)],
            Rel::Lt => vec![Constraint::new(self.expr.neg(), Rel::Le)],
            Rel::Eq => vec![
                Constraint::new(self.expr.clone(), Rel::Lt),
                Constraint::new(self.expr.neg(), Rel::Lt),
            ],
        }
    }

    /// Negation over integer points: strict results are tightened.
    pub fn integral_negations(&self) -> Vec<Constraint> {
        self.negations().iter().map(Constraint::tightened).collect()
    }

    /// `e = 0` as `e <= 0` and `-e <= 0`; inequalities unchanged.
    pub fn as_inequalities(&self) -> Vec<Constraint> {
        match self.rel {
            Rel::Eq => vec![
                Constraint::new(self.expr.clone(), Rel::Le),
                Constraint::new(self.expr.neg(), Rel::Le),
            ],
            _ => vec![self.clone()],
        }
    }

    pub fn substitute(&self, v: &Var, by: &LinExpr) -> Constraint {
        Constraint::new(self.expr.substitute(v, by), self.rel)
    }

    pub fn rename(&self, map: &BTreeMap<Var, Var>) -> Constraint {
        Constraint::new(self.expr.rename(map), self.rel)
    }

    pub fn holds_at(&self, point: &BTreeMap<Var, Rat>) -> Option<bool> {
        let v = self.expr.eval(point)?;
        Some(match self.rel {
            Rel::Eq => v.is_zero(),
            Rel::Le => !v.is_positive(),
            Rel::Lt => v.is_negative(),
        })
    }
}

pub fn vars_of<'a>(cs: impl IntoIterator<Item = &'a Constraint>) -> BTreeSet<Var> {
    cs.into_iter().flat_map(|c| c.vars().cloned()).collect()
}

fn write_num(f: &mut fmt::Formatter<'_>, n: &Rat, after_op: bool) -> fmt::Result {
    if after_op && n.is_negative() {
        write!(f, " ")?;
    }
    write!(f, "{}", n)
}

/// Writes `sum(coeff * var)` in the `A+ -2*B` style; empty sums print `0`.
fn write_terms(f: &mut fmt::Formatter<'_>, terms: &BTreeMap<Var, Rat>) -> fmt::Result {
    if terms.is_empty() {
        return write!(f, "0");
    }
    for (i, (v, c)) in terms.iter().enumerate() {
        if i > 0 {
            write!(f, "+")?;
            if c.is_negative() {
                write!(f, " ")?;
            }
        }
        if c.is_one() {
            write!(f, "{}", v)?;
        } else if *c == -Rat::one() {
            write!(f, "-{}", v)?;
        } else {
            write!(f, "{}*{}", c, v)?;
        }
    }
    Ok(())
}

/// Printed as `terms=c`, `terms>=c` or `terms>c`, matching the constrained
/// fact listings (`-A>= -1`, `A+ -B=0`).
impl fmt::Display for Constraint {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self.rel {
            Rel::Eq => {
                write_terms(f, &self.expr.terms)?;
                write!(f, "=")?;
                write_num(f, &-self.expr.constant.clone(), true)
            }
            Rel::Le | Rel::Lt => {
                let neg = self.expr.neg();
                write_terms(f, &neg.terms)?;
                write!(f, "{}", if self.rel == Rel::Le { ">=" } else { ">" })?;
                write_num(f, &self.expr.constant, true)
            }
        }
    }
}

impl fmt::Display for LinExpr {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write_terms(f, &self.terms)?;
        if !self.constant.is_zero() {
            write!(f, "+")?;
            write_num(f, &self.constant, true)?;
        }
        Ok(())
    }
}
