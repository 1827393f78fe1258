//! Exact linear programming for non-strict systems. `max d.x` subject to
//! `A x <= b` with free `x` is solved through its dual `min b.y` subject to
//! `A^T y = d, y >= 0`, whose tableau has one row per variable.

use std::collections::BTreeMap;

use num_traits::{Signed, Zero};

use super::expr::{Constraint, LinExpr, Rat, Rel, Var};

#[derive(Clone, Debug, PartialEq, Eq)]
pub(crate) enum Optimum {
    /// The system has no point.
    Infeasible,
    /// Unbounded, or possibly infeasible: the dual has no point.
    Unbounded,
    Max(Rat),
}

struct Tableau {
    a: Vec<Vec<Rat>>,
    rhs: Vec<Rat>,
    basis: Vec<usize>,
}

impl Tableau {
    fn pivot(&mut self, r: usize, c: usize) {
        let p = self.a[r][c].clone();
        for x in self.a[r].iter_mut() {
            *x /= &p;
        }
        self.rhs[r] /= &p;
        for i in 0..self.a.len() {
            if i == r || self.a[i][c].is_zero() {
                continue;
            }
            let f = self.a[i][c].clone();
            for j in 0..self.a[i].len() {
                if !self.a[r][j].is_zero() {
                    let d = &f * &self.a[r][j];
                    self.a[i][j] -= d;
                }
            }
            let d = &f * &self.rhs[r];
            self.rhs[i] -= d;
        }
        self.basis[r] = c;
    }

    /// Minimizes `cost` with Bland's rule, letting only the first `enter`
    /// columns into the basis. False when unbounded.
    fn minimize(&mut self, cost: &[Rat], enter: usize) -> bool {
        loop {
            let entering = (0..enter).find(|&j| {
                if self.basis.contains(&j) {
                    return false;
                }
                let mut rc = cost[j].clone();
                for (i, &b) in self.basis.iter().enumerate() {
                    if !self.a[i][j].is_zero() {
                        rc -= &cost[b] * &self.a[i][j];
                    }
                }
                rc.is_negative()
            });
            let Some(c) = entering else {
                return true;
            };
            let mut leave: Option<(usize, Rat)> = None;
            for i in 0..self.a.len() {
                if !self.a[i][c].is_positive() {
                    continue;
                }
                let ratio = &self.rhs[i] / &self.a[i][c];
                let better = match &leave {
                    None => true,
                    Some((l, best)) => {
                        ratio < *best || (ratio == *best && self.basis[i] < self.basis[*l])
                    }
                };
                if better {
                    leave = Some((i, ratio));
                }
            }
            let Some((r, _)) = leave else {
                return false;
            };
            self.pivot(r, c);
        }
    }

    fn value(&self, cost: &[Rat]) -> Rat {
        self.basis
            .iter()
            .zip(&self.rhs)
            .map(|(&b, v)| &cost[b] * v)
            .sum()
    }
}

/// Rows `a.x <= b` of a non-strict constraint.
fn rows(c: &Constraint) -> Vec<(BTreeMap<Var, Rat>, Rat)> {
    debug_assert!(c.rel != Rel::Lt);
    let a = c.expr.terms().clone();
    let b = -c.expr.constant_term().clone();
    if c.rel == Rel::Eq {
        let neg = a.iter().map(|(v, k)| (v.clone(), -k.clone())).collect();
        vec![(a, b.clone()), (neg, -b)]
    } else {
        vec![(a, b)]
    }
}

pub(crate) fn maximize(objective: &BTreeMap<Var, Rat>, system: &[Constraint]) -> Optimum {
    let rows: Vec<_> = system.iter().flat_map(rows).collect();
    let mut vars: Vec<&Var> = objective
        .keys()
        .chain(rows.iter().flat_map(|(a, _)| a.keys()))
        .collect();
    vars.sort();
    vars.dedup();
    let (n, m) = (vars.len(), rows.len());
    let zero = Rat::zero();
    let mut t = Tableau {
        a: Vec::with_capacity(n),
        rhs: Vec::with_capacity(n),
        basis: (m..m + n).collect(),
    };
    for (i, v) in vars.iter().enumerate() {
        let mut row: Vec<Rat> = rows
            .iter()
            .map(|(a, _)| a.get(*v).cloned().unwrap_or_default())
            .collect();
        let mut d = objective.get(*v).cloned().unwrap_or_default();
        if d.is_negative() {
            row.iter_mut().for_each(|x| *x = -x.clone());
            d = -d;
        }
        row.extend((0..n).map(|j| {
            if j == i {
                Rat::from_integer(1.into())
            } else {
                zero.clone()
            }
        }));
        t.a.push(row);
        t.rhs.push(d);
    }
    let phase1: Vec<Rat> = (0..m + n)
        .map(|j| {
            if j < m {
                zero.clone()
            } else {
                Rat::from_integer(1.into())
            }
        })
        .collect();
    t.minimize(&phase1, m + n);
    if t.value(&phase1).is_positive() {
        return Optimum::Unbounded;
    }
    for r in 0..n {
        if t.basis[r] >= m {
            if let Some(c) = (0..m).find(|&j| !t.a[r][j].is_zero()) {
                t.pivot(r, c);
            }
        }
    }
    let cost: Vec<Rat> = rows
        .iter()
        .map(|(_, b)| b.clone())
        .chain((0..n).map(|_| zero.clone()))
        .collect();
    if !t.minimize(&cost, m) {
        return Optimum::Infeasible;
    }
    Optimum::Max(t.value(&cost))
}

/// Whether the non-strict `system` entails the non-strict `c` over the
/// rationals.
pub(crate) fn entails(system: &[Constraint], c: &Constraint) -> bool {
    rows(c)
        .into_iter()
        .all(|(a, b)| match maximize(&a, system) {
            Optimum::Infeasible => true,
            Optimum::Unbounded => !feasible(system),
            Optimum::Max(v) => v <= b,
        })
}

/// Rational feasibility: the zero objective has a feasible dual, so only an
/// empty system makes the dual unbounded.
pub(crate) fn feasible(system: &[Constraint]) -> bool {
    maximize(&BTreeMap::new(), system) != Optimum::Infeasible
}

/// Substitutes every equality away and drops atoms left without variables;
/// `None` when one of those is false. Preserves rational satisfiability.
fn without_equalities(system: &[Constraint]) -> Option<Vec<Constraint>> {
    let mut rest: Vec<Constraint> = system.to_vec();
    while let Some(i) = rest
        .iter()
        .position(|c| c.rel == Rel::Eq && !c.expr.is_constant())
    {
        let eq = rest.swap_remove(i);
        let (v, a) = eq
            .expr
            .terms()
            .iter()
            .next()
            .map(|(v, a)| (v.clone(), a.clone()))
            .expect("has a variable");
        // v = -(eq - a v) / a
        let mut by = eq.expr.clone();
        by.add_term(v.clone(), -a.clone());
        let by = by.scale(&(-a.recip()));
        for c in rest.iter_mut() {
            if c.mentions(&v) {
                *c = c.substitute(&v, &by);
            }
        }
    }
    let mut out = Vec::with_capacity(rest.len());
    for c in rest {
        if c.expr.is_constant() {
            let k = c.expr.constant_term();
            let holds = match c.rel {
                Rel::Eq => k.is_zero(),
                Rel::Le => !k.is_positive(),
                Rel::Lt => k.is_negative(),
            };
            if !holds {
                return None;
            }
        } else {
            out.push(c);
        }
    }
    Some(out)
}

/// Rational satisfiability of a system that may contain strict atoms: each
/// strict `e < 0` becomes `e + t <= 0`, and the system is satisfiable iff the
/// largest `t <= 1` is positive.
pub(crate) fn satisfiable(system: &[Constraint]) -> bool {
    let Some(system) = without_equalities(system) else {
        return false;
    };
    let system = system.as_slice();
    if !system.iter().any(|c| c.rel == Rel::Lt) {
        return feasible(system);
    }
    let t = Var::new("#slack");
    let slack = LinExpr::var(t.clone());
    let mut relaxed: Vec<Constraint> = system
        .iter()
        .map(|c| match c.rel {
            Rel::Lt => Constraint::new(c.expr.add(&slack), Rel::Le),
            _ => c.clone(),
        })
        .collect();
    relaxed.push(Constraint::new(
        slack.sub(&LinExpr::constant(Rat::from_integer(1.into()))),
        Rel::Le,
    ));
    match maximize(
        &BTreeMap::from([(t, Rat::from_integer(1.into()))]),
        &relaxed,
    ) {
        Optimum::Max(v) => v.is_positive(),
        Optimum::Infeasible | Optimum::Unbounded => false,
    }
}

/// Drops atoms entailed by the others, one at a time. Only for non-strict
/// systems.
pub(crate) fn without_redundant(mut cs: Vec<Constraint>) -> Vec<Constraint> {
    let mut i = 0;
    while i < cs.len() {
        let c = cs.remove(i);
        if !entails(&cs, &c) {
            cs.insert(i, c);
            i += 1;
        }
    }
    cs
}
